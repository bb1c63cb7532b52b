use std::fmt::Write as _;

use crate::control::exosystem::Exosystem;
use crate::control::sylvester::{solve_invertible, SylvesterSolution};
use crate::error::{Result, SafError};
use crate::linalg::{block2, block_diag, expm, rank, spectral_abscissa, spectral_radius, Mat};
use crate::plant::PlantParams;

/// How the internal-model input pair `(F, G)` is built. Both place the
/// eigenvalues of `F` uniformly on `[−2Nω_m, −ω_m]` (`−ω_m` when `N = 0`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FgChoice {
    /// `F = diag(λ)`, `G = 1`. Well conditioned `E` for any order set.
    #[default]
    Diagonal,
    /// Controllable canonical form, `G = e_n`.
    Companion,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisOptions {
    pub k_d: f64,
    pub k_q: f64,
    /// Overall gain `k`; `None` selects `2·k̄`.
    pub k: Option<f64>,
    pub fg: FgChoice,
    /// Required stability margin `δ` (s⁻¹).
    pub margin: f64,
    /// Largest `k` tried by the search.
    pub cap: f64,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        SynthesisOptions {
            k_d: 1.0,
            k_q: 1.0,
            k: None,
            fg: FgChoice::Diagonal,
            margin: 1.0,
            cap: 1e9,
        }
    }
}

/// Synthesised internal-model controller `ξ̇ = Φξ + Q x̃`, `ū = Γξ + K x̃`.
#[derive(Debug, Clone)]
pub struct GainSynthesis {
    pub exo: Exosystem,
    pub fg: FgChoice,
    pub f: Mat,
    pub g: Mat,
    /// `[d, q]` Sylvester solutions.
    pub sylvester: [SylvesterSolution; 2],
    pub k: f64,
    pub k_d: f64,
    pub k_q: f64,
    pub k_bar: f64,
    /// `(k, spectral abscissa)` for every gain the search evaluated.
    pub trace: Vec<(f64, f64)>,
    pub margin: f64,
    /// `Φ`, 2n × 2n.
    pub phi: Mat,
    /// `Γ`, 2 × 2n.
    pub gamma: Mat,
    /// `Q`, 2n × 2.
    pub q: Mat,
    pub r_xi: Vec<f64>,
    l: f64,
    r: f64,
    omega_m: f64,
    g_stack: Mat,
    f_stack: Mat,
    e_inv: Mat,
}

fn spread_eigenvalues(n: usize, omega_m: f64) -> Vec<f64> {
    if n == 1 {
        return vec![-omega_m];
    }
    let big_n = ((n - 1) / 2) as f64;
    let (lo, hi) = (omega_m, 2.0 * big_n * omega_m);
    (0..n)
        .map(|i| -(lo + (hi - lo) * i as f64 / (n - 1) as f64))
        .collect()
}

/// `(F, G)` for the given choice on an `n`-dimensional exosystem copy.
pub fn internal_model_pair(choice: FgChoice, n: usize, omega_m: f64) -> (Mat, Mat) {
    let lambdas = spread_eigenvalues(n, omega_m);
    match choice {
        FgChoice::Diagonal => (
            Mat::from_diagonal(&nalgebra::DVector::from_vec(lambdas)),
            Mat::from_element(n, 1, 1.0),
        ),
        FgChoice::Companion => {
            // Monic polynomial Π(s − λ_i), coefficients c[0] + … + c[n] sⁿ.
            let mut c = vec![1.0];
            for &l in &lambdas {
                let mut next = vec![0.0; c.len() + 1];
                for (i, &ci) in c.iter().enumerate() {
                    next[i + 1] += ci;
                    next[i] -= l * ci;
                }
                c = next;
            }
            let mut f = Mat::zeros(n, n);
            for i in 0..n - 1 {
                f[(i, i + 1)] = 1.0;
            }
            for j in 0..n {
                f[(n - 1, j)] = -c[j];
            }
            let mut g = Mat::zeros(n, 1);
            g[(n - 1, 0)] = 1.0;
            (f, g)
        }
    }
}

fn controllable(f: &Mat, g: &Mat) -> bool {
    let n = f.nrows();
    let mut ctrb = Mat::zeros(n, n);
    let mut col = g.clone();
    for j in 0..n {
        ctrb.column_mut(j).copy_from(&col.column(0));
        col = f * &col;
    }
    // Two-sided (Ruiz) equilibration preserves rank and removes the power
    // scaling of the Krylov columns.
    for _ in 0..30 {
        for i in 0..n {
            let m = ctrb.row(i).amax();
            if m > 0.0 {
                ctrb.row_mut(i).scale_mut(1.0 / m.sqrt());
            }
        }
        for j in 0..n {
            let m = ctrb.column(j).amax();
            if m > 0.0 {
                ctrb.column_mut(j).scale_mut(1.0 / m.sqrt());
            }
        }
    }
    rank(&ctrb, 1e-10) == n
}

fn plant_m(l: f64, r: f64, w: f64) -> Mat {
    Mat::from_row_slice(2, 2, &[-r / l, w, -w, -r / l])
}

/// Synthesises `K`, `Q` for the exosystem on the given plant.
pub fn synthesize_gains(exo: &Exosystem, params: &PlantParams, opts: &SynthesisOptions) -> Result<GainSynthesis> {
    for (name, v) in [("k_d", opts.k_d), ("k_q", opts.k_q)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(SafError::param(if name == "k_d" { "k_d" } else { "k_q" }, format!("must be positive, got {v}")));
        }
    }
    if let Some(k) = opts.k {
        if !(k > 0.0 && k.is_finite()) {
            return Err(SafError::param("k", format!("must be positive, got {k}")));
        }
    }
    let n = exo.dim();
    let (f, g) = internal_model_pair(opts.fg, n, params.omega_m());
    if spectral_abscissa(&f) >= 0.0 {
        return Err(SafError::Synthesis("F is not Hurwitz".into()));
    }
    if !controllable(&f, &g) {
        return Err(SafError::Synthesis("(F, G) is not controllable".into()));
    }
    let sol = solve_invertible(&f, &g, exo.omega(), exo.gamma_row())?;
    let e_inv1 = sol
        .e
        .clone()
        .try_inverse()
        .ok_or_else(|| SafError::Synthesis("E is not invertible".into()))?;
    let e_inv = block_diag(&[&e_inv1, &e_inv1]);
    let g_stack = block_diag(&[&g, &g]);
    let f_stack = block_diag(&[&f, &f]);
    let gamma = exo.gamma();
    let mut r_xi = vec![0.0; 2 * n];
    r_xi[0] = -params.r() / gamma[(0, 0)];
    r_xi[n] = -params.omega_m() * params.l() / gamma[(1, n)];

    let mut gs = GainSynthesis {
        exo: exo.clone(),
        fg: opts.fg,
        f,
        g,
        sylvester: [sol.clone(), sol],
        k: 0.0,
        k_d: opts.k_d,
        k_q: opts.k_q,
        k_bar: 0.0,
        trace: Vec::new(),
        margin: opts.margin,
        phi: exo.phi(),
        gamma,
        q: Mat::zeros(2 * n, 2),
        r_xi,
        l: params.l(),
        r: params.r(),
        omega_m: params.omega_m(),
        g_stack,
        f_stack,
        e_inv,
    };
    gs.search_k_bar(opts.cap)?;
    let k = opts.k.unwrap_or(2.0 * gs.k_bar);
    gs.set_k(k);
    Ok(gs)
}

impl GainSynthesis {
    fn k_diag(&self, k: f64) -> Mat {
        Mat::from_row_slice(2, 2, &[k * self.k_d, 0.0, 0.0, k * self.k_q])
    }

    fn q_at(&self, k: f64) -> Mat {
        &self.e_inv * &self.g_stack * self.k_diag(k)
    }

    /// Re-targets the overall gain, keeping `F`, `G` and `E`.
    pub fn set_k(&mut self, k: f64) {
        self.k = k;
        self.q = self.q_at(k);
    }

    /// Per-axis `K` diagonal `(k·k_d, k·k_q)`.
    pub fn k_gains(&self) -> [f64; 2] {
        [self.k * self.k_d, self.k * self.k_q]
    }

    pub fn dim(&self) -> usize {
        self.phi.nrows()
    }

    /// Minimum-norm `ξ` at rest (`Φξ = 0`) that emits the constant `ū` with
    /// `x̃ = 0`.
    pub fn holding_state(&self, u_bar: [f64; 2]) -> Result<Vec<f64>> {
        let n = self.dim();
        let mut a = Mat::zeros(n + 2, n);
        a.view_mut((0, 0), (n, n)).copy_from(&self.phi);
        a.view_mut((n, 0), (2, n)).copy_from(&self.gamma);
        let mut b = Mat::zeros(n + 2, 1);
        b[(n, 0)] = u_bar[0];
        b[(n + 1, 0)] = u_bar[1];
        let xi = a
            .clone()
            .svd(true, true)
            .solve(&b, 1e-12)
            .map_err(|e| SafError::Synthesis(format!("holding state: {e}")))?;
        let res = (&a * &xi - &b).norm();
        if res > 1e-9 * (1.0 + b.norm()) {
            return Err(SafError::Synthesis(format!(
                "no resting internal-model state emits ({:e}, {:e}); residual {res:e}",
                u_bar[0], u_bar[1]
            )));
        }
        Ok(xi.iter().copied().collect())
    }

    /// Closed loop of `(x̃, ξ̃)` with the slow voltage dynamics frozen.
    pub fn boundary_layer_matrix(&self, k: f64) -> Mat {
        let m = plant_m(self.l, self.r, self.omega_m);
        let kd = self.k_diag(k);
        block2(&(m - kd / self.l), &(-&self.gamma / self.l), &self.q_at(k), &self.phi)
    }

    /// The same loop in `(x̃, χ̃ = E ξ̃ + L G x̃)` coordinates.
    pub fn transformed_matrix(&self, k: f64) -> Mat {
        let m = plant_m(self.l, self.r, self.omega_m);
        let kd = self.k_diag(k);
        let ge = &self.gamma * &self.e_inv;
        let a11 = &m - kd / self.l + &ge * &self.g_stack;
        let a12 = -&ge / self.l;
        let a21 = -(&self.f_stack * &self.g_stack - &self.g_stack * &m) * self.l;
        block2(&a11, &a12, &a21, &self.f_stack)
    }

    fn search_k_bar(&mut self, cap: f64) -> Result<()> {
        let delta = self.margin;
        let eval = |k: f64, trace: &mut Vec<(f64, f64)>| {
            let a = spectral_abscissa(&self.transformed_matrix(k));
            trace.push((k, a));
            a < -delta
        };
        let mut trace = Vec::new();
        let mut k = 1e-3;
        let mut lo = None;
        let hi = loop {
            if eval(k, &mut trace) {
                break k;
            }
            lo = Some(k);
            k *= 2.0;
            if k > cap {
                let locus = trace
                    .iter()
                    .map(|(k, a)| format!("k={k:e}:{a:e}"))
                    .collect::<Vec<_>>()
                    .join(", ");
                return Err(SafError::Synthesis(format!(
                    "no gain below {cap:e} gives spectral abscissa < -{delta}; locus {locus}"
                )));
            }
        };
        let k_bar = match lo {
            None => hi,
            Some(mut lo) => {
                let mut hi = hi;
                while hi / lo - 1.0 > 1e-6 {
                    let mid = 0.5 * (lo + hi);
                    if eval(mid, &mut trace) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                hi
            }
        };
        self.k_bar = k_bar;
        self.trace = trace;
        Ok(())
    }

    pub fn boundary_layer_abscissa(&self) -> f64 {
        spectral_abscissa(&self.boundary_layer_matrix(self.k))
    }

    pub fn transformed_abscissa(&self) -> f64 {
        spectral_abscissa(&self.transformed_matrix(self.k))
    }

    /// Zero-order-hold discretisation of `(Φ, Q)` at period `ts`.
    pub fn discretize(&self, ts: f64) -> (Mat, Mat) {
        let n = self.dim();
        let aug = block2(&self.phi, &self.q, &Mat::zeros(2, n), &Mat::zeros(2, 2)) * ts;
        let e = expm(&aug);
        (e.view((0, 0), (n, n)).into_owned(), e.view((0, n), (n, 2)).into_owned())
    }

    /// Spectral radius of the sampled loop: plant and controller both held
    /// over `ts` in the synchronous frame.
    pub fn sampled_spectral_radius(&self, ts: f64) -> f64 {
        let n = self.dim();
        let m = plant_m(self.l, self.r, self.omega_m);
        let aug = block2(&m, &Mat::identity(2, 2), &Mat::zeros(2, 2), &Mat::zeros(2, 2)) * ts;
        let e = expm(&aug);
        let a_d = e.view((0, 0), (2, 2)).into_owned();
        let b_d = -e.view((0, 2), (2, 2)).into_owned() / self.l;
        let (phi_d, q_d) = self.discretize(ts);
        let kd = self.k_diag(self.k);
        let top_left = &a_d + &b_d * kd;
        let top_right = &b_d * &self.gamma;
        let lp = block2(&top_left, &top_right, &q_d, &phi_d);
        debug_assert_eq!(lp.nrows(), 2 + n);
        spectral_radius(&lp)
    }

    /// Plain-text dump of the synthesised matrices.
    pub fn report(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "orders = {:?}", self.exo.orders());
        let _ = writeln!(s, "fg = {:?}", self.fg);
        let _ = writeln!(s, "k = {:e}", self.k);
        let _ = writeln!(s, "k_bar = {:e}", self.k_bar);
        let _ = writeln!(s, "K = diag({:e}, {:e})", self.k_gains()[0], self.k_gains()[1]);
        let _ = writeln!(s, "boundary_layer_abscissa = {:e}", self.boundary_layer_abscissa());
        let _ = writeln!(s, "sylvester_residual = {:e}", self.sylvester[0].residual);
        let _ = writeln!(s, "E_condition = {:e}", self.sylvester[0].condition);
        let _ = writeln!(s, "R_xi = {:?}", self.r_xi);
        let _ = writeln!(s, "F =\n{}", fmt_mat(&self.f));
        let _ = writeln!(s, "G = {:?}", self.g.iter().collect::<Vec<_>>());
        let _ = writeln!(s, "E =\n{}", fmt_mat(&self.sylvester[0].e));
        let _ = writeln!(s, "Q_d = {:?}", self.q.column(0).iter().take(self.exo.dim()).collect::<Vec<_>>());
        let _ = writeln!(s, "Q_q = {:?}", self.q.column(1).iter().skip(self.exo.dim()).collect::<Vec<_>>());
        let _ = writeln!(s, "search_trace = {:?}", self.trace);
        s
    }
}

fn fmt_mat(m: &Mat) -> String {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| format!("{:e}", m[(i, j)]))
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect::<Vec<_>>()
        .join("\n")
}
