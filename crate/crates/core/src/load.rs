//! Polluting-load description in power variables, the compensation reference
//! and the power-loss bias `φ₀`.

use std::f64::consts::PI;

use crate::error::{Result, SafError};
use crate::plant::{PlantParams, Vec2};

/// One harmonic of the load in the synchronous frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DqHarmonic {
    /// Order `n` relative to the grid frequency, `n ≥ 1`.
    pub order: u32,
    /// Real-power amplitude `X_ldn` (V·A).
    pub x_d: f64,
    pub psi_d: f64,
    /// Virtual-power amplitude `X_lqn` (V·A).
    pub x_q: f64,
    pub psi_q: f64,
}

/// A phase-current harmonic of a balanced three-phase load, as read off a
/// phase-current spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseHarmonic {
    /// Harmonic index `k` of the grid frequency; `k = 1` is the fundamental.
    pub order: u32,
    /// Peak amplitude (A).
    pub amplitude: f64,
    /// Phase of phase `a` (rad).
    pub phase: f64,
}

impl PhaseHarmonic {
    pub fn new(order: u32, amplitude: f64, phase: f64) -> Self {
        PhaseHarmonic {
            order,
            amplitude,
            phase,
        }
    }
}

/// Names accepted by [`preset_harmonics`].
pub const PRESETS: [&str; 2] = ["two_harmonics", "diode_bridge"];

/// Phase-current content of a named load preset, fundamental first.
pub fn preset_harmonics(name: &str) -> Option<Vec<PhaseHarmonic>> {
    let table: &[(u32, f64)] = match name {
        "two_harmonics" => &[(1, 30.0), (7, 10.0), (13, 10.0)],
        "diode_bridge" => &[(1, 19.4), (5, 3.88), (7, 1.91), (11, 1.57), (13, 1.08)],
        _ => return None,
    };
    Some(table.iter().map(|&(k, a)| PhaseHarmonic::new(k, a, 0.0)).collect())
}

/// Load power `x_lj(t) = X_lj0 + Σ X_ljn cos(n ω_m t + ψ_jn)`, `j = d, q`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LoadSpectrum {
    x_ld0: f64,
    x_lq0: f64,
    harmonics: Vec<DqHarmonic>,
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_phase(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    if w <= -PI {
        w += 2.0 * PI;
    }
    w
}

impl LoadSpectrum {
    pub fn new(x_ld0: f64, x_lq0: f64, harmonics: Vec<DqHarmonic>) -> Result<Self> {
        if !x_ld0.is_finite() || !x_lq0.is_finite() {
            return Err(SafError::Input("DC load components must be finite".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for h in &harmonics {
            if h.order == 0 {
                return Err(SafError::Input(
                    "harmonic order 0 is the DC term; use X_ld0/X_lq0".into(),
                ));
            }
            if !seen.insert(h.order) {
                return Err(SafError::Input(format!("duplicate harmonic order {}", h.order)));
            }
            for (name, a) in [("X_ld", h.x_d), ("X_lq", h.x_q)] {
                if !(a >= 0.0 && a.is_finite()) {
                    return Err(SafError::Input(format!(
                        "{name}{} amplitude must be >= 0, got {a}",
                        h.order
                    )));
                }
            }
            for (name, p) in [("psi_d", h.psi_d), ("psi_q", h.psi_q)] {
                if !(p > -PI && p <= PI) {
                    return Err(SafError::Input(format!(
                        "{name}{} = {p} outside (-pi, pi]",
                        h.order
                    )));
                }
            }
        }
        Ok(LoadSpectrum {
            x_ld0,
            x_lq0,
            harmonics,
        })
    }

    /// A purely active load drawing `x_ld0` (V·A).
    pub fn dc(x_ld0: f64) -> Self {
        LoadSpectrum {
            x_ld0,
            ..Default::default()
        }
    }

    /// Converts balanced phase-current harmonics to the synchronous frame.
    ///
    /// Harmonic `k ≡ 1 (mod 3)` is positive sequence and lands on order
    /// `k − 1`; `k ≡ 2 (mod 3)` is negative sequence and lands on `k + 1`.
    /// Triplen harmonics cannot flow in a three-wire connection and are
    /// rejected. Contributions sharing a synchronous order are added as
    /// phasors.
    pub fn from_phase_harmonics(v_m: f64, harmonics: &[PhaseHarmonic]) -> Result<Self> {
        use std::collections::BTreeMap;
        // order -> (d phasor, q phasor) as (re, im)
        let mut acc: BTreeMap<u32, ([f64; 2], [f64; 2])> = BTreeMap::new();
        for h in harmonics {
            if !(h.amplitude >= 0.0 && h.amplitude.is_finite()) {
                return Err(SafError::Input(format!(
                    "phase harmonic {} amplitude must be >= 0",
                    h.order
                )));
            }
            let (order, q_shift) = match h.order % 3 {
                1 => (h.order - 1, -PI / 2.0),
                2 => (h.order + 1, PI / 2.0),
                _ => {
                    return Err(SafError::Input(format!(
                        "harmonic {} is zero-sequence and cannot flow in a three-wire system",
                        h.order
                    )))
                }
            };
            let a = v_m * h.amplitude;
            let e = acc.entry(order).or_insert(([0.0; 2], [0.0; 2]));
            e.0[0] += a * h.phase.cos();
            e.0[1] += a * h.phase.sin();
            e.1[0] += a * (h.phase + q_shift).cos();
            e.1[1] += a * (h.phase + q_shift).sin();
        }
        let mut x_ld0 = 0.0;
        let mut x_lq0 = 0.0;
        let mut out = Vec::new();
        for (order, (d, q)) in acc {
            if order == 0 {
                // cos(ψ) of the d phasor and sin via the shifted q phasor
                x_ld0 = d[0];
                x_lq0 = q[0];
                continue;
            }
            out.push(DqHarmonic {
                order,
                x_d: d[0].hypot(d[1]),
                psi_d: wrap_phase(d[1].atan2(d[0])),
                x_q: q[0].hypot(q[1]),
                psi_q: wrap_phase(q[1].atan2(q[0])),
            });
        }
        LoadSpectrum::new(x_ld0, x_lq0, out)
    }

    /// Two equal positive-sequence harmonics of 10 A at the 7th and 13th
    /// multiples of the grid frequency on top of a 30 A active fundamental.
    pub fn two_harmonics(v_m: f64) -> Self {
        Self::from_phase_harmonics(v_m, &preset_harmonics("two_harmonics").expect("known preset"))
            .expect("valid preset")
    }

    /// Dominant harmonics of a six-pulse diode bridge (5th, 7th, 11th, 13th
    /// phase-current harmonics with zero phase) on a 19.4 A fundamental.
    pub fn diode_bridge(v_m: f64) -> Self {
        Self::from_phase_harmonics(v_m, &preset_harmonics("diode_bridge").expect("known preset"))
            .expect("valid preset")
    }

    pub fn x_ld0(&self) -> f64 {
        self.x_ld0
    }
    pub fn x_lq0(&self) -> f64 {
        self.x_lq0
    }
    pub fn harmonics(&self) -> &[DqHarmonic] {
        &self.harmonics
    }

    /// Harmonic orders present, ascending.
    pub fn orders(&self) -> Vec<u32> {
        let mut o: Vec<u32> = self.harmonics.iter().map(|h| h.order).collect();
        o.sort_unstable();
        o
    }

    /// `(x_ld, x_lq)` at time `t`.
    pub fn eval(&self, t: f64, omega_m: f64) -> Vec2 {
        let mut x = Vec2::new(self.x_ld0, self.x_lq0);
        for h in &self.harmonics {
            let a = h.order as f64 * omega_m * t;
            x[0] += h.x_d * (a + h.psi_d).cos();
            x[1] += h.x_q * (a + h.psi_q).cos();
        }
        x
    }
}

/// Compensation reference `x* = (X_ld0 − x_ld, −x_lq)` plus an optional
/// constant real-power bias.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    harmonics: Vec<DqHarmonic>,
    x_lq0: f64,
    omega_m: f64,
    phi0: f64,
}

/// Quadrature samples per period used for mean-square integrals.
pub const QUADRATURE_SAMPLES: usize = 2048;

impl Reference {
    pub fn from_load(spectrum: &LoadSpectrum, omega_m: f64) -> Self {
        Reference {
            harmonics: spectrum.harmonics.clone(),
            x_lq0: spectrum.x_lq0,
            omega_m,
            phi0: 0.0,
        }
    }

    pub fn with_phi0(mut self, phi0: f64) -> Self {
        self.phi0 = phi0;
        self
    }

    pub fn phi0(&self) -> f64 {
        self.phi0
    }
    pub fn omega_m(&self) -> f64 {
        self.omega_m
    }
    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega_m
    }

    /// `x*(t)` without the bias.
    pub fn value(&self, t: f64) -> Vec2 {
        let mut x = Vec2::new(0.0, -self.x_lq0);
        for h in &self.harmonics {
            let a = h.order as f64 * self.omega_m * t;
            x[0] -= h.x_d * (a + h.psi_d).cos();
            x[1] -= h.x_q * (a + h.psi_q).cos();
        }
        x
    }

    /// `ẋ*(t)`, term-wise analytic derivative.
    pub fn derivative(&self, t: f64) -> Vec2 {
        let mut dx = Vec2::zeros();
        for h in &self.harmonics {
            let w = h.order as f64 * self.omega_m;
            let a = w * t;
            dx[0] += h.x_d * w * (a + h.psi_d).sin();
            dx[1] += h.x_q * w * (a + h.psi_q).sin();
        }
        dx
    }

    /// `x*(t) + (φ₀, 0)`.
    pub fn biased(&self, t: f64) -> Vec2 {
        self.value(t) + Vec2::new(self.phi0, 0.0)
    }

    /// Both value and derivative, sharing the trigonometric evaluations.
    pub fn value_and_derivative(&self, t: f64) -> (Vec2, Vec2) {
        let mut x = Vec2::new(0.0, -self.x_lq0);
        let mut dx = Vec2::zeros();
        for h in &self.harmonics {
            let w = h.order as f64 * self.omega_m;
            let a = w * t;
            let (sd, cd) = (a + h.psi_d).sin_cos();
            let (sq, cq) = (a + h.psi_q).sin_cos();
            x[0] -= h.x_d * cd;
            x[1] -= h.x_q * cq;
            dx[0] += h.x_d * w * sd;
            dx[1] += h.x_q * w * sq;
        }
        (x, dx)
    }

    /// `f_m ∫₀ᵀ (x_d*² + x_q*²) dτ` by the periodic trapezoid rule.
    pub fn mean_square(&self, samples: usize) -> f64 {
        let t = self.period();
        (0..samples)
            .map(|k| self.value(t * k as f64 / samples as f64).norm_squared())
            .sum::<f64>()
            / samples as f64
    }
}

/// Smaller root of `R φ² − E_md φ + R Σ = 0`.
pub fn phi0_from_mean_square(sigma: f64, r: f64, e_md: f64) -> Result<f64> {
    if r == 0.0 {
        return Ok(0.0);
    }
    let disc = e_md * e_md - 4.0 * r * r * sigma;
    if disc < 0.0 {
        return Err(SafError::Infeasible(format!(
            "power balance has no real root: E_md^2 = {:e} < 4 R^2 f_m int(x*^2) = {:e}",
            e_md * e_md,
            4.0 * r * r * sigma
        )));
    }
    // Rationalised form of (E − √disc)/(2R), free of cancellation.
    Ok(2.0 * r * sigma / (e_md + disc.sqrt()))
}

/// Power-loss bias `φ₀` for the reference `x*` on the given plant.
pub fn solve_phi0(reference: &Reference, params: &PlantParams) -> Result<f64> {
    let coarse = phi0_from_mean_square(
        reference.mean_square(QUADRATURE_SAMPLES),
        params.r(),
        params.e_md(),
    )?;
    let fine = phi0_from_mean_square(
        reference.mean_square(2 * QUADRATURE_SAMPLES),
        params.r(),
        params.e_md(),
    )?;
    if (fine - coarse).abs() > 1e-9 * fine.abs().max(f64::MIN_POSITIVE) {
        return Err(SafError::Input(format!(
            "loss-bias quadrature not converged: {coarse:e} vs {fine:e}"
        )));
    }
    Ok(coarse)
}

/// `ε Ψ(x) = ε L (d₀ + M x − ẋ)ᵀ x`, the drive of `v²` under perfect
/// tracking of the biased reference.
pub fn voltage_drive(reference: &Reference, params: &PlantParams, t: f64) -> f64 {
    let (x, dx) = reference.value_and_derivative(t);
    let x = x + Vec2::new(reference.phi0(), 0.0);
    let f = params.d0() + params.apply_m(&x) - dx;
    params.epsilon() * params.l() * f.dot(&x)
}
