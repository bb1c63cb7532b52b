use crate::control::synthesis::GainSynthesis;
use crate::linalg::Mat;
use crate::plant::Vec2;

/// Internal-model state `ξ`, length `2·(2N + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImcState {
    xi: Vec<f64>,
}

/// `(Φ_d, Q_d)`: exact zero-order-hold update of `ξ` over one sample.
#[derive(Debug, Clone)]
pub struct SampledImc {
    pub phi_d: Mat,
    pub q_d: Mat,
    pub ts: f64,
}

impl SampledImc {
    pub fn new(gs: &GainSynthesis, ts: f64) -> Self {
        let (phi_d, q_d) = gs.discretize(ts);
        SampledImc { phi_d, q_d, ts }
    }
}

impl ImcState {
    pub fn new(gs: &GainSynthesis) -> Self {
        ImcState { xi: vec![0.0; gs.dim()] }
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    pub fn xi_mut(&mut self) -> &mut [f64] {
        &mut self.xi
    }

    /// `ū = Γξ + K x̃` at the current state.
    pub fn output(&self, gs: &GainSynthesis, x_tilde: &Vec2) -> Vec2 {
        output_at(gs, &self.xi, x_tilde)
    }

    /// One classical RK4 step of `ξ̇ = Φξ + Q x̃` with `x̃` held. Returns `ū`
    /// at the pre-update state.
    pub fn step_rk4(&mut self, gs: &GainSynthesis, x_tilde: &Vec2, dt: f64) -> Vec2 {
        let u = self.output(gs, x_tilde);
        let n = self.xi.len();
        let mut k = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        let mut tmp = self.xi.clone();
        derivative(gs, &self.xi, x_tilde, &mut k[0]);
        for (t, (x, d)) in tmp.iter_mut().zip(self.xi.iter().zip(&k[0])) {
            *t = x + 0.5 * dt * d;
        }
        derivative(gs, &tmp, x_tilde, &mut k[1]);
        for (t, (x, d)) in tmp.iter_mut().zip(self.xi.iter().zip(&k[1])) {
            *t = x + 0.5 * dt * d;
        }
        derivative(gs, &tmp, x_tilde, &mut k[2]);
        for (t, (x, d)) in tmp.iter_mut().zip(self.xi.iter().zip(&k[2])) {
            *t = x + dt * d;
        }
        derivative(gs, &tmp, x_tilde, &mut k[3]);
        for i in 0..n {
            self.xi[i] += dt / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
        }
        u
    }

    /// Exact held-input update. Returns `ū` at the pre-update state.
    pub fn step_zoh(&mut self, gs: &GainSynthesis, disc: &SampledImc, x_tilde: &Vec2) -> Vec2 {
        let u = self.output(gs, x_tilde);
        let n = self.xi.len();
        let mut next = vec![0.0; n];
        for (i, out) in next.iter_mut().enumerate() {
            let mut acc = disc.q_d[(i, 0)] * x_tilde[0] + disc.q_d[(i, 1)] * x_tilde[1];
            for j in 0..n {
                acc += disc.phi_d[(i, j)] * self.xi[j];
            }
            *out = acc;
        }
        self.xi = next;
        u
    }
}

/// `ū = Γξ + K x̃`.
pub fn output_at(gs: &GainSynthesis, xi: &[f64], x_tilde: &Vec2) -> Vec2 {
    let [kd, kq] = gs.k_gains();
    let mut u = Vec2::new(kd * x_tilde[0], kq * x_tilde[1]);
    for (j, x) in xi.iter().enumerate() {
        u[0] += gs.gamma[(0, j)] * x;
        u[1] += gs.gamma[(1, j)] * x;
    }
    u
}

/// `ξ̇ = Φξ + Q x̃` written into `out`.
pub fn derivative(gs: &GainSynthesis, xi: &[f64], x_tilde: &Vec2, out: &mut [f64]) {
    let n = xi.len();
    for (i, o) in out.iter_mut().enumerate().take(n) {
        let mut acc = gs.q[(i, 0)] * x_tilde[0] + gs.q[(i, 1)] * x_tilde[1];
        for j in 0..n {
            let p = gs.phi[(i, j)];
            if p != 0.0 {
                acc += p * xi[j];
            }
        }
        *o = acc;
    }
}
