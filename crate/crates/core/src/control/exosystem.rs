use crate::error::{Result, SafError};
use crate::linalg::{block_diag, rank, Mat};

/// Harmonic oscillator bank generating the load disturbance, per axis:
/// `Ω = blkdiag(0, Ω_n…)` with `Ω_n = [[0, nω], [−nω, 0]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Exosystem {
    orders: Vec<u32>,
    omega_m: f64,
    omega: Mat,
    gamma: Mat,
}

fn rotation_generator(w: f64) -> Mat {
    Mat::from_row_slice(2, 2, &[0.0, w, -w, 0.0])
}

/// Oscillator bank for the given harmonic orders. Order 0 is always present;
/// listing it explicitly is allowed.
pub fn build_exosystem(orders: &[u32], omega_m: f64) -> Result<Exosystem> {
    if !(omega_m > 0.0 && omega_m.is_finite()) {
        return Err(SafError::param("omega_m", "must be positive"));
    }
    let mut seen = std::collections::BTreeSet::new();
    for &o in orders {
        if !seen.insert(o) {
            return Err(SafError::Input(format!("duplicate exosystem order {o}")));
        }
    }
    let orders: Vec<u32> = seen.into_iter().filter(|&o| o != 0).collect();
    let n = 1 + 2 * orders.len();
    let mut blocks = vec![Mat::zeros(1, 1)];
    blocks.extend(orders.iter().map(|&o| rotation_generator(o as f64 * omega_m)));
    let omega = block_diag(&blocks.iter().collect::<Vec<_>>());
    let mut gamma = Mat::zeros(1, n);
    gamma[(0, 0)] = 1.0;
    for j in 0..orders.len() {
        gamma[(0, 1 + 2 * j)] = 1.0;
    }
    let exo = Exosystem {
        orders,
        omega_m,
        omega,
        gamma,
    };
    if !exo.is_observable() {
        return Err(SafError::Synthesis("exosystem output is not observable".into()));
    }
    Ok(exo)
}

impl Exosystem {
    /// Nonzero orders, ascending.
    pub fn orders(&self) -> &[u32] {
        &self.orders
    }
    pub fn omega_m(&self) -> f64 {
        self.omega_m
    }
    /// Per-axis dimension `2N + 1`.
    pub fn dim(&self) -> usize {
        self.omega.nrows()
    }
    /// Per-axis generator `Ω`.
    pub fn omega(&self) -> &Mat {
        &self.omega
    }
    /// Per-axis output row `Γ_d = Γ_q`.
    pub fn gamma_row(&self) -> &Mat {
        &self.gamma
    }
    /// `Φ = blkdiag(Ω, Ω)`.
    pub fn phi(&self) -> Mat {
        block_diag(&[&self.omega, &self.omega])
    }
    /// `Γ = blkdiag(Γ_d, Γ_q)`, 2 × 2n.
    pub fn gamma(&self) -> Mat {
        block_diag(&[&self.gamma, &self.gamma])
    }

    /// Rank of `[Γ; ΓΩ; …; ΓΩⁿ⁻¹]` with `Ω` normalised by its largest
    /// frequency so the powers stay O(1).
    pub fn observability_rank(&self) -> usize {
        let n = self.dim();
        let w_max = self.orders.last().map_or(1.0, |&o| o as f64 * self.omega_m);
        let om = &self.omega / w_max;
        let mut obs = Mat::zeros(n, n);
        let mut row = self.gamma.clone();
        for i in 0..n {
            obs.row_mut(i).copy_from(&row.row(0));
            row = &row * &om;
        }
        rank(&obs, 1e-10)
    }

    /// Hautus test at each eigenvalue `jnω` of `Ω`.
    pub fn is_observable(&self) -> bool {
        let n = self.dim();
        let w_max = self.orders.last().map_or(1.0, |&o| o as f64 * self.omega_m);
        let om = &self.omega / w_max;
        let freqs = std::iter::once(0.0).chain(self.orders.iter().map(|&o| o as f64 * self.omega_m / w_max));
        for w in freqs {
            // Realified (jwI − Ω) stacked over Γ, acting on (Re v, Im v).
            let mut m = Mat::zeros(2 * n + 2, 2 * n);
            m.view_mut((0, 0), (n, n)).copy_from(&(-&om));
            m.view_mut((n, n), (n, n)).copy_from(&(-&om));
            for i in 0..n {
                m[(i, n + i)] = -w;
                m[(n + i, i)] = w;
            }
            m.view_mut((2 * n, 0), (1, n)).copy_from(&self.gamma);
            m.view_mut((2 * n + 1, n), (1, n)).copy_from(&self.gamma);
            if rank(&m, 1e-10) < 2 * n {
                return false;
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn dc_only() {
        let e = build_exosystem(&[0], 100.0 * PI).unwrap();
        assert_eq!(e.dim(), 1);
        assert_eq!(e.omega()[(0, 0)], 0.0);
        assert_eq!(e.gamma_row()[(0, 0)], 1.0);
        assert_eq!(build_exosystem(&[], 100.0 * PI).unwrap(), e);
    }

    #[test]
    fn two_harmonic_bank() {
        let w = 100.0 * PI;
        let e = build_exosystem(&[0, 6, 12], w).unwrap();
        assert_eq!(e.dim(), 5);
        assert_eq!(e.gamma_row().iter().copied().collect::<Vec<_>>(), vec![1.0, 1.0, 0.0, 1.0, 0.0]);
        assert_eq!(e.omega()[(1, 2)], 600.0 * PI);
        assert_eq!(e.omega()[(4, 3)], -1200.0 * PI);
        assert_eq!(e.omega().transpose(), -e.omega());
        assert_eq!(e.phi().nrows(), 10);
    }

    #[test]
    fn duplicates_rejected() {
        assert_eq!(build_exosystem(&[6, 6], 1.0).unwrap_err().kind(), "input");
    }

    #[test]
    fn observability_rank_is_full() {
        // Each block is observable from its first coordinate (Γ picks the
        // cosine, Ω couples it to the sine) and the blocks have disjoint
        // spectra, so the rank equals the dimension.
        let e = build_exosystem(&[0, 7, 13], 100.0 * PI).unwrap();
        assert_eq!(e.observability_rank(), 5);
        assert!(e.is_observable());
    }
}
