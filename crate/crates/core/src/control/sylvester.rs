use nalgebra::DVector;

use crate::error::{Result, SafError};
use crate::linalg::{singular_values, Mat};

/// Solution of `F E − E Ω = −G Γ` with its diagnostics.
#[derive(Debug, Clone)]
pub struct SylvesterSolution {
    pub e: Mat,
    /// `‖F E − E Ω + G Γ‖_F / ‖E‖_F` (absolute when `E = 0`).
    pub residual: f64,
    /// 2-norm condition number of `E`.
    pub condition: f64,
}

/// Solves `F E − E Ω = −G Γ` through the Kronecker system
/// `(I ⊗ F − Ωᵀ ⊗ I) vec E = −vec(G Γ)`.
pub fn solve_sylvester(f: &Mat, g: &Mat, omega: &Mat, gamma: &Mat) -> Result<SylvesterSolution> {
    let n = f.nrows();
    let m = omega.nrows();
    if f.ncols() != n || omega.ncols() != m || g.shape() != (n, gamma.nrows()) || gamma.ncols() != m {
        return Err(SafError::Input("Sylvester operands have inconsistent shapes".into()));
    }
    let dim = n * m;
    let mut a = Mat::zeros(dim, dim);
    // Column-major vec: entry (i, j) of E sits at j·n + i.
    for j in 0..m {
        for i in 0..n {
            let row = j * n + i;
            for k in 0..n {
                a[(row, j * n + k)] += f[(i, k)];
            }
            for k in 0..m {
                a[(row, k * n + i)] -= omega[(k, j)];
            }
        }
    }
    let rhs = -(g * gamma);
    let b = DVector::from_column_slice(rhs.as_slice());
    let ef = f.complex_eigenvalues();
    let eo = omega.complex_eigenvalues();
    let scale = ef.iter().chain(eo.iter()).fold(1.0f64, |m, z| m.max(z.norm()));
    let gap = ef
        .iter()
        .flat_map(|a| eo.iter().map(move |b| (a - b).norm()))
        .fold(f64::INFINITY, f64::min);
    if gap < 1e-10 * scale {
        return Err(SafError::Synthesis(
            "Sylvester operator is singular: spectra of F and Omega overlap".into(),
        ));
    }
    let x = a
        .lu()
        .solve(&b)
        .ok_or_else(|| SafError::Synthesis("Sylvester system is singular".into()))?;
    let e = Mat::from_column_slice(n, m, x.as_slice());
    let r = f * &e - &e * omega + g * gamma;
    let en = e.norm();
    let residual = if en > 0.0 { r.norm() / en } else { r.norm() };
    let condition = if e.iter().all(|&v| v == 0.0) {
        f64::INFINITY
    } else {
        let s = singular_values(&e);
        s[0] / s.last().copied().unwrap()
    };
    Ok(SylvesterSolution { e, residual, condition })
}

/// [`solve_sylvester`] plus the invertibility check the controller needs.
pub fn solve_invertible(f: &Mat, g: &Mat, omega: &Mat, gamma: &Mat) -> Result<SylvesterSolution> {
    let sol = solve_sylvester(f, g, omega, gamma)?;
    let s = singular_values(&sol.e);
    if s[0] == 0.0 || s.last().copied().unwrap_or(0.0) < 1e-8 * s[0] {
        return Err(SafError::Synthesis(format!(
            "Sylvester solution E is singular (cond = {:e}); choose a different (F, G)",
            sol.condition
        )));
    }
    if sol.residual > 1e-10 {
        return Err(SafError::Synthesis(format!(
            "Sylvester residual {:e} above 1e-10",
            sol.residual
        )));
    }
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn scalar_case() {
        let one = Mat::from_element(1, 1, 1.0);
        let s = solve_sylvester(&(-&one), &one, &Mat::zeros(1, 1), &one).unwrap();
        assert_relative_eq!(s.e[(0, 0)], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_output_gives_zero() {
        let f = Mat::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, -1.0]);
        let g = Mat::from_column_slice(2, 1, &[1.0, 1.0]);
        let om = Mat::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let s = solve_sylvester(&f, &g, &om, &Mat::zeros(1, 2)).unwrap();
        assert_eq!(s.e.amax(), 0.0);
        assert!(solve_invertible(&f, &g, &om, &Mat::zeros(1, 2)).is_err());
    }

    #[test]
    fn jordan_block_against_steady_state_flow() {
        // Oracle: E is the steady state of Ė = F E − E Ω + G Γ, which is
        // globally attracting since F is Hurwitz and Ω is skew.
        let f = Mat::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, -1.0]);
        let g = Mat::from_column_slice(2, 1, &[1.0, 1.0]);
        let om = Mat::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let gm = Mat::from_row_slice(1, 2, &[1.0, 0.0]);
        let s = solve_sylvester(&f, &g, &om, &gm).unwrap();
        assert!(s.residual < 1e-12);

        let rhs = |x: &Mat| &f * x - x * &om + &g * &gm;
        let mut x = Mat::zeros(2, 2);
        let h = 1e-3;
        for _ in 0..60_000 {
            let k1 = rhs(&x);
            let k2 = rhs(&(&x + &k1 * (h / 2.0)));
            let k3 = rhs(&(&x + &k2 * (h / 2.0)));
            let k4 = rhs(&(&x + &k3 * h));
            x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        assert!((&x - &s.e).amax() < 1e-10, "{x} vs {}", s.e);
    }

    #[test]
    fn overlapping_spectra_rejected() {
        let z = Mat::zeros(1, 1);
        let one = Mat::from_element(1, 1, 1.0);
        assert_eq!(solve_sylvester(&z, &one, &z, &one).unwrap_err().kind(), "synthesis");
    }
}
