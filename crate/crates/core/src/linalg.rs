//! Small dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::DMatrix;

pub type Mat = DMatrix<f64>;

/// Largest real part over the eigenvalues of `a`.
pub fn spectral_abscissa(a: &Mat) -> f64 {
    a.complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Largest eigenvalue modulus of `a`.
pub fn spectral_radius(a: &Mat) -> f64 {
    a.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Matrix exponential (scaling and squaring with Padé approximants).
pub fn expm(a: &Mat) -> Mat {
    a.clone().exp()
}

/// Singular values, descending.
pub fn singular_values(a: &Mat) -> Vec<f64> {
    let mut s: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Numerical rank with threshold `rtol · σ_max`.
pub fn rank(a: &Mat, rtol: f64) -> usize {
    let s = singular_values(a);
    let top = s.first().copied().unwrap_or(0.0);
    s.iter().filter(|&&x| x > rtol * top).count()
}

/// Block-diagonal assembly.
pub fn block_diag(blocks: &[&Mat]) -> Mat {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let m: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::zeros(n, m);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(*b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// `[[a, b], [c, d]]` from four conforming blocks.
pub fn block2(a: &Mat, b: &Mat, c: &Mat, d: &Mat) -> Mat {
    let (n1, n2) = (a.nrows(), c.nrows());
    let (m1, m2) = (a.ncols(), b.ncols());
    let mut out = Mat::zeros(n1 + n2, m1 + m2);
    out.view_mut((0, 0), (n1, m1)).copy_from(a);
    out.view_mut((0, m1), (n1, m2)).copy_from(b);
    out.view_mut((n1, 0), (n2, m1)).copy_from(c);
    out.view_mut((n1, m1), (n2, m2)).copy_from(d);
    out
}
