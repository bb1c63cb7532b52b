use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Result, SafError};

/// Single-sided peak amplitudes at `k·f_m`, `k = 0, 1, …`, of a signal
/// spanning exactly `periods` line periods at uniform spacing.
pub fn spectrum(signal: &[f64], periods: usize) -> Result<Vec<f64>> {
    let n = signal.len();
    if periods == 0 || n == 0 || !n.is_multiple_of(periods) {
        return Err(SafError::Input(format!(
            "{n} samples do not span an integer number ({periods}) of periods"
        )));
    }
    let mut buf: Vec<Complex<f64>> = signal.iter().map(|&x| Complex::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let nyquist = n / 2;
    let harmonics = nyquist / periods;
    Ok((0..=harmonics)
        .map(|k| {
            let bin = k * periods;
            let mag = buf[bin].norm() / n as f64;
            if bin == 0 || (n.is_multiple_of(2) && bin == nyquist) {
                mag
            } else {
                2.0 * mag
            }
        })
        .collect())
}
