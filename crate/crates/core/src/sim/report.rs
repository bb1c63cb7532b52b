use crate::error::Result;
use crate::sim::spectrum::spectrum;

/// Load amplitudes below this are reported without a percentage.
pub const NO_LOAD_CONTENT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct CompensationRow {
    pub f_hz: f64,
    pub i_ma: f64,
    pub i_la: f64,
    /// `(1 − i_ma/i_la)·100`; `None` when the load carries nothing there.
    pub percent: Option<f64>,
}

/// Compensation table at the requested harmonic frequencies. Both series
/// share a clock and span `periods` line periods.
pub fn compensation_report(
    mains: &[f64],
    load: &[f64],
    f_m: f64,
    periods: usize,
    orders_hz: &[f64],
) -> Result<Vec<CompensationRow>> {
    let sm = spectrum(mains, periods)?;
    let sl = spectrum(load, periods)?;
    Ok(orders_hz
        .iter()
        .map(|&f| {
            let k = (f / f_m).round() as usize;
            let i_ma = sm.get(k).copied().unwrap_or(0.0);
            let i_la = sl.get(k).copied().unwrap_or(0.0);
            CompensationRow {
                f_hz: f,
                i_ma,
                i_la,
                percent: compensation_percent(i_ma, i_la),
            }
        })
        .collect())
}

pub fn compensation_percent(i_ma: f64, i_la: f64) -> Option<f64> {
    (i_la >= NO_LOAD_CONTENT).then(|| (1.0 - i_ma / i_la) * 100.0)
}
