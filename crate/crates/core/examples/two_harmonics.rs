//! Continuous-time closed loop on a load with two 10 A harmonics.

use saf::sim::{run_scenario, Scenario};

fn main() -> saf::Result<()> {
    let sc = Scenario::two_harmonics();
    let r = run_scenario(&sc)?;
    println!("k = {}, k_bar = {:.4}", r.k, r.k_bar);
    let window = r.last_periods(sc.analysis_periods);
    println!("steady-state RMS of x_err: {:.4e} V·A", r.x_err_rms(window));
    println!("{:>8} {:>12} {:>10} {:>10}", "f (Hz)", "i_ma (A)", "i_la (A)", "comp (%)");
    for row in r.compensation(sc.analysis_periods, &sc.compensation_hz)? {
        println!(
            "{:>8} {:>12.3e} {:>10.4} {:>10.3}",
            row.f_hz,
            row.i_ma,
            row.i_la,
            row.percent.unwrap_or(f64::NAN)
        );
    }
    for e in &r.events {
        println!("[{:.4} s] {}: {}", e.t, e.kind, e.detail);
    }
    Ok(())
}
