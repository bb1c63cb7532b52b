//! Diode-bridge load with the controller sampled at 7 kHz, in the three
//! execution modes.

use saf::sim::{run_scenario, Mode, Scenario};

fn main() -> saf::Result<()> {
    for mode in [Mode::Continuous, Mode::Sampled, Mode::SampledPwm] {
        let sc = Scenario::diode_bridge().with_mode(mode);
        let r = run_scenario(&sc)?;
        let rows = r.compensation(sc.analysis_periods, &sc.compensation_hz)?;
        let table: Vec<String> = rows
            .iter()
            .map(|row| format!("{} Hz {:.3}%", row.f_hz, row.percent.unwrap_or(f64::NAN)))
            .collect();
        println!("{mode:>12} (k = {:>5}): {}", r.k, table.join(", "));
        if let Some(rho) = r.sampled_spectral_radius {
            println!(
                "{:>12}  held-loop radius {rho:.4}, {} clamped duties, {} hexagon excursions",
                "", r.pwm_clamps, r.hexagon_violations
            );
        }
    }
    Ok(())
}
