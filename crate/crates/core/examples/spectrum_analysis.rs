//! Harmonic content of load and mains currents over the trailing window.

use saf::sim::{run_scenario, spectrum, Scenario};

fn thd(s: &[f64]) -> f64 {
    let h: f64 = s.iter().skip(2).map(|a| a * a).sum();
    h.sqrt() / s[1]
}

fn main() -> saf::Result<()> {
    let sc = Scenario::diode_bridge();
    let r = run_scenario(&sc)?;
    let w = r.last_periods(sc.analysis_periods);
    let load: Vec<f64> = r.i_load[w.clone()].iter().map(|i| i[0]).collect();
    let mains: Vec<f64> = r.i_mains[w].iter().map(|i| i[0]).collect();
    let sl = spectrum(&load, sc.analysis_periods)?;
    let sm = spectrum(&mains, sc.analysis_periods)?;
    println!("{:>4} {:>8} {:>10} {:>12}", "k", "f (Hz)", "load (A)", "mains (A)");
    for k in 1..=15 {
        println!("{k:>4} {:>8} {:>10.4} {:>12.4e}", k * 50, sl[k], sm[k]);
    }
    println!("THD: load {:.2}%, mains {:.4}%", 100.0 * thd(&sl[..60]), 100.0 * thd(&sm[..60]));
    Ok(())
}
