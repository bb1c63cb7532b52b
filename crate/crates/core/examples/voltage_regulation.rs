//! DC-link regulation from an off-centre start: v, the window average of
//! z = v² − V*² and the averaged power bias against the loss estimate.

use saf::sim::{run_scenario, Scenario};

fn main() -> saf::Result<()> {
    let sc = Scenario::two_harmonics();
    let r = run_scenario(&sc)?;
    let spp = r.samples_per_period;
    let l_star = (sc.v_max.powi(2) - sc.v_min.powi(2)) / 2.0;
    println!("V* = {:.2} V, phi0 = {:.4} V·A", sc.v_ref_sq().sqrt(), r.phi0);
    println!("{:>6} {:>9} {:>9} {:>12} {:>10}", "period", "v_min", "v_max", "z_a / l*", "eta_a");
    for k in 0..(r.len() - 1) / spp {
        let w = &r.v[k * spp..(k + 1) * spp];
        let end = (k + 1) * spp;
        println!(
            "{:>6} {:>9.2} {:>9.2} {:>12.3e} {:>10.4}",
            k + 1,
            w.iter().cloned().fold(f64::INFINITY, f64::min),
            w.iter().cloned().fold(0.0, f64::max),
            r.z_a[end] / l_star,
            r.eta_a[end]
        );
    }
    Ok(())
}
