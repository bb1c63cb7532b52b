//! Inductor, DC window and capacitor for a known load.

use saf::load::LoadSpectrum;
use saf::sim::scenario::reference_plant;
use saf::sizing::{size_load_based, SizingInputs};

fn main() -> saf::Result<()> {
    let p = reference_plant();
    let inputs = SizingInputs {
        f_pwm: 7000.0,
        delta_i_mpp: 6.49,
        v_max: 900.0,
        i_max: 70.0,
        v_min: Some(700.0),
        safety_factor: 1.15,
    };
    for (name, load) in [
        ("diode_bridge", LoadSpectrum::diode_bridge(p.v_m())),
        ("two_harmonics", LoadSpectrum::two_harmonics(p.v_m())),
    ] {
        let r = size_load_based(&load, &p, &inputs)?;
        println!("{name}:");
        println!("  L_min = {:.3} mH, ripple at L = {:.3} A", r.l_min * 1e3, r.ripple_at_l);
        println!("  v_m bound = {:.1} V, oversized = {:.1} V", r.v_m_bound, r.v_m_oversized);
        println!("  E_max = {:.4} J, C = {:.1} uF at v_m = {} V", r.e_max, r.c * 1e6, r.v_m_used);
        println!("  feasible = {}", r.feasible);
        for n in r.notes.iter().chain(&r.remediation) {
            println!("    - {n}");
        }
    }
    Ok(())
}
