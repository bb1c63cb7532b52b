//! Internal-model gains: minimal verified gain, closed-loop abscissa and the
//! held loop at the sampling rate.

use saf::control::exosystem::build_exosystem;
use saf::control::{synthesize_gains, SynthesisOptions};
use saf::sim::scenario::reference_plant;

fn main() -> saf::Result<()> {
    let p = reference_plant();
    let exo = build_exosystem(&[6, 12], p.omega_m())?;
    println!("observable: {}", exo.is_observable());
    let mut gs = synthesize_gains(&exo, &p, &SynthesisOptions::default())?;
    println!("k_bar = {:.4}", gs.k_bar);
    let ts = 1.0 / 7000.0;
    for k in [2.0 * gs.k_bar, 30.0, 46.0, 200.0] {
        gs.set_k(k);
        println!(
            "k = {k:>7.3}: boundary-layer abscissa {:+9.3} 1/s, held-loop radius at 7 kHz {:.4}",
            gs.boundary_layer_abscissa(),
            gs.sampled_spectral_radius(ts)
        );
    }
    gs.set_k(30.0);
    println!("\n{}", gs.report());
    Ok(())
}
