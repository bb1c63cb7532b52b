//! Load presets in the synchronous frame, the compensation reference and
//! the loss bias that balances the DC link.

use saf::load::{preset_harmonics, solve_phi0, LoadSpectrum, Reference, PRESETS};
use saf::sim::scenario::reference_plant;

fn main() -> saf::Result<()> {
    let p = reference_plant();
    for name in PRESETS {
        let phase = preset_harmonics(name).expect("listed preset");
        let spectrum = LoadSpectrum::from_phase_harmonics(p.v_m(), &phase)?;
        println!("{name}: X_ld0 = {:.1} V·A, X_lq0 = {:.1} V·A", spectrum.x_ld0(), spectrum.x_lq0());
        for h in spectrum.harmonics() {
            println!(
                "  order {:>2}: X_d = {:8.1} @ {:+.3} rad, X_q = {:8.1} @ {:+.3} rad",
                h.order, h.x_d, h.psi_d, h.x_q, h.psi_q
            );
        }
        let reference = Reference::from_load(&spectrum, p.omega_m());
        let phi0 = solve_phi0(&reference, &p)?;
        println!(
            "  mean square of x* = {:.4e} (V·A)², phi0 = {phi0:.4} V·A",
            reference.mean_square(2048)
        );
    }
    Ok(())
}
