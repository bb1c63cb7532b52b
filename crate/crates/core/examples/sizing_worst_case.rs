//! Capacitor for the worst load the switches can carry on a set of orders.

use saf::sim::scenario::reference_plant;
use saf::sizing::{worst_case_energy, WorstCaseOptions};

fn main() -> saf::Result<()> {
    let p = reference_plant();
    let opts = WorstCaseOptions {
        starts: 16,
        budget: 1000,
        ..Default::default()
    };
    for orders in [vec![6u32], vec![6, 12]] {
        for i_max in [10.0, 20.0, 40.0] {
            let wc = worst_case_energy(i_max, &orders, &p, 700.0, &opts)?;
            println!(
                "orders {orders:?}, I_max = {i_max:>4} A: E_max = {:.4} J, I_q0 = {:+.2} A, {} evaluations",
                wc.e_max, wc.i_q0, wc.evaluations
            );
            for h in &wc.harmonics {
                println!(
                    "    order {:>2}: I_d = {:.2} A @ {:+.3}, I_q = {:.2} A @ {:+.3}",
                    h.order, h.i_d, h.psi_d, h.i_q, h.psi_q
                );
            }
        }
    }
    Ok(())
}
