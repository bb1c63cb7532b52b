//! Power-tracking and DC-link voltage controllers.
//!
//! The power loop is an internal-model controller embedding oscillators at
//! the load harmonic orders; the voltage loop regulates the period average
//! of `v² − V*²` and feeds a real-power bias into the power reference. The
//! two are joined by the division `u_dq = ū / v`.

pub mod exosystem;
pub mod imc;
pub mod sylvester;
pub mod synthesis;
pub mod voltage;

pub use exosystem::Exosystem;
pub use imc::{ImcState, SampledImc};
pub use synthesis::{synthesize_gains, FgChoice, GainSynthesis, SynthesisOptions};
pub use voltage::{VoltageController, VoltageGains, VoltageOutput, WarmupPolicy};

use crate::error::{Result, SafError};
use crate::plant::Vec2;

/// `u_dq = ū / v`, guarded by the controllability floor `v ≥ v_floor`.
pub fn divide_by_voltage(u_bar: &Vec2, v: f64, v_floor: f64, t: f64) -> Result<Vec2> {
    if !(v >= v_floor) {
        return Err(SafError::Controllability { t, v, floor: v_floor });
    }
    Ok(u_bar / v)
}
