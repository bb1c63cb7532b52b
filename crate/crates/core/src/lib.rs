//! Design and simulation toolkit for three-phase, three-wire shunt active
//! filters built on an AC/DC boost bridge with a floating DC-link capacitor.
//!
//! The crate covers the whole design loop:
//!
//! - [`plant`]: coordinate transforms, switch geometry and the converter
//!   model in synchronous power variables.
//! - [`load`]: harmonic load descriptions, the compensation reference and the
//!   power-loss bias that keeps the DC link balanced.
//! - [`sizing`]: inductor, voltage window and capacitor selection, including
//!   the worst case over every load the switches can carry.
//! - [`control`]: internal-model power controller synthesis and the
//!   averaging DC-link voltage regulator.
//! - [`sim`]: closed-loop runs (continuous, sampled, sampled with PWM),
//!   spectra and compensation tables.
//! - [`config`] and [`cli`]: the scenario file format and the `size`,
//!   `simulate` and `analyze` commands.

pub mod cli;
pub mod config;
pub mod control;
pub mod error;
pub mod linalg;
pub mod load;
pub mod plant;
pub mod sim;
pub mod sizing;

pub use error::{Result, SafError};
