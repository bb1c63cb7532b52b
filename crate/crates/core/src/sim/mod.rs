//! Closed-loop runs of the filter, spectra and compensation tables.

pub mod export;
pub mod integrator;
pub mod pwm;
pub mod report;
pub mod run;
pub mod scenario;
pub mod spectrum;

pub use report::{compensation_report, CompensationRow};
pub use run::{run_scenario, RunResult};
pub use scenario::{ControllerConfig, Mode, Scenario};
pub use spectrum::spectrum;
