use std::fmt;
use std::str::FromStr;

use crate::control::{FgChoice, WarmupPolicy};
use crate::error::{Result, SafError};
use crate::load::{preset_harmonics, LoadSpectrum, PRESETS};
use crate::plant::PlantParams;
use crate::sim::pwm::Modulator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// Controller and plant integrated together at a fine step.
    #[default]
    Continuous,
    /// Controller at `f_s`, average bridge output held between samples.
    Sampled,
    /// Controller at `f_s`, bridge switched by a triangular-carrier PWM.
    SampledPwm,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Continuous => "continuous",
            Mode::Sampled => "sampled",
            Mode::SampledPwm => "sampled_pwm",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = SafError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "continuous" => Ok(Mode::Continuous),
            "sampled" => Ok(Mode::Sampled),
            "sampled_pwm" => Ok(Mode::SampledPwm),
            other => Err(SafError::Input(format!(
                "unknown mode `{other}` (expected continuous, sampled or sampled_pwm)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerConfig {
    /// Synchronous-frame harmonic orders of the internal model.
    pub orders: Vec<u32>,
    pub k_p: f64,
    pub k_i: f64,
    /// Overall power-loop gain; `None` selects twice the minimal verified gain.
    pub k: Option<f64>,
    pub k_d: f64,
    pub k_q: f64,
    pub fg: FgChoice,
    pub warmup: WarmupPolicy,
    /// Division guard on the DC-link voltage (V).
    pub v_floor: f64,
    /// `false` runs the plant open loop with `u_dq = 0`.
    pub enabled: bool,
    /// Start `ξ` at the resting state that cancels the mains drive, instead
    /// of zero.
    pub preload: bool,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            orders: vec![6, 12],
            k_p: 0.3,
            k_i: 3.7,
            k: Some(200.0),
            k_d: 1.0,
            k_q: 1.0,
            fg: FgChoice::Diagonal,
            warmup: WarmupPolicy::Ramp,
            v_floor: 100.0,
            enabled: true,
            preload: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub params: PlantParams,
    pub spectrum: LoadSpectrum,
    pub controller: ControllerConfig,
    pub mode: Mode,
    /// Simulated time (s).
    pub duration: f64,
    /// Plant integration step (s); `None` picks the mode default.
    pub step: Option<f64>,
    /// Controller sampling rate (Hz).
    pub f_s: f64,
    pub v0: f64,
    /// DC-link window `[v_m, v_M]` (V).
    pub v_min: f64,
    pub v_max: f64,
    /// Integration steps between recorded samples; `None` picks the mode
    /// default.
    pub decimation: Option<usize>,
    /// Trailing periods used for spectra.
    pub analysis_periods: usize,
    pub modulator: Modulator,
    /// Phase-current frequencies reported in the compensation table (Hz).
    pub compensation_hz: Vec<f64>,
}

/// Power-loop gain of the sampled presets. `K/L` stays well below `2/T_s`
/// so the held loop keeps its spectral radius under one at 7 kHz.
pub const SAMPLED_K: f64 = 30.0;

/// Power-loop gain of the continuous presets.
pub const CONTINUOUS_K: f64 = 200.0;

/// Preset gain for a mode.
pub fn preset_k(mode: Mode) -> f64 {
    if mode == Mode::Continuous {
        CONTINUOUS_K
    } else {
        SAMPLED_K
    }
}

const REFERENCE_PLANT: (f64, f64, f64, f64, f64) = (3.3e-3, 0.12, 4400e-6, 310.0, 50.0);

/// Reference plant: 3.3 mH, 0.12 Ω, 4400 µF on 310 V, 50 Hz mains.
pub fn reference_plant() -> PlantParams {
    let (l, r, c, v, f) = REFERENCE_PLANT;
    PlantParams::new(l, r, c, v, f).expect("valid constants")
}

impl Scenario {
    /// Preset scenario on the reference plant for a named load preset.
    pub fn preset(name: &str, mode: Mode) -> Result<Self> {
        let harmonics = preset_harmonics(name)
            .ok_or_else(|| SafError::Input(format!("unknown load preset `{name}` (expected one of {PRESETS:?})")))?;
        let params = reference_plant();
        let spectrum = LoadSpectrum::from_phase_harmonics(params.v_m(), &harmonics)?;
        let mut sc = Self::base(name, spectrum, mode);
        sc.compensation_hz = harmonics
            .iter()
            .filter(|h| h.order > 1)
            .map(|h| h.order as f64 * params.f_m())
            .collect();
        Ok(sc)
    }

    fn base(name: &str, spectrum: LoadSpectrum, mode: Mode) -> Self {
        let params = reference_plant();
        let f = params.f_m();
        let controller = ControllerConfig {
            k: Some(preset_k(mode)),
            ..Default::default()
        };
        Scenario {
            name: name.into(),
            params,
            spectrum,
            controller,
            mode,
            duration: 30.0 / f,
            step: None,
            f_s: 7000.0,
            v0: 850.0,
            v_min: 700.0,
            v_max: 900.0,
            decimation: None,
            analysis_periods: 10,
            modulator: Modulator::default(),
            compensation_hz: Vec::new(),
        }
    }

    /// 10 A phase harmonics at the 7th and 13th multiples of 50 Hz.
    pub fn two_harmonics() -> Self {
        Self::preset("two_harmonics", Mode::Continuous).expect("known preset")
    }

    /// Six-pulse diode bridge load under PWM.
    pub fn diode_bridge() -> Self {
        Self::preset("diode_bridge", Mode::SampledPwm).expect("known preset")
    }

    /// Same scenario under another mode, picking the mode's preset gain.
    pub fn with_mode(mut self, mode: Mode) -> Self {
        if self.controller.k == Some(preset_k(self.mode)) {
            self.controller.k = Some(preset_k(mode));
        }
        self.mode = mode;
        self
    }

    pub fn sample_period(&self) -> f64 {
        1.0 / self.f_s
    }

    /// `V*² = (v_m² + v_M²)/2`.
    pub fn v_ref_sq(&self) -> f64 {
        0.5 * (self.v_min * self.v_min + self.v_max * self.v_max)
    }

    pub fn step(&self) -> f64 {
        self.step.unwrap_or(match self.mode {
            Mode::Continuous => 1e-6,
            _ => self.sample_period() / 20.0,
        })
    }

    /// Integration steps per controller sample in the sampled modes.
    pub fn substeps(&self) -> usize {
        (self.sample_period() / self.step()).round() as usize
    }

    pub fn decimation(&self) -> usize {
        self.decimation.unwrap_or(match self.mode {
            Mode::Continuous => 10,
            _ => self.substeps(),
        })
    }

    /// Recorded samples per line period.
    pub fn samples_per_period(&self) -> usize {
        (self.params.period() / (self.step() * self.decimation() as f64)).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(SafError::param(name, format!("must be strictly positive, got {v}")))
            }
        };
        pos("duration", self.duration)?;
        pos("f_s", self.f_s)?;
        pos("step", self.step())?;
        pos("v0", self.v0)?;
        if !(self.v_min > 0.0 && self.v_min < self.v_max) {
            return Err(SafError::param("v_m", format!("need 0 < v_m < v_M, got [{}, {}]", self.v_min, self.v_max)));
        }
        if self.v0 < self.controller.v_floor {
            return Err(SafError::param("v0", "below the controllability floor"));
        }
        let dec = self.decimation();
        if dec == 0 {
            return Err(SafError::param("decimation", "must be >= 1"));
        }
        if self.mode != Mode::Continuous {
            let ratio = self.sample_period() / self.step();
            if (ratio - ratio.round()).abs() > 1e-9 * ratio || ratio.round() < 1.0 {
                return Err(SafError::param("step", format!("must divide the sampling period 1/f_s (ratio {ratio})")));
            }
        }
        let spp = self.params.period() / (self.step() * dec as f64);
        if (spp - spp.round()).abs() > 1e-6 * spp {
            return Err(SafError::param(
                "decimation",
                format!("recorded samples per period must be an integer, got {spp}"),
            ));
        }
        let periods = self.duration / self.params.period();
        if self.analysis_periods == 0 || (periods + 1e-9) < self.analysis_periods as f64 {
            return Err(SafError::param("analysis_periods", "must be >= 1 and fit in the run"));
        }
        Ok(())
    }
}
