//! Scenario files: one TOML document with `[plant]`, `[load]`,
//! `[controller]`, `[sizing]` and `[simulation]` sections. All quantities
//! are SI. Unknown keys are rejected.
//!
//! ```toml
//! [plant]
//! L = 3.3e-3      # H
//! R = 0.12        # ohm
//! C = 4400e-6     # F
//! V_m = 310.0     # V, phase peak
//! f_m = 50.0      # Hz
//!
//! [load]
//! preset = "two_harmonics"
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::control::{FgChoice, WarmupPolicy};
use crate::error::{Result, SafError};
use crate::load::{preset_harmonics, LoadSpectrum, PhaseHarmonic, PRESETS};
use crate::plant::PlantParams;
use crate::sim::pwm::Modulator;
use crate::sim::scenario::{preset_k, ControllerConfig, Mode, Scenario};
use crate::sizing::{SizingInputs, WorstCaseOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub plant: PlantSection,
    #[serde(default)]
    pub load: LoadSection,
    #[serde(default)]
    pub controller: ControllerSection,
    #[serde(default)]
    pub sizing: SizingSection,
    #[serde(default)]
    pub simulation: SimulationSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSection {
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "V_m")]
    pub v_m: f64,
    pub f_m: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, rename = "harmonic", skip_serializing_if = "Vec::is_empty")]
    pub harmonics: Vec<HarmonicEntry>,
}

/// One phase-current harmonic; `order = 1` is the fundamental.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarmonicEntry {
    pub order: u32,
    /// Peak amplitude (A).
    pub amplitude: f64,
    /// Phase of phase `a` (rad).
    #[serde(default)]
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerSection {
    /// Synchronous-frame orders; defaults to those of the load.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orders: Option<Vec<u32>>,
    #[serde(rename = "K_P")]
    pub k_p: f64,
    #[serde(rename = "K_I")]
    pub k_i: f64,
    /// Defaults to 200 in continuous mode and 30 in the sampled modes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    pub k_d: f64,
    pub k_q: f64,
    /// `"diagonal"` or `"companion"`.
    pub fg: String,
    /// `"ramp"`, `"active"`, `"clamp"` or `"seed"`.
    pub warmup: String,
    pub v_floor: f64,
    pub preload: bool,
    pub enabled: bool,
}

impl Default for ControllerSection {
    fn default() -> Self {
        let c = ControllerConfig::default();
        ControllerSection {
            orders: None,
            k_p: c.k_p,
            k_i: c.k_i,
            k: None,
            k_d: c.k_d,
            k_q: c.k_q,
            fg: "diagonal".into(),
            warmup: "ramp".into(),
            v_floor: c.v_floor,
            preload: c.preload,
            enabled: c.enabled,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SizingSection {
    /// `"load"` or `"switches"`.
    pub route: String,
    /// Defaults to `simulation.f_s`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_pwm: Option<f64>,
    #[serde(rename = "delta_I_Mpp")]
    pub delta_i_mpp: f64,
    /// Defaults to `simulation.v_M`.
    #[serde(default, rename = "v_M", skip_serializing_if = "Option::is_none")]
    pub v_max: Option<f64>,
    #[serde(rename = "I_max")]
    pub i_max: f64,
    /// Chosen lower DC bound; absent picks the oversized bound.
    #[serde(default, rename = "v_m", skip_serializing_if = "Option::is_none")]
    pub v_min: Option<f64>,
    pub safety_factor: f64,
    /// Orders for the switches-based route; defaults to the controller's.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orders: Option<Vec<u32>>,
    pub starts: usize,
    pub budget: usize,
    pub seed: u64,
}

impl Default for SizingSection {
    fn default() -> Self {
        let w = WorstCaseOptions::default();
        SizingSection {
            route: "load".into(),
            f_pwm: None,
            delta_i_mpp: 6.49,
            v_max: None,
            i_max: 70.0,
            v_min: None,
            safety_factor: 1.15,
            orders: None,
            starts: w.starts,
            budget: w.budget,
            seed: w.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    /// `"continuous"`, `"sampled"` or `"sampled_pwm"`.
    pub mode: String,
    /// Simulated line periods.
    pub periods: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    pub f_s: f64,
    pub v0: f64,
    #[serde(rename = "v_m")]
    pub v_min: f64,
    #[serde(rename = "v_M")]
    pub v_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decimation: Option<usize>,
    pub analysis_periods: usize,
    /// `"sinusoidal"` or `"centered"`.
    pub modulator: String,
}

impl Default for SimulationSection {
    fn default() -> Self {
        SimulationSection {
            mode: "continuous".into(),
            periods: 30.0,
            step: None,
            f_s: 7000.0,
            v0: 850.0,
            v_min: 700.0,
            v_max: 900.0,
            decimation: None,
            analysis_periods: 10,
            modulator: "sinusoidal".into(),
        }
    }
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(SafError::Config(format!("`{key}` must be strictly positive, got {v}")))
    }
}

fn non_negative(key: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(SafError::Config(format!("`{key}` must be non-negative, got {v}")))
    }
}

fn choice<T>(key: &str, value: &str, options: &[(&str, T)]) -> Result<T>
where
    T: Copy,
{
    options
        .iter()
        .find(|(name, _)| *name == value)
        .map(|(_, v)| *v)
        .ok_or_else(|| {
            let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
            SafError::Config(format!("`{key}` = {value:?} is not one of {names:?}"))
        })
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ConfigFile = toml::from_str(text).map_err(|e| SafError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| SafError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text).map_err(|e| match e {
            SafError::Config(m) => SafError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Checks every key's invariant, naming the offending key.
    pub fn validate(&self) -> Result<()> {
        let p = &self.plant;
        positive("plant.L", p.l)?;
        non_negative("plant.R", p.r)?;
        positive("plant.C", p.c)?;
        positive("plant.V_m", p.v_m)?;
        positive("plant.f_m", p.f_m)?;

        let l = &self.load;
        match (&l.preset, l.harmonics.is_empty()) {
            (Some(_), false) => {
                return Err(SafError::Config("`load.preset` and `load.harmonic` are mutually exclusive".into()))
            }
            (Some(name), true) if preset_harmonics(name).is_none() => {
                return Err(SafError::Config(format!("`load.preset` = {name:?} is not one of {PRESETS:?}")))
            }
            _ => {}
        }
        for (i, h) in l.harmonics.iter().enumerate() {
            if h.order == 0 {
                return Err(SafError::Config(format!("`load.harmonic[{i}].order` must be >= 1")));
            }
            non_negative(&format!("load.harmonic[{i}].amplitude"), h.amplitude)?;
            if !h.phase.is_finite() {
                return Err(SafError::Config(format!("`load.harmonic[{i}].phase` must be finite")));
            }
        }

        let c = &self.controller;
        positive("controller.K_P", c.k_p)?;
        positive("controller.K_I", c.k_i)?;
        if let Some(k) = c.k {
            positive("controller.k", k)?;
        }
        positive("controller.k_d", c.k_d)?;
        positive("controller.k_q", c.k_q)?;
        positive("controller.v_floor", c.v_floor)?;
        self.fg()?;
        self.warmup()?;

        let s = &self.sizing;
        choice("sizing.route", &s.route, &[("load", ()), ("switches", ())])?;
        if let Some(f) = s.f_pwm {
            positive("sizing.f_pwm", f)?;
        }
        positive("sizing.delta_I_Mpp", s.delta_i_mpp)?;
        if let Some(v) = s.v_max {
            positive("sizing.v_M", v)?;
        }
        positive("sizing.I_max", s.i_max)?;
        if let Some(v) = s.v_min {
            positive("sizing.v_m", v)?;
        }
        positive("sizing.safety_factor", s.safety_factor)?;
        if s.starts == 0 {
            return Err(SafError::Config("`sizing.starts` must be >= 1".into()));
        }
        if s.budget == 0 {
            return Err(SafError::Config("`sizing.budget` must be >= 1".into()));
        }

        let m = &self.simulation;
        self.mode()?;
        self.modulator()?;
        positive("simulation.periods", m.periods)?;
        if let Some(h) = m.step {
            positive("simulation.step", h)?;
        }
        positive("simulation.f_s", m.f_s)?;
        positive("simulation.v0", m.v0)?;
        positive("simulation.v_m", m.v_min)?;
        positive("simulation.v_M", m.v_max)?;
        if m.v_min >= m.v_max {
            return Err(SafError::Config(format!(
                "`simulation.v_m` = {} must be below `simulation.v_M` = {}",
                m.v_min, m.v_max
            )));
        }
        if m.decimation == Some(0) {
            return Err(SafError::Config("`simulation.decimation` must be >= 1".into()));
        }
        if m.analysis_periods == 0 {
            return Err(SafError::Config("`simulation.analysis_periods` must be >= 1".into()));
        }
        Ok(())
    }

    pub fn mode(&self) -> Result<Mode> {
        choice(
            "simulation.mode",
            &self.simulation.mode,
            &[("continuous", Mode::Continuous), ("sampled", Mode::Sampled), ("sampled_pwm", Mode::SampledPwm)],
        )
    }

    fn fg(&self) -> Result<FgChoice> {
        choice(
            "controller.fg",
            &self.controller.fg,
            &[("diagonal", FgChoice::Diagonal), ("companion", FgChoice::Companion)],
        )
    }

    fn warmup(&self) -> Result<WarmupPolicy> {
        choice(
            "controller.warmup",
            &self.controller.warmup,
            &[
                ("ramp", WarmupPolicy::Ramp),
                ("active", WarmupPolicy::Active),
                ("clamp", WarmupPolicy::Clamp),
                ("seed", WarmupPolicy::Seed),
            ],
        )
    }

    fn modulator(&self) -> Result<Modulator> {
        choice(
            "simulation.modulator",
            &self.simulation.modulator,
            &[("sinusoidal", Modulator::Sinusoidal), ("centered", Modulator::Centered)],
        )
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.simulation.mode = mode.as_str().into();
    }

    pub fn params(&self) -> Result<PlantParams> {
        let p = &self.plant;
        PlantParams::new(p.l, p.r, p.c, p.v_m, p.f_m)
    }

    /// Phase harmonics of the load, or an error naming the missing section.
    pub fn phase_harmonics(&self) -> Result<Vec<PhaseHarmonic>> {
        if let Some(name) = &self.load.preset {
            return preset_harmonics(name)
                .ok_or_else(|| SafError::Config(format!("`load.preset` = {name:?} is not one of {PRESETS:?}")));
        }
        if self.load.harmonics.is_empty() {
            return Err(SafError::Config(
                "this command needs a load: set `load.preset` or add `[[load.harmonic]]` entries".into(),
            ));
        }
        Ok(self
            .load
            .harmonics
            .iter()
            .map(|h| PhaseHarmonic::new(h.order, h.amplitude, h.phase))
            .collect())
    }

    pub fn spectrum(&self) -> Result<LoadSpectrum> {
        LoadSpectrum::from_phase_harmonics(self.plant.v_m, &self.phase_harmonics()?)
    }

    /// Phase-current frequencies of the non-fundamental load harmonics (Hz).
    pub fn compensation_hz(&self) -> Result<Vec<f64>> {
        let mut hz: Vec<f64> = self
            .phase_harmonics()?
            .iter()
            .filter(|h| h.order > 1 && h.amplitude > 0.0)
            .map(|h| h.order as f64 * self.plant.f_m)
            .collect();
        hz.sort_by(f64::total_cmp);
        hz.dedup();
        Ok(hz)
    }

    /// Controller orders: explicit, else those carried by the load.
    pub fn controller_orders(&self) -> Result<Vec<u32>> {
        match &self.controller.orders {
            Some(o) => Ok(o.clone()),
            None => Ok(self.spectrum()?.orders()),
        }
    }

    pub fn scenario(&self) -> Result<Scenario> {
        let mode = self.mode()?;
        let params = self.params()?;
        let c = &self.controller;
        let m = &self.simulation;
        let controller = ControllerConfig {
            orders: self.controller_orders()?,
            k_p: c.k_p,
            k_i: c.k_i,
            k: Some(c.k.unwrap_or(preset_k(mode))),
            k_d: c.k_d,
            k_q: c.k_q,
            fg: self.fg()?,
            warmup: self.warmup()?,
            v_floor: c.v_floor,
            enabled: c.enabled,
            preload: c.preload,
        };
        let sc = Scenario {
            name: self.load.preset.clone().unwrap_or_else(|| "custom".into()),
            duration: m.periods * params.period(),
            params,
            spectrum: self.spectrum()?,
            controller,
            mode,
            step: m.step,
            f_s: m.f_s,
            v0: m.v0,
            v_min: m.v_min,
            v_max: m.v_max,
            decimation: m.decimation,
            analysis_periods: m.analysis_periods,
            modulator: self.modulator()?,
            compensation_hz: self.compensation_hz()?,
        };
        sc.validate()?;
        Ok(sc)
    }

    pub fn sizing_inputs(&self) -> SizingInputs {
        let s = &self.sizing;
        SizingInputs {
            f_pwm: s.f_pwm.unwrap_or(self.simulation.f_s),
            delta_i_mpp: s.delta_i_mpp,
            v_max: s.v_max.unwrap_or(self.simulation.v_max),
            i_max: s.i_max,
            v_min: s.v_min,
            safety_factor: s.safety_factor,
        }
    }

    pub fn worst_case_options(&self) -> WorstCaseOptions {
        WorstCaseOptions {
            starts: self.sizing.starts,
            budget: self.sizing.budget,
            seed: self.sizing.seed,
            ..Default::default()
        }
    }

    pub fn sizing_orders(&self) -> Result<Vec<u32>> {
        match &self.sizing.orders {
            Some(o) => Ok(o.clone()),
            None => self.controller_orders(),
        }
    }

    /// The configuration with every defaulted value written out, so that
    /// parsing the echo reproduces the run.
    pub fn resolved(&self) -> Result<ConfigFile> {
        let mut r = self.clone();
        let mode = self.mode()?;
        if self.load.preset.is_some() || !self.load.harmonics.is_empty() {
            r.controller.orders = Some(self.controller_orders()?);
            r.sizing.orders = Some(self.sizing_orders()?);
        }
        r.controller.k = Some(self.controller.k.unwrap_or(preset_k(mode)));
        let inputs = self.sizing_inputs();
        r.sizing.f_pwm = Some(inputs.f_pwm);
        r.sizing.v_max = Some(inputs.v_max);
        Ok(r)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }
}
