use crate::error::{Result, SafError};

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Fixed-length history; `push` returns the evicted sample.
#[derive(Debug, Clone)]
struct Ring {
    buf: Vec<f64>,
    head: usize,
}

impl Ring {
    fn new(n: usize) -> Self {
        Ring { buf: vec![0.0; n], head: 0 }
    }
    fn push(&mut self, x: f64) -> f64 {
        let old = std::mem::replace(&mut self.buf[self.head], x);
        self.head = (self.head + 1) % self.buf.len();
        old
    }
    /// Sample pushed `lag` pushes ago (`lag = 1` is the latest).
    fn lagged(&self, lag: usize) -> f64 {
        let n = self.buf.len();
        self.buf[(self.head + n - lag) % n]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoltageGains {
    pub k_p: f64,
    pub k_i: f64,
    pub epsilon: f64,
    /// Line period `T` (s).
    pub period: f64,
    /// Controller rate `f_s` (Hz).
    pub f_s: f64,
}

/// Behaviour of `η` while the one-period buffers are still filling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WarmupPolicy {
    /// `η` follows the law from the first sample on zero-filled buffers.
    Active,
    /// `η = 0` until one full period has been recorded.
    Clamp,
    /// The `z̃` window starts full of the first sample, as if the voltage
    /// had been constant before `t = 0`.
    Seed,
    /// As `Active` internally, but the emitted `η` is scaled by `k/n` over
    /// the first period so the reference does not step at `t = 0`.
    #[default]
    Ramp,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VoltageOutput {
    pub eta: f64,
    /// Running one-period mean of `η`.
    pub eta_a: f64,
    pub z_a: f64,
    pub z_a_dot: f64,
    /// Averaged PI prediction `−K_P z̃_a + θ`.
    pub eta_a_pi: f64,
    pub theta: f64,
    /// `η(t − T) − η_a(t − T/2)`.
    pub d_eta: f64,
    pub warming_up: bool,
}

/// Averaging DC-link regulator acting on `z̃ = v² − V*²` at rate `f_s`.
#[derive(Debug, Clone)]
pub struct VoltageController {
    gains: VoltageGains,
    policy: WarmupPolicy,
    n: usize,
    z_window: Ring,
    z_sum: CompensatedSum,
    eta_window: Ring,
    eta_sum: CompensatedSum,
    eta_a_history: Ring,
    theta: f64,
    samples: usize,
}

impl VoltageController {
    pub fn new(gains: VoltageGains, policy: WarmupPolicy) -> Result<Self> {
        for (name, v) in [("K_P", gains.k_p), ("K_I", gains.k_i)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SafError::param(if name == "K_P" { "K_P" } else { "K_I" }, format!("must be positive, got {v}")));
            }
        }
        let n = (gains.period * gains.f_s).round() as usize;
        if n < 2 {
            return Err(SafError::param("f_s", "must give at least two samples per period"));
        }
        Ok(VoltageController {
            gains,
            policy,
            n,
            z_window: Ring::new(n),
            z_sum: CompensatedSum::default(),
            eta_window: Ring::new(n),
            eta_sum: CompensatedSum::default(),
            eta_a_history: Ring::new(n),
            theta: 0.0,
            samples: 0,
        })
    }

    /// Samples per period.
    pub fn window(&self) -> usize {
        self.n
    }

    pub fn gains(&self) -> &VoltageGains {
        &self.gains
    }

    /// Pushes one sample of `z̃` and returns the new control output.
    pub fn update(&mut self, z_tilde: f64) -> VoltageOutput {
        let g = self.gains;
        let t = g.period;
        let dt = 1.0 / g.f_s;
        if self.samples == 0 && self.policy == WarmupPolicy::Seed {
            for _ in 0..self.n {
                self.z_window.push(z_tilde);
                self.z_sum.add(z_tilde);
            }
        }
        let oldest = self.z_window.push(z_tilde);
        self.z_sum.add(z_tilde);
        self.z_sum.add(-oldest);
        let z_a = self.z_sum.value() / self.n as f64;
        let z_a_dot = (z_tilde - oldest) / t;
        self.theta += -g.epsilon * g.k_i * z_a * dt;

        let warming_up = self.samples < self.n;
        let half = self.n / 2;
        let eta_a_half = if half == 0 { 0.0 } else { self.eta_a_history.lagged(half) };
        let eta = match (self.policy, warming_up) {
            (WarmupPolicy::Clamp, true) => 0.0,
            _ => -t * g.k_p * z_a_dot - g.epsilon * t * g.k_i * z_a + eta_a_half,
        };
        let emitted = match (self.policy, warming_up) {
            (WarmupPolicy::Ramp, true) => eta * (self.samples + 1) as f64 / self.n as f64,
            _ => eta,
        };
        let eta_old = self.eta_window.push(eta);
        self.eta_sum.add(eta);
        self.eta_sum.add(-eta_old);
        let eta_a = self.eta_sum.value() / self.n as f64;
        self.eta_a_history.push(eta_a);
        self.samples += 1;
        VoltageOutput {
            eta: emitted,
            eta_a,
            z_a,
            z_a_dot,
            eta_a_pi: -g.k_p * z_a + self.theta,
            theta: self.theta,
            d_eta: eta_old - eta_a_half,
            warming_up,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn gains() -> VoltageGains {
        VoltageGains {
            k_p: 0.3,
            k_i: 3.7,
            epsilon: 3.0 / (4400e-6 * 310.0 * 310.0),
            period: 0.02,
            f_s: 7000.0,
        }
    }

    #[test]
    fn window_is_one_period() {
        let c = VoltageController::new(gains(), WarmupPolicy::Active).unwrap();
        assert_eq!(c.window(), 140);
    }

    #[test]
    fn zero_error_gives_zero_output() {
        let mut c = VoltageController::new(gains(), WarmupPolicy::Active).unwrap();
        for _ in 0..1000 {
            let o = c.update(0.0);
            assert_eq!(o.eta, 0.0);
        }
    }

    #[test]
    fn periodic_error_is_annihilated() {
        let mut c = VoltageController::new(gains(), WarmupPolicy::Active).unwrap();
        let amp = 1e4;
        let mut last = VoltageOutput::default();
        for k in 0..(3 * 140) {
            last = c.update(amp * (2.0 * PI * k as f64 / 140.0 + 0.3).sin());
        }
        assert!(last.z_a.abs() < 1e-6 * amp);
    }

    #[test]
    fn ramp_has_unit_average_slope() {
        let mut c = VoltageController::new(gains(), WarmupPolicy::Active).unwrap();
        let dt = 1.0 / 7000.0;
        let mut o = VoltageOutput::default();
        for k in 0..400 {
            o = c.update(k as f64 * dt);
        }
        assert!((o.z_a_dot - 1.0).abs() < 1e-9);
    }

    #[test]
    fn warmup_flag_and_clamp() {
        let mut a = VoltageController::new(gains(), WarmupPolicy::Clamp).unwrap();
        let mut b = VoltageController::new(gains(), WarmupPolicy::Active).unwrap();
        for k in 0..141 {
            let oa = a.update(1e3);
            let ob = b.update(1e3);
            assert_eq!(oa.warming_up, k < 140);
            if k < 140 {
                assert_eq!(oa.eta, 0.0);
                assert!(ob.eta != 0.0);
            }
        }
    }

    #[test]
    fn correction_term_is_zero_mean_on_periodic_history() {
        // Feed a steady T-periodic η history: with η_a constant the stored
        // samples minus their mean integrate to zero over one window.
        let mut c = VoltageController::new(gains(), WarmupPolicy::Active).unwrap();
        c.eta_window = Ring::new(140);
        for k in 0..140 {
            let e = 24.0 + 3.0 * (2.0 * PI * k as f64 / 140.0).cos();
            c.eta_window.push(e);
            c.eta_sum.add(e);
        }
        for _ in 0..140 {
            c.eta_a_history.push(24.0);
        }
        let mut ds = Vec::new();
        for k in 0..140 {
            // Replay the same periodic signal through the window directly.
            let e = 24.0 + 3.0 * (2.0 * PI * k as f64 / 140.0).cos();
            let old = c.eta_window.push(e);
            ds.push(old - c.eta_a_history.lagged(70));
        }
        let mean = ds.iter().sum::<f64>() / 140.0;
        let peak = ds.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        assert!(mean.abs() < 1e-9 * peak);
    }

    #[test]
    fn compensated_sum_does_not_drift() {
        let mut s = CompensatedSum::default();
        let mut naive = 0.0;
        for k in 0..1_000_000u64 {
            let x = 1e4 * ((k % 140) as f64 / 140.0 * 2.0 * PI).sin() + 0.1;
            s.add(x);
            s.add(-x);
            naive += x;
            naive -= x;
        }
        assert_eq!(s.value(), 0.0);
        let _ = naive;
    }
}
