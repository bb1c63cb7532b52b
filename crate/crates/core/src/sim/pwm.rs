use crate::plant::{SwitchVector, Vec3};

/// Common-mode offset added to `u_abc` before comparing with the carrier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Modulator {
    /// Plain `1/2` offset. Linear while every `|u_i| ≤ 1/2`.
    #[default]
    Sinusoidal,
    /// `1/2 − (max + min)/2`, which centres the legs and reaches the whole
    /// switch hexagon.
    Centered,
}

impl Modulator {
    pub fn as_str(&self) -> &'static str {
        match self {
            Modulator::Sinusoidal => "sinusoidal",
            Modulator::Centered => "centered",
        }
    }

    pub fn offset(&self, u_abc: &Vec3) -> f64 {
        match self {
            Modulator::Sinusoidal => 0.5,
            Modulator::Centered => 0.5 - 0.5 * (u_abc.max() + u_abc.min()),
        }
    }
}

/// Per-leg duties `u_abc + offset` clamped to `[0, 1]`, with the number of
/// legs that needed clamping.
pub fn duties(u_abc: &Vec3, m: Modulator) -> ([f64; 3], usize) {
    let off = m.offset(u_abc);
    let mut d = [0.0; 3];
    let mut clamped = 0;
    for i in 0..3 {
        let raw = u_abc[i] + off;
        d[i] = raw.clamp(0.0, 1.0);
        // Rounding in the centred offset can land a hair outside [0, 1].
        if (d[i] - raw).abs() > 1e-12 {
            clamped += 1;
        }
    }
    (d, clamped)
}

/// Symmetric triangular carrier, 1 at the period edges and 0 at mid-period.
pub fn carrier(phase: f64) -> f64 {
    (2.0 * phase - 1.0).abs()
}

/// Switch vector emitted for the duties `d` at `carrier_phase ∈ [0, 1)`:
/// leg `i` is on iff its duty reaches the carrier.
pub fn switch_at(d: &[f64; 3], carrier_phase: f64) -> SwitchVector {
    let c = carrier(carrier_phase);
    SwitchVector::new(d.map(|di| if di >= c { 1.0 } else { 0.0 })).expect("binary legs")
}

/// Switch vector for the command `u_abc` under the default modulator.
pub fn pwm_actuate(u_abc: &Vec3, carrier_phase: f64) -> SwitchVector {
    let (d, _) = duties(u_abc, Modulator::Sinusoidal);
    switch_at(&d, carrier_phase)
}

/// Switching instants within one carrier period, as fractions of the
/// period: leg `i` is on over `[(1 − d_i)/2, (1 + d_i)/2]`.
pub fn switching_edges(d: &[f64; 3]) -> Vec<f64> {
    let mut e: Vec<f64> = d
        .iter()
        .flat_map(|&di| [(1.0 - di) / 2.0, (1.0 + di) / 2.0])
        .filter(|&p| p > 0.0 && p < 1.0)
        .collect();
    e.sort_by(f64::total_cmp);
    e.dedup();
    e
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::{clarke, inverse_clarke, switch_to_uabc, Vec2, SQRT_3};

    #[test]
    fn midpoint_and_full_duty() {
        let (d, c) = duties(&Vec3::zeros(), Modulator::Sinusoidal);
        assert_eq!((d, c), ([0.5; 3], 0));
        let on = (0..1000)
            .filter(|&k| pwm_actuate(&Vec3::zeros(), (k as f64 + 0.5) / 1000.0).legs()[0] == 1.0)
            .count();
        assert_eq!(on, 500);
        let u = Vec3::new(0.5, -0.25, -0.25);
        assert!((0..100).all(|k| pwm_actuate(&u, k as f64 / 100.0).legs()[0] == 1.0));
    }

    fn sampled_average(u_ab: &Vec2, m: Modulator, steps: usize) -> Vec2 {
        let (d, _) = duties(&inverse_clarke(u_ab), m);
        let mut acc = Vec2::zeros();
        for k in 0..steps {
            acc += switch_to_uabc(&switch_at(&d, (k as f64 + 0.5) / steps as f64)).1;
        }
        acc / steps as f64
    }

    #[test]
    fn period_average_reproduces_the_command() {
        // A hexagon vertex needs the centred offset.
        let vertex = Vec2::new(1.0 / 3.0, 1.0 / SQRT_3);
        let avg = sampled_average(&vertex, Modulator::Centered, 20);
        assert!((avg - vertex).norm() <= 0.02 * vertex.norm(), "{avg:?}");
        let (_, clamped) = duties(&inverse_clarke(&vertex), Modulator::Sinusoidal);
        assert!(clamped > 0);
    }

    #[test]
    fn edges_bound_the_on_intervals() {
        let u = inverse_clarke(&Vec2::new(0.2, -0.1));
        let (d, _) = duties(&u, Modulator::Sinusoidal);
        let e = switching_edges(&d);
        assert_eq!(e.len(), 6);
        // Exact average over the piecewise-constant pattern.
        let mut pts = vec![0.0];
        pts.extend(&e);
        pts.push(1.0);
        let mut avg = Vec2::zeros();
        for w in pts.windows(2) {
            let s = pwm_actuate(&u, 0.5 * (w[0] + w[1]));
            avg += switch_to_uabc(&s).1 * (w[1] - w[0]);
        }
        assert!((avg - clarke(&u).unwrap()).norm() < 1e-12);
    }
}
