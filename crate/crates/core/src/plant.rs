//! Converter model: coordinate transforms, switch geometry and the state
//! derivative in synchronous power variables.
//!
//! Power variables are filter currents rotated into the frame aligned with
//! the mains voltage vector and scaled by the mains amplitude `V_m`, so
//! `x_d` carries real power content and `x_q` virtual (reactive) content.
//! The same scaled rotation maps the αβ modulation vector to `u_dq`, which
//! therefore has units of volts.

use nalgebra::{Vector2, Vector3};

use crate::error::{Result, SafError};

pub type Vec2 = Vector2<f64>;
pub type Vec3 = Vector3<f64>;

pub const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// Radius of the circle inscribed in the modulation hexagon.
pub fn inscribed_radius() -> f64 {
    1.0 / SQRT_3
}

/// Relative tolerance on `a + b + c = 0` for three-wire quantities.
pub const ZERO_SUM_TOL: f64 = 1e-9;

/// Electrical constants of the filter and the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantParams {
    inductance: f64,
    resistance: f64,
    capacitance: f64,
    mains_amplitude: f64,
    omega_m: f64,
}

impl PlantParams {
    /// `l` (H), `r` (Ω), `c` (F), mains phase amplitude `v_m` (V), grid
    /// frequency `f_m` (Hz).
    pub fn new(l: f64, r: f64, c: f64, v_m: f64, f_m: f64) -> Result<Self> {
        let p = PlantParams {
            inductance: l,
            resistance: r,
            capacitance: c,
            mains_amplitude: v_m,
            omega_m: 2.0 * std::f64::consts::PI * f_m,
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        positive("L", self.inductance)?;
        positive("C", self.capacitance)?;
        positive("V_m", self.mains_amplitude)?;
        positive("omega_m", self.omega_m)?;
        if !(self.resistance >= 0.0 && self.resistance.is_finite()) {
            return Err(SafError::param(
                "R",
                format!("must be >= 0 and finite, got {}", self.resistance),
            ));
        }
        Ok(())
    }

    pub fn with_resistance(mut self, r: f64) -> Result<Self> {
        self.resistance = r;
        self.validate()?;
        Ok(self)
    }

    pub fn with_capacitance(mut self, c: f64) -> Result<Self> {
        self.capacitance = c;
        self.validate()?;
        Ok(self)
    }

    pub fn with_inductance(mut self, l: f64) -> Result<Self> {
        self.inductance = l;
        self.validate()?;
        Ok(self)
    }

    pub fn l(&self) -> f64 {
        self.inductance
    }
    pub fn r(&self) -> f64 {
        self.resistance
    }
    pub fn c(&self) -> f64 {
        self.capacitance
    }
    pub fn v_m(&self) -> f64 {
        self.mains_amplitude
    }
    pub fn omega_m(&self) -> f64 {
        self.omega_m
    }
    pub fn f_m(&self) -> f64 {
        self.omega_m / (2.0 * std::f64::consts::PI)
    }
    /// Line period `T = 1/f_m`.
    pub fn period(&self) -> f64 {
        1.0 / self.f_m()
    }
    /// `E_md = V_m²`.
    pub fn e_md(&self) -> f64 {
        self.mains_amplitude * self.mains_amplitude
    }
    /// `ε = 3 / (C·E_md)`, the time-scale separation parameter.
    pub fn epsilon(&self) -> f64 {
        3.0 / (self.capacitance * self.e_md())
    }

    /// `M(R, L)` as a row-major 2×2 array.
    pub fn m_matrix(&self) -> [[f64; 2]; 2] {
        let a = -self.resistance / self.inductance;
        [[a, self.omega_m], [-self.omega_m, a]]
    }

    /// Constant mains forcing `d₀ = (E_md/L, 0)`.
    pub fn d0(&self) -> Vec2 {
        Vec2::new(self.e_md() / self.inductance, 0.0)
    }

    /// `M x`.
    pub fn apply_m(&self, x: &Vec2) -> Vec2 {
        let m = self.m_matrix();
        Vec2::new(m[0][0] * x[0] + m[0][1] * x[1], m[1][0] * x[0] + m[1][1] * x[1])
    }

    /// Grid angle `θ = ω_m t`; the mains tern is aligned at `t = 0`.
    pub fn theta(&self, t: f64) -> f64 {
        self.omega_m * t
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(SafError::param(name, format!("must be > 0 and finite, got {v}")))
    }
}

/// Power variables plus DC-link voltage. Also used as the container for the
/// time derivative returned by [`plant_derivative`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PowerState {
    pub x_d: f64,
    pub x_q: f64,
    pub v: f64,
}

impl PowerState {
    pub fn new(x_d: f64, x_q: f64, v: f64) -> Self {
        PowerState { x_d, x_q, v }
    }
    pub fn x(&self) -> Vec2 {
        Vec2::new(self.x_d, self.x_q)
    }
}

/// Averaged or instantaneous leg commands, each in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchVector([f64; 3]);

impl SwitchVector {
    pub fn new(u_xyz: [f64; 3]) -> Result<Self> {
        for (leg, u) in u_xyz.iter().enumerate() {
            if !(0.0..=1.0).contains(u) {
                return Err(SafError::Range(format!(
                    "leg {} command {} outside [0, 1]",
                    ["x", "y", "z"][leg],
                    u
                )));
            }
        }
        Ok(SwitchVector(u_xyz))
    }

    pub fn legs(&self) -> [f64; 3] {
        self.0
    }

    /// The eight vertex commands in the order of the switch table.
    pub fn vertices() -> [SwitchVector; 8] {
        [
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [1.0, 1.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 1.0, 1.0],
            [0.0, 0.0, 1.0],
            [1.0, 0.0, 1.0],
            [1.0, 1.0, 1.0],
        ]
        .map(SwitchVector)
    }
}

/// Modulation vector in the synchronous frame (V, since it carries `V_m`).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlVectorDq {
    pub u_d: f64,
    pub u_q: f64,
}

impl ControlVectorDq {
    pub fn new(u_d: f64, u_q: f64) -> Self {
        ControlVectorDq { u_d, u_q }
    }
    pub fn as_vec(&self) -> Vec2 {
        Vec2::new(self.u_d, self.u_q)
    }
    pub fn from_vec(v: Vec2) -> Self {
        ControlVectorDq { u_d: v[0], u_q: v[1] }
    }
}

/// Amplitude-invariant Clarke transform of a zero-sum tern.
pub fn clarke(abc: &Vec3) -> Result<Vec2> {
    let sum = abc[0] + abc[1] + abc[2];
    let scale = abc.amax();
    if sum.abs() > ZERO_SUM_TOL * scale {
        return Err(SafError::Constraint(format!(
            "three-wire tern must sum to zero: sum = {sum:e} for max component {scale:e}"
        )));
    }
    Ok(Vec2::new(
        (2.0 * abc[0] - abc[1] - abc[2]) / 3.0,
        (abc[1] - abc[2]) / SQRT_3,
    ))
}

/// Inverse Clarke transform; the result always sums to zero.
pub fn inverse_clarke(ab: &Vec2) -> Vec3 {
    let a = ab[0];
    let b = -0.5 * ab[0] + 0.5 * SQRT_3 * ab[1];
    Vec3::new(a, b, -a - b)
}

/// Rotation by `−θ` (stationary to synchronous frame), no scaling.
pub fn rotate_to_dq(ab: &Vec2, theta: f64) -> Vec2 {
    let (s, c) = theta.sin_cos();
    Vec2::new(c * ab[0] + s * ab[1], -s * ab[0] + c * ab[1])
}

/// Rotation by `+θ` (synchronous to stationary frame), no scaling.
pub fn rotate_to_alpha_beta(dq: &Vec2, theta: f64) -> Vec2 {
    let (s, c) = theta.sin_cos();
    Vec2::new(c * dq[0] - s * dq[1], s * dq[0] + c * dq[1])
}

/// Scaled synchronous transform: multiplies by `v_m` and rotates by `−θ`.
pub fn park(ab: &Vec2, theta: f64, v_m: f64) -> Vec2 {
    v_m * rotate_to_dq(ab, theta)
}

/// Inverse of [`park`].
pub fn park_inverse(dq: &Vec2, theta: f64, v_m: f64) -> Result<Vec2> {
    if v_m.abs() <= 0.0 || !v_m.is_finite() {
        return Err(SafError::param("V_m", format!("cannot invert with V_m = {v_m}")));
    }
    Ok(rotate_to_alpha_beta(dq, theta) / v_m)
}

/// Removes the common mode from the leg commands and maps the result to αβ.
///
/// `u_c` is formed as `−(u_a + u_b)` so the tern sums to zero exactly, and
/// `u_αβ = (u_a, (u_b − u_c)/√3)`, which equals the Clarke matrix applied
/// to a zero-sum tern.
pub fn switch_to_uabc(s: &SwitchVector) -> (Vec3, Vec2) {
    let [ux, uy, uz] = s.0;
    let ua = (2.0 * ux - uy - uz) / 3.0;
    let ub = (2.0 * uy - ux - uz) / 3.0;
    let uc = -(ua + ub);
    (Vec3::new(ua, ub, uc), Vec2::new(ua, (ub - uc) / SQRT_3))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HexagonMode {
    /// Circle of radius `1/√3` inscribed in the hexagon.
    InscribedCircle,
    /// Convex hull of the six active switch vectors.
    ExactHexagon,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HexagonVerdict {
    pub feasible: bool,
    /// Distance to the boundary, positive inside.
    pub margin: f64,
}

/// Feasibility of an averaged αβ modulation vector.
pub fn hexagon_check(u_ab: &Vec2, mode: HexagonMode) -> HexagonVerdict {
    let r_in = inscribed_radius();
    let margin = match mode {
        HexagonMode::InscribedCircle => r_in - u_ab.norm(),
        HexagonMode::ExactHexagon => {
            // Edge normals point at 30° + k·60°; the apothem is r_in.
            let reach = (0..6)
                .map(|k| {
                    let a = std::f64::consts::PI / 6.0 + k as f64 * std::f64::consts::PI / 3.0;
                    u_ab[0] * a.cos() + u_ab[1] * a.sin()
                })
                .fold(f64::NEG_INFINITY, f64::max);
            r_in - reach
        }
    };
    HexagonVerdict {
        feasible: margin >= -1e-12,
        margin,
    }
}

/// Right-hand side of the converter model in power variables:
/// `ẋ = M x − (v/L) u_dq + d₀`, `v̇ = (ε/2) u_dqᵀ x`.
pub fn plant_derivative(state: &PowerState, u_dq: &ControlVectorDq, p: &PlantParams) -> PowerState {
    let x = state.x();
    let u = u_dq.as_vec();
    let dx = p.apply_m(&x) - (state.v / p.l()) * u + p.d0();
    PowerState {
        x_d: dx[0],
        x_q: dx[1],
        v: 0.5 * p.epsilon() * u.dot(&x),
    }
}

/// Forced equilibrium of `ẋ = M x + d₀` (zero modulation).
pub fn free_equilibrium(p: &PlantParams) -> Vec2 {
    let m = p.m_matrix();
    let d = p.d0();
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    // Solve M x = −d₀ by Cramer's rule.
    Vec2::new(
        (-d[0] * m[1][1] + d[1] * m[0][1]) / det,
        (-m[0][0] * d[1] + m[1][0] * d[0]) / det,
    )
}
