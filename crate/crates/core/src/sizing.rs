//! Hardware selection: inductor from ripple, DC-link voltage window from
//! actuation feasibility, capacitor from the energy swing, and the worst
//! case over every load the switches can carry.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Result, SafError};
use crate::load::{wrap_phase, LoadSpectrum, Reference};
use crate::plant::{clarke, inverse_clarke, rotate_to_alpha_beta, PlantParams, Vec2, Vec3, SQRT_3};

/// Samples per period for energy integrals.
pub const ENERGY_SAMPLES: usize = 4096;

/// Peak-to-peak current ripple `V / (6 f L)`.
pub fn peak_ripple(v: f64, f_pwm: f64, l: f64) -> f64 {
    v / (6.0 * f_pwm * l)
}

/// Smallest inductance keeping the ripple below `ΔI_Mpp` at `v_M`.
pub fn min_inductance(v_max: f64, f_pwm: f64, delta_i_mpp: f64) -> f64 {
    v_max / (6.0 * f_pwm * delta_i_mpp)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurrentVerdict {
    pub feasible: bool,
    /// `I_max − max‖i_αβ‖`.
    pub margin: f64,
    pub peak: f64,
}

/// Inscribed-circle test of a three-phase current trajectory.
pub fn current_feasibility(i_abc: &[Vec3], i_max: f64) -> Result<CurrentVerdict> {
    if i_abc.is_empty() {
        return Err(SafError::Input("empty current trajectory".into()));
    }
    let mut peak = 0.0f64;
    for i in i_abc {
        peak = peak.max(clarke(i)?.norm());
    }
    Ok(CurrentVerdict {
        feasible: peak <= i_max,
        margin: i_max - peak,
        peak,
    })
}

/// Uniformly sampled synchronous-frame current over exactly one period,
/// `t_k = k·dt`, with its time derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct DqTrajectory {
    pub dt: f64,
    pub i: Vec<Vec2>,
    pub di: Vec<Vec2>,
}

impl DqTrajectory {
    /// Current reference `i* = x*/V_m` of a load, sampled over one period.
    pub fn from_reference(reference: &Reference, v_m: f64, samples: usize) -> Self {
        let dt = reference.period() / samples as f64;
        let (i, di) = (0..samples)
            .map(|k| {
                let (x, dx) = reference.value_and_derivative(k as f64 * dt);
                (x / v_m, dx / v_m)
            })
            .unzip();
        DqTrajectory { dt, i, di }
    }

    /// Phase currents of the trajectory.
    pub fn to_abc(&self, omega_m: f64) -> Vec<Vec3> {
        self.i
            .iter()
            .enumerate()
            .map(|(k, i)| inverse_clarke(&rotate_to_alpha_beta(i, omega_m * k as f64 * self.dt)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VoltageDemand {
    pub v_dq: Vec<Vec2>,
    /// `max_t ‖v*_abc(t)‖`.
    pub peak: f64,
}

/// Bridge voltage needed to impose `i*` with `R = 0`:
/// `v*_dq = (V_m, 0) − L di*/dt + ω_m L (i*_q, −i*_d)`.
pub fn bridge_voltage_demand(traj: &DqTrajectory, params: &PlantParams) -> Result<VoltageDemand> {
    let n = traj.i.len();
    if n < 3 || traj.di.len() != n {
        return Err(SafError::Input("trajectory needs matching current and derivative samples".into()));
    }
    // Periodic central differences against the supplied derivative.
    let scale = traj.di.iter().fold(0.0f64, |m, d| m.max(d.amax()));
    if scale > 0.0 {
        for k in 0..n {
            let fd = (traj.i[(k + 1) % n] - traj.i[(k + n - 1) % n]) / (2.0 * traj.dt);
            if (fd - traj.di[k]).amax() > 1e-2 * scale {
                return Err(SafError::Input(format!(
                    "derivative sample {k} inconsistent with currents: {:?} vs finite difference {:?}",
                    traj.di[k].as_slice(),
                    fd.as_slice()
                )));
            }
        }
    }
    let (l, w) = (params.l(), params.omega_m());
    let v_dq: Vec<Vec2> = traj
        .i
        .iter()
        .zip(&traj.di)
        .map(|(i, di)| Vec2::new(params.v_m() - l * di[0] + w * l * i[1], -l * di[1] - w * l * i[0]))
        .collect();
    let peak = v_dq.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    Ok(VoltageDemand { v_dq, peak })
}

/// DC-link lower bound `√3 · max‖v*_abc‖`.
pub fn min_dc_voltage(peak: f64) -> f64 {
    SQRT_3 * peak
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergySizing {
    pub e_max: f64,
    pub c: f64,
    pub v_ref: f64,
    /// `E_max = 0`: nothing to store.
    pub degenerate: bool,
}

/// Zero-mean energy swing `E_filt = ∫p − mean(∫p)` of a periodic power
/// trajectory sampled at `t_k = k·dt` over one period.
pub fn energy_swing(p: &[f64], dt: f64) -> Vec<f64> {
    let n = p.len();
    let mut e = Vec::with_capacity(n);
    let mut acc = 0.0;
    for k in 0..n {
        e.push(acc);
        acc += 0.5 * dt * (p[k] + p[(k + 1) % n]);
    }
    let mean = e.iter().sum::<f64>() / n as f64;
    e.iter_mut().for_each(|x| *x -= mean);
    e
}

/// `E_max = max|E_filt|`, `C = 2E_max / (v_ref² − v_m²)`, `v_ref = (v_M + v_m)/2`.
pub fn capacitor_from_energy(p: &[f64], dt: f64, v_m: f64, v_max: f64) -> Result<EnergySizing> {
    if p.len() < 2 {
        return Err(SafError::Input("power trajectory needs at least two samples".into()));
    }
    if !(v_max > v_m && v_m >= 0.0) {
        return Err(SafError::Input(format!("need 0 <= v_m < v_M, got v_m = {v_m}, v_M = {v_max}")));
    }
    let peak = p.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mean = p.iter().sum::<f64>() / p.len() as f64;
    if mean.abs() > 1e-3 * peak {
        return Err(SafError::Input(format!(
            "filter power has nonzero mean {mean:e} W (peak {peak:e} W); not a steady state"
        )));
    }
    let e_max = energy_swing(p, dt).iter().fold(0.0f64, |m, x| m.max(x.abs()));
    Ok(capacitor_from_e_max(e_max, v_m, v_max))
}

/// The capacitor design equation for a given energy swing.
pub fn capacitor_from_e_max(e_max: f64, v_m: f64, v_max: f64) -> EnergySizing {
    let v_ref = 0.5 * (v_max + v_m);
    EnergySizing {
        e_max,
        c: 2.0 * e_max / (v_ref * v_ref - v_m * v_m),
        v_ref,
        degenerate: e_max == 0.0,
    }
}

/// Filter power `v*ᵀ i*` along a trajectory.
pub fn filter_power(traj: &DqTrajectory, demand: &VoltageDemand) -> Vec<f64> {
    demand.v_dq.iter().zip(&traj.i).map(|(v, i)| v.dot(i)).collect()
}

// ---------------------------------------------------------------------------
// Worst case over the switch current budget.

#[derive(Debug, Clone, PartialEq)]
pub struct WorstCaseOptions {
    pub starts: usize,
    /// Objective evaluations per start.
    pub budget: usize,
    pub seed: u64,
    /// Time samples per period per unit of the highest order.
    pub samples_per_order: usize,
}

impl Default for WorstCaseOptions {
    fn default() -> Self {
        WorstCaseOptions {
            starts: 64,
            budget: 2000,
            seed: 42,
            samples_per_order: 128,
        }
    }
}

/// One synchronous-frame current harmonic `I cos(nω_m t + ψ)` per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurrentHarmonic {
    pub order: u32,
    pub i_d: f64,
    pub psi_d: f64,
    pub i_q: f64,
    pub psi_q: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorstCase {
    pub e_max: f64,
    /// `I_d0` is pinned to zero: a DC real current draws net power.
    pub i_d0: f64,
    pub i_q0: f64,
    pub harmonics: Vec<CurrentHarmonic>,
    pub seed: u64,
    /// Every start shrank its step to the floor before the budget ran out.
    pub converged: bool,
    pub evaluations: usize,
}

/// Sampled periodic basis shared by all objective evaluations.
struct Problem {
    orders: Vec<f64>,
    cos: Vec<Vec<f64>>,
    sin: Vec<Vec<f64>>,
    n: usize,
    dt: f64,
    v_m_mains: f64,
    l: f64,
    w: f64,
    i_max: f64,
    u_max: f64,
}

impl Problem {
    fn new(orders: &[u32], params: &PlantParams, i_max: f64, v_m: f64, n: usize) -> Self {
        let w = params.omega_m();
        let dt = params.period() / n as f64;
        let (cos, sin) = orders
            .iter()
            .map(|&o| {
                (0..n)
                    .map(|k| (o as f64 * w * k as f64 * dt).sin_cos())
                    .map(|(s, c)| (c, s))
                    .unzip::<f64, f64, Vec<f64>, Vec<f64>>()
            })
            .unzip();
        Problem {
            orders: orders.iter().map(|&o| o as f64).collect(),
            cos,
            sin,
            n,
            dt,
            v_m_mains: params.v_m(),
            l: params.l(),
            w,
            i_max,
            u_max: v_m / SQRT_3,
        }
    }

    fn dim(&self) -> usize {
        1 + 4 * self.orders.len()
    }

    /// `(i, di/dt)` at sample `k`. Layout: `z = [I_q0, (c_d, s_d, c_q, s_q)…]`
    /// with `i_d = Σ c_d cos + s_d sin`.
    fn current(&self, z: &[f64], k: usize) -> (Vec2, Vec2) {
        let mut i = Vec2::new(0.0, z[0]);
        let mut di = Vec2::zeros();
        for (j, &o) in self.orders.iter().enumerate() {
            let (c, s) = (self.cos[j][k], self.sin[j][k]);
            let b = &z[1 + 4 * j..5 + 4 * j];
            let nw = o * self.w;
            i[0] += b[0] * c + b[1] * s;
            i[1] += b[2] * c + b[3] * s;
            di[0] += nw * (-b[0] * s + b[1] * c);
            di[1] += nw * (-b[2] * s + b[3] * c);
        }
        (i, di)
    }

    fn voltage(&self, i: &Vec2, di: &Vec2) -> Vec2 {
        let wl = self.w * self.l;
        Vec2::new(self.v_m_mains - self.l * di[0] + wl * i[1], -self.l * di[1] - wl * i[0])
    }

    #[cfg(test)]
    fn feasible(&self, z: &[f64]) -> bool {
        (0..self.n).all(|k| {
            let (i, di) = self.current(z, k);
            i.norm() <= self.i_max && self.voltage(&i, &di).norm() <= self.u_max
        })
    }

    fn objective(&self, z: &[f64]) -> f64 {
        let p: Vec<f64> = (0..self.n)
            .map(|k| {
                let (i, di) = self.current(z, k);
                self.voltage(&i, &di).dot(&i)
            })
            .collect();
        energy_swing(&p, self.dt).iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    /// Largest `s ≥ 0` with `s·z` feasible, in closed form per sample: the
    /// current is linear in `z` and the voltage is affine with the mains
    /// vector strictly inside the circle.
    fn max_scale(&self, z: &[f64]) -> f64 {
        let mains = Vec2::new(self.v_m_mains, 0.0);
        let c = mains.norm_squared() - self.u_max * self.u_max;
        let mut s_max = f64::INFINITY;
        for k in 0..self.n {
            let (i, di) = self.current(z, k);
            let ni = i.norm();
            if ni > 0.0 {
                s_max = s_max.min(self.i_max / ni);
            }
            let b = self.voltage(&i, &di) - mains;
            let bb = b.norm_squared();
            if bb > 0.0 {
                let ab = mains.dot(&b);
                s_max = s_max.min((-ab + (ab * ab - bb * c).sqrt()) / bb);
            }
        }
        s_max
    }

    fn project(&self, z: &mut [f64]) {
        let s = self.max_scale(z);
        if s < 1.0 {
            z.iter_mut().for_each(|x| *x *= s);
        }
    }

    fn push_to_boundary(&self, z: &mut [f64]) {
        let s = self.max_scale(z);
        if s.is_finite() {
            z.iter_mut().for_each(|x| *x *= s);
        }
    }
}

struct StartResult {
    value: f64,
    z: Vec<f64>,
    converged: bool,
    evaluations: usize,
}

fn local_search(prob: &Problem, mut z: Vec<f64>, budget: usize) -> StartResult {
    let mut best = prob.objective(&z);
    let mut evals = 1;
    let mut step = 0.25 * prob.i_max;
    let floor = 1e-6 * prob.i_max;
    let mut cand = z.clone();
    let mut pushed = z.clone();
    while step >= floor {
        let mut improved = false;
        'sweep: for i in 0..z.len() {
            for sign in [1.0, -1.0] {
                if evals + 2 > budget {
                    return StartResult { value: best, z, converged: false, evaluations: evals };
                }
                cand.copy_from_slice(&z);
                cand[i] += sign * step;
                prob.project(&mut cand);
                pushed.copy_from_slice(&cand);
                prob.push_to_boundary(&mut pushed);
                let v = prob.objective(&cand);
                let vp = prob.objective(&pushed);
                evals += 2;
                let (v, from) = if vp > v { (vp, &pushed) } else { (v, &cand) };
                if v > best {
                    best = v;
                    z.copy_from_slice(from);
                    improved = true;
                    break 'sweep;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    StartResult { value: best, z, converged: true, evaluations: evals }
}

/// Largest energy swing over every synchronous-frame current spectrum on
/// `orders` that respects the switch current `I_max` and keeps the command
/// inside the inscribed circle at `v = v_m`.
pub fn worst_case_energy(
    i_max: f64,
    orders: &[u32],
    params: &PlantParams,
    v_m: f64,
    opts: &WorstCaseOptions,
) -> Result<WorstCase> {
    if !(i_max >= 0.0 && i_max.is_finite()) {
        return Err(SafError::param("I_max", format!("must be >= 0, got {i_max}")));
    }
    let mut orders: Vec<u32> = orders.iter().copied().filter(|&o| o != 0).collect();
    orders.sort_unstable();
    orders.dedup();
    if SQRT_3 * params.v_m() > v_m {
        return Err(SafError::Infeasible(format!(
            "v_m = {v_m} V cannot impose even the mains voltage (needs >= {:.3} V)",
            SQRT_3 * params.v_m()
        )));
    }
    let empty = WorstCase {
        e_max: 0.0,
        i_d0: 0.0,
        i_q0: 0.0,
        harmonics: orders
            .iter()
            .map(|&order| CurrentHarmonic { order, i_d: 0.0, psi_d: 0.0, i_q: 0.0, psi_q: 0.0 })
            .collect(),
        seed: opts.seed,
        converged: true,
        evaluations: 0,
    };
    if i_max == 0.0 || orders.is_empty() {
        // Only DC currents remain; with zero-mean power they store nothing.
        return Ok(empty);
    }
    let n_max = *orders.last().unwrap() as usize;
    let prob = Problem::new(&orders, params, i_max, v_m, (opts.samples_per_order * n_max).max(64));
    let dim = prob.dim();
    let results: Vec<StartResult> = (0..opts.starts)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(s as u64);
            let mut z: Vec<f64> = (0..dim).map(|_| rng.random_range(-i_max..i_max)).collect();
            prob.project(&mut z);
            local_search(&prob, z, opts.budget)
        })
        .collect();
    let evaluations = results.iter().map(|r| r.evaluations).sum();
    let converged = results.iter().all(|r| r.converged);
    let best = results
        .into_iter()
        .reduce(|a, b| if b.value > a.value { b } else { a })
        .expect("at least one start");

    // Re-check on a fine grid; shrink if inter-sample peaks violate.
    let fine = Problem::new(&orders, params, i_max, v_m, ENERGY_SAMPLES.max(32 * n_max));
    let mut z = best.z;
    fine.project(&mut z);
    let e_max = fine.objective(&z);
    let harmonics = orders
        .iter()
        .enumerate()
        .map(|(j, &order)| {
            let b = &z[1 + 4 * j..5 + 4 * j];
            CurrentHarmonic {
                order,
                i_d: b[0].hypot(b[1]),
                psi_d: wrap_phase((-b[1]).atan2(b[0])),
                i_q: b[2].hypot(b[3]),
                psi_q: wrap_phase((-b[3]).atan2(b[2])),
            }
        })
        .collect();
    Ok(WorstCase {
        e_max,
        i_d0: 0.0,
        i_q0: z[0],
        harmonics,
        seed: opts.seed,
        converged,
        evaluations,
    })
}

// ---------------------------------------------------------------------------
// Pipelines and report.

/// Inputs common to both design routes.
#[derive(Debug, Clone, PartialEq)]
pub struct SizingInputs {
    pub f_pwm: f64,
    pub delta_i_mpp: f64,
    pub v_max: f64,
    pub i_max: f64,
    /// Chosen DC-link lower bound; `None` picks the oversized bound.
    pub v_min: Option<f64>,
    pub safety_factor: f64,
}

impl SizingInputs {
    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("f_pwm", self.f_pwm),
            ("delta_I_Mpp", self.delta_i_mpp),
            ("v_M", self.v_max),
            ("I_max", self.i_max),
            ("safety_factor", self.safety_factor),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SafError::Parameter {
                    name: match name {
                        "f_pwm" => "f_pwm",
                        "delta_I_Mpp" => "delta_I_Mpp",
                        "v_M" => "v_M",
                        "I_max" => "I_max",
                        _ => "safety_factor",
                    },
                    reason: format!("must be strictly positive, got {v}"),
                });
            }
        }
        if let Some(v) = self.v_min {
            if !(v > 0.0 && v < self.v_max) {
                return Err(SafError::param("v_m", format!("must satisfy 0 < v_m < v_M, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SizingRoute {
    LoadBased,
    SwitchesBased,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SizingReport {
    pub route: SizingRoute,
    pub l_min: f64,
    /// Inductance used for the voltage demand.
    pub l_used: f64,
    pub ripple_at_l: f64,
    pub v_m_bound: f64,
    pub v_m_oversized: f64,
    pub v_m_used: f64,
    pub v_max: f64,
    pub e_max: f64,
    pub c: f64,
    pub feasible: bool,
    pub peak_v_abc: f64,
    pub current_margin: f64,
    pub voltage_slack: f64,
    pub energy_convergence: f64,
    pub worst_case: Option<WorstCase>,
    pub notes: Vec<String>,
    pub remediation: Vec<String>,
}

fn remediation() -> Vec<String> {
    vec![
        "adopt a capacitor with a higher voltage rating v_M".into(),
        "reduce the number of compensated harmonics".into(),
        "reduce L below L_min and accept a larger current ripple".into(),
    ]
}

/// Load-based design: the reference currents of a known load drive the
/// voltage window and the capacitor.
pub fn size_load_based(spectrum: &LoadSpectrum, params: &PlantParams, inputs: &SizingInputs) -> Result<SizingReport> {
    inputs.validate()?;
    let mut notes = Vec::new();
    let l_min = min_inductance(inputs.v_max, inputs.f_pwm, inputs.delta_i_mpp);
    if params.l() < l_min {
        notes.push(format!(
            "L = {:e} H is below L_min = {l_min:e} H; ripple exceeds delta_I_Mpp",
            params.l()
        ));
    }
    let lossless = params.with_resistance(0.0)?;
    let reference = Reference::from_load(spectrum, params.omega_m());
    let run = |samples| -> Result<(DqTrajectory, VoltageDemand, Vec<f64>)> {
        let traj = DqTrajectory::from_reference(&reference, params.v_m(), samples);
        let demand = bridge_voltage_demand(&traj, &lossless)?;
        let p = filter_power(&traj, &demand);
        Ok((traj, demand, p))
    };
    let (traj, demand, p) = run(ENERGY_SAMPLES)?;
    let current = current_feasibility(&traj.to_abc(params.omega_m()), inputs.i_max)?;
    let v_m_bound = min_dc_voltage(demand.peak);
    let v_m_oversized = inputs.safety_factor * v_m_bound;
    let v_m_used = match inputs.v_min {
        Some(v) => v,
        None if v_m_oversized < inputs.v_max => v_m_oversized,
        None => {
            notes.push(format!(
                "oversized bound {v_m_oversized:.3} V leaves no window below v_M = {} V; using the bare bound",
                inputs.v_max
            ));
            v_m_bound
        }
    };
    if v_m_used >= inputs.v_max {
        return Err(SafError::Infeasible(format!(
            "v_m = {v_m_used:.3} V leaves no DC window below v_M = {} V",
            inputs.v_max
        )));
    }
    if v_m_used < v_m_bound {
        notes.push(format!("v_m = {v_m_used:.3} V is below the actuation bound {v_m_bound:.3} V"));
    }
    if !current.feasible {
        notes.push(format!(
            "reference current peak {:.3} A exceeds I_max = {} A",
            current.peak, inputs.i_max
        ));
    }
    let energy = capacitor_from_energy(&p, traj.dt, v_m_used, inputs.v_max)?;
    let (traj_h, _, p_h) = run(ENERGY_SAMPLES / 2)?;
    let e_half = capacitor_from_energy(&p_h, traj_h.dt, v_m_used, inputs.v_max)?.e_max;
    if energy.degenerate {
        notes.push("no oscillating power: E_max = 0".into());
    }
    let oversizing_fits = inputs.v_min.is_some() || v_m_oversized < inputs.v_max;
    let feasible = v_m_used >= v_m_bound && oversizing_fits && current.feasible;
    Ok(SizingReport {
        route: SizingRoute::LoadBased,
        l_min,
        l_used: params.l(),
        ripple_at_l: peak_ripple(inputs.v_max, inputs.f_pwm, params.l()),
        v_m_bound,
        v_m_oversized,
        v_m_used,
        v_max: inputs.v_max,
        e_max: energy.e_max,
        c: energy.c,
        feasible,
        peak_v_abc: demand.peak,
        current_margin: current.margin,
        voltage_slack: v_m_used / SQRT_3 - demand.peak,
        energy_convergence: if energy.e_max > 0.0 { (energy.e_max - e_half).abs() / energy.e_max } else { 0.0 },
        worst_case: None,
        notes,
        remediation: if feasible { Vec::new() } else { remediation() },
    })
}

/// Switches-based design: the capacitor covers the worst load the switches
/// can carry on the given orders, with `L = L_min`.
pub fn size_switches_based(
    orders: &[u32],
    params: &PlantParams,
    inputs: &SizingInputs,
    opts: &WorstCaseOptions,
) -> Result<SizingReport> {
    inputs.validate()?;
    let v_m = inputs
        .v_min
        .ok_or_else(|| SafError::Input("switches-based sizing needs the chosen v_m".into()))?;
    let l_min = min_inductance(inputs.v_max, inputs.f_pwm, inputs.delta_i_mpp);
    let p = params.with_inductance(l_min)?.with_resistance(0.0)?;
    let wc = worst_case_energy(inputs.i_max, orders, &p, v_m, opts)?;
    let energy = capacitor_from_e_max(wc.e_max, v_m, inputs.v_max);
    let v_m_bound = SQRT_3 * params.v_m();
    let mut notes = vec![format!(
        "worst case over {} starts, seed {}, converged = {}",
        opts.starts, wc.seed, wc.converged
    )];
    if energy.degenerate {
        notes.push("no oscillating power: E_max = 0".into());
    }
    Ok(SizingReport {
        route: SizingRoute::SwitchesBased,
        l_min,
        l_used: l_min,
        ripple_at_l: inputs.delta_i_mpp,
        v_m_bound,
        v_m_oversized: inputs.safety_factor * v_m_bound,
        v_m_used: v_m,
        v_max: inputs.v_max,
        e_max: energy.e_max,
        c: energy.c,
        feasible: true,
        peak_v_abc: v_m / SQRT_3,
        current_margin: 0.0,
        voltage_slack: 0.0,
        energy_convergence: 0.0,
        worst_case: Some(wc),
        notes,
        remediation: Vec::new(),
    })
}

impl SizingReport {
    /// `key,value,unit` CSV.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("key,value,unit\n");
        let route = match self.route {
            SizingRoute::LoadBased => "load_based",
            SizingRoute::SwitchesBased => "switches_based",
        };
        let _ = writeln!(s, "route,{route},");
        let rows: [(&str, f64, &str); 14] = [
            ("L_min", self.l_min, "H"),
            ("L_used", self.l_used, "H"),
            ("ripple_pp_at_L", self.ripple_at_l, "A"),
            ("v_m_bound", self.v_m_bound, "V"),
            ("v_m_oversized", self.v_m_oversized, "V"),
            ("v_m_used", self.v_m_used, "V"),
            ("v_M", self.v_max, "V"),
            ("peak_v_abc", self.peak_v_abc, "V"),
            ("current_margin", self.current_margin, "A"),
            ("voltage_slack", self.voltage_slack, "V"),
            ("E_max", self.e_max, "J"),
            ("C", self.c, "F"),
            ("energy_convergence", self.energy_convergence, "1"),
            ("feasible", if self.feasible { 1.0 } else { 0.0 }, "bool"),
        ];
        for (k, v, u) in rows {
            let _ = writeln!(s, "{k},{v:e},{u}");
        }
        if let Some(wc) = &self.worst_case {
            let _ = writeln!(s, "worst_seed,{},", wc.seed);
            let _ = writeln!(s, "worst_converged,{},bool", u8::from(wc.converged));
            let _ = writeln!(s, "worst_I_d0,{:e},A", wc.i_d0);
            let _ = writeln!(s, "worst_I_q0,{:e},A", wc.i_q0);
            for h in &wc.harmonics {
                let n = h.order;
                let _ = writeln!(s, "worst_I_d{n},{:e},A", h.i_d);
                let _ = writeln!(s, "worst_psi_d{n},{:e},rad", h.psi_d);
                let _ = writeln!(s, "worst_I_q{n},{:e},A", h.i_q);
                let _ = writeln!(s, "worst_psi_q{n},{:e},rad", h.psi_q);
            }
        }
        for n in &self.notes {
            let _ = writeln!(s, "note,\"{}\",", n.replace('"', "'"));
        }
        for r in &self.remediation {
            let _ = writeln!(s, "remediation,\"{r}\",");
        }
        s
    }
}

/// Balanced three-phase samples of `I cos(n ω t + φ)` over one period.
pub fn balanced_phase_currents(amplitude: f64, order: u32, omega_m: f64, samples: usize) -> Vec<Vec3> {
    let t = 2.0 * PI / omega_m;
    (0..samples)
        .map(|k| {
            let a = order as f64 * omega_m * t * k as f64 / samples as f64;
            let s = order as f64 * 2.0 * PI / 3.0;
            Vec3::new(amplitude * a.cos(), amplitude * (a - s).cos(), amplitude * (a + s).cos())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn reference_plant() -> PlantParams {
        PlantParams::new(3.3e-3, 0.12, 4400e-6, 310.0, 50.0).unwrap()
    }

    #[test]
    fn ripple_and_inductance() {
        assert_relative_eq!(peak_ripple(800.0, 7000.0, 3.3e-3), 5.772, epsilon = 1e-3);
        assert_relative_eq!(peak_ripple(1600.0, 7000.0, 3.3e-3), 2.0 * peak_ripple(800.0, 7000.0, 3.3e-3));
        assert_relative_eq!(peak_ripple(800.0, 7000.0, 6.6e-3), 0.5 * peak_ripple(800.0, 7000.0, 3.3e-3));
        assert_relative_eq!(min_inductance(900.0, 7000.0, 6.49), 3.30e-3, max_relative = 1e-2);
        assert_relative_eq!(min_inductance(900.0, 7000.0, 12.98), 0.5 * min_inductance(900.0, 7000.0, 6.49));
        assert_eq!(min_inductance(0.0, 7000.0, 6.49), 0.0);
    }

    #[test]
    fn current_feasibility_examples() {
        let w = 100.0 * PI;
        let z = vec![Vec3::zeros(); 16];
        let v = current_feasibility(&z, 70.0).unwrap();
        assert!(v.feasible);
        assert_eq!(v.margin, 70.0);
        let v = current_feasibility(&balanced_phase_currents(70.0, 1, w, 256), 70.0).unwrap();
        assert!(v.margin.abs() < 1e-9);
        let v = current_feasibility(&balanced_phase_currents(77.0, 1, w, 256), 70.0).unwrap();
        assert!(!v.feasible);
        assert_eq!(current_feasibility(&[], 1.0).unwrap_err().kind(), "input");
    }

    fn constant_traj(i: Vec2, n: usize) -> DqTrajectory {
        DqTrajectory { dt: 0.02 / n as f64, i: vec![i; n], di: vec![Vec2::zeros(); n] }
    }

    #[test]
    fn voltage_demand_examples() {
        let p = reference_plant().with_resistance(0.0).unwrap();
        let d = bridge_voltage_demand(&constant_traj(Vec2::zeros(), 64), &p).unwrap();
        assert!(d.v_dq.iter().all(|v| *v == Vec2::new(310.0, 0.0)));
        assert_eq!(d.peak, 310.0);
        assert_relative_eq!(min_dc_voltage(d.peak), SQRT_3 * 310.0, max_relative = 1e-15);
        assert_relative_eq!(min_dc_voltage(310.0), 536.9, epsilon = 0.05);

        let d = bridge_voltage_demand(&constant_traj(Vec2::new(10.0, 0.0), 64), &p).unwrap();
        assert_relative_eq!(d.v_dq[0][1], -p.omega_m() * p.l() * 10.0, max_relative = 1e-15);
        assert_eq!(d.v_dq[0][0], 310.0);
    }

    fn harmonic_traj(amp: f64, n: u32, samples: usize) -> DqTrajectory {
        let w = 100.0 * PI;
        let dt = 0.02 / samples as f64;
        let nw = n as f64 * w;
        DqTrajectory {
            dt,
            i: (0..samples).map(|k| Vec2::new(amp * (nw * k as f64 * dt).cos(), 0.0)).collect(),
            di: (0..samples).map(|k| Vec2::new(-amp * nw * (nw * k as f64 * dt).sin(), 0.0)).collect(),
        }
    }

    #[test]
    fn demand_grows_with_order() {
        let p = reference_plant().with_resistance(0.0).unwrap();
        let peaks: Vec<f64> = [1, 5, 7, 13]
            .iter()
            .map(|&n| bridge_voltage_demand(&harmonic_traj(10.0, n, 4096), &p).unwrap().peak)
            .collect();
        assert!(peaks.windows(2).all(|w| w[1] > w[0]), "{peaks:?}");
    }

    #[test]
    fn inconsistent_derivative_rejected() {
        let p = reference_plant();
        let mut t = harmonic_traj(10.0, 6, 1024);
        t.di.iter_mut().for_each(|d| *d *= 1.1);
        assert_eq!(bridge_voltage_demand(&t, &p).unwrap_err().kind(), "input");
    }

    #[test]
    fn capacitor_examples() {
        let e = capacitor_from_energy(&[0.0; 128], 1e-4, 700.0, 900.0).unwrap();
        assert_eq!((e.e_max, e.c), (0.0, 0.0));
        assert!(e.degenerate);
        let e = capacitor_from_e_max(50.0, 700.0, 900.0);
        assert_eq!(e.v_ref, 800.0);
        assert_relative_eq!(e.c, 666.7e-6, max_relative = 1e-4);

        let n = 4096;
        let dt = 0.02 / n as f64;
        let p: Vec<f64> = (0..n).map(|k| 1e3 * (600.0 * PI * k as f64 * dt).sin()).collect();
        let a = capacitor_from_energy(&p, dt, 700.0, 900.0).unwrap();
        let p2: Vec<f64> = p.iter().map(|x| 2.0 * x).collect();
        let b = capacitor_from_energy(&p2, dt, 700.0, 900.0).unwrap();
        assert_relative_eq!(b.e_max, 2.0 * a.e_max, max_relative = 1e-12);
        assert_relative_eq!(b.c, 2.0 * a.c, max_relative = 1e-12);
        // ∫ sin(6ωt) swings by ±1e3/(6ω) about its mean.
        assert_relative_eq!(a.e_max, 1e3 / (600.0 * PI), max_relative = 1e-5);

        let biased: Vec<f64> = p.iter().map(|x| x + 10.0).collect();
        assert_eq!(capacitor_from_energy(&biased, dt, 700.0, 900.0).unwrap_err().kind(), "input");
    }

    #[test]
    fn diode_bridge_pipeline_is_consistent_with_chosen_hardware() {
        let p = reference_plant();
        let inputs = SizingInputs {
            f_pwm: 7000.0,
            delta_i_mpp: 6.49,
            v_max: 900.0,
            i_max: 70.0,
            v_min: Some(700.0),
            safety_factor: 1.15,
        };
        let r = size_load_based(&LoadSpectrum::diode_bridge(310.0), &p, &inputs).unwrap();
        assert!(r.feasible, "{r:?}");
        assert!(r.v_m_bound <= 700.0);
        assert!(r.c <= 4400e-6);
        assert!((r.l_min - 3.3e-3).abs() < 0.01 * 3.3e-3);
        assert!(r.energy_convergence < 1e-3);
    }

    #[test]
    fn two_harmonic_pipeline_reports_the_actuation_bound() {
        let p = reference_plant();
        let inputs = SizingInputs {
            f_pwm: 7000.0,
            delta_i_mpp: 6.49,
            v_max: 900.0,
            i_max: 70.0,
            v_min: Some(700.0),
            safety_factor: 1.15,
        };
        let r = size_load_based(&LoadSpectrum::two_harmonics(310.0), &p, &inputs).unwrap();
        // The 7th and 13th harmonic ripple needs more than 700 V on the link.
        assert!(r.v_m_bound > 700.0 && r.v_m_bound < 900.0);
        assert!(!r.feasible);
        assert_eq!(r.remediation.len(), 3);
        assert!(r.c <= 4400e-6);
        let csv = r.to_csv();
        assert!(csv.starts_with("key,value,unit\nroute,load_based,\nL_min,"));
    }

    #[test]
    fn worst_case_trivial_cases() {
        let p = reference_plant();
        let opts = WorstCaseOptions { starts: 4, budget: 50, ..Default::default() };
        assert_eq!(worst_case_energy(0.0, &[6], &p, 700.0, &opts).unwrap().e_max, 0.0);
        assert_eq!(worst_case_energy(70.0, &[], &p, 700.0, &opts).unwrap().e_max, 0.0);
        assert_eq!(worst_case_energy(70.0, &[6], &p, 500.0, &opts).unwrap_err().kind(), "infeasible");
    }

    #[test]
    fn worst_case_is_feasible_and_reproducible() {
        let p = reference_plant();
        let opts = WorstCaseOptions { starts: 8, budget: 400, ..Default::default() };
        let a = worst_case_energy(40.0, &[6], &p, 700.0, &opts).unwrap();
        let b = worst_case_energy(40.0, &[6], &p, 700.0, &opts).unwrap();
        assert_eq!(a, b);
        assert!(a.e_max > 0.0);
        let h = a.harmonics[0];
        assert!(h.psi_d > -PI && h.psi_d <= PI);
        assert!(a.i_q0.abs() + h.i_d.max(h.i_q) <= 40.0 * 2.0);
        // The reported point satisfies both circle constraints on a fine grid.
        let fine = Problem::new(&[6], &p, 40.0, 700.0, 8192);
        let mut z = vec![a.i_q0];
        for h in &a.harmonics {
            z.extend([h.i_d * h.psi_d.cos(), -h.i_d * h.psi_d.sin(), h.i_q * h.psi_q.cos(), -h.i_q * h.psi_q.sin()]);
        }
        let shrunk: Vec<f64> = z.iter().map(|x| x * (1.0 - 1e-9)).collect();
        assert!(fine.feasible(&shrunk));
        // Sampled peaks differ between grids at second order in the spacing.
        let rel = (fine.objective(&z) - a.e_max).abs() / a.e_max;
        assert!(rel < 1e-4, "rel = {rel:e}");
    }

    proptest! {
        // v_ref² − v_m² = (v_M − v_m)(v_M + 3v_m)/4 peaks at v_m = v_M/3:
        // C falls with v_m below that point and rises above it.
        #[test]
        fn capacitance_shape_in_v_m(e in 0.1..100.0f64, a in 1.0..298.0f64, b in 302.0..850.0f64, d in 0.5..1.0f64) {
            prop_assert!(capacitor_from_e_max(e, a + d, 900.0).c < capacitor_from_e_max(e, a, 900.0).c);
            prop_assert!(capacitor_from_e_max(e, b + d, 900.0).c > capacitor_from_e_max(e, b, 900.0).c);
        }
    }
}
