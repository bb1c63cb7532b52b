use std::ops::Range;

use crate::control::exosystem::build_exosystem;
use crate::control::imc::{derivative as imc_derivative, output_at};
use crate::control::{
    divide_by_voltage, synthesize_gains, GainSynthesis, ImcState, SampledImc, SynthesisOptions, VoltageController,
    VoltageGains, VoltageOutput,
};
use crate::error::{Result, SafError};
use crate::load::{solve_phi0, Reference};
use crate::plant::{
    hexagon_check, inverse_clarke, park, park_inverse, plant_derivative, rotate_to_alpha_beta, switch_to_uabc,
    ControlVectorDq, HexagonMode, PlantParams, PowerState, Vec2, Vec3,
};
use crate::sim::integrator::Rk4;
use crate::sim::pwm::{duties, switch_at, switching_edges};
use crate::sim::report::{compensation_report, CompensationRow};
use crate::sim::scenario::{Mode, Scenario};

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub t: f64,
    pub kind: &'static str,
    pub detail: String,
}

/// Recorded traces of one closed-loop run, one entry per output sample.
#[derive(Debug, Clone, Default)]
pub struct RunResult {
    pub mode: Mode,
    pub f_m: f64,
    pub samples_per_period: usize,
    pub t: Vec<f64>,
    pub x: Vec<Vec2>,
    /// Tracked reference `x* + (η, 0)`.
    pub x_ref: Vec<Vec2>,
    pub x_err: Vec<Vec2>,
    pub v: Vec<f64>,
    pub z: Vec<f64>,
    pub z_a: Vec<f64>,
    pub eta: Vec<f64>,
    pub eta_a: Vec<f64>,
    pub d_eta: Vec<f64>,
    pub theta: Vec<f64>,
    pub warmup: Vec<bool>,
    pub u_dq: Vec<Vec2>,
    pub i_filter: Vec<Vec3>,
    pub i_load: Vec<Vec3>,
    pub i_mains: Vec<Vec3>,
    pub events: Vec<Event>,
    pub phi0: f64,
    pub k: f64,
    pub k_bar: f64,
    pub gains_report: String,
    /// Held-loop spectral radius at `f_s` (sampled modes).
    pub sampled_spectral_radius: Option<f64>,
    pub pwm_clamps: usize,
    pub hexagon_violations: usize,
}

impl RunResult {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Sample range of the last `periods` full periods, end point excluded.
    pub fn last_periods(&self, periods: usize) -> Range<usize> {
        let n = periods * self.samples_per_period;
        let end = self.len().saturating_sub(1);
        end.saturating_sub(n)..end
    }

    /// Phase-`a` compensation table over the last `periods` periods.
    pub fn compensation(&self, periods: usize, orders_hz: &[f64]) -> Result<Vec<CompensationRow>> {
        let r = self.last_periods(periods);
        let mains: Vec<f64> = self.i_mains[r.clone()].iter().map(|i| i[0]).collect();
        let load: Vec<f64> = self.i_load[r].iter().map(|i| i[0]).collect();
        compensation_report(&mains, &load, self.f_m, periods, orders_hz)
    }

    /// RMS of `‖x̃‖` over a sample range.
    pub fn x_err_rms(&self, r: Range<usize>) -> f64 {
        let n = r.len() as f64;
        (self.x_err[r].iter().map(|e| e.norm_squared()).sum::<f64>() / n).sqrt()
    }
}

struct Ctx<'a> {
    sc: &'a Scenario,
    p: &'a PlantParams,
    reference: &'a Reference,
    gs: &'a GainSynthesis,
    xi0: Option<Vec<f64>>,
}

impl Ctx<'_> {
    fn record(&self, out: &mut RunResult, t: f64, x: Vec2, v: f64, x_ref: Vec2, u_dq: Vec2, vo: &VoltageOutput) {
        let p = self.p;
        let theta = p.theta(t);
        let i_f = inverse_clarke(&rotate_to_alpha_beta(&(x / p.v_m()), theta));
        let x_l = self.sc.spectrum.eval(t, p.omega_m());
        let i_l = inverse_clarke(&rotate_to_alpha_beta(&(x_l / p.v_m()), theta));
        out.t.push(t);
        out.x.push(x);
        out.x_ref.push(x_ref);
        out.x_err.push(x - x_ref);
        out.v.push(v);
        out.z.push(v * v - self.sc.v_ref_sq());
        out.z_a.push(vo.z_a);
        out.eta.push(vo.eta);
        out.eta_a.push(vo.eta_a);
        out.d_eta.push(vo.d_eta);
        out.theta.push(vo.theta);
        out.warmup.push(vo.warming_up);
        out.u_dq.push(u_dq);
        out.i_filter.push(i_f);
        out.i_load.push(i_l);
        out.i_mains.push(i_l + i_f);
    }

    fn biased_ref(&self, t: f64, eta: f64) -> Vec2 {
        self.reference.value(t) + Vec2::new(eta, 0.0)
    }
}

fn check_state(y: &[f64], t: f64, floor: f64) -> Result<()> {
    if let Some(i) = y.iter().position(|v| !v.is_finite()) {
        return Err(SafError::NonFinite {
            t,
            detail: format!("state component {i} = {}", y[i]),
        });
    }
    if y[2] < floor {
        return Err(SafError::Controllability { t, v: y[2], floor });
    }
    Ok(())
}

/// Runs one closed-loop scenario.
pub fn run_scenario(sc: &Scenario) -> Result<RunResult> {
    sc.validate()?;
    let p = &sc.params;
    let cc = &sc.controller;
    let exo = build_exosystem(&cc.orders, p.omega_m())?;
    let gs = synthesize_gains(
        &exo,
        p,
        &SynthesisOptions {
            k_d: cc.k_d,
            k_q: cc.k_q,
            k: cc.k,
            fg: cc.fg,
            ..Default::default()
        },
    )?;
    let reference = Reference::from_load(&sc.spectrum, p.omega_m());
    let phi0 = solve_phi0(&reference, p)?;
    let vc = VoltageController::new(
        VoltageGains {
            k_p: cc.k_p,
            k_i: cc.k_i,
            epsilon: p.epsilon(),
            period: p.period(),
            f_s: sc.f_s,
        },
        cc.warmup,
    )?;
    let mut out = RunResult {
        mode: sc.mode,
        f_m: p.f_m(),
        samples_per_period: sc.samples_per_period(),
        phi0,
        k: gs.k,
        k_bar: gs.k_bar,
        gains_report: gs.report(),
        ..Default::default()
    };
    out.events.push(Event {
        t: 0.0,
        kind: "gains",
        detail: format!("k = {:e}, k_bar = {:e}, boundary-layer abscissa = {:e}", gs.k, gs.k_bar, gs.boundary_layer_abscissa()),
    });
    let xi0 = if cc.preload {
        let hold = p.d0() * p.l();
        Some(gs.holding_state([hold[0], hold[1]])?)
    } else {
        None
    };
    let ctx = Ctx {
        sc,
        p,
        reference: &reference,
        gs: &gs,
        xi0,
    };
    match sc.mode {
        Mode::Continuous => run_continuous(&ctx, vc, &mut out)?,
        Mode::Sampled | Mode::SampledPwm => {
            let rho = gs.sampled_spectral_radius(sc.sample_period());
            out.sampled_spectral_radius = Some(rho);
            out.events.push(Event {
                t: 0.0,
                kind: if rho < 1.0 { "sampled_loop" } else { "sampled_loop_unstable" },
                detail: format!("held-loop spectral radius {rho:e} at f_s = {} Hz", sc.f_s),
            });
            run_sampled(&ctx, vc, &mut out)?
        }
    }
    if out.pwm_clamps > 0 {
        out.events.push(Event {
            t: sc.duration,
            kind: "pwm_clamp",
            detail: format!("{} duty samples clamped to [0, 1]", out.pwm_clamps),
        });
    }
    if out.hexagon_violations > 0 {
        out.events.push(Event {
            t: sc.duration,
            kind: "hexagon",
            detail: format!("{} commands outside the switch hexagon", out.hexagon_violations),
        });
    }
    Ok(out)
}

fn note_warmup(out: &mut RunResult, was: &mut bool, vo: &VoltageOutput, t: f64) {
    if *was && !vo.warming_up {
        out.events.push(Event {
            t,
            kind: "warmup_end",
            detail: "one-period averages available".into(),
        });
    }
    *was = vo.warming_up;
}

fn run_continuous(ctx: &Ctx, mut vc: VoltageController, out: &mut RunResult) -> Result<()> {
    let (sc, p, gs) = (ctx.sc, ctx.p, ctx.gs);
    let n_xi = gs.dim();
    let mut y = vec![0.0; 3 + n_xi];
    y[2] = sc.v0;
    if let Some(xi) = &ctx.xi0 {
        y[3..].copy_from_slice(xi);
    }
    let h = sc.step();
    let steps = (sc.duration / h).round() as usize;
    let dec = sc.decimation();
    let ts = sc.sample_period();
    let enabled = sc.controller.enabled;
    let floor = sc.controller.v_floor;
    let mut rk = Rk4::new(y.len());
    let mut vo = VoltageOutput {
        warming_up: true,
        ..Default::default()
    };
    let mut warm = true;
    let mut next_sample = 0usize;
    let (l, eps) = (p.l(), p.epsilon());
    let d0 = p.d0();
    for step in 0..=steps {
        let t = step as f64 * h;
        while (next_sample as f64) * ts < t + 0.5 * h {
            if enabled {
                vo = vc.update(y[2] * y[2] - sc.v_ref_sq());
                note_warmup(out, &mut warm, &vo, t);
            }
            next_sample += 1;
        }
        let eta = vo.eta;
        if step % dec == 0 {
            let x = Vec2::new(y[0], y[1]);
            let xr = ctx.biased_ref(t, eta);
            let u_dq = if enabled {
                output_at(gs, &y[3..], &(x - xr)) / y[2]
            } else {
                Vec2::zeros()
            };
            ctx.record(out, t, x, y[2], xr, u_dq, &vo);
        }
        if step == steps {
            break;
        }
        rk.step(&mut y, t, h, |t, y, dy| {
            let x = Vec2::new(y[0], y[1]);
            let u_bar = if enabled {
                let xt = x - ctx.biased_ref(t, eta);
                imc_derivative(gs, &y[3..], &xt, &mut dy[3..]);
                output_at(gs, &y[3..], &xt)
            } else {
                dy[3..].iter_mut().for_each(|d| *d = 0.0);
                Vec2::zeros()
            };
            let mx = p.apply_m(&x);
            dy[0] = mx[0] - u_bar[0] / l + d0[0];
            dy[1] = mx[1] - u_bar[1] / l + d0[1];
            dy[2] = 0.5 * eps * u_bar.dot(&x) / y[2];
        });
        check_state(&y, t + h, floor)?;
    }
    Ok(())
}

fn plant_rhs(p: &PlantParams, u_ab: Vec2) -> impl Fn(f64, &[f64], &mut [f64]) + '_ {
    move |t, y, dy| {
        let u = ControlVectorDq::from_vec(park(&u_ab, p.theta(t), p.v_m()));
        let d = plant_derivative(&PowerState::new(y[0], y[1], y[2]), &u, p);
        dy[0] = d.x_d;
        dy[1] = d.x_q;
        dy[2] = d.v;
    }
}

fn run_sampled(ctx: &Ctx, mut vc: VoltageController, out: &mut RunResult) -> Result<()> {
    let (sc, p, gs) = (ctx.sc, ctx.p, ctx.gs);
    let ts = sc.sample_period();
    let sub = sc.substeps();
    let h = ts / sub as f64;
    let n_samples = (sc.duration / ts).round() as usize;
    let dec = sc.decimation();
    let enabled = sc.controller.enabled;
    let floor = sc.controller.v_floor;
    let disc = SampledImc::new(gs, ts);
    let mut imc = ImcState::new(gs);
    if let Some(xi) = &ctx.xi0 {
        imc.xi_mut().copy_from_slice(xi);
    }
    let mut y = vec![0.0, 0.0, sc.v0];
    let mut rk = Rk4::new(3);
    let mut warm = true;
    let mut vo = VoltageOutput {
        warming_up: true,
        ..Default::default()
    };
    for k in 0..=n_samples {
        let t_k = k as f64 * ts;
        let x = Vec2::new(y[0], y[1]);
        if enabled {
            vo = vc.update(y[2] * y[2] - sc.v_ref_sq());
            note_warmup(out, &mut warm, &vo, t_k);
        }
        let xr = ctx.biased_ref(t_k, vo.eta);
        let u_dq = if enabled {
            let u_bar = imc.step_zoh(gs, &disc, &(x - xr));
            divide_by_voltage(&u_bar, y[2], floor, t_k)?
        } else {
            Vec2::zeros()
        };
        // Rotate with the mid-period angle so the held αβ vector averages
        // to the dq command over the period.
        let u_ab = park_inverse(&u_dq, p.theta(t_k + 0.5 * ts), p.v_m())?;
        if !hexagon_check(&u_ab, HexagonMode::ExactHexagon).feasible {
            out.hexagon_violations += 1;
        }
        if (k * sub) % dec == 0 {
            ctx.record(out, t_k, x, y[2], xr, u_dq, &vo);
        }
        if k == n_samples {
            break;
        }
        match sc.mode {
            Mode::SampledPwm => {
                let u_abc = inverse_clarke(&u_ab);
                let (d, clamped) = duties(&u_abc, sc.modulator);
                out.pwm_clamps += clamped;
                let edges = switching_edges(&d);
                for s in 0..sub {
                    let (a, b) = (s as f64 / sub as f64, (s + 1) as f64 / sub as f64);
                    let mut cuts = vec![a];
                    cuts.extend(edges.iter().copied().filter(|&e| e > a && e < b));
                    cuts.push(b);
                    for w in cuts.windows(2) {
                        let sw = switch_at(&d, 0.5 * (w[0] + w[1]));
                        let (_, u_sw) = switch_to_uabc(&sw);
                        rk.step(&mut y, t_k + w[0] * ts, (w[1] - w[0]) * ts, plant_rhs(p, u_sw));
                    }
                    let t = t_k + b * ts;
                    check_state(&y, t, floor)?;
                    if (k * sub + s + 1) % dec == 0 && s + 1 < sub {
                        ctx.record(out, t, Vec2::new(y[0], y[1]), y[2], ctx.biased_ref(t, vo.eta), u_dq, &vo);
                    }
                }
            }
            _ => {
                let f = plant_rhs(p, u_ab);
                for s in 0..sub {
                    let t = t_k + s as f64 * h;
                    rk.step(&mut y, t, h, &f);
                    check_state(&y, t + h, floor)?;
                    if (k * sub + s + 1) % dec == 0 && s + 1 < sub {
                        ctx.record(out, t + h, Vec2::new(y[0], y[1]), y[2], ctx.biased_ref(t + h, vo.eta), u_dq, &vo);
                    }
                }
            }
        }
    }
    Ok(())
}
