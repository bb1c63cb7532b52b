//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Tolerances are pinned here and nowhere else.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use saf::control::exosystem::build_exosystem;
use saf::control::sylvester::solve_sylvester;
use saf::control::synthesis::internal_model_pair;
use saf::control::{synthesize_gains, FgChoice, SynthesisOptions};
use saf::linalg::Mat;
use saf::load::{solve_phi0, voltage_drive, Reference};
use saf::plant::{clarke, inverse_clarke, park, park_inverse, switch_to_uabc, SwitchVector, Vec3, SQRT_3};
use saf::sim::export::{controller_csv, currents_csv, powers_csv, voltage_csv};
use saf::sim::{run_scenario, Mode, RunResult, Scenario};
use saf::sizing::{worst_case_energy, WorstCaseOptions};

const MIN_TWO_HARMONICS_PERCENT: f64 = 99.5;
const MAX_TWO_HARMONICS_SECONDS: f64 = 60.0;
const MIN_DIODE_BRIDGE_PERCENT: f64 = 95.0;
const V_WINDOW: (f64, f64) = (700.0, 900.0);
const SETTLE_PERIODS: usize = 20;
const Z_A_FRACTION: f64 = 0.01;
const ETA_A_REL: f64 = 0.05;
const SCALING_PERIODS: f64 = 60.0;
const SCALING_WINDOW: usize = 10;
const ORACLE_REL: f64 = 0.02;
const ORACLE_GRID: usize = 200;
const PROPERTY_SECONDS: f64 = 10.0;

struct Report {
    failed: usize,
}

impl Report {
    fn check(&mut self, id: &str, ok: bool, detail: String) {
        println!("{} {id}: {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failed += 1;
        }
    }
}

fn v_range(r: &RunResult) -> (f64, f64) {
    r.v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

fn z_a_after(r: &RunResult, periods: usize) -> f64 {
    r.z_a[periods * r.samples_per_period..]
        .iter()
        .fold(0.0f64, |m, z| m.max(z.abs()))
}

/// Mean of `η_a` over the final period.
fn eta_a_final(r: &RunResult) -> f64 {
    let w = r.last_periods(1);
    let n = w.len() as f64;
    r.eta_a[w].iter().sum::<f64>() / n
}

fn independent_phi0(sc: &Scenario) -> f64 {
    let reference = Reference::from_load(&sc.spectrum, sc.params.omega_m());
    solve_phi0(&reference, &sc.params).expect("phi0")
}

fn regulation(rep: &mut Report, id: &str, sc: &Scenario, r: &RunResult) {
    let (lo, hi) = v_range(r);
    let l_star = 0.5 * (sc.v_max * sc.v_max - sc.v_min * sc.v_min);
    let z = z_a_after(r, SETTLE_PERIODS);
    rep.check(
        id,
        lo >= V_WINDOW.0 && hi <= V_WINDOW.1 && z < Z_A_FRACTION * l_star,
        format!(
            "{} {}: v(0) = {} V, v in [{lo:.2}, {hi:.2}] V; max |z_a| after {SETTLE_PERIODS} periods = {:.3e} l* (limit {Z_A_FRACTION})",
            sc.name,
            sc.mode,
            sc.v0,
            z / l_star
        ),
    );
}

fn loss_bias(rep: &mut Report, id: &str, sc: &Scenario, r: &RunResult) {
    let phi0 = independent_phi0(sc);
    let eta_a = eta_a_final(r);
    let rel = (eta_a - phi0).abs() / phi0;
    rep.check(
        id,
        rel < ETA_A_REL,
        format!("{} {}: eta_a = {eta_a:.4}, phi0 = {phi0:.4} V·A, rel. error {rel:.3e} (limit {ETA_A_REL})", sc.name, sc.mode),
    );
}

fn compensation(rep: &mut Report, id: &str, sc: &Scenario, r: &RunResult, min: f64, extra: String) -> bool {
    let rows = r.compensation(sc.analysis_periods, &sc.compensation_hz).expect("compensation table");
    let ok = !rows.is_empty() && rows.iter().all(|row| row.percent.is_some_and(|p| p >= min));
    let table: Vec<String> = rows
        .iter()
        .map(|row| format!("{} Hz {:.4}%", row.f_hz, row.percent.unwrap_or(f64::NAN)))
        .collect();
    rep.check(id, ok, format!("{} {}: {} (min {min}%){extra}", sc.name, sc.mode, table.join(", ")));
    ok
}

// ---------------------------------------------------------------------------
// Dense-grid oracle for the single-order worst case.
//
// With i_d = A_d cos(nωt), i_q = I_q0 + A_q cos(nωt + ψ) the cross terms of
// u·i cancel and the stored energy is V_m A_d sin(nωt)/(nω) − (L/2)|i|².
// Everything is periodic in one harmonic cycle, so that is all we sample.
// The swing is convex in I_q0 and both constraints cut an interval out of
// the I_q0 axis, so only the interval ends need evaluating.

struct Oracle {
    n_omega: f64,
    omega_l: f64,
    l: f64,
    v_m: f64,
    i_max: f64,
    u_max: f64,
}

/// `{y : (a + y)² + b² ≤ r²}` as an interval.
fn disc_interval(a: f64, b: f64, r: f64) -> Option<(f64, f64)> {
    let h = r * r - b * b;
    (h >= 0.0).then(|| (-a - h.sqrt(), -a + h.sqrt()))
}

impl Oracle {
    fn dc_interval(&self, a_d: f64, a_q: f64, psi: f64, samples: usize) -> Option<(f64, f64)> {
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for k in 0..samples {
            let ph = 2.0 * PI * k as f64 / samples as f64;
            let (s, c) = ph.sin_cos();
            let (s2, c2) = (ph + psi).sin_cos();
            let i_d = a_d * c;
            let (l1, h1) = disc_interval(a_q * c2, i_d, self.i_max)?;
            // u_d = base + ωL·I_q0, u_q does not depend on I_q0.
            let base = self.v_m + self.l * self.n_omega * a_d * s + self.omega_l * a_q * c2;
            let u_q = self.l * self.n_omega * a_q * s2 - self.omega_l * i_d;
            let (l2, h2) = disc_interval(base, u_q, self.u_max)?;
            lo = lo.max(l1).max(l2 / self.omega_l);
            hi = hi.min(h1).min(h2 / self.omega_l);
            if lo > hi {
                return None;
            }
        }
        Some((lo, hi))
    }

    fn swing(&self, a_d: f64, a_q: f64, psi: f64, i_q0: f64, samples: usize) -> f64 {
        let (mut lo, mut hi, mut mean) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
        for k in 0..samples {
            let ph = 2.0 * PI * k as f64 / samples as f64;
            let (s, c) = ph.sin_cos();
            let (i_d, i_q) = (a_d * c, i_q0 + a_q * (ph + psi).cos());
            let e = self.v_m * a_d * s / self.n_omega - 0.5 * self.l * (i_d * i_d + i_q * i_q);
            lo = lo.min(e);
            hi = hi.max(e);
            mean += e;
        }
        mean /= samples as f64;
        (hi - mean).max(mean - lo)
    }

    /// Best swing over `I_q0` for fixed amplitudes and relative phase.
    fn best_dc(&self, a_d: f64, a_q: f64, psi: f64, samples: usize) -> Option<(f64, f64)> {
        let (lo, hi) = self.dc_interval(a_d, a_q, psi, samples)?;
        let (e_lo, e_hi) = (self.swing(a_d, a_q, psi, lo, samples), self.swing(a_d, a_q, psi, hi, samples));
        Some(if e_lo >= e_hi { (e_lo, lo) } else { (e_hi, hi) })
    }

    /// `ORACLE_GRID²` amplitude grid with a phase scan, then two nested
    /// refinements around the best cells.
    fn search(&self) -> (f64, [f64; 4]) {
        let g = ORACLE_GRID;
        let step = self.i_max / (g - 1) as f64;
        let mut cells = Vec::new();
        for a in 0..g {
            for b in 0..g {
                let (a_d, a_q) = (a as f64 * step, b as f64 * step);
                let mut best: Option<(f64, [f64; 4])> = None;
                for j in 0..24 {
                    let psi = 2.0 * PI * j as f64 / 24.0;
                    if let Some((e, dc)) = self.best_dc(a_d, a_q, psi, 48) {
                        if best.is_none_or(|(v, _)| e > v) {
                            best = Some((e, [a_d, a_q, psi, dc]));
                        }
                    }
                }
                cells.extend(best);
            }
        }
        cells.sort_by(|x, y| y.0.total_cmp(&x.0));
        let mut best = (0.0, [0.0; 4]);
        let refine = |z: [f64; 4], da: f64, dpsi: f64, m: i32, samples: usize, best: &mut (f64, [f64; 4])| {
            for i in -m..=m {
                for j in -m..=m {
                    let a_d = (z[0] + i as f64 * da).clamp(0.0, self.i_max);
                    let a_q = (z[1] + j as f64 * da).clamp(0.0, self.i_max);
                    for k in -m..=m {
                        let psi = z[2] + k as f64 * dpsi;
                        if let Some((e, dc)) = self.best_dc(a_d, a_q, psi, samples) {
                            if e > best.0 {
                                *best = (e, [a_d, a_q, psi, dc]);
                            }
                        }
                    }
                }
            }
        };
        for &(_, z) in cells.iter().take(16) {
            refine(z, 0.25 * step, 2.0 * PI / 24.0 / 8.0, 4, 256, &mut best);
        }
        let z = best.1;
        refine(z, 0.025 * step, 2.0 * PI / 24.0 / 80.0, 5, 2048, &mut best);
        best
    }
}

fn sizing_oracle(rep: &mut Report) {
    let params = saf::sim::scenario::reference_plant();
    let (order, v_m) = (6u32, 700.0);
    let opts = WorstCaseOptions::default();
    let limits = [10.0, 20.0, 30.0, 40.0];
    let mut found = Vec::new();
    for &i_max in &limits {
        found.push(worst_case_energy(i_max, &[order], &params, v_m, &opts).expect("worst case").e_max);
    }
    for (j, &i_max) in limits.iter().enumerate().filter(|(j, _)| *j % 2 == 1) {
        let oracle = Oracle {
            n_omega: order as f64 * params.omega_m(),
            omega_l: params.omega_m() * params.l(),
            l: params.l(),
            v_m: params.v_m(),
            i_max,
            u_max: v_m / SQRT_3,
        };
        let t0 = Instant::now();
        let (e, z) = oracle.search();
        let rel = (found[j] - e).abs() / e;
        rep.check(
            &format!("6.{}", j / 2 + 1),
            rel <= ORACLE_REL,
            format!(
                "order {order}, I_max = {i_max} A: search {:.5} J, dense grid {e:.5} J (A_d {:.2}, A_q {:.2}, I_q0 {:.2}; {:.1} s), rel. diff {rel:.3e} (limit {ORACLE_REL})",
                found[j],
                z[0],
                z[1],
                z[3],
                t0.elapsed().as_secs_f64()
            ),
        );
    }
    let monotone = found.windows(2).all(|w| w[1] >= w[0]);
    let list: Vec<String> = limits.iter().zip(&found).map(|(i, e)| format!("{i} A: {e:.4} J")).collect();
    rep.check("6.3", monotone, format!("E_max non-decreasing in I_max: {}", list.join(", ")));
}

// ---------------------------------------------------------------------------
// Property suite.

fn transforms_round_trip(rng: &mut ChaCha8Rng) -> f64 {
    let mut worst = 0.0f64;
    for _ in 0..2000 {
        let (a, b): (f64, f64) = (rng.random_range(-1e3..1e3), rng.random_range(-1e3..1e3));
        let abc = Vec3::new(a, b, -a - b);
        let ab = clarke(&abc).expect("zero-sum input");
        let back = inverse_clarke(&ab);
        worst = worst.max((back - abc).amax() / abc.amax().max(1.0));
        let theta = rng.random_range(-10.0..10.0);
        let dq = park(&ab, theta, 310.0);
        let ab2 = park_inverse(&dq, theta, 310.0).expect("V_m > 0");
        worst = worst.max((ab2 - ab).amax() / ab.amax().max(1.0));
    }
    worst
}

fn vertex_table_exact() -> bool {
    let (t, s) = (1.0 / 3.0, 2.0 / 3.0);
    let expected: [[f64; 3]; 8] = [
        [0.0, 0.0, 0.0],
        [s, -t, -t],
        [t, t, -s],
        [-t, s, -t],
        [-s, t, t],
        [-t, -t, s],
        [t, -s, t],
        [0.0, 0.0, 0.0],
    ];
    let r = 1.0 / SQRT_3;
    let expected_ab: [[f64; 2]; 8] = [
        [0.0, 0.0],
        [s, 0.0],
        [t, r],
        [-t, r],
        [-s, 0.0],
        [-t, -r],
        [t, -r],
        [0.0, 0.0],
    ];
    SwitchVector::vertices().iter().enumerate().all(|(k, sv)| {
        let (abc, ab) = switch_to_uabc(sv);
        (0..3).all(|i| abc[i] == expected[k][i]) && (0..2).all(|i| (ab[i] - expected_ab[k][i]).abs() <= 4.0 * f64::EPSILON)
    })
}

fn sylvester_worst(omega_m: f64) -> f64 {
    let mut worst = 0.0f64;
    for orders in [vec![6u32], vec![6, 12], vec![6, 12, 18], vec![6, 12, 18, 24]] {
        let exo = build_exosystem(&orders, omega_m).expect("exosystem");
        // The companion form's monic coefficients span ~15 decades from four
        // orders on; its spectrum is no longer recoverable there.
        let choices: &[FgChoice] = if orders.len() < 4 {
            &[FgChoice::Diagonal, FgChoice::Companion]
        } else {
            &[FgChoice::Diagonal]
        };
        for &fg in choices {
            let (f, g) = internal_model_pair(fg, exo.dim(), omega_m);
            let sol = solve_sylvester(&f, &g, exo.omega(), exo.gamma_row()).expect("Sylvester");
            // Residual recomputed here rather than trusted from the solver.
            let res: Mat = &f * &sol.e - &sol.e * exo.omega() + &g * exo.gamma_row();
            worst = worst.max(res.norm() / sol.e.norm());
        }
    }
    worst
}

fn drive_mean_ratio(sc: &Scenario) -> f64 {
    let phi0 = independent_phi0(sc);
    let reference = Reference::from_load(&sc.spectrum, sc.params.omega_m()).with_phi0(phi0);
    let n = 4096;
    let period = sc.params.period();
    let vals: Vec<f64> = (0..n)
        .map(|k| voltage_drive(&reference, &sc.params, period * k as f64 / n as f64))
        .collect();
    let peak = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    (vals.iter().sum::<f64>() / n as f64).abs() / peak
}

fn rk4_ratio() -> f64 {
    let mut sc = Scenario::two_harmonics();
    sc.duration = sc.params.period();
    sc.analysis_periods = 1;
    sc.decimation = Some(1);
    let ts = sc.sample_period();
    let end = |div: f64| {
        let mut s = sc.clone();
        s.step = Some(ts / div);
        let r = run_scenario(&s).expect("run");
        r.x[r.len() - 1]
    };
    let (a, b, c) = (end(32.0), end(64.0), end(128.0));
    (a - b).norm() / (b - c).norm()
}

fn node_law_worst(r: &RunResult) -> f64 {
    (0..r.len())
        .map(|i| {
            let d = r.i_mains[i] - r.i_load[i] - r.i_filter[i];
            d.amax() / r.i_load[i].amax().max(r.i_filter[i].amax()).max(1.0)
        })
        .fold(0.0, f64::max)
}

fn tables(r: &RunResult) -> String {
    [currents_csv(r), powers_csv(r), voltage_csv(r), controller_csv(r)].concat()
}

fn property_suite(rep: &mut Report) {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let plant = saf::sim::scenario::reference_plant();

    let rt = transforms_round_trip(&mut rng);
    rep.check("7.1", rt <= 1e-12, format!("Clarke/Park round trips: worst rel. error {rt:.2e} (limit 1e-12)"));

    rep.check("7.2", vertex_table_exact(), "switch vertex table reproduced".into());

    let syl = sylvester_worst(plant.omega_m());
    rep.check("7.3", syl < 1e-10, format!("Sylvester residuals: worst {syl:.2e} (limit 1e-10)"));

    let mut abscissae = Vec::new();
    for sc in [Scenario::two_harmonics(), Scenario::diode_bridge()] {
        let exo = build_exosystem(&sc.controller.orders, plant.omega_m()).expect("exosystem");
        for k in [sc.controller.k, None] {
            let opts = SynthesisOptions { k, ..Default::default() };
            let gs = synthesize_gains(&exo, &sc.params, &opts).expect("synthesis");
            abscissae.push((gs.k, gs.boundary_layer_abscissa()));
        }
    }
    let worst = abscissae.iter().map(|a| a.1).fold(f64::NEG_INFINITY, f64::max);
    let list: Vec<String> = abscissae.iter().map(|(k, a)| format!("k = {k:.3}: {a:.3}")).collect();
    rep.check("7.4", worst < 0.0, format!("boundary-layer spectral abscissa (1/s): {}", list.join(", ")));

    let m = drive_mean_ratio(&Scenario::two_harmonics()).max(drive_mean_ratio(&Scenario::diode_bridge()));
    rep.check("7.5", m < 1e-4, format!("period mean of the biased voltage drive: {m:.2e} of peak (limit 1e-4)"));

    let ratio = rk4_ratio();
    rep.check("7.6", (12.0..=20.0).contains(&ratio), format!("RK4 step-halving error ratio {ratio:.3} (band [12, 20])"));

    let mut sc = Scenario::diode_bridge();
    sc.duration = 4.0 * sc.params.period();
    sc.analysis_periods = 1;
    let r1 = run_scenario(&sc).expect("run");
    let node = node_law_worst(&r1);
    rep.check("7.7", node <= 1e-12, format!("node law i_M = i_L + i_F: worst rel. error {node:.2e} (limit 1e-12)"));

    let r2 = run_scenario(&sc).expect("run");
    rep.check("7.8", tables(&r1) == tables(&r2), "repeated runs give byte-identical tables".into());

    let secs = t0.elapsed().as_secs_f64();
    rep.check("7.9", secs < PROPERTY_SECONDS, format!("property suite took {secs:.2} s (limit {PROPERTY_SECONDS} s)"));
}

fn main() -> ExitCode {
    let mut rep = Report { failed: 0 };

    let th = Scenario::two_harmonics();
    let t0 = Instant::now();
    let r_th = run_scenario(&th).expect("two-harmonics run");
    let secs = t0.elapsed().as_secs_f64();
    let periods = th.duration * th.params.f_m();
    compensation(
        &mut rep,
        "1",
        &th,
        &r_th,
        MIN_TWO_HARMONICS_PERCENT,
        format!("; {periods:.0} periods in {secs:.2} s (limit {MAX_TWO_HARMONICS_SECONDS} s)"),
    );
    if secs >= MAX_TWO_HARMONICS_SECONDS {
        rep.check("1.t", false, format!("runtime {secs:.2} s"));
    }

    let db = Scenario::diode_bridge();
    let r_db = run_scenario(&db).expect("diode-bridge run");
    compensation(&mut rep, "2", &db, &r_db, MIN_DIODE_BRIDGE_PERCENT, String::new());

    regulation(&mut rep, "3.1", &th, &r_th);
    regulation(&mut rep, "3.2", &db, &r_db);

    loss_bias(&mut rep, "4.1", &th, &r_th);
    let db_sampled = Scenario::diode_bridge().with_mode(Mode::Sampled);
    let r_dbs = run_scenario(&db_sampled).expect("sampled diode-bridge run");
    loss_bias(&mut rep, "4.2", &db_sampled, &r_dbs);

    let mut rms = Vec::new();
    for c in [4400e-6, 8800e-6] {
        let mut sc = Scenario::diode_bridge().with_mode(Mode::Sampled);
        sc.params = sc.params.with_capacitance(c).expect("positive C");
        sc.duration = SCALING_PERIODS * sc.params.period();
        let r = run_scenario(&sc).expect("scaling run");
        rms.push((c, r.x_err_rms(r.last_periods(SCALING_WINDOW))));
    }
    rep.check(
        "5",
        rms[1].1 < rms[0].1,
        format!(
            "steady RMS |x_err| (sampled, last {SCALING_WINDOW} of {SCALING_PERIODS} periods): C = {:.0} uF -> {:.4e} V·A, C = {:.0} uF -> {:.4e} V·A",
            rms[0].0 * 1e6,
            rms[0].1,
            rms[1].0 * 1e6,
            rms[1].1
        ),
    );

    sizing_oracle(&mut rep);
    property_suite(&mut rep);

    if rep.failed == 0 {
        println!("all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("{} criteria failed", rep.failed);
        ExitCode::FAILURE
    }
}
