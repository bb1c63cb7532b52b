//! `saf size | simulate | analyze`.
//!
//! Every command takes one or more `--config` files and writes into
//! `--out` (one subdirectory per file when several are given). `analyze`
//! reads `currents.csv` from the output directory of an earlier `simulate`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::config::ConfigFile;
use crate::error::{Result, SafError};
use crate::sim::export::{compensation_csv, read_columns, write_file, write_run};
use crate::sim::report::compensation_report;
use crate::sim::run::run_scenario;
use crate::sim::scenario::Mode;
use crate::sim::spectrum::spectrum;
use crate::sizing::{size_load_based, size_switches_based};

#[derive(Debug, Parser)]
#[command(name = "saf", version, about = "Shunt active filter sizing, control and simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Size the inductor, DC-link window and capacitor.
    Size(CommonArgs),
    /// Run the closed loop and write signal tables.
    Simulate(CommonArgs),
    /// Recompute spectra and compensation from an earlier run's CSVs.
    Analyze(CommonArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Size(_) => "size",
            Command::Simulate(_) => "simulate",
            Command::Analyze(_) => "analyze",
        }
    }

    fn args(&self) -> &CommonArgs {
        match self {
            Command::Size(a) | Command::Simulate(a) | Command::Analyze(a) => a,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Scenario file; repeat for a batch.
    #[arg(long = "config", required = true)]
    pub config: Vec<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Overrides `sizing.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for a batch.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Overrides `simulation.mode`.
    #[arg(long)]
    pub mode: Option<Mode>,
}

/// What a command did, with enough context to repeat it.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub config: String,
    pub outputs: Vec<String>,
    pub decisions: Vec<String>,
    pub events: Vec<String>,
}

const CONFIG_BEGIN: &str = "--- resolved config ---";
const CONFIG_END: &str = "--- end config ---";

impl RunManifest {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "command = {}", self.command);
        let _ = writeln!(s, "version = {}", self.version);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "outputs = {}", self.outputs.join(", "));
        s.push_str("decisions:\n");
        for d in &self.decisions {
            let _ = writeln!(s, "  - {d}");
        }
        if !self.events.is_empty() {
            s.push_str("events:\n");
            for e in &self.events {
                let _ = writeln!(s, "  - {e}");
            }
        }
        let _ = writeln!(s, "{CONFIG_BEGIN}");
        s.push_str(&self.config);
        let _ = writeln!(s, "{CONFIG_END}");
        s
    }

    /// Extracts the echoed configuration from a manifest's text.
    pub fn config_from_text(text: &str) -> Result<ConfigFile> {
        let start = text
            .find(CONFIG_BEGIN)
            .ok_or_else(|| SafError::Input("manifest has no config block".into()))?
            + CONFIG_BEGIN.len();
        let end = text[start..]
            .find(CONFIG_END)
            .ok_or_else(|| SafError::Input("manifest config block is not terminated".into()))?;
        ConfigFile::parse(&text[start..start + end])
    }
}

fn decisions(cfg: &ConfigFile) -> Vec<String> {
    let c = &cfg.controller;
    vec![
        format!("PWM common mode: {} offset", cfg.simulation.modulator),
        format!("voltage-loop warm-up: {}", c.warmup),
        format!("internal model preloaded with the mains drive: {}", c.preload),
        format!("internal-model pair (F, G): {}", c.fg),
        "sampled internal model: exact zero-order hold; PI integrator: explicit Euler".into(),
        "output convention: pre-update internal-model state".into(),
        "DC reference: v² regulated to (v_m² + v_M²)/2".into(),
    ]
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| SafError::Io {
        path: dir.display().to_string(),
        source,
    })
}

fn prepare(path: &Path, args: &CommonArgs) -> Result<ConfigFile> {
    let mut cfg = ConfigFile::load(path)?;
    if let Some(seed) = args.seed {
        cfg.sizing.seed = seed;
    }
    if let Some(mode) = args.mode {
        cfg.set_mode(mode);
    }
    cfg.resolved()
}

/// Runs one command on one configuration.
pub fn dispatch(command: &str, cfg: &ConfigFile, out: &Path) -> Result<RunManifest> {
    create_dir(out)?;
    let mut outputs = Vec::new();
    let mut events = Vec::new();
    match command {
        "size" => {
            let params = cfg.params()?;
            let inputs = cfg.sizing_inputs();
            let report = if cfg.sizing.route == "switches" {
                size_switches_based(&cfg.sizing_orders()?, &params, &inputs, &cfg.worst_case_options())?
            } else {
                size_load_based(&cfg.spectrum()?, &params, &inputs)?
            };
            write_file(&out.join("sizing_report.csv"), &report.to_csv())?;
            outputs.push("sizing_report.csv".to_string());
            events.extend(report.notes.iter().cloned());
            events.extend(report.remediation.iter().map(|r| format!("remediation: {r}")));
        }
        "simulate" => {
            let sc = cfg.scenario()?;
            let r = run_scenario(&sc)?;
            outputs.extend(write_run(&r, out)?.into_iter().map(String::from));
            let rows = r.compensation(sc.analysis_periods, &sc.compensation_hz)?;
            write_file(&out.join("compensation.csv"), &compensation_csv(&rows))?;
            outputs.push("compensation.csv".into());
            write_file(&out.join("gains.txt"), &r.gains_report)?;
            outputs.push("gains.txt".into());
            events.extend(r.events.iter().map(|e| format!("t = {:e} s: {}: {}", e.t, e.kind, e.detail)));
        }
        "analyze" => {
            outputs.extend(analyze(cfg, out)?);
        }
        other => return Err(SafError::Input(format!("unknown command `{other}`"))),
    }
    let manifest = RunManifest {
        command: command.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: cfg.sizing.seed,
        config: cfg.to_toml(),
        outputs,
        decisions: decisions(cfg),
        events,
    };
    let name = if command == "analyze" { "analysis_manifest.txt" } else { "manifest.txt" };
    write_file(&out.join(name), &manifest.to_text())?;
    Ok(manifest)
}

/// Spectra and compensation table over the trailing analysis window of an
/// existing `currents.csv`.
fn analyze(cfg: &ConfigFile, dir: &Path) -> Result<Vec<String>> {
    let path = dir.join("currents.csv");
    let cols = read_columns(&path, &["t", "i_ma", "i_la"])?;
    let (t, mains, load) = (&cols[0], &cols[1], &cols[2]);
    if t.len() < 3 {
        return Err(SafError::Input(format!("{}: too few samples", path.display())));
    }
    let dt = t[1] - t[0];
    let period = 1.0 / cfg.plant.f_m;
    let spp = (period / dt).round() as usize;
    let uniform = t.windows(2).all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-6 * dt);
    if !uniform || spp == 0 || ((period / dt) - spp as f64).abs() > 1e-6 * spp as f64 {
        return Err(SafError::Input(format!(
            "{}: samples are not uniform with an integer count per period",
            path.display()
        )));
    }
    let periods = cfg.simulation.analysis_periods;
    let n = periods * spp;
    if t.len() < n + 1 {
        return Err(SafError::Input(format!(
            "{}: {} samples cannot hold {periods} periods of {spp} samples",
            path.display(),
            t.len()
        )));
    }
    let end = t.len() - 1;
    let (m, l) = (&mains[end - n..end], &load[end - n..end]);
    let rows = compensation_report(m, l, cfg.plant.f_m, periods, &cfg.compensation_hz()?)?;
    write_file(&dir.join("compensation.csv"), &compensation_csv(&rows))?;
    let sm = spectrum(m, periods)?;
    let sl = spectrum(l, periods)?;
    let mut s = String::from("f_hz,i_ma,i_la\n");
    for (k, (a, b)) in sm.iter().zip(&sl).enumerate() {
        let _ = writeln!(s, "{:e},{a:e},{b:e}", k as f64 * cfg.plant.f_m);
    }
    write_file(&dir.join("spectrum.csv"), &s)?;
    Ok(vec!["compensation.csv".into(), "spectrum.csv".into()])
}

fn out_dirs(configs: &[PathBuf], out: &Path) -> Vec<PathBuf> {
    if configs.len() == 1 {
        return vec![out.to_path_buf()];
    }
    configs
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let stem = c.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            out.join(format!("{i:02}_{stem}"))
        })
        .collect()
}

/// Runs a parsed command line; one result per configuration file.
pub fn run(cli: &Cli) -> Vec<Result<RunManifest>> {
    let args = cli.command.args();
    let dirs = out_dirs(&args.config, &args.out);
    let work = |(path, dir): (&PathBuf, &PathBuf)| prepare(path, args).and_then(|cfg| dispatch(cli.command.name(), &cfg, dir));
    let jobs = args.jobs.max(1);
    if jobs == 1 || args.config.len() == 1 {
        return args.config.iter().zip(&dirs).map(work).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(|| args.config.par_iter().zip(&dirs).map(work).collect()),
        Err(e) => vec![Err(SafError::Input(format!("cannot start {jobs} workers: {e}")))],
    }
}

/// One line per failure: `saf: error[<kind>]: <message>`.
pub fn error_line(e: &SafError) -> String {
    format!("saf: error[{}]: {}", e.kind(), e.to_string().replace('\n', " "))
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut failed = false;
    for r in run(&cli) {
        if let Err(e) = r {
            eprintln!("{}", error_line(&e));
            failed = true;
        }
    }
    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
