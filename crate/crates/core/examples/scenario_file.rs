//! Drives `size` and `simulate` from a scenario file, as the `saf` binary
//! does.

use saf::cli::{dispatch, RunManifest};
use saf::config::ConfigFile;

const SCENARIO: &str = r#"
[plant]
L = 3.3e-3      # H
R = 0.12        # ohm
C = 4400e-6     # F
V_m = 310.0     # V
f_m = 50.0      # Hz

[load]
preset = "diode_bridge"

[controller]
K_P = 0.3
K_I = 3.7

[sizing]
v_m = 700.0     # V

[simulation]
mode = "sampled"
periods = 25
"#;

fn main() -> saf::Result<()> {
    let cfg = ConfigFile::parse(SCENARIO)?.resolved()?;
    let out = std::env::temp_dir().join("saf_scenario_file");
    for command in ["size", "simulate"] {
        let m = dispatch(command, &cfg, &out)?;
        println!("{command}: wrote {:?} to {}", m.outputs, out.display());
    }
    let text = std::fs::read_to_string(out.join("manifest.txt")).expect("manifest written");
    let echo = RunManifest::config_from_text(&text)?;
    println!("manifest echo reproduces the config: {}", echo == cfg);
    print!("{}", std::fs::read_to_string(out.join("compensation.csv")).expect("table written"));
    Ok(())
}
