use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Result, SafError};
use crate::sim::report::CompensationRow;
use crate::sim::run::RunResult;

pub const CURRENTS_HEADER: &str = "t,i_fa,i_fb,i_fc,i_la,i_lb,i_lc,i_ma,i_mb,i_mc";
pub const POWERS_HEADER: &str = "t,x_d,x_q,x_ref_d,x_ref_q,x_err_d,x_err_q,u_d,u_q";
pub const VOLTAGE_HEADER: &str = "t,v,z,z_a";
pub const CONTROLLER_HEADER: &str = "t,eta,eta_a,d_eta,theta,warmup";
pub const COMPENSATION_HEADER: &str = "f_hz,i_ma,i_la,percent";

fn table(header: &str, rows: usize, mut row: impl FnMut(usize, &mut String)) -> String {
    let mut s = String::with_capacity(rows * 96);
    s.push_str(header);
    s.push('\n');
    for i in 0..rows {
        row(i, &mut s);
        s.push('\n');
    }
    s
}

fn push(s: &mut String, vals: &[f64]) {
    for (j, v) in vals.iter().enumerate() {
        if j > 0 {
            s.push(',');
        }
        let _ = write!(s, "{v:e}");
    }
}

pub fn currents_csv(r: &RunResult) -> String {
    table(CURRENTS_HEADER, r.len(), |i, s| {
        let (f, l, m) = (r.i_filter[i], r.i_load[i], r.i_mains[i]);
        push(s, &[r.t[i], f[0], f[1], f[2], l[0], l[1], l[2], m[0], m[1], m[2]]);
    })
}

pub fn powers_csv(r: &RunResult) -> String {
    table(POWERS_HEADER, r.len(), |i, s| {
        let (x, xr, e, u) = (r.x[i], r.x_ref[i], r.x_err[i], r.u_dq[i]);
        push(s, &[r.t[i], x[0], x[1], xr[0], xr[1], e[0], e[1], u[0], u[1]]);
    })
}

pub fn voltage_csv(r: &RunResult) -> String {
    table(VOLTAGE_HEADER, r.len(), |i, s| push(s, &[r.t[i], r.v[i], r.z[i], r.z_a[i]]))
}

pub fn controller_csv(r: &RunResult) -> String {
    table(CONTROLLER_HEADER, r.len(), |i, s| {
        push(s, &[r.t[i], r.eta[i], r.eta_a[i], r.d_eta[i], r.theta[i]]);
        s.push_str(if r.warmup[i] { ",1" } else { ",0" });
    })
}

/// Rows without load content carry an empty `percent` field.
pub fn compensation_csv(rows: &[CompensationRow]) -> String {
    table(COMPENSATION_HEADER, rows.len(), |i, s| {
        let row = &rows[i];
        push(s, &[row.f_hz, row.i_ma, row.i_la]);
        s.push(',');
        if let Some(p) = row.percent {
            let _ = write!(s, "{p:e}");
        }
    })
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| SafError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Writes the four signal tables into `dir` and returns their file names.
pub fn write_run(r: &RunResult, dir: &Path) -> Result<Vec<&'static str>> {
    let files: [(&str, String); 4] = [
        ("currents.csv", currents_csv(r)),
        ("powers.csv", powers_csv(r)),
        ("voltage.csv", voltage_csv(r)),
        ("controller.csv", controller_csv(r)),
    ];
    let mut names = Vec::new();
    for (name, body) in files {
        write_file(&dir.join(name), &body)?;
        names.push(name);
    }
    Ok(names)
}

/// Reads one column of a CSV written by this module, checking that every
/// row is complete and numeric.
pub fn read_columns(path: &Path, wanted: &[&str]) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path).map_err(|source| SafError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| SafError::Input(format!("{}: empty file", path.display())))?
        .split(',')
        .collect();
    let idx: Vec<usize> = wanted
        .iter()
        .map(|w| {
            header
                .iter()
                .position(|h| h == w)
                .ok_or_else(|| SafError::Input(format!("{}: missing column {w}", path.display())))
        })
        .collect::<Result<_>>()?;
    let mut cols = vec![Vec::new(); wanted.len()];
    for (n, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != header.len() {
            return Err(SafError::Input(format!(
                "{}: line {} has {} fields, expected {}",
                path.display(),
                n + 2,
                fields.len(),
                header.len()
            )));
        }
        for (c, &i) in idx.iter().enumerate() {
            let v: f64 = fields[i].parse().map_err(|_| {
                SafError::Input(format!("{}: line {}: bad number {:?}", path.display(), n + 2, fields[i]))
            })?;
            cols[c].push(v);
        }
    }
    Ok(cols)
}
