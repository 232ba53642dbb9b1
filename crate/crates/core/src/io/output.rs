//! Record emission: CSV or JSON lines plus a plain-text summary sidecar.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::OutputFormat;
use crate::continuation::SweepResult;
use crate::error::{Error, Result};
use crate::solver::SolveOptions;

pub const CSV_HEADER: &str = "axis,branch,q_s,n_p1,n_p2,delta1_eff,delta2_eff,stable,max_re_eig";

/// One row per (axis point, branch).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub axis: f64,
    pub branch: usize,
    pub q_s: f64,
    pub n_p1: f64,
    pub n_p2: f64,
    pub delta1_eff: f64,
    pub delta2_eff: f64,
    /// 0 stable, 1 unstable, 2 marginal.
    pub stable: u8,
    /// rad/s; NaN when the Jacobian was not evaluated.
    pub max_re_eig: f64,
}

/// Flattens a sweep into records sorted by axis value, then `q_s`.
pub fn records(result: &SweepResult, opts: &SolveOptions) -> Vec<OutputRecord> {
    let mut out = Vec::new();
    for r in &result.records {
        for (i, b) in r.branches.iter().enumerate() {
            out.push(OutputRecord {
                axis: r.axis_value,
                branch: i,
                q_s: b.q_s,
                n_p1: b.n_p1,
                n_p2: b.n_p2,
                delta1_eff: b.delta_eff1,
                delta2_eff: b.delta_eff2,
                stable: opts.verdict(b).code(),
                max_re_eig: b.max_re_eig.unwrap_or(f64::NAN),
            });
        }
    }
    out.sort_by(|a, b| a.axis.total_cmp(&b.axis).then(a.q_s.total_cmp(&b.q_s)));
    out
}

fn csv_line(r: &OutputRecord) -> String {
    format!(
        "{:e},{},{:e},{:e},{:e},{:e},{:e},{},{:e}\n",
        r.axis, r.branch, r.q_s, r.n_p1, r.n_p2, r.delta1_eff, r.delta2_eff, r.stable, r.max_re_eig
    )
}

fn json_number(v: f64) -> serde_json::Value {
    serde_json::Number::from_f64(v).map_or(serde_json::Value::Null, serde_json::Value::Number)
}

fn json_line(r: &OutputRecord) -> String {
    let v = serde_json::json!({
        "axis": json_number(r.axis),
        "branch": r.branch,
        "q_s": json_number(r.q_s),
        "n_p1": json_number(r.n_p1),
        "n_p2": json_number(r.n_p2),
        "delta1_eff": json_number(r.delta1_eff),
        "delta2_eff": json_number(r.delta2_eff),
        "stable": r.stable,
        "max_re_eig": json_number(r.max_re_eig),
    });
    let mut s = v.to_string();
    s.push('\n');
    s
}

/// Renders the records of `result`; returns the text.
pub fn render_records(result: &SweepResult, format: OutputFormat, opts: &SolveOptions) -> Result<String> {
    let recs = records(result, opts);
    if recs.is_empty() {
        return Err(Error::InvalidArgument("refusing to emit an empty result".into()));
    }
    let mut out = String::new();
    match format {
        OutputFormat::Csv => {
            out.push_str(CSV_HEADER);
            out.push('\n');
            recs.iter().for_each(|r| out.push_str(&csv_line(r)));
        }
        OutputFormat::JsonLines => recs.iter().for_each(|r| out.push_str(&json_line(r))),
    }
    Ok(out)
}

/// Parses CSV produced by [`render_records`].
pub fn parse_csv_records(text: &str) -> Result<Vec<OutputRecord>> {
    let mut lines = text.split('\n');
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::InvalidArgument("missing or wrong CSV header".into()));
    }
    let bad = |line: &str| Error::InvalidArgument(format!("malformed CSV record `{line}`"));
    let mut out = Vec::new();
    for line in lines.filter(|l| !l.is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            return Err(bad(line));
        }
        let num = |i: usize| f[i].parse::<f64>().map_err(|_| bad(line));
        out.push(OutputRecord {
            axis: num(0)?,
            branch: f[1].parse().map_err(|_| bad(line))?,
            q_s: num(2)?,
            n_p1: num(3)?,
            n_p2: num(4)?,
            delta1_eff: num(5)?,
            delta2_eff: num(6)?,
            stable: f[7].parse().map_err(|_| bad(line))?,
            max_re_eig: num(8)?,
        });
    }
    Ok(out)
}

/// `out.csv` -> `out.summary.txt`.
pub fn summary_path(path: &Path) -> PathBuf {
    path.with_extension("summary.txt")
}

/// Human-readable digest: folds, jumps and the critical powers.
pub fn render_summary(result: &SweepResult, notes: &[String]) -> String {
    let mut s = String::new();
    let list = |v: &[f64]| v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(", ");
    let _ = writeln!(s, "axis = {} [{}]", result.axis.name(), result.axis.unit());
    let _ = writeln!(s, "points = {}", result.records.len());
    let _ = writeln!(s, "max_branches = {}", result.max_branch_count());
    let _ = writeln!(s, "folds = [{}]", list(&result.folds));
    let _ = writeln!(s, "rule_disagreements = {}", result.rule_disagreements().len());
    if let Some(h) = &result.hysteresis {
        let up = h.up_jumps();
        let down = h.down_jumps();
        let _ = writeln!(s, "up_jumps = [{}]", list(&up));
        let _ = writeln!(s, "down_jumps = [{}]", list(&down));
        let loops = h.loops();
        for (d, u) in &loops {
            let _ = writeln!(s, "loop_window = [{d:e}, {u:e}]");
        }
        if let Some((d, u)) = loops.first() {
            let _ = writeln!(s, "upJumpPower = {u:e}");
            let _ = writeln!(s, "downJumpPower = {d:e}");
        }
        let _ = writeln!(s, "loop = {}", h.has_loop());
    }
    for n in notes {
        let _ = writeln!(s, "note: {n}");
    }
    s
}

/// Reads `upJumpPower` / `downJumpPower` back from a summary.
pub fn summary_jump_powers(text: &str) -> (Option<f64>, Option<f64>) {
    let get = |key: &str| {
        text.lines()
            .find_map(|l| l.strip_prefix(key)?.trim_start().strip_prefix('=').map(str::trim))
            .and_then(|v| v.parse().ok())
    };
    (get("upJumpPower"), get("downJumpPower"))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    let io = |source| Error::Io {
        path: path.display().to_string(),
        source,
    };
    let mut f = fs::File::create(path).map_err(io)?;
    f.write_all(text.as_bytes()).map_err(io)?;
    f.flush().map_err(io)
}

/// Writes the records to `path` and the summary beside it; returns the
/// number of record bytes written.
pub fn emit_records(
    result: &SweepResult,
    format: OutputFormat,
    opts: &SolveOptions,
    path: &Path,
    notes: &[String],
) -> Result<usize> {
    let body = render_records(result, format, opts)?;
    write_file(path, &body)?;
    write_file(&summary_path(path), &render_summary(result, notes))?;
    Ok(body.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::continuation::{Axis, SweepRecord};
    use crate::params::{preset_hill_params, DrivePoint};
    use crate::solver::solve_branches;

    fn single_point() -> SweepResult {
        let p = preset_hill_params();
        let d = DrivePoint::new(&p, p.omega_m, p.omega_m, 2e-6, 1e-7).unwrap();
        let branches = solve_branches(&p, &d, &SolveOptions::default()).unwrap();
        SweepResult {
            axis: Axis::PowerL,
            records: vec![SweepRecord {
                axis_value: 2e-6,
                branches,
            }],
            folds: vec![],
            hysteresis: None,
        }
    }

    #[test]
    fn csv_shape_and_round_trip() {
        let r = single_point();
        assert_eq!(r.records[0].branches.len(), 1);
        let opts = SolveOptions::default();
        let text = render_records(&r, OutputFormat::Csv, &opts).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(!text.contains('\r'));
        assert!(text.starts_with(CSV_HEADER));
        let back = parse_csv_records(&text).unwrap();
        let orig = records(&r, &opts);
        assert_eq!(back.len(), orig.len());
        for (a, b) in back.iter().zip(&orig) {
            assert_eq!(a.q_s.to_bits(), b.q_s.to_bits());
            assert_eq!(a.n_p2.to_bits(), b.n_p2.to_bits());
            assert_eq!(a.max_re_eig.to_bits(), b.max_re_eig.to_bits());
        }
    }

    #[test]
    fn jsonlines_mirror_fields() {
        let text = render_records(&single_point(), OutputFormat::JsonLines, &SolveOptions::default()).unwrap();
        let v: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        for k in CSV_HEADER.split(',') {
            assert!(v.get(k).is_some(), "{k}");
        }
    }

    #[test]
    fn summary_path_and_jumps() {
        assert_eq!(summary_path(Path::new("/tmp/a/out.csv")), PathBuf::from("/tmp/a/out.summary.txt"));
        let (u, d) = summary_jump_powers("upJumpPower = 3e-5\ndownJumpPower = 1.5e-5\n");
        assert_eq!((u, d), (Some(3e-5), Some(1.5e-5)));
    }

    #[test]
    fn unwritable_destination() {
        let e = emit_records(
            &single_point(),
            OutputFormat::Csv,
            &SolveOptions::default(),
            Path::new("/nonexistent-dir/x.csv"),
            &[],
        )
        .unwrap_err();
        assert_eq!(e.exit_code(), 4);
    }
}
