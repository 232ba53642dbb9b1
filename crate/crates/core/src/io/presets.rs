//! Named figure presets.
//!
//! | name  | curves                                   | axis    | defaults                        |
//! |-------|------------------------------------------|---------|---------------------------------|
//! | fig2a | P_L = 0.1, 2, 3 µW                       | delta1  | [0, 2 ω_m], P_R = 0.1 µW        |
//! | fig2b | one hysteresis pair                      | power_l | Δ1 = Δ2 = ω_m, P_R = 0.1 µW     |
//! | fig3  | Δ2 = +ω_m, −ω_m, and g1 = 0 controls     | delta1  | P_L = 2 µW, P_R = 0.1 µW        |
//! | fig4a | Δ2 = +ω_m hysteresis pair                | power_l | Δ1 = ω_m, P_R = 0.1 µW          |
//! | fig4b | Δ2 = −ω_m hysteresis pair                | power_l | Δ1 = ω_m, P_R = 0.1 µW          |
//! | fig5a | one curve                                | delta1  | P_L = 2 µW, P_R = 1 pW          |
//! | fig5b | one hysteresis pair                      | power_l | Δ1 = Δ2 = ω_m, P_R = 1 pW       |
//!
//! Power presets choose their range from a fold scan over [1 pW, 10 W]: a
//! decade either side of the outermost folds, or [1 nW, 100 µW] when the
//! scan finds none.

use std::path::{Path, PathBuf};

use super::config::OutputFormat;
use super::output::emit_records;
use crate::continuation::{hysteresis_sweep, locate_folds, sweep_1d, Axis, Direction, SweepResult, SweepSpec, FIGURE_POINTS};
use crate::error::{Error, Result};
use crate::params::{DrivePoint, SystemParams};
use crate::solver::{SolveOptions, StabilityRule};

pub const PRESET_NAMES: [&str; 7] = ["fig2a", "fig2b", "fig3", "fig4a", "fig4b", "fig5a", "fig5b"];

const FOLD_SCAN_RANGE: (f64, f64) = (1e-12, 10.0);
const DEFAULT_POWER_RANGE: (f64, f64) = (1e-9, 1e-4);

/// User adjustments applied on top of a preset.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PresetOverrides {
    pub range: Option<(f64, f64)>,
    pub points: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct PresetCurve {
    pub label: String,
    pub result: SweepResult,
    pub notes: Vec<String>,
    /// Verdict used for the traces and the `stable` column.
    pub rule: StabilityRule,
}

#[derive(Debug, Clone)]
pub struct PresetRun {
    pub name: String,
    pub curves: Vec<PresetCurve>,
}

impl PresetRun {
    pub fn curve(&self, label: &str) -> Option<&PresetCurve> {
        self.curves.iter().find(|c| c.label == label)
    }

    /// Writes each curve (suffixing the file stem when there are several);
    /// returns the paths written and the total record bytes.
    pub fn emit(&self, out: &Path, format: OutputFormat, opts: &SolveOptions) -> Result<(Vec<PathBuf>, usize)> {
        let mut paths = Vec::new();
        let mut bytes = 0;
        for c in &self.curves {
            let path = if self.curves.len() == 1 {
                out.to_path_buf()
            } else {
                curve_path(out, &c.label)
            };
            let opts = SolveOptions { rule: c.rule, ..*opts };
            bytes += emit_records(&c.result, format, &opts, &path, &c.notes)?;
            paths.push(path);
        }
        Ok((paths, bytes))
    }
}

fn curve_path(out: &Path, label: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}_{label}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{label}"),
    };
    out.with_file_name(name)
}

struct Runner<'a> {
    params: &'a SystemParams,
    opts: &'a SolveOptions,
    overrides: PresetOverrides,
}

impl Runner<'_> {
    fn points(&self) -> usize {
        self.overrides.points.unwrap_or(FIGURE_POINTS)
    }

    fn detuning_curve(&self, label: &str, params: &SystemParams, base: DrivePoint) -> Result<PresetCurve> {
        let (start, stop) = self.overrides.range.unwrap_or((0.0, 2.0 * params.omega_m));
        let spec = SweepSpec {
            axis: Axis::Delta1,
            start,
            stop,
            points: self.points(),
            base,
            direction: Direction::Up,
        };
        Ok(PresetCurve {
            label: label.into(),
            result: sweep_1d(&spec, params, self.opts)?,
            notes: Vec::new(),
            rule: self.opts.rule,
        })
    }

    fn power_curve(&self, label: &str, base: DrivePoint) -> Result<PresetCurve> {
        let mut notes = Vec::new();
        let (start, stop) = match self.overrides.range {
            Some(r) => r,
            None => {
                let folds = locate_folds(self.params, &base, Axis::PowerL, FOLD_SCAN_RANGE, self.opts)?;
                match (folds.first(), folds.last()) {
                    (Some(lo), Some(hi)) => {
                        notes.push(format!("range centred on folds at {lo:e} .. {hi:e} W"));
                        (lo / 10.0, (hi * 10.0).min(FOLD_SCAN_RANGE.1))
                    }
                    _ => {
                        notes.push(format!(
                            "no fold in [{:e}, {:e}] W; single branch throughout",
                            FOLD_SCAN_RANGE.0, FOLD_SCAN_RANGE.1
                        ));
                        DEFAULT_POWER_RANGE
                    }
                }
            }
        };
        let spec = SweepSpec {
            axis: Axis::PowerL,
            start,
            stop,
            points: self.points(),
            base,
            direction: Direction::Both,
        };
        let mut rule = self.opts.rule;
        let result = match hysteresis_sweep(&spec, self.params, self.opts) {
            Ok(r) => r,
            Err(e) if is_no_stable_branch(&e) && rule == StabilityRule::Jacobian => {
                notes.push(format!("jacobian trace aborted ({e}); traces follow the ordering rule"));
                rule = StabilityRule::Ordering;
                let ordering = SolveOptions { rule, ..*self.opts };
                hysteresis_sweep(&spec, self.params, &ordering)?
            }
            Err(e) => return Err(e),
        };
        Ok(PresetCurve {
            label: label.into(),
            result,
            notes,
            rule,
        })
    }
}

fn is_no_stable_branch(e: &Error) -> bool {
    match e {
        Error::NoStableBranch { .. } => true,
        Error::Sweep { source, .. } => is_no_stable_branch(source),
        _ => false,
    }
}

/// Runs a named preset with the given device and tolerances.
pub fn run_preset(name: &str, params: &SystemParams, opts: &SolveOptions, overrides: PresetOverrides) -> Result<PresetRun> {
    let r = Runner {
        params,
        opts,
        overrides,
    };
    let wm = params.omega_m;
    let drive = |d1: f64, d2: f64, pl: f64, pr: f64| DrivePoint::new(params, d1, d2, pl, pr);
    let curves = match name {
        "fig2a" => [("p0.1uW", 0.1e-6), ("p2uW", 2e-6), ("p3uW", 3e-6)]
            .iter()
            .map(|&(label, pl)| r.detuning_curve(label, params, drive(wm, wm, pl, 1e-7)?))
            .collect::<Result<Vec<_>>>()?,
        "fig2b" => vec![r.power_curve("loop", drive(wm, wm, 0.0, 1e-7)?)?],
        "fig3" => {
            let control = params.with_couplings(0.0, params.g2)?;
            vec![
                r.detuning_curve("plus", params, drive(wm, wm, 2e-6, 1e-7)?)?,
                r.detuning_curve("minus", params, drive(wm, -wm, 2e-6, 1e-7)?)?,
                r.detuning_curve("control_plus", &control, DrivePoint::new(&control, wm, wm, 2e-6, 1e-7)?)?,
                r.detuning_curve("control_minus", &control, DrivePoint::new(&control, wm, -wm, 2e-6, 1e-7)?)?,
            ]
        }
        "fig4a" => vec![r.power_curve("loop", drive(wm, wm, 0.0, 1e-7)?)?],
        "fig4b" => vec![r.power_curve("loop", drive(wm, -wm, 0.0, 1e-7)?)?],
        "fig5a" => vec![r.detuning_curve("curve", params, drive(wm, wm, 2e-6, 1e-12)?)?],
        "fig5b" => vec![r.power_curve("loop", drive(wm, wm, 0.0, 1e-12)?)?],
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown preset `{other}` (expected one of {})",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    Ok(PresetRun {
        name: name.into(),
        curves,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_file_names() {
        assert_eq!(curve_path(Path::new("/o/fig3.csv"), "plus"), PathBuf::from("/o/fig3_plus.csv"));
        assert_eq!(curve_path(Path::new("out"), "loop"), PathBuf::from("out_loop"));
    }

    #[test]
    fn unknown_preset() {
        let p = crate::params::preset_hill_params();
        assert!(run_preset("fig9", &p, &SolveOptions::default(), PresetOverrides::default()).is_err());
    }
}
