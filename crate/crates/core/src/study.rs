//! Two parameter studies on the preset device.
//!
//! [`fold_power_study`] locates the left-pump fold powers at
//! `Δ1 = Δ2 = ω_m`, `P_R = 0.1 µW` under every combination of amplitude
//! convention, κ2 interpretation and force sign, and compares them with a
//! reference threshold of 27 µW.
//!
//! [`sub_unity_search`] looks for a drive where the right cavity holds at
//! least two dynamically stable states, each with fewer than one photon.

use std::fmt::Write as _;

use crate::continuation::{hysteresis_sweep, locate_folds, Axis, Direction, SweepSpec};
use crate::error::Result;
use crate::params::{
    preset_hill_params_with, AmplitudeConvention, DrivePoint, Kappa2Interpretation, SignConvention, SystemParams,
};
use crate::solver::{solve_branches, SolveOptions, StabilityRule};
use crate::steady::Stability;

pub const REFERENCE_FOLD_POWER: f64 = 27e-6;
pub const STUDY_POWER_R: f64 = 1e-7;
pub const FOLD_BRACKET: (f64, f64) = (1e-12, 10.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyConfig {
    pub amplitude: AmplitudeConvention,
    pub kappa2: Kappa2Interpretation,
    pub sign: SignConvention,
}

impl StudyConfig {
    pub fn all() -> Vec<StudyConfig> {
        let mut out = Vec::new();
        for amplitude in [AmplitudeConvention::Literal, AmplitudeConvention::Flux] {
            for kappa2 in [Kappa2Interpretation::Angular, Kappa2Interpretation::Literal] {
                for sign in [SignConvention::Plus, SignConvention::MinusAsPrinted] {
                    out.push(StudyConfig { amplitude, kappa2, sign });
                }
            }
        }
        out
    }

    pub fn params(&self) -> SystemParams {
        preset_hill_params_with(self.kappa2)
            .with_sign(self.sign)
            .with_amplitude(self.amplitude)
    }

    pub fn label(&self) -> String {
        format!(
            "amplitude={} kappa2={} sign={}",
            match self.amplitude {
                AmplitudeConvention::Literal => "literal",
                AmplitudeConvention::Flux => "flux",
            },
            match self.kappa2 {
                Kappa2Interpretation::Angular => "angular",
                Kappa2Interpretation::Literal => "literal",
            },
            match self.sign {
                SignConvention::Plus => "plus",
                SignConvention::MinusAsPrinted => "minus",
            }
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldStudyRow {
    pub config: StudyConfig,
    /// Ascending fold powers in watts.
    pub folds: Vec<f64>,
    /// For bistable configurations: whether an up/down sweep under the
    /// ordering rule closes a loop with up-jump >= down-jump.
    pub loop_ok: Option<bool>,
}

impl FoldStudyRow {
    pub fn bistable(&self) -> bool {
        !self.folds.is_empty()
    }

    /// Lowest power on the upper branch's fold (onset of bistability on a
    /// downward sweep) and highest (jump on an upward sweep).
    pub fn window(&self) -> Option<(f64, f64)> {
        Some((*self.folds.first()?, *self.folds.last()?))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldStudy {
    pub rows: Vec<FoldStudyRow>,
}

impl FoldStudy {
    pub fn report(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "fold power study: delta1 = delta2 = omega_m, P_R = {STUDY_POWER_R:e} W, reference {REFERENCE_FOLD_POWER:e} W"
        );
        for r in &self.rows {
            match r.window() {
                Some((lo, hi)) => {
                    let _ = writeln!(
                        s,
                        "{}: folds {:e} .. {:e} W (x{:.3e} .. x{:.3e} of reference), loop {}",
                        r.config.label(),
                        lo,
                        hi,
                        lo / REFERENCE_FOLD_POWER,
                        hi / REFERENCE_FOLD_POWER,
                        if r.loop_ok == Some(true) { "closed" } else { "MISSING" }
                    );
                }
                None => {
                    let _ = writeln!(
                        s,
                        "{}: no fold in [{:e}, {:e}] W (single branch)",
                        r.config.label(),
                        FOLD_BRACKET.0,
                        FOLD_BRACKET.1
                    );
                }
            }
        }
        s
    }
}

/// Runs the eight-configuration fold study.
pub fn fold_power_study(opts: &SolveOptions) -> Result<FoldStudy> {
    let ordering = SolveOptions {
        rule: StabilityRule::Ordering,
        ..*opts
    };
    let mut rows = Vec::new();
    for config in StudyConfig::all() {
        let p = config.params();
        let base = DrivePoint::new(&p, p.omega_m, p.omega_m, 0.0, STUDY_POWER_R)?;
        let folds = locate_folds(&p, &base, Axis::PowerL, FOLD_BRACKET, opts)?;
        let loop_ok = match (folds.first(), folds.last()) {
            (Some(&lo), Some(&hi)) => {
                let spec = SweepSpec {
                    axis: Axis::PowerL,
                    start: lo / 10.0,
                    stop: (hi * 10.0).min(FOLD_BRACKET.1),
                    points: 200,
                    base,
                    direction: Direction::Both,
                };
                let h = hysteresis_sweep(&spec, &p, &ordering)?.hysteresis.unwrap_or_default();
                let balanced = h.up_jumps().len() == h.down_jumps().len();
                Some(h.has_loop() && balanced && h.loops().iter().all(|(d, u)| u >= d))
            }
            _ => None,
        };
        rows.push(FoldStudyRow { config, folds, loop_ok });
    }
    Ok(FoldStudy { rows })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchStep {
    pub power_r: f64,
    /// Left-pump fold window at this `P_R`, if any.
    pub window: Option<(f64, f64)>,
    /// Best candidate inside the window: (P_L, number of stable branches,
    /// largest right-cavity photon number over all branches).
    pub best: Option<(f64, usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubUnityFound {
    pub power_l: f64,
    pub power_r: f64,
    /// `n_p2` of each dynamically stable branch, ascending in `q_s`.
    pub stable_n_p2: Vec<f64>,
    pub max_n_p2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubUnitySearch {
    pub steps: Vec<SearchStep>,
    pub found: Option<SubUnityFound>,
}

impl SubUnitySearch {
    pub fn report(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "sub-unity search: delta1 = delta2 = omega_m, log scan of P_R");
        for st in &self.steps {
            let _ = write!(s, "P_R = {:e} W:", st.power_r);
            match st.window {
                Some((lo, hi)) => {
                    let _ = write!(s, " fold window {lo:e} .. {hi:e} W");
                }
                None => {
                    let _ = write!(s, " no fold window");
                }
            }
            if let Some((pl, n, m)) = st.best {
                let _ = write!(s, "; best P_L = {pl:e} W with {n} stable, max n_p2 = {m:e}");
            }
            let _ = writeln!(s);
        }
        match &self.found {
            Some(f) => {
                let _ = writeln!(
                    s,
                    "found: P_L = {:e} W, P_R = {:e} W, stable n_p2 = {:?}, max n_p2 = {:e}",
                    f.power_l, f.power_r, f.stable_n_p2, f.max_n_p2
                );
            }
            None => {
                let _ = writeln!(s, "found: none");
            }
        }
        s
    }
}

/// Scans `P_R` downward from `p_r_max` to `p_r_min`. At each value the
/// left-pump fold window is located and sampled at `edge_samples` powers
/// `lo * (1 + eps)`, with `eps` log-spaced from 1 down to 1e-8 above the
/// lower fold `lo`: the upper branch is red-detuned only close to that edge.
/// The first point with at least two Jacobian-stable branches and every
/// branch below one right-cavity photon ends the search.
pub fn sub_unity_search(
    params: &SystemParams,
    opts: &SolveOptions,
    p_r_max: f64,
    p_r_min: f64,
    steps_per_decade: usize,
    edge_samples: usize,
) -> Result<SubUnitySearch> {
    let wm = params.omega_m;
    let decades = (p_r_max / p_r_min).log10();
    let n = (decades * steps_per_decade as f64).round() as usize + 1;
    let mut steps = Vec::new();
    for i in 0..n {
        let power_r = p_r_max * 10f64.powf(-(i as f64) / steps_per_decade as f64);
        let base = DrivePoint::new(params, wm, wm, 0.0, power_r)?;
        let folds = locate_folds(params, &base, Axis::PowerL, FOLD_BRACKET, opts)?;
        let window = folds.first().zip(folds.last()).map(|(a, b)| (*a, *b));
        let mut step = SearchStep {
            power_r,
            window,
            best: None,
        };
        let mut found = None;
        if let Some((lo, hi)) = window {
            for k in 0..edge_samples {
                let t = k as f64 / (edge_samples.max(2) - 1) as f64;
                let power_l = (lo * (1.0 + 10f64.powf(-8.0 * t))).min(hi);
                let drive = DrivePoint::new(params, wm, wm, power_l, power_r)?;
                let branches = solve_branches(params, &drive, opts)?;
                let stable: Vec<f64> = branches
                    .iter()
                    .filter(|b| b.stability == Some(Stability::Stable))
                    .map(|b| b.n_p2)
                    .collect();
                let max_n_p2 = branches.iter().map(|b| b.n_p2).fold(0.0, f64::max);
                let better = match step.best {
                    None => true,
                    Some((_, n, m)) => stable.len() > n || (stable.len() == n && max_n_p2 < m),
                };
                if better {
                    step.best = Some((power_l, stable.len(), max_n_p2));
                }
                if stable.len() >= 2 && max_n_p2 < 1.0 {
                    found = Some(SubUnityFound {
                        power_l,
                        power_r,
                        stable_n_p2: stable,
                        max_n_p2,
                    });
                    break;
                }
            }
        }
        steps.push(step);
        if found.is_some() {
            return Ok(SubUnitySearch { steps, found });
        }
    }
    Ok(SubUnitySearch { steps, found: None })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eight_distinct_configurations() {
        let all = StudyConfig::all();
        assert_eq!(all.len(), 8);
        for (i, a) in all.iter().enumerate() {
            for b in &all[i + 1..] {
                assert_ne!(a, b);
            }
        }
    }
}
