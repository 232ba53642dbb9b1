//! One-parameter sweeps: branch sets along an axis, fold location and
//! quasi-static hysteresis traces.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{DrivePoint, SystemParams};
use crate::solver::{solve_branches, SolveOptions};
use crate::steady::{steady_displacements, Stability, SteadyBranch};

/// Default number of samples for figure sweeps.
pub const FIGURE_POINTS: usize = 400;
/// Coarse-scan resolution of [`locate_folds`].
pub const FOLD_SCAN_POINTS: usize = 1024;

const SWEEP_FOLD_REL: f64 = 1e-6;
const LOCATE_FOLD_REL: f64 = 1e-9;
const JUMP_REL: f64 = 1e-6;

/// The drive field varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Delta1,
    Delta2,
    PowerL,
    PowerR,
}

impl Axis {
    pub fn is_power(self) -> bool {
        matches!(self, Axis::PowerL | Axis::PowerR)
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::Delta1 => "delta1",
            Axis::Delta2 => "delta2",
            Axis::PowerL => "power_l",
            Axis::PowerR => "power_r",
        }
    }

    pub fn unit(self) -> &'static str {
        if self.is_power() {
            "W"
        } else {
            "rad/s"
        }
    }

    pub fn value(self, d: &DrivePoint) -> f64 {
        match self {
            Axis::Delta1 => d.delta1(),
            Axis::Delta2 => d.delta2(),
            Axis::PowerL => d.power_l(),
            Axis::PowerR => d.power_r(),
        }
    }

    pub fn apply(self, params: &SystemParams, base: &DrivePoint, v: f64) -> Result<DrivePoint> {
        match self {
            Axis::Delta1 => base.with_delta1(params, v),
            Axis::Delta2 => base.with_delta2(params, v),
            Axis::PowerL => base.with_power_l(params, v),
            Axis::PowerR => base.with_power_r(params, v),
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "delta1" => Ok(Axis::Delta1),
            "delta2" => Ok(Axis::Delta2),
            "power_l" => Ok(Axis::PowerL),
            "power_r" => Ok(Axis::PowerR),
            other => Err(Error::InvalidArgument(format!("unknown axis `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: Axis,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub base: DrivePoint,
    pub direction: Direction,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if !self.start.is_finite() || !self.stop.is_finite() {
            return Err(Error::InvalidArgument("sweep bounds must be finite".into()));
        }
        if self.start == self.stop {
            return Err(Error::InvalidArgument("sweep start equals stop".into()));
        }
        if self.points < 2 {
            return Err(Error::InvalidArgument("sweep needs at least 2 points".into()));
        }
        if self.axis.is_power() && (self.start < 0.0 || self.stop < 0.0) {
            return Err(Error::InvalidArgument("power sweep bounds must be >= 0".into()));
        }
        Ok(())
    }

    /// Ascending sample grid; logarithmic for power spans over one decade.
    pub fn grid(&self) -> Vec<f64> {
        axis_grid(self.axis, self.start, self.stop, self.points)
    }
}

fn axis_grid(axis: Axis, a: f64, b: f64, n: usize) -> Vec<f64> {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let log = axis.is_power() && lo > 0.0 && hi / lo > 10.0;
    let last = (n - 1) as f64;
    let mut g: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / last;
            if log {
                (lo.ln() + (hi.ln() - lo.ln()) * t).exp()
            } else {
                lo + (hi - lo) * t
            }
        })
        .collect();
    g[0] = lo;
    g[n - 1] = hi;
    g
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub axis_value: f64,
    /// Ascending in `q_s`.
    pub branches: Vec<SteadyBranch>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JumpKind {
    /// The occupied branch merged with its unstable partner.
    Fold,
    /// The occupied branch persists but lost stability.
    LostStability,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub axis_value: f64,
    pub from_q: f64,
    pub to_q: f64,
    pub kind: JumpKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub axis_value: f64,
    pub branch: SteadyBranch,
}

/// Single-branch trajectory followed by a quasi-static sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    /// In sweep order.
    pub points: Vec<TracePoint>,
    pub jumps: Vec<Jump>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Hysteresis {
    pub up: Option<Trace>,
    pub down: Option<Trace>,
}

impl Hysteresis {
    pub fn up_jumps(&self) -> Vec<f64> {
        self.up.iter().flat_map(|t| t.jumps.iter().map(|j| j.axis_value)).collect()
    }

    pub fn down_jumps(&self) -> Vec<f64> {
        self.down.iter().flat_map(|t| t.jumps.iter().map(|j| j.axis_value)).collect()
    }

    /// A loop needs a jump in each direction.
    pub fn has_loop(&self) -> bool {
        !self.up_jumps().is_empty() && !self.down_jumps().is_empty()
    }

    /// `(down_jump, up_jump)` per loop, ascending: the k-th lowest up jump
    /// paired with the k-th lowest down jump.
    pub fn loops(&self) -> Vec<(f64, f64)> {
        let mut up = self.up_jumps();
        let mut down = self.down_jumps();
        up.sort_by(f64::total_cmp);
        down.sort_by(f64::total_cmp);
        down.into_iter().zip(up).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: Axis,
    /// Ascending in axis value.
    pub records: Vec<SweepRecord>,
    /// Axis values where the number of real roots changes.
    pub folds: Vec<f64>,
    pub hysteresis: Option<Hysteresis>,
}

impl SweepResult {
    /// Branches where the Jacobian contradicts the root-ordering rule.
    pub fn rule_disagreements(&self) -> Vec<(f64, &SteadyBranch)> {
        self.records
            .iter()
            .flat_map(|r| r.branches.iter().filter(|b| b.rules_disagree()).map(move |b| (r.axis_value, b)))
            .collect()
    }

    pub fn max_branch_count(&self) -> usize {
        self.records.iter().map(|r| r.branches.len()).max().unwrap_or(0)
    }
}

fn root_count(params: &SystemParams, base: &DrivePoint, axis: Axis, v: f64, opts: &SolveOptions) -> Result<usize> {
    let d = axis.apply(params, base, v)?;
    Ok(steady_displacements(params, &d, opts.imag_tol).map_err(|e| e.at_axis(v))?.len())
}

/// Bisects `[a, b]` until the root count at `a` stops holding, to relative `rel`.
#[allow(clippy::too_many_arguments)]
fn refine_count_change(
    params: &SystemParams,
    base: &DrivePoint,
    axis: Axis,
    mut a: f64,
    mut b: f64,
    count_a: usize,
    rel: f64,
    opts: &SolveOptions,
) -> Result<f64> {
    for _ in 0..200 {
        if (b - a).abs() <= rel * a.abs().max(b.abs()) {
            break;
        }
        let mid = bisect_mid(axis, a, b);
        if mid == a || mid == b {
            break;
        }
        if root_count(params, base, axis, mid, opts)? == count_a {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

fn bisect_mid(axis: Axis, a: f64, b: f64) -> f64 {
    // Geometric midpoint on power axes spanning decades.
    if axis.is_power() && a > 0.0 && b > 0.0 && (a / b).max(b / a) > 10.0 {
        (a * b).sqrt()
    } else {
        0.5 * (a + b)
    }
}

/// Solves and classifies all branches at every grid value and locates the
/// root-count changes between neighbours.
pub fn sweep_1d(spec: &SweepSpec, params: &SystemParams, opts: &SolveOptions) -> Result<SweepResult> {
    spec.validate()?;
    let grid = spec.grid();
    let records: Vec<SweepRecord> = grid
        .par_iter()
        .map(|&v| {
            let d = spec.axis.apply(params, &spec.base, v).map_err(|e| e.at_axis(v))?;
            let branches = solve_branches(params, &d, opts).map_err(|e| e.at_axis(v))?;
            Ok(SweepRecord { axis_value: v, branches })
        })
        .collect::<Result<_>>()?;
    let mut folds = Vec::new();
    for w in records.windows(2) {
        let (l, r) = (&w[0], &w[1]);
        if l.branches.len() != r.branches.len() {
            folds.push(refine_count_change(
                params,
                &spec.base,
                spec.axis,
                l.axis_value,
                r.axis_value,
                l.branches.len(),
                SWEEP_FOLD_REL,
                opts,
            )?);
        }
    }
    Ok(SweepResult {
        axis: spec.axis,
        records,
        folds,
        hysteresis: None,
    })
}

/// Fold (saddle-node) locations of `axis` inside `bracket`, ascending.
pub fn locate_folds(
    params: &SystemParams,
    base: &DrivePoint,
    axis: Axis,
    bracket: (f64, f64),
    opts: &SolveOptions,
) -> Result<Vec<f64>> {
    let grid = axis_grid(axis, bracket.0, bracket.1, FOLD_SCAN_POINTS);
    let counts: Vec<usize> = grid
        .par_iter()
        .map(|&v| root_count(params, base, axis, v, opts))
        .collect::<Result<_>>()?;
    let mut folds = Vec::new();
    for i in 1..grid.len() {
        if counts[i] != counts[i - 1] {
            folds.push(refine_count_change(
                params,
                base,
                axis,
                grid[i - 1],
                grid[i],
                counts[i - 1],
                LOCATE_FOLD_REL,
                opts,
            )?);
        }
    }
    Ok(folds)
}

/// Order-preserving correspondence between two ascending branch lists that
/// minimizes the total relative displacement. Returns the index in `next`
/// of `prev[tracked]`, or `None` when that branch has no partner.
fn match_tracked(prev: &[f64], next: &[f64], tracked: usize) -> Option<usize> {
    if prev.len() == next.len() {
        return Some(tracked);
    }
    let cost = |a: f64, b: f64| (a - b).abs() / (a.abs() + b.abs()).max(f64::MIN_POSITIVE);
    if next.len() < prev.len() {
        // Choose which prev entries survive.
        let best = combinations(prev.len(), next.len())
            .into_iter()
            .min_by(|x, y| {
                let cx: f64 = x.iter().zip(next).map(|(&i, &q)| cost(prev[i], q)).sum();
                let cy: f64 = y.iter().zip(next).map(|(&i, &q)| cost(prev[i], q)).sum();
                cx.total_cmp(&cy)
            })?;
        best.iter().position(|&i| i == tracked)
    } else {
        let best = combinations(next.len(), prev.len())
            .into_iter()
            .min_by(|x, y| {
                let cx: f64 = x.iter().zip(prev).map(|(&i, &q)| cost(next[i], q)).sum();
                let cy: f64 = y.iter().zip(prev).map(|(&i, &q)| cost(next[i], q)).sum();
                cx.total_cmp(&cy)
            })?;
        Some(best[tracked])
    }
}

/// All ascending `k`-subsets of `0..n`.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

fn qs_of(branches: &[SteadyBranch]) -> Vec<f64> {
    branches.iter().map(|b| b.q_s).collect()
}

/// Index of the selectable branch nearest in `q_s` to `q`.
fn nearest_selectable(branches: &[SteadyBranch], q: f64, opts: &SolveOptions) -> Option<usize> {
    branches
        .iter()
        .enumerate()
        .filter(|(_, b)| opts.verdict(b) == Stability::Stable)
        .min_by(|(_, a), (_, b)| (a.q_s - q).abs().total_cmp(&(b.q_s - q).abs()))
        .map(|(i, _)| i)
}

struct TraceContext<'a> {
    params: &'a SystemParams,
    base: &'a DrivePoint,
    axis: Axis,
    opts: &'a SolveOptions,
}

impl TraceContext<'_> {
    fn solve(&self, v: f64) -> Result<Vec<SteadyBranch>> {
        let d = self.axis.apply(self.params, self.base, v).map_err(|e| e.at_axis(v))?;
        solve_branches(self.params, &d, self.opts).map_err(|e| e.at_axis(v))
    }

    /// Follows `tracked` across the sorted sample values `order`.
    fn follow(&self, order: &[&SweepRecord], start_high: bool) -> Result<Trace> {
        let first = order[0];
        let stable: Vec<usize> = (0..first.branches.len())
            .filter(|&i| self.opts.verdict(&first.branches[i]) == Stability::Stable)
            .collect();
        let mut tracked = match (start_high, stable.first(), stable.last()) {
            (false, Some(&lo), _) => lo,
            (true, _, Some(&hi)) => hi,
            _ => return Err(Error::NoStableBranch { axis_value: first.axis_value }),
        };
        let mut points = vec![TracePoint {
            axis_value: first.axis_value,
            branch: first.branches[tracked].clone(),
        }];
        let mut jumps = Vec::new();
        for w in order.windows(2) {
            let (prev, next) = (w[0], w[1]);
            let kept = match_tracked(&qs_of(&prev.branches), &qs_of(&next.branches), tracked);
            match kept {
                Some(j) if self.opts.verdict(&next.branches[j]) == Stability::Stable => tracked = j,
                _ => {
                    let from_q = prev.branches[tracked].q_s;
                    let target = nearest_selectable(&next.branches, from_q, self.opts)
                        .ok_or(Error::NoStableBranch { axis_value: next.axis_value })?;
                    let kind = if kept.is_some() { JumpKind::LostStability } else { JumpKind::Fold };
                    let at = self.refine_jump(prev, next.axis_value, tracked)?;
                    jumps.push(Jump {
                        axis_value: at,
                        from_q,
                        to_q: next.branches[target].q_s,
                        kind,
                    });
                    tracked = target;
                }
            }
            points.push(TracePoint {
                axis_value: next.axis_value,
                branch: next.branches[tracked].clone(),
            });
        }
        Ok(Trace { points, jumps })
    }

    /// Bisects between a sample where the tracked branch is occupiable and
    /// the value `lost` where it is not.
    fn refine_jump(&self, held: &SweepRecord, lost: f64, tracked: usize) -> Result<f64> {
        let mut a = held.axis_value;
        let mut b = lost;
        let mut a_qs = qs_of(&held.branches);
        let mut a_idx = tracked;
        for _ in 0..200 {
            if (b - a).abs() <= JUMP_REL * a.abs().max(b.abs()) {
                break;
            }
            let mid = bisect_mid(self.axis, a, b);
            if mid == a || mid == b {
                break;
            }
            let branches = self.solve(mid)?;
            let mid_qs = qs_of(&branches);
            match match_tracked(&a_qs, &mid_qs, a_idx) {
                Some(j) if self.opts.verdict(&branches[j]) == Stability::Stable => {
                    a = mid;
                    a_qs = mid_qs;
                    a_idx = j;
                }
                _ => b = mid,
            }
        }
        Ok(0.5 * (a + b))
    }
}

/// Quasi-static up and/or down sweeps of a power axis.
///
/// The up trace starts on the lowest selectable branch at the smallest
/// power, the down trace on the highest at the largest power. Each step
/// keeps the continuation of the occupied branch while it exists and stays
/// stable, otherwise jumps to the nearest stable branch in `q_s`.
pub fn hysteresis_sweep(spec: &SweepSpec, params: &SystemParams, opts: &SolveOptions) -> Result<SweepResult> {
    if !spec.axis.is_power() {
        return Err(Error::InvalidArgument(format!(
            "hysteresis sweeps run along a power axis, not `{}`",
            spec.axis.name()
        )));
    }
    let mut result = sweep_1d(spec, params, opts)?;
    let ctx = TraceContext {
        params,
        base: &spec.base,
        axis: spec.axis,
        opts,
    };
    let ascending: Vec<&SweepRecord> = result.records.iter().collect();
    let descending: Vec<&SweepRecord> = result.records.iter().rev().collect();
    let up = match spec.direction {
        Direction::Up | Direction::Both => Some(ctx.follow(&ascending, false)?),
        Direction::Down => None,
    };
    let down = match spec.direction {
        Direction::Down | Direction::Both => Some(ctx.follow(&descending, true)?),
        Direction::Up => None,
    };
    result.hysteresis = Some(Hysteresis { up, down });
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        let g = axis_grid(Axis::PowerL, 1e-9, 1e-3, 7);
        assert_eq!(g[0], 1e-9);
        assert_eq!(g[6], 1e-3);
        assert!((g[3] / 1e-6 - 1.0).abs() < 1e-12);
        let g = axis_grid(Axis::Delta1, 2.0, 0.0, 5);
        assert_eq!(g, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        let g = axis_grid(Axis::PowerR, 1.0, 5.0, 5);
        assert_eq!(g, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
    }

    #[test]
    fn matching_through_folds() {
        // Middle pair annihilates.
        assert_eq!(match_tracked(&[1.0, 5.0, 6.0], &[1.1], 0), Some(0));
        assert_eq!(match_tracked(&[1.0, 2.0, 9.0], &[9.1], 0), None);
        assert_eq!(match_tracked(&[1.0, 2.0, 9.0], &[9.1], 2), Some(0));
        // Pair born above the tracked branch.
        assert_eq!(match_tracked(&[1.0], &[1.05, 7.0, 8.0], 0), Some(0));
        assert_eq!(match_tracked(&[9.0], &[1.0, 2.0, 9.1], 0), Some(2));
    }

    #[test]
    fn combination_counts() {
        assert_eq!(combinations(5, 3).len(), 10);
        assert_eq!(combinations(3, 1), vec![vec![0], vec![1], vec![2]]);
    }
}
