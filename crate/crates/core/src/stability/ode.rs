//! Adaptive classical Runge–Kutta with step doubling.
//!
//! Each accepted step is compared against two half steps; the difference is
//! the local error estimate. Time is advanced internally in units of
//! `1/omega_m`.

use super::{vector_field, DynamicState};
use crate::error::{Error, Result};
use crate::params::{DrivePoint, SystemParams};
use crate::steady::displacement_bounds;

#[derive(Debug, Clone)]
pub struct IntegrationOptions {
    pub rel_tol: f64,
    /// Per-component magnitude used for the error norm. Derived from the
    /// drive when `None`.
    pub scale: Option<[f64; 6]>,
    pub max_steps: usize,
    /// Number of evenly spaced samples kept in the trajectory.
    pub samples: usize,
}

impl IntegrationOptions {
    pub fn new(rel_tol: f64) -> Self {
        IntegrationOptions {
            rel_tol,
            scale: None,
            max_steps: 200_000_000,
            samples: 1000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Seconds.
    pub times: Vec<f64>,
    pub states: Vec<DynamicState>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// True when the observer ended the run before `t_end`.
    pub stopped_early: bool,
}

impl Trajectory {
    pub fn final_state(&self) -> &DynamicState {
        self.states.last().expect("trajectory has at least the initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory has at least the initial time")
    }
}

/// Integrates the mean-field dynamics from `initial` until `t_end` seconds.
pub fn integrate_dynamics(
    initial: &DynamicState,
    params: &SystemParams,
    drive: &DrivePoint,
    t_end: f64,
    rel_tol: f64,
) -> Result<Trajectory> {
    integrate_dynamics_with(initial, params, drive, t_end, &IntegrationOptions::new(rel_tol), |_, _| false)
}

/// As [`integrate_dynamics`], with an observer called after every accepted
/// step; returning `true` stops the run.
pub fn integrate_dynamics_with<F>(
    initial: &DynamicState,
    params: &SystemParams,
    drive: &DrivePoint,
    t_end: f64,
    opts: &IntegrationOptions,
    mut stop: F,
) -> Result<Trajectory>
where
    F: FnMut(f64, &DynamicState) -> bool,
{
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidArgument(format!("t_end must be > 0, got {t_end}")));
    }
    if !(1e-12..=1e-3).contains(&opts.rel_tol) {
        return Err(Error::InvalidArgument(format!(
            "rel_tol must lie in [1e-12, 1e-3], got {}",
            opts.rel_tol
        )));
    }
    if !initial.is_finite() {
        return Err(Error::InvalidArgument("initial state is not finite".into()));
    }
    let wm = params.omega_m;
    let tau_end = t_end * wm;
    let scale = opts.scale.unwrap_or_else(|| default_scale(initial, params, drive));
    let rhs = |y: &[f64; 6]| -> [f64; 6] {
        let d = vector_field(&DynamicState::from_array(*y), params, drive).to_array();
        d.map(|v| v / wm)
    };

    let mut y = initial.to_array();
    let mut tau = 0.0;
    let mut h = 1e-2_f64.min(tau_end);
    let sample_dt = tau_end / opts.samples.max(1) as f64;
    let mut next_sample = sample_dt;
    let mut times = vec![0.0];
    let mut states = vec![*initial];
    let (mut accepted, mut rejected) = (0usize, 0usize);
    let mut stopped_early = false;

    let mut k0 = rhs(&y);
    while tau < tau_end {
        if accepted + rejected >= opts.max_steps {
            return Err(Error::Integration {
                time: tau / wm,
                reason: format!("step budget of {} exhausted", opts.max_steps),
            });
        }
        h = h.min(tau_end - tau);
        let full = rk4_step(&rhs, &y, &k0, h);
        let half1 = rk4_step(&rhs, &y, &k0, 0.5 * h);
        let kmid = rhs(&half1);
        let half2 = rk4_step(&rhs, &half1, &kmid, 0.5 * h);

        let mut err = 0.0_f64;
        for i in 0..6 {
            let sc = scale[i].max(y[i].abs()).max(half2[i].abs()).max(f64::MIN_POSITIVE);
            err = err.max((half2[i] - full[i]).abs() / 15.0 / (opts.rel_tol * sc));
        }
        if !err.is_finite() {
            return Err(Error::Integration {
                time: tau / wm,
                reason: "state became non-finite".into(),
            });
        }
        if err <= 1.0 {
            tau += h;
            // Richardson extrapolation of the two estimates.
            for i in 0..6 {
                y[i] = half2[i] + (half2[i] - full[i]) / 15.0;
            }
            k0 = rhs(&y);
            accepted += 1;
            let st = DynamicState::from_array(y);
            if tau >= next_sample || tau >= tau_end {
                times.push(tau / wm);
                states.push(st);
                while next_sample <= tau {
                    next_sample += sample_dt;
                }
            }
            if stop(tau / wm, &st) {
                if *times.last().unwrap() != tau / wm {
                    times.push(tau / wm);
                    states.push(st);
                }
                stopped_early = true;
                break;
            }
        } else {
            rejected += 1;
        }
        let factor = if err == 0.0 { 4.0 } else { (0.9 * err.powf(-0.2)).clamp(0.1, 4.0) };
        h *= factor;
        if h < 1e-14 * tau_end.max(1.0) {
            return Err(Error::Integration {
                time: tau / wm,
                reason: format!("step size underflow (h = {h:e} / omega_m)"),
            });
        }
    }
    Ok(Trajectory {
        times,
        states,
        accepted_steps: accepted,
        rejected_steps: rejected,
        stopped_early,
    })
}

fn rk4_step<F>(rhs: &F, y: &[f64; 6], k1: &[f64; 6], h: f64) -> [f64; 6]
where
    F: Fn(&[f64; 6]) -> [f64; 6],
{
    let add = |a: &[f64; 6], b: &[f64; 6], s: f64| -> [f64; 6] {
        let mut o = *a;
        for i in 0..6 {
            o[i] += s * b[i];
        }
        o
    };
    let k2 = rhs(&add(y, k1, 0.5 * h));
    let k3 = rhs(&add(y, &k2, 0.5 * h));
    let k4 = rhs(&add(y, &k3, h));
    let mut out = *y;
    for i in 0..6 {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Natural magnitudes: on-resonance amplitudes, the displacement bound and
/// `omega_m` times it for the velocity.
pub(crate) fn default_scale(initial: &DynamicState, params: &SystemParams, drive: &DrivePoint) -> [f64; 6] {
    let a1 = params.kappa_e1.sqrt() * drive.amp_l() / params.kappa1;
    let a2 = params.kappa_e2.sqrt() * drive.amp_r() / params.kappa2;
    let (lo, hi) = displacement_bounds(params, drive);
    let a1 = a1.max((initial.re1.powi(2) + initial.im1.powi(2)).sqrt());
    let a2 = a2.max((initial.re2.powi(2) + initial.im2.powi(2)).sqrt());
    let amp_floor = 1e-12 * a1.max(a2);
    let a1 = a1.max(amp_floor).max(1e-300);
    let a2 = a2.max(amp_floor).max(1e-300);
    let q = lo.abs().max(hi).max(initial.q.abs()).max(1e-300);
    [a1, a1, a2, a2, q, q * params.omega_m]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::preset_hill_params;

    #[test]
    fn free_oscillator_decays() {
        let p = preset_hill_params();
        let d = DrivePoint::new(&p, p.omega_m, p.omega_m, 0.0, 0.0).unwrap();
        let start = DynamicState {
            re1: 0.0,
            im1: 0.0,
            re2: 0.0,
            im2: 0.0,
            q: 1.0,
            p: 0.0,
        };
        let t_end = 2.0 / p.gamma_m();
        let mut opts = IntegrationOptions::new(1e-9);
        opts.scale = Some([1.0, 1.0, 1.0, 1.0, 1.0, p.omega_m]);
        opts.samples = 50;
        let traj = integrate_dynamics_with(&start, &p, &d, t_end, &opts, |_, _| false).unwrap();
        let env: Vec<f64> = traj
            .states
            .iter()
            .map(|s| (s.q * s.q + (s.p / p.omega_m).powi(2)).sqrt())
            .collect();
        for w in env.windows(2).skip(1) {
            assert!(w[1] <= w[0] * (1.0 + 1e-6), "{} > {}", w[1], w[0]);
        }
        let end = traj.final_state();
        let expected = (-p.gamma_m() * t_end / 2.0).exp();
        assert!((env.last().unwrap() / expected - 1.0).abs() < 1e-3, "{} vs {expected}", env.last().unwrap());
        assert_eq!(end.photons(), (0.0, 0.0));
    }

    #[test]
    fn rejects_bad_arguments() {
        let p = preset_hill_params();
        let d = DrivePoint::new(&p, 0.0, 0.0, 0.0, 0.0).unwrap();
        let s = DynamicState::default();
        assert!(integrate_dynamics(&s, &p, &d, 0.0, 1e-6).is_err());
        assert!(integrate_dynamics(&s, &p, &d, 1e-9, 1e-2).is_err());
    }
}
