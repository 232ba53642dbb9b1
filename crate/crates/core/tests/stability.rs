//! Vector field, Jacobian spectrum and stability verdicts.

mod common;

use common::rel_close;
use nalgebra::SMatrix;
use num_complex::Complex64;
use optomech::params::preset_hill_params;
use optomech::stability::{jacobian, jacobian_eigenvalues, vector_field, DynamicState};
use optomech::{solve_branches, DrivePoint, SolveOptions, Stability, StabilityRule, SystemParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Complex-amplitude form of the mean-field flow.
fn flow(y: &[f64; 6], p: &SystemParams, d: &DrivePoint) -> [f64; 6] {
    let a1 = Complex64::new(y[0], y[1]);
    let a2 = Complex64::new(y[2], y[3]);
    let (q, v) = (y[4], y[5]);
    let i = Complex64::i();
    let s = p.sign.second_cavity_factor();
    let da1 = -(p.kappa1 + i * (d.delta1() - p.g1 * q)) * a1 + p.kappa_e1.sqrt() * d.amp_l();
    let da2 = -(p.kappa2 + i * (d.delta2() - p.g2 * q)) * a2 + p.kappa_e2.sqrt() * d.amp_r();
    let force = 2.0 * p.omega_m * (p.g1 * a1.norm_sqr() + s * p.g2 * a2.norm_sqr());
    let dv = -p.gamma_m() * v - p.omega_m * p.omega_m * q + force;
    [da1.re, da1.im, da2.re, da2.im, v, dv]
}

fn random_point(rng: &mut ChaCha8Rng, p: &SystemParams) -> DrivePoint {
    random_point_in(rng, p, -12.0, -6.0)
}

/// Log-uniform powers between `10^lo` and `10^hi` W.
fn random_point_in(rng: &mut ChaCha8Rng, p: &SystemParams, lo: f64, hi: f64) -> DrivePoint {
    let wm = p.omega_m;
    DrivePoint::new(
        p,
        rng.random_range(-2.0 * wm..2.0 * wm),
        rng.random_range(-2.0 * wm..2.0 * wm),
        10f64.powf(rng.random_range(lo..hi)),
        10f64.powf(rng.random_range(lo..hi)),
    )
    .unwrap()
}

fn random_state(rng: &mut ChaCha8Rng, scale: f64) -> DynamicState {
    let mut v = [0.0; 6];
    for x in v.iter_mut() {
        *x = rng.random_range(-scale..scale);
    }
    DynamicState::from_array(v)
}

#[test]
fn vector_field_matches_complex_flow() {
    let p = preset_hill_params();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let d = random_point(&mut rng, &p);
        let st = random_state(&mut rng, 1e4);
        let lib = vector_field(&st, &p, &d).to_array();
        let ora = flow(&st.to_array(), &p, &d);
        for k in 0..6 {
            let scale = lib[k].abs().max(ora[k].abs()).max(1e-300);
            assert!((lib[k] - ora[k]).abs() <= 1e-12 * scale + 1e-9, "component {k}: {} vs {}", lib[k], ora[k]);
        }
    }
}

#[test]
fn jacobian_matches_centered_differences() {
    let p = preset_hill_params();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let d = random_point(&mut rng, &p);
        let st = random_state(&mut rng, 1e4);
        let j = jacobian(&st, &p, &d);
        let y = st.to_array();
        for c in 0..6 {
            let h = 1e-6 * y[c].abs().max(1.0);
            let (mut up, mut dn) = (y, y);
            up[c] += h;
            dn[c] -= h;
            let (fu, fd) = (flow(&up, &p, &d), flow(&dn, &p, &d));
            for r in 0..6 {
                let fd_entry = (fu[r] - fd[r]) / (2.0 * h);
                let row_scale = j[r].iter().zip(&y).map(|(a, x)| (a * x.abs().max(1.0)).abs()).fold(0.0, f64::max);
                let tol = 1e-6 * row_scale / y[c].abs().max(1.0);
                assert!(
                    (j[r][c] - fd_entry).abs() <= tol,
                    "J[{r}][{c}] = {} vs difference {fd_entry}",
                    j[r][c]
                );
            }
        }
    }
}

#[test]
fn steady_branches_are_rest_points() {
    let p = preset_hill_params();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let d = random_point(&mut rng, &p);
        for b in solve_branches(&p, &d, &SolveOptions::default()).unwrap() {
            let st = DynamicState::from_branch(&b);
            let f = vector_field(&st, &p, &d).to_array();
            let amp1 = b.n_p1.sqrt().max(1e-300);
            let amp2 = b.n_p2.sqrt().max(1e-300);
            // Natural rates: kappa for the amplitudes, omega_m for the mechanics.
            let scale = [
                p.kappa1 * amp1,
                p.kappa1 * amp1,
                p.kappa2 * amp2,
                p.kappa2 * amp2,
                p.omega_m * b.q_s.abs().max(1e-300),
                p.omega_m * p.omega_m * b.q_s.abs().max(1e-300),
            ];
            for k in 0..6 {
                assert!(f[k].abs() <= 1e-6 * scale[k], "component {k}: {:e} vs scale {:e}", f[k], scale[k]);
            }
        }
    }
}

#[test]
fn eigenvalues_agree_with_dense_solver() {
    let p = preset_hill_params();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut checked = 0;
    while checked < 60 {
        let d = random_point(&mut rng, &p);
        for b in solve_branches(&p, &d, &SolveOptions::default()).unwrap() {
            let st = DynamicState::from_branch(&b);
            let ours = jacobian_eigenvalues(&st, &p, &d).unwrap();
            assert_eq!(ours.len(), 6);
            // Reference spectrum of D^-1 J D with D the natural state scales.
            let j = jacobian(&st, &p, &d);
            let q = b.q_s.abs().max(1e-300);
            let sc = [b.n_p1.sqrt(), b.n_p1.sqrt(), b.n_p2.sqrt(), b.n_p2.sqrt(), q, q * p.omega_m].map(|v| v.max(1e-300));
            let m = SMatrix::<f64, 6, 6>::from_fn(|r, c| j[r][c] / p.omega_m * sc[c] / sc[r]);
            let theirs: Vec<Complex64> = m.complex_eigenvalues().iter().map(|z| z * p.omega_m).collect();
            let radius = theirs.iter().map(|z| z.norm()).fold(0.0, f64::max);
            for z in &ours {
                let nearest = theirs.iter().map(|w| (w - z).norm()).fold(f64::INFINITY, f64::min);
                assert!(nearest <= 1e-9 * radius, "{z} has no match in {theirs:?}");
                assert!(ours.iter().any(|w| (w - z.conj()).norm() <= 1e-9 * radius), "{z} lacks a conjugate");
            }
            let max_re = ours.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
            assert!(rel_close(max_re, b.max_re_eig.unwrap(), 1e-12) || (max_re - b.max_re_eig.unwrap()).abs() < 1.0);
            checked += 1;
        }
    }
}

#[test]
fn stable_decay_rates_lie_between_mechanical_and_optical() {
    let p = preset_hill_params();
    let kappa_max = p.kappa1.max(p.kappa2);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut stable = 0;
    for _ in 0..300 {
        let d = random_point_in(&mut rng, &p, -13.0, -10.0);
        for b in solve_branches(&p, &d, &SolveOptions::default()).unwrap() {
            if b.stability == Some(Stability::Stable) {
                let m = b.max_re_eig.unwrap();
                assert!(m >= -kappa_max && m <= -0.45 * p.gamma_m(), "max Re = {m:e}");
                stable += 1;
            }
        }
    }
    assert!(stable > 50, "{stable}");
}

#[test]
fn undriven_rest_point_decays_at_half_mechanical_rate() {
    let p = preset_hill_params();
    let d = DrivePoint::new(&p, p.omega_m, p.omega_m, 0.0, 0.0).unwrap();
    let b = &solve_branches(&p, &d, &SolveOptions::default()).unwrap()[0];
    assert_eq!(b.stability, Some(Stability::Stable));
    assert!(rel_close(b.max_re_eig.unwrap(), -0.5 * p.gamma_m(), 1e-6));
}

#[test]
fn stable_count_exceeds_unstable_by_one_under_ordering() {
    let p = preset_hill_params();
    let opts = SolveOptions {
        rule: StabilityRule::Ordering,
        ..SolveOptions::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..300 {
        let d = random_point(&mut rng, &p);
        let branches = solve_branches(&p, &d, &opts).unwrap();
        let s = branches.iter().filter(|b| opts.verdict(b) == Stability::Stable).count();
        let u = branches.iter().filter(|b| opts.verdict(b) == Stability::Unstable).count();
        assert_eq!(s, u + 1);
    }
}

#[test]
fn stable_count_exceeds_unstable_by_one_when_red_detuned() {
    let p = preset_hill_params();
    let opts = SolveOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut checked = 0;
    for _ in 0..2000 {
        let d = random_point_in(&mut rng, &p, -13.0, -10.0);
        let branches = solve_branches(&p, &d, &opts).unwrap();
        let red = branches.iter().all(|b| b.delta_eff1 > 0.0 && b.delta_eff2 > 0.0);
        if !red {
            continue;
        }
        let s = branches.iter().filter(|b| b.stability == Some(Stability::Stable)).count();
        let u = branches.iter().filter(|b| b.stability == Some(Stability::Unstable)).count();
        assert_eq!(s, u + 1, "{d:?}");
        checked += 1;
    }
    assert!(checked > 100, "{checked}");
}
