//! Steady-state algebra: photon numbers as functions of the static mechanical
//! displacement, the scalar self-consistency residual, and its reduction to a
//! single real polynomial.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::params::{DrivePoint, SystemParams};
use crate::poly::{real_roots, RealPolynomial};

/// Dynamical stability verdict of a steady branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stability {
    Stable,
    Unstable,
    Marginal,
}

impl Stability {
    /// Output code: 0 stable, 1 unstable, 2 marginal.
    pub fn code(self) -> u8 {
        match self {
            Stability::Stable => 0,
            Stability::Unstable => 1,
            Stability::Marginal => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Stability::Stable),
            1 => Some(Stability::Unstable),
            2 => Some(Stability::Marginal),
            _ => None,
        }
    }
}

/// Photon numbers and effective detunings at a given displacement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityResponse {
    pub n_p1: f64,
    pub n_p2: f64,
    pub delta_eff1: f64,
    pub delta_eff2: f64,
}

/// `n_k = kappa_ek E_k^2 / (kappa_k^2 + (Delta_k - g_k q)^2)` for both cavities.
pub fn photon_numbers_from_q(q: f64, params: &SystemParams, drive: &DrivePoint) -> CavityResponse {
    let delta_eff1 = drive.delta1() - params.g1 * q;
    let delta_eff2 = drive.delta2() - params.g2 * q;
    let (a1, a2) = injected_intensities(params, drive);
    CavityResponse {
        n_p1: a1 / (params.kappa1 * params.kappa1 + delta_eff1 * delta_eff1),
        n_p2: a2 / (params.kappa2 * params.kappa2 + delta_eff2 * delta_eff2),
        delta_eff1,
        delta_eff2,
    }
}

/// `A_k = kappa_ek E_k^2`.
fn injected_intensities(params: &SystemParams, drive: &DrivePoint) -> (f64, f64) {
    (
        params.kappa_e1 * drive.amp_l() * drive.amp_l(),
        params.kappa_e2 * drive.amp_r() * drive.amp_r(),
    )
}

/// Complex steady amplitudes `sqrt(kappa_ek) E_k / (kappa_k + i Delta'_k)`.
pub fn steady_amplitudes(q: f64, params: &SystemParams, drive: &DrivePoint) -> (Complex64, Complex64) {
    let d1 = drive.delta1() - params.g1 * q;
    let d2 = drive.delta2() - params.g2 * q;
    let a1 = Complex64::new(params.kappa_e1.sqrt() * drive.amp_l(), 0.0) / Complex64::new(params.kappa1, d1);
    let a2 = Complex64::new(params.kappa_e2.sqrt() * drive.amp_r(), 0.0) / Complex64::new(params.kappa2, d2);
    (a1, a2)
}

/// Radiation-pressure displacement `(2/omega_m)(g1 n1 ± g2 n2)` implied by `q`.
pub fn displacement_from_photons(params: &SystemParams, r: &CavityResponse) -> f64 {
    let s = params.sign.second_cavity_factor();
    2.0 / params.omega_m * (params.g1 * r.n_p1 + s * params.g2 * r.n_p2)
}

/// `f(q) = q - (2/omega_m)(g1 n1(q) ± g2 n2(q))`; zero exactly at steady displacements.
pub fn steady_residual(q: f64, params: &SystemParams, drive: &DrivePoint) -> f64 {
    let r = photon_numbers_from_q(q, params, drive);
    q - displacement_from_photons(params, &r)
}

/// `df/dq`. Positive at statically stable branches.
pub fn residual_slope(q: f64, params: &SystemParams, drive: &DrivePoint) -> f64 {
    let (a1, a2) = injected_intensities(params, drive);
    let s = params.sign.second_cavity_factor();
    let term = |a: f64, g: f64, kappa: f64, delta: f64| {
        if g == 0.0 {
            return 0.0;
        }
        let de = delta - g * q;
        let den = kappa * kappa + de * de;
        // dn/dq = 2 g A de / den^2
        g * 2.0 * g * a * de / (den * den)
    };
    1.0 - 2.0 / params.omega_m
        * (term(a1, params.g1, params.kappa1, drive.delta1())
            + s * term(a2, params.g2, params.kappa2, drive.delta2()))
}

/// Closed interval guaranteed to contain every steady displacement.
///
/// Each photon number is bounded by its on-resonance value
/// `kappa_ek E_k^2 / kappa_k^2`.
pub fn displacement_bounds(params: &SystemParams, drive: &DrivePoint) -> (f64, f64) {
    let (a1, a2) = injected_intensities(params, drive);
    let left = 2.0 / params.omega_m * params.g1 * a1 / (params.kappa1 * params.kappa1);
    let right = 2.0 / params.omega_m * params.g2 * a2 / (params.kappa2 * params.kappa2);
    match params.sign.second_cavity_factor() > 0.0 {
        true => (0.0, left + right),
        false => (-right, left),
    }
}

/// The fixed-point polynomial in the scaled variable `x = q / q_scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointPolynomial {
    pub poly: RealPolynomial,
    pub q_scale: f64,
}

/// Builds `p(x) = x D1 D2 - c1 D2 - c2 D1` with
/// `D_k(x) = (kappa_k^2 + (Delta_k - g_k q_scale x)^2) / omega_m^2` and
/// `c_k = 2 g_k A_k / (omega_m^3 q_scale)`.
///
/// `p` is `f(q) D1 D2 / q_scale`, so its real zeros are exactly the steady
/// displacements. When `g_k == 0` the constant factor `D_k` is divided out.
pub fn assemble_fixed_point_polynomial(params: &SystemParams, drive: &DrivePoint) -> Result<FixedPointPolynomial> {
    let (lo, hi) = displacement_bounds(params, drive);
    let q_scale = lo.abs().max(hi).max(1.0);
    let wm = params.omega_m;
    let (a1, a2) = injected_intensities(params, drive);
    let s = params.sign.second_cavity_factor();

    let denominator = |g: f64, kappa: f64, delta: f64| -> Vec<f64> {
        if g == 0.0 {
            return vec![1.0];
        }
        let k = kappa / wm;
        let d = delta / wm;
        let gs = g / wm * q_scale;
        vec![k * k + d * d, -2.0 * d * gs, gs * gs]
    };
    let d1 = denominator(params.g1, params.kappa1, drive.delta1());
    let d2 = denominator(params.g2, params.kappa2, drive.delta2());
    let c1 = 2.0 * params.g1 * a1 / (wm * wm * wm * q_scale);
    let c2 = s * 2.0 * params.g2 * a2 / (wm * wm * wm * q_scale);

    let d12 = poly_mul(&d1, &d2);
    let mut coeffs = poly_mul(&[0.0, 1.0], &d12);
    for (i, v) in d2.iter().enumerate() {
        coeffs[i] -= c1 * v;
    }
    for (i, v) in d1.iter().enumerate() {
        coeffs[i] -= c2 * v;
    }
    Ok(FixedPointPolynomial {
        poly: RealPolynomial::new(coeffs)?.trim_negligible(),
        q_scale,
    })
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// One steady-state solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyBranch {
    pub q_s: f64,
    pub amp1: (f64, f64),
    pub amp2: (f64, f64),
    pub n_p1: f64,
    pub n_p2: f64,
    pub delta_eff1: f64,
    pub delta_eff2: f64,
    /// Verdict from the Jacobian spectrum; `None` until classified.
    pub stability: Option<Stability>,
    /// Largest real part of the Jacobian eigenvalues (rad/s).
    pub max_re_eig: Option<f64>,
    /// Verdict of the static root-ordering rule: stable where `df/dq > 0`.
    pub ordering: Stability,
}

impl SteadyBranch {
    pub fn at(q: f64, params: &SystemParams, drive: &DrivePoint) -> Self {
        let r = photon_numbers_from_q(q, params, drive);
        let (a1, a2) = steady_amplitudes(q, params, drive);
        let slope = residual_slope(q, params, drive);
        let ordering = if slope.abs() <= 1e-9 {
            Stability::Marginal
        } else if slope > 0.0 {
            Stability::Stable
        } else {
            Stability::Unstable
        };
        SteadyBranch {
            q_s: q,
            amp1: (a1.re, a1.im),
            amp2: (a2.re, a2.im),
            n_p1: r.n_p1,
            n_p2: r.n_p2,
            delta_eff1: r.delta_eff1,
            delta_eff2: r.delta_eff2,
            stability: None,
            max_re_eig: None,
            ordering,
        }
    }

    pub fn amp1(&self) -> Complex64 {
        Complex64::new(self.amp1.0, self.amp1.1)
    }

    pub fn amp2(&self) -> Complex64 {
        Complex64::new(self.amp2.0, self.amp2.1)
    }

    /// True when the Jacobian and the ordering rule disagree.
    pub fn rules_disagree(&self) -> bool {
        matches!(self.stability, Some(s) if s != self.ordering)
    }
}

/// All steady displacements at one drive point, ascending.
pub fn steady_displacements(params: &SystemParams, drive: &DrivePoint, imag_tol: f64) -> Result<Vec<f64>> {
    if drive.is_undriven() {
        return Ok(vec![0.0]);
    }
    let fp = assemble_fixed_point_polynomial(params, drive)?;
    if fp.poly.degree() == 0 {
        // Only reachable when both couplings vanish: p(x) = x.
        return Ok(vec![0.0]);
    }
    let xs = real_roots(&fp.poly, imag_tol)?;
    let mut qs: Vec<f64> = xs
        .into_iter()
        .map(|x| polish_on_residual(x * fp.q_scale, params, drive))
        .collect();
    qs.sort_by(f64::total_cmp);
    qs.dedup_by(|a, b| (*a - *b).abs() <= 1e-8 * a.abs().max(b.abs()));
    Ok(qs)
}

/// A few safeguarded Newton steps on the rational residual itself.
fn polish_on_residual(q0: f64, params: &SystemParams, drive: &DrivePoint) -> f64 {
    let mut q = q0;
    let mut res = steady_residual(q, params, drive).abs();
    for _ in 0..8 {
        if res == 0.0 {
            break;
        }
        let slope = residual_slope(q, params, drive);
        if slope == 0.0 || !slope.is_finite() {
            break;
        }
        let next = q - steady_residual(q, params, drive) / slope;
        let next_res = steady_residual(next, params, drive).abs();
        if !(next_res < res) {
            break;
        }
        q = next;
        res = next_res;
    }
    q
}

/// Unclassified branches at one drive point, ascending in `q_s`.
pub fn steady_branches(params: &SystemParams, drive: &DrivePoint, imag_tol: f64) -> Result<Vec<SteadyBranch>> {
    Ok(steady_displacements(params, drive, imag_tol)?
        .into_iter()
        .map(|q| SteadyBranch::at(q, params, drive))
        .collect())
}
