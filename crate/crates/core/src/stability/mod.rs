//! Linear stability of steady branches under the deterministic mean-field
//! dynamics, plus a time-domain integrator used as an independent check.

mod ode;

pub use ode::{integrate_dynamics, integrate_dynamics_with, IntegrationOptions, Trajectory};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{DrivePoint, SystemParams};
use crate::poly::{all_roots, RealPolynomial};
use crate::steady::{Stability, SteadyBranch};

/// Default half-width of the marginal band, in units of `omega_m`.
pub const DEFAULT_MARGINAL_BAND: f64 = 1e-9;

/// Mean-field state: both cavity amplitudes, displacement and its velocity.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DynamicState {
    pub re1: f64,
    pub im1: f64,
    pub re2: f64,
    pub im2: f64,
    pub q: f64,
    /// dQ/dt (1/s).
    pub p: f64,
}

impl DynamicState {
    pub fn from_array(v: [f64; 6]) -> Self {
        DynamicState {
            re1: v[0],
            im1: v[1],
            re2: v[2],
            im2: v[3],
            q: v[4],
            p: v[5],
        }
    }

    pub fn to_array(self) -> [f64; 6] {
        [self.re1, self.im1, self.re2, self.im2, self.q, self.p]
    }

    /// The resting state of a steady branch.
    pub fn from_branch(b: &SteadyBranch) -> Self {
        DynamicState {
            re1: b.amp1.0,
            im1: b.amp1.1,
            re2: b.amp2.0,
            im2: b.amp2.1,
            q: b.q_s,
            p: 0.0,
        }
    }

    pub fn photons(&self) -> (f64, f64) {
        (
            self.re1 * self.re1 + self.im1 * self.im1,
            self.re2 * self.re2 + self.im2 * self.im2,
        )
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Time derivative of the noiseless mean-field equations.
///
/// ```text
/// da_k/dt = -(kappa_k + i(Delta_k - g_k Q)) a_k + sqrt(kappa_ek) E_k
/// dQ/dt   = P
/// dP/dt   = -gamma_m P - omega_m^2 Q + 2 omega_m (g1 |a1|^2 ± g2 |a2|^2)
/// ```
pub fn vector_field(state: &DynamicState, params: &SystemParams, drive: &DrivePoint) -> DynamicState {
    let s = params.sign.second_cavity_factor();
    let d1 = drive.delta1() - params.g1 * state.q;
    let d2 = drive.delta2() - params.g2 * state.q;
    let (n1, n2) = state.photons();
    DynamicState {
        re1: -params.kappa1 * state.re1 + d1 * state.im1 + params.kappa_e1.sqrt() * drive.amp_l(),
        im1: -params.kappa1 * state.im1 - d1 * state.re1,
        re2: -params.kappa2 * state.re2 + d2 * state.im2 + params.kappa_e2.sqrt() * drive.amp_r(),
        im2: -params.kappa2 * state.im2 - d2 * state.re2,
        q: state.p,
        p: -params.gamma_m() * state.p - params.omega_m * params.omega_m * state.q
            + 2.0 * params.omega_m * (params.g1 * n1 + s * params.g2 * n2),
    }
}

pub type Matrix6 = [[f64; 6]; 6];

/// Analytic Jacobian of [`vector_field`] (rad/s), row = derivative component.
pub fn jacobian(state: &DynamicState, params: &SystemParams, drive: &DrivePoint) -> Matrix6 {
    let s = params.sign.second_cavity_factor();
    let d1 = drive.delta1() - params.g1 * state.q;
    let d2 = drive.delta2() - params.g2 * state.q;
    let wm = params.omega_m;
    let mut j = [[0.0; 6]; 6];

    j[0][0] = -params.kappa1;
    j[0][1] = d1;
    j[0][4] = -params.g1 * state.im1;
    j[1][0] = -d1;
    j[1][1] = -params.kappa1;
    j[1][4] = params.g1 * state.re1;

    j[2][2] = -params.kappa2;
    j[2][3] = d2;
    j[2][4] = -params.g2 * state.im2;
    j[3][2] = -d2;
    j[3][3] = -params.kappa2;
    j[3][4] = params.g2 * state.re2;

    j[4][5] = 1.0;

    j[5][0] = 4.0 * wm * params.g1 * state.re1;
    j[5][1] = 4.0 * wm * params.g1 * state.im1;
    j[5][2] = s * 4.0 * wm * params.g2 * state.re2;
    j[5][3] = s * 4.0 * wm * params.g2 * state.im2;
    j[5][4] = -wm * wm;
    j[5][5] = -params.gamma_m();
    j
}

/// Diagonal similarity scaling (powers of two) that evens out row and
/// column norms. Eigenvalues are unchanged.
fn balance(mut a: Matrix6) -> Matrix6 {
    const RADIX: f64 = 2.0;
    for _ in 0..64 {
        let mut converged = true;
        for i in 0..6 {
            let mut c = 0.0;
            let mut r = 0.0;
            for k in 0..6 {
                if k != i {
                    c += a[k][i].abs();
                    r += a[i][k].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut cc = c;
            let mut rr = r;
            while cc < rr / RADIX {
                f *= RADIX;
                cc *= RADIX;
                rr /= RADIX;
            }
            while cc > rr * RADIX {
                f /= RADIX;
                cc /= RADIX;
                rr *= RADIX;
            }
            if (cc + rr) < 0.95 * s {
                converged = false;
                for k in 0..6 {
                    a[i][k] /= f;
                    a[k][i] *= f;
                }
            }
        }
        if converged {
            break;
        }
    }
    a
}

/// Characteristic polynomial `det(lambda I - A)` by the Faddeev–LeVerrier
/// recurrence, ascending coefficients.
pub fn characteristic_polynomial(a: &Matrix6) -> Vec<f64> {
    let n = 6;
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    let mut m = [[0.0; 6]; 6];
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{n-k+1} I
        let mut next = [[0.0; 6]; 6];
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for l in 0..n {
                    acc += a[i][l] * m[l][j];
                }
                next[i][j] = acc;
            }
            next[i][i] += c[n - k + 1];
        }
        m = next;
        let mut tr = 0.0;
        for i in 0..n {
            for l in 0..n {
                tr += a[i][l] * m[l][i];
            }
        }
        c[n - k] = -tr / k as f64;
    }
    c
}

/// Eigenvalues of the Jacobian at `state`, in rad/s.
pub fn jacobian_eigenvalues(state: &DynamicState, params: &SystemParams, drive: &DrivePoint) -> Result<Vec<Complex64>> {
    let (_, eig) = scaled_spectrum(state, params, drive)?;
    Ok(eig.into_iter().map(|z| z * params.omega_m).collect())
}

fn scaled_spectrum(
    state: &DynamicState,
    params: &SystemParams,
    drive: &DrivePoint,
) -> Result<(RealPolynomial, Vec<Complex64>)> {
    let mut j = jacobian(state, params, drive);
    for row in j.iter_mut() {
        for v in row.iter_mut() {
            *v /= params.omega_m;
        }
    }
    let chi = characteristic_polynomial(&balance(j));
    let poly = RealPolynomial::new(chi)?;
    match all_roots(&poly) {
        Ok(eig) if eig.len() == 6 => Ok((poly, eig)),
        Ok(_) => Err(Error::Classification {
            reason: "characteristic polynomial lost degree".into(),
            poly,
        }),
        Err(_) => Err(Error::Classification {
            reason: "eigenvalue root finding did not converge".into(),
            poly,
        }),
    }
}

/// Jacobian verdict for a branch; fills `stability` and `max_re_eig`.
///
/// Stable when every eigenvalue has real part below `-band * omega_m`,
/// unstable when one exceeds `+band * omega_m`, marginal otherwise.
pub fn classify_stability(
    branch: &SteadyBranch,
    params: &SystemParams,
    drive: &DrivePoint,
    marginal_band: f64,
) -> Result<(Stability, f64)> {
    let state = DynamicState::from_branch(branch);
    let (_, eig) = scaled_spectrum(&state, params, drive)?;
    let max_re = eig.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let verdict = if max_re < -marginal_band {
        Stability::Stable
    } else if max_re > marginal_band {
        Stability::Unstable
    } else {
        Stability::Marginal
    };
    Ok((verdict, max_re * params.omega_m))
}

/// Classifies in place.
pub fn classify_in_place(
    branch: &mut SteadyBranch,
    params: &SystemParams,
    drive: &DrivePoint,
    marginal_band: f64,
) -> Result<()> {
    let (s, m) = classify_stability(branch, params, drive, marginal_band)?;
    branch.stability = Some(s);
    branch.max_re_eig = Some(m);
    Ok(())
}
