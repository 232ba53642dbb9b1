//! Scalar oracles coded from the model equations, independent of the
//! library's polynomial machinery.

#![allow(dead_code)]

use optomech::params::{AmplitudeConvention, SignConvention, SystemParams};
use optomech::DrivePoint;

pub const HBAR: f64 = 1.054571817e-34;

/// `|E|^2` for a pump of `power` at `omega - delta`.
pub fn drive_sq(conv: AmplitudeConvention, power: f64, kappa: f64, omega: f64, delta: f64) -> f64 {
    let flux = power / (HBAR * (omega - delta));
    match conv {
        AmplitudeConvention::Literal => 2.0 * kappa * flux,
        AmplitudeConvention::Flux => flux,
    }
}

/// Plain-number view of one operating point.
#[derive(Debug, Clone, Copy)]
pub struct Model {
    pub k1: f64,
    pub k2: f64,
    pub g1: f64,
    pub g2: f64,
    pub wm: f64,
    pub d1: f64,
    pub d2: f64,
    /// `kappa_e,k |E_k|^2`.
    pub a1: f64,
    pub a2: f64,
    pub s: f64,
}

impl Model {
    pub fn new(p: &SystemParams, d: &DrivePoint) -> Self {
        Model {
            k1: p.kappa1,
            k2: p.kappa2,
            g1: p.g1,
            g2: p.g2,
            wm: p.omega_m,
            d1: d.delta1(),
            d2: d.delta2(),
            a1: p.kappa_e1 * drive_sq(p.amplitude, d.power_l(), p.kappa1, p.omega1, d.delta1()),
            a2: p.kappa_e2 * drive_sq(p.amplitude, d.power_r(), p.kappa2, p.omega2, d.delta2()),
            s: match p.sign {
                SignConvention::Plus => 1.0,
                SignConvention::MinusAsPrinted => -1.0,
            },
        }
    }

    pub fn n1(&self, q: f64) -> f64 {
        self.a1 / (self.k1 * self.k1 + (self.d1 - self.g1 * q).powi(2))
    }

    pub fn n2(&self, q: f64) -> f64 {
        self.a2 / (self.k2 * self.k2 + (self.d2 - self.g2 * q).powi(2))
    }

    pub fn residual(&self, q: f64) -> f64 {
        q - 2.0 / self.wm * (self.g1 * self.n1(q) + self.s * self.g2 * self.n2(q))
    }

    /// Upper end of the displacement range (plus sign).
    pub fn q_bound(&self) -> f64 {
        2.0 / self.wm * (self.g1 * self.a1 / (self.k1 * self.k1) + self.g2 * self.a2 / (self.k2 * self.k2))
    }

    /// Lower end of the displacement range (plus sign): every photon term
    /// evaluated at its largest possible detuning.
    pub fn q_floor(&self) -> f64 {
        let qb = self.q_bound();
        let far1 = self.k1 * self.k1 + (self.d1.abs() + self.g1 * qb).powi(2);
        let far2 = self.k2 * self.k2 + (self.d2.abs() + self.g2 * qb).powi(2);
        2.0 / self.wm * (self.g1 * self.a1 / far1 + self.g2 * self.a2 / far2)
    }
}

/// Zeros of `f` located by sign changes on `grid` (ascending) and refined by
/// bisection to machine precision.
pub fn sign_change_zeros(f: impl Fn(f64) -> f64, grid: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    let mut prev = (grid[0], f(grid[0]));
    if prev.1 == 0.0 {
        out.push(prev.0);
    }
    for &x in &grid[1..] {
        let fx = f(x);
        if fx == 0.0 {
            out.push(x);
        } else if prev.1 != 0.0 && (prev.1 < 0.0) != (fx < 0.0) {
            let (mut a, mut b, fa) = (prev.0, x, prev.1);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if m <= a || m >= b {
                    break;
                }
                let fm = f(m);
                if fm == 0.0 {
                    a = m;
                    b = m;
                    break;
                }
                if (fm < 0.0) == (fa < 0.0) {
                    a = m;
                } else {
                    b = m;
                }
            }
            out.push(0.5 * (a + b));
        }
        prev = (x, fx);
    }
    out
}

/// `n` uniform points on `[lo, hi]` merged with `n` log-spaced points on
/// `[floor, hi]`, ascending, deduplicated.
pub fn warped_grid(lo: f64, floor: f64, hi: f64, n: usize) -> Vec<f64> {
    let mut g = Vec::with_capacity(2 * n + 1);
    for i in 0..n {
        g.push(lo + (hi - lo) * i as f64 / (n - 1) as f64);
    }
    let (lf, lh) = (floor.ln(), hi.ln());
    for i in 0..n {
        g.push((lf + (lh - lf) * i as f64 / (n - 1) as f64).exp());
    }
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs())
}
