//! Dense real-coefficient polynomials and an Aberth–Ehrlich root finder.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default imaginary-part tolerance for accepting a root as real.
pub const DEFAULT_IMAG_TOL: f64 = 1e-7;

const TRIM_REL: f64 = 1e-14;
const MAX_ABERTH_ITERS: usize = 500;
const MAX_NEWTON_ITERS: usize = 50;
const DEDUP_REL: f64 = 1e-8;

/// Polynomial `sum_i coeffs[i] x^i` with trailing (high-degree) zeros trimmed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealPolynomial {
    coeffs: Vec<f64>,
}

impl RealPolynomial {
    /// Builds a polynomial from ascending-degree coefficients; exact zero
    /// high-degree coefficients are dropped.
    pub fn new(mut coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument(
                "polynomial has non-finite coefficients".into(),
            ));
        }
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Ok(RealPolynomial { coeffs })
    }

    /// Drops high-degree coefficients below `1e-14 * max|c|`. Only
    /// meaningful when the roots of interest lie near the unit disk, where
    /// such terms cannot move them.
    pub fn trim_negligible(mut self) -> Self {
        let max = self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        while self.coeffs.len() > 1 && self.coeffs.last().unwrap().abs() <= TRIM_REL * max {
            self.coeffs.pop();
        }
        self
    }

    /// Monic-free product `lead * prod (x - r)` over real roots.
    pub fn from_real_roots(lead: f64, roots: &[f64]) -> Result<Self> {
        let mut c = vec![lead];
        for &r in roots {
            let mut next = vec![0.0; c.len() + 1];
            for (i, &ci) in c.iter().enumerate() {
                next[i + 1] += ci;
                next[i] -= r * ci;
            }
            c = next;
        }
        RealPolynomial::new(c)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading(&self) -> f64 {
        *self.coeffs.last().unwrap()
    }

    /// Horner evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// Value and first derivative at `x`.
    pub fn eval_with_derivative(&self, x: f64) -> (f64, f64) {
        let mut p = 0.0;
        let mut dp = 0.0;
        for &c in self.coeffs.iter().rev() {
            dp = dp * x + p;
            p = p * x + c;
        }
        (p, dp)
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    fn eval_complex_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let zero = Complex64::new(0.0, 0.0);
        let mut p = zero;
        let mut dp = zero;
        for &c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    /// `sum_i |c_i| |x|^i`, the magnitude Horner's rounding error scales with.
    pub fn magnitude_at(&self, r: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * r + c.abs())
    }

    /// `max_i |c_i| |x|^i`.
    pub fn max_term_at(&self, r: f64) -> f64 {
        let mut pow = 1.0;
        let mut m = 0.0_f64;
        for &c in &self.coeffs {
            m = m.max(c.abs() * pow);
            pow *= r;
        }
        m
    }

    pub fn derivative(&self) -> RealPolynomial {
        if self.coeffs.len() == 1 {
            return RealPolynomial { coeffs: vec![0.0] };
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, &c)| c * i as f64)
            .collect();
        RealPolynomial { coeffs }
    }
}

/// All complex roots of `p`, with multiplicity.
///
/// Non-real roots are returned as exact conjugate pairs. The order is
/// deterministic: ascending real part, then ascending imaginary part.
pub fn all_roots(p: &RealPolynomial) -> Result<Vec<Complex64>> {
    let n = p.degree();
    if n == 0 {
        return Err(Error::InvalidArgument(
            "root finding needs a polynomial of degree >= 1".into(),
        ));
    }
    let c = p.coeffs();
    // Exact zero roots.
    let zeros = c.iter().take_while(|&&v| v == 0.0).count();
    let reduced = &c[zeros..];
    let mut roots = vec![Complex64::new(0.0, 0.0); zeros];
    let m = reduced.len() - 1;
    match m {
        0 => {}
        1 => roots.push(Complex64::new(-reduced[0] / reduced[1], 0.0)),
        2 => roots.extend(quadratic_roots(reduced[2], reduced[1], reduced[0])),
        _ => {
            let q = RealPolynomial {
                coeffs: reduced.to_vec(),
            };
            roots.extend(aberth(&q)?);
        }
    }
    let mut roots = enforce_conjugate_pairs(roots);
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));

    for z in &roots {
        let r = z.norm();
        if p.eval_complex(*z).norm() > 1e-10 * p.max_term_at(r).max(f64::MIN_POSITIVE) {
            return Err(Error::RootsNotConverged { poly: p.clone() });
        }
    }
    Ok(roots)
}

fn quadratic_roots(a: f64, b: f64, c: f64) -> [Complex64; 2] {
    let disc = b * b - 4.0 * a * c;
    if disc >= 0.0 {
        let s = disc.sqrt();
        let q = -0.5 * (b + b.signum() * s);
        if q == 0.0 {
            return [Complex64::new(0.0, 0.0); 2];
        }
        [Complex64::new(q / a, 0.0), Complex64::new(c / q, 0.0)]
    } else {
        let re = -b / (2.0 * a);
        let im = (-disc).sqrt() / (2.0 * a.abs());
        [Complex64::new(re, im), Complex64::new(re, -im)]
    }
}

/// Initial approximations on circles whose radii come from the upper convex
/// hull of `(i, log|c_i|)` (Newton polygon).
fn initial_guesses(p: &RealPolynomial) -> Vec<Complex64> {
    let c = p.coeffs();
    let n = p.degree();
    let pts: Vec<(usize, f64)> = c
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, v)| (i, v.abs().ln()))
        .collect();
    let mut hull: Vec<(usize, f64)> = Vec::new();
    for &pt in &pts {
        while hull.len() >= 2 {
            let (i1, y1) = hull[hull.len() - 2];
            let (i2, y2) = hull[hull.len() - 1];
            let cross = (i2 as f64 - i1 as f64) * (pt.1 - y1) - (y2 - y1) * (pt.0 as f64 - i1 as f64);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(pt);
    }
    let sigma = 0.7;
    let mut out = Vec::with_capacity(n);
    for w in hull.windows(2) {
        let (i, yi) = w[0];
        let (j, yj) = w[1];
        let k = j - i;
        let radius = ((yi - yj) / k as f64).exp();
        for l in 0..k {
            let angle = 2.0 * std::f64::consts::PI * (l as f64 / k as f64 + i as f64 / n as f64) + sigma;
            out.push(Complex64::from_polar(radius, angle));
        }
    }
    out
}

fn aberth(p: &RealPolynomial) -> Result<Vec<Complex64>> {
    let n = p.degree();
    let mut z = initial_guesses(p);
    debug_assert_eq!(z.len(), n);
    let mut done = vec![false; n];
    let eps = f64::EPSILON;
    for _ in 0..MAX_ABERTH_ITERS {
        let mut all_done = true;
        for k in 0..n {
            if done[k] {
                continue;
            }
            let (pv, dpv) = p.eval_complex_with_derivative(z[k]);
            let bound = 4.0 * (n as f64 + 1.0) * eps * p.magnitude_at(z[k].norm());
            if pv.norm() <= bound {
                done[k] = true;
                continue;
            }
            all_done = false;
            let ratio = if dpv.norm() == 0.0 {
                // Nudge off a critical point.
                Complex64::new(1e-3 * (1.0 + z[k].norm()), 0.0)
            } else {
                pv / dpv
            };
            let mut sum = Complex64::new(0.0, 0.0);
            for j in 0..n {
                if j != k {
                    let d = z[k] - z[j];
                    if d.norm() > 0.0 {
                        sum += d.inv();
                    }
                }
            }
            let denom = Complex64::new(1.0, 0.0) - ratio * sum;
            let step = if denom.norm() == 0.0 { ratio } else { ratio / denom };
            z[k] -= step;
        }
        if all_done {
            break;
        }
    }
    if z.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::RootsNotConverged { poly: p.clone() });
    }
    Ok(z)
}

/// Replaces approximately conjugate roots by exact conjugate pairs. A root
/// without a partner is put on the real axis when its imaginary part is
/// negligible and left alone otherwise.
fn enforce_conjugate_pairs(roots: Vec<Complex64>) -> Vec<Complex64> {
    let mut upper: Vec<Complex64> = Vec::new();
    let mut lower: Vec<Complex64> = Vec::new();
    let mut out: Vec<Complex64> = Vec::new();
    for z in roots {
        if z.im > 0.0 {
            upper.push(z);
        } else if z.im < 0.0 {
            lower.push(z.conj());
        } else {
            out.push(z);
        }
    }
    upper.sort_by(|a, b| b.im.total_cmp(&a.im));
    let mut used = vec![false; lower.len()];
    let unpaired = |z: Complex64| {
        if z.im.abs() <= 1e-6 * z.norm() {
            Complex64::new(z.re, 0.0)
        } else {
            z
        }
    };
    for u in upper {
        let best = lower
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .min_by(|(_, a), (_, b)| (u - **a).norm().total_cmp(&(u - **b).norm()));
        match best {
            Some((i, l)) if (u - *l).norm() <= 0.5 * u.im.min(l.im) => {
                used[i] = true;
                let avg = (u + *l) * 0.5;
                out.push(avg);
                out.push(avg.conj());
            }
            _ => out.push(unpaired(u)),
        }
    }
    for (l, used) in lower.into_iter().zip(used) {
        if !used {
            out.push(unpaired(l.conj()));
        }
    }
    out
}

/// Distinct real roots of `p`, ascending.
///
/// A computed root counts as real when `|im| <= imag_tol * |z|`. Survivors
/// are polished by Newton's method in real arithmetic and kept only if the
/// residual reaches `1e-13` of the Horner magnitude or `p` changes sign in a
/// `1e-8`-relative neighbourhood. Roots closer than `1e-8` relative are merged.
pub fn real_roots(p: &RealPolynomial, imag_tol: f64) -> Result<Vec<f64>> {
    if !(imag_tol > 0.0) {
        return Err(Error::InvalidArgument("imag_tol must be > 0".into()));
    }
    let roots = all_roots(p)?;
    let mut out: Vec<f64> = Vec::new();
    for z in roots {
        if z.im.abs() > imag_tol * z.norm() {
            continue;
        }
        if let Some(x) = polish_real(p, z.re) {
            out.push(x);
        }
    }
    out.sort_by(f64::total_cmp);
    let mut dedup: Vec<f64> = Vec::with_capacity(out.len());
    for x in out {
        match dedup.last() {
            Some(&prev) if (x - prev).abs() <= DEDUP_REL * x.abs().max(prev.abs()) => {}
            _ => dedup.push(x),
        }
    }
    Ok(dedup)
}

fn polish_real(p: &RealPolynomial, x0: f64) -> Option<f64> {
    let mut x = x0;
    let mut best = x0;
    let mut best_res = p.eval(x0).abs();
    for _ in 0..MAX_NEWTON_ITERS {
        let (v, dv) = p.eval_with_derivative(x);
        if v.abs() <= 1e-13 * p.magnitude_at(x.abs()) {
            return Some(x);
        }
        if dv == 0.0 || !dv.is_finite() {
            break;
        }
        let next = x - v / dv;
        if !next.is_finite() {
            break;
        }
        x = next;
        let r = p.eval(x).abs();
        if r < best_res {
            best_res = r;
            best = x;
        }
    }
    if best_res <= 1e-13 * p.magnitude_at(best.abs()) {
        return Some(best);
    }
    let h = DEDUP_REL * best.abs().max(f64::MIN_POSITIVE);
    let (lo, hi) = (p.eval(best - h), p.eval(best + h));
    if lo == 0.0 || hi == 0.0 || lo.signum() != hi.signum() {
        Some(best)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(c: &[f64]) -> RealPolynomial {
        RealPolynomial::new(c.to_vec()).unwrap()
    }

    #[test]
    fn factorable_quadratic() {
        let r = all_roots(&poly(&[-1.0, 0.0, 1.0])).unwrap();
        assert_eq!(r.len(), 2);
        assert!((r[0].re + 1.0).abs() < 1e-15 && r[0].im == 0.0);
        assert!((r[1].re - 1.0).abs() < 1e-15 && r[1].im == 0.0);
    }

    #[test]
    fn conjugate_pair() {
        let r = all_roots(&poly(&[1.0, 0.0, 1.0])).unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r[0], r[1].conj());
        assert!((r[0].im.abs() - 1.0).abs() < 1e-15);
        assert!(real_roots(&poly(&[1.0, 0.0, 1.0]), DEFAULT_IMAG_TOL).unwrap().is_empty());
    }

    #[test]
    fn cubic_real_roots() {
        let r = real_roots(&poly(&[0.0, -1.0, 0.0, 1.0]), DEFAULT_IMAG_TOL).unwrap();
        assert_eq!(r, vec![-1.0, 0.0, 1.0]);
    }

    #[test]
    fn degree_zero_and_non_finite_rejected() {
        assert!(all_roots(&poly(&[3.0])).is_err());
        assert!(RealPolynomial::new(vec![1.0, f64::NAN]).is_err());
        assert!(real_roots(&poly(&[1.0, 1.0]), 0.0).is_err());
    }

    #[test]
    fn trims_negligible_leading_terms() {
        let p = poly(&[1.0, 2.0, 1e-20]);
        assert_eq!(p.degree(), 2);
        assert_eq!(p.trim_negligible().degree(), 1);
        assert_eq!(poly(&[1.0, 2.0, 0.0]).degree(), 1);
    }

    #[test]
    fn quintic_with_complex_roots() {
        // (x^2 + 1)(x - 2)(x + 3)(x - 0.5)
        let mut c = RealPolynomial::from_real_roots(1.0, &[2.0, -3.0, 0.5]).unwrap().coeffs().to_vec();
        let mut full = vec![0.0; c.len() + 2];
        for (i, v) in c.drain(..).enumerate() {
            full[i] += v;
            full[i + 2] += v;
        }
        let p = poly(&full);
        let all = all_roots(&p).unwrap();
        assert_eq!(all.len(), 5);
        let reals = real_roots(&p, DEFAULT_IMAG_TOL).unwrap();
        assert_eq!(reals.len(), 3);
        for (got, want) in reals.iter().zip([-3.0, 0.5, 2.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn widely_spread_magnitudes() {
        let roots = [1e-9, 3e-7, 2e-3, 5.0, 4e4];
        let p = RealPolynomial::from_real_roots(2.5, &roots).unwrap();
        let got = real_roots(&p, DEFAULT_IMAG_TOL).unwrap();
        assert_eq!(got.len(), 5);
        for (g, w) in got.iter().zip(roots) {
            assert!(((g - w) / w).abs() < 1e-9, "{g} vs {w}");
        }
    }

    #[test]
    fn derivative_and_evaluation() {
        let p = poly(&[1.0, -3.0, 0.0, 2.0]);
        let (v, dv) = p.eval_with_derivative(1.5);
        assert_eq!(v, p.eval(1.5));
        assert_eq!(dv, p.derivative().eval(1.5));
    }
}
