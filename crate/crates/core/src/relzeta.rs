//! The relative zeta function S(s) of a delta perturbation in three
//! representations, its continuation through the functional equation, real
//! root finding and spectral classification of zeros and poles.
//!
//! Sign conventions: the free Green's function is negative near the diagonal,
//! so the spectral expansion enters with a minus sign,
//! S = 1/alpha - sum_j w_j [1/(lambda_j - s(1-s)) - Re 1/(lambda_j - t(1-t))],
//! which makes Im S >= 0 in the strip and lets S tend to -infinity at the
//! lowest pole from above, matching the orbit-sum form.

use std::f64::consts::PI;
use std::io::Read;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::eisenstein::{eisenstein_fourier, scattering_phi, EisensteinContext};
use crate::error::{Error, Result};
use crate::green::{diffractive_green_sum, t_point, Coupling};
use crate::halfplane::OrbitBall;
use crate::specfun::{psi_paper, psi_paper_deriv, POLE_EXCLUSION};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// One spectral parameter in the coordinates s = 1/2 + i rho and
/// lambda = s(1 - s) = 1/4 + rho^2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPoint {
    pub s: Complex64,
    pub rho: Complex64,
    pub lambda: Complex64,
}

impl SpectralPoint {
    pub fn from_s(s: Complex64) -> Self {
        Self { s, rho: (s - 0.5) * c(0.0, -1.0), lambda: s * (c(1.0, 0.0) - s) }
    }

    pub fn from_rho(rho: Complex64) -> Self {
        Self { s: c(0.5, 0.0) + Complex64::i() * rho, rho, lambda: rho * rho + 0.25 }
    }

    /// The root with Re s >= 1/2 (Im s >= 0 on the critical line).
    pub fn from_lambda(lambda: Complex64) -> Self {
        let mut rho = (lambda - 0.25).sqrt();
        if rho.im > 0.0 || (rho.im == 0.0 && rho.re < 0.0) {
            rho = -rho;
        }
        Self::from_s(c(0.5, 0.0) + Complex64::i() * rho)
    }
}

/// Eigenvalues lambda_j with weights |phi_j(z0)|^2.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    pub entries: Vec<(f64, f64)>,
    pub truncation_note: String,
}

impl SpectralData {
    pub fn new(mut entries: Vec<(f64, f64)>, note: impl Into<String>) -> Result<Self> {
        for &(l, w) in &entries {
            if !(l >= 0.0) || !l.is_finite() || !(w >= 0.0) || !w.is_finite() {
                return Err(Error::Parse(format!("invalid spectral entry ({l}, {w})")));
            }
        }
        entries.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self { entries, truncation_note: note.into() })
    }

    /// Reads `lambda,weight` CSV.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "lambda" || &headers[1] != "weight" {
            return Err(Error::Parse(format!("expected header lambda,weight, got {headers:?}")));
        }
        let mut entries = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let l: f64 = rec[0].parse().map_err(|e| Error::Parse(format!("lambda '{}': {e}", &rec[0])))?;
            let w: f64 = rec[1].parse().map_err(|e| Error::Parse(format!("weight '{}': {e}", &rec[1])))?;
            entries.push((l, w));
        }
        let n = entries.len();
        Self::new(entries, format!("{n} entries read from CSV; no tail correction"))
    }
}

#[derive(Debug, Clone)]
pub enum RelZetaRep<'a> {
    /// beta^-1 + m psi(s) + sum over the ball, valid for Re s > 1.
    OrbitSum { ball: &'a OrbitBall, coupling: Coupling },
    SpectralTruncated { data: SpectralData, coupling: Coupling, t: Complex64 },
    /// 1 + beta psi(w) on the sphere.
    Sphere { beta: f64 },
}

/// A value with an estimate of its truncation error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: Complex64,
    pub error: f64,
}

impl<'a> RelZetaRep<'a> {
    pub fn orbit_sum(ball: &'a OrbitBall, coupling: Coupling) -> Self {
        Self::OrbitSum { ball, coupling }
    }

    pub fn spectral(data: SpectralData, coupling: Coupling) -> Self {
        Self::SpectralTruncated { data, coupling, t: t_point() }
    }

    pub fn sphere(beta: f64) -> Self {
        Self::Sphere { beta }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::OrbitSum { .. } => "orbit-sum",
            Self::SpectralTruncated { .. } => "spectral-truncated",
            Self::Sphere { .. } => "sphere",
        }
    }

    pub fn eval(&self, s: Complex64) -> Result<Complex64> {
        Ok(self.eval_with_error(s)?.value)
    }

    pub fn eval_with_error(&self, s: Complex64) -> Result<Estimate> {
        match self {
            Self::OrbitSum { ball, coupling } => {
                if s.re <= 1.0 {
                    return Err(Error::ConvergenceDomain(s.re));
                }
                let j = diffractive_green_sum(ball, s)?;
                let m = ball.stabilizer_order as f64;
                let value = c(1.0 / coupling.beta, 0.0) + psi_paper(s)? * m + j.value;
                Ok(Estimate { value: real_on_axis(value, s), error: j.tail })
            }
            Self::SpectralTruncated { data, coupling, t } => {
                let lam = s * (c(1.0, 0.0) - s);
                let lam_t = *t * (c(1.0, 0.0) - *t);
                let mut sum = c(1.0 / coupling.alpha, 0.0);
                for &(lj, wj) in &data.entries {
                    let gap = c(lj, 0.0) - lam;
                    if gap.norm() < POLE_EXCLUSION {
                        return Err(Error::NearPole(format!("s = {s} hits lambda = {lj}")));
                    }
                    sum -= (gap.inv() - (c(lj, 0.0) - lam_t).inv().re) * wj;
                }
                Ok(Estimate { value: real_on_axis(sum, s), error: 0.0 })
            }
            Self::Sphere { beta } => {
                let p = psi_paper(s).map_err(near_pole)?;
                Ok(Estimate { value: c(1.0, 0.0) + p * *beta, error: 0.0 })
            }
        }
    }

    /// dS/ds.
    pub fn deriv(&self, s: Complex64) -> Result<Complex64> {
        match self {
            Self::OrbitSum { ball, .. } => {
                if s.re <= 1.0 {
                    return Err(Error::ConvergenceDomain(s.re));
                }
                let h = 1e-4_f64.min((s.re - 1.0) / 4.0);
                let j = |x: Complex64| diffractive_green_sum(ball, x).map(|g| g.value);
                let dj = (-j(s + 2.0 * h)? + j(s + h)? * 8.0 - j(s - h)? * 8.0 + j(s - 2.0 * h)?) / (12.0 * h);
                Ok(psi_paper_deriv(s)? * ball.stabilizer_order as f64 + dj)
            }
            Self::SpectralTruncated { data, .. } => {
                let lam = s * (c(1.0, 0.0) - s);
                let dlam = c(1.0, 0.0) - s * 2.0;
                let mut sum = c(0.0, 0.0);
                for &(lj, wj) in &data.entries {
                    let gap = c(lj, 0.0) - lam;
                    if gap.norm() < POLE_EXCLUSION {
                        return Err(Error::NearPole(format!("s = {s} hits lambda = {lj}")));
                    }
                    sum -= dlam * wj / (gap * gap);
                }
                Ok(sum)
            }
            Self::Sphere { beta } => Ok(psi_paper_deriv(s).map_err(near_pole)? * *beta),
        }
    }

    /// S(1 - s) from values at s with Re s > 1.
    ///
    /// For the orbit sum this uses S(1 - s) = S(s) - E(z0,s) E(z0,1-s)/(1 - 2s)
    /// with E(z0, 1-s) = E(z0, s)/phi(s); the other representations are
    /// evaluated at 1 - s directly.
    pub fn continue_fe(&self, s: Complex64, eis: &EisensteinContext) -> Result<Complex64> {
        match self {
            Self::OrbitSum { ball, .. } => {
                if s.re <= 1.0 {
                    return Err(Error::ConvergenceDomain(s.re));
                }
                let e = eisenstein_fourier(ball.base, s, eis)?;
                let phi = scattering_phi(s)?;
                if phi.norm() < 1e-10 {
                    return Err(Error::ScatteringPole(format!("{s}")));
                }
                Ok(self.eval(s)? - e * e / (phi * (c(1.0, 0.0) - s * 2.0)))
            }
            _ => self.eval(c(1.0, 0.0) - s),
        }
    }

    /// Inverse of [`Self::continue_fe`]: recovers S(s) from S(1 - s).
    pub fn fe_correction(&self, s: Complex64, eis: &EisensteinContext) -> Result<Complex64> {
        match self {
            Self::OrbitSum { ball, .. } => {
                let e = eisenstein_fourier(ball.base, s, eis)?;
                let phi = scattering_phi(s)?;
                Ok(e * e / (phi * (c(1.0, 0.0) - s * 2.0)))
            }
            _ => Ok(c(0.0, 0.0)),
        }
    }
}

fn near_pole(e: Error) -> Error {
    match e {
        Error::PoleAtNonpositiveInteger(s) => Error::NearPole(s),
        other => other,
    }
}

fn real_on_axis(v: Complex64, s: Complex64) -> Complex64 {
    if s.im == 0.0 {
        c(v.re, 0.0)
    } else {
        v
    }
}

/// The unique v > -1/2 with 1 + m beta psi(1/2 + v) = 0, or None when it is
/// not representable (too close to the pole at -1/2 or beyond f64 range).
pub fn vbeta_root(m: usize, beta: f64) -> Result<Option<f64>> {
    if beta == 0.0 {
        return Err(Error::ZeroCoupling);
    }
    let mb = m as f64 * beta;
    let f = |v: f64| -> Result<f64> { Ok(1.0 + mb * psi_paper(c(0.5 + v, 0.0))?.re) };
    let mut lo = -0.5 + 2.0 * POLE_EXCLUSION;
    let f_lo = f(lo)?;
    let mut hi = 1.0;
    let mut f_hi = f(hi)?;
    while f_hi.signum() == f_lo.signum() {
        hi *= 2.0;
        if !hi.is_finite() || hi > 1e300 {
            return Ok(None);
        }
        f_hi = f(hi)?;
    }
    // bisection in log scale while the bracket spans decades
    for _ in 0..2000 {
        let mid = if hi > 4.0 * (lo + 0.5).max(1.0) { ((lo + 0.5).max(1.0) * hi).sqrt() - 0.5 } else { 0.5 * (lo + hi) };
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(Some(mid));
        }
        if fm.signum() == f_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let v = if f(lo)?.abs() < f(hi)?.abs() { lo } else { hi };
    Ok(Some(v))
}

/// Pole locations of the representation inside (a, b), ascending, in the
/// variable used by [`find_real_zeros`].
pub fn real_poles(rep: &RelZetaRep, a: f64, b: f64) -> Vec<f64> {
    match rep {
        RelZetaRep::Sphere { .. } => {
            let hi = b.min(0.0).floor() as i64;
            let lo = a.ceil() as i64;
            (lo..=hi).map(|k| k as f64).filter(|&p| p > a && p < b).collect()
        }
        RelZetaRep::SpectralTruncated { data, .. } => {
            let mut p: Vec<f64> = data.entries.iter().map(|e| e.0).filter(|&l| l > a && l < b).collect();
            p.dedup();
            p
        }
        RelZetaRep::OrbitSum { .. } => Vec::new(),
    }
}

/// Real S on the search axis: w for the sphere, lambda = s(1-s) for spectral
/// data, real s > 1 for the orbit sum.
fn eval_axis(rep: &RelZetaRep, x: f64) -> Result<f64> {
    match rep {
        RelZetaRep::SpectralTruncated { .. } => Ok(rep.eval(SpectralPoint::from_lambda(c(x, 0.0)).s)?.re),
        _ => Ok(rep.eval(c(x, 0.0))?.re),
    }
}

/// Residual target for refined roots.
pub const ROOT_TOL: f64 = 1e-11;

/// All sign-change roots of the real restriction of S in (a, b), at most one
/// per gap between consecutive poles.
///
/// The axis is w for the sphere, the eigenvalue lambda for spectral data and
/// s for the orbit sum (which requires a > 1).
pub fn find_real_zeros(rep: &RelZetaRep, interval: (f64, f64)) -> Result<Vec<f64>> {
    let (a, b) = interval;
    if !(a < b) {
        return Err(Error::DomainError(format!("empty interval ({a}, {b})")));
    }
    let on_pole = |x: f64| match rep {
        RelZetaRep::Sphere { .. } => x <= 0.0 && (x - x.round()).abs() < POLE_EXCLUSION,
        RelZetaRep::SpectralTruncated { data, .. } => data.entries.iter().any(|e| (e.0 - x).abs() < POLE_EXCLUSION),
        RelZetaRep::OrbitSum { .. } => false,
    };
    for x in [a, b] {
        if on_pole(x) {
            return Err(Error::PoleOnBoundary(x));
        }
    }
    if let RelZetaRep::OrbitSum { .. } = rep {
        if a <= 1.0 {
            return Err(Error::ConvergenceDomain(a));
        }
        return orbit_zeros(rep, a, b);
    }
    let poles = real_poles(rep, a, b);
    let mut edges = vec![a];
    edges.extend(&poles);
    edges.push(b);
    let mut roots = Vec::new();
    for w in edges.windows(2) {
        let (mut lo, mut hi) = (w[0], w[1]);
        // step off interior poles so that the endpoint values carry the pole sign
        let off = |p: f64| 10.0 * POLE_EXCLUSION * p.abs().max(1.0);
        if lo != a {
            lo += off(lo);
        }
        if hi != b {
            hi -= off(hi);
        }
        if lo >= hi {
            continue;
        }
        if let Some(r) = refine_root(|x| eval_axis(rep, x), lo, hi)? {
            roots.push(r);
        }
    }
    Ok(roots)
}

fn orbit_zeros(rep: &RelZetaRep, a: f64, b: f64) -> Result<Vec<f64>> {
    let n = (((b - a) / 1e-3).ceil() as usize).clamp(2, 4000);
    let geometric = b / a > 100.0;
    let grid: Vec<f64> = (0..=n)
        .map(|i| {
            let u = i as f64 / n as f64;
            if geometric {
                a * (b / a).powf(u)
            } else {
                a + (b - a) * u
            }
        })
        .collect();
    let vals: Vec<f64> = grid.par_iter().map(|&x| eval_axis(rep, x)).collect::<Result<_>>()?;
    let mut roots = Vec::new();
    for i in 0..n {
        if vals[i] == 0.0 {
            roots.push(grid[i]);
        } else if vals[i].signum() != vals[i + 1].signum() && vals[i + 1] != 0.0 {
            if let Some(r) = refine_root(|x| eval_axis(rep, x), grid[i], grid[i + 1])? {
                roots.push(r);
            }
        }
    }
    if vals[n] == 0.0 {
        roots.push(grid[n]);
    }
    Ok(roots)
}

/// Bracketed root refinement by bisection with secant steps. Returns None if
/// the endpoint values do not change sign.
pub fn refine_root(f: impl Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64) -> Result<Option<f64>> {
    let mut f_lo = f(lo)?;
    let mut f_hi = f(hi)?;
    if f_lo == 0.0 {
        return Ok(Some(lo));
    }
    if f_hi == 0.0 {
        return Ok(Some(hi));
    }
    if f_lo.signum() == f_hi.signum() {
        return Ok(None);
    }
    let mut best = if f_lo.abs() < f_hi.abs() { (lo, f_lo) } else { (hi, f_hi) };
    for iter in 0..400 {
        let span_decades = hi > 0.0 && lo > 0.0 && hi / lo > 16.0;
        let mut x = if span_decades {
            (lo * hi).sqrt()
        } else if iter % 3 == 2 {
            0.5 * (lo + hi)
        } else {
            // secant step, clipped into the bracket
            let x = hi - f_hi * (hi - lo) / (f_hi - f_lo);
            x.clamp(lo + 0.01 * (hi - lo), hi - 0.01 * (hi - lo))
        };
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        if x <= lo || x >= hi {
            break;
        }
        let fx = f(x)?;
        if fx.abs() < best.1.abs() {
            best = (x, fx);
        }
        if fx == 0.0 || (fx.abs() <= ROOT_TOL && (hi - lo) <= 1e-9 * x.abs().max(1.0)) {
            return Ok(Some(x));
        }
        if fx.signum() == f_lo.signum() {
            lo = x;
            f_lo = fx;
        } else {
            hi = x;
            f_hi = fx;
        }
    }
    Ok(Some(best.0))
}

/// Lowest real zero s > 1 of the orbit-sum representation, bracketed by
/// geometric growth from just above s = 1.
pub fn lowest_orbit_root(rep: &RelZetaRep) -> Result<Option<f64>> {
    if !matches!(rep, RelZetaRep::OrbitSum { .. }) {
        return Err(Error::RepresentationUnavailable("lowest_orbit_root needs the orbit sum".into()));
    }
    let f = |x: f64| eval_axis(rep, x);
    let mut lo = 1.0 + 1e-6;
    let f_lo = f(lo)?;
    let mut step = 1e-3;
    let mut hi = lo + step;
    while f(hi)?.signum() == f_lo.signum() {
        lo = hi;
        step *= 2.0;
        hi = lo + step;
        if hi > 1e300 {
            return Ok(None);
        }
    }
    refine_root(f, lo, hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointClass {
    OldEigenvaluePole,
    NewEigenvalueZero,
    Resonance,
    Regular,
}

impl PointClass {
    pub fn label(&self) -> &'static str {
        match self {
            Self::OldEigenvaluePole => "old-eigenvalue-pole",
            Self::NewEigenvalueZero => "new-eigenvalue-zero",
            Self::Resonance => "resonance",
            Self::Regular => "regular",
        }
    }
}

/// Thresholds on |S| that mark a zero or a pole.
pub const ZERO_THRESHOLD: f64 = 1e-6;
pub const POLE_THRESHOLD: f64 = 1e6;

pub fn classify_point(rep: &RelZetaRep, s: Complex64) -> Result<PointClass> {
    if let RelZetaRep::OrbitSum { .. } = rep {
        if s.im != 0.0 || s.re <= 1.0 {
            return Err(Error::OutOfComputableRegion(format!("{s}")));
        }
    }
    let v = match rep.eval(s) {
        Ok(v) => v,
        Err(Error::NearPole(_)) => return Ok(PointClass::OldEigenvaluePole),
        Err(e) => return Err(e),
    };
    let n = v.norm();
    Ok(if n >= POLE_THRESHOLD {
        PointClass::OldEigenvaluePole
    } else if n <= ZERO_THRESHOLD {
        if s.re >= 0.5 {
            PointClass::NewEigenvalueZero
        } else {
            PointClass::Resonance
        }
    } else {
        PointClass::Regular
    })
}

/// Residue of the sphere representation at w = 0: lim w S(w) = -beta/(2 pi).
pub fn sphere_residue_at_zero(beta: f64) -> f64 {
    -beta / (2.0 * PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::digamma;

    fn synthetic() -> RelZetaRep<'static> {
        let data = SpectralData::new(vec![(0.0, 1.0), (2.0, 1.0), (5.0, 1.0)], "synthetic").unwrap();
        RelZetaRep::spectral(data, Coupling::beta_only(0.7).unwrap())
    }

    #[test]
    fn spectral_point_coordinates() {
        let p = SpectralPoint::from_s(c(0.8, 2.0));
        assert!((p.s - (c(0.5, 0.0) + Complex64::i() * p.rho)).norm() < 1e-15);
        assert!((p.lambda - (p.rho * p.rho + 0.25)).norm() < 1e-14);
        let q = SpectralPoint::from_lambda(c(-2.0, 0.0));
        assert!(q.s.re > 0.5 && (q.lambda - c(-2.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn sphere_pole_and_residue() {
        let rep = RelZetaRep::sphere(1.3);
        let w = c(1e-7, 0.0);
        let v = rep.eval(w).unwrap();
        assert!(v.norm() > 1e6);
        assert!(((v * w).re - sphere_residue_at_zero(1.3)).abs() < 1e-6);
        assert!(matches!(rep.eval(c(-1.0, 0.0)), Err(Error::NearPole(_))));
        let d = rep.deriv(c(2.2, 0.3)).unwrap();
        let h = 1e-5;
        let fd = (rep.eval(c(2.2 + h, 0.3)).unwrap() - rep.eval(c(2.2 - h, 0.3)).unwrap()) / (2.0 * h);
        assert!((d - fd).norm() < 1e-9);
    }

    #[test]
    fn sphere_root_bracket() {
        let rep = RelZetaRep::sphere(-2.0 * PI);
        let roots = find_real_zeros(&rep, (0.5, 6.0)).unwrap();
        assert_eq!(roots.len(), 1);
        assert!(roots[0] > 3.0 && roots[0] < 3.3);
        assert!((1.0 - digamma(c(roots[0], 0.0)).unwrap().re).abs() < 1e-10);
        assert!(rep.eval(c(roots[0], 0.0)).unwrap().norm() <= ROOT_TOL);
        assert_eq!(classify_point(&rep, c(roots[0], 0.0)).unwrap(), PointClass::NewEigenvalueZero);
        assert_eq!(classify_point(&rep, c(-1.0, 0.0)).unwrap(), PointClass::OldEigenvaluePole);
        assert_eq!(classify_point(&rep, c(1.7, 0.4)).unwrap(), PointClass::Regular);
    }

    #[test]
    fn synthetic_interlacing() {
        let rep = synthetic();
        let roots = find_real_zeros(&rep, (-10.0, 10.0)).unwrap();
        let in_gap = |lo: f64, hi: f64| roots.iter().filter(|&&r| r > lo && r < hi).count();
        assert_eq!(in_gap(0.0, 2.0), 1);
        assert_eq!(in_gap(2.0, 5.0), 1);
        for r in &roots {
            let s = SpectralPoint::from_lambda(c(*r, 0.0)).s;
            assert!(rep.eval(s).unwrap().norm() < 1e-9);
        }
        assert!(matches!(find_real_zeros(&rep, (2.0, 4.0)), Err(Error::PoleOnBoundary(_))));
    }

    #[test]
    fn synthetic_nonnegative_imaginary_part() {
        let rep = synthetic();
        for i in 0..10 {
            for j in 0..10 {
                let rho = c(0.05 + 0.7 * i as f64, -0.3 * j as f64);
                let s = c(0.5, 0.0) + Complex64::i() * rho;
                assert!(rep.eval(s).unwrap().im >= -1e-15);
            }
        }
    }

    #[test]
    fn vbeta_examples() {
        let v = vbeta_root(1, 1.0).unwrap().unwrap();
        assert!(v > -0.40 && v < -0.25);
        assert!((1.0 + psi_paper(c(0.5 + v, 0.0)).unwrap().re).abs() < 1e-11);
        let mut prev = f64::INFINITY;
        for beta in [1.0, 0.1, 0.01] {
            let v = vbeta_root(1, beta).unwrap().unwrap();
            assert!(v > -0.5 && 0.5 + v < prev);
            prev = 0.5 + v;
        }
        assert!(prev < 0.01);
        // beta < 0 pushes the root out like exp(2 pi / (m |beta|))
        assert!(vbeta_root(1, -0.01).unwrap().unwrap() > 1e270);
        assert!(vbeta_root(1, -0.001).unwrap().is_none());
        assert!(vbeta_root(2, -2.0).unwrap().unwrap() > 0.0);
        assert!(matches!(vbeta_root(1, 0.0), Err(Error::ZeroCoupling)));
    }
}
