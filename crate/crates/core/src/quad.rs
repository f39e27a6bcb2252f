//! One-dimensional quadrature on finite intervals.
//!
//! Two rules are provided: double-exponential (tanh-sinh) and composite
//! Gauss-Legendre. Both refine by halving the step (or doubling the panel
//! count) and report the difference between the last two refinements as the
//! error estimate. Semi-infinite and infinite ranges are truncated by the
//! caller using [`QuadratureSpec::truncation_point`].

use std::sync::OnceLock;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Node count above which integrand evaluations are spread over the thread pool.
const PARALLEL_THRESHOLD: usize = 192;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    TanhSinh,
    GaussLegendreComposite,
}

/// Quadrature configuration shared by every integral in the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub rule: Rule,
    pub abs_tol: f64,
    /// Maximum number of refinement levels (tanh-sinh) or panel doublings.
    pub max_levels: usize,
    /// Optional hard cap on the truncation point of semi-infinite ranges.
    pub truncation_bound: Option<f64>,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rule: Rule::GaussLegendreComposite,
            abs_tol: 1e-10,
            max_levels: 12,
            truncation_bound: None,
        }
    }
}

impl QuadratureSpec {
    pub fn new(rule: Rule, abs_tol: f64) -> Result<Self> {
        if !(abs_tol > 0.0) || !abs_tol.is_finite() {
            return Err(Error::DomainError(format!("abs_tol must be positive, got {abs_tol}")));
        }
        Ok(Self { rule, abs_tol, ..Self::default() })
    }

    pub fn tanh_sinh(abs_tol: f64) -> Self {
        Self { rule: Rule::TanhSinh, abs_tol, ..Self::default() }
    }

    pub fn gauss_legendre(abs_tol: f64) -> Self {
        Self { rule: Rule::GaussLegendreComposite, abs_tol, ..Self::default() }
    }

    pub fn with_tol(self, abs_tol: f64) -> Self {
        Self { abs_tol, ..self }
    }

    /// Smallest `T >= start` such that `scale * exp(-rate * (T - start))` is below
    /// `abs_tol / 10`. Used to cut semi-infinite ranges with exponential decay.
    pub fn truncation_point(&self, start: f64, rate: f64, scale: f64) -> f64 {
        let target = self.abs_tol / 10.0;
        let mut t = start;
        if rate > 0.0 && scale > target {
            t = start + (scale / target).ln() / rate;
        }
        match self.truncation_bound {
            Some(cap) => t.min(cap.max(start)),
            None => t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: Complex64,
    pub error: f64,
    pub evaluations: usize,
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

fn gl16() -> &'static (Vec<f64>, Vec<f64>) {
    static NODES: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    NODES.get_or_init(|| gauss_legendre(16))
}

/// Nodes and weights of `rule` on `[a, b]` at refinement `level`.
pub fn nodes(rule: Rule, a: f64, b: f64, level: usize) -> Vec<(f64, f64)> {
    match rule {
        Rule::TanhSinh => tanh_sinh_nodes(a, b, level),
        Rule::GaussLegendreComposite => gl_nodes(a, b, 4usize << level),
    }
}

fn gl_nodes(a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
    let (x, w) = gl16();
    let width = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * x.len());
    for p in 0..panels {
        let lo = a + p as f64 * width;
        let mid = lo + 0.5 * width;
        for (xi, wi) in x.iter().zip(w) {
            out.push((mid + 0.5 * width * xi, 0.5 * width * wi));
        }
    }
    out
}

fn tanh_sinh_nodes(a: f64, b: f64, level: usize) -> Vec<(f64, f64)> {
    let half_pi = std::f64::consts::FRAC_PI_2;
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let h = 0.5f64.powi(level as i32);
    let mut out = Vec::new();
    let mut k: i64 = 0;
    loop {
        let t = k as f64 * h;
        let u = half_pi * t.sinh();
        let ch = u.cosh();
        let w = half * h * half_pi * t.cosh() / (ch * ch);
        // distance of the node from the nearest endpoint, computed without cancellation
        let gap = half / (u.exp() * ch);
        if w < 1e-300 || gap < 1e-300 {
            break;
        }
        if k == 0 {
            out.push((mid, w));
        } else {
            // nodes that round onto an endpoint are dropped
            let (hi, lo) = (b - gap, a + gap);
            if hi != b {
                out.push((hi, w));
            }
            if lo != a {
                out.push((lo, w));
            }
            if hi == b && lo == a {
                break;
            }
        }
        k += 1;
    }
    out
}

fn apply<F>(f: &F, pts: &[(f64, f64)]) -> Complex64
where
    F: Fn(f64) -> Complex64 + Sync,
{
    if pts.len() >= PARALLEL_THRESHOLD {
        pts.par_iter().map(|&(x, w)| f(x) * w).sum()
    } else {
        pts.iter().map(|&(x, w)| f(x) * w).sum()
    }
}

/// Integrates `f` over `[a, b]` until two successive refinements agree to `spec.abs_tol`.
pub fn integrate<F>(spec: &QuadratureSpec, f: F, a: f64, b: f64) -> Result<QuadResult>
where
    F: Fn(f64) -> Complex64 + Sync,
{
    if a == b {
        return Ok(QuadResult { value: Complex64::new(0.0, 0.0), error: 0.0, evaluations: 0 });
    }
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::QuadratureFailure("infinite limits must be truncated first".into()));
    }
    let first = match spec.rule {
        Rule::TanhSinh => 3,
        Rule::GaussLegendreComposite => 0,
    };
    let mut evals = 0;
    let mut prev: Option<Complex64> = None;
    let mut last_err = f64::INFINITY;
    for level in first..=first + spec.max_levels {
        let pts = nodes(spec.rule, a, b, level);
        evals += pts.len();
        let value = apply(&f, &pts);
        if !value.re.is_finite() || !value.im.is_finite() {
            return Err(Error::QuadratureFailure(format!("non-finite value at level {level}")));
        }
        if let Some(p) = prev {
            last_err = (value - p).norm();
            if last_err <= spec.abs_tol {
                return Ok(QuadResult { value, error: last_err, evaluations: evals });
            }
        }
        prev = Some(value);
    }
    Err(Error::QuadratureFailure(format!(
        "no convergence after {} levels on [{a}, {b}] (last difference {last_err:e})",
        spec.max_levels
    )))
}

/// Real-valued convenience wrapper around [`integrate`].
pub fn integrate_real<F>(spec: &QuadratureSpec, f: F, a: f64, b: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64 + Sync,
{
    let r = integrate(spec, |x| Complex64::new(f(x), 0.0), a, b)?;
    Ok((r.value.re, r.error))
}

/// Integrates a vector-valued `f` of fixed dimension, refining until every
/// component has converged. Each node is evaluated once per level, which is
/// what makes shared expensive factors (such as orbit sums) affordable.
pub fn integrate_many<F>(spec: &QuadratureSpec, dim: usize, f: F, a: f64, b: f64) -> Result<Vec<QuadResult>>
where
    F: Fn(f64) -> Result<Vec<Complex64>> + Sync,
{
    let zero = Complex64::new(0.0, 0.0);
    if a == b {
        return Ok(vec![QuadResult { value: zero, error: 0.0, evaluations: 0 }; dim]);
    }
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::QuadratureFailure("infinite limits must be truncated first".into()));
    }
    let first = match spec.rule {
        Rule::TanhSinh => 3,
        Rule::GaussLegendreComposite => 0,
    };
    let mut evals = 0;
    let mut prev: Option<Vec<Complex64>> = None;
    let mut last_err = f64::INFINITY;
    for level in first..=first + spec.max_levels {
        let pts = nodes(spec.rule, a, b, level);
        evals += pts.len();
        let rows: Vec<Vec<Complex64>> = pts
            .par_iter()
            .map(|&(x, w)| f(x).map(|v| v.into_iter().map(|c| c * w).collect()))
            .collect::<Result<_>>()?;
        let mut value = vec![zero; dim];
        for r in &rows {
            if r.len() != dim {
                return Err(Error::QuadratureFailure(format!("integrand returned {} components, expected {dim}", r.len())));
            }
            for (v, c) in value.iter_mut().zip(r) {
                *v += c;
            }
        }
        if value.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::QuadratureFailure(format!("non-finite value at level {level}")));
        }
        if let Some(p) = &prev {
            let errs: Vec<f64> = value.iter().zip(p).map(|(v, p)| (v - p).norm()).collect();
            last_err = errs.iter().cloned().fold(0.0, f64::max);
            if last_err <= spec.abs_tol {
                return Ok(value
                    .into_iter()
                    .zip(errs)
                    .map(|(value, error)| QuadResult { value, error, evaluations: evals })
                    .collect());
            }
        }
        prev = Some(value);
    }
    Err(Error::QuadratureFailure(format!(
        "no convergence after {} levels on [{a}, {b}] (last difference {last_err:e})",
        spec.max_levels
    )))
}
