//! Trace-formula machinery: Gaussian test functions, the transform g, the
//! identity term, the diffractive expansion of the geometric side (nodal and
//! time-domain forms), the direct log-derivative form, the scattering term,
//! the sphere trace formula and the perturbed-zeta product identity.
//!
//! Every contour integral is over a horizontal line rho = x - i c, x real,
//! truncated where the Gaussian factor falls below the tolerance.

use std::f64::consts::{PI, SQRT_2};
use std::sync::atomic::{AtomicU64, Ordering};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::green::{diffractive_green_sum, Coupling};
use crate::halfplane::OrbitBall;
use crate::quad::{integrate, integrate_many, nodes, QuadratureSpec};
use crate::relzeta::{find_real_zeros, vbeta_root, RelZetaRep};
use crate::specfun::{psi_paper, psi_paper_deriv, POLE_EXCLUSION};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Distance kept between the contour and the zero -i v_beta.
pub const NU_MARGIN: f64 = 0.1;
/// Candidate contour heights for the contraction search.
pub const SIGMA_TILDE_MAX: f64 = 50.0;
pub const DEFAULT_CONTRACTION_TARGET: f64 = 0.5;
/// Maximum number of k-tuples summed in the time-domain form.
pub const MAX_TUPLES: usize = 200_000;

/// Gaussian test function h(rho) = exp(-rho^2 / a^2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestFunction {
    pub a: f64,
}

impl TestFunction {
    pub fn gaussian(a: f64) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::DomainError(format!("test-function width must be positive, got {a}")));
        }
        Ok(Self { a })
    }

    pub fn h(&self, rho: Complex64) -> Complex64 {
        (-(rho * rho) / (self.a * self.a)).exp()
    }

    /// (h, h').
    pub fn eval(&self, rho: Complex64) -> (Complex64, Complex64) {
        let h = self.h(rho);
        (h, -rho * h * 2.0 / (self.a * self.a))
    }

    /// Half-width P such that scale * |h(x - i shift)| <= tol / 10 for |x| >= P.
    pub fn cutoff(&self, shift: f64, scale: f64, tol: f64) -> f64 {
        let l = (10.0 * scale / tol).ln().max(1.0);
        (shift * shift + self.a * self.a * l).sqrt()
    }
}

pub fn testfn_eval(h: &TestFunction, rho: Complex64) -> (Complex64, Complex64) {
    h.eval(rho)
}

fn cut(h: &TestFunction, shift: f64, scale: f64, q: &QuadratureSpec) -> f64 {
    let p = h.cutoff(shift, scale, q.abs_tol);
    q.truncation_bound.map_or(p, |b| p.min(b))
}

/// 1 + m beta psi(1/2 + i rho) and its rho-derivative.
fn local_factor(beta: f64, m: f64, rho: Complex64) -> Result<(Complex64, Complex64)> {
    let s = c(0.5, 0.0) + I * rho;
    Ok((c(1.0, 0.0) + psi_paper(s)? * (m * beta), I * psi_paper_deriv(s)? * (m * beta)))
}

/// Contour depth nu: v_beta + margin when the zero -i v_beta lies in (0, sigma), else 0.
pub fn contour_nu(beta: f64, m: usize, sigma: f64) -> Result<f64> {
    Ok(match vbeta_root(m, beta)? {
        Some(v) if v > 0.0 && v < sigma => v + NU_MARGIN,
        _ => 0.0,
    })
}

/// g_{beta,k}(t) with the contour depth fixed by [`contour_nu`] for the strip half-width `sigma`.
pub fn g_transform(
    h: &TestFunction,
    beta: f64,
    m: usize,
    k: usize,
    t: f64,
    sigma: f64,
    q: &QuadratureSpec,
) -> Result<Complex64> {
    let nu = contour_nu(beta, m, sigma)?;
    g_transform_on(h, beta, m, k, t, nu, q)
}

/// g_{beta,k}(t) on the explicit line Im rho = -nu.
pub fn g_transform_on(
    h: &TestFunction,
    beta: f64,
    m: usize,
    k: usize,
    t: f64,
    nu: f64,
    q: &QuadratureSpec,
) -> Result<Complex64> {
    check_g_args(beta, k, t)?;
    let pref = g_prefactor(k);
    let p = cut(h, nu, 1e3, q);
    let f = |x: f64| {
        let rho = c(x, -nu);
        let (_, hp) = h.eval(rho);
        match local_factor(beta, m as f64, rho) {
            Ok((u, _)) => hp * (-I * rho * t).exp() / u.powi(k as i32) * pref,
            Err(_) => c(f64::NAN, 0.0),
        }
    };
    Ok(integrate(q, f, -p, p)?.value)
}

fn check_g_args(beta: f64, k: usize, t: f64) -> Result<()> {
    if beta == 0.0 {
        return Err(Error::ZeroCoupling);
    }
    if k == 0 {
        return Err(Error::DomainError("k must be at least 1".into()));
    }
    if !(t > 0.0) {
        return Err(Error::DomainError(format!("g transform needs t > 0, got {t}")));
    }
    Ok(())
}

/// (-1)^k / (2 pi i k).
fn g_prefactor(k: usize) -> Complex64 {
    let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    c(sign, 0.0) / (I * (2.0 * PI * k as f64))
}

/// Identity term together with its integration-by-parts cross-check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityTerm {
    pub value: Complex64,
    pub error: f64,
    /// -(1/2 pi i) int h' log(1 + m beta psi).
    pub by_parts: Complex64,
    pub nu: f64,
}

/// (1/2pi) int h(rho) m beta psi'(1/2 + i rho) / (1 + m beta psi(1/2 + i rho)) d rho on Im rho = -nu.
pub fn identity_term(h: &TestFunction, beta: f64, m: usize, sigma: f64, q: &QuadratureSpec) -> Result<IdentityTerm> {
    if beta == 0.0 {
        return Err(Error::ZeroCoupling);
    }
    let nu = contour_nu(beta, m, sigma)?;
    identity_term_on(h, beta, m, nu, q)
}

pub fn identity_term_on(h: &TestFunction, beta: f64, m: usize, nu: f64, q: &QuadratureSpec) -> Result<IdentityTerm> {
    let mf = m as f64;
    // the branch of log u is continuous along the line once u is made positive at x = 0
    let sgn = local_factor(beta, mf, c(0.0, -nu))?.0.re.signum();
    let p = cut(h, nu, 1e3, q);
    let r = integrate_many(
        q,
        2,
        |x| {
            let rho = c(x, -nu);
            let (hv, hp) = h.eval(rho);
            let (u, du) = local_factor(beta, mf, rho)?;
            Ok(vec![hv * du / u / (2.0 * PI * I), -hp * (u * sgn).ln() / (2.0 * PI * I)])
        },
        -p,
        p,
    )?;
    Ok(IdentityTerm { value: r[0].value, error: r[0].error, by_parts: r[1].value, nu })
}

/// Contour height and the contraction ratio measured on it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaChoice {
    pub sigma_tilde: f64,
    pub q_hat: f64,
}

/// sup over t in [0, 40] of |beta J(1/2 + sigma + it)| / |1 + m beta psi(1/2 + sigma + it)|.
pub fn contraction_ratio(coupling: &Coupling, ball: &OrbitBall, sigma: f64) -> Result<f64> {
    if ball.is_empty() {
        return Ok(0.0);
    }
    let beta = coupling.beta;
    let m = ball.stabilizer_order as f64;
    let mut q: f64 = 0.0;
    for i in 0..=80 {
        let s = c(0.5 + sigma, 0.5 * i as f64);
        let j = diffractive_green_sum(ball, s)?.value;
        let u = c(1.0, 0.0) + psi_paper(s)? * (m * beta);
        q = q.max((j * beta).norm() / u.norm());
    }
    Ok(q)
}

pub fn choose_sigma_tilde(coupling: &Coupling, ball: &OrbitBall) -> Result<SigmaChoice> {
    choose_sigma_tilde_with(coupling, ball, DEFAULT_CONTRACTION_TARGET)
}

/// Smallest sigma in {1, 1.5, ..., 50} whose measured contraction ratio is at most `target`.
pub fn choose_sigma_tilde_with(coupling: &Coupling, ball: &OrbitBall, target: f64) -> Result<SigmaChoice> {
    let mut last = f64::INFINITY;
    let mut sigma = 1.0;
    while sigma <= SIGMA_TILDE_MAX {
        let q_hat = contraction_ratio(coupling, ball, sigma)?;
        if q_hat <= target {
            return Ok(SigmaChoice { sigma_tilde: sigma, q_hat });
        }
        last = q_hat;
        sigma += 0.5;
    }
    Err(Error::NoContraction { q_hat: last, sigma: SIGMA_TILDE_MAX })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceTerm {
    pub name: String,
    pub value: Complex64,
    pub error: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TraceParams {
    pub k_max: Option<usize>,
    pub radius: Option<f64>,
    pub contour_height: Option<f64>,
    pub nu: Option<f64>,
    pub q_hat: Option<f64>,
    pub cutoff: Option<f64>,
    pub j_max: Option<usize>,
    pub abs_tol: f64,
}

/// An independently computed value compared against the report total.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossCheck {
    pub name: String,
    pub value: Complex64,
    pub error: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceReport {
    pub terms: Vec<TraceTerm>,
    /// Sum of the term values, in order.
    pub total: Complex64,
    pub total_error: f64,
    /// Bound on the omitted terms of the expansion.
    pub tail_bound: f64,
    pub params: TraceParams,
    pub cross_check: Option<CrossCheck>,
    /// |identity term on the report contour - identity term on Im rho = -nu|.
    pub identity_shift_residual: Option<f64>,
}

impl TraceReport {
    pub fn new(terms: Vec<TraceTerm>, tail_bound: f64, params: TraceParams) -> Self {
        let total = terms.iter().map(|t| t.value).sum();
        let total_error = terms.iter().map(|t| t.error).sum();
        Self { terms, total, total_error, tail_bound, params, cross_check: None, identity_shift_residual: None }
    }

    pub fn with_cross_check(mut self, name: &str, value: Complex64, error: f64) -> Self {
        let residual = (self.total - value).norm();
        self.cross_check = Some(CrossCheck { name: name.into(), value, error, residual });
        self
    }

    /// Sum of all error estimates entering the cross-check comparison.
    pub fn combined_error(&self) -> f64 {
        self.total_error + self.tail_bound + self.cross_check.as_ref().map_or(0.0, |c| c.error)
    }
}

/// Everything integrated along Im rho = -sigma in one nodal pass.
#[derive(Debug, Clone)]
struct Nodal {
    identity: (Complex64, f64),
    direct: (Complex64, f64),
    terms: Vec<(Complex64, f64)>,
    /// max |beta J / u| over the quadrature nodes.
    q_nodes: f64,
    /// int |h'| dx along the line.
    hprime_l1: f64,
    cutoff: f64,
}

fn nodal(h: &TestFunction, coupling: &Coupling, ball: &OrbitBall, sigma: f64, k_max: usize, q: &QuadratureSpec) -> Result<Nodal> {
    let beta = coupling.beta;
    if beta == 0.0 {
        return Err(Error::ZeroCoupling);
    }
    let m = ball.stabilizer_order as f64;
    let sgn = local_factor(beta, m, c(0.0, -sigma))?.0.re.signum();
    let p = cut(h, sigma, 1e3, q);
    let q_bits = AtomicU64::new(0);
    let dim = 3 + k_max;
    let r = integrate_many(
        q,
        dim,
        |x| {
            let rho = c(x, -sigma);
            let s = c(0.5, 0.0) + I * rho;
            let (hv, hp) = h.eval(rho);
            let (u, du) = local_factor(beta, m, rho)?;
            let j = diffractive_green_sum(ball, s)?.value;
            let ratio = j * beta / u;
            q_bits.fetch_max(ratio.norm().to_bits(), Ordering::Relaxed);
            let mut out = Vec::with_capacity(dim);
            out.push(hv * du / u / (2.0 * PI * I));
            out.push(-hp * ((u * sgn).ln() + (c(1.0, 0.0) + ratio).ln()) / (2.0 * PI * I));
            let mut pow = c(1.0, 0.0);
            for k in 1..=k_max {
                pow *= -ratio;
                out.push(hp * pow / (2.0 * PI * I * k as f64));
            }
            out.push(c(hp.norm(), 0.0));
            Ok(out)
        },
        -p,
        p,
    )?;
    let q_nodes = f64::from_bits(q_bits.load(Ordering::Relaxed));
    Ok(Nodal {
        identity: (r[0].value, r[0].error),
        direct: (r[1].value, r[1].error),
        terms: r[2..2 + k_max].iter().map(|t| (t.value, t.error)).collect(),
        q_nodes,
        hprime_l1: r[dim - 1].value.re,
        cutoff: p,
    })
}

/// Identity term plus the diffractive terms k = 1..k_max in nodal form,
/// cross-checked against the direct log form on the same contour.
pub fn geometric_side_series(
    h: &TestFunction,
    coupling: &Coupling,
    ball: &OrbitBall,
    k_max: usize,
    q: &QuadratureSpec,
) -> Result<TraceReport> {
    let choice = choose_sigma_tilde(coupling, ball)?;
    geometric_side_series_at(h, coupling, ball, k_max, choice, q)
}

pub fn geometric_side_series_at(
    h: &TestFunction,
    coupling: &Coupling,
    ball: &OrbitBall,
    k_max: usize,
    choice: SigmaChoice,
    q: &QuadratureSpec,
) -> Result<TraceReport> {
    let sigma = choice.sigma_tilde;
    let n = nodal(h, coupling, ball, sigma, k_max, q)?;
    let qq = choice.q_hat.max(n.q_nodes);
    if qq >= 1.0 {
        return Err(Error::NoContraction { q_hat: qq, sigma });
    }
    let id = identity_term(h, coupling.beta, ball.stabilizer_order, sigma, q)?;
    let mut terms = vec![TraceTerm { name: "identity".into(), value: id.value, error: id.error }];
    for (k, (v, e)) in n.terms.iter().enumerate() {
        terms.push(TraceTerm { name: format!("diffractive_k{}", k + 1), value: *v, error: *e });
    }
    let kp = (k_max + 1) as f64;
    let tail = n.hprime_l1 / (2.0 * PI) * qq.powf(kp) / (kp * (1.0 - qq));
    let params = TraceParams {
        k_max: Some(k_max),
        radius: Some(ball.radius),
        contour_height: Some(sigma),
        nu: Some(id.nu),
        q_hat: Some(qq),
        cutoff: Some(n.cutoff),
        j_max: None,
        abs_tol: q.abs_tol,
    };
    let mut report = TraceReport::new(terms, tail, params).with_cross_check("direct", n.direct.0, n.direct.1);
    report.identity_shift_residual = Some((n.identity.0 - id.value).norm());
    Ok(report)
}

/// -(1/2 pi i) int h'(rho) log(beta S(1/2 + i rho)) d rho on Im rho = -sigma.
pub fn geometric_side_direct(
    h: &TestFunction,
    coupling: &Coupling,
    ball: &OrbitBall,
    sigma: f64,
    q: &QuadratureSpec,
) -> Result<(Complex64, f64)> {
    let n = nodal(h, coupling, ball, sigma, 0, q)?;
    if n.q_nodes >= 1.0 {
        return Err(Error::NoContraction { q_hat: n.q_nodes, sigma });
    }
    Ok(n.direct)
}

/// k-th diffractive term ((-beta)^k / k)(1/2 pi i) int h' J^k / u^k on Im rho = -sigma.
pub fn nodal_diffractive_term(
    h: &TestFunction,
    coupling: &Coupling,
    ball: &OrbitBall,
    k: usize,
    sigma: f64,
    q: &QuadratureSpec,
) -> Result<(Complex64, f64)> {
    if k == 0 {
        return Err(Error::DomainError("k must be at least 1".into()));
    }
    let n = nodal(h, coupling, ball, sigma, k, q)?;
    Ok(n.terms[k - 1])
}

/// g_{beta,k} tabulated as a node sum, so that each evaluation costs one
/// exponential per node.
struct GTable {
    pts: Vec<(Complex64, Complex64)>,
}

impl GTable {
    fn eval(&self, t: f64) -> Complex64 {
        self.pts.iter().map(|&(rho, w)| w * (-I * rho * t).exp()).sum()
    }

    fn build(h: &TestFunction, beta: f64, m: usize, k: usize, nu: f64, q: &QuadratureSpec) -> Result<Self> {
        let pref = g_prefactor(k);
        let p = cut(h, nu, 1e3, q);
        let probes = [0.0, 1.0, 3.0, 6.0, 10.0];
        let mut prev: Option<Vec<Complex64>> = None;
        for level in 0..=q.max_levels {
            let pts: Vec<(Complex64, Complex64)> = nodes(q.rule, -p, p, level)
                .par_iter()
                .map(|&(x, w)| {
                    let rho = c(x, -nu);
                    let (_, hp) = h.eval(rho);
                    let (u, _) = local_factor(beta, m as f64, rho)?;
                    Ok((rho, hp / u.powi(k as i32) * pref * w))
                })
                .collect::<Result<_>>()?;
            let table = GTable { pts };
            let vals: Vec<Complex64> = probes.iter().map(|&t| table.eval(t)).collect();
            if let Some(pv) = &prev {
                let diff = vals.iter().zip(pv).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
                if diff <= 0.01 * q.abs_tol {
                    return Ok(table);
                }
            }
            prev = Some(vals);
        }
        Err(Error::QuadratureFailure("g table did not converge".into()))
    }

    /// Smallest T with |g(t)| below `thresh` for all sampled t >= T.
    fn support(&self, thresh: f64) -> f64 {
        let mut last = 0.0;
        for i in 0..=640 {
            let t = 0.125 * i as f64;
            if self.eval(t).norm() > thresh {
                last = t;
            }
        }
        last + 0.5
    }
}

/// Barycentric Chebyshev interpolant of g on [0, T], refined until it
/// reproduces the node sum at interleaved points to `tol`.
struct ChebG {
    t_max: f64,
    xs: Vec<f64>,
    vals: Vec<Complex64>,
}

impl ChebG {
    fn build(table: &GTable, t_max: f64, tol: f64) -> Result<Self> {
        let mut n = 32;
        while n <= 4096 {
            let xs: Vec<f64> = (0..=n).map(|j| 0.5 * t_max * (1.0 - (PI * j as f64 / n as f64).cos())).collect();
            let vals: Vec<Complex64> = xs.par_iter().map(|&t| table.eval(t)).collect();
            let cheb = ChebG { t_max, xs, vals };
            let worst = (0..n)
                .into_par_iter()
                .map(|j| {
                    let t = 0.5 * t_max * (1.0 - (PI * (j as f64 + 0.5) / n as f64).cos());
                    (cheb.eval(t) - table.eval(t)).norm()
                })
                .reduce(|| 0.0, f64::max);
            if worst <= tol {
                return Ok(cheb);
            }
            n *= 2;
        }
        Err(Error::QuadratureFailure("Chebyshev interpolant of g did not converge".into()))
    }

    fn eval(&self, t: f64) -> Complex64 {
        if t >= self.t_max {
            return c(0.0, 0.0);
        }
        let n = self.xs.len() - 1;
        let mut num = c(0.0, 0.0);
        let mut den = 0.0;
        for (j, (&x, &v)) in self.xs.iter().zip(&self.vals).enumerate() {
            let d = t - x;
            if d == 0.0 {
                return v;
            }
            let mut w = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == n {
                w *= 0.5;
            }
            num += v * (w / d);
            den += w / d;
        }
        num / den
    }
}

fn sinhc(v: f64) -> f64 {
    if v.abs() < 1e-4 {
        1.0 + v * v / 6.0
    } else {
        v.sinh() / v
    }
}

/// 2 / sqrt(sinh(l + u^2/2) sinhc(u^2/2)): the kernel 1/sqrt(cosh t - cosh l)
/// after t = l + u^2.
fn kernel(l: f64, u: f64) -> f64 {
    let v = u * u;
    2.0 / ((l + 0.5 * v).sinh() * sinhc(0.5 * v)).sqrt()
}

/// Literal time-domain k-th diffractive term,
/// beta^k (-1/(2 pi sqrt 2))^k sum_{tuples} int g_{beta,k}(t_1 + ... + t_k) prod dt_n / sqrt(cosh t_n - cosh l_n).
pub fn diffractive_term_timedomain(
    h: &TestFunction,
    coupling: &Coupling,
    ball: &OrbitBall,
    k: usize,
    q: &QuadratureSpec,
) -> Result<(Complex64, f64)> {
    if !(1..=2).contains(&k) {
        return Err(Error::DomainError(format!("time-domain form supports k = 1, 2; got {k}")));
    }
    let beta = coupling.beta;
    if beta == 0.0 {
        return Err(Error::ZeroCoupling);
    }
    let m = ball.stabilizer_order;
    let nu = contour_nu(beta, m, SIGMA_TILDE_MAX)?;
    let table = GTable::build(h, beta, m, k, nu, q)?;
    let t_max = table.support(1e-3 * q.abs_tol);
    let table = ChebG::build(&table, t_max, 1e-3 * q.abs_tol)?;
    let lens: Vec<f64> = ball.lengths().into_iter().filter(|&l| l < t_max).collect();
    let tuples = lens.len().checked_pow(k as u32).unwrap_or(usize::MAX);
    if tuples > MAX_TUPLES {
        return Err(Error::TupleExplosion(tuples));
    }
    let pref = (c(-beta / (2.0 * PI * SQRT_2), 0.0)).powi(k as i32);
    let inner = QuadratureSpec { abs_tol: 0.1 * q.abs_tol, ..*q };
    let (sum, err) = if k == 1 {
        let parts: Vec<(Complex64, f64)> = lens
            .par_iter()
            .map(|&l| {
                let r = integrate(&inner, |u| table.eval(l + u * u) * kernel(l, u), 0.0, (t_max - l).sqrt())?;
                Ok((r.value, r.error))
            })
            .collect::<Result<_>>()?;
        parts.iter().fold((c(0.0, 0.0), 0.0), |a, b| (a.0 + b.0, a.1 + b.1))
    } else {
        let pairs: Vec<(usize, usize)> = (0..lens.len()).flat_map(|i| (i..lens.len()).map(move |j| (i, j))).collect();
        let parts: Vec<(Complex64, f64)> = pairs
            .par_iter()
            .filter(|&&(i, j)| lens[i] + lens[j] < t_max)
            .map(|&(i, j)| {
                let (l1, l2) = (lens[i], lens[j]);
                let mult = if i == j { 1.0 } else { 2.0 };
                let outer_max = (t_max - l1 - l2).sqrt();
                let r = integrate(
                    &inner,
                    |u1| {
                        let rest = (t_max - l1 - l2 - u1 * u1).max(0.0).sqrt();
                        let t1 = l1 + u1 * u1;
                        match integrate(&inner, |u2| table.eval(t1 + l2 + u2 * u2) * kernel(l2, u2), 0.0, rest) {
                            Ok(r) => r.value * kernel(l1, u1),
                            Err(_) => c(f64::NAN, 0.0),
                        }
                    },
                    0.0,
                    outer_max,
                )?;
                Ok((r.value * mult, r.error * mult))
            })
            .collect::<Result<_>>()?;
        parts.iter().fold((c(0.0, 0.0), 0.0), |a, b| (a.0 + b.0, a.1 + b.1))
    };
    Ok((sum * pref, err * pref.norm()))
}

/// Spectral side of the sphere trace formula with its truncation data.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereSpectral {
    pub value: f64,
    /// Bound on the omitted j > J terms.
    pub tail: f64,
    /// Perturbed parameters omega_j^alpha, j = 0..=J (None when beyond f64 range).
    pub omegas: Vec<Option<f64>>,
}

/// sum_{j=0}^{J} [h(omega_j^alpha) - h(omega_j)] with omega_j = -(j + 1/2).
pub fn sphere_spectral_side(h: &TestFunction, beta: f64, j_max: usize) -> Result<SphereSpectral> {
    if beta == 0.0 {
        return Err(Error::ZeroCoupling);
    }
    let rep = RelZetaRep::sphere(beta);
    let mut omegas = Vec::with_capacity(j_max + 1);
    // the zero in (0, inf) is v_beta + 1/2 with m = 1
    omegas.push(vbeta_root(1, beta)?);
    if j_max > 0 {
        let lo = -(j_max as f64) + 10.0 * POLE_EXCLUSION * j_max as f64;
        let hi = -10.0 * POLE_EXCLUSION;
        let zeros = find_real_zeros(&rep, (lo, hi))?;
        for j in 1..=j_max {
            let (a, b) = (-(j as f64), -(j as f64) + 1.0);
            match zeros.iter().find(|&&w| w > a && w < b) {
                Some(&w) => omegas.push(Some(w - 0.5)),
                None => return Err(Error::RootMissed(a, b)),
            }
        }
    }
    let hr = |w: f64| h.h(c(w, 0.0)).re;
    let mut value = 0.0;
    for (j, om) in omegas.iter().enumerate() {
        value += om.map_or(0.0, hr) - hr(-(j as f64 + 0.5));
    }
    // both omega_j and omega_j^alpha lie beyond j - 1/2 in absolute value for j >= 1
    let x0 = j_max as f64 + 0.5;
    let r = (-(2.0 * x0 + 1.0) / (h.a * h.a)).exp();
    let tail = 2.0 * (-(x0 * x0) / (h.a * h.a)).exp() / (1.0 - r).max(1e-300);
    Ok(SphereSpectral { value, tail, omegas })
}

/// (1/2 pi i) int_{Im omega = -delta} h(omega) d/d omega log[f(1/2 + omega) f(1/2 - omega)] d omega
/// with f = 1 + beta psi. Returns the complex value; its imaginary part is a
/// residue of the quadrature.
pub fn sphere_contour_side(h: &TestFunction, beta: f64, delta: f64, q: &QuadratureSpec) -> Result<(Complex64, f64)> {
    if beta == 0.0 {
        return Err(Error::ZeroCoupling);
    }
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::DomainError(format!("contour offset must lie in (0, 1/2), got {delta}")));
    }
    let p = cut(h, delta, 1e3 / delta, q);
    let ld = |w: Complex64| -> Result<Complex64> {
        let f = c(1.0, 0.0) + psi_paper(w)? * beta;
        Ok(psi_paper_deriv(w)? * beta / f)
    };
    let r = integrate(
        q,
        |x| {
            let om = c(x, -delta);
            let half = c(0.5, 0.0);
            match (ld(half + om), ld(half - om)) {
                (Ok(a), Ok(b)) => h.h(om) * (a - b) / (2.0 * PI * I),
                _ => c(f64::NAN, 0.0),
            }
        },
        -p,
        p,
    )?;
    Ok((r.value, r.error))
}

/// Scattering term -(1/4 pi i) int h'(rho) log[S(1/2 - i rho)/S(1/2 + i rho)] d rho
/// for S supplied on the critical line, with S(1/2 - i rho) = conj S(1/2 + i rho).
///
/// The log ratio equals i Phi with Phi the continuous phase of conj(S)/S,
/// unwrapped along a fine grid; constant offsets drop out since h' integrates to zero.
pub fn scattering_term(
    h: &TestFunction,
    s_line: &(dyn Fn(f64) -> Result<Complex64> + Sync),
    q: &QuadratureSpec,
) -> Result<(f64, f64)> {
    let p = cut(h, 0.0, 10.0, q);
    let n = 8000;
    let step = 2.0 * p / n as f64;
    let phase = |x: f64| -> Result<Option<f64>> {
        match s_line(x) {
            Ok(v) if v.norm() > 0.0 => Ok(Some(-2.0 * v.arg())),
            Ok(_) | Err(Error::NearPole(_)) => Ok(None),
            Err(e) => Err(e),
        }
    };
    let raw: Vec<Option<f64>> = (0..=n).into_par_iter().map(|i| phase(-p + step * i as f64)).collect::<Result<_>>()?;
    let mut grid = Vec::with_capacity(n + 1);
    let mut prev: Option<f64> = None;
    for r in &raw {
        let v = match (r, prev) {
            (Some(v), Some(pv)) => unwrap_near(*v, pv),
            (Some(v), None) => *v,
            (None, Some(pv)) => pv,
            (None, None) => 0.0,
        };
        grid.push(v);
        prev = Some(v);
    }
    let reference = grid[n / 2];
    let spread = grid.iter().map(|g| (g - reference).abs()).fold(0.0, f64::max);
    if spread == 0.0 {
        return Ok((0.0, 0.0));
    }
    let r = integrate(
        q,
        |x| {
            let i = (((x + p) / step).round() as usize).min(n);
            let near = grid[i];
            let phi = match phase(x) {
                Ok(Some(v)) => unwrap_near(v, near),
                _ => near,
            };
            c(-h.eval(c(x, 0.0)).1.re * (phi - reference) / (4.0 * PI), 0.0)
        },
        -p,
        p,
    )?;
    Ok((r.value.re, r.error))
}

/// The representative of v modulo 2 pi closest to `near`.
fn unwrap_near(v: f64, near: f64) -> f64 {
    v + 2.0 * PI * ((near - v) / (2.0 * PI)).round()
}

pub fn scattering_term_rep(h: &TestFunction, rep: &RelZetaRep, q: &QuadratureSpec) -> Result<(f64, f64)> {
    if let RelZetaRep::OrbitSum { .. } = rep {
        return Err(Error::RepresentationUnavailable("the orbit sum does not converge on the critical line".into()));
    }
    scattering_term(h, &|x| rep.eval(c(0.5, x)), q)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZetaIdentity {
    pub residual: f64,
    /// Mercator remainder bound |x|^{K+1} / ((K+1)(1 - |x|)).
    pub envelope: f64,
    /// x = beta J(s) / (1 + m beta psi(s)).
    pub ratio: Complex64,
    pub k_max: usize,
    /// Floating-point floor of the residual, 4 eps (1 + |log u| + |log(u + beta J)|).
    pub rounding: f64,
}

impl ZetaIdentity {
    pub fn within_envelope(&self) -> bool {
        self.residual <= self.envelope + self.rounding
    }
}

/// Residual of log(beta S) = log(1 + m beta psi) + sum_{k<=K} (-1)^{k+1} x^k / k at real s.
pub fn zeta_relative_identity_check(s: f64, coupling: &Coupling, ball: &OrbitBall, k_max: usize) -> Result<ZetaIdentity> {
    let beta = coupling.beta;
    if beta == 0.0 {
        return Err(Error::ZeroCoupling);
    }
    let sc = c(s, 0.0);
    let m = ball.stabilizer_order as f64;
    let u = c(1.0, 0.0) + psi_paper(sc)? * (m * beta);
    let j = if ball.is_empty() { c(0.0, 0.0) } else { diffractive_green_sum(ball, sc)?.value };
    let x = j * beta / u;
    let ax = x.norm();
    if ax >= 1.0 {
        return Err(Error::NoContraction { q_hat: ax, sigma: s - 0.5 });
    }
    let (l1, l0) = ((u + j * beta).ln(), u.ln());
    let lhs = l1 - l0;
    let mut series = c(0.0, 0.0);
    let mut pow = c(1.0, 0.0);
    for k in 1..=k_max {
        pow *= x;
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        series += pow * (sign / k as f64);
    }
    let kp = (k_max + 1) as f64;
    Ok(ZetaIdentity {
        residual: (lhs - series).norm(),
        envelope: ax.powf(kp) / (kp * (1.0 - ax)),
        ratio: x,
        k_max,
        rounding: 4.0 * f64::EPSILON * (1.0 + l0.norm() + l1.norm()),
    })
}
