//! Complex special functions and the free Green's function of the hyperbolic
//! Laplacian on the upper half-plane.
//!
//! All functions take principal logarithms and are real on the real axis
//! wherever the underlying function is. Arguments within [`POLE_EXCLUSION`]
//! of a pole raise an error instead of returning a huge value.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quad::{self, QuadratureSpec};

pub const POLE_EXCLUSION: f64 = 1e-8;
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const LN_PI: f64 = 1.144_729_885_849_400_2;

/// B_2, B_4, ..., B_24.
const BERNOULLI: [f64; 12] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
];

/// Modulus below which the asymptotic expansions are not used directly.
const ASYMPTOTIC_RADIUS: f64 = 15.0;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Errors if `s` lies within [`POLE_EXCLUSION`] of 0, -1, -2, ...
pub fn check_gamma_pole(s: Complex64) -> Result<()> {
    let n = s.re.round();
    if n <= 0.0 && (s - n).norm() < POLE_EXCLUSION {
        return Err(Error::PoleAtNonpositiveInteger(format!("{s}")));
    }
    Ok(())
}

/// Number of unit shifts needed before the asymptotic series is accurate.
fn shift_count(s: Complex64) -> usize {
    if s.norm() >= ASYMPTOTIC_RADIUS && s.re > 0.0 {
        0
    } else {
        (ASYMPTOTIC_RADIUS - s.re).max(0.0).ceil() as usize
    }
}

/// Principal-branch log Gamma, analytic off the nonpositive real axis.
pub fn log_gamma(s: Complex64) -> Result<Complex64> {
    check_gamma_pole(s)?;
    let n = shift_count(s);
    let mut shift = c(0.0, 0.0);
    for k in 0..n {
        shift += (s + k as f64).ln();
    }
    let z = s + n as f64;
    let inv = z.inv();
    let inv2 = inv * inv;
    let mut series = c(0.0, 0.0);
    let mut pow = inv;
    for (k, b) in BERNOULLI.iter().enumerate() {
        let m = 2.0 * (k as f64 + 1.0);
        series += pow * (b / (m * (m - 1.0)));
        pow *= inv2;
    }
    let mut out = (z - 0.5) * z.ln() - z + LN_SQRT_2PI + series - shift;
    if s.im == 0.0 && s.re > 0.0 {
        out.im = 0.0;
    }
    Ok(out)
}

pub fn gamma(s: Complex64) -> Result<Complex64> {
    Ok(log_gamma(s)?.exp())
}

/// Standard digamma Gamma'/Gamma.
pub fn digamma(s: Complex64) -> Result<Complex64> {
    check_gamma_pole(s)?;
    let n = shift_count(s);
    let mut shift = c(0.0, 0.0);
    for k in 0..n {
        shift += (s + k as f64).inv();
    }
    let z = s + n as f64;
    let inv = z.inv();
    let inv2 = inv * inv;
    let mut series = c(0.0, 0.0);
    let mut pow = inv2;
    for (k, b) in BERNOULLI.iter().enumerate() {
        series += pow * (b / (2.0 * (k as f64 + 1.0)));
        pow *= inv2;
    }
    let mut out = z.ln() - inv * 0.5 - series - shift;
    if s.im == 0.0 {
        out.im = 0.0;
    }
    Ok(out)
}

/// Trigamma, the derivative of [`digamma`].
pub fn trigamma(s: Complex64) -> Result<Complex64> {
    check_gamma_pole(s)?;
    let n = shift_count(s);
    let mut shift = c(0.0, 0.0);
    for k in 0..n {
        let t = (s + k as f64).inv();
        shift += t * t;
    }
    let z = s + n as f64;
    let inv = z.inv();
    let inv2 = inv * inv;
    let mut series = c(0.0, 0.0);
    let mut pow = inv2 * inv;
    for b in BERNOULLI.iter() {
        series += pow * *b;
        pow *= inv2;
    }
    let mut out = inv + inv2 * 0.5 + series + shift;
    if s.im == 0.0 {
        out.im = 0.0;
    }
    Ok(out)
}

/// Digamma scaled by 1/(2 pi).
pub fn psi_paper(s: Complex64) -> Result<Complex64> {
    Ok(digamma(s)? / (2.0 * PI))
}

/// Trigamma scaled by 1/(2 pi).
pub fn psi_paper_deriv(s: Complex64) -> Result<Complex64> {
    Ok(trigamma(s)? / (2.0 * PI))
}

/// Riemann zeta function. Euler-Maclaurin for Re s >= -1/2, reflection below.
pub fn riemann_zeta(s: Complex64) -> Result<Complex64> {
    if (s - 1.0).norm() < POLE_EXCLUSION {
        return Err(Error::PoleAtOne);
    }
    if s.re < -0.5 {
        let one_minus = c(1.0, 0.0) - s;
        let factor = (s * LN_2 + (s - 1.0) * LN_PI + log_gamma(one_minus)?).exp()
            * (s * (PI / 2.0)).sin();
        let mut out = factor * zeta_em(one_minus);
        if s.im == 0.0 {
            out.im = 0.0;
        }
        return Ok(out);
    }
    Ok(zeta_em(s))
}

fn zeta_em(s: Complex64) -> Complex64 {
    let n = 20 + s.im.abs().ceil() as usize + (s.re.abs() as usize);
    let nf = n as f64;
    let mut sum = c(0.0, 0.0);
    for k in 1..n {
        sum += (-s * (k as f64).ln()).exp();
    }
    let ln_n = nf.ln();
    let n_pow = (-s * ln_n).exp();
    sum += n_pow * nf / (s - 1.0) + n_pow * 0.5;
    // B_{2k}/(2k)! * s(s+1)...(s+2k-2) * N^{-s-2k+1}
    let mut poch = s;
    let mut npow = n_pow / nf;
    let mut fact = 2.0;
    for (k, b) in BERNOULLI.iter().enumerate() {
        let term = poch * npow * (b / fact);
        sum += term;
        if term.norm() < 1e-17 * sum.norm() {
            break;
        }
        let j = 2.0 * (k as f64 + 1.0);
        poch *= (s + (j - 1.0)) * (s + j);
        npow /= nf * nf;
        fact *= (j + 1.0) * (j + 2.0);
    }
    if s.im == 0.0 {
        sum.im = 0.0;
    }
    sum
}

/// Modified Bessel function of the second kind K_nu(x) for real x > 0.
///
/// Trapezoidal rule on the integral of exp(-x cosh t) cosh(nu t) over [0, inf),
/// which converges geometrically for this entire, rapidly decaying integrand.
/// Accuracy degrades when |Im nu| is large compared to x (cancellation).
pub fn bessel_k(nu: Complex64, x: f64) -> Result<Complex64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::DomainError(format!("bessel_k requires x > 0, got {x}")));
    }
    let a = nu.re.abs();
    let log_f = |t: f64| -x * t.cosh() + a * t;
    let t_peak = (a / x).asinh();
    let peak = log_f(t_peak);
    // integrand is below exp(-46) relative to its maximum beyond t_end
    let mut t_end = t_peak + 1.0;
    while log_f(t_end) - peak > -46.0 {
        t_end += 0.5;
    }
    // integrand is scaled by exp(-peak) to stay finite for large nu
    let f = |t: f64| {
        let e = (log_f(t) - peak).exp();
        let ch = ((nu * t).exp() + (-nu * t).exp()) * 0.5;
        ch * (-a * t).exp() * e
    };
    let mut h = t_end / 16.0;
    let mut sum = f(0.0) * 0.5;
    let mut k = 1;
    while (k as f64) * h <= t_end {
        sum += f(k as f64 * h);
        k += 1;
    }
    let mut value = sum * h;
    for _ in 0..14 {
        let mut mid = c(0.0, 0.0);
        let mut t = h * 0.5;
        while t <= t_end {
            mid += f(t);
            t += h;
        }
        sum += mid;
        h *= 0.5;
        let next = sum * h;
        let delta = (next - value).norm();
        value = next;
        if delta <= 1e-15 * value.norm().max(1e-300) || delta < 1e-17 {
            break;
        }
    }
    let mut out = value * peak.exp();
    if nu.im == 0.0 {
        out.im = 0.0;
    }
    Ok(out)
}

/// log sinh(a) for a > 0, finite for large a.
fn ln_sinh(a: f64) -> f64 {
    if a > 20.0 {
        a - LN_2 + (-(-2.0 * a).exp()).ln_1p()
    } else {
        a.sinh().ln()
    }
}

/// sinh(v)/v, accurate near v = 0.
fn sinhc(v: f64) -> f64 {
    if v.abs() < 1e-3 {
        let v2 = v * v;
        1.0 + v2 / 6.0 * (1.0 + v2 / 20.0)
    } else {
        v.sinh() / v
    }
}

/// Free Green's function evaluator for a fixed spectral parameter s.
///
/// G_s(d) = -(1/2pi) Q_{s-1}(cosh d), which is ~ (1/2pi) log d at d = 0
/// and decays like exp(-s d). Caches the s-dependent constants so that sums
/// over many lengths pay for the Gamma functions once.
#[derive(Debug, Clone, Copy)]
pub struct FreeGreen {
    s: Complex64,
    /// ln(sqrt(pi) Gamma(s) / Gamma(s + 1/2))
    ln_prefactor: Complex64,
    digamma_s: Complex64,
}

impl FreeGreen {
    pub fn new(s: Complex64) -> Result<Self> {
        check_gamma_pole(s)?;
        check_gamma_pole(s + 0.5)?;
        let ln_prefactor = 0.5 * LN_PI + log_gamma(s)? - log_gamma(s + 0.5)?;
        Ok(Self { s, ln_prefactor, digamma_s: digamma(s)? })
    }

    pub fn s(&self) -> Complex64 {
        self.s
    }

    /// Crossover distance between the log-type expansion at d = 0 and the
    /// hypergeometric series in exp(-2d).
    fn crossover(&self) -> f64 {
        (1.0 / (self.s.norm() + 1.0)).min(0.25)
    }

    pub fn eval(&self, d: f64) -> Result<Complex64> {
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::DomainError(format!("free Green's function needs d > 0, got {d}")));
        }
        let q = if d < self.crossover() { self.q_small(d) } else { self.q_large(d) };
        let mut g = -q / (2.0 * PI);
        if self.s.im == 0.0 {
            g.im = 0.0;
        }
        Ok(g)
    }

    /// Majorant A(r) with |G_s(l)| <= A(r) exp(-Re(s) l) for all l >= r > 0.
    pub fn envelope(&self, r: f64) -> f64 {
        let x = (-2.0 * r).exp();
        let s = self.s;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut n = 0.0;
        while term > 1e-17 * sum && n < 1e5 {
            term *= ((0.5 + n) * (s + n).norm() / ((s + 0.5 + n).norm() * (n + 1.0))) * x;
            sum += term;
            n += 1.0;
        }
        self.ln_prefactor.re.exp() * sum / (2.0 * PI)
    }

    fn q_large(&self, d: f64) -> Complex64 {
        let s = self.s;
        let x = (-2.0 * d).exp();
        let mut term = c(1.0, 0.0);
        let mut sum = c(1.0, 0.0);
        let mut n = 0.0;
        loop {
            term *= (s + n) * (0.5 + n) / ((s + 0.5 + n) * (n + 1.0)) * x;
            sum += term;
            n += 1.0;
            if term.norm() <= 1e-17 * sum.norm() || n > 200_000.0 {
                break;
            }
        }
        (self.ln_prefactor - s * d).exp() * sum
    }

    fn q_small(&self, d: f64) -> Complex64 {
        let s = self.s;
        let one_minus_x = -(-2.0 * d).exp_m1();
        let log_one_minus_x = one_minus_x.ln();
        let mut p = c(-EULER_GAMMA + 2.0 * LN_2, 0.0) - self.digamma_s;
        let mut cn = c(1.0, 0.0);
        let mut pw = 1.0;
        let mut sum = p - log_one_minus_x;
        let mut n = 0.0;
        loop {
            cn *= (s + n) * ((0.5 + n) / ((n + 1.0) * (n + 1.0)));
            p += 2.0 / (n + 1.0) - 1.0 / (0.5 + n) - (s + n).inv();
            pw *= one_minus_x;
            let term = cn * (p - log_one_minus_x) * pw;
            sum += term;
            n += 1.0;
            if (term.norm() <= 1e-17 * sum.norm() && n > 2.0) || n > 10_000.0 {
                break;
            }
        }
        (-s * d).exp() * sum
    }
}

/// Free Green's function G_s(d) as a function of geodesic distance d > 0.
pub fn free_green(s: Complex64, d: f64) -> Result<Complex64> {
    FreeGreen::new(s)?.eval(d)
}

/// Independent oracle for [`free_green`] from the integral representation
/// -(1/(2 pi sqrt 2)) int_d^inf exp(-i rho t) / sqrt(cosh t - cosh d) dt,
/// with s = 1/2 + i rho. Requires Im rho < -1/2.
pub fn free_green_oracle(rho: Complex64, d: f64, q: &QuadratureSpec) -> Result<Complex64> {
    if !(rho.im < -0.5) {
        return Err(Error::DomainViolation(rho.im));
    }
    if !(d > 0.0) {
        return Err(Error::DomainError(format!("oracle needs d > 0, got {d}")));
    }
    let s = c(0.5, 0.0) + Complex64::i() * rho;
    // t = d + u^2; the integrand in u is smooth and decays like exp(-Re s u^2)
    let t_end = q.truncation_point(d, -(rho.im + 0.5), 1.0);
    let u_end = (t_end - d).sqrt();
    let shift = -(s - 0.5) * d;
    let f = |u: f64| {
        let v = 0.5 * u * u;
        // u / sqrt(cosh(d+u^2) - cosh d) = 1 / sqrt(sinh(d+v) sinhc(v))
        let ln_den = 0.5 * (ln_sinh(d + v) + sinhc(v).ln());
        (shift - (s - 0.5) * (u * u) - ln_den).exp() * 2.0
    };
    let r = quad::integrate(q, f, 0.0, u_end)?;
    Ok(-r.value / (2.0 * PI * 2f64.sqrt()))
}
