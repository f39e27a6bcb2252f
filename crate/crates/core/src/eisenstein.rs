//! Eisenstein series of the modular surface, its scattering coefficient, the
//! perturbed series of a delta potential at z0 and extraction of the constant
//! term in the cusp.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::green::{automorphic_green, Coupling};
use crate::halfplane::{reduce_modular, HPoint, OrbitBall};
use crate::relzeta::RelZetaRep;
use crate::specfun::{bessel_k, gamma, riemann_zeta, POLE_EXCLUSION};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Lowest height of the reduced fundamental domain.
const MIN_REDUCED_HEIGHT: f64 = 0.866_025_403_784_438_6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EisensteinContext {
    /// Number of nonzero Fourier modes kept.
    pub nterms_fourier: usize,
    /// Radius of the (c, d) disc in the coset oracle.
    pub coset_cmax: usize,
}

impl Default for EisensteinContext {
    fn default() -> Self {
        Self::new(1e-12, 2000)
    }
}

impl EisensteinContext {
    /// Chooses the mode count so that exp(-2 pi N y) < tol on reduced points.
    pub fn new(tol: f64, coset_cmax: usize) -> Self {
        let n = (-(tol.min(0.1)).ln() / (2.0 * PI * MIN_REDUCED_HEIGHT)).ceil() as usize;
        // headroom for the polynomial growth of the divisor sums and Bessel prefactors
        Self { nterms_fourier: 2 * n + 8, coset_cmax }
    }
}

fn check_eisenstein_pole(s: Complex64) -> Result<()> {
    if (s - 1.0).norm() < POLE_EXCLUSION {
        return Err(Error::PoleOfEisenstein);
    }
    Ok(())
}

fn near(e: Error) -> Error {
    match e {
        Error::PoleAtNonpositiveInteger(m) => Error::NearPole(m),
        Error::PoleAtOne => Error::NearPole("zeta pole".into()),
        other => other,
    }
}

/// phi(s) = sqrt(pi) Gamma(s - 1/2) zeta(2s - 1) / (Gamma(s) zeta(2s)).
pub fn scattering_phi(s: Complex64) -> Result<Complex64> {
    let num = gamma(s - 0.5).map_err(near)? * riemann_zeta(s * 2.0 - 1.0).map_err(near)?;
    let den = gamma(s).map_err(near)? * riemann_zeta(s * 2.0).map_err(near)?;
    if den.norm() < 1e-300 {
        return Err(Error::NearPole(format!("zeta(2s) vanishes at s = {s}")));
    }
    let v = num / den * PI.sqrt();
    Ok(if s.im == 0.0 { c(v.re, 0.0) } else { v })
}

fn divisor_sigma(n: u64, e: Complex64) -> Complex64 {
    let mut sum = c(0.0, 0.0);
    let mut d = 1;
    while d * d <= n {
        if n.is_multiple_of(d) {
            sum += (e * (d as f64).ln()).exp();
            let q = n / d;
            if q != d {
                sum += (e * (q as f64).ln()).exp();
            }
        }
        d += 1;
    }
    sum
}

/// E(z, s) from its Fourier expansion at the cusp, after reduction of z.
pub fn eisenstein_fourier(z: HPoint, s: Complex64, ctx: &EisensteinContext) -> Result<Complex64> {
    check_eisenstein_pole(s)?;
    let (w, _) = reduce_modular(z);
    let y = w.y;
    let ln_y = y.ln();
    let mut value = (s * ln_y).exp() + scattering_phi(s)? * ((c(1.0, 0.0) - s) * ln_y).exp();
    // 2 / xi(2s) with xi(2s) = pi^-s Gamma(s) zeta(2s)
    let pref = (s * PI.ln()).exp() * 2.0 / (gamma(s).map_err(near)? * riemann_zeta(s * 2.0).map_err(near)?);
    let nu = s - 0.5;
    let mut modes = c(0.0, 0.0);
    for n in 1..=ctx.nterms_fourier as u64 {
        let nf = n as f64;
        let k = bessel_k(nu, 2.0 * PI * nf * y)?;
        let coeff = (nu * nf.ln()).exp() * divisor_sigma(n, c(1.0, 0.0) - s * 2.0);
        modes += coeff * k * (2.0 * (2.0 * PI * nf * w.x).cos());
    }
    value += pref * y.sqrt() * modes;
    Ok(if s.im == 0.0 { c(value.re, 0.0) } else { value })
}

/// E(z, s) by direct lattice summation,
/// E = (y^s / 2 zeta(2s)) sum_{(c, d) != 0} |cz + d|^{-2s},
/// over c^2 + d^2 <= cmax^2 plus the continuum tail outside the disc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosetSum {
    pub value: Complex64,
    /// Bound on the lattice-versus-continuum discrepancy of the tail.
    pub tail: f64,
    pub terms: usize,
}

pub fn eisenstein_coset_oracle(z: HPoint, s: Complex64, ctx: &EisensteinContext) -> Result<CosetSum> {
    if s.re <= 1.0 {
        return Err(Error::ConvergenceDomain(s.re));
    }
    let r = ctx.coset_cmax as i64;
    let r2 = r * r;
    let q = |c: f64, d: f64| {
        let re = c * z.x + d;
        let im = c * z.y;
        re * re + im * im
    };
    // half lattice c > 0 or (c = 0, d > 0); the other half mirrors it
    let rows: Vec<(Complex64, usize)> = (0..=r)
        .into_par_iter()
        .map(|cc| {
            let dmax = ((r2 - cc * cc) as f64).sqrt().floor() as i64;
            let dmin = if cc == 0 { 1 } else { -dmax };
            let mut acc = c(0.0, 0.0);
            for d in dmin..=dmax {
                acc += (-s * q(cc as f64, d as f64).ln()).exp();
            }
            (acc, (dmax - dmin + 1).max(0) as usize)
        })
        .collect();
    let lattice = rows.iter().map(|r| r.0).sum::<Complex64>() * 2.0;
    let terms = 2 * rows.iter().map(|r| r.1).sum::<usize>();
    // int_{rho > R} rho^{1-2s} d rho * int_0^{2 pi} Q(cos t, sin t)^{-s} dt; the angular integrand is analytic and periodic
    let n_ang = 1024;
    let ang: Complex64 = (0..n_ang)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / n_ang as f64;
            (-s * q(t.cos(), t.sin()).ln()).exp()
        })
        .sum::<Complex64>()
        * (2.0 * PI / n_ang as f64);
    let rf = r as f64;
    let continuum = ang * (-(s * 2.0 - 2.0) * rf.ln()).exp() / (s * 2.0 - 2.0);
    let pref = (s * z.y.ln()).exp() * 0.5 / riemann_zeta(s * 2.0)?;
    let value = pref * (lattice + continuum);
    // lattice count in the disc differs from its area by at most 2 pi sqrt 2 rho + 4,
    // and Q >= lam_min (c^2 + d^2)
    let (tr, det) = (z.x * z.x + z.y * z.y + 1.0, z.y * z.y);
    let lam_min = 0.5 * (tr - (tr * tr - 4.0 * det).sqrt());
    let sigma = s.re;
    let disc = (2.0 * PI * 2f64.sqrt() + 4.0) * (2.0 * sigma / (2.0 * sigma - 1.0)) * rf.powf(1.0 - 2.0 * sigma);
    let tail = pref.norm() * disc / lam_min.powf(sigma);
    Ok(CosetSum { value, tail, terms })
}

/// The perturbed series E(z,s) - E(z0,s)/S(s) G(z, z0) with S from the orbit sum.
///
/// The coefficient is E(z0,s)/S(s), without a (1 + e^{i phi}) factor; the
/// cusp constant term of the result then carries exactly the scattering
/// coefficient returned by [`perturbed_scattering`].
pub fn perturbed_eisenstein(
    z: HPoint,
    s: Complex64,
    coupling: &Coupling,
    ball: &OrbitBall,
    ctx: &EisensteinContext,
) -> Result<Complex64> {
    let coeff = perturbation_coefficient(s, coupling, ball, ctx)?;
    let g = automorphic_green(ball, s, z, ball.base)?;
    Ok(eisenstein_fourier(z, s, ctx)? - coeff * g.value)
}

/// E(z0, s) / S(s).
pub fn perturbation_coefficient(
    s: Complex64,
    coupling: &Coupling,
    ball: &OrbitBall,
    ctx: &EisensteinContext,
) -> Result<Complex64> {
    let rep = RelZetaRep::orbit_sum(ball, *coupling);
    let big_s = rep.eval(s)?;
    if big_s.norm() < 1e-12 {
        return Err(Error::ZeroOfRelativeZeta(format!("S({s}) = {big_s}")));
    }
    Ok(eisenstein_fourier(ball.base, s, ctx)? / big_s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbedScattering {
    pub phi: Complex64,
    pub phi_alpha: Complex64,
    /// S(1 - s) / S(s).
    pub theta: Complex64,
}

/// phi_alpha(s) = phi(s) S(1-s)/S(s) for Re s > 1.
pub fn perturbed_scattering(
    s: Complex64,
    coupling: &Coupling,
    ball: &OrbitBall,
    ctx: &EisensteinContext,
) -> Result<PerturbedScattering> {
    let rep = RelZetaRep::orbit_sum(ball, *coupling);
    let s_s = rep.eval(s)?;
    if s_s.norm() < 1e-12 {
        return Err(Error::ZeroOfRelativeZeta(format!("S({s}) = {s_s}")));
    }
    let s_1ms = rep.continue_fe(s, ctx)?;
    let phi = scattering_phi(s)?;
    let theta = s_1ms / s_s;
    Ok(PerturbedScattering { phi, phi_alpha: phi * theta, theta })
}

/// phi_alpha at 1 - s from values at s (Re s > 1): 1/phi_alpha(s).
pub fn perturbed_scattering_reflected(
    s: Complex64,
    coupling: &Coupling,
    ball: &OrbitBall,
    ctx: &EisensteinContext,
) -> Result<PerturbedScattering> {
    let p = perturbed_scattering(s, coupling, ball, ctx)?;
    if p.theta.norm() < 1e-300 {
        return Err(Error::ZeroOfRelativeZeta(format!("S(1 - s) vanishes at s = {s}")));
    }
    let phi = scattering_phi(c(1.0, 0.0) - s)?;
    let theta = p.theta.inv();
    Ok(PerturbedScattering { phi, phi_alpha: phi * theta, theta })
}

/// x-average of `field` on the horizontal line at height y.
pub fn x_average(field: &(dyn Fn(HPoint) -> Result<Complex64> + Sync), y: f64, nx: usize) -> Result<Complex64> {
    let vals: Vec<Complex64> = (0..nx)
        .into_par_iter()
        .map(|k| field(HPoint::new(-0.5 + (k as f64 + 0.5) / nx as f64, y)?))
        .collect::<Result<_>>()?;
    Ok(vals.iter().sum::<Complex64>() / nx as f64)
}

/// Coefficients (A, B) of A y^s + B y^{1-s} in the constant term of `field`,
/// from x-averages at heights y and 1.25 y.
pub fn cusp_zero_mode(
    field: &(dyn Fn(HPoint) -> Result<Complex64> + Sync),
    y: f64,
    s: Complex64,
    nx: usize,
) -> Result<(Complex64, Complex64)> {
    if (s - 0.5).norm() < 1e-3 {
        return Err(Error::IllConditionedFit((s - 0.5).norm()));
    }
    if !(y > 0.0) || nx == 0 {
        return Err(Error::DomainError(format!("cusp_zero_mode needs y > 0 and nx > 0, got y = {y}, nx = {nx}")));
    }
    let y2 = 1.25 * y;
    let m1 = x_average(field, y, nx)?;
    let m2 = x_average(field, y2, nx)?;
    let p = |y: f64, e: Complex64| (e * y.ln()).exp();
    let one_m = c(1.0, 0.0) - s;
    let (a11, a12, a21, a22) = (p(y, s), p(y, one_m), p(y2, s), p(y2, one_m));
    let det = a11 * a22 - a12 * a21;
    if det.norm() < 1e-14 * (a11 * a22).norm() {
        return Err(Error::IllConditionedFit(det.norm()));
    }
    Ok(((m1 * a22 - a12 * m2) / det, (a11 * m2 - a21 * m1) / det))
}
