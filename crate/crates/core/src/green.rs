//! Automorphic Green's function sums over an orbit ball, the regularization
//! constants at the point t with t(1 - t) = i, and the coupling dictionary
//! linking alpha, beta and the extension angle phi.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::halfplane::{hyp_distance, HPoint, OrbitBall};
use crate::specfun::{psi_paper, FreeGreen};

/// Inflation applied to fitted tail envelopes.
const TAIL_SAFETY: f64 = 2.0;
/// Point pairs closer than this are rejected.
pub const SINGULAR_PAIR_TOL: f64 = 1e-8;
const PAR_MIN: usize = 4096;

/// A truncated sum together with an estimate of the omitted tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenSum {
    pub value: Complex64,
    pub tail: f64,
}

fn check_domain(s: Complex64) -> Result<()> {
    if s.re <= 1.0 {
        return Err(Error::ConvergenceDomain(s.re));
    }
    Ok(())
}

/// Constant kappa with N(l) <= kappa (cosh l - 1) for l >= radius, where N
/// counts group elements moving the base point by at most l.
///
/// Fitted on the outer half of the ball; when too few lengths are available
/// a packing bound from the shortest displacement is used instead.
pub fn orbit_count_constant(ball: &OrbitBall) -> f64 {
    let m = ball.stabilizer_order as f64;
    let r = ball.radius;
    // orbit points are separated by at least `sep`, so balls of radius sep/2 are disjoint
    let sep = ball.elements.first().map_or(r, |e| e.1).max(1e-3);
    let packing = m * ((r + sep / 2.0).cosh() - 1.0) / ((r.cosh() - 1.0) * ((sep / 2.0).cosh() - 1.0));
    let outer: Vec<f64> = ball.lengths().into_iter().filter(|&l| l >= r / 2.0).collect();
    if outer.len() < 20 {
        return packing;
    }
    let first = ball.elements.len() - outer.len();
    let mut kappa: f64 = 0.0;
    for (i, l) in outer.iter().enumerate() {
        let n = ball.stabilizer_order + first + i + 1;
        kappa = kappa.max(n as f64 / (l.cosh() - 1.0));
    }
    kappa.min(packing)
}

/// Tail of sum_{l > r} |G_s(l)| with counting function kappa (cosh(l + shift) - 1).
fn tail_bound(green: &FreeGreen, kappa: f64, r: f64, shift: f64) -> f64 {
    let sigma = green.s().re;
    let amp = green.envelope(r.max(1e-3));
    let body = 0.5 * (((1.0 - sigma) * r).exp() / (sigma - 1.0) - (-(1.0 + sigma) * r).exp() / (sigma + 1.0));
    TAIL_SAFETY * kappa * shift.exp() * amp * body.max(0.0)
}

/// Sum of G_s(l_gamma) over the diffractive elements of the ball.
pub fn diffractive_green_sum(ball: &OrbitBall, s: Complex64) -> Result<GreenSum> {
    check_domain(s)?;
    let green = FreeGreen::new(s)?;
    let value = sum_lengths(&green, &ball.elements, |e| e.1)?;
    let tail = tail_bound(&green, orbit_count_constant(ball), ball.radius, 0.0);
    Ok(GreenSum { value, tail })
}

fn sum_lengths<T: Sync>(green: &FreeGreen, items: &[T], len: impl Fn(&T) -> f64 + Sync) -> Result<Complex64> {
    let eval = |e: &T| green.eval(len(e));
    if items.len() >= PAR_MIN {
        items.par_iter().map(eval).try_reduce(|| Complex64::new(0.0, 0.0), |a, b| Ok(a + b))
    } else {
        items.iter().map(eval).sum()
    }
}

/// Method-of-images sum of G_s(z, gamma w) over the ball, which must be
/// centred at `w`. Every image in the ball is summed, so the image set does
/// not depend on z and the sum is smooth in z; omitted images lie beyond
/// R - d(z, w) from z.
pub fn automorphic_green(ball: &OrbitBall, s: Complex64, z: HPoint, w: HPoint) -> Result<GreenSum> {
    check_domain(s)?;
    if hyp_distance(w, ball.base) > 1e-12 {
        return Err(Error::DomainError(format!("ball is centred at {}, not at {w}", ball.base)));
    }
    let green = FreeGreen::new(s)?;
    let shift = hyp_distance(z, w);
    let r_eff = ball.radius - shift;
    if r_eff <= 0.0 {
        return Err(Error::InsufficientRadius { radius: ball.radius, tail: f64::INFINITY, tol: 0.0 });
    }
    let images: Vec<f64> = ball
        .stabilizer
        .iter()
        .chain(ball.elements.iter().map(|e| &e.0))
        .map(|g| hyp_distance(z, g.apply(w)))
        .collect();
    if let Some(&d) = images.iter().find(|&&d| d < SINGULAR_PAIR_TOL) {
        return Err(Error::SingularPair(d));
    }
    let value = sum_lengths(&green, &images, |d| *d)?;
    let tail = tail_bound(&green, orbit_count_constant(ball), r_eff, shift);
    Ok(GreenSum { value, tail })
}

/// The root of t(1 - t) = i with Re t > 1/2.
pub fn t_point() -> Complex64 {
    (Complex64::new(1.0, 0.0) + Complex64::new(1.0, -4.0).sqrt()) * 0.5
}

/// Regularized diagonal m psi(s) + sum_{gamma} G_s(l_gamma).
pub fn regularized_diagonal(ball: &OrbitBall, s: Complex64) -> Result<GreenSum> {
    let j = diffractive_green_sum(ball, s)?;
    Ok(GreenSum { value: psi_paper(s)? * ball.stabilizer_order as f64 + j.value, tail: j.tail })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegConstants {
    pub t: Complex64,
    pub c_of_t: f64,
    /// Imaginary part a of A(t, conj t) = i a.
    pub a_t_tbar: f64,
    /// Real part of the assembled A(t, conj t); zero up to rounding.
    pub a_real_residue: f64,
    pub tail: f64,
    pub stabilizer_order: usize,
}

/// c(t) and A(t, conj t) for the ball. With `tol` set, a tail estimate above
/// it raises [`Error::InsufficientRadius`].
pub fn regularization_constants(ball: &OrbitBall, tol: Option<f64>) -> Result<RegConstants> {
    let t = t_point();
    let x_t = regularized_diagonal(ball, t)?;
    let x_tbar = regularized_diagonal(ball, t.conj())?;
    if let Some(tol) = tol {
        if x_t.tail > tol {
            return Err(Error::InsufficientRadius { radius: ball.radius, tail: x_t.tail, tol });
        }
    }
    let a = (x_t.value - x_tbar.value) * 0.5;
    if a.re.abs() > 1e-9 {
        return Err(Error::NonImaginaryA(a.re));
    }
    Ok(RegConstants {
        t,
        c_of_t: x_t.value.re,
        a_t_tbar: a.im,
        a_real_residue: a.re,
        tail: x_t.tail,
        stabilizer_order: ball.stabilizer_order,
    })
}

/// The three coupling parametrizations and the constants linking them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    pub alpha: f64,
    pub beta: f64,
    pub phi: f64,
    pub c_of_t: f64,
    pub a_t_tbar: f64,
}

impl Coupling {
    pub fn from_alpha(alpha: f64, k: &RegConstants) -> Result<Self> {
        if alpha == 0.0 || !alpha.is_finite() {
            return Err(Error::ZeroCoupling);
        }
        let den = 1.0 - alpha * k.c_of_t;
        if den.abs() < 1e-12 {
            return Err(Error::SingularReparametrization(den));
        }
        Ok(Self { alpha, beta: alpha / den, phi: phi_from_alpha(alpha, k.a_t_tbar), c_of_t: k.c_of_t, a_t_tbar: k.a_t_tbar })
    }

    pub fn from_beta(beta: f64, k: &RegConstants) -> Result<Self> {
        if beta == 0.0 || !beta.is_finite() {
            return Err(Error::ZeroCoupling);
        }
        let den = 1.0 + beta * k.c_of_t;
        if den.abs() < 1e-12 {
            return Err(Error::SingularReparametrization(den));
        }
        let alpha = beta / den;
        Ok(Self { alpha, beta, phi: phi_from_alpha(alpha, k.a_t_tbar), c_of_t: k.c_of_t, a_t_tbar: k.a_t_tbar })
    }

    /// A coupling fixed by beta alone, for representations that never use alpha.
    pub fn beta_only(beta: f64) -> Result<Self> {
        if beta == 0.0 || !beta.is_finite() {
            return Err(Error::ZeroCoupling);
        }
        Ok(Self { alpha: beta, beta, phi: 0.0, c_of_t: 0.0, a_t_tbar: 0.0 })
    }

    /// |cot(phi/2) - 2 alpha a| relative to its size.
    pub fn ext_residual(&self) -> f64 {
        let lhs = 1.0 / (self.phi / 2.0).tan();
        let rhs = 2.0 * self.alpha * self.a_t_tbar;
        (lhs - rhs).abs() / rhs.abs().max(1.0)
    }
}

/// phi in (-pi, pi) with cot(phi/2) = -2 i alpha A = 2 alpha a.
fn phi_from_alpha(alpha: f64, a: f64) -> f64 {
    let cot = 2.0 * alpha * a;
    if cot == 0.0 {
        PI
    } else {
        2.0 * (1.0 / cot).atan()
    }
}

pub fn coupling_from_alpha(alpha: f64, ball: &OrbitBall) -> Result<Coupling> {
    Coupling::from_alpha(alpha, &regularization_constants(ball, None)?)
}
