use std::f64::consts::PI;

use hyperdelta::green::Coupling;
use hyperdelta::halfplane::*;
use hyperdelta::quad::QuadratureSpec;
use hyperdelta::relzeta::{RelZetaRep, SpectralData};
use hyperdelta::traceform::*;
use hyperdelta::{Complex64, Error};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn ball(r: f64) -> OrbitBall {
    enumerate_orbit_ball(&FuchsianGroup::modular(), HPoint::new(0.3, 1.3).unwrap(), r).unwrap()
}

#[test]
fn gaussian_is_even_and_decays() {
    let h = TestFunction::gaussian(1.5).unwrap();
    for rho in [c(0.7, 0.0), c(2.0, -0.3), c(-1.1, 0.4)] {
        assert!((h.h(rho) - h.h(-rho)).norm() < 1e-15);
    }
    let x = h.cutoff(0.0, 1.0, 1e-12);
    assert!(h.h(c(x, 0.0)).norm() < 1e-12);
}

#[test]
fn contour_nu_policy() {
    // v_beta in (0, sigma) forces the contour below the zero
    let v = hyperdelta::relzeta::vbeta_root(1, -2.0).unwrap().unwrap();
    assert!(v > 5.0);
    assert_eq!(contour_nu(-2.0, 1, 5.0).unwrap(), 0.0);
    assert!((contour_nu(-2.0, 1, 30.0).unwrap() - (v + 0.1)).abs() < 1e-12);
    assert_eq!(contour_nu(0.3, 1, 5.0).unwrap(), 0.0);
}

#[test]
fn identity_term_is_contour_independent() {
    let h = TestFunction::gaussian(2.0).unwrap();
    let q = QuadratureSpec::gauss_legendre(1e-11);
    let a = identity_term_on(&h, 0.4, 1, 0.0, &q).unwrap();
    let b = identity_term_on(&h, 0.4, 1, 0.3, &q).unwrap();
    assert!((a.value - b.value).norm() < 1e-9);
}

#[test]
fn series_converges_to_direct_as_k_grows() {
    let b = ball(6.0);
    let cpl = Coupling::beta_only(0.3).unwrap();
    let h = TestFunction::gaussian(2.0).unwrap();
    let q = QuadratureSpec::gauss_legendre(1e-10);
    let mut last = f64::INFINITY;
    for k in [1, 3, 6] {
        let r = geometric_side_series(&h, &cpl, &b, k, &q).unwrap();
        let res = r.cross_check.as_ref().unwrap().residual;
        assert!(res <= r.combined_error() + 1e-12, "k = {k}");
        assert!(res <= last * 1.01 + 1e-14);
        last = res;
    }
}

#[test]
fn timedomain_rejects_large_k() {
    let b = ball(2.0);
    let cpl = Coupling::beta_only(0.3).unwrap();
    let h = TestFunction::gaussian(2.0).unwrap();
    let q = QuadratureSpec::gauss_legendre(1e-8);
    assert!(matches!(diffractive_term_timedomain(&h, &cpl, &b, 3, &q), Err(Error::DomainError(_))));
}

#[test]
fn sphere_spectral_side_truncation() {
    let h = TestFunction::gaussian(2.0).unwrap();
    let a = sphere_spectral_side(&h, 0.6 * PI, 20).unwrap();
    let b = sphere_spectral_side(&h, 0.6 * PI, 60).unwrap();
    assert!((a.value - b.value).abs() <= a.tail);
    assert_eq!(b.omegas.len(), 61);
    assert!(matches!(sphere_spectral_side(&h, 0.0, 5), Err(Error::ZeroCoupling)));
}

#[test]
fn sphere_contour_offset_is_validated() {
    let h = TestFunction::gaussian(2.0).unwrap();
    let q = QuadratureSpec::gauss_legendre(1e-8);
    assert!(sphere_contour_side(&h, 1.0, 0.6, &q).is_err());
}

#[test]
fn scattering_term_of_spectral_data_is_finite_and_orbit_sum_is_refused() {
    let h = TestFunction::gaussian(2.0).unwrap();
    let q = QuadratureSpec::gauss_legendre(1e-8);
    let d = SpectralData::new(vec![(0.0, 1.0), (3.0, 1.0)], "synthetic").unwrap();
    let rep = RelZetaRep::spectral(d, Coupling::beta_only(0.5).unwrap());
    let (v, e) = scattering_term_rep(&h, &rep, &q).unwrap();
    assert!(v.is_finite() && e.is_finite());
    let b = ball(2.0);
    let orbit = RelZetaRep::orbit_sum(&b, Coupling::beta_only(0.5).unwrap());
    assert!(matches!(scattering_term_rep(&h, &orbit, &q), Err(Error::RepresentationUnavailable(_))));
}

#[test]
fn zeta_identity_residual_tracks_envelope() {
    let b = ball(8.0);
    let cpl = Coupling::beta_only(0.2).unwrap();
    for k in [1, 2, 4, 8, 12] {
        let r = zeta_relative_identity_check(3.0, &cpl, &b, k).unwrap();
        assert!(r.within_envelope(), "k = {k}");
    }
}
