use hyperdelta::eisenstein::*;
use hyperdelta::green::coupling_from_alpha;
use hyperdelta::halfplane::*;
use hyperdelta::{Complex64, Error};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn pt(x: f64, y: f64) -> HPoint {
    HPoint::new(x, y).unwrap()
}

// reference values from an mpmath evaluation of the Fourier expansion at 30 digits
#[test]
fn fourier_expansion_reference_values() {
    let ctx = EisensteinContext::default();
    let cases = [
        (pt(0.2, 1.1), c(2.3, 0.0), c(2.5815590064547913153, 0.0)),
        (pt(-0.45, 0.9), c(1.8, 0.7), c(2.4324039091255561511, -0.69069351636264257956)),
        (pt(0.0, 3.0), c(3.5, 0.0), c(46.834409089919251777, 0.0)),
    ];
    for (z, s, want) in cases {
        let got = eisenstein_fourier(z, s, &ctx).unwrap();
        assert!((got - want).norm() <= 1e-11 * want.norm(), "E({z}, {s}) = {got}, want {want}");
    }
}

#[test]
fn scattering_reference_values() {
    let cases = [
        (c(2.3, 0.0), c(1.5031304575656901567, 0.0)),
        (c(1.4, 2.0), c(0.90349743609688215078, -0.61768396180467216814)),
    ];
    for (s, want) in cases {
        assert!((scattering_phi(s).unwrap() - want).norm() <= 1e-12 * want.norm());
    }
}

#[test]
fn eisenstein_is_modular_invariant() {
    let ctx = EisensteinContext::default();
    let s = c(2.1, 0.4);
    let z = pt(0.17, 0.31);
    let e = eisenstein_fourier(z, s, &ctx).unwrap();
    for m in [MoebiusMap::s(), MoebiusMap::t(), MoebiusMap::new(2.0, 1.0, 1.0, 1.0).unwrap()] {
        let ez = eisenstein_fourier(m.apply(z), s, &ctx).unwrap();
        assert!((ez - e).norm() <= 1e-10 * e.norm());
    }
}

#[test]
fn pole_at_one_is_reported() {
    let ctx = EisensteinContext::default();
    assert!(matches!(eisenstein_fourier(pt(0.0, 1.5), c(1.0, 0.0), &ctx), Err(Error::PoleOfEisenstein)));
}

#[test]
fn perturbed_scattering_is_real_and_involutive() {
    let ball = enumerate_orbit_ball(&FuchsianGroup::modular(), pt(0.3, 1.3), 7.0).unwrap();
    let cpl = coupling_from_alpha(-0.5, &ball).unwrap();
    let ctx = EisensteinContext::default();
    let p = perturbed_scattering(c(2.3, 0.0), &cpl, &ball, &ctx).unwrap();
    assert!((p.phi_alpha - p.phi * p.theta).norm() < 1e-15);
    assert!(p.phi_alpha.im.abs() < 1e-14);
    let r = perturbed_scattering_reflected(c(2.3, 0.0), &cpl, &ball, &ctx).unwrap();
    assert!((r.phi_alpha * p.phi_alpha - 1.0).norm() < 1e-10);
}

#[test]
fn zero_mode_fit_rejects_critical_point() {
    let ctx = EisensteinContext::default();
    let s = c(0.5005, 0.0);
    let f = |z: HPoint| eisenstein_fourier(z, s, &ctx);
    assert!(matches!(cusp_zero_mode(&f, 2.0, s, 16), Err(Error::IllConditionedFit(_))));
}
