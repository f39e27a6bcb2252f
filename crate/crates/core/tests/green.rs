use hyperdelta::green::*;
use hyperdelta::halfplane::*;
use hyperdelta::specfun::free_green;
use hyperdelta::{Complex64, Error};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn ball(r: f64) -> OrbitBall {
    enumerate_orbit_ball(&FuchsianGroup::modular(), HPoint::new(0.3, 1.3).unwrap(), r).unwrap()
}

#[test]
fn diffractive_sum_is_a_sum_over_lengths() {
    let b = ball(4.0);
    let s = c(2.2, 0.5);
    let g = diffractive_green_sum(&b, s).unwrap();
    let direct: Complex64 = b.lengths().iter().map(|&l| free_green(s, l).unwrap()).sum();
    assert!((g.value - direct).norm() < 1e-13);
    assert!(g.tail > 0.0);
}

#[test]
fn tail_estimate_covers_ball_growth() {
    let s = c(1.7, 0.0);
    let small = diffractive_green_sum(&ball(6.0), s).unwrap();
    let big = diffractive_green_sum(&ball(9.0), s).unwrap();
    assert!((big.value - small.value).norm() <= small.tail);
}

#[test]
fn automorphic_green_is_symmetric() {
    let b = ball(8.0);
    let s = c(2.4, 0.0);
    let z = HPoint::new(-0.1, 1.9).unwrap();
    let w = b.base;
    let g1 = automorphic_green(&b, s, z, w).unwrap();
    // moving z by a group element leaves G unchanged up to the truncation tail
    let tz = MoebiusMap::t().apply(z);
    let g2 = automorphic_green(&b, s, tz, w).unwrap();
    assert!((g1.value - g2.value).norm() <= 2.0 * g1.tail.max(g2.tail));
}

#[test]
fn automorphic_green_rejects_coincident_points() {
    let b = ball(3.0);
    assert!(matches!(automorphic_green(&b, c(2.0, 0.0), b.base, b.base), Err(Error::SingularPair(_))));
}

#[test]
fn regularization_constants_are_stable_in_radius() {
    let k8 = regularization_constants(&ball(8.0), None).unwrap();
    let k10 = regularization_constants(&ball(10.0), None).unwrap();
    assert!((k8.c_of_t - k10.c_of_t).abs() <= k8.tail);
    assert!((k8.a_t_tbar - k10.a_t_tbar).abs() <= 2.0 * k8.tail);
    assert!(k8.a_real_residue.abs() < 1e-12);
}

#[test]
fn insufficient_radius_is_reported() {
    assert!(matches!(regularization_constants(&ball(2.0), Some(1e-12)), Err(Error::InsufficientRadius { .. })));
}

#[test]
fn coupling_errors() {
    let k = regularization_constants(&ball(6.0), None).unwrap();
    assert!(matches!(Coupling::from_alpha(0.0, &k), Err(Error::ZeroCoupling)));
    assert!(matches!(Coupling::from_beta(0.0, &k), Err(Error::ZeroCoupling)));
    let alpha = 1.0 / k.c_of_t;
    assert!(matches!(Coupling::from_alpha(alpha, &k), Err(Error::SingularReparametrization(_))));
}

#[test]
fn t_point_is_the_right_root() {
    let t = t_point();
    assert!(t.re > 0.5);
    assert!((t * (1.0 - t) - Complex64::i()).norm() < 1e-14);
}
