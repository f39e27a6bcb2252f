use std::f64::consts::PI;
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::Instant;

use hyperdelta::eisenstein::*;
use hyperdelta::green::*;
use hyperdelta::halfplane::*;
use hyperdelta::quad::QuadratureSpec;
use hyperdelta::relzeta::*;
use hyperdelta::specfun::*;
use hyperdelta::traceform::*;
use hyperdelta::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn pt(x: f64, y: f64) -> HPoint {
    HPoint::new(x, y).unwrap()
}

fn z0() -> HPoint {
    pt(0.3, 1.3)
}

fn ball8() -> &'static OrbitBall {
    static B: OnceLock<OrbitBall> = OnceLock::new();
    B.get_or_init(|| enumerate_orbit_ball(&FuchsianGroup::modular(), z0(), 8.0).unwrap())
}

fn ball12() -> &'static OrbitBall {
    static B: OnceLock<OrbitBall> = OnceLock::new();
    B.get_or_init(|| enumerate_orbit_ball(&FuchsianGroup::modular(), z0(), 12.0).unwrap())
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

macro_rules! tryf {
    ($e:expr) => {
        $e.map_err(|e| format!("error: {e}"))?
    };
}

fn geometry() -> Outcome {
    let d = hyp_distance(pt(0.0, 1.0), pt(0.0, 2.0));
    let e1 = (d - 2f64.ln()).abs();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let mut p = || pt(rng.gen_range(-3.0..3.0), rng.gen_range(0.1..4.0));
        let (z, w) = (p(), p());
        let a: f64 = rng.gen_range(0.3..3.0);
        let b: f64 = rng.gen_range(-2.0..2.0);
        let cc: f64 = rng.gen_range(-2.0..2.0);
        let m = tryf!(MoebiusMap::new(a, b, cc, (1.0 + b * cc) / a));
        let r = (hyp_distance(m.apply(z), m.apply(w)) - hyp_distance(z, w)).abs();
        worst = worst.max(r);
    }
    check(e1 <= 1e-12 && worst <= 1e-10, format!("|d(i,2i) - ln 2| = {e1:.2e}, worst isometry defect {worst:.2e}"))
}

fn free_green_oracle_check() -> Outcome {
    let q = QuadratureSpec::tanh_sinh(1e-14);
    let mut worst: f64 = 0.0;
    for s in [1.6, 2.0, 3.0] {
        let rho = c(0.0, -(s - 0.5));
        for d in [0.5, 1.0, 2.0] {
            let a = tryf!(free_green(c(s, 0.0), d));
            let b = tryf!(free_green_oracle(rho, d, &q));
            worst = worst.max((a - b).norm() / b.norm());
        }
    }
    check(worst <= 1e-8, format!("worst relative error {worst:.2e}"))
}

fn regularization_identity() -> Outcome {
    let t = t_point();
    let d = 1e-4;
    let mut worst: f64 = 0.0;
    for s in [1.6, 2.4] {
        let s = c(s, 0.0);
        let lhs = tryf!(free_green(s, d)) - tryf!(free_green(t, d));
        let rhs = tryf!(psi_paper(s)) - tryf!(psi_paper(t));
        worst = worst.max((lhs - rhs).norm());
    }
    check(worst <= 1e-6, format!("worst |difference| {worst:.2e}"))
}

fn ball_completeness() -> Outcome {
    let g = FuchsianGroup::modular();
    let ball = tryf!(enumerate_orbit_ball(&g, z0(), 3.0));
    let bfs: std::collections::HashSet<[i64; 4]> =
        ball.elements.iter().map(|e| e.0.key()).chain(ball.stabilizer.iter().map(MoebiusMap::key)).collect();
    let words = tryf!(g.words_up_to(12, 10_000_000));
    let brute: std::collections::HashSet<[i64; 4]> =
        words.iter().filter(|w| hyp_distance(w.apply(z0()), z0()) <= 3.0).map(MoebiusMap::key).collect();
    check(bfs == brute, format!("BFS {} elements, words {} elements", bfs.len(), brute.len()))
}

fn eisenstein_cross() -> Outcome {
    let ctx = EisensteinContext::default();
    let s = c(2.3, 0.0);
    let mut fc: f64 = 0.0;
    for z in [pt(0.3, 1.1), pt(-0.4, 0.95), pt(0.1, 2.5)] {
        let f = tryf!(eisenstein_fourier(z, s, &ctx));
        let o = tryf!(eisenstein_coset_oracle(z, s, &ctx));
        fc = fc.max((f - o.value).norm() / f.norm());
    }
    let mut inv: f64 = 0.0;
    for s in [c(2.3, 0.0), c(0.7, 3.0), c(1.5, 0.5)] {
        inv = inv.max((tryf!(scattering_phi(s)) * tryf!(scattering_phi(c(1.0, 0.0) - s)) - 1.0).norm());
    }
    let mut unit: f64 = 0.0;
    for t in [1.0, 5.0, 10.0] {
        unit = unit.max((tryf!(scattering_phi(c(0.5, t))).norm() - 1.0).abs());
    }
    check(
        fc <= 1e-6 && inv <= 1e-9 && unit <= 1e-9,
        format!("Fourier/coset {fc:.2e}, involution {inv:.2e}, unitarity {unit:.2e}"),
    )
}

fn cusp_asymptotics() -> Outcome {
    let ball = ball12();
    let ctx = EisensteinContext::default();
    let s = c(2.3, 0.0);
    let y = 6.0;
    let f = |z: HPoint| automorphic_green(ball, s, z, ball.base).map(|g| g.value);
    let avg = tryf!(x_average(&f, y, 64));
    let want = tryf!(eisenstein_fourier(ball.base, s, &ctx)) / (1.0 - 2.0 * s) * y.powf(1.0 - 2.3);
    let rel = (avg - want).norm() / want.norm();
    check(rel <= 1e-4, format!("relative error {rel:.2e} with R = {}", ball.radius))
}

fn pde_residual() -> Outcome {
    let ball = ball8();
    let ctx = EisensteinContext::default();
    let s = c(2.3, 0.0);
    let cpl = tryf!(coupling_from_alpha(-0.5, ball));
    let mut ratios = Vec::new();
    for z in [pt(0.1, 1.8), pt(-0.35, 1.05)] {
        let e = |x: f64, y: f64| perturbed_eisenstein(pt(x, y), s, &cpl, ball, &ctx);
        let res = |h: f64| -> hyperdelta::Result<f64> {
            let c0 = e(z.x, z.y)?;
            let lap = (e(z.x + h, z.y)? + e(z.x - h, z.y)? + e(z.x, z.y + h)? + e(z.x, z.y - h)? - c0 * 4.0) / (h * h);
            Ok((lap * (z.y * z.y) + c0 * (s * (1.0 - s))).norm())
        };
        ratios.push(tryf!(res(0.02)) / tryf!(res(0.01)));
    }
    let ok = ratios.iter().all(|r| (3.3..=4.8).contains(r));
    check(ok, format!("shrink factors {:.4}, {:.4}", ratios[0], ratios[1]))
}

fn perturbed_scattering_check() -> Outcome {
    let ball = ball12();
    let ctx = EisensteinContext::default();
    let s = c(2.3, 0.0);
    let cpl = tryf!(coupling_from_alpha(-0.5, ball));
    let ps = tryf!(perturbed_scattering(s, &cpl, ball, &ctx));
    let f = |z: HPoint| perturbed_eisenstein(z, s, &cpl, ball, &ctx);
    let (_, b) = tryf!(cusp_zero_mode(&f, 2.0, s, 64));
    let diff = (b - ps.phi_alpha).norm();
    let rf = tryf!(perturbed_scattering_reflected(s, &cpl, ball, &ctx));
    let inv = (ps.phi_alpha * rf.phi_alpha - 1.0).norm();
    check(
        diff <= 1e-5 && inv <= 1e-8,
        format!("phi_alpha {:.12}, extraction diff {diff:.2e}, involution {inv:.2e}", ps.phi_alpha.re),
    )
}

fn sphere_trace() -> Outcome {
    let h = tryf!(TestFunction::gaussian(2.0));
    let tol = 1e-10;
    let q = QuadratureSpec::gauss_legendre(tol);
    let mut worst: f64 = 0.0;
    let mut shift: f64 = 0.0;
    for beta in [0.6 * PI, -0.6 * PI] {
        let lhs = tryf!(sphere_spectral_side(&h, beta, 60));
        let (a, _) = tryf!(sphere_contour_side(&h, beta, 0.25, &q));
        let (b, _) = tryf!(sphere_contour_side(&h, beta, 0.4, &q));
        worst = worst.max((lhs.value - a.re).abs());
        shift = shift.max((a - b).norm());
    }
    check(worst <= 1e-6 && shift <= 2.0 * tol, format!("worst |spectral - contour| {worst:.2e}, contour shift {shift:.2e}"))
}

fn series_vs_direct() -> Outcome {
    let ball = ball8();
    let k = tryf!(regularization_constants(ball, None));
    let cpl = tryf!(Coupling::from_beta(0.2, &k));
    let h = tryf!(TestFunction::gaussian(2.0));
    let q = QuadratureSpec::gauss_legendre(1e-10);
    let rep = tryf!(geometric_side_series(&h, &cpl, ball, 20, &q));
    let cc = rep.cross_check.as_ref().unwrap();
    let q_hat = rep.params.q_hat.unwrap();
    let rel = cc.residual / cc.value.norm();
    check(
        q_hat <= 0.3 && rel <= 1e-6 && cc.residual <= rep.combined_error(),
        format!(
            "q_hat {q_hat:.4}, relative difference {rel:.2e}, residual {:.2e} within error budget {:.2e}",
            cc.residual,
            rep.combined_error()
        ),
    )
}

fn timedomain_vs_nodal() -> Outcome {
    let ball = ball8();
    let cpl = tryf!(Coupling::beta_only(0.2));
    let h = tryf!(TestFunction::gaussian(2.0));
    let q = QuadratureSpec::gauss_legendre(1e-10);
    let sig = tryf!(choose_sigma_tilde(&cpl, ball));
    let n1 = tryf!(nodal_diffractive_term(&h, &cpl, ball, 1, sig.sigma_tilde, &q));
    let (t1, _) = tryf!(diffractive_term_timedomain(&h, &cpl, ball, 1, &q));
    let r1 = (n1.0 - t1).norm() / n1.0.norm();
    let small = ball.prefix(2);
    let sig2 = tryf!(choose_sigma_tilde(&cpl, &small));
    let n2 = tryf!(nodal_diffractive_term(&h, &cpl, &small, 2, sig2.sigma_tilde, &q));
    let (t2, _) = tryf!(diffractive_term_timedomain(&h, &cpl, &small, 2, &q));
    let r2 = (n2.0 - t2).norm() / n2.0.norm();
    check(r1 <= 1e-5 && r2 <= 1e-4, format!("k = 1 relative {r1:.2e}, k = 2 relative {r2:.2e}"))
}

fn lowest_eigenvalue() -> Outcome {
    let ball = ball8();
    let cpl = tryf!(Coupling::beta_only(-0.2));
    let rep = RelZetaRep::orbit_sum(ball, cpl);
    let root = tryf!(lowest_orbit_root(&rep));
    let Some(s) = root else {
        return Err("no root found".into());
    };
    let val = tryf!(rep.eval(c(s, 0.0))).norm();
    let lam = s * (1.0 - s);
    check(s > 1.0 && val <= 1e-10 && lam < 0.0, format!("s* = {s:.6e}, |S(s*)| = {val:.2e}, s*(1-s*) = {lam:.3e}"))
}

fn interlacing() -> Outcome {
    let betas = [-3.0, -1.5, -0.8, -0.3, -0.05, 0.05, 0.3, 0.8, 1.5, 3.0];
    let data = SpectralData::new(
        vec![(0.0, 1.0), (1.3, 0.5), (2.0, 2.0), (3.7, 1.0), (5.0, 0.7), (8.2, 1.1), (9.0, 0.4)],
        "synthetic",
    )
    .unwrap();
    let mut gaps_checked = 0;
    for &beta in &betas {
        let sphere = RelZetaRep::sphere(beta);
        let roots = tryf!(find_real_zeros(&sphere, (-10.5, 0.5)));
        for k in 0..10 {
            let (lo, hi) = (-(k as f64) - 1.0, -(k as f64));
            let n = roots.iter().filter(|&&r| r > lo && r < hi).count();
            if n != 1 {
                return Err(format!("sphere beta {beta}: {n} zeros in ({lo}, {hi})"));
            }
            gaps_checked += 1;
        }
        let rep = RelZetaRep::spectral(data.clone(), tryf!(Coupling::beta_only(beta)));
        let roots = tryf!(find_real_zeros(&rep, (-5.0, 12.0)));
        for w in data.entries.windows(2) {
            let n = roots.iter().filter(|&&r| r > w[0].0 && r < w[1].0).count();
            if n != 1 {
                return Err(format!("synthetic beta {beta}: {n} zeros in ({}, {})", w[0].0, w[1].0));
            }
            gaps_checked += 1;
        }
    }
    Ok(format!("{gaps_checked} gaps over {} couplings, one zero each", betas.len()))
}

fn zeta_identity() -> Outcome {
    let ball = ball8();
    let cpl = tryf!(Coupling::beta_only(0.2));
    let r = tryf!(zeta_relative_identity_check(3.0, &cpl, ball, 6));
    check(r.residual <= r.envelope, format!("residual {:.2e}, envelope {:.2e}, |x| {:.3e}", r.residual, r.envelope, r.ratio.norm()))
}

fn coupling_dictionary() -> Outcome {
    let k = tryf!(regularization_constants(ball8(), None));
    let mut round: f64 = 0.0;
    let mut ext: f64 = 0.0;
    for alpha in [-2.0, -0.5, 0.1, 0.7, 3.0] {
        let a = tryf!(Coupling::from_alpha(alpha, &k));
        let b = tryf!(Coupling::from_beta(a.beta, &k));
        round = round.max((b.alpha - alpha).abs() / alpha.abs());
        ext = ext.max(a.ext_residual());
    }
    let re = k.a_real_residue.abs();
    check(
        round <= 1e-12 && ext <= 1e-10 && re <= 1e-9,
        format!("roundtrip {round:.2e}, ext residual {ext:.2e}, Re A {re:.2e}"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 15] = [
        ("geometry", geometry),
        ("free Green function oracle", free_green_oracle_check),
        ("regularization identity", regularization_identity),
        ("orbit ball completeness", ball_completeness),
        ("Eisenstein cross-oracle", eisenstein_cross),
        ("cusp asymptotics of automorphic Green function", cusp_asymptotics),
        ("perturbed Eisenstein PDE residual", pde_residual),
        ("perturbed scattering consistency", perturbed_scattering_check),
        ("sphere trace formula", sphere_trace),
        ("geometric side series vs direct", series_vs_direct),
        ("time-domain vs nodal diffractive terms", timedomain_vs_nodal),
        ("lowest perturbed eigenvalue", lowest_eigenvalue),
        ("interlacing", interlacing),
        ("perturbed zeta identity", zeta_identity),
        ("coupling dictionary", coupling_dictionary),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (tag, detail) = match f() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} {:>2} {name}: {detail} [{:.1} s]", i + 1, t.elapsed().as_secs_f64());
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
