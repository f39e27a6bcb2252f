use std::fs::File;
use std::io::{self, Write};

use hyperdelta::eisenstein::*;
use hyperdelta::green::{regularization_constants, Coupling};
use hyperdelta::halfplane::{enumerate_orbit_ball_with, BallOptions, HPoint, OrbitBall};
use hyperdelta::quad::{QuadratureSpec, Rule};
use hyperdelta::relzeta::*;
use hyperdelta::traceform::*;
use hyperdelta::{Complex64, Error};
use serde_json::Value;

use crate::config::RunConfig;
use crate::output::{cnum, num, obj, opt, text};
use crate::CliError;

type Out = Result<Value, CliError>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn quadrature(cfg: &RunConfig) -> Result<QuadratureSpec, CliError> {
    let tol = cfg.positive("tol")?;
    let rule = match cfg.get("rule") {
        Some("gauss-legendre") | None => Rule::GaussLegendreComposite,
        Some("tanh-sinh") => Rule::TanhSinh,
        Some(other) => return Err(CliError::Config(format!("`rule` must be gauss-legendre or tanh-sinh, got `{other}`"))),
    };
    Ok(QuadratureSpec::new(rule, tol)?)
}

fn eis_context(cfg: &RunConfig) -> Result<EisensteinContext, CliError> {
    Ok(EisensteinContext::new(cfg.positive("eis_tol")?, cfg.usize("coset_cmax")?))
}

fn ball(cfg: &RunConfig) -> Result<OrbitBall, CliError> {
    let radius = cfg.positive("radius")?;
    let z0 = cfg.point("z0")?;
    let cap = cfg.usize("ball_cap")?;
    let group = cfg.group()?;
    Ok(enumerate_orbit_ball_with(&group, z0, radius, BallOptions { cap, ..BallOptions::default() })?)
}

/// Coupling for the orbit ball: alpha goes through the regularization constants.
fn orbit_coupling(cfg: &RunConfig, ball: &OrbitBall) -> Result<Coupling, CliError> {
    let (x, is_alpha) = cfg.coupling_value()?;
    let k = regularization_constants(ball, None)?;
    Ok(if is_alpha { Coupling::from_alpha(x, &k)? } else { Coupling::from_beta(x, &k)? })
}

fn coupling_json(k: &Coupling) -> Value {
    obj([
        ("alpha", num(k.alpha)),
        ("beta", num(k.beta)),
        ("phi", num(k.phi)),
        ("c_of_t", num(k.c_of_t)),
        ("a_t_tbar", num(k.a_t_tbar)),
    ])
}

fn ball_json(b: &OrbitBall) -> Value {
    let l = b.lengths();
    obj([
        ("radius", num(b.radius)),
        ("elements", Value::from(b.len())),
        ("stabilizer_order", Value::from(b.stabilizer_order)),
        ("min_length", opt(l.first().copied())),
        ("max_length", opt(l.last().copied())),
    ])
}

pub fn orbit_ball(cfg: &RunConfig) -> Result<(), CliError> {
    let b = ball(cfg)?;
    let l = b.lengths();
    let summary = format!(
        "elements {}\nmin_length {}\nmax_length {}\nstabilizer_order {}\n",
        b.len(),
        l.first().map_or("-".into(), |x| format!("{x:.16e}")),
        l.last().map_or("-".into(), |x| format!("{x:.16e}")),
        b.stabilizer_order
    );
    match cfg.get("output") {
        Some(path) => {
            let f = File::create(path).map_err(|e| CliError::Config(format!("cannot write {path}: {e}")))?;
            b.write_csv(io::BufWriter::new(f))?;
            print!("{summary}");
        }
        None => {
            b.write_csv(io::stdout().lock())?;
            eprint!("{summary}");
        }
    }
    io::stdout().flush().ok();
    Ok(())
}

enum Owned {
    Ball(OrbitBall, Coupling),
    Spectral(SpectralData, Coupling),
    Sphere(f64),
}

impl Owned {
    fn load(cfg: &RunConfig) -> Result<Self, CliError> {
        match cfg.get("rep").unwrap_or("orbit-sum") {
            "orbit-sum" => {
                let b = ball(cfg)?;
                let k = orbit_coupling(cfg, &b)?;
                Ok(Owned::Ball(b, k))
            }
            "spectral" => {
                let path = cfg
                    .get("spectral_data")
                    .ok_or_else(|| CliError::Config("`spectral_data` must be set for rep=spectral".into()))?;
                let f = File::open(path).map_err(|e| CliError::Config(format!("cannot read {path}: {e}")))?;
                let data = SpectralData::from_csv(f)?;
                // this representation only uses 1/alpha
                let (x, _) = cfg.coupling_value()?;
                Ok(Owned::Spectral(data, Coupling::beta_only(x)?))
            }
            "sphere" => {
                let (x, _) = cfg.coupling_value()?;
                Ok(Owned::Sphere(x))
            }
            other => Err(CliError::Config(format!("`rep` must be orbit-sum, spectral or sphere, got `{other}`"))),
        }
    }

    fn rep(&self) -> RelZetaRep<'_> {
        match self {
            Owned::Ball(b, k) => RelZetaRep::orbit_sum(b, *k),
            Owned::Spectral(d, k) => RelZetaRep::spectral(d.clone(), *k),
            Owned::Sphere(beta) => RelZetaRep::sphere(*beta),
        }
    }

    fn extra(&self) -> Value {
        match self {
            Owned::Ball(b, k) => obj([("ball", ball_json(b)), ("coupling", coupling_json(k))]),
            Owned::Spectral(d, k) => obj([
                ("entries", Value::from(d.entries.len())),
                ("truncation_note", text(d.truncation_note.clone())),
                ("alpha", num(k.alpha)),
            ]),
            Owned::Sphere(beta) => obj([("beta", num(*beta))]),
        }
    }
}

fn classification(rep: &RelZetaRep, s: Complex64) -> Value {
    match classify_point(rep, s) {
        Ok(p) => text(p.label()),
        Err(_) => Value::Null,
    }
}

pub fn relzeta_eval(cfg: &RunConfig) -> Out {
    let owned = Owned::load(cfg)?;
    let rep = owned.rep();
    let s = cfg.complex("s")?;
    let (est, method) = match &owned {
        Owned::Ball(..) if s.re < 0.0 => {
            let ctx = eis_context(cfg)?;
            let value = rep.continue_fe(c(1.0, 0.0) - s, &ctx)?;
            let tail = rep.eval_with_error(c(1.0, 0.0) - s)?.error;
            (Estimate { value, error: tail }, "functional-equation")
        }
        _ => (rep.eval_with_error(s)?, "direct"),
    };
    let p = SpectralPoint::from_s(s);
    Ok(obj([
        ("representation", text(rep.name())),
        ("method", text(method)),
        ("s", cnum(s)),
        ("lambda", cnum(p.lambda)),
        ("value", cnum(est.value)),
        ("error_estimate", num(est.error)),
        ("im_residue", if s.im == 0.0 { num(est.value.im.abs()) } else { Value::Null }),
        ("classification", classification(&rep, s)),
        ("setup", owned.extra()),
    ]))
}

pub fn relzeta_roots(cfg: &RunConfig) -> Out {
    let owned = Owned::load(cfg)?;
    let rep = owned.rep();
    let roots = match (cfg.get("interval"), &owned) {
        (Some(_), _) => {
            let (a, b) = cfg.pair("interval")?;
            find_real_zeros(&rep, (a, b))?
        }
        (None, Owned::Ball(..)) => lowest_orbit_root(&rep)?.into_iter().collect(),
        (None, _) => return Err(CliError::Config("`interval` must be set for this representation".into())),
    };
    let axis = match &owned {
        Owned::Ball(..) => "s",
        Owned::Spectral(..) => "lambda",
        Owned::Sphere(..) => "w",
    };
    let mut out = Vec::new();
    for x in roots {
        let s = match &owned {
            Owned::Spectral(..) => SpectralPoint::from_lambda(c(x, 0.0)).s,
            _ => c(x, 0.0),
        };
        let p = SpectralPoint::from_s(s);
        out.push(obj([
            ("axis_value", num(x)),
            ("s", cnum(s)),
            ("lambda", cnum(p.lambda)),
            ("residual", num(rep.eval(s)?.norm())),
            ("classification", classification(&rep, s)),
        ]));
    }
    Ok(obj([
        ("representation", text(rep.name())),
        ("axis", text(axis)),
        ("roots", Value::Array(out)),
        ("setup", owned.extra()),
    ]))
}

fn report_json(r: &TraceReport) -> Value {
    let terms = r
        .terms
        .iter()
        .map(|t| obj([("name", text(t.name.clone())), ("value", cnum(t.value)), ("error", num(t.error))]))
        .collect();
    let p = &r.params;
    let cross = r.cross_check.as_ref().map_or(Value::Null, |x| {
        obj([
            ("name", text(x.name.clone())),
            ("value", cnum(x.value)),
            ("error", num(x.error)),
            ("residual", num(x.residual)),
        ])
    });
    obj([
        ("terms", Value::Array(terms)),
        ("total", cnum(r.total)),
        ("total_error", num(r.total_error)),
        ("tail_bound", num(r.tail_bound)),
        ("combined_error", num(r.combined_error())),
        ("cross_check", cross),
        ("identity_shift_residual", opt(r.identity_shift_residual)),
        (
            "params",
            obj([
                ("k_max", p.k_max.map_or(Value::Null, Value::from)),
                ("radius", opt(p.radius)),
                ("contour_height", opt(p.contour_height)),
                ("nu", opt(p.nu)),
                ("q_hat", opt(p.q_hat)),
                ("cutoff", opt(p.cutoff)),
                ("j_max", p.j_max.map_or(Value::Null, Value::from)),
                ("abs_tol", num(p.abs_tol)),
            ]),
        ),
    ])
}

pub fn trace_sphere(cfg: &RunConfig) -> Out {
    let (beta, _) = cfg.coupling_value()?;
    let h = TestFunction::gaussian(cfg.positive("a")?)?;
    let q = quadrature(cfg)?;
    let j_max = cfg.usize("j_max")?;
    let delta = cfg.positive("delta")?;
    let spec = sphere_spectral_side(&h, beta, j_max)?;
    let (contour, err) = sphere_contour_side(&h, beta, delta, &q)?;
    let terms = vec![TraceTerm { name: "spectral".into(), value: c(spec.value, 0.0), error: 0.0 }];
    let params = TraceParams { contour_height: Some(delta), j_max: Some(j_max), abs_tol: q.abs_tol, ..Default::default() };
    let report = TraceReport::new(terms, spec.tail, params).with_cross_check("contour", contour, err);
    Ok(obj([
        ("spectral_side", num(spec.value)),
        ("contour_side", cnum(contour)),
        ("difference", num((spec.value - contour.re).abs())),
        ("omegas", Value::Array(spec.omegas.iter().map(|o| opt(*o)).collect())),
        ("report", report_json(&report)),
    ]))
}

pub fn trace_geometric(cfg: &RunConfig) -> Out {
    let b = ball(cfg)?;
    let k = orbit_coupling(cfg, &b)?;
    let h = TestFunction::gaussian(cfg.positive("a")?)?;
    let q = quadrature(cfg)?;
    let k_max = cfg.usize("k_max")?;
    let td = cfg.usize("timedomain")?;
    if td > 2 {
        return Err(CliError::Config(format!("`timedomain` must be 0, 1 or 2, got {td}")));
    }
    let report = geometric_side_series(&h, &k, &b, k_max, &q)?;
    let sigma = report.params.contour_height.unwrap_or(1.0);
    let mut time = Vec::new();
    for kk in 1..=td {
        let (v, e) = diffractive_term_timedomain(&h, &k, &b, kk, &q)?;
        let nodal = nodal_diffractive_term(&h, &k, &b, kk, sigma, &q)?;
        time.push(obj([
            ("k", Value::from(kk)),
            ("timedomain", cnum(v)),
            ("timedomain_error", num(e)),
            ("nodal", cnum(nodal.0)),
            ("difference", num((v - nodal.0).norm())),
        ]));
    }
    let residual = report.cross_check.as_ref().map(|x| x.residual);
    Ok(obj([
        ("series", cnum(report.total)),
        ("direct", report.cross_check.as_ref().map_or(Value::Null, |x| cnum(x.value))),
        ("difference", opt(residual)),
        ("within_error", Value::Bool(residual.is_some_and(|r| r <= report.combined_error()))),
        ("report", report_json(&report)),
        ("timedomain", Value::Array(time)),
        ("ball", ball_json(&b)),
        ("coupling", coupling_json(&k)),
    ]))
}

pub fn trace_zeta_identity(cfg: &RunConfig) -> Out {
    let b = ball(cfg)?;
    let k = orbit_coupling(cfg, &b)?;
    let s = cfg.complex("s")?;
    if s.im != 0.0 {
        return Err(CliError::Config("`s` must be real for zeta-identity".into()));
    }
    let r = zeta_relative_identity_check(s.re, &k, &b, cfg.usize("k_max")?)?;
    Ok(obj([
        ("s", num(s.re)),
        ("k_max", Value::from(r.k_max)),
        ("residual", num(r.residual)),
        ("envelope", num(r.envelope)),
        ("ratio", cnum(r.ratio)),
        ("rounding", num(r.rounding)),
        ("within_envelope", Value::Bool(r.within_envelope())),
        ("ball", ball_json(&b)),
        ("coupling", coupling_json(&k)),
    ]))
}

fn eisenstein_point(cfg: &RunConfig) -> Result<(HPoint, Complex64, EisensteinContext), CliError> {
    Ok((cfg.point("z")?, cfg.complex("s")?, eis_context(cfg)?))
}

pub fn eisenstein_eval(cfg: &RunConfig) -> Out {
    let (z, s, ctx) = eisenstein_point(cfg)?;
    let e = eisenstein_fourier(z, s, &ctx)?;
    let phi = scattering_phi(s)?;
    Ok(obj([("z", obj([("x", num(z.x)), ("y", num(z.y))])), ("s", cnum(s)), ("value", cnum(e)), ("phi", cnum(phi))]))
}

pub fn eisenstein_check(cfg: &RunConfig) -> Out {
    let (z, s, ctx) = eisenstein_point(cfg)?;
    let f = eisenstein_fourier(z, s, &ctx)?;
    let coset = eisenstein_coset_oracle(z, s, &ctx)?;
    let phi = scattering_phi(s)?;
    let phi_r = scattering_phi(c(1.0, 0.0) - s)?;
    let mut unit = Vec::new();
    for t in [1.0, 5.0, 10.0] {
        let p = scattering_phi(c(0.5, t))?;
        unit.push(obj([("t", num(t)), ("residual", num((p.norm() - 1.0).abs()))]));
    }
    let nx = cfg.usize("nx")?;
    let field = |w: HPoint| eisenstein_fourier(w, s, &ctx);
    let (a, b) = cusp_zero_mode(&field, cfg.positive("cusp_y")?, s, nx.max(1))?;
    Ok(obj([
        ("s", cnum(s)),
        ("fourier", cnum(f)),
        ("coset", cnum(coset.value)),
        ("coset_tail", num(coset.tail)),
        ("coset_terms", Value::from(coset.terms)),
        ("relative_error", num((f - coset.value).norm() / f.norm())),
        ("phi", cnum(phi)),
        ("involution_residual", num((phi * phi_r - 1.0).norm())),
        ("unitarity", Value::Array(unit)),
        ("cusp_extraction", obj([("a", cnum(a)), ("b", cnum(b)), ("phi_difference", num((b - phi).norm()))])),
    ]))
}

pub fn eisenstein_perturbed(cfg: &RunConfig) -> Out {
    let (z, s, ctx) = eisenstein_point(cfg)?;
    if s.re <= 1.0 {
        return Err(CliError::Lib(Error::ConvergenceDomain(s.re)));
    }
    let b = ball(cfg)?;
    let k = orbit_coupling(cfg, &b)?;
    let p = perturbed_scattering(s, &k, &b, &ctx)?;
    let r = perturbed_scattering_reflected(s, &k, &b, &ctx)?;
    let value = perturbed_eisenstein(z, s, &k, &b, &ctx)?;
    let nx = cfg.usize("nx")?;
    let field = |w: HPoint| perturbed_eisenstein(w, s, &k, &b, &ctx);
    let (ca, cb) = cusp_zero_mode(&field, cfg.positive("cusp_y")?, s, nx.max(1))?;
    Ok(obj([
        ("s", cnum(s)),
        ("phi", cnum(p.phi)),
        ("phi_alpha", cnum(p.phi_alpha)),
        ("theta", cnum(p.theta)),
        ("phi_alpha_reflected", cnum(r.phi_alpha)),
        ("involution_residual", num((p.phi_alpha * r.phi_alpha - 1.0).norm())),
        ("value_at_z", cnum(value)),
        ("cusp_extraction", obj([("a", cnum(ca)), ("b", cnum(cb)), ("phi_alpha_difference", num((cb - p.phi_alpha).norm()))])),
        ("ball", ball_json(&b)),
        ("coupling", coupling_json(&k)),
    ]))
}
