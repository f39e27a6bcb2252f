use std::fs;
use std::path::Path;

use hyperdelta::halfplane::{FuchsianGroup, HPoint, MoebiusMap};
use hyperdelta::Complex64;

use crate::CliError;

/// Recognized keys, their defaults and one-line descriptions, in output order.
pub const KEYS: &[(&str, Option<&str>, &str)] = &[
    ("group", Some("modular"), "modular, or a path to a file of generators `a b c d` per line"),
    ("z0", Some("0.3,1.3"), "base point x,y of the perturbation"),
    ("alpha", None, "physical coupling alpha (exclusive with beta)"),
    ("beta", None, "renormalized coupling beta (exclusive with alpha)"),
    ("radius", Some("8"), "orbit ball radius R"),
    ("ball_cap", Some("4000000"), "maximum number of ball elements"),
    ("tol", Some("1e-10"), "absolute quadrature tolerance"),
    ("rule", Some("gauss-legendre"), "quadrature rule: gauss-legendre or tanh-sinh"),
    ("a", Some("2"), "Gaussian test-function width, h(rho) = exp(-rho^2/a^2)"),
    ("k_max", Some("8"), "number of diffractive terms in the series"),
    ("timedomain", Some("0"), "also evaluate time-domain diffractive terms up to this k (0, 1 or 2)"),
    ("rep", Some("orbit-sum"), "relative zeta representation: orbit-sum, spectral or sphere"),
    ("spectral_data", None, "CSV file with header lambda,weight for the spectral representation"),
    ("s", Some("2"), "spectral parameter re or re,im"),
    ("interval", None, "root search interval lo,hi on the representation's axis"),
    ("z", Some("0.3,1.1"), "evaluation point x,y"),
    ("j_max", Some("60"), "sphere spectral truncation J"),
    ("delta", Some("0.25"), "sphere contour offset in (0, 1/2)"),
    ("cusp_y", Some("2"), "height for cusp zero-mode extraction"),
    ("nx", Some("64"), "samples per horizontal line for x-averages"),
    ("eis_tol", Some("1e-12"), "Eisenstein Fourier truncation tolerance"),
    ("coset_cmax", Some("2000"), "largest |c| in the coset-sum oracle"),
    ("output", None, "artifact path; stdout when unset"),
];

#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    values: Vec<(String, String)>,
}

impl RunConfig {
    /// Defaults, then the file (if any), then `key=value` overrides.
    pub fn load(file: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        for (k, d, _) in KEYS {
            if let Some(d) = d {
                cfg.values.push((k.to_string(), d.to_string()));
            }
        }
        if let Some(path) = file {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
            for (n, line) in text.lines().enumerate() {
                let line = line.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                cfg.apply(line).map_err(|e| match e {
                    CliError::Config(m) => CliError::Config(format!("{}:{}: {m}", path.display(), n + 1)),
                    other => other,
                })?;
            }
        }
        for o in overrides {
            cfg.apply(o)?;
        }
        if cfg.get("alpha").is_some() && cfg.get("beta").is_some() {
            return Err(CliError::Config("alpha and beta are mutually exclusive".into()));
        }
        Ok(cfg)
    }

    fn apply(&mut self, entry: &str) -> Result<(), CliError> {
        let (k, v) = entry
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("expected key=value, got `{entry}`")))?;
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.iter().any(|e| e.0 == k) {
            return Err(CliError::Config(format!("unknown key `{k}`")));
        }
        match self.values.iter_mut().find(|e| e.0 == k) {
            Some(e) => e.1 = v.to_string(),
            None => self.values.push((k.to_string(), v.to_string())),
        }
        Ok(())
    }

    /// Resolved entries in the canonical key order.
    pub fn entries(&self) -> Vec<(&str, &str)> {
        KEYS.iter().filter_map(|(k, _, _)| self.get(k).map(|v| (*k, v))).collect()
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.iter().find(|e| e.0 == key).map(|e| e.1.as_str())
    }

    fn require(&self, key: &str) -> Result<&str, CliError> {
        self.get(key).ok_or_else(|| CliError::Config(format!("`{key}` must be set")))
    }

    pub fn f64(&self, key: &str) -> Result<f64, CliError> {
        let v = self.require(key)?;
        match v.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(x),
            _ => Err(CliError::Config(format!("`{key}` must be a finite number, got `{v}`"))),
        }
    }

    pub fn positive(&self, key: &str) -> Result<f64, CliError> {
        let x = self.f64(key)?;
        if x > 0.0 {
            Ok(x)
        } else {
            Err(CliError::Config(format!("`{key}` must be positive, got {x}")))
        }
    }

    pub fn usize(&self, key: &str) -> Result<usize, CliError> {
        let v = self.require(key)?;
        v.parse().map_err(|_| CliError::Config(format!("`{key}` must be a nonnegative integer, got `{v}`")))
    }

    pub fn pair(&self, key: &str) -> Result<(f64, f64), CliError> {
        let v = self.require(key)?;
        let bad = || CliError::Config(format!("`{key}` must be two numbers `x,y`, got `{v}`"));
        let (a, b) = v.split_once(',').ok_or_else(bad)?;
        let a: f64 = a.trim().parse().map_err(|_| bad())?;
        let b: f64 = b.trim().parse().map_err(|_| bad())?;
        if a.is_finite() && b.is_finite() {
            Ok((a, b))
        } else {
            Err(bad())
        }
    }

    pub fn point(&self, key: &str) -> Result<HPoint, CliError> {
        let (x, y) = self.pair(key)?;
        HPoint::new(x, y).map_err(|_| CliError::Config(format!("`{key}` must lie in the upper half-plane, got {x},{y}")))
    }

    pub fn complex(&self, key: &str) -> Result<Complex64, CliError> {
        let v = self.require(key)?;
        if v.contains(',') {
            let (a, b) = self.pair(key)?;
            Ok(Complex64::new(a, b))
        } else {
            Ok(Complex64::new(self.f64(key)?, 0.0))
        }
    }

    /// Nonzero coupling value and whether it was given as alpha.
    pub fn coupling_value(&self) -> Result<(f64, bool), CliError> {
        let (key, is_alpha) = match (self.get("alpha"), self.get("beta")) {
            (Some(_), _) => ("alpha", true),
            (None, Some(_)) => ("beta", false),
            (None, None) => return Err(CliError::Config("set `alpha` or `beta`".into())),
        };
        let x = self.f64(key)?;
        if x == 0.0 {
            return Err(CliError::Config(format!("`{key}` must be nonzero")));
        }
        Ok((x, is_alpha))
    }

    pub fn group(&self) -> Result<FuchsianGroup, CliError> {
        let spec = self.require("group")?;
        if spec == "modular" {
            return Ok(FuchsianGroup::modular());
        }
        let text =
            fs::read_to_string(spec).map_err(|e| CliError::Config(format!("cannot read group file {spec}: {e}")))?;
        let mut gens = Vec::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let v: Vec<f64> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<Result<_, _>>()
                .map_err(|_| CliError::Config(format!("bad generator line `{line}` in {spec}")))?;
            if v.len() != 4 {
                return Err(CliError::Config(format!("generator line `{line}` needs four entries")));
            }
            gens.push(MoebiusMap::new(v[0], v[1], v[2], v[3])?);
        }
        Ok(FuchsianGroup::generic(&gens)?)
    }

    /// Help text listing every key with its default.
    pub fn help() -> String {
        let mut s = String::from("Configuration keys (file lines or --set overrides, `key=value`, `#` starts a comment):\n");
        for (k, d, doc) in KEYS {
            let d = d.map_or(String::new(), |d| format!(" [default: {d}]"));
            s.push_str(&format!("  {k:<14} {doc}{d}\n"));
        }
        s.push_str("\nExit codes: 0 ok, 2 config, 3 ball overflow, 4 domain, 5 no contraction, 6 near pole.");
        s
    }
}
