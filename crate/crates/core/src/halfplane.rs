//! Upper half-plane geometry, Moebius maps, Fuchsian groups and enumeration
//! of group elements in hyperbolic balls around a base point.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::io::Write;

use num_complex::Complex64;
use num_integer::Integer;

use crate::error::{Error, Result};

/// Sign-normalization and determinant tolerance.
pub const MAP_TOL: f64 = 1e-12;
/// Displacement below which a group element is counted as fixing the base point.
pub const STABILIZER_TOL: f64 = 1e-9;
/// Quantization step for hashing real matrix entries.
const KEY_SCALE: f64 = 1e9;
pub const DEFAULT_BALL_CAP: usize = 4_000_000;
const STABILIZER_DEPTH: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HPoint {
    pub x: f64,
    pub y: f64,
}

impl HPoint {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !(y > 0.0) || !x.is_finite() || !y.is_finite() {
            return Err(Error::DomainError(format!("point {x} + {y}i is not in the upper half-plane")));
        }
        Ok(Self { x, y })
    }

    pub fn from_complex(z: Complex64) -> Result<Self> {
        Self::new(z.re, z.im)
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.x, self.y)
    }
}

impl fmt::Display for HPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:+}i", self.x, self.y)
    }
}

/// Element of PSL(2, R), stored with its first entry of modulus above
/// [`MAP_TOL`] positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoebiusMap {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl MoebiusMap {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let det = a * d - b * c;
        if (det - 1.0).abs() > MAP_TOL * (1.0 + a.abs().max(b.abs()).max(c.abs()).max(d.abs())) {
            return Err(Error::InvalidGroup(format!("determinant {det} != 1")));
        }
        Ok(Self { a, b, c, d }.normalized())
    }

    pub const fn identity() -> Self {
        Self { a: 1.0, b: 0.0, c: 0.0, d: 1.0 }
    }

    /// Translation z -> z + 1.
    pub const fn t() -> Self {
        Self { a: 1.0, b: 1.0, c: 0.0, d: 1.0 }
    }

    /// Inversion z -> -1/z, stored as (0, 1, -1, 0).
    pub const fn s() -> Self {
        Self { a: 0.0, b: 1.0, c: -1.0, d: 0.0 }
    }

    pub fn translation(n: f64) -> Self {
        Self { a: 1.0, b: n, c: 0.0, d: 1.0 }
    }

    fn normalized(self) -> Self {
        let lead = [self.a, self.b, self.c, self.d].into_iter().find(|v| v.abs() > MAP_TOL).unwrap_or(1.0);
        if lead < 0.0 {
            Self { a: -self.a, b: -self.b, c: -self.c, d: -self.d }
        } else {
            self
        }
    }

    pub fn inverse(&self) -> Self {
        Self { a: self.d, b: -self.b, c: -self.c, d: self.a }.normalized()
    }

    pub fn apply(&self, z: HPoint) -> HPoint {
        let zc = z.to_complex();
        let w = (zc * self.a + self.b) / (zc * self.c + self.d);
        // Im(gz) = y / |cz + d|^2 avoids cancellation in the imaginary part
        let den = (self.c * z.x + self.d).powi(2) + (self.c * z.y).powi(2);
        HPoint { x: w.re, y: z.y / den }
    }

    pub fn compose(&self, o: &Self) -> Self {
        Self {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
        .normalized()
    }

    fn rounded(self) -> Self {
        Self { a: self.a.round(), b: self.b.round(), c: self.c.round(), d: self.d.round() }
    }

    fn is_integral(&self) -> bool {
        [self.a, self.b, self.c, self.d].iter().all(|v| (v - v.round()).abs() <= MAP_TOL)
    }

    pub fn is_identity(&self) -> bool {
        (self.a - 1.0).abs() <= MAP_TOL && self.b.abs() <= MAP_TOL && self.c.abs() <= MAP_TOL && (self.d - 1.0).abs() <= MAP_TOL
    }

    /// Quantized hash key; equal keys identify equal projective maps.
    pub fn key(&self) -> [i64; 4] {
        [self.a, self.b, self.c, self.d].map(|v| (v * KEY_SCALE).round() as i64)
    }
}

pub fn apply_moebius(m: &MoebiusMap, z: HPoint) -> HPoint {
    m.apply(z)
}

pub fn compose_normalize(m1: &MoebiusMap, m2: &MoebiusMap) -> MoebiusMap {
    m1.compose(m2)
}

/// cosh of the hyperbolic distance.
pub fn cosh_distance(z: HPoint, w: HPoint) -> f64 {
    1.0 + ((z.x - w.x).powi(2) + (z.y - w.y).powi(2)) / (2.0 * z.y * w.y)
}

pub fn hyp_distance(z: HPoint, w: HPoint) -> f64 {
    // 2 asinh(|z - w| / (2 sqrt(y y'))) is accurate for nearby points
    let r = ((z.x - w.x).powi(2) + (z.y - w.y).powi(2)).sqrt();
    2.0 * (r / (2.0 * (z.y * w.y).sqrt())).asinh()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupKind {
    Modular,
    Generic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FuchsianGroup {
    pub kind: GroupKind,
    /// Inverse-closed generator list.
    pub generators: Vec<MoebiusMap>,
    pub arithmetic: bool,
}

impl FuchsianGroup {
    /// PSL(2, Z) generated by S and T.
    pub fn modular() -> Self {
        Self {
            kind: GroupKind::Modular,
            generators: vec![MoebiusMap::s(), MoebiusMap::t(), MoebiusMap::t().inverse()],
            arithmetic: true,
        }
    }

    /// A group given by generators; inverses are added and duplicates dropped.
    pub fn generic(generators: &[MoebiusMap]) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::InvalidGroup("no generators".into()));
        }
        let mut seen = HashSet::new();
        let mut gens = Vec::new();
        for g in generators {
            let g = MoebiusMap::new(g.a, g.b, g.c, g.d)?;
            if g.is_identity() {
                continue;
            }
            for h in [g, g.inverse()] {
                if seen.insert(h.key()) {
                    gens.push(h);
                }
            }
        }
        if gens.is_empty() {
            return Err(Error::InvalidGroup("only identity generators".into()));
        }
        let arithmetic = gens.iter().all(MoebiusMap::is_integral);
        if arithmetic {
            gens.iter_mut().for_each(|g| *g = g.rounded());
        }
        Ok(Self { kind: GroupKind::Generic, generators: gens, arithmetic })
    }

    fn multiply(&self, a: &MoebiusMap, b: &MoebiusMap) -> MoebiusMap {
        let m = a.compose(b);
        if self.arithmetic {
            m.rounded()
        } else {
            m
        }
    }

    /// Largest displacement d(g z0, z0) over the generators.
    pub fn max_displacement(&self, z0: HPoint) -> f64 {
        self.generators.iter().map(|g| hyp_distance(g.apply(z0), z0)).fold(0.0, f64::max)
    }

    /// All distinct elements representable by words of length at most `depth`.
    pub fn words_up_to(&self, depth: usize, cap: usize) -> Result<Vec<MoebiusMap>> {
        let id = MoebiusMap::identity();
        let mut seen: HashSet<[i64; 4]> = HashSet::from([id.key()]);
        let mut out = vec![id];
        let mut frontier = vec![id];
        for _ in 0..depth {
            let mut next = Vec::new();
            for w in &frontier {
                for g in &self.generators {
                    let m = self.multiply(w, g);
                    if seen.insert(m.key()) {
                        next.push(m);
                        out.push(m);
                    }
                }
            }
            if out.len() > cap {
                return Err(Error::BallOverflow { cap, radius: f64::NAN });
            }
            frontier = next;
        }
        Ok(out)
    }
}

/// |{g : g z0 = z0}|, found among words of bounded length and certified by
/// checking that the candidate set is closed under products and inverses.
pub fn stabilizer_order(g: &FuchsianGroup, z0: HPoint) -> Result<usize> {
    Ok(stabilizer(g, z0)?.len())
}

fn stabilizer(g: &FuchsianGroup, z0: HPoint) -> Result<Vec<MoebiusMap>> {
    let words = g.words_up_to(STABILIZER_DEPTH, 2_000_000)?;
    let stab: Vec<MoebiusMap> =
        words.into_iter().filter(|w| hyp_distance(w.apply(z0), z0) < STABILIZER_TOL).collect();
    let keys: HashSet<[i64; 4]> = stab.iter().map(MoebiusMap::key).collect();
    for a in &stab {
        if !keys.contains(&a.inverse().key()) {
            return Err(Error::GroupTooCoarse(STABILIZER_DEPTH));
        }
        for b in &stab {
            if !keys.contains(&g.multiply(a, b).key()) {
                return Err(Error::GroupTooCoarse(STABILIZER_DEPTH));
            }
        }
    }
    Ok(stab)
}

/// Group elements within hyperbolic distance `radius` of a base point.
#[derive(Debug, Clone)]
pub struct OrbitBall {
    pub base: HPoint,
    pub radius: f64,
    pub stabilizer_order: usize,
    /// Elements fixing the base point, identity included.
    pub stabilizer: Vec<MoebiusMap>,
    /// (gamma, d(gamma z0, z0)), ascending in length, stabilizer excluded.
    pub elements: Vec<(MoebiusMap, f64)>,
    pub completeness_margin: f64,
}

impl OrbitBall {
    /// A ball with no diffractive elements, for tests and limiting cases.
    pub fn empty(base: HPoint, radius: f64, stabilizer_order: usize) -> Self {
        Self {
            base,
            radius,
            stabilizer_order,
            stabilizer: vec![MoebiusMap::identity()],
            elements: Vec::new(),
            completeness_margin: 0.0,
        }
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.elements.iter().map(|e| e.1).collect()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// The sub-ball of radius `r <= self.radius`.
    pub fn truncate(&self, r: f64) -> Self {
        let r = r.min(self.radius);
        let n = self.elements.partition_point(|e| e.1 <= r);
        Self { radius: r, elements: self.elements[..n].to_vec(), ..self.clone() }
    }

    /// The `n` shortest elements only. The result is no longer a complete
    /// ball; its radius is the largest kept length.
    pub fn prefix(&self, n: usize) -> Self {
        let n = n.min(self.elements.len());
        let radius = self.elements[..n].last().map_or(0.0, |e| e.1);
        Self { radius, elements: self.elements[..n].to_vec(), ..self.clone() }
    }

    /// Number of elements (stabilizer included) with length at most `l`.
    pub fn count_within(&self, l: f64) -> usize {
        self.stabilizer_order + self.elements.partition_point(|e| e.1 <= l)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "a,b,c,d,length")?;
        for (m, l) in &self.elements {
            writeln!(w, "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}", m.a, m.b, m.c, m.d, l)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BallOptions {
    pub cap: usize,
    /// Number of margin doublings tried before giving up certification.
    pub retries: usize,
}

impl Default for BallOptions {
    fn default() -> Self {
        Self { cap: DEFAULT_BALL_CAP, retries: 3 }
    }
}

pub fn enumerate_orbit_ball(g: &FuchsianGroup, z0: HPoint, radius: f64) -> Result<OrbitBall> {
    enumerate_orbit_ball_with(g, z0, radius, BallOptions::default())
}

pub fn enumerate_orbit_ball_with(
    g: &FuchsianGroup,
    z0: HPoint,
    radius: f64,
    opts: BallOptions,
) -> Result<OrbitBall> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::DomainError(format!("ball radius must be positive, got {radius}")));
    }
    let base_margin = g.max_displacement(z0);
    let reference = if g.kind == GroupKind::Modular || g.arithmetic {
        Some(lattice_ball(z0, radius, opts.cap)?)
    } else {
        None
    };
    let mut margin = base_margin;
    for _ in 0..=opts.retries {
        let found = bfs_ball(g, z0, radius, margin, opts.cap)?;
        let certified = match &reference {
            None => true,
            Some(refset) => {
                let keys: HashSet<[i64; 4]> = found.iter().map(|e| e.0.key()).collect();
                match g.kind {
                    GroupKind::Modular => keys == *refset,
                    // subgroups of PSL(2, Z) only admit an inclusion check
                    GroupKind::Generic => keys.is_subset(refset),
                }
            }
        };
        if certified {
            return Ok(assemble(z0, radius, margin, found));
        }
        margin *= 2.0;
    }
    Err(Error::IncompleteEnumeration(format!(
        "BFS disagrees with lattice recount at radius {radius} after {} margin doublings",
        opts.retries
    )))
}

fn assemble(z0: HPoint, radius: f64, margin: f64, found: Vec<(MoebiusMap, f64)>) -> OrbitBall {
    let (stab, mut elements): (Vec<_>, Vec<_>) = found.into_iter().partition(|e| e.1 < STABILIZER_TOL);
    elements.sort_by(|p, q| p.1.total_cmp(&q.1).then_with(|| p.0.key().cmp(&q.0.key())));
    let mut stabilizer: Vec<MoebiusMap> = stab.into_iter().map(|e| e.0).collect();
    stabilizer.sort_by_key(MoebiusMap::key);
    OrbitBall {
        base: z0,
        radius,
        stabilizer_order: stabilizer.len(),
        stabilizer,
        elements,
        completeness_margin: margin,
    }
}

/// Breadth-first search over right multiplication by generators, keeping
/// words whose displacement stays within `radius + margin`.
fn bfs_ball(
    g: &FuchsianGroup,
    z0: HPoint,
    radius: f64,
    margin: f64,
    cap: usize,
) -> Result<Vec<(MoebiusMap, f64)>> {
    let id = MoebiusMap::identity();
    let mut seen: HashMap<[i64; 4], ()> = HashMap::from([(id.key(), ())]);
    let mut queue = VecDeque::from([id]);
    let mut inside = vec![(id, 0.0)];
    let prune = radius + margin;
    while let Some(w) = queue.pop_front() {
        for gen in &g.generators {
            let m = g.multiply(&w, gen);
            if seen.insert(m.key(), ()).is_some() {
                continue;
            }
            let l = hyp_distance(m.apply(z0), z0);
            if l > prune {
                continue;
            }
            if l <= radius {
                inside.push((m, l));
                if inside.len() > cap {
                    return Err(Error::BallOverflow { cap, radius });
                }
            }
            queue.push_back(m);
        }
        if seen.len() > 8 * cap {
            return Err(Error::BallOverflow { cap, radius });
        }
    }
    Ok(inside)
}

/// Keys of all elements of PSL(2, Z) moving z0 by at most `radius`,
/// enumerated directly over integer matrices.
///
/// With g = [[sqrt y, x/sqrt y], [0, 1/sqrt y]] mapping i to z0, the matrix
/// M = g^-1 gamma g satisfies 2 cosh d(gamma z0, z0) = |M|_F^2.
pub fn lattice_ball(z0: HPoint, radius: f64, cap: usize) -> Result<HashSet<[i64; 4]>> {
    let bound = 2.0 * radius.cosh() * (1.0 + 1e-12);
    let (x, y) = (z0.x, z0.y);
    let mut out = HashSet::new();
    let mut push = |a: i64, b: i64, c: i64, d: i64| -> Result<()> {
        let m11 = a as f64 - c as f64 * x;
        let m12 = (b as f64 + (a - d) as f64 * x - c as f64 * x * x) / y;
        let m21 = c as f64 * y;
        let m22 = c as f64 * x + d as f64;
        let norm = m11 * m11 + m12 * m12 + m21 * m21 + m22 * m22;
        if norm <= bound {
            let m = MoebiusMap { a: a as f64, b: b as f64, c: c as f64, d: d as f64 }.normalized();
            if hyp_distance(m.apply(z0), z0) <= radius {
                out.insert(m.key());
                if out.len() > cap {
                    return Err(Error::BallOverflow { cap, radius });
                }
            }
        }
        Ok(())
    };
    let bmax = (bound.sqrt() * y).ceil() as i64 + 1;
    for b in -bmax..=bmax {
        push(1, b, 0, 1)?;
    }
    let cmax = (bound.sqrt() / y).floor() as i64;
    let root = bound.sqrt();
    for c in 1..=cmax {
        let cf = c as f64;
        let rem = (bound - (cf * y).powi(2)).max(0.0).sqrt();
        let dlo = (-cf * x - rem).floor() as i64;
        let dhi = (-cf * x + rem).ceil() as i64;
        for d in dlo..=dhi {
            if d.gcd(&c) != 1 {
                continue;
            }
            // a d = 1 mod c
            let a0 = if c == 1 { 0 } else { mod_inverse(d.rem_euclid(c), c) };
            let klo = ((cf * x - root - a0 as f64) / cf).floor() as i64;
            let khi = ((cf * x + root - a0 as f64) / cf).ceil() as i64;
            for k in klo..=khi {
                let a = a0 + k * c;
                let num = a * d - 1;
                debug_assert_eq!(num.rem_euclid(c), 0);
                push(a, num / c, c, d)?;
            }
        }
    }
    Ok(out)
}

fn mod_inverse(a: i64, m: i64) -> i64 {
    let e = a.extended_gcd(&m);
    e.x.rem_euclid(m)
}

/// Reduction into the standard fundamental domain of PSL(2, Z).
///
/// Returns (z*, gamma) with gamma z = z*, |Re z*| <= 1/2 and |z*| >= 1.
pub fn reduce_to_fundamental_domain(g: &FuchsianGroup, z: HPoint) -> Result<(HPoint, MoebiusMap)> {
    if g.kind != GroupKind::Modular {
        return Err(Error::NonModularGroup);
    }
    Ok(reduce_modular(z))
}

pub fn reduce_modular(z: HPoint) -> (HPoint, MoebiusMap) {
    let mut w = z;
    let mut gamma = MoebiusMap::identity();
    for _ in 0..10_000 {
        let n = w.x.round();
        if n != 0.0 {
            let t = MoebiusMap::translation(-n);
            w = HPoint { x: w.x - n, y: w.y };
            gamma = t.compose(&gamma).rounded();
        }
        if w.x * w.x + w.y * w.y < 1.0 - 1e-14 {
            w = MoebiusMap::s().apply(w);
            gamma = MoebiusMap::s().compose(&gamma).rounded();
        } else {
            break;
        }
    }
    (w, gamma)
}
