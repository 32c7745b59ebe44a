//! Model coverings of an annulus: the strip with its `Z` action and the
//! finite `m`-sheeted power maps.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fiber::{FiberData, LocalTrivialization, Weight};
use crate::forms::C64;

/// Radii `r1~ < r1 < r2 < r2~`: the annulus `M` and a neighbourhood of its closure.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AnnulusRecord", into = "AnnulusRecord")]
pub struct AnnulusPair {
    r1: f64,
    r2: f64,
    r1_outer: f64,
    r2_outer: f64,
}

#[derive(Serialize, Deserialize)]
struct AnnulusRecord {
    r1: f64,
    r2: f64,
    #[serde(rename = "r1~")]
    r1_tilde: f64,
    #[serde(rename = "r2~")]
    r2_tilde: f64,
}

impl TryFrom<AnnulusRecord> for AnnulusPair {
    type Error = Error;
    fn try_from(a: AnnulusRecord) -> Result<Self> {
        AnnulusPair::new(a.r1, a.r2, a.r1_tilde, a.r2_tilde)
    }
}

impl From<AnnulusPair> for AnnulusRecord {
    fn from(a: AnnulusPair) -> Self {
        AnnulusRecord {
            r1: a.r1,
            r2: a.r2,
            r1_tilde: a.r1_outer,
            r2_tilde: a.r2_outer,
        }
    }
}

impl AnnulusPair {
    pub fn new(r1: f64, r2: f64, r1_tilde: f64, r2_tilde: f64) -> Result<Self> {
        if !(0.0 < r1_tilde && r1_tilde < r1 && r1 < r2 && r2 < r2_tilde && r2_tilde.is_finite()) {
            return Err(Error::invalid(format!(
                "annulus radii must satisfy 0 < r1~ < r1 < r2 < r2~, got {r1_tilde}, {r1}, {r2}, {r2_tilde}"
            )));
        }
        Ok(AnnulusPair {
            r1,
            r2,
            r1_outer: r1_tilde,
            r2_outer: r2_tilde,
        })
    }

    pub fn r1(&self) -> f64 {
        self.r1
    }

    pub fn r2(&self) -> f64 {
        self.r2
    }

    pub fn r1_tilde(&self) -> f64 {
        self.r1_outer
    }

    pub fn r2_tilde(&self) -> f64 {
        self.r2_outer
    }

    /// `r1 < |z| < r2`.
    pub fn contains(&self, z: C64) -> bool {
        let r = z.norm();
        r > self.r1 && r < self.r2
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum CoveringKind {
    /// `w -> e^{iw}` from a horizontal strip, deck group `Z` acting by `w -> w + 2 pi`.
    StripZ,
    /// `zeta' -> zeta'^m`, deck group `Z/m` acting by rotation.
    Finite { m: u32 },
}

/// A model covering of an annulus, with base point `o` upstairs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoveringSpec {
    pub kind: CoveringKind,
    pub annulus: AnnulusPair,
    pub base_point: C64,
}

fn check_base(z: C64) -> Result<()> {
    if !(z.re.is_finite() && z.im.is_finite()) || z.norm() == 0.0 {
        return Err(Error::invalid(format!("base point {z} must be finite and nonzero")));
    }
    Ok(())
}

impl CoveringSpec {
    /// Base point defaults to the principal preimage of `sqrt(r1 r2)`.
    pub fn new(kind: CoveringKind, annulus: AnnulusPair) -> Result<Self> {
        if let CoveringKind::Finite { m } = kind {
            if m == 0 {
                return Err(Error::invalid("sheet count m must be >= 1"));
            }
        }
        let mut cov = CoveringSpec {
            kind,
            annulus,
            base_point: C64::new(0.0, 0.0),
        };
        cov.base_point = cov.fiber_point(C64::new((annulus.r1 * annulus.r2).sqrt(), 0.0), 0)?;
        Ok(cov)
    }

    pub fn strip(annulus: AnnulusPair) -> Self {
        Self::new(CoveringKind::StripZ, annulus).expect("strip covering")
    }

    pub fn finite(m: u32, annulus: AnnulusPair) -> Result<Self> {
        Self::new(CoveringKind::Finite { m }, annulus)
    }

    pub fn with_base_point(mut self, o: C64) -> Self {
        self.base_point = o;
        self
    }

    pub fn sheets(&self) -> Option<u32> {
        match self.kind {
            CoveringKind::StripZ => None,
            CoveringKind::Finite { m } => Some(m),
        }
    }

    /// Window of fiber labels: `[-K, K]` on the strip, all classes `0..m` otherwise.
    pub fn fiber_indices(&self, k: usize) -> Vec<i64> {
        match self.kind {
            CoveringKind::StripZ => (-(k as i64)..=k as i64).collect(),
            CoveringKind::Finite { m } => (0..m as i64).collect(),
        }
    }

    /// Fiber point with label `k` over `z` in the principal labelling.
    pub fn fiber_point(&self, z: C64, k: i64) -> Result<C64> {
        check_base(z)?;
        Ok(self.chart_point(z.arg(), z.norm(), k))
    }

    /// Fiber point over `|z| e^{i arg}` for an explicit argument branch.
    pub(crate) fn chart_point(&self, arg: f64, modulus: f64, k: i64) -> C64 {
        match self.kind {
            CoveringKind::StripZ => C64::new(arg + 2.0 * PI * k as f64, -modulus.ln()),
            CoveringKind::Finite { m } => {
                let mf = m as f64;
                let kk = k.rem_euclid(m as i64) as f64;
                C64::from_polar(modulus.powf(1.0 / mf), (arg + 2.0 * PI * kk) / mf)
            }
        }
    }

    /// The window of the fiber over `z`, in label order.
    pub fn fiber_points(&self, z: C64, k: usize) -> Result<Vec<C64>> {
        check_base(z)?;
        Ok(self
            .fiber_indices(k)
            .into_iter()
            .map(|j| self.chart_point(z.arg(), z.norm(), j))
            .collect())
    }

    pub fn project(&self, y: C64) -> C64 {
        match self.kind {
            CoveringKind::StripZ => (C64::new(0.0, 1.0) * y).exp(),
            CoveringKind::Finite { m } => y.powu(m),
        }
    }

    /// The deck generator applied `h` times.
    pub fn deck(&self, y: C64, h: i64) -> C64 {
        match self.kind {
            CoveringKind::StripZ => y + 2.0 * PI * h as f64,
            CoveringKind::Finite { m } => {
                y * C64::from_polar(1.0, 2.0 * PI * h.rem_euclid(m as i64) as f64 / m as f64)
            }
        }
    }

    /// Path distance: Euclidean on the strip, flat log-polar length upstairs
    /// for the power maps.
    pub fn path_distance(&self, a: C64, b: C64) -> f64 {
        match self.kind {
            CoveringKind::StripZ => (a - b).norm(),
            CoveringKind::Finite { .. } => {
                let dl = b.norm().ln() - a.norm().ln();
                let da = (b.arg() - a.arg()).rem_euclid(2.0 * PI);
                let da = da.min(2.0 * PI - da);
                (dl * dl + da * da).sqrt()
            }
        }
    }

    /// Label of the fiber point `y` in the principal labelling over `r(y)`.
    pub fn label(&self, y: C64) -> i64 {
        let z = self.project(y);
        match self.kind {
            CoveringKind::StripZ => ((y.re - z.arg()) / (2.0 * PI)).round() as i64,
            CoveringKind::Finite { m } => {
                let mf = m as f64;
                (((y.arg() * mf - z.arg()) / (2.0 * PI)).round() as i64).rem_euclid(m as i64)
            }
        }
    }

    pub fn weight_at(&self, weight: &Weight, y: C64) -> f64 {
        weight.at_distance(self.path_distance(weight.base_point, y))
    }
}

/// Restriction of a covering function to the window of the fiber over `z`.
pub fn restriction(
    f: impl Fn(C64) -> C64,
    cov: &CoveringSpec,
    z: C64,
    k: usize,
    weight: &Weight,
) -> Result<FiberData> {
    let pts = cov.fiber_points(z, k)?;
    FiberData::new(
        z,
        cov.fiber_indices(k),
        pts.iter().map(|&y| f(y)).collect(),
        pts.iter().map(|&y| cov.weight_at(weight, y)).collect(),
    )
}

/// Cardinal kernel used by the strip interpolator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum CardinalKernel {
    /// `sinc(t - k)`.
    #[default]
    Sinc,
    /// `sinc(t - k) exp(-((t - k) / width)^2)`: still cardinal, entire and
    /// deck-equivariant, but with Gaussian decay away from the fiber point.
    GaussSinc { width: f64 },
}

/// `sin(pi x) / (pi x)` for complex `x`.
pub fn sinc(x: C64) -> C64 {
    if x.norm() < 1e-6 {
        let px2 = (PI * x) * (PI * x);
        return 1.0 - px2 / 6.0 + px2 * px2 / 120.0;
    }
    (PI * x).sin() / (PI * x)
}

/// An interpolation operator `L_z` for the fiber over `z`.
#[derive(Clone, Debug, PartialEq)]
pub struct InterpolationOperator {
    cov: CoveringSpec,
    z: C64,
    window: usize,
    kernel: CardinalKernel,
    indices: Vec<i64>,
    nodes: Vec<C64>,
}

/// Interpolator with the plain sinc basis on the strip.
pub fn build_interpolator(cov: &CoveringSpec, z: C64, k: i64) -> Result<InterpolationOperator> {
    build_interpolator_with_kernel(cov, z, k, CardinalKernel::Sinc)
}

pub fn build_interpolator_with_kernel(
    cov: &CoveringSpec,
    z: C64,
    k: i64,
    kernel: CardinalKernel,
) -> Result<InterpolationOperator> {
    if k <= 0 {
        return Err(Error::invalid(format!("window K must be positive, got {k}")));
    }
    if let CardinalKernel::GaussSinc { width } = kernel {
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::invalid("Gaussian width must be positive"));
        }
    }
    let nodes = cov.fiber_points(z, k as usize)?;
    Ok(InterpolationOperator {
        cov: *cov,
        z,
        window: k as usize,
        kernel,
        indices: cov.fiber_indices(k as usize),
        nodes,
    })
}

impl InterpolationOperator {
    pub fn covering(&self) -> &CoveringSpec {
        &self.cov
    }

    pub fn base_point(&self) -> C64 {
        self.z
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn indices(&self) -> &[i64] {
        &self.indices
    }

    pub fn nodes(&self) -> &[C64] {
        &self.nodes
    }

    /// Basis function with label `k` at the covering point `y`.
    pub fn basis(&self, k: i64, y: C64) -> C64 {
        match self.cov.kind {
            CoveringKind::StripZ => {
                let w0 = self.nodes[self.window];
                let s = (y - w0) / (2.0 * PI) - k as f64;
                let b = sinc(s);
                match self.kernel {
                    CardinalKernel::Sinc => b,
                    CardinalKernel::GaussSinc { width } => b * (-(s / width) * (s / width)).exp(),
                }
            }
            CoveringKind::Finite { m } => {
                let yk = self.nodes[k.rem_euclid(m as i64) as usize];
                let q = y / yk;
                let mut acc = C64::new(0.0, 0.0);
                let mut pow = C64::new(1.0, 0.0);
                for _ in 0..m {
                    acc += pow;
                    pow *= q;
                }
                acc / m as f64
            }
        }
    }

    /// `(L_z h)(y) = sum_k h_k B_k(y)` for data aligned with `indices()`.
    pub fn apply(&self, h: &[C64], y: C64) -> Result<C64> {
        if h.len() != self.indices.len() {
            return Err(Error::DimensionMismatch {
                expected: self.indices.len(),
                got: h.len(),
            });
        }
        Ok(self
            .indices
            .iter()
            .zip(h)
            .filter(|(_, v)| **v != C64::new(0.0, 0.0))
            .map(|(&k, v)| v * self.basis(k, y))
            .sum())
    }

    /// Applies to fiber data, matching labels.
    pub fn apply_data(&self, d: &FiberData, y: C64) -> Result<C64> {
        if d.indices() != self.indices.as_slice() {
            return Err(Error::invalid("fiber data window does not match the interpolator"));
        }
        self.apply(d.values(), y)
    }
}

/// `max(sup_h sum_g |S(h,g)| phi(g)/phi(h), sup_g sum_h |S(h,g)|)`.
pub fn b_norm(s: &[Vec<C64>], phi: &[f64]) -> Result<f64> {
    let n = s.len();
    if phi.len() != n || s.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: phi.len(),
        });
    }
    let mut rows = 0.0_f64;
    for h in 0..n {
        let r: f64 = (0..n).map(|g| s[h][g].norm() * phi[g] / phi[h]).sum();
        rows = rows.max(r);
    }
    let mut cols = 0.0_f64;
    for g in 0..n {
        let c: f64 = (0..n).map(|h| s[h][g].norm()).sum();
        cols = cols.max(c);
    }
    Ok(rows.max(cols))
}

/// B-norm of `S(h, g) = B_h(fiber point g over z')`.
pub fn interp_matrix_b_norm(op: &InterpolationOperator, z_prime: C64, phi: &[f64]) -> Result<f64> {
    let pts = op.cov.fiber_points(z_prime, op.window)?;
    let s: Vec<Vec<C64>> = op
        .indices
        .iter()
        .map(|&h| pts.iter().map(|&y| op.basis(h, y)).collect())
        .collect();
    b_norm(&s, phi)
}

/// An open arc of the annulus with its own continuous argument branch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub start: f64,
    pub end: f64,
}

impl Arc {
    /// The representative of `arg z` inside `(start, end)`.
    pub fn arg(&self, z: C64) -> Option<f64> {
        let mut t = z.arg();
        while t <= self.start {
            t += 2.0 * PI;
        }
        while t - 2.0 * PI > self.start {
            t -= 2.0 * PI;
        }
        (t < self.end).then_some(t)
    }
}

/// The annulus covered by arcs, with the covering trivialized over each arc.
#[derive(Clone, Debug, PartialEq)]
pub struct ArcCover {
    pub cov: CoveringSpec,
    pub arcs: Vec<Arc>,
    pub window: usize,
    cocycle: Vec<Vec<i64>>,
}

impl ArcCover {
    /// Three arcs of angular width `2 pi / 3 + 0.4` starting at `-0.2`.
    pub fn three_arcs(cov: &CoveringSpec, window: usize) -> Self {
        let d = 2.0 * PI / 3.0;
        let arcs = (0..3)
            .map(|i| Arc {
                start: i as f64 * d - 0.2,
                end: (i + 1) as f64 * d + 0.2,
            })
            .collect();
        Self::new(cov, arcs, window)
    }

    /// Cocycle read off from the argument branches on each overlap.
    pub fn new(cov: &CoveringSpec, arcs: Vec<Arc>, window: usize) -> Self {
        let n = arcs.len();
        let mut cocycle = vec![vec![0; n]; n];
        for i in 0..n {
            for j in 0..n {
                if let Some(z) = overlap_point(&arcs[i], &arcs[j]) {
                    let (ai, aj) = (arcs[i].arg(z).unwrap(), arcs[j].arg(z).unwrap());
                    cocycle[i][j] = ((ai - aj) / (2.0 * PI)).round() as i64;
                }
            }
        }
        ArcCover {
            cov: *cov,
            arcs,
            window,
            cocycle,
        }
    }

    /// Replaces the transition data, keeping the geometric charts.
    pub fn with_cocycle(mut self, c: Vec<Vec<i64>>) -> Result<Self> {
        let n = self.arcs.len();
        if c.len() != n || c.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: c.len(),
            });
        }
        self.cocycle = c;
        Ok(self)
    }

    pub fn cocycle(&self) -> &[Vec<i64>] {
        &self.cocycle
    }

    fn reference_base(&self) -> C64 {
        C64::new((self.cov.annulus.r1 * self.cov.annulus.r2).sqrt(), 0.0)
    }
}

/// A point of the unit circle in both arcs, if any (sampled midpoint of the overlap).
fn overlap_point(a: &Arc, b: &Arc) -> Option<C64> {
    let steps = 4096;
    let mut first = None;
    let mut last = None;
    for s in 0..steps {
        let t = a.start + (a.end - a.start) * (s as f64 + 0.5) / steps as f64;
        let z = C64::from_polar(1.0, t);
        if b.arg(z).is_some() {
            first.get_or_insert(t);
            last = Some(t);
        } else if first.is_some() {
            break;
        }
    }
    Some(C64::from_polar(1.0, 0.5 * (first? + last?)))
}

impl LocalTrivialization for ArcCover {
    fn patch_count(&self) -> usize {
        self.arcs.len()
    }

    fn contains(&self, i: usize, z: C64) -> bool {
        z.norm() > 0.0 && self.arcs[i].arg(z).is_some()
    }

    fn indices(&self) -> Vec<i64> {
        self.cov.fiber_indices(self.window)
    }

    fn chart(&self, i: usize, z: C64, k: i64) -> C64 {
        let arg = self.arcs[i].arg(z).unwrap_or(f64::NAN);
        self.cov.chart_point(arg, z.norm(), k)
    }

    fn transition(&self, i: usize, j: usize) -> i64 {
        self.cocycle[i][j]
    }

    fn act(&self, c: i64, k: i64) -> Option<i64> {
        match self.cov.kind {
            CoveringKind::StripZ => {
                let t = k - c;
                (t.unsigned_abs() as usize <= self.window).then_some(t)
            }
            CoveringKind::Finite { m } => Some((k - c).rem_euclid(m as i64)),
        }
    }

    fn distance(&self, a: C64, b: C64) -> f64 {
        self.cov.path_distance(a, b)
    }

    fn reference_fiber(&self) -> Vec<C64> {
        self.fiber(self.reference_base())
    }

    fn fiber(&self, z: C64) -> Vec<C64> {
        self.indices()
            .into_iter()
            .map(|k| self.cov.chart_point(z.arg(), z.norm(), k))
            .collect()
    }
}

/// Deck group of a glued covering.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum DeckGroup {
    Integers,
    Cyclic { m: u32 },
}

impl DeckGroup {
    fn reduce(&self, d: i64) -> i64 {
        match *self {
            DeckGroup::Integers => d,
            DeckGroup::Cyclic { m } => d.rem_euclid(m as i64),
        }
    }
}

/// Result of gluing `U_i x G` along a cocycle and lifting the generating loop.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonodromyReport {
    pub group: DeckGroup,
    /// `c_12 + c_23 + c_31`, reduced in the group.
    pub monodromy: i64,
    /// Sheet shift obtained by lifting the loop through the glued charts.
    pub lifted_monodromy: i64,
    /// Deck shift of the loop lifted by continuation in the direct model.
    pub direct_generator: i64,
    pub matches_direct: bool,
    /// Number of sheets (`None` for `Z`).
    pub sheets: Option<u64>,
    /// Number of connected components (`None` when infinite).
    pub components: Option<u64>,
    pub connected: bool,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Checks `c_ii = 0`, `c_ij = -c_ji` and `c_ij + c_jk = c_ik` wherever the
/// three arcs share a point.
pub fn validate_cocycle(arcs: &[Arc], c: &[Vec<i64>], group: DeckGroup) -> Result<()> {
    let n = arcs.len();
    if c.len() != n || c.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidCocycle(format!("expected a {n} x {n} matrix")));
    }
    for i in 0..n {
        if group.reduce(c[i][i]) != 0 {
            return Err(Error::InvalidCocycle(format!("c_{i}{i} must vanish")));
        }
        for j in 0..n {
            if overlap_point(&arcs[i], &arcs[j]).is_some() && group.reduce(c[i][j] + c[j][i]) != 0 {
                return Err(Error::InvalidCocycle(format!("c_{i}{j} + c_{j}{i} != 0")));
            }
        }
    }
    let steps = 2048;
    for s in 0..steps {
        let z = C64::from_polar(1.0, 2.0 * PI * (s as f64 + 0.5) / steps as f64);
        let inside: Vec<usize> = (0..n).filter(|&i| arcs[i].arg(z).is_some()).collect();
        for &i in &inside {
            for &j in &inside {
                for &k in &inside {
                    if group.reduce(c[i][j] + c[j][k] - c[i][k]) != 0 {
                        return Err(Error::InvalidCocycle(format!(
                            "c_{i}{j} + c_{j}{k} != c_{i}{k} on a triple overlap"
                        )));
                    }
                }
            }
        }
    }
    Ok(())
}

/// Cocycle matrix for three arcs from `(c_12, c_23, c_31)`.
pub fn three_arc_cocycle(c12: i64, c23: i64, c31: i64) -> Vec<Vec<i64>> {
    vec![vec![0, c12, -c31], vec![-c12, 0, c23], vec![c31, -c23, 0]]
}

/// Glues `U_i x G` along `c` for the three-arc cover of the annulus, lifts
/// the generating loop through the glued charts and compares with the deck
/// generator of the direct model.
pub fn cocycle_roundtrip(annulus: &AnnulusPair, c: &[Vec<i64>], group: DeckGroup) -> Result<MonodromyReport> {
    let kind = match group {
        DeckGroup::Integers => CoveringKind::StripZ,
        DeckGroup::Cyclic { m } => CoveringKind::Finite { m },
    };
    let cov = CoveringSpec::new(kind, *annulus)?;
    let cover = ArcCover::three_arcs(&cov, 0).with_cocycle(c.to_vec())?;
    validate_cocycle(&cover.arcs, c, group)?;
    let monodromy = group.reduce(c[0][1] + c[1][2] + c[2][0]);

    // loop lifting through the glued charts: (i, z, q) ~ (j, z, q + c_ij)
    let steps = 720;
    let radius = (annulus.r1 * annulus.r2).sqrt();
    let theta0 = PI / 3.0;
    let mut patch = 0usize;
    let mut sheet = 0i64;
    for s in 1..=steps {
        let z = C64::from_polar(radius, theta0 + 2.0 * PI * s as f64 / steps as f64);
        if cover.contains(patch, z) {
            continue;
        }
        let prev = C64::from_polar(radius, theta0 + 2.0 * PI * (s - 1) as f64 / steps as f64);
        let next = (0..3)
            .find(|&j| cover.contains(j, z) && cover.contains(j, prev))
            .ok_or_else(|| Error::InvalidCocycle("loop leaves every patch".into()))?;
        sheet = group.reduce(sheet + c[patch][next]);
        patch = next;
    }
    while patch != 0 {
        // the loop ends in U_1; switch back if it was last tracked elsewhere
        let z = C64::from_polar(radius, theta0);
        if !cover.contains(0, z) {
            return Err(Error::InvalidCocycle("loop end outside U_1".into()));
        }
        sheet = group.reduce(sheet + c[patch][0]);
        patch = 0;
    }
    let lifted = group.reduce(sheet);

    // continuation of the same loop in the direct model
    let start = cov.fiber_point(C64::from_polar(radius, theta0), 0)?;
    let mut y = start;
    for s in 1..=steps {
        let z = C64::from_polar(radius, theta0 + 2.0 * PI * s as f64 / steps as f64);
        let k_span = match cov.kind {
            CoveringKind::StripZ => {
                let base = ((y.re - z.arg()) / (2.0 * PI)).round() as i64;
                (base - 1..=base + 1).collect::<Vec<_>>()
            }
            CoveringKind::Finite { m } => (0..m as i64).collect(),
        };
        y = k_span
            .into_iter()
            .map(|k| cov.chart_point(z.arg(), z.norm(), k))
            .min_by(|a, b| (a - y).norm().total_cmp(&(b - y).norm()))
            .expect("nonempty fiber");
    }
    let direct = match cov.kind {
        CoveringKind::StripZ => ((y - start).re / (2.0 * PI)).round() as i64,
        CoveringKind::Finite { m } => {
            let r = y / start;
            ((r.arg() * m as f64 / (2.0 * PI)).round() as i64).rem_euclid(m as i64)
        }
    };

    let (sheets, components) = match group {
        DeckGroup::Integers => (None, (monodromy != 0).then(|| monodromy.unsigned_abs())),
        DeckGroup::Cyclic { m } => (Some(m as u64), Some(gcd(monodromy as u64, m as u64))),
    };
    Ok(MonodromyReport {
        group,
        monodromy,
        lifted_monodromy: lifted,
        direct_generator: direct,
        matches_direct: monodromy == direct && lifted == direct,
        sheets,
        components,
        connected: components == Some(1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fiber::{direct_image, WeightKind};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn annulus() -> AnnulusPair {
        AnnulusPair::new(0.8, 1.3, 0.6, 1.5).unwrap()
    }

    #[test]
    fn annulus_validation() {
        assert!(AnnulusPair::new(1.0, 0.5, 0.2, 2.0).is_err());
        assert!(AnnulusPair::new(0.5, 1.0, 0.6, 2.0).is_err());
        assert!(AnnulusPair::new(0.5, 1.0, 0.0, 2.0).is_err());
        let s = serde_json::to_string(&annulus()).unwrap();
        assert_eq!(s, r#"{"r1":0.8,"r2":1.3,"r1~":0.6,"r2~":1.5}"#);
    }

    #[test]
    fn fiber_point_examples() {
        let f2 = CoveringSpec::finite(2, annulus()).unwrap();
        let pts = f2.fiber_points(c(1., 0.), 0).unwrap();
        assert!((pts[0] - c(1., 0.)).norm() < 1e-15 && (pts[1] - c(-1., 0.)).norm() < 1e-15);
        let s = CoveringSpec::strip(annulus());
        let pts = s.fiber_points(c(1., 0.), 1).unwrap();
        assert_eq!(pts, vec![c(-2. * PI, 0.), c(0., 0.), c(2. * PI, 0.)]);
        let pts = s.fiber_points(c(0., 1.), 0).unwrap();
        assert!((pts[0] - c(PI / 2., 0.)).norm() < 1e-15);
        assert!(s.fiber_points(c(0., 0.), 1).is_err());
    }

    #[test]
    fn projection_deck_and_labels() {
        for cov in [CoveringSpec::strip(annulus()), CoveringSpec::finite(5, annulus()).unwrap()] {
            let z = c(0.3, -1.0);
            for (k, y) in cov.fiber_indices(3).into_iter().zip(cov.fiber_points(z, 3).unwrap()) {
                assert!((cov.project(y) - z).norm() < 1e-13);
                assert!((cov.project(cov.deck(y, 1)) - z).norm() < 1e-13);
                assert_eq!(cov.label(y), k);
            }
        }
    }

    #[test]
    fn path_distance_examples() {
        let s = CoveringSpec::strip(annulus());
        assert_eq!(s.path_distance(c(0., 0.), c(2. * PI, 0.)), 2. * PI);
        assert_eq!(s.path_distance(c(1., 0.3), c(1., 0.3)), 0.0);
        let f3 = CoveringSpec::finite(3, annulus()).unwrap();
        let d = f3.path_distance(c(1., 0.), C64::from_polar(1.0, 2. * PI / 3.));
        assert!((d - 2. * PI / 3.).abs() < 1e-14);
    }

    #[test]
    fn default_base_point() {
        let s = CoveringSpec::strip(annulus());
        assert!((s.base_point - c(0., -(0.8f64 * 1.3).sqrt().ln())).norm() < 1e-15);
    }

    #[test]
    fn strip_interpolator_pinned_value() {
        let s = CoveringSpec::strip(annulus());
        let op = build_interpolator(&s, c(1., 0.), 1).unwrap();
        let w0 = op.nodes()[1];
        let v = op.apply(&[c(1., 0.), c(2., 0.), c(-1., 0.)], w0 + PI).unwrap();
        assert!((v - c(0.4244131815783876, 0.)).norm() < 1e-15, "{v}");
        assert!((op.basis(0, w0 + PI) - c(2. / PI, 0.)).norm() < 1e-15);
        assert!((op.basis(-1, w0 + PI) - c(-2. / (3. * PI), 0.)).norm() < 1e-15);
        assert!(build_interpolator(&s, c(1., 0.), 0).is_err());
    }

    #[test]
    fn cardinal_property_both_models() {
        let z = c(-0.4, 0.9);
        for (cov, kernel) in [
            (CoveringSpec::strip(annulus()), CardinalKernel::Sinc),
            (CoveringSpec::strip(annulus()), CardinalKernel::GaussSinc { width: 2.0 }),
            (CoveringSpec::finite(3, annulus()).unwrap(), CardinalKernel::Sinc),
        ] {
            let op = build_interpolator_with_kernel(&cov, z, 6, kernel).unwrap();
            for (j, &y) in op.nodes().iter().enumerate() {
                for (i, &k) in op.indices().iter().enumerate() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((op.basis(k, y) - c(expect, 0.)).norm() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn finite_reproduces_identity() {
        let cov = CoveringSpec::finite(3, annulus()).unwrap();
        let z = c(1.1, 0.2);
        let op = build_interpolator(&cov, z, 1).unwrap();
        let h: Vec<C64> = op.nodes().to_vec();
        for y in [c(0.3, 0.7), c(-2., 1.), c(0., 0.)] {
            assert!((op.apply(&h, y).unwrap() - y).norm() < 1e-14);
        }
    }

    #[test]
    fn restriction_examples() {
        let s = CoveringSpec::strip(annulus());
        let w = Weight::constant();
        let z = c(0.5, 0.8);
        let d = restriction(|_| c(1., 0.), &s, z, 3, &w).unwrap();
        assert!(d.values().iter().all(|&v| v == c(1., 0.)));
        let d = restriction(|y| (c(0., 1.) * y).exp(), &s, z, 3, &w).unwrap();
        for v in d.values() {
            assert!((v - z).norm() < 1e-13);
        }
    }

    #[test]
    fn b_norm_examples() {
        let cov = CoveringSpec::finite(3, annulus()).unwrap();
        let op = build_interpolator(&cov, c(1., 0.), 1).unwrap();
        let one = vec![1.0; 3];
        assert!((interp_matrix_b_norm(&op, c(1., 0.), &one).unwrap() - 1.0).abs() < 1e-13);
        let v = interp_matrix_b_norm(&op, c(1.1, 0.), &one).unwrap();
        assert!((v - 1.070504512375454).abs() < 1e-12, "{v}");
        assert_eq!(b_norm(&vec![vec![c(0., 0.); 3]; 3], &one).unwrap(), 0.0);
    }

    #[test]
    fn arc_cover_cocycle_is_winding() {
        let cov = CoveringSpec::strip(annulus());
        let cover = ArcCover::three_arcs(&cov, 4);
        assert_eq!(cover.cocycle(), three_arc_cocycle(0, 0, 1).as_slice());
        let grid: Vec<C64> = (0..60).map(|j| C64::from_polar(1.05, 2. * PI * j as f64 / 60. + 0.01)).collect();
        let img = direct_image(|y| cov.project(y), &cover, &grid).unwrap();
        assert!(img.max_residual <= 1e-12);
        let bad = cover.clone().with_cocycle(three_arc_cocycle(0, 0, 0)).unwrap();
        let sheet = |y: C64| c(cov.label(y) as f64, 0.);
        assert!(matches!(direct_image(sheet, &bad, &grid), Err(Error::InconsistentCocycle { .. })));
    }

    #[test]
    fn roundtrip_examples() {
        let a = annulus();
        let r = cocycle_roundtrip(&a, &three_arc_cocycle(0, 0, 1), DeckGroup::Integers).unwrap();
        assert_eq!((r.monodromy, r.lifted_monodromy, r.direct_generator), (1, 1, 1));
        assert!(r.matches_direct && r.connected);
        let r = cocycle_roundtrip(&a, &three_arc_cocycle(0, 0, 0), DeckGroup::Integers).unwrap();
        assert_eq!(r.monodromy, 0);
        assert_eq!(r.components, None);
        assert!(!r.connected && !r.matches_direct);
        let r = cocycle_roundtrip(&a, &three_arc_cocycle(0, 0, 1), DeckGroup::Cyclic { m: 3 }).unwrap();
        assert_eq!((r.monodromy, r.direct_generator, r.sheets, r.components), (1, 1, Some(3), Some(1)));
        assert!(r.matches_direct);
        let r = cocycle_roundtrip(&a, &three_arc_cocycle(1, 1, 1), DeckGroup::Cyclic { m: 3 }).unwrap();
        assert_eq!((r.monodromy, r.components), (0, Some(3)));
        let bad = vec![vec![0, 1, 0], vec![0, 0, 0], vec![0, 0, 0]];
        assert!(matches!(cocycle_roundtrip(&a, &bad, DeckGroup::Integers), Err(Error::InvalidCocycle(_))));
    }

    #[test]
    fn weights_on_strip() {
        let s = CoveringSpec::strip(annulus());
        let w = Weight::new(WeightKind::Polynomial { alpha: 2.0 }, s.base_point).unwrap();
        assert_eq!(s.weight_at(&w, s.base_point), 1.0);
    }

    proptest! {
        #[test]
        fn strip_deck_equivariance(x in -20.0f64..20.0, y in -0.2f64..0.2, k in -5i64..5) {
            let s = CoveringSpec::strip(annulus());
            for kernel in [CardinalKernel::Sinc, CardinalKernel::GaussSinc { width: 2.0 }] {
                let op = build_interpolator_with_kernel(&s, c(0.7, 0.6), 8, kernel).unwrap();
                let w = c(x, y);
                let a = op.basis(k, w + 2. * PI);
                let b = op.basis(k - 1, w);
                prop_assert!((a - b).norm() <= 1e-13 * a.norm().max(1.0));
            }
        }

        #[test]
        fn basis_is_holomorphic(x in -10.0f64..10.0, y in -0.25f64..0.25, k in -3i64..3) {
            let s = CoveringSpec::strip(annulus());
            let op = build_interpolator(&s, c(0.9, -0.3), 4).unwrap();
            let h = 1e-5;
            let w = c(x, y);
            let dx = (op.basis(k, w + h) - op.basis(k, w - h)) / (2. * h);
            let dy = (op.basis(k, w + c(0., h)) - op.basis(k, w - c(0., h))) / (2. * h);
            // d/d conj(w) = (d/dx + i d/dy) / 2
            prop_assert!((0.5 * (dx + c(0., 1.) * dy)).norm() < 1e-8);
        }

        #[test]
        fn restriction_inverts_interpolation(
            vals in proptest::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 5),
            arg in -3.0f64..3.0, r in 0.81f64..1.29,
        ) {
            let z = C64::from_polar(r, arg);
            for cov in [CoveringSpec::strip(annulus()), CoveringSpec::finite(5, annulus()).unwrap()] {
                let op = build_interpolator(&cov, z, 2).unwrap();
                let h: Vec<C64> = vals.iter().map(|&(a, b)| c(a, b)).collect();
                let d = restriction(|y| op.apply(&h, y).unwrap(), &cov, z, 2, &Weight::constant()).unwrap();
                for (u, v) in d.values().iter().zip(&h) {
                    prop_assert!((u - v).norm() <= 1e-13 * v.norm().max(1.0));
                }
            }
        }
    }
}
