//! Run configuration: one JSON file describing a batch of experiments.

use std::f64::consts::PI;

use holocover::{
    AnnulusPair, CVector, CoveringKind, CoveringSpec, DeckGroup, DefiningFunction, Domain, LeraySection,
    NormExponent, PlanarResolution, SectionKind, TestFunction, WeightKind, C64,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("parse error: {0}")]
    Parse(String),
}

impl From<serde_json::Error> for ConfigError {
    fn from(e: serde_json::Error) -> Self {
        ConfigError::Parse(e.to_string())
    }
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        path: path.into(),
        message: message.into(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    #[serde(default)]
    pub seed: u64,
    pub experiments: Vec<ExperimentConfig>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema != SCHEMA_VERSION {
            return Err(invalid("schema", format!("expected {SCHEMA_VERSION}, got {}", self.schema)));
        }
        let mut seen = std::collections::BTreeSet::new();
        for (i, e) in self.experiments.iter().enumerate() {
            let path = format!("experiments[{i}]");
            let id = e.id();
            if id.is_empty() || !id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
                return Err(invalid(format!("{path}.id"), "ids must be nonempty [A-Za-z0-9_-]"));
            }
            if !seen.insert(id.to_string()) {
                return Err(invalid(format!("{path}.id"), format!("duplicate id {id:?}")));
            }
            e.validate(&path)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "experiment")]
pub enum ExperimentConfig {
    Reconstruct(ReconstructConfig),
    CoveringReconstruct(CoveringReconstructConfig),
    DbarIdentity(DbarIdentityConfig),
    Norms(NormsConfig),
    Dilation(DilationConfig),
    InterpCheck(InterpCheckConfig),
    Cocycle(CocycleConfig),
    Convergence(ConvergenceConfig),
}

impl ExperimentConfig {
    pub fn id(&self) -> &str {
        match self {
            ExperimentConfig::Reconstruct(c) => &c.id,
            ExperimentConfig::CoveringReconstruct(c) => &c.id,
            ExperimentConfig::DbarIdentity(c) => &c.id,
            ExperimentConfig::Norms(c) => &c.id,
            ExperimentConfig::Dilation(c) => &c.id,
            ExperimentConfig::InterpCheck(c) => &c.id,
            ExperimentConfig::Cocycle(c) => &c.id,
            ExperimentConfig::Convergence(c) => &c.id,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentConfig::Reconstruct(_) => "reconstruct",
            ExperimentConfig::CoveringReconstruct(_) => "covering-reconstruct",
            ExperimentConfig::DbarIdentity(_) => "dbar-identity",
            ExperimentConfig::Norms(_) => "norms",
            ExperimentConfig::Dilation(_) => "dilation",
            ExperimentConfig::InterpCheck(_) => "interp-check",
            ExperimentConfig::Cocycle(_) => "cocycle",
            ExperimentConfig::Convergence(_) => "convergence",
        }
    }

    fn validate(&self, path: &str) -> Result<(), ConfigError> {
        match self {
            ExperimentConfig::Reconstruct(c) => {
                check_nodes(path, "nodes", c.nodes)?;
                nonempty(path, "functions", c.functions.len())?;
                positive(path, "tol", c.tol)?;
                positive(path, "spread_tol", c.spread_tol)?;
                let points = c.grid.points(&format!("{path}.grid"))?;
                for (j, z) in points.iter().enumerate() {
                    if !c.domain.contains(z) {
                        return Err(invalid(format!("{path}.grid[{j}]"), format!("{z} is not interior to the domain")));
                    }
                }
                for s in std::iter::once(&c.section).chain(&c.compare_sections) {
                    build_section(*s, &c.domain).map_err(|m| invalid(format!("{path}.section"), m))?;
                }
                for (j, f) in c.functions.iter().enumerate() {
                    if !f.is_holomorphic() || matches!(f, TestFunction::CardinalSum { .. }) {
                        return Err(invalid(
                            format!("{path}.functions[{j}]"),
                            "reconstruction needs a holomorphic function on the domain",
                        ));
                    }
                }
            }
            ExperimentConfig::CoveringReconstruct(c) => {
                let cov = c.covering.spec().map_err(|m| invalid(format!("{path}.covering"), m))?;
                check_nodes(path, "nodes", c.nodes)?;
                positive(path, "tol", c.tol)?;
                nonempty(path, "base_points", c.base_points.len())?;
                for (j, z) in c.base_points.iter().enumerate() {
                    if !cov.annulus.contains(cx(*z)) {
                        return Err(invalid(format!("{path}.base_points[{j}]"), "not inside the annulus"));
                    }
                }
                match &c.function {
                    TestFunction::PullbackPoly { .. } => {}
                    TestFunction::CardinalSum { window, .. } => {
                        if cov.kind != CoveringKind::StripZ {
                            return Err(invalid(format!("{path}.function"), "cardinal sums need the strip covering"));
                        }
                        if *window != c.covering.window {
                            return Err(invalid(format!("{path}.function.window"), "must equal covering.K"));
                        }
                    }
                    _ => return Err(invalid(format!("{path}.function"), "expected pullback-poly or cardinal-sum")),
                }
            }
            ExperimentConfig::DbarIdentity(c) => {
                if c.domain.dim() != 1 || c.domain.planar().is_err() {
                    return Err(invalid(format!("{path}.domain"), "the identity is checked on disks and annuli"));
                }
                check_nodes(path, "nodes", c.nodes)?;
                check_nodes(path, "mesh", c.mesh)?;
                nonempty(path, "functions", c.functions.len())?;
                positive(path, "tol", c.tol)?;
                positive(path, "holo_tol", c.holo_tol)?;
                let section = build_section(c.section, &c.domain).map_err(|m| invalid(format!("{path}.section"), m))?;
                if c.s >= 1 && !section.smooth_on_closure() {
                    return Err(invalid(format!("{path}.section"), "s >= 1 needs convex-gradient"));
                }
                if c.s >= 1 && !matches!(c.domain, Domain::Disk { .. }) {
                    return Err(invalid(format!("{path}.domain"), "s >= 1 is implemented on disks"));
                }
                for (j, z) in c.grid.points(&format!("{path}.grid"))?.iter().enumerate() {
                    if !c.domain.contains(z) {
                        return Err(invalid(format!("{path}.grid[{j}]"), "not interior to the domain"));
                    }
                }
                for (j, f) in c.functions.iter().enumerate() {
                    if matches!(f, TestFunction::CardinalSum { .. }) || f.degree().is_none() && !f.is_holomorphic() {
                        return Err(invalid(format!("{path}.functions[{j}]"), "unsupported on a planar domain"));
                    }
                }
            }
            ExperimentConfig::Norms(c) => {
                c.covering.spec().map_err(|m| invalid(format!("{path}.covering"), m))?;
                nonempty(path, "weights", c.weights.len())?;
                c.p.exponent().map_err(|m| invalid(format!("{path}.p"), m))?;
                c.base_grid.points(&format!("{path}.base_grid"))?;
                positive(path, "isometry_tol", c.isometry_tol)?;
                if let Some(t) = &c.taylor {
                    nonempty(path, "taylor.functions", t.functions.len())?;
                    positive(path, "taylor.radius", t.radius)?;
                    check_nodes(path, "taylor.n_quad", t.n_quad)?;
                    if t.recon_order < t.max_order {
                        return Err(invalid(format!("{path}.taylor.recon_order"), "must be >= max_order"));
                    }
                    if t.recon_offsets.iter().any(|o| cx(*o).norm() >= t.radius) {
                        return Err(invalid(format!("{path}.taylor.recon_offsets"), "must lie inside the radius"));
                    }
                }
            }
            ExperimentConfig::Dilation(c) => {
                c.covering.spec().map_err(|m| invalid(format!("{path}.covering"), m))?;
                nonempty(path, "weights", c.weights.len())?;
                nonempty(path, "shifts", c.shifts.len())?;
                c.base_grid.points(&format!("{path}.base_grid"))?;
            }
            ExperimentConfig::InterpCheck(c) => {
                nonempty(path, "coverings", c.coverings.len())?;
                for (j, cov) in c.coverings.iter().enumerate() {
                    cov.spec().map_err(|m| invalid(format!("{path}.coverings[{j}]"), m))?;
                }
                if c.trials == 0 {
                    return Err(invalid(format!("{path}.trials"), "must be positive"));
                }
                strictly_increasing(path, "refinements", &c.refinements)?;
                if c.refinements.len() < 2 || c.refinements[0] < 2 {
                    return Err(invalid(format!("{path}.refinements"), "need at least two grids of side >= 2"));
                }
            }
            ExperimentConfig::Cocycle(c) => {
                AnnulusPair::new(c.annulus[0], c.annulus[1], c.annulus[2], c.annulus[3])
                    .map_err(|e| invalid(format!("{path}.annulus"), e.to_string()))?;
                if let DeckGroup::Cyclic { m } = c.group {
                    if m == 0 {
                        return Err(invalid(format!("{path}.group.m"), "must be positive"));
                    }
                }
            }
            ExperimentConfig::Convergence(c) => {
                strictly_increasing(path, "resolutions", &c.resolutions)?;
                nonempty(path, "resolutions", c.resolutions.len())?;
                if let ConvergenceProblem::SingularPlanar { z } | ConvergenceProblem::Leray { z, .. } = &c.problem {
                    if cx(*z).norm() >= 1.0 {
                        return Err(invalid(format!("{path}.problem.z"), "must lie in the unit disk"));
                    }
                }
                if let ConvergenceProblem::PeriodicTrapezoid { a } = c.problem {
                    if !(a > 1.0) {
                        return Err(invalid(format!("{path}.problem.a"), "must exceed 1"));
                    }
                }
            }
        }
        Ok(())
    }
}

fn check_nodes(path: &str, field: &str, n: usize) -> Result<(), ConfigError> {
    if n < 4 {
        return Err(invalid(format!("{path}.{field}"), "need at least 4 nodes"));
    }
    Ok(())
}

fn nonempty(path: &str, field: &str, len: usize) -> Result<(), ConfigError> {
    if len == 0 {
        return Err(invalid(format!("{path}.{field}"), "must not be empty"));
    }
    Ok(())
}

fn positive(path: &str, field: &str, v: f64) -> Result<(), ConfigError> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(invalid(format!("{path}.{field}"), "must be positive"));
    }
    Ok(())
}

fn strictly_increasing(path: &str, field: &str, v: &[usize]) -> Result<(), ConfigError> {
    if v.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid(format!("{path}.{field}"), "must be strictly increasing"));
    }
    Ok(())
}

pub(crate) fn cx(p: [f64; 2]) -> C64 {
    C64::new(p[0], p[1])
}

/// Builds a built-in section; convex-gradient uses the domain's own ball.
pub fn build_section(kind: SectionKind, domain: &Domain) -> Result<LeraySection, String> {
    match kind {
        SectionKind::ConvexGradient => match domain {
            Domain::Disk { center, radius } => Ok(LeraySection::convex_gradient(DefiningFunction::Ball {
                center: CVector::scalar(*center),
                radius: *radius,
            })),
            Domain::Ball { center, radius } => Ok(LeraySection::convex_gradient(DefiningFunction::Ball {
                center: CVector::new(center.to_vec()).map_err(|e| e.to_string())?,
                radius: *radius,
            })),
            _ => Err("convex-gradient needs a disk or ball domain".into()),
        },
        SectionKind::UserSupplied => Err("user-supplied sections cannot be configured from JSON".into()),
        SectionKind::PolydiskAveraged if !matches!(domain, Domain::Polydisk { .. }) => {
            Err("polydisk-averaged needs a polydisk domain".into())
        }
        SectionKind::Ball if !matches!(domain, Domain::Ball { .. } | Domain::Disk { .. }) => {
            Err("the ball section needs a disk or ball domain".into())
        }
        k => {
            if matches!(domain, Domain::Polydisk { .. }) && k != SectionKind::PolydiskAveraged {
                return Err("polydisk domains use the polydisk-averaged section".into());
            }
            LeraySection::builtin(k).map_err(|e| e.to_string())
        }
    }
}

/// Evaluation points in `C^n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", deny_unknown_fields)]
pub enum ZGrid {
    /// Explicit points, each a list of `[re, im]` components.
    Points { points: Vec<Vec<[f64; 2]>> },
    /// The center plus `rings x rays` points on circles of radius `radius * i / rings`.
    Polar {
        #[serde(default)]
        center: [f64; 2],
        radius: f64,
        rings: usize,
        rays: usize,
    },
    /// `rings x rays` points on radii `r_min + (r_max - r_min)(i + 1/2)/rings`.
    Annular {
        #[serde(default)]
        center: [f64; 2],
        r_min: f64,
        r_max: f64,
        rings: usize,
        rays: usize,
    },
}

impl ZGrid {
    pub fn points(&self, path: &str) -> Result<Vec<CVector>, ConfigError> {
        let out = match self {
            ZGrid::Points { points } => {
                if points.is_empty() {
                    return Err(invalid(path, "no points"));
                }
                points
                    .iter()
                    .enumerate()
                    .map(|(j, p)| {
                        CVector::new(p.iter().map(|c| cx(*c)).collect())
                            .map_err(|e| invalid(format!("{path}.points[{j}]"), e.to_string()))
                    })
                    .collect::<Result<Vec<_>, _>>()?
            }
            ZGrid::Polar {
                center,
                radius,
                rings,
                rays,
            } => {
                if *rings == 0 || *rays == 0 || !(*radius > 0.0) {
                    return Err(invalid(path, "polar grid needs radius > 0 and rings, rays >= 1"));
                }
                let mut pts = vec![CVector::scalar(cx(*center))];
                for i in 1..=*rings {
                    let r = radius * i as f64 / *rings as f64;
                    for j in 0..*rays {
                        let t = 2.0 * PI * j as f64 / *rays as f64 + 0.5 * i as f64;
                        pts.push(CVector::scalar(cx(*center) + C64::from_polar(r, t)));
                    }
                }
                pts
            }
            ZGrid::Annular {
                center,
                r_min,
                r_max,
                rings,
                rays,
            } => {
                if *rings == 0 || *rays == 0 || !(0.0 <= *r_min && r_min < r_max) {
                    return Err(invalid(path, "annular grid needs 0 <= r_min < r_max and rings, rays >= 1"));
                }
                annular_points(cx(*center), *r_min, *r_max, *rings, *rays)
                    .into_iter()
                    .map(CVector::scalar)
                    .collect()
            }
        };
        Ok(out)
    }

    /// Scalar points of a one-dimensional grid.
    pub fn scalar_points(&self, path: &str) -> Result<Vec<C64>, ConfigError> {
        self.points(path)?
            .into_iter()
            .map(|z| {
                if z.dim() == 1 {
                    Ok(z[0])
                } else {
                    Err(invalid(path, "expected points in C"))
                }
            })
            .collect()
    }
}

pub fn annular_points(center: C64, r_min: f64, r_max: f64, rings: usize, rays: usize) -> Vec<C64> {
    let mut pts = Vec::with_capacity(rings * rays);
    for i in 0..rings {
        let r = r_min + (r_max - r_min) * (i as f64 + 0.5) / rings as f64;
        for j in 0..rays {
            let t = 2.0 * PI * (j as f64 + 0.5) / rays as f64;
            pts.push(center + C64::from_polar(r, t));
        }
    }
    pts
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoveringName {
    StripZ,
    Finite,
}

/// `{kind, m?, r1, r2, r1~, r2~, K}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoveringConfig {
    pub kind: CoveringName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<u32>,
    pub r1: f64,
    pub r2: f64,
    #[serde(rename = "r1~")]
    pub r1_tilde: f64,
    #[serde(rename = "r2~")]
    pub r2_tilde: f64,
    #[serde(rename = "K")]
    pub window: usize,
}

impl CoveringConfig {
    pub fn spec(&self) -> Result<CoveringSpec, String> {
        let annulus = AnnulusPair::new(self.r1, self.r2, self.r1_tilde, self.r2_tilde).map_err(|e| e.to_string())?;
        let kind = match (self.kind, self.m) {
            (CoveringName::StripZ, None) => CoveringKind::StripZ,
            (CoveringName::Finite, Some(m)) => CoveringKind::Finite { m },
            (CoveringName::StripZ, Some(_)) => return Err("m is only meaningful for finite coverings".into()),
            (CoveringName::Finite, None) => return Err("finite coverings need m".into()),
        };
        if self.window == 0 && kind == CoveringKind::StripZ {
            return Err("K must be positive".into());
        }
        CoveringSpec::new(kind, annulus).map_err(|e| e.to_string())
    }
}

/// A norm exponent `p >= 1`, or `"inf"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PExp {
    Finite(f64),
    Named(String),
}

impl Default for PExp {
    fn default() -> Self {
        PExp::Finite(2.0)
    }
}

impl PExp {
    pub fn exponent(&self) -> Result<NormExponent, String> {
        match self {
            PExp::Finite(p) => NormExponent::finite(*p).map_err(|e| e.to_string()),
            PExp::Named(s) if s == "inf" => Ok(NormExponent::Infinity),
            PExp::Named(s) => Err(format!("expected a number or \"inf\", got {s:?}")),
        }
    }
}

fn default_tol_leray() -> f64 {
    1e-12
}
fn default_spread() -> f64 {
    1e-10
}
fn default_true() -> bool {
    true
}
fn default_tol_covering() -> f64 {
    1e-10
}
fn default_nodes_cg() -> usize {
    128
}
fn default_tol_identity() -> f64 {
    1e-5
}
fn default_tol_holo() -> f64 {
    1e-10
}
fn default_tol_isometry() -> f64 {
    1e-12
}
fn default_band_tol() -> f64 {
    1e-12
}
fn default_max_order() -> usize {
    6
}
fn default_recon_order() -> usize {
    40
}
fn default_n_quad() -> usize {
    96
}
fn default_tol_recon() -> f64 {
    1e-8
}
fn default_trials() -> usize {
    100
}
fn default_tol_roundtrip() -> f64 {
    1e-13
}
fn default_tol_stability() -> f64 {
    0.05
}
fn default_tol_diagonal() -> f64 {
    1e-12
}
fn default_floor() -> f64 {
    1e-14
}
fn default_section() -> SectionKind {
    SectionKind::ReciprocalCauchy
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructConfig {
    pub id: String,
    pub domain: Domain,
    #[serde(default = "default_section")]
    pub section: SectionKind,
    /// Further sections whose values must agree with `section`.
    #[serde(default)]
    pub compare_sections: Vec<SectionKind>,
    /// Trapezoid nodes per angle.
    pub nodes: usize,
    pub functions: Vec<TestFunction>,
    pub grid: ZGrid,
    #[serde(default = "default_tol_leray")]
    pub tol: f64,
    /// Errors relative to the largest oracle modulus on the grid.
    #[serde(default = "default_true")]
    pub relative: bool,
    #[serde(default = "default_spread")]
    pub spread_tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoveringReconstructConfig {
    pub id: String,
    pub covering: CoveringConfig,
    /// Trapezoid nodes per boundary circle.
    pub nodes: usize,
    pub function: TestFunction,
    pub base_points: Vec<[f64; 2]>,
    /// Fiber labels to reconstruct at; all sheets (finite) or `-2..=2` (strip) when empty.
    #[serde(default)]
    pub sheets: Vec<i64>,
    #[serde(default = "default_tol_covering")]
    pub tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DbarIdentityConfig {
    pub id: String,
    pub domain: Domain,
    #[serde(default = "default_section")]
    pub section: SectionKind,
    #[serde(default)]
    pub s: u32,
    #[serde(default = "default_nodes_cg")]
    pub nodes: usize,
    /// Planar mesh: angular nodes, with half as many radial nodes per panel.
    #[serde(default = "default_nodes_cg")]
    pub mesh: usize,
    pub functions: Vec<TestFunction>,
    pub grid: ZGrid,
    #[serde(default = "default_tol_identity")]
    pub tol: f64,
    #[serde(default = "default_tol_holo")]
    pub holo_tol: f64,
}

impl DbarIdentityConfig {
    pub fn planar(&self) -> PlanarResolution {
        PlanarResolution::mesh(self.mesh)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormsConfig {
    pub id: String,
    pub covering: CoveringConfig,
    pub weights: Vec<WeightKind>,
    #[serde(default)]
    pub p: PExp,
    pub function: TestFunction,
    pub base_grid: ZGrid,
    #[serde(default = "default_tol_isometry")]
    pub isometry_tol: f64,
    /// Relative slack on the analytic band.
    #[serde(default = "default_band_tol")]
    pub band_tol: f64,
    #[serde(default)]
    pub taylor: Option<TaylorConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaylorConfig {
    pub functions: Vec<TestFunction>,
    pub weight: WeightKind,
    pub center: [f64; 2],
    pub radius: f64,
    #[serde(default = "default_max_order")]
    pub max_order: usize,
    #[serde(default = "default_recon_order")]
    pub recon_order: usize,
    #[serde(default = "default_n_quad")]
    pub n_quad: usize,
    pub recon_offsets: Vec<[f64; 2]>,
    #[serde(default = "default_tol_recon")]
    pub recon_tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DilationConfig {
    pub id: String,
    pub covering: CoveringConfig,
    pub weights: Vec<WeightKind>,
    /// Deck powers `h`.
    pub shifts: Vec<i64>,
    pub base_grid: ZGrid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterpCheckConfig {
    pub id: String,
    pub coverings: Vec<CoveringConfig>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Side lengths `s` of the `s x s` polar grids used for the B-norm supremum.
    pub refinements: Vec<usize>,
    #[serde(default = "default_tol_roundtrip")]
    pub roundtrip_tol: f64,
    #[serde(default = "default_tol_stability")]
    pub stability_tol: f64,
    #[serde(default = "default_tol_diagonal")]
    pub diagonal_tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CocycleConfig {
    pub id: String,
    /// `[r1, r2, r1~, r2~]`.
    pub annulus: [f64; 4],
    /// `(c_12, c_23, c_31)`.
    pub c: [i64; 3],
    pub group: DeckGroup,
    #[serde(default = "default_monodromy")]
    pub expect_monodromy: i64,
}

fn default_monodromy() -> i64 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", deny_unknown_fields)]
pub enum ConvergenceProblem {
    /// `int_0^{2 pi} d theta / (a + cos theta) = 2 pi / sqrt(a^2 - 1)`.
    PeriodicTrapezoid { a: f64 },
    /// Gauss–Legendre on `int_0^1 t^degree dt`.
    PolynomialGauss { degree: u32 },
    /// `int_D d A / (xi - z) = -pi conj(z)` over the unit disk.
    SingularPlanar { z: [f64; 2] },
    /// Disk Leray reconstruction of a test function at `z`.
    Leray { function: TestFunction, z: [f64; 2] },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    pub id: String,
    pub problem: ConvergenceProblem,
    pub resolutions: Vec<usize>,
    /// Bound on `e_i / e_{i-1}` for rows above the floor.
    #[serde(default)]
    pub ratio_tol: Option<f64>,
    /// Bound on the error at the finest resolution.
    #[serde(default)]
    pub final_tol: Option<f64>,
    /// Require non-increasing errors above the floor.
    #[serde(default)]
    pub monotone: bool,
    #[serde(default = "default_floor")]
    pub floor: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_fields_rejected() {
        let text = r#"{"schema":1,"experiments":[{"experiment":"cocycle","id":"c","annulus":[0.8,1.3,0.6,1.5],"c":[0,0,1],"group":{"kind":"integers"},"bogus":1}]}"#;
        assert!(RunConfig::from_json(text).is_err());
        let ok = text.replace(r#","bogus":1"#, "");
        let cfg = RunConfig::from_json(&ok).unwrap();
        assert_eq!(cfg.experiments[0].name(), "cocycle");
    }

    #[test]
    fn field_paths_in_errors() {
        let text = r#"{"schema":1,"experiments":[{"experiment":"convergence","id":"t","problem":{"kind":"periodic-trapezoid","a":2.0},"resolutions":[16,8]}]}"#;
        let err = RunConfig::from_json(text).unwrap_err().to_string();
        assert!(err.starts_with("experiments[0].resolutions"), "{err}");
    }

    #[test]
    fn covering_keys() {
        let c: CoveringConfig =
            serde_json::from_str(r#"{"kind":"finite","m":3,"r1":0.8,"r2":1.3,"r1~":0.6,"r2~":1.5,"K":10}"#).unwrap();
        assert_eq!(c.spec().unwrap().sheets(), Some(3));
        let back: CoveringConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn polar_grid_size() {
        let g = ZGrid::Polar {
            center: [0.0, 0.0],
            radius: 0.5,
            rings: 4,
            rays: 6,
        };
        let pts = g.points("grid").unwrap();
        assert_eq!(pts.len(), 25);
        assert!(pts.iter().all(|z| z[0].norm() <= 0.5 + 1e-15));
    }

    #[test]
    fn p_values() {
        let p: PExp = serde_json::from_str("\"inf\"").unwrap();
        assert_eq!(p.exponent().unwrap(), NormExponent::Infinity);
        let p: PExp = serde_json::from_str("0.5").unwrap();
        assert!(p.exponent().is_err());
    }
}
