//! Integral representations as executable reconstructions: the Leray
//! formula on domains in `C^n`, its covering version, and the Cauchy–Green
//! operators `K^s`, `H^s` in one variable.

use std::f64::consts::PI;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covering::{build_interpolator_with_kernel, CardinalKernel, CoveringSpec, InterpolationOperator};
use crate::error::{Error, Result};
use crate::fiber::FiberData;
use crate::forms::{determinant, leray_kernel_value, leray_section_eval, CVector, LeraySection, C64};
use crate::quadrature::{
    cycle_integrate, planar_integral, singular_planar_integral, CycleJacobian, CyclePoint, CycleParam, KahanSum,
    Leg, LegRule, PlanarDomain, PlanarResolution, QuadratureRule,
};

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `(n-1)! / (2 pi i)^n`.
pub fn leray_prefactor(n: usize) -> C64 {
    factorial(n - 1) / C64::new(0.0, 2.0 * PI).powi(n as i32)
}

/// Orientation of the torus-simplex cycle that makes the Leray integral
/// reproduce `f(z)`.
const POLYDISK_ORIENTATION: [i8; 3] = [1, -1, 1];
/// Orientation of the sphere parametrization `R (cos phi e^{i t1}, sin phi e^{i t2})`.
const BALL_ORIENTATION: i8 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Domain {
    Disk { center: C64, radius: f64 },
    Annulus { center: C64, r_inner: f64, r_outer: f64 },
    Polydisk { centers: Vec<C64>, radii: Vec<f64> },
    /// Ball in `C^2`.
    Ball { center: [C64; 2], radius: f64 },
}

impl Domain {
    pub fn unit_disk() -> Self {
        Domain::Disk {
            center: C64::new(0.0, 0.0),
            radius: 1.0,
        }
    }

    pub fn unit_polydisk(n: usize) -> Self {
        Domain::Polydisk {
            centers: vec![C64::new(0.0, 0.0); n],
            radii: vec![1.0; n],
        }
    }

    pub fn unit_ball() -> Self {
        Domain::Ball {
            center: [C64::new(0.0, 0.0); 2],
            radius: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Disk { .. } | Domain::Annulus { .. } => 1,
            Domain::Polydisk { centers, .. } => centers.len(),
            Domain::Ball { .. } => 2,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            Domain::Disk { radius, .. } => *radius > 0.0,
            Domain::Annulus { r_inner, r_outer, .. } => 0.0 < *r_inner && r_inner < r_outer,
            Domain::Polydisk { centers, radii } => {
                !centers.is_empty() && centers.len() <= 3 && centers.len() == radii.len() && radii.iter().all(|r| *r > 0.0)
            }
            Domain::Ball { radius, .. } => *radius > 0.0,
        };
        if !ok {
            return Err(Error::invalid(format!("invalid domain {self:?}")));
        }
        Ok(())
    }

    /// Strict interior test.
    pub fn contains(&self, z: &CVector) -> bool {
        if z.dim() != self.dim() {
            return false;
        }
        match self {
            Domain::Disk { center, radius } => (z[0] - center).norm() < *radius,
            Domain::Annulus { center, r_inner, r_outer } => {
                let r = (z[0] - center).norm();
                r > *r_inner && r < *r_outer
            }
            Domain::Polydisk { centers, radii } => (0..centers.len()).all(|j| (z[j] - centers[j]).norm() < radii[j]),
            Domain::Ball { center, radius } => {
                ((z[0] - center[0]).norm_sqr() + (z[1] - center[1]).norm_sqr()).sqrt() < *radius
            }
        }
    }

    /// Planar view of a one-dimensional domain.
    pub fn planar(&self) -> Result<PlanarDomain> {
        match *self {
            Domain::Disk { center, radius } => Ok(PlanarDomain::Disk { center, radius }),
            Domain::Annulus { center, r_inner, r_outer } => Ok(PlanarDomain::annulus(center, r_inner, r_outer)),
            _ => Err(Error::UnsupportedGeometry(
                "domain integrals are implemented in one variable only".into(),
            )),
        }
    }

    /// Default product rule with `n` trapezoid nodes per angle.
    pub fn default_rule(&self, n: usize) -> Result<QuadratureRule> {
        match self {
            Domain::Disk { .. } | Domain::Annulus { .. } => QuadratureRule::new(vec![LegRule::Trapezoid(n)]),
            Domain::Polydisk { centers, .. } => {
                let d = centers.len();
                let mut legs = vec![LegRule::Trapezoid(n); d];
                legs.extend(std::iter::repeat_n(LegRule::GaussLegendre(4), d - 1));
                QuadratureRule::new(legs)
            }
            Domain::Ball { .. } => QuadratureRule::new(vec![
                LegRule::Trapezoid(n),
                LegRule::Trapezoid(n),
                LegRule::GaussLegendre((n / 2).max(2)),
            ]),
        }
    }

    /// Leray cycles `h_z` for this domain, each with its orientation.
    pub fn leray_cycles(&self, section: &LeraySection, z: &CVector) -> Result<Vec<CycleParam>> {
        self.validate()?;
        if z.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: z.dim(),
            });
        }
        match self {
            Domain::Disk { center, radius } => Ok(vec![CycleParam::circle(*center, *radius)]),
            Domain::Annulus { center, r_inner, r_outer } => Ok(vec![
                CycleParam::circle(*center, *r_outer),
                CycleParam::circle(*center, *r_inner).with_orientation(-1),
            ]),
            Domain::Polydisk { centers, radii } => {
                if section.kind() != crate::forms::SectionKind::PolydiskAveraged {
                    return Err(Error::UnsupportedGeometry(
                        "the polydisk cycle is the torus-simplex family around the polydisk-averaged section".into(),
                    ));
                }
                Ok(vec![polydisk_cycle(centers.clone(), radii.clone(), z.clone())])
            }
            Domain::Ball { center, radius } => Ok(vec![sphere_cycle(*center, *radius)]),
        }
    }
}

/// Stick-breaking map from `[0,1]^(n-1)` onto the simplex and its Jacobian.
fn simplex(s: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = s.len() + 1;
    let mut lam = vec![0.0; n];
    let mut jac = vec![vec![0.0; s.len()]; n];
    // remaining mass and its gradient
    let mut rest = 1.0;
    let mut drest = vec![0.0; s.len()];
    for j in 0..n {
        if j < s.len() {
            lam[j] = rest * s[j];
            for k in 0..s.len() {
                jac[j][k] = drest[k] * s[j];
            }
            jac[j][j] += rest;
            for d in drest.iter_mut() {
                *d *= 1.0 - s[j];
            }
            drest[j] -= rest;
            rest *= 1.0 - s[j];
        } else {
            lam[j] = rest;
            jac[j] = drest.clone();
        }
    }
    (lam, jac)
}

/// `{(xi, eta) : xi in the distinguished torus, eta_j = lambda_j / (xi_j - z_j), lambda in the simplex}`.
///
/// Legs are `(theta_1 .. theta_n, s_1 .. s_{n-1})`; the barycenter of the simplex
/// is the polydisk-averaged section.
pub fn polydisk_cycle(centers: Vec<C64>, radii: Vec<f64>, z: CVector) -> CycleParam {
    let n = centers.len();
    let mut legs = vec![Leg::Periodic; n];
    legs.extend(std::iter::repeat_n(Leg::Segment, n - 1));
    let (c2, r2, z2) = (centers.clone(), radii.clone(), z.clone());
    let map = move |t: &[f64]| {
        let xi: Vec<C64> = (0..n).map(|j| centers[j] + C64::from_polar(radii[j], t[j])).collect();
        let (lam, _) = simplex(&t[n..]);
        let mut eta = Vec::with_capacity(n);
        for j in 0..n {
            let d = xi[j] - z[j];
            if !(d.norm() >= crate::forms::POLE_THRESHOLD) {
                return Err(Error::PoleProximity {
                    param: t.to_vec(),
                    z: z.to_string(),
                    magnitude: d.norm(),
                });
            }
            eta.push(lam[j] / d);
        }
        Ok(CyclePoint {
            xi: CVector::from_vec_unchecked(xi),
            eta: Some(CVector::from_vec_unchecked(eta)),
        })
    };
    let jac = move |t: &[f64]| {
        let p = 2 * n - 1;
        let (lam, dlam) = simplex(&t[n..]);
        let mut dxi = vec![vec![C64::new(0.0, 0.0); p]; n];
        let mut deta = vec![vec![C64::new(0.0, 0.0); p]; n];
        for j in 0..n {
            let e = C64::from_polar(1.0, t[j]);
            let xi = c2[j] + r2[j] * e;
            let d = xi - z2[j];
            dxi[j][j] = C64::new(0.0, r2[j]) * e;
            deta[j][j] = -lam[j] * dxi[j][j] / (d * d);
            for k in 0..n - 1 {
                deta[j][n + k] = dlam[j][k] / d;
            }
        }
        Ok(CycleJacobian { dxi, deta: Some(deta) })
    };
    CycleParam::new(legs, map)
        .with_jacobian(jac)
        .with_orientation(POLYDISK_ORIENTATION[n - 1])
}

/// The sphere `c + R (cos phi e^{i t1}, sin phi e^{i t2})`, `phi = pi s / 2`.
pub fn sphere_cycle(center: [C64; 2], radius: f64) -> CycleParam {
    let half = PI / 2.0;
    CycleParam::from_xi(vec![Leg::Periodic, Leg::Periodic, Leg::Segment], move |t| {
        let phi = half * t[2];
        CVector::from_vec_unchecked(vec![
            center[0] + C64::from_polar(radius * phi.cos(), t[0]),
            center[1] + C64::from_polar(radius * phi.sin(), t[1]),
        ])
    })
    .with_jacobian(move |t| {
        let phi = half * t[2];
        let (e1, e2) = (C64::from_polar(1.0, t[0]), C64::from_polar(1.0, t[1]));
        let i = C64::new(0.0, 1.0);
        Ok(CycleJacobian {
            dxi: vec![
                vec![i * radius * phi.cos() * e1, C64::new(0.0, 0.0), -radius * half * phi.sin() * e1],
                vec![C64::new(0.0, 0.0), i * radius * phi.sin() * e2, radius * half * phi.cos() * e2],
            ],
            deta: None,
        })
    })
    .with_orientation(BALL_ORIENTATION)
}

/// Everything needed to evaluate a representation formula.
#[derive(Clone, Debug)]
pub struct RepresentationTask {
    pub domain: Domain,
    pub section: LeraySection,
    pub rule: QuadratureRule,
    /// Smoothing order of the Cauchy–Green operators.
    pub s: u32,
    /// Resolution of domain integrals.
    pub planar: PlanarResolution,
    /// Gauss–Legendre order on the homotopy leg.
    pub homotopy_order: usize,
    /// Replaces the domain's own cycles when set (must be homologous in `M \ {z}`).
    pub cycles: Option<Vec<CycleParam>>,
}

impl RepresentationTask {
    /// `n` trapezoid nodes per angle, default planar resolution, `s = 0`.
    pub fn new(domain: Domain, section: LeraySection, n: usize) -> Result<Self> {
        let rule = domain.default_rule(n)?;
        Ok(RepresentationTask {
            domain,
            section,
            rule,
            s: 0,
            planar: PlanarResolution::default(),
            homotopy_order: 4,
            cycles: None,
        })
    }

    pub fn with_s(mut self, s: u32) -> Self {
        self.s = s;
        self
    }

    pub fn with_planar(mut self, planar: PlanarResolution) -> Self {
        self.planar = planar;
        self
    }

    pub fn with_cycles(mut self, cycles: Vec<CycleParam>) -> Self {
        self.cycles = Some(cycles);
        self
    }

    fn cycles_for(&self, z: &CVector) -> Result<Vec<CycleParam>> {
        match &self.cycles {
            Some(c) => Ok(c.clone()),
            None => self.domain.leray_cycles(&self.section, z),
        }
    }
}

/// `(n-1)!/(2 pi i)^n int_{h_z} f(xi) omega'(eta) ∧ omega(xi) / <eta, xi - z>^n`.
pub fn leray_reconstruct(
    f: impl Fn(&CVector) -> C64 + Sync,
    task: &RepresentationTask,
    z: &CVector,
) -> Result<C64> {
    let n = task.domain.dim();
    if z.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: z.dim() });
    }
    let mut total = KahanSum::new();
    for cycle in task.cycles_for(z)? {
        let v = cycle_integrate(
            |t| {
                let xi = cycle.point(t)?;
                leray_kernel_value(f(&xi), Some(&task.section), &cycle, t, z)
            },
            &cycle,
            &task.rule,
            leray_prefactor(n),
        )?;
        total.add(v);
    }
    Ok(total.total())
}

struct BoundaryNode {
    t: f64,
    cycle: usize,
    xi: C64,
}

/// The covering Leray formula on an annulus: boundary nodes, their lazily
/// built interpolators, and the Cauchy kernel.
pub struct CoveringLeray {
    cov: CoveringSpec,
    window: usize,
    kernel: CardinalKernel,
    cycles: Vec<CycleParam>,
    rule: QuadratureRule,
    nodes: Vec<BoundaryNode>,
    ops: Vec<OnceLock<InterpolationOperator>>,
}

impl std::fmt::Debug for CoveringLeray {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CoveringLeray")
            .field("covering", &self.cov)
            .field("window", &self.window)
            .field("kernel", &self.kernel)
            .field("nodes", &self.nodes.len())
            .finish()
    }
}

impl CoveringLeray {
    /// Both boundary circles of the covering's annulus, `n` trapezoid nodes each.
    pub fn new(cov: &CoveringSpec, n: usize, window: usize, kernel: CardinalKernel) -> Result<Self> {
        let rule = QuadratureRule::new(vec![LegRule::Trapezoid(n)])?;
        if window == 0 {
            return Err(Error::invalid("window K must be positive"));
        }
        let zero = C64::new(0.0, 0.0);
        let cycles = vec![
            CycleParam::circle(zero, cov.annulus.r2()),
            CycleParam::circle(zero, cov.annulus.r1()).with_orientation(-1),
        ];
        let h = 2.0 * PI / n as f64;
        let mut nodes = Vec::with_capacity(2 * n);
        for (ci, cycle) in cycles.iter().enumerate() {
            for j in 0..n {
                let t = h * j as f64;
                nodes.push(BoundaryNode {
                    t,
                    cycle: ci,
                    xi: cycle.point(&[t])?[0],
                });
            }
        }
        let ops = nodes.iter().map(|_| OnceLock::new()).collect();
        Ok(CoveringLeray {
            cov: *cov,
            window,
            kernel,
            cycles,
            rule,
            nodes,
            ops,
        })
    }

    pub fn covering(&self) -> &CoveringSpec {
        &self.cov
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Boundary points, in summation order.
    pub fn boundary_points(&self) -> Vec<C64> {
        self.nodes.iter().map(|n| n.xi).collect()
    }

    /// Interpolator at boundary node `i`, built on first use.
    pub fn operator(&self, i: usize) -> Result<&InterpolationOperator> {
        if let Some(op) = self.ops[i].get() {
            return Ok(op);
        }
        let op = build_interpolator_with_kernel(&self.cov, self.nodes[i].xi, self.window as i64, self.kernel)?;
        Ok(self.ops[i].get_or_init(|| op))
    }

    /// `f(x) = 1/(2 pi i) int_{∂M} L_xi(f|fiber(xi))(x) d xi / (xi - y)`, `y = r(x)`.
    ///
    /// `fiber_data(xi)` supplies the restriction of `f` to the fiber over a
    /// boundary point, in the window of the interpolator.
    pub fn reconstruct(
        &self,
        fiber_data: impl Fn(C64) -> Result<FiberData> + Sync,
        x: C64,
        z: C64,
    ) -> Result<C64> {
        let y = self.cov.project(x);
        if (y - z).norm() > 1e-12 * z.norm().max(1.0) {
            return Err(Error::invalid(format!("covering point {x} lies over {y}, not over {z}")));
        }
        if !self.cov.annulus.contains(z) {
            return Err(Error::invalid(format!("{z} is not inside the annulus")));
        }
        let zz = CVector::scalar(z);
        let cauchy = LeraySection::reciprocal_cauchy();
        let h = 2.0 * PI / self.rule.legs()[0].nodes() as f64;
        let prefactor = leray_prefactor(1);
        let terms: Vec<Result<C64>> = (0..self.nodes.len())
            .into_par_iter()
            .map(|i| {
                let node = &self.nodes[i];
                let cycle = &self.cycles[node.cycle];
                let data = fiber_data(node.xi)?;
                let value = self.operator(i)?.apply_data(&data, x)?;
                let k = leray_kernel_value(value, Some(&cauchy), cycle, &[node.t], &zz)?;
                if !(k.re.is_finite() && k.im.is_finite()) {
                    return Err(Error::PoisonedSample {
                        node: vec![node.cycle, i],
                        param: vec![node.t],
                    });
                }
                Ok(k * h * cycle.orientation())
            })
            .collect();
        let mut acc = KahanSum::new();
        for t in terms {
            acc.add(t?);
        }
        Ok(prefactor * acc.total())
    }
}

/// One-shot covering reconstruction; see [`CoveringLeray::reconstruct`].
pub fn covering_leray_reconstruct(
    engine: &CoveringLeray,
    fiber_data: impl Fn(C64) -> Result<FiberData> + Sync,
    x: C64,
    z: C64,
) -> Result<C64> {
    engine.reconstruct(fiber_data, x, z)
}

fn require_one_variable(task: &RepresentationTask, z: &CVector) -> Result<PlanarDomain> {
    if task.domain.dim() != 1 || z.dim() != 1 {
        return Err(Error::UnsupportedGeometry(
            "domain Cauchy–Green operators are implemented for n = 1".into(),
        ));
    }
    task.domain.planar()
}

fn require_smooth(task: &RepresentationTask) -> Result<()> {
    if !task.section.smooth_on_closure() {
        return Err(Error::invalid(format!(
            "s = {} needs a section smooth on the closed domain (convex-gradient or user-supplied), got {:?}",
            task.s,
            task.section.kind()
        )));
    }
    Ok(())
}

/// `Phi = 1 - <eta(xi, z), xi - z>`.
fn phi(section: &LeraySection, xi: &CVector, z: &CVector) -> Result<C64> {
    let eta = leray_section_eval(section, xi, z)?;
    Ok(C64::new(1.0, 0.0) - eta[0] * (xi[0] - z[0]))
}

/// `K^0 f`: boundary Leray integral. `K^s f` for `s >= 1`:
/// `s!/((s-1)! 2 pi i) int_M f (1 - <eta, xi - z>)^(s-1) omega(eta) ∧ omega(xi)`.
pub fn cauchy_green_k(
    f: impl Fn(&CVector) -> C64 + Sync,
    task: &RepresentationTask,
    z: &CVector,
) -> Result<C64> {
    if task.s == 0 {
        return leray_reconstruct(f, task, z);
    }
    let domain = require_one_variable(task, z)?;
    require_smooth(task)?;
    let s = task.s as usize;
    let prefactor = factorial(s) / factorial(s - 1) * leray_prefactor(1);
    let two_i = C64::new(0.0, 2.0);
    let mut err = OnceLock::new();
    let v = planar_integral(
        |x| {
            let xi = CVector::scalar(x);
            let res = (|| {
                let w = task.section.wirtinger(&xi, z)?;
                let ph = phi(&task.section, &xi, z)?;
                // omega(eta) ∧ omega(xi) = eta_{conj xi} d conj(xi) ∧ d xi = 2i eta_{conj xi} dA
                Ok::<C64, Error>(f(&xi) * ph.powi(s as i32 - 1) * w.anti[0][0] * two_i)
            })();
            res.unwrap_or_else(|e| {
                let _ = err.set(e);
                C64::new(f64::NAN, 0.0)
            })
        },
        &domain,
        &task.planar,
    );
    if let Some(e) = err.take() {
        return Err(e);
    }
    Ok(prefactor * v?)
}

/// `H^s(g)` for the `d conj(xi)` coefficient `g` of `dbar f`.
///
/// `s = 0`: the homotopy integral over `∂M x [0, 1]` with section
/// `(1 - l) eta_BM + l eta`, plus the Bochner–Martinelli domain term.
/// `s >= 1`: `-(1/pi) int_M g (1 - <eta, xi - z>)^s / (xi - z) dA`.
pub fn cauchy_green_h(
    dbar_f: impl Fn(&CVector) -> C64 + Sync,
    task: &RepresentationTask,
    z: &CVector,
) -> Result<C64> {
    let domain = require_one_variable(task, z)?;
    if task.s >= 1 {
        require_smooth(task)?;
    }
    let s = task.s as i32;
    let bm = LeraySection::bochner_martinelli();
    let two_i = C64::new(0.0, 2.0);
    // the domain forms carry the opposite sign to the boundary Leray kernel
    let prefactor = -leray_prefactor(1);
    let err = OnceLock::new();
    let domain_term = singular_planar_integral(
        |x| {
            let xi = CVector::scalar(x);
            let g = dbar_f(&xi);
            if g == C64::new(0.0, 0.0) {
                return g;
            }
            let res = (|| {
                let eta_bm = leray_section_eval(&bm, &xi, z)?[0];
                let weight = if s == 0 { C64::new(1.0, 0.0) } else { phi(&task.section, &xi, z)?.powi(s) };
                Ok::<C64, Error>(g * weight * eta_bm * two_i)
            })();
            res.unwrap_or_else(|e| {
                let _ = err.set(e);
                C64::new(f64::NAN, 0.0)
            })
        },
        &domain,
        z,
        &task.planar,
    );
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    let mut total = prefactor * domain_term?;
    if s == 0 {
        total += homotopy_term(&dbar_f, task, z)?;
    }
    Ok(total)
}

/// `int_{∂M x [0,1]} g d conj(xi) ∧ omega'(eta_l) ∧ omega(xi)`. In one variable
/// `omega'(eta_l) = eta_l` and the pullback of `d conj(xi) ∧ d xi` to
/// `∂M x [0, 1]` has zero determinant, so the integrand vanishes identically.
fn homotopy_term(
    dbar_f: &(impl Fn(&CVector) -> C64 + Sync),
    task: &RepresentationTask,
    z: &CVector,
) -> Result<C64> {
    let bm = LeraySection::bochner_martinelli();
    let mut total = KahanSum::new();
    for boundary in task.domain.leray_cycles(&task.section, z)? {
        let b = boundary.clone();
        let cyl = CycleParam::from_xi(vec![Leg::Periodic, Leg::Segment], move |t| {
            b.point(&t[..1]).expect("boundary point")
        })
        .with_orientation(if boundary.orientation() < 0.0 { -1 } else { 1 });
        let rule = QuadratureRule::new(vec![task.rule.legs()[0], LegRule::GaussLegendre(task.homotopy_order.max(2))])?;
        let v = cycle_integrate(
            |t| {
                let sample = cyl.sample(t)?;
                let xi = &sample.xi;
                let g = dbar_f(xi);
                if g == C64::new(0.0, 0.0) {
                    return Ok(g);
                }
                let lam = t[1];
                let eta = (1.0 - lam) * leray_section_eval(&bm, xi, z)?[0]
                    + lam * leray_section_eval(&task.section, xi, z)?[0];
                let dxi = &sample.dxi[0];
                let jac = determinant(&[dxi.iter().map(|c| c.conj()).collect(), dxi.clone()]);
                Ok(g * eta * jac.value)
            },
            &cyl,
            &rule,
            -leray_prefactor(1),
        )?;
        total.add(v);
    }
    Ok(total.total())
}

/// `f(z) - K^s f(z) - H^s(dbar f)(z)` at one point.
pub fn identity_defect(
    f: impl Fn(&CVector) -> C64 + Sync,
    dbar_f: impl Fn(&CVector) -> C64 + Sync,
    task: &RepresentationTask,
    z: &CVector,
) -> Result<C64> {
    let k = cauchy_green_k(&f, task, z)?;
    let h = cauchy_green_h(&dbar_f, task, z)?;
    Ok(f(z) - k - h)
}

/// `max_z |f(z) - K^s f(z) - H^s(dbar f)(z)|` over the grid.
pub fn identity_residual(
    f: impl Fn(&CVector) -> C64 + Sync,
    dbar_f: impl Fn(&CVector) -> C64 + Sync,
    task: &RepresentationTask,
    grid: &[CVector],
) -> Result<f64> {
    let mut worst = 0.0_f64;
    for z in grid {
        worst = worst.max(identity_defect(&f, &dbar_f, task, z)?.norm());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::DefiningFunction;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn simplex_map() {
        let (lam, jac) = simplex(&[0.3, 0.5]);
        assert!((lam.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((lam[0] - 0.3).abs() < 1e-15 && (lam[1] - 0.35).abs() < 1e-15);
        // columns of the Jacobian sum to zero
        for k in 0..2 {
            assert!(jac.iter().map(|r| r[k]).sum::<f64>().abs() < 1e-15);
        }
        let (lam, _) = simplex(&[0.5]);
        assert_eq!(lam, vec![0.5, 0.5]);
    }

    #[test]
    fn polydisk_kernel_value_at_barycenter() {
        let z = CVector::new(vec![c(0., 0.); 2]).unwrap();
        let cycle = polydisk_cycle(vec![c(0., 0.); 2], vec![1.0; 2], z.clone());
        for t in [[0.3, 1.1, 0.5], [2.0, -0.7, 0.5], [0.0, 0.0, 0.2]] {
            let v = leray_kernel_value(c(1., 0.), None, &cycle, &t, &z).unwrap();
            assert!((v - c(1., 0.)).norm() < 1e-14, "{v}");
        }
    }

    #[test]
    fn n1_kernel_is_cauchy_density() {
        let cycle = CycleParam::circle(c(0., 0.), 1.0);
        let z = CVector::scalar(c(0.3, -0.2));
        for th in [0.0, 0.7, 3.0] {
            let v = leray_kernel_value(c(1., 0.), Some(&LeraySection::reciprocal_cauchy()), &cycle, &[th], &z).unwrap();
            let e = C64::from_polar(1.0, th);
            assert!((v - c(0., 1.) * e / (e - z[0])).norm() < 1e-13);
        }
    }

    #[test]
    fn disk_examples() {
        let task = RepresentationTask::new(Domain::unit_disk(), LeraySection::reciprocal_cauchy(), 64).unwrap();
        let z = CVector::scalar(c(0.3, 0.1));
        let v = leray_reconstruct(|x| x[0].powu(3), &task, &z).unwrap();
        assert!((v - c(0.018, 0.026)).norm() < 1e-13);
        let one = leray_reconstruct(|_| c(1., 0.), &task, &z).unwrap();
        assert!((one - c(1., 0.)).norm() < 1e-13);
    }

    #[test]
    fn polydisk_examples() {
        for n in [2usize, 3] {
            let nodes = if n == 2 { 48 } else { 24 };
            let task = RepresentationTask::new(Domain::unit_polydisk(n), LeraySection::polydisk_averaged(), nodes).unwrap();
            let z = CVector::new([c(0.2, 0.), c(0., 0.1), c(-0.1, 0.05)][..n].to_vec()).unwrap();
            let one = leray_reconstruct(|_| c(1., 0.), &task, &z).unwrap();
            assert!((one - c(1., 0.)).norm() < 1e-12, "n = {n}: {one}");
        }
        let task = RepresentationTask::new(Domain::unit_polydisk(2), LeraySection::polydisk_averaged(), 48).unwrap();
        let z = CVector::new(vec![c(0.2, 0.), c(0., 0.1)]).unwrap();
        let v = leray_reconstruct(|x| x[0] * x[0] * x[1], &task, &z).unwrap();
        assert!((v - c(0., 0.004)).norm() < 1e-10, "{v}");
    }

    #[test]
    fn ball_sections_reproduce() {
        let z = CVector::new(vec![c(0.2, 0.1), c(-0.1, 0.3)]).unwrap();
        let f = |x: &CVector| x[0] * x[1] + x[0].powu(2) - 0.5;
        let expect = f(&z);
        for section in [
            LeraySection::ball(),
            LeraySection::bochner_martinelli(),
            LeraySection::convex_gradient(DefiningFunction::Ball {
                center: CVector::new(vec![c(0., 0.); 2]).unwrap(),
                radius: 1.0,
            }),
        ] {
            let task = RepresentationTask::new(Domain::unit_ball(), section.clone(), 32).unwrap();
            let v = leray_reconstruct(f, &task, &z).unwrap();
            assert!((v - expect).norm() < 1e-9, "{:?}: {v} vs {expect}", section.kind());
        }
    }

    #[test]
    fn annulus_laurent() {
        let dom = Domain::Annulus {
            center: c(0., 0.),
            r_inner: 0.5,
            r_outer: 1.5,
        };
        let task = RepresentationTask::new(dom, LeraySection::reciprocal_cauchy(), 128).unwrap();
        let z = CVector::scalar(c(0.2, 0.9));
        let v = leray_reconstruct(|x| 1.0 / x[0] + x[0], &task, &z).unwrap();
        assert!((v - (1.0 / z[0] + z[0])).norm() < 1e-12);
    }

    #[test]
    fn deformed_cycle_agrees() {
        // an ellipse inside the disk around z is homologous to the boundary in M \ {z}
        let ellipse = CycleParam::from_xi(vec![Leg::Periodic], |t| {
            CVector::scalar(c(0.1 + 0.6 * t[0].cos(), 0.45 * t[0].sin()))
        });
        let base = RepresentationTask::new(Domain::unit_disk(), LeraySection::bochner_martinelli(), 128).unwrap();
        let deformed = base.clone().with_cycles(vec![ellipse]);
        let z = CVector::scalar(c(0.2, 0.1));
        let f = |x: &CVector| (2.0 * x[0]).exp();
        let a = leray_reconstruct(f, &base, &z).unwrap();
        let b = leray_reconstruct(f, &deformed, &z).unwrap();
        assert!((a - f(&z)).norm() < 1e-12);
        assert!((b - f(&z)).norm() < 1e-8, "{b}");
    }

    #[test]
    fn cauchy_green_examples() {
        let task = RepresentationTask::new(Domain::unit_disk(), LeraySection::reciprocal_cauchy(), 128).unwrap();
        let z = CVector::scalar(c(0.4, 0.));
        let k = cauchy_green_k(|x| x[0] * x[0], &task, &z).unwrap();
        assert!((k - c(0.16, 0.)).norm() < 1e-13);
        let k = cauchy_green_k(|x| x[0].conj(), &task, &z).unwrap();
        assert!(k.norm() < 1e-13);
        let h = cauchy_green_h(|_| c(1., 0.), &task, &z).unwrap();
        assert!((h - c(0.4, 0.)).norm() < 1e-10, "{h}");
        let h0 = cauchy_green_h(|_| c(0., 0.), &task, &z).unwrap();
        assert_eq!(h0, c(0., 0.));
        let z = CVector::scalar(c(0.3, 0.));
        let h = cauchy_green_h(|x| x[0], &task, &z).unwrap();
        assert!((h - c(-0.91, 0.)).norm() < 1e-10, "{h}");
        assert!(matches!(
            cauchy_green_h(|_| c(1., 0.), &task, &CVector::scalar(c(1., 0.))),
            Err(Error::UnsupportedGeometry(_))
        ));
    }

    #[test]
    fn smoothing_order_needs_smooth_section() {
        let task = RepresentationTask::new(Domain::unit_disk(), LeraySection::reciprocal_cauchy(), 64)
            .unwrap()
            .with_s(1);
        let z = CVector::scalar(c(0.1, 0.));
        assert!(matches!(cauchy_green_k(|_| c(1., 0.), &task, &z), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn higher_order_identity() {
        let henkin = LeraySection::convex_gradient(DefiningFunction::Ball {
            center: CVector::scalar(c(0., 0.)),
            radius: 1.0,
        });
        for s in 1..=2 {
            let task = RepresentationTask::new(Domain::unit_disk(), henkin.clone(), 64)
                .unwrap()
                .with_s(s);
            let z = CVector::scalar(c(0.25, -0.2));
            let f = |x: &CVector| x[0].conj() * x[0] + x[0].conj().powu(2);
            let df = |x: &CVector| x[0] + 2.0 * x[0].conj();
            let d = identity_defect(f, df, &task, &z).unwrap();
            assert!(d.norm() < 1e-9, "s = {s}: {d}");
        }
    }
}
