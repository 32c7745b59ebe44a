//! Complex-linear algebra and Cauchy–Fantappiè (Leray) kernels.
//!
//! Differential forms are never manipulated symbolically. Every form is
//! evaluated as the density of its pullback along a parametrized cycle, which
//! reduces `omega'(eta) ∧ omega(xi)` to an alternating sum of complex
//! determinants of Jacobian blocks.

use std::fmt;
use std::ops::Index;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::CycleParam;

pub type C64 = Complex64;

/// Dense complex matrix stored by rows.
pub type CMatrix = Vec<Vec<C64>>;

/// Denominators below this magnitude are reported as pole proximity.
pub const POLE_THRESHOLD: f64 = 1e-14;

/// Relative step for central finite differences.
pub const FD_STEP: f64 = 1e-6;

/// A point or covector in `C^n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<C64>", into = "Vec<C64>")]
pub struct CVector(Vec<C64>);

impl CVector {
    pub fn new(components: Vec<C64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::invalid("CVector needs at least one component"));
        }
        if components.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::invalid("CVector components must be finite"));
        }
        Ok(CVector(components))
    }

    /// Builds a vector without the finiteness check. Used on hot paths where
    /// the components come from already validated arithmetic.
    pub(crate) fn from_vec_unchecked(components: Vec<C64>) -> Self {
        CVector(components)
    }

    pub fn scalar(z: C64) -> Self {
        CVector(vec![z])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &[C64] {
        &self.0
    }

    pub fn conj(&self) -> CVector {
        CVector(self.0.iter().map(|c| c.conj()).collect())
    }

    pub fn sub(&self, other: &CVector) -> Result<CVector> {
        check_dims(self.dim(), other.dim())?;
        Ok(CVector(
            self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect(),
        ))
    }

    pub fn scale(&self, s: C64) -> CVector {
        CVector(self.0.iter().map(|c| c * s).collect())
    }

    /// Squared Hermitian length `sum |v_j|^2`.
    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

impl Index<usize> for CVector {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.0[i]
    }
}

impl TryFrom<Vec<C64>> for CVector {
    type Error = Error;
    fn try_from(v: Vec<C64>) -> Result<Self> {
        CVector::new(v)
    }
}

impl From<CVector> for Vec<C64> {
    fn from(v: CVector) -> Self {
        v.0
    }
}

impl fmt::Display for CVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

fn check_dims(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// The bilinear pairing `<a, b> = sum a_j b_j`. No conjugation is applied.
pub fn bilinear_pair(a: &CVector, b: &CVector) -> Result<C64> {
    check_dims(a.dim(), b.dim())?;
    Ok(a.0.iter().zip(&b.0).map(|(x, y)| x * y).sum())
}

/// Result of an LU determinant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Determinant {
    pub value: C64,
    /// Smallest pivot magnitude relative to the largest entry of the input.
    /// Zero for an exactly singular matrix.
    pub pivot_ratio: f64,
}

/// Determinant of a square complex matrix by LU with partial pivoting.
/// The empty matrix has determinant one.
pub fn determinant(m: &[Vec<C64>]) -> Determinant {
    let n = m.len();
    if n == 0 {
        return Determinant {
            value: C64::new(1.0, 0.0),
            pivot_ratio: 1.0,
        };
    }
    let mut a: CMatrix = m.to_vec();
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .map(|c| c.norm())
        .fold(0.0_f64, f64::max);
    if scale == 0.0 {
        return Determinant {
            value: C64::new(0.0, 0.0),
            pivot_ratio: 0.0,
        };
    }
    let mut det = C64::new(1.0, 0.0);
    let mut min_pivot = f64::INFINITY;
    for col in 0..n {
        let (piv, piv_mag) = (col..n)
            .map(|r| (r, a[r][col].norm()))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        min_pivot = min_pivot.min(piv_mag);
        if piv_mag == 0.0 {
            return Determinant {
                value: C64::new(0.0, 0.0),
                pivot_ratio: 0.0,
            };
        }
        if piv != col {
            a.swap(piv, col);
            det = -det;
        }
        let p = a[col][col];
        det *= p;
        for r in col + 1..n {
            let factor = a[r][col] / p;
            if factor == C64::new(0.0, 0.0) {
                continue;
            }
            for c in col..n {
                let v = a[col][c];
                a[r][c] -= factor * v;
            }
        }
    }
    Determinant {
        value: det,
        pivot_ratio: min_pivot / scale,
    }
}

/// A smooth map from a real parameter box into `C^n`.
pub trait ComplexPath {
    fn param_dim(&self) -> usize;
    fn value(&self, t: &[f64]) -> CVector;
    /// Analytic Jacobian, `jac[i][j] = d value_i / d t_j`, if available.
    fn jacobian(&self, _t: &[f64]) -> Option<CMatrix> {
        None
    }
}

/// Closure-backed [`ComplexPath`].
pub struct FnPath<F> {
    params: usize,
    f: F,
    jac: Option<Box<dyn Fn(&[f64]) -> CMatrix + Send + Sync>>,
}

impl<F: Fn(&[f64]) -> CVector> FnPath<F> {
    pub fn new(params: usize, f: F) -> Self {
        FnPath {
            params,
            f,
            jac: None,
        }
    }

    pub fn with_jacobian(
        mut self,
        jac: impl Fn(&[f64]) -> CMatrix + Send + Sync + 'static,
    ) -> Self {
        self.jac = Some(Box::new(jac));
        self
    }
}

impl<F: Fn(&[f64]) -> CVector> ComplexPath for FnPath<F> {
    fn param_dim(&self) -> usize {
        self.params
    }
    fn value(&self, t: &[f64]) -> CVector {
        (self.f)(t)
    }
    fn jacobian(&self, t: &[f64]) -> Option<CMatrix> {
        self.jac.as_ref().map(|j| j(t))
    }
}

/// Central-difference Jacobian of `f` at `t`, step `FD_STEP * max(1, |t_j|)`.
pub fn central_difference_jacobian(mut f: impl FnMut(&[f64]) -> CVector, t: &[f64]) -> CMatrix {
    let base = f(t);
    let n = base.dim();
    let mut jac = vec![vec![C64::new(0.0, 0.0); t.len()]; n];
    let mut probe = t.to_vec();
    for j in 0..t.len() {
        let h = FD_STEP * t[j].abs().max(1.0);
        probe[j] = t[j] + h;
        let plus = f(&probe);
        probe[j] = t[j] - h;
        let minus = f(&probe);
        probe[j] = t[j];
        for i in 0..n {
            jac[i][j] = (plus[i] - minus[i]) / (2.0 * h);
        }
    }
    jac
}

/// Pulled-back density of `omega'(eta)` together with a conditioning flag.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PullbackDensity {
    pub value: C64,
    /// Set when one of the Jacobian minors was numerically singular.
    pub ill_conditioned: bool,
}

const ILL_CONDITIONED_RATIO: f64 = 1e-12;

/// Density of `omega'(eta) = sum_k (-1)^(k-1) eta_k d eta_1 ∧ .. (omit k) .. ∧ d eta_n`
/// pulled back along `eta` at `t`. The path must have `n - 1` real parameters.
pub fn omega_prime_pullback_density(eta: &impl ComplexPath, t: &[f64]) -> Result<PullbackDensity> {
    let value = eta.value(t);
    let n = value.dim();
    if eta.param_dim() + 1 != n || t.len() != eta.param_dim() {
        return Err(Error::DimensionMismatch {
            expected: n.saturating_sub(1),
            got: t.len(),
        });
    }
    let jac = eta
        .jacobian(t)
        .unwrap_or_else(|| central_difference_jacobian(|s| eta.value(s), t));
    let mut total = C64::new(0.0, 0.0);
    let mut ill = false;
    for k in 0..n {
        let minor: CMatrix = (0..n).filter(|&i| i != k).map(|i| jac[i].clone()).collect();
        let d = determinant(&minor);
        if n > 1 && d.pivot_ratio < ILL_CONDITIONED_RATIO {
            ill = true;
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * value[k] * d.value;
    }
    Ok(PullbackDensity {
        value: total,
        ill_conditioned: ill,
    })
}

/// Density of `omega'(eta) ∧ omega(xi)` on a `(2n-1)`-parameter box.
///
/// `deta` and `dxi` are `n x (2n-1)` Jacobians with respect to the real
/// parameters.
pub fn leray_form_density(eta: &CVector, deta: &[Vec<C64>], dxi: &[Vec<C64>]) -> C64 {
    let n = eta.dim();
    let mut total = C64::new(0.0, 0.0);
    for k in 0..n {
        let mut rows: CMatrix = Vec::with_capacity(2 * n - 1);
        rows.extend((0..n).filter(|&i| i != k).map(|i| deta[i].clone()));
        rows.extend(dxi.iter().cloned());
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * eta[k] * determinant(&rows).value;
    }
    total
}

/// The defining function behind a convex-gradient section.
#[derive(Clone)]
pub enum DefiningFunction {
    /// `rho(xi) = |xi - c|^2 - R^2`.
    Ball { center: CVector, radius: f64 },
    /// A user-supplied real function and its complex gradient `d rho / d xi_j`.
    Custom {
        rho: Arc<dyn Fn(&CVector) -> f64 + Send + Sync>,
        gradient: Arc<dyn Fn(&CVector) -> CVector + Send + Sync>,
    },
}

impl DefiningFunction {
    fn value(&self, xi: &CVector) -> Result<f64> {
        match self {
            DefiningFunction::Ball { center, radius } => Ok(xi.sub(center)?.norm_sqr() - radius * radius),
            DefiningFunction::Custom { rho, .. } => Ok(rho(xi)),
        }
    }

    fn gradient(&self, xi: &CVector) -> Result<CVector> {
        match self {
            DefiningFunction::Ball { center, .. } => Ok(xi.sub(center)?.conj()),
            DefiningFunction::Custom { gradient, .. } => Ok(gradient(xi)),
        }
    }
}

type SectionFn = Arc<dyn Fn(&CVector, &CVector) -> Result<CVector> + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SectionKind {
    ReciprocalCauchy,
    Ball,
    PolydiskAveraged,
    BochnerMartinelli,
    ConvexGradient,
    UserSupplied,
}

#[derive(Clone)]
enum SectionImpl {
    Builtin,
    Convex(DefiningFunction),
    User(SectionFn),
}

/// A Leray section `eta(xi, z)` making the Cauchy–Fantappiè kernel well defined.
#[derive(Clone)]
pub struct LeraySection {
    kind: SectionKind,
    normalized: bool,
    imp: SectionImpl,
}

impl fmt::Debug for LeraySection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LeraySection")
            .field("kind", &self.kind)
            .field("normalized", &self.normalized)
            .finish()
    }
}

/// Wirtinger derivatives of a section with respect to `xi`:
/// `holo[j][m] = d eta_j / d xi_m`, `anti[j][m] = d eta_j / d conj(xi_m)`.
#[derive(Clone, Debug)]
pub struct Wirtinger {
    pub holo: CMatrix,
    pub anti: CMatrix,
}

fn zeros(n: usize) -> CMatrix {
    vec![vec![C64::new(0.0, 0.0); n]; n]
}

fn pole_check(den: C64, xi: &CVector, z: &CVector) -> Result<()> {
    let mag = den.norm();
    if !(mag >= POLE_THRESHOLD) {
        return Err(Error::PoleProximity {
            param: xi.components().iter().flat_map(|c| [c.re, c.im]).collect(),
            z: z.to_string(),
            magnitude: mag,
        });
    }
    Ok(())
}

impl LeraySection {
    pub fn builtin(kind: SectionKind) -> Result<Self> {
        match kind {
            SectionKind::ConvexGradient | SectionKind::UserSupplied => Err(Error::invalid(format!(
                "{kind:?} sections need a defining function or evaluator"
            ))),
            _ => Ok(LeraySection {
                kind,
                normalized: true,
                imp: SectionImpl::Builtin,
            }),
        }
    }

    pub fn reciprocal_cauchy() -> Self {
        Self::builtin(SectionKind::ReciprocalCauchy).expect("builtin")
    }

    pub fn ball() -> Self {
        Self::builtin(SectionKind::Ball).expect("builtin")
    }

    pub fn polydisk_averaged() -> Self {
        Self::builtin(SectionKind::PolydiskAveraged).expect("builtin")
    }

    pub fn bochner_martinelli() -> Self {
        Self::builtin(SectionKind::BochnerMartinelli).expect("builtin")
    }

    /// `eta = d rho(xi) / (<d rho(xi), xi - z> - rho(xi))`.
    ///
    /// On the boundary `rho = 0` this is the normalized gradient section; for
    /// convex `rho` the denominator does not vanish on the closed domain, so the
    /// section is smooth there (the Henkin choice).
    pub fn convex_gradient(rho: DefiningFunction) -> Self {
        LeraySection {
            kind: SectionKind::ConvexGradient,
            normalized: true,
            imp: SectionImpl::Convex(rho),
        }
    }

    pub fn user_supplied(
        normalized: bool,
        f: impl Fn(&CVector, &CVector) -> Result<CVector> + Send + Sync + 'static,
    ) -> Self {
        LeraySection {
            kind: SectionKind::UserSupplied,
            normalized,
            imp: SectionImpl::User(Arc::new(f)),
        }
    }

    pub fn kind(&self) -> SectionKind {
        self.kind
    }

    /// Whether `<eta, xi - z> = 1` on the cycle the section is used on.
    pub fn normalized(&self) -> bool {
        self.normalized
    }

    /// `true` when `eta` is smooth on the closed domain (usable by the
    /// domain-integral operators).
    pub fn smooth_on_closure(&self) -> bool {
        matches!(self.kind, SectionKind::ConvexGradient | SectionKind::UserSupplied)
    }

    pub fn eval(&self, xi: &CVector, z: &CVector) -> Result<CVector> {
        leray_section_eval(self, xi, z)
    }

    /// Analytic Wirtinger derivatives for the built-in kinds, central
    /// differences for the others.
    pub fn wirtinger(&self, xi: &CVector, z: &CVector) -> Result<Wirtinger> {
        let n = xi.dim();
        check_dims(n, z.dim())?;
        let d = xi.sub(z)?;
        match (&self.imp, self.kind) {
            (SectionImpl::Builtin, SectionKind::ReciprocalCauchy) => {
                check_dims(1, n)?;
                pole_check(d[0], xi, z)?;
                Ok(Wirtinger {
                    holo: vec![vec![-1.0 / (d[0] * d[0])]],
                    anti: zeros(1),
                })
            }
            (SectionImpl::Builtin, SectionKind::PolydiskAveraged) => {
                let mut holo = zeros(n);
                for j in 0..n {
                    pole_check(d[j], xi, z)?;
                    holo[j][j] = -1.0 / (n as f64 * d[j] * d[j]);
                }
                Ok(Wirtinger { holo, anti: zeros(n) })
            }
            (SectionImpl::Builtin, SectionKind::Ball) => {
                let xb = xi.conj();
                let s = bilinear_pair(&xb, &d)?;
                pole_check(s, xi, z)?;
                let s2 = s * s;
                let mut holo = zeros(n);
                let mut anti = zeros(n);
                for j in 0..n {
                    for m in 0..n {
                        holo[j][m] = -xb[j] * xb[m] / s2;
                        anti[j][m] = -xb[j] * d[m] / s2;
                        if j == m {
                            anti[j][m] += 1.0 / s;
                        }
                    }
                }
                Ok(Wirtinger { holo, anti })
            }
            (SectionImpl::Builtin, SectionKind::BochnerMartinelli) => {
                let db = d.conj();
                let q = C64::new(d.norm_sqr(), 0.0);
                pole_check(q, xi, z)?;
                let q2 = q * q;
                let mut holo = zeros(n);
                let mut anti = zeros(n);
                for j in 0..n {
                    for m in 0..n {
                        holo[j][m] = -db[j] * db[m] / q2;
                        anti[j][m] = -db[j] * d[m] / q2;
                        if j == m {
                            anti[j][m] += 1.0 / q;
                        }
                    }
                }
                Ok(Wirtinger { holo, anti })
            }
            (SectionImpl::Convex(DefiningFunction::Ball { center, radius }), _) => {
                // eta_j = conj(u_j) / phi, phi = R^2 - <conj(u), c - z> ... written out:
                // phi = <conj(u), d> - rho = R^2 - <conj(u), z - c>, u = xi - c.
                let u = xi.sub(center)?;
                let ub = u.conj();
                let zc = z.sub(center)?;
                let phi = C64::new(radius * radius, 0.0) - bilinear_pair(&ub, &zc)?;
                pole_check(phi, xi, z)?;
                let mut anti = zeros(n);
                for j in 0..n {
                    for m in 0..n {
                        anti[j][m] = ub[j] * zc[m] / (phi * phi);
                        if j == m {
                            anti[j][m] += 1.0 / phi;
                        }
                    }
                }
                Ok(Wirtinger { holo: zeros(n), anti })
            }
            _ => self.wirtinger_fd(xi, z),
        }
    }

    /// Wirtinger derivatives by central differences in the real coordinates.
    pub fn wirtinger_fd(&self, xi: &CVector, z: &CVector) -> Result<Wirtinger> {
        let n = xi.dim();
        let mut holo = zeros(n);
        let mut anti = zeros(n);
        let i = C64::new(0.0, 1.0);
        for m in 0..n {
            let h = FD_STEP * xi[m].norm().max(1.0);
            let shifted = |delta: C64| -> Result<CVector> {
                let mut c = xi.components().to_vec();
                c[m] += delta;
                self.eval(&CVector::from_vec_unchecked(c), z)
            };
            let (xp, xm) = (shifted(C64::new(h, 0.0))?, shifted(C64::new(-h, 0.0))?);
            let (yp, ym) = (shifted(C64::new(0.0, h))?, shifted(C64::new(0.0, -h))?);
            for j in 0..n {
                let dx = (xp[j] - xm[j]) / (2.0 * h);
                let dy = (yp[j] - ym[j]) / (2.0 * h);
                holo[j][m] = 0.5 * (dx - i * dy);
                anti[j][m] = 0.5 * (dx + i * dy);
            }
        }
        Ok(Wirtinger { holo, anti })
    }
}

/// Evaluates a Leray section at `(xi, z)`.
pub fn leray_section_eval(section: &LeraySection, xi: &CVector, z: &CVector) -> Result<CVector> {
    let n = xi.dim();
    check_dims(n, z.dim())?;
    let d = xi.sub(z)?;
    let eta = match (&section.imp, section.kind) {
        (SectionImpl::Builtin, SectionKind::ReciprocalCauchy) => {
            check_dims(1, n)?;
            pole_check(d[0], xi, z)?;
            vec![1.0 / d[0]]
        }
        (SectionImpl::Builtin, SectionKind::Ball) => {
            let xb = xi.conj();
            let s = bilinear_pair(&xb, &d)?;
            pole_check(s, xi, z)?;
            xb.components().iter().map(|c| c / s).collect()
        }
        (SectionImpl::Builtin, SectionKind::PolydiskAveraged) => {
            let w = 1.0 / n as f64;
            let mut out = Vec::with_capacity(n);
            for j in 0..n {
                pole_check(d[j], xi, z)?;
                out.push(w / d[j]);
            }
            out
        }
        (SectionImpl::Builtin, SectionKind::BochnerMartinelli) => {
            let q = d.norm_sqr();
            pole_check(C64::new(q, 0.0), xi, z)?;
            d.conj().components().iter().map(|c| c / q).collect()
        }
        (SectionImpl::Convex(rho), _) => {
            let g = rho.gradient(xi)?;
            let den = bilinear_pair(&g, &d)? - rho.value(xi)?;
            pole_check(den, xi, z)?;
            g.components().iter().map(|c| c / den).collect()
        }
        (SectionImpl::User(f), _) => {
            let eta = f(xi, z)?;
            check_dims(n, eta.dim())?;
            return Ok(eta);
        }
        (SectionImpl::Builtin, k) => unreachable!("builtin constructor rejects {k:?}"),
    };
    Ok(CVector::from_vec_unchecked(eta))
}

/// Value of the Leray integrand `f(xi) omega'(eta) ∧ omega(xi) / <eta, xi - z>^n`
/// pulled back to the cycle parameters at `t`.
///
/// When the cycle carries its own `eta` it is used directly; otherwise `eta`
/// is `section(xi(t), z)`. The `(n-1)!/(2 pi i)^n` prefactor is not applied.
pub fn leray_kernel_value(
    f_val: C64,
    section: Option<&LeraySection>,
    cycle: &CycleParam,
    t: &[f64],
    z: &CVector,
) -> Result<C64> {
    let sample = cycle.sample(t)?;
    let n = sample.xi.dim();
    check_dims(n, z.dim())?;
    if cycle.param_dim() != 2 * n - 1 {
        return Err(Error::DimensionMismatch {
            expected: 2 * n - 1,
            got: cycle.param_dim(),
        });
    }
    let (eta, deta) = match (sample.eta, sample.deta) {
        (Some(eta), Some(deta)) => (eta, deta),
        _ => {
            let section = section.ok_or_else(|| {
                Error::invalid("cycle carries no eta and no section was supplied")
            })?;
            section_along_cycle(section, cycle, t, &sample.xi, &sample.dxi, z)?
        }
    };
    let den = bilinear_pair(&eta, &sample.xi.sub(z)?)?;
    if !(den.norm() >= POLE_THRESHOLD) {
        return Err(Error::PoleProximity {
            param: t.to_vec(),
            z: z.to_string(),
            magnitude: den.norm(),
        });
    }
    if f_val == C64::new(0.0, 0.0) {
        return Ok(f_val);
    }
    let density = if n == 1 {
        eta[0] * sample.dxi[0][0]
    } else {
        leray_form_density(&eta, &deta, &sample.dxi)
    };
    Ok(f_val * density / den.powi(n as i32))
}

/// `eta(t) = section(xi(t), z)` and its parameter Jacobian by the chain rule
/// `d eta = D eta · d xi + Dbar eta · conj(d xi)`.
pub(crate) fn section_along_cycle(
    section: &LeraySection,
    cycle: &CycleParam,
    t: &[f64],
    xi: &CVector,
    dxi: &[Vec<C64>],
    z: &CVector,
) -> Result<(CVector, CMatrix)> {
    let n = xi.dim();
    let eta = section.eval(xi, z)?;
    if n == 1 {
        // Only eta itself enters the n = 1 density.
        return Ok((eta, vec![vec![C64::new(0.0, 0.0); t.len()]]));
    }
    let deta = match section.imp {
        SectionImpl::User(_) => {
            let mut err = None;
            let jac = central_difference_jacobian(
                |s| match cycle.point(s).and_then(|p| section.eval(&p, z)) {
                    Ok(v) => v,
                    Err(e) => {
                        err = Some(e);
                        CVector::from_vec_unchecked(vec![C64::new(f64::NAN, 0.0); n])
                    }
                },
                t,
            );
            if let Some(e) = err {
                return Err(e);
            }
            jac
        }
        _ => {
            let w = section.wirtinger(xi, z)?;
            let p = t.len();
            let mut deta = vec![vec![C64::new(0.0, 0.0); p]; n];
            for j in 0..n {
                for c in 0..p {
                    let mut acc = C64::new(0.0, 0.0);
                    for m in 0..n {
                        acc += w.holo[j][m] * dxi[m][c] + w.anti[j][m] * dxi[m][c].conj();
                    }
                    deta[j][c] = acc;
                }
            }
            deta
        }
    };
    Ok((eta, deta))
}
