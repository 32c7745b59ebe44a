//! Weighted sequence spaces on covering fibers.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::C64;
use crate::quadrature::KahanSum;

/// Residual above which local trivialization data is rejected.
pub const EQUIVARIANCE_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum WeightKind {
    Constant,
    /// `(1 + d_o)^alpha`
    Polynomial { alpha: f64 },
    /// `exp(alpha d_o)`
    Exponential { alpha: f64 },
}

/// A positive weight on a covering, evaluated through the path distance to
/// the base point `o`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Weight {
    pub kind: WeightKind,
    pub base_point: C64,
}

impl Weight {
    pub fn new(kind: WeightKind, base_point: C64) -> Result<Self> {
        match kind {
            WeightKind::Polynomial { alpha } | WeightKind::Exponential { alpha } if !alpha.is_finite() => {
                Err(Error::invalid("weight exponent must be finite"))
            }
            _ => Ok(Weight { kind, base_point }),
        }
    }

    pub fn constant() -> Self {
        Weight {
            kind: WeightKind::Constant,
            base_point: C64::new(0.0, 0.0),
        }
    }

    /// Weight value at path distance `d` from the base point.
    pub fn at_distance(&self, d: f64) -> f64 {
        match self.kind {
            WeightKind::Constant => 1.0,
            WeightKind::Polynomial { alpha } => (1.0 + d).powf(alpha),
            WeightKind::Exponential { alpha } => (alpha * d).exp(),
        }
    }

    /// Modulus of continuity of `log psi` with respect to the path metric.
    pub fn log_modulus(&self, delta: f64) -> f64 {
        match self.kind {
            WeightKind::Constant => 0.0,
            WeightKind::Polynomial { alpha } => alpha.abs() * (1.0 + delta).ln(),
            WeightKind::Exponential { alpha } => alpha.abs() * delta,
        }
    }

    /// `exp(omega(diam))`: weights at points `diam` apart differ by at most this factor.
    pub fn equivalence_constant(&self, diam: f64) -> f64 {
        self.log_modulus(diam).exp()
    }

    /// Triangle-inequality bound on `psi(h x) / psi(x)` when `d(x, h x) = shift`.
    pub fn dilation_bound(&self, shift: f64) -> f64 {
        self.equivalence_constant(shift)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub enum NormExponent {
    Finite(f64),
    Infinity,
}

impl NormExponent {
    pub fn finite(p: f64) -> Result<Self> {
        if p.is_infinite() && p > 0.0 {
            return Ok(NormExponent::Infinity);
        }
        if !(p >= 1.0) {
            return Err(Error::invalid(format!("norm exponent must be >= 1, got {p}")));
        }
        Ok(NormExponent::Finite(p))
    }

    /// `1/p`, zero for `p = inf`.
    pub fn reciprocal(&self) -> f64 {
        match *self {
            NormExponent::Finite(p) => 1.0 / p,
            NormExponent::Infinity => 0.0,
        }
    }
}

impl TryFrom<f64> for NormExponent {
    type Error = Error;
    fn try_from(p: f64) -> Result<Self> {
        NormExponent::finite(p)
    }
}

impl From<NormExponent> for f64 {
    fn from(p: NormExponent) -> f64 {
        match p {
            NormExponent::Finite(p) => p,
            NormExponent::Infinity => f64::INFINITY,
        }
    }
}

/// Values of a function on a finite window of a fiber, with weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FiberRecord", into = "FiberRecord")]
pub struct FiberData {
    base_point: C64,
    indices: Vec<i64>,
    values: Vec<C64>,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct FiberRecord {
    base_point: [f64; 2],
    indices: Vec<i64>,
    re: Vec<f64>,
    im: Vec<f64>,
    weights: Vec<f64>,
}

impl TryFrom<FiberRecord> for FiberData {
    type Error = Error;
    fn try_from(r: FiberRecord) -> Result<Self> {
        if r.re.len() != r.im.len() {
            return Err(Error::DimensionMismatch {
                expected: r.re.len(),
                got: r.im.len(),
            });
        }
        FiberData::new(
            C64::new(r.base_point[0], r.base_point[1]),
            r.indices,
            r.re.iter().zip(&r.im).map(|(&a, &b)| C64::new(a, b)).collect(),
            r.weights,
        )
    }
}

impl From<FiberData> for FiberRecord {
    fn from(d: FiberData) -> Self {
        FiberRecord {
            base_point: [d.base_point.re, d.base_point.im],
            indices: d.indices,
            re: d.values.iter().map(|v| v.re).collect(),
            im: d.values.iter().map(|v| v.im).collect(),
            weights: d.weights,
        }
    }
}

impl FiberData {
    pub fn new(base_point: C64, indices: Vec<i64>, values: Vec<C64>, weights: Vec<f64>) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: indices.len(),
                got: values.len(),
            });
        }
        if indices.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: indices.len(),
                got: weights.len(),
            });
        }
        let mut sorted = indices.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("fiber indices must be distinct"));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::invalid("fiber weights must be positive and finite"));
        }
        Ok(FiberData {
            base_point,
            indices,
            values,
            weights,
        })
    }

    /// Unit weights.
    pub fn unweighted(base_point: C64, indices: Vec<i64>, values: Vec<C64>) -> Result<Self> {
        let w = vec![1.0; indices.len()];
        Self::new(base_point, indices, values, w)
    }

    pub fn base_point(&self) -> C64 {
        self.base_point
    }

    pub fn indices(&self) -> &[i64] {
        &self.indices
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn value_at(&self, k: i64) -> Option<C64> {
        self.indices.iter().position(|&i| i == k).map(|p| self.values[p])
    }

    /// Same window and weights, new values.
    pub fn with_values(&self, values: Vec<C64>) -> Result<Self> {
        Self::new(self.base_point, self.indices.clone(), values, self.weights.clone())
    }
}

/// `(sum |v_k|^p psi_k)^(1/p)`; for `p = inf` the unweighted sup.
pub fn fiber_norm(d: &FiberData, p: NormExponent) -> Result<f64> {
    if d.is_empty() {
        return Err(Error::invalid("fiber window is empty"));
    }
    Ok(weighted_norm(d.values.iter().copied(), d.weights.iter().copied(), p))
}

pub(crate) fn weighted_norm(
    values: impl Iterator<Item = C64>,
    weights: impl Iterator<Item = f64>,
    p: NormExponent,
) -> f64 {
    match p {
        NormExponent::Infinity => values.map(|v| v.norm()).fold(0.0, f64::max),
        NormExponent::Finite(p) => {
            let s: KahanSum = values
                .zip(weights)
                .map(|(v, w)| C64::new(v.norm().powf(p) * w, 0.0))
                .collect();
            s.total().re.powf(1.0 / p)
        }
    }
}

/// Grid estimate of `sup_x |f|_{p, psi, x}`: a lower estimate of the true sup.
pub fn covering_norm_estimate(
    base_grid: &[C64],
    fiber: impl Fn(C64) -> Result<FiberData>,
    p: NormExponent,
) -> Result<f64> {
    if base_grid.is_empty() {
        return Err(Error::invalid("base grid is empty"));
    }
    let mut best = 0.0_f64;
    for &x in base_grid {
        best = best.max(fiber_norm(&fiber(x)?, p)?);
    }
    Ok(best)
}

/// Rectangle `[re0, re1] x [im0, im1]` with an `nx x ny` midpoint mesh.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RectMesh {
    pub re: (f64, f64),
    pub im: (f64, f64),
    pub nx: usize,
    pub ny: usize,
}

/// Midpoint-rule estimate of `(int |f|^p psi dV)^(1/p)` over a rectangle
/// of the strip; the sup over mesh midpoints for `p = inf`.
pub fn volume_norm_estimate(
    f: impl Fn(C64) -> C64,
    psi: impl Fn(C64) -> f64,
    p: NormExponent,
    mesh: &RectMesh,
) -> Result<f64> {
    if mesh.nx == 0 || mesh.ny == 0 || !(mesh.re.1 > mesh.re.0) || !(mesh.im.1 > mesh.im.0) {
        return Err(Error::invalid("volume mesh must be a nonempty rectangle"));
    }
    let hx = (mesh.re.1 - mesh.re.0) / mesh.nx as f64;
    let hy = (mesh.im.1 - mesh.im.0) / mesh.ny as f64;
    let points = (0..mesh.nx).flat_map(|i| {
        (0..mesh.ny).map(move |j| {
            C64::new(
                mesh.re.0 + hx * (i as f64 + 0.5),
                mesh.im.0 + hy * (j as f64 + 0.5),
            )
        })
    });
    let vals: Vec<(C64, f64)> = points.map(|w| (f(w), psi(w) * hx * hy)).collect();
    Ok(weighted_norm(
        vals.iter().map(|v| v.0),
        vals.iter().map(|v| v.1),
        p,
    ))
}

/// `max_x phi(h x) / phi(x)` over the window, given `phi` and the deck action.
pub fn dilation_constant(
    phi: impl Fn(C64) -> f64,
    deck: impl Fn(C64) -> C64,
    window: &[C64],
) -> Result<f64> {
    if window.is_empty() {
        return Err(Error::invalid("dilation window is empty"));
    }
    Ok(window
        .iter()
        .map(|&x| phi(deck(x)) / phi(x))
        .fold(0.0, f64::max))
}

/// Local product structure of a covering over a patch cover of its base.
///
/// Fiber points over `z` in patch `i` are labelled `chart(i, z, k)` for `k` in
/// `indices()`. On overlaps `chart(i, z, act(c_ij, k)) = chart(j, z, k)`.
pub trait LocalTrivialization: Sync {
    fn patch_count(&self) -> usize;
    fn contains(&self, i: usize, z: C64) -> bool;
    fn indices(&self) -> Vec<i64>;
    fn chart(&self, i: usize, z: C64, k: i64) -> C64;
    /// Transition value `c_ij`.
    fn transition(&self, i: usize, j: usize) -> i64;
    /// `tau(c)(k)`, or `None` when it leaves the window.
    fn act(&self, c: i64, k: i64) -> Option<i64>;
    /// Path distance on the covering.
    fn distance(&self, a: C64, b: C64) -> f64;
    /// Fiber over the reference base point, aligned with `indices()`; defines `phi`.
    fn reference_fiber(&self) -> Vec<C64>;
    /// Fiber over `z` in the global labelling, aligned with `indices()`.
    fn fiber(&self, z: C64) -> Vec<C64>;
}

/// Samples of `f_i(z, k)` on each patch.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectImage {
    pub indices: Vec<i64>,
    /// `patches[i]` lists `(z, values over indices)`.
    pub patches: Vec<Vec<(C64, Vec<C64>)>>,
    pub max_residual: f64,
}

/// Local trivialization data `f_i(z, k) = f(chart_i(z, k))` on every patch,
/// with the equivariance `f_i(z, tau(c_ij) k) = f_j(z, k)` checked on overlaps.
pub fn direct_image(
    f: impl Fn(C64) -> C64,
    cover: &impl LocalTrivialization,
    base_grid: &[C64],
) -> Result<DirectImage> {
    let indices = cover.indices();
    let np = cover.patch_count();
    let mut patches: Vec<Vec<(C64, Vec<C64>)>> = vec![Vec::new(); np];
    for &z in base_grid {
        let mut covered = false;
        for (i, patch) in patches.iter_mut().enumerate() {
            if cover.contains(i, z) {
                covered = true;
                patch.push((z, indices.iter().map(|&k| f(cover.chart(i, z, k))).collect()));
            }
        }
        if !covered {
            return Err(Error::invalid(format!("base point {z} lies in no patch")));
        }
    }
    let pos = |k: i64| indices.iter().position(|&j| j == k);
    let mut max_residual = 0.0_f64;
    for i in 0..np {
        for j in 0..np {
            if i == j {
                continue;
            }
            let c = cover.transition(i, j);
            for (z, fi) in &patches[i] {
                let Some((_, fj)) = patches[j].iter().find(|(w, _)| w == z) else {
                    continue;
                };
                for (kj, &k) in indices.iter().enumerate() {
                    let Some(ki) = cover.act(c, k).and_then(pos) else {
                        continue;
                    };
                    let r = (fi[ki] - fj[kj]).norm();
                    max_residual = max_residual.max(r);
                    if !(r <= EQUIVARIANCE_TOLERANCE) {
                        return Err(Error::InconsistentCocycle { i, j, residual: r });
                    }
                }
            }
        }
    }
    Ok(DirectImage {
        indices,
        patches,
        max_residual,
    })
}

impl DirectImage {
    /// Inverse direction: `f(chart_i(z, k)) := f_i(z, k)` at every sample.
    pub fn assemble(&self, cover: &impl LocalTrivialization) -> Vec<(C64, C64)> {
        let mut out = Vec::new();
        for (i, patch) in self.patches.iter().enumerate() {
            for (z, vals) in patch {
                for (&k, &v) in self.indices.iter().zip(vals) {
                    out.push((cover.chart(i, *z, k), v));
                }
            }
        }
        out
    }
}

/// Outcome of comparing local-trivialization norms with covering norms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormEquivalence {
    /// min over samples of `||f_i(z, .)||_{p, phi} / |f|_{p, psi, z}`.
    pub ratio_low: f64,
    /// max over samples of the same ratio.
    pub ratio_high: f64,
    /// `sup_{i,z} ||f_i(z, .)||_{p, phi} / sup_z |f|_{p, psi, z}`.
    pub sup_ratio: f64,
    /// `C^(1/p)`; ratios must lie in `[1 / bound, bound]`.
    pub bound: f64,
    /// Largest distance between a labelled fiber point and its reference point.
    pub diameter: f64,
    /// Set when `f` vanished on every sampled fiber.
    pub degenerate: bool,
}

impl NormEquivalence {
    pub fn within_band(&self, tol: f64) -> bool {
        let lo = 1.0 / self.bound;
        [self.ratio_low, self.ratio_high, self.sup_ratio]
            .iter()
            .all(|&r| r >= lo * (1.0 - tol) && r <= self.bound * (1.0 + tol))
    }
}

/// Measures both sides of the direct-image norm equivalence on a grid.
///
/// `phi(k)` is `psi` at the `k`-th point of the reference fiber. The analytic
/// constant is `C = exp(omega(diam))` where `diam` is the largest distance
/// between `chart_i(z, k)` and the reference point `k`.
pub fn norm_equivalence_report(
    f: impl Fn(C64) -> C64,
    cover: &impl LocalTrivialization,
    base_grid: &[C64],
    weight: &Weight,
    p: NormExponent,
) -> Result<NormEquivalence> {
    if base_grid.is_empty() {
        return Err(Error::invalid("base grid is empty"));
    }
    let psi = |y: C64| weight.at_distance(cover.distance(weight.base_point, y));
    let reference = cover.reference_fiber();
    let phi: Vec<f64> = reference.iter().map(|&y| psi(y)).collect();
    let indices = cover.indices();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
    let (mut sup_local, mut sup_global) = (0.0_f64, 0.0_f64);
    let mut diam = 0.0_f64;
    let mut any = false;
    for &z in base_grid {
        let fib = cover.fiber(z);
        let global = weighted_norm(fib.iter().map(|&y| f(y)), fib.iter().map(|&y| psi(y)), p);
        sup_global = sup_global.max(global);
        for i in 0..cover.patch_count() {
            if !cover.contains(i, z) {
                continue;
            }
            let pts: Vec<C64> = indices.iter().map(|&k| cover.chart(i, z, k)).collect();
            for (y, r) in pts.iter().zip(&reference) {
                diam = diam.max(cover.distance(*y, *r));
            }
            let local = weighted_norm(pts.iter().map(|&y| f(y)), phi.iter().copied(), p);
            sup_local = sup_local.max(local);
            if global > 0.0 {
                any = true;
                lo = lo.min(local / global);
                hi = hi.max(local / global);
            }
        }
    }
    let bound = weight.equivalence_constant(diam).powf(p.reciprocal());
    if !any {
        return Ok(NormEquivalence {
            ratio_low: 1.0,
            ratio_high: 1.0,
            sup_ratio: 1.0,
            bound,
            diameter: diam,
            degenerate: true,
        });
    }
    Ok(NormEquivalence {
        ratio_low: lo,
        ratio_high: hi,
        sup_ratio: sup_local / sup_global,
        bound,
        diameter: diam,
        degenerate: false,
    })
}

/// Norm deviations `||tau_n^*(f|fiber(x_n)) - f|fiber(x)||_{p, psi, x}` with
/// fibers aligned through the charts of a single patch.
pub fn continuity_check(
    f: impl Fn(C64) -> C64,
    cover: &impl LocalTrivialization,
    patch: usize,
    sequence: &[C64],
    x: C64,
    weight: &Weight,
    p: NormExponent,
) -> Result<Vec<f64>> {
    if patch >= cover.patch_count() {
        return Err(Error::invalid(format!("no patch {patch}")));
    }
    if !cover.contains(patch, x) {
        return Err(Error::invalid(format!("limit point {x} is outside patch {patch}")));
    }
    let indices = cover.indices();
    let target: Vec<C64> = indices.iter().map(|&k| cover.chart(patch, x, k)).collect();
    let psi: Vec<f64> = target
        .iter()
        .map(|&y| weight.at_distance(cover.distance(weight.base_point, y)))
        .collect();
    let fx: Vec<C64> = target.iter().map(|&y| f(y)).collect();
    sequence
        .iter()
        .map(|&xn| {
            if !cover.contains(patch, xn) {
                return Err(Error::invalid(format!(
                    "sequence point {xn} is outside patch {patch}; fibers cannot be aligned"
                )));
            }
            let diff = indices
                .iter()
                .zip(&fx)
                .map(|(&k, &v)| f(cover.chart(patch, xn, k)) - v);
            Ok(weighted_norm(diff, psi.iter().copied(), p))
        })
        .collect()
}

/// A Banach-valued Taylor coefficient together with its Cauchy estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct TaylorCoefficient {
    pub alpha: Vec<usize>,
    pub data: FiberData,
    pub norm: f64,
    /// `C^(1/p) |f| / r^|alpha|`.
    pub bound: f64,
    pub bound_ok: bool,
}

/// `c_alpha(k) = (2 pi)^-n int_torus f(x + r e^{i theta}, k) prod (r e^{i theta_j})^-alpha_j d theta`
/// by the periodic trapezoid with `n_quad` nodes per angle.
///
/// `window` supplies the fiber indices and the weights `phi`. `|f|` is
/// estimated as the max over torus nodes of `||f(w, .)||_{p, phi}`, and
/// `c_const` is the equivalence constant `C`.
#[allow(clippy::too_many_arguments)]
pub fn banach_taylor_coefficients(
    f: impl Fn(&[C64], i64) -> C64 + Sync,
    window: &FiberData,
    center: &[C64],
    radius: f64,
    alpha: &[usize],
    n_quad: usize,
    p: NormExponent,
    c_const: f64,
) -> Result<TaylorCoefficient> {
    let n = center.len();
    if n == 0 || alpha.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: alpha.len(),
        });
    }
    if n_quad < 4 || !(radius > 0.0) {
        return Err(Error::invalid("Taylor quadrature needs N >= 4 and r > 0"));
    }
    if !(c_const >= 1.0) {
        return Err(Error::invalid("equivalence constant must be >= 1"));
    }
    let total = n_quad.pow(n as u32);
    let h = 2.0 * PI / n_quad as f64;
    let indices = window.indices();
    let mut sums = vec![KahanSum::new(); indices.len()];
    let mut fmax = 0.0_f64;
    let mut w = vec![C64::new(0.0, 0.0); n];
    for flat in 0..total {
        let mut rem = flat;
        let mut factor = C64::new(1.0, 0.0);
        for j in (0..n).rev() {
            let theta = h * (rem % n_quad) as f64;
            rem /= n_quad;
            let e = C64::from_polar(radius, theta);
            w[j] = center[j] + e;
            factor *= e.powi(-(alpha[j] as i32));
        }
        let vals: Vec<C64> = indices.iter().map(|&k| f(&w, k)).collect();
        if let Some(bad) = vals.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::PoisonedSample {
                node: vec![flat, bad],
                param: w.iter().flat_map(|c| [c.re, c.im]).collect(),
            });
        }
        fmax = fmax.max(weighted_norm(vals.iter().copied(), window.weights().iter().copied(), p));
        for (s, v) in sums.iter_mut().zip(&vals) {
            s.add(v * factor);
        }
    }
    let scale = 1.0 / total as f64;
    let coeffs: Vec<C64> = sums.iter().map(|s| s.total() * scale).collect();
    let data = window.with_values(coeffs)?;
    let norm = fiber_norm(&data, p)?;
    let order: usize = alpha.iter().sum();
    let bound = c_const.powf(p.reciprocal()) * fmax / radius.powi(order as i32);
    Ok(TaylorCoefficient {
        alpha: alpha.to_vec(),
        data,
        norm,
        bound,
        bound_ok: norm <= bound * (1.0 + 1e-12),
    })
}

/// All multi-indices of `n` variables with `|alpha| <= order`, graded lexicographically.
pub fn multi_indices(n: usize, order: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for a in 0..=left {
            cur.push(a);
            rec(n, left - a, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, order, &mut Vec::new(), &mut out);
    out.sort_by_key(|a| a.iter().sum::<usize>());
    out
}
