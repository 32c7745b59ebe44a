//! Experiment runners: each composes library operations and records
//! values, oracles and tolerance checks.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use anyhow::{anyhow, Context};
use holocover::{
    banach_taylor_coefficients, build_interpolator, cauchy_green_h, cauchy_green_k, cocycle_roundtrip,
    dilation_constant, gauss_legendre_segment, interp_matrix_b_norm, leray_reconstruct, norm_equivalence_report,
    periodic_trapezoid, restriction, singular_planar_integral, three_arc_cocycle, AnnulusPair, ArcCover, CVector,
    CardinalKernel, CoveringKind, CoveringLeray, CoveringSpec, DeckGroup, Domain, FiberData, LeraySection,
    LocalTrivialization, PlanarDomain, PlanarResolution, RepresentationTask, TestFunction, Weight, WeightKind, C64,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::config::*;
use crate::report::{Cell, Check, Report, Table};

type CovFn = Box<dyn Fn(C64) -> C64 + Send + Sync>;

/// Short stable label for a test function.
pub fn function_label(f: &TestFunction) -> String {
    match f {
        TestFunction::Monomial { powers } => {
            let p: Vec<String> = powers.iter().map(|a| a.to_string()).collect();
            format!("monomial({})", p.join(";"))
        }
        TestFunction::ConjMonomial { holo, anti } => format!("conj-monomial({holo};{anti})"),
        TestFunction::Exp => "exp".into(),
        TestFunction::PullbackPoly { coeffs } => format!("pullback-poly(deg {})", coeffs.len().saturating_sub(1)),
        TestFunction::CardinalSum { coeffs, .. } => format!("cardinal-sum({} terms)", coeffs.len()),
    }
}

/// A covering function, with any interpolator built once.
fn covering_function(f: &TestFunction, cov: &CoveringSpec) -> anyhow::Result<CovFn> {
    match f {
        TestFunction::CardinalSum {
            coeffs,
            center,
            window,
            kernel,
        } => {
            let op = holocover::build_interpolator_with_kernel(cov, cx(*center), *window as i64, *kernel)?;
            for (k, _) in coeffs {
                if k.unsigned_abs() as usize > *window {
                    return Err(anyhow!("cardinal-sum label {k} outside window {window}"));
                }
            }
            let coeffs: Vec<(i64, C64)> = coeffs.iter().map(|(k, v)| (*k, cx(*v))).collect();
            Ok(Box::new(move |y| coeffs.iter().map(|(k, v)| v * op.basis(*k, y)).sum()))
        }
        _ => {
            let f = f.clone();
            let cov = *cov;
            // validate once so the closure cannot fail
            f.eval_covering(&cov, cov.fiber_point(C64::new(1.0, 0.0), 0)?)?;
            Ok(Box::new(move |y| f.eval_covering(&cov, y).expect("validated covering function")))
        }
    }
}

fn eval(f: &TestFunction, z: &CVector) -> C64 {
    f.eval(z).expect("validated test function")
}

/// Runs one experiment; runtime failures are recorded in the report.
pub fn run_experiment(cfg: &ExperimentConfig, seed: u64) -> Report {
    let inputs = serde_json::to_value(cfg).expect("config serializes");
    let formula = match cfg {
        ExperimentConfig::Reconstruct(_) => "leray",
        ExperimentConfig::CoveringReconstruct(_) => "covering-leray",
        ExperimentConfig::DbarIdentity(_) => "cauchy-green",
        ExperimentConfig::Norms(_) => "direct-image-norms",
        ExperimentConfig::Dilation(_) => "weight-dilation",
        ExperimentConfig::InterpCheck(_) => "interpolation-contract",
        ExperimentConfig::Cocycle(_) => "cocycle-gluing",
        ExperimentConfig::Convergence(_) => "quadrature-convergence",
    };
    let mut report = Report::new(cfg.id(), cfg.name(), formula, seed, inputs);
    let result = match cfg {
        ExperimentConfig::Reconstruct(c) => reconstruct(c, &mut report),
        ExperimentConfig::CoveringReconstruct(c) => covering_reconstruct(c, &mut report),
        ExperimentConfig::DbarIdentity(c) => dbar_identity(c, &mut report),
        ExperimentConfig::Norms(c) => norms(c, &mut report),
        ExperimentConfig::Dilation(c) => dilation(c, &mut report),
        ExperimentConfig::InterpCheck(c) => interp_check(c, seed, &mut report),
        ExperimentConfig::Cocycle(c) => cocycle(c, &mut report),
        ExperimentConfig::Convergence(c) => convergence(c, &mut report),
    }
    .with_context(|| format!("experiment {} ({})", cfg.id(), cfg.name()));
    if let Err(e) = result {
        report.error = Some(format!("{e:#}"));
    }
    report.finish()
}

/// Runs a batch in parallel; reports come back in config order with their wall times.
pub fn run_batch(cfg: &RunConfig, seed: u64) -> Vec<(Report, Duration)> {
    cfg.experiments
        .par_iter()
        .map(|e| {
            let start = Instant::now();
            let r = run_experiment(e, seed);
            (r, start.elapsed())
        })
        .collect()
}

fn push_z(row: &mut Vec<Cell>, z: C64) {
    row.push(z.re.into());
    row.push(z.im.into());
}

fn reconstruct(c: &ReconstructConfig, report: &mut Report) -> anyhow::Result<()> {
    let points = c.grid.points("grid")?;
    let dim = c.domain.dim();
    let values_for = |kind| -> anyhow::Result<Vec<Vec<C64>>> {
        let section = build_section(kind, &c.domain).map_err(|m| anyhow!(m))?;
        let task = RepresentationTask::new(c.domain.clone(), section, c.nodes)?;
        c.functions
            .iter()
            .map(|f| {
                points
                    .par_iter()
                    .map(|z| Ok(leray_reconstruct(|x| eval(f, x), &task, z)?))
                    .collect::<anyhow::Result<Vec<C64>>>()
            })
            .collect()
    };
    let values = values_for(c.section)?;
    let mut header = vec!["z_re", "z_im", "value_re", "value_im", "oracle_re", "oracle_im", "abs_err", "function"];
    let extra: Vec<String> = (2..=dim).flat_map(|j| [format!("z{j}_re"), format!("z{j}_im")]).collect();
    header.extend(extra.iter().map(String::as_str));
    let mut table = Table::new(&header);
    let mut per_function = Vec::new();
    let mut worst = 0.0_f64;
    for (f, vals) in c.functions.iter().zip(&values) {
        let oracles: Vec<C64> = points.iter().map(|z| eval(f, z)).collect();
        let scale = if c.relative {
            oracles.iter().map(|o| o.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE)
        } else {
            1.0
        };
        let mut max_err = 0.0_f64;
        for ((z, v), o) in points.iter().zip(vals).zip(&oracles) {
            let err = (v - o).norm();
            max_err = max_err.max(err / scale);
            let mut row: Vec<Cell> = Vec::new();
            push_z(&mut row, z[0]);
            push_z(&mut row, *v);
            push_z(&mut row, *o);
            row.push(err.into());
            row.push(function_label(f).into());
            for j in 1..dim {
                push_z(&mut row, z[j]);
            }
            table.push(row);
        }
        worst = worst.max(max_err);
        per_function.push(json!({"function": function_label(f), "max_error": max_err, "scale": scale}));
    }
    report.check(Check::at_most(
        if c.relative { "max-relative-error" } else { "max-abs-error" },
        worst,
        c.tol,
    ));
    let mut spreads = Vec::new();
    for &other in &c.compare_sections {
        let alt = values_for(other)?;
        let spread = values
            .iter()
            .flatten()
            .zip(alt.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        report.check(Check::at_most(
            format!("section-spread:{}", serde_json::to_value(other)?.as_str().unwrap_or("?")),
            spread,
            c.spread_tol,
        ));
        spreads.push(json!({"section": other, "spread": spread}));
    }
    report.output("functions", per_function);
    report.output("section_spreads", spreads);
    report.output("points", points.len());
    report.table = table;
    Ok(())
}

fn covering_reconstruct(c: &CoveringReconstructConfig, report: &mut Report) -> anyhow::Result<()> {
    let cov = c.covering.spec().map_err(|m| anyhow!(m))?;
    let window = c.covering.window;
    let kernel = match &c.function {
        TestFunction::CardinalSum { kernel, .. } => *kernel,
        _ => CardinalKernel::Sinc,
    };
    let engine = CoveringLeray::new(&cov, c.nodes, window.max(1), kernel)?;
    let f = covering_function(&c.function, &cov)?;
    let labels: Vec<i64> = if !c.sheets.is_empty() {
        c.sheets.clone()
    } else {
        match cov.kind {
            CoveringKind::StripZ => (-2..=2).collect(),
            CoveringKind::Finite { m } => (0..m as i64).collect(),
        }
    };
    let fiber = |xi: C64| restriction(&f, &cov, xi, window, &Weight::constant());
    let mut table = Table::new(&[
        "z_re", "z_im", "value_re", "value_im", "oracle_re", "oracle_im", "abs_err", "label", "x_re", "x_im",
    ]);
    let mut worst = 0.0_f64;
    for &zp in &c.base_points {
        let z = cx(zp);
        for &k in &labels {
            let x = cov.fiber_point(z, k)?;
            let v = engine.reconstruct(fiber, x, z)?;
            let o = f(x);
            let err = (v - o).norm();
            worst = worst.max(err);
            let mut row = Vec::new();
            push_z(&mut row, z);
            push_z(&mut row, v);
            push_z(&mut row, o);
            row.push(err.into());
            row.push(k.into());
            push_z(&mut row, x);
            table.push(row);
        }
    }
    report.check(Check::at_most("max-abs-error", worst, c.tol));
    report.output("max_abs_error", worst);
    report.output("boundary_nodes", engine.node_count());
    report.output("kernel", kernel);
    report.table = table;
    Ok(())
}

fn dbar_identity(c: &DbarIdentityConfig, report: &mut Report) -> anyhow::Result<()> {
    let section = build_section(c.section, &c.domain).map_err(|m| anyhow!(m))?;
    let task = RepresentationTask::new(c.domain.clone(), section, c.nodes)?
        .with_s(c.s)
        .with_planar(c.planar());
    let points = c.grid.points("grid")?;
    let mut table = Table::new(&[
        "function", "z_re", "z_im", "f_re", "f_im", "k_re", "k_im", "h_re", "h_im", "residual",
    ]);
    let mut summary = Vec::new();
    for f in &c.functions {
        let rows: Vec<(C64, C64, C64)> = points
            .par_iter()
            .map(|z| {
                let k = cauchy_green_k(|x| eval(f, x), &task, z)?;
                let h = cauchy_green_h(|x| f.dbar(x).expect("validated"), &task, z)?;
                Ok((eval(f, z), k, h))
            })
            .collect::<anyhow::Result<_>>()?;
        let mut worst = 0.0_f64;
        for (z, (fz, k, h)) in points.iter().zip(&rows) {
            let res = (fz - k - h).norm();
            worst = worst.max(res);
            let mut row: Vec<Cell> = vec![function_label(f).into()];
            push_z(&mut row, z[0]);
            push_z(&mut row, *fz);
            push_z(&mut row, *k);
            push_z(&mut row, *h);
            row.push(res.into());
            table.push(row);
        }
        let tol = if f.is_holomorphic() { c.holo_tol } else { c.tol };
        report.check(Check::at_most(format!("residual:{}", function_label(f)), worst, tol));
        summary.push(json!({"function": function_label(f), "max_residual": worst, "holomorphic": f.is_holomorphic()}));
    }
    if c.s >= 1 {
        report.notes.push("domain-integral operators (s >= 1) with the convex-gradient section".into());
    }
    report.output("functions", summary);
    report.output("s", c.s);
    report.table = table;
    Ok(())
}

fn norms(c: &NormsConfig, report: &mut Report) -> anyhow::Result<()> {
    let cov = c.covering.spec().map_err(|m| anyhow!(m))?;
    let cover = ArcCover::three_arcs(&cov, c.covering.window);
    let p = c.p.exponent().map_err(|m| anyhow!(m))?;
    let grid = c.base_grid.scalar_points("base_grid")?;
    let f = covering_function(&c.function, &cov)?;
    let mut table = Table::new(&[
        "weight", "ratio_low", "ratio_high", "sup_ratio", "bound", "diameter", "degenerate",
    ]);
    let mut out = Vec::new();
    for kind in &c.weights {
        let weight = Weight::new(*kind, cov.base_point)?;
        let eq = norm_equivalence_report(&f, &cover, &grid, &weight, p)?;
        let name = weight_label(kind);
        if *kind == WeightKind::Constant {
            let dev = [eq.ratio_low, eq.ratio_high, eq.sup_ratio]
                .iter()
                .map(|r| (r - 1.0).abs())
                .fold(0.0, f64::max);
            report.check(Check::at_most(format!("isometry:{name}"), dev, c.isometry_tol));
        } else {
            let excess = [eq.ratio_high, eq.sup_ratio, 1.0 / eq.ratio_low, 1.0 / eq.sup_ratio]
                .iter()
                .fold(0.0_f64, |a, &r| a.max(r))
                / eq.bound;
            report.check(Check::at_most(format!("band:{name}"), excess, 1.0 + c.band_tol));
        }
        report.check(Check::flag(format!("nondegenerate:{name}"), !eq.degenerate));
        table.push(vec![
            name.clone().into(),
            eq.ratio_low.into(),
            eq.ratio_high.into(),
            eq.sup_ratio.into(),
            eq.bound.into(),
            eq.diameter.into(),
            eq.degenerate.into(),
        ]);
        out.push(json!({"weight": name, "report": eq}));
    }
    report.output("equivalence", out);
    report.table = table;
    if let Some(t) = &c.taylor {
        taylor(t, &cov, &cover, &grid, p, report)?;
    }
    Ok(())
}

fn weight_label(kind: &WeightKind) -> String {
    match kind {
        WeightKind::Constant => "constant".into(),
        WeightKind::Polynomial { alpha } => format!("polynomial({alpha})"),
        WeightKind::Exponential { alpha } => format!("exponential({alpha})"),
    }
}

fn taylor(
    t: &TaylorConfig,
    cov: &CoveringSpec,
    cover: &ArcCover,
    grid: &[C64],
    p: holocover::NormExponent,
    report: &mut Report,
) -> anyhow::Result<()> {
    let x = cx(t.center);
    let patch = (0..cover.patch_count())
        .find(|&i| cover.contains(i, x))
        .ok_or_else(|| anyhow!("taylor.center is not in any patch"))?;
    let weight = Weight::new(t.weight, cov.base_point)?;
    let indices = cover.indices();
    let phi: Vec<f64> = cover
        .reference_fiber()
        .iter()
        .map(|&y| weight.at_distance(cover.distance(weight.base_point, y)))
        .collect();
    let window = FiberData::new(x, indices.clone(), vec![C64::new(0.0, 0.0); indices.len()], phi)?;
    let mut worst_ratio = 0.0_f64;
    let mut worst_recon = 0.0_f64;
    let mut all_ok = true;
    let mut rows = Vec::new();
    for g in &t.functions {
        let f = covering_function(g, cov)?;
        let eq = norm_equivalence_report(&f, cover, grid, &weight, p)?;
        let c_const = weight.equivalence_constant(eq.diameter);
        let section = |w: &[C64], k: i64| f(cover.chart(patch, w[0], k));
        let mut coeffs = Vec::with_capacity(t.recon_order + 1);
        for a in 0..=t.recon_order {
            let tc = banach_taylor_coefficients(section, &window, &[x], t.radius, &[a], t.n_quad, p, c_const)?;
            if a <= t.max_order {
                all_ok &= tc.bound_ok;
                if tc.bound > 0.0 {
                    worst_ratio = worst_ratio.max(tc.norm / tc.bound);
                }
                rows.push(json!({"function": function_label(g), "alpha": a, "norm": tc.norm, "bound": tc.bound}));
            }
            coeffs.push(tc.data);
        }
        for off in &t.recon_offsets {
            let d = cx(*off);
            for (j, &k) in indices.iter().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                let mut pow = C64::new(1.0, 0.0);
                for c in &coeffs {
                    acc += c.values()[j] * pow;
                    pow *= d;
                }
                worst_recon = worst_recon.max((acc - section(&[x + d], k)).norm());
            }
        }
    }
    report.check(Check::flag("cauchy-estimates", all_ok));
    report.check(Check::at_most("cauchy-estimate-ratio", worst_ratio, 1.0));
    report.check(Check::at_most("taylor-reconstruction", worst_recon, t.recon_tol));
    report.output("taylor_coefficients", rows);
    report.output("taylor_reconstruction_error", worst_recon);
    Ok(())
}

fn dilation(c: &DilationConfig, report: &mut Report) -> anyhow::Result<()> {
    let cov = c.covering.spec().map_err(|m| anyhow!(m))?;
    let grid = c.base_grid.scalar_points("base_grid")?;
    let mut window = Vec::new();
    for &z in &grid {
        window.extend(cov.fiber_points(z, c.covering.window)?);
    }
    let mut table = Table::new(&["weight", "h", "c_h", "brute_force", "bound"]);
    let mut out = Vec::new();
    for kind in &c.weights {
        let weight = Weight::new(*kind, cov.base_point)?;
        let name = weight_label(kind);
        let phi = |y: C64| cov.weight_at(&weight, y);
        for &h in &c.shifts {
            let c_h = dilation_constant(phi, |y| cov.deck(y, h), &window)?;
            let mut brute = f64::NEG_INFINITY;
            let mut shift = 0.0_f64;
            for &y in &window {
                let hy = cov.deck(y, h);
                let r = phi(hy) / phi(y);
                if r > brute {
                    brute = r;
                }
                shift = shift.max(cov.path_distance(y, hy));
            }
            let bound = weight.dilation_bound(shift);
            report.check(Check::equals(format!("brute-force:{name}:h={h}"), c_h, brute));
            report.check(Check::at_most(format!("bound:{name}:h={h}"), c_h, bound * (1.0 + 1e-12)));
            if *kind == WeightKind::Constant {
                report.check(Check::equals(format!("constant:h={h}"), c_h, 1.0));
            }
            table.push(vec![name.clone().into(), h.into(), c_h.into(), brute.into(), bound.into()]);
            out.push(json!({"weight": name, "h": h, "c_h": c_h, "bound": bound}));
        }
    }
    report.output("dilation", out);
    report.table = table;
    Ok(())
}

/// Sup of the B-norm of `S(h, g) = B_h(fiber point g over z')` over all grid pairs.
pub fn b_norm_sup(cov: &CoveringSpec, grid: &[C64]) -> anyhow::Result<f64> {
    let m = cov.sheets().ok_or_else(|| anyhow!("B-norm supremum is defined for finite coverings"))? as usize;
    let phi = vec![1.0; m];
    let sups = grid
        .par_iter()
        .map(|&z| {
            let op = build_interpolator(cov, z, 1)?;
            let mut best = 0.0_f64;
            for &zp in grid {
                best = best.max(interp_matrix_b_norm(&op, zp, &phi)?);
            }
            Ok(best)
        })
        .collect::<anyhow::Result<Vec<f64>>>()?;
    Ok(sups.into_iter().fold(0.0, f64::max))
}

fn interp_check(c: &InterpCheckConfig, seed: u64, report: &mut Report) -> anyhow::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table = Table::new(&["covering", "grid_side", "b_norm_sup", "relative_change"]);
    let mut out = Vec::new();
    for cc in &c.coverings {
        let cov = cc.spec().map_err(|m| anyhow!(m))?;
        let name = match cov.kind {
            CoveringKind::StripZ => "strip-z".to_string(),
            CoveringKind::Finite { m } => format!("finite-{m}"),
        };
        let (r1, r2) = (cov.annulus.r1(), cov.annulus.r2());
        let window = cc.window.max(1);
        let mut worst = 0.0_f64;
        for _ in 0..c.trials {
            let r = rng.gen_range(r1..r2);
            let th = rng.gen_range(-PI..PI);
            let z = C64::from_polar(r, th);
            let op = build_interpolator(&cov, z, window as i64)?;
            let h: Vec<C64> = (0..op.indices().len())
                .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let pts = cov.fiber_points(z, window)?;
            for (y, hk) in pts.iter().zip(&h) {
                worst = worst.max((op.apply(&h, *y)? - hk).norm());
            }
        }
        report.check(Check::at_most(format!("roundtrip:{name}"), worst, c.roundtrip_tol));
        let mut entry = json!({"covering": name, "roundtrip_error": worst});
        if let Some(m) = cov.sheets() {
            let phi = vec![1.0; m as usize];
            let mut sups = Vec::new();
            let mut diag = 0.0_f64;
            for &side in &c.refinements {
                let grid = annular_points(C64::new(0.0, 0.0), r1, r2, side, side);
                for &z in &grid {
                    let op = build_interpolator(&cov, z, 1)?;
                    diag = diag.max((interp_matrix_b_norm(&op, z, &phi)? - 1.0).abs());
                }
                let sup = b_norm_sup(&cov, &grid)?;
                let change = sups.last().map(|prev: &f64| (sup - prev).abs() / prev);
                table.push(vec![name.clone().into(), side.into(), sup.into(), change.into()]);
                sups.push(sup);
            }
            let change = sups.windows(2).map(|w| (w[1] - w[0]).abs() / w[0]).fold(0.0, f64::max);
            report.check(Check::flag(format!("b-norm-finite:{name}"), sups.iter().all(|s| s.is_finite())));
            report.check(Check::at_most(format!("b-norm-stability:{name}"), change, c.stability_tol));
            report.check(Check::at_most(format!("b-norm-diagonal:{name}"), diag, c.diagonal_tol));
            entry["b_norm_sups"] = json!(sups);
            entry["diagonal_deviation"] = json!(diag);
        }
        out.push(entry);
    }
    report.output("coverings", out);
    report.table = table;
    Ok(())
}

fn cocycle(c: &CocycleConfig, report: &mut Report) -> anyhow::Result<()> {
    let a = c.annulus;
    let annulus = AnnulusPair::new(a[0], a[1], a[2], a[3])?;
    let matrix = three_arc_cocycle(c.c[0], c.c[1], c.c[2]);
    let r = cocycle_roundtrip(&annulus, &matrix, c.group)?;
    report.check(Check::equals("monodromy", r.monodromy as f64, c.expect_monodromy as f64));
    report.check(Check::equals("lifted-monodromy", r.lifted_monodromy as f64, r.monodromy as f64));
    report.check(Check::flag("deck-generator-matches-direct-model", r.matches_direct));
    if let DeckGroup::Cyclic { m } = c.group {
        report.check(Check::flag("connected", r.connected));
        report.check(Check::equals("sheets", r.sheets.unwrap_or(0) as f64, m as f64));
    }
    let mut table = Table::new(&["monodromy", "lifted_monodromy", "direct_generator", "matches_direct", "connected"]);
    table.push(vec![
        r.monodromy.into(),
        r.lifted_monodromy.into(),
        r.direct_generator.into(),
        r.matches_direct.into(),
        r.connected.into(),
    ]);
    report.output("monodromy", r.monodromy);
    report.output("roundtrip", r);
    report.table = table;
    Ok(())
}

/// One row of a convergence table.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub error: f64,
    /// `e_i / e_{i-1}`; 1 when either error is below the floor.
    pub ratio: Option<f64>,
    pub floor: bool,
}

/// Errors against the problem's oracle at each resolution.
pub fn convergence_table(c: &ConvergenceConfig) -> anyhow::Result<Vec<ConvergenceRow>> {
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for &n in &c.resolutions {
        let error = convergence_error(&c.problem, n)?;
        let floor = error < c.floor || rows.last().is_some_and(|r| r.error < c.floor);
        let ratio = rows.last().map(|prev| if floor { 1.0 } else { error / prev.error });
        rows.push(ConvergenceRow { n, error, ratio, floor });
    }
    Ok(rows)
}

fn convergence_error(problem: &ConvergenceProblem, n: usize) -> anyhow::Result<f64> {
    Ok(match problem {
        ConvergenceProblem::PeriodicTrapezoid { a } => {
            let v = periodic_trapezoid(|t| C64::new(1.0 / (a + t.cos()), 0.0), n)?;
            (v - 2.0 * PI / (a * a - 1.0).sqrt()).norm()
        }
        ConvergenceProblem::PolynomialGauss { degree } => {
            let v = gauss_legendre_segment(|t| C64::new(t.powi(*degree as i32), 0.0), n)?;
            (v - 1.0 / (*degree as f64 + 1.0)).norm()
        }
        ConvergenceProblem::SingularPlanar { z } => {
            let z = cx(*z);
            let v = singular_planar_integral(
                |x| 1.0 / (x - z),
                &PlanarDomain::unit_disk(),
                &CVector::scalar(z),
                &PlanarResolution::mesh(n),
            )?;
            (v + PI * z.conj()).norm()
        }
        ConvergenceProblem::Leray { function, z } => {
            let z = CVector::scalar(cx(*z));
            let task = RepresentationTask::new(Domain::unit_disk(), LeraySection::reciprocal_cauchy(), n)?;
            let v = leray_reconstruct(|x| eval(function, x), &task, &z)?;
            (v - function.eval(&z)?).norm()
        }
    })
}

fn convergence(c: &ConvergenceConfig, report: &mut Report) -> anyhow::Result<()> {
    let rows = convergence_table(c)?;
    let mut table = Table::new(&["N", "error", "ratio", "floor"]);
    for r in &rows {
        table.push(vec![r.n.into(), r.error.into(), r.ratio.into(), r.floor.into()]);
    }
    if let Some(tol) = c.ratio_tol {
        let worst = rows
            .iter()
            .filter(|r| !r.floor)
            .filter_map(|r| r.ratio)
            .fold(0.0, f64::max);
        report.check(Check::at_most("max-ratio", worst, tol));
    }
    if let Some(tol) = c.final_tol {
        report.check(Check::at_most("final-error", rows.last().map_or(f64::NAN, |r| r.error), tol));
    }
    if c.monotone {
        let ok = rows.windows(2).all(|w| w[1].floor || w[1].error <= w[0].error);
        report.check(Check::flag("monotone", ok));
    }
    report.series = Some(rows.iter().map(|r| (r.n, r.error)).collect());
    report.output("rows", &rows);
    report.table = table;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn conv(problem: ConvergenceProblem, resolutions: Vec<usize>) -> ConvergenceConfig {
        ConvergenceConfig {
            id: "t".into(),
            problem,
            resolutions,
            ratio_tol: None,
            final_tol: None,
            monotone: false,
            floor: 1e-14,
        }
    }

    #[test]
    fn trapezoid_ratios() {
        let rows = convergence_table(&conv(ConvergenceProblem::PeriodicTrapezoid { a: 2.0 }, vec![8, 16, 32])).unwrap();
        assert!(rows[0].ratio.is_none());
        assert!(!rows[1].floor);
        for r in rows[1..].iter().filter(|r| !r.floor) {
            assert!(r.ratio.unwrap() <= 1e-2, "{r:?}");
        }
    }

    #[test]
    fn polynomial_floor() {
        let rows = convergence_table(&conv(ConvergenceProblem::PolynomialGauss { degree: 3 }, vec![2, 4, 8])).unwrap();
        for r in &rows[1..] {
            assert!(r.floor);
            assert_eq!(r.ratio, Some(1.0));
        }
    }

    #[test]
    fn singular_planar_decreases() {
        let rows =
            convergence_table(&conv(ConvergenceProblem::SingularPlanar { z: [0.4, 0.0] }, vec![32, 64, 128])).unwrap();
        assert!(rows.windows(2).all(|w| w[1].floor || w[1].error <= w[0].error), "{rows:?}");
        assert!(rows[2].error <= 1e-6);
    }

    #[test]
    fn labels() {
        assert_eq!(function_label(&TestFunction::monomial(&[2, 1])), "monomial(2;1)");
    }
}
