//! Acceptance criteria: one PASS/FAIL line per criterion.
//!
//! Experiments come from `configs/acceptance.json`; every verdict below is
//! taken against the limits pinned in this file, not the config's own.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use holocover::{
    restriction, CardinalKernel, CoveringLeray, CoveringSpec, AnnulusPair, TestFunction, Weight, C64,
};
use holocover_cli::{run_experiment, Report, RunConfig};

const CONFIG: &str = include_str!("../../../configs/acceptance.json");

struct Runs {
    reports: BTreeMap<String, (Report, Duration)>,
}

impl Runs {
    fn get(&self, id: &str) -> &Report {
        &self.reports.get(id).unwrap_or_else(|| panic!("no experiment {id}")).0
    }

    fn time(&self, ids: &[&str]) -> f64 {
        ids.iter().map(|id| self.reports[*id].1.as_secs_f64()).sum()
    }

    fn ok(&self, id: &str) -> bool {
        let r = self.get(id);
        if let Some(e) = &r.error {
            println!("  {id}: {e}");
        }
        r.error.is_none()
    }
}

fn check(r: &Report, name: &str) -> f64 {
    r.checks
        .iter()
        .find(|c| c.name == name)
        .unwrap_or_else(|| panic!("{}: no check {name}", r.id))
        .value
}

/// Largest value among checks whose name starts with `prefix`.
fn max_check(r: &Report, prefix: &str) -> f64 {
    let vals: Vec<f64> = r.checks.iter().filter(|c| c.name.starts_with(prefix)).map(|c| c.value).collect();
    assert!(!vals.is_empty(), "{}: no checks {prefix}*", r.id);
    vals.into_iter().fold(f64::NEG_INFINITY, |a, v| if v.is_nan() { f64::NAN } else { a.max(v) })
}

fn all_checks(r: &Report, prefix: &str) -> bool {
    r.checks.iter().filter(|c| c.name.starts_with(prefix)).all(|c| c.passed)
}

struct Verdicts {
    failed: usize,
}

impl Verdicts {
    fn line(&mut self, n: usize, title: &str, ok: bool, detail: String) {
        if !ok {
            self.failed += 1;
        }
        println!("{} criterion {n}: {title} [{detail}]", if ok { "PASS" } else { "FAIL" });
    }
}

fn main() {
    let cfg = RunConfig::from_json(CONFIG).expect("acceptance config");
    let mut reports = BTreeMap::new();
    for e in &cfg.experiments {
        let start = Instant::now();
        let r = run_experiment(e, cfg.seed);
        reports.insert(e.id().to_string(), (r, start.elapsed()));
    }
    let runs = Runs { reports };
    let mut v = Verdicts { failed: 0 };

    // 1. Leray reproduction
    {
        let disk = check(runs.get("leray-disk"), "max-relative-error");
        let poly = check(runs.get("leray-polydisk"), "max-relative-error");
        let t = runs.time(&["leray-disk", "leray-polydisk"]);
        let ok = runs.ok("leray-disk") && runs.ok("leray-polydisk") && disk <= 1e-12 && poly <= 1e-9 && t <= 5.0;
        v.line(
            1,
            "Leray reproduction",
            ok,
            format!("disk deg<=5 N=64 rel {disk:.2e} <= 1e-12; polydisk deg<=4 N=48 rel {poly:.2e} <= 1e-9; {t:.2} s <= 5 s"),
        );
    }

    // 2. Section independence
    {
        let r = runs.get("section-independence");
        let spread = check(r, "section-spread:bochner-martinelli");
        let points = r.outputs["points"].as_u64().unwrap_or(0);
        let ok = runs.ok("section-independence") && spread <= 1e-10 && points == 25;
        v.line(2, "section independence", ok, format!("spread {spread:.2e} <= 1e-10 over {points} points"));
    }

    // 3. Interpolation contract
    {
        let r = runs.get("interpolation-contract");
        let rt = max_check(r, "roundtrip:");
        let stab = max_check(r, "b-norm-stability:");
        let diag = max_check(r, "b-norm-diagonal:");
        let finite = all_checks(r, "b-norm-finite:");
        let covs = r.outputs["coverings"].as_array().map_or(0, |a| a.len());
        let ok = runs.ok("interpolation-contract") && rt <= 1e-13 && stab < 0.05 && diag <= 1e-12 && finite && covs == 4;
        v.line(
            3,
            "R_z L_z = id and bounded B-norms",
            ok,
            format!("roundtrip {rt:.2e} <= 1e-13; sup change {:.2}% < 5%; |B(z,z)-1| {diag:.2e} <= 1e-12", stab * 100.0),
        );
    }

    // 4. Covering Leray
    {
        let finite = ["covering-finite-2", "covering-finite-3", "covering-finite-5"];
        let strip = ["covering-strip-delta", "covering-strip-sum"];
        let ef = finite.iter().map(|id| check(runs.get(id), "max-abs-error")).fold(0.0, f64::max);
        let es = strip.iter().map(|id| check(runs.get(id), "max-abs-error")).fold(0.0, f64::max);
        let all: Vec<&str> = finite.iter().chain(&strip).copied().collect();
        let t = runs.time(&all);
        let ok = all.iter().all(|id| runs.ok(id)) && ef <= 1e-10 && es <= 1e-8 && t <= 30.0;
        v.line(
            4,
            "covering Leray reconstruction",
            ok,
            format!("finite-m every sheet {ef:.2e} <= 1e-10; strip K=8 N=256 {es:.2e} <= 1e-8; {t:.2} s <= 30 s"),
        );
        println!("  INFO plain-sinc strip kernel, same setup: error {:.2e}", plain_sinc_error());
    }

    // 5. Cauchy–Green identity
    {
        let r = runs.get("cauchy-green");
        let non = ["conj-monomial(0;1)", "conj-monomial(0;2)", "conj-monomial(1;1)"]
            .iter()
            .map(|f| check(r, &format!("residual:{f}")))
            .fold(0.0, f64::max);
        let holo = ["monomial(3)", "exp"]
            .iter()
            .map(|f| check(r, &format!("residual:{f}")))
            .fold(0.0, f64::max);
        let ok = runs.ok("cauchy-green") && non <= 1e-5 && holo <= 1e-10;
        v.line(
            5,
            "Cauchy-Green identity s=0",
            ok,
            format!("non-holomorphic {non:.2e} <= 1e-5; holomorphic {holo:.2e} <= 1e-10"),
        );
    }

    // 6. Norm machinery
    {
        let ids = ["norms-strip", "norms-finite-3"];
        let iso = ids.iter().map(|id| check(runs.get(id), "isometry:constant")).fold(0.0, f64::max);
        let band = ids.iter().map(|id| max_check(runs.get(id), "band:")).fold(0.0, f64::max);
        let windows_ok = runs.get("norms-strip").inputs["covering"]["K"] == 10;
        let dil = ["dilation-strip", "dilation-finite-5"];
        let exact = dil.iter().all(|id| all_checks(runs.get(id), "brute-force:") && all_checks(runs.get(id), "constant:"));
        let bounds = dil.iter().all(|id| all_checks(runs.get(id), "bound:"));
        let ok = ids.iter().chain(&dil).all(|id| runs.ok(id))
            && iso <= 1e-12
            && band <= 1.0
            && windows_ok
            && exact
            && bounds;
        v.line(
            6,
            "norm machinery",
            ok,
            format!(
                "isometry |ratio-1| {iso:.2e} <= 1e-12; ratio/band {band:.3} <= 1 (K=10); dilation exact {exact}, bounded {bounds}"
            ),
        );
    }

    // 7. Banach-valued Cauchy estimates
    {
        let ids = ["norms-strip", "norms-finite-3"];
        let sections: usize = ids
            .iter()
            .map(|id| runs.get(id).inputs["taylor"]["functions"].as_array().map_or(0, |a| a.len()))
            .sum();
        let max_order_ok = ids.iter().all(|id| runs.get(id).inputs["taylor"]["max_order"] == 6);
        let bound_ok = ids.iter().all(|id| check(runs.get(id), "cauchy-estimates") == 1.0);
        let ratio = ids.iter().map(|id| check(runs.get(id), "cauchy-estimate-ratio")).fold(0.0, f64::max);
        let recon = ids.iter().map(|id| check(runs.get(id), "taylor-reconstruction")).fold(0.0, f64::max);
        let ok = sections == 5 && max_order_ok && bound_ok && ratio <= 1.0 && recon <= 1e-8;
        v.line(
            7,
            "Banach-valued Cauchy estimates",
            ok,
            format!("{sections} sections, |alpha|<=6: max norm/bound {ratio:.3} <= 1; Taylor reconstruction {recon:.2e} <= 1e-8"),
        );
    }

    // 8. Quadrature quality gates
    {
        let ratio = check(runs.get("trapezoid-periodic"), "max-ratio");
        let sp = runs.get("singular-planar");
        let rows = sp.outputs["rows"].as_array().cloned().unwrap_or_default();
        let last = rows.last().cloned().unwrap_or_default();
        let mesh = last["n"].as_u64().unwrap_or(0);
        let err = last["error"].as_f64().unwrap_or(f64::NAN);
        let ok = runs.ok("trapezoid-periodic") && runs.ok("singular-planar") && ratio <= 1e-3 && mesh == 128 && err <= 1e-6;
        v.line(
            8,
            "quadrature quality gates",
            ok,
            format!("decay ratio per doubling {ratio:.2e} <= 1e-3; singular planar at mesh {mesh}: {err:.2e} <= 1e-6"),
        );
    }

    // 9. Cocycle round-trip
    {
        let ids = ["cocycle-integers", "cocycle-cyclic-3", "cocycle-cyclic-5"];
        let mut ok = true;
        let mut parts = Vec::new();
        for id in ids {
            let r = runs.get(id);
            ok &= runs.ok(id);
            let rt = &r.outputs["roundtrip"];
            let mono = rt["monodromy"].as_i64();
            let lifted = rt["lifted_monodromy"].as_i64();
            let direct = rt["matches_direct"].as_bool() == Some(true);
            let connected = match rt["group"]["kind"].as_str() {
                Some("cyclic") => {
                    rt["connected"].as_bool() == Some(true) && rt["sheets"].as_u64() == rt["group"]["m"].as_u64()
                }
                _ => true,
            };
            ok &= mono == Some(1) && lifted == Some(1) && direct && connected;
            parts.push(format!("{id}: monodromy {mono:?}"));
        }
        v.line(9, "cocycle round-trip", ok, parts.join("; "));
    }

    // Full suite through the binary: time, exit code, byte-identical reports.
    {
        let bin = env!("CARGO_BIN_EXE_holocover");
        let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/acceptance.json");
        let a = tempfile::tempdir().expect("tempdir");
        let b = tempfile::tempdir().expect("tempdir");
        let start = Instant::now();
        let mut codes = Vec::new();
        for dir in [a.path(), b.path()] {
            let out = Command::new(bin)
                .args(["run", "--config"])
                .arg(&config)
                .arg("--out")
                .arg(dir)
                .output()
                .expect("run holocover");
            codes.push(out.status.code());
        }
        let t = start.elapsed().as_secs_f64() / 2.0;
        let same = identical_dirs(a.path(), b.path());
        let ok = codes.iter().all(|c| *c == Some(0)) && same && t <= 120.0;
        v.line(
            10,
            "full suite",
            ok,
            format!("exit codes {codes:?}; {t:.2} s per run <= 120 s; byte-identical reports {same}"),
        );
    }

    if v.failed > 0 {
        println!("{} acceptance criteria failed", v.failed);
        std::process::exit(1);
    }
}

fn identical_dirs(a: &Path, b: &Path) -> bool {
    let list = |d: &Path| -> Vec<String> {
        let mut v: Vec<String> = std::fs::read_dir(d)
            .expect("read dir")
            .map(|e| e.expect("entry").file_name().to_string_lossy().into_owned())
            .collect();
        v.sort();
        v
    };
    let (la, lb) = (list(a), list(b));
    !la.is_empty()
        && la == lb
        && la
            .iter()
            .all(|f| std::fs::read(a.join(f)).expect("read") == std::fs::read(b.join(f)).expect("read"))
}

/// Strip reconstruction of `L_{z0}(delta_0)` with the plain sinc kernel.
fn plain_sinc_error() -> f64 {
    let cov = CoveringSpec::strip(AnnulusPair::new(0.8, 1.3, 0.6, 1.5).expect("annulus"));
    let f = TestFunction::CardinalSum {
        coeffs: vec![(0, [1.0, 0.0])],
        center: [1.0, 0.0],
        window: 8,
        kernel: CardinalKernel::Sinc,
    };
    let engine = CoveringLeray::new(&cov, 256, 8, CardinalKernel::Sinc).expect("engine");
    let z = C64::new(1.0, 0.0);
    let x = cov.fiber_point(z, 2).expect("fiber point");
    let fiber = |xi: C64| restriction(|y| f.eval_covering(&cov, y).expect("eval"), &cov, xi, 8, &Weight::constant());
    let v = engine.reconstruct(fiber, x, z).expect("reconstruct");
    (v - f.eval_covering(&cov, x).expect("eval")).norm()
}
