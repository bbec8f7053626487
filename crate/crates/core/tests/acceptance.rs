//! Acceptance criteria. Prints one `PASS` or `FAIL` line per criterion and
//! exits nonzero if any criterion fails.

use std::time::{Duration, Instant};

use skewform::boundary::{analyze_boundary, swe_rewritten_contraction, Formulation};
use skewform::energy::{boundary_contraction, Contraction};
use skewform::timeint::march;
use skewform::verify::{self, CheckReport};
use skewform::{make_model, ModelKind, ModelParams, Order};

const SEED: u64 = 42;

/// Tolerance for every algebraic identity, relative to its scale.
const IDENTITY_TOL: f64 = 1e-12;

struct Outcome {
    pass: bool,
    detail: String,
}

fn criterion(id: usize, title: &str, limit: Option<Duration>, body: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = body();
    let elapsed = start.elapsed();
    let in_time = limit.map_or(true, |l| elapsed <= l);
    let pass = out.pass && in_time;
    let limit_txt = limit.map_or(String::new(), |l| format!(" (limit {:.0?})", l));
    println!(
        "{} criterion {id}: {title}: {}; {:.2?}{limit_txt}",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        elapsed
    );
    pass
}

/// Looks up `name`, pins its tolerance to `tol` and summarises it.
fn pinned(reports: &[CheckReport], name: &str, tol: f64) -> (bool, String) {
    let Some(r) = reports.iter().find(|r| r.name == name) else {
        return (false, format!("{name}: missing"));
    };
    let ok = r.tolerance == tol && r.pass && r.max_residual <= tol;
    (ok, format!("{name} max {:.3e} (tol {tol:e}, {} rows)", r.max_residual, r.trials))
}

fn combine(parts: Vec<(bool, String)>) -> Outcome {
    Outcome {
        pass: parts.iter().all(|p| p.0),
        detail: parts.into_iter().map(|p| p.1).collect::<Vec<_>>().join("; "),
    }
}

fn criterion_1_energy_conservation() -> bool {
    criterion(1, "discrete energy conservation", Some(Duration::from_secs(30)), || {
        let r = verify::check_energy_identity(&ModelKind::ALL, 100, SEED);
        let models_seen = ModelKind::ALL
            .iter()
            .all(|k| r.rows.iter().any(|row| row.model == k.name()));
        let orders_seen = ["(2,1)", "(4,2)"].iter().all(|o| r.rows.iter().any(|row| row.order == *o));
        let (ok, detail) = pinned(&[r], "energy-identity", IDENTITY_TOL);
        Outcome {
            pass: ok && models_seen && orders_seen,
            detail,
        }
    })
}

fn criterion_2_sbp_structure() -> bool {
    criterion(2, "SBP structure", Some(Duration::from_secs(1)), || {
        let r = verify::check_sbp();
        combine(vec![
            pinned(&r, "sbp-q-plus-qt-equals-b", 1e-15),
            pinned(&r, "sbp-constant-null-space", 1e-13),
            pinned(&r, "sbp-polynomial-exactness", 1e-13),
        ])
    })
}

fn criterion_3_linearisation() -> bool {
    criterion(3, "standard vs new linearisation", Some(Duration::from_secs(20)), || {
        let mut parts = Vec::new();
        for order in [Order::Second, Order::Fourth] {
            let levels = verify::linearisation_levels(order, 32, 3, SEED).expect("linearisation levels");
            let p = order.interior() as f64;
            let errs: Vec<f64> = levels.iter().map(|l| (l.standard.volume_residual - l.oracle).abs()).collect();
            let rates: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
            let last = *rates.last().unwrap();
            let new_worst = levels
                .iter()
                .map(|l| l.new.volume_residual.abs() / l.new.scale)
                .fold(0.0, f64::max);
            parts.push((
                (last - p).abs() <= 0.3 && new_worst <= IDENTITY_TOL,
                format!("{order}: standard order {last:.3} (target {p} +/- 0.3), new max {new_worst:.2e}"),
            ));
        }
        combine(parts)
    })
}

fn criterion_4_decomposition() -> bool {
    criterion(4, "decomposition identity", Some(Duration::from_secs(20)), || {
        let r = verify::check_decomposition(&ModelKind::ALL, 50, SEED);
        combine(vec![
            pinned(&r, "decomposition-identity", IDENTITY_TOL),
            pinned(&r, "decomposition-burgers-quadratic", 1e-12),
        ])
    })
}

fn criterion_5_duality() -> bool {
    criterion(5, "duality and strict self-adjointness", Some(Duration::from_secs(20)), || {
        let r = verify::check_duality(&ModelKind::ALL, 50, SEED);
        combine(vec![
            pinned(&r, "duality-bilinear", IDENTITY_TOL),
            pinned(&r, "duality-strict-self-adjoint", 0.0),
        ])
    })
}

fn criterion_6_parameter_independence() -> bool {
    criterion(6, "SWE parameter independence", None, || {
        let r = verify::check_alpha_independence(100, SEED);
        let base = make_model(ModelKind::Swe2d, ModelParams::default()).unwrap();
        let grid = [-2.0, -1.0, 0.0, 1.0, 2.0];
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let (mean, pert) = ([1.0, 0.0, 0.0], [1.0, 1.0, 0.0]);
        for a in grid {
            for b in grid {
                let m = base.with_alpha_beta(a, b);
                let v = boundary_contraction(&m, Contraction::Linearised { mean: &mean, pert: &pert }, &[0.0; 3], &[1.0, 0.0])
                    .unwrap();
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        let mut parts = vec![
            pinned(&r, "alpha-independence-nonlinear", 1e-13),
            pinned(&r, "alpha-dependence-linearised", 0.0),
        ];
        parts.push((hi - lo >= 1e-6, format!("direct witness spread {:.3e}", hi - lo)));
        combine(parts)
    })
}

fn criterion_7_boundary_counts() -> bool {
    criterion(7, "boundary-condition counting", None, || {
        let model = make_model(ModelKind::Swe2d, ModelParams::default()).unwrap();
        let pos = [0.0; 3];
        let n = [1.0, 0.0];
        let count = |u: [f64; 3], f: Formulation| analyze_boundary(&model, &u, &pos, &n, f, "x-high").unwrap().conditions;
        let inflow = [4.0, -2.0, 0.0];
        let outflow = [4.0, 2.0, 0.0];
        let lin_in = count(inflow, Formulation::Linearised);
        let rew_in = count(inflow, Formulation::rewritten());
        let lin_out = count(outflow, Formulation::Linearised);
        let rew_out = count(outflow, Formulation::rewritten());
        let direct = boundary_contraction(&model, Contraction::Nonlinear(&inflow), &pos, &n).unwrap();
        let rewritten = swe_rewritten_contraction(&inflow, &n);
        let eq = (direct - rewritten).abs() / direct.abs().max(1.0);
        let r = verify::check_boundary_counts(100, SEED);
        let mut parts = vec![
            pinned(&r, "boundary-condition-counts", 0.0),
            pinned(&r, "boundary-rewritten-equals-direct", 1e-13),
        ];
        parts.push((
            lin_in == 3 && rew_in == 2 && lin_out == 0 && rew_out == 0 && eq <= 1e-13,
            format!("inflow {lin_in}/{rew_in}, outflow {lin_out}/{rew_out} (linearised/rewritten), equality {eq:.1e}"),
        ));
        combine(parts)
    })
}

fn drift(s: &skewform::timeint::Scenario) -> (f64, f64) {
    let r = march(s).expect("march");
    let e0 = r.reports[0].energy;
    let e1 = r.reports.last().unwrap().energy;
    let worst = r
        .reports
        .iter()
        .map(|x| x.volume_residual.abs() / x.scale)
        .fold(0.0, f64::max);
    ((e1 - e0).abs(), worst)
}

fn criterion_8_marching() -> bool {
    criterion(8, "conservation under time marching", None, || {
        let mut parts = Vec::new();
        let cases: [(&str, fn(f64) -> skewform::Result<skewform::timeint::Scenario>, f64); 2] = [
            ("burgers1d", verify::burgers_periodic_scenario, 0.02),
            ("swe2d coriolis", verify::swe_coriolis_scenario, 0.004),
        ];
        for (name, build, dt) in cases {
            let (d1, w1) = drift(&build(dt).unwrap());
            let (d2, w2) = drift(&build(dt / 2.0).unwrap());
            let ratio = d1 / d2;
            let worst = w1.max(w2);
            parts.push((
                worst <= IDENTITY_TOL && (12.0..=20.0).contains(&ratio),
                format!("{name}: per-step max {worst:.2e}, drift ratio {ratio:.2}"),
            ));
        }
        combine(parts)
    })
}

fn criterion_9_dissipative_sat() -> bool {
    criterion(9, "dissipative SAT", None, || {
        let mut parts = Vec::new();
        for order in [Order::Second, Order::Fourth] {
            let reports = verify::burgers_inflow_run(order).expect("inflow run");
            let worst = reports.iter().map(|r| r.rate / r.scale).fold(f64::NEG_INFINITY, f64::max);
            parts.push((
                worst <= IDENTITY_TOL,
                format!("burgers inflow {order}: max rate/scale {worst:.3e} over {} steps", reports.len()),
            ));
        }
        let r = verify::check_sat(100, SEED);
        parts.push(pinned(&r, "sat-homogeneous-dissipative", IDENTITY_TOL));
        parts.push(pinned(&r, "sat-swe-two-condition-bound", 1e-10));
        combine(parts)
    })
}

fn main() {
    let criteria: [fn() -> bool; 9] = [
        criterion_1_energy_conservation,
        criterion_2_sbp_structure,
        criterion_3_linearisation,
        criterion_4_decomposition,
        criterion_5_duality,
        criterion_6_parameter_independence,
        criterion_7_boundary_counts,
        criterion_8_marching,
        criterion_9_dissipative_sat,
    ];
    let passed = criteria.iter().filter(|c| c()).count();
    println!("{passed}/{} acceptance criteria passed", criteria.len());
    if passed != criteria.len() {
        std::process::exit(1);
    }
}
