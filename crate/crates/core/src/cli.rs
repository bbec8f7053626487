//! Command-line front end: `verify`, `run`, `analyze-boundary` and
//! `convergence`.
//!
//! Exit status is 0 on success, 1 when a check fails or a run aborts, and 2
//! on usage or configuration errors.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::boundary::{analysis_table, analyze_boundary, write_analysis_csv, Formulation};
use crate::config::{Config, ModeName};
use crate::disc::Discretisation;
use crate::energy::{energy_report, EnergyReport};
use crate::error::{Error, Result};
use crate::field::StateField;
use crate::models::{make_model, ModelKind, ModelParams, ModelSpec};
use crate::spatial::CoeffMode;
use crate::timeint::march;
use crate::verify::{self, ansatz_defect, linearisation_levels, SUITES};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "skewform", version, about = "Skew-symmetric SBP discretisations and their verification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run identity checks with seeded random states.
    Verify(VerifyArgs),
    /// March a scenario file and write energy time series.
    Run(RunArgs),
    /// Eigenvalue analysis of a boundary term.
    AnalyzeBoundary(AnalyzeArgs),
    /// Self-convergence study of a scenario under grid refinement.
    Convergence(ConvergenceArgs),
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Suite to run (`all` runs every suite).
    #[arg(value_name = "SUITE", conflicts_with = "suite")]
    pub suite_pos: Option<String>,
    #[arg(long)]
    pub suite: Option<String>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `[output] dir`.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Overrides `[run] seed`.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Reads `[model]` and `[analysis]` from a scenario file instead of the flags.
    #[arg(long, conflicts_with_all = ["model", "state", "normal"])]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<String>,
    /// Comma separated state values.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub state: Vec<f64>,
    /// Comma separated outward unit normal.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub normal: Vec<f64>,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub beta: f64,
    /// `nonlinear`, `linearised`, `rewritten` or `all`.
    #[arg(long, default_value = "all")]
    pub formulation: String,
    /// Position of the face node (x, y, z or r, θ, z).
    #[arg(long, value_delimiter = ',', default_value = "1,0,0", allow_hyphen_values = true)]
    pub position: Vec<f64>,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ConvergenceArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub levels: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

/// A command failure: the message and the exit status it maps to.
#[derive(Debug)]
struct Failure {
    code: i32,
    msg: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config { .. } | Error::Unsupported(_) => EXIT_USAGE,
            _ => EXIT_FAIL,
        };
        Failure { code, msg: e.to_string() }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        msg: msg.into(),
    }
}

/// Caps the worker pool at `SKEWFORM_THREADS` if set.
fn init_threads() {
    if let Some(n) = std::env::var("SKEWFORM_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    init_threads();
    let out = match cli.command {
        Command::Verify(a) => cmd_verify(&a),
        Command::Run(a) => cmd_run(&a),
        Command::AnalyzeBoundary(a) => cmd_analyze_boundary(&a),
        Command::Convergence(a) => cmd_convergence(&a),
    };
    match out {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            f.code
        }
    }
}

fn write_file(path: &Path, contents: &[u8]) -> std::result::Result<(), Failure> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Failure {
            code: EXIT_FAIL,
            msg: format!("cannot create {}: {e}", dir.display()),
        })?;
    }
    fs::write(path, contents).map_err(|e| Failure {
        code: EXIT_FAIL,
        msg: format!("cannot write {}: {e}", path.display()),
    })
}

fn cmd_verify(a: &VerifyArgs) -> std::result::Result<i32, Failure> {
    let suite = a.suite.as_deref().or(a.suite_pos.as_deref()).unwrap_or("all");
    if a.trials == 0 {
        return Err(usage("--trials must be at least 1"));
    }
    let Some(reports) = verify::run_suite(suite, a.trials, a.seed) else {
        return Err(usage(format!(
            "unknown suite '{suite}'; expected one of: {}, all",
            SUITES.join(", ")
        )));
    };
    let mut csv = Vec::new();
    verify::write_reports_csv(&mut csv, &reports)?;
    let path = a.out_dir.join(format!("verify_{suite}.csv"));
    write_file(&path, &csv)?;
    print!("{}", verify::summary(&reports));
    println!("reports written to {}", path.display());
    Ok(if reports.iter().all(|r| r.pass) { EXIT_OK } else { EXIT_FAIL })
}

fn reports_csv(reports: &[EnergyReport]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if let Some(first) = reports.first() {
        w.write_record(first.csv_header())?;
    }
    for r in reports {
        w.write_record(r.csv_record())?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Plain-text final state: `#` header lines, then one node per line with its
/// coordinates followed by the state components.
pub fn final_state_text(model: &ModelSpec, disc: &Discretisation, u: &StateField, mode: &str) -> String {
    let grid = disc.grid();
    let coords = ["x", "y", "z"];
    let coords: Vec<&str> = match model.kind() {
        ModelKind::Euler3dCyl => vec!["r", "theta", "z"],
        _ => coords[..grid.dim()].to_vec(),
    };
    let comps: Vec<String> = (1..=u.n_comp()).map(|c| format!("U{c}")).collect();
    let mut s = String::new();
    let _ = writeln!(s, "# model: {}", model.kind());
    let _ = writeln!(s, "# mode: {mode}");
    let _ = writeln!(s, "# grid: {} order {}", grid.describe(), disc.order());
    let _ = writeln!(
        s,
        "# layout: one node per line, last axis fastest; columns {} {}",
        coords.join(" "),
        comps.join(" ")
    );
    if u.n_comp() != model.n_comp() {
        let _ = writeln!(
            s,
            "# coupled state: U1..U{} mean, U{}..U{} perturbation",
            model.n_comp(),
            model.n_comp() + 1,
            u.n_comp()
        );
    }
    let mut buf = vec![0.0; u.n_comp()];
    for node in 0..u.n_nodes() {
        let p = grid.position(node);
        let mut line: Vec<String> = p[..grid.dim()].iter().map(|x| format!("{x:e}")).collect();
        u.node(node, &mut buf);
        line.extend(buf.iter().map(|v| format!("{v:e}")));
        let _ = writeln!(s, "{}", line.join(" "));
    }
    s
}

fn cmd_run(a: &RunArgs) -> std::result::Result<i32, Failure> {
    let mut cfg = Config::load(&a.config)?;
    if let Some(seed) = a.seed {
        cfg.doc.run.seed = seed;
    }
    let out_dir = a.out_dir.clone().unwrap_or_else(|| PathBuf::from(cfg.output_dir()));
    let stem = cfg.output_stem().to_string();
    let mut files: Vec<(PathBuf, Vec<u8>)> = Vec::new();
    for mode in cfg.modes()? {
        let (reports, final_state) = if mode == ModeName::Identity {
            let model = cfg.model()?;
            let disc = cfg.discretisation()?;
            let u = cfg.field("initial", &model, &disc)?;
            let sat = cfg.sat(&model)?;
            sat.validate(&model, &disc)?;
            let r = energy_report(&model, &disc, &u, CoeffMode::Nonlinear, &sat, 0.0)?;
            (vec![r], final_state_text(&model, &disc, &u, mode.name()))
        } else {
            let sc = cfg.scenario(mode, 0)?;
            let res = march(&sc)?;
            println!(
                "{}: {} steps to t = {}, max |volume_residual|/scale = {:e}",
                mode.name(),
                res.steps,
                res.reports.last().map_or(0.0, |r| r.t),
                res.reports
                    .iter()
                    .map(|r| r.volume_residual.abs() / r.scale)
                    .fold(0.0, f64::max)
            );
            let text = final_state_text(&sc.model, &sc.disc, &res.final_state, mode.name());
            (res.reports, text)
        };
        if mode == ModeName::Identity {
            let r = &reports[0];
            println!(
                "identity: E = {:e}, rate = {:e}, boundary_flux = {:e}, volume_residual/scale = {:e}",
                r.energy,
                r.rate,
                r.boundary_flux,
                r.volume_residual.abs() / r.scale
            );
        }
        files.push((out_dir.join(format!("{stem}_{}.csv", mode.name())), reports_csv(&reports)?));
        files.push((out_dir.join(format!("{stem}_{}_final.txt", mode.name())), final_state.into_bytes()));
    }
    for (path, data) in &files {
        write_file(path, data)?;
        println!("wrote {}", path.display());
    }
    Ok(EXIT_OK)
}

fn formulations(name: &str) -> std::result::Result<Vec<Formulation>, Failure> {
    if name == "all" {
        return Ok(vec![Formulation::Nonlinear, Formulation::Linearised, Formulation::rewritten()]);
    }
    Formulation::parse(name)
        .map(|f| vec![f])
        .ok_or_else(|| usage(format!("unknown formulation '{name}'; expected nonlinear, linearised, rewritten or all")))
}

fn cmd_analyze_boundary(a: &AnalyzeArgs) -> std::result::Result<i32, Failure> {
    let (model, state, normal, forms, stem) = match &a.config {
        Some(path) => {
            let cfg = Config::load(path)?;
            let (state, normal, forms) = cfg.analysis()?;
            (cfg.model()?, state, normal, forms, cfg.output_stem().to_string())
        }
        None => {
            let name = a.model.as_deref().ok_or_else(|| usage("--model or --config is required"))?;
            let kind = ModelKind::parse(name).ok_or_else(|| usage(format!("unknown model '{name}'")))?;
            let model = make_model(
                kind,
                ModelParams {
                    alpha: a.alpha,
                    beta: a.beta,
                    ..ModelParams::default()
                },
            )?;
            if a.state.len() != model.n_comp() {
                return Err(usage(format!("--state needs {} values", model.n_comp())));
            }
            (model, a.state.clone(), a.normal.clone(), formulations(&a.formulation)?, "analysis".to_string())
        }
    };
    let mut pos = [0.0; 3];
    for (p, v) in pos.iter_mut().zip(&a.position) {
        *p = *v;
    }
    let label = format!(
        "n=({})",
        normal.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
    );
    let mut rows = Vec::new();
    for f in forms {
        match analyze_boundary(&model, &state, &pos, &normal, f, &label) {
            Ok(r) => rows.push(r),
            Err(e @ (Error::Unsupported(_) | Error::Glancing { .. })) => {
                eprintln!("{}: skipped ({e})", f.tag());
            }
            Err(e) => return Err(e.into()),
        }
    }
    print!("{}", analysis_table(&rows));
    let mut csv = Vec::new();
    write_analysis_csv(&mut csv, &rows)?;
    let path = a.out_dir.join(format!("{stem}_boundary.csv"));
    write_file(&path, &csv)?;
    println!("wrote {}", path.display());
    Ok(EXIT_OK)
}

/// Observed orders `log2(e_k / e_{k+1})`; `None` where both errors are zero.
pub fn observed_orders(errors: &[f64]) -> Vec<Option<f64>> {
    errors
        .windows(2)
        .map(|w| {
            if w[0] == 0.0 && w[1] == 0.0 {
                None
            } else {
                Some((w[0] / w[1]).log2())
            }
        })
        .collect()
}

fn fmt_order(o: Option<f64>) -> String {
    o.map_or_else(|| "exact".to_string(), |v| format!("{v:.3}"))
}

/// Discrete L2 distance between a solution and the next finer one sampled
/// at the coarse nodes.
pub fn coarse_difference(coarse: &Discretisation, u: &StateField, fine: &Discretisation, v: &StateField) -> f64 {
    let cg = coarse.grid();
    let fg = fine.grid();
    let dim = cg.dim();
    let cell: f64 = (0..dim).map(|k| cg.axis(k).h()).product();
    let mut sum = 0.0;
    let (mut a, mut b) = (vec![0.0; u.n_comp()], vec![0.0; u.n_comp()]);
    for node in 0..cg.len() {
        let idx = cg.unravel(node);
        let fidx: Vec<usize> = idx[..dim].iter().map(|i| 2 * i).collect();
        u.node(node, &mut a);
        v.node(fg.ravel(&fidx), &mut b);
        sum += a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
    }
    (sum * cell).sqrt()
}

fn cmd_convergence(a: &ConvergenceArgs) -> std::result::Result<i32, Failure> {
    if a.levels < 3 {
        return Err(usage(format!("convergence needs at least 3 levels, got {}", a.levels)));
    }
    let mut cfg = Config::load(&a.config)?;
    if let Some(seed) = a.seed {
        cfg.doc.run.seed = seed;
    }
    let mode = cfg
        .modes()?
        .into_iter()
        .find(|m| *m != ModeName::Identity)
        .ok_or_else(|| usage("convergence needs a marching mode in [time] modes"))?;
    let mut solutions = Vec::with_capacity(a.levels);
    for level in 0..a.levels {
        let sc = cfg.scenario(mode, level)?;
        let res = march(&sc)?;
        solutions.push((sc.disc, res.final_state));
    }
    let errors: Vec<f64> = solutions
        .windows(2)
        .map(|w| coarse_difference(&w[0].0, &w[0].1, &w[1].0, &w[1].1))
        .collect();
    let orders = observed_orders(&errors);
    let mut out = String::new();
    let _ = writeln!(out, "solution self-convergence ({} mode)", mode.name());
    let _ = writeln!(out, "{:>6} {:>10} {:>14} {:>8}", "level", "nodes", "|u_l - u_l+1|", "order");
    for (l, e) in errors.iter().enumerate() {
        let o = if l == 0 { "-".to_string() } else { fmt_order(orders[l - 1]) };
        let _ = writeln!(out, "{:>6} {:>10} {:>14.6e} {:>8}", l, solutions[l].0.n_nodes(), e, o);
    }
    let mut csv = csv::Writer::from_writer(Vec::new());
    csv.write_record(["table", "level", "nodes", "error", "order"]).map_err(Error::from)?;
    for (l, e) in errors.iter().enumerate() {
        let o = if l == 0 { String::new() } else { fmt_order(orders[l - 1]) };
        csv.write_record([
            "solution".to_string(),
            l.to_string(),
            solutions[l].0.n_nodes().to_string(),
            format!("{e:e}"),
            o,
        ])
        .map_err(Error::from)?;
    }

    let model = cfg.model()?;
    match model.kind() {
        ModelKind::Swe2d => {
            let mut defects = Vec::new();
            for (disc, _) in &solutions {
                let u = cfg.field("initial", &model, disc)?;
                let d = ansatz_defect(&model, disc, &u)?;
                defects.push(d[0].max(d[1]));
            }
            let orders = observed_orders(&defects);
            let _ = writeln!(out, "\nansatz defect of the initial state");
            let _ = writeln!(out, "{:>6} {:>10} {:>14} {:>8}", "level", "nodes", "max defect", "order");
            for (l, d) in defects.iter().enumerate() {
                let o = if l == 0 { "-".to_string() } else { fmt_order(orders[l - 1]) };
                let _ = writeln!(out, "{:>6} {:>10} {:>14.6e} {:>8}", l, solutions[l].0.n_nodes(), d, o);
                csv.write_record(["ansatz".to_string(), l.to_string(), solutions[l].0.n_nodes().to_string(), format!("{d:e}"), o])
                    .map_err(Error::from)?;
            }
        }
        ModelKind::Burgers1d => {
            let disc = cfg.discretisation()?;
            let n0 = disc.n_nodes();
            let levels = linearisation_levels(disc.order(), n0, a.levels, cfg.seed())?;
            let errs: Vec<f64> = levels.iter().map(|l| (l.standard.volume_residual - l.oracle).abs()).collect();
            let orders = observed_orders(&errs);
            let _ = writeln!(out, "\nlinearisation about sin(2 pi x), periodic");
            let _ = writeln!(
                out,
                "{:>6} {:>8} {:>14} {:>14} {:>8} {:>14}",
                "level", "nodes", "standard", "|std - exact|", "order", "new"
            );
            for (l, lv) in levels.iter().enumerate() {
                let o = if l == 0 { "-".to_string() } else { fmt_order(orders[l - 1]) };
                let _ = writeln!(
                    out,
                    "{:>6} {:>8} {:>14.6e} {:>14.6e} {:>8} {:>14.6e}",
                    l, lv.n, lv.standard.volume_residual, errs[l], o, lv.new.volume_residual
                );
                csv.write_record(["linearisation".to_string(), l.to_string(), lv.n.to_string(), format!("{:e}", errs[l]), o])
                    .map_err(Error::from)?;
            }
        }
        _ => {}
    }
    print!("{out}");
    let data = csv.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    let dir = a.out_dir.clone().unwrap_or_else(|| PathBuf::from(cfg.output_dir()));
    let path = dir.join(format!("{}_convergence.csv", cfg.output_stem()));
    write_file(&path, &data)?;
    println!("wrote {}", path.display());
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orders_of_geometric_errors() {
        let o = observed_orders(&[1.0, 0.25, 0.0625]);
        assert_eq!(o, vec![Some(2.0), Some(2.0)]);
        assert_eq!(observed_orders(&[0.0, 0.0]), vec![None]);
    }

    #[test]
    fn unknown_suite_is_usage_error() {
        assert_eq!(run(["skewform", "verify", "nope"]), EXIT_USAGE);
    }

    #[test]
    fn convergence_needs_three_levels() {
        assert_eq!(
            run(["skewform", "convergence", "--config", "x.toml", "--levels", "2"]),
            EXIT_USAGE
        );
    }
}
