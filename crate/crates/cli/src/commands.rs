use std::fs;
use std::io::Write;

use serde::Serialize;
use svip_core::algorithms::{Algorithm, CostSummary};
use svip_core::combinatorics::{check_identities, EulerianSecondTable, StirlingTable, DEFAULT_TABLE_MAX};
use svip_core::experiments::{default_n_grid, run_regime_suite, ExperimentConfig, RuleKind, Verdict};
use svip_core::gamma_analytics::{
    leading_constant, lower_shortfall_bound_sum, rational_to_f64, upper_excess_bound_sum, ExactCostExpansion,
};
use svip_core::verification::{run_criterion, Tier, VerifyOptions, CRITERIA};

use crate::config::FileConfig;
use crate::{BoundsArgs, ExactArgs, Failure, IdentitiesArgs, OutputArgs, RunArgs, SimulateArgs, SweepArgs, VerifyArgs};

type CmdResult = Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn write_file(out: &OutputArgs, name: &str, contents: &[u8]) -> CmdResult {
    fs::create_dir_all(&out.output_dir)
        .map_err(|e| usage(format!("cannot create {}: {e}", out.output_dir.display())))?;
    let path = out.output_dir.join(name);
    fs::write(&path, contents).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn pretty<T: Serialize>(value: &T) -> Result<String, Failure> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    w.into_inner().map_err(|e| usage(e.to_string()))
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, std::num::NonZero::get)
}

/// Config file first, then flags on top. For the equal-spacing algorithms
/// `v` follows `s` unless set.
fn resolve(run: &RunArgs) -> Result<(ExperimentConfig, FileConfig), Failure> {
    let file = match &run.config {
        Some(path) => FileConfig::load(path).map_err(Failure::Usage)?,
        None => FileConfig::default(),
    };
    let alg = run.alg.or(file.algorithm).ok_or_else(|| usage("missing --alg (mv1, i1, mvd or id)"))?;
    let mut cfg = ExperimentConfig::new(alg);
    if let Some(d) = run.d.or(file.d) {
        cfg.d = d;
        cfg.n_grid = default_n_grid(d);
    }
    if let Some(a) = run.a.or(file.a) {
        cfg.a = a;
    }
    if let Some(eps) = run.eps.or(file.eps) {
        cfg.eps = eps;
    }
    if let Some(seed) = run.seed.or(file.seed) {
        cfg.seed = seed;
    }
    if let Some(rule) = run.s_rule.or(file.s_rule) {
        cfg.s_rule = rule;
    }
    let v_rule = run.v_rule.or(file.v_rule);
    let tau = run.tau.or(file.tau);
    if alg.is_interval() {
        cfg.v_rule = v_rule.unwrap_or(cfg.v_rule);
        cfg.tau = tau.unwrap_or(cfg.tau);
    } else {
        cfg.v_rule = v_rule.unwrap_or(cfg.s_rule);
        cfg.tau = tau.unwrap_or(cfg.eps);
    }
    Ok((cfg, file))
}

#[derive(Serialize)]
struct SimulateEcho {
    algorithm: Algorithm,
    n: u64,
    d: u32,
    a: f64,
    s_rule: RuleKind,
    v_rule: RuleKind,
    eps: f64,
    tau: f64,
    seed: u64,
}

#[derive(Serialize)]
struct SimulateArtifact {
    config: SimulateEcho,
    report: CostSummary,
}

pub fn simulate(args: &SimulateArgs) -> CmdResult {
    let (mut cfg, file) = resolve(&args.run)?;
    let n = args.n.or(file.n).ok_or_else(|| usage("missing --n"))?;
    cfg.n_grid = vec![n];
    cfg.trials = 1;
    cfg.regime()?;
    let report = cfg.run_trial(n, 0)?;
    let artifact = SimulateArtifact {
        config: SimulateEcho {
            algorithm: cfg.algorithm,
            n,
            d: cfg.d,
            a: cfg.a,
            s_rule: cfg.s_rule,
            v_rule: cfg.v_rule,
            eps: cfg.eps,
            tau: cfg.tau,
            seed: cfg.seed,
        },
        report: report.summary(),
    };
    let json = pretty(&artifact)?;
    print!("{json}");
    if args.out.format.json() {
        write_file(&args.out, "simulate.json", json.as_bytes())?;
    }
    if args.out.format.csv() {
        let mut buf = Vec::new();
        report.write_displacements_csv(&mut buf)?;
        write_file(&args.out, "displacements.csv", &buf)?;
    }
    Ok(())
}

pub fn sweep(args: &SweepArgs) -> CmdResult {
    let (mut cfg, file) = resolve(&args.run)?;
    if let Some(grid) = args.n_grid.clone().or(file.n_grid) {
        cfg.n_grid = grid;
    }
    if let Some(trials) = args.trials.or(file.trials) {
        cfg.trials = trials;
    }
    cfg.workers = args.workers.or(file.workers).unwrap_or_else(default_workers);
    if let Some(tol) = args.tolerance.or(file.tolerance) {
        cfg.tolerance = tol;
    }
    cfg.predicted_exponent = args.predicted_exponent.or(file.predicted_exponent);
    let outcome = run_regime_suite(&cfg)?;
    if args.out.format.csv() {
        write_file(&args.out, "sweep.csv", outcome.to_csv()?.as_bytes())?;
    }
    if args.out.format.json() {
        write_file(&args.out, "sweep.json", outcome.summary_json()?.as_bytes())?;
    }
    let line = format!(
        "{} slope {:.4} +- {:.4}, predicted {} ({}, tolerance {}): {}",
        cfg.algorithm,
        outcome.result.fitted_slope,
        outcome.result.slope_stderr,
        outcome.regime.predicted_exponent,
        outcome.regime.bound,
        cfg.tolerance,
        outcome.verdict
    );
    println!("{line}");
    match outcome.verdict {
        Verdict::Pass => Ok(()),
        Verdict::Fail => Err(Failure::Verification("fitted slope is outside the predicted bound".into())),
    }
}

#[derive(Serialize)]
struct ExactRow {
    n: u64,
    a: u32,
    epsilon1: f64,
    exact: f64,
    leading_term: f64,
    ratio: f64,
}

#[derive(Serialize)]
struct ExactArtifact<'a> {
    config: ExactEcho<'a>,
    leading_constant: String,
    leading_constant_value: f64,
    rows: &'a [ExactRow],
}

#[derive(Serialize)]
struct ExactEcho<'a> {
    n: &'a [u64],
    a: u32,
    eps1: &'a [f64],
}

pub fn exact(args: &ExactArgs) -> CmdResult {
    if args.a % 2 == 1 {
        return Err(usage(format!("the exact expansion needs an even a, got {}", args.a)));
    }
    let constant = leading_constant(args.a)?;
    let c = rational_to_f64(&constant);
    let mut rows = Vec::new();
    for &eps in &args.eps1 {
        let expansion = ExactCostExpansion::new(args.a, eps)?;
        for &n in &args.n {
            let exact = expansion.total(n)?;
            let leading_term = c * (n as f64).powf(1.0 - args.a as f64 / 2.0);
            rows.push(ExactRow { n, a: args.a, epsilon1: eps, exact, leading_term, ratio: exact / leading_term });
        }
    }
    println!("leading constant a!/(2^(a/2) (a/2+1)!) for a = {}: {constant} = {c}", args.a);
    let table = csv_bytes(&rows)?;
    std::io::stdout().write_all(&table)?;
    if args.out.format.csv() {
        write_file(&args.out, "exact.csv", &table)?;
    }
    if args.out.format.json() {
        let artifact = ExactArtifact {
            config: ExactEcho { n: &args.n, a: args.a, eps1: &args.eps1 },
            leading_constant: constant.to_string(),
            leading_constant_value: c,
            rows: &rows,
        };
        write_file(&args.out, "exact.json", pretty(&artifact)?.as_bytes())?;
    }
    Ok(())
}

pub fn identities(args: &IdentitiesArgs) -> CmdResult {
    let size = DEFAULT_TABLE_MAX.max(args.max_a as usize).max(args.max_m);
    let mut stirling = StirlingTable::new(size);
    let eulerian = EulerianSecondTable::new(size);
    if args.corrupt {
        stirling.corrupt_entry(5, 2);
    }
    let misses = check_identities(&stirling, &eulerian, args.max_a, args.max_m);
    if misses.is_empty() {
        println!("all identities exact (even a <= {}, m <= {})", args.max_a, args.max_m);
        Ok(())
    } else {
        let lines: Vec<String> = misses.iter().map(|m| format!("mismatch: {m}")).collect();
        Err(Failure::Verification(lines.join("\n")))
    }
}

#[derive(Serialize)]
struct BoundsRow {
    n: u64,
    s: f64,
    v: f64,
    lower: f64,
    upper: f64,
    lower_normalized: f64,
    upper_normalized: f64,
    total_normalized: f64,
}

#[derive(Serialize)]
struct BoundsArtifact<'a> {
    config: BoundsEcho<'a>,
    rows: &'a [BoundsRow],
    spread: f64,
}

#[derive(Serialize)]
struct BoundsEcho<'a> {
    n: &'a [u64],
    a: f64,
    s_scale: f64,
    v_scale: f64,
}

pub fn bounds(args: &BoundsArgs) -> CmdResult {
    let s_scale = args.s_scale.unwrap_or(1.0 - args.eps);
    let v_scale = args.v_scale.unwrap_or(1.0 + args.tau);
    if !(s_scale > 0.0 && s_scale < 1.0) {
        return Err(usage(format!("the shortfall sum needs 0 < s*n < 1, got s*n = {s_scale}")));
    }
    if !(v_scale > 1.0 && v_scale.is_finite()) {
        return Err(usage(format!("the excess sum needs v*n > 1, got v*n = {v_scale}")));
    }
    if args.n.is_empty() || args.n.contains(&0) {
        return Err(usage("--n needs positive values"));
    }
    let mut rows = Vec::new();
    for &n in &args.n {
        let (s, v) = (s_scale / n as f64, v_scale / n as f64);
        let lower = lower_shortfall_bound_sum(n, s, args.a)?.value;
        let upper = upper_excess_bound_sum(n, v, args.a)?.value;
        let scale = (n as f64).powf(args.a - 1.0);
        rows.push(BoundsRow {
            n,
            s,
            v,
            lower,
            upper,
            lower_normalized: scale * lower,
            upper_normalized: scale * upper,
            total_normalized: scale * (lower + upper),
        });
    }
    let totals = rows.iter().map(|r| r.total_normalized);
    let spread = totals.clone().fold(f64::MIN, f64::max) / totals.fold(f64::MAX, f64::min);
    let table = csv_bytes(&rows)?;
    std::io::stdout().write_all(&table)?;
    println!("max/min of total_normalized: {spread:.4}");
    if args.out.format.csv() {
        write_file(&args.out, "bounds.csv", &table)?;
    }
    if args.out.format.json() {
        let artifact =
            BoundsArtifact { config: BoundsEcho { n: &args.n, a: args.a, s_scale, v_scale }, rows: &rows, spread };
        write_file(&args.out, "bounds.json", pretty(&artifact)?.as_bytes())?;
    }
    Ok(())
}

#[derive(Serialize)]
struct VerifyArtifact<'a> {
    tier: Tier,
    seed: u64,
    passed: bool,
    outcomes: &'a [svip_core::verification::CriterionOutcome],
}

pub fn verify(args: &VerifyArgs) -> CmdResult {
    let opts =
        VerifyOptions { tier: args.tier, seed: args.seed, workers: args.workers.unwrap_or_else(default_workers) };
    let selected: Vec<u32> = if args.criterion.is_empty() { CRITERIA.to_vec() } else { args.criterion.clone() };
    if let Some(bad) = selected.iter().find(|c| !CRITERIA.contains(c)) {
        return Err(usage(format!("no criterion {bad} (expected 1 to {})", CRITERIA.len())));
    }
    let mut outcomes = Vec::new();
    for &c in &selected {
        for o in run_criterion(c, &opts) {
            println!("{o}");
            outcomes.push(o);
        }
    }
    let failed: Vec<&str> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id.as_str()).collect();
    if args.out.format.json() {
        let artifact =
            VerifyArtifact { tier: opts.tier, seed: opts.seed, passed: failed.is_empty(), outcomes: &outcomes };
        write_file(&args.out, "verify.json", pretty(&artifact)?.as_bytes())?;
    }
    if failed.is_empty() {
        println!("all {} checks passed", outcomes.len());
        Ok(())
    } else {
        Err(Failure::Verification(format!(
            "{} of {} checks failed: {}",
            failed.len(),
            outcomes.len(),
            failed.join(", ")
        )))
    }
}
