//! The acceptance suite: every check that the toolkit reproduces the known
//! constants, identities and scaling exponents, at two scale tiers.
//!
//! `Full` runs each criterion at its stated scale. `Quick` lowers trial
//! counts (never tolerances) for smoke runs.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algorithms::{i1, id, mv1, mvd, preserves_order, verify_ip, Algorithm, InterferencePolicy};
use crate::combinatorics::{check_identities, EulerianSecondTable, StirlingTable, DEFAULT_TABLE_MAX};
use crate::deployment::{sample_1d, sample_grid, RngSeed};
use crate::error::{Error, Result};
use crate::experiments::{
    crosscheck_exact_vs_mc, estimate_mean_cost, run_regime_suite, BoundKind, ExperimentConfig, RuleKind, Verdict,
};
use crate::gamma_analytics::quadrature::Tolerance;
use crate::gamma_analytics::{lower_shortfall_bound_sum, upper_excess_bound_sum, GammaArrival};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Quick,
    Full,
}

impl FromStr for Tier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quick" => Ok(Tier::Quick),
            "full" => Ok(Tier::Full),
            other => Err(Error::Parse(format!("unknown tier {other:?} (expected quick or full)"))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub tier: Tier,
    pub seed: u64,
    pub workers: usize,
}

impl VerifyOptions {
    fn pick(&self, quick: u64, full: u64) -> u64 {
        match self.tier {
            Tier::Quick => quick,
            Tier::Full => full,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionOutcome {
    pub id: String,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
    pub budget_seconds: f64,
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:<3} {}: {} ({:.1}s of {}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.seconds,
            self.budget_seconds
        )
    }
}

/// Criterion numbers accepted by [`run_criterion`].
pub const CRITERIA: [u32; 11] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11];

struct Check {
    id: String,
    name: &'static str,
    passed: bool,
    detail: String,
}

fn check(id: impl Into<String>, name: &'static str, passed: bool, detail: String) -> Check {
    Check { id: id.into(), name, passed, detail }
}

/// Runs one criterion, which may report several sub-checks. Errors become
/// failed outcomes; the elapsed time counts against the budget.
pub fn run_criterion(number: u32, opts: &VerifyOptions) -> Vec<CriterionOutcome> {
    let (name, budget): (&str, f64) = match number {
        1 => ("leading constant, a = 2", 60.0),
        2 => ("leading constant, a = 4", 60.0),
        3 => ("exact expectation vs Monte Carlo", 120.0),
        4 => ("combinatorial identities", 5.0),
        5 => ("tail-moment closed form vs quadrature", 10.0),
        6 => ("line scaling exponents", 600.0),
        7 => ("grid scaling exponents (d = 2)", 600.0),
        8 => ("threshold shape", 120.0),
        9 => ("bound sums are O(n^(1-a))", 60.0),
        10 => ("interference postconditions", 60.0),
        11 => ("determinism across worker counts", 60.0),
        _ => ("unknown criterion", 0.0),
    };
    let start = Instant::now();
    let result = match number {
        1 => leading_constant(opts, 2),
        2 => leading_constant(opts, 4),
        3 => exact_vs_mc(opts),
        4 => identities(),
        5 => tail_closed_form(opts),
        6 => line_slopes(opts),
        7 => grid_slopes(opts),
        8 => threshold_shape(opts),
        9 => bound_sums(),
        10 => postconditions(opts),
        11 => determinism(opts),
        n => Err(Error::Config(format!("no criterion {n}"))),
    };
    let seconds = start.elapsed().as_secs_f64();
    let checks = result.unwrap_or_else(|e| vec![check(number.to_string(), "error", false, e.to_string())]);
    let in_budget = seconds <= budget;
    checks
        .into_iter()
        .map(|c| CriterionOutcome {
            id: c.id,
            name: if c.name.is_empty() { name.to_string() } else { format!("{name}: {}", c.name) },
            passed: c.passed && in_budget,
            detail: if in_budget { c.detail } else { format!("{} (over time budget)", c.detail) },
            seconds,
            budget_seconds: budget,
        })
        .collect()
}

pub fn run_all(opts: &VerifyOptions) -> Vec<CriterionOutcome> {
    CRITERIA.iter().flat_map(|&n| run_criterion(n, opts)).collect()
}

fn mv1_config(opts: &VerifyOptions, n_grid: Vec<u64>, a: f64, trials: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(Algorithm::Mv1);
    cfg.n_grid = n_grid;
    cfg.a = a;
    cfg.trials = trials;
    cfg.seed = opts.seed;
    cfg.workers = opts.workers;
    cfg
}

fn leading_constant(opts: &VerifyOptions, a: u32) -> Result<Vec<Check>> {
    let n = 1u64 << 12;
    let cfg = mv1_config(opts, vec![n], a as f64, opts.pick(2500, 10_000));
    let est = estimate_mean_cost(&cfg, n)?;
    Ok(vec![match a {
        2 => check(
            "1",
            "",
            (0.475..=0.525).contains(&est.mean),
            format!("mean = {:.4} +- {:.4}, want [0.475, 0.525]", est.mean, est.std_error),
        ),
        _ => {
            let scaled = est.mean * n as f64;
            check(
                "2",
                "",
                (0.85..=1.15).contains(&scaled),
                format!("n * mean = {scaled:.4} +- {:.4}, want [0.85, 1.15]", est.std_error * n as f64),
            )
        }
    }])
}

fn exact_vs_mc(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let trials = opts.pick(20_000, 100_000);
    let mut worst = 0.0f64;
    let mut cells = Vec::new();
    for a in [2u32, 4] {
        for eps in [0.0, 0.3] {
            let c = crosscheck_exact_vs_mc(100, a, eps, trials, opts.seed, opts.workers)?;
            worst = worst.max(c.z_score.abs());
            cells.push(format!("a={a} eps={eps}: z={:+.2}", c.z_score));
        }
    }
    Ok(vec![check("3", "", worst < 4.0, format!("{}; want |z| < 4", cells.join(", ")))])
}

fn identities() -> Result<Vec<Check>> {
    let stirling = StirlingTable::new(DEFAULT_TABLE_MAX);
    let eulerian = EulerianSecondTable::new(DEFAULT_TABLE_MAX);
    let misses = check_identities(&stirling, &eulerian, 20, 30);
    let detail = if misses.is_empty() {
        "all exact for even a <= 20 and m <= 30".to_string()
    } else {
        misses.iter().map(|m| m.to_string()).collect::<Vec<_>>().join("; ")
    };
    Ok(vec![check("4", "", misses.is_empty(), detail)])
}

fn tail_closed_form(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let mut rng = RngSeed::new(opts.seed, 0).rng(5);
    let tol = Tolerance { abs: 0.0, rel: 1e-12 };
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let l = rng.random_range(1..=20u64);
        let b = rng.random_range(0..=4u32);
        let rate = rng.random_range(0.5..20.0);
        let z = rng.random_range(0.0..=3.0 * l as f64 / rate);
        let g = GammaArrival::new(l, rate)?;
        let closed = g.tail_moment(b, z);
        let quad = g.tail_moment_quadrature(b, z, tol).value;
        worst = worst.max(((closed - quad) / quad).abs());
    }
    Ok(vec![check("5", "", worst < 1e-9, format!("max rel err = {worst:.2e} over 50 points, want < 1e-9"))])
}

fn slope_check(id: &str, name: &'static str, cfg: &ExperimentConfig) -> Result<Check> {
    let out = run_regime_suite(cfg)?;
    let pred = out.regime.predicted_exponent;
    let want = match out.regime.bound {
        BoundKind::TwoSided => format!("within {} of {pred}", cfg.tolerance),
        BoundKind::OneSided => format!("<= {}", pred + cfg.tolerance),
    };
    Ok(check(
        id,
        name,
        out.verdict == Verdict::Pass,
        format!("slope = {:.3} +- {:.3}, want {want}", out.result.fitted_slope, out.result.slope_stderr),
    ))
}

fn regime_configs(opts: &VerifyOptions, d: u32) -> [(&'static str, &'static str, ExperimentConfig); 3] {
    let (eq, interval) = if d == 1 { (Algorithm::Mv1, Algorithm::I1) } else { (Algorithm::Mvd, Algorithm::Id) };
    let trials = opts.pick(1000, 4000);
    let base = |alg| {
        let mut c = ExperimentConfig::new(alg);
        c.trials = trials;
        c.seed = opts.seed;
        c.workers = opts.workers;
        c
    };
    let at = base(eq);
    let mut above = base(eq);
    above.s_rule = RuleKind::Above;
    above.v_rule = RuleKind::Above;
    let interval = base(interval);
    let ids = if d == 1 { ["6a", "6b", "6c"] } else { ["7a", "7b", "7c"] };
    [
        (ids[0], "s = v at threshold", at),
        (ids[1], "s = v = 1.1 x threshold", above),
        (ids[2], "s = 0.9, v = 1.1 x threshold", interval),
    ]
}

fn line_slopes(opts: &VerifyOptions) -> Result<Vec<Check>> {
    regime_configs(opts, 1).iter().map(|(id, name, cfg)| slope_check(id, name, cfg)).collect()
}

fn grid_slopes(opts: &VerifyOptions) -> Result<Vec<Check>> {
    regime_configs(opts, 2).iter().map(|(id, name, cfg)| slope_check(id, name, cfg)).collect()
}

fn threshold_shape(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let n = 1u64 << 12;
    let trials = opts.pick(500, 2000);
    let [(_, _, mut at), (_, _, mut above), (_, _, mut interval)] = regime_configs(opts, 1);
    let mut means = Vec::new();
    for cfg in [&mut interval, &mut at, &mut above] {
        cfg.n_grid = vec![n];
        cfg.trials = trials;
        means.push(estimate_mean_cost(cfg, n)?.mean);
    }
    let (lo, mid, hi) = (means[0], means[1], means[2]);
    let passed = lo * 10.0 <= mid && mid * 10.0 <= hi;
    Ok(vec![check(
        "8",
        "",
        passed,
        format!(
            "interval {lo:.3e} < at {mid:.3e} < above {hi:.3e} (ratios {:.1}x, {:.1}x), want >= 10x each",
            mid / lo,
            hi / mid
        ),
    )])
}

fn bound_sums() -> Result<Vec<Check>> {
    let a = 2.0;
    let mut normalized = Vec::new();
    for n in [100u64, 1000, 10_000] {
        let s = 0.9 / n as f64;
        let v = 1.1 / n as f64;
        let lower = lower_shortfall_bound_sum(n, s, a)?.value;
        let upper = upper_excess_bound_sum(n, v, a)?.value;
        normalized.push((n as f64).powf(a - 1.0) * (lower + upper));
    }
    let max = normalized.iter().cloned().fold(f64::MIN, f64::max);
    let min = normalized.iter().cloned().fold(f64::MAX, f64::min);
    Ok(vec![check(
        "9",
        "",
        max / min < 10.0,
        format!(
            "n^(a-1) * sums = {:.4}, {:.4}, {:.4} (max/min {:.2}), want < 10",
            normalized[0],
            normalized[1],
            normalized[2],
            max / min
        ),
    )])
}

fn postconditions(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let cases = opts.pick(200, 1000);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5eed_0010);
    let mut failures: Vec<String> = Vec::new();
    for case in 0..cases {
        let n = rng.random_range(2..=500u64);
        let a = rng.random_range(0.5..3.0);
        let seed = RngSeed::new(opts.seed, case);

        let dep = sample_1d(n as usize, n as f64, seed)?;
        let s = rng.random_range(0.2..2.0) / n as f64;
        let v = s * rng.random_range(1.0..1.5);
        let policy = InterferencePolicy::new(s, v, a)?;
        let equal = mv1(&dep, s, a)?;
        let interval = i1(&dep, policy);
        let collapsed = i1(&dep, InterferencePolicy::new(s, s, a)?);
        for (label, rep, (lo, hi)) in [("mv1", &equal, (s, s)), ("i1", &interval, (s, v))] {
            if !verify_ip(&rep.final_positions, lo, hi).satisfied || !preserves_order(rep) {
                failures.push(format!("{label} case {case} (n={n})"));
            }
        }
        if collapsed.final_positions != equal.final_positions {
            failures.push(format!("i1 with s = v differs from mv1, case {case} (n={n})"));
        }

        let d = rng.random_range(2..=3u32);
        let side = (1..).take_while(|m: &u64| m.pow(d) <= n).last().unwrap_or(1).max(2);
        let grid = sample_grid(side.pow(d), d, seed)?;
        let s = rng.random_range(0.2..2.0) / side as f64;
        let v = s * rng.random_range(1.0..1.5);
        let equal = mvd(&grid, s, a)?;
        let interval = id(&grid, InterferencePolicy::new(s, v, a)?);
        for (label, rep, (lo, hi)) in [("mvd", &equal, (s, s)), ("id", &interval, (s, v))] {
            if !verify_ip(&rep.final_positions, lo, hi).satisfied || !preserves_order(rep) {
                failures.push(format!("{label} case {case} (m={side}, d={d})"));
            }
        }
        if failures.len() > 5 {
            break;
        }
    }
    let detail = if failures.is_empty() {
        format!("{cases} random deployments, all four algorithms")
    } else {
        failures.join("; ")
    };
    Ok(vec![check("10", "", failures.is_empty(), detail)])
}

fn determinism(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let mut cfg = mv1_config(opts, vec![64, 128, 256, 512], 2.0, 300);
    let mut artifacts = Vec::new();
    for workers in [1usize, 2, 4] {
        cfg.workers = workers;
        let out = run_regime_suite(&cfg)?;
        artifacts.push((out.to_csv()?, out.summary_json()?));
    }
    let same = artifacts.windows(2).all(|w| w[0] == w[1]);
    Ok(vec![check(
        "11",
        "",
        same,
        if same { "CSV and JSON identical for 1, 2 and 4 workers".into() } else { "artifacts differ".into() },
    )])
}
