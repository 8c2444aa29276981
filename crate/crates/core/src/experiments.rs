//! Monte Carlo estimation of expected movement cost, log-log scaling fits,
//! and regime checks against the predicted exponents.
//!
//! Trials run in parallel on a rayon pool, but every trial draws from its own
//! `(seed, trial)` stream and the per-trial costs are reduced with a fixed
//! pairwise tree, so results do not depend on the worker count.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::{i1, id, mv1, mvd, Algorithm, CostReport, InterferencePolicy};
use crate::deployment::{exact_root, sample_1d, sample_grid, RngSeed};
use crate::error::{Error, Result};
use crate::gamma_analytics::ExactCostExpansion;

/// Position of an interference distance relative to the threshold `1/n^{1/d}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleKind {
    /// `(1 - offset) / n^{1/d}`
    #[serde(alias = "below-threshold")]
    Below,
    /// `1 / n^{1/d}`
    #[serde(alias = "at-threshold", alias = "one-over-n", alias = "threshold")]
    At,
    /// `(1 + offset) / n^{1/d}`
    #[serde(alias = "above-threshold")]
    Above,
}

impl RuleKind {
    fn factor(self, offset: f64) -> f64 {
        match self {
            RuleKind::Below => 1.0 - offset,
            RuleKind::At => 1.0,
            RuleKind::Above => 1.0 + offset,
        }
    }
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RuleKind::Below => "below",
            RuleKind::At => "at",
            RuleKind::Above => "above",
        })
    }
}

impl FromStr for RuleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "below" | "below-threshold" => Ok(RuleKind::Below),
            "at" | "at-threshold" | "one-over-n" | "threshold" => Ok(RuleKind::At),
            "above" | "above-threshold" => Ok(RuleKind::Above),
            other => Err(Error::Parse(format!("unknown spacing rule {other:?}"))),
        }
    }
}

/// Whether the predicted exponent is a tight (two-sided) or an upper (one-sided) bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    TwoSided,
    OneSided,
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundKind::TwoSided => "two-sided",
            BoundKind::OneSided => "one-sided",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Regime {
    pub predicted_exponent: f64,
    pub bound: BoundKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub n_grid: Vec<u64>,
    pub a: f64,
    pub d: u32,
    pub s_rule: RuleKind,
    pub v_rule: RuleKind,
    /// Offset of `s` from the threshold.
    pub eps: f64,
    /// Offset of `v` from the threshold.
    pub tau: f64,
    pub trials: u64,
    pub seed: u64,
    pub tolerance: f64,
    /// Replaces the tabulated exponent when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted_exponent: Option<f64>,
    /// Worker threads. Never changes results, so it is not echoed.
    #[serde(skip, default = "one")]
    pub workers: usize,
}

fn one() -> usize {
    1
}

pub const DEFAULT_TOLERANCE: f64 = 0.1;
pub const DEFAULT_OFFSET: f64 = 0.1;

/// Default n-grid for a dimension: powers of two on the line, `m^d` grids above.
pub fn default_n_grid(d: u32) -> Vec<u64> {
    match d {
        1 => vec![1 << 8, 1 << 10, 1 << 12, 1 << 14],
        2 => vec![4u64.pow(4), 4u64.pow(5), 4u64.pow(6), 4u64.pow(7)],
        _ => [4u64, 6, 8, 10].iter().map(|m| m.pow(d)).collect(),
    }
}

impl ExperimentConfig {
    /// Defaults for an algorithm: threshold spacing for the equal-spacing
    /// algorithms, `(below, above)` for the interval sweeps.
    pub fn new(algorithm: Algorithm) -> Self {
        let d = if algorithm.is_grid() { 2 } else { 1 };
        let (s_rule, v_rule) =
            if algorithm.is_interval() { (RuleKind::Below, RuleKind::Above) } else { (RuleKind::At, RuleKind::At) };
        Self {
            algorithm,
            n_grid: default_n_grid(d),
            a: 2.0,
            d,
            s_rule,
            v_rule,
            eps: DEFAULT_OFFSET,
            tau: DEFAULT_OFFSET,
            trials: 1000,
            seed: 7,
            tolerance: DEFAULT_TOLERANCE,
            predicted_exponent: None,
            workers: 1,
        }
    }

    /// Validates the configuration and returns the regime it names.
    pub fn regime(&self) -> Result<Regime> {
        let cfg_err = |m: String| Err(Error::Config(m));
        if self.n_grid.is_empty() {
            return cfg_err("n_grid must not be empty".into());
        }
        if self.n_grid.windows(2).any(|w| w[1] <= w[0]) {
            return cfg_err("n_grid must be strictly increasing".into());
        }
        if self.n_grid[0] < 1 {
            return cfg_err("n must be positive".into());
        }
        if self.trials == 0 {
            return cfg_err("trials must be >= 1".into());
        }
        if self.workers == 0 {
            return cfg_err("workers must be >= 1".into());
        }
        if !(self.a > 0.0 && self.a.is_finite()) {
            return cfg_err(format!("a must be positive, got {}", self.a));
        }
        if !(self.tolerance >= 0.0) {
            return cfg_err(format!("tolerance must be nonnegative, got {}", self.tolerance));
        }
        match (self.algorithm.is_grid(), self.d) {
            (false, 1) => {}
            (false, d) => return cfg_err(format!("{} runs on the line, got d = {d}", self.algorithm)),
            (true, d) if d >= 2 => {
                for &n in &self.n_grid {
                    if exact_root(n, d).is_none() {
                        return cfg_err(format!("n must be a perfect d-th power (n = {n}, d = {d})"));
                    }
                }
            }
            (true, d) => return cfg_err(format!("{} needs d >= 2, got d = {d}", self.algorithm)),
        }
        for (rule, offset, name) in [(self.s_rule, self.eps, "eps"), (self.v_rule, self.tau, "tau")] {
            if rule != RuleKind::At && !(offset > 0.0 && offset.is_finite()) {
                return cfg_err(format!("{name} must be positive for a {rule} rule, got {offset}"));
            }
            if rule == RuleKind::Below && offset >= 1.0 {
                return cfg_err(format!("{name} must be < 1 for a below rule, got {offset}"));
            }
        }
        let d = self.d as f64;
        let (exponent, bound) = if self.algorithm.is_interval() {
            if self.s_rule != RuleKind::Below || self.v_rule != RuleKind::Above {
                return cfg_err(format!(
                    "{} is tabulated only for s below and v above the threshold (got s {}, v {})",
                    self.algorithm, self.s_rule, self.v_rule
                ));
            }
            (1.0 - self.a / d, BoundKind::OneSided)
        } else {
            let (s_factor, v_factor) = (self.s_rule.factor(self.eps), self.v_rule.factor(self.tau));
            if v_factor < s_factor {
                return cfg_err(format!("v must not be below s (s factor {s_factor}, v factor {v_factor})"));
            }
            let exponent = match self.s_rule {
                RuleKind::At => 1.0 - self.a / (2.0 * d),
                RuleKind::Above => 1.0,
                RuleKind::Below => {
                    return cfg_err(format!("{} is not tabulated for s below the threshold", self.algorithm))
                }
            };
            let bound = if self.a >= 1.0 { BoundKind::TwoSided } else { BoundKind::OneSided };
            (exponent, bound)
        };
        Ok(Regime { predicted_exponent: self.predicted_exponent.unwrap_or(exponent), bound })
    }

    /// `(s, v)` for `n` sensors.
    pub fn spacing(&self, n: u64) -> (f64, f64) {
        let side = exact_root(n, self.d).unwrap_or(n) as f64;
        let s = self.s_rule.factor(self.eps) / side;
        let v = self.v_rule.factor(self.tau) / side;
        (s, v)
    }

    /// Deployment and displacement for trial `trial` at size `n`.
    pub fn run_trial(&self, n: u64, trial: u64) -> Result<CostReport> {
        let seed = RngSeed::new(self.seed, trial);
        let (s, v) = self.spacing(n);
        let a = self.a;
        match self.algorithm {
            Algorithm::Mv1 => mv1(&sample_1d(n as usize, n as f64, seed)?, s, a),
            Algorithm::I1 => Ok(i1(&sample_1d(n as usize, n as f64, seed)?, InterferencePolicy::new(s, v, a)?)),
            Algorithm::Mvd => mvd(&sample_grid(n, self.d, seed)?, s, a),
            Algorithm::Id => Ok(id(&sample_grid(n, self.d, seed)?, InterferencePolicy::new(s, v, a)?)),
        }
    }

    /// Total cost of trial `trial` at size `n`.
    pub fn trial_cost(&self, n: u64, trial: u64) -> Result<f64> {
        Ok(self.run_trial(n, trial)?.total_cost)
    }
}

/// Sum with a fixed binary reduction tree.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let (l, r) = xs.split_at(xs.len() / 2);
    pairwise_sum(l) + pairwise_sum(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(trials)`; zero for a single trial.
    pub std_error: f64,
    pub trials: u64,
}

impl MeanEstimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = pairwise_sum(xs) / n;
        let std_error = if xs.len() > 1 {
            let sq: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
            (pairwise_sum(&sq) / (n - 1.0) / n).sqrt()
        } else {
            0.0
        };
        Self { mean, std_error, trials: xs.len() as u64 }
    }
}

/// Runs `f(trial)` for `trial in 0..trials` on `workers` threads, in order.
pub fn run_trials<F>(workers: usize, trials: u64, f: F) -> Result<Vec<f64>>
where
    F: Fn(u64) -> Result<f64> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
    pool.install(|| (0..trials).into_par_iter().map(&f).collect())
}

pub fn estimate_mean_cost(cfg: &ExperimentConfig, n: u64) -> Result<MeanEstimate> {
    cfg.regime()?;
    if !cfg.n_grid.contains(&n) {
        return Err(Error::Config(format!("n = {n} is not in the configured n_grid")));
    }
    let costs = run_trials(cfg.workers, cfg.trials, |t| cfg.trial_cost(n, t))?;
    Ok(MeanEstimate::from_samples(&costs))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub slope_stderr: f64,
    pub intercept: f64,
    /// Rows that entered the regression.
    pub used: usize,
}

/// Ordinary least squares of `ln(mean)` on `ln(n)`. Rows with a nonpositive
/// mean are dropped with a warning; fewer than three usable distinct `n` is
/// an error.
pub fn fit_scaling_exponent(rows: &[(u64, f64)]) -> Result<ScalingFit> {
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(rows.len());
    for &(n, mean) in rows {
        if mean > 0.0 && mean.is_finite() && n > 0 {
            pts.push(((n as f64).ln(), mean.ln()));
        } else {
            log::warn!("dropping row n = {n} with mean {mean} from the log-log fit");
        }
    }
    let mut distinct: Vec<f64> = pts.iter().map(|p| p.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::Domain(format!(
            "a scaling fit needs at least 3 distinct n with positive means, got {}",
            distinct.len()
        )));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let slope_stderr = if pts.len() > 2 { (ssr / (k - 2.0) / sxx).sqrt() } else { 0.0 };
    Ok(ScalingFit { slope, slope_stderr, intercept, used: pts.len() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: u64,
    pub mean_cost: f64,
    pub std_error: f64,
    pub trials: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub fitted_slope: f64,
    pub slope_stderr: f64,
    pub intercept: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOutcome {
    pub config: ExperimentConfig,
    pub result: SweepResult,
    pub regime: Regime,
    pub verdict: Verdict,
}

#[derive(Serialize)]
struct SweepSummary<'a> {
    config: &'a ExperimentConfig,
    slope: f64,
    slope_stderr: f64,
    intercept: f64,
    predicted_exponent: f64,
    bound: BoundKind,
    tolerance: f64,
    verdict: Verdict,
    rows: &'a [SweepRow],
}

impl SuiteOutcome {
    /// `n,mean_cost,std_error,trials`
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.result.rows {
            w.serialize(row)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn summary_json(&self) -> Result<String> {
        let summary = SweepSummary {
            config: &self.config,
            slope: self.result.fitted_slope,
            slope_stderr: self.result.slope_stderr,
            intercept: self.result.intercept,
            predicted_exponent: self.regime.predicted_exponent,
            bound: self.regime.bound,
            tolerance: self.config.tolerance,
            verdict: self.verdict,
            rows: &self.result.rows,
        };
        let mut s = serde_json::to_string_pretty(&summary)?;
        s.push('\n');
        Ok(s)
    }
}

/// Judges a fitted slope: `|slope - predicted| < tol` for tight bounds,
/// `slope <= predicted + tol` for upper bounds.
pub fn judge(slope: f64, regime: &Regime, tol: f64) -> Verdict {
    let ok = match regime.bound {
        BoundKind::TwoSided => (slope - regime.predicted_exponent).abs() < tol,
        BoundKind::OneSided => slope <= regime.predicted_exponent + tol,
    };
    if ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

pub fn run_regime_suite(cfg: &ExperimentConfig) -> Result<SuiteOutcome> {
    let regime = cfg.regime()?;
    let mut rows = Vec::with_capacity(cfg.n_grid.len());
    for &n in &cfg.n_grid {
        let est = estimate_mean_cost(cfg, n)?;
        log::info!("{} n = {n}: mean {} +- {}", cfg.algorithm, est.mean, est.std_error);
        rows.push(SweepRow { n, mean_cost: est.mean, std_error: est.std_error, trials: est.trials });
    }
    let fit = fit_scaling_exponent(&rows.iter().map(|r| (r.n, r.mean_cost)).collect::<Vec<_>>())?;
    let verdict = judge(fit.slope, &regime, cfg.tolerance);
    Ok(SuiteOutcome {
        config: cfg.clone(),
        result: SweepResult { rows, fitted_slope: fit.slope, slope_stderr: fit.slope_stderr, intercept: fit.intercept },
        regime,
        verdict,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crosscheck {
    pub exact: f64,
    pub mc_mean: f64,
    pub std_error: f64,
    pub z_score: f64,
}

/// Compares the exact expected MV1 cost at spacing `(1+ε1)/n` with a Monte
/// Carlo mean over `trials` deployments.
pub fn crosscheck_exact_vs_mc(
    n: u64,
    a: u32,
    epsilon1: f64,
    trials: u64,
    seed: u64,
    workers: usize,
) -> Result<Crosscheck> {
    let exact = ExactCostExpansion::new(a, epsilon1)?.total(n)?;
    let s = (1.0 + epsilon1) / n as f64;
    let costs = run_trials(workers, trials, |t| {
        let dep = sample_1d(n as usize, n as f64, RngSeed::new(seed, t))?;
        Ok(mv1(&dep, s, a as f64)?.total_cost)
    })?;
    let est = MeanEstimate::from_samples(&costs);
    Ok(Crosscheck { exact, mc_mean: est.mean, std_error: est.std_error, z_score: (est.mean - exact) / est.std_error })
}
