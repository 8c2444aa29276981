//! The displacement algorithms and their movement costs.
//!
//! * [`mv1`] anchors the first sensor and lays the rest out at spacing `s`.
//! * [`i1`] sweeps left to right and only corrects gaps outside `[s, v]`,
//!   always measuring against the already-corrected predecessor.
//! * [`mvd`] and [`id`] apply those rules to every axis of a grid. Each axis
//!   coordinate is shared by `m^{d-1}` sensors, so each axis move is paid
//!   `m^{d-1}` times.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::deployment::{Deployment1D, GridDeployment};
use crate::error::{domain, Error, Result};

/// Slack used by [`verify_ip`] for rounding accumulated in position sums.
pub const IP_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Mv1,
    I1,
    Mvd,
    Id,
}

impl Algorithm {
    pub fn is_grid(self) -> bool {
        matches!(self, Algorithm::Mvd | Algorithm::Id)
    }

    /// True for the sweeps that accept a whole interval `[s, v]`.
    pub fn is_interval(self) -> bool {
        matches!(self, Algorithm::I1 | Algorithm::Id)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Mv1 => "mv1",
            Algorithm::I1 => "i1",
            Algorithm::Mvd => "mvd",
            Algorithm::Id => "id",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mv1" => Ok(Algorithm::Mv1),
            "i1" => Ok(Algorithm::I1),
            "mvd" => Ok(Algorithm::Mvd),
            "id" => Ok(Algorithm::Id),
            other => Err(Error::Parse(format!("unknown algorithm {other:?}"))),
        }
    }
}

/// Separation window `[s, v]` and cost exponent `a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterferencePolicy {
    s: f64,
    v: f64,
    a: f64,
}

impl InterferencePolicy {
    pub fn new(s: f64, v: f64, a: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return domain(format!("s must be positive, got {s}"));
        }
        if !(v >= s && v.is_finite()) {
            return domain(format!("need s <= v, got s = {s}, v = {v}"));
        }
        if !(a > 0.0 && a.is_finite()) {
            return domain(format!("cost exponent a must be positive, got {a}"));
        }
        Ok(Self { s, v, a })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn v(&self) -> f64 {
        self.v
    }

    pub fn a(&self) -> f64 {
        self.a
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Placement {
    Line(Deployment1D),
    Grid(GridDeployment),
}

impl Placement {
    pub fn d(&self) -> usize {
        match self {
            Placement::Line(_) => 1,
            Placement::Grid(g) => g.d(),
        }
    }

    pub fn sensor_count(&self) -> u64 {
        match self {
            Placement::Line(l) => l.len() as u64,
            Placement::Grid(g) => g.sensor_count(),
        }
    }

    /// Coordinate sequences, one per axis.
    pub fn axes(&self) -> Vec<&[f64]> {
        match self {
            Placement::Line(l) => vec![l.positions()],
            Placement::Grid(g) => g.axes().iter().map(Vec::as_slice).collect(),
        }
    }
}

/// Outcome of one algorithm run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostReport {
    pub algorithm: Algorithm,
    pub s: f64,
    pub v: f64,
    pub a: f64,
    pub initial: Placement,
    pub final_positions: Placement,
    /// Absolute displacement per axis coordinate; a single axis on the line.
    pub moves: Vec<Vec<f64>>,
    /// Sensors sharing each axis coordinate (`1` on the line).
    pub multiplicity: u64,
    pub total_cost: f64,
}

/// Compact JSON view of a [`CostReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostSummary {
    pub algorithm: Algorithm,
    pub n: u64,
    pub d: usize,
    pub s: f64,
    pub v: f64,
    pub a: f64,
    pub total_cost: f64,
    pub moved_count: u64,
}

#[derive(Serialize)]
struct LineRow {
    index: usize,
    initial: f64,
    #[serde(rename = "final")]
    final_: f64,
    displacement: f64,
}

#[derive(Serialize)]
struct GridRow {
    axis: usize,
    index: usize,
    initial: f64,
    #[serde(rename = "final")]
    final_: f64,
    displacement: f64,
}

impl CostReport {
    /// Sensors whose position changed on at least one axis.
    pub fn moved_count(&self) -> u64 {
        let n = self.initial.sensor_count();
        match &self.initial {
            Placement::Line(_) => self.moves[0].iter().filter(|&&m| m != 0.0).count() as u64,
            Placement::Grid(g) => {
                let still: u64 =
                    self.moves.iter().map(|axis| axis.iter().filter(|&&m| m == 0.0).count() as u64).product();
                debug_assert!(still <= g.sensor_count());
                n - still
            }
        }
    }

    pub fn summary(&self) -> CostSummary {
        CostSummary {
            algorithm: self.algorithm,
            n: self.initial.sensor_count(),
            d: self.initial.d(),
            s: self.s,
            v: self.v,
            a: self.a,
            total_cost: self.total_cost,
            moved_count: self.moved_count(),
        }
    }

    /// Per-sensor dump: `index,initial,final,displacement` on the line, with
    /// a leading `axis` column (one row per axis coordinate) on a grid.
    pub fn write_displacements_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let initial = self.initial.axes();
        let fin = self.final_positions.axes();
        let grid = matches!(self.initial, Placement::Grid(_));
        for (k, (xs, ys)) in initial.iter().zip(&fin).enumerate() {
            for (i, (&x, &y)) in xs.iter().zip(ys.iter()).enumerate() {
                let displacement = self.moves[k][i];
                if grid {
                    w.serialize(GridRow { axis: k + 1, index: i + 1, initial: x, final_: y, displacement })?;
                } else {
                    w.serialize(LineRow { index: i + 1, initial: x, final_: y, displacement })?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[inline]
fn cost_power(x: f64, a: f64) -> f64 {
    if a == 1.0 {
        x
    } else if a == 2.0 {
        x * x
    } else if a.fract() == 0.0 && a <= 64.0 {
        x.powi(a as i32)
    } else {
        x.powf(a)
    }
}

fn axis_cost(moves: &[f64], a: f64) -> f64 {
    moves.iter().map(|&m| cost_power(m, a)).sum()
}

/// Equal spacing anchored at the first sensor, accumulated left to right.
fn equal_spacing(xs: &[f64], s: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(xs.len());
    let mut prev = xs[0];
    out.push(prev);
    for _ in 1..xs.len() {
        prev += s;
        out.push(prev);
    }
    out
}

fn interval_sweep(xs: &[f64], s: f64, v: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(xs.len());
    out.push(xs[0]);
    for &x in &xs[1..] {
        let prev = *out.last().unwrap();
        let gap = x - prev;
        let next = if gap < s {
            prev + s
        } else if gap > v {
            prev + v
        } else {
            x
        };
        out.push(next);
    }
    out
}

fn displacements(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    xs.iter().zip(ys).map(|(x, y)| (y - x).abs()).collect()
}

fn line_report(algorithm: Algorithm, dep: &Deployment1D, fin: Vec<f64>, s: f64, v: f64, a: f64) -> CostReport {
    let moves = displacements(dep.positions(), &fin);
    let total_cost = axis_cost(&moves, a);
    CostReport {
        algorithm,
        s,
        v,
        a,
        initial: Placement::Line(dep.clone()),
        final_positions: Placement::Line(Deployment1D::new(dep.rate(), fin).expect("order is preserved")),
        moves: vec![moves],
        multiplicity: 1,
        total_cost,
    }
}

fn grid_report(
    algorithm: Algorithm,
    dep: &GridDeployment,
    rule: impl Fn(&[f64]) -> Vec<f64>,
    s: f64,
    v: f64,
    a: f64,
) -> CostReport {
    let fin: Vec<Vec<f64>> = dep.axes().iter().map(|axis| rule(axis)).collect();
    let moves: Vec<Vec<f64>> = dep.axes().iter().zip(&fin).map(|(x, y)| displacements(x, y)).collect();
    let multiplicity = dep.multiplicity();
    let total_cost = multiplicity as f64 * moves.iter().map(|m| axis_cost(m, a)).sum::<f64>();
    CostReport {
        algorithm,
        s,
        v,
        a,
        initial: Placement::Grid(dep.clone()),
        final_positions: Placement::Grid(GridDeployment::new(dep.axis_rate(), fin).expect("order is preserved")),
        moves,
        multiplicity,
        total_cost,
    }
}

fn check_mv_args(s: f64, a: f64) -> Result<()> {
    InterferencePolicy::new(s, s, a).map(|_| ())
}

/// Sensor 1 stays put, sensor `i` moves to `X_1 + (i-1)s`.
pub fn mv1(dep: &Deployment1D, s: f64, a: f64) -> Result<CostReport> {
    check_mv_args(s, a)?;
    let fin = equal_spacing(dep.positions(), s);
    Ok(line_report(Algorithm::Mv1, dep, fin, s, s, a))
}

/// For `i = 2..n`: if the gap to the (already placed) predecessor is below
/// `s` push sensor `i` right to `prev + s`; above `v` pull it left to
/// `prev + v`; otherwise leave it.
pub fn i1(dep: &Deployment1D, policy: InterferencePolicy) -> CostReport {
    let fin = interval_sweep(dep.positions(), policy.s, policy.v);
    line_report(Algorithm::I1, dep, fin, policy.s, policy.v, policy.a)
}

/// Equal spacing on every axis: axis `k` coordinate `j` moves to
/// `X^{(k)}_1 + (j-1)s`.
pub fn mvd(dep: &GridDeployment, s: f64, a: f64) -> Result<CostReport> {
    check_mv_args(s, a)?;
    Ok(grid_report(Algorithm::Mvd, dep, |axis| equal_spacing(axis, s), s, s, a))
}

/// The interval sweep run on every axis.
pub fn id(dep: &GridDeployment, policy: InterferencePolicy) -> CostReport {
    grid_report(Algorithm::Id, dep, |axis| interval_sweep(axis, policy.s, policy.v), policy.s, policy.v, policy.a)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Violation {
    /// 0-based axis (always 0 on the line).
    pub axis: usize,
    /// 0-based index of the later sensor of the offending pair.
    pub index: usize,
    pub gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IpCheck {
    pub satisfied: bool,
    pub first_violation: Option<Violation>,
}

/// Checks that every consecutive gap, on the line or along every row and
/// column of a grid, lies in `[s - 1e-12, v + 1e-12]`.
pub fn verify_ip(placement: &Placement, s: f64, v: f64) -> IpCheck {
    for (axis, xs) in placement.axes().into_iter().enumerate() {
        for (i, w) in xs.windows(2).enumerate() {
            let gap = w[1] - w[0];
            if !(gap >= s - IP_SLACK && gap <= v + IP_SLACK) {
                return IpCheck { satisfied: false, first_violation: Some(Violation { axis, index: i + 1, gap }) };
            }
        }
    }
    IpCheck { satisfied: true, first_violation: None }
}

/// True when every axis of the final placement keeps the initial order.
pub fn preserves_order(report: &CostReport) -> bool {
    report.final_positions.axes().iter().zip(report.initial.axes()).all(|(ys, xs)| {
        let mut idx: Vec<usize> = (0..xs.len()).collect();
        idx.sort_by(|&i, &j| xs[i].total_cmp(&xs[j]));
        idx.windows(2).all(|w| ys[w[0]] <= ys[w[1]])
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deployment::{sample_1d, sample_grid, RngSeed};
    use proptest::prelude::*;

    fn line(xs: &[f64]) -> Deployment1D {
        Deployment1D::new(1.0, xs.to_vec()).unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * b.abs().max(1.0)
    }

    #[test]
    fn mv1_examples() {
        let r = mv1(&line(&[0.1, 0.2, 0.3]), 0.1, 2.0).unwrap();
        assert!(r.total_cost < 1e-30);
        let r = mv1(&line(&[0.0, 0.5]), 0.1, 1.0).unwrap();
        assert!(close(r.total_cost, 0.4));
        assert_eq!(r.moved_count(), 1);
        assert!(mv1(&line(&[0.0, 0.5]), 0.0, 1.0).is_err());
        assert!(mv1(&line(&[0.0, 0.5]), 0.1, -1.0).is_err());
    }

    #[test]
    fn i1_examples() {
        let p = InterferencePolicy::new(0.4, 0.6, 1.0).unwrap();
        let r = i1(&line(&[0.0, 0.5, 1.0]), p);
        assert_eq!(r.total_cost, 0.0);
        assert_eq!(r.moved_count(), 0);

        // sensor 2 -> 0.3 (0.2), sensor 3 -> 0.6 (0.4)
        let p = InterferencePolicy::new(0.3, 0.5, 1.0).unwrap();
        let r = i1(&line(&[0.0, 0.1, 0.2]), p);
        let Placement::Line(fin) = &r.final_positions else { panic!() };
        assert!(close(fin.positions()[1], 0.3) && close(fin.positions()[2], 0.6));
        assert!(close(r.total_cost, 0.6));
    }

    #[test]
    fn i1_pulls_left_when_gap_too_large() {
        let p = InterferencePolicy::new(0.1, 0.2, 2.0).unwrap();
        let r = i1(&line(&[0.0, 1.0, 1.1]), p);
        let Placement::Line(fin) = &r.final_positions else { panic!() };
        // 1.0 -> 0.2, then 1.1 is 0.9 away from 0.2 -> 0.4
        assert!(close(fin.positions()[1], 0.2) && close(fin.positions()[2], 0.4));
        assert!(close(r.total_cost, 0.8f64.powi(2) + 0.7f64.powi(2)));
    }

    #[test]
    fn policy_validation() {
        assert!(InterferencePolicy::new(0.2, 0.1, 1.0).is_err());
        assert!(InterferencePolicy::new(0.0, 0.1, 1.0).is_err());
        assert!(InterferencePolicy::new(0.1, 0.1, 0.0).is_err());
        assert!(InterferencePolicy::new(0.1, 0.1, 0.5).is_ok());
    }

    #[test]
    fn grid_examples() {
        let g = GridDeployment::new(2.0, vec![vec![0.0, 0.5], vec![0.0, 0.3]]).unwrap();
        let r = mvd(&g, 0.1, 1.0).unwrap();
        assert!(close(r.total_cost, 1.2), "{}", r.total_cost);
        assert_eq!(r.multiplicity, 2);
        // every sensor except those at (x1, y1) moved: 4 - 1
        assert_eq!(r.moved_count(), 3);

        let eq = GridDeployment::new(2.0, vec![vec![0.0, 0.1, 0.2], vec![1.0, 1.1, 1.2]]).unwrap();
        assert!(mvd(&eq, 0.1, 2.0).unwrap().total_cost < 1e-28);

        let p = InterferencePolicy::new(0.3, 0.5, 1.0).unwrap();
        let g = GridDeployment::new(2.0, vec![vec![0.0, 0.1, 0.2], vec![0.0, 0.4, 0.8]]).unwrap();
        let r = id(&g, p);
        let a1 = i1(&line(&[0.0, 0.1, 0.2]), p).total_cost;
        let a2 = i1(&line(&[0.0, 0.4, 0.8]), p).total_cost;
        assert_eq!(a2, 0.0);
        assert!(close(r.total_cost, 3.0 * (a1 + a2)));
    }

    #[test]
    fn verify_ip_reports_first_violation() {
        let dep = line(&[0.0, 0.1, 0.5, 0.55]);
        let c = verify_ip(&Placement::Line(dep), 0.1, 0.3);
        assert!(!c.satisfied);
        let v = c.first_violation.unwrap();
        assert_eq!((v.axis, v.index), (0, 2));
        assert!(close(v.gap, 0.4));
    }

    #[test]
    fn raw_deployment_fails_exact_spacing() {
        let dep = sample_1d(100, 100.0, RngSeed::new(1, 0)).unwrap();
        assert!(!verify_ip(&Placement::Line(dep), 0.01, 0.01).satisfied);
    }

    #[test]
    fn summary_and_csv() {
        let r = mv1(&line(&[0.0, 0.5]), 0.1, 1.0).unwrap();
        let s = r.summary();
        assert_eq!((s.n, s.d, s.moved_count), (2, 1, 1));
        let mut buf = Vec::new();
        r.write_displacements_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("index,initial,final,displacement"));
        assert_eq!(text.lines().count(), 3);

        let g = GridDeployment::new(2.0, vec![vec![0.0, 0.5], vec![0.0, 0.3]]).unwrap();
        let mut buf = Vec::new();
        mvd(&g, 0.1, 1.0).unwrap().write_displacements_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("axis,index,initial,final,displacement"));
        assert_eq!(text.lines().count(), 5);
    }

    #[test]
    fn algorithm_names_round_trip() {
        for alg in [Algorithm::Mv1, Algorithm::I1, Algorithm::Mvd, Algorithm::Id] {
            assert_eq!(alg.as_str().parse::<Algorithm>().unwrap(), alg);
            assert_eq!(serde_json::to_string(&alg).unwrap(), format!("\"{alg}\""));
        }
        assert!("mv2".parse::<Algorithm>().is_err());
    }

    proptest! {
        #[test]
        fn line_postconditions(
            n in 2usize..300,
            seed: u64,
            s_scale in 0.2f64..2.0,
            width in 0.0f64..1.5,
            a in 0.25f64..4.0,
        ) {
            let rate = n as f64;
            let dep = sample_1d(n, rate, RngSeed::new(seed, 0)).unwrap();
            let s = s_scale / rate;
            let v = s * (1.0 + width);
            let policy = InterferencePolicy::new(s, v, a).unwrap();

            let m = mv1(&dep, s, a).unwrap();
            prop_assert!(verify_ip(&m.final_positions, s, s).satisfied);
            prop_assert!(preserves_order(&m));
            let sum: f64 = m.moves[0].iter().map(|x| x.powf(a)).sum();
            prop_assert!(close(m.total_cost, sum));

            let r = i1(&dep, policy);
            prop_assert!(verify_ip(&r.final_positions, s, v).satisfied);
            prop_assert!(preserves_order(&r));

            let same = i1(&dep, InterferencePolicy::new(s, s, a).unwrap());
            prop_assert_eq!(&same.final_positions, &m.final_positions);
        }

        #[test]
        fn translation_invariance(n in 2usize..100, seed: u64, shift in 0.0f64..5.0) {
            let dep = sample_1d(n, n as f64, RngSeed::new(seed, 1)).unwrap();
            let moved = Deployment1D::new(dep.rate(), dep.positions().iter().map(|x| x + shift).collect()).unwrap();
            let s = 1.0 / n as f64;
            let p = InterferencePolicy::new(0.9 * s, 1.1 * s, 2.0).unwrap();
            let (c0, c1) = (mv1(&dep, s, 2.0).unwrap().total_cost, mv1(&moved, s, 2.0).unwrap().total_cost);
            prop_assert!((c0 - c1).abs() <= 1e-9 * c0.max(1e-12));
            let (c0, c1) = (i1(&dep, p).total_cost, i1(&moved, p).total_cost);
            prop_assert!((c0 - c1).abs() <= 1e-9 * c0.max(1e-9));
        }

        #[test]
        fn grid_postconditions(m in 2u64..20, d in 2u32..4, seed: u64, a in 0.5f64..3.0) {
            let g = sample_grid(m.pow(d), d, RngSeed::new(seed, 2)).unwrap();
            let s = 1.0 / m as f64;
            let policy = InterferencePolicy::new(0.9 * s, 1.1 * s, a).unwrap();
            let r = mvd(&g, s, a).unwrap();
            prop_assert!(verify_ip(&r.final_positions, s, s).satisfied);
            prop_assert!(preserves_order(&r));
            let per_axis: f64 = (0..g.d()).map(|k| mv1(&g.axis(k), s, a).unwrap().total_cost).sum();
            prop_assert!(close(r.total_cost, g.multiplicity() as f64 * per_axis));

            let r = id(&g, policy);
            prop_assert!(verify_ip(&r.final_positions, policy.s(), policy.v()).satisfied);
            prop_assert!(preserves_order(&r));
            let per_axis: f64 = (0..g.d()).map(|k| i1(&g.axis(k), policy).total_cost).sum();
            prop_assert!(close(r.total_cost, g.multiplicity() as f64 * per_axis));
        }
    }
}
