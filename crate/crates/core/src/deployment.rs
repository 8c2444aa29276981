//! Seeded random sensor deployments.
//!
//! A line deployment holds the first `n` arrival times of a Poisson process;
//! a grid deployment holds `d` independent such sequences of length
//! `m = n^{1/d}`, and its sensors are all `m^d` coordinate combinations.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Identifies one reproducible random stream: `seed` names the experiment,
/// `stream` the trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed {
    pub seed: u64,
    pub stream: u64,
}

impl RngSeed {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// Generator for one substream (grid axis) of this trial. Distinct
    /// `(seed, substream)` pairs key distinct ChaCha instances and the trial
    /// picks the ChaCha stream, so no two triples overlap.
    pub fn rng(&self, substream: u64) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&substream.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.stream);
        rng
    }
}

/// Arrival times of `n` sensors on `[0, ∞)`, sorted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deployment1D {
    rate: f64,
    positions: Vec<f64>,
}

impl Deployment1D {
    pub fn new(rate: f64, positions: Vec<f64>) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return domain(format!("rate must be positive, got {rate}"));
        }
        if positions.is_empty() {
            return domain("a deployment needs at least one sensor");
        }
        if positions.iter().any(|p| !p.is_finite()) {
            return domain("positions must be finite");
        }
        if positions.windows(2).any(|w| w[1] < w[0]) {
            return domain("positions must be sorted nondecreasing");
        }
        Ok(Self { rate, positions })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// One position per line, after a `# line` header.
    pub fn to_text(&self) -> String {
        let mut out = format!("# line rate={} n={}\n", self.rate, self.len());
        for p in &self.positions {
            let _ = writeln!(out, "{p}");
        }
        out
    }
}

impl FromStr for Deployment1D {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty deployment".into()))?;
        let fields = parse_header(header, "line")?;
        let rate = header_value(&fields, "rate")?;
        let positions = lines.filter(|l| !l.trim().is_empty()).map(parse_f64).collect::<Result<Vec<_>>>()?;
        Deployment1D::new(rate, positions)
    }
}

/// `d` independent arrival sequences spanning an `m^d` sensor grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDeployment {
    axis_rate: f64,
    axes: Vec<Vec<f64>>,
}

impl GridDeployment {
    pub fn new(axis_rate: f64, axes: Vec<Vec<f64>>) -> Result<Self> {
        if axes.len() < 2 {
            return domain(format!("a grid needs d >= 2 axes, got {}", axes.len()));
        }
        let m = axes[0].len();
        if axes.iter().any(|a| a.len() != m) {
            return domain("all grid axes must have the same length");
        }
        for axis in &axes {
            Deployment1D::new(axis_rate, axis.clone())?;
        }
        Ok(Self { axis_rate, axes })
    }

    pub fn d(&self) -> usize {
        self.axes.len()
    }

    /// Sensors per row / column.
    pub fn side(&self) -> usize {
        self.axes[0].len()
    }

    pub fn sensor_count(&self) -> u64 {
        (self.side() as u64).pow(self.d() as u32)
    }

    pub fn axis_rate(&self) -> f64 {
        self.axis_rate
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    /// Number of sensors that share one coordinate value on an axis.
    pub fn multiplicity(&self) -> u64 {
        (self.side() as u64).pow(self.d() as u32 - 1)
    }

    pub fn axis(&self, k: usize) -> Deployment1D {
        Deployment1D { rate: self.axis_rate, positions: self.axes[k].clone() }
    }

    /// A `# grid` header, then one block per axis separated by blank lines.
    pub fn to_text(&self) -> String {
        let mut out = format!("# grid d={} m={} axis_rate={}\n", self.d(), self.side(), self.axis_rate);
        for (k, axis) in self.axes.iter().enumerate() {
            if k > 0 {
                out.push('\n');
            }
            let _ = writeln!(out, "# axis {}", k + 1);
            for p in axis {
                let _ = writeln!(out, "{p}");
            }
        }
        out
    }
}

impl FromStr for GridDeployment {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty deployment".into()))?;
        let fields = parse_header(header, "grid")?;
        let rate = header_value(&fields, "axis_rate")?;
        let mut axes: Vec<Vec<f64>> = Vec::new();
        for line in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with("# axis") {
                axes.push(Vec::new());
                continue;
            }
            let axis = axes.last_mut().ok_or_else(|| Error::Parse("position before first axis block".into()))?;
            axis.push(parse_f64(line)?);
        }
        let d = header_value(&fields, "d")? as usize;
        if axes.len() != d {
            return Err(Error::Parse(format!("header says d={d}, found {} axis blocks", axes.len())));
        }
        GridDeployment::new(rate, axes)
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("bad number {s:?}: {e}")))
}

fn parse_header<'a>(header: &'a str, kind: &str) -> Result<Vec<(&'a str, &'a str)>> {
    let mut parts = header.split_whitespace();
    if parts.next() != Some("#") || parts.next() != Some(kind) {
        return Err(Error::Parse(format!("expected '# {kind}' header, got {header:?}")));
    }
    parts.map(|kv| kv.split_once('=').ok_or_else(|| Error::Parse(format!("bad header field {kv:?}")))).collect()
}

fn header_value(fields: &[(&str, &str)], key: &str) -> Result<f64> {
    let (_, v) = fields.iter().find(|(k, _)| *k == key).ok_or_else(|| Error::Parse(format!("header lacks {key}")))?;
    parse_f64(v)
}

/// Cumulative sums of `n` exponential(rate) gaps drawn by inversion.
fn arrivals(n: usize, rate: f64, rng: &mut impl Rng) -> Vec<f64> {
    let mut x = 0.0;
    (0..n)
        .map(|_| {
            // 1 - U lies in (0, 1], so the log is finite
            let u: f64 = 1.0 - rng.random::<f64>();
            x += -u.ln() / rate;
            x
        })
        .collect()
}

pub fn sample_1d(n: usize, rate: f64, seed: RngSeed) -> Result<Deployment1D> {
    if n == 0 {
        return domain("n must be >= 1");
    }
    if !(rate > 0.0 && rate.is_finite()) {
        return domain(format!("rate must be positive, got {rate}"));
    }
    let positions = arrivals(n, rate, &mut seed.rng(0));
    Ok(Deployment1D { rate, positions })
}

/// `m` with `m^d == n`, if there is one.
pub fn exact_root(n: u64, d: u32) -> Option<u64> {
    if d == 0 {
        return None;
    }
    let guess = (n as f64).powf(1.0 / d as f64).round() as u64;
    (guess.saturating_sub(1)..=guess + 1).find(|&m| m.checked_pow(d) == Some(n))
}

/// Grid of `n = m^d` sensors; axis `k` uses substream `k` and rate `m`.
pub fn sample_grid(n: u64, d: u32, seed: RngSeed) -> Result<GridDeployment> {
    if d < 2 {
        return domain(format!("grid deployments need d >= 2, got {d}"));
    }
    let m = match exact_root(n, d) {
        Some(m) if m >= 1 => m,
        _ => return domain(format!("n must be a perfect d-th power (n = {n}, d = {d})")),
    };
    let rate = m as f64;
    let axes = (0..d as u64).map(|k| arrivals(m as usize, rate, &mut seed.rng(k))).collect();
    Ok(GridDeployment { axis_rate: rate, axes })
}
