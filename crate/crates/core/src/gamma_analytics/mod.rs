//! Gamma-distributed arrival times.
//!
//! The `l`-th arrival of a Poisson process with rate `n` has density
//! `f(t) = n e^{-nt} (nt)^{l-1} / (l-1)!`, and so does the gap `X_{j+l} - X_j`.
//! Densities and moments are evaluated in log space so that `l` can run into
//! the millions without overflowing factorials.

mod bounds;
mod exact;
pub mod quadrature;

pub use bounds::{lower_shortfall_bound_sum, upper_excess_bound_sum, BoundSum};
pub use exact::{exact_mv1_cost, leading_constant, rational_to_f64, ExactCostExpansion, PowerSumRoute};

use crate::error::{domain, Result};
use quadrature::{integrate_pieces, QuadResult, Tolerance};

/// `ln(k!)`. Exact factorials below 20, Stirling series above (truncation
/// error below 1e-17 there).
pub fn ln_factorial(k: u64) -> f64 {
    if k < 20 {
        return ((2..=k).product::<u64>() as f64).ln();
    }
    let x = k as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)));
    x * x.ln() - x + 0.5 * (std::f64::consts::TAU * x).ln() + series
}

/// Position of the `l`-th arrival of a Poisson process with the given rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaArrival {
    l: u64,
    rate: f64,
}

impl GammaArrival {
    pub fn new(l: u64, rate: f64) -> Result<Self> {
        if l == 0 {
            return domain("gamma arrival index l must be >= 1");
        }
        if !(rate > 0.0 && rate.is_finite()) {
            return domain(format!("arrival rate must be positive, got {rate}"));
        }
        Ok(Self { l, rate })
    }

    pub fn l(&self) -> u64 {
        self.l
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// `ln f(t)` for `t > 0`; `-inf` at the origin unless `l = 1`.
    pub fn ln_density(&self, t: f64) -> f64 {
        let n = self.rate;
        let power = if self.l == 1 { 0.0 } else { (self.l - 1) as f64 * (n * t).ln() };
        n.ln() - n * t + power - ln_factorial(self.l - 1)
    }

    pub fn density(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return domain(format!("density needs t >= 0, got {t}"));
        }
        Ok(self.ln_density(t).exp())
    }

    /// `l / rate`.
    pub fn mean(&self) -> f64 {
        self.l as f64 / self.rate
    }

    /// Mode of the density, `(l-1)/rate`.
    pub fn mode(&self) -> f64 {
        (self.l - 1) as f64 / self.rate
    }

    /// `∫_z^∞ t^b f(t) dt`
    /// `= (l-1+b)! / ((l-1)! n^b) · e^{-nz} Σ_{j=0}^{l-1+b} (nz)^j / j!`.
    pub fn tail_moment(&self, b: u32, z: f64) -> f64 {
        let n = self.rate;
        let top = self.l - 1 + b as u64;
        let ln_prefactor = ln_factorial(top) - ln_factorial(self.l - 1) - b as f64 * n.ln();
        (ln_prefactor + ln_poisson_cdf(top, n * z.max(0.0))).exp()
    }

    /// [`tail_moment`](Self::tail_moment) by adaptive quadrature of the density.
    pub fn tail_moment_quadrature(&self, b: u32, z: f64, tol: Tolerance) -> QuadResult {
        let z = z.max(0.0);
        let ln_h = |t: f64| {
            if t < z {
                f64::NEG_INFINITY
            } else if b == 0 {
                self.ln_density(t)
            } else {
                b as f64 * t.ln() + self.ln_density(t)
            }
        };
        let mode = ((self.l - 1 + b as u64) as f64 / self.rate).max(z);
        let floor = ln_h(mode) + CUTOFF_LN;
        let mut top = mode + 1.0 / self.rate;
        while ln_h(top) > floor {
            top = mode + 2.0 * (top - mode);
        }
        let top = bisect_decreasing(|t| ln_h(t) - floor, mode, top);
        let lo = if ln_h(z) >= floor { z } else { bisect_decreasing(|t| floor - ln_h(t), z, mode) };
        integrate_pieces(|t| ln_h(t).exp(), &dedup(&[lo, mode, top]), tol)
    }

    /// `E[X^b] = (l-1+b)! / ((l-1)! n^b)`.
    pub fn raw_moment(&self, b: u32) -> f64 {
        self.tail_moment(b, 0.0)
    }

    /// `E[((c - X)^+)^a] = ∫_0^c (c-t)^a f(t) dt`, by adaptive quadrature.
    pub fn truncated_lower_moment(&self, a: f64, c: f64) -> f64 {
        self.truncated_lower_moment_with(a, c, Tolerance::default()).value
    }

    pub fn truncated_lower_moment_with(&self, a: f64, c: f64, tol: Tolerance) -> QuadResult {
        if !(c > 0.0) {
            return QuadResult { value: 0.0, error: 0.0, intervals: 0, converged: true };
        }
        let ln_g = |t: f64| {
            if t >= c {
                f64::NEG_INFINITY
            } else {
                a * (c - t).ln() + self.ln_density(t)
            }
        };
        // d/dt ln g = -a/(c-t) + (l-1)/t - n, strictly decreasing on (0, c)
        let slope = |t: f64| -a / (c - t) + (self.l - 1) as f64 / t - self.rate;
        let mode = if self.l == 1 { 0.0 } else { bisect_decreasing(slope, 0.0, c) };
        let floor = ln_g(mode) + CUTOFF_LN;
        let lo =
            if self.l == 1 || ln_g(0.0) >= floor { 0.0 } else { bisect_decreasing(|t| floor - ln_g(t), 0.0, mode) };
        let hi = bisect_decreasing(|t| ln_g(t) - floor, mode, c);
        let breaks: Vec<f64> = dedup(&[lo, mode, hi]);
        integrate_pieces(|t| ln_g(t).exp(), &breaks, tol)
    }

    /// `E[((X - c)^+)^a] = ∫_c^∞ (t-c)^a f(t) dt`.
    ///
    /// Integer `a` goes through the binomial expansion over
    /// [`tail_moment`](Self::tail_moment); everything else through quadrature.
    pub fn truncated_upper_moment(&self, a: f64, c: f64) -> f64 {
        if let Some(k) = small_integer(a) {
            self.truncated_upper_moment_closed(k, c)
        } else {
            self.truncated_upper_moment_quadrature(a, c, Tolerance::default()).value
        }
    }

    /// Binomial route: `Σ_j C(a,j) (-c)^{a-j} ∫_c^∞ t^j f(t) dt`.
    pub fn truncated_upper_moment_closed(&self, a: u32, c: f64) -> f64 {
        let c = c.max(0.0);
        let mut binom = 1.0;
        let mut acc = 0.0;
        for j in 0..=a {
            let sign = if (a - j).is_multiple_of(2) { 1.0 } else { -1.0 };
            acc += sign * binom * c.powi((a - j) as i32) * self.tail_moment(j, c);
            binom = binom * (a - j) as f64 / (j + 1) as f64;
        }
        acc.max(0.0)
    }

    pub fn truncated_upper_moment_quadrature(&self, a: f64, c: f64, tol: Tolerance) -> QuadResult {
        let c = c.max(0.0);
        let ln_g = |t: f64| {
            if t <= c {
                f64::NEG_INFINITY
            } else {
                a * (t - c).ln() + self.ln_density(t)
            }
        };
        let slope = |t: f64| a / (t - c) + (self.l - 1) as f64 / t - self.rate;
        let mut hi = c + (a + self.l as f64) / self.rate;
        while slope(hi) > 0.0 {
            hi = c + 2.0 * (hi - c);
        }
        let mode = bisect_decreasing(slope, c, hi);
        let floor = ln_g(mode) + CUTOFF_LN;
        let mut top = mode + (mode - c).max(1.0 / self.rate);
        while ln_g(top) > floor {
            top = mode + 2.0 * (top - mode);
        }
        let top = bisect_decreasing(|t| ln_g(t) - floor, mode, top);
        let lo = bisect_decreasing(|t| floor - ln_g(t), c, mode);
        let breaks = dedup(&[lo, mode, top]);
        integrate_pieces(|t| ln_g(t).exp(), &breaks, tol)
    }
}

/// Integration ranges stop where the integrand drops below 1e-18 of its peak.
const CUTOFF_LN: f64 = -41.446_531_673_892_82;

fn dedup(points: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(points.len());
    for &p in points {
        if out.last().is_none_or(|&q| p > q) {
            out.push(p);
        }
    }
    out
}

fn small_integer(a: f64) -> Option<u32> {
    (a.fract() == 0.0 && (1.0..=64.0).contains(&a)).then_some(a as u32)
}

/// Root of a decreasing function on `[lo, hi]` (clamped to the ends when
/// there is no sign change).
fn bisect_decreasing<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid);
        if v.is_nan() || v > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `ln( e^{-x} Σ_{j=0}^{k} x^j / j! )`, i.e. the log of `P[Poisson(x) <= k]`.
///
/// Terms are summed outward from the largest one, `j = min(k, floor x)`,
/// using the ratio recurrences so nothing overflows.
pub fn ln_poisson_cdf(k: u64, x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let peak = k.min(x.floor() as u64);
    let ln_peak = -x + peak as f64 * x.ln() - ln_factorial(peak);
    let mut sum = 1.0;
    // downward: t_{j-1} = t_j * j / x
    let mut term = 1.0;
    let mut j = peak;
    while j > 0 {
        term *= j as f64 / x;
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
        j -= 1;
    }
    // upward: t_{j+1} = t_j * x / (j + 1)
    let mut term = 1.0;
    let mut j = peak;
    while j < k {
        term *= x / (j + 1) as f64;
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
        j += 1;
    }
    ln_peak + sum.ln()
}
