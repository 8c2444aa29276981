use serde::Serialize;

use super::GammaArrival;
use crate::error::{domain, Result};

/// A bound sum together with whether its parameters sit in the regime the
/// `O(n^{1-a})` estimate is stated for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundSum {
    pub value: f64,
    pub in_regime: bool,
}

fn check(n: u64, spacing: f64, a: f64) -> Result<()> {
    if n == 0 {
        return domain("n must be >= 1");
    }
    if !(spacing > 0.0) || !(a > 0.0) {
        return domain(format!("spacing and a must be positive, got {spacing}, {a}"));
    }
    Ok(())
}

/// `Σ_{l=1}^{n} (n/l) E[((s l - X_l)^+)^a]` with `X_l ~ Gamma(l, n)`.
///
/// Bounds the expected cost of the left-to-right pushes in the interval
/// sweep. Stated for `s n < 1`; outside that the value is still computed but
/// flagged.
pub fn lower_shortfall_bound_sum(n: u64, s: f64, a: f64) -> Result<BoundSum> {
    check(n, s, a)?;
    let in_regime = s * (n as f64) < 1.0;
    if !in_regime {
        log::warn!("lower shortfall sum evaluated outside s*n < 1 (s*n = {})", s * n as f64);
    }
    let rate = n as f64;
    let value = (1..=n)
        .map(|l| {
            let g = GammaArrival::new(l, rate).expect("valid arrival");
            rate / l as f64 * g.truncated_lower_moment(a, s * l as f64)
        })
        .sum();
    Ok(BoundSum { value, in_regime })
}

/// `Σ_{l=1}^{n} (n/l) E[((X_l - v l)^+)^a]` with `X_l ~ Gamma(l, n)`.
///
/// The right-to-left counterpart of [`lower_shortfall_bound_sum`]; stated for
/// `v n > 1`.
pub fn upper_excess_bound_sum(n: u64, v: f64, a: f64) -> Result<BoundSum> {
    check(n, v, a)?;
    let in_regime = v * (n as f64) > 1.0;
    if !in_regime {
        log::warn!("upper excess sum evaluated outside v*n > 1 (v*n = {})", v * n as f64);
    }
    let rate = n as f64;
    let value = (1..=n)
        .map(|l| {
            let g = GammaArrival::new(l, rate).expect("valid arrival");
            rate / l as f64 * g.truncated_upper_moment(a, v * l as f64)
        })
        .sum();
    Ok(BoundSum { value, in_regime })
}
