//! Globally adaptive 7/15-point Gauss-Kronrod quadrature on finite intervals.

#![allow(clippy::excessive_precision)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the odd-indexed Kronrod nodes 1, 3, 5 and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { abs: 1e-12, rel: 1e-10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
    pub converged: bool,
}

const MAX_INTERVALS: usize = 4000;

#[derive(Debug)]
struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Segment {
    let centre = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(centre);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (i, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(centre - dx) + f(centre + dx);
        kronrod += w * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    Segment { lo, hi, value: kronrod * half, error: ((kronrod - gauss) * half).abs() }
}

/// Integrates `f` over `[lo, hi]`, bisecting the segment with the largest
/// error estimate until `error <= max(abs, rel * |value|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: Tolerance) -> QuadResult {
    if hi <= lo {
        return QuadResult { value: 0.0, error: 0.0, intervals: 0, converged: true };
    }
    let mut heap = BinaryHeap::new();
    let first = gk15(&f, lo, hi);
    let (mut value, mut error) = (first.value, first.error);
    heap.push(first);
    loop {
        if error <= tol.abs.max(tol.rel * value.abs()) {
            return QuadResult { value, error, intervals: heap.len(), converged: true };
        }
        if heap.len() >= MAX_INTERVALS {
            break;
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            heap.push(worst);
            break;
        }
        let left = gk15(&f, worst.lo, mid);
        let right = gk15(&f, mid, worst.hi);
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    // recompute from scratch to shed accumulated update rounding
    let value = heap.iter().map(|s| s.value).sum();
    let error = heap.iter().map(|s| s.error).sum();
    QuadResult { value, error, intervals: heap.len(), converged: false }
}

/// Integrates over consecutive `breaks` (sorted), summing the pieces.
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: F, breaks: &[f64], tol: Tolerance) -> QuadResult {
    let mut out = QuadResult { value: 0.0, error: 0.0, intervals: 0, converged: true };
    for w in breaks.windows(2) {
        let r = integrate(&f, w[0], w[1], tol);
        out.value += r.value;
        out.error += r.error;
        out.intervals += r.intervals;
        out.converged &= r.converged;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let r = integrate(|x| x.powi(5) - 3.0 * x * x, 0.0, 2.0, Tolerance::default());
        assert!((r.value - (64.0 / 6.0 - 8.0)).abs() < 1e-13);
        assert!(r.converged);
    }

    #[test]
    fn smooth_transcendental() {
        let r = integrate(f64::sin, 0.0, std::f64::consts::PI, Tolerance::default());
        assert!((r.value - 2.0).abs() < 1e-12);
        let r = integrate(|x| (-x * x).exp(), -8.0, 8.0, Tolerance { abs: 0.0, rel: 1e-13 });
        assert!((r.value - std::f64::consts::PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn endpoint_singular_derivative() {
        // ∫_0^1 sqrt(1-x) dx = 2/3
        let r = integrate(|x| (1.0 - x).max(0.0).sqrt(), 0.0, 1.0, Tolerance::default());
        assert!((r.value - 2.0 / 3.0).abs() < 1e-10, "{r:?}");
    }

    #[test]
    fn empty_interval() {
        assert_eq!(integrate(|_| 1.0, 1.0, 1.0, Tolerance::default()).value, 0.0);
    }
}
