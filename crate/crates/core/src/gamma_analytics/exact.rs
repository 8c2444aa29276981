//! Exact expected cost of the anchored equal-spacing algorithm (MV1) for even
//! cost exponents.
//!
//! With spacing `s = (1+ε)/n`, sensor `i` moves `|X_i - X_1 - (i-1)s|` and
//! `X_i - X_1 ~ Gamma(i-1, n)`. Expanding the even power binomially, the raw
//! moments `(i-1)^{rising j} / n^j` through Stirling numbers and collecting
//! powers of `(i-1)` gives
//!
//! ```text
//! E[cost] = n^{-a} Σ_e C_e Σ_{k=1}^{n-1} k^e,
//! C_{a-l} = Σ_j C(a,j) (1+ε)^{a-j} (-1)^j [j brack j-l].
//! ```
//!
//! All of this is carried out in exact rational arithmetic; the conversion
//! to `f64` happens once at the end.

use std::collections::BTreeMap;

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};

use crate::combinatorics::{binomial, factorial, StirlingTable};
use crate::error::{domain, Result};

/// How `Σ_{k=1}^{N} k^e` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerSumRoute {
    /// Term-by-term summation.
    Direct,
    /// Faulhaber's polynomial in `N`.
    ClosedForm,
    /// `ClosedForm` above 10^5 sensors, `Direct` otherwise.
    Auto,
}

const AUTO_SWITCH: u64 = 100_000;

#[derive(Debug, Clone)]
pub struct ExactCostExpansion {
    a: u32,
    epsilon1: f64,
    /// Indexed by the exponent of `(i-1)`, `0..=a`.
    coefficients: Vec<BigRational>,
}

impl ExactCostExpansion {
    pub fn new(a: u32, epsilon1: f64) -> Result<Self> {
        if a == 0 || a % 2 == 1 {
            return domain(format!("exact expansion needs an even positive a, got {a}"));
        }
        if !(epsilon1 >= 0.0 && epsilon1.is_finite()) {
            return domain(format!("epsilon1 must be a nonnegative real, got {epsilon1}"));
        }
        let eps = BigRational::from_float(epsilon1).expect("finite float");
        let scale = BigRational::one() + eps;
        let scale_pows: Vec<BigRational> = (0..=a)
            .scan(BigRational::one(), |p, _| {
                let cur = p.clone();
                *p *= &scale;
                Some(cur)
            })
            .collect();
        let table = StirlingTable::new(a as usize);
        let mut coefficients = vec![BigRational::zero(); a as usize + 1];
        for l1 in 0..=a {
            let mut acc = BigRational::zero();
            for j in l1..=a {
                let stirling = table.get(j as usize, (j - l1) as usize)?;
                let term =
                    BigRational::from_integer(binomial(a as u64, j as u64) * stirling) * &scale_pows[(a - j) as usize];
                if j % 2 == 0 {
                    acc += term;
                } else {
                    acc -= term;
                }
            }
            coefficients[(a - l1) as usize] = acc;
        }
        Ok(Self { a, epsilon1, coefficients })
    }

    pub fn a(&self) -> u32 {
        self.a
    }

    pub fn epsilon1(&self) -> f64 {
        self.epsilon1
    }

    /// Coefficient of `(i-1)^e` (in units of `rate^{-a}`), keyed by `e`.
    /// Zero coefficients are omitted.
    pub fn coefficients(&self) -> BTreeMap<u32, BigRational> {
        self.coefficients.iter().enumerate().filter(|(_, c)| !c.is_zero()).map(|(e, c)| (e as u32, c.clone())).collect()
    }

    /// Exact `Σ_{i=2}^{n} D_i` as a rational.
    pub fn total_exact(&self, n: u64, route: PowerSumRoute) -> Result<BigRational> {
        if n == 0 {
            return domain("n must be >= 1");
        }
        let route = match route {
            PowerSumRoute::Auto if n > AUTO_SWITCH => PowerSumRoute::ClosedForm,
            PowerSumRoute::Auto => PowerSumRoute::Direct,
            r => r,
        };
        let sums = match route {
            PowerSumRoute::Direct => power_sums_direct(n - 1, self.a),
            _ => power_sums_faulhaber(n - 1, self.a),
        };
        let mut acc = BigRational::zero();
        for (c, s) in self.coefficients.iter().zip(sums) {
            if !c.is_zero() {
                acc += c * BigRational::from_integer(s);
            }
        }
        Ok(acc / BigRational::from_integer(num::pow(BigInt::from(n), self.a as usize)))
    }

    pub fn total(&self, n: u64) -> Result<f64> {
        let exact = self.total_exact(n, PowerSumRoute::Auto)?;
        Ok(rational_to_f64(&exact))
    }
}

/// `E[a-total movement]` of MV1 with spacing `(1+ε1)/n` on `n` sensors.
pub fn exact_mv1_cost(n: u64, a: u32, epsilon1: f64) -> Result<f64> {
    ExactCostExpansion::new(a, epsilon1)?.total(n)
}

/// `a! / (2^{a/2} (a/2+1)!)`, the constant in front of `n^{1-a/2}` at the
/// threshold spacing.
pub fn leading_constant(a: u32) -> Result<BigRational> {
    if a == 0 || a % 2 == 1 {
        return domain(format!("leading constant needs an even positive a, got {a}"));
    }
    let half = (a / 2) as u64;
    Ok(BigRational::new(factorial(a as u64), (BigInt::one() << half as usize) * factorial(half + 1)))
}

/// Nearest `f64`, also for numerators and denominators beyond `f64` range.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    if let Some(v) = r.to_f64() {
        return v;
    }
    let shift = r.numer().bits() as i64 - r.denom().bits() as i64;
    let scaled = if shift > 0 {
        r / BigRational::from_integer(BigInt::one() << shift as usize)
    } else {
        r * BigRational::from_integer(BigInt::one() << (-shift) as usize)
    };
    let v = scaled.to_f64().unwrap_or(if r.is_negative() { -1.0 } else { 1.0 });
    v * 2f64.powi(shift as i32)
}

/// `[Σ_{k=1}^{N} k^e for e in 0..=max_e]`.
fn power_sums_direct(big_n: u64, max_e: u32) -> Vec<BigInt> {
    let mut sums = vec![BigInt::zero(); max_e as usize + 1];
    for k in 1..=big_n {
        let k = BigInt::from(k);
        let mut p = BigInt::one();
        for s in sums.iter_mut() {
            *s += &p;
            p *= &k;
        }
    }
    sums
}

/// Bernoulli numbers `B_0..=B_m` with `B_1 = -1/2`.
fn bernoulli(m: usize) -> Vec<BigRational> {
    let mut b: Vec<BigRational> = Vec::with_capacity(m + 1);
    for k in 0..=m {
        if k == 0 {
            b.push(BigRational::one());
            continue;
        }
        // Σ_{j=0}^{k} C(k+1, j) B_j = 0
        let acc: BigRational =
            (0..k).map(|j| BigRational::from_integer(binomial(k as u64 + 1, j as u64)) * &b[j]).sum();
        b.push(-acc / BigRational::from_integer(BigInt::from(k + 1)));
    }
    b
}

/// Faulhaber: `Σ_{k=1}^{N} k^e = 1/(e+1) Σ_j C(e+1, j) B+_j N^{e+1-j}`.
fn power_sums_faulhaber(big_n: u64, max_e: u32) -> Vec<BigInt> {
    let b = bernoulli(max_e as usize);
    let n = BigRational::from_integer(BigInt::from(big_n));
    (0..=max_e as usize)
        .map(|e| {
            let mut acc = BigRational::zero();
            for (j, bj) in b.iter().enumerate().take(e + 1) {
                let bj = if j == 1 { -bj.clone() } else { bj.clone() };
                acc +=
                    BigRational::from_integer(binomial(e as u64 + 1, j as u64)) * bj * num::pow(n.clone(), e + 1 - j);
            }
            let v = acc / BigRational::from_integer(BigInt::from(e + 1));
            debug_assert!(v.is_integer());
            v.to_integer()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::double_factorial_odd;

    fn int(v: i64) -> BigInt {
        BigInt::from(v)
    }

    /// Independent route: D_i = Σ_j C(a,j) t^{a-j} (-1)^j E[X^j] with
    /// E[X^j] = k (k+1) ... (k+j-1) / n^j, summed over k = i-1, all exact.
    fn exact_by_raw_moments(n: u64, a: u32, eps: BigRational) -> BigRational {
        let nn = BigRational::from_integer(int(n as i64));
        let mut total = BigRational::zero();
        for k in 1..n {
            let kk = BigRational::from_integer(int(k as i64));
            let t = (BigRational::one() + &eps) * &kk / &nn;
            let mut d = BigRational::zero();
            for j in 0..=a {
                let rising: BigInt = (0..j as u64).map(|r| int((k + r) as i64)).product();
                let moment = BigRational::from_integer(rising) / num::pow(nn.clone(), j as usize);
                let term = BigRational::from_integer(binomial(a as u64, j as u64))
                    * num::pow(t.clone(), (a - j) as usize)
                    * moment;
                if j % 2 == 0 {
                    d += term;
                } else {
                    d -= term;
                }
            }
            total += d;
        }
        total
    }

    #[test]
    fn matches_raw_moment_route_exactly() {
        for &(n, a, eps) in &[(2u64, 2u32, 0.0), (7, 2, 0.0), (13, 4, 0.0), (9, 6, 0.25), (20, 4, 0.3)] {
            let exp = ExactCostExpansion::new(a, eps).unwrap();
            let got = exp.total_exact(n, PowerSumRoute::Direct).unwrap();
            let oracle = exact_by_raw_moments(n, a, BigRational::from_float(eps).unwrap());
            assert_eq!(got, oracle, "n={n} a={a} eps={eps}");
        }
    }

    #[test]
    fn two_sensor_variance() {
        // one term, Var[Gamma(1, 2)] = 1/4
        assert_eq!(exact_mv1_cost(2, 2, 0.0).unwrap(), 0.25);
    }

    #[test]
    fn a_equals_two_closed_form() {
        // Σ_{k<n} k / n^2 = (n-1)/(2n)
        for n in [3u64, 10, 1000] {
            let v = ExactCostExpansion::new(2, 0.0).unwrap().total_exact(n, PowerSumRoute::Direct).unwrap();
            assert_eq!(v, BigRational::new(int(n as i64 - 1), int(2 * n as i64)));
        }
    }

    #[test]
    fn leading_terms_at_threshold() {
        let v = exact_mv1_cost(1000, 2, 0.0).unwrap();
        assert!((0.49..=0.51).contains(&v), "{v}");
        let v = exact_mv1_cost(1000, 4, 0.0).unwrap();
        assert!((v * 1000.0 - 1.0).abs() < 0.1, "{v}");
    }

    #[test]
    fn coefficients_vanish_above_half_power() {
        for a in (2..=12u32).step_by(2) {
            let coeffs = ExactCostExpansion::new(a, 0.0).unwrap().coefficients();
            assert!(coeffs.keys().all(|&e| e <= a / 2), "a={a}: {:?}", coeffs.keys());
            assert_eq!(coeffs[&(a / 2)], BigRational::from_integer(double_factorial_odd(a / 2)));
        }
    }

    #[test]
    fn leading_coefficient_above_threshold_is_eps_power() {
        let coeffs = ExactCostExpansion::new(4, 0.5).unwrap().coefficients();
        assert_eq!(coeffs[&4], BigRational::new(int(1), int(16)));
    }

    #[test]
    fn power_sum_routes_agree() {
        for n in [1u64, 2, 5, 97, 1234] {
            assert_eq!(power_sums_direct(n, 9), power_sums_faulhaber(n, 9), "N={n}");
        }
        let exp = ExactCostExpansion::new(6, 0.1).unwrap();
        for n in [3u64, 500, 20_000] {
            assert_eq!(
                exp.total_exact(n, PowerSumRoute::Direct).unwrap(),
                exp.total_exact(n, PowerSumRoute::ClosedForm).unwrap()
            );
        }
    }

    #[test]
    fn large_n_converges_to_leading_constant() {
        for a in [2u32, 4, 6] {
            let c = rational_to_f64(&leading_constant(a).unwrap());
            let v = exact_mv1_cost(10_000, a, 0.0).unwrap() * 10_000f64.powf(a as f64 / 2.0 - 1.0);
            assert!(((v - c) / c).abs() < 0.01, "a={a}: {v} vs {c}");
        }
        // the closed-form route carries n well past the direct limit
        let v = exact_mv1_cost(1_000_000, 2, 0.0).unwrap();
        assert!((v - 0.5).abs() < 1e-6);
    }

    #[test]
    fn linear_growth_above_threshold() {
        for a in [2u32, 4] {
            let r1 = exact_mv1_cost(10_000, a, 0.2).unwrap() / 10_000.0;
            let r2 = exact_mv1_cost(20_000, a, 0.2).unwrap() / 20_000.0;
            assert!(((r1 - r2) / r2).abs() < 0.02, "a={a}: {r1} {r2}");
        }
    }

    #[test]
    fn leading_constants() {
        assert_eq!(leading_constant(2).unwrap(), BigRational::new(int(1), int(2)));
        assert_eq!(leading_constant(4).unwrap(), BigRational::one());
        assert_eq!(leading_constant(6).unwrap(), BigRational::new(int(15), int(4)));
        assert!(leading_constant(3).is_err());
    }

    #[test]
    fn rejects_odd_and_bad_eps() {
        assert!(ExactCostExpansion::new(3, 0.0).is_err());
        assert!(ExactCostExpansion::new(0, 0.0).is_err());
        assert!(ExactCostExpansion::new(2, -0.1).is_err());
    }
}
