//! Exact integer combinatorics: factorials, rising factorials, unsigned
//! Stirling numbers of the first kind, Eulerian numbers of the second kind and
//! finite differences.
//!
//! Everything here is exact. There is deliberately no floating point in this
//! module; identity checks compare `BigInt`s for equality.

use std::ops::{Add, Mul, Sub};
use std::sync::OnceLock;

use num::{BigInt, BigRational, One, Zero};

use crate::error::{domain, Result};

/// Largest row kept in the shared tables.
pub const DEFAULT_TABLE_MAX: usize = 64;

pub fn factorial(n: u64) -> BigInt {
    (2..=n).fold(BigInt::one(), |acc, k| acc * k)
}

/// Binomial coefficient `C(n, k)`, zero when `k > n`.
pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Rising factorial `x (x+1) ... (x+k-1)`; the empty product is one.
pub fn rising_factorial(x: &BigRational, k: u32) -> BigRational {
    let mut acc = BigRational::one();
    let mut term = x.clone();
    for _ in 0..k {
        acc *= &term;
        term += BigRational::one();
    }
    acc
}

/// Triangle of unsigned Stirling numbers of the first kind, `[n brack k]`,
/// the coefficients of `x^k` in the rising factorial of order `n`.
#[derive(Debug, Clone)]
pub struct StirlingTable {
    rows: Vec<Vec<BigInt>>,
}

impl StirlingTable {
    pub fn new(max_n: usize) -> Self {
        let mut rows: Vec<Vec<BigInt>> = Vec::with_capacity(max_n + 1);
        rows.push(vec![BigInt::one()]);
        for n in 0..max_n {
            let prev = &rows[n];
            let mut next = vec![BigInt::zero(); n + 2];
            for (k, slot) in next.iter_mut().enumerate() {
                // [n+1, k] = [n, k-1] + n [n, k]
                if k >= 1 {
                    *slot += &prev[k - 1];
                }
                if k <= n {
                    *slot += &prev[k] * n;
                }
            }
            rows.push(next);
        }
        Self { rows }
    }

    pub fn max_n(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn get(&self, n: usize, k: usize) -> Result<&BigInt> {
        if k > n {
            return domain(format!("stirling number [{n} brack {k}] needs k <= n"));
        }
        match self.rows.get(n) {
            Some(row) => Ok(&row[k]),
            None => domain(format!("row {n} exceeds table size {}", self.max_n())),
        }
    }

    pub fn row(&self, n: usize) -> Option<&[BigInt]> {
        self.rows.get(n).map(Vec::as_slice)
    }

    /// Adds one to a single entry. Only used to check that identity harnesses
    /// actually detect a broken table.
    #[doc(hidden)]
    pub fn corrupt_entry(&mut self, n: usize, k: usize) {
        if let Some(v) = self.rows.get_mut(n).and_then(|r| r.get_mut(k)) {
            *v += 1;
        }
    }
}

/// Triangle of Eulerian numbers of the second kind `<<n, k>>`.
#[derive(Debug, Clone)]
pub struct EulerianSecondTable {
    rows: Vec<Vec<BigInt>>,
}

impl EulerianSecondTable {
    pub fn new(max_n: usize) -> Self {
        let mut rows: Vec<Vec<BigInt>> = Vec::with_capacity(max_n + 1);
        rows.push(vec![BigInt::one()]);
        for n in 1..=max_n {
            let prev = &rows[n - 1];
            let mut next = vec![BigInt::zero(); n + 1];
            for (k, slot) in next.iter_mut().enumerate() {
                // <<n,k>> = (k+1) <<n-1,k>> + (2n-1-k) <<n-1,k-1>>
                if k < n {
                    *slot += &prev[k] * (k + 1);
                }
                if k >= 1 && 2 * n > k + 1 {
                    *slot += &prev[k - 1] * (2 * n - 1 - k);
                }
            }
            rows.push(next);
        }
        Self { rows }
    }

    pub fn max_n(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn get(&self, n: usize, k: usize) -> Result<&BigInt> {
        if k > n {
            return domain(format!("eulerian number <<{n},{k}>> needs k <= n"));
        }
        match self.rows.get(n) {
            Some(row) => Ok(&row[k]),
            None => domain(format!("row {n} exceeds table size {}", self.max_n())),
        }
    }

    pub fn row(&self, n: usize) -> Option<&[BigInt]> {
        self.rows.get(n).map(Vec::as_slice)
    }

    #[doc(hidden)]
    pub fn corrupt_entry(&mut self, n: usize, k: usize) {
        if let Some(v) = self.rows.get_mut(n).and_then(|r| r.get_mut(k)) {
            *v += 1;
        }
    }
}

fn shared_stirling() -> &'static StirlingTable {
    static TABLE: OnceLock<StirlingTable> = OnceLock::new();
    TABLE.get_or_init(|| StirlingTable::new(DEFAULT_TABLE_MAX))
}

fn shared_eulerian() -> &'static EulerianSecondTable {
    static TABLE: OnceLock<EulerianSecondTable> = OnceLock::new();
    TABLE.get_or_init(|| EulerianSecondTable::new(DEFAULT_TABLE_MAX))
}

/// Unsigned Stirling number of the first kind. Rows past the shared table are
/// built on demand.
pub fn stirling_first(n: usize, k: usize) -> Result<BigInt> {
    if n <= DEFAULT_TABLE_MAX {
        shared_stirling().get(n, k).cloned()
    } else {
        StirlingTable::new(n).get(n, k).cloned()
    }
}

pub fn eulerian_second(n: usize, k: usize) -> Result<BigInt> {
    if n <= DEFAULT_TABLE_MAX {
        shared_eulerian().get(n, k).cloned()
    } else {
        EulerianSecondTable::new(n).get(n, k).cloned()
    }
}

/// `Δ^a f(0) = Σ_j C(a,j) (-1)^(a-j) f(j)`.
pub fn finite_difference_sum<T, F>(a: u32, f: F) -> T
where
    F: Fn(u32) -> T,
    T: Zero + From<BigInt> + Add<Output = T> + Sub<Output = T> + Mul<Output = T>,
{
    (0..=a).fold(T::zero(), |acc, j| {
        let term = T::from(binomial(a as u64, j as u64)) * f(j);
        if (a - j).is_multiple_of(2) {
            acc + term
        } else {
            acc - term
        }
    })
}

/// `Σ_j C(a,j) (-1)^j [j brack j-l1]` evaluated term by term from `table`.
///
/// For even `a` this vanishes when `2 l1 < a` and equals `a! / ((a/2)! 2^(a/2))`
/// when `2 l1 = a`; see [`alternating_stirling_closed_form`].
pub fn alternating_stirling_sum(table: &StirlingTable, a: u32, l1: u32) -> Result<BigInt> {
    if a == 0 || a % 2 == 1 {
        return domain(format!("a must be an even positive integer, got {a}"));
    }
    if 2 * l1 > a {
        return domain(format!("need 2*l1 <= a, got l1 = {l1}, a = {a}"));
    }
    let mut acc = BigInt::zero();
    for j in l1..=a {
        let s = table.get(j as usize, (j - l1) as usize)?;
        let term = binomial(a as u64, j as u64) * s;
        if j % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    Ok(acc)
}

/// Closed form of [`alternating_stirling_sum`] for even `a` and `2 l1 <= a`.
pub fn alternating_stirling_closed_form(a: u32, l1: u32) -> Result<BigInt> {
    if a == 0 || a % 2 == 1 {
        return domain(format!("a must be an even positive integer, got {a}"));
    }
    if 2 * l1 > a {
        return domain(format!("need 2*l1 <= a, got l1 = {l1}, a = {a}"));
    }
    if 2 * l1 < a {
        return Ok(BigInt::zero());
    }
    Ok(double_factorial_odd(a / 2))
}

/// `(2m)! / (m! 2^m)`, i.e. `1 * 3 * 5 * ... * (2m-1)`.
pub fn double_factorial_odd(m: u32) -> BigInt {
    factorial(2 * m as u64) / (factorial(m as u64) * (BigInt::one() << m as usize))
}

/// One failed exact identity, with the indices it failed at.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentityMismatch {
    pub identity: &'static str,
    pub indices: Vec<u64>,
}

impl std::fmt::Display for IdentityMismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} at {:?}", self.identity, self.indices)
    }
}

/// Exact identity suite over a pair of tables.
///
/// Checks the Stirling row sums (`Σ_k [n brack k] = n!`), the Eulerian row
/// sums (`Σ_l <<m,l>> = (2m)!/(m! 2^m)`) and the Stirling/Eulerian bridge
/// `[m brack m-p] = Σ_l <<p,l>> C(m+l, 2p)` for `m <= max_m`, plus the
/// alternating Stirling sum for every even `a <= max_a`.
pub fn check_identities(
    stirling: &StirlingTable,
    eulerian: &EulerianSecondTable,
    max_a: u32,
    max_m: usize,
) -> Vec<IdentityMismatch> {
    let mut out = Vec::new();
    let mut miss = |identity, indices: Vec<u64>| out.push(IdentityMismatch { identity, indices });

    for n in 0..=stirling.max_n().min(max_m.max(max_a as usize)) {
        let sum: BigInt = stirling.row(n).unwrap().iter().sum();
        if sum != factorial(n as u64) {
            miss("stirling row sum", vec![n as u64]);
        }
    }
    for m in 0..=max_m.min(eulerian.max_n()) {
        let sum: BigInt = eulerian.row(m).unwrap().iter().sum();
        if sum != double_factorial_odd(m as u32) {
            miss("eulerian row sum", vec![m as u64]);
        }
    }
    for m in 0..=max_m.min(stirling.max_n()) {
        for p in 0..=m.min(eulerian.max_n()) {
            let rhs: BigInt = eulerian
                .row(p)
                .unwrap()
                .iter()
                .enumerate()
                .map(|(l, e)| e * binomial((m + l) as u64, 2 * p as u64))
                .sum();
            if stirling.get(m, m - p).ok() != Some(&rhs) {
                miss("stirling-eulerian bridge", vec![m as u64, p as u64]);
            }
        }
    }
    for a in (2..=max_a).step_by(2) {
        for l1 in 0..=a / 2 {
            let lhs = alternating_stirling_sum(stirling, a, l1);
            let rhs = alternating_stirling_closed_form(a, l1).expect("even a");
            if lhs.ok() != Some(rhs) {
                miss("alternating stirling sum", vec![a as u64, l1 as u64]);
            }
        }
    }
    out
}
