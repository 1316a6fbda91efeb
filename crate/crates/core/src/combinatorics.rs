//! Exact integer combinatorics.
//!
//! Everything here is evaluated in arbitrary precision. In particular the
//! extension threshold `n > (m-1)/(1-2^(1/(1-h))) + h - 1` is irrational, so
//! it is decided through an equivalent integer inequality instead of a float.

use num_bigint::BigUint;
use num_traits::{One, Pow, ToPrimitive, Zero};

/// Arbitrary-precision nonnegative count.
pub type Count = BigUint;

/// Binomial coefficient `C(a, b)`, zero when `b < 0` or `b > a`.
pub fn binom(a: u64, b: i64) -> Count {
    if b < 0 || b as u64 > a {
        return Count::zero();
    }
    let b = (b as u64).min(a - b as u64);
    let mut acc = Count::one();
    // acc stays integral: after step i it equals C(a - b + i, i).
    for i in 1..=b {
        acc *= a - b + i;
        acc /= i;
    }
    acc
}

/// `C(a, b)` as a `u64`, or `None` if it does not fit.
pub fn binom_u64(a: u64, b: i64) -> Option<u64> {
    binom(a, b).to_u64()
}

/// Right-hand side of Vandermonde's convolution,
/// `sum_{i=0}^{h} C(m, h-i) * C(n-m, i)`.
pub fn vandermonde_rhs(n: u64, m: u64, h: u64) -> Count {
    debug_assert!(n >= m && m >= h);
    (0..=h)
        .map(|i| binom(m, (h - i) as i64) * binom(n - m, i as i64))
        .sum()
}

/// Whether `n` exceeds the extension threshold for `(m, h)`.
///
/// Decided as `2 (n-m-h+2)^(h-1) > (n-h+1)^(h-1)` with `n-m-h+2 > 0`.
pub fn bound_holds(n: u64, m: u64, h: u64) -> bool {
    debug_assert!(h >= 2 && m >= h && n >= m);
    // n - m - h + 2 > 0, written without underflow
    if n + 2 <= m + h {
        return false;
    }
    let gap = Count::from(n + 2 - m - h);
    let base = Count::from(n + 1 - h);
    let e = (h - 1) as u32;
    Pow::pow(gap, e) * 2u32 > Pow::pow(base, e)
}

/// Smallest `n >= m` for which [`bound_holds`] is true.
pub fn bound_threshold(m: u64, h: u64) -> u64 {
    // bound_holds is monotone in n, so bisect over a doubling bracket.
    let mut hi = m.max(h) * 2 + h;
    while !bound_holds(hi, m, h) {
        hi *= 2;
    }
    let mut lo = m;
    if bound_holds(lo, m, h) {
        return lo;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if bound_holds(mid, m, h) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// `2 C(n-m, h-1) > C(n-1, h-1)`.
pub fn lemma21_holds(n: u64, m: u64, h: u64) -> bool {
    debug_assert!(n >= m && m >= h && h >= 2);
    binom(n - m, h as i64 - 1) * 2u32 > binom(n - 1, h as i64 - 1)
}

/// `(h-i) * sum_{l=1}^{i+1} C(m-1, h-l) * C(n-m, l-1)`: the number of
/// colored copies that can touch an `(h-i)`-set of old vertices once
/// levels `0..=i` are colored (per unit multiplicity).
pub fn lemma22_lhs(n: u64, m: u64, h: u64, i: u64) -> Count {
    debug_assert!(n >= m && m >= h && h >= 2 && (1..=h).contains(&i));
    let sum: Count = (1..=i + 1)
        .map(|l| binom(m - 1, h as i64 - l as i64) * binom(n - m, l as i64 - 1))
        .sum();
    sum * (h - i)
}
