use hyperfactor_core::combinatorics::{
    binom, bound_holds, bound_threshold, lemma21_holds, lemma22_lhs, vandermonde_rhs, Count,
};
use num_bigint::BigUint;
use proptest::prelude::*;

/// Pascal's triangle by repeated addition, rows `0..=rows`.
fn pascal(rows: usize) -> Vec<Vec<BigUint>> {
    let mut t: Vec<Vec<BigUint>> = vec![vec![BigUint::from(1u32)]];
    for a in 1..=rows {
        let prev = &t[a - 1];
        let mut row = vec![BigUint::from(1u32); a + 1];
        for b in 1..a {
            row[b] = &prev[b - 1] + &prev[b];
        }
        t.push(row);
    }
    t
}

#[test]
fn binom_agrees_with_pascal_oracle() {
    let t = pascal(60);
    for a in 0..=60u64 {
        for b in 0..=a {
            assert_eq!(binom(a, b as i64), t[a as usize][b as usize], "C({a},{b})");
        }
        assert_eq!(binom(a, a as i64 + 1), Count::from(0u32));
    }
    assert_eq!(t[49][6], BigUint::from(13_983_816u32));
}

#[test]
fn pascal_rule() {
    for a in 1..=60u64 {
        for b in 1..=a as i64 {
            assert_eq!(binom(a, b), binom(a - 1, b - 1) + binom(a - 1, b));
        }
    }
}

#[test]
fn vandermonde_identity() {
    for n in 1..=30u64 {
        for m in 1..=n {
            for h in 1..=m {
                assert_eq!(vandermonde_rhs(n, m, h), binom(n, h as i64), "({n},{m},{h})");
            }
        }
    }
}

#[test]
fn lemma22_equality_at_h_minus_one() {
    for n in 2..=30u64 {
        for m in 2..=n {
            for h in 2..=m {
                assert_eq!(lemma22_lhs(n, m, h, h - 1), binom(n - 1, h as i64 - 1), "({n},{m},{h})");
            }
        }
    }
}

#[test]
fn lemmas_hold_above_threshold() {
    for h in 2..=7u64 {
        for m in h..=15 {
            let t = bound_threshold(m, h);
            for n in t..=t + 10 {
                assert!(bound_holds(n, m, h));
                assert!(lemma21_holds(n, m, h), "lemma 2.1 at ({n},{m},{h})");
                let degree = binom(n - 1, h as i64 - 1);
                for i in 1..=h.saturating_sub(2) {
                    assert!(lemma22_lhs(n, m, h, i) < degree, "lemma 2.2 at ({n},{m},{h},{i})");
                }
                assert!(bound_holds(n + 1, m, h));
            }
        }
    }
}

#[test]
fn older_bound_is_above_threshold() {
    for h in 3..=8u64 {
        for m in h..=20 {
            assert!(bound_holds((h - 1) * (2 * m - 1), m, h), "({m},{h})");
        }
    }
}

#[test]
fn threshold_agrees_with_closed_form_in_floating_point() {
    // Independent check away from integer crossings.
    for h in 2..=8u64 {
        for m in h..=40 {
            let closed = (m as f64 - 1.0) / (1.0 - 2f64.powf(1.0 / (1.0 - h as f64))) + h as f64 - 1.0;
            if (closed - closed.round()).abs() < 1e-6 {
                continue;
            }
            let expected = (closed.floor() as u64 + 1).max(m);
            assert_eq!(bound_threshold(m, h), expected, "m={m} h={h} closed={closed}");
        }
    }
    // The linear forms quoted for h = 3, 4, 5.
    for m in 5..=40u64 {
        let t3 = bound_threshold(m, 3) as f64;
        assert!(t3 > 3.41421 * m as f64 - 1.41421 - 1.0 && t3 <= 3.41422 * m as f64 - 1.41421 + 1.0);
        let t4 = bound_threshold(m, 4) as f64;
        assert!(t4 > 4.84732 * m as f64 - 1.84732 - 1.0 && t4 <= 4.84733 * m as f64 - 1.84732 + 1.0);
        let t5 = bound_threshold(m, 5) as f64;
        assert!(t5 > 6.28521 * m as f64 - 2.28521 - 1.0 && t5 <= 6.28522 * m as f64 - 2.28521 + 1.0);
    }
}

proptest! {
    #[test]
    fn bound_is_monotone(h in 2u64..9, dm in 0u64..30, n_off in 0u64..300) {
        let m = h + dm;
        let n = m + n_off;
        if bound_holds(n, m, h) {
            prop_assert!(bound_holds(n + 1, m, h));
        }
    }

    #[test]
    fn symmetric_binomials(a in 0u64..200, b in 0u64..200) {
        prop_assume!(b <= a);
        prop_assert_eq!(binom(a, b as i64), binom(a, (a - b) as i64));
    }
}
