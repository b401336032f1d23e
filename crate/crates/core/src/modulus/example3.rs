//! The recursively defined modulus: `f(0) = 0`, `f(1) = 1`, `f(2) = 2` and, for
//! `α ∈ [1, 2^k]`,
//!
//! ```text
//! f(2^k + α) = f(2^k)          if k is odd
//! f(2^k + α) = f(2^k) + f(α)   if k is even
//! ```
//!
//! Two implementations live here. They must agree on every input.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};

/// `f(n)` by memoized top-down recursion.
///
/// The memo holds `f(2^k)` for the exponents touched by this call, so it is
/// confined to the caller and bounded by the bit length of `n`. Recursion depth
/// through the `α` branch is at most the bit length of `n`.
pub fn example3_exact(n: &BigUint) -> BigUint {
    if let Some(small) = n.to_u64() {
        if small < 1 << 62 {
            let mut memo = [0u64; 64];
            return BigUint::from(top_down_u64(small, &mut memo));
        }
    }
    let mut memo = Vec::new();
    top_down(n, &mut memo)
}

fn top_down(n: &BigUint, memo: &mut Vec<BigUint>) -> BigUint {
    if *n <= BigUint::from(2u32) {
        return n.clone();
    }
    let k = (n - 1u32).bits() - 1;
    let head = power_value(k as usize, memo);
    if k % 2 == 1 {
        return head;
    }
    let alpha = n - (BigUint::one() << k);
    if alpha.bits() == k + 1 {
        // α = 2^k
        return &head + &head;
    }
    head + top_down(&alpha, memo)
}

/// `f(2^k)`; the memo is a prefix `f(2^0), f(2^1), ...` extended on demand
/// with `f(2^j) = f(2^(j-1) + 2^(j-1))`.
fn power_value(k: usize, memo: &mut Vec<BigUint>) -> BigUint {
    while memo.len() <= k {
        let j = memo.len();
        let next = match j {
            0 | 1 => BigUint::from(1u32 << j),
            _ if (j - 1) % 2 == 1 => memo[j - 1].clone(),
            _ => &memo[j - 1] + &memo[j - 1],
        };
        memo.push(next);
    }
    memo[k].clone()
}

fn top_down_u64(n: u64, memo: &mut [u64; 64]) -> u64 {
    if n <= 2 {
        return n;
    }
    let k = 63 - (n - 1).leading_zeros() as usize;
    let head = power_value_u64(k, memo);
    if k % 2 == 1 {
        return head;
    }
    let alpha = n - (1u64 << k);
    if alpha == 1u64 << k {
        return 2 * head;
    }
    head + top_down_u64(alpha, memo)
}

fn power_value_u64(k: usize, memo: &mut [u64; 64]) -> u64 {
    if memo[k] == 0 {
        memo[k] = match k {
            0 | 1 => 1 << k,
            _ if (k - 1) % 2 == 1 => power_value_u64(k - 1, memo),
            _ => 2 * power_value_u64(k - 1, memo),
        };
    }
    memo[k]
}

/// `f(n)` by a single pass over the binary decomposition of `n`.
///
/// Peel off the leading power `2^k` of `n - 1`; an odd `k` terminates the
/// pass, an even `k` accumulates `f(2^k)` and continues with the remainder `α`.
pub fn example3_iterative(n: &BigUint) -> BigUint {
    let two = BigUint::from(2u32);
    if *n <= two {
        return n.clone();
    }
    let top = (n - 1u32).bits() as usize;
    // powers[j] = f(2^j)
    let mut powers = Vec::with_capacity(top);
    let mut current = BigUint::one();
    powers.push(current.clone());
    for j in 0..top {
        current = match j {
            0 => two.clone(),
            j if j % 2 == 1 => current,
            _ => &current << 1usize,
        };
        powers.push(current.clone());
    }

    let mut acc = BigUint::from(0u32);
    let mut rest = n.clone();
    loop {
        if rest <= two {
            acc += rest;
            return acc;
        }
        let k = ((&rest - 1u32).bits() - 1) as usize;
        acc += &powers[k];
        if k % 2 == 1 {
            return acc;
        }
        rest -= BigUint::one() << k;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(n: u64) -> u64 {
        example3_exact(&BigUint::from(n)).to_u64().unwrap()
    }

    #[test]
    fn small_values() {
        let expected = [0, 1, 2, 2, 2, 3, 4, 4, 4];
        for (n, want) in expected.iter().enumerate() {
            assert_eq!(f(n as u64), *want, "f({n})");
        }
    }

    #[test]
    fn recursion_examples() {
        assert_eq!(f(8), 4);
        assert_eq!(f(3), 2);
        assert_eq!(f(5), 3);
        assert_eq!(f(7), 4);
    }

    #[test]
    fn u64_and_big_paths_agree() {
        for n in (0u64..5000).chain([(1 << 40) + 12345, (1 << 61) - 1, 1 << 61]) {
            let via_small = example3_exact(&BigUint::from(n));
            let mut memo = Vec::new();
            let via_big = top_down(&BigUint::from(n), &mut memo);
            assert_eq!(via_small, via_big, "n = {n}");
        }
    }

    #[test]
    fn iterative_matches_top_down_at_boundaries() {
        for k in 0..130u32 {
            let p = BigUint::one() << k;
            for n in [&p - 1u32, p.clone(), &p + 1u32] {
                assert_eq!(example3_exact(&n), example3_iterative(&n), "n = {n}");
            }
        }
    }
}
