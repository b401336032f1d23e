//! Oracles shared by the integration tests. Each one is written directly from
//! the defining formula, independent of the library code paths it checks.

#![allow(dead_code)]

use num_bigint::BigUint;

/// `f(0..=limit)` for the doubling-block modulus, filled forwards:
/// `f(0)=0, f(1)=1, f(2)=2`, and for `a ∈ [1, 2^j]`,
/// `f(2^j + a) = f(2^j)` when `j` is odd and `f(2^j) + f(a)` when `j` is even.
pub fn doubling_table(limit: usize) -> Vec<u32> {
    let mut f = vec![0u32; limit.max(2) + 1];
    f[1] = 1;
    f[2] = 2;
    let mut j = 1u32;
    loop {
        let base = 1usize << j;
        if base >= limit {
            break;
        }
        for a in 1..=base {
            let n = base + a;
            if n > limit {
                break;
            }
            f[n] = if j % 2 == 1 { f[base] } else { f[base] + f[a] };
        }
        j += 1;
    }
    f.truncate(limit + 1);
    f
}

/// Smallest `n >= start` with `ln(1+n) > ln(1+2^k n) / 2`. Squaring both sides
/// gives `(1+n)^2 > 1 + 2^k n`, i.e. `n > 2^k - 2`.
pub fn log_half_witness(k: u32, start: u64) -> u64 {
    start.max((1u64 << k) - 1)
}

/// `Σ |[a, b] ∩ [1, n]|` by enumeration.
pub fn brute_alpha(blocks: &[(u64, u64)], n: u64) -> u64 {
    let mut count = 0;
    for &(a, b) in blocks {
        for x in a..=b {
            if x <= n {
                count += 1;
            }
        }
    }
    count
}

pub fn big(n: u64) -> BigUint {
    BigUint::from(n)
}
