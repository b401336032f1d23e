mod common;

use common::{big, doubling_table, log_half_witness};
use fdensity::separator::{build_separating_set, find_witness, verify_construction, CheckKind, SeparatorError};
use fdensity::{Block, ModulusDescriptor};
use num_bigint::BigUint;
use proptest::prelude::*;

#[test]
fn log_witness_scan_matches_closed_form() {
    for k in 1..=16u32 {
        for start in [1u64, 2, 5, 100, 40_000] {
            let got = find_witness(&ModulusDescriptor::Log, 0.5, k, &big(start), &big(1_000_000)).unwrap();
            assert_eq!(got, big(log_half_witness(k, start)), "k = {k}, start = {start}");
        }
    }
}

#[test]
fn log_twelve_stages() {
    let res = build_separating_set(&ModulusDescriptor::Log, 0.5, 12, &big(10_000_000)).unwrap();
    let mut prev = 0;
    for s in &res.stages {
        let want = log_half_witness(s.k, prev + 1);
        assert_eq!(s.n, big(want));
        assert_eq!(s.m, big(want << s.k));
        prev = want;
    }
    let report = verify_construction(&res, &ModulusDescriptor::Log, 256).unwrap();
    assert!(report.passed, "{:?}", report.failures().collect::<Vec<_>>());
}

#[test]
fn square_root_never_reaches_nine_tenths() {
    let sqrt = ModulusDescriptor::power(1, 2).unwrap();
    match build_separating_set(&sqrt, 0.9, 2, &big(1_000_000)) {
        Err(SeparatorError::NotFound { k, start, cap, partial }) => {
            assert_eq!((k, start, cap), (1, big(1), big(1_000_000)));
            assert!(partial.is_empty());
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn doubling_modulus_runs_out_at_the_first_flat_stage() {
    // brute force over the table: the largest f(n)/f(2^k n) for n <= cap
    let cap = 4_000usize;
    let f = doubling_table(cap << 3);
    let best = |k: usize| {
        (1..=cap)
            .map(|n| f[n] as f64 / f[n << k] as f64)
            .fold(0.0, f64::max)
    };
    assert_eq!(best(1), 1.0);
    assert_eq!(best(2), 0.5);
    assert_eq!(best(3), 0.5);

    match build_separating_set(&ModulusDescriptor::Example3, 0.5, 3, &big(cap as u64)) {
        Err(SeparatorError::NotFound { k, partial, .. }) => {
            assert_eq!(k, 2);
            assert_eq!(partial.len(), 1);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn first_stage_with_unit_witness() {
    for m in [ModulusDescriptor::Log, ModulusDescriptor::power(1, 4).unwrap()] {
        let res = build_separating_set(&m, 0.5, 1, &big(10)).unwrap();
        assert_eq!(res.stages[0].n, big(1));
        assert_eq!(res.blocks(), vec![Block::new(1u32, 1u32)]);
    }
    // f(1)/f(2) = 1/2 is not strictly above 1/2, but f(2)/f(4) = 1 is
    let res = build_separating_set(&ModulusDescriptor::Example3, 0.5, 1, &big(10)).unwrap();
    assert_eq!(res.blocks(), vec![Block::new(2u32, 3u32)]);
}

#[test]
fn tampering_is_reported_per_stage() {
    let res = build_separating_set(&ModulusDescriptor::Log, 0.5, 5, &big(1_000)).unwrap();

    let mut shifted = res.clone();
    shifted.stages[3].block.end -= 1u32;
    let report = verify_construction(&shifted, &ModulusDescriptor::Log, 8).unwrap();
    assert!(!report.check(4, CheckKind::AlphaAtMk).unwrap().passed);
    assert!(report.check(3, CheckKind::AlphaAtMk).unwrap().passed);

    // a block reaching down into (m_1, m_2] inflates the count there
    let mut widened = res.clone();
    widened.stages[2].block.start = big(13);
    let report = verify_construction(&widened, &ModulusDescriptor::Log, 8).unwrap();
    assert!(!report.passed);
    assert!(!report.check(2, CheckKind::DensityBound).unwrap().passed);
    assert!(!report.check(3, CheckKind::AlphaAtMk).unwrap().passed);

    let mut overlapping = res;
    overlapping.stages[1].block.start = big(2);
    let report = verify_construction(&overlapping, &ModulusDescriptor::Log, 8).unwrap();
    assert!(!report.check(2, CheckKind::BlockPlacement).unwrap().passed);
}

#[test]
fn report_json_has_one_entry_per_check() {
    let res = build_separating_set(&ModulusDescriptor::Log, 0.5, 3, &big(1_000)).unwrap();
    let report = verify_construction(&res, &ModulusDescriptor::Log, 4).unwrap();
    let json = serde_json::to_value(&report).unwrap();
    assert_eq!(json["checks"].as_array().unwrap().len(), 12);
    assert_eq!(json["checks"][0]["check"], "alpha-at-mk");
    assert_eq!(json["passed"], true);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn built_sets_satisfy_the_construction(xi in 0.05f64..0.95, stages in 1u32..8, p in 1u64..=4) {
        let moduli = [ModulusDescriptor::Log, ModulusDescriptor::power(1, p + 1).unwrap()];
        for m in &moduli {
            let res = match build_separating_set(m, xi, stages, &big(20_000)) {
                Ok(res) => res,
                Err(SeparatorError::NotFound { partial, .. }) => {
                    prop_assert!(partial.len() < stages as usize);
                    continue;
                }
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            };
            let set = res.set().unwrap();
            let mut prev_n = BigUint::from(0u32);
            let mut prev_m = BigUint::from(0u32);
            for s in &res.stages {
                prop_assert_eq!(&s.m, &(&s.n << s.k as usize));
                prop_assert!(s.n > prev_n);
                prop_assert_eq!(set.alpha(&s.m), s.n.clone());
                prop_assert_eq!(s.block.len(), &s.n - &prev_n);
                prop_assert!(s.block.start > prev_m && s.block.end < s.m);
                prop_assert!(s.ratio > xi);
                prev_n = s.n.clone();
                prev_m = s.m.clone();
            }
            let report = verify_construction(&res, m, 16).unwrap();
            prop_assert!(report.passed);
        }
    }

    #[test]
    fn witness_is_the_first_qualifier(xi in 0.3f64..0.7, k in 1u32..6, start in 1u64..200) {
        let m = ModulusDescriptor::Log;
        let ratio = |n: u64| (n as f64).ln_1p() / ((n << k) as f64).ln_1p();
        if let Ok(n) = find_witness(&m, xi, k, &big(start), &big(100_000)) {
            let n: u64 = n.try_into().unwrap();
            prop_assert!(ratio(n) > xi);
            for earlier in start..n {
                prop_assert!(ratio(earlier) <= xi + 1e-12);
            }
        }
    }
}
