//! Construction of a set of natural density zero whose `f`-density is not zero,
//! for moduli with `g_f(k) ↛ 0`.
//!
//! Given `0 < ξ < 1`, stage `k` picks the least witness `n_k > n_{k-1}` with
//! `f(n_k) > ξ f(2^k n_k)`, sets `m_k = 2^k n_k`, and adds the block of the
//! `n_k - n_{k-1}` largest integers below `m_k`:
//!
//! ```text
//! [m_k - n_k + n_{k-1}, m_k - 1],   n_0 = 0.
//! ```
//!
//! Then `α(m_k) = n_k`, so `f(α(m_k)) / f(m_k) > ξ`, while `α(j)/j < 2^-k` for
//! every `j ∈ (m_k, m_{k+1}]`.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bignum;
use crate::modulus::ModulusDescriptor;
use crate::sets::{clipped_block_count, Block, IntegerSet};

/// Candidates within this many combined relative errors of `ξ` are rejected.
pub const GUARD: f64 = 10.0;
pub const DEFAULT_XI: f64 = 0.5;
pub const DEFAULT_STAGES: u32 = 12;
pub const DEFAULT_CAP: u64 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeparatorError {
    #[error("no witness n in [{start}, {cap}] with f(n) > xi * f(2^{k} n)")]
    NotFound {
        k: u32,
        start: BigUint,
        cap: BigUint,
        /// Stages completed before the search failed.
        partial: Vec<Stage>,
    },
    #[error("{0}")]
    Precondition(String),
    #[error("malformed separator result: {0}")]
    Malformed(String),
}

fn check_xi(xi: f64) -> Result<(), SeparatorError> {
    if xi > 0.0 && xi < 1.0 {
        Ok(())
    } else {
        Err(SeparatorError::Precondition(format!(
            "xi must lie in (0, 1), got {xi}"
        )))
    }
}

/// Is `f(n) / f(2^k n)` certainly above `xi`?
fn is_witness(m: &ModulusDescriptor, xi: f64, k: u32, n: &BigUint) -> bool {
    let num = m.eval_big(n);
    let den = m.eval_big(&(n << k as usize));
    num.checked_div(&den)
        .is_some_and(|r| r.exceeds(xi, GUARD))
}

/// Smallest `n ∈ [start, cap]` with `f(n) > xi · f(2^k n)`, by linear scan.
pub fn find_witness(
    m: &ModulusDescriptor,
    xi: f64,
    k: u32,
    start: &BigUint,
    cap: &BigUint,
) -> Result<BigUint, SeparatorError> {
    check_xi(xi)?;
    if k < 1 {
        return Err(SeparatorError::Precondition("k must be at least 1".into()));
    }
    if start.is_zero() || start > cap {
        return Err(SeparatorError::Precondition(format!(
            "need 1 <= start <= cap, got start = {start}, cap = {cap}"
        )));
    }
    let mut n = start.clone();
    while n <= *cap {
        if is_witness(m, xi, k, &n) {
            return Ok(n);
        }
        n += 1u32;
    }
    Err(SeparatorError::NotFound {
        k,
        start: start.clone(),
        cap: cap.clone(),
        partial: Vec::new(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub k: u32,
    #[serde(with = "bignum")]
    pub n: BigUint,
    #[serde(with = "bignum")]
    pub m: BigUint,
    pub block: Block,
    /// Where the witness scan for this stage began.
    #[serde(with = "bignum")]
    pub search_start: BigUint,
    /// `f(n) / f(m)` as found by the scan.
    #[serde(default)]
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct SeparatorResult {
    pub xi: f64,
    #[serde(with = "bignum")]
    pub cap: BigUint,
    pub stages: Vec<Stage>,
}

#[derive(Serialize)]
struct ResultView<'a> {
    xi: f64,
    #[serde(rename = "K")]
    stage_count: usize,
    #[serde(with = "bignum")]
    cap: &'a BigUint,
    stages: &'a [Stage],
    set: Option<IntegerSet>,
}

impl Serialize for SeparatorResult {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        ResultView {
            xi: self.xi,
            stage_count: self.stages.len(),
            cap: &self.cap,
            stages: &self.stages,
            set: self.set().ok(),
        }
        .serialize(serializer)
    }
}

impl SeparatorResult {
    pub fn blocks(&self) -> Vec<Block> {
        self.stages.iter().map(|s| s.block.clone()).collect()
    }

    /// The constructed set in block form. Fails if the blocks are not sorted
    /// and disjoint, which only happens for a tampered result.
    pub fn set(&self) -> Result<IntegerSet, SeparatorError> {
        IntegerSet::blocks(self.blocks()).map_err(|e| SeparatorError::Malformed(e.to_string()))
    }

    pub fn witnesses(&self) -> Vec<BigUint> {
        self.stages.iter().map(|s| s.n.clone()).collect()
    }

    pub fn points(&self) -> Vec<BigUint> {
        self.stages.iter().map(|s| s.m.clone()).collect()
    }

    fn check_well_formed(&self) -> Result<(), SeparatorError> {
        check_xi(self.xi).map_err(|e| SeparatorError::Malformed(e.to_string()))?;
        if self.stages.is_empty() {
            return Err(SeparatorError::Malformed("no stages".into()));
        }
        let mut prev = BigUint::zero();
        for (i, s) in self.stages.iter().enumerate() {
            let k = i as u32 + 1;
            if s.k != k {
                return Err(SeparatorError::Malformed(format!(
                    "stage {k} is labelled k = {}",
                    s.k
                )));
            }
            if s.n <= prev {
                return Err(SeparatorError::Malformed(format!(
                    "witnesses must increase strictly from n_0 = 0 (stage {k})"
                )));
            }
            if s.m != &s.n << k as usize {
                return Err(SeparatorError::Malformed(format!(
                    "stage {k}: m = {} is not 2^{k} * {}",
                    s.m, s.n
                )));
            }
            prev = s.n.clone();
        }
        Ok(())
    }
}

/// Runs stages `1..=stages`, each scanning from the previous witness plus one.
///
/// A failed stage aborts the construction; the error carries the completed stages.
pub fn build_separating_set(
    m: &ModulusDescriptor,
    xi: f64,
    stages: u32,
    cap: &BigUint,
) -> Result<SeparatorResult, SeparatorError> {
    check_xi(xi)?;
    if stages < 1 {
        return Err(SeparatorError::Precondition(
            "number of stages must be at least 1".into(),
        ));
    }
    if cap.is_zero() {
        return Err(SeparatorError::Precondition("cap must be at least 1".into()));
    }
    let mut done: Vec<Stage> = Vec::new();
    let mut prev = BigUint::zero();
    for k in 1..=stages {
        let start = &prev + 1u32;
        let n = if start > *cap {
            Err(SeparatorError::NotFound {
                k,
                start: start.clone(),
                cap: cap.clone(),
                partial: Vec::new(),
            })
        } else {
            find_witness(m, xi, k, &start, cap)
        };
        let n = match n {
            Ok(n) => n,
            Err(SeparatorError::NotFound { k, start, cap, .. }) => {
                return Err(SeparatorError::NotFound {
                    k,
                    start,
                    cap,
                    partial: done,
                })
            }
            Err(e) => return Err(e),
        };
        let mk: BigUint = &n << k as usize;
        let ratio = m
            .eval_big(&n)
            .checked_div(&m.eval_big(&mk))
            .map_or(f64::NAN, |r| r.value());
        done.push(Stage {
            k,
            block: Block::new(&mk - &n + &prev, &mk - 1u32),
            m: mk,
            n: n.clone(),
            search_start: start,
            ratio,
        });
        prev = n;
    }
    Ok(SeparatorResult {
        xi,
        cap: cap.clone(),
        stages: done,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    /// `α(m_k) = n_k`
    AlphaAtMk,
    /// `f(α(m_k)) / f(m_k) > ξ`
    FRatioAtMk,
    /// Block `k` is nonempty and lies in `(m_{k-1}, m_k]`.
    BlockPlacement,
    /// `α(j) / j < 2^-k` at the sampled `j ∈ (m_k, m_{k+1}]`.
    DensityBound,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub k: u32,
    pub check: CheckKind,
    pub passed: bool,
    /// The measured quantity: `α(m_k)`, the `f` ratio, the block start, or the
    /// largest sampled `α(j)/j`.
    pub value: String,
    /// What it was compared against.
    pub bound: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstructionReport {
    pub xi: f64,
    pub stages: usize,
    pub samples_per_stage: u64,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl ConstructionReport {
    pub fn check(&self, k: u32, kind: CheckKind) -> Option<&Check> {
        self.checks.iter().find(|c| c.k == k && c.check == kind)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Sample points in `(lo, hi]`: the mandatory `points` that fall in range plus
/// `count` evenly spaced ones, sorted and deduplicated.
fn sample_points(lo: &BigUint, hi: &BigUint, mandatory: Vec<BigUint>, count: u64) -> Vec<BigUint> {
    let len = hi - lo;
    let mut pts: Vec<BigUint> = mandatory
        .into_iter()
        .filter(|j| j > lo && j <= hi)
        .collect();
    for i in 1..=count {
        // lo + ⌈i · len / count⌉
        let step = (&len * i + (count - 1)) / count;
        pts.push(lo + step);
    }
    pts.sort();
    pts.dedup();
    pts
}

/// Re-checks a construction from its stored witnesses and blocks.
///
/// Counting uses the stored blocks as given, so a tampered result is measured
/// rather than rejected. Only structural damage (stage labels, witnesses not
/// increasing, `m_k ≠ 2^k n_k`) is an error.
pub fn verify_construction(
    res: &SeparatorResult,
    m: &ModulusDescriptor,
    samples_per_stage: u64,
) -> Result<ConstructionReport, SeparatorError> {
    if samples_per_stage < 1 {
        return Err(SeparatorError::Precondition(
            "samples per stage must be at least 1".into(),
        ));
    }
    res.check_well_formed()?;
    let blocks = res.blocks();
    let alpha = |j: &BigUint| clipped_block_count(&blocks, j);
    let mut checks = Vec::new();

    for (i, s) in res.stages.iter().enumerate() {
        let k = s.k;
        let prev_m = if i == 0 {
            BigUint::zero()
        } else {
            res.stages[i - 1].m.clone()
        };

        let a = alpha(&s.m);
        checks.push(Check {
            k,
            check: CheckKind::AlphaAtMk,
            passed: a == s.n,
            value: a.to_string(),
            bound: s.n.to_string(),
            detail: None,
        });

        let ratio = m.eval_big(&a).checked_div(&m.eval_big(&s.m));
        let ok = ratio.as_ref().is_some_and(|r| r.exceeds(res.xi, GUARD));
        checks.push(Check {
            k,
            check: CheckKind::FRatioAtMk,
            passed: ok,
            value: ratio.map_or("undefined".into(), |r| r.value().to_string()),
            bound: res.xi.to_string(),
            detail: None,
        });

        let b = &s.block;
        let placed = b.start > prev_m && b.start <= b.end && b.end <= s.m;
        checks.push(Check {
            k,
            check: CheckKind::BlockPlacement,
            passed: placed,
            value: format!("[{}, {}]", b.start, b.end),
            bound: format!("({prev_m}, {}]", s.m),
            detail: None,
        });

        // (m_k, m_{k+1}], or (m_K, 2 m_K] past the last stage
        let lo = &s.m;
        let (hi, mandatory) = match res.stages.get(i + 1) {
            Some(next) => {
                let ramp = &next.m - &next.n + &s.n;
                let hi = next.m.clone();
                let mut pts = vec![lo + 1u32, ramp.clone(), &hi - 1u32, hi.clone()];
                if ramp > BigUint::one() {
                    pts.push(ramp - 1u32);
                }
                (hi, pts)
            }
            None => {
                let hi: BigUint = lo << 1usize;
                (hi.clone(), vec![lo + 1u32, hi])
            }
        };
        let mut worst: Option<(BigUint, BigUint)> = None;
        let mut violation = None;
        for j in sample_points(lo, &hi, mandatory, samples_per_stage) {
            let aj = alpha(&j);
            // α_j / j < 2^-k  ⟺  α_j 2^k < j
            if violation.is_none() && (&aj << k as usize) >= j {
                violation = Some(j.clone());
            }
            let larger = match &worst {
                None => true,
                Some((wa, wj)) => &aj * wj > wa * &j,
            };
            if larger {
                worst = Some((aj, j));
            }
        }
        let (wa, wj) = worst.expect("at least one sample point");
        checks.push(Check {
            k,
            check: CheckKind::DensityBound,
            passed: violation.is_none(),
            value: format!("{wa}/{wj}"),
            bound: format!("2^-{k}"),
            detail: violation.map(|j| format!("alpha({j}) / {j} >= 2^-{k}")),
        });
    }

    let passed = checks.iter().all(|c| c.passed);
    Ok(ConstructionReport {
        xi: res.xi,
        stages: res.stages.len(),
        samples_per_stage,
        checks,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(n: u64) -> BigUint {
        BigUint::from(n)
    }

    #[test]
    fn log_witnesses() {
        let log = ModulusDescriptor::Log;
        assert_eq!(find_witness(&log, 0.5, 1, &big(1), &big(1_000_000)), Ok(big(1)));
        assert_eq!(find_witness(&log, 0.5, 2, &big(2), &big(1_000_000)), Ok(big(3)));
    }

    #[test]
    fn identity_has_no_witness_at_half() {
        let id = ModulusDescriptor::power(1, 1).unwrap();
        let err = find_witness(&id, 0.5, 1, &big(1), &big(10_000)).unwrap_err();
        assert!(matches!(err, SeparatorError::NotFound { k: 1, .. }));
    }

    #[test]
    fn preconditions() {
        let log = ModulusDescriptor::Log;
        for (xi, k, start, cap) in [(0.0, 1, 1, 10), (1.0, 1, 1, 10), (0.5, 0, 1, 10), (0.5, 1, 0, 10), (0.5, 1, 11, 10)] {
            assert!(matches!(
                find_witness(&log, xi, k, &big(start), &big(cap)),
                Err(SeparatorError::Precondition(_))
            ));
        }
        assert!(build_separating_set(&log, 0.5, 0, &big(10)).is_err());
    }

    #[test]
    fn three_log_stages() {
        let res = build_separating_set(&ModulusDescriptor::Log, 0.5, 3, &big(1_000_000)).unwrap();
        assert_eq!(res.witnesses(), vec![big(1), big(3), big(7)]);
        assert_eq!(res.points(), vec![big(2), big(12), big(56)]);
        assert_eq!(
            res.blocks(),
            vec![Block::new(1u32, 1u32), Block::new(10u32, 11u32), Block::new(52u32, 55u32)]
        );
        let set = res.set().unwrap();
        assert_eq!(set.alpha(&big(12)), big(3));
        assert_eq!(set.alpha(&big(56)), big(7));

        let report = verify_construction(&res, &ModulusDescriptor::Log, 16).unwrap();
        assert!(report.passed, "{report:?}");
        assert_eq!(report.checks.len(), 12);
        let r: f64 = report.check(2, CheckKind::FRatioAtMk).unwrap().value.parse().unwrap();
        assert!((r - 4f64.ln() / 13f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn partial_stages_on_failure() {
        let sqrt = ModulusDescriptor::power(1, 2).unwrap();
        match build_separating_set(&sqrt, 0.9, 2, &big(1000)) {
            Err(SeparatorError::NotFound { k, partial, .. }) => {
                assert_eq!(k, 1);
                assert!(partial.is_empty());
            }
            other => panic!("{other:?}"),
        }
        // the log scan succeeds at k = 1, 2 and runs out of room at k = 3
        match build_separating_set(&ModulusDescriptor::Log, 0.5, 3, &big(6)) {
            Err(SeparatorError::NotFound { k, partial, .. }) => {
                assert_eq!(k, 3);
                assert_eq!(partial.len(), 2);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn overlapping_block_is_caught() {
        let mut res = build_separating_set(&ModulusDescriptor::Log, 0.5, 3, &big(1000)).unwrap();
        res.stages[2].block.start = big(11);
        assert!(res.set().is_err());
        let report = verify_construction(&res, &ModulusDescriptor::Log, 8).unwrap();
        assert!(!report.passed);
        assert!(!report.check(3, CheckKind::BlockPlacement).unwrap().passed);
        assert!(report.check(2, CheckKind::BlockPlacement).unwrap().passed);
    }

    #[test]
    fn malformed_results() {
        let good = build_separating_set(&ModulusDescriptor::Log, 0.5, 3, &big(1000)).unwrap();
        let mut bad = good.clone();
        bad.stages[1].m = big(13);
        assert!(matches!(
            verify_construction(&bad, &ModulusDescriptor::Log, 4),
            Err(SeparatorError::Malformed(_))
        ));
        let mut bad = good.clone();
        bad.stages.swap(0, 1);
        assert!(verify_construction(&bad, &ModulusDescriptor::Log, 4).is_err());
        assert!(verify_construction(&good, &ModulusDescriptor::Log, 0).is_err());
    }

    #[test]
    fn json_round_trip() {
        let res = build_separating_set(&ModulusDescriptor::Log, 0.5, 3, &big(1000)).unwrap();
        let json = serde_json::to_value(&res).unwrap();
        assert_eq!(json["stages"][2]["block"], serde_json::json!(["52", "55"]));
        assert_eq!(json["stages"][1]["m"], "12");
        assert_eq!(json["set"]["type"], "blocks");
        let back: SeparatorResult = serde_json::from_value(json).unwrap();
        assert_eq!(back, res);
    }

    #[test]
    fn sample_points_cover_segment_ends() {
        let pts = sample_points(&big(10), &big(20), vec![big(11), big(20), big(5)], 3);
        assert_eq!(pts, vec![big(11), big(14), big(17), big(20)]);
    }
}
