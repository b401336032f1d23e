//! Finite-horizon estimates of
//!
//! ```text
//! h_f(t) = limsup_{n→∞} f(n) / f(tn),   g_f(k) = h_f(2^k)
//! ```
//!
//! and verdicts on whether the `f`-ideal equals the statistical ideal. The two
//! coincide iff `g_f(k) → 0`; when `a = lim f(n)/f(2n)` exists, `g_f(k) = a^k`
//! and the condition reduces to `a < 1`.
//!
//! A limsup is estimated by the maximum of the ratio over the grid points in the
//! tail window `[window · horizon, horizon]` of the default horizon grid. Every
//! verdict is a heuristic over finite data and says so in its output.

use std::io::{self, Write};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed};
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::approx::{rational_to_f64, ApproxReal};
use crate::bignum;
use crate::format::format_sig;
use crate::modulus::ModulusDescriptor;
use crate::sets::HorizonGrid;

pub const DEFAULT_WINDOW: f64 = 0.5;
pub const DEFAULT_EPSILON: f64 = 0.01;
/// `theorem1_trend` calls the ideals equal when the last estimate is below this.
pub const TREND_FINAL_THRESHOLD: f64 = 0.1;
/// `theorem1_trend` calls the ideals unequal when every estimate stays above this.
pub const TREND_FLOOR: f64 = 0.1;
/// Slack allowed when checking that the `g` estimates do not increase.
pub const TREND_TOLERANCE: f64 = 1e-9;
pub const MIN_HORIZON: u64 = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("scale t must be finite and at least 1, got {0}")]
    Scale(f64),
    #[error("dyadic exponent k must be at least 1")]
    Exponent,
    #[error("{0}")]
    Precondition(String),
    #[error(
        "lemma hypothesis not met: f(n)/f(2n) oscillates by {oscillation} > {epsilon} over the tail, so its limit may not exist"
    )]
    LemmaHypothesis { oscillation: f64, epsilon: f64 },
}

/// The argument multiplier of a ratio `f(n) / f(tn)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Scale {
    Real(f64),
    /// `t = 2^k`
    Dyadic(u32),
}

impl Scale {
    fn as_rational(&self) -> BigRational {
        match self {
            Scale::Real(t) => BigRational::from_float(*t).expect("validated finite scale"),
            Scale::Dyadic(k) => BigRational::from_integer(BigInt::one() << *k as usize),
        }
    }

    fn scaled_value(&self, m: &ModulusDescriptor, n: &BigUint, t: &BigRational) -> ApproxReal {
        match self {
            Scale::Dyadic(k) => m.eval_big(&(n << *k as usize)),
            Scale::Real(_) => {
                let arg = t * BigRational::from_integer(BigInt::from(n.clone()));
                m.eval_rational(&arg)
            }
        }
    }
}

impl Serialize for Scale {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = serializer.serialize_map(Some(1))?;
        match self {
            Scale::Real(t) => map.serialize_entry("t", t)?,
            Scale::Dyadic(k) => map.serialize_entry("k", k)?,
        }
        map.end()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioPoint {
    #[serde(with = "bignum")]
    pub n: BigUint,
    pub ratio: ApproxReal,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LimsupEstimate {
    pub scale: Scale,
    #[serde(with = "bignum")]
    pub horizon: BigUint,
    pub window: f64,
    /// Maximum of `f(n) / f(tn)` over the tail grid points.
    pub estimate: ApproxReal,
    /// Smallest `n` attaining the maximum.
    #[serde(with = "bignum")]
    pub argmax_n: BigUint,
    pub samples: usize,
}

fn check_scale(t: f64) -> Result<(), DiagnosticsError> {
    if t.is_finite() && t >= 1.0 {
        Ok(())
    } else {
        Err(DiagnosticsError::Scale(t))
    }
}

fn ratio_at(m: &ModulusDescriptor, n: &BigUint, scale: &Scale, t: &BigRational) -> ApproxReal {
    let num = m.eval_big(n);
    let den = scale.scaled_value(m, n, t);
    num.checked_div(&den).expect("f(tn) > 0 for n >= 1")
}

/// `f(n) / f(tn)` at every grid point. `tn` is formed exactly: every finite `f64`
/// is a dyadic rational.
pub fn ratio_sequence(
    m: &ModulusDescriptor,
    t: f64,
    grid: &HorizonGrid,
) -> Result<Vec<RatioPoint>, DiagnosticsError> {
    check_scale(t)?;
    let scale = Scale::Real(t);
    let tr = scale.as_rational();
    Ok(grid
        .points()
        .iter()
        .map(|n| RatioPoint {
            n: n.clone(),
            ratio: ratio_at(m, n, &scale, &tr),
        })
        .collect())
}

/// CSV with header `n,ratio,ratio_err`; `ratio_err` is the relative error bound.
pub fn write_ratio_csv<W: Write>(points: &[RatioPoint], mut out: W) -> io::Result<()> {
    writeln!(out, "n,ratio,ratio_err")?;
    for p in points {
        writeln!(
            out,
            "{},{},{}",
            p.n,
            format_sig(p.ratio.value(), 12),
            format_sig(p.ratio.rel_error(), 12)
        )?;
    }
    Ok(())
}

/// Grid points of the default grid in `[⌈window · horizon⌉, horizon]`.
pub fn tail_grid(horizon: &BigUint, window: f64) -> Result<HorizonGrid, DiagnosticsError> {
    if *horizon < BigUint::from(MIN_HORIZON) {
        return Err(DiagnosticsError::Precondition(format!(
            "horizon must be at least {MIN_HORIZON}, got {horizon}"
        )));
    }
    if !(window > 0.0 && window <= 1.0) {
        return Err(DiagnosticsError::Precondition(format!(
            "window must lie in (0, 1], got {window}"
        )));
    }
    let w = BigRational::from_float(window).expect("finite window");
    let from = (w * BigRational::from_integer(BigInt::from(horizon.clone())))
        .ceil()
        .to_integer();
    let from = from.magnitude().max(&BigUint::one()).clone();
    Ok(HorizonGrid::geometric(horizon).tail(&from))
}

fn estimate(
    m: &ModulusDescriptor,
    scale: Scale,
    horizon: &BigUint,
    window: f64,
) -> Result<LimsupEstimate, DiagnosticsError> {
    let grid = tail_grid(horizon, window)?;
    let t = scale.as_rational();
    let mut best: Option<(ApproxReal, &BigUint)> = None;
    for n in grid.points() {
        let r = ratio_at(m, n, &scale, &t);
        // strict comparison keeps the smallest n on ties
        if best.as_ref().is_none_or(|(b, _)| r.cmp_value(b).is_gt()) {
            best = Some((r, n));
        }
    }
    let (estimate, argmax) = best.expect("tail grid contains the horizon");
    Ok(LimsupEstimate {
        scale,
        horizon: horizon.clone(),
        window,
        estimate,
        argmax_n: argmax.clone(),
        samples: grid.len(),
    })
}

/// Estimate of `h_f(t)`: the maximum of `f(n)/f(tn)` over the tail window.
pub fn estimate_h(
    m: &ModulusDescriptor,
    t: f64,
    horizon: &BigUint,
    window: f64,
) -> Result<LimsupEstimate, DiagnosticsError> {
    check_scale(t)?;
    estimate(m, Scale::Real(t), horizon, window)
}

/// Estimate of `g_f(k) = h_f(2^k)`, with `2^k n` formed by shifting.
pub fn estimate_g(
    m: &ModulusDescriptor,
    k: u32,
    horizon: &BigUint,
    window: f64,
) -> Result<LimsupEstimate, DiagnosticsError> {
    if k < 1 {
        return Err(DiagnosticsError::Exponent);
    }
    estimate(m, Scale::Dyadic(k), horizon, window)
}

/// `δ_t = h_f(t) + 1/t`, the majorant of `f(n/t)/f(n)` used when showing that
/// density-zero sets have `f`-density zero.
pub fn delta(
    m: &ModulusDescriptor,
    t: f64,
    horizon: &BigUint,
    window: f64,
) -> Result<ApproxReal, DiagnosticsError> {
    let h = estimate_h(m, t, horizon, window)?;
    let inverse = BigRational::from_float(t).expect("validated finite scale").recip();
    Ok(h.estimate.add(&ApproxReal::from_exact(inverse)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    Theorem1Trend,
    Theorem2Ratio,
    Lemma1Consistency,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IdealVerdict {
    EqualIdeals,
    UnequalIdeals,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateEntry {
    pub k: u32,
    pub value: f64,
    pub rel_error: f64,
    #[serde(with = "bignum")]
    pub argmax_n: BigUint,
}

impl EstimateEntry {
    fn from_estimate(k: u32, e: &LimsupEstimate) -> Self {
        EstimateEntry {
            k,
            value: e.estimate.value(),
            rel_error: e.estimate.rel_error(),
            argmax_n: e.argmax_n.clone(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Policy {
    #[serde(with = "bignum")]
    pub horizon: BigUint,
    pub window: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_max: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub floor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monotone_tolerance: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Evidence {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oscillation: Option<f64>,
    /// Limit of `f(n)/f(2n)` extrapolated linearly in `1/ln n` to `n = ∞`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_extrapolated: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub non_increasing: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_estimate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_deviation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_k: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub passed: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionVerdict {
    pub criterion: Criterion,
    pub verdict: IdealVerdict,
    /// Estimate of `lim f(n)/f(2n)` (tail mean), when the criterion uses it.
    pub a: Option<f64>,
    pub estimates: Vec<EstimateEntry>,
    pub policy: Policy,
    pub evidence: Evidence,
    pub heuristic: bool,
}

struct TailRatio {
    verdict: CriterionVerdict,
    a: ApproxReal,
}

fn mean(values: &[ApproxReal]) -> ApproxReal {
    let exact: Option<Vec<&BigRational>> = values.iter().map(|v| v.exact()).collect();
    if let Some(exact) = exact {
        let sum: BigRational = exact.into_iter().sum();
        return ApproxReal::from_exact(sum / BigRational::from_integer(values.len().into()));
    }
    let sum: f64 = values.iter().map(|v| v.value()).sum();
    let worst = values.iter().map(|v| v.rel_error()).fold(0.0, f64::max);
    ApproxReal::approx(sum / values.len() as f64, worst + values.len() as f64 * f64::EPSILON)
}

/// Least-squares line through `(u, y)` evaluated at `u = 0`.
fn intercept(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 3 {
        return None;
    }
    let count = points.len() as f64;
    let mu = points.iter().map(|p| p.0).sum::<f64>() / count;
    let my = points.iter().map(|p| p.1).sum::<f64>() / count;
    let sxx: f64 = points.iter().map(|p| (p.0 - mu).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mu) * (p.1 - my)).sum();
    Some(my - sxy / sxx * mu)
}

fn tail_ratio(
    m: &ModulusDescriptor,
    horizon: &BigUint,
    epsilon: f64,
) -> Result<TailRatio, DiagnosticsError> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(DiagnosticsError::Precondition(format!(
            "epsilon must lie in (0, 0.5), got {epsilon}"
        )));
    }
    let grid = tail_grid(horizon, DEFAULT_WINDOW)?;
    let scale = Scale::Dyadic(1);
    let t = scale.as_rational();
    let ratios: Vec<ApproxReal> = grid
        .points()
        .iter()
        .map(|n| ratio_at(m, n, &scale, &t))
        .collect();

    let a = mean(&ratios);
    let values: Vec<f64> = ratios.iter().map(|r| r.value()).collect();
    let tail_min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let tail_max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let oscillation = tail_max - tail_min;
    let fit: Vec<(f64, f64)> = grid
        .points()
        .iter()
        .zip(&values)
        .map(|(n, y)| (1.0 / ApproxReal::from_biguint(n).log2(), *y))
        .collect();
    let a_extrapolated = if oscillation == 0.0 {
        a.value()
    } else {
        intercept(&fit).unwrap_or(a.value())
    };

    let verdict = if oscillation > epsilon {
        IdealVerdict::Inconclusive
    } else if a.value().max(a_extrapolated) > 1.0 - epsilon {
        IdealVerdict::UnequalIdeals
    } else {
        IdealVerdict::EqualIdeals
    };

    Ok(TailRatio {
        verdict: CriterionVerdict {
            criterion: Criterion::Theorem2Ratio,
            verdict,
            a: Some(a.value()),
            estimates: Vec::new(),
            policy: Policy {
                horizon: horizon.clone(),
                window: DEFAULT_WINDOW,
                epsilon: Some(epsilon),
                ..Policy::default()
            },
            evidence: Evidence {
                tail_points: Some(values.len()),
                tail_min: Some(tail_min),
                tail_max: Some(tail_max),
                oscillation: Some(oscillation),
                a_extrapolated: Some(a_extrapolated),
                ..Evidence::default()
            },
            heuristic: true,
        },
        a,
    })
}

/// Verdict from `a = lim f(n)/f(2n)`, when that limit appears to exist.
///
/// `a` is the mean of `f(n)/f(2n)` over the tail window. If the tail oscillates
/// by more than `epsilon` the limit may not exist and the verdict is
/// inconclusive. Otherwise the ideals are unequal if `a` (or its extrapolation
/// linear in `1/ln n`, which catches ratios creeping up to 1 such as for
/// `ln(1 + x)`) exceeds `1 - epsilon`, and equal otherwise.
pub fn theorem2_verdict(
    m: &ModulusDescriptor,
    horizon: &BigUint,
    epsilon: f64,
) -> Result<CriterionVerdict, DiagnosticsError> {
    tail_ratio(m, horizon, epsilon).map(|t| t.verdict)
}

/// Checks `g_f(k) = a^k` for `k = 1..=k_max`, where `a` is the
/// [`theorem2_verdict`] estimate of `lim f(n)/f(2n)`.
///
/// Fails with [`DiagnosticsError::LemmaHypothesis`] when that limit does not
/// appear to exist.
pub fn lemma1_check(
    m: &ModulusDescriptor,
    k_max: u32,
    horizon: &BigUint,
    tol: f64,
) -> Result<CriterionVerdict, DiagnosticsError> {
    if k_max < 1 {
        return Err(DiagnosticsError::Precondition("k_max must be at least 1".into()));
    }
    if !(tol >= 0.0) {
        return Err(DiagnosticsError::Precondition(format!(
            "tolerance must be nonnegative, got {tol}"
        )));
    }
    let base = tail_ratio(m, horizon, DEFAULT_EPSILON)?;
    if base.verdict.verdict == IdealVerdict::Inconclusive {
        return Err(DiagnosticsError::LemmaHypothesis {
            oscillation: base.verdict.evidence.oscillation.unwrap_or(f64::NAN),
            epsilon: DEFAULT_EPSILON,
        });
    }

    let mut estimates = Vec::new();
    let mut worst = (0.0f64, 1u32);
    for k in 1..=k_max {
        let g = estimate_g(m, k, horizon, DEFAULT_WINDOW)?;
        let deviation = match (g.estimate.exact(), base.a.exact()) {
            (Some(g), Some(a)) => rational_to_f64(&(g - a.pow(k as i32)).abs()),
            _ => (g.estimate.value() - base.a.value().powi(k as i32)).abs(),
        };
        if deviation > worst.0 {
            worst = (deviation, k);
        }
        estimates.push(EstimateEntry::from_estimate(k, &g));
    }
    let passed = worst.0 <= tol;

    Ok(CriterionVerdict {
        criterion: Criterion::Lemma1Consistency,
        verdict: if passed {
            base.verdict.verdict
        } else {
            IdealVerdict::Inconclusive
        },
        a: base.verdict.a,
        estimates,
        policy: Policy {
            horizon: horizon.clone(),
            window: DEFAULT_WINDOW,
            epsilon: Some(DEFAULT_EPSILON),
            k_max: Some(k_max),
            tol: Some(tol),
            ..Policy::default()
        },
        evidence: Evidence {
            worst_deviation: Some(worst.0),
            worst_k: Some(worst.1),
            passed: Some(passed),
            ..base.verdict.evidence
        },
        heuristic: true,
    })
}

/// Verdict from the trend of `g_f(1), ..., g_f(k_max)`.
///
/// Equal ideals when the estimates do not increase (within
/// [`TREND_TOLERANCE`]) and the last one is below [`TREND_FINAL_THRESHOLD`];
/// unequal when every estimate stays above [`TREND_FLOOR`]; inconclusive otherwise.
pub fn theorem1_trend(
    m: &ModulusDescriptor,
    k_max: u32,
    horizon: &BigUint,
) -> Result<CriterionVerdict, DiagnosticsError> {
    if k_max < 3 {
        return Err(DiagnosticsError::Precondition(format!(
            "k_max must be at least 3, got {k_max}"
        )));
    }
    let needed = (BigUint::one() << k_max as usize) * MIN_HORIZON;
    if *horizon < needed {
        return Err(DiagnosticsError::Precondition(format!(
            "horizon must be at least 2^{k_max} * {MIN_HORIZON} = {needed}, got {horizon}"
        )));
    }
    let estimates = (1..=k_max)
        .map(|k| estimate_g(m, k, horizon, DEFAULT_WINDOW).map(|g| EstimateEntry::from_estimate(k, &g)))
        .collect::<Result<Vec<_>, _>>()?;
    let non_increasing = estimates
        .windows(2)
        .all(|w| w[1].value <= w[0].value + TREND_TOLERANCE);
    let last = estimates.last().expect("k_max >= 3").value;
    let verdict = if non_increasing && last < TREND_FINAL_THRESHOLD {
        IdealVerdict::EqualIdeals
    } else if estimates.iter().all(|e| e.value > TREND_FLOOR) {
        IdealVerdict::UnequalIdeals
    } else {
        IdealVerdict::Inconclusive
    };
    Ok(CriterionVerdict {
        criterion: Criterion::Theorem1Trend,
        verdict,
        a: None,
        estimates,
        policy: Policy {
            horizon: horizon.clone(),
            window: DEFAULT_WINDOW,
            k_max: Some(k_max),
            final_threshold: Some(TREND_FINAL_THRESHOLD),
            floor: Some(TREND_FLOOR),
            monotone_tolerance: Some(TREND_TOLERANCE),
            ..Policy::default()
        },
        evidence: Evidence {
            non_increasing: Some(non_increasing),
            final_estimate: Some(last),
            ..Evidence::default()
        },
        heuristic: true,
    })
}
