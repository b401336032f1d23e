use std::io::{self, Write};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use serde::Serialize;

use super::{HorizonGrid, IntegerSet, SetError};
use crate::approx::rational_to_f64;
use crate::bignum;
use crate::format::format_sig;
use crate::modulus::ModulusDescriptor;
use crate::ApproxReal;

/// Tolerance when comparing suprema of neighbouring dyadic segments.
const SEGMENT_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProfileRow {
    #[serde(with = "bignum")]
    pub n: BigUint,
    #[serde(with = "bignum")]
    pub alpha: BigUint,
    /// `α / n`
    pub nat_ratio: f64,
    /// `f(α) / f(n)`, present when the profile has a modulus.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_ratio: Option<ApproxReal>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityProfile {
    pub rows: Vec<ProfileRow>,
    pub modulus: Option<ModulusDescriptor>,
    pub grid: String,
}

impl DensityProfile {
    pub fn horizon(&self) -> Option<&BigUint> {
        self.rows.last().map(|r| &r.n)
    }

    /// CSV with header `n,alpha,nat_ratio,f_ratio,f_ratio_err`. Ratios carry 12
    /// significant digits; `f_ratio_err` is the relative error bound. The `f`
    /// columns are empty when the profile has no modulus.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "n,alpha,nat_ratio,f_ratio,f_ratio_err")?;
        for row in &self.rows {
            let (f, err) = match &row.f_ratio {
                Some(r) => (format_sig(r.value(), 12), format_sig(r.rel_error(), 12)),
                None => (String::new(), String::new()),
            };
            writeln!(
                out,
                "{},{},{},{},{}",
                row.n,
                row.alpha,
                format_sig(row.nat_ratio, 12),
                f,
                err
            )?;
        }
        Ok(())
    }
}

fn exact_ratio(num: &BigUint, den: &BigUint) -> f64 {
    rational_to_f64(&BigRational::new(
        BigInt::from(num.clone()),
        BigInt::from(den.clone()),
    ))
}

/// One row per grid point with the exact count `α_A(n)` and `α_A(n) / n`.
pub fn density_profile(set: &IntegerSet, grid: &HorizonGrid) -> DensityProfile {
    let rows = grid
        .points()
        .iter()
        .map(|n| {
            let alpha = set.alpha(n);
            ProfileRow {
                nat_ratio: exact_ratio(&alpha, n),
                n: n.clone(),
                alpha,
                f_ratio: None,
            }
        })
        .collect();
    DensityProfile {
        rows,
        modulus: None,
        grid: grid.description().to_string(),
    }
}

/// As [`density_profile`], with `f(α) / f(n)` on every row.
pub fn f_density_profile(
    set: &IntegerSet,
    m: &ModulusDescriptor,
    grid: &HorizonGrid,
) -> DensityProfile {
    let mut profile = density_profile(set, grid);
    for row in &mut profile.rows {
        let num = m.eval_big(&row.alpha);
        let den = m.eval_big(&row.n);
        row.f_ratio = Some(num.checked_div(&den).expect("f(n) > 0 for n >= 1"));
    }
    profile.modulus = Some(m.clone());
    profile
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ideal {
    /// Sets of natural density zero.
    Statistical,
    /// Sets of `f`-density zero.
    FIdeal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    InIdeal,
    NotInIdeal,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MembershipPolicy {
    pub threshold: f64,
    /// Fraction of the profile's rows, counted from the end, treated as the tail.
    pub tail_fraction: f64,
}

impl Default for MembershipPolicy {
    fn default() -> Self {
        MembershipPolicy {
            threshold: 0.01,
            tail_fraction: 0.25,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MembershipEvidence {
    pub tail_sup: f64,
    pub overall_max: f64,
    #[serde(with = "bignum")]
    pub horizon: BigUint,
    #[serde(with = "bignum")]
    pub tail_start: BigUint,
    pub tail_rows: usize,
    /// Suprema over the dyadic segments `[2^j, 2^(j+1))` met by the tail.
    pub segment_sups: Vec<f64>,
    pub segments_non_increasing: bool,
    pub policy: MembershipPolicy,
    /// Always true: a finite prefix never decides a density limit.
    pub heuristic: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MembershipVerdict {
    pub ideal: Ideal,
    pub verdict: Verdict,
    pub evidence: MembershipEvidence,
}

/// Finite-horizon guess at whether the profiled set lies in `ideal`.
///
/// With `s` the supremum of the relevant ratio over the tail rows: in-ideal when
/// `s < threshold` and the suprema of the dyadic segments met by the tail do
/// not increase; not-in-ideal when `s > max/2` over all rows and `s >= threshold`;
/// otherwise inconclusive.
pub fn membership_verdict(
    profile: &DensityProfile,
    ideal: Ideal,
    policy: MembershipPolicy,
) -> Result<MembershipVerdict, SetError> {
    if profile.rows.len() < 2 {
        return Err(SetError::Precondition(
            "a membership verdict needs a profile with at least 2 rows".into(),
        ));
    }
    if !(policy.tail_fraction > 0.0 && policy.tail_fraction <= 1.0) {
        return Err(SetError::Precondition(format!(
            "tail fraction must lie in (0, 1], got {}",
            policy.tail_fraction
        )));
    }
    let ratio = |row: &ProfileRow| -> Result<f64, SetError> {
        match ideal {
            Ideal::Statistical => Ok(row.nat_ratio),
            Ideal::FIdeal => row.f_ratio.as_ref().map(|r| r.value()).ok_or_else(|| {
                SetError::Precondition("f-ideal verdict needs an f-density profile".into())
            }),
        }
    };
    let values = profile.rows.iter().map(ratio).collect::<Result<Vec<_>, _>>()?;

    let rows = profile.rows.len();
    let tail_rows = ((rows as f64 * policy.tail_fraction).ceil() as usize).clamp(1, rows);
    let tail_start = rows - tail_rows;
    let tail = &values[tail_start..];
    let tail_sup = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let overall_max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let mut segment_sups: Vec<f64> = Vec::new();
    let mut current_segment = None;
    for (row, v) in profile.rows[tail_start..].iter().zip(tail) {
        let segment = row.n.bits();
        if current_segment == Some(segment) {
            let last = segment_sups.last_mut().expect("segment started");
            *last = last.max(*v);
        } else {
            current_segment = Some(segment);
            segment_sups.push(*v);
        }
    }
    let segments_non_increasing = segment_sups
        .windows(2)
        .all(|w| w[1] <= w[0] + SEGMENT_TOLERANCE);

    let verdict = if tail_sup < policy.threshold && segments_non_increasing {
        Verdict::InIdeal
    } else if tail_sup > overall_max / 2.0 && tail_sup >= policy.threshold {
        Verdict::NotInIdeal
    } else {
        Verdict::Inconclusive
    };

    Ok(MembershipVerdict {
        ideal,
        verdict,
        evidence: MembershipEvidence {
            tail_sup,
            overall_max,
            horizon: profile.rows[rows - 1].n.clone(),
            tail_start: profile.rows[tail_start].n.clone(),
            tail_rows,
            segment_sups,
            segments_non_increasing,
            policy,
            heuristic: true,
        },
    })
}
