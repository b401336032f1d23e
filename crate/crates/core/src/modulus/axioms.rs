use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::ModulusDescriptor;
use crate::approx::ApproxReal;

/// Largest argument used by the subadditivity and monotonicity samplers.
pub const SAMPLE_RANGE: u64 = 1 << 16;

/// Pairs with `w + z` up to this bound are always checked, before sampling.
const EXHAUSTIVE_SUM: u64 = 64;

/// Slack, in units of the combined relative error, allowed on inexact comparisons.
const TOLERANCE_FACTOR: f64 = 4.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum AxiomVerdict {
    Pass,
    Fail {
        /// Arguments reproducing the violation, as exact decimal strings.
        counterexample: Vec<String>,
        detail: String,
    },
}

impl AxiomVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, AxiomVerdict::Pass)
    }

    fn fail(counterexample: Vec<String>, detail: String) -> Self {
        AxiomVerdict::Fail {
            counterexample,
            detail,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AxiomReport {
    pub zero_at_zero: AxiomVerdict,
    pub subadditivity: AxiomVerdict,
    pub monotonicity: AxiomVerdict,
    pub right_continuity: AxiomVerdict,
    pub unboundedness: AxiomVerdict,
    pub sample_count: u64,
    pub rng_seed: u64,
}

impl AxiomReport {
    pub fn all_passed(&self) -> bool {
        self.verdicts().iter().all(|(_, v)| v.passed())
    }

    pub fn verdicts(&self) -> [(&'static str, &AxiomVerdict); 5] {
        [
            ("zero-at-zero", &self.zero_at_zero),
            ("subadditivity", &self.subadditivity),
            ("monotonicity", &self.monotonicity),
            ("right-continuity", &self.right_continuity),
            ("unboundedness", &self.unboundedness),
        ]
    }
}

/// Samples the five modulus axioms. Deterministic for a given `seed`.
///
/// Subadditivity is checked on integer pairs: exhaustively for `w + z <= 64`,
/// then on `sample_budget` random pairs with `w, z <= 2^16`. Monotonicity uses
/// `sample_budget` random real pairs `x < y` in the same range. Right-continuity
/// follows `x = 2^-j` down to `2^-65536`; unboundedness compares `f(2^64)`
/// with `f(2^4096)`.
pub fn check_axioms(m: &ModulusDescriptor, sample_budget: u64, seed: u64) -> AxiomReport {
    let budget = sample_budget.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    AxiomReport {
        zero_at_zero: zero_at_zero(m),
        subadditivity: subadditivity(m, budget, &mut rng),
        monotonicity: monotonicity(m, budget, &mut rng),
        right_continuity: right_continuity(m),
        unboundedness: unboundedness(m),
        sample_count: budget,
        rng_seed: seed,
    }
}

/// `a <= b`, exactly when both are exact, otherwise up to the combined error.
fn at_most(a: &ApproxReal, b: &ApproxReal) -> bool {
    if let (Some(x), Some(y)) = (a.exact(), b.exact()) {
        return x <= y;
    }
    if a.is_zero() {
        return true;
    }
    // log2(1 + s) <= 2 s for small s
    let slack = TOLERANCE_FACTOR * (a.rel_error() + b.rel_error());
    a.log2() - b.log2() <= 2.0 * slack
}

fn zero_at_zero(m: &ModulusDescriptor) -> AxiomVerdict {
    let origin = m.eval_big(&BigUint::from(0u32));
    if !origin.is_zero() {
        return AxiomVerdict::fail(vec!["0".into()], format!("f(0) = {origin}"));
    }
    for j in [0u32, 1, 10, 40, 200] {
        let x = BigRational::new(1.into(), num_bigint::BigInt::one() << j as usize);
        if m.eval_rational(&x).is_zero() {
            return AxiomVerdict::fail(vec![x.to_string()], format!("f({x}) = 0"));
        }
    }
    for n in 1..=EXHAUSTIVE_SUM {
        if m.eval_big(&BigUint::from(n)).is_zero() {
            return AxiomVerdict::fail(vec![n.to_string()], format!("f({n}) = 0"));
        }
    }
    AxiomVerdict::Pass
}

fn subadditive_at(m: &ModulusDescriptor, w: u64, z: u64) -> Option<AxiomVerdict> {
    let fw = m.eval_big(&BigUint::from(w));
    let fz = m.eval_big(&BigUint::from(z));
    let fwz = m.eval_big(&BigUint::from(w + z));
    let bound = fw.add(&fz);
    (!at_most(&fwz, &bound)).then(|| {
        AxiomVerdict::fail(
            vec![w.to_string(), z.to_string()],
            format!("f({}) = {} > f({w}) + f({z}) = {}", w + z, fwz.value(), bound.value()),
        )
    })
}

/// Draws from `[0, SAMPLE_RANGE]`, half the time log-uniformly so that small
/// arguments are not starved.
fn draw(rng: &mut ChaCha8Rng) -> u64 {
    if rng.gen_bool(0.5) {
        rng.gen_range(0..=SAMPLE_RANGE)
    } else {
        let bits = rng.gen_range(0..=16u32);
        rng.gen_range(0..=(1u64 << bits))
    }
}

fn subadditivity(m: &ModulusDescriptor, budget: u64, rng: &mut ChaCha8Rng) -> AxiomVerdict {
    for sum in 2..=EXHAUSTIVE_SUM {
        for w in 1..=sum / 2 {
            if let Some(fail) = subadditive_at(m, w, sum - w) {
                return fail;
            }
        }
    }
    for _ in 0..budget {
        let (a, b) = (draw(rng), draw(rng));
        if let Some(fail) = subadditive_at(m, a.min(b), a.max(b)) {
            return fail;
        }
    }
    AxiomVerdict::Pass
}

fn monotonicity(m: &ModulusDescriptor, budget: u64, rng: &mut ChaCha8Rng) -> AxiomVerdict {
    let range = SAMPLE_RANGE as f64;
    for i in 0..budget {
        let (x, y) = if i % 2 == 0 {
            let (a, b) = (draw(rng), draw(rng));
            (a.min(b) as f64, a.max(b) as f64)
        } else {
            let a = rng.gen_range(0.0..range);
            let b = rng.gen_range(0.0..range);
            (a.min(b), a.max(b))
        };
        let fx = m.eval(x).expect("sampled arguments are finite and nonnegative");
        let fy = m.eval(y).expect("sampled arguments are finite and nonnegative");
        if !at_most(&fx, &fy) {
            return AxiomVerdict::fail(
                vec![format!("{x:?}"), format!("{y:?}")],
                format!("f({x:?}) = {} > f({y:?}) = {}", fx.value(), fy.value()),
            );
        }
    }
    AxiomVerdict::Pass
}

/// `f(2^-j)` must be non-increasing as `j` grows and end below `1e-9 f(1)`.
fn right_continuity(m: &ModulusDescriptor) -> AxiomVerdict {
    let at_one = m.eval_big(&BigUint::one());
    let mut previous: Option<(u64, ApproxReal)> = None;
    let mut j = 0u64;
    while j <= 1 << 16 {
        let x = BigRational::new(1.into(), num_bigint::BigInt::one() << j as usize);
        let fx = m.eval_rational(&x);
        if let Some((pj, prev)) = &previous {
            if !at_most(&fx, prev) {
                return AxiomVerdict::fail(
                    vec![format!("2^-{j}"), format!("2^-{pj}")],
                    format!("f(2^-{j}) exceeds f(2^-{pj})"),
                );
            }
        }
        previous = Some((j, fx));
        j = if j == 0 { 1 } else { j * 2 };
    }
    let (last_j, last) = previous.expect("grid is nonempty");
    if last.log2() > at_one.log2() + (1e-9f64).log2() {
        return AxiomVerdict::fail(
            vec![format!("2^-{last_j}")],
            format!("f(2^-{last_j}) = 2^{:.3} does not approach 0", last.log2()),
        );
    }
    AxiomVerdict::Pass
}

/// `f` must at least double between `2^64` and `2^4096`.
fn unboundedness(m: &ModulusDescriptor) -> AxiomVerdict {
    let low = m.eval_big(&(BigUint::one() << 64usize));
    let high = m.eval_big(&(BigUint::one() << 4096usize));
    if high.log2() - low.log2() < 1.0 {
        return AxiomVerdict::fail(
            vec!["2^64".into(), "2^4096".into()],
            format!(
                "f grows by a factor of 2^{:.3} between 2^64 and 2^4096",
                high.log2() - low.log2()
            ),
        );
    }
    AxiomVerdict::Pass
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example3_is_a_modulus() {
        let report = check_axioms(&ModulusDescriptor::Example3, 2000, 1);
        assert!(report.all_passed(), "{report:?}");
    }

    #[test]
    fn power_half_is_a_modulus() {
        let m = ModulusDescriptor::power(1, 2).unwrap();
        assert!(check_axioms(&m, 2000, 7).all_passed());
    }

    #[test]
    fn corrupted_table_fails_subadditivity_at_one_two() {
        let m = ModulusDescriptor::table(vec![0u32.into(), 1u32.into(), 2u32.into(), 9u32.into()])
            .unwrap();
        let report = check_axioms(&m, 1000, 1);
        assert_eq!(
            report.subadditivity,
            AxiomVerdict::Fail {
                counterexample: vec!["1".into(), "2".into()],
                detail: "f(3) = 9 > f(1) + f(2) = 3".into(),
            }
        );
        assert!(!report.all_passed());
    }

    #[test]
    fn bounded_table_fails_unboundedness() {
        let m = ModulusDescriptor::table(vec![0u32.into(), 1u32.into(), 1u32.into()]).unwrap();
        let report = check_axioms(&m, 10, 3);
        assert!(!report.unboundedness.passed());
    }

    #[test]
    fn deterministic_for_a_seed() {
        let m = ModulusDescriptor::Log;
        assert_eq!(check_axioms(&m, 500, 42), check_axioms(&m, 500, 42));
    }
}
