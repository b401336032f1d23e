//! Modulus functions: descriptors, evaluation, and axiom sampling.
//!
//! A modulus is `f: [0, ∞) → [0, ∞)` with `f(x) = 0` iff `x = 0`, subadditive,
//! non-decreasing, right-continuous at 0 and unbounded. Three families are
//! supported (`x^p`, `ln(1 + x)` and the recursive [`example3_exact`] function),
//! plus an in-memory table used to exercise the axiom checker.

mod axioms;
mod example3;

pub use axioms::{check_axioms, AxiomReport, AxiomVerdict};
pub use example3::{example3_exact, example3_iterative};

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::approx::{biguint_to_scaled, ApproxReal, ROUNDING};

/// Relative error bound on every inexact evaluation.
pub const EVAL_REL_ERROR: f64 = 32.0 * ROUNDING;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModulusError {
    #[error("modulus argument must be finite and nonnegative, got {0}")]
    Domain(f64),
    #[error("power exponent must satisfy 0 < p <= 1, got {0}")]
    InvalidExponent(String),
    #[error("invalid modulus specification `{0}`")]
    Parse(String),
    #[error("table moduli exist only in memory and cannot be serialized")]
    NotSerializable,
    #[error("a modulus table needs at least two values")]
    TableTooShort,
}

/// Exponent `p = a/b` of a power modulus, `0 < p <= 1`, kept in lowest terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Exponent(Ratio<u64>);

impl Exponent {
    pub fn new(numer: u64, denom: u64) -> Result<Self, ModulusError> {
        if denom == 0 || numer == 0 || numer > denom {
            return Err(ModulusError::InvalidExponent(format!("{numer}/{denom}")));
        }
        Ok(Exponent(Ratio::new(numer, denom)))
    }

    pub fn numer(&self) -> u64 {
        *self.0.numer()
    }

    pub fn denom(&self) -> u64 {
        *self.0.denom()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    pub fn to_f64(&self) -> f64 {
        self.numer() as f64 / self.denom() as f64
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numer(), self.denom())
    }
}

impl FromStr for Exponent {
    type Err = ModulusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ModulusError::InvalidExponent(s.to_string());
        let (n, d) = match s.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s.trim(), "1"),
        };
        let n: u64 = n.parse().map_err(|_| bad())?;
        let d: u64 = d.parse().map_err(|_| bad())?;
        Exponent::new(n, d).map_err(|_| bad())
    }
}

/// Values of a modulus at `0, 1, ..., len - 1`, interpolated linearly in between
/// and extended past the end with the slope of the last segment.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Table(Arc<[BigUint]>);

impl Table {
    pub fn new(values: Vec<BigUint>) -> Result<Self, ModulusError> {
        if values.len() < 2 {
            return Err(ModulusError::TableTooShort);
        }
        Ok(Table(values.into()))
    }

    pub fn values(&self) -> &[BigUint] {
        &self.0
    }

    fn at(&self, x: &BigRational) -> BigRational {
        let values = &self.0;
        let last = values.len() - 1;
        let floor = x.floor().to_integer();
        let frac = x - BigRational::from_integer(floor.clone());
        let idx = floor.to_usize().unwrap_or(usize::MAX);
        let int = |v: &BigUint| BigRational::from_integer(BigInt::from(v.clone()));
        if idx < last {
            let lo = int(&values[idx]);
            let hi = int(&values[idx + 1]);
            return &lo + frac * (hi - &lo);
        }
        let slope = int(&values[last]) - int(&values[last - 1]);
        let past = x - BigRational::from_integer(BigInt::from(last));
        int(&values[last]) + past * slope
    }
}

/// Immutable description of a modulus function.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ModulusDescriptor {
    /// `f(x) = x^p`.
    Power(Exponent),
    /// `f(x) = ln(1 + x)`.
    Log,
    /// The recursive modulus, linearly interpolated between integers.
    Example3,
    /// A finite table; test fixture only, never serialized.
    Table(Table),
}

impl ModulusDescriptor {
    pub fn power(numer: u64, denom: u64) -> Result<Self, ModulusError> {
        Exponent::new(numer, denom).map(ModulusDescriptor::Power)
    }

    pub fn table(values: Vec<BigUint>) -> Result<Self, ModulusError> {
        Table::new(values).map(ModulusDescriptor::Table)
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            ModulusDescriptor::Power(_) => "power",
            ModulusDescriptor::Log => "log",
            ModulusDescriptor::Example3 => "example3",
            ModulusDescriptor::Table(_) => "table",
        }
    }

    /// `f(x)` for a finite nonnegative `x`.
    pub fn eval(&self, x: f64) -> Result<ApproxReal, ModulusError> {
        if !x.is_finite() || x < 0.0 {
            return Err(ModulusError::Domain(x));
        }
        let x = BigRational::from_float(x).ok_or(ModulusError::Domain(x))?;
        Ok(self.eval_rational(&x))
    }

    /// `f(n)` for an arbitrary-precision integer.
    pub fn eval_big(&self, n: &BigUint) -> ApproxReal {
        self.eval_parts(n, &BigUint::one())
    }

    /// `f(x)` at an exact nonnegative rational.
    ///
    /// # Panics
    ///
    /// If `x` is negative.
    pub fn eval_rational(&self, x: &BigRational) -> ApproxReal {
        assert!(!x.is_negative(), "modulus argument must be nonnegative");
        let numer = x.numer().magnitude();
        let denom = x.denom().magnitude();
        self.eval_parts(numer, denom)
    }

    fn eval_parts(&self, numer: &BigUint, denom: &BigUint) -> ApproxReal {
        if numer.is_zero() {
            return ApproxReal::zero();
        }
        match self {
            ModulusDescriptor::Power(p) => power_at(*p, numer, denom),
            ModulusDescriptor::Log => log1p_at(numer, denom),
            ModulusDescriptor::Example3 => example3_at(numer, denom),
            ModulusDescriptor::Table(t) => ApproxReal::from_exact(t.at(&ratio(numer, denom))),
        }
    }
}

fn ratio(numer: &BigUint, denom: &BigUint) -> BigRational {
    BigRational::new(BigInt::from(numer.clone()), BigInt::from(denom.clone()))
}

fn power_at(p: Exponent, numer: &BigUint, denom: &BigUint) -> ApproxReal {
    if p.is_one() {
        return ApproxReal::from_exact(ratio(numer, denom));
    }
    let (a, b) = (p.numer(), p.denom());
    if let (Some(rn), Some(rd)) = (exact_root(numer, b), exact_root(denom, b)) {
        let a = a as u32;
        return ApproxReal::from_exact(ratio(&rn.pow(a), &rd.pow(a)));
    }
    // x = (mn / md) * 2^l, so x^p = (mn / md)^p * 2^(a l / b) and the power of two
    // splits exactly into an integer shift and a fractional exponent r / b.
    let (mn, ln) = biguint_to_scaled(numer);
    let (md, ld) = biguint_to_scaled(denom);
    let scaled = a as i128 * (ln - ld) as i128;
    let (whole, frac) = scaled.div_mod_floor(&(b as i128));
    let mantissa = (frac as f64 / b as f64).exp2() * (mn / md).powf(p.to_f64());
    ApproxReal::scaled(mantissa, whole as i64, EVAL_REL_ERROR)
}

/// `n^(1/b)` when `n` is a perfect `b`-th power.
fn exact_root(n: &BigUint, b: u64) -> Option<BigUint> {
    if n.is_one() {
        return Some(BigUint::one());
    }
    if b >= n.bits() {
        return None;
    }
    let b = b as u32;
    if let Some(small) = n.to_u64() {
        let guess = (small as f64).powf(1.0 / b as f64).round() as u64;
        return [guess.saturating_sub(1), guess, guess + 1]
            .into_iter()
            .find(|r| (*r as u128).checked_pow(b) == Some(small as u128))
            .map(BigUint::from);
    }
    let root = n.nth_root(b);
    (root.pow(b) == *n).then_some(root)
}

fn log1p_at(numer: &BigUint, denom: &BigUint) -> ApproxReal {
    if denom.is_one() {
        if let Some(n) = numer.to_u64().filter(|n| *n < 1 << 53) {
            return ApproxReal::approx((n as f64).ln_1p(), EVAL_REL_ERROR);
        }
    }
    if numer < denom {
        let x = ApproxReal::from_exact(ratio(numer, denom));
        if x.log2() < -30.0 {
            // ln(1 + x) = x (1 - x/2 + ...), with the cubic term below 2^-60
            let (mantissa, exponent) = x.parts();
            let correction = 1.0 - x.value() / 2.0;
            return ApproxReal::scaled(mantissa * correction, exponent, EVAL_REL_ERROR);
        }
        return ApproxReal::approx(x.value().ln_1p(), EVAL_REL_ERROR);
    }
    // ln((numer + denom) / denom) with the binary exponents subtracted exactly
    let sum = numer + denom;
    let (ms, ls) = biguint_to_scaled(&sum);
    let (md, ld) = biguint_to_scaled(denom);
    let value = (ms / md).ln() + (ls - ld) as f64 * std::f64::consts::LN_2;
    ApproxReal::approx(value, EVAL_REL_ERROR)
}

fn example3_at(numer: &BigUint, denom: &BigUint) -> ApproxReal {
    if denom.is_one() {
        return ApproxReal::from_biguint(&example3_exact(numer));
    }
    let (floor, rem) = numer.div_rem(denom);
    let lo = example3_exact(&floor);
    let hi = example3_exact(&(&floor + 1u32));
    let lo_r = BigRational::from_integer(BigInt::from(lo.clone()));
    let step = BigRational::from_integer(BigInt::from(hi) - BigInt::from(lo));
    ApproxReal::from_exact(lo_r + ratio(&rem, denom) * step)
}

impl fmt::Display for ModulusDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModulusDescriptor::Power(p) => write!(f, "power:{p}"),
            ModulusDescriptor::Log => f.write_str("log"),
            ModulusDescriptor::Example3 => f.write_str("example3"),
            ModulusDescriptor::Table(t) => write!(f, "table[{}]", t.values().len()),
        }
    }
}

impl FromStr for ModulusDescriptor {
    type Err = ModulusError;

    /// Parses `power:<p>`, `log` or `example3`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "log" => Ok(ModulusDescriptor::Log),
            "example3" => Ok(ModulusDescriptor::Example3),
            other => match other.strip_prefix("power:") {
                Some(p) => p.parse().map(ModulusDescriptor::Power),
                None => Err(ModulusError::Parse(s.to_string())),
            },
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DescriptorRepr {
    family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p: Option<String>,
}

impl Serialize for ModulusDescriptor {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let p = match self {
            ModulusDescriptor::Power(p) => Some(p.to_string()),
            ModulusDescriptor::Table(_) => {
                return Err(serde::ser::Error::custom(ModulusError::NotSerializable))
            }
            _ => None,
        };
        DescriptorRepr {
            family: self.family_name().to_string(),
            p,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ModulusDescriptor {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let repr = DescriptorRepr::deserialize(deserializer)?;
        match (repr.family.as_str(), repr.p) {
            ("power", Some(p)) => p.parse().map(ModulusDescriptor::Power).map_err(D::Error::custom),
            ("power", None) => Err(D::Error::custom("power modulus requires \"p\"")),
            ("log", None) => Ok(ModulusDescriptor::Log),
            ("example3", None) => Ok(ModulusDescriptor::Example3),
            (family @ ("log" | "example3"), Some(_)) => {
                Err(D::Error::custom(format!("{family} modulus takes no \"p\"")))
            }
            (family, _) => Err(D::Error::custom(format!("unknown modulus family `{family}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half() -> ModulusDescriptor {
        ModulusDescriptor::power(1, 2).unwrap()
    }

    #[test]
    fn power_half_at_four_is_exactly_two() {
        let v = half().eval(4.0).unwrap();
        assert!(v.is_exact());
        assert_eq!(v.value(), 2.0);
    }

    #[test]
    fn example3_points() {
        let m = ModulusDescriptor::Example3;
        assert_eq!(m.eval(2.0).unwrap().value(), 2.0);
        let mid = m.eval(4.5).unwrap();
        assert_eq!(mid.value(), 2.5);
        assert!(mid.is_exact());
    }

    #[test]
    fn zero_maps_to_zero_exactly() {
        for m in [ModulusDescriptor::Log, half(), ModulusDescriptor::Example3] {
            let v = m.eval(0.0).unwrap();
            assert!(v.is_exact() && v.is_zero(), "{m}");
        }
    }

    #[test]
    fn domain_errors() {
        let m = ModulusDescriptor::Log;
        assert_eq!(m.eval(-1.0), Err(ModulusError::Domain(-1.0)));
        assert!(matches!(m.eval(f64::NAN), Err(ModulusError::Domain(_))));
        assert!(matches!(m.eval(f64::INFINITY), Err(ModulusError::Domain(_))));
    }

    #[test]
    fn exponent_range_is_enforced() {
        assert!(ModulusDescriptor::power(0, 1).is_err());
        assert!(ModulusDescriptor::power(3, 2).is_err());
        assert!(ModulusDescriptor::power(1, 0).is_err());
        assert_eq!(
            ModulusDescriptor::power(2, 4).unwrap(),
            ModulusDescriptor::power(1, 2).unwrap()
        );
    }

    #[test]
    fn eval_big_exact_families() {
        let n = BigUint::one() << 40usize;
        let v = ModulusDescriptor::Example3.eval_big(&n);
        assert_eq!(v.exact().unwrap(), &BigRational::from_integer((1i64 << 20).into()));

        let big = BigUint::from(10u32).pow(30);
        let id = ModulusDescriptor::power(1, 1).unwrap().eval_big(&big);
        assert_eq!(
            id.exact().unwrap(),
            &BigRational::from_integer(BigInt::from(big.clone()))
        );
    }

    #[test]
    fn log_at_two_pow_64_minus_one() {
        let n = (BigUint::one() << 64usize) - 1u32;
        let v = ModulusDescriptor::Log.eval_big(&n);
        let want = 64.0 * std::f64::consts::LN_2;
        assert!(((v.value() - want) / want).abs() <= 1e-12);
        assert!(v.rel_error() <= 1e-12);
    }

    #[test]
    fn log_of_tiny_rational() {
        let x = BigRational::new(1.into(), BigInt::from(1) << 200usize);
        let v = ModulusDescriptor::Log.eval_rational(&x);
        assert!((v.log2() + 200.0).abs() < 1e-12);
    }

    #[test]
    fn power_at_huge_argument() {
        let n = BigUint::one() << 3001usize;
        let v = ModulusDescriptor::power(1, 3).unwrap().eval_big(&n);
        // 2^(3001/3) = 2^1000 * 2^(1/3)
        assert!((v.log2() - 3001.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn table_interpolates_and_extends() {
        let t = ModulusDescriptor::table(vec![0u32.into(), 1u32.into(), 3u32.into()]).unwrap();
        assert_eq!(t.eval(1.5).unwrap().value(), 2.0);
        assert_eq!(t.eval(4.0).unwrap().value(), 7.0);
        assert!(ModulusDescriptor::table(vec![0u32.into()]).is_err());
    }

    #[test]
    fn parse_and_json() {
        let m: ModulusDescriptor = "power:1/2".parse().unwrap();
        assert_eq!(m, half());
        assert_eq!("log".parse::<ModulusDescriptor>().unwrap(), ModulusDescriptor::Log);
        assert!("power:2".parse::<ModulusDescriptor>().is_err());
        assert!("sqrt".parse::<ModulusDescriptor>().is_err());

        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(json, r#"{"family":"power","p":"1/2"}"#);
        let back: ModulusDescriptor = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
        let e3: ModulusDescriptor = serde_json::from_str(r#"{"family":"example3"}"#).unwrap();
        assert_eq!(e3, ModulusDescriptor::Example3);
        assert!(serde_json::from_str::<ModulusDescriptor>(r#"{"family":"log","p":"1/2"}"#).is_err());
        assert!(serde_json::from_str::<ModulusDescriptor>(r#"{"family":"power"}"#).is_err());
    }
}
