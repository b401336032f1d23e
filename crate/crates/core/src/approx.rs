//! Real values carried with a relative-error bound.
//!
//! Values are stored as `mantissa * 2^exponent` with the mantissa in `[0.5, 1)`,
//! so evaluations at arguments far beyond the `f64` range stay finite. When the
//! quantity is known exactly it also carries the exact rational, and every
//! comparison prefers that.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

/// Relative error of a single correctly rounded `f64` operation.
pub const ROUNDING: f64 = f64::EPSILON / 2.0;

#[derive(Clone, Debug, PartialEq)]
pub struct ApproxReal {
    mantissa: f64,
    exponent: i64,
    rel_error: f64,
    exact: Option<BigRational>,
}

impl ApproxReal {
    pub fn zero() -> Self {
        ApproxReal {
            mantissa: 0.0,
            exponent: 0,
            rel_error: 0.0,
            exact: Some(BigRational::zero()),
        }
    }

    /// An exact nonnegative rational.
    pub fn from_exact(value: BigRational) -> Self {
        debug_assert!(!value.is_negative());
        if value.is_zero() {
            return Self::zero();
        }
        let numer = value.numer().magnitude();
        let denom = value.denom().magnitude();
        let (mantissa, exponent) = rational_to_scaled(numer, denom);
        ApproxReal {
            mantissa,
            exponent,
            rel_error: 0.0,
            exact: Some(value),
        }
    }

    pub fn from_biguint(value: &BigUint) -> Self {
        Self::from_exact(BigRational::from_integer(BigInt::from(value.clone())))
    }

    /// An inexact value `value` whose relative error is at most `rel_error`.
    pub fn approx(value: f64, rel_error: f64) -> Self {
        Self::scaled(value, 0, rel_error)
    }

    /// An inexact value `mantissa * 2^exponent`.
    pub fn scaled(mantissa: f64, exponent: i64, rel_error: f64) -> Self {
        assert!(
            mantissa.is_finite() && mantissa >= 0.0,
            "approximate reals are finite and nonnegative, got {mantissa}"
        );
        assert!(rel_error.is_finite() && rel_error >= 0.0);
        if mantissa == 0.0 {
            return ApproxReal {
                mantissa: 0.0,
                exponent: 0,
                rel_error,
                exact: None,
            };
        }
        let (m, e) = frexp(mantissa);
        ApproxReal {
            mantissa: m,
            exponent: e + exponent,
            rel_error,
            exact: None,
        }
    }

    /// The value as an `f64`. Saturates to infinity (or flushes to zero) when the
    /// magnitude leaves the `f64` range; use [`ApproxReal::log2`] for such values.
    pub fn value(&self) -> f64 {
        ldexp(self.mantissa, self.exponent)
    }

    /// Base-2 logarithm of the value; `-inf` for zero.
    pub fn log2(&self) -> f64 {
        if self.mantissa == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.mantissa.log2() + self.exponent as f64
        }
    }

    /// `(mantissa, exponent)` with the value equal to `mantissa * 2^exponent`.
    pub fn parts(&self) -> (f64, i64) {
        (self.mantissa, self.exponent)
    }

    pub fn rel_error(&self) -> f64 {
        self.rel_error
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn exact(&self) -> Option<&BigRational> {
        self.exact.as_ref()
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa == 0.0
    }

    /// `self / other`, or `None` when `other` is zero.
    pub fn checked_div(&self, other: &ApproxReal) -> Option<ApproxReal> {
        if other.is_zero() {
            return None;
        }
        if let (Some(a), Some(b)) = (&self.exact, &other.exact) {
            return Some(Self::from_exact(a / b));
        }
        if self.is_zero() {
            return Some(Self::scaled(0.0, 0, 0.0));
        }
        Some(Self::scaled(
            self.mantissa / other.mantissa,
            self.exponent - other.exponent,
            self.rel_error + other.rel_error + ROUNDING,
        ))
    }

    /// Sum of two nonnegative values.
    pub fn add(&self, other: &ApproxReal) -> ApproxReal {
        if let (Some(a), Some(b)) = (&self.exact, &other.exact) {
            return Self::from_exact(a + b);
        }
        if self.is_zero() {
            return other.without_exact();
        }
        if other.is_zero() {
            return self.without_exact();
        }
        let top = self.exponent.max(other.exponent);
        let sum = ldexp(self.mantissa, self.exponent - top) + ldexp(other.mantissa, other.exponent - top);
        Self::scaled(
            sum,
            top,
            self.rel_error.max(other.rel_error) + ROUNDING,
        )
    }

    /// Multiply by a nonnegative `f64` factor.
    pub fn scale_by(&self, factor: f64) -> ApproxReal {
        assert!(factor.is_finite() && factor >= 0.0);
        if let Some(r) = &self.exact {
            let f = BigRational::from_float(factor).expect("finite factor");
            return Self::from_exact(r * f);
        }
        Self::scaled(self.mantissa * factor, self.exponent, self.rel_error + ROUNDING)
    }

    fn without_exact(&self) -> ApproxReal {
        ApproxReal {
            exact: None,
            ..self.clone()
        }
    }

    /// Magnitude comparison. Exact operands are compared exactly; otherwise the
    /// comparison is on the stored approximations.
    pub fn cmp_value(&self, other: &ApproxReal) -> Ordering {
        if let (Some(a), Some(b)) = (&self.exact, &other.exact) {
            return a.cmp(b);
        }
        match (self.is_zero(), other.is_zero()) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Less,
            (false, true) => Ordering::Greater,
            (false, false) => self
                .exponent
                .cmp(&other.exponent)
                .then(self.mantissa.total_cmp(&other.mantissa)),
        }
    }

    /// True when the value certainly exceeds `threshold`.
    ///
    /// Exact values are compared exactly. Otherwise the margin `value - threshold`
    /// must exceed `guard * rel_error * value`.
    pub fn exceeds(&self, threshold: f64, guard: f64) -> bool {
        if let Some(r) = &self.exact {
            return match BigRational::from_float(threshold) {
                Some(t) => *r > t,
                None => false,
            };
        }
        let v = self.value();
        v - threshold > guard * self.rel_error * v
    }

    /// Upper bound on the absolute error of [`ApproxReal::value`].
    pub fn abs_error(&self) -> f64 {
        self.rel_error * self.value()
    }
}

impl fmt::Display for ApproxReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())?;
        if !self.is_exact() {
            write!(f, " (rel err {:.1e})", self.rel_error)?;
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct ApproxRealRepr {
    value: f64,
    rel_error: f64,
    exact: bool,
}

impl Serialize for ApproxReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        ApproxRealRepr {
            value: self.value(),
            rel_error: self.rel_error,
            exact: self.is_exact(),
        }
        .serialize(serializer)
    }
}

/// Splits a finite positive `x` into `(m, e)` with `x = m * 2^e`, `m` in `[0.5, 1)`.
pub(crate) fn frexp(x: f64) -> (f64, i64) {
    debug_assert!(x.is_finite() && x > 0.0);
    let bits = x.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i64;
    if biased == 0 {
        // subnormal
        let (m, e) = frexp(x * 2f64.powi(64));
        return (m, e - 64);
    }
    let m = f64::from_bits((bits & !(0x7ffu64 << 52)) | (1022u64 << 52));
    (m, biased - 1022)
}

/// `m * 2^e` without intermediate overflow of `2^e` for moderate results.
pub(crate) fn ldexp(m: f64, e: i64) -> f64 {
    if m == 0.0 {
        return 0.0;
    }
    let e = e.clamp(-2200, 2200) as i32;
    if e > 1000 {
        m * 2f64.powi(1000) * 2f64.powi(e - 1000)
    } else if e < -1000 {
        m * 2f64.powi(-1000) * 2f64.powi(e + 1000)
    } else {
        m * 2f64.powi(e)
    }
}

/// Splits a positive integer into `(m, e)` with `n ≈ m * 2^e`, `m` in `[0.5, 1)`,
/// relative error below `2^-63` before the final rounding to `f64`.
pub(crate) fn biguint_to_scaled(n: &BigUint) -> (f64, i64) {
    let bits = n.bits() as i64;
    let (top, shift) = if bits <= 64 {
        (n.to_u64().expect("fits"), 0)
    } else {
        ((n >> (bits - 64) as usize).to_u64().expect("fits"), bits - 64)
    };
    let (m, e) = frexp(top as f64);
    (m, e + shift)
}

fn rational_to_scaled(numer: &BigUint, denom: &BigUint) -> (f64, i64) {
    let shift = 64 - (numer.bits() as i64 - denom.bits() as i64);
    let quotient = if shift >= 0 {
        (numer << shift as usize) / denom
    } else {
        numer / (denom << (-shift) as usize)
    };
    let (m, e) = biguint_to_scaled(&quotient);
    (m, e - shift)
}

/// Correctly scaled `f64` approximation of a nonnegative rational.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    ApproxReal::from_exact(r.clone()).value()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn frexp_normal_and_subnormal() {
        assert_eq!(frexp(1.0), (0.5, 1));
        assert_eq!(frexp(0.75), (0.75, 0));
        let (m, e) = frexp(f64::MIN_POSITIVE / 4.0);
        assert_eq!(m, 0.5);
        assert_eq!(e, -1023);
    }

    #[test]
    fn exact_values_round_trip() {
        let third = ApproxReal::from_exact(rat(1, 3));
        assert_eq!(third.value(), 1.0 / 3.0);
        assert_eq!(third.rel_error(), 0.0);
        assert!(third.is_exact());
        let big = BigUint::from(10u32).pow(30);
        assert_eq!(ApproxReal::from_biguint(&big).value(), 1e30);
    }

    #[test]
    fn huge_values_stay_finite_in_scaled_form() {
        let n = BigUint::from(1u32) << 5000usize;
        let x = ApproxReal::from_biguint(&n);
        assert_eq!(x.log2(), 5000.0);
        assert!(x.value().is_infinite());
        let ratio = ApproxReal::from_biguint(&(&n >> 1usize))
            .checked_div(&x)
            .unwrap();
        assert_eq!(ratio.value(), 0.5);
    }

    #[test]
    fn exact_division_and_comparison() {
        let a = ApproxReal::from_exact(rat(1, 2));
        let b = ApproxReal::from_exact(rat(1, 4));
        let q = b.checked_div(&a).unwrap();
        assert_eq!(q.exact(), Some(&rat(1, 2)));
        assert!(!q.exceeds(0.5, 10.0));
        assert!(q.exceeds(0.4999999, 10.0));
        assert_eq!(a.cmp_value(&b), Ordering::Greater);
        assert!(a.checked_div(&ApproxReal::zero()).is_none());
    }

    #[test]
    fn inexact_guard_band() {
        let x = ApproxReal::approx(0.5 + 1e-13, 1e-15);
        assert!(x.exceeds(0.5, 10.0));
        let y = ApproxReal::approx(0.5 + 1e-16, 1e-15);
        assert!(!y.exceeds(0.5, 10.0));
    }

    #[test]
    fn add_aligns_exponents() {
        let a = ApproxReal::approx(3.0, 1e-15);
        let b = ApproxReal::scaled(0.5, -3, 1e-15);
        assert_eq!(a.add(&b).value(), 3.0625);
        let e = ApproxReal::from_exact(rat(1, 2)).add(&ApproxReal::from_exact(rat(1, 3)));
        assert_eq!(e.exact(), Some(&rat(5, 6)));
    }
}
