//! Subsets of the naturals, their counting function `α_A(n) = |A ∩ [1, n]|`,
//! and density profiles over horizon grids.

mod grid;
mod profile;

pub use grid::HorizonGrid;
pub use profile::{
    density_profile, f_density_profile, membership_verdict, DensityProfile, Ideal,
    MembershipEvidence, MembershipPolicy, MembershipVerdict, ProfileRow, Verdict,
};

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bignum::{self, Nat};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SetError {
    #[error("set elements must be positive")]
    NonPositive,
    #[error("explicit elements must be strictly increasing (at position {0})")]
    NotIncreasing(usize),
    #[error("block {0} has start greater than end")]
    EmptyBlock(usize),
    #[error("blocks {0} and {1} overlap or are out of order")]
    Overlap(usize, usize),
    #[error("unknown built-in set `{0}` (expected evens, squares or powers-of-two)")]
    UnknownBuiltin(String),
    #[error("horizon grid must be nonempty, positive and strictly increasing")]
    BadGrid,
    #[error("{0}")]
    Precondition(String),
}

/// Sets with a closed-form counting function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Builtin {
    Evens,
    Squares,
    PowersOfTwo,
}

impl Builtin {
    pub fn name(&self) -> &'static str {
        match self {
            Builtin::Evens => "evens",
            Builtin::Squares => "squares",
            Builtin::PowersOfTwo => "powers-of-two",
        }
    }

    fn alpha(&self, n: &BigUint) -> BigUint {
        match self {
            Builtin::Evens => n >> 1usize,
            Builtin::Squares => n.sqrt(),
            // ⌊log2 n⌋ + 1 for n >= 1
            Builtin::PowersOfTwo => BigUint::from(n.bits()),
        }
    }

    fn contains(&self, n: &BigUint) -> bool {
        if n.is_zero() {
            return false;
        }
        match self {
            Builtin::Evens => !n.bit(0),
            Builtin::Squares => {
                let r = n.sqrt();
                &r * &r == *n
            }
            Builtin::PowersOfTwo => n.count_ones() == 1,
        }
    }
}

impl FromStr for Builtin {
    type Err = SetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "evens" => Ok(Builtin::Evens),
            "squares" => Ok(Builtin::Squares),
            "powers-of-two" => Ok(Builtin::PowersOfTwo),
            other => Err(SetError::UnknownBuiltin(other.to_string())),
        }
    }
}

/// Closed interval `[start, end]` of positive integers.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Block {
    pub start: BigUint,
    pub end: BigUint,
}

impl Block {
    pub fn new(start: impl Into<BigUint>, end: impl Into<BigUint>) -> Self {
        Block {
            start: start.into(),
            end: end.into(),
        }
    }

    /// Number of integers in the block (zero if `start > end`).
    pub fn len(&self) -> BigUint {
        if self.start > self.end {
            BigUint::zero()
        } else {
            &self.end - &self.start + 1u32
        }
    }

    pub fn is_empty(&self) -> bool {
        self.start > self.end
    }
}

impl Serialize for Block {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        [Nat(self.start.clone()), Nat(self.end.clone())].serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Block {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let [Nat(start), Nat(end)] = <[Nat; 2]>::deserialize(deserializer)?;
        Ok(Block { start, end })
    }
}

/// `Σ max(0, min(b, n) − a + 1)` over the blocks, without assuming they are
/// sorted or disjoint.
pub fn clipped_block_count<'a>(blocks: impl IntoIterator<Item = &'a Block>, n: &BigUint) -> BigUint {
    let mut total = BigUint::zero();
    for b in blocks {
        if b.start > *n || b.start > b.end {
            continue;
        }
        let top = if b.end < *n { &b.end } else { n };
        total += top - &b.start + 1u32;
    }
    total
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Repr {
    Explicit(Vec<BigUint>),
    /// Sorted disjoint blocks, with the number of elements before each block.
    Blocks(Vec<Block>, Vec<BigUint>),
    Builtin(Builtin),
}

/// A subset of `{1, 2, 3, ...}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IntegerSet(Repr);

impl IntegerSet {
    /// A finite set from strictly increasing positive elements.
    pub fn explicit(elements: Vec<BigUint>) -> Result<Self, SetError> {
        if elements.first().is_some_and(|e| e.is_zero()) {
            return Err(SetError::NonPositive);
        }
        if let Some(i) = elements.windows(2).position(|w| w[0] >= w[1]) {
            return Err(SetError::NotIncreasing(i + 1));
        }
        Ok(IntegerSet(Repr::Explicit(elements)))
    }

    /// A union of sorted, disjoint, nonempty closed intervals.
    pub fn blocks(blocks: Vec<Block>) -> Result<Self, SetError> {
        for (i, b) in blocks.iter().enumerate() {
            if b.start.is_zero() {
                return Err(SetError::NonPositive);
            }
            if b.start > b.end {
                return Err(SetError::EmptyBlock(i));
            }
        }
        if let Some(i) = blocks.windows(2).position(|w| w[0].end >= w[1].start) {
            return Err(SetError::Overlap(i, i + 1));
        }
        let mut before = Vec::with_capacity(blocks.len());
        let mut total = BigUint::zero();
        for b in &blocks {
            before.push(total.clone());
            total += b.len();
        }
        Ok(IntegerSet(Repr::Blocks(blocks, before)))
    }

    pub fn builtin(b: Builtin) -> Self {
        IntegerSet(Repr::Builtin(b))
    }

    pub fn empty() -> Self {
        IntegerSet(Repr::Explicit(Vec::new()))
    }

    pub fn as_blocks(&self) -> Option<&[Block]> {
        match &self.0 {
            Repr::Blocks(b, _) => Some(b),
            _ => None,
        }
    }

    pub fn as_explicit(&self) -> Option<&[BigUint]> {
        match &self.0 {
            Repr::Explicit(e) => Some(e),
            _ => None,
        }
    }

    pub fn as_builtin(&self) -> Option<Builtin> {
        match &self.0 {
            Repr::Builtin(b) => Some(*b),
            _ => None,
        }
    }

    /// The counting function `α_A(n) = |A ∩ [1, n]|`, exact.
    pub fn alpha(&self, n: &BigUint) -> BigUint {
        match &self.0 {
            Repr::Explicit(e) => BigUint::from(e.partition_point(|x| x <= n)),
            Repr::Blocks(blocks, before) => {
                let upto = blocks.partition_point(|b| b.start <= *n);
                match upto.checked_sub(1) {
                    None => BigUint::zero(),
                    Some(last) => &before[last] + clipped_block_count(&blocks[last..upto], n),
                }
            }
            Repr::Builtin(b) => b.alpha(n),
        }
    }

    pub fn contains(&self, n: &BigUint) -> bool {
        match &self.0 {
            Repr::Explicit(e) => e.binary_search(n).is_ok(),
            Repr::Blocks(blocks, _) => {
                let i = blocks.partition_point(|b| b.start <= *n);
                i > 0 && blocks[i - 1].end >= *n
            }
            Repr::Builtin(b) => b.contains(n),
        }
    }

    /// Whether every element of `self` is also in `other`, for finite and block sets.
    /// Returns `None` when the answer needs a built-in's predicate over an infinite range.
    pub fn is_subset_of(&self, other: &IntegerSet) -> Option<bool> {
        let mine: Vec<Block> = match &self.0 {
            Repr::Explicit(e) => e.iter().map(|x| Block::new(x.clone(), x.clone())).collect(),
            Repr::Blocks(b, _) => b.clone(),
            Repr::Builtin(_) => return None,
        };
        let theirs = match &other.0 {
            Repr::Blocks(b, _) => b,
            Repr::Explicit(e) => {
                return Some(mine.iter().all(|b| {
                    let mut x = b.start.clone();
                    while x <= b.end {
                        if e.binary_search(&x).is_err() {
                            return false;
                        }
                        x += 1u32;
                    }
                    true
                }))
            }
            Repr::Builtin(_) => return None,
        };
        Some(mine.iter().all(|b| {
            let i = theirs.partition_point(|t| t.start <= b.start);
            i > 0 && theirs[i - 1].end >= b.end
        }))
    }
}

impl Default for IntegerSet {
    fn default() -> Self {
        IntegerSet::empty()
    }
}

impl fmt::Display for IntegerSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Repr::Explicit(e) => write!(f, "explicit[{} elements]", e.len()),
            Repr::Blocks(b, _) => write!(f, "blocks[{} blocks]", b.len()),
            Repr::Builtin(b) => f.write_str(b.name()),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum SetRepr {
    Explicit {
        #[serde(with = "bignum::vec")]
        elements: Vec<BigUint>,
    },
    Blocks {
        blocks: Vec<Block>,
    },
    Builtin {
        name: Builtin,
    },
}

impl Serialize for IntegerSet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let repr = match &self.0 {
            Repr::Explicit(e) => SetRepr::Explicit {
                elements: e.clone(),
            },
            Repr::Blocks(b, _) => SetRepr::Blocks { blocks: b.clone() },
            Repr::Builtin(b) => SetRepr::Builtin { name: *b },
        };
        repr.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for IntegerSet {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        match SetRepr::deserialize(deserializer)? {
            SetRepr::Explicit { elements } => IntegerSet::explicit(elements).map_err(D::Error::custom),
            SetRepr::Blocks { blocks } => IntegerSet::blocks(blocks).map_err(D::Error::custom),
            SetRepr::Builtin { name } => Ok(IntegerSet::builtin(name)),
        }
    }
}

/// Free-function form of [`IntegerSet::alpha`].
pub fn alpha(set: &IntegerSet, n: &BigUint) -> BigUint {
    set.alpha(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(x: u64) -> BigUint {
        BigUint::from(x)
    }

    fn blocks(spec: &[(u64, u64)]) -> IntegerSet {
        IntegerSet::blocks(spec.iter().map(|&(a, b)| Block::new(a, b)).collect()).unwrap()
    }

    #[test]
    fn counting_examples() {
        assert_eq!(blocks(&[(3, 5), (10, 12)]).alpha(&n(4)), n(2));
        assert_eq!(IntegerSet::builtin(Builtin::Evens).alpha(&n(10)), n(5));
        assert_eq!(IntegerSet::builtin(Builtin::Squares).alpha(&n(1_000_000)), n(1000));
        assert_eq!(IntegerSet::builtin(Builtin::PowersOfTwo).alpha(&n(1024)), n(11));
        assert_eq!(IntegerSet::builtin(Builtin::PowersOfTwo).alpha(&n(1023)), n(10));
        for s in [
            blocks(&[(3, 5)]),
            IntegerSet::builtin(Builtin::Evens),
            IntegerSet::builtin(Builtin::Squares),
            IntegerSet::builtin(Builtin::PowersOfTwo),
            IntegerSet::explicit(vec![n(1), n(7)]).unwrap(),
        ] {
            assert_eq!(s.alpha(&n(0)), n(0), "{s}");
        }
    }

    #[test]
    fn explicit_counts_and_membership() {
        let s = IntegerSet::explicit(vec![n(2), n(3), n(10)]).unwrap();
        assert_eq!(s.alpha(&n(9)), n(2));
        assert_eq!(s.alpha(&n(10)), n(3));
        assert!(s.contains(&n(10)) && !s.contains(&n(4)));
    }

    #[test]
    fn validation() {
        assert_eq!(IntegerSet::explicit(vec![n(0)]), Err(SetError::NonPositive));
        assert_eq!(IntegerSet::explicit(vec![n(2), n(2)]), Err(SetError::NotIncreasing(1)));
        assert_eq!(
            IntegerSet::blocks(vec![Block::new(1u32, 5u32), Block::new(5u32, 6u32)]),
            Err(SetError::Overlap(0, 1))
        );
        assert_eq!(IntegerSet::blocks(vec![Block::new(4u32, 3u32)]), Err(SetError::EmptyBlock(0)));
        assert!("primes".parse::<Builtin>().is_err());
    }

    #[test]
    fn json_forms() {
        let s: IntegerSet =
            serde_json::from_str(r#"{"type":"blocks","blocks":[[3,5],["10","12"]]}"#).unwrap();
        assert_eq!(s, blocks(&[(3, 5), (10, 12)]));
        assert_eq!(
            serde_json::to_string(&s).unwrap(),
            r#"{"type":"blocks","blocks":[["3","5"],["10","12"]]}"#
        );
        let b: IntegerSet = serde_json::from_str(r#"{"type":"builtin","name":"powers-of-two"}"#).unwrap();
        assert_eq!(b, IntegerSet::builtin(Builtin::PowersOfTwo));
        let e: IntegerSet = serde_json::from_str(r#"{"type":"explicit","elements":[1,"5"]}"#).unwrap();
        assert_eq!(e.alpha(&n(6)), n(2));
        assert!(serde_json::from_str::<IntegerSet>(r#"{"type":"explicit","elements":[5,1]}"#).is_err());
    }

    #[test]
    fn subset_of_blocks() {
        let a = blocks(&[(3, 4), (11, 11)]);
        let b = blocks(&[(3, 5), (10, 12)]);
        assert_eq!(a.is_subset_of(&b), Some(true));
        assert_eq!(b.is_subset_of(&a), Some(false));
    }
}
