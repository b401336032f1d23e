//! Serde glue for arbitrary-precision naturals: written as decimal strings,
//! read from decimal strings or plain JSON integers.

use std::fmt;

use num_bigint::BigUint;
use serde::de::{self, Visitor};
use serde::{Deserializer, Serializer};

pub fn serialize<S: Serializer>(n: &BigUint, serializer: S) -> Result<S::Ok, S::Error> {
    serializer.serialize_str(&n.to_str_radix(10))
}

pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<BigUint, D::Error> {
    deserializer.deserialize_any(NatVisitor)
}

pub(crate) struct NatVisitor;

impl Visitor<'_> for NatVisitor {
    type Value = BigUint;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("a nonnegative integer or a decimal string")
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<BigUint, E> {
        Ok(BigUint::from(v))
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<BigUint, E> {
        u64::try_from(v)
            .map(BigUint::from)
            .map_err(|_| E::custom(format!("expected a nonnegative integer, got {v}")))
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<BigUint, E> {
        parse_nat(v).ok_or_else(|| E::custom(format!("`{v}` is not a decimal natural number")))
    }
}

/// Parses a plain decimal natural (digits only, optional surrounding whitespace).
pub fn parse_nat(s: &str) -> Option<BigUint> {
    let s = s.trim();
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    BigUint::parse_bytes(s.as_bytes(), 10)
}

/// Vectors of naturals.
pub mod vec {
    use super::*;
    use serde::de::SeqAccess;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(ns: &[BigUint], serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(ns.len()))?;
        for n in ns {
            seq.serialize_element(&n.to_str_radix(10))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Vec<BigUint>, D::Error> {
        struct SeqVisitor;
        impl<'de> Visitor<'de> for SeqVisitor {
            type Value = Vec<BigUint>;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a list of naturals")
            }
            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Vec<BigUint>, A::Error> {
                let mut out = Vec::new();
                while let Some(Nat(n)) = seq.next_element()? {
                    out.push(n);
                }
                Ok(out)
            }
        }
        deserializer.deserialize_seq(SeqVisitor)
    }
}

/// Newtype used where a natural appears inside another serde container.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Nat(pub BigUint);

impl<'de> serde::Deserialize<'de> for Nat {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        deserializer.deserialize_any(NatVisitor).map(Nat)
    }
}

impl serde::Serialize for Nat {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serialize(&self.0, serializer)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_numbers_and_strings() {
        let v: Vec<Nat> = serde_json::from_str(r#"[3, "100000000000000000000000"]"#).unwrap();
        assert_eq!(v[0].0, BigUint::from(3u32));
        assert_eq!(v[1].0, BigUint::from(10u32).pow(23));
        assert!(serde_json::from_str::<Nat>("-1").is_err());
        assert!(serde_json::from_str::<Nat>(r#""1e5""#).is_err());
        assert_eq!(serde_json::to_string(&v[1]).unwrap(), r#""100000000000000000000000""#);
    }
}
