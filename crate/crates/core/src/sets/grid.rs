use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::Serialize;

use super::SetError;

/// Every integer up to this bound is on the default grid.
pub const DENSE_PREFIX: u64 = 1000;

/// Strictly increasing positive horizons at which profiles and ratios are sampled.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HorizonGrid {
    #[serde(skip)]
    points: Vec<BigUint>,
    description: String,
}

impl HorizonGrid {
    /// The default grid up to `horizon`: `1..=1000`, then steps of ratio 1.01
    /// rounded up, merged with every power of two, and the horizon itself.
    pub fn geometric(horizon: &BigUint) -> Self {
        let mut points = Vec::new();
        let mut n = BigUint::one();
        while n <= *horizon {
            points.push(n.clone());
            n = if n < BigUint::from(DENSE_PREFIX) {
                n + 1u32
            } else {
                // ⌈1.01 n⌉
                (&n * 101u32 + 99u32) / 100u32
            };
        }
        let mut pow = BigUint::from(DENSE_PREFIX.next_power_of_two());
        while pow <= *horizon {
            points.push(pow.clone());
            pow <<= 1usize;
        }
        if !horizon.is_zero() {
            points.push(horizon.clone());
        }
        points.sort();
        points.dedup();
        HorizonGrid {
            points,
            description: format!("geometric(ratio=1.01, dense<={DENSE_PREFIX}, dyadic anchors, horizon={horizon})"),
        }
    }

    pub fn explicit(points: Vec<BigUint>) -> Result<Self, SetError> {
        let valid = !points.is_empty()
            && !points[0].is_zero()
            && points.windows(2).all(|w| w[0] < w[1]);
        if !valid {
            return Err(SetError::BadGrid);
        }
        let description = format!("explicit({} points)", points.len());
        Ok(HorizonGrid {
            points,
            description,
        })
    }

    /// The points `n >= from`.
    pub fn tail(&self, from: &BigUint) -> HorizonGrid {
        let start = self.points.partition_point(|p| p < from);
        HorizonGrid {
            points: self.points[start..].to_vec(),
            description: format!("{} restricted to n >= {from}", self.description),
        }
    }

    pub fn points(&self) -> &[BigUint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn last(&self) -> Option<&BigUint> {
        self.points.last()
    }

    pub fn description(&self) -> &str {
        &self.description
    }
}
