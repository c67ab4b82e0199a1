//! Mixed input points and box bounds for the continuous coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Scalar;

/// A continuous coordinate vector paired with a categorical level.
///
/// Levels are 1-based (`1..=s`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedPoint<T> {
    pub x: Vec<T>,
    pub level: usize,
}

impl<T: Scalar> MixedPoint<T> {
    pub fn new(x: Vec<T>, level: usize) -> Self {
        Self { x, level }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

/// Per-dimension `(lower, upper)` box with `lower < upper`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds<T> {
    ranges: Vec<(T, T)>,
}

impl<T: Scalar> Bounds<T> {
    pub fn new(ranges: Vec<(T, T)>) -> Result<Self> {
        for (d, (lo, hi)) in ranges.iter().enumerate() {
            if !lo.is_finite() || !hi.is_finite() || !(lo < hi) {
                return Err(Error::Domain(format!(
                    "degenerate bounds in dimension {}: ({lo}, {hi})",
                    d + 1
                )));
            }
        }
        Ok(Self { ranges })
    }

    pub fn unit(q: usize) -> Self {
        Self {
            ranges: vec![(T::zero(), T::one()); q],
        }
    }

    pub fn dim(&self) -> usize {
        self.ranges.len()
    }

    pub fn ranges(&self) -> &[(T, T)] {
        &self.ranges
    }

    pub fn contains(&self, x: &[T]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(&self.ranges)
                .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    /// Maps problem coordinates to `[0, 1]`.
    pub fn to_unit(&self, x: &[T]) -> Vec<T> {
        x.iter()
            .zip(&self.ranges)
            .map(|(v, (lo, hi))| (*v - *lo) / (*hi - *lo))
            .collect()
    }

    /// Maps unit coordinates back to the box.
    pub fn from_unit(&self, u: &[T]) -> Vec<T> {
        u.iter()
            .zip(&self.ranges)
            .map(|(v, (lo, hi))| *lo + *v * (*hi - *lo))
            .collect()
    }
}
