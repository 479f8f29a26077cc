use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Ordered, pairwise-disjoint open subintervals of [0, 1].
///
/// Used for envelope divergence sets, for the reflected set fed to
/// concentration, and for concentration targets themselves.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct IntervalSet {
    ivs: Vec<(f64, f64)>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        Self { ivs: Vec::new() }
    }

    /// Builds a set from intervals, sorting and validating disjointness.
    pub fn new(mut ivs: Vec<(f64, f64)>) -> Result<Self> {
        for &(a, b) in &ivs {
            if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) || a >= b {
                return Err(Error::InvalidParameter(format!(
                    "interval ({a}, {b}) is not a nonempty open subinterval of [0,1]"
                )));
            }
        }
        ivs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        for w in ivs.windows(2) {
            if w[0].1 > w[1].0 {
                return Err(Error::InvalidParameter(format!(
                    "intervals ({}, {}) and ({}, {}) overlap",
                    w[0].0, w[0].1, w[1].0, w[1].1
                )));
            }
        }
        Ok(Self { ivs })
    }

    pub fn is_empty(&self) -> bool {
        self.ivs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.ivs.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.ivs.iter().copied()
    }

    pub fn as_slice(&self) -> &[(f64, f64)] {
        &self.ivs
    }

    /// Total Lebesgue measure of the union.
    pub fn measure(&self) -> f64 {
        self.ivs.iter().map(|(a, b)| b - a).sum()
    }

    /// The reflected set {(1-b, 1-a)}.
    pub fn reflect(&self) -> Self {
        let mut ivs: Vec<(f64, f64)> =
            self.ivs.iter().map(|&(a, b)| ((1.0 - b).max(0.0), (1.0 - a).min(1.0))).collect();
        ivs.reverse();
        Self { ivs }
    }

    /// Index of the interval whose half-open form (a, b] contains `t`, if any.
    pub fn find_half_open(&self, t: f64) -> Option<usize> {
        self.ivs.iter().position(|&(a, b)| t > a && t <= b)
    }

    /// Index of the interval whose closed-open form [a, b) contains `t`, if any.
    pub fn find_open_half(&self, t: f64) -> Option<usize> {
        self.ivs.iter().position(|&(a, b)| t >= a && t < b)
    }
}
