use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A parameter sequence indexed by the iteration counter.
///
/// Serialized as a bare number (constant), a list (one value per
/// iteration, the last one repeating), or `{"alternating": [a, b]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Sequence<T> {
    Constant(T),
    Values(Vec<T>),
    Alternating { alternating: [T; 2] },
}

impl<T: Scalar> Sequence<T> {
    pub fn alternating(even: T, odd: T) -> Self {
        Self::Alternating {
            alternating: [even, odd],
        }
    }

    pub fn at(&self, k: usize) -> T {
        match self {
            Self::Constant(v) => *v,
            Self::Values(vs) => vs[k.min(vs.len() - 1)],
            Self::Alternating { alternating } => alternating[k % 2],
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Self::Constant(_) => true,
            Self::Values(vs) => vs.windows(2).all(|w| w[0] == w[1]),
            Self::Alternating { alternating: [a, b] } => a == b,
        }
    }

    /// Every distinct value the sequence takes.
    pub fn support(&self) -> Vec<T> {
        match self {
            Self::Constant(v) => vec![*v],
            Self::Values(vs) => vs.clone(),
            Self::Alternating { alternating } => alternating.to_vec(),
        }
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        match self {
            Self::Constant(v) => Self::Constant(f(*v)),
            Self::Values(vs) => Self::Values(vs.iter().map(|v| f(*v)).collect()),
            Self::Alternating { alternating: [a, b] } => Self::alternating(f(*a), f(*b)),
        }
    }

    /// Rejects empty, non-finite or nonpositive sequences.
    pub fn validate_positive(&self, name: &str) -> Result<()> {
        let values = self.support();
        if values.is_empty() {
            return Err(Error::InvalidParameter(format!("{name} has no values")));
        }
        match values.iter().find(|v| !(v.is_finite() && **v > T::zero())) {
            Some(bad) => Err(Error::InvalidParameter(format!("{name} must be positive, got {bad}"))),
            None => Ok(()),
        }
    }

    pub fn validate_finite(&self, name: &str) -> Result<()> {
        let values = self.support();
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("{name} must be finite and nonempty")));
        }
        Ok(())
    }
}

impl<T> From<T> for Sequence<T> {
    fn from(v: T) -> Self {
        Self::Constant(v)
    }
}
