use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

/// One real attribute per actor. Entries are always finite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AttributeVector<T> {
    values: Vec<T>,
}

impl<T: Real> AttributeVector<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("attribute of actor {} is not finite", i + 1)));
        }
        Ok(Self { values })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    pub fn get(&self, i: usize) -> T {
        self.values[i]
    }

    pub fn mean(&self) -> T {
        let n = T::from_usize(self.len()).unwrap();
        self.values.iter().copied().sum::<T>() / n
    }

    /// Sample variance with `n - 1` in the denominator (0 for a single value).
    pub fn sample_variance(&self) -> T {
        let n = self.len();
        if n < 2 {
            return T::zero();
        }
        let m = self.mean();
        let ss: T = self.values.iter().map(|&v| (v - m) * (v - m)).sum();
        ss / T::from_usize(n - 1).unwrap()
    }

    /// Centered and scaled to unit sample variance.
    pub fn standardized(&self) -> Result<Self> {
        let var = self.sample_variance();
        if !(var > T::zero()) {
            return Err(Error::invalid("cannot standardize attributes with zero variance"));
        }
        let m = self.mean();
        let s = var.sqrt();
        Ok(Self {
            values: self.values.iter().map(|&v| (v - m) / s).collect(),
        })
    }

    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut values = vec![T::zero(); self.len()];
        for (i, &p) in perm.iter().enumerate() {
            values[p] = self.values[i];
        }
        Self { values }
    }

    pub fn into_inner(self) -> Vec<T> {
        self.values
    }
}
