use std::collections::BTreeSet;

use crate::datalog::RuleSet;
use crate::error::{Error, Result};

/// Lower clamp applied to weights before evaluation inside the optimizer.
pub const WEIGHT_EPSILON: f64 = 1e-6;

/// One weight in `[0, 1]` per candidate rule, indexed like the [`RuleSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(0.0..=1.0).contains(*w))
        {
            return Err(Error::Config(format!("weight {w} of rule #{i} is outside [0, 1]")));
        }
        Ok(Self(weights))
    }

    pub fn uniform(n: usize, value: f64) -> Self {
        assert!((0.0..=1.0).contains(&value));
        Self(vec![value; n])
    }

    /// Weights given by rule id; rules not mentioned get `default`.
    pub fn from_named<'a>(
        rules: &RuleSet,
        named: impl IntoIterator<Item = (&'a str, f64)>,
        default: f64,
    ) -> Result<Self> {
        let mut w = vec![default; rules.len()];
        for (id, value) in named {
            let i = rules
                .index_of(id)
                .ok_or_else(|| Error::UnknownRule(id.to_owned()))?;
            w[i] = value;
        }
        Self::new(w)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn clamped(&self, lo: f64, hi: f64) -> Self {
        Self(self.0.iter().map(|w| w.clamp(lo, hi)).collect())
    }

    /// The interior clamp `[ε, 1 − ε]` used for evaluation during search.
    pub fn interior(&self) -> Self {
        self.clamped(WEIGHT_EPSILON, 1.0 - WEIGHT_EPSILON)
    }

    pub(crate) fn from_vec_unchecked(weights: Vec<f64>) -> Self {
        debug_assert!(weights.iter().all(|w| (0.0..=1.0).contains(w)));
        Self(weights)
    }
}

impl std::ops::Index<usize> for WeightVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Indices of the rules whose weight exceeds `threshold`.
pub fn support(w: &WeightVector, threshold: f64) -> BTreeSet<usize> {
    w.0.iter()
        .enumerate()
        .filter(|(_, &x)| x > threshold)
        .map(|(i, _)| i)
        .collect()
}
