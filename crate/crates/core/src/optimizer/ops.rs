use std::collections::BTreeSet;

use rand::Rng;

use crate::datalog::LabelSet;
use crate::viterbi::{EvaluationResult, WeightVector, WEIGHT_EPSILON};

/// `Σ_{O+} (1 − v_t)² + Σ_{O−} v_t²`.
pub fn loss(result: &EvaluationResult, labels: &LabelSet) -> f64 {
    let pos: f64 = labels
        .positive
        .iter()
        .map(|t| (1.0 - result.value(t)).powi(2))
        .sum();
    let neg: f64 = labels
        .negative
        .iter()
        .map(|t| result.value(t).powi(2))
        .sum();
    pos + neg
}

/// `∇L = Σ_{O+} −2(1 − v_t)∇v_t + Σ_{O−} 2 v_t ∇v_t`, indexed by rule.
pub fn loss_gradient(result: &EvaluationResult, labels: &LabelSet) -> Vec<f64> {
    let program = result.program();
    let mut g = vec![0.0; program.rule_count()];
    for t in &labels.positive {
        if let Some(id) = program.id(t) {
            let v = result.value_of(id);
            result.add_scaled_gradient(id, -2.0 * (1.0 - v), &mut g);
        }
    }
    for t in &labels.negative {
        if let Some(id) = program.id(t) {
            let v = result.value_of(id);
            result.add_scaled_gradient(id, 2.0 * v, &mut g);
        }
    }
    g
}

/// The loss has a nonzero value but a vanishing gradient, so a Newton step
/// is undefined; the caller should make an annealing move instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZeroGradient;

/// `w − L ∇L / ‖∇L‖²`, clamped to `[ε, 1 − ε]`.
pub fn newton_step(w: &WeightVector, loss: f64, grad: &[f64]) -> Result<WeightVector, ZeroGradient> {
    assert_eq!(w.len(), grad.len());
    if loss == 0.0 {
        return Ok(w.clone());
    }
    let norm2: f64 = grad.iter().map(|g| g * g).sum();
    if norm2 == 0.0 || !norm2.is_finite() {
        return Err(ZeroGradient);
    }
    let scale = loss / norm2;
    let next = w
        .as_slice()
        .iter()
        .zip(grad)
        .map(|(w, g)| (w - scale * g).clamp(WEIGHT_EPSILON, 1.0 - WEIGHT_EPSILON))
        .collect();
    Ok(WeightVector::from_vec_unchecked(next))
}

/// One coordinate of the annealing proposal for a uniform draw `x ∈ [0, 1]`.
pub fn propose_weight(w_old: f64, x: f64) -> f64 {
    let w = if x < 0.5 {
        w_old * (2.0 * x).sqrt()
    } else {
        1.0 - (1.0 - w_old) * (2.0 * (1.0 - x)).sqrt()
    };
    w.clamp(0.0, 1.0)
}

/// Resamples every weight independently with [`propose_weight`].
pub fn mcmc_propose<R: Rng + ?Sized>(w: &WeightVector, rng: &mut R) -> WeightVector {
    let next = w
        .as_slice()
        .iter()
        .map(|&old| propose_weight(old, rng.gen::<f64>()))
        .collect();
    WeightVector::from_vec_unchecked(next)
}

/// Metropolis acceptance for `π = exp(−L/T)`. Never draws from `rng` when
/// the proposal does not increase the loss.
pub fn mcmc_accept<R: Rng + ?Sized>(loss_curr: f64, loss_new: f64, temperature: f64, rng: &mut R) -> bool {
    debug_assert!(temperature > 0.0);
    if loss_new <= loss_curr {
        return true;
    }
    rng.gen::<f64>() < ((loss_curr - loss_new) / temperature).exp()
}

/// `1 / (C · ln(5 + iter))`.
pub fn temperature(iter: u64, c: f64) -> f64 {
    1.0 / (c * (5.0 + iter as f64).ln())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Separation {
    /// The rules used by the best trees of the positive tuples.
    Separated(BTreeSet<usize>),
    Overlapping,
}

/// Compares the rules in the best trees of positive and negative tuples.
///
/// Fails if the sets intersect or if some positive tuple has no derivation.
pub fn separation_check(result: &EvaluationResult, labels: &LabelSet) -> Separation {
    let mut plus = BTreeSet::new();
    for t in &labels.positive {
        let p = result.provenance(t);
        if !p.is_defined() {
            return Separation::Overlapping;
        }
        plus.extend(p.entries().iter().map(|&(r, _)| r as usize));
    }
    for t in &labels.negative {
        if result
            .provenance(t)
            .entries()
            .iter()
            .any(|&(r, _)| plus.contains(&(r as usize)))
        {
            return Separation::Overlapping;
        }
    }
    Separation::Separated(plus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn temperature_schedule() {
        let t0 = temperature(0, 1e-4);
        assert!((t0 - 1.0 / (1e-4 * 5f64.ln())).abs() < 1e-9);
        assert!((t0 - 6213.349345596118).abs() < 1e-6);
        assert!((temperature(25, 1e-4) - 2940.1410379520603).abs() < 1e-6);
        let mut prev = f64::INFINITY;
        for i in 0..1000 {
            let t = temperature(i, 1e-4);
            assert!(t < prev);
            prev = t;
        }
    }

    #[test]
    fn proposal_fixed_points() {
        assert!((propose_weight(0.5, 0.32) - 0.4).abs() < 1e-15);
        for w in [0.0, 0.1, 0.5, 0.9, 1.0] {
            assert!((propose_weight(w, 0.5) - w).abs() < 1e-15);
            assert_eq!(propose_weight(w, 1.0), 1.0);
            assert_eq!(propose_weight(w, 0.0), 0.0);
        }
    }

    #[test]
    fn improvement_is_always_accepted() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            assert!(mcmc_accept(0.5, 0.3, 1e-9, &mut rng));
            assert!(mcmc_accept(0.5, 0.5, 1e-9, &mut rng));
        }
    }

    #[test]
    fn newton_step_cases() {
        let w = WeightVector::new(vec![0.5]).unwrap();
        // v = w, O+ = {t}: L = 0.25, dL/dw = -2(1 - w) = -1.
        let next = newton_step(&w, 0.25, &[-1.0]).unwrap();
        assert!((next[0] - 0.75).abs() < 1e-15);
        assert_eq!(newton_step(&w, 0.0, &[0.0]).unwrap(), w);
        assert_eq!(newton_step(&w, 0.3, &[0.0]), Err(ZeroGradient));
        let low = newton_step(&w, 1.0, &[1.0]).unwrap();
        assert_eq!(low[0], 1e-6);
    }
}
