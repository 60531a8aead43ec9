//! Randomized checks of the weighted semantics, shared by the property
//! tests and the acceptance suite. Each returns a description of the first
//! violation found.

use std::sync::Arc;

use rand::Rng;

use super::oracle::{brute_force_all_trees, tree_value, DEFAULT_TREE_LIMIT};
use crate::datalog::{boolean_fixpoint, Problem};
use crate::exec::Exec;
use crate::viterbi::{gradient, support, GroundProgram, WeightVector};

pub type CheckResult = std::result::Result<(), String>;

fn program(p: &Problem) -> Arc<GroundProgram> {
    Arc::new(GroundProgram::build(&p.rules, &p.input, Exec::Sequential))
}

fn random_weights<R: Rng + ?Sized>(rng: &mut R, n: usize, lo: f64, hi: f64) -> WeightVector {
    WeightVector::new((0..n).map(|_| rng.gen_range(lo..hi)).collect()).expect("in range")
}

/// Positive-valued outputs equal the Boolean fixpoint of the support, for
/// random weights with a random subset set to zero.
pub fn refinement<R: Rng + ?Sized>(p: &Problem, rng: &mut R) -> CheckResult {
    let n = p.rules.len();
    let w: Vec<f64> = (0..n)
        .map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.01..=1.0) })
        .collect();
    let w = WeightVector::new(w).expect("in range");
    let result = program(p).evaluate(&w, Exec::Sequential);
    let positive = result.derived().filter(|rel| p.schema.is_output(rel));
    let boolean = boolean_fixpoint(p.rules.subset(support(&w, 0.0)), &p.input)
        .filter(|rel| p.schema.is_output(rel));
    if positive == boolean {
        Ok(())
    } else {
        Err(format!(
            "weights {:?}: {} positive-valued outputs, Boolean fixpoint has {}",
            w.as_slice(),
            positive.len(),
            boolean.len()
        ))
    }
}

/// Raising weights never lowers a value.
pub fn monotonicity<R: Rng + ?Sized>(p: &Problem, rng: &mut R) -> CheckResult {
    let n = p.rules.len();
    let lower: Vec<f64> = (0..n)
        .map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen::<f64>() })
        .collect();
    let upper: Vec<f64> = lower
        .iter()
        .map(|&w| if rng.gen_bool(0.3) { w } else { rng.gen_range(w..=1.0) })
        .collect();
    let g = program(p);
    let a = g.evaluate(&WeightVector::new(lower.clone()).expect("in range"), Exec::Sequential);
    let b = g.evaluate(&WeightVector::new(upper.clone()).expect("in range"), Exec::Sequential);
    for id in 0..g.tuple_count() as u32 {
        if a.value_of(id) > b.value_of(id) {
            return Err(format!(
                "{:?}: {} at {lower:?} but {} at {upper:?}",
                g.tuple(id),
                a.value_of(id),
                b.value_of(id)
            ));
        }
    }
    Ok(())
}

/// Along random directions from an interior point the largest change in
/// any value shrinks with the step and vanishes in the limit.
pub fn continuity<R: Rng + ?Sized>(p: &Problem, rng: &mut R, directions: usize) -> CheckResult {
    let n = p.rules.len();
    let g = program(p);
    let w = random_weights(rng, n, 0.1, 0.9);
    let base = g.evaluate(&w, Exec::Sequential);
    for _ in 0..directions {
        let d: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = d.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        let mut previous = f64::INFINITY;
        for step in [1e-2, 1e-4, 1e-6, 1e-8] {
            let moved: Vec<f64> = w
                .as_slice()
                .iter()
                .zip(&d)
                .map(|(x, dx)| x + step * dx / norm)
                .collect();
            let r = g.evaluate(&WeightVector::new(moved).expect("inside the cube"), Exec::Sequential);
            let change = (0..g.tuple_count() as u32)
                .map(|id| (r.value_of(id) - base.value_of(id)).abs())
                .fold(0.0, f64::max);
            if change > previous + 1e-15 {
                return Err(format!("change grew to {change} at step {step}"));
            }
            previous = change;
        }
        if previous > 1e-6 {
            return Err(format!("change {previous} at step 1e-8"));
        }
    }
    Ok(())
}

/// Values match derivation-tree enumeration at depth equal to the number of
/// derivable tuples, and the fixpoint needs at most one round more than that.
pub fn oracle_equivalence<R: Rng + ?Sized>(p: &Problem, rng: &mut R) -> CheckResult {
    let n = p.rules.len();
    let g = program(p);
    let w = random_weights(rng, n, 0.05, 1.0);
    let result = g.evaluate(&w, Exec::Sequential);
    let derivable = g.tuple_count() - g.input_count();
    if result.rounds() > derivable + 1 {
        return Err(format!("{} rounds for {derivable} derivable tuples", result.rounds()));
    }
    let trees = brute_force_all_trees(&p.rules, &p.input, derivable, DEFAULT_TREE_LIMIT)
        .map_err(|e| e.to_string())?;
    if trees.len() != derivable {
        return Err(format!("oracle derives {} tuples, evaluate {derivable}", trees.len()));
    }
    for (t, counts) in &trees {
        let want = counts.iter().map(|c| tree_value(&w, c)).fold(0.0, f64::max);
        let got = result.value(t);
        if (got - want).abs() > 1e-12 {
            return Err(format!("{t:?}: evaluate {got}, oracle {want}"));
        }
    }
    Ok(())
}

/// Provenance gradients agree with central differences (`h = 1e-6`) at a
/// point where no value is tied between trees. Returns `Ok(false)` when no
/// tie-free point turned up.
pub fn gradient_agreement<R: Rng + ?Sized>(p: &Problem, rng: &mut R) -> std::result::Result<bool, String> {
    const H: f64 = 1e-6;
    let n = p.rules.len();
    let g = program(p);
    let outputs: Vec<u32> = (g.input_count() as u32..g.tuple_count() as u32).collect();
    'draw: for _ in 0..20 {
        let w = random_weights(rng, n, 0.1, 0.9);
        let at = |k: usize, delta: f64| {
            let mut v = w.as_slice().to_vec();
            v[k] += delta;
            g.evaluate(&WeightVector::new(v).expect("interior"), Exec::Sequential)
        };
        let centre = g.evaluate(&w, Exec::Sequential);
        let shifted: Vec<_> = (0..n).map(|k| (at(k, H), at(k, -H))).collect();
        for &id in &outputs {
            let t = g.tuple(id);
            let analytic = gradient(&centre, &w, t, &p.schema).map_err(|e| e.to_string())?;
            for (k, (up, down)) in shifted.iter().enumerate() {
                let right = (up.value_of(id) - centre.value_of(id)) / H;
                let left = (centre.value_of(id) - down.value_of(id)) / H;
                // A kink means two trees tie here; draw another point.
                if (right - left).abs() > 1e-4 * right.abs().max(left.abs()).max(1e-6) {
                    continue 'draw;
                }
                let numeric = (up.value_of(id) - down.value_of(id)) / (2.0 * H);
                let scale = numeric.abs().max(analytic[k].abs()).max(1e-6);
                if (analytic[k] - numeric).abs() > 1e-5 * scale {
                    return Err(format!("{t:?} rule {k}: provenance {}, numeric {numeric}", analytic[k]));
                }
            }
        }
        return Ok(true);
    }
    Ok(false)
}
