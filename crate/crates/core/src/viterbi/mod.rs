//! Weighted evaluation under the Viterbi semiring `([0,1], max, ×, 0, 1)`.
//!
//! The value of a tuple is the largest product of rule weights over its
//! derivation trees; its provenance counts the rule occurrences in one such
//! best tree. Because the best tree is a monomial in the weights, the
//! provenance gives the gradient directly: `∂v_t/∂w_r = l_t(r) v_t / w_r`.

mod program;
mod weights;

use std::sync::Arc;

pub use program::{EvaluationResult, GroundProgram, Provenance, TupleId};
pub use weights::{support, WeightVector, WEIGHT_EPSILON};

use crate::datalog::{Database, RuleSet, Schema, SymbolTable, Tuple};
use crate::error::{Error, Result};
use crate::exec::Exec;

/// Grounds `rules` over `input` and evaluates them at `w`.
pub fn evaluate(rules: &RuleSet, w: &WeightVector, input: &Database) -> EvaluationResult {
    let exec = Exec::default();
    Arc::new(GroundProgram::build(rules, input, exec)).evaluate(w, exec)
}

/// `∂v_t/∂w_r` for every rule `r`, from the provenance of `t`.
///
/// Tuples without a derivation have a zero gradient. Fails when `t` does
/// not belong to an output relation of `schema`.
pub fn gradient(
    result: &EvaluationResult,
    w: &WeightVector,
    t: &Tuple,
    schema: &Schema,
) -> Result<Vec<f64>> {
    if t.rel.index() >= schema.len() || !schema.is_output(t.rel) {
        return Err(Error::UndefinedTuple(format!("{t:?}")));
    }
    let v = result.value(t);
    let mut g = vec![0.0; w.len()];
    for &(r, n) in result.provenance(t).entries() {
        g[r as usize] = n as f64 * v / w[r as usize];
    }
    Ok(g)
}

/// Renders provenance as `id:count` pairs joined by commas, in rule order.
pub fn format_provenance(p: &Provenance, rules: &RuleSet) -> String {
    match p {
        Provenance::Undefined => "undefined".to_owned(),
        Provenance::Counts(c) => c
            .iter()
            .map(|&(r, n)| format!("{}:{n}", rules[r as usize].id))
            .collect::<Vec<_>>()
            .join(","),
    }
}

/// TSV dump of every derived output tuple: relation, constants, value,
/// provenance. Rows are sorted lexicographically; the header is
/// `tuple\tvalue\tprovenance`, where the tuple spans `1 + arity` fields.
pub fn dump_tsv(result: &EvaluationResult, rules: &RuleSet, schema: &Schema, symbols: &SymbolTable) -> String {
    let program = result.program();
    let mut rows: Vec<String> = result
        .derived_ids()
        .filter(|&i| schema.is_output(program.tuple(i).rel))
        .map(|i| {
            let t = program.tuple(i);
            let mut fields = vec![schema.decl(t.rel).name.clone()];
            fields.extend(t.args.iter().map(|&c| symbols.name(c).to_owned()));
            fields.push(format!("{}", result.value_of(i)));
            fields.push(format_provenance(result.provenance_of(i), rules));
            fields.join("\t")
        })
        .collect();
    rows.sort();
    let mut out = String::from("tuple\tvalue\tprovenance\n");
    for r in rows {
        out.push_str(&r);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datalog::boolean_fixpoint;
    use crate::testkit::fixtures::family;

    fn weights(a: f64, b: f64) -> WeightVector {
        WeightVector::new(vec![a, b]).unwrap()
    }

    #[test]
    fn family_values_and_provenance() {
        let p = family();
        let r = evaluate(&p.rules, &weights(0.8, 0.6), &p.input);
        let will_ann = p.tuple("samegen", &["Will", "Ann"]).unwrap();
        assert!((r.value(&will_ann) - 0.8).abs() < 1e-12);
        assert_eq!(r.provenance(&will_ann), &Provenance::Counts(vec![(0, 1)]));
        let ann_jim = p.tuple("samegen", &["Ann", "Jim"]).unwrap();
        assert!((r.value(&ann_jim) - 0.48).abs() < 1e-12);
        assert_eq!(r.provenance(&ann_jim), &Provenance::Counts(vec![(0, 1), (1, 1)]));

        let parent = p.tuple("parent", &["Will", "Noah"]).unwrap();
        assert_eq!(r.value(&parent), 1.0);
        assert_eq!(r.provenance(&parent), &Provenance::zero());
        let ava_liam = p.tuple("samegen", &["Ava", "Liam"]).unwrap();
        assert_eq!(r.value(&ava_liam), 0.0);
        assert!(!r.provenance(&ava_liam).is_defined());
    }

    fn finite_difference(p: &crate::datalog::Problem, w: &WeightVector, t: &Tuple, r: usize) -> f64 {
        let h = 1e-6;
        let mut up = w.as_slice().to_vec();
        let mut down = up.clone();
        up[r] += h;
        down[r] -= h;
        let v = |x: Vec<f64>| evaluate(&p.rules, &WeightVector::new(x).unwrap(), &p.input).value(t);
        (v(up) - v(down)) / (2.0 * h)
    }

    #[test]
    fn gradients_match_finite_differences() {
        let p = family();
        let w = weights(0.8, 0.6);
        let r = evaluate(&p.rules, &w, &p.input);
        for (pair, want) in [(["Ann", "Jim"], [0.6, 0.8]), (["Will", "Ann"], [1.0, 0.0])] {
            let t = p.tuple("samegen", &pair).unwrap();
            let g = gradient(&r, &w, &t, &p.schema).unwrap();
            for k in 0..2 {
                assert!((g[k] - want[k]).abs() < 1e-12, "{pair:?} r{k}: {}", g[k]);
                let fd = finite_difference(&p, &w, &t, k);
                assert!((g[k] - fd).abs() <= 1e-5 * want[k].abs().max(1e-3), "{pair:?} r{k}: {fd}");
            }
        }
    }

    #[test]
    fn gradient_edge_cases() {
        let p = family();
        let w = weights(0.8, 0.6);
        let r = evaluate(&p.rules, &w, &p.input);
        let ava_liam = p.tuple("samegen", &["Ava", "Liam"]).unwrap();
        assert_eq!(gradient(&r, &w, &ava_liam, &p.schema).unwrap(), vec![0.0, 0.0]);
        let parent = p.tuple("parent", &["Will", "Noah"]).unwrap();
        assert!(matches!(gradient(&r, &w, &parent, &p.schema), Err(Error::UndefinedTuple(_))));
    }

    #[test]
    fn unit_weights_give_boolean_semantics() {
        let p = family();
        let r = evaluate(&p.rules, &WeightVector::uniform(2, 1.0), &p.input);
        let mut boolean = boolean_fixpoint(p.rules.iter(), &p.input);
        for t in r.derived().iter() {
            assert_eq!(r.value(&t), 1.0);
        }
        let derived = r.derived();
        boolean = boolean.filter(|rel| p.schema.is_output(rel));
        assert_eq!(derived, boolean);
        assert!(r.rounds() <= derived.len() + 1);
    }

    #[test]
    fn zero_weight_rule_derives_nothing() {
        let p = family();
        let r = evaluate(&p.rules, &weights(0.0, 0.6), &p.input);
        assert!(r.derived().is_empty());
        let r = evaluate(&p.rules, &weights(0.7, 0.0), &p.input);
        let only_r1 = boolean_fixpoint([&p.rules[0]], &p.input).filter(|rel| p.schema.is_output(rel));
        assert_eq!(r.derived(), only_r1);
    }

    #[test]
    fn tsv_dump() {
        let p = family();
        let r = evaluate(&p.rules, &weights(0.8, 0.6), &p.input);
        let text = dump_tsv(&r, &p.rules, &p.schema, &p.symbols);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("tuple\tvalue\tprovenance"));
        let rows: Vec<&str> = lines.collect();
        assert_eq!(rows.len(), 20);
        assert!(rows.contains(&"samegen\tWill\tAnn\t0.8\tr1:1"));
        assert!(rows.contains(&"samegen\tAnn\tJim\t0.48\tr1:1,r2:1"));
        let mut sorted = rows.clone();
        sorted.sort();
        assert_eq!(rows, sorted);
    }

    #[test]
    fn execution_modes_agree() {
        let p = family();
        let w = weights(0.8, 0.6);
        let program = Arc::new(GroundProgram::build(&p.rules, &p.input, Exec::Sequential));
        let a = program.evaluate(&w, Exec::Sequential);
        let b = program.evaluate(&w, Exec::Parallel);
        assert_eq!(a.derived(), b.derived());
        for id in a.derived_ids() {
            assert_eq!(a.value_of(id), b.value_of(id));
            assert_eq!(a.provenance_of(id), b.provenance_of(id));
        }
    }

    #[test]
    fn detached_literals_match_the_oracle() {
        use crate::testkit::fixtures::family_with_rules;
        use crate::testkit::{brute_force_all_trees, tree_value, DEFAULT_TREE_LIMIT};
        let p = family_with_rules(
            "r1: samegen(x, y) :- parent(x, z), parent(y, z).\n\
             r2: samegen(x, u) :- samegen(x, y), parent(a, b), parent(u, y).\n\
             r3: samegen(x, y) :- parent(y, x), samegen(a, b).\n",
        );
        let w = WeightVector::new(vec![0.9, 0.7, 0.5]).unwrap();
        let program = Arc::new(GroundProgram::build(&p.rules, &p.input, Exec::Sequential));
        let r = program.evaluate(&w, Exec::Sequential);
        let trees = brute_force_all_trees(&p.rules, &p.input, 5, DEFAULT_TREE_LIMIT).unwrap();
        assert_eq!(r.derived_ids().count(), trees.len());
        for id in r.derived_ids() {
            let t = program.tuple(id);
            let want = trees[t].iter().map(|c| tree_value(&w, c)).fold(0.0, f64::max);
            assert!((r.value(t) - want).abs() < 1e-12, "{t:?}");
            let counts: Vec<u32> = (0..3).map(|k| r.provenance(t).count(k).unwrap()).collect();
            assert!((tree_value(&w, &counts) - want).abs() < 1e-12, "{t:?}: {counts:?}");
        }
    }
}
