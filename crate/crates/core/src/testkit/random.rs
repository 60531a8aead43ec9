use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::datalog::{
    boolean_fixpoint, Atom, Database, LabelSet, Problem, RelId, RelationKind, Rule, RuleSet, Schema,
    SymbolTable, Term, Tuple,
};

#[derive(Debug, Clone, Copy)]
pub struct InstanceParams {
    pub constants: usize,
    pub input_relations: usize,
    pub output_relations: usize,
    pub max_arity: usize,
    /// Facts drawn per input relation (duplicates merge).
    pub facts_per_relation: usize,
    pub rules: usize,
    pub max_body_len: usize,
    /// Size of the variable pool each rule draws from.
    pub max_vars: usize,
}

impl Default for InstanceParams {
    fn default() -> Self {
        Self {
            constants: 4,
            input_relations: 2,
            output_relations: 1,
            max_arity: 2,
            facts_per_relation: 4,
            rules: 4,
            max_body_len: 2,
            max_vars: 3,
        }
    }
}

/// A small random problem. Labels come from a random target subset of the
/// candidates: its derived outputs are positive, and outputs only the full
/// candidate set derives are negative.
pub fn random_instance<R: Rng + ?Sized>(rng: &mut R, params: &InstanceParams) -> Problem {
    let mut schema = Schema::new();
    let mut symbols = SymbolTable::new();
    let arity = |rng: &mut R| rng.gen_range(1..=params.max_arity.max(1));

    let inputs: Vec<RelId> = (0..params.input_relations)
        .map(|i| {
            let a = arity(rng);
            schema.declare(&format!("in{i}"), a, RelationKind::Input).expect("fresh name")
        })
        .collect();
    let outputs: Vec<RelId> = (0..params.output_relations)
        .map(|i| {
            let a = arity(rng);
            schema.declare(&format!("out{i}"), a, RelationKind::Output).expect("fresh name")
        })
        .collect();
    let constants: Vec<_> = (0..params.constants)
        .map(|i| symbols.intern(&format!("c{i}")))
        .collect();

    let mut input = Database::new();
    if !constants.is_empty() {
        for &rel in &inputs {
            for _ in 0..params.facts_per_relation {
                let args: Vec<_> = (0..schema.decl(rel).arity)
                    .map(|_| *constants.choose(rng).expect("nonempty"))
                    .collect();
                input.insert(Tuple::new(rel, args));
            }
        }
    }

    let all: Vec<RelId> = inputs.iter().chain(&outputs).copied().collect();
    let mut rules = RuleSet::new();
    if !outputs.is_empty() && !all.is_empty() {
        let pool = params.max_vars.max(1) as u32;
        let mut seen = BTreeSet::new();
        let mut attempts = 0;
        while rules.len() < params.rules && attempts < params.rules * 20 {
            attempts += 1;
            let head_rel = *outputs.choose(rng).expect("nonempty");
            let body_len = rng.gen_range(1..=params.max_body_len.max(1));
            let body: Vec<Atom> = (0..body_len)
                .map(|_| {
                    let rel = *all.choose(rng).expect("nonempty");
                    let terms = (0..schema.decl(rel).arity)
                        .map(|_| Term::Var(rng.gen_range(0..pool)))
                        .collect();
                    Atom::new(rel, terms)
                })
                .collect();
            let body_vars: Vec<u32> = body.iter().flat_map(Atom::vars).collect();
            let head_terms = (0..schema.decl(head_rel).arity)
                .map(|_| Term::Var(*body_vars.choose(rng).expect("body atoms have arity >= 1")))
                .collect();
            let head = Atom::new(head_rel, head_terms);
            let canon = crate::rulegen::canonicalize(&head, &body);
            if !seen.insert(canon.clone()) {
                continue;
            }
            let id = format!("r{}", rules.len() + 1);
            rules.push(canon.to_rule(id)).expect("unique ids");
        }
    }

    let target: Vec<&Rule> = rules.iter().filter(|_| rng.gen_bool(0.5)).collect();
    let wanted = boolean_fixpoint(target, &input);
    let everything = boolean_fixpoint(rules.iter(), &input);
    let is_out = |t: &Tuple| schema.is_output(t.rel);
    let positive: BTreeSet<Tuple> = wanted.iter().filter(is_out).collect();
    let negative: BTreeSet<Tuple> = everything
        .iter()
        .filter(|t| is_out(t) && !wanted.contains(t))
        .collect();

    Problem {
        labels: LabelSet::new(positive, negative).expect("disjoint by construction"),
        schema,
        symbols,
        input,
        rules,
    }
}
