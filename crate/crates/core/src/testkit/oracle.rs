use std::collections::{BTreeSet, HashMap};

use crate::datalog::{Constant, Database, Rule, RuleSet, Term, Tuple};
use crate::error::{Error, Result};
use crate::viterbi::WeightVector;

/// Default bound on the count vectors kept for one tuple at one height.
pub const DEFAULT_TREE_LIMIT: usize = 10_000;

/// Rule-occurrence counts of one derivation tree, indexed by rule.
pub type CountVector = Vec<u32>;

struct Clause {
    rule: usize,
    body: Vec<Tuple>,
}

/// Grounds every rule by trying every assignment of its variables over the
/// active domain. Deliberately shares no code with the indexed join.
fn ground_by_substitution(rules: &RuleSet, input: &Database) -> HashMap<Tuple, Vec<Clause>> {
    let mut domain: BTreeSet<Constant> = input.iter().flat_map(|t| t.args.to_vec()).collect();
    for r in rules.iter() {
        for a in std::iter::once(&r.head).chain(&r.body) {
            for t in &a.terms {
                if let Term::Const(c) = t {
                    domain.insert(*c);
                }
            }
        }
    }
    let domain: Vec<Constant> = domain.into_iter().collect();

    let mut out: HashMap<Tuple, Vec<Clause>> = HashMap::new();
    for (idx, rule) in rules.iter().enumerate() {
        let n = rule.var_count();
        if n > 0 && domain.is_empty() {
            continue;
        }
        let mut assignment = vec![0usize; n];
        loop {
            let value = |t: &Term| match *t {
                Term::Var(v) => domain[assignment[v as usize]],
                Term::Const(c) => c,
            };
            let inst = |a: &crate::datalog::Atom| {
                Tuple::new(a.rel, a.terms.iter().map(value).collect::<Vec<_>>())
            };
            let head = inst(&rule.head);
            let body = rule.body.iter().map(inst).collect();
            out.entry(head).or_default().push(Clause { rule: idx, body });

            let mut i = 0;
            while i < n {
                assignment[i] += 1;
                if assignment[i] < domain.len() {
                    break;
                }
                assignment[i] = 0;
                i += 1;
            }
            if i == n {
                break;
            }
        }
    }
    out
}

fn dominates(a: &[u32], b: &[u32]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

/// Keeps only count vectors not dominated by another one. With weights in
/// `[0, 1]`, using each rule no more often never lowers a tree's value.
fn pareto(mut vs: Vec<CountVector>) -> Vec<CountVector> {
    vs.sort();
    vs.dedup();
    let mut keep: Vec<CountVector> = Vec::new();
    // Sorting by total count first means a dominator is always seen before
    // the vectors it dominates.
    vs.sort_by_key(|v| v.iter().sum::<u32>());
    for v in vs {
        if !keep.iter().any(|k| dominates(k, &v)) {
            keep.push(v);
        }
    }
    keep
}

/// Count vectors of the undominated derivation trees of `t` with height at
/// most `depth`. Input tuples are leaves of height zero.
pub fn brute_force_trees(
    rules: &RuleSet,
    input: &Database,
    t: &Tuple,
    depth: usize,
    limit: usize,
) -> Result<Vec<CountVector>> {
    if input.contains(t) {
        return Ok(vec![vec![0; rules.len()]]);
    }
    let mut all = brute_force_all_trees(rules, input, depth, limit)?;
    Ok(all.remove(t).unwrap_or_default())
}

/// [`brute_force_trees`] for every derivable non-input tuple at once.
pub fn brute_force_all_trees(
    rules: &RuleSet,
    input: &Database,
    depth: usize,
    limit: usize,
) -> Result<HashMap<Tuple, Vec<CountVector>>> {
    let clauses = ground_by_substitution(rules, input);
    let zero: CountVector = vec![0; rules.len()];
    let mut level: HashMap<Tuple, Vec<CountVector>> = HashMap::new();
    for d in 1..=depth {
        let mut next: HashMap<Tuple, Vec<CountVector>> = HashMap::new();
        for (head, cs) in &clauses {
            let mut trees: Vec<CountVector> = Vec::new();
            for c in cs {
                let mut partial: Vec<CountVector> = vec![{
                    let mut z = zero.clone();
                    z[c.rule] += 1;
                    z
                }];
                for a in &c.body {
                    let choices: Vec<CountVector> = if input.contains(a) {
                        vec![zero.clone()]
                    } else {
                        level.get(a).cloned().unwrap_or_default()
                    };
                    let mut grown = Vec::with_capacity(partial.len() * choices.len());
                    for p in &partial {
                        for ch in &choices {
                            grown.push(p.iter().zip(ch).map(|(x, y)| x + y).collect());
                        }
                    }
                    if grown.len() > limit {
                        return Err(Error::ExplosionGuard { limit, depth: d });
                    }
                    partial = pareto(grown);
                }
                trees.extend(partial);
                if trees.len() > limit {
                    return Err(Error::ExplosionGuard { limit, depth: d });
                }
            }
            let trees = pareto(trees);
            if !trees.is_empty() {
                next.insert(head.clone(), trees);
            }
        }
        level = next;
    }
    level.retain(|t, _| !input.contains(t));
    Ok(level)
}

pub fn tree_value(w: &WeightVector, counts: &[u32]) -> f64 {
    counts
        .iter()
        .enumerate()
        .map(|(r, &n)| w[r].powi(n as i32))
        .product()
}

/// Largest product of rule weights over the derivation trees of `t` of
/// height at most `depth`, by explicit enumeration.
pub fn brute_force_value(
    rules: &RuleSet,
    w: &WeightVector,
    input: &Database,
    t: &Tuple,
    depth: usize,
) -> Result<f64> {
    let trees = brute_force_trees(rules, input, t, depth, DEFAULT_TREE_LIMIT)?;
    Ok(trees
        .iter()
        .map(|c| tree_value(w, c))
        .fold(0.0, f64::max))
}

/// Count vectors of the trees of `t` attaining [`brute_force_value`].
pub fn brute_force_best_trees(
    rules: &RuleSet,
    w: &WeightVector,
    input: &Database,
    t: &Tuple,
    depth: usize,
) -> Result<Vec<CountVector>> {
    let trees = brute_force_trees(rules, input, t, depth, DEFAULT_TREE_LIMIT)?;
    let best = trees.iter().map(|c| tree_value(w, c)).fold(0.0, f64::max);
    if best == 0.0 {
        return Ok(Vec::new());
    }
    Ok(trees
        .into_iter()
        .filter(|c| (tree_value(w, c) - best).abs() <= 1e-12 * best)
        .collect())
}

/// Smallest subset of `rules` (by bitmask order) whose Boolean fixpoint
/// derives every positive and no negative label, if any exists.
pub fn brute_force_selection(
    rules: &RuleSet,
    input: &Database,
    labels: &crate::datalog::LabelSet,
) -> Option<BTreeSet<usize>> {
    assert!(rules.len() < 24, "too many rules for exhaustive selection");
    (0u32..1 << rules.len()).find_map(|mask| {
        let chosen: Vec<&Rule> = (0..rules.len())
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| &rules[i])
            .collect();
        let derived = naive_closure(&chosen, input);
        let ok = labels.positive.iter().all(|t| derived.contains(t))
            && labels.negative.iter().all(|t| !derived.contains(t));
        ok.then(|| (0..rules.len()).filter(|i| mask >> i & 1 == 1).collect())
    })
}

/// Boolean least fixpoint by substitution grounding.
pub fn naive_closure(rules: &[&Rule], input: &Database) -> BTreeSet<Tuple> {
    let mut set = RuleSet::new();
    for r in rules {
        set.push((*r).clone()).expect("distinct rule ids");
    }
    let clauses = ground_by_substitution(&set, input);
    let mut known: BTreeSet<Tuple> = input.iter().collect();
    loop {
        let before = known.len();
        for (head, cs) in &clauses {
            if !known.contains(head) && cs.iter().any(|c| c.body.iter().all(|a| known.contains(a))) {
                known.insert(head.clone());
            }
        }
        if known.len() == before {
            return known;
        }
    }
}
