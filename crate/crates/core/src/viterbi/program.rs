use std::collections::HashMap;
use std::sync::Arc;

use super::weights::WeightVector;
use crate::datalog::{
    boolean_fixpoint_semi_naive, for_each_binding, instantiate, Atom, Constant, Database,
    FactIndex, Rule, RuleSet, Term, Tuple,
};
use crate::exec::Exec;

/// Index of a tuple in a [`GroundProgram`].
pub type TupleId = u32;

#[derive(Debug, Clone)]
pub(crate) struct Clause {
    pub rule: u32,
    pub antecedents: Box<[TupleId]>,
    /// Indices into `GroundProgram::factors`.
    pub factors: Box<[u32]>,
}

/// A group of body atoms connected through variables that do not occur in
/// the head, as a rule of its own with dense variable numbering and its
/// first atom as a placeholder head.
struct Part {
    rule: Rule,
    /// `(variable in the original rule, variable in this part)` for every
    /// head variable the part mentions.
    key_vars: Vec<(u32, u32)>,
}

fn split_body(rule: &Rule) -> Vec<Part> {
    let head_vars: Vec<u32> = rule.head.vars().collect();
    let inner = |a: &Atom| a.vars().filter(|v| !head_vars.contains(v)).collect::<Vec<_>>();
    let n = rule.body.len();
    let mut root: Vec<usize> = (0..n).collect();
    fn find(c: &mut [usize], mut i: usize) -> usize {
        while c[i] != i {
            i = c[i];
        }
        i
    }
    for i in 0..n {
        let vi = inner(&rule.body[i]);
        for j in i + 1..n {
            if inner(&rule.body[j]).iter().any(|v| vi.contains(v)) {
                let (a, b) = (find(&mut root, i), find(&mut root, j));
                root[a.max(b)] = a.min(b);
            }
        }
    }

    let mut groups: Vec<(usize, Vec<&Atom>)> = Vec::new();
    for (i, atom) in rule.body.iter().enumerate() {
        let r = find(&mut root, i);
        match groups.iter_mut().find(|(g, _)| *g == r) {
            Some((_, atoms)) => atoms.push(atom),
            None => groups.push((r, vec![atom])),
        }
    }
    groups
        .into_iter()
        .map(|(_, atoms)| {
            let mut map: Vec<(u32, u32)> = Vec::new();
            let body: Vec<Atom> = atoms
                .iter()
                .map(|a| {
                    let terms = a
                        .terms
                        .iter()
                        .map(|t| match *t {
                            Term::Var(v) => {
                                let local = match map.iter().find(|(o, _)| *o == v) {
                                    Some(&(_, l)) => l,
                                    None => {
                                        map.push((v, map.len() as u32));
                                        map.len() as u32 - 1
                                    }
                                };
                                Term::Var(local)
                            }
                            c => c,
                        })
                        .collect();
                    Atom::new(a.rel, terms)
                })
                .collect();
            map.retain(|(o, _)| head_vars.contains(o));
            Part {
                rule: Rule::with_generated_names(rule.id.clone(), body[0].clone(), body),
                key_vars: map,
            }
        })
        .collect()
}

/// How one key of a part enters a clause.
#[derive(Clone, Copy)]
enum Contribution {
    /// The key has a single grounding, stored inline.
    Inline(usize),
    /// Several groundings, kept as a factor (rule-local index).
    Factor(u32),
}

struct PartGrounding {
    keys: Vec<Box<[Constant]>>,
    groundings: Vec<Vec<Box<[TupleId]>>>,
    contribution: Vec<Contribution>,
}

/// Enumerates the head bindings that agree with one key of every part.
fn join_keys(
    parts: &[Part],
    grounded: &[PartGrounding],
    depth: usize,
    binding: &mut [Option<Constant>],
    chosen: &mut Vec<usize>,
    f: &mut impl FnMut(&[Option<Constant>], &[usize]),
) {
    let Some(part) = parts.get(depth) else {
        f(binding, chosen);
        return;
    };
    for (k, key) in grounded[depth].keys.iter().enumerate() {
        let mut set: Vec<u32> = Vec::new();
        let mut ok = true;
        for (&(v, _), &c) in part.key_vars.iter().zip(key.iter()) {
            match binding[v as usize] {
                Some(b) if b != c => {
                    ok = false;
                    break;
                }
                Some(_) => {}
                None => {
                    binding[v as usize] = Some(c);
                    set.push(v);
                }
            }
        }
        if ok {
            chosen.push(k);
            join_keys(parts, grounded, depth + 1, binding, chosen, f);
            chosen.pop();
        }
        for v in set {
            binding[v as usize] = None;
        }
    }
}

/// The ground clauses of a candidate rule set over an input database.
///
/// Every tuple any candidate can derive is interned once (input tuples
/// first), and each derived tuple lists the clauses concluding it. With all
/// weights positive the set of tuples with a nonzero value is exactly this
/// universe, and zero-weight rules only contribute zero-valued trees, so one
/// grounding serves every weight vector.
#[derive(Debug)]
pub struct GroundProgram {
    tuples: Vec<Tuple>,
    ids: HashMap<Tuple, TupleId>,
    input_len: usize,
    clauses: Vec<Vec<Clause>>,
    /// Alternative groundings of one body part under one binding of its
    /// head variables. Parts of a rule share only head variables, so once
    /// the head is fixed each contributes its best grounding independently;
    /// storing them apart keeps existential variables from multiplying the
    /// clause count.
    factors: Vec<Vec<Box<[TupleId]>>>,
    rule_count: usize,
}

impl GroundProgram {
    pub fn build(rules: &RuleSet, input: &Database, exec: Exec) -> Self {
        let closure = boolean_fixpoint_semi_naive(rules.iter(), input);

        let mut tuples: Vec<Tuple> = input.iter().collect();
        let input_len = tuples.len();
        tuples.extend(closure.iter().filter(|t| !input.contains(t)));
        tuples[input_len..].sort();
        let ids: HashMap<Tuple, TupleId> = tuples
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as TupleId))
            .collect();

        let index = FactIndex::new(&closure);
        let sources = |rule: &Rule| vec![&index; rule.body.len()];
        type Grounded = (Vec<(TupleId, Clause)>, Vec<Vec<Box<[TupleId]>>>);
        let per_rule: Vec<Grounded> = exec.map(rules.rules(), |rule| {
            let rule_idx = rules.index_of(&rule.id).expect("rule from its own set") as u32;
            let parts = split_body(rule);
            let mut factors: Vec<Vec<Box<[TupleId]>>> = Vec::new();
            let mut grounded: Vec<PartGrounding> = Vec::with_capacity(parts.len());
            for part in &parts {
                let mut slot: HashMap<Box<[Constant]>, usize> = HashMap::new();
                let mut g = PartGrounding {
                    keys: Vec::new(),
                    groundings: Vec::new(),
                    contribution: Vec::new(),
                };
                for_each_binding(&part.rule, &sources(&part.rule), |b| {
                    let key: Box<[Constant]> =
                        part.key_vars.iter().map(|&(_, l)| b[l as usize]).collect();
                    let k = *slot.entry(key.clone()).or_insert_with(|| {
                        g.keys.push(key);
                        g.groundings.push(Vec::new());
                        g.keys.len() - 1
                    });
                    g.groundings[k]
                        .push(part.rule.body.iter().map(|a| ids[&instantiate(a, b)]).collect());
                });
                if g.keys.is_empty() {
                    return (Vec::new(), Vec::new());
                }
                for alternatives in &mut g.groundings {
                    g.contribution.push(if alternatives.len() == 1 {
                        Contribution::Inline(g.contribution.len())
                    } else {
                        factors.push(std::mem::take(alternatives));
                        Contribution::Factor(factors.len() as u32 - 1)
                    });
                }
                grounded.push(g);
            }

            let mut out = Vec::new();
            let mut binding = vec![None; rule.var_count()];
            join_keys(&parts, &grounded, 0, &mut binding, &mut Vec::new(), &mut |b, chosen| {
                let args: Vec<Constant> = rule
                    .head
                    .terms
                    .iter()
                    .map(|t| match *t {
                        Term::Var(v) => b[v as usize].expect("head variable bound by the body"),
                        Term::Const(c) => c,
                    })
                    .collect();
                let head = ids[&Tuple::new(rule.head.rel, args)];
                let mut antecedents = Vec::new();
                let mut local = Vec::new();
                for (g, &k) in grounded.iter().zip(chosen) {
                    match g.contribution[k] {
                        Contribution::Inline(i) => antecedents.extend_from_slice(&g.groundings[i][0]),
                        Contribution::Factor(f) => local.push(f),
                    }
                }
                out.push((
                    head,
                    Clause {
                        rule: rule_idx,
                        antecedents: antecedents.into(),
                        factors: local.into(),
                    },
                ));
            });
            (out, factors)
        });

        let mut clauses: Vec<Vec<Clause>> = vec![Vec::new(); tuples.len()];
        let mut factors: Vec<Vec<Box<[TupleId]>>> = Vec::new();
        for (grounded, rule_factors) in per_rule {
            let first = factors.len() as u32;
            factors.extend(rule_factors);
            for (head, mut clause) in grounded {
                for f in clause.factors.iter_mut() {
                    *f += first;
                }
                clauses[head as usize].push(clause);
            }
        }

        Self {
            tuples,
            ids,
            input_len,
            clauses,
            factors,
            rule_count: rules.len(),
        }
    }

    pub fn tuple_count(&self) -> usize {
        self.tuples.len()
    }

    pub fn input_count(&self) -> usize {
        self.input_len
    }

    /// Stored clauses plus the groundings of detached body components.
    pub fn clause_count(&self) -> usize {
        self.clauses.iter().map(Vec::len).sum::<usize>()
            + self.factors.iter().map(Vec::len).sum::<usize>()
    }

    pub fn rule_count(&self) -> usize {
        self.rule_count
    }

    pub fn tuple(&self, id: TupleId) -> &Tuple {
        &self.tuples[id as usize]
    }

    pub fn id(&self, t: &Tuple) -> Option<TupleId> {
        self.ids.get(t).copied()
    }

    pub fn is_input(&self, id: TupleId) -> bool {
        (id as usize) < self.input_len
    }

    /// Max-product fixpoint with provenance.
    ///
    /// Each round recomputes every derived tuple from the previous round's
    /// values and keeps the incumbent unless a clause is strictly better.
    /// Stops on the first round that changes nothing.
    pub fn evaluate(self: &Arc<Self>, w: &WeightVector, exec: Exec) -> EvaluationResult {
        assert_eq!(w.len(), self.rule_count, "one weight per candidate rule");
        let n = self.tuples.len();
        let mut values = vec![0.0; n];
        let mut provenance = vec![Provenance::Undefined; n];
        for i in 0..self.input_len {
            values[i] = 1.0;
            provenance[i] = Provenance::zero();
        }

        let derived = n - self.input_len;
        let weights = w.as_slice();
        let mut rounds = 0;
        loop {
            rounds += 1;
            let factor_best: Vec<(f64, usize)> = exec.map_range_chunked(self.factors.len(), 256, |f| {
                let mut best = (0.0, 0);
                for (g, atoms) in self.factors[f].iter().enumerate() {
                    let v: f64 = atoms.iter().map(|&a| values[a as usize]).product();
                    if v > best.0 {
                        best = (v, g);
                    }
                }
                best
            });
            let updates: Vec<Option<(f64, Provenance)>> =
                exec.map_range_chunked(derived, 256, |k| {
                    let t = self.input_len + k;
                    let mut best = values[t];
                    let mut pick: Option<&Clause> = None;
                    for c in &self.clauses[t] {
                        let mut v = weights[c.rule as usize];
                        for &a in c.antecedents.iter() {
                            v *= values[a as usize];
                        }
                        for &f in c.factors.iter() {
                            v *= factor_best[f as usize].0;
                        }
                        if v > best {
                            best = v;
                            pick = Some(c);
                        }
                    }
                    pick.map(|c| {
                        let detached = c.factors.iter().flat_map(|&f| {
                            self.factors[f as usize][factor_best[f as usize].1].iter()
                        });
                        let prov = Provenance::combine(
                            c.rule,
                            c.antecedents
                                .iter()
                                .chain(detached)
                                .map(|&a| &provenance[a as usize]),
                        );
                        (best, prov)
                    })
                });
            let mut changed = false;
            for (k, update) in updates.into_iter().enumerate() {
                if let Some((v, prov)) = update {
                    values[self.input_len + k] = v;
                    provenance[self.input_len + k] = prov;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }

        EvaluationResult {
            program: Arc::clone(self),
            weights: w.clone(),
            values,
            provenance,
            rounds,
        }
    }
}

/// Rule-occurrence counts of one value-maximal derivation tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    /// No derivation tree with a positive value.
    Undefined,
    /// Sorted `(rule index, count)` pairs with positive counts.
    Counts(Vec<(u32, u32)>),
}

impl Provenance {
    pub fn zero() -> Self {
        Provenance::Counts(Vec::new())
    }

    pub fn is_defined(&self) -> bool {
        matches!(self, Provenance::Counts(_))
    }

    /// Occurrences of `rule`; `None` when undefined.
    pub fn count(&self, rule: usize) -> Option<u32> {
        match self {
            Provenance::Undefined => None,
            Provenance::Counts(c) => Some(
                c.binary_search_by_key(&(rule as u32), |&(r, _)| r)
                    .map_or(0, |i| c[i].1),
            ),
        }
    }

    /// `(rule index, count)` pairs with positive counts.
    pub fn entries(&self) -> &[(u32, u32)] {
        match self {
            Provenance::Undefined => &[],
            Provenance::Counts(c) => c,
        }
    }

    fn combine<'a>(rule: u32, parts: impl Iterator<Item = &'a Provenance>) -> Provenance {
        let mut all: Vec<(u32, u32)> = vec![(rule, 1)];
        for p in parts {
            match p {
                Provenance::Undefined => return Provenance::Undefined,
                Provenance::Counts(c) => all.extend_from_slice(c),
            }
        }
        all.sort_unstable_by_key(|&(r, _)| r);
        let mut merged: Vec<(u32, u32)> = Vec::with_capacity(all.len());
        for (r, n) in all {
            match merged.last_mut() {
                Some((last, m)) if *last == r => *m += n,
                _ => merged.push((r, n)),
            }
        }
        Provenance::Counts(merged)
    }
}

/// Values and provenance of every tuple in a [`GroundProgram`] at one weight vector.
#[derive(Debug, Clone)]
pub struct EvaluationResult {
    program: Arc<GroundProgram>,
    weights: WeightVector,
    values: Vec<f64>,
    provenance: Vec<Provenance>,
    rounds: usize,
}

static UNDEFINED: Provenance = Provenance::Undefined;

impl EvaluationResult {
    pub fn program(&self) -> &Arc<GroundProgram> {
        &self.program
    }

    pub fn weights(&self) -> &WeightVector {
        &self.weights
    }

    /// `v_t(w)`; zero for tuples no candidate can derive.
    pub fn value(&self, t: &Tuple) -> f64 {
        self.program.id(t).map_or(0.0, |i| self.values[i as usize])
    }

    pub fn provenance(&self, t: &Tuple) -> &Provenance {
        self.program
            .id(t)
            .map_or(&UNDEFINED, |i| &self.provenance[i as usize])
    }

    pub fn value_of(&self, id: TupleId) -> f64 {
        self.values[id as usize]
    }

    pub fn provenance_of(&self, id: TupleId) -> &Provenance {
        &self.provenance[id as usize]
    }

    /// Number of fixpoint rounds, including the final unchanged one.
    pub fn rounds(&self) -> usize {
        self.rounds
    }

    /// Derived (non-input) tuples with a positive value.
    pub fn derived(&self) -> Database {
        self.derived_ids()
            .map(|i| self.program.tuple(i).clone())
            .collect()
    }

    pub fn derived_ids(&self) -> impl Iterator<Item = TupleId> + '_ {
        (self.program.input_len..self.values.len())
            .filter(|&i| self.values[i] > 0.0)
            .map(|i| i as TupleId)
    }

    /// `∂v_t/∂w_r = l_t(r) · v_t / w_r`, written into `out` (indexed by rule).
    pub(crate) fn add_scaled_gradient(&self, id: TupleId, scale: f64, out: &mut [f64]) {
        let v = self.values[id as usize];
        for &(r, n) in self.provenance[id as usize].entries() {
            out[r as usize] += scale * n as f64 * v / self.weights[r as usize];
        }
    }
}
