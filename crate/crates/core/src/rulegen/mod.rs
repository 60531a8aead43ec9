//! Candidate rule generation.
//!
//! Seeds follow the chain pattern `r0(x, y) :- r1(x, t1), r2(t1, t2), ..., rn(t_{n-1}, y)`.
//! [`augment`] closes a seed set under up to `k` single edits:
//!
//! - swap the relation of one literal for another of the same arity;
//! - replace one variable occurrence with another variable of the rule or a fresh one;
//! - append a body literal whose arguments are all fresh variables;
//! - delete a body literal.
//!
//! Rules are compared up to variable renaming and body order, and the output
//! is sorted by rule text so generation is deterministic.

use std::collections::BTreeSet;
use std::path::Path;

use crate::datalog::{render_rule, write_rules, Atom, RelId, RelationKind, Rule, RuleSet, Schema, SymbolTable, Term};
use crate::error::{Error, Result};
use crate::exec::Exec;

pub const DEFAULT_CAP: usize = 50_000;

/// Bodies longer than this are canonicalized without trying every order.
const MAX_PERMUTED_BODY: usize = 7;

#[derive(Debug, Clone)]
pub struct GenConfig {
    pub max_body_len: usize,
    /// Edit budget.
    pub k: usize,
    /// Lets body literals use output relations.
    pub allow_recursion: bool,
    /// Upper bound on the number of generated rules.
    pub cap: usize,
    pub exec: Exec,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            max_body_len: 2,
            k: 1,
            allow_recursion: true,
            cap: DEFAULT_CAP,
            exec: Exec::default(),
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_body_len == 0 {
            return Err(Error::Config("max body length must be at least 1".into()));
        }
        if self.cap == 0 {
            return Err(Error::Config("candidate cap must be at least 1".into()));
        }
        Ok(())
    }
}

/// A rule body and head with variables renamed by first occurrence and the
/// body in its least order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalRule {
    pub head: Atom,
    pub body: Vec<Atom>,
}

impl CanonicalRule {
    pub fn var_count(&self) -> u32 {
        std::iter::once(&self.head)
            .chain(&self.body)
            .flat_map(Atom::vars)
            .map(|v| v + 1)
            .max()
            .unwrap_or(0)
    }

    pub fn to_rule(&self, id: impl Into<String>) -> Rule {
        Rule::with_generated_names(id, self.head.clone(), self.body.clone())
    }
}

fn rename(head: &Atom, body: &[&Atom]) -> CanonicalRule {
    let mut map: Vec<(u32, u32)> = Vec::new();
    let mut atom = |a: &Atom| -> Atom {
        let terms = a
            .terms
            .iter()
            .map(|t| match *t {
                Term::Var(v) => {
                    let next = map.len() as u32;
                    let new = match map.iter().find(|(old, _)| *old == v) {
                        Some(&(_, n)) => n,
                        None => {
                            map.push((v, next));
                            next
                        }
                    };
                    Term::Var(new)
                }
                c => c,
            })
            .collect();
        Atom::new(a.rel, terms)
    };
    let head = atom(head);
    let body = body.iter().map(|a| atom(a)).collect();
    CanonicalRule { head, body }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                go(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Canonical form of `head :- body`: duplicate literals dropped, then the
/// least renaming over all body orders.
pub fn canonicalize(head: &Atom, body: &[Atom]) -> CanonicalRule {
    let mut distinct: Vec<&Atom> = Vec::with_capacity(body.len());
    for a in body {
        if !distinct.contains(&a) {
            distinct.push(a);
        }
    }
    if distinct.len() > MAX_PERMUTED_BODY {
        distinct.sort_by_key(|a| a.rel);
        return rename(head, &distinct);
    }
    permutations(distinct.len())
        .into_iter()
        .map(|p| {
            let order: Vec<&Atom> = p.iter().map(|&i| distinct[i]).collect();
            rename(head, &order)
        })
        .min()
        .expect("at least one permutation")
}

pub fn canonicalize_rule(rule: &Rule) -> CanonicalRule {
    canonicalize(&rule.head, &rule.body)
}

fn body_relations(schema: &Schema, allow_recursion: bool) -> Vec<RelId> {
    schema
        .iter()
        .filter(|(_, d)| allow_recursion || d.kind == RelationKind::Input)
        .map(|(r, _)| r)
        .collect()
}

/// All chain-pattern rules with bodies of length `1..=max_body_len`.
///
/// Heads range over binary output relations and links over binary body
/// relations (inputs, plus outputs when `allow_recursion`).
pub fn chain_seeds(schema: &Schema, max_body_len: usize, allow_recursion: bool) -> Vec<CanonicalRule> {
    let binary = |r: &RelId| schema.decl(*r).arity == 2;
    let heads: Vec<RelId> = schema.ids().filter(|&r| schema.is_output(r)).filter(binary).collect();
    let links: Vec<RelId> = body_relations(schema, allow_recursion)
        .into_iter()
        .filter(binary)
        .collect();

    let mut out = BTreeSet::new();
    for &h in &heads {
        // Variables: x = 0, y = 1, t_i = i + 1.
        let head = Atom::new(h, vec![Term::Var(0), Term::Var(1)]);
        for n in 1..=max_body_len {
            let var = |i: usize| -> Term {
                match i {
                    0 => Term::Var(0),
                    i if i == n => Term::Var(1),
                    i => Term::Var(i as u32 + 1),
                }
            };
            let mut choice = vec![0usize; n];
            'outer: loop {
                if links.is_empty() {
                    break;
                }
                let body: Vec<Atom> = (0..n)
                    .map(|i| Atom::new(links[choice[i]], vec![var(i), var(i + 1)]))
                    .collect();
                out.insert(canonicalize(&head, &body));
                for slot in choice.iter_mut().rev() {
                    *slot += 1;
                    if *slot < links.len() {
                        continue 'outer;
                    }
                    *slot = 0;
                }
                break;
            }
        }
    }
    out.into_iter().collect()
}

fn is_well_formed(head: &Atom, body: &[Atom]) -> bool {
    !body.is_empty() && head.vars().all(|v| body.iter().any(|a| a.vars().any(|w| w == v)))
}

/// Every rule one edit away from `rule`, canonicalized. Ill-formed results
/// (empty body, unbound head variable) are dropped.
pub fn single_edits(rule: &CanonicalRule, schema: &Schema, allow_recursion: bool) -> BTreeSet<CanonicalRule> {
    let mut out = BTreeSet::new();
    let mut emit = |head: Atom, body: Vec<Atom>| {
        if is_well_formed(&head, &body) {
            out.insert(canonicalize(&head, &body));
        }
    };
    let body_rels = body_relations(schema, allow_recursion);
    let fresh = rule.var_count();

    // Relation swaps.
    for r in schema.ids() {
        let arity = schema.decl(r).arity;
        if r != rule.head.rel && schema.is_output(r) && arity == rule.head.terms.len() {
            emit(Atom::new(r, rule.head.terms.clone()), rule.body.clone());
        }
    }
    for (i, atom) in rule.body.iter().enumerate() {
        for &r in &body_rels {
            if r != atom.rel && schema.decl(r).arity == atom.terms.len() {
                let mut body = rule.body.clone();
                body[i] = Atom::new(r, atom.terms.clone());
                emit(rule.head.clone(), body);
            }
        }
    }

    // Variable rewrites. Position 0 is the head, i + 1 is body literal i.
    for pos in 0..=rule.body.len() {
        let atom = if pos == 0 { &rule.head } else { &rule.body[pos - 1] };
        for (j, term) in atom.terms.iter().enumerate() {
            let Term::Var(v) = *term else { continue };
            for u in (0..=fresh).filter(|&u| u != v) {
                let mut head = rule.head.clone();
                let mut body = rule.body.clone();
                let target = if pos == 0 { &mut head } else { &mut body[pos - 1] };
                target.terms[j] = Term::Var(u);
                emit(head, body);
            }
        }
    }

    // Literal insertion.
    for &r in &body_rels {
        let arity = schema.decl(r).arity as u32;
        let mut body = rule.body.clone();
        body.push(Atom::new(r, (fresh..fresh + arity).map(Term::Var).collect()));
        emit(rule.head.clone(), body);
    }

    // Literal deletion.
    for i in 0..rule.body.len() {
        let mut body = rule.body.clone();
        body.remove(i);
        emit(rule.head.clone(), body);
    }
    out
}

/// Closure of `seeds` under at most `config.k` edits, in canonical order.
pub fn augment(seeds: &[CanonicalRule], schema: &Schema, config: &GenConfig) -> Result<Vec<CanonicalRule>> {
    let mut all: BTreeSet<CanonicalRule> = seeds.iter().cloned().collect();
    if all.len() > config.cap {
        return Err(Error::CapExceeded {
            cap: config.cap,
            reached: all.len(),
        });
    }
    let mut frontier: Vec<CanonicalRule> = all.iter().cloned().collect();
    for _ in 0..config.k {
        let edits = config
            .exec
            .map(&frontier, |r| single_edits(r, schema, config.allow_recursion));
        let mut next = Vec::new();
        for rule in edits.into_iter().flatten() {
            if all.insert(rule.clone()) {
                next.push(rule);
            }
            if all.len() > config.cap {
                return Err(Error::CapExceeded {
                    cap: config.cap,
                    reached: all.len(),
                });
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    Ok(all.into_iter().collect())
}

/// Chain seeds plus augmentation, as a rule set with ids `r1, r2, ...`
/// assigned in order of rule text.
pub fn generate(schema: &Schema, config: &GenConfig) -> Result<RuleSet> {
    config.validate()?;
    let seeds = chain_seeds(schema, config.max_body_len, config.allow_recursion);
    let rules = augment(&seeds, schema, config)?;
    Ok(number_rules(schema, rules))
}

/// Assigns ids `r1, r2, ...` after sorting by rendered text.
pub fn number_rules(schema: &Schema, rules: impl IntoIterator<Item = CanonicalRule>) -> RuleSet {
    let symbols = SymbolTable::new();
    let mut keyed: Vec<(String, CanonicalRule)> = rules
        .into_iter()
        .map(|c| (render_rule(schema, &symbols, &c.to_rule("")), c))
        .collect();
    keyed.sort();
    keyed.dedup_by(|a, b| a.1 == b.1);
    let mut set = RuleSet::new();
    for (i, (_, c)) in keyed.into_iter().enumerate() {
        set.push(c.to_rule(format!("r{}", i + 1)))
            .expect("generated ids are unique");
    }
    set
}

/// Writes `rules` as a `rules.dl` file.
pub fn emit_rules(path: &Path, schema: &Schema, symbols: &SymbolTable, rules: &RuleSet) -> Result<()> {
    let refs: Vec<&Rule> = rules.iter().collect();
    let header = format!("{} generated candidate rules", rules.len());
    write_rules(path, schema, symbols, &refs, &header)
}
