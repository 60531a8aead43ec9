use std::collections::{BTreeSet, HashMap};

use super::model::*;

/// One instantiation of a rule: if every antecedent holds, so does the conclusion.
///
/// `antecedents` follows the rule body position by position, so a tuple
/// matched by two body atoms appears twice.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundClause {
    pub rule_id: String,
    pub antecedents: Vec<Tuple>,
    pub conclusion: Tuple,
}

impl GroundClause {
    pub fn antecedent_set(&self) -> BTreeSet<&Tuple> {
        self.antecedents.iter().collect()
    }
}

/// Per-relation tuple lists with a hash index on every argument position.
#[derive(Debug, Default)]
pub struct FactIndex {
    relations: HashMap<RelId, RelationIndex>,
}

#[derive(Debug, Default)]
struct RelationIndex {
    rows: Vec<Args>,
    by_position: Vec<HashMap<Constant, Vec<u32>>>,
}

impl RelationIndex {
    fn push(&mut self, args: Args) {
        if self.by_position.len() < args.len() {
            self.by_position.resize_with(args.len(), HashMap::new);
        }
        let row = self.rows.len() as u32;
        for (pos, c) in args.iter().enumerate() {
            self.by_position[pos].entry(*c).or_default().push(row);
        }
        self.rows.push(args);
    }
}

static EMPTY: RelationIndex = RelationIndex {
    rows: Vec::new(),
    by_position: Vec::new(),
};

impl FactIndex {
    pub fn new(db: &Database) -> Self {
        let mut idx = FactIndex::default();
        for t in db.iter() {
            idx.insert(t);
        }
        idx
    }

    pub fn insert(&mut self, t: Tuple) {
        self.relations.entry(t.rel).or_default().push(t.args);
    }

    fn relation(&self, rel: RelId) -> &RelationIndex {
        self.relations.get(&rel).unwrap_or(&EMPTY)
    }

    pub fn len(&self) -> usize {
        self.relations.values().map(|r| r.rows.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Calls `f` with the complete variable binding of every substitution that
/// matches each body atom `i` against `sources[i]`.
pub(crate) fn for_each_binding(
    rule: &Rule,
    sources: &[&FactIndex],
    mut f: impl FnMut(&[Constant]),
) {
    debug_assert_eq!(sources.len(), rule.body.len());
    let mut binding: Vec<Option<Constant>> = vec![None; rule.var_count()];
    let mut full: Vec<Constant> = Vec::with_capacity(rule.var_count());
    join(rule, sources, 0, &mut binding, &mut full, &mut f);
}

fn join(
    rule: &Rule,
    sources: &[&FactIndex],
    depth: usize,
    binding: &mut Vec<Option<Constant>>,
    full: &mut Vec<Constant>,
    f: &mut impl FnMut(&[Constant]),
) {
    let Some(atom) = rule.body.get(depth) else {
        full.clear();
        // Range restriction guarantees body variables cover the rule.
        full.extend(binding.iter().map(|b| b.expect("unbound variable after join")));
        f(full);
        return;
    };
    let rel = sources[depth].relation(atom.rel);

    // Pick the most selective bound position.
    let mut best: Option<&[u32]> = None;
    for (pos, term) in atom.terms.iter().enumerate() {
        let key = match term {
            Term::Const(c) => Some(*c),
            Term::Var(v) => binding[*v as usize],
        };
        if let Some(c) = key {
            let bucket = rel
                .by_position
                .get(pos)
                .and_then(|m| m.get(&c))
                .map_or(&[][..], |v| v.as_slice());
            if best.is_none_or(|b| bucket.len() < b.len()) {
                best = Some(bucket);
            }
        }
    }

    let mut newly_bound: Vec<u32> = Vec::with_capacity(atom.terms.len());
    let mut visit = |args: &Args, binding: &mut Vec<Option<Constant>>| {
        newly_bound.clear();
        let mut ok = true;
        for (term, &c) in atom.terms.iter().zip(args.iter()) {
            match term {
                Term::Const(k) => {
                    if *k != c {
                        ok = false;
                        break;
                    }
                }
                Term::Var(v) => match binding[*v as usize] {
                    Some(b) if b != c => {
                        ok = false;
                        break;
                    }
                    Some(_) => {}
                    None => {
                        binding[*v as usize] = Some(c);
                        newly_bound.push(*v);
                    }
                },
            }
        }
        if ok {
            join(rule, sources, depth + 1, binding, full, f);
        }
        for v in newly_bound.drain(..) {
            binding[v as usize] = None;
        }
    };
    match best {
        Some(rows) => {
            for &row in rows {
                visit(&rel.rows[row as usize], binding);
            }
        }
        None => {
            for args in &rel.rows {
                visit(args, binding);
            }
        }
    }
}

pub(crate) fn instantiate(atom: &Atom, binding: &[Constant]) -> Tuple {
    let args: Vec<Constant> = atom
        .terms
        .iter()
        .map(|t| match t {
            Term::Var(v) => binding[*v as usize],
            Term::Const(c) => *c,
        })
        .collect();
    Tuple::new(atom.rel, args)
}

/// All instantiations of `rule` whose body atoms are facts of `facts`.
pub fn ground(rule: &Rule, facts: &Database) -> BTreeSet<GroundClause> {
    let index = FactIndex::new(facts);
    ground_indexed(rule, &index)
}

pub fn ground_indexed(rule: &Rule, index: &FactIndex) -> BTreeSet<GroundClause> {
    let sources = vec![index; rule.body.len()];
    let mut out = BTreeSet::new();
    for_each_binding(rule, &sources, |b| {
        out.insert(GroundClause {
            rule_id: rule.id.clone(),
            antecedents: rule.body.iter().map(|a| instantiate(a, b)).collect(),
            conclusion: instantiate(&rule.head, b),
        });
    });
    out
}
