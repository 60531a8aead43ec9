use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::error::{Error, Result};

/// An interned constant symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Constant(pub u32);

/// Index of a relation in its [`Schema`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RelId(pub u32);

impl RelId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Injective string interner for constants.
#[derive(Debug, Clone, Default)]
pub struct SymbolTable {
    names: Vec<String>,
    index: HashMap<String, Constant>,
}

impl SymbolTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, name: &str) -> Constant {
        if let Some(&c) = self.index.get(name) {
            return c;
        }
        let c = Constant(self.names.len() as u32);
        self.names.push(name.to_owned());
        self.index.insert(name.to_owned(), c);
        c
    }

    pub fn get(&self, name: &str) -> Option<Constant> {
        self.index.get(name).copied()
    }

    pub fn name(&self, c: Constant) -> &str {
        &self.names[c.0 as usize]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = Constant> + '_ {
        (0..self.names.len() as u32).map(Constant)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RelationKind {
    Input,
    Output,
}

impl fmt::Display for RelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RelationKind::Input => f.write_str("input"),
            RelationKind::Output => f.write_str("output"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationDecl {
    pub name: String,
    pub arity: usize,
    pub kind: RelationKind,
}

/// The declared input and output relations of a problem.
#[derive(Debug, Clone, Default)]
pub struct Schema {
    decls: Vec<RelationDecl>,
    by_name: HashMap<String, RelId>,
}

impl Schema {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare(&mut self, name: &str, arity: usize, kind: RelationKind) -> Result<RelId> {
        if arity == 0 {
            return Err(Error::Config(format!("relation `{name}` must have positive arity")));
        }
        if self.by_name.contains_key(name) {
            return Err(Error::Config(format!("relation `{name}` declared twice")));
        }
        let id = RelId(self.decls.len() as u32);
        self.decls.push(RelationDecl {
            name: name.to_owned(),
            arity,
            kind,
        });
        self.by_name.insert(name.to_owned(), id);
        Ok(id)
    }

    pub fn lookup(&self, name: &str) -> Option<RelId> {
        self.by_name.get(name).copied()
    }

    pub fn decl(&self, rel: RelId) -> &RelationDecl {
        &self.decls[rel.index()]
    }

    pub fn len(&self) -> usize {
        self.decls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decls.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = RelId> + '_ {
        (0..self.decls.len() as u32).map(RelId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (RelId, &RelationDecl)> + '_ {
        self.decls
            .iter()
            .enumerate()
            .map(|(i, d)| (RelId(i as u32), d))
    }

    pub fn is_output(&self, rel: RelId) -> bool {
        self.decl(rel).kind == RelationKind::Output
    }
}

pub type Args = Box<[Constant]>;

/// A ground fact `rel(c1, ..., ck)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Tuple {
    pub rel: RelId,
    pub args: Args,
}

impl Tuple {
    pub fn new(rel: RelId, args: impl Into<Args>) -> Self {
        Self {
            rel,
            args: args.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(u32),
    Const(Constant),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub rel: RelId,
    pub terms: Vec<Term>,
}

impl Atom {
    pub fn new(rel: RelId, terms: Vec<Term>) -> Self {
        Self { rel, terms }
    }

    pub fn vars(&self) -> impl Iterator<Item = u32> + '_ {
        self.terms.iter().filter_map(|t| match t {
            Term::Var(v) => Some(*v),
            Term::Const(_) => None,
        })
    }
}

/// A Horn clause `head :- body_1, ..., body_n`.
///
/// Variables are rule-local and numbered densely from zero; `var_names`
/// keeps their source spelling for printing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub id: String,
    pub head: Atom,
    pub body: Vec<Atom>,
    pub var_names: Vec<String>,
}

impl Rule {
    /// Builds a rule with variables named `x0, x1, ...`.
    pub fn with_generated_names(id: impl Into<String>, head: Atom, body: Vec<Atom>) -> Self {
        let n = head
            .vars()
            .chain(body.iter().flat_map(|a| a.vars()))
            .map(|v| v + 1)
            .max()
            .unwrap_or(0);
        Self {
            id: id.into(),
            head,
            body,
            var_names: (0..n).map(|i| format!("x{i}")).collect(),
        }
    }

    pub fn var_count(&self) -> usize {
        self.var_names.len()
    }

    /// Every head variable occurs in the body.
    pub fn is_range_restricted(&self) -> bool {
        self.head
            .vars()
            .all(|v| self.body.iter().any(|a| a.vars().any(|w| w == v)))
    }

    /// Checks the structural invariants against a schema.
    pub fn validate(&self, schema: &Schema) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidRule(format!("{}: {msg}", self.id)));
        if self.body.is_empty() {
            return bad("empty body".into());
        }
        for atom in std::iter::once(&self.head).chain(&self.body) {
            if atom.rel.index() >= schema.len() {
                return bad("undeclared relation".into());
            }
            let decl = schema.decl(atom.rel);
            if decl.arity != atom.terms.len() {
                return bad(format!(
                    "`{}` has arity {} but is used with {} arguments",
                    decl.name,
                    decl.arity,
                    atom.terms.len()
                ));
            }
            for v in atom.vars() {
                if v as usize >= self.var_names.len() {
                    return bad(format!("variable index {v} out of range"));
                }
            }
        }
        if !schema.is_output(self.head.rel) {
            return bad(format!(
                "head relation `{}` is not an output relation",
                schema.decl(self.head.rel).name
            ));
        }
        if !self.is_range_restricted() {
            return bad("head variable does not occur in the body".into());
        }
        Ok(())
    }
}

/// Candidate rules with unique ids, in a fixed order.
#[derive(Debug, Clone, Default)]
pub struct RuleSet {
    rules: Vec<Rule>,
    by_id: HashMap<String, usize>,
}

impl RuleSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_rules(rules: impl IntoIterator<Item = Rule>) -> Result<Self> {
        let mut set = Self::new();
        for r in rules {
            set.push(r)?;
        }
        Ok(set)
    }

    pub fn push(&mut self, rule: Rule) -> Result<usize> {
        if self.by_id.contains_key(&rule.id) {
            return Err(Error::InvalidRule(format!("duplicate rule id `{}`", rule.id)));
        }
        let idx = self.rules.len();
        self.by_id.insert(rule.id.clone(), idx);
        self.rules.push(rule);
        Ok(idx)
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.by_id.get(id).copied()
    }

    pub fn get(&self, id: &str) -> Option<&Rule> {
        self.index_of(id).map(|i| &self.rules[i])
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Rule> {
        self.rules.iter()
    }

    /// Rules whose index is in `keep`, in candidate order.
    pub fn subset<'a>(&'a self, keep: impl IntoIterator<Item = usize>) -> Vec<&'a Rule> {
        let keep: BTreeSet<usize> = keep.into_iter().collect();
        keep.into_iter().map(|i| &self.rules[i]).collect()
    }
}

impl std::ops::Index<usize> for RuleSet {
    type Output = Rule;

    fn index(&self, i: usize) -> &Rule {
        &self.rules[i]
    }
}

/// Sets of ground tuples, grouped by relation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Database {
    relations: BTreeMap<RelId, BTreeSet<Args>>,
}

impl Database {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, t: Tuple) -> bool {
        self.relations.entry(t.rel).or_default().insert(t.args)
    }

    pub fn contains(&self, t: &Tuple) -> bool {
        self.relations
            .get(&t.rel)
            .is_some_and(|s| s.contains(&t.args))
    }

    pub fn relation(&self, rel: RelId) -> impl Iterator<Item = &Args> + '_ {
        self.relations.get(&rel).into_iter().flatten()
    }

    pub fn relation_len(&self, rel: RelId) -> usize {
        self.relations.get(&rel).map_or(0, |s| s.len())
    }

    pub fn iter(&self) -> impl Iterator<Item = Tuple> + '_ {
        self.relations
            .iter()
            .flat_map(|(&rel, s)| s.iter().map(move |a| Tuple::new(rel, a.clone())))
    }

    pub fn len(&self) -> usize {
        self.relations.values().map(|s| s.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn extend(&mut self, other: &Database) {
        for t in other.iter() {
            self.insert(t);
        }
    }

    /// The tuples whose relation satisfies `keep`.
    pub fn filter(&self, mut keep: impl FnMut(RelId) -> bool) -> Database {
        Database {
            relations: self
                .relations
                .iter()
                .filter(|(&r, s)| keep(r) && !s.is_empty())
                .map(|(&r, s)| (r, s.clone()))
                .collect(),
        }
    }

    pub fn is_subset(&self, other: &Database) -> bool {
        self.iter().all(|t| other.contains(&t))
    }
}

impl FromIterator<Tuple> for Database {
    fn from_iter<I: IntoIterator<Item = Tuple>>(iter: I) -> Self {
        let mut db = Database::new();
        for t in iter {
            db.insert(t);
        }
        db
    }
}

/// Desired (`positive`) and undesired (`negative`) output tuples.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelSet {
    pub positive: BTreeSet<Tuple>,
    pub negative: BTreeSet<Tuple>,
}

impl LabelSet {
    pub fn new(positive: BTreeSet<Tuple>, negative: BTreeSet<Tuple>) -> Result<Self> {
        if let Some(t) = positive.intersection(&negative).next() {
            return Err(Error::Config(format!(
                "tuple {t:?} is labeled both positive and negative"
            )));
        }
        Ok(Self { positive, negative })
    }

    pub fn len(&self) -> usize {
        self.positive.len() + self.negative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A complete rule-selection instance.
#[derive(Debug, Clone, Default)]
pub struct Problem {
    pub schema: Schema,
    pub symbols: SymbolTable,
    pub input: Database,
    pub labels: LabelSet,
    pub rules: RuleSet,
}

impl Problem {
    pub fn tuple_to_string(&self, t: &Tuple) -> String {
        render_tuple(&self.schema, &self.symbols, t)
    }

    pub fn rule_to_string(&self, r: &Rule) -> String {
        render_rule(&self.schema, &self.symbols, r)
    }

    /// Looks up a tuple by relation and constant names without interning.
    pub fn tuple(&self, rel: &str, args: &[&str]) -> Option<Tuple> {
        let rel = self.schema.lookup(rel)?;
        let args = args
            .iter()
            .map(|a| self.symbols.get(a))
            .collect::<Option<Vec<_>>>()?;
        Some(Tuple::new(rel, args))
    }

    /// Checks that every fact, label and rule agrees with the schema.
    pub fn validate(&self) -> Result<()> {
        for t in self.input.iter() {
            let decl = self.schema.decl(t.rel);
            if decl.kind != RelationKind::Input || decl.arity != t.args.len() {
                return Err(Error::Config(format!(
                    "input tuple {} does not match its declaration",
                    self.tuple_to_string(&t)
                )));
            }
        }
        for t in self.labels.positive.iter().chain(&self.labels.negative) {
            let decl = self.schema.decl(t.rel);
            if decl.kind != RelationKind::Output || decl.arity != t.args.len() {
                return Err(Error::Config(format!(
                    "label {} does not match an output relation",
                    self.tuple_to_string(t)
                )));
            }
        }
        for r in self.rules.iter() {
            r.validate(&self.schema)?;
        }
        Ok(())
    }
}

pub fn render_tuple(schema: &Schema, symbols: &SymbolTable, t: &Tuple) -> String {
    let args: Vec<&str> = t.args.iter().map(|&c| symbols.name(c)).collect();
    format!("{}({})", schema.decl(t.rel).name, args.join(","))
}

/// Renders an atom in rule syntax; constants are always quoted.
pub fn render_atom(schema: &Schema, symbols: &SymbolTable, var_names: &[String], a: &Atom) -> String {
    let terms: Vec<String> = a
        .terms
        .iter()
        .map(|t| match t {
            Term::Var(v) => var_names[*v as usize].clone(),
            Term::Const(c) => quote(symbols.name(*c)),
        })
        .collect();
    format!("{}({})", schema.decl(a.rel).name, terms.join(", "))
}

/// `head(..) :- body(..), ... .` without the id prefix.
pub fn render_rule(schema: &Schema, symbols: &SymbolTable, r: &Rule) -> String {
    let body: Vec<String> = r
        .body
        .iter()
        .map(|a| render_atom(schema, symbols, &r.var_names, a))
        .collect();
    format!(
        "{} :- {}.",
        render_atom(schema, symbols, &r.var_names, &r.head),
        body.join(", ")
    )
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for ch in s.chars() {
        if ch == '"' || ch == '\\' {
            out.push('\\');
        }
        out.push(ch);
    }
    out.push('"');
    out
}
