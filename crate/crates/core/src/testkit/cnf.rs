use std::collections::BTreeSet;

use crate::datalog::{
    Atom, Database, LabelSet, Problem, RelationKind, Rule, RuleSet, Schema, SymbolTable, Term, Tuple,
};
use crate::error::{Error, Result};

/// A CNF formula with DIMACS-style literals: `v` or `-v` for `v >= 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cnf {
    pub clauses: Vec<Vec<i32>>,
}

impl Cnf {
    /// Rejects empty, over-wide (more than three literals) and trivial
    /// clauses. Repeated literals are allowed.
    pub fn new(clauses: Vec<Vec<i32>>) -> Result<Self> {
        for (i, c) in clauses.iter().enumerate() {
            let n = i + 1;
            if c.is_empty() {
                return Err(Error::MalformedCnf(format!("clause {n} is empty")));
            }
            if c.len() > 3 {
                return Err(Error::MalformedCnf(format!(
                    "clause {n} has {} literals; at most 3 are allowed",
                    c.len()
                )));
            }
            if c.contains(&0) {
                return Err(Error::MalformedCnf(format!("clause {n} contains literal 0")));
            }
            if c.iter().any(|l| c.contains(&-l)) {
                return Err(Error::MalformedCnf(format!(
                    "clause {n} contains a variable and its negation"
                )));
            }
        }
        Ok(Self { clauses })
    }

    /// Parses DIMACS CNF. `c` lines are comments; the `p cnf` header is
    /// optional; clauses end with `0` and may span lines.
    pub fn parse_dimacs(text: &str) -> Result<Self> {
        let mut clauses = Vec::new();
        let mut current = Vec::new();
        let mut declared: Option<(i64, usize)> = None;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
                continue;
            }
            if line.starts_with('p') {
                let f: Vec<&str> = line.split_whitespace().collect();
                match f[..] {
                    ["p", "cnf", v, c] => {
                        let v = v.parse().map_err(|_| bad_line(i, "invalid variable count"))?;
                        let c = c.parse().map_err(|_| bad_line(i, "invalid clause count"))?;
                        declared = Some((v, c));
                    }
                    _ => return Err(bad_line(i, "expected `p cnf <vars> <clauses>`")),
                }
                continue;
            }
            for tok in line.split_whitespace() {
                let lit: i32 = tok
                    .parse()
                    .map_err(|_| bad_line(i, &format!("invalid literal `{tok}`")))?;
                if lit == 0 {
                    clauses.push(std::mem::take(&mut current));
                } else {
                    if let Some((v, _)) = declared {
                        if i64::from(lit.unsigned_abs()) > v {
                            return Err(bad_line(i, &format!("literal {lit} exceeds declared variable count {v}")));
                        }
                    }
                    current.push(lit);
                }
            }
        }
        if !current.is_empty() {
            clauses.push(current);
        }
        if let Some((_, c)) = declared {
            if c != clauses.len() {
                return Err(Error::MalformedCnf(format!(
                    "header declares {c} clauses but {} were given",
                    clauses.len()
                )));
            }
        }
        Self::new(clauses)
    }

    /// Variables that occur, ascending.
    pub fn variables(&self) -> Vec<u32> {
        let set: BTreeSet<u32> = self.clauses.iter().flatten().map(|l| l.unsigned_abs()).collect();
        set.into_iter().collect()
    }

    pub fn is_satisfied_by(&self, assignment: impl Fn(u32) -> bool) -> bool {
        self.clauses
            .iter()
            .all(|c| c.iter().any(|&l| assignment(l.unsigned_abs()) == (l > 0)))
    }

    /// Satisfiability by trying every assignment of the occurring variables.
    pub fn brute_force_sat(&self) -> bool {
        let vars = self.variables();
        assert!(vars.len() < 24, "too many variables for exhaustive search");
        (0u32..1 << vars.len()).any(|mask| {
            self.is_satisfied_by(|v| {
                let k = vars.iter().position(|&u| u == v).expect("occurring variable");
                mask >> k & 1 == 1
            })
        })
    }

    pub fn to_dimacs(&self) -> String {
        let vars = self.variables().last().copied().unwrap_or(0);
        let mut out = format!("p cnf {vars} {}\n", self.clauses.len());
        for c in &self.clauses {
            for l in c {
                out.push_str(&format!("{l} "));
            }
            out.push_str("0\n");
        }
        out
    }
}

fn bad_line(i: usize, msg: &str) -> Error {
    Error::MalformedCnf(format!("line {}: {msg}", i + 1))
}

/// Names of the encoding's relations, rules and constants.
pub fn variable_rule_id(v: u32, positive: bool) -> String {
    if positive {
        format!("r_v{v}")
    } else {
        format!("r_not_v{v}")
    }
}

pub const ERROR_RULE: &str = "r_e";
pub const SENTINEL_RULE: &str = "r_a";
pub const CLAUSE_RULE: &str = "r_c";
pub const SENTINEL: &str = "a";

/// The rule-selection instance that has a solution iff `cnf` is satisfiable.
///
/// Clause `j` (1-based) becomes constant `c<j>` and variable `v` becomes
/// constant `v<v>`. Inputs are `pos_v<v>(c)`, `neg_v<v>(c)`, `var_v<v>(v)` and
/// `conflict(c, c', v)` plus `conflict(a, a, a)`; outputs are `C2(c, v)`,
/// `C1(c)` and `error(c, c', v)`.
pub fn encode_3cnf(cnf: &Cnf) -> Result<Problem> {
    let vars = cnf.variables();
    let mut schema = Schema::new();
    let mut symbols = SymbolTable::new();
    let mut input = Database::new();

    let clause_const: Vec<_> = (1..=cnf.clauses.len())
        .map(|j| symbols.intern(&format!("c{j}")))
        .collect();
    let var_const = |symbols: &mut SymbolTable, v: u32| symbols.intern(&format!("v{v}"));

    let mut per_var = Vec::new();
    for &v in &vars {
        let pos = schema.declare(&format!("pos_v{v}"), 1, RelationKind::Input)?;
        let neg = schema.declare(&format!("neg_v{v}"), 1, RelationKind::Input)?;
        let var = schema.declare(&format!("var_v{v}"), 1, RelationKind::Input)?;
        per_var.push((v, pos, neg, var));
    }
    let conflict = schema.declare("conflict", 3, RelationKind::Input)?;
    let c2 = schema.declare("C2", 2, RelationKind::Output)?;
    let c1 = schema.declare("C1", 1, RelationKind::Output)?;
    let error = schema.declare("error", 3, RelationKind::Output)?;

    for &(v, pos, neg, var) in &per_var {
        let vc = var_const(&mut symbols, v);
        input.insert(Tuple::new(var, vec![vc]));
        for (j, clause) in cnf.clauses.iter().enumerate() {
            if clause.contains(&(v as i32)) {
                input.insert(Tuple::new(pos, vec![clause_const[j]]));
            }
            if clause.contains(&-(v as i32)) {
                input.insert(Tuple::new(neg, vec![clause_const[j]]));
            }
        }
        for (j, cj) in cnf.clauses.iter().enumerate() {
            for (k, ck) in cnf.clauses.iter().enumerate() {
                if cj.contains(&(v as i32)) && ck.contains(&-(v as i32)) {
                    input.insert(Tuple::new(conflict, vec![clause_const[j], clause_const[k], vc]));
                }
            }
        }
    }
    let a = symbols.intern(SENTINEL);
    input.insert(Tuple::new(conflict, vec![a, a, a]));

    let x = |i| Term::Var(i);
    let mut rules = RuleSet::new();
    for &(v, pos, neg, var) in &per_var {
        for (positive, lit) in [(true, pos), (false, neg)] {
            // C2(c, v') :- lit(c), var_v(v').
            rules.push(Rule::with_generated_names(
                variable_rule_id(v, positive),
                Atom::new(c2, vec![x(0), x(1)]),
                vec![Atom::new(lit, vec![x(0)]), Atom::new(var, vec![x(1)])],
            ))?;
        }
    }
    rules.push(Rule::with_generated_names(
        ERROR_RULE,
        Atom::new(error, vec![x(0), x(1), x(2)]),
        vec![
            Atom::new(c2, vec![x(0), x(2)]),
            Atom::new(c2, vec![x(1), x(2)]),
            Atom::new(conflict, vec![x(0), x(1), x(2)]),
        ],
    ))?;
    rules.push(Rule::with_generated_names(
        SENTINEL_RULE,
        Atom::new(c2, vec![x(0), x(0)]),
        vec![Atom::new(conflict, vec![x(0), x(0), x(0)])],
    ))?;
    rules.push(Rule::with_generated_names(
        CLAUSE_RULE,
        Atom::new(c1, vec![x(0)]),
        vec![Atom::new(c2, vec![x(0), x(1)])],
    ))?;

    let mut positive: BTreeSet<Tuple> = clause_const.iter().map(|&c| Tuple::new(c1, vec![c])).collect();
    positive.insert(Tuple::new(error, vec![a, a, a]));
    let mut negative = BTreeSet::new();
    for &cj in &clause_const {
        for &ck in &clause_const {
            for &v in &vars {
                let vc = var_const(&mut symbols, v);
                negative.insert(Tuple::new(error, vec![cj, ck, vc]));
            }
        }
    }

    Ok(Problem {
        schema,
        symbols,
        input,
        labels: LabelSet::new(positive, negative)?,
        rules,
    })
}
