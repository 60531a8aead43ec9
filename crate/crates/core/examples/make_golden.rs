//! Regenerates the golden problems under `data/`.
//!
//! ```text
//! cargo run -p difflog --example make_golden -- data
//! ```

use std::collections::BTreeSet;
use std::path::Path;

use difflog::datalog::parse::{parse_rules, write_rules, RULES_FILE};
use difflog::datalog::{
    boolean_fixpoint, write_problem, Database, LabelSet, Problem, RelationKind, Rule, RuleSet, Schema,
    SymbolTable, Tuple,
};
use difflog::rulegen::{canonicalize_rule, chain_seeds, number_rules, single_edits, augment, CanonicalRule, GenConfig};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SAMEGEN_TARGET: &str = "\
r1: samegen(x, y) :- parent(x, z), parent(y, z).
r2: samegen(x, u) :- parent(x, y), parent(u, v), samegen(y, v).
";

const ANDERSEN_TARGET: &str = "\
R1: pt(p, q) :- addr(p, q).
R2: pt(p, r) :- copy(p, q), pt(q, r).
R3: pt(p, s) :- load(p, q), pt(q, r), pt(r, s).
R4: pt(r, s) :- store(p, q), pt(p, r), pt(q, s).
";

fn schema(decls: &[(&str, usize, RelationKind)]) -> Schema {
    let mut s = Schema::new();
    for &(name, arity, kind) in decls {
        s.declare(name, arity, kind).unwrap();
    }
    s
}

fn facts(schema: &Schema, symbols: &mut SymbolTable, rows: &[(&str, &str, &str)]) -> Database {
    rows.iter()
        .map(|&(rel, a, b)| {
            let rel = schema.lookup(rel).unwrap();
            Tuple::new(rel, vec![symbols.intern(a), symbols.intern(b)])
        })
        .collect()
}

/// Every pair over `domain` is labeled: positive if `target` derives it.
fn full_labels(schema: &Schema, symbols: &mut SymbolTable, out: &str, domain: &[&str], derived: &Database) -> LabelSet {
    let rel = schema.lookup(out).unwrap();
    let (mut pos, mut neg) = (BTreeSet::new(), BTreeSet::new());
    for a in domain {
        for b in domain {
            let t = Tuple::new(rel, vec![symbols.intern(a), symbols.intern(b)]);
            if derived.contains(&t) {
                pos.insert(t);
            } else {
                neg.insert(t);
            }
        }
    }
    LabelSet::new(pos, neg).unwrap()
}

/// `targets` plus a deterministic sample of `pool`, `total` rules in all.
fn candidates(schema: &Schema, targets: &RuleSet, pool: Vec<CanonicalRule>, total: usize, seed: u64) -> RuleSet {
    let target_keys: BTreeSet<CanonicalRule> = targets.iter().map(canonicalize_rule).collect();
    let mut rest: Vec<CanonicalRule> = pool.into_iter().filter(|c| !target_keys.contains(c)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rest.shuffle(&mut rng);
    rest.truncate(total - target_keys.len());
    number_rules(schema, target_keys.into_iter().chain(rest))
}

fn write(dir: &Path, problem: &Problem, target: &RuleSet, heldout: &[(&str, &str, &str)]) {
    write_problem(dir, problem).unwrap();
    let refs: Vec<&Rule> = target.iter().collect();
    write_rules(&dir.join("expected.dl"), &problem.schema, &problem.symbols, &refs, "target program").unwrap();
    let mut symbols = SymbolTable::new();
    let held = Problem {
        schema: problem.schema.clone(),
        input: facts(&problem.schema, &mut symbols, heldout),
        symbols,
        labels: LabelSet::default(),
        rules: RuleSet::new(),
    };
    write_problem(&dir.join("heldout"), &held).unwrap();
    std::fs::remove_file(dir.join("heldout").join(RULES_FILE)).unwrap();
    println!(
        "{}: {} candidates, {} input tuples, {} labels",
        dir.display(),
        problem.rules.len(),
        problem.input.len(),
        problem.labels.len()
    );
}

fn samegen(root: &Path) {
    let schema = schema(&[("parent", 2, RelationKind::Input), ("samegen", 2, RelationKind::Output)]);
    let mut symbols = SymbolTable::new();
    let rows = [
        ("parent", "Will", "Noah"),
        ("parent", "Ann", "Noah"),
        ("parent", "Jim", "Emma"),
        ("parent", "Ava", "Emma"),
        ("parent", "Noah", "Liam"),
        ("parent", "Emma", "Liam"),
        ("parent", "Ava", "Mia"),
        ("parent", "Mia", "Zoe"),
    ];
    let input = facts(&schema, &mut symbols, &rows);
    let target = parse_rules(SAMEGEN_TARGET, "expected.dl", &schema, &mut symbols).unwrap();
    let derived = boolean_fixpoint(target.iter(), &input);
    let people = ["Will", "Ann", "Jim", "Ava", "Noah", "Emma", "Mia", "Liam", "Zoe"];
    let labels = full_labels(&schema, &mut symbols, "samegen", &people, &derived);

    // Chain seeds up to length 3 plus everything within two edits of the
    // targets, sampled down to 188.
    let config = GenConfig {
        max_body_len: 3,
        k: 2,
        ..GenConfig::default()
    };
    let target_keys: Vec<CanonicalRule> = target.iter().map(canonicalize_rule).collect();
    let mut pool: BTreeSet<CanonicalRule> = chain_seeds(&schema, config.max_body_len, true).into_iter().collect();
    pool.extend(augment(&target_keys, &schema, &config).unwrap());
    let rules = candidates(&schema, &target, pool.into_iter().collect(), 188, 0x5a3e);
    let problem = Problem {
        schema,
        symbols,
        input,
        labels,
        rules,
    };
    let heldout = [
        ("parent", "p1", "q1"),
        ("parent", "p2", "q1"),
        ("parent", "p3", "q2"),
        ("parent", "p4", "q3"),
        ("parent", "q1", "s1"),
        ("parent", "q2", "s1"),
        ("parent", "q3", "s2"),
        ("parent", "s1", "u1"),
        ("parent", "s2", "u1"),
        ("parent", "p5", "q4"),
        ("parent", "q4", "s3"),
    ];
    write(&root.join("samegen"), &problem, &target, &heldout);
}

fn andersen(root: &Path) {
    let schema = schema(&[
        ("addr", 2, RelationKind::Input),
        ("copy", 2, RelationKind::Input),
        ("load", 2, RelationKind::Input),
        ("store", 2, RelationKind::Input),
        ("pt", 2, RelationKind::Output),
    ]);
    let mut symbols = SymbolTable::new();
    // a1 = &b1; a2 = a1; a3 = a2; a4 = a3; e = &c1; *a4 = e; d = *a2;
    // f = d; g = &f; h = *g; k = &c2; *g = k;
    let rows = [
        ("addr", "a1", "b1"),
        ("copy", "a2", "a1"),
        ("copy", "a3", "a2"),
        ("copy", "a4", "a3"),
        ("addr", "e", "c1"),
        ("store", "a4", "e"),
        ("load", "d", "a2"),
        ("copy", "f", "d"),
        ("addr", "g", "f"),
        ("load", "h", "g"),
        ("addr", "k", "c2"),
        ("store", "g", "k"),
    ];
    let input = facts(&schema, &mut symbols, &rows);
    let target = parse_rules(ANDERSEN_TARGET, "expected.dl", &schema, &mut symbols).unwrap();
    let derived = boolean_fixpoint(target.iter(), &input);
    let vars = ["a1", "a2", "a3", "a4", "b1", "c1", "c2", "d", "e", "f", "g", "h", "k"];
    let labels = full_labels(&schema, &mut symbols, "pt", &vars, &derived);

    // Chain seeds up to length 3, then one-edit neighbours fill up to 175.
    let seeds = chain_seeds(&schema, 3, true);
    let seed_set: BTreeSet<CanonicalRule> = seeds.iter().cloned().collect();
    let mut neighbours: Vec<CanonicalRule> = seeds
        .iter()
        .filter(|c| c.body.len() <= 2)
        .flat_map(|c| single_edits(c, &schema, true))
        .filter(|c| !seed_set.contains(c))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0xa11d);
    neighbours.shuffle(&mut rng);
    let target_keys: BTreeSet<CanonicalRule> = target.iter().map(canonicalize_rule).collect();
    let mut pool: BTreeSet<CanonicalRule> = seed_set.union(&target_keys).cloned().collect();
    for n in neighbours {
        if pool.len() >= 175 {
            break;
        }
        pool.insert(n);
    }
    let rules = number_rules(&schema, pool);
    let problem = Problem {
        schema,
        symbols,
        input,
        labels,
        rules,
    };
    // x = &y; y = &z; w = x; v = *w; u = &t; *u = w; s = v;
    let heldout = [
        ("addr", "x", "y"),
        ("addr", "y", "z"),
        ("copy", "w", "x"),
        ("load", "v", "w"),
        ("addr", "u", "t"),
        ("store", "u", "w"),
        ("copy", "s", "v"),
        ("addr", "t", "k"),
        ("load", "m", "u"),
    ];
    write(&root.join("andersen"), &problem, &target, &heldout);
}

fn family(root: &Path) {
    let text = difflog::testkit::fixtures::family();
    write_problem(&root.join("family"), &text).unwrap();
    let refs: Vec<&Rule> = text.rules.iter().collect();
    write_rules(&root.join("family").join("expected.dl"), &text.schema, &text.symbols, &refs, "target program").unwrap();
}

fn main() {
    let root = std::env::args().nth(1).unwrap_or_else(|| "data".into());
    let root = Path::new(&root);
    family(root);
    samegen(root);
    andersen(root);
}
