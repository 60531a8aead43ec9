use std::collections::BTreeSet;

use super::ground::{for_each_binding, instantiate, FactIndex};
use super::model::*;

/// Least fixpoint of `rules` over `input`, by naive iteration: every round
/// re-joins each rule against everything derived so far.
///
/// The result contains the input tuples as well as the derived ones.
pub fn boolean_fixpoint<'a>(rules: impl IntoIterator<Item = &'a Rule>, input: &Database) -> Database {
    let rules: Vec<&Rule> = rules.into_iter().collect();
    let mut db = input.clone();
    loop {
        let index = FactIndex::new(&db);
        let mut fresh = Vec::new();
        for rule in &rules {
            let sources = vec![&index; rule.body.len()];
            for_each_binding(rule, &sources, |b| {
                let t = instantiate(&rule.head, b);
                if !db.contains(&t) {
                    fresh.push(t);
                }
            });
        }
        if fresh.is_empty() {
            return db;
        }
        for t in fresh {
            db.insert(t);
        }
    }
}

/// Same result as [`boolean_fixpoint`], joining each rule once per body
/// position against only the tuples that were new in the previous round.
pub fn boolean_fixpoint_semi_naive<'a>(
    rules: impl IntoIterator<Item = &'a Rule>,
    input: &Database,
) -> Database {
    let rules: Vec<&Rule> = rules.into_iter().collect();
    let mut db = input.clone();
    let mut delta = input.clone();
    while !delta.is_empty() {
        let full = FactIndex::new(&db);
        let recent = FactIndex::new(&delta);
        let mut next = Database::new();
        for rule in &rules {
            for j in 0..rule.body.len() {
                if delta.relation_len(rule.body[j].rel) == 0 {
                    continue;
                }
                let sources: Vec<&FactIndex> = (0..rule.body.len())
                    .map(|i| if i == j { &recent } else { &full })
                    .collect();
                for_each_binding(rule, &sources, |b| {
                    let t = instantiate(&rule.head, b);
                    if !db.contains(&t) {
                        next.insert(t);
                    }
                });
            }
        }
        db.extend(&next);
        delta = next;
    }
    db
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolutionCheck {
    Accepted,
    Rejected {
        /// Positive labels the program fails to derive.
        missing: BTreeSet<Tuple>,
        /// Negative labels the program derives.
        spurious: BTreeSet<Tuple>,
    },
}

impl SolutionCheck {
    pub fn is_accepted(&self) -> bool {
        matches!(self, SolutionCheck::Accepted)
    }
}

pub fn check_solution<'a>(
    rules: impl IntoIterator<Item = &'a Rule>,
    input: &Database,
    labels: &LabelSet,
) -> SolutionCheck {
    let out = boolean_fixpoint(rules, input);
    let missing: BTreeSet<Tuple> = labels
        .positive
        .iter()
        .filter(|t| !out.contains(t))
        .cloned()
        .collect();
    let spurious: BTreeSet<Tuple> = labels
        .negative
        .iter()
        .filter(|t| out.contains(t))
        .cloned()
        .collect();
    if missing.is_empty() && spurious.is_empty() {
        SolutionCheck::Accepted
    } else {
        SolutionCheck::Rejected { missing, spurious }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit::fixtures::{family, family_with_rules, FAMILY_RULES};
    use crate::testkit::naive_closure;

    fn samegen(p: &Problem, a: &str, b: &str) -> Tuple {
        p.tuple("samegen", &[a, b]).unwrap()
    }

    #[test]
    fn family_fixpoint() {
        let p = family();
        let out = boolean_fixpoint(p.rules.iter(), &p.input);
        for (a, b) in [("Noah", "Emma"), ("Ann", "Will"), ("Jim", "Ann")] {
            assert!(out.contains(&samegen(&p, a, b)));
        }
        assert!(!out.contains(&samegen(&p, "Ava", "Liam")));
        let rel = p.schema.lookup("samegen").unwrap();
        // All pairs among the four grandparents plus all pairs among Noah and Emma.
        assert_eq!(out.relation_len(rel), 16 + 4);
        assert_eq!(out, boolean_fixpoint_semi_naive(p.rules.iter(), &p.input));
    }

    #[test]
    fn no_rules_derive_nothing() {
        let p = family();
        assert_eq!(boolean_fixpoint([], &p.input), p.input);
        match check_solution([], &p.input, &p.labels) {
            SolutionCheck::Rejected { missing, spurious } => {
                assert_eq!(missing, [samegen(&p, "Ann", "Jim")].into());
                assert!(spurious.is_empty());
            }
            SolutionCheck::Accepted => panic!("empty program accepted"),
        }
    }

    #[test]
    fn target_rules_are_accepted() {
        let p = family();
        assert!(check_solution(p.rules.iter(), &p.input, &p.labels).is_accepted());
    }

    #[test]
    fn parent_rule_is_rejected_with_exact_spurious_set() {
        let text = format!("{FAMILY_RULES}r3: samegen(x, y) :- parent(x, y).\n");
        let p = family_with_rules(&text);
        let rules: Vec<&Rule> = p.rules.iter().collect();
        let oracle = naive_closure(&rules, &p.input);
        let expected: BTreeSet<Tuple> = p
            .labels
            .negative
            .iter()
            .filter(|t| oracle.contains(t))
            .cloned()
            .collect();
        assert_eq!(expected, [samegen(&p, "Jim", "Emma")].into());
        assert_eq!(
            check_solution(p.rules.iter(), &p.input, &p.labels),
            SolutionCheck::Rejected {
                missing: BTreeSet::new(),
                spurious: expected,
            }
        );
    }
}
