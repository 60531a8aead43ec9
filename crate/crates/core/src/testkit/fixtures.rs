use crate::datalog::{parse_problem_text, Problem};

pub const FAMILY_RELATIONS: &str = "input parent 2\noutput samegen 2\n";
pub const FAMILY_PARENT: &str = "Will\tNoah\nAnn\tNoah\nJim\tEmma\nAva\tEmma\nNoah\tLiam\nEmma\tLiam\n";
pub const FAMILY_POSITIVE: &str = "samegen\tAnn\tJim\n";
pub const FAMILY_NEGATIVE: &str = "samegen\tAva\tLiam\nsamegen\tJim\tEmma\n";
pub const FAMILY_RULES: &str = "r1: samegen(x, y) :- parent(x, z), parent(y, z).\n\
                                r2: samegen(x, u) :- parent(x, y), parent(u, v), samegen(y, v).\n";

/// The six-person family tree with candidates `r1` and `r2`.
pub fn family() -> Problem {
    family_with_rules(FAMILY_RULES)
}

/// The family tree with other candidate rules.
pub fn family_with_rules(rules: &str) -> Problem {
    parse_problem_text(
        FAMILY_RELATIONS,
        &[("parent", FAMILY_PARENT)],
        FAMILY_POSITIVE,
        FAMILY_NEGATIVE,
        rules,
    )
    .expect("fixture parses")
}
