use difflog::datalog::{boolean_fixpoint, boolean_fixpoint_semi_naive, Problem, Rule};
use difflog::testkit::{checks, naive_closure, random_instance, InstanceParams};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn instance(seed: u64, params: &InstanceParams) -> (Problem, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = random_instance(&mut rng, params);
    (p, rng)
}

fn small() -> InstanceParams {
    InstanceParams {
        constants: 5,
        rules: 5,
        ..InstanceParams::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fixpoint_ignores_rule_order(seed in any::<u64>()) {
        let (p, mut rng) = instance(seed, &small());
        let mut order: Vec<&Rule> = p.rules.iter().collect();
        order.shuffle(&mut rng);
        prop_assert_eq!(boolean_fixpoint(order, &p.input), boolean_fixpoint(p.rules.iter(), &p.input));
    }

    #[test]
    fn semi_naive_matches_naive_and_substitution(seed in any::<u64>()) {
        let (p, _) = instance(seed, &small());
        let naive = boolean_fixpoint(p.rules.iter(), &p.input);
        prop_assert_eq!(&boolean_fixpoint_semi_naive(p.rules.iter(), &p.input), &naive);
        let rules: Vec<&Rule> = p.rules.iter().collect();
        let by_substitution: Vec<_> = naive_closure(&rules, &p.input).into_iter().collect();
        prop_assert_eq!(naive.iter().collect::<Vec<_>>(), by_substitution);
    }

    #[test]
    fn fixpoint_is_idempotent(seed in any::<u64>()) {
        let (p, _) = instance(seed, &small());
        let once = boolean_fixpoint(p.rules.iter(), &p.input);
        prop_assert_eq!(boolean_fixpoint(p.rules.iter(), &once), once);
    }

    #[test]
    fn fixpoint_is_monotone(seed in any::<u64>()) {
        let (p, mut rng) = instance(seed, &small());
        let full = boolean_fixpoint(p.rules.iter(), &p.input);
        let fewer_rules: Vec<&Rule> = p.rules.iter().filter(|_| rand::Rng::gen_bool(&mut rng, 0.5)).collect();
        prop_assert!(boolean_fixpoint(fewer_rules, &p.input).is_subset(&full));
        let mut facts: Vec<_> = p.input.iter().collect();
        facts.truncate(facts.len() / 2);
        let fewer_facts = facts.into_iter().collect();
        prop_assert!(boolean_fixpoint(p.rules.iter(), &fewer_facts).is_subset(&full));
    }

    #[test]
    fn positive_values_follow_the_support(seed in any::<u64>()) {
        let (p, mut rng) = instance(seed, &small());
        prop_assert_eq!(checks::refinement(&p, &mut rng), Ok(()));
    }

    #[test]
    fn values_are_monotone_in_weights(seed in any::<u64>()) {
        let (p, mut rng) = instance(seed, &small());
        prop_assert_eq!(checks::monotonicity(&p, &mut rng), Ok(()));
    }

    #[test]
    fn values_are_continuous(seed in any::<u64>()) {
        let (p, mut rng) = instance(seed, &small());
        prop_assert_eq!(checks::continuity(&p, &mut rng, 4), Ok(()));
    }

    #[test]
    fn values_match_tree_enumeration(seed in any::<u64>()) {
        let (p, mut rng) = instance(seed, &small());
        prop_assert_eq!(checks::oracle_equivalence(&p, &mut rng), Ok(()));
    }

    #[test]
    fn gradients_match_finite_differences(seed in any::<u64>()) {
        let (p, mut rng) = instance(seed, &small());
        prop_assert_eq!(checks::gradient_agreement(&p, &mut rng).map(|_| ()), Ok(()));
    }
}
