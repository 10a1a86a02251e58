use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use semival::arith::{q, qi, Scalar, Q};
use semival::environment::{interact, perilous, ConstantPolicy, Environment, TableEnvironment, TablePolicy};
use semival::random::{random_environment, random_policy, random_rewards, random_signed_utility, EnvSpec};
use semival::utility::{DiscountSchedule, ReturnUtility};
use semival::value::{
    anytime_bounds, evaluate, self_check, value_choquet_envelope_tree, value_death_tree, Semantics,
};

fn instance(seed: u64, defective: bool) -> (TableEnvironment, TablePolicy, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = EnvSpec {
        actions: 2,
        percepts: 3,
        horizon: 3,
        rewards: Some(random_rewards(&mut rng, 3, &[qi(0), q(1, 2), qi(1)], false)),
        defective,
    };
    let env = random_environment(&mut rng, &spec).unwrap();
    let policy = random_policy(&mut rng, env.layout(), 3, false);
    (env, policy, 3)
}

fn returns(env: &dyn Environment) -> ReturnUtility {
    ReturnUtility::from_percepts(DiscountSchedule::halving(), env.percepts()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn float_mode_tracks_rational_mode(seed in any::<u64>()) {
        let (env, policy, t) = instance(seed, true);
        let u = returns(&env);
        for sem in Semantics::ALL {
            let exact = evaluate::<Q>(&env, &policy, &u, sem, t).unwrap();
            let float = evaluate::<f64>(&env, &policy, &u, sem, t).unwrap();
            prop_assert!(float.lower.agrees_with(&exact.lower.to_f64()));
            prop_assert!(float.upper.agrees_with(&exact.upper.to_f64()));
        }
    }

    #[test]
    fn pessimism_never_undercuts_death_for_nonnegative_rewards(seed in any::<u64>()) {
        let (env, policy, t) = instance(seed, true);
        let u = returns(&env);
        let tree = interact::<Q>(&env, &policy, t).unwrap();
        let c = value_choquet_envelope_tree(&tree, &u).unwrap();
        let d = value_death_tree(&tree, &u).unwrap();
        prop_assert!(c.lower >= d.lower);
    }

    #[test]
    fn proper_environments_collapse_the_semantics(seed in any::<u64>()) {
        let (env, policy, t) = instance(seed, false);
        let u = returns(&env);
        let death = evaluate::<Q>(&env, &policy, &u, Semantics::Death, t).unwrap();
        for sem in [Semantics::Recursive, Semantics::Choquet, Semantics::Normalized] {
            let other = evaluate::<Q>(&env, &policy, &u, sem, t).unwrap();
            prop_assert_eq!(&other.upper, &death.upper);
        }
    }

    #[test]
    fn routes_agree_on_signed_utilities(seed in any::<u64>()) {
        let (env, policy, t) = instance(seed, true);
        let u = random_signed_utility(&mut ChaCha8Rng::seed_from_u64(seed ^ 1), env.layout(), 2).unwrap();
        prop_assert!(self_check::<Q>(&env, &policy, &u, t).unwrap().is_empty());
    }
}

#[test]
fn perilous_reports_are_nested_as_the_horizon_grows() {
    let env = perilous();
    let u = returns(&env);
    let policy = ConstantPolicy::new(1);
    for sem in Semantics::ALL {
        let mut prev = evaluate::<Q>(&env, &policy, &u, sem, 1).unwrap();
        for t in 2..=10 {
            let next = evaluate::<Q>(&env, &policy, &u, sem, t).unwrap();
            assert!(next.lower >= prev.lower && next.upper <= prev.upper, "{sem} at {t}");
            prev = next;
        }
    }
}

#[test]
fn anytime_bounds_sit_below_the_value() {
    let env = perilous();
    let u = returns(&env);
    let v = anytime_bounds::<Q>(&env, &ConstantPolicy::new(1), &u, 8).unwrap();
    assert_eq!(v[0], qi(1));
    assert!(v.iter().all(|x| *x <= q(4, 3)));
}
