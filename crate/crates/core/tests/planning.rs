use std::sync::Arc;

use num_traits::One;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use semival::arith::{q, qi, Q};
use semival::environment::{mixture, Environment, History, Step, TableEnvironment};
use semival::planning::{aixi_action, expectimax, read_policy, renormalized_value, write_policy};
use semival::random::{random_environment, random_policy, EnvSpec};
use semival::utility::{DiscountSchedule, ReturnUtility, Utility};
use semival::value::{evaluate, Semantics};

fn env(seed: u64) -> TableEnvironment {
    let spec = EnvSpec {
        actions: 2,
        percepts: 2,
        horizon: 3,
        rewards: Some(vec![qi(0), qi(1)]),
        defective: true,
    };
    random_environment(&mut ChaCha8Rng::seed_from_u64(seed), &spec).unwrap()
}

fn returns(env: &dyn Environment) -> ReturnUtility {
    ReturnUtility::from_percepts(DiscountSchedule::halving(), env.percepts()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn plans_beat_random_policies(seed in any::<u64>(), other in any::<u64>()) {
        let e = env(seed);
        let u = returns(&e);
        let rival = random_policy(&mut ChaCha8Rng::seed_from_u64(other), e.layout(), 3, other % 2 == 0);
        for sem in Semantics::ALL {
            let plan = expectimax::<Q>(&e, &u, sem, 3).unwrap();
            let v = evaluate::<Q>(&e, &rival, &u, sem, 3).unwrap();
            prop_assert!(plan.value.lower >= v.lower, "{} lost to a rival", sem);
        }
    }

    #[test]
    fn cylinder_values_add_up_to_the_death_value(seed in any::<u64>()) {
        let e = env(seed);
        let u = returns(&e);
        let plan = expectimax::<Q>(&e, &u, Semantics::Death, 3).unwrap();
        let a = plan.policy.action(&History::empty()).unwrap();
        let loss = Q::one() - e.conditional(&History::empty(), a).unwrap().into_iter().sum::<Q>();
        let root = u.on_finite(&History::empty());
        let (mut lo, mut hi) = (&loss * &root, &loss * &root);
        for p in 0..2 {
            let prefix = History::new(vec![Step::new(a, p)]);
            let r = renormalized_value::<Q>(&e, &plan.policy, &u, &prefix, Semantics::Death, 3).unwrap();
            lo += r.report.lower;
            hi += r.report.upper;
        }
        prop_assert_eq!(lo, plan.value.lower);
        prop_assert_eq!(hi, plan.value.upper);
    }

    #[test]
    fn policy_files_round_trip(seed in any::<u64>()) {
        let e = env(seed);
        let plan = expectimax::<Q>(&e, &returns(&e), Semantics::Choquet, 3).unwrap();
        let mut buf = Vec::new();
        write_policy(&plan.policy, e.actions(), e.percepts().alphabet(), &mut buf).unwrap();
        let back = read_policy(buf.as_slice(), e.actions(), e.percepts().alphabet()).unwrap();
        prop_assert_eq!(back.assignments(), plan.policy.assignments());
    }
}

#[test]
fn aixi_follows_the_mixture_plan() {
    for seed in 0..20 {
        let (a, b) = (env(2 * seed), env(2 * seed + 1));
        let mix = mixture(vec![
            (q(1, 2), Arc::new(a) as Arc<dyn Environment>),
            (q(1, 2), Arc::new(b) as Arc<dyn Environment>),
        ])
        .unwrap();
        let u = returns(&mix);
        for sem in [Semantics::Death, Semantics::Choquet] {
            let plan = expectimax::<Q>(&mix, &u, sem, 3).unwrap();
            let act = aixi_action(&mix, &u, &History::empty(), sem, 3).unwrap();
            assert_eq!(Some(act), plan.policy.action(&History::empty()), "seed {seed} {sem}");
        }
    }
}
