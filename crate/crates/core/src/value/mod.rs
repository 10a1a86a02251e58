//! Value engines over the interaction of an environment and a policy.
//!
//! Every engine works on the extended measure of the interaction tree:
//! termination atoms at interior histories plus unresolved mass at the
//! horizon. Reports carry a certified interval `[lower, upper]` for the
//! untruncated value.

mod anytime;
mod choquet;
mod core;
mod lp;

use std::fmt;
use std::str::FromStr;

use num_traits::Zero;
use thiserror::Error;

use crate::arith::{Scalar, Q};
use crate::environment::{
    interact, EnvError, Environment, InteractionTree, Policy, SolomonoffNormalizedEnv,
};
use crate::semimeasure::TreeError;
use crate::utility::{DiscountSchedule, Utility, UtilityError};

pub use self::anytime::{anytime_bounds, anytime_bounds_tree};
pub use self::choquet::{
    level_set_masses, value_choquet_envelope, value_choquet_envelope_tree, value_choquet_levelset,
    value_choquet_levelset_tree, Cells,
};
pub use self::core::{core_min, core_min_tree, CoreAllocation, CoreMethod, CoreProblem};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValueError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Utility(#[from] UtilityError),
    #[error("environment percepts carry no rewards")]
    MissingRewards,
    #[error("horizon {horizon} exceeds the utility's horizon {max}")]
    HorizonTooLong { horizon: usize, max: usize },
    #[error("numeric inconsistency: {0}")]
    Numeric(String),
    #[error("linear program: {0}")]
    Lp(String),
    #[error("{semantics} semantics: {message}")]
    Semantics { semantics: Semantics, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Semantics {
    Recursive,
    Death,
    Choquet,
    Normalized,
}

impl Semantics {
    pub const ALL: [Semantics; 4] = [
        Semantics::Recursive,
        Semantics::Death,
        Semantics::Choquet,
        Semantics::Normalized,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Semantics::Recursive => "recursive",
            Semantics::Death => "death",
            Semantics::Choquet => "choquet",
            Semantics::Normalized => "normalized",
        }
    }
}

impl fmt::Display for Semantics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown semantics {0:?} (expected recursive, death, choquet or normalized)")]
pub struct UnknownSemantics(pub String);

impl FromStr for Semantics {
    type Err = UnknownSemantics;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "recursive" => Ok(Semantics::Recursive),
            "death" => Ok(Semantics::Death),
            "choquet" => Ok(Semantics::Choquet),
            "normalized" => Ok(Semantics::Normalized),
            other => Err(UnknownSemantics(other.to_string())),
        }
    }
}

/// A value with its truncation interval.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueReport<S = Q> {
    pub lower: S,
    pub upper: S,
    pub semantics: Semantics,
    pub horizon: usize,
}

/// Column names of [`ValueReport::csv_record`].
pub const CSV_HEADER: [&str; 7] = [
    "env", "policy", "utility", "semantics", "horizon", "lower", "upper",
];

impl<S: Scalar> ValueReport<S> {
    pub fn new(lower: S, upper: S, semantics: Semantics, horizon: usize) -> Result<Self, ValueError> {
        if lower.is_nan() || upper.is_nan() {
            return Err(ValueError::Numeric(format!("{semantics} value is NaN")));
        }
        if (upper.clone() - lower.clone()).is_negative_mass() {
            return Err(ValueError::Numeric(format!(
                "{semantics} lower bound {} exceeds upper bound {}",
                lower.render(),
                upper.render()
            )));
        }
        Ok(Self {
            lower,
            upper,
            semantics,
            horizon,
        })
    }

    pub fn width(&self) -> S {
        self.upper.clone() - self.lower.clone()
    }

    /// Whether `v` lies in `[lower, upper]`.
    pub fn brackets(&self, v: &S) -> bool {
        !(v.clone() - self.lower.clone()).is_negative_mass()
            && !(self.upper.clone() - v.clone()).is_negative_mass()
    }

    pub fn csv_record(&self, env: &str, policy: &str, utility: &str) -> [String; 7] {
        [
            env.to_string(),
            policy.to_string(),
            utility.to_string(),
            self.semantics.to_string(),
            self.horizon.to_string(),
            self.lower.render(),
            self.upper.render(),
        ]
    }
}

pub(crate) fn check_utility_horizon(u: &dyn Utility, horizon: usize) -> Result<(), ValueError> {
    match u.max_horizon() {
        Some(max) if horizon > max => Err(ValueError::HorizonTooLong { horizon, max }),
        _ => Ok(()),
    }
}

/// Discounted reward sum over the tree (Σ_t γ_t r_t mass), unnormalized.
/// The tail beyond the horizon is bounded by the reward range times
/// `Γ_T` times the surviving mass.
pub fn value_recursive<S: Scalar>(
    env: &dyn Environment,
    policy: &dyn Policy,
    schedule: &DiscountSchedule,
    horizon: usize,
) -> Result<ValueReport<S>, ValueError> {
    let rewards = env.percepts().rewards().ok_or(ValueError::MissingRewards)?;
    if let Some(max) = schedule.horizon() {
        if horizon > max {
            return Err(ValueError::HorizonTooLong { horizon, max });
        }
    }
    let tree = interact::<S>(env, policy, horizon)?;
    value_recursive_tree(&tree, schedule, rewards)
}

pub fn value_recursive_tree<S: Scalar>(
    tree: &InteractionTree<S>,
    schedule: &DiscountSchedule,
    rewards: &[Q],
) -> Result<ValueReport<S>, ValueError> {
    let horizon = tree.horizon();
    let gammas: Vec<S> = (0..=horizon)
        .map(|t| if t == 0 { S::zero() } else { S::from_q(&schedule.gamma(t)) })
        .collect();
    let rewards_s: Vec<S> = rewards.iter().map(S::from_q).collect();
    let mut partial = S::zero();
    let mut survival = S::zero();
    for (x, m) in tree.tree.nodes() {
        if m.is_zero() {
            continue;
        }
        if let Some(sym) = x.last() {
            let e = tree.layout.decode_step(sym).percept;
            partial = partial + gammas[x.len()].clone() * rewards_s[e].clone() * m.clone();
        }
        if x.len() == horizon {
            survival = survival + m.clone();
        }
    }
    if survival.is_negative_mass() {
        return Err(ValueError::Numeric("negative surviving mass".into()));
    }
    let tail = S::from_q(&schedule.tail(horizon)) * survival;
    let zero = Q::zero();
    let min_r = rewards.iter().min().unwrap_or(&zero).clone().min(Q::zero());
    let max_r = rewards.iter().max().unwrap_or(&zero).clone().max(Q::zero());
    ValueReport::new(
        partial.clone() + S::from_q(&min_r) * tail.clone(),
        partial + S::from_q(&max_r) * tail,
        Semantics::Recursive,
        horizon,
    )
}

/// Expected utility over the extended measure, with terminated histories
/// valued by `on_finite` and horizon leaves by the bounds over all their
/// continuations.
pub fn value_death<S: Scalar>(
    env: &dyn Environment,
    policy: &dyn Policy,
    u: &dyn Utility,
    horizon: usize,
) -> Result<ValueReport<S>, ValueError> {
    check_utility_horizon(u, horizon)?;
    let tree = interact::<S>(env, policy, horizon)?;
    value_death_tree(&tree, u)
}

pub fn value_death_tree<S: Scalar>(
    tree: &InteractionTree<S>,
    u: &dyn Utility,
) -> Result<ValueReport<S>, ValueError> {
    death_sum(tree, u, Semantics::Death)
}

fn death_sum<S: Scalar>(
    tree: &InteractionTree<S>,
    u: &dyn Utility,
    semantics: Semantics,
) -> Result<ValueReport<S>, ValueError> {
    let ext = tree.tree.extend()?;
    let mut lower = S::zero();
    let mut upper = S::zero();
    for (x, p) in ext.interior_atoms() {
        if p.is_zero() {
            continue;
        }
        let v = S::from_q(&u.on_finite(&tree.history(x)));
        lower = lower + p.clone() * v.clone();
        upper = upper + p.clone() * v;
    }
    for (z, p) in ext.leaf_masses() {
        if p.is_zero() {
            continue;
        }
        let b = u.extended_bounds(&tree.history(z));
        lower = lower + p.clone() * S::from_q(&b.lo);
        upper = upper + p.clone() * S::from_q(&b.hi);
    }
    ValueReport::new(lower, upper, semantics, tree.horizon())
}

/// Death value of the environment with every conditional rescaled to sum
/// to 1.
pub fn value_normalized<S: Scalar>(
    env: &dyn Environment,
    policy: &dyn Policy,
    u: &dyn Utility,
    horizon: usize,
) -> Result<ValueReport<S>, ValueError> {
    check_utility_horizon(u, horizon)?;
    let normalized = SolomonoffNormalizedEnv::new(env);
    let tree = interact::<S>(&normalized, policy, horizon)?;
    death_sum(&tree, u, Semantics::Normalized)
}

/// Dispatches on the semantics. Recursive values need a return utility and
/// use its discount schedule with the environment's rewards.
pub fn evaluate<S: Scalar>(
    env: &dyn Environment,
    policy: &dyn Policy,
    u: &dyn Utility,
    semantics: Semantics,
    horizon: usize,
) -> Result<ValueReport<S>, ValueError> {
    match semantics {
        Semantics::Recursive => {
            let (schedule, _) = u.return_structure().ok_or(ValueError::Semantics {
                semantics,
                message: format!("utility {} is not a discounted return", u.name()),
            })?;
            value_recursive(env, policy, schedule, horizon)
        }
        Semantics::Death => value_death(env, policy, u, horizon),
        Semantics::Choquet => value_choquet_envelope(env, policy, u, horizon),
        Semantics::Normalized => value_normalized(env, policy, u, horizon),
    }
}

/// One failed cross-route comparison.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub check: &'static str,
    pub left: String,
    pub right: String,
}

/// Recomputes the Choquet value through the level-set route and both core
/// methods and lists every disagreement with the envelope route.
pub fn self_check<S: Scalar>(
    env: &dyn Environment,
    policy: &dyn Policy,
    u: &dyn Utility,
    horizon: usize,
) -> Result<Vec<Mismatch>, ValueError> {
    check_utility_horizon(u, horizon)?;
    let tree = interact::<S>(env, policy, horizon)?;
    let envelope = value_choquet_envelope_tree(&tree, u)?;
    let levelset = value_choquet_levelset_tree(&tree, u)?;
    let (greedy, _) = core_min_tree(&tree, u, CoreMethod::Greedy)?;
    let (lp, _) = core_min_tree(&tree, u, CoreMethod::Lp)?;
    let mut out = Vec::new();
    let mut compare = |check: &'static str, a: &S, b: &S| {
        if !a.agrees_with(b) {
            out.push(Mismatch {
                check,
                left: a.render(),
                right: b.render(),
            });
        }
    };
    compare("levelset = envelope", &levelset.lower, &envelope.lower);
    compare("greedy = envelope", &greedy.lower, &envelope.lower);
    compare("lp = greedy", &lp.lower, &greedy.lower);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{pow_q, q, qi};
    use crate::environment::{perilous, procrastination, ConstantPolicy, FnPolicy, History};
    use crate::utility::{ConstantUtility, ReturnUtility};

    fn perilous_return() -> ReturnUtility {
        ReturnUtility::from_percepts(DiscountSchedule::halving(), perilous().percepts()).unwrap()
    }

    #[test]
    fn perilous_recursive_golden_values() {
        let env = perilous();
        let s = DiscountSchedule::halving();
        let v2 = value_recursive::<Q>(&env, &ConstantPolicy::new(1), &s, 20).unwrap();
        assert!(v2.brackets(&q(2, 3)));
        assert!(v2.width() <= pow_q(&q(1, 2), 18));
        let v1 = value_recursive::<Q>(&env, &ConstantPolicy::new(0), &s, 20).unwrap();
        assert!(v1.brackets(&qi(1)));
        assert!(v1.width() <= pow_q(&q(1, 2), 18));
    }

    #[test]
    fn zero_rewards_give_zero() {
        let env = crate::environment::TableEnvironment::tabulate(&perilous(), 3).unwrap();
        let rewards = vec![qi(0), qi(0)];
        let tree = interact::<Q>(&env, &ConstantPolicy::new(1), 3).unwrap();
        let v = value_recursive_tree(&tree, &DiscountSchedule::halving(), &rewards).unwrap();
        assert_eq!((v.lower, v.upper), (qi(0), qi(0)));
    }

    #[test]
    fn death_value_on_perilous() {
        let env = perilous();
        let u = perilous_return();
        let v = value_death::<Q>(&env, &ConstantPolicy::new(1), &u, 16).unwrap();
        assert!(v.brackets(&q(2, 3)));
        let rec = value_recursive::<Q>(&env, &ConstantPolicy::new(1), u.schedule(), 16).unwrap();
        assert_eq!(v.lower, rec.lower);
        let c = value_death::<Q>(&env, &ConstantPolicy::new(1), &ConstantUtility::new(qi(1)), 6).unwrap();
        assert_eq!((c.lower, c.upper), (qi(1), qi(1)));
    }

    #[test]
    fn death_value_on_procrastination() {
        let (env, u) = procrastination();
        let act_at_3 = FnPolicy::new(|h: &History, _n: usize| {
            Ok(if h.len() == 2 { vec![qi(0), qi(1)] } else { vec![qi(1), qi(0)] })
        });
        for t in 3..6 {
            let v = value_death::<Q>(&env, &act_at_3, &u, t).unwrap();
            assert_eq!((v.lower, v.upper), (q(2, 3), q(2, 3)));
        }
    }

    #[test]
    fn normalized_perilous_is_two() {
        let env = perilous();
        let u = perilous_return();
        let v = value_normalized::<Q>(&env, &ConstantPolicy::new(1), &u, 20).unwrap();
        assert!(v.brackets(&qi(2)));
        assert_eq!(v.semantics, Semantics::Normalized);
    }

    #[test]
    fn float_mode_tracks_exact() {
        let env = perilous();
        let u = perilous_return();
        for sem in Semantics::ALL {
            let e = evaluate::<Q>(&env, &ConstantPolicy::new(1), &u, sem, 12).unwrap();
            let f = evaluate::<f64>(&env, &ConstantPolicy::new(1), &u, sem, 12).unwrap();
            assert!(f.lower.agrees_with(&e.lower.to_f64()), "{sem}");
            assert!(f.upper.agrees_with(&e.upper.to_f64()), "{sem}");
        }
    }

    #[test]
    fn semantics_names_round_trip() {
        for s in Semantics::ALL {
            assert_eq!(s.as_str().parse::<Semantics>().unwrap(), s);
        }
        assert!("pessimistic".parse::<Semantics>().is_err());
    }

    #[test]
    fn csv_record_renders_rationals() {
        let r = ValueReport::new(q(2, 3), qi(1), Semantics::Death, 4).unwrap();
        assert_eq!(
            r.csv_record("perilous", "always:2", "return"),
            ["perilous", "always:2", "return", "death", "4", "2/3", "1/1"].map(String::from)
        );
        assert!(ValueReport::new(qi(1), qi(0), Semantics::Death, 1).is_err());
    }

    #[test]
    fn recursive_needs_a_return_utility() {
        let (env, u) = procrastination();
        let err = evaluate::<Q>(&env, &ConstantPolicy::new(0), &u, Semantics::Recursive, 2).unwrap_err();
        assert!(matches!(err, ValueError::Semantics { .. }));
    }
}
