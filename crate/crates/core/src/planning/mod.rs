//! Finite-horizon planning.
//!
//! [`expectimax`] runs backward induction on the per-unit-mass value of
//! each history: a chosen action splits the node's mass into percept
//! children and a termination atom, so every value engine is linear in the
//! decision at each node. [`enumerate_policies`] is the brute-force oracle.

mod policy_tree;

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::arith::{Scalar, Q};
use crate::environment::{
    checked_conditional, history_mass, interact, EnvError, Environment, History, Mixture,
    Policy, PrefixForcedPolicy, SolomonoffNormalizedEnv, Step,
};
use crate::utility::{Bounds, Utility, UtilityError};
use crate::value::{check_utility_horizon, Semantics, ValueError, ValueReport};

pub use policy_tree::{read_policy, write_policy, PolicyIoError, PolicyTree};

/// Default ceiling on the number of enumerated policies.
pub const POLICY_CAP: u128 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error(transparent)]
    Value(#[from] ValueError),
    #[error("{count}{} deterministic policies exceed the cap of {cap}", if *.at_least { " or more" } else { "" })]
    TooManyPolicies {
        count: BigUint,
        at_least: bool,
        cap: u128,
    },
    #[error("history of length {len} leaves no decision before the horizon {horizon}")]
    NoDecisionLeft { len: usize, horizon: usize },
}

impl From<EnvError> for PlanError {
    fn from(e: EnvError) -> Self {
        PlanError::Value(e.into())
    }
}

impl From<UtilityError> for PlanError {
    fn from(e: UtilityError) -> Self {
        PlanError::Value(e.into())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult<S = Q> {
    pub policy: PolicyTree,
    pub value: ValueReport<S>,
}

struct Planner<'a, S> {
    env: &'a dyn Environment,
    u: &'a dyn Utility,
    semantics: Semantics,
    horizon: usize,
    /// `γ_t · r_e`, indexed `[t][e]`, for recursive values.
    edges: Vec<Vec<S>>,
    recursive_leaf: (S, S),
}

impl<S: Scalar> Planner<'_, S> {
    fn atom(&self, h: &History) -> Result<(S, S), ValueError> {
        Ok(match self.semantics {
            Semantics::Recursive => (S::zero(), S::zero()),
            Semantics::Death | Semantics::Normalized => {
                let v = S::from_q(&self.u.on_finite(h));
                (v.clone(), v)
            }
            Semantics::Choquet => {
                let e = self.u.envelope(h, self.horizon, self.env.layout())?;
                (S::from_q(&e.lo), S::from_q(&e.hi))
            }
        })
    }

    fn leaf(&self, h: &History) -> (S, S) {
        let b: Bounds = match self.semantics {
            Semantics::Recursive => return self.recursive_leaf.clone(),
            Semantics::Death | Semantics::Normalized => self.u.extended_bounds(h),
            Semantics::Choquet => self.u.bounds(h),
        };
        (S::from_q(&b.lo), S::from_q(&b.hi))
    }

    /// Value per unit mass at `h` with the optimal continuation, recording
    /// its decisions in `out`.
    fn solve(
        &self,
        h: &mut History,
        out: &mut BTreeMap<History, usize>,
    ) -> Result<(S, S), ValueError> {
        if h.len() >= self.horizon {
            return Ok(self.leaf(h));
        }
        let mut best: Option<(S, S, usize, BTreeMap<History, usize>)> = None;
        for a in 0..self.env.actions().len() {
            let c = checked_conditional(self.env, h, a)?;
            let sum: Q = c.iter().cloned().sum();
            if sum > Q::one() {
                return Err(EnvError::ChronologyViolation {
                    history: h.clone(),
                    action: a,
                    excess: crate::arith::render_q(&(sum - Q::one())),
                }
                .into());
            }
            let mut sub = BTreeMap::new();
            let (mut lo, mut hi) = (S::zero(), S::zero());
            if sum < Q::one() {
                let (alo, ahi) = self.atom(h)?;
                let w = S::from_q(&(Q::one() - &sum));
                lo = lo + w.clone() * alo;
                hi = hi + w * ahi;
            }
            for (e, m) in c.iter().enumerate() {
                if m.is_zero() {
                    continue;
                }
                let edge = self.edges[h.len() + 1][e].clone();
                h.push(Step::new(a, e));
                let (clo, chi) = self.solve(h, &mut sub)?;
                h.pop();
                let m = S::from_q(m);
                lo = lo + m.clone() * (edge.clone() + clo);
                hi = hi + m * (edge + chi);
            }
            if best.as_ref().is_none_or(|(b, _, _, _)| lo > *b) {
                best = Some((lo, hi, a, sub));
            }
        }
        let (lo, hi, a, sub) = best.expect("environments have at least one action");
        out.insert(h.clone(), a);
        out.extend(sub);
        Ok((lo, hi))
    }
}

/// Optimal deterministic policy from the empty history.
pub fn expectimax<S: Scalar>(
    env: &dyn Environment,
    u: &dyn Utility,
    semantics: Semantics,
    horizon: usize,
) -> Result<PlanResult<S>, PlanError> {
    expectimax_from(env, u, semantics, &History::empty(), horizon)
}

/// Optimal continuation below `root`. The value is per unit mass of `root`
/// and the policy assigns actions at `root` and below. `horizon` counts
/// steps from the empty history.
pub fn expectimax_from<S: Scalar>(
    env: &dyn Environment,
    u: &dyn Utility,
    semantics: Semantics,
    root: &History,
    horizon: usize,
) -> Result<PlanResult<S>, PlanError> {
    if let Some(h) = env.horizon() {
        if horizon > h {
            return Err(EnvError::BeyondHorizon { depth: horizon, horizon: h }.into());
        }
    }
    let normalized;
    let env: &dyn Environment = if semantics == Semantics::Normalized {
        normalized = SolomonoffNormalizedEnv::new(env);
        &normalized
    } else {
        env
    };
    let n_percepts = env.percepts().len();
    let (edges, recursive_leaf) = if semantics == Semantics::Recursive {
        let (schedule, _) = u.return_structure().ok_or(ValueError::Semantics {
            semantics,
            message: format!("utility {} is not a discounted return", u.name()),
        })?;
        if let Some(max) = schedule.horizon() {
            if horizon > max {
                return Err(ValueError::HorizonTooLong { horizon, max }.into());
            }
        }
        let rewards = env.percepts().rewards().ok_or(ValueError::MissingRewards)?;
        let edges = (0..=horizon)
            .map(|t| {
                rewards
                    .iter()
                    .map(|r| if t == 0 { S::zero() } else { S::from_q(&(schedule.gamma(t) * r)) })
                    .collect()
            })
            .collect();
        let tail = schedule.tail(horizon);
        let zero = Q::zero();
        let min_r = rewards.iter().min().unwrap_or(&zero).clone().min(Q::zero());
        let max_r = rewards.iter().max().unwrap_or(&zero).clone().max(Q::zero());
        (edges, (S::from_q(&(&tail * min_r)), S::from_q(&(tail * max_r))))
    } else {
        check_utility_horizon(u, horizon)?;
        (
            vec![vec![S::zero(); n_percepts]; horizon + 1],
            (S::zero(), S::zero()),
        )
    };
    let planner = Planner {
        env,
        u,
        semantics,
        horizon,
        edges,
        recursive_leaf,
    };
    let mut decisions = BTreeMap::new();
    let mut h = root.clone();
    let (lo, hi) = planner.solve(&mut h, &mut decisions)?;
    Ok(PlanResult {
        policy: PolicyTree::new(decisions).with_name(format!("plan:{semantics}")),
        value: ValueReport::new(lo, hi, semantics, horizon)?,
    })
}

/// Every total deterministic policy over the decision histories of positive
/// environment mass, in lexicographic order of the action vector.
pub struct PolicyEnumeration {
    nodes: Vec<History>,
    digits: Vec<usize>,
    n_actions: usize,
    done: bool,
}

impl PolicyEnumeration {
    pub fn nodes(&self) -> &[History] {
        &self.nodes
    }

    pub fn policy_count(&self) -> BigUint {
        BigUint::from(self.n_actions).pow(self.nodes.len() as u32)
    }
}

impl Iterator for PolicyEnumeration {
    type Item = PolicyTree;

    fn next(&mut self) -> Option<PolicyTree> {
        if self.done {
            return None;
        }
        let tree = PolicyTree::new(self.nodes.iter().cloned().zip(self.digits.iter().copied()).collect());
        self.done = true;
        for d in self.digits.iter_mut().rev() {
            *d += 1;
            if *d < self.n_actions {
                self.done = false;
                break;
            }
            *d = 0;
        }
        Some(tree)
    }
}

pub fn enumerate_policies(
    env: &dyn Environment,
    horizon: usize,
    cap: u128,
) -> Result<PolicyEnumeration, PlanError> {
    let n_actions = env.actions().len();
    let limit = BigUint::from(cap);
    let mut nodes = BTreeSet::new();
    let mut stack = vec![History::empty()];
    while let Some(h) = stack.pop() {
        if h.len() >= horizon {
            continue;
        }
        nodes.insert(h.clone());
        let count = BigUint::from(n_actions).pow(nodes.len() as u32);
        if count > limit {
            return Err(PlanError::TooManyPolicies {
                count,
                at_least: true,
                cap,
            });
        }
        for a in 0..n_actions {
            let c = checked_conditional(env, &h, a)?;
            for (e, m) in c.iter().enumerate() {
                if !m.is_zero() {
                    stack.push(h.extended(Step::new(a, e)));
                }
            }
        }
    }
    let nodes: Vec<History> = nodes.into_iter().collect();
    Ok(PolicyEnumeration {
        digits: vec![0; nodes.len()],
        nodes,
        n_actions,
        done: false,
    })
}

/// A value restricted to the cylinder of a prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct Renormalized<S = Q> {
    pub report: ValueReport<S>,
    /// The prefix has zero mass or leaves the policy's support.
    pub null_event: bool,
}

/// Integrates the utility over the atoms and horizon leaves inside the
/// cylinder of `prefix`, with the policy's actions on the prefix played
/// with probability 1. No division by the cylinder mass.
pub fn renormalized_value<S: Scalar>(
    env: &dyn Environment,
    policy: &dyn Policy,
    u: &dyn Utility,
    prefix: &History,
    semantics: Semantics,
    horizon: usize,
) -> Result<Renormalized<S>, PlanError> {
    if semantics == Semantics::Recursive {
        return Err(ValueError::Semantics {
            semantics,
            message: "cylinder restriction needs a utility-based semantics".into(),
        }
        .into());
    }
    if prefix.len() > horizon {
        return Err(UtilityError::PrefixTooLong {
            len: prefix.len(),
            depth: horizon,
        }
        .into());
    }
    check_utility_horizon(u, horizon)?;
    let normalized;
    let env: &dyn Environment = if semantics == Semantics::Normalized {
        normalized = SolomonoffNormalizedEnv::new(env);
        &normalized
    } else {
        env
    };
    let null = || -> Result<Renormalized<S>, PlanError> {
        Ok(Renormalized {
            report: ValueReport::new(S::zero(), S::zero(), semantics, horizon)?,
            null_event: true,
        })
    };
    let n_actions = env.actions().len();
    for t in 0..prefix.len() {
        let pi = policy.distribution(&prefix.prefix(t), n_actions)?;
        if pi.get(prefix.steps()[t].action).is_none_or(|p| p.is_zero()) {
            return null();
        }
    }
    if history_mass(env, prefix)?.is_zero() {
        return null();
    }
    let forced = PrefixForcedPolicy::new(policy, prefix.clone());
    let tree = interact::<S>(env, &forced, horizon)?;
    let ext = tree.tree.extend().map_err(ValueError::from)?;
    let root = tree.node(prefix);
    let mut lower = S::zero();
    let mut upper = S::zero();
    for (x, p) in ext.interior_atoms() {
        if p.is_zero() || !root.is_prefix_of(x) {
            continue;
        }
        let h = tree.history(x);
        let b = match semantics {
            Semantics::Choquet => u.envelope(&h, horizon, tree.layout)?,
            _ => Bounds::point(u.on_finite(&h)),
        };
        lower = lower + p.clone() * S::from_q(&b.lo);
        upper = upper + p.clone() * S::from_q(&b.hi);
    }
    for (z, p) in ext.leaf_masses() {
        if p.is_zero() || !root.is_prefix_of(z) {
            continue;
        }
        let h = tree.history(z);
        let b = match semantics {
            Semantics::Choquet => u.bounds(&h),
            _ => u.extended_bounds(&h),
        };
        lower = lower + p.clone() * S::from_q(&b.lo);
        upper = upper + p.clone() * S::from_q(&b.hi);
    }
    Ok(Renormalized {
        report: ValueReport::new(lower, upper, semantics, horizon)?,
        null_event: false,
    })
}

/// The action a Bayesian agent over `mix` takes after `history`: the
/// mixture's predictive conditionals already carry the posterior, so this
/// plans from `history` on the mixture itself. `horizon` is the total
/// number of steps.
pub fn aixi_action(
    mix: &Mixture,
    u: &dyn Utility,
    history: &History,
    semantics: Semantics,
    horizon: usize,
) -> Result<usize, PlanError> {
    if history.len() >= horizon {
        return Err(PlanError::NoDecisionLeft {
            len: history.len(),
            horizon,
        });
    }
    crate::environment::posterior(mix, history)?;
    let plan = expectimax_from::<Q>(mix, u, semantics, history, horizon)?;
    Ok(plan
        .policy
        .action(history)
        .expect("the planned root always has a decision"))
}
