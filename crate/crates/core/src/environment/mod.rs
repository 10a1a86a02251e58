//! Chronological semimeasure environments and their interaction with
//! policies.
//!
//! An environment answers, for a history and an action, a vector of percept
//! masses summing to at most 1. The missing mass is the chance that the
//! interaction stops there. Conditionals are only ever queried at histories
//! of positive mass.

mod builtin;
mod mixture;
mod policy;
pub mod table;
mod transform;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::arith::{render_q, Scalar, Q};
use crate::semimeasure::{Alphabet, AlphabetError, FiniteString, PreSemimeasureTree};

pub use builtin::{perilous, procrastination, Perilous, Procrastination};
pub use mixture::{mixture, posterior, Mixture};
pub use policy::{ConstantPolicy, FnPolicy, Policy, PrefixForcedPolicy, TablePolicy, UniformPolicy};
pub(crate) use policy::unit_vector;
pub use table::TableEnvironment;
pub use transform::{death_completion, DeathCompletion, DeathExtendedPolicy, SolomonoffNormalizedEnv};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnvError {
    #[error("conditional undefined at history {history} for action {action}")]
    Undefined { history: History, action: usize },
    #[error("negative mass at history {history}, action {action}, percept {percept}")]
    NegativeMass {
        history: History,
        action: usize,
        percept: usize,
    },
    #[error("expected {expected} entries, got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("percept masses at history {history}, action {action} exceed 1 by {excess}")]
    ChronologyViolation {
        history: History,
        action: usize,
        excess: String,
    },
    #[error("policy at history {history} sums to {sum}, expected 1")]
    PolicyNotProper { history: History, sum: String },
    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),
    #[error("history {0} has zero mass; cannot condition on it")]
    NullConditioning(History),
    #[error("policy assigns no action at history {0}")]
    NoDecision(History),
    #[error("mixture needs at least one component")]
    EmptyMixture,
    #[error("mixture weights must be positive with sum at most 1 (got {0})")]
    BadWeights(String),
    #[error("depth {depth} exceeds the environment horizon {horizon}")]
    BeyondHorizon { depth: usize, horizon: usize },
    #[error(transparent)]
    Alphabet(#[from] AlphabetError),
}

/// One interaction step: an action followed by a percept, both as indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Step {
    pub action: usize,
    pub percept: usize,
}

impl Step {
    pub fn new(action: usize, percept: usize) -> Self {
        Self { action, percept }
    }
}

/// Interleaved history `a₁e₁…aₜeₜ`; length counts steps.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct History(Vec<Step>);

impl History {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn new(steps: Vec<Step>) -> Self {
        Self(steps)
    }

    pub fn from_pairs(pairs: &[(usize, usize)]) -> Self {
        Self(pairs.iter().map(|&(a, e)| Step::new(a, e)).collect())
    }

    pub fn steps(&self) -> &[Step] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn push(&mut self, step: Step) {
        self.0.push(step);
    }

    pub fn pop(&mut self) -> Option<Step> {
        self.0.pop()
    }

    pub fn extended(&self, step: Step) -> Self {
        let mut h = self.clone();
        h.push(step);
        h
    }

    pub fn prefix(&self, len: usize) -> Self {
        Self(self.0[..len].to_vec())
    }

    pub fn is_prefix_of(&self, other: &Self) -> bool {
        other.0.starts_with(&self.0)
    }

    pub fn last(&self) -> Option<Step> {
        self.0.last().copied()
    }

    /// `a:e` tokens separated by spaces, using symbol names.
    pub fn render(&self, actions: &Alphabet, percepts: &Alphabet) -> String {
        self.0
            .iter()
            .map(|s| format!("{}:{}", actions.symbol(s.action), percepts.symbol(s.percept)))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Inverse of [`render`](Self::render).
    pub fn parse(text: &str, actions: &Alphabet, percepts: &Alphabet) -> Option<Self> {
        let text = text.trim();
        if text.is_empty() || text == "ε" {
            return Some(Self::empty());
        }
        text.split_whitespace()
            .map(|tok| {
                let (a, e) = tok.split_once(':')?;
                Some(Step::new(actions.index_of(a)?, percepts.index_of(e)?))
            })
            .collect::<Option<Vec<_>>>()
            .map(Self)
    }
}

impl fmt::Display for History {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("ε");
        }
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|s| format!("{}:{}", s.action, s.percept))
            .collect();
        f.write_str(&parts.join(" "))
    }
}

/// Sizes of the action and percept alphabets; fixes the encoding of a
/// history step as the symbol `action · |E| + percept` of `H = A × E`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HistoryLayout {
    pub actions: usize,
    pub percepts: usize,
}

impl HistoryLayout {
    pub fn new(actions: usize, percepts: usize) -> Self {
        Self { actions, percepts }
    }

    pub fn symbols(&self) -> usize {
        self.actions * self.percepts
    }

    pub fn encode_step(&self, step: Step) -> usize {
        step.action * self.percepts + step.percept
    }

    pub fn decode_step(&self, symbol: usize) -> Step {
        Step::new(symbol / self.percepts, symbol % self.percepts)
    }

    pub fn encode(&self, h: &History) -> FiniteString {
        FiniteString::new(h.steps().iter().map(|&s| self.encode_step(s)).collect())
    }

    pub fn decode(&self, x: &FiniteString) -> History {
        History::new(x.symbols().iter().map(|&s| self.decode_step(s)).collect())
    }

    /// All histories of exactly `len` steps extending `prefix`, in canonical
    /// order.
    pub fn continuations(&self, prefix: &History, len: usize) -> Vec<History> {
        let mut out = vec![prefix.clone()];
        for _ in prefix.len()..len {
            out = out
                .into_iter()
                .flat_map(|h| {
                    (0..self.symbols()).map(move |s| h.extended(self.decode_step(s)))
                })
                .collect();
        }
        out
    }
}

/// Percept alphabet, optionally with one reward per percept symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PerceptSpace {
    observations: Alphabet,
    rewards: Option<Vec<Q>>,
}

impl PerceptSpace {
    pub fn new(observations: Alphabet, rewards: Option<Vec<Q>>) -> Result<Self, EnvError> {
        if let Some(r) = &rewards {
            if r.len() != observations.len() {
                return Err(EnvError::WrongLength {
                    expected: observations.len(),
                    got: r.len(),
                });
            }
        }
        Ok(Self {
            observations,
            rewards,
        })
    }

    pub fn without_rewards(observations: Alphabet) -> Self {
        Self {
            observations,
            rewards: None,
        }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn rewards(&self) -> Option<&[Q]> {
        self.rewards.as_deref()
    }

    /// Distinct rewards in increasing order.
    pub fn reward_set(&self) -> Option<Vec<Q>> {
        self.rewards.as_ref().map(|r| {
            let mut v = r.clone();
            v.sort();
            v.dedup();
            v
        })
    }
}

pub trait Environment: Send + Sync {
    fn actions(&self) -> &Alphabet;

    fn percepts(&self) -> &PerceptSpace;

    /// Percept masses `ν(· | h a)`, summing to at most 1.
    fn conditional(&self, history: &History, action: usize) -> Result<Vec<Q>, EnvError>;

    /// Deepest history length the environment is defined for, if bounded.
    fn horizon(&self) -> Option<usize> {
        None
    }

    fn name(&self) -> String {
        "environment".to_string()
    }

    fn layout(&self) -> HistoryLayout {
        HistoryLayout::new(self.actions().len(), self.percepts().len())
    }
}

impl<E: Environment + ?Sized> Environment for &E {
    fn actions(&self) -> &Alphabet {
        (**self).actions()
    }
    fn percepts(&self) -> &PerceptSpace {
        (**self).percepts()
    }
    fn conditional(&self, history: &History, action: usize) -> Result<Vec<Q>, EnvError> {
        (**self).conditional(history, action)
    }
    fn horizon(&self) -> Option<usize> {
        (**self).horizon()
    }
    fn name(&self) -> String {
        (**self).name()
    }
}

impl<E: Environment + ?Sized> Environment for Arc<E> {
    fn actions(&self) -> &Alphabet {
        (**self).actions()
    }
    fn percepts(&self) -> &PerceptSpace {
        (**self).percepts()
    }
    fn conditional(&self, history: &History, action: usize) -> Result<Vec<Q>, EnvError> {
        (**self).conditional(history, action)
    }
    fn horizon(&self) -> Option<usize> {
        (**self).horizon()
    }
    fn name(&self) -> String {
        (**self).name()
    }
}

impl<E: Environment + ?Sized> Environment for Box<E> {
    fn actions(&self) -> &Alphabet {
        (**self).actions()
    }
    fn percepts(&self) -> &PerceptSpace {
        (**self).percepts()
    }
    fn conditional(&self, history: &History, action: usize) -> Result<Vec<Q>, EnvError> {
        (**self).conditional(history, action)
    }
    fn horizon(&self) -> Option<usize> {
        (**self).horizon()
    }
    fn name(&self) -> String {
        (**self).name()
    }
}

/// Queries a conditional and checks its shape and signs.
pub(crate) fn checked_conditional(
    env: &dyn Environment,
    history: &History,
    action: usize,
) -> Result<Vec<Q>, EnvError> {
    let c = env.conditional(history, action)?;
    if c.len() != env.percepts().len() {
        return Err(EnvError::WrongLength {
            expected: env.percepts().len(),
            got: c.len(),
        });
    }
    if let Some(percept) = c.iter().position(|m| m < &Q::zero()) {
        return Err(EnvError::NegativeMass {
            history: history.clone(),
            action,
            percept,
        });
    }
    Ok(c)
}

/// A `(history, action)` pair whose percept masses exceed 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChronologyViolation {
    pub history: History,
    pub action: usize,
    pub excess: Q,
}

/// Checks the chronological semimeasure condition at every history of
/// positive mass up to `depth` steps, under every action sequence.
pub fn chronology_check(
    env: &dyn Environment,
    depth: usize,
) -> Result<Vec<ChronologyViolation>, EnvError> {
    if let Some(h) = env.horizon() {
        if depth > h {
            return Err(EnvError::BeyondHorizon { depth, horizon: h });
        }
    }
    let mut violations = Vec::new();
    let mut stack = vec![History::empty()];
    while let Some(h) = stack.pop() {
        if h.len() >= depth {
            continue;
        }
        for a in 0..env.actions().len() {
            let c = checked_conditional(env, &h, a)?;
            let sum: Q = c.iter().cloned().sum();
            if sum > Q::one() {
                violations.push(ChronologyViolation {
                    history: h.clone(),
                    action: a,
                    excess: sum - Q::one(),
                });
            }
            for (e, m) in c.iter().enumerate() {
                if !m.is_zero() {
                    stack.push(h.extended(Step::new(a, e)));
                }
            }
        }
    }
    violations.sort_by(|x, y| (&x.history, x.action).cmp(&(&y.history, y.action)));
    Ok(violations)
}

/// The joint pre-semimeasure of an environment and a policy over the
/// history alphabet `H = A × E`.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionTree<S = Q> {
    pub tree: PreSemimeasureTree<S>,
    pub layout: HistoryLayout,
}

impl<S: Scalar> InteractionTree<S> {
    pub fn horizon(&self) -> usize {
        self.tree.horizon()
    }

    pub fn history(&self, x: &FiniteString) -> History {
        self.layout.decode(x)
    }

    pub fn node(&self, h: &History) -> FiniteString {
        self.layout.encode(h)
    }
}

/// Alphabet of `H = A × E` with `a/e` symbol names.
pub fn history_alphabet(actions: &Alphabet, percepts: &Alphabet) -> Alphabet {
    let names: Vec<String> = actions
        .symbols()
        .iter()
        .flat_map(|a| percepts.symbols().iter().map(move |e| format!("{a}/{e}")))
        .collect();
    Alphabet::new(names).unwrap_or_else(|_| Alphabet::indexed(actions.len() * percepts.len()))
}

/// Builds `mass(æ_{1:t}) = Π π(a_i | æ_{<i}) · ν(e_i | æ_{<i} a_i)` up to
/// `horizon` steps. Subtrees of zero mass are not expanded.
pub fn interact<S: Scalar>(
    env: &dyn Environment,
    policy: &dyn Policy,
    horizon: usize,
) -> Result<InteractionTree<S>, EnvError> {
    if let Some(h) = env.horizon() {
        if horizon > h {
            return Err(EnvError::BeyondHorizon { depth: horizon, horizon: h });
        }
    }
    let layout = env.layout();
    let n_actions = layout.actions;
    let mut masses: BTreeMap<FiniteString, S> = BTreeMap::new();
    masses.insert(FiniteString::empty(), S::one());
    let mut stack: Vec<(History, S)> = vec![(History::empty(), S::one())];
    while let Some((h, mass)) = stack.pop() {
        if h.len() >= horizon {
            continue;
        }
        let pi = policy.distribution(&h, n_actions)?;
        check_policy(&h, &pi, n_actions)?;
        for (a, pa) in pi.iter().enumerate() {
            let cond = if pa.is_zero() {
                None
            } else {
                let c = checked_conditional(env, &h, a)?;
                let sum: Q = c.iter().cloned().sum();
                if sum > Q::one() {
                    return Err(EnvError::ChronologyViolation {
                        history: h.clone(),
                        action: a,
                        excess: render_q(&(sum - Q::one())),
                    });
                }
                Some(c)
            };
            for e in 0..layout.percepts {
                let step = Step::new(a, e);
                let child = h.extended(step);
                let m = match &cond {
                    Some(c) if !c[e].is_zero() => {
                        mass.clone() * S::from_q(pa) * S::from_q(&c[e])
                    }
                    _ => S::zero(),
                };
                masses.insert(layout.encode(&child), m.clone());
                if !m.is_zero() {
                    stack.push((child, m));
                }
            }
        }
    }
    let alphabet = history_alphabet(env.actions(), env.percepts().alphabet());
    Ok(InteractionTree {
        tree: PreSemimeasureTree::from_parts(alphabet, horizon, masses),
        layout,
    })
}

fn check_policy(h: &History, pi: &[Q], n_actions: usize) -> Result<(), EnvError> {
    if pi.len() != n_actions {
        return Err(EnvError::AlphabetMismatch(format!(
            "policy returned {} action probabilities for {} actions",
            pi.len(),
            n_actions
        )));
    }
    let sum: Q = pi.iter().cloned().sum();
    if sum != Q::one() || pi.iter().any(|p| p < &Q::zero()) {
        return Err(EnvError::PolicyNotProper {
            history: h.clone(),
            sum: render_q(&sum),
        });
    }
    Ok(())
}

/// Mass `ν(e_{1:t} | a_{1:t})` of a history under an environment alone.
pub fn history_mass(env: &dyn Environment, history: &History) -> Result<Q, EnvError> {
    let mut mass = Q::one();
    for t in 0..history.len() {
        let step = history.steps()[t];
        let c = checked_conditional(env, &history.prefix(t), step.action)?;
        mass *= &c[step.percept];
        if mass.is_zero() {
            break;
        }
    }
    Ok(mass)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{q, qi};

    #[test]
    fn layout_round_trips_histories() {
        let layout = HistoryLayout::new(2, 3);
        let h = History::from_pairs(&[(1, 2), (0, 1)]);
        assert_eq!(layout.decode(&layout.encode(&h)), h);
        assert_eq!(layout.encode(&h).symbols(), &[5, 1]);
        assert_eq!(layout.continuations(&History::empty(), 2).len(), 36);
    }

    #[test]
    fn history_text_round_trips() {
        let env = perilous();
        let h = History::from_pairs(&[(1, 1), (0, 0)]);
        let text = h.render(env.actions(), env.percepts().alphabet());
        assert_eq!(text, "2:r2 1:r1");
        assert_eq!(
            History::parse(&text, env.actions(), env.percepts().alphabet()),
            Some(h)
        );
    }

    #[test]
    fn perilous_is_chronological() {
        for depth in 0..=4 {
            assert!(chronology_check(&perilous(), depth).unwrap().is_empty());
        }
    }

    #[test]
    fn oversubscribed_table_is_flagged() {
        let env = TableEnvironment::builder(Alphabet::indexed(1), PerceptSpace::without_rewards(Alphabet::binary()), 1)
            .row(History::empty(), 0, vec![q(3, 5), q(3, 5)])
            .build()
            .unwrap();
        let v = chronology_check(&env, 1).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].excess, q(1, 5));
        let err = interact::<Q>(&env, &ConstantPolicy::new(0), 1).unwrap_err();
        assert!(matches!(err, EnvError::ChronologyViolation { .. }));
    }

    #[test]
    fn deterministic_environment_has_no_loss() {
        let (env, _) = procrastination();
        assert!(chronology_check(&env, 3).unwrap().is_empty());
        let t = interact::<Q>(&env, &UniformPolicy, 3).unwrap();
        for (x, _) in t.tree.nodes().filter(|(x, _)| x.len() < 3) {
            assert_eq!(t.tree.loss(x).unwrap(), qi(0));
        }
    }

    #[test]
    fn perilous_interaction_masses() {
        let env = perilous();
        let t2 = interact::<Q>(&env, &ConstantPolicy::new(1), 2).unwrap();
        let h1 = History::from_pairs(&[(1, 1)]);
        let h2 = History::from_pairs(&[(1, 1), (1, 1)]);
        assert_eq!(t2.tree.mass(&t2.node(&h1)), q(1, 2));
        assert_eq!(t2.tree.mass(&t2.node(&h2)), q(1, 4));
        assert!(t2.tree.superadditivity_check().is_empty());

        let t1 = interact::<Q>(&env, &ConstantPolicy::new(0), 2).unwrap();
        let g2 = History::from_pairs(&[(0, 0), (0, 0)]);
        assert_eq!(t1.tree.mass(&t1.node(&g2)), qi(1));
    }

    #[test]
    fn policy_length_mismatch_is_reported() {
        let env = perilous();
        let bad = FnPolicy::new(|_h: &History, _n: usize| Ok(vec![qi(1)]));
        assert!(matches!(
            interact::<Q>(&env, &bad, 1),
            Err(EnvError::AlphabetMismatch(_))
        ));
    }

    #[test]
    fn float_interaction_tracks_rational() {
        let env = perilous();
        let exact = interact::<Q>(&env, &UniformPolicy, 4).unwrap();
        let float = interact::<f64>(&env, &UniformPolicy, 4).unwrap();
        for (x, m) in exact.tree.nodes() {
            assert!(float.tree.mass(x).agrees_with(&m.to_f64()));
        }
    }
}
