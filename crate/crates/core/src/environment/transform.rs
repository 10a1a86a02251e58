use num_traits::{One, Zero};

use super::policy::unit_vector;
use super::{EnvError, Environment, History, PerceptSpace, Policy};
use crate::arith::Q;
use crate::semimeasure::Alphabet;

/// Symbol name of the absorbing death percept.
pub const DEATH: &str = "☠";

/// A proper environment obtained by sending the missing mass of every
/// conditional to an absorbing death percept with reward 0.
#[derive(Debug, Clone)]
pub struct DeathCompletion<E> {
    inner: E,
    percepts: PerceptSpace,
    dead: usize,
}

pub fn death_completion<E: Environment>(env: E) -> Result<DeathCompletion<E>, EnvError> {
    let rewards = env
        .percepts()
        .rewards()
        .ok_or_else(|| EnvError::AlphabetMismatch("death completion needs rewards".into()))?;
    let mut names = env.percepts().alphabet().symbols().to_vec();
    names.push(DEATH.to_string());
    let mut rewards = rewards.to_vec();
    rewards.push(Q::zero());
    let dead = names.len() - 1;
    let percepts = PerceptSpace::new(Alphabet::new(names)?, Some(rewards))?;
    Ok(DeathCompletion {
        inner: env,
        percepts,
        dead,
    })
}

impl<E> DeathCompletion<E> {
    pub fn death_percept(&self) -> usize {
        self.dead
    }

    pub fn inner(&self) -> &E {
        &self.inner
    }

    fn is_dead(&self, history: &History) -> bool {
        history.steps().iter().any(|s| s.percept == self.dead)
    }
}

impl<E: Environment> Environment for DeathCompletion<E> {
    fn actions(&self) -> &Alphabet {
        self.inner.actions()
    }

    fn percepts(&self) -> &PerceptSpace {
        &self.percepts
    }

    fn conditional(&self, history: &History, action: usize) -> Result<Vec<Q>, EnvError> {
        if self.is_dead(history) {
            return Ok(unit_vector(self.dead, self.percepts.len()));
        }
        let mut c = self.inner.conditional(history, action)?;
        let sum: Q = c.iter().cloned().sum();
        c.push(Q::one() - sum);
        Ok(c)
    }

    fn horizon(&self) -> Option<usize> {
        self.inner.horizon()
    }

    fn name(&self) -> String {
        format!("death({})", self.inner.name())
    }
}

/// Extends a policy to histories containing the death percept by playing
/// the first action there.
pub struct DeathExtendedPolicy<P> {
    inner: P,
    dead: usize,
}

impl<P: Policy> DeathExtendedPolicy<P> {
    pub fn new(inner: P, death_percept: usize) -> Self {
        Self {
            inner,
            dead: death_percept,
        }
    }
}

impl<P: Policy> Policy for DeathExtendedPolicy<P> {
    fn distribution(&self, history: &History, n_actions: usize) -> Result<Vec<Q>, EnvError> {
        if history.steps().iter().any(|s| s.percept == self.dead) {
            return Ok(unit_vector(0, n_actions));
        }
        self.inner.distribution(history, n_actions)
    }

    fn name(&self) -> String {
        self.inner.name()
    }
}

/// Rescales every conditional to sum to 1. Conditionals that are entirely
/// zero stay zero (a hard dead end keeps its loss).
#[derive(Debug, Clone)]
pub struct SolomonoffNormalizedEnv<E> {
    inner: E,
}

impl<E: Environment> SolomonoffNormalizedEnv<E> {
    pub fn new(inner: E) -> Self {
        Self { inner }
    }
}

impl<E: Environment> Environment for SolomonoffNormalizedEnv<E> {
    fn actions(&self) -> &Alphabet {
        self.inner.actions()
    }

    fn percepts(&self) -> &PerceptSpace {
        self.inner.percepts()
    }

    fn conditional(&self, history: &History, action: usize) -> Result<Vec<Q>, EnvError> {
        let c = self.inner.conditional(history, action)?;
        let sum: Q = c.iter().cloned().sum();
        if sum.is_zero() {
            return Ok(c);
        }
        Ok(c.into_iter().map(|m| m / &sum).collect())
    }

    fn horizon(&self) -> Option<usize> {
        self.inner.horizon()
    }

    fn name(&self) -> String {
        format!("normalized({})", self.inner.name())
    }
}
