use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::{One, Zero};

use super::{EnvError, History};
use crate::arith::{qi, Q};

/// A proper (never defective) distribution over actions given a history.
pub trait Policy: Send + Sync {
    fn distribution(&self, history: &History, n_actions: usize) -> Result<Vec<Q>, EnvError>;

    fn name(&self) -> String {
        "policy".to_string()
    }
}

impl<P: Policy + ?Sized> Policy for &P {
    fn distribution(&self, history: &History, n_actions: usize) -> Result<Vec<Q>, EnvError> {
        (**self).distribution(history, n_actions)
    }
    fn name(&self) -> String {
        (**self).name()
    }
}

impl<P: Policy + ?Sized> Policy for Arc<P> {
    fn distribution(&self, history: &History, n_actions: usize) -> Result<Vec<Q>, EnvError> {
        (**self).distribution(history, n_actions)
    }
    fn name(&self) -> String {
        (**self).name()
    }
}

impl<P: Policy + ?Sized> Policy for Box<P> {
    fn distribution(&self, history: &History, n_actions: usize) -> Result<Vec<Q>, EnvError> {
        (**self).distribution(history, n_actions)
    }
    fn name(&self) -> String {
        (**self).name()
    }
}

pub(crate) fn unit_vector(index: usize, len: usize) -> Vec<Q> {
    (0..len)
        .map(|i| if i == index { Q::one() } else { Q::zero() })
        .collect()
}

/// Always plays the same action.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConstantPolicy {
    action: usize,
}

impl ConstantPolicy {
    pub fn new(action: usize) -> Self {
        Self { action }
    }

    pub fn action(&self) -> usize {
        self.action
    }
}

impl Policy for ConstantPolicy {
    fn distribution(&self, _history: &History, n_actions: usize) -> Result<Vec<Q>, EnvError> {
        if self.action >= n_actions {
            return Err(EnvError::AlphabetMismatch(format!(
                "action {} outside {} actions",
                self.action, n_actions
            )));
        }
        Ok(unit_vector(self.action, n_actions))
    }

    fn name(&self) -> String {
        format!("always:{}", self.action)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct UniformPolicy;

impl Policy for UniformPolicy {
    fn distribution(&self, _history: &History, n_actions: usize) -> Result<Vec<Q>, EnvError> {
        let p = Q::one() / qi(n_actions as i64);
        Ok(vec![p; n_actions])
    }

    fn name(&self) -> String {
        "uniform".to_string()
    }
}

/// Explicit action distributions per history. Querying an unlisted history
/// is an error.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TablePolicy {
    rows: BTreeMap<History, Vec<Q>>,
}

impl TablePolicy {
    pub fn new(rows: BTreeMap<History, Vec<Q>>) -> Self {
        Self { rows }
    }

    pub fn rows(&self) -> &BTreeMap<History, Vec<Q>> {
        &self.rows
    }
}

impl Policy for TablePolicy {
    fn distribution(&self, history: &History, n_actions: usize) -> Result<Vec<Q>, EnvError> {
        let row = self.rows.get(history).ok_or(EnvError::Undefined {
            history: history.clone(),
            action: 0,
        })?;
        if row.len() != n_actions {
            return Err(EnvError::WrongLength {
                expected: n_actions,
                got: row.len(),
            });
        }
        Ok(row.clone())
    }

    fn name(&self) -> String {
        "table".to_string()
    }
}

/// Policy backed by a closure.
pub struct FnPolicy<F> {
    f: F,
}

impl<F> FnPolicy<F>
where
    F: Fn(&History, usize) -> Result<Vec<Q>, EnvError> + Send + Sync,
{
    pub fn new(f: F) -> Self {
        Self { f }
    }
}

impl<F> Policy for FnPolicy<F>
where
    F: Fn(&History, usize) -> Result<Vec<Q>, EnvError> + Send + Sync,
{
    fn distribution(&self, history: &History, n_actions: usize) -> Result<Vec<Q>, EnvError> {
        (self.f)(history, n_actions)
    }

    fn name(&self) -> String {
        "fn".to_string()
    }
}

/// Plays the actions of `prefix` with probability 1 while the history is a
/// proper prefix of it, and defers to `inner` everywhere else.
pub struct PrefixForcedPolicy<P> {
    inner: P,
    prefix: History,
}

impl<P: Policy> PrefixForcedPolicy<P> {
    pub fn new(inner: P, prefix: History) -> Self {
        Self { inner, prefix }
    }
}

impl<P: Policy> Policy for PrefixForcedPolicy<P> {
    fn distribution(&self, history: &History, n_actions: usize) -> Result<Vec<Q>, EnvError> {
        if history.len() < self.prefix.len() && history.is_prefix_of(&self.prefix) {
            let a = self.prefix.steps()[history.len()].action;
            return Ok(unit_vector(a, n_actions));
        }
        self.inner.distribution(history, n_actions)
    }

    fn name(&self) -> String {
        self.inner.name()
    }
}
