use std::sync::Arc;

use num_traits::{One, Zero};

use super::{history_mass, EnvError, Environment, History, PerceptSpace};
use crate::arith::{render_q, Q};
use crate::semimeasure::Alphabet;

/// Finite Bayesian mixture `ξ = Σ w_ν ν` with positive weights summing to
/// at most 1.
///
/// History masses satisfy `ξ(æ) = Σ w_ν ν(æ)` for every nonempty history.
/// The root keeps mass 1, so weights summing to `w < 1` show up as an extra
/// loss of `1 − w` at the empty history.
#[derive(Clone)]
pub struct Mixture {
    components: Vec<(Q, Arc<dyn Environment>)>,
    actions: Alphabet,
    percepts: PerceptSpace,
}

pub fn mixture(components: Vec<(Q, Arc<dyn Environment>)>) -> Result<Mixture, EnvError> {
    let (_, first) = components.first().ok_or(EnvError::EmptyMixture)?;
    let actions = first.actions().clone();
    let percepts = first.percepts().clone();
    let mut total = Q::zero();
    for (w, env) in &components {
        if w <= &Q::zero() {
            return Err(EnvError::BadWeights(render_q(w)));
        }
        total += w;
        if env.actions() != &actions || env.percepts() != &percepts {
            return Err(EnvError::AlphabetMismatch(format!(
                "component {} does not share the alphabets of {}",
                env.name(),
                first.name()
            )));
        }
    }
    if total > Q::one() {
        return Err(EnvError::BadWeights(render_q(&total)));
    }
    Ok(Mixture {
        components,
        actions,
        percepts,
    })
}

impl Mixture {
    pub fn components(&self) -> &[(Q, Arc<dyn Environment>)] {
        &self.components
    }

    pub fn weights(&self) -> Vec<Q> {
        self.components.iter().map(|(w, _)| w.clone()).collect()
    }

    /// `w_ν ν(e_{1:t} | a_{1:t})` for every component.
    fn joint(&self, history: &History) -> Result<Vec<Q>, EnvError> {
        self.components
            .iter()
            .map(|(w, env)| Ok(w * history_mass(env.as_ref(), history)?))
            .collect()
    }

    /// `ξ(æ)`; 1 at the empty history.
    pub fn mass(&self, history: &History) -> Result<Q, EnvError> {
        if history.is_empty() {
            return Ok(Q::one());
        }
        Ok(self.joint(history)?.into_iter().sum())
    }
}

/// Posterior weights after `history`.
pub fn posterior(mix: &Mixture, history: &History) -> Result<Vec<Q>, EnvError> {
    let joint = mix.joint(history)?;
    let total: Q = joint.iter().cloned().sum();
    if total.is_zero() {
        return Err(EnvError::NullConditioning(history.clone()));
    }
    Ok(joint.into_iter().map(|j| j / &total).collect())
}

impl Environment for Mixture {
    fn actions(&self) -> &Alphabet {
        &self.actions
    }

    fn percepts(&self) -> &PerceptSpace {
        &self.percepts
    }

    fn conditional(&self, history: &History, action: usize) -> Result<Vec<Q>, EnvError> {
        let joint = self.joint(history)?;
        let denom = if history.is_empty() {
            Q::one()
        } else {
            joint.iter().cloned().sum()
        };
        if denom.is_zero() {
            return Err(EnvError::NullConditioning(history.clone()));
        }
        let mut out = vec![Q::zero(); self.percepts.len()];
        for (j, (_, env)) in joint.iter().zip(&self.components) {
            if j.is_zero() {
                continue;
            }
            let c = super::checked_conditional(env.as_ref(), history, action)?;
            for (o, m) in out.iter_mut().zip(c) {
                *o += j * m;
            }
        }
        Ok(out.into_iter().map(|m| m / &denom).collect())
    }

    fn horizon(&self) -> Option<usize> {
        self.components.iter().filter_map(|(_, e)| e.horizon()).min()
    }

    fn name(&self) -> String {
        let parts: Vec<String> = self
            .components
            .iter()
            .map(|(w, e)| format!("{}*{}", render_q(w), e.name()))
            .collect();
        format!("mixture({})", parts.join("+"))
    }
}
