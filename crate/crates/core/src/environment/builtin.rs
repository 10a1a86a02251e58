use super::{EnvError, Environment, History, PerceptSpace};
use crate::arith::{q, qi, Q};
use crate::semimeasure::Alphabet;
use crate::utility::ProcrastinationUtility;

/// Two actions `1` and `2`; the reward equals the action. Action `1` always
/// continues, action `2` stops the interaction with chance 1/2.
///
/// Percepts are `r1` and `r2`, carrying rewards 1 and 2.
#[derive(Debug, Clone)]
pub struct Perilous {
    actions: Alphabet,
    percepts: PerceptSpace,
}

pub fn perilous() -> Perilous {
    Perilous {
        actions: Alphabet::new(["1", "2"]).unwrap(),
        percepts: PerceptSpace::new(Alphabet::new(["r1", "r2"]).unwrap(), Some(vec![qi(1), qi(2)]))
            .unwrap(),
    }
}

impl Environment for Perilous {
    fn actions(&self) -> &Alphabet {
        &self.actions
    }

    fn percepts(&self) -> &PerceptSpace {
        &self.percepts
    }

    fn conditional(&self, _history: &History, action: usize) -> Result<Vec<Q>, EnvError> {
        match action {
            0 => Ok(vec![qi(1), qi(0)]),
            1 => Ok(vec![qi(0), q(1, 2)]),
            _ => Err(EnvError::AlphabetMismatch(format!("no action {action}"))),
        }
    }

    fn name(&self) -> String {
        "perilous".to_string()
    }
}

/// Deterministic environment with actions `0` and `1` and a single
/// observation; all structure lives in the paired utility.
#[derive(Debug, Clone)]
pub struct Procrastination {
    actions: Alphabet,
    percepts: PerceptSpace,
}

/// The environment together with the utility paying `1 − 1/t` at the first
/// step `t` where action `1` is played.
pub fn procrastination() -> (Procrastination, ProcrastinationUtility) {
    (
        Procrastination {
            actions: Alphabet::new(["0", "1"]).unwrap(),
            percepts: PerceptSpace::without_rewards(Alphabet::new(["o"]).unwrap()),
        },
        ProcrastinationUtility::new(1),
    )
}

impl Environment for Procrastination {
    fn actions(&self) -> &Alphabet {
        &self.actions
    }

    fn percepts(&self) -> &PerceptSpace {
        &self.percepts
    }

    fn conditional(&self, _history: &History, action: usize) -> Result<Vec<Q>, EnvError> {
        if action > 1 {
            return Err(EnvError::AlphabetMismatch(format!("no action {action}")));
        }
        Ok(vec![qi(1)])
    }

    fn name(&self) -> String {
        "procrastination".to_string()
    }
}
