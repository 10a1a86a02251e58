use num_traits::{One, Zero};

use super::{Bounds, DiscountSchedule, Utility, UtilityError};
use crate::arith::{qi, render_q, Q};
use crate::environment::{History, HistoryLayout, PerceptSpace};

fn check_depth(history: &History, depth: usize) -> Result<(), UtilityError> {
    if history.len() > depth {
        return Err(UtilityError::PrefixTooLong {
            len: history.len(),
            depth,
        });
    }
    Ok(())
}

/// Discounted return `u(æ_{1:t}) = Σ_{i≤t} γ_i r_i` with nonnegative
/// rewards indexed by percept.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnUtility {
    schedule: DiscountSchedule,
    rewards: Vec<Q>,
    min_r: Q,
    max_r: Q,
}

impl ReturnUtility {
    pub fn new(schedule: DiscountSchedule, rewards: Vec<Q>) -> Result<Self, UtilityError> {
        let min_r = rewards
            .iter()
            .min()
            .cloned()
            .ok_or(UtilityError::MissingRewards)?;
        let max_r = rewards.iter().max().cloned().unwrap();
        if min_r < Q::zero() {
            return Err(UtilityError::NegativeReward(render_q(&min_r)));
        }
        Ok(Self {
            schedule,
            rewards,
            min_r,
            max_r,
        })
    }

    pub fn from_percepts(
        schedule: DiscountSchedule,
        percepts: &PerceptSpace,
    ) -> Result<Self, UtilityError> {
        let rewards = percepts.rewards().ok_or(UtilityError::MissingRewards)?;
        Self::new(schedule, rewards.to_vec())
    }

    pub fn schedule(&self) -> &DiscountSchedule {
        &self.schedule
    }

    pub fn rewards(&self) -> &[Q] {
        &self.rewards
    }

    pub fn min_reward(&self) -> &Q {
        &self.min_r
    }

    pub fn max_reward(&self) -> &Q {
        &self.max_r
    }

    pub fn partial(&self, history: &History) -> Q {
        history
            .steps()
            .iter()
            .enumerate()
            .map(|(i, s)| self.schedule.gamma(i + 1) * &self.rewards[s.percept])
            .sum()
    }
}

impl Utility for ReturnUtility {
    fn name(&self) -> String {
        "return".to_string()
    }

    fn on_finite(&self, history: &History) -> Q {
        self.partial(history)
    }

    fn bounds(&self, history: &History) -> Bounds {
        let p = self.partial(history);
        let tail = self.schedule.tail(history.len());
        Bounds::new(&p + &tail * &self.min_r, p + tail * &self.max_r)
    }

    /// The infimum is attained by the all-minimum-reward continuation, so
    /// the envelope is exact and independent of the depth.
    fn envelope(
        &self,
        history: &History,
        depth: usize,
        _layout: HistoryLayout,
    ) -> Result<Bounds, UtilityError> {
        check_depth(history, depth)?;
        let tail = self.schedule.tail(history.len());
        Ok(Bounds::point(self.partial(history) + tail * &self.min_r))
    }

    fn oscillation(
        &self,
        history: &History,
        depth: usize,
        _layout: HistoryLayout,
    ) -> Result<Bounds, UtilityError> {
        check_depth(history, depth)?;
        Ok(self.bounds(history))
    }

    fn max_horizon(&self) -> Option<usize> {
        self.schedule.horizon()
    }

    fn return_structure(&self) -> Option<(&DiscountSchedule, &[Q])> {
        Some((&self.schedule, &self.rewards))
    }
}

/// Pays `1 − 1/t` at the first step `t` whose action is the acting action,
/// and 0 if that action is never played.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProcrastinationUtility {
    acting: usize,
}

impl ProcrastinationUtility {
    pub fn new(acting: usize) -> Self {
        Self { acting }
    }

    /// Step (1-based) at which the acting action is first played.
    pub fn acted_at(&self, history: &History) -> Option<usize> {
        history
            .steps()
            .iter()
            .position(|s| s.action == self.acting)
            .map(|i| i + 1)
    }

    fn payoff(t: usize) -> Q {
        Q::one() - Q::one() / qi(t as i64)
    }
}

impl Utility for ProcrastinationUtility {
    fn name(&self) -> String {
        "procrastination".to_string()
    }

    fn on_finite(&self, history: &History) -> Q {
        self.acted_at(history).map_or_else(Q::zero, Self::payoff)
    }

    fn bounds(&self, history: &History) -> Bounds {
        match self.acted_at(history) {
            Some(t) => Bounds::point(Self::payoff(t)),
            None => Bounds::new(Q::zero(), Q::one()),
        }
    }

    fn envelope(
        &self,
        history: &History,
        depth: usize,
        _layout: HistoryLayout,
    ) -> Result<Bounds, UtilityError> {
        check_depth(history, depth)?;
        // Never acting is always available and pays 0.
        Ok(Bounds::point(self.on_finite(history)))
    }

    fn oscillation(
        &self,
        history: &History,
        depth: usize,
        _layout: HistoryLayout,
    ) -> Result<Bounds, UtilityError> {
        check_depth(history, depth)?;
        Ok(self.bounds(history))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstantUtility {
    value: Q,
}

impl ConstantUtility {
    pub fn new(value: Q) -> Self {
        Self { value }
    }
}

impl Utility for ConstantUtility {
    fn name(&self) -> String {
        format!("constant:{}", render_q(&self.value))
    }

    fn on_finite(&self, _history: &History) -> Q {
        self.value.clone()
    }

    fn bounds(&self, _history: &History) -> Bounds {
        Bounds::point(self.value.clone())
    }

    fn envelope(
        &self,
        history: &History,
        depth: usize,
        _layout: HistoryLayout,
    ) -> Result<Bounds, UtilityError> {
        check_depth(history, depth)?;
        Ok(Bounds::point(self.value.clone()))
    }

    fn oscillation(
        &self,
        history: &History,
        depth: usize,
        _layout: HistoryLayout,
    ) -> Result<Bounds, UtilityError> {
        check_depth(history, depth)?;
        Ok(Bounds::point(self.value.clone()))
    }
}
