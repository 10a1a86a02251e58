use num_traits::{One, Zero};

use super::UtilityError;
use crate::arith::{pow_q, qi, render_q, Q};

/// Positive discounts `γ_t` (`t ≥ 1`) with closed-form tails
/// `Γ_T = Σ_{t>T} γ_t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DiscountSchedule {
    /// `γ_t = scale · ratio^t`.
    Geometric { scale: Q, ratio: Q },
    /// Listed head `γ_1..γ_k`, then `γ_{k+j} = γ_k · ratio^j`.
    Explicit { head: Vec<Q>, ratio: Q },
    /// `γ_t = 1` up to a finite horizon, 0 afterwards.
    Undiscounted { horizon: usize },
}

fn check_ratio(ratio: &Q) -> Result<(), UtilityError> {
    if ratio <= &Q::zero() || ratio >= &Q::one() {
        return Err(UtilityError::Config(format!(
            "discount ratio must lie strictly between 0 and 1, got {}",
            render_q(ratio)
        )));
    }
    Ok(())
}

impl DiscountSchedule {
    pub fn geometric(scale: Q, ratio: Q) -> Result<Self, UtilityError> {
        check_ratio(&ratio)?;
        if scale <= Q::zero() {
            return Err(UtilityError::Config("discount scale must be positive".into()));
        }
        Ok(Self::Geometric { scale, ratio })
    }

    pub fn explicit(head: Vec<Q>, ratio: Q) -> Result<Self, UtilityError> {
        check_ratio(&ratio)?;
        if head.is_empty() || head.iter().any(|g| g <= &Q::zero()) {
            return Err(UtilityError::Config(
                "explicit discounts must be a nonempty list of positive values".into(),
            ));
        }
        Ok(Self::Explicit { head, ratio })
    }

    /// Undiscounted sums need a finite horizon.
    pub fn undiscounted(horizon: Option<usize>) -> Result<Self, UtilityError> {
        horizon
            .map(|horizon| Self::Undiscounted { horizon })
            .ok_or_else(|| UtilityError::Config("undiscounted schedule needs a finite horizon".into()))
    }

    /// `γ_t = 2^{-t}`.
    pub fn halving() -> Self {
        Self::Geometric {
            scale: Q::one(),
            ratio: Q::new(1.into(), 2.into()),
        }
    }

    pub fn gamma(&self, t: usize) -> Q {
        debug_assert!(t >= 1);
        match self {
            Self::Geometric { scale, ratio } => scale * pow_q(ratio, t),
            Self::Explicit { head, ratio } => {
                if t <= head.len() {
                    head[t - 1].clone()
                } else {
                    head.last().unwrap() * pow_q(ratio, t - head.len())
                }
            }
            Self::Undiscounted { horizon } => {
                if t <= *horizon {
                    Q::one()
                } else {
                    Q::zero()
                }
            }
        }
    }

    /// `Γ_T = Σ_{t>T} γ_t`.
    pub fn tail(&self, after: usize) -> Q {
        match self {
            Self::Geometric { scale, ratio } => {
                scale * pow_q(ratio, after + 1) / (Q::one() - ratio)
            }
            Self::Explicit { head, ratio } => {
                let k = head.len();
                let last = head.last().unwrap();
                if after >= k {
                    last * pow_q(ratio, after + 1 - k) / (Q::one() - ratio)
                } else {
                    let listed: Q = head[after..].iter().cloned().sum();
                    listed + last * ratio / (Q::one() - ratio)
                }
            }
            Self::Undiscounted { horizon } => qi(horizon.saturating_sub(after) as i64),
        }
    }

    /// Last step with a nonzero discount, if any.
    pub fn horizon(&self) -> Option<usize> {
        match self {
            Self::Undiscounted { horizon } => Some(*horizon),
            _ => None,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Self::Geometric { scale, ratio } => {
                format!("geometric({},{})", render_q(scale), render_q(ratio))
            }
            Self::Explicit { head, ratio } => {
                let h: Vec<String> = head.iter().map(render_q).collect();
                format!("explicit({};{})", h.join(","), render_q(ratio))
            }
            Self::Undiscounted { horizon } => format!("undiscounted({horizon})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::q;

    #[test]
    fn halving_tail_values() {
        let s = DiscountSchedule::halving();
        assert_eq!(s.gamma(1), q(1, 2));
        assert_eq!(s.tail(0), qi(1));
        assert_eq!(s.tail(2), q(1, 4));
    }

    #[test]
    fn tails_match_partial_sums() {
        let schedules = [
            DiscountSchedule::geometric(q(3, 2), q(2, 3)).unwrap(),
            DiscountSchedule::explicit(vec![q(1, 2), q(1, 3), q(1, 5)], q(1, 4)).unwrap(),
            DiscountSchedule::undiscounted(Some(5)).unwrap(),
        ];
        for s in &schedules {
            for t in 0..8 {
                assert_eq!(s.tail(t), s.gamma(t + 1) + s.tail(t + 1), "{} at {t}", s.describe());
                assert!(s.tail(t) >= s.tail(t + 1));
            }
        }
    }

    #[test]
    fn invalid_schedules_are_rejected() {
        assert!(DiscountSchedule::undiscounted(None).is_err());
        assert!(DiscountSchedule::geometric(qi(1), qi(1)).is_err());
        assert!(DiscountSchedule::geometric(qi(0), q(1, 2)).is_err());
        assert!(DiscountSchedule::explicit(vec![], q(1, 2)).is_err());
    }
}
