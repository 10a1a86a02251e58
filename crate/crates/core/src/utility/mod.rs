//! Utilities on finite and infinite histories.
//!
//! A [`Utility`] gives the value of a terminated history (`on_finite`) and
//! bounds on its values over the infinite continuations of a prefix
//! (`bounds`). Bounds are nested: along any path the lower bound never
//! decreases and the upper bound never increases. Envelopes and
//! oscillations are taken over continuations to a target depth.

mod builtin;
mod schedule;
pub mod tabled;

use std::fmt;

use thiserror::Error;

use crate::arith::{render_q, Q};
use crate::environment::{History, HistoryLayout};

pub use builtin::{ConstantUtility, ProcrastinationUtility, ReturnUtility};
pub use schedule::DiscountSchedule;
pub use tabled::TabledUtility;

/// Largest number of continuations enumerated for a generic envelope.
pub const ENUMERATION_CAP: u128 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UtilityError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("reward {0} is negative; tabulate signed utilities instead")]
    NegativeReward(String),
    #[error("percept space carries no rewards")]
    MissingRewards,
    #[error("prefix of length {len} is deeper than the target depth {depth}")]
    PrefixTooLong { len: usize, depth: usize },
    #[error("{count} continuations exceed the enumeration cap")]
    EnumerationTooLarge { count: u128 },
    #[error("table at {history}: {message}")]
    Table { history: History, message: String },
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bounds {
    pub lo: Q,
    pub hi: Q,
}

impl Bounds {
    pub fn new(lo: Q, hi: Q) -> Self {
        debug_assert!(lo <= hi);
        Self { lo, hi }
    }

    pub fn point(v: Q) -> Self {
        Self {
            lo: v.clone(),
            hi: v,
        }
    }

    pub fn width(&self) -> Q {
        &self.hi - &self.lo
    }

    pub fn contains(&self, v: &Q) -> bool {
        &self.lo <= v && v <= &self.hi
    }

    pub fn hull(&self, other: &Self) -> Self {
        Self {
            lo: self.lo.clone().min(other.lo.clone()),
            hi: self.hi.clone().max(other.hi.clone()),
        }
    }
}

impl fmt::Display for Bounds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", render_q(&self.lo), render_q(&self.hi))
    }
}

pub trait Utility: Send + Sync {
    fn name(&self) -> String;

    /// Value of the history read as terminated.
    fn on_finite(&self, history: &History) -> Q;

    /// Bounds over the infinite continuations of `history`.
    fn bounds(&self, history: &History) -> Bounds;

    /// Bounds over every continuation of `history`, finite or infinite.
    fn extended_bounds(&self, history: &History) -> Bounds {
        self.bounds(history)
            .hull(&Bounds::point(self.on_finite(history)))
    }

    /// Lower envelope at `history`: `lo` is the least lower bound over the
    /// depth-`depth` continuations and `hi` bounds the true infimum from
    /// above (the least upper bound over the same continuations).
    fn envelope(
        &self,
        history: &History,
        depth: usize,
        layout: HistoryLayout,
    ) -> Result<Bounds, UtilityError> {
        let mut lo: Option<Q> = None;
        let mut hi: Option<Q> = None;
        for_each_continuation(history, depth, layout, |h| {
            let b = self.bounds(h);
            if lo.as_ref().is_none_or(|l| b.lo < *l) {
                lo = Some(b.lo);
            }
            if hi.as_ref().is_none_or(|m| b.hi < *m) {
                hi = Some(b.hi);
            }
        })?;
        Ok(Bounds::new(lo.unwrap(), hi.unwrap()))
    }

    fn lower_envelope(
        &self,
        history: &History,
        depth: usize,
        layout: HistoryLayout,
    ) -> Result<Q, UtilityError> {
        Ok(self.envelope(history, depth, layout)?.lo)
    }

    /// Least lower bound and greatest upper bound over the depth-`depth`
    /// continuations.
    fn oscillation(
        &self,
        history: &History,
        depth: usize,
        layout: HistoryLayout,
    ) -> Result<Bounds, UtilityError> {
        let mut out: Option<Bounds> = None;
        for_each_continuation(history, depth, layout, |h| {
            let b = self.bounds(h);
            out = Some(match out.take() {
                None => b,
                Some(o) => o.hull(&b),
            });
        })?;
        Ok(out.unwrap())
    }

    /// Deepest history the utility is defined on, if finite.
    fn max_horizon(&self) -> Option<usize> {
        None
    }

    /// Discount schedule and per-percept rewards when the utility is a
    /// discounted return.
    fn return_structure(&self) -> Option<(&DiscountSchedule, &[Q])> {
        None
    }
}

impl<U: Utility + ?Sized> Utility for &U {
    fn name(&self) -> String {
        (**self).name()
    }
    fn on_finite(&self, history: &History) -> Q {
        (**self).on_finite(history)
    }
    fn bounds(&self, history: &History) -> Bounds {
        (**self).bounds(history)
    }
    fn extended_bounds(&self, history: &History) -> Bounds {
        (**self).extended_bounds(history)
    }
    fn envelope(&self, h: &History, depth: usize, l: HistoryLayout) -> Result<Bounds, UtilityError> {
        (**self).envelope(h, depth, l)
    }
    fn lower_envelope(&self, h: &History, depth: usize, l: HistoryLayout) -> Result<Q, UtilityError> {
        (**self).lower_envelope(h, depth, l)
    }
    fn oscillation(&self, h: &History, depth: usize, l: HistoryLayout) -> Result<Bounds, UtilityError> {
        (**self).oscillation(h, depth, l)
    }
    fn max_horizon(&self) -> Option<usize> {
        (**self).max_horizon()
    }
    fn return_structure(&self) -> Option<(&DiscountSchedule, &[Q])> {
        (**self).return_structure()
    }
}

impl<U: Utility + ?Sized> Utility for Box<U> {
    fn name(&self) -> String {
        (**self).name()
    }
    fn on_finite(&self, history: &History) -> Q {
        (**self).on_finite(history)
    }
    fn bounds(&self, history: &History) -> Bounds {
        (**self).bounds(history)
    }
    fn extended_bounds(&self, history: &History) -> Bounds {
        (**self).extended_bounds(history)
    }
    fn envelope(&self, h: &History, depth: usize, l: HistoryLayout) -> Result<Bounds, UtilityError> {
        (**self).envelope(h, depth, l)
    }
    fn lower_envelope(&self, h: &History, depth: usize, l: HistoryLayout) -> Result<Q, UtilityError> {
        (**self).lower_envelope(h, depth, l)
    }
    fn oscillation(&self, h: &History, depth: usize, l: HistoryLayout) -> Result<Bounds, UtilityError> {
        (**self).oscillation(h, depth, l)
    }
    fn max_horizon(&self) -> Option<usize> {
        (**self).max_horizon()
    }
    fn return_structure(&self) -> Option<(&DiscountSchedule, &[Q])> {
        (**self).return_structure()
    }
}

/// Visits every history of length `depth` extending `prefix`.
pub fn for_each_continuation(
    prefix: &History,
    depth: usize,
    layout: HistoryLayout,
    mut visit: impl FnMut(&History),
) -> Result<(), UtilityError> {
    if prefix.len() > depth {
        return Err(UtilityError::PrefixTooLong {
            len: prefix.len(),
            depth,
        });
    }
    let count = (layout.symbols() as u128)
        .checked_pow((depth - prefix.len()) as u32)
        .unwrap_or(u128::MAX);
    if count > ENUMERATION_CAP {
        return Err(UtilityError::EnumerationTooLarge { count });
    }
    let mut h = prefix.clone();
    fn walk(
        h: &mut History,
        depth: usize,
        layout: HistoryLayout,
        visit: &mut dyn FnMut(&History),
    ) {
        if h.len() == depth {
            visit(h);
            return;
        }
        for s in 0..layout.symbols() {
            h.push(layout.decode_step(s));
            walk(h, depth, layout, visit);
            h.pop();
        }
    }
    walk(&mut h, depth, layout, &mut visit);
    Ok(())
}

/// Bound widths along the prefixes of a path.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuityProfile {
    pub widths: Vec<Q>,
    /// Widths never grow and the last is strictly below the first.
    pub shrinking: bool,
}

/// Finite-horizon continuity diagnostic: how the bounds tighten along
/// `path`. A shrinking profile is evidence of continuity, never proof.
pub fn continuity_profile(u: &dyn Utility, path: &History) -> ContinuityProfile {
    let widths: Vec<Q> = (0..=path.len())
        .map(|n| u.bounds(&path.prefix(n)).width())
        .collect();
    let monotone = widths.windows(2).all(|w| w[1] <= w[0]);
    let shrinking = monotone && widths.len() > 1 && widths.last() < widths.first();
    ContinuityProfile { widths, shrinking }
}

/// Oscillation widths at `prefix` for targets `prefix.len()..=max_depth`.
pub fn oscillation_profile(
    u: &dyn Utility,
    prefix: &History,
    max_depth: usize,
    layout: HistoryLayout,
) -> Result<ContinuityProfile, UtilityError> {
    let widths = (prefix.len()..=max_depth)
        .map(|d| Ok(u.oscillation(prefix, d, layout)?.width()))
        .collect::<Result<Vec<Q>, UtilityError>>()?;
    let monotone = widths.windows(2).all(|w| w[1] <= w[0]);
    let shrinking = monotone && widths.len() > 1 && widths.last() < widths.first();
    Ok(ContinuityProfile { widths, shrinking })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{q, qi};

    /// Bounds depend only on the first step; used to exercise the generic
    /// enumeration paths.
    struct FirstStep;

    impl Utility for FirstStep {
        fn name(&self) -> String {
            "first".into()
        }
        fn on_finite(&self, h: &History) -> Q {
            h.steps().first().map_or(qi(0), |s| qi(s.action as i64))
        }
        fn bounds(&self, h: &History) -> Bounds {
            match h.steps().first() {
                None => Bounds::new(qi(0), qi(2)),
                Some(s) => Bounds::new(qi(s.action as i64), q(3, 2) + q(s.action as i64, 2)),
            }
        }
    }

    #[test]
    fn generic_envelope_enumerates_continuations() {
        let layout = HistoryLayout::new(2, 1);
        let env = FirstStep.envelope(&History::empty(), 2, layout).unwrap();
        assert_eq!(env, Bounds::new(qi(0), q(3, 2)));
        let osc = FirstStep.oscillation(&History::empty(), 2, layout).unwrap();
        assert_eq!(osc, Bounds::new(qi(0), qi(2)));
        assert_eq!(FirstStep.lower_envelope(&History::from_pairs(&[(1, 0)]), 3, layout).unwrap(), qi(1));
    }

    #[test]
    fn enumeration_respects_depth_and_cap() {
        let layout = HistoryLayout::new(2, 2);
        let long = History::from_pairs(&[(0, 0), (0, 0)]);
        assert!(matches!(
            FirstStep.envelope(&long, 1, layout),
            Err(UtilityError::PrefixTooLong { .. })
        ));
        assert!(matches!(
            FirstStep.envelope(&History::empty(), 11, layout),
            Err(UtilityError::EnumerationTooLarge { .. })
        ));
        let mut n = 0;
        for_each_continuation(&History::empty(), 3, layout, |_| n += 1).unwrap();
        assert_eq!(n, 64);
    }

    #[test]
    fn extended_bounds_cover_the_finite_value() {
        let h = History::from_pairs(&[(0, 0)]);
        assert_eq!(FirstStep.extended_bounds(&h), Bounds::new(qi(0), q(3, 2)));
    }
}
