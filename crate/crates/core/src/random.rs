//! Seeded generators for small random instances.

use std::collections::BTreeMap;

use num_traits::Zero;
use rand::Rng;

use crate::arith::{q, qi, Q};
use crate::environment::{
    EnvError, History, HistoryLayout, PerceptSpace, Step, TableEnvironment, TablePolicy,
};
use crate::semimeasure::Alphabet;
use crate::utility::{Bounds, TabledUtility, UtilityError};
use crate::utility::tabled::Row;

#[derive(Debug, Clone)]
pub struct EnvSpec {
    pub actions: usize,
    pub percepts: usize,
    pub horizon: usize,
    /// Per-percept rewards, or none.
    pub rewards: Option<Vec<Q>>,
    /// Allow conditionals summing to less than 1.
    pub defective: bool,
}

/// Rewards drawn from `set`, with percept 0 pinned to 0 when `floor` holds.
pub fn random_rewards<R: Rng + ?Sized>(rng: &mut R, percepts: usize, set: &[Q], floor: bool) -> Vec<Q> {
    (0..percepts)
        .map(|e| {
            if floor && e == 0 {
                Q::zero()
            } else {
                set[rng.random_range(0..set.len())].clone()
            }
        })
        .collect()
}

/// Conditional masses: integer weights in `0..=4` scaled to a total drawn
/// from `{0, 1/4, …, 1}` (or exactly 1 when not defective).
fn random_conditional<R: Rng + ?Sized>(rng: &mut R, percepts: usize, defective: bool) -> Vec<Q> {
    loop {
        let w: Vec<i64> = (0..percepts).map(|_| rng.random_range(0..=4)).collect();
        let sum: i64 = w.iter().sum();
        let total = if defective { q(rng.random_range(0..=4), 4) } else { qi(1) };
        if sum == 0 {
            if total.is_zero() {
                return vec![Q::zero(); percepts];
            }
            continue;
        }
        return w.iter().map(|&x| &total * q(x, sum)).collect();
    }
}

/// A table environment defined on every history of positive mass.
pub fn random_environment<R: Rng + ?Sized>(rng: &mut R, spec: &EnvSpec) -> Result<TableEnvironment, EnvError> {
    let percepts = PerceptSpace::new(Alphabet::indexed(spec.percepts), spec.rewards.clone())?;
    let mut builder = TableEnvironment::builder(Alphabet::indexed(spec.actions), percepts, spec.horizon)
        .name("random");
    let mut stack = vec![History::empty()];
    while let Some(h) = stack.pop() {
        if h.len() >= spec.horizon {
            continue;
        }
        for a in 0..spec.actions {
            let c = random_conditional(rng, spec.percepts, spec.defective);
            for (e, m) in c.iter().enumerate() {
                if !m.is_zero() {
                    stack.push(h.extended(Step::new(a, e)));
                }
            }
            builder = builder.row(h.clone(), a, c);
        }
    }
    builder.build()
}

/// A policy on every history shorter than `depth`. Deterministic policies
/// put all mass on one action; stochastic ones use quarter weights.
pub fn random_policy<R: Rng + ?Sized>(
    rng: &mut R,
    layout: HistoryLayout,
    depth: usize,
    deterministic: bool,
) -> TablePolicy {
    let mut rows = BTreeMap::new();
    for len in 0..depth {
        for h in layout.continuations(&History::empty(), len) {
            let mut p = vec![Q::zero(); layout.actions];
            if deterministic {
                p[rng.random_range(0..layout.actions)] = qi(1);
            } else {
                let w: Vec<i64> = (0..layout.actions).map(|_| rng.random_range(0..=3)).collect();
                let sum: i64 = w.iter().sum();
                if sum == 0 {
                    p[0] = qi(1);
                } else {
                    p = w.iter().map(|&x| q(x, sum)).collect();
                }
            }
            rows.insert(h, p);
        }
    }
    TablePolicy::new(rows)
}

fn random_q<R: Rng + ?Sized>(rng: &mut R, lo: i64, hi: i64, den: i64) -> Q {
    q(rng.random_range(lo * den..=hi * den), den)
}

/// A tabled utility with values and bounds in `[-4, 4]`, nested along
/// every path, and finite-history values anywhere in that range.
pub fn random_signed_utility<R: Rng + ?Sized>(
    rng: &mut R,
    layout: HistoryLayout,
    depth: usize,
) -> Result<TabledUtility, UtilityError> {
    let mut rows = BTreeMap::new();
    let root = Bounds::new(random_q(rng, -4, 0, 4), random_q(rng, 0, 4, 4));
    let mut stack = vec![(History::empty(), root)];
    while let Some((h, b)) = stack.pop() {
        if h.len() < depth {
            for s in 0..layout.symbols() {
                let shrink_lo = q(rng.random_range(0..=2), 4);
                let shrink_hi = q(rng.random_range(0..=2), 4);
                let lo = &b.lo + &shrink_lo * b.width();
                let hi = &b.hi - &shrink_hi * (&b.hi - &lo);
                stack.push((h.extended(layout.decode_step(s)), Bounds::new(lo, hi)));
            }
        }
        let value = random_q(rng, -4, 4, 4);
        rows.insert(h, Row { value, bounds: b });
    }
    TabledUtility::new("random-signed", layout, depth, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::{chronology_check, Environment};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_instances_are_valid_and_seeded() {
        let spec = EnvSpec {
            actions: 2,
            percepts: 3,
            horizon: 3,
            rewards: Some(vec![qi(0), q(1, 2), qi(1)]),
            defective: true,
        };
        let a = random_environment(&mut ChaCha8Rng::seed_from_u64(3), &spec).unwrap();
        let b = random_environment(&mut ChaCha8Rng::seed_from_u64(3), &spec).unwrap();
        assert_eq!(a.rows(), b.rows());
        assert!(chronology_check(&a, 3).unwrap().is_empty());
        let layout = a.layout();
        let u = random_signed_utility(&mut ChaCha8Rng::seed_from_u64(4), layout, 2).unwrap();
        assert_eq!(u.depth(), 2);
        let p = random_policy(&mut ChaCha8Rng::seed_from_u64(5), layout, 3, false);
        assert_eq!(p.rows().len(), 1 + 6 + 36);
    }

    #[test]
    fn proper_environments_sum_to_one() {
        let spec = EnvSpec {
            actions: 3,
            percepts: 2,
            horizon: 2,
            rewards: None,
            defective: false,
        };
        let env = random_environment(&mut ChaCha8Rng::seed_from_u64(9), &spec).unwrap();
        for c in env.rows().values() {
            assert_eq!(c.iter().cloned().sum::<Q>(), qi(1));
        }
    }
}
