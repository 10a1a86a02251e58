//! Pessimistic (Choquet) values.
//!
//! Two routes to the same number. The envelope route takes the ordinary
//! expectation of the lower envelope over the extended measure. The
//! level-set route integrates the capacity of the upper level sets
//! `{f ≥ b}` of the horizon-measurable lower simple function, where each
//! level set is a union of cylinders evaluated with maximal merging.

use std::collections::{BTreeMap, HashMap};

use num_traits::Zero;

use super::{check_utility_horizon, ValueError, ValueReport, Semantics};
use crate::arith::{Scalar, Q};
use crate::environment::{interact, Environment, InteractionTree, Policy};
use crate::semimeasure::{ExtendedMeasure, FiniteString, PreSemimeasureTree};
use crate::utility::Utility;

pub fn value_choquet_envelope<S: Scalar>(
    env: &dyn Environment,
    policy: &dyn Policy,
    u: &dyn Utility,
    horizon: usize,
) -> Result<ValueReport<S>, ValueError> {
    check_utility_horizon(u, horizon)?;
    let tree = interact::<S>(env, policy, horizon)?;
    value_choquet_envelope_tree(&tree, u)
}

pub fn value_choquet_envelope_tree<S: Scalar>(
    tree: &InteractionTree<S>,
    u: &dyn Utility,
) -> Result<ValueReport<S>, ValueError> {
    let ext = tree.tree.extend()?;
    let horizon = tree.horizon();
    let mut lower = S::zero();
    let mut upper = S::zero();
    for (x, p) in ext.interior_atoms() {
        if p.is_zero() {
            continue;
        }
        let e = u.envelope(&tree.history(x), horizon, tree.layout)?;
        lower = lower + p.clone() * S::from_q(&e.lo);
        upper = upper + p.clone() * S::from_q(&e.hi);
    }
    for (z, p) in ext.leaf_masses() {
        if p.is_zero() {
            continue;
        }
        let b = u.bounds(&tree.history(z));
        lower = lower + p.clone() * S::from_q(&b.lo);
        upper = upper + p.clone() * S::from_q(&b.hi);
    }
    ValueReport::new(lower, upper, Semantics::Choquet, tree.horizon())
}

/// The frontier of the stored tree: nodes at the horizon and zero-mass
/// nodes, each below a positive parent. They partition the sequence space.
/// Each carries the lower envelope of the utility over its depth-`T`
/// continuations.
#[derive(Debug, Clone)]
pub struct Cells {
    pub values: BTreeMap<FiniteString, Q>,
}

impl Cells {
    pub fn new<S: Scalar>(tree: &InteractionTree<S>, u: &dyn Utility) -> Result<Self, ValueError> {
        let horizon = tree.horizon();
        let mut values = BTreeMap::new();
        for (x, m) in tree.tree.nodes() {
            if !is_cell(&tree.tree, x, m) {
                continue;
            }
            let v = u.lower_envelope(&tree.history(x), horizon, tree.layout)?;
            values.insert(x.clone(), v);
        }
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Cells inside the cylinder of `x`.
    pub fn below<'a>(&'a self, x: &'a FiniteString) -> impl Iterator<Item = (&'a FiniteString, &'a Q)> + 'a {
        self.values
            .range(x.clone()..)
            .take_while(move |(c, _)| x.is_prefix_of(c))
    }
}

pub(crate) fn is_cell<S: Scalar>(tree: &PreSemimeasureTree<S>, x: &FiniteString, m: &S) -> bool {
    let parent_positive = x.parent().is_none_or(|p| !tree.mass(&p).is_zero());
    parent_positive && (x.len() == tree.horizon() || m.is_zero())
}

/// Capacity of `{f ≥ b}` for every distinct cell value `b`, in decreasing
/// order of `b`. Cells are added from the top level down; a node whose
/// children are all inside the set joins it and contributes its own loss,
/// which is exactly the maximal-cylinder merge of set evaluation.
pub fn level_set_masses<S: Scalar>(
    tree: &PreSemimeasureTree<S>,
    cells: &Cells,
) -> Result<Vec<(Q, S)>, ValueError> {
    let k = tree.alphabet().len();
    let mut order: Vec<(&FiniteString, &Q)> = cells.values.iter().collect();
    order.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
    let mut full_children: HashMap<FiniteString, usize> = HashMap::new();
    let mut mass = S::zero();
    let mut out: Vec<(Q, S)> = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let level = order[i].1.clone();
        while i < order.len() && order[i].1 == &level {
            let cell = order[i].0;
            mass = mass + tree.mass(cell);
            let mut node = cell.clone();
            while let Some(parent) = node.parent() {
                let count = full_children.entry(parent.clone()).or_insert(0);
                *count += 1;
                if *count < k {
                    break;
                }
                mass = mass + tree.loss(&parent)?;
                node = parent;
            }
            i += 1;
        }
        out.push((level, mass.clone()));
    }
    Ok(out)
}

pub fn value_choquet_levelset<S: Scalar>(
    env: &dyn Environment,
    policy: &dyn Policy,
    u: &dyn Utility,
    horizon: usize,
) -> Result<ValueReport<S>, ValueError> {
    check_utility_horizon(u, horizon)?;
    let tree = interact::<S>(env, policy, horizon)?;
    value_choquet_levelset_tree(&tree, u)
}

/// Signed level-set integral
/// `∫_0^∞ ν(f ≥ b) db + ∫_{-∞}^0 (ν(f ≥ b) − 1) db`
/// of the lower simple function. The upper end of the report adds the
/// width of the envelope and leaf bounds, weighted by the extended measure.
pub fn value_choquet_levelset_tree<S: Scalar>(
    tree: &InteractionTree<S>,
    u: &dyn Utility,
) -> Result<ValueReport<S>, ValueError> {
    let cells = Cells::new(tree, u)?;
    let levels = level_set_masses(&tree.tree, &cells)?;
    // Ascending breakpoints with the capacity of {f ≥ breakpoint}.
    let mut points: Vec<(Q, S)> = levels.into_iter().rev().collect();
    if !points.iter().any(|(b, _)| b.is_zero()) {
        let above_zero = points
            .iter()
            .find(|(b, _)| b > &Q::zero())
            .map_or_else(S::zero, |(_, g)| g.clone());
        let at = points.partition_point(|(b, _)| b < &Q::zero());
        points.insert(at, (Q::zero(), above_zero));
    }
    let mut lower = S::zero();
    for w in points.windows(2) {
        let (prev, _) = &w[0];
        let (b, g) = &w[1];
        if g.is_nan() {
            return Err(ValueError::Numeric(format!("NaN capacity at level {b}")));
        }
        let width = S::from_q(&(b - prev));
        let integrand = if b <= &Q::zero() {
            g.clone() - S::one()
        } else {
            g.clone()
        };
        lower = lower + width * integrand;
    }
    let ext = tree.tree.extend()?;
    let slack = envelope_slack(tree, &ext, u)?;
    ValueReport::new(lower.clone(), lower + slack, Semantics::Choquet, tree.horizon())
}

/// `Σ_atoms P(x)·(ē(x) − e̲(x)) + Σ_leaves P(z)·(hi(z) − lo(z))`.
pub(crate) fn envelope_slack<S: Scalar>(
    tree: &InteractionTree<S>,
    ext: &ExtendedMeasure<S>,
    u: &dyn Utility,
) -> Result<S, ValueError> {
    let mut slack = S::zero();
    for (x, p) in ext.interior_atoms() {
        if p.is_zero() {
            continue;
        }
        let e = u.envelope(&tree.history(x), tree.horizon(), tree.layout)?;
        slack = slack + p.clone() * S::from_q(&e.width());
    }
    for (z, p) in ext.leaf_masses() {
        if p.is_zero() {
            continue;
        }
        slack = slack + p.clone() * S::from_q(&u.bounds(&tree.history(z)).width());
    }
    Ok(slack)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{pow_q, q, qi};
    use crate::environment::{perilous, ConstantPolicy, UniformPolicy};
    use crate::semimeasure::CylinderUnion;
    use crate::utility::{DiscountSchedule, ReturnUtility, TabledUtility};
    use crate::value::value_death_tree;

    fn perilous_return() -> ReturnUtility {
        ReturnUtility::from_percepts(DiscountSchedule::halving(), perilous().percepts()).unwrap()
    }

    /// `(1/2)·1 + Σ_{t=1}^{T-1} 2^{-(t+1)}·(2 − 2^{-t})` plus the leaf term
    /// `2^{-T}·(2 − 2^{-T})`.
    fn perilous_choquet_oracle(horizon: usize) -> Q {
        let half = q(1, 2);
        let mut v = half.clone();
        for t in 1..horizon {
            v += pow_q(&half, t + 1) * (qi(2) - pow_q(&half, t));
        }
        v + pow_q(&half, horizon) * (qi(2) - pow_q(&half, horizon))
    }

    #[test]
    fn perilous_always_two_is_four_thirds() {
        let env = perilous();
        let u = perilous_return();
        for horizon in [1, 2, 5, 12] {
            let tree = interact::<Q>(&env, &ConstantPolicy::new(1), horizon).unwrap();
            let a = value_choquet_envelope_tree(&tree, &u).unwrap();
            let b = value_choquet_levelset_tree(&tree, &u).unwrap();
            assert_eq!(a.lower, perilous_choquet_oracle(horizon));
            assert_eq!(a, b);
        }
        let v = value_choquet_envelope::<Q>(&env, &ConstantPolicy::new(1), &u, 24).unwrap();
        assert!(v.brackets(&q(4, 3)));
    }

    #[test]
    fn incremental_levels_match_set_evaluation() {
        let env = perilous();
        let u = perilous_return();
        let tree = interact::<Q>(&env, &UniformPolicy, 3).unwrap();
        let cells = Cells::new(&tree, &u).unwrap();
        for (b, g) in level_set_masses(&tree.tree, &cells).unwrap() {
            let set = CylinderUnion::new(
                cells.values.iter().filter(|(_, v)| **v >= b).map(|(c, _)| c.clone()),
            );
            assert_eq!(tree.tree.eval_set(&set).unwrap(), g);
        }
    }

    #[test]
    fn proper_measures_reduce_to_expectation() {
        let env = crate::environment::SolomonoffNormalizedEnv::new(perilous());
        let u = perilous_return();
        let tree = interact::<Q>(&env, &UniformPolicy, 4).unwrap();
        let c = value_choquet_levelset_tree(&tree, &u).unwrap();
        let d = value_death_tree(&tree, &u).unwrap();
        assert_eq!(c.upper, d.upper);
        assert!(c.lower >= d.lower);
    }

    #[test]
    fn signed_table_routes_agree() {
        let env = perilous();
        let layout = env.layout();
        let u = TabledUtility::tabulate("signed", layout, 2, |h| {
            let twos = h.steps().iter().filter(|s| s.action == 1).count() as i64;
            let v = qi(1) - qi(2 * twos);
            (v, qi(-4) + qi(twos), qi(3) - qi(h.len() as i64))
        })
        .unwrap();
        for horizon in 1..4 {
            let tree = interact::<Q>(&env, &UniformPolicy, horizon).unwrap();
            let a = value_choquet_envelope_tree(&tree, &u).unwrap();
            let b = value_choquet_levelset_tree(&tree, &u).unwrap();
            assert_eq!(a.lower, b.lower, "horizon {horizon}");
            assert_eq!(a.upper, b.upper, "horizon {horizon}");
        }
    }
}
