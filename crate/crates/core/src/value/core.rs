//! The Choquet value as a minimum over the credal core.
//!
//! A core member reallocates each termination atom to frontier cells inside
//! the atom's own cylinder. Its expectation of the lower simple function is
//! at least the Choquet value, with equality at the minimizer.

use std::collections::BTreeMap;

use rand::Rng;

use super::choquet::{envelope_slack, Cells};
use super::lp::{minimize, Constraint, LpError, Relation};
use super::{check_utility_horizon, Semantics, ValueError, ValueReport};
use crate::arith::{Scalar, Q};
use crate::environment::{interact, Environment, InteractionTree, Policy};
use crate::semimeasure::{ExtendedMeasure, FiniteString};
use crate::utility::Utility;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoreMethod {
    /// Each atom goes to its minimum-envelope cell (ties: smallest).
    Greedy,
    /// Exact linear program over cylinder-domination constraints.
    Lp,
}

/// For each atom, the cells receiving its mass.
#[derive(Debug, Clone, PartialEq)]
pub struct CoreAllocation<S = Q> {
    pub atoms: BTreeMap<FiniteString, Vec<(FiniteString, S)>>,
}

/// Cells, atoms and leaf masses of one interaction tree.
pub struct CoreProblem<'t, S> {
    tree: &'t InteractionTree<S>,
    ext: ExtendedMeasure<S>,
    cells: Cells,
    base: S,
}

impl<'t, S: Scalar> CoreProblem<'t, S> {
    pub fn new(tree: &'t InteractionTree<S>, u: &dyn Utility) -> Result<Self, ValueError> {
        let ext = tree.tree.extend()?;
        let cells = Cells::new(tree, u)?;
        let mut base = S::zero();
        for (z, p) in ext.leaf_masses() {
            if !p.is_zero() {
                base = base + p.clone() * S::from_q(&cells.values[z]);
            }
        }
        Ok(Self {
            tree,
            ext,
            cells,
            base,
        })
    }

    pub fn cells(&self) -> &Cells {
        &self.cells
    }

    fn positive_atoms(&self) -> impl Iterator<Item = (&FiniteString, &S)> {
        self.ext.interior_atoms().iter().filter(|(_, p)| !p.is_zero())
    }

    /// Expected lower simple function under the leaf measure induced by
    /// `alloc`.
    pub fn expectation(&self, alloc: &CoreAllocation<S>) -> S {
        let mut v = self.base.clone();
        for parts in alloc.atoms.values() {
            for (c, m) in parts {
                v = v + m.clone() * S::from_q(&self.cells.values[c]);
            }
        }
        v
    }

    /// Whether `alloc` is a core member: every atom is fully allocated inside
    /// its cylinder, and the induced leaf measure dominates the tree on
    /// every stored cylinder.
    pub fn dominates(&self, alloc: &CoreAllocation<S>) -> bool {
        let mut cell_mass: BTreeMap<&FiniteString, S> = self
            .cells
            .values
            .keys()
            .map(|c| (c, self.tree.tree.mass(c)))
            .collect();
        for (x, p) in self.positive_atoms() {
            let Some(parts) = alloc.atoms.get(x) else {
                return false;
            };
            let mut sum = S::zero();
            for (c, m) in parts {
                if m.is_negative_mass() || !x.is_prefix_of(c) {
                    return false;
                }
                let Some(slot) = cell_mass.get_mut(c) else {
                    return false;
                };
                *slot = slot.clone() + m.clone();
                sum = sum + m.clone();
            }
            if !sum.agrees_with(p) {
                return false;
            }
        }
        let mut cylinder: BTreeMap<FiniteString, S> = BTreeMap::new();
        for (c, m) in &cell_mass {
            let mut node = Some((*c).clone());
            while let Some(y) = node {
                let slot = cylinder.entry(y.clone()).or_insert_with(S::zero);
                *slot = slot.clone() + m.clone();
                node = y.parent();
            }
        }
        let total = cylinder.get(&FiniteString::empty()).cloned().unwrap_or_else(S::zero);
        if !total.agrees_with(&S::one()) {
            return false;
        }
        self.tree.tree.nodes().all(|(y, m)| {
            let p = cylinder.get(y).cloned().unwrap_or_else(S::zero);
            !(p - m.clone()).is_negative_mass()
        })
    }

    fn cell_value(&self, x: &FiniteString, u: &dyn Utility) -> Result<Q, ValueError> {
        match self.cells.values.get(x) {
            Some(v) => Ok(v.clone()),
            None => Ok(u.lower_envelope(&self.tree.history(x), self.tree.horizon(), self.tree.layout)?),
        }
    }

    pub fn greedy(&self, u: &dyn Utility) -> Result<CoreAllocation<S>, ValueError> {
        let k = self.tree.tree.alphabet().len();
        let mut atoms = BTreeMap::new();
        for (x, p) in self.positive_atoms() {
            let mut y = x.clone();
            while !self.cells.values.contains_key(&y) {
                let mut best: Option<(Q, FiniteString)> = None;
                for a in 0..k {
                    let child = y.child(a);
                    let v = self.cell_value(&child, u)?;
                    if best.as_ref().is_none_or(|(b, _)| v < *b) {
                        best = Some((v, child));
                    }
                }
                y = best.unwrap().1;
            }
            atoms.insert(x.clone(), vec![(y, p.clone())]);
        }
        Ok(CoreAllocation { atoms })
    }

    /// Minimizes `Σ q_c v(c)` over extra cell masses `q ≥ 0` with
    /// `Σ_{c ⊑ y} q_c ≥ (atoms inside y)` at every interior node and
    /// `Σ q = total atom mass`, then splits the optimum back into per-atom
    /// allocations deepest atom first.
    pub fn lp(&self) -> Result<CoreAllocation<S>, ValueError> {
        let cell_list: Vec<&FiniteString> = self.cells.values.keys().collect();
        let cost: Vec<S> = self.cells.values.values().map(S::from_q).collect();
        let index: BTreeMap<&FiniteString, usize> =
            cell_list.iter().enumerate().map(|(i, c)| (*c, i)).collect();

        let mut atoms_below: BTreeMap<FiniteString, S> = BTreeMap::new();
        for (x, p) in self.positive_atoms() {
            let mut node = Some(x.clone());
            while let Some(y) = node {
                let slot = atoms_below.entry(y.clone()).or_insert_with(S::zero);
                *slot = slot.clone() + p.clone();
                node = y.parent();
            }
        }
        let total = atoms_below
            .get(&FiniteString::empty())
            .cloned()
            .unwrap_or_else(S::zero);
        if total.is_zero() {
            return Ok(CoreAllocation {
                atoms: BTreeMap::new(),
            });
        }
        let mut constraints = vec![Constraint {
            coeffs: (0..cell_list.len()).map(|j| (j, S::one())).collect(),
            relation: Relation::Eq,
            rhs: total,
        }];
        for (y, need) in &atoms_below {
            if y.is_empty() || !need.is_positive_mass() {
                continue;
            }
            let coeffs: Vec<(usize, S)> = self
                .cells
                .below(y)
                .map(|(c, _)| (index[c], S::one()))
                .collect();
            constraints.push(Constraint {
                coeffs,
                relation: Relation::Ge,
                rhs: need.clone(),
            });
        }
        let sol = minimize(&cost, &constraints).map_err(|e| match e {
            LpError::Infeasible => ValueError::Lp("infeasible core program".into()),
            LpError::Unbounded => ValueError::Lp("unbounded core program".into()),
        })?;

        let mut remaining: Vec<S> = sol.x;
        let mut order: Vec<(&FiniteString, &S)> = self.positive_atoms().collect();
        order.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(b.0)));
        let mut atoms = BTreeMap::new();
        for (x, p) in order {
            let mut need = p.clone();
            let mut parts = Vec::new();
            for (c, _) in self.cells.below(x) {
                if !need.is_positive_mass() {
                    break;
                }
                let j = index[c];
                if !remaining[j].is_positive_mass() {
                    continue;
                }
                let take = if remaining[j] < need {
                    remaining[j].clone()
                } else {
                    need.clone()
                };
                remaining[j] = remaining[j].clone() - take.clone();
                need = need - take.clone();
                parts.push((c.clone(), take));
            }
            if need.is_positive_mass() {
                return Err(ValueError::Lp(format!("optimum cannot cover the atom at {x}")));
            }
            atoms.insert(x.clone(), parts);
        }
        Ok(CoreAllocation { atoms })
    }

    /// A random core member: each atom is split over up to three random
    /// cells of its cylinder with random integer weights.
    pub fn random_allocation<R: Rng + ?Sized>(&self, rng: &mut R) -> CoreAllocation<S> {
        let mut atoms = BTreeMap::new();
        for (x, p) in self.positive_atoms() {
            let below: Vec<&FiniteString> = self.cells.below(x).map(|(c, _)| c).collect();
            let parts = rng.random_range(1..=3usize);
            let picks: Vec<(&FiniteString, i64)> = (0..parts)
                .map(|_| (below[rng.random_range(0..below.len())], rng.random_range(1..=5i64)))
                .collect();
            let total: i64 = picks.iter().map(|(_, w)| w).sum();
            let mut merged: BTreeMap<FiniteString, i64> = BTreeMap::new();
            for (c, w) in picks {
                *merged.entry(c.clone()).or_default() += w;
            }
            let split = merged
                .into_iter()
                .map(|(c, w)| {
                    let share = S::from_q(&Q::new(w.into(), total.into()));
                    (c, p.clone() * share)
                })
                .collect();
            atoms.insert(x.clone(), split);
        }
        CoreAllocation { atoms }
    }
}

pub fn core_min<S: Scalar>(
    env: &dyn Environment,
    policy: &dyn Policy,
    u: &dyn Utility,
    horizon: usize,
    method: CoreMethod,
) -> Result<(ValueReport<S>, CoreAllocation<S>), ValueError> {
    check_utility_horizon(u, horizon)?;
    let tree = interact::<S>(env, policy, horizon)?;
    core_min_tree(&tree, u, method)
}

pub fn core_min_tree<S: Scalar>(
    tree: &InteractionTree<S>,
    u: &dyn Utility,
    method: CoreMethod,
) -> Result<(ValueReport<S>, CoreAllocation<S>), ValueError> {
    let problem = CoreProblem::new(tree, u)?;
    let alloc = match method {
        CoreMethod::Greedy => problem.greedy(u)?,
        CoreMethod::Lp => problem.lp()?,
    };
    let lower = problem.expectation(&alloc);
    let slack = envelope_slack(tree, &problem.ext, u)?;
    let report = ValueReport::new(lower.clone(), lower + slack, Semantics::Choquet, tree.horizon())?;
    Ok((report, alloc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::q;
    use crate::environment::{perilous, ConstantPolicy, SolomonoffNormalizedEnv, UniformPolicy};
    use crate::utility::{DiscountSchedule, ReturnUtility};
    use crate::value::{value_choquet_envelope_tree, value_death_tree};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn perilous_return() -> ReturnUtility {
        ReturnUtility::from_percepts(DiscountSchedule::halving(), perilous().percepts()).unwrap()
    }

    #[test]
    fn perilous_greedy_sends_atoms_to_reward_one() {
        let env = perilous();
        let u = perilous_return();
        let tree = interact::<Q>(&env, &ConstantPolicy::new(1), 6).unwrap();
        let (g, alloc) = core_min_tree(&tree, &u, CoreMethod::Greedy).unwrap();
        let (l, _) = core_min_tree(&tree, &u, CoreMethod::Lp).unwrap();
        let c = value_choquet_envelope_tree(&tree, &u).unwrap();
        assert_eq!(g.lower, c.lower);
        assert_eq!(l.lower, c.lower);
        for parts in alloc.atoms.values() {
            assert_eq!(parts.len(), 1);
            let cell = tree.history(&parts[0].0);
            assert_eq!(cell.last().unwrap().action, 0);
        }
    }

    #[test]
    fn zero_loss_core_is_the_measure() {
        let env = SolomonoffNormalizedEnv::new(perilous());
        let u = perilous_return();
        let tree = interact::<Q>(&env, &UniformPolicy, 3).unwrap();
        let (g, alloc) = core_min_tree(&tree, &u, CoreMethod::Lp).unwrap();
        assert!(alloc.atoms.is_empty());
        let d = value_death_tree(&tree, &u).unwrap();
        assert_eq!(g.upper, d.upper);
        assert!(g.lower >= d.lower);
    }

    #[test]
    fn random_members_are_dominating_and_no_better() {
        let env = perilous();
        let u = perilous_return();
        let tree = interact::<Q>(&env, &UniformPolicy, 4).unwrap();
        let problem = CoreProblem::new(&tree, &u).unwrap();
        let best = problem.expectation(&problem.greedy(&u).unwrap());
        let lp = problem.lp().unwrap();
        assert!(problem.dominates(&lp));
        assert_eq!(problem.expectation(&lp), best);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let alloc = problem.random_allocation(&mut rng);
            assert!(problem.dominates(&alloc));
            assert!(problem.expectation(&alloc) >= best);
        }
    }

    #[test]
    fn misplaced_allocation_is_not_a_member() {
        let env = perilous();
        let u = perilous_return();
        let tree = interact::<Q>(&env, &ConstantPolicy::new(1), 2).unwrap();
        let problem = CoreProblem::new(&tree, &u).unwrap();
        let mut alloc = problem.greedy(&u).unwrap();
        let first = FiniteString::new(vec![3]);
        let parts = alloc.atoms.get_mut(&first).unwrap();
        // Move the atom at æ₁ into the cylinder of the other first step.
        parts[0].0 = FiniteString::new(vec![0]);
        assert!(!problem.dominates(&alloc));
        let mut short = problem.greedy(&u).unwrap();
        short.atoms.get_mut(&first).unwrap()[0].1 = q(1, 8);
        assert!(!problem.dominates(&short));
    }
}
