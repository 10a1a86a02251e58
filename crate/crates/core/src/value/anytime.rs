//! Anytime lower bounds on the Choquet value.

use super::{check_utility_horizon, ValueError};
use crate::arith::Scalar;
use crate::environment::{interact, Environment, InteractionTree, Policy};
use crate::utility::Utility;

/// `V_n` for `n = 0..=n_max`: the Choquet lower value of the interaction
/// truncated at `n` steps. Atoms strictly inside the truncation and nodes
/// at depth `n` are valued by their lower envelope to depth `n`.
pub fn anytime_bounds<S: Scalar>(
    env: &dyn Environment,
    policy: &dyn Policy,
    u: &dyn Utility,
    n_max: usize,
) -> Result<Vec<S>, ValueError> {
    check_utility_horizon(u, n_max)?;
    let tree = interact::<S>(env, policy, n_max)?;
    anytime_bounds_tree(&tree, u)
}

pub fn anytime_bounds_tree<S: Scalar>(
    tree: &InteractionTree<S>,
    u: &dyn Utility,
) -> Result<Vec<S>, ValueError> {
    let ext = tree.tree.extend()?;
    let mut out = Vec::with_capacity(tree.horizon() + 1);
    for n in 0..=tree.horizon() {
        let mut v = S::zero();
        for (x, p) in ext.interior_atoms() {
            if x.len() < n && !p.is_zero() {
                let e = u.lower_envelope(&tree.history(x), n, tree.layout)?;
                v = v + p.clone() * S::from_q(&e);
            }
        }
        for (x, m) in tree.tree.nodes() {
            if x.len() == n && !m.is_zero() {
                let e = u.lower_envelope(&tree.history(x), n, tree.layout)?;
                v = v + m.clone() * S::from_q(&e);
            }
        }
        out.push(v);
    }
    Ok(out)
}
