use std::collections::BTreeMap;

use super::{FiniteString, PreSemimeasureTree};
use crate::arith::Scalar;

/// Output of Solomonoff normalization.
///
/// `dead_ends` lists nodes of positive mass whose children all have mass 0.
/// Their mass is kept as irreducible loss instead of being redistributed.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalized<S> {
    pub tree: PreSemimeasureTree<S>,
    pub dead_ends: Vec<FiniteString>,
}

impl<S: Scalar> PreSemimeasureTree<S> {
    /// Rescales every conditional so that children sum to their parent,
    /// wherever the children carry any mass at all.
    pub fn normalize_solomonoff(&self) -> Normalized<S> {
        let mut masses = BTreeMap::new();
        let mut dead_ends = Vec::new();
        masses.insert(FiniteString::empty(), S::one());

        // Canonical order visits every parent before its children.
        for (x, old) in self.nodes() {
            if x.len() >= self.horizon() {
                continue;
            }
            let new = match masses.get(x) {
                Some(m) => m.clone(),
                None => continue,
            };
            let children: Vec<(FiniteString, S)> = self
                .children(x)
                .filter_map(|c| self.get(&c).map(|m| (c, m.clone())))
                .collect();
            let sum: S = children.iter().map(|(_, m)| m.clone()).sum();
            if sum.is_positive_mass() {
                for (c, m) in children {
                    masses.insert(c, new.clone() * m / sum.clone());
                }
            } else {
                if old.is_positive_mass() {
                    dead_ends.push(x.clone());
                }
                for (c, _) in children {
                    masses.insert(c, S::zero());
                }
            }
        }
        Normalized {
            tree: PreSemimeasureTree::from_parts(self.alphabet().clone(), self.horizon(), masses),
            dead_ends,
        }
    }
}
