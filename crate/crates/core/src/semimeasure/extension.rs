//! Extension of a pre-semimeasure to a probability measure on finite strings
//! plus infinite sequences, and evaluation of unions of cylinders.

use std::collections::{BTreeMap, BTreeSet};

use super::{FiniteString, PreSemimeasureTree, TreeError};
use crate::arith::Scalar;

/// The measure `P` on terminated strings and depth-`T` cylinders.
///
/// `interior_atoms[x]` is the probability of terminating exactly at `x`;
/// `leaf_masses[z]` is the mass still unresolved at the horizon below `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedMeasure<S> {
    horizon: usize,
    interior_atoms: BTreeMap<FiniteString, S>,
    leaf_masses: BTreeMap<FiniteString, S>,
}

impl<S: Scalar> ExtendedMeasure<S> {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn interior_atoms(&self) -> &BTreeMap<FiniteString, S> {
        &self.interior_atoms
    }

    pub fn leaf_masses(&self) -> &BTreeMap<FiniteString, S> {
        &self.leaf_masses
    }

    pub fn atom(&self, x: &FiniteString) -> S {
        self.interior_atoms.get(x).cloned().unwrap_or_else(S::zero)
    }

    pub fn leaf(&self, z: &FiniteString) -> S {
        self.leaf_masses.get(z).cloned().unwrap_or_else(S::zero)
    }

    pub fn total(&self) -> S {
        self.interior_atoms
            .values()
            .chain(self.leaf_masses.values())
            .cloned()
            .sum()
    }

    pub fn total_atom_mass(&self) -> S {
        self.interior_atoms.values().cloned().sum()
    }

    /// Recomputes the cylinder mass of `x` from atoms and leaves below it.
    pub fn reconstruct(&self, x: &FiniteString) -> S {
        let below = |m: &BTreeMap<FiniteString, S>| -> S {
            m.range(x.clone()..)
                .take_while(|(y, _)| x.is_prefix_of(y))
                .map(|(_, v)| v.clone())
                .sum()
        };
        below(&self.interior_atoms) + below(&self.leaf_masses)
    }
}

impl<S: Scalar> PreSemimeasureTree<S> {
    /// Splits every cylinder's mass into termination atoms (the losses) and
    /// the mass surviving to the horizon.
    pub fn extend(&self) -> Result<ExtendedMeasure<S>, TreeError> {
        let violations = self.violations();
        if !violations.is_empty() {
            return Err(TreeError::NotSuperadditive(violations));
        }
        let mut interior_atoms = BTreeMap::new();
        let mut leaf_masses = BTreeMap::new();
        for (x, m) in self.nodes() {
            if x.len() < self.horizon() {
                interior_atoms.insert(x.clone(), self.loss(x)?);
            } else {
                leaf_masses.insert(x.clone(), m.clone());
            }
        }
        Ok(ExtendedMeasure {
            horizon: self.horizon(),
            interior_atoms,
            leaf_masses,
        })
    }

    /// Mass of a finite union of cylinders: canonicalize to maximal
    /// prefix-free generators, then sum their cylinder masses. A cylinder
    /// whose children are all present counts as the parent, and so picks up
    /// the parent's termination atom.
    pub fn eval_set(&self, set: &CylinderUnion) -> Result<S, TreeError> {
        if let Some(g) = set.generators().iter().find(|g| g.len() > self.horizon()) {
            return Err(TreeError::BeyondHorizon {
                node: g.clone(),
                horizon: self.horizon(),
            });
        }
        let canonical = set.canonical(self.alphabet().len());
        Ok(canonical.generators().iter().map(|g| self.mass(g)).sum())
    }
}

/// Finite union of cylinder sets `x A^∞`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CylinderUnion {
    generators: BTreeSet<FiniteString>,
}

impl CylinderUnion {
    pub fn new(generators: impl IntoIterator<Item = FiniteString>) -> Self {
        Self {
            generators: generators.into_iter().collect(),
        }
    }

    pub fn full() -> Self {
        Self::new([FiniteString::empty()])
    }

    pub fn generators(&self) -> &BTreeSet<FiniteString> {
        &self.generators
    }

    pub fn insert(&mut self, x: FiniteString) {
        self.generators.insert(x);
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    /// Prefix-free and maximal: subsumed generators are dropped and any
    /// parent all of whose children are present replaces them.
    pub fn canonical(&self, alphabet_size: usize) -> Self {
        // Sorted order puts a prefix right before its extensions.
        let mut gens: BTreeSet<FiniteString> = BTreeSet::new();
        let mut last: Option<FiniteString> = None;
        for g in &self.generators {
            if let Some(l) = &last {
                if l.is_prefix_of(g) {
                    continue;
                }
            }
            gens.insert(g.clone());
            last = Some(g.clone());
        }

        let max_len = gens.iter().map(FiniteString::len).max().unwrap_or(0);
        for len in (1..=max_len).rev() {
            let mut by_parent: BTreeMap<FiniteString, usize> = BTreeMap::new();
            for g in gens.iter().filter(|g| g.len() == len) {
                *by_parent.entry(g.parent().unwrap()).or_default() += 1;
            }
            for (parent, count) in by_parent {
                if count == alphabet_size {
                    for a in 0..alphabet_size {
                        gens.remove(&parent.child(a));
                    }
                    gens.insert(parent);
                }
            }
        }
        Self { generators: gens }
    }

    /// Union of two generator sets.
    pub fn union(&self, other: &Self) -> Self {
        Self {
            generators: self
                .generators
                .union(&other.generators)
                .cloned()
                .collect(),
        }
    }
}
