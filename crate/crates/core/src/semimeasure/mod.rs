//! Pre-semimeasures on a finite alphabet, truncated at a horizon.
//!
//! A [`PreSemimeasureTree`] assigns a mass to every string of length at most
//! the horizon, with `mass(ε) = 1` and every parent at least as heavy as the
//! sum of its children. Storage is sparse: a string may be omitted only when
//! some ancestor is stored with zero mass, and every stored node of positive
//! mass below the horizon has all of its children stored.

mod extension;
pub mod io;
mod normalize;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::arith::{Scalar, Q};

pub use extension::{CylinderUnion, ExtendedMeasure};
pub use normalize::Normalized;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlphabetError {
    #[error("alphabet must contain at least one symbol")]
    Empty,
    #[error("duplicate symbol {0:?} in alphabet")]
    Duplicate(String),
}

/// Ordered set of distinct symbols. The order is fixed and drives
/// tie-breaking and canonical serialization.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Alphabet {
    symbols: Vec<String>,
}

impl Alphabet {
    pub fn new<I, S>(symbols: I) -> Result<Self, AlphabetError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let symbols: Vec<String> = symbols.into_iter().map(Into::into).collect();
        if symbols.is_empty() {
            return Err(AlphabetError::Empty);
        }
        for (i, s) in symbols.iter().enumerate() {
            if symbols[..i].contains(s) {
                return Err(AlphabetError::Duplicate(s.clone()));
            }
        }
        Ok(Self { symbols })
    }

    pub fn binary() -> Self {
        Self::indexed(2)
    }

    /// Alphabet `{0, 1, …, n-1}`.
    pub fn indexed(n: usize) -> Self {
        assert!(n > 0, "alphabet must be non-empty");
        Self {
            symbols: (0..n).map(|i| i.to_string()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn symbol(&self, index: usize) -> &str {
        &self.symbols[index]
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn index_of(&self, symbol: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s == symbol)
    }
}

/// A finite string over an alphabet, stored as symbol indices.
///
/// The derived ordering is lexicographic in the alphabet order with every
/// prefix sorted before its extensions.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FiniteString(Vec<usize>);

impl FiniteString {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn new(symbols: Vec<usize>) -> Self {
        Self(symbols)
    }

    pub fn symbols(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, symbol: usize) -> Self {
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.extend_from_slice(&self.0);
        v.push(symbol);
        Self(v)
    }

    pub fn parent(&self) -> Option<Self> {
        if self.0.is_empty() {
            None
        } else {
            Some(Self(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    pub fn prefix(&self, len: usize) -> Self {
        Self(self.0[..len].to_vec())
    }

    /// `self ⊑ other`.
    pub fn is_prefix_of(&self, other: &Self) -> bool {
        other.0.starts_with(&self.0)
    }

    pub fn is_proper_prefix_of(&self, other: &Self) -> bool {
        self.0.len() < other.0.len() && self.is_prefix_of(other)
    }

    pub fn last(&self) -> Option<usize> {
        self.0.last().copied()
    }

    /// Parses the dotted index form produced by `Display` (`ε` or the empty
    /// string for the empty word).
    pub fn parse_indices(text: &str) -> Option<Self> {
        let t = text.trim();
        if t.is_empty() || t == "ε" {
            return Some(Self::empty());
        }
        t.split('.')
            .map(|p| p.trim().parse::<usize>().ok())
            .collect::<Option<Vec<_>>>()
            .map(Self)
    }

    /// Dotted index form without the `ε` placeholder.
    pub fn to_indices(&self) -> String {
        self.0
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join(".")
    }
}

impl fmt::Display for FiniteString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            f.write_str("ε")
        } else {
            f.write_str(&self.to_indices())
        }
    }
}

impl From<Vec<usize>> for FiniteString {
    fn from(v: Vec<usize>) -> Self {
        Self(v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("missing node {0}")]
    MissingNode(FiniteString),
    #[error("node {node} is longer than the horizon {horizon}")]
    BeyondHorizon { node: FiniteString, horizon: usize },
    #[error("node {node} uses symbol {symbol} outside an alphabet of size {size}")]
    SymbolOutOfRange {
        node: FiniteString,
        symbol: usize,
        size: usize,
    },
    #[error("negative mass {mass} at node {node}")]
    NegativeMass { node: FiniteString, mass: String },
    #[error("mass of the empty string is {0}, expected 1")]
    NotNormalized(String),
    #[error("loss at {node} is unresolved at horizon {horizon}")]
    LossOutOfRange { node: FiniteString, horizon: usize },
    #[error("tree violates superadditivity at {} node(s), first at {}", .0.len(), .0[0].node)]
    NotSuperadditive(Vec<Violation>),
}

/// A node whose children outweigh it, with the excess rendered exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub node: FiniteString,
    pub excess: String,
}

/// A superadditivity violation carrying the scalar excess.
#[derive(Debug, Clone, PartialEq)]
pub struct Excess<S> {
    pub node: FiniteString,
    pub excess: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreSemimeasureTree<S = Q> {
    alphabet: Alphabet,
    horizon: usize,
    masses: BTreeMap<FiniteString, S>,
}

impl<S: Scalar> PreSemimeasureTree<S> {
    /// Validates structure: the root has mass 1, masses are nonnegative, and
    /// positive nodes above the horizon list all of their children.
    /// Superadditivity is not required here; see
    /// [`superadditivity_check`](Self::superadditivity_check).
    pub fn new(
        alphabet: Alphabet,
        horizon: usize,
        masses: BTreeMap<FiniteString, S>,
    ) -> Result<Self, TreeError> {
        let root = masses
            .get(&FiniteString::empty())
            .ok_or(TreeError::MissingNode(FiniteString::empty()))?;
        if !root.agrees_with(&S::one()) {
            return Err(TreeError::NotNormalized(root.render()));
        }
        let k = alphabet.len();
        for (node, mass) in &masses {
            if node.len() > horizon {
                return Err(TreeError::BeyondHorizon {
                    node: node.clone(),
                    horizon,
                });
            }
            if let Some(&symbol) = node.symbols().iter().find(|&&s| s >= k) {
                return Err(TreeError::SymbolOutOfRange {
                    node: node.clone(),
                    symbol,
                    size: k,
                });
            }
            if mass.is_negative_mass() || mass.is_nan() {
                return Err(TreeError::NegativeMass {
                    node: node.clone(),
                    mass: mass.render(),
                });
            }
            if let Some(parent) = node.parent() {
                if !masses.contains_key(&parent) {
                    return Err(TreeError::MissingNode(parent));
                }
            }
            if node.len() < horizon && !mass.is_zero() {
                for a in 0..k {
                    let child = node.child(a);
                    if !masses.contains_key(&child) {
                        return Err(TreeError::MissingNode(child));
                    }
                }
            }
        }
        Ok(Self {
            alphabet,
            horizon,
            masses,
        })
    }

    /// Dense tree with `mass(x) = f(x)` for every string up to the horizon.
    pub fn from_fn(
        alphabet: Alphabet,
        horizon: usize,
        f: impl Fn(&FiniteString) -> S,
    ) -> Result<Self, TreeError> {
        let mut masses = BTreeMap::new();
        let mut frontier = vec![FiniteString::empty()];
        while let Some(x) = frontier.pop() {
            if x.len() < horizon {
                frontier.extend((0..alphabet.len()).map(|a| x.child(a)));
            }
            let m = f(&x);
            masses.insert(x, m);
        }
        Self::new(alphabet, horizon, masses)
    }

    /// Internal constructor for trees built by trusted code paths.
    pub(crate) fn from_parts(
        alphabet: Alphabet,
        horizon: usize,
        masses: BTreeMap<FiniteString, S>,
    ) -> Self {
        debug_assert!(masses.contains_key(&FiniteString::empty()));
        Self {
            alphabet,
            horizon,
            masses,
        }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Mass of `x`; strings below a zero-mass stored ancestor have mass 0.
    pub fn mass(&self, x: &FiniteString) -> S {
        self.masses.get(x).cloned().unwrap_or_else(S::zero)
    }

    pub fn get(&self, x: &FiniteString) -> Option<&S> {
        self.masses.get(x)
    }

    pub fn contains(&self, x: &FiniteString) -> bool {
        self.masses.contains_key(x)
    }

    /// Stored nodes in canonical (lexicographic) order.
    pub fn nodes(&self) -> impl Iterator<Item = (&FiniteString, &S)> {
        self.masses.iter()
    }

    pub fn node_count(&self) -> usize {
        self.masses.len()
    }

    pub fn children(&self, x: &FiniteString) -> impl Iterator<Item = FiniteString> + '_ {
        let x = x.clone();
        (0..self.alphabet.len()).map(move |a| x.child(a))
    }

    /// Stored nodes in the cylinder of `x` (including `x`), in canonical order.
    pub fn subtree<'a>(
        &'a self,
        x: &'a FiniteString,
    ) -> impl Iterator<Item = (&'a FiniteString, &'a S)> + 'a {
        self.masses
            .range(x.clone()..)
            .take_while(move |(y, _)| x.is_prefix_of(y))
    }

    fn child_sum(&self, x: &FiniteString) -> S {
        self.children(x)
            .filter_map(|c| self.masses.get(&c).cloned())
            .sum()
    }

    /// Every node whose children outweigh it, with the excess. Empty iff the
    /// tree is a valid pre-semimeasure.
    pub fn superadditivity_check(&self) -> Vec<Excess<S>> {
        self.masses
            .iter()
            .filter(|(x, _)| x.len() < self.horizon)
            .filter_map(|(x, m)| {
                let excess = self.child_sum(x) - m.clone();
                excess.is_positive_mass().then(|| Excess {
                    node: x.clone(),
                    excess,
                })
            })
            .collect()
    }

    /// Semimeasure loss `mass(x) − Σ_a mass(xa)`, defined strictly above the
    /// horizon.
    pub fn loss(&self, x: &FiniteString) -> Result<S, TreeError> {
        if x.len() >= self.horizon {
            return Err(TreeError::LossOutOfRange {
                node: x.clone(),
                horizon: self.horizon,
            });
        }
        if x.symbols().iter().any(|&s| s >= self.alphabet.len()) {
            return Err(TreeError::SymbolOutOfRange {
                node: x.clone(),
                symbol: *x.symbols().iter().max().unwrap(),
                size: self.alphabet.len(),
            });
        }
        Ok(self.mass(x) - self.child_sum(x))
    }

    pub(crate) fn violations(&self) -> Vec<Violation> {
        self.superadditivity_check()
            .into_iter()
            .map(|e| Violation {
                node: e.node,
                excess: e.excess.render(),
            })
            .collect()
    }

    /// Maps every mass through `f`, keeping the node set.
    pub fn map_masses<T: Scalar>(&self, f: impl Fn(&S) -> T) -> PreSemimeasureTree<T> {
        PreSemimeasureTree {
            alphabet: self.alphabet.clone(),
            horizon: self.horizon,
            masses: self.masses.iter().map(|(k, v)| (k.clone(), f(v))).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{pow_q, q, qi};

    pub(crate) fn example8() -> PreSemimeasureTree {
        PreSemimeasureTree::from_fn(Alphabet::binary(), 2, |x| {
            if x.is_empty() {
                qi(1)
            } else {
                pow_q(&q(1, 2), x.len() + 1)
            }
        })
        .unwrap()
    }

    pub(crate) fn uniform(horizon: usize) -> PreSemimeasureTree {
        PreSemimeasureTree::from_fn(Alphabet::binary(), horizon, |x| pow_q(&q(1, 2), x.len()))
            .unwrap()
    }

    fn fs(v: &[usize]) -> FiniteString {
        FiniteString::new(v.to_vec())
    }

    #[test]
    fn alphabet_rejects_duplicates_and_empty() {
        assert_eq!(
            Alphabet::new(["a", "b", "a"]),
            Err(AlphabetError::Duplicate("a".into()))
        );
        assert_eq!(Alphabet::new(Vec::<String>::new()), Err(AlphabetError::Empty));
        let ab = Alphabet::new(["x", "y"]).unwrap();
        assert_eq!(ab.index_of("y"), Some(1));
    }

    #[test]
    fn prefix_relation_is_consistent_with_length() {
        let x = fs(&[0, 1]);
        let y = fs(&[0, 1, 1]);
        assert!(x.is_proper_prefix_of(&y));
        assert!(!y.is_prefix_of(&x));
        assert!(FiniteString::empty().is_prefix_of(&x));
        assert!(x < y);
        assert_eq!(FiniteString::parse_indices(&y.to_string()), Some(y));
        assert_eq!(FiniteString::parse_indices("ε"), Some(FiniteString::empty()));
    }

    #[test]
    fn example8_is_superadditive() {
        assert!(example8().superadditivity_check().is_empty());
        assert!(uniform(3).superadditivity_check().is_empty());
    }

    #[test]
    fn superadditivity_violation_reports_excess() {
        let mut m = BTreeMap::new();
        m.insert(FiniteString::empty(), qi(1));
        m.insert(fs(&[0]), q(3, 5));
        m.insert(fs(&[1]), q(1, 2));
        let t = PreSemimeasureTree::new(Alphabet::binary(), 1, m).unwrap();
        let v = t.superadditivity_check();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].node, FiniteString::empty());
        assert_eq!(v[0].excess, q(1, 10));
    }

    #[test]
    fn missing_child_is_a_structural_error() {
        let mut m = BTreeMap::new();
        m.insert(FiniteString::empty(), qi(1));
        m.insert(fs(&[0]), q(1, 2));
        let err = PreSemimeasureTree::new(Alphabet::binary(), 1, m).unwrap_err();
        assert_eq!(err, TreeError::MissingNode(fs(&[1])));
    }

    #[test]
    fn root_must_be_one() {
        let mut m = BTreeMap::new();
        m.insert(FiniteString::empty(), q(1, 2));
        let err = PreSemimeasureTree::new(Alphabet::binary(), 0, m).unwrap_err();
        assert!(matches!(err, TreeError::NotNormalized(_)));
    }

    #[test]
    fn loss_matches_hand_arithmetic() {
        let t = example8();
        assert_eq!(t.loss(&FiniteString::empty()).unwrap(), q(1, 2));
        assert_eq!(t.loss(&fs(&[0])).unwrap(), qi(0));
        assert_eq!(t.loss(&fs(&[1])).unwrap(), qi(0));
        let u = uniform(3);
        for (x, _) in u.nodes().filter(|(x, _)| x.len() < 3) {
            assert_eq!(u.loss(x).unwrap(), qi(0));
        }
    }

    #[test]
    fn loss_at_horizon_is_out_of_range() {
        let t = example8();
        assert!(matches!(
            t.loss(&fs(&[0, 1])),
            Err(TreeError::LossOutOfRange { .. })
        ));
    }

    #[test]
    fn sparse_storage_treats_pruned_nodes_as_zero() {
        let mut m = BTreeMap::new();
        m.insert(FiniteString::empty(), qi(1));
        m.insert(fs(&[0]), qi(0));
        m.insert(fs(&[1]), qi(1));
        m.insert(fs(&[1, 0]), q(1, 2));
        m.insert(fs(&[1, 1]), q(1, 2));
        let t = PreSemimeasureTree::new(Alphabet::binary(), 2, m).unwrap();
        assert_eq!(t.mass(&fs(&[0, 1])), qi(0));
        assert_eq!(t.loss(&fs(&[0])).unwrap(), qi(0));
        assert!(t.superadditivity_check().is_empty());
    }
}
