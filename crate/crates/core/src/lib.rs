//! Value of policies in environments whose percept probabilities may sum to
//! less than one.
//!
//! Lost mass is read four ways: discounted reward sums, termination with the
//! utility of the finite prefix, a pessimistic Choquet integral, and
//! renormalized conditionals. Values are computed exactly over
//! [`arith::Q`] or approximately over `f64`, truncated at a horizon with
//! certified bounds on the tail.
pub mod arith;
pub mod environment;
pub mod semimeasure;
pub mod utility;
pub mod value;
pub mod planning;
pub mod random;
