//! Construction and machine verification of elusive permutation groups:
//! transitive groups without derangements of prime order.

pub mod catalog;
pub mod constructions;
pub mod degrees;
pub mod error;
pub mod group;
pub mod linear;
pub mod perm;
pub mod polycirculant;
pub mod presentation;
pub mod residue;
pub mod verify;

pub use error::{Error, Result};
pub use group::PermGroup;
pub use perm::Permutation;
