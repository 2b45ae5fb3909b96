//! Finite-scale machinery for Fraïssé classes: structure classes and their
//! amalgams, independence relations with axiom audits, lazily grown limits and
//! lazily defined automorphisms.

pub mod error;
pub mod circle;
pub mod classes;
pub mod hyper;
pub mod json;
pub mod independence;
pub mod limit;
pub mod moves;
pub mod partite;
pub mod structure;
pub mod transversal;
pub mod zoo;

pub use error::{FraisseError, Result};
pub use structure::{Elem, FiniteStructure, PartialIso, QfType, Signature};
