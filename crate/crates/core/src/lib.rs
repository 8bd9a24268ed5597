//! Numerical toolkit for finite-dimensional commutative algebras with an
//! associative positive definite bilinear form.
//!
//! The pipeline finds idempotents as stationary points of the cubic form
//! `⟨x², x⟩` on the unit sphere, identifies the shortest ones, decides whether
//! the algebra is *minimal* (`|e|² = 2|c|²` for a shortest idempotent `c`),
//! and for minimal algebras builds an explicit isomorphism onto the Jordan
//! algebra of a symmetric bilinear form (a spin factor).

pub mod algebra;
pub mod constructions;
pub mod error;
pub mod io;
pub mod linalg;
pub mod report;
pub mod search;
pub mod structure;

pub use algebra::{AlgebraSpec, ValidationReport, Vector};
pub use error::{Error, Result};
pub use search::{IdempotentKind, IdempotentRecord, SearchConfig};
