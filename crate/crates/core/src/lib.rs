//! Sparse depth-2 and depth-d circuits for Kronecker power matrices.
//!
//! The crate builds explicit factorizations `M^{⊗n} = F_1 × F_2 × … × F_d`
//! with few nonzeros, starting from a sum-of-products decomposition of the
//! small base matrix `M`. Decompositions come from column one-hots, rank-1
//! rigidity witnesses, the polynomial method, or rectangle partitions of 0/1
//! matrices. Every circuit can be checked exactly or by randomized identity
//! testing over a large prime field.

pub mod builder;
pub mod circuit;
pub mod cli;
pub mod decomp;
pub mod error;
pub mod exponent;
pub mod field;
pub mod matrix;
pub mod partition;
pub mod presets;
pub mod rigidity;
pub mod smx;
pub mod verify;

pub use error::{Error, Result};
pub use field::{FieldElement, FieldSpec, Rational};
pub use matrix::{kron_power_apply, SparseMatrix};
