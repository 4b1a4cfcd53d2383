//! Finite-truncation operator calculus on the Hardy space of the
//! symmetrized polydisk.
//!
//! The crate works with the image of the polydisk under the elementary
//! symmetric map. Three function models are realized at a finite basis
//! window: the symmetric part of the polydisk Hardy space with the
//! antisymmetrized monomial basis, the space of coefficient sequences it
//! unitarily transports to, and the one-variable vector-valued picture
//! obtained by splitting off the smallest exponent.
//!
//! On these windows the crate assembles multiplication compressions exactly
//! (integer combinatorics, no quadrature), verifies the algebraic relations
//! that characterize Toeplitz, analytic and compact-perturbation classes,
//! runs compactness and asymptotic-Toeplitz diagnostics, and realizes the
//! dilation/extension constructions for commuting operator tuples attached
//! to the closed symmetrized polydisk.

pub mod asymptotics;
pub mod error;
pub mod gamma;
pub mod linalg;
pub mod operators;
pub mod partitions;
pub mod relations;
pub mod symbols;
pub mod symfun;

pub use error::{Error, Result};
