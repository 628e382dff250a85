//! Primal-dual approximation solver for positive semidefinite programs.
//!
//! A positive SDP asks to minimize `tr(C X)` over PSD matrices `X` subject to
//! `tr(A_i X) >= b_i`, where `C` and every `A_i` are themselves PSD and every
//! `b_i` is non-negative. The dual maximizes `sum b_i y_i` subject to
//! `sum y_i A_i <= C` and `y >= 0`. This crate solves such programs to a
//! `(1+eps)`-style multiplicative accuracy via a width-independent matrix
//! multiplicative-weights iteration, and emits certificates (a primal matrix
//! and a dual weight vector) whose feasibility and objective gap can be
//! re-checked independently of the solver.
//!
//! Modules:
//! - [`spectra`]: dense Hermitian kernel (eigendecomposition, threshold
//!   projectors, eigenvalue-mass sums, matrix exponential).
//! - [`instance`]: problem data model, JSON format, seeded generators.
//! - [`transform`]: reduction of a general positive SDP to the normalized
//!   special form, and pullback of special-form solutions.
//! - [`solver`]: the multiplicative-weights iteration itself.
//! - [`verify`]: certificate verification and independent reference oracles.
//! - [`diagnostics`]: numeric validators for the spectral facts the solver's
//!   analysis relies on (two-projector decompositions, threshold-mass bounds).
//! - [`cli`]: command-line entry points.

pub mod cli;
pub mod diagnostics;
pub mod instance;
pub mod solver;
pub mod spectra;
pub mod transform;
pub mod verify;
