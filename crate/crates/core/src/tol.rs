// Copyright 2026 The qdiv Authors
// SPDX-License-Identifier: Apache-2.0

//! Tolerances shared across modules.

/// Hermiticity check, absolute, scaled by the largest entry magnitude.
pub const HERM: f64 = 1e-10;

/// Eigen-pair residual and orthonormality.
pub const EIG: f64 = 1e-9;

/// Jacobi sweeps stop once the off-diagonal Frobenius mass falls below
/// this fraction of the total Frobenius norm.
pub const JACOBI_OFF: f64 = 1e-14;

/// Trace preservation on the Pauli basis.
pub const TP: f64 = 1e-9;

/// Trace preservation of a propagator restricted to its domain.
pub const TP_DOMAIN: f64 = 1e-8;

/// Smallest admissible Choi eigenvalue for a CP verdict.
pub const CP: f64 = 1e-9;

/// Relative singular-value cut for rank decisions.
pub const RANK: f64 = 1e-8;

/// Integrated maps may drift off trace preservation by at most this much.
pub const TP_DRIFT: f64 = 1e-7;

/// Backflow threshold separating numerical noise from a positive flow.
pub const BACKFLOW: f64 = 1e-7;

/// Central-difference step for numerically supplied mixing functions.
pub const H_RATE: f64 = 1e-5;

/// Adaptive Simpson absolute tolerance.
pub const QUAD: f64 = 1e-10;

/// Quadrature error estimates above this are reported as failures.
pub const QUAD_FAIL: f64 = 1e-9;

/// Subspace inclusion residual (Hilbert-Schmidt) for image/kernel chains.
pub const SUBSPACE: f64 = 1e-6;

/// Minimum Gram determinant for a spanning pair or triple of states.
pub const GRAM: f64 = 1e-10;

/// Alberti-Uhlmann margin admitted as feasible.
pub const AU_MARGIN: f64 = 1e-9;

/// Entry tolerance for stochastic matrices.
pub const STOCHASTIC: f64 = 1e-10;
