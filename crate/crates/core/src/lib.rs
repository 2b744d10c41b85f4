// Copyright 2026 The qdiv Authors
// SPDX-License-Identifier: Apache-2.0

//! Numerical analysis of qubit dynamical maps.
//!
//! The crate integrates time-local generators into families of maps, builds
//! inter-time propagators (also at instants where the map stops being
//! invertible), decides CP- and P-divisibility, hunts for information
//! backflow in the trace-norm distinguishability of evolved state pairs, and
//! checks structural certificates for qubit projectors.
//!
//! Module map:
//!
//! - [`linalg`]: fixed small-dimension complex linear algebra.
//! - [`superop`]: superoperators, Choi matrices, CP/TP/positivity predicates.
//! - [`models`]: the built-in generator families and their closed-form maps.
//! - [`propagation`]: integration, propagators, divisibility classification.
//! - [`infoflow`]: distinguishability functionals and the backflow hunter.
//! - [`certify`]: two-state extendability and projector certificates.

#![forbid(unsafe_code)]
// `!(x > 0.0)` is how NaN gets rejected here.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certify;
pub mod csv;
pub mod error;
pub mod infoflow;
pub mod linalg;
pub mod models;
pub mod propagation;
pub mod superop;
pub mod tol;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, EigenDecomposition, C64};
pub use superop::{ChoiMatrix, RankProfile, Superoperator};
