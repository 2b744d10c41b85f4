// Copyright 2026 The qdiv Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max asymmetry {asymmetry:.3e})")]
    NonHermitianInput { asymmetry: f64 },

    #[error("dimension {dim} exceeds the supported maximum of 8")]
    DimensionOverflow { dim: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is singular to working precision")]
    Singular,

    #[error("Kraus list is empty")]
    EmptyKrausList,

    #[error("map is not trace preserving (zero map or TP defect)")]
    InvalidTp,

    #[error("rate blows up at t = {t}")]
    RateBlowUp { t: f64 },

    #[error("mixing weight {weight:.3e} is negative: map is not CP at t = {t}")]
    NegativeWeight { t: f64, weight: f64 },

    #[error("quadrature error estimate {estimate:.3e} exceeds tolerance")]
    QuadratureFailure { estimate: f64 },

    #[error("damping basis undefined: Gamma(t) = {gamma:.3e} is too small")]
    DegenerateTime { gamma: f64 },

    #[error("generator is singular at t = {t} (p(t) = 1)")]
    GeneratorSingular { t: f64 },

    #[error("rate blow-up at t = {at} lies strictly inside step [{from}, {to}]")]
    RateBlowUpInsideStep { from: f64, to: f64, at: f64 },

    #[error("trace preservation drifted by {deviation:.3e} at t = {t}; step too large")]
    NonTpDrift { t: f64, deviation: f64 },

    #[error("kernel of the map at s = {s} is not contained in the kernel at t = {t}")]
    NotDivisible { s: f64, t: f64 },

    #[error("not a column-stochastic matrix: {0}")]
    NotStochasticInput(String),

    #[error("time {t} is not a grid point")]
    OffGridTime { t: f64 },

    #[error("difference step {h} is below the grid resolution {resolution}")]
    StepTooSmall { h: f64, resolution: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("spanning states are nearly dependent (Gram determinant {gram:.3e})")]
    DegenerateSpan { gram: f64 },

    #[error("states do not span a 3-dimensional subspace ({0})")]
    NotThreeDimensional(String),

    #[error("orthogonal operator has a vanishing eigenvalue; subspace is not density-spanned")]
    NotDensitySpanned,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
