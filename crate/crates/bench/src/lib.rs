// Copyright 2026 The qdiv Authors
// SPDX-License-Identifier: Apache-2.0

//! Benchmark fixtures. Everything is deterministic so runs compare.

use qdiv_core::models::{CompositionModel, MixingProfile, Model, PauliModel, RateFn};
use qdiv_core::propagation::{self, MapTrajectory, TimeGrid};
use qdiv_core::{ComplexMatrix, C64};

/// Dense Hermitian test matrix with a spread spectrum.
pub fn hermitian(n: usize) -> ComplexMatrix {
    let a = ComplexMatrix::from_fn(n, |i, j| {
        let x = (i * n + j) as f64;
        C64::new((1.3 * x).sin(), (0.7 * x + 0.2).cos())
    });
    (a + a.dagger()) * 0.5
}

/// Rates (1, 1, -tanh t): never CP-divisible, always P-divisible.
pub fn eternal() -> Model {
    Model::Pauli(PauliModel::new(RateFn::Constant(1.0), RateFn::Constant(1.0), RateFn::neg_tanh()))
}

/// Mixing with a unitary whose strength hits one at t = 1.
pub fn crossing() -> Model {
    Model::Composition(CompositionModel::new(MixingProfile::Poly(vec![0.0, 2.0, -1.0])))
}

pub fn trajectory(model: &Model, t_end: f64, steps: usize) -> MapTrajectory {
    let grid = TimeGrid::uniform(t_end, steps).expect("valid grid");
    propagation::assemble(model, &grid).expect("integrable model")
}
