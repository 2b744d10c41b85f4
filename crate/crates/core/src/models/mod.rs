// Copyright 2026 The qdiv Authors
// SPDX-License-Identifier: Apache-2.0

//! Built-in qubit dynamics with closed-form maps.

pub mod composition;
pub mod maniscalco;
pub mod pauli;
pub mod quadrature;
pub mod rates;

pub use composition::{CompositionModel, MixingProfile};
pub use maniscalco::{DampingBasis, ManiscalcoModel};
pub use pauli::PauliModel;
pub use rates::RateFn;

use crate::error::Result;
use crate::superop::Superoperator;

/// A time-local generator together with its exact solution.
pub trait Dynamics: Sync {
    /// `L_t`; fails at and past a rate blow-up.
    fn generator(&self, t: f64) -> Result<Superoperator>;

    /// `Λ_t` in closed form.
    fn map(&self, t: f64) -> Result<Superoperator>;

    /// Sorted instants at which the map can lose rank (rate integral
    /// diverges, or the mixing reaches 1). Integration cannot cross them.
    fn singular_times(&self) -> Vec<f64>;
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Pauli(PauliModel),
    Maniscalco(ManiscalcoModel),
    Composition(CompositionModel),
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::Pauli(_) => "pauli",
            Model::Maniscalco(_) => "maniscalco",
            Model::Composition(_) => "composition",
        }
    }

    fn inner(&self) -> &dyn Dynamics {
        match self {
            Model::Pauli(m) => m,
            Model::Maniscalco(m) => m,
            Model::Composition(m) => m,
        }
    }
}

impl Dynamics for Model {
    fn generator(&self, t: f64) -> Result<Superoperator> {
        self.inner().generator(t)
    }

    fn map(&self, t: f64) -> Result<Superoperator> {
        self.inner().map(t)
    }

    fn singular_times(&self) -> Vec<f64> {
        self.inner().singular_times()
    }
}
