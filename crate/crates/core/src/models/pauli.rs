// Copyright 2026 The qdiv Authors
// SPDX-License-Identifier: Apache-2.0

//! Random-unitary Pauli dynamics `L_t = Σ_k γ_k(t) ½(σ_k · σ_k − id)`.

use super::rates::RateFn;
use super::Dynamics;
use crate::error::{Error, Result};
use crate::linalg::{self, pauli, ComplexMatrix};
use crate::superop::{from_kraus, Superoperator};

/// Weights below this are reported as a CP violation.
pub const NEGATIVE_WEIGHT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PauliModel {
    pub rates: [RateFn; 3],
}

impl PauliModel {
    pub fn new(gamma1: RateFn, gamma2: RateFn, gamma3: RateFn) -> Self {
        Self { rates: [gamma1, gamma2, gamma3] }
    }

    pub fn constant(g1: f64, g2: f64, g3: f64) -> Self {
        Self::new(RateFn::Constant(g1), RateFn::Constant(g2), RateFn::Constant(g3))
    }

    /// `Γ_k(t)`, possibly `+∞`.
    pub fn rate_integrals(&self, t: f64) -> [f64; 3] {
        [self.rates[0].integral(t), self.rates[1].integral(t), self.rates[2].integral(t)]
    }

    /// `[1, λ1, λ2, λ3]` with `λ_i = exp(−Γ_j − Γ_k)`; exactly 0 when a
    /// contributing integral is infinite.
    pub fn eigenvalues(&self, t: f64) -> [f64; 4] {
        let g = self.rate_integrals(t);
        [1.0, (-g[1] - g[2]).exp(), (-g[0] - g[2]).exp(), (-g[0] - g[1]).exp()]
    }

    /// Mixing weights `p_α(t)` of `Λ_t(ρ) = Σ p_α σ_α ρ σ_α`.
    pub fn weights(&self, t: f64) -> [f64; 4] {
        let l = self.eigenvalues(t);
        [
            0.25 * (1.0 + l[1] + l[2] + l[3]),
            0.25 * (1.0 + l[1] - l[2] - l[3]),
            0.25 * (1.0 - l[1] + l[2] - l[3]),
            0.25 * (1.0 - l[1] - l[2] + l[3]),
        ]
    }

    /// Errors with [`Error::NegativeWeight`] when `Λ_t` is not CP.
    pub fn check_weights(&self, t: f64) -> Result<[f64; 4]> {
        let w = self.weights(t);
        match w.iter().copied().find(|&x| x < -NEGATIVE_WEIGHT_TOL) {
            Some(weight) => Err(Error::NegativeWeight { t, weight }),
            None => Ok(w),
        }
    }

    /// `Λ_t` from its eigen-decomposition on the Pauli basis. The map is
    /// returned even when it is not CP; see [`PauliModel::check_weights`].
    pub fn map_at(&self, t: f64) -> Superoperator {
        let l = self.eigenvalues(t);
        let mut m = ComplexMatrix::zeros(4);
        for (a, &la) in l.iter().enumerate() {
            if la != 0.0 {
                let v = linalg::vec(&pauli(a));
                m += ComplexMatrix::outer(&v, &v) * (0.5 * la);
            }
        }
        Superoperator::from_matrix(m).expect("4x4")
    }

    /// The same map assembled from its random-unitary Kraus form.
    pub fn kraus_map_at(&self, t: f64) -> Superoperator {
        from_kraus(&[pauli(0), pauli(1), pauli(2), pauli(3)], &self.weights(t)).expect("four kraus ops")
    }

    pub fn generator_at(&self, t: f64) -> Result<Superoperator> {
        let mut total = Superoperator::zero();
        for (k, rate) in self.rates.iter().enumerate() {
            let g = rate.value(t)?;
            if g != 0.0 {
                total = total + from_kraus(&[pauli(k + 1), pauli(0)], &[0.5 * g, -0.5 * g])?;
            }
        }
        Ok(total)
    }
}

impl Dynamics for PauliModel {
    fn generator(&self, t: f64) -> Result<Superoperator> {
        self.generator_at(t)
    }

    fn map(&self, t: f64) -> Result<Superoperator> {
        Ok(self.map_at(t))
    }

    fn singular_times(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.rates.iter().filter_map(RateFn::blow_up_time).collect();
        v.sort_by(f64::total_cmp);
        v
    }
}
