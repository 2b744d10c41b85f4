// Copyright 2026 The qdiv Authors
// SPDX-License-Identifier: Apache-2.0

//! Non-commutative qubit dynamics with pumping, decay and dephasing:
//!
//! `L_t = ω L_0 + γ₊ L₊ + γ₋ L₋ + γ₃ L₃`, with
//! `L_0 ρ = i[σ3, ρ]`, `L_± ρ = ½(σ_± ρ σ_∓ − ½{σ_∓σ_±, ρ})` and
//! `L_3 ρ = ½(σ3 ρ σ3 − ρ)`, where `σ_± = (σ1 ± iσ2)/2`.
//!
//! With `Γ = ½∫(γ₊+γ₋)`, `G = ½∫e^Γ γ₋`, `Γ₃ = ∫γ₃` and `Ω = 2∫ω`, the
//! excited population evolves as `p ↦ e^{−Γ}(G + p)` and the coherence as
//! `α ↦ α e^{iΩ − Γ/2 − Γ₃}`.

use super::quadrature::adaptive_simpson;
use super::rates::RateFn;
use super::Dynamics;
use crate::error::{Error, Result};
use crate::linalg::{pauli, ComplexMatrix, C64};
use crate::superop::{from_kraus, Superoperator};
use crate::tol;

/// Below this `Γ(t)` the damping basis is numerically undefined.
pub const MIN_GAMMA: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ManiscalcoModel {
    pub omega: RateFn,
    pub gamma_plus: RateFn,
    pub gamma_minus: RateFn,
    pub gamma3: RateFn,
}

/// Biorthogonal eigen-operators of a map (`X`) and of its dual (`Y`).
#[derive(Debug, Clone)]
pub struct DampingBasis {
    pub x: [ComplexMatrix; 4],
    pub y: [ComplexMatrix; 4],
    pub eigenvalues: [C64; 4],
}

impl DampingBasis {
    /// Largest deviation of `Tr(X_α Y_β†)` from `δ_αβ`.
    pub fn biorthogonality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (a, xa) in self.x.iter().enumerate() {
            for (b, yb) in self.y.iter().enumerate() {
                let g = (*xa * yb.dagger()).trace();
                let want = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((g - C64::new(want, 0.0)).norm());
            }
        }
        worst
    }
}

/// Derived integrals at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManiscalcoIntegrals {
    pub gamma: f64,
    pub gamma3: f64,
    pub omega: f64,
    pub g: f64,
}

impl ManiscalcoIntegrals {
    /// `e^{−Γ}`, exactly 0 once `Γ` is infinite.
    pub fn decay(&self) -> f64 {
        (-self.gamma).exp()
    }

    /// `e^{−Γ} G`, with `e^{−∞} G := 0`.
    pub fn pumped(&self) -> f64 {
        if self.gamma.is_infinite() {
            0.0
        } else {
            self.decay() * self.g
        }
    }

    /// `e^{iΩ − Γ/2 − Γ₃}`.
    pub fn coherence(&self) -> C64 {
        let modulus = (-0.5 * self.gamma - self.gamma3).exp();
        if modulus == 0.0 {
            C64::new(0.0, 0.0)
        } else {
            C64::from_polar(modulus, self.omega)
        }
    }
}

fn sigma_plus() -> ComplexMatrix {
    ComplexMatrix::unit(2, 0, 1)
}

fn sigma_minus() -> ComplexMatrix {
    ComplexMatrix::unit(2, 1, 0)
}

/// `ρ ↦ ½(A ρ A† − ½{A†A, ρ})` as a superoperator.
fn dissipator(a: &ComplexMatrix) -> Superoperator {
    let ada = a.dagger() * *a;
    let jump = Superoperator::conjugation(a).scale(0.5);
    let anti = Superoperator::from_action(|m| (ada * *m + *m * ada) * 0.25);
    jump - anti
}

impl ManiscalcoModel {
    pub fn constant(omega: f64, gamma_plus: f64, gamma_minus: f64, gamma3: f64) -> Self {
        Self {
            omega: RateFn::Constant(omega),
            gamma_plus: RateFn::Constant(gamma_plus),
            gamma_minus: RateFn::Constant(gamma_minus),
            gamma3: RateFn::Constant(gamma3),
        }
    }

    pub fn gamma(&self, t: f64) -> f64 {
        0.5 * (self.gamma_plus.integral(t) + self.gamma_minus.integral(t))
    }

    /// `G(t) = ½∫₀ᵗ e^{Γ(τ)} γ₋(τ) dτ`: closed form for constant rates,
    /// adaptive Simpson otherwise.
    pub fn g(&self, t: f64) -> Result<f64> {
        if self.gamma_minus.is_zero() || t == 0.0 {
            return Ok(0.0);
        }
        if let (Some(a), Some(b)) = (self.gamma_plus.as_constant(), self.gamma_minus.as_constant()) {
            let k = 0.5 * (a + b);
            return Ok(if k == 0.0 { 0.5 * b * t } else { 0.5 * b * (k * t).exp_m1() / k });
        }
        adaptive_simpson(
            |tau| {
                let rate = self.gamma_minus.value(tau).unwrap_or(f64::INFINITY);
                0.5 * self.gamma(tau).exp() * rate
            },
            0.0,
            t,
            tol::QUAD,
        )
    }

    pub fn integrals(&self, t: f64) -> Result<ManiscalcoIntegrals> {
        Ok(ManiscalcoIntegrals {
            gamma: self.gamma(t),
            gamma3: self.gamma3.integral(t),
            omega: 2.0 * self.omega.integral(t),
            g: self.g(t)?,
        })
    }

    /// The 4×4 matrix `N_t` acting on row-stacked operators.
    pub fn map_at(&self, t: f64) -> Result<Superoperator> {
        let ig = self.integrals(t)?;
        let pumped = ig.pumped();
        let excited = pumped + ig.decay();
        let coh = ig.coherence();
        let mut m = ComplexMatrix::zeros(4);
        m[(0, 0)] = C64::new(1.0 - pumped, 0.0);
        m[(0, 3)] = C64::new(1.0 - excited, 0.0);
        m[(3, 0)] = C64::new(pumped, 0.0);
        m[(3, 3)] = C64::new(excited, 0.0);
        m[(1, 1)] = coh;
        m[(2, 2)] = coh.conj();
        Superoperator::from_matrix(m)
    }

    /// `[1, e^{iΩ−Γ/2−Γ₃}, e^{−iΩ−Γ/2−Γ₃}, e^{−Γ}]`.
    pub fn eigenvalues(&self, t: f64) -> Result<[C64; 4]> {
        let ig = self.integrals(t)?;
        let c = ig.coherence();
        Ok([C64::new(1.0, 0.0), c, c.conj(), C64::new(ig.decay(), 0.0)])
    }

    /// Damping basis with `Y_0 = 𝟙`, `Y_1 = X_1`, `Y_2 = X_2` under
    /// `Tr(X_α Y_β†) = δ_αβ`.
    pub fn damping_basis(&self, t: f64) -> Result<DampingBasis> {
        let ig = self.integrals(t)?;
        if !(ig.gamma >= MIN_GAMMA) {
            return Err(Error::DegenerateTime { gamma: ig.gamma });
        }
        let norm = 1.0 / (1.0 - ig.decay());
        let pumped = ig.pumped();
        let excited = pumped + ig.decay();
        let diag = |a: f64, b: f64| ComplexMatrix::from_real(2, &[a * norm, 0.0, 0.0, b * norm]);
        let x0 = diag(1.0 - excited, pumped);
        let y3 = diag(pumped, excited - 1.0);
        let (x1, x2) = (sigma_plus(), sigma_minus());
        Ok(DampingBasis {
            x: [x0, x1, x2, pauli(3)],
            y: [pauli(0), x1, x2, y3],
            eigenvalues: self.eigenvalues(t)?,
        })
    }

    pub fn generator_at(&self, t: f64) -> Result<Superoperator> {
        let omega = self.omega.value(t)?;
        let gp = self.gamma_plus.value(t)?;
        let gm = self.gamma_minus.value(t)?;
        let g3 = self.gamma3.value(t)?;
        let sz = pauli(3);
        let i = C64::new(0.0, 1.0);
        let hamiltonian = Superoperator::from_action(|m| (sz * *m - *m * sz) * i);
        let dephasing = from_kraus(&[sz, pauli(0)], &[0.5, -0.5])?;
        Ok(hamiltonian.scale(omega)
            + dissipator(&sigma_plus()).scale(gp)
            + dissipator(&sigma_minus()).scale(gm)
            + dephasing.scale(g3))
    }
}

impl Dynamics for ManiscalcoModel {
    fn generator(&self, t: f64) -> Result<Superoperator> {
        self.generator_at(t)
    }

    fn map(&self, t: f64) -> Result<Superoperator> {
        self.map_at(t)
    }

    fn singular_times(&self) -> Vec<f64> {
        let mut v: Vec<f64> = [&self.omega, &self.gamma_plus, &self.gamma_minus, &self.gamma3]
            .into_iter()
            .filter_map(RateFn::blow_up_time)
            .collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::hermitian_eigen;

    fn state(p_excited: f64, alpha: C64) -> ComplexMatrix {
        ComplexMatrix::from_slice(&[C64::new(1.0 - p_excited, 0.0), alpha, alpha.conj(), C64::new(p_excited, 0.0)]).unwrap()
    }

    #[test]
    fn identity_at_zero() {
        let m = ManiscalcoModel::constant(1.0, 1.0, 1.0, 0.5);
        assert!(m.map_at(0.0).unwrap().max_diff(&Superoperator::identity()) < 1e-15);
    }

    #[test]
    fn population_matches_quadrature_oracle() {
        let m = ManiscalcoModel::constant(0.0, 1.0, 1.0, 0.0);
        for t in [0.25, 1.0, 2.0, 4.0] {
            // G(t) = ½∫₀ᵗ e^τ dτ by composite Simpson.
            let n = 4000;
            let h = t / n as f64;
            let mut s = 0.0;
            for k in 0..=n {
                let w = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
                s += w * (k as f64 * h).exp();
            }
            let g = 0.5 * s * h / 3.0;
            let out = m.map_at(t).unwrap().apply(&state(1.0, C64::new(0.0, 0.0)));
            assert!((out[(1, 1)].re - (-t).exp() * (g + 1.0)).abs() < 1e-12, "t = {t}");
        }
    }

    #[test]
    fn action_on_states() {
        let m = ManiscalcoModel {
            omega: RateFn::Constant(0.7),
            gamma_plus: RateFn::Tanh { amp: 1.0 },
            gamma_minus: RateFn::Constant(0.4),
            gamma3: RateFn::Sin { amp: 0.3, freq: 1.0 },
        };
        let rho = state(0.3, C64::new(0.2, -0.1));
        for t in [0.5, 1.5] {
            let ig = m.integrals(t).unwrap();
            let out = m.map_at(t).unwrap().apply(&rho);
            let p = (-ig.gamma).exp() * (ig.g + 0.3);
            let alpha = C64::new(0.2, -0.1) * C64::from_polar((-0.5 * ig.gamma - ig.gamma3).exp(), ig.omega);
            assert!(out.max_diff(&state(p, alpha)) < 1e-12);
        }
    }

    #[test]
    fn eigenvalues_and_basis() {
        let m = ManiscalcoModel::constant(1.0, 1.0, 1.0, 0.5);
        for t in [0.1, 0.7, 2.0] {
            let map = m.map_at(t).unwrap();
            let basis = m.damping_basis(t).unwrap();
            assert!(basis.biorthogonality_defect() < 1e-12);
            for a in 0..4 {
                let lhs = map.apply(&basis.x[a]);
                assert!(lhs.max_diff(&(basis.x[a] * basis.eigenvalues[a])) < 1e-12);
                let dual = map.adjoint().apply(&basis.y[a]);
                assert!(dual.max_diff(&(basis.y[a] * basis.eigenvalues[a].conj())) < 1e-12);
            }
        }
        assert!(matches!(m.damping_basis(0.0), Err(Error::DegenerateTime { .. })));
    }

    #[test]
    fn generator_matches_map_derivative() {
        let m = ManiscalcoModel {
            omega: RateFn::Constant(0.9),
            gamma_plus: RateFn::Constant(0.6),
            gamma_minus: RateFn::Constant(0.3),
            gamma3: RateFn::Constant(0.2),
        };
        let h = 1e-5;
        for t in [0.3, 1.2] {
            let d = (m.map_at(t + h).unwrap() - m.map_at(t - h).unwrap()).scale(0.5 / h);
            let want = m.generator_at(t).unwrap().compose(&m.map_at(t).unwrap());
            assert!(d.max_diff(&want) < 1e-8);
        }
    }

    #[test]
    fn map_is_tp_and_cp_for_positive_rates() {
        let m = ManiscalcoModel::constant(1.0, 1.0, 0.5, 0.5);
        let map = m.map_at(1.3).unwrap();
        assert!(map.is_tp(tol::TP));
        let choi = crate::superop::choi(&map);
        let e = hermitian_eigen(choi.matrix()).unwrap();
        assert!(e.values[3] > -1e-12);
    }

    #[test]
    fn collapse_to_ground_state() {
        let m = ManiscalcoModel {
            omega: RateFn::zero(),
            gamma_plus: RateFn::BlowUp { amp: 1.0, at: 1.0 },
            gamma_minus: RateFn::zero(),
            gamma3: RateFn::zero(),
        };
        let map = m.map_at(1.0).unwrap();
        for b in 0..4 {
            let out = map.apply(&pauli(b));
            let want = ComplexMatrix::unit(2, 0, 0) * pauli(b).trace();
            assert!(out.max_diff(&want) < 1e-15);
        }
        assert_eq!(m.singular_times(), vec![1.0]);
    }
}
