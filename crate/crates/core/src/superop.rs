// Copyright 2026 The qdiv Authors
// SPDX-License-Identifier: Apache-2.0

//! Superoperator calculus on qubit operators.
//!
//! A [`Superoperator`] is the 4×4 matrix acting on row-stacked 2×2
//! operators (see [`crate::linalg::vec`]). Column `2i + j` of the matrix is
//! `vec(S(|i⟩⟨j|))`.

use std::sync::LazyLock;

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, hermitian_eigen, hermitian_eigenvalues, pauli, ComplexMatrix, C64};
use crate::tol;

#[derive(Clone, Copy, PartialEq, Debug)]
pub struct Superoperator {
    matrix: ComplexMatrix,
}

impl Superoperator {
    pub fn from_matrix(matrix: ComplexMatrix) -> Result<Self> {
        if matrix.dim() != 4 {
            return Err(Error::DimensionMismatch { expected: 4, found: matrix.dim() });
        }
        Ok(Self { matrix })
    }

    pub fn identity() -> Self {
        Self { matrix: ComplexMatrix::identity(4) }
    }

    pub fn zero() -> Self {
        Self { matrix: ComplexMatrix::zeros(4) }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// Builds the matrix column by column from the images of `|i⟩⟨j|`.
    pub fn from_action(f: impl Fn(&ComplexMatrix) -> ComplexMatrix) -> Self {
        let mut matrix = ComplexMatrix::zeros(4);
        for i in 0..2 {
            for j in 0..2 {
                let out = f(&ComplexMatrix::unit(2, i, j));
                for (r, z) in linalg::vec(&out).into_iter().enumerate() {
                    matrix[(r, 2 * i + j)] = z;
                }
            }
        }
        Self { matrix }
    }

    /// The map sending `σ_α ↦ images[α]`, extended linearly.
    pub fn from_pauli_images(images: &[ComplexMatrix; 4]) -> Self {
        let mut matrix = ComplexMatrix::zeros(4);
        for (alpha, image) in images.iter().enumerate() {
            let out = linalg::vec(image);
            let inp = linalg::vec(&pauli(alpha));
            matrix += ComplexMatrix::outer(&out, &inp) * 0.5;
        }
        Self { matrix }
    }

    /// `ρ ↦ U ρ U†`.
    pub fn conjugation(u: &ComplexMatrix) -> Self {
        let m = linalg::kron(u, &u.conj()).expect("2x2 ⊗ 2x2");
        Self { matrix: m }
    }

    pub fn apply(&self, op: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(op.dim(), 2, "superoperators act on 2x2 operators");
        let out = self.matrix.mul_vec(&linalg::vec(op));
        ComplexMatrix::from_fn(2, |i, j| out[2 * i + j])
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &Self) -> Self {
        Self { matrix: self.matrix * inner.matrix }
    }

    /// Hilbert–Schmidt adjoint (the dual map).
    pub fn adjoint(&self) -> Self {
        Self { matrix: self.matrix.dagger() }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { matrix: self.matrix * s }
    }

    pub fn max_diff(&self, other: &Self) -> f64 {
        self.matrix.max_diff(&other.matrix)
    }

    /// Real Pauli transfer matrix `R[α][β] = ½ Re Tr(σ_α S(σ_β))`.
    pub fn pauli_transfer(&self) -> [[f64; 4]; 4] {
        let mut r = [[0.0; 4]; 4];
        for beta in 0..4 {
            let out = self.apply(&pauli(beta));
            for (alpha, row) in r.iter_mut().enumerate() {
                row[beta] = 0.5 * (pauli(alpha) * out).trace().re;
            }
        }
        r
    }

    /// Largest `|Tr S(σ_α) − Tr σ_α|` over the Pauli basis.
    pub fn tp_defect(&self) -> f64 {
        (0..4)
            .map(|a| (self.apply(&pauli(a)).trace() - pauli(a).trace()).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_tp(&self, tol: f64) -> bool {
        self.tp_defect() <= tol
    }

    pub fn inverse(&self) -> Result<Self> {
        Ok(Self { matrix: self.matrix.inverse()? })
    }
}

impl std::ops::Add for Superoperator {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self { matrix: self.matrix + rhs.matrix }
    }
}

impl std::ops::Sub for Superoperator {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self { matrix: self.matrix - rhs.matrix }
    }
}

/// `ρ ↦ Σ w_k K_k ρ K_k†`; weights may be negative (the result is then not CP).
pub fn from_kraus(ops: &[ComplexMatrix], weights: &[f64]) -> Result<Superoperator> {
    if ops.is_empty() {
        return Err(Error::EmptyKrausList);
    }
    if ops.len() != weights.len() {
        return Err(Error::DimensionMismatch { expected: ops.len(), found: weights.len() });
    }
    let mut matrix = ComplexMatrix::zeros(4);
    for (k, &w) in ops.iter().zip(weights) {
        if k.dim() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, found: k.dim() });
        }
        matrix += linalg::kron(k, &k.conj())? * w;
    }
    Ok(Superoperator { matrix })
}

/// Random CPTP map: three complex Gaussian Kraus operators, rescaled by
/// `(Σ K†K)^{-1/2}` so the set is trace preserving.
pub fn random_channel(rng: &mut impl Rng) -> Superoperator {
    let ks: Vec<ComplexMatrix> = (0..3)
        .map(|_| ComplexMatrix::from_fn(2, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))))
        .collect();
    let mut sum = ComplexMatrix::zeros(2);
    for k in &ks {
        sum += k.dagger() * *k;
    }
    let e = hermitian_eigen(&sum.hermitian_part()).expect("hermitian");
    let mut inv_sqrt = ComplexMatrix::zeros(2);
    for i in 0..2 {
        let v = e.vector(i);
        inv_sqrt += ComplexMatrix::outer(&v, &v) * (1.0 / e.values[i].sqrt());
    }
    let normalized: Vec<ComplexMatrix> = ks.iter().map(|k| *k * inv_sqrt).collect();
    from_kraus(&normalized, &[1.0; 3]).expect("non-empty 2x2 Kraus set")
}

/// `Γ(S) = Σ_{ij} |i⟩⟨j| ⊗ S(|i⟩⟨j|)`.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct ChoiMatrix {
    matrix: ComplexMatrix,
}

impl ChoiMatrix {
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// Eigenvalues of the Hermitian part, descending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix.hermitian_part()).expect("hermitian part")
    }
}

pub fn choi(s: &Superoperator) -> ChoiMatrix {
    let m = s.matrix();
    let matrix = ComplexMatrix::from_fn(4, |r, c| {
        let (i, k) = (r / 2, r % 2);
        let (j, l) = (c / 2, c % 2);
        m[(2 * k + l, 2 * i + j)]
    });
    ChoiMatrix { matrix }
}

#[derive(Debug, Clone)]
pub struct CpCheck {
    pub cp: bool,
    pub min_eigenvalue: f64,
    /// Choi eigenvector of the smallest eigenvalue.
    pub witness: Vec<C64>,
}

/// Complete positivity via the smallest Choi eigenvalue `≥ −tol`.
///
/// A Choi matrix that is not Hermitian (the map does not preserve
/// Hermiticity) is never CP.
pub fn is_cp(s: &Superoperator, tol: f64) -> CpCheck {
    let c = choi(s);
    let hermitian = c.matrix.is_hermitian(tol::HERM.max(tol));
    let e = hermitian_eigen(&c.matrix.hermitian_part()).expect("hermitian part");
    let min_eigenvalue = e.values[3];
    CpCheck { cp: hermitian && min_eigenvalue >= -tol, min_eigenvalue, witness: e.vector(3) }
}

pub fn is_tp(s: &Superoperator, tol: f64) -> bool {
    s.is_tp(tol)
}

/// A fixed collection of pure qubit states used to test map positivity.
#[derive(Debug, Clone)]
pub struct PureStateSample {
    kets: Vec<[C64; 2]>,
}

impl PureStateSample {
    /// `rings × per_ring` Bloch-sphere grid, polar angles `jπ/(rings−1)`.
    pub fn bloch_grid(rings: usize, per_ring: usize) -> Self {
        let mut kets = Vec::with_capacity(rings * per_ring);
        for j in 0..rings {
            let theta = std::f64::consts::PI * j as f64 / (rings.max(2) - 1) as f64;
            for k in 0..per_ring {
                let phi = 2.0 * std::f64::consts::PI * k as f64 / per_ring as f64;
                kets.push(bloch_ket(theta, phi));
            }
        }
        Self { kets }
    }

    /// Haar-random pure states from normalized complex Gaussian vectors.
    pub fn haar(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kets = (0..n)
            .map(|_| {
                let v = crate::infoflow::haar_ket(2, &mut rng);
                [v[0], v[1]]
            })
            .collect();
        Self { kets }
    }

    /// 400-point grid plus 600 Haar-random states.
    pub fn standard() -> &'static Self {
        static STANDARD: LazyLock<PureStateSample> = LazyLock::new(|| {
            let mut s = PureStateSample::bloch_grid(20, 20);
            s.kets.extend(PureStateSample::haar(600, 0x5eed0fb10c).kets);
            s
        });
        &STANDARD
    }

    pub fn len(&self) -> usize {
        self.kets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kets.is_empty()
    }

    pub fn states(&self) -> impl Iterator<Item = ComplexMatrix> + '_ {
        self.kets.iter().map(|k| ComplexMatrix::outer(k, k))
    }
}

/// `cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`.
pub fn bloch_ket(theta: f64, phi: f64) -> [C64; 2] {
    [C64::new((theta / 2.0).cos(), 0.0), C64::from_polar((theta / 2.0).sin(), phi)]
}

/// Smaller eigenvalue of the Hermitian part of a 2×2 matrix.
pub(crate) fn min_eigenvalue_2x2(m: &ComplexMatrix) -> f64 {
    let a = m[(0, 0)].re;
    let d = m[(1, 1)].re;
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)].conj());
    0.5 * (a + d) - (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt()
}

#[derive(Debug, Clone)]
pub struct PositivityCheck {
    pub positive: bool,
    pub min_eigenvalue: f64,
    pub worst_state: ComplexMatrix,
}

/// Positivity on a pure-state sample: the smallest output eigenvalue over
/// the sample must be `≥ −tol`. The worst input state is returned.
pub fn is_positive_map(s: &Superoperator, sample: &PureStateSample, tol: f64) -> PositivityCheck {
    let mut worst = (f64::INFINITY, ComplexMatrix::identity(2) * 0.5);
    for state in sample.states() {
        let m = min_eigenvalue_2x2(&s.apply(&state));
        if m < worst.0 {
            worst = (m, state);
        }
    }
    PositivityCheck { positive: worst.0 >= -tol, min_eigenvalue: worst.0, worst_state: worst.1 }
}

/// Singular values of the 4×4 matrix, descending.
pub fn singular_values(s: &Superoperator) -> [f64; 4] {
    let v = linalg::singular_values(s.matrix()).expect("4x4 dilation fits");
    [v[0], v[1], v[2], v[3]]
}

/// Image/kernel structure of a superoperator under the Hilbert–Schmidt
/// inner product.
#[derive(Debug, Clone)]
pub struct RankProfile {
    pub rank: usize,
    pub image_basis: Vec<ComplexMatrix>,
    pub kernel_basis: Vec<ComplexMatrix>,
    pub singular_values: [f64; 4],
}

impl RankProfile {
    /// Hilbert–Schmidt distance from `op` to the image span.
    pub fn image_residual(&self, op: &ComplexMatrix) -> f64 {
        let mut r = *op;
        for b in &self.image_basis {
            r -= *b * b.hs_inner(op);
        }
        r.frobenius_norm()
    }

    pub fn is_invertible(&self) -> bool {
        self.rank == 4
    }
}

fn to_operator(v: &[C64]) -> ComplexMatrix {
    linalg::unvec(v).expect("4-vector")
}

pub fn rank_profile(s: &Superoperator, tol_rank: f64) -> Result<RankProfile> {
    let singular_values = singular_values(s);
    let rank = linalg::numerical_rank(&singular_values, tol_rank);
    if rank == 0 {
        return Err(Error::InvalidTp);
    }
    let m = s.matrix();
    let right = linalg::right_singular_vectors(m)?;
    let left = hermitian_eigen(&(*m * m.dagger()).hermitian_part())?;
    let image_basis = (0..rank).map(|i| to_operator(&left.vector(i))).collect();
    let kernel_basis = (rank..4).map(|i| to_operator(&right.column(i))).collect();
    Ok(RankProfile { rank, image_basis, kernel_basis, singular_values })
}

/// Moore–Penrose pseudo-inverse with the same relative rank cut.
pub fn pseudo_inverse(s: &Superoperator, tol_rank: f64) -> Superoperator {
    let pinv = linalg::pseudo_inverse(s.matrix(), tol_rank).expect("4x4");
    Superoperator { matrix: pinv }
}

pub fn compose(outer: &Superoperator, inner: &Superoperator) -> Superoperator {
    outer.compose(inner)
}

/// Named qubit maps used throughout the crate.
pub mod maps {
    use super::*;

    /// `ρ ↦ ½ρ + ¼(σ1ρσ1 + σ2ρσ2)`: CPTP, image spanned by `{𝟙, σ1, σ2}`
    /// with the equatorial directions halved and `σ3 ↦ 0`.
    pub fn disk_contraction() -> Superoperator {
        from_kraus(&[pauli(0), pauli(1), pauli(2)], &[0.5, 0.25, 0.25]).expect("valid kraus")
    }

    /// `ρ ↦ ¼(3ρ + σ1ρσ1 + σ2ρσ2 − σ3ρσ3)`: positive, trace-preserving
    /// projector of the Bloch ball onto the equatorial disk; not CP.
    pub fn equatorial_projector() -> Superoperator {
        from_kraus(&[pauli(0), pauli(1), pauli(2), pauli(3)], &[0.75, 0.25, 0.25, -0.25]).expect("valid kraus")
    }

    /// `ρ ↦ ½(ρ + σ3ρσ3)`: CPTP projector onto the `x3` axis (full dephasing).
    pub fn z_axis_projector() -> Superoperator {
        from_kraus(&[pauli(0), pauli(3)], &[0.5, 0.5]).expect("valid kraus")
    }

    /// `ρ ↦ ρᵀ`.
    pub fn transpose() -> Superoperator {
        Superoperator::from_action(|m| m.transpose())
    }
}
