// Copyright 2026 The qdiv Authors
// SPDX-License-Identifier: Apache-2.0

//! Dense complex linear algebra for the small dimensions this crate needs.
//!
//! Matrices are stored inline (no heap) with dimension at most 8, which
//! covers a qubit (2), a qubit with a qubit or qutrit ancilla (4, 6), the
//! 4×4 superoperator and Choi matrices, and the 8×8 Hermitian dilation used
//! for singular values.
//!
//! The vectorization convention stacks rows: `vec(|i⟩⟨j|) = |i⟩|j⟩`, i.e.
//! entry `(i, j)` of a `d×d` operator lands at index `i·d + j`. Under this
//! convention `ρ ↦ AρB` has matrix `A ⊗ Bᵀ`.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tol;

pub type C64 = Complex64;

pub const MAX_DIM: usize = 8;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const MAX_SWEEPS: usize = 100;

/// Square complex matrix with inline storage, row-major.
#[derive(Clone, Copy, PartialEq)]
pub struct ComplexMatrix {
    n: usize,
    data: [C64; MAX_DIM * MAX_DIM],
}

impl ComplexMatrix {
    /// # Panics
    /// If `n` is zero or larger than [`MAX_DIM`].
    pub fn zeros(n: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&n), "unsupported dimension {n}");
        Self { n, data: [ZERO; MAX_DIM * MAX_DIM] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Builds from row-major entries; `entries.len()` must be a square ≤ 64.
    pub fn from_slice(entries: &[C64]) -> Result<Self> {
        let n = (entries.len() as f64).sqrt().round() as usize;
        if n * n != entries.len() || n == 0 {
            return Err(Error::DimensionMismatch { expected: n * n, found: entries.len() });
        }
        if n > MAX_DIM {
            return Err(Error::DimensionOverflow { dim: n });
        }
        Ok(Self::from_fn(n, |i, j| entries[i * n + j]))
    }

    pub fn from_real(n: usize, entries: &[f64]) -> Self {
        assert_eq!(entries.len(), n * n);
        Self::from_fn(n, |i, j| C64::new(entries[i * n + j], 0.0))
    }

    pub fn diagonal(values: &[C64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    /// `|i⟩⟨j|` in dimension `n`.
    pub fn unit(n: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(n);
        m[(i, j)] = ONE;
        m
    }

    /// Rank-one operator `|u⟩⟨v|`.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        assert_eq!(u.len(), v.len());
        Self::from_fn(u.len(), |i, j| u[i] * v[j].conj())
    }

    pub fn from_columns(columns: &[Vec<C64>]) -> Self {
        let n = columns.len();
        let mut m = Self::zeros(n);
        for (j, col) in columns.iter().enumerate() {
            assert_eq!(col.len(), n);
            for i in 0..n {
                m[(i, j)] = col[i];
            }
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.n).map(|i| self[(i, j)]).collect()
    }

    pub fn dagger(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(i, j)].conj())
    }

    pub fn trace(&self) -> C64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut m = *self;
        for x in m.entries_mut() {
            *x *= s;
        }
        m
    }

    pub fn entries(&self) -> &[C64] {
        &self.data[..self.n * self.n]
    }

    fn entries_mut(&mut self) -> &mut [C64] {
        let len = self.n * self.n;
        &mut self.data[..len]
    }

    pub fn max_abs(&self) -> f64 {
        self.entries().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Induced 1-norm (max column sum).
    pub fn one_norm(&self) -> f64 {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Hilbert–Schmidt inner product `Tr(self† other)`.
    pub fn hs_inner(&self, other: &Self) -> C64 {
        assert_eq!(self.n, other.n);
        self.entries().iter().zip(other.entries()).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn max_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.n, other.n);
        self.entries()
            .iter()
            .zip(other.entries())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn hermitian_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in i..self.n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Entrywise Hermiticity within `tol` scaled by the largest entry.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_asymmetry() <= tol * self.max_abs()
    }

    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.n, |i, j| 0.5 * (self[(i, j)] + self[(j, i)].conj()))
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.n);
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    /// Gauss–Jordan inverse with partial pivoting.
    pub fn inverse(&self) -> Result<Self> {
        let n = self.n;
        let scale = self.max_abs();
        if scale == 0.0 {
            return Err(Error::Singular);
        }
        let mut a = *self;
        let mut inv = Self::identity(n);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&x, &y| a[(x, col)].norm().total_cmp(&a[(y, col)].norm()))
                .unwrap_or(col);
            if a[(pivot, col)].norm() <= f64::EPSILON * scale {
                return Err(Error::Singular);
            }
            if pivot != col {
                for j in 0..n {
                    a.data.swap(pivot * n + j, col * n + j);
                    inv.data.swap(pivot * n + j, col * n + j);
                }
            }
            let d = a[(col, col)].inv();
            for j in 0..n {
                a[(col, j)] *= d;
                inv[(col, j)] *= d;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[(r, col)];
                if f == ZERO {
                    continue;
                }
                for j in 0..n {
                    let (ac, ic) = (a[(col, j)], inv[(col, j)]);
                    a[(r, j)] -= f * ac;
                    inv[(r, j)] -= f * ic;
                }
            }
        }
        Ok(inv)
    }

    /// Matrix exponential by scaling and squaring of a Taylor series.
    pub fn expm(&self) -> Self {
        let norm = self.one_norm();
        let mut squarings = 0u32;
        let mut a = *self;
        if norm > 0.5 {
            squarings = (norm / 0.5).log2().ceil() as u32;
            a = a * (0.5f64).powi(squarings as i32);
        }
        let mut result = Self::identity(self.n);
        let mut term = Self::identity(self.n);
        for k in 1..=30 {
            term = (term * a) * (1.0 / k as f64);
            result += term;
            if term.max_abs() <= 1e-18 * result.max_abs() {
                break;
            }
        }
        for _ in 0..squarings {
            result = result * result;
        }
        result
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.n && j < self.n);
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.n && j < self.n);
        &mut self.data[i * self.n + j]
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}×{})[", self.n, self.n)?;
        for i in 0..self.n {
            write!(f, "  ")?;
            for j in 0..self.n {
                let z = self[(i, j)];
                write!(f, "{:+.6e}{:+.6e}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Add for ComplexMatrix {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl AddAssign for ComplexMatrix {
    fn add_assign(&mut self, rhs: Self) {
        assert_eq!(self.n, rhs.n);
        for i in 0..self.n {
            for j in 0..self.n {
                self[(i, j)] += rhs[(i, j)];
            }
        }
    }
}

impl Sub for ComplexMatrix {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        self -= rhs;
        self
    }
}

impl SubAssign for ComplexMatrix {
    fn sub_assign(&mut self, rhs: Self) {
        assert_eq!(self.n, rhs.n);
        for i in 0..self.n {
            for j in 0..self.n {
                self[(i, j)] -= rhs[(i, j)];
            }
        }
    }
}

impl Neg for ComplexMatrix {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-ONE)
    }
}

impl Mul for ComplexMatrix {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        assert_eq!(self.n, rhs.n);
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl Mul<f64> for ComplexMatrix {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        self.scale(C64::new(rhs, 0.0))
    }
}

impl Mul<C64> for ComplexMatrix {
    type Output = Self;
    fn mul(self, rhs: C64) -> Self {
        self.scale(rhs)
    }
}

/// Pauli matrices `σ0 = 𝟙, σ1, σ2, σ3`.
pub fn pauli(k: usize) -> ComplexMatrix {
    let (o, z, i) = (ONE, ZERO, C64::new(0.0, 1.0));
    let e = match k {
        0 => [o, z, z, o],
        1 => [z, o, o, z],
        2 => [z, -i, i, z],
        3 => [o, z, z, -o],
        _ => panic!("Pauli index {k} out of range"),
    };
    ComplexMatrix::from_fn(2, |r, c| e[r * 2 + c])
}

/// Computational basis vector `|i⟩` in dimension `n`.
pub fn ket(n: usize, i: usize) -> Vec<C64> {
    let mut v = vec![ZERO; n];
    v[i] = ONE;
    v
}

pub fn normalize(v: &mut [C64]) {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        for z in v.iter_mut() {
            *z /= norm;
        }
    }
}

/// Eigen-decomposition of a Hermitian matrix: real values sorted descending,
/// orthonormal eigenvectors stored as the columns of `vectors`.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl EigenDecomposition {
    pub fn vector(&self, i: usize) -> Vec<C64> {
        self.vectors.column(i)
    }

    /// `Σ λ_i v_i v_i†`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.values.len();
        let mut m = ComplexMatrix::zeros(n);
        for (i, &lambda) in self.values.iter().enumerate() {
            let v = self.vector(i);
            m += ComplexMatrix::outer(&v, &v) * lambda;
        }
        m
    }
}

fn check_hermitian(m: &ComplexMatrix) -> Result<()> {
    if m.is_hermitian(tol::HERM) {
        Ok(())
    } else {
        Err(Error::NonHermitianInput { asymmetry: m.hermitian_asymmetry() })
    }
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let mut s = 0.0;
    for i in 0..a.n {
        for j in 0..a.n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Cyclic complex Jacobi; diagonalizes `a` in place and accumulates the
/// rotations into `v` when given.
fn jacobi(a: &mut ComplexMatrix, mut v: Option<&mut ComplexMatrix>) {
    let n = a.n;
    let target = tol::JACOBI_OFF * a.frobenius_norm();
    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(a) <= target {
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag == 0.0 {
                    continue;
                }
                let phase = apq / mag;
                let theta = (a[(q, q)].re - a[(p, p)].re) / (2.0 * mag);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // J = diag(1, conj(phase)) · real rotation on (p, q).
                let jpp = C64::new(c, 0.0);
                let jpq = C64::new(s, 0.0);
                let jqp = phase.conj() * (-s);
                let jqq = phase.conj() * c;
                for r in 0..n {
                    let (x, y) = (a[(r, p)], a[(r, q)]);
                    a[(r, p)] = x * jpp + y * jqp;
                    a[(r, q)] = x * jpq + y * jqq;
                }
                for col in 0..n {
                    let (x, y) = (a[(p, col)], a[(q, col)]);
                    a[(p, col)] = jpp.conj() * x + jqp.conj() * y;
                    a[(q, col)] = jpq.conj() * x + jqq.conj() * y;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
                if let Some(v) = v.as_deref_mut() {
                    for r in 0..n {
                        let (x, y) = (v[(r, p)], v[(r, q)]);
                        v[(r, p)] = x * jpp + y * jqp;
                        v[(r, q)] = x * jpq + y * jqq;
                    }
                }
            }
        }
    }
}

/// Hermitian eigen-decomposition by cyclic Jacobi rotations.
///
/// Eigenvalues are sorted descending. Each eigenvector is phase-fixed so that
/// its first largest-magnitude component is real and positive, which makes
/// the output deterministic for identical input.
pub fn hermitian_eigen(m: &ComplexMatrix) -> Result<EigenDecomposition> {
    check_hermitian(m)?;
    let n = m.n;
    let mut a = m.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    jacobi(&mut a, Some(&mut v));

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[(y, y)].re.total_cmp(&a[(x, x)].re));

    let values = order.iter().map(|&k| a[(k, k)].re).collect();
    let mut vectors = ComplexMatrix::zeros(n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = v.column(src);
        let max = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if let Some(lead) = col.iter().find(|z| z.norm() >= max * (1.0 - 1e-12)).copied() {
            let fix = lead.conj() / lead.norm();
            for z in col.iter_mut() {
                *z *= fix;
            }
        }
        for i in 0..n {
            vectors[(i, dst)] = col[i];
        }
    }
    Ok(EigenDecomposition { values, vectors })
}

/// Eigenvalues only, sorted descending.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>> {
    check_hermitian(m)?;
    let mut a = m.hermitian_part();
    jacobi(&mut a, None);
    let mut values: Vec<f64> = (0..m.n).map(|i| a[(i, i)].re).collect();
    values.sort_by(|x, y| y.total_cmp(x));
    Ok(values)
}

/// Trace norm of a Hermitian matrix, `Σ |λ_i|`.
pub fn trace_norm(m: &ComplexMatrix) -> Result<f64> {
    if m.dim() == 2 {
        check_hermitian(m)?;
        let h = m.hermitian_part();
        let (a, d) = (h[(0, 0)].re, h[(1, 1)].re);
        let split = ((a - d) * (a - d) + 4.0 * h[(0, 1)].norm_sqr()).sqrt();
        return Ok((a + d).abs().max(split));
    }
    Ok(hermitian_eigenvalues(m)?.iter().map(|l| l.abs()).sum())
}

/// Singular values (descending) of an `n×n` matrix with `n ≤ 4`, read off the
/// eigenvalues of the Hermitian dilation `[[0, M], [M†, 0]]`. Small singular
/// values come out accurate to `ε‖M‖` rather than the `√ε‖M‖` of `M†M`.
pub fn singular_values(m: &ComplexMatrix) -> Result<Vec<f64>> {
    let n = m.dim();
    if 2 * n > MAX_DIM {
        return Err(Error::DimensionOverflow { dim: 2 * n });
    }
    let dilation = ComplexMatrix::from_fn(2 * n, |r, c| match (r < n, c < n) {
        (true, false) => m[(r, c - n)],
        (false, true) => m[(c, r - n)].conj(),
        _ => ZERO,
    });
    let values = hermitian_eigenvalues(&dilation)?;
    Ok(values[..n].iter().map(|v| v.max(0.0)).collect())
}

/// Number of singular values above `tol · σ_max` (0 for the zero matrix).
pub fn numerical_rank(singular_values: &[f64], tol: f64) -> usize {
    let max = singular_values.first().copied().unwrap_or(0.0);
    if max == 0.0 {
        return 0;
    }
    singular_values.iter().filter(|&&x| x > tol * max).count()
}

/// Right singular vectors (columns, by descending singular value) from `M†M`.
pub fn right_singular_vectors(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(hermitian_eigen(&(m.dagger() * *m).hermitian_part())?.vectors)
}

/// Moore–Penrose pseudo-inverse `Σ v_i (M v_i)† / ‖M v_i‖²` over the
/// singular directions kept by the relative cut `tol`.
pub fn pseudo_inverse(m: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix> {
    let n = m.dim();
    let rank = numerical_rank(&singular_values(m)?, tol);
    let right = right_singular_vectors(m)?;
    let mut pinv = ComplexMatrix::zeros(n);
    for i in 0..rank {
        let v = right.column(i);
        let mv = m.mul_vec(&v);
        let norm_sqr: f64 = mv.iter().map(|z| z.norm_sqr()).sum();
        pinv += ComplexMatrix::outer(&v, &mv) * (1.0 / norm_sqr);
    }
    Ok(pinv)
}

/// Kronecker product; `(A⊗B)[i·dB+k, j·dB+l] = A[i,j]·B[k,l]`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (da, db) = (a.dim(), b.dim());
    let n = da * db;
    if n > MAX_DIM {
        return Err(Error::DimensionOverflow { dim: n });
    }
    Ok(ComplexMatrix::from_fn(n, |r, c| a[(r / db, c / db)] * b[(r % db, c % db)]))
}

/// Kronecker product of two vectors.
pub fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

/// Row-stacking vectorization.
pub fn vec(m: &ComplexMatrix) -> Vec<C64> {
    m.entries().to_vec()
}

/// Inverse of [`vec`].
pub fn unvec(v: &[C64]) -> Result<ComplexMatrix> {
    ComplexMatrix::from_slice(v)
}

/// Partial trace over `subsystem` (0 = first factor, 1 = second) of an
/// operator on a `dims.0 ⊗ dims.1` space.
pub fn partial_trace(m: &ComplexMatrix, subsystem: usize, dims: (usize, usize)) -> Result<ComplexMatrix> {
    let (da, db) = dims;
    if da * db != m.dim() {
        return Err(Error::DimensionMismatch { expected: da * db, found: m.dim() });
    }
    match subsystem {
        0 => Ok(ComplexMatrix::from_fn(db, |b1, b2| {
            (0..da).map(|a| m[(a * db + b1, a * db + b2)]).sum()
        })),
        1 => Ok(ComplexMatrix::from_fn(da, |a1, a2| {
            (0..db).map(|b| m[(a1 * db + b, a2 * db + b)]).sum()
        })),
        other => Err(Error::InvalidParameter(format!("subsystem index {other} (expected 0 or 1)"))),
    }
}
