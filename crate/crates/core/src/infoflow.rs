// Copyright 2026 The qdiv Authors
// SPDX-License-Identifier: Apache-2.0

//! Distinguishability of evolved state pairs and the backflow hunter.
//!
//! For a pair `(ρ1, ρ2)` with weights `(p1, p2)` on `ancilla ⊗ system` the
//! tracked quantity is `N(t) = ‖(id ⊗ Λ_t)(p1ρ1 − p2ρ2)‖₁`, and its time
//! derivative `σ` is estimated by finite differences on the trajectory grid.
//! A positive `σ` is information flowing back into the system.
//!
//! Operators on `ancilla ⊗ system` use index `2a + s` (ancilla first).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{normalize, trace_norm, ComplexMatrix, C64};
use crate::propagation::MapTrajectory;
use crate::superop::Superoperator;
use crate::tol;

/// Haar-random unit vector in `Cⁿ`.
pub fn haar_ket(n: usize, rng: &mut impl Rng) -> Vec<C64> {
    let mut v: Vec<C64> = (0..n).map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
    normalize(&mut v);
    v
}

/// Random full-rank density matrix `GG†/Tr(GG†)`, `G` complex Gaussian.
pub fn random_density(n: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(n, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let rho = g * g.dagger();
    (rho * (1.0 / rho.trace().re)).hermitian_part()
}

fn check_density(rho: &ComplexMatrix, what: &str) -> Result<()> {
    if !rho.is_hermitian(tol::HERM) {
        return Err(Error::InvalidState(format!("{what} is not Hermitian")));
    }
    if (rho.trace() - C64::new(1.0, 0.0)).norm() > 1e-10 {
        return Err(Error::InvalidState(format!("{what} has trace {}", rho.trace())));
    }
    let lo = *crate::linalg::hermitian_eigenvalues(rho)?.last().expect("non-empty");
    if lo < -1e-10 {
        return Err(Error::InvalidState(format!("{what} has eigenvalue {lo:.3e}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatePair {
    pub rho1: ComplexMatrix,
    pub rho2: ComplexMatrix,
    pub p1: f64,
    pub p2: f64,
    pub ancilla_dim: usize,
}

impl StatePair {
    pub fn new(rho1: ComplexMatrix, rho2: ComplexMatrix, p1: f64, ancilla_dim: usize) -> Result<Self> {
        if !(1..=3).contains(&ancilla_dim) {
            return Err(Error::InvalidParameter(format!("ancilla dimension {ancilla_dim} not in 1..=3")));
        }
        if !(0.0..=1.0).contains(&p1) {
            return Err(Error::InvalidParameter(format!("p1 = {p1} is not a probability")));
        }
        let dim = 2 * ancilla_dim;
        for (rho, what) in [(&rho1, "rho1"), (&rho2, "rho2")] {
            if rho.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: rho.dim() });
            }
            check_density(rho, what)?;
        }
        Ok(Self { rho1, rho2, p1, p2: 1.0 - p1, ancilla_dim })
    }

    /// Unbiased pair of pure states.
    pub fn pure(psi1: &[C64], psi2: &[C64], ancilla_dim: usize) -> Result<Self> {
        Self::new(ComplexMatrix::outer(psi1, psi1), ComplexMatrix::outer(psi2, psi2), 0.5, ancilla_dim)
    }

    /// `p1ρ1 − p2ρ2`.
    pub fn difference(&self) -> ComplexMatrix {
        self.rho1 * self.p1 - self.rho2 * self.p2
    }

    /// `(ρ2, p2)` in the first slot.
    pub fn swapped(&self) -> Self {
        Self { rho1: self.rho2, rho2: self.rho1, p1: self.p2, p2: self.p1, ancilla_dim: self.ancilla_dim }
    }

    pub fn with_p1(&self, p1: f64) -> Self {
        Self { p1, p2: 1.0 - p1, ..self.clone() }
    }
}

/// `(id_d ⊗ S)(X)`, applied block by block.
pub fn apply_extended(s: &Superoperator, x: &ComplexMatrix, ancilla_dim: usize) -> ComplexMatrix {
    let n = 2 * ancilla_dim;
    assert_eq!(x.dim(), n, "operator does not match the ancilla dimension");
    if ancilla_dim == 1 {
        return s.apply(x);
    }
    let mut out = ComplexMatrix::zeros(n);
    for a in 0..ancilla_dim {
        for b in 0..ancilla_dim {
            let block = ComplexMatrix::from_fn(2, |i, j| x[(2 * a + i, 2 * b + j)]);
            let image = s.apply(&block);
            for i in 0..2 {
                for j in 0..2 {
                    out[(2 * a + i, 2 * b + j)] = image[(i, j)];
                }
            }
        }
    }
    out
}

/// `‖(id ⊗ Λ_t)(p1ρ1 − p2ρ2)‖₁` at a grid time.
pub fn biased_norm(traj: &MapTrajectory, pair: &StatePair, t: f64) -> Result<f64> {
    let k = traj.grid.index_of(t)?;
    trace_norm(&apply_extended(traj.map(k), &pair.difference(), pair.ancilla_dim))
}

/// `N(t_k)` at every grid point.
pub fn norm_curve(traj: &MapTrajectory, pair: &StatePair) -> Vec<f64> {
    let diff = pair.difference();
    traj.maps
        .iter()
        .map(|m| trace_norm(&apply_extended(m, &diff, pair.ancilla_dim)).expect("hermitian image"))
        .collect()
}

/// A derivative estimate, labelled with the weight and ancilla size used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowSample {
    pub t: f64,
    pub value: f64,
    pub p1: f64,
    pub ancilla_dim: usize,
}

/// `σ(t) ≈ (N(t+h) − N(t−h))/2h`; one-sided where `t ± h` leaves the grid.
pub fn sigma(traj: &MapTrajectory, pair: &StatePair, t: f64, h: f64) -> Result<FlowSample> {
    let resolution = traj.grid.resolution();
    if h < resolution * (1.0 - 1e-9) {
        return Err(Error::StepTooSmall { h, resolution });
    }
    let t_end = traj.grid.t_end();
    let n = |x: f64| biased_norm(traj, pair, x);
    let slack = 1e-12 * t_end.max(1.0);
    let value = if t - h < -slack {
        (n(t + h)? - n(t)?) / h
    } else if t + h > t_end + slack {
        (n(t)? - n(t - h)?) / h
    } else {
        (n(t + h)? - n(t - h)?) / (2.0 * h)
    };
    Ok(FlowSample { t, value, p1: pair.p1, ancilla_dim: pair.ancilla_dim })
}

/// Finite-difference derivative of `values` on `points`, never differencing
/// across a change of `ranks`; `NaN` where no admissible stencil exists.
pub fn derivative_on_grid(points: &[f64], values: &[f64], ranks: &[usize]) -> Vec<f64> {
    let n = points.len();
    (0..n)
        .map(|k| {
            let left = k > 0 && ranks[k - 1] == ranks[k];
            let right = k + 1 < n && ranks[k + 1] == ranks[k];
            match (left, right) {
                (true, true) => (values[k + 1] - values[k - 1]) / (points[k + 1] - points[k - 1]),
                (false, true) => (values[k + 1] - values[k]) / (points[k + 1] - points[k]),
                (true, false) => (values[k] - values[k - 1]) / (points[k] - points[k - 1]),
                (false, false) => f64::NAN,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct HuntConfig {
    pub n_pairs: usize,
    pub ancilla_dim: usize,
    /// Scan `p1 ∈ {0.1, …, 0.9}` instead of fixing `p1 = ½`.
    pub biased: bool,
    pub seed: u64,
    pub threshold: f64,
}

impl Default for HuntConfig {
    fn default() -> Self {
        Self { n_pairs: 100, ancilla_dim: 1, biased: false, seed: 0, threshold: tol::BACKFLOW }
    }
}

impl HuntConfig {
    pub fn weights(&self) -> Vec<f64> {
        if self.biased {
            (1..=9).map(|k| k as f64 / 10.0).collect()
        } else {
            vec![0.5]
        }
    }
}

/// Pair `index` of the stream for `seed`: two Haar-random pure states on
/// `ancilla ⊗ system`. Independent of evaluation order.
pub fn sample_pair(seed: u64, index: u64, ancilla_dim: usize) -> StatePair {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let n = 2 * ancilla_dim;
    let psi1 = haar_ket(n, &mut rng);
    let psi2 = haar_ket(n, &mut rng);
    StatePair::pure(&psi1, &psi2, ancilla_dim).expect("valid pure pair")
}

/// `σ` at one grid point for one sampled pair, maximized over the weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackflowRow {
    pub t: f64,
    pub sigma: f64,
    pub pair_id: usize,
    pub p1: f64,
}

#[derive(Debug, Clone)]
pub struct BackflowArgmax {
    pub t: f64,
    pub pair_id: usize,
    pub pair: StatePair,
}

#[derive(Debug, Clone)]
pub struct BackflowReport {
    pub max_sigma: f64,
    pub argmax: Option<BackflowArgmax>,
    /// Pair × weight × grid-point evaluations.
    pub samples_used: usize,
    pub threshold: f64,
    pub config: HuntConfig,
    /// One row per (pair, grid point), in pair-major order.
    pub rows: Vec<BackflowRow>,
}

impl BackflowReport {
    pub fn backflow_found(&self) -> bool {
        self.max_sigma > self.threshold
    }
}

fn scan_pair(traj: &MapTrajectory, ranks: &[usize], pair: &StatePair, weights: &[f64], pair_id: usize) -> Vec<BackflowRow> {
    let points = traj.grid.points();
    let images: Vec<(ComplexMatrix, ComplexMatrix)> = traj
        .maps
        .iter()
        .map(|m| (apply_extended(m, &pair.rho1, pair.ancilla_dim), apply_extended(m, &pair.rho2, pair.ancilla_dim)))
        .collect();
    let mut rows: Vec<BackflowRow> =
        points.iter().map(|&t| BackflowRow { t, sigma: f64::NAN, pair_id, p1: weights[0] }).collect();
    for &p1 in weights {
        let norms: Vec<f64> = images
            .iter()
            .map(|(a, b)| trace_norm(&(*a * p1 - *b * (1.0 - p1))).expect("hermitian image"))
            .collect();
        for (row, s) in rows.iter_mut().zip(derivative_on_grid(points, &norms, ranks)) {
            if s.is_finite() && !(row.sigma >= s) {
                row.sigma = s;
                row.p1 = p1;
            }
        }
    }
    rows
}

/// Randomized search for `σ > threshold` over sampled pairs, weights and
/// grid times. Deterministic for a fixed seed, whatever the thread count.
pub fn hunt_backflow(traj: &MapTrajectory, config: &HuntConfig) -> Result<BackflowReport> {
    if !(1..=3).contains(&config.ancilla_dim) {
        return Err(Error::InvalidParameter(format!("ancilla dimension {} not in 1..=3", config.ancilla_dim)));
    }
    let weights = config.weights();
    let ranks = traj.ranks(tol::RANK);
    let per_pair: Vec<Vec<BackflowRow>> = (0..config.n_pairs)
        .into_par_iter()
        .map(|i| scan_pair(traj, &ranks, &sample_pair(config.seed, i as u64, config.ancilla_dim), &weights, i))
        .collect();
    let rows: Vec<BackflowRow> = per_pair.into_iter().flatten().collect();
    let mut best: Option<&BackflowRow> = None;
    for row in rows.iter().filter(|r| r.sigma.is_finite()) {
        if best.map_or(true, |b| row.sigma > b.sigma) {
            best = Some(row);
        }
    }
    let (max_sigma, argmax) = match best {
        Some(r) => (
            r.sigma,
            Some(BackflowArgmax {
                t: r.t,
                pair_id: r.pair_id,
                pair: sample_pair(config.seed, r.pair_id as u64, config.ancilla_dim).with_p1(r.p1),
            }),
        ),
        None => (f64::NEG_INFINITY, None),
    };
    Ok(BackflowReport {
        max_sigma,
        argmax,
        samples_used: config.n_pairs * weights.len() * traj.grid.len(),
        threshold: config.threshold,
        config: config.clone(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{ket, kron};
    use crate::models::{PauliModel, RateFn};
    use crate::propagation::{analytic, TimeGrid};

    fn plus_minus() -> StatePair {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let p = [C64::new(s, 0.0), C64::new(s, 0.0)];
        let m = [C64::new(s, 0.0), C64::new(-s, 0.0)];
        StatePair::pure(&p, &m, 1).unwrap()
    }

    #[test]
    fn extended_application_matches_kron() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = crate::superop::random_channel(&mut rng);
        let a = random_density(2, &mut rng);
        let b = random_density(2, &mut rng);
        let x = kron(&a, &b).unwrap();
        assert!(apply_extended(&s, &x, 2).max_diff(&kron(&a, &s.apply(&b)).unwrap()) < 1e-14);
    }

    #[test]
    fn orthogonal_pair_at_zero() {
        let traj = analytic(&PauliModel::constant(1.0, 1.0, 1.0), &TimeGrid::uniform(1.0, 10).unwrap()).unwrap();
        let pair = StatePair::pure(&ket(2, 0), &ket(2, 1), 1).unwrap();
        assert!((biased_norm(&traj, &pair, 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(biased_norm(&traj, &pair, 0.05), Err(Error::OffGridTime { .. })));
        assert!(matches!(sigma(&traj, &pair, 0.5, 0.01), Err(Error::StepTooSmall { .. })));
    }

    #[test]
    fn dephasing_backflow_closed_form() {
        // γ3 = −sin t, γ1 = γ2 = 0: the σ1 eigenvalue is e^{−Γ3} with
        // Γ3 = cos t − 1, so N(t) = e^{1 − cos t} for the unbiased pair
        // and σ(t) = sin t · N(t).
        let model = PauliModel::new(RateFn::zero(), RateFn::zero(), RateFn::Sin { amp: -1.0, freq: 1.0 });
        let grid = TimeGrid::uniform(2.0 * std::f64::consts::PI, 2000).unwrap();
        let traj = analytic(&model, &grid).unwrap();
        let h = grid.resolution();
        let t = grid.points()[1500];
        let s = sigma(&traj, &plus_minus(), t, h).unwrap();
        let exact = t.sin() * (1.0 - t.cos()).exp();
        assert!((s.value - exact).abs() < 1e-4, "{} vs {exact}", s.value);
        assert!(t > std::f64::consts::PI && s.value < 0.0);
        // Backflow happens on (0, π): N grows while γ3 < 0.
        let t = grid.points()[500];
        assert!(sigma(&traj, &plus_minus(), t, h).unwrap().value > 0.1);
    }

    #[test]
    fn sigma_richardson_consistency() {
        let model = PauliModel::new(RateFn::Constant(0.3), RateFn::zero(), RateFn::Sin { amp: -1.0, freq: 1.0 });
        let traj = analytic(&model, &TimeGrid::uniform(4.0, 4000).unwrap()).unwrap();
        let pair = plus_minus();
        let h = 0.04;
        let a = sigma(&traj, &pair, 1.0, h).unwrap().value;
        let b = sigma(&traj, &pair, 1.0, h / 2.0).unwrap().value;
        // Central differences: the gap between h and h/2 shrinks like h².
        assert!((a - b).abs() < h * h, "{a} vs {b}");
        let c = sigma(&traj, &pair, 1.0, h / 4.0).unwrap().value;
        let ratio = (a - b) / (b - c);
        assert!((ratio - 4.0).abs() < 0.5, "ratio {ratio}");
    }

    #[test]
    fn hunt_is_deterministic_and_finds_known_backflow() {
        let model = PauliModel::new(RateFn::zero(), RateFn::zero(), RateFn::Sin { amp: -1.0, freq: 1.0 });
        let traj = analytic(&model, &TimeGrid::uniform(6.0, 200).unwrap()).unwrap();
        let cfg = HuntConfig { n_pairs: 20, seed: 9, ..Default::default() };
        let a = hunt_backflow(&traj, &cfg).unwrap();
        let b = hunt_backflow(&traj, &cfg).unwrap();
        assert_eq!(a.max_sigma, b.max_sigma);
        assert_eq!(a.rows, b.rows);
        assert!(a.backflow_found());
        assert_eq!(a.rows.len(), 20 * 201);
        assert_eq!(sample_pair(9, 3, 2), sample_pair(9, 3, 2));
        assert_ne!(sample_pair(9, 3, 2), sample_pair(9, 4, 2));
    }

    #[test]
    fn rank_changes_are_not_differenced_across() {
        let ranks = [4, 4, 2, 2];
        let d = derivative_on_grid(&[0.0, 1.0, 2.0, 3.0], &[1.0, 0.9, 0.0, 0.0], &ranks);
        assert!((d[1] + 0.1).abs() < 1e-15);
        assert_eq!(d[2], 0.0);
        let d = derivative_on_grid(&[0.0, 1.0, 2.0], &[1.0, 0.5, 0.5], &[4, 2, 1]);
        assert!(d[1].is_nan());
    }
}
