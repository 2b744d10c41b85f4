// Copyright 2026 The qdiv Authors
// SPDX-License-Identifier: Apache-2.0

//! Trajectories of maps, inter-time propagators and divisibility.
//!
//! [`integrate`] solves `dΛ/dt = L_t Λ` with a fourth-order commutator-free
//! exponential integrator. [`propagator`] builds `V_{t,s}` with
//! `Λ_t = V_{t,s} Λ_s`, also when `Λ_s` has lost rank, and [`classify`] turns
//! the interval propagators of a trajectory into a divisibility verdict.

use std::fmt;

use rayon::prelude::*;

use crate::certify;
use crate::csv;
use crate::error::{Error, Result};
use crate::linalg::{self, hermitian_eigen, ComplexMatrix, C64};
use crate::models::Dynamics;
use crate::superop::{self, PureStateSample, RankProfile, Superoperator};
use crate::tol;

#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    points: Vec<f64>,
}

impl TimeGrid {
    /// `steps + 1` equally spaced points on `[0, t_end]`.
    pub fn uniform(t_end: f64, steps: usize) -> Result<Self> {
        if !(t_end.is_finite() && t_end > 0.0) {
            return Err(Error::InvalidParameter(format!("t_end = {t_end} must be positive")));
        }
        if steps == 0 {
            return Err(Error::InvalidParameter("a grid needs at least one step".into()));
        }
        let mut points: Vec<f64> = (0..=steps).map(|k| t_end * k as f64 / steps as f64).collect();
        points[steps] = t_end;
        Ok(Self { points })
    }

    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 || points[0] != 0.0 {
            return Err(Error::InvalidParameter("grid must start at 0 and have at least two points".into()));
        }
        if points.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(Error::InvalidParameter("grid points must be finite and strictly increasing".into()));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn t_end(&self) -> f64 {
        *self.points.last().expect("non-empty grid")
    }

    /// Smallest spacing between neighbouring points.
    pub fn resolution(&self) -> f64 {
        self.points.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }

    fn slack(&self) -> f64 {
        1e-9 * self.resolution()
    }

    /// Index of the grid point `t`; there is no interpolation.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let k = self.points.partition_point(|&x| x < t - self.slack());
        if k < self.points.len() && (self.points[k] - t).abs() <= self.slack() {
            Ok(k)
        } else {
            Err(Error::OffGridTime { t })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectorySource {
    Integrated,
    Analytic,
    /// Integrated before `switch_index`, closed form from it on.
    Assembled { switch_index: usize },
}

impl fmt::Display for TrajectorySource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrajectorySource::Integrated => write!(f, "integrated"),
            TrajectorySource::Analytic => write!(f, "analytic"),
            TrajectorySource::Assembled { switch_index } => write!(f, "assembled(switch at index {switch_index})"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MapTrajectory {
    pub grid: TimeGrid,
    pub maps: Vec<Superoperator>,
    pub source: TrajectorySource,
}

impl MapTrajectory {
    pub fn map(&self, k: usize) -> &Superoperator {
        &self.maps[k]
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    /// Numerical rank of every map.
    pub fn ranks(&self, tol_rank: f64) -> Vec<usize> {
        self.maps
            .iter()
            .map(|m| linalg::numerical_rank(&superop::singular_values(m), tol_rank))
            .collect()
    }

    /// `S ∘ Λ_t` at every grid point.
    pub fn post_compose(&self, s: &Superoperator) -> MapTrajectory {
        MapTrajectory { grid: self.grid.clone(), maps: self.maps.iter().map(|m| s.compose(m)).collect(), source: self.source }
    }

    /// Largest entrywise distance between two trajectories on the same grid.
    pub fn max_diff(&self, other: &MapTrajectory) -> f64 {
        self.maps.iter().zip(&other.maps).map(|(a, b)| a.max_diff(b)).fold(0.0, f64::max)
    }
}

const SQRT3_6: f64 = 0.288_675_134_594_812_9;
const ALPHA1: f64 = 0.25 + SQRT3_6;
const ALPHA2: f64 = 0.25 - SQRT3_6;

/// One fourth-order commutator-free step from `t0` to `t0 + h`: two
/// generator evaluations at the Gauss nodes, two exponentials.
pub fn cf4_step(dynamics: &dyn Dynamics, t0: f64, h: f64) -> Result<Superoperator> {
    let l1 = dynamics.generator(t0 + (0.5 - SQRT3_6) * h)?;
    let l2 = dynamics.generator(t0 + (0.5 + SQRT3_6) * h)?;
    let first = (l1.scale(ALPHA1) + l2.scale(ALPHA2)).scale(h);
    let second = (l1.scale(ALPHA2) + l2.scale(ALPHA1)).scale(h);
    let e1 = Superoperator::from_matrix(first.matrix().expm())?;
    let e2 = Superoperator::from_matrix(second.matrix().expm())?;
    Ok(e2.compose(&e1))
}

/// Largest `h‖L‖₁` admitted for a single exponential step.
pub const MAX_STEP_NORM: f64 = 0.1;

/// Advances across one grid interval, splitting it into equal substeps when
/// the generator is large there (near a divergent rate).
fn interval_step(dynamics: &dyn Dynamics, t0: f64, h: f64) -> Result<Superoperator> {
    let scale = dynamics.generator(t0 + 0.5 * h)?.matrix().one_norm().max(
        dynamics.generator(t0 + (0.5 + SQRT3_6) * h)?.matrix().one_norm(),
    );
    let n = ((h * scale / MAX_STEP_NORM).ceil() as usize).clamp(1, 100_000);
    let dh = h / n as f64;
    let mut out = Superoperator::identity();
    for k in 0..n {
        out = cf4_step(dynamics, t0 + k as f64 * dh, dh)?.compose(&out);
    }
    Ok(out)
}

fn check_steps(dynamics: &dyn Dynamics, points: &[f64]) -> Result<()> {
    for at in dynamics.singular_times() {
        for w in points.windows(2) {
            let slack = 1e-9 * (w[1] - w[0]);
            if w[0] + slack < at && at < w[1] - slack {
                return Err(Error::RateBlowUpInsideStep { from: w[0], to: w[1], at });
            }
        }
    }
    Ok(())
}

fn integrate_points(dynamics: &dyn Dynamics, points: &[f64]) -> Result<Vec<Superoperator>> {
    check_steps(dynamics, points)?;
    let mut maps = Vec::with_capacity(points.len());
    let mut current = Superoperator::identity();
    maps.push(current);
    for w in points.windows(2) {
        current = interval_step(dynamics, w[0], w[1] - w[0])?.compose(&current);
        let deviation = current.tp_defect();
        if deviation > tol::TP_DRIFT {
            return Err(Error::NonTpDrift { t: w[1], deviation });
        }
        maps.push(current);
    }
    Ok(maps)
}

/// Time-ordered exponential of the generator on the grid.
pub fn integrate(dynamics: &dyn Dynamics, grid: &TimeGrid) -> Result<MapTrajectory> {
    let maps = integrate_points(dynamics, grid.points())?;
    Ok(MapTrajectory { grid: grid.clone(), maps, source: TrajectorySource::Integrated })
}

/// Closed-form maps on the grid.
pub fn analytic(dynamics: &dyn Dynamics, grid: &TimeGrid) -> Result<MapTrajectory> {
    let maps = grid.points().iter().map(|&t| dynamics.map(t)).collect::<Result<Vec<_>>>()?;
    Ok(MapTrajectory { grid: grid.clone(), maps, source: TrajectorySource::Analytic })
}

/// Integrates up to the last grid point before the first singular time and
/// switches to the closed form from the singular time on. The singular
/// time must be a grid point.
pub fn assemble(dynamics: &dyn Dynamics, grid: &TimeGrid) -> Result<MapTrajectory> {
    check_steps(dynamics, grid.points())?;
    let first = dynamics.singular_times().into_iter().find(|&s| s > 0.0 && s <= grid.t_end());
    let Some(at) = first else {
        return integrate(dynamics, grid);
    };
    let switch_index = grid.index_of(at)?;
    let mut maps = integrate_points(dynamics, &grid.points()[..switch_index])?;
    for &t in &grid.points()[switch_index..] {
        maps.push(dynamics.map(t)?);
    }
    Ok(MapTrajectory { grid: grid.clone(), maps, source: TrajectorySource::Assembled { switch_index } })
}

#[derive(Debug, Clone)]
pub struct Propagator {
    pub v: Superoperator,
    /// Rank profile of `Λ_s`; its image is where `v` is meaningful.
    pub domain: RankProfile,
    pub kernel_ok: bool,
    /// `max ‖Λ_t k‖ / ‖Λ_t‖` over unit kernel vectors `k` of `Λ_s`.
    pub kernel_leak: f64,
}

impl Propagator {
    /// Largest trace defect of `v` on an orthonormal basis of the domain.
    pub fn tp_defect_on_domain(&self) -> f64 {
        self.domain
            .image_basis
            .iter()
            .map(|b| (self.v.apply(b).trace() - b.trace()).norm())
            .fold(0.0, f64::max)
    }
}

/// `V_{t,s}` between grid indices `s ≤ t`.
///
/// For invertible `Λ_s` this is `Λ_t Λ_s⁻¹`. Otherwise the kernel of `Λ_s`
/// must be annihilated by `Λ_t` and `V = Λ_t Λ_s⁺`, which acts as the
/// propagator on `Im Λ_s` and as zero on its orthogonal complement.
pub fn propagator(traj: &MapTrajectory, s_index: usize, t_index: usize, tol_rank: f64) -> Result<Propagator> {
    if s_index > t_index || t_index >= traj.len() {
        return Err(Error::InvalidParameter(format!("bad interval indices ({s_index}, {t_index})")));
    }
    let (ls, lt) = (traj.map(s_index), traj.map(t_index));
    let domain = superop::rank_profile(ls, tol_rank)?;
    if domain.is_invertible() {
        if let Ok(inv) = ls.inverse() {
            return Ok(Propagator { v: lt.compose(&inv), domain, kernel_ok: true, kernel_leak: 0.0 });
        }
    }
    let scale = superop::singular_values(lt)[0].max(f64::MIN_POSITIVE);
    let kernel_leak = domain
        .kernel_basis
        .iter()
        .map(|k| lt.apply(k).frobenius_norm() / scale)
        .fold(0.0, f64::max);
    let kernel_ok = kernel_leak <= tol_rank;
    if !kernel_ok {
        let grid = traj.grid.points();
        return Err(Error::NotDivisible { s: grid[s_index], t: grid[t_index] });
    }
    let v = lt.compose(&superop::pseudo_inverse(ls, tol_rank));
    Ok(Propagator { v, domain, kernel_ok, kernel_leak })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyTolerances {
    pub rank: f64,
    pub cp: f64,
    pub tp_domain: f64,
}

impl Default for ClassifyTolerances {
    fn default() -> Self {
        Self { rank: tol::RANK, cp: tol::CP, tp_domain: tol::TP_DOMAIN }
    }
}

/// How the CP verdict of an interval was reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CpMethod {
    /// Choi matrix of the invertible-domain propagator.
    Choi,
    /// Two-state extendability on the extreme image pair.
    TwoState,
    /// One-dimensional domain: a replacement channel always extends.
    Trivial,
    /// Three-dimensional domain: Choi matrix of the zero-extension (an
    /// upper bound on failure only, flagged in reports).
    ChoiOfExtension,
    /// The kernel condition failed; nothing else was evaluated.
    KernelFailure,
}

impl fmt::Display for CpMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CpMethod::Choi => "choi",
            CpMethod::TwoState => "two-state",
            CpMethod::Trivial => "trivial",
            CpMethod::ChoiOfExtension => "choi-of-extension",
            CpMethod::KernelFailure => "kernel-failure",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum Witness {
    /// Eigenvector of the negative Choi eigenvalue.
    ChoiEigenvector(Vec<C64>),
    /// Pure input whose image has a negative eigenvalue.
    NonPositiveState(ComplexMatrix),
    /// Weight ratio at which the two-state test fails.
    TwoStateDelta(f64),
    /// Relative image norm of a kernel vector of `Λ_s` under `Λ_t`.
    KernelLeak(f64),
}

#[derive(Debug, Clone)]
pub struct IntervalRecord {
    pub s: f64,
    pub t: f64,
    pub s_index: usize,
    pub t_index: usize,
    pub domain_rank: usize,
    pub kernel_ok: bool,
    pub tp_on_domain: bool,
    pub cp: bool,
    pub p_div: bool,
    /// Smallest Choi eigenvalue of `V` (of the zero-extension off an invertible domain).
    pub min_choi_eig: f64,
    pub au_margin: Option<f64>,
    pub method: CpMethod,
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    CpDivisible,
    PDivisibleOnly,
    DivisibleNotP,
    NotDivisible,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Verdict::CpDivisible => "CP-divisible",
            Verdict::PDivisibleOnly => "P-divisible-only",
            Verdict::DivisibleNotP => "divisible-not-P",
            Verdict::NotDivisible => "not-divisible",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
pub struct DivisibilityReport {
    pub intervals: Vec<IntervalRecord>,
    pub verdict: Verdict,
    /// First grid point whose map is numerically singular.
    pub first_non_invertible: Option<(usize, f64)>,
}

impl DivisibilityReport {
    pub fn first_non_cp(&self) -> Option<&IntervalRecord> {
        self.intervals.iter().find(|r| !r.cp)
    }

    pub fn min_choi_eig(&self) -> f64 {
        self.intervals
            .iter()
            .filter(|r| r.method == CpMethod::Choi)
            .map(|r| r.min_choi_eig)
            .fold(f64::INFINITY, f64::min)
    }
}

fn bloch_transfer(s: &Superoperator) -> ComplexMatrix {
    let r = s.pauli_transfer();
    ComplexMatrix::from_fn(3, |i, j| C64::new(r[i + 1][j + 1], 0.0))
}

/// Pure inputs `(𝟙 ± v̂·σ)/2` along the top right singular vector of the
/// Bloch matrix of `Λ_s`; their images span the end points of the image segment.
fn extreme_inputs(ls: &Superoperator) -> [ComplexMatrix; 2] {
    let t = bloch_transfer(ls);
    let e = hermitian_eigen(&(t.dagger() * t).hermitian_part()).expect("symmetric");
    let v: Vec<f64> = e.vector(0).iter().map(|z| z.re).collect();
    let mut axis = ComplexMatrix::zeros(2);
    for (k, x) in v.iter().enumerate() {
        axis += linalg::pauli(k + 1) * *x;
    }
    let id = linalg::pauli(0);
    [(id + axis) * 0.5, (id - axis) * 0.5]
}

fn classify_interval(traj: &MapTrajectory, k: usize, tols: &ClassifyTolerances) -> IntervalRecord {
    let grid = traj.grid.points();
    let mut rec = IntervalRecord {
        s: grid[k],
        t: grid[k + 1],
        s_index: k,
        t_index: k + 1,
        domain_rank: 0,
        kernel_ok: false,
        tp_on_domain: false,
        cp: false,
        p_div: false,
        min_choi_eig: f64::NAN,
        au_margin: None,
        method: CpMethod::KernelFailure,
        witness: None,
    };
    let prop = match propagator(traj, k, k + 1, tols.rank) {
        Ok(p) => p,
        Err(_) => {
            rec.domain_rank = superop::rank_profile(traj.map(k), tols.rank).map(|r| r.rank).unwrap_or(0);
            let lt = traj.map(k + 1);
            let leak = superop::rank_profile(traj.map(k), tols.rank)
                .map(|d| d.kernel_basis.iter().map(|b| lt.apply(b).frobenius_norm()).fold(0.0, f64::max))
                .unwrap_or(f64::NAN);
            rec.witness = Some(Witness::KernelLeak(leak));
            return rec;
        }
    };
    rec.domain_rank = prop.domain.rank;
    rec.kernel_ok = prop.kernel_ok;
    rec.tp_on_domain = prop.tp_defect_on_domain() <= tols.tp_domain;
    // Errors in Λ_s reach V amplified by its condition number.
    let sv = prop.domain.singular_values;
    let tol_cp = if prop.domain.is_invertible() { tols.cp * (sv[0] / sv[3]).max(1.0) } else { tols.cp };
    let choi = superop::is_cp(&prop.v, tol_cp);
    rec.min_choi_eig = choi.min_eigenvalue;
    match prop.domain.rank {
        4 => {
            rec.method = CpMethod::Choi;
            let pos = superop::is_positive_map(&prop.v, PureStateSample::standard(), tol_cp);
            rec.cp = choi.cp && rec.tp_on_domain;
            rec.p_div = pos.positive && rec.tp_on_domain;
            if !pos.positive {
                rec.witness = Some(Witness::NonPositiveState(pos.worst_state));
            } else if !choi.cp {
                rec.witness = Some(Witness::ChoiEigenvector(choi.witness));
            }
        }
        2 => {
            let inputs = extreme_inputs(traj.map(k));
            let images = [traj.map(k).apply(&inputs[0]), traj.map(k).apply(&inputs[1])];
            let outputs = [traj.map(k + 1).apply(&inputs[0]), traj.map(k + 1).apply(&inputs[1])];
            match certify::extendability(images, outputs) {
                Ok(v) => {
                    rec.method = CpMethod::TwoState;
                    rec.au_margin = Some(v.margin);
                    rec.cp = v.feasible && rec.tp_on_domain;
                    if !v.feasible {
                        rec.witness = Some(Witness::TwoStateDelta(v.worst_delta));
                    }
                }
                Err(_) => {
                    rec.method = CpMethod::Trivial;
                    rec.cp = rec.tp_on_domain;
                }
            }
            // For qubit pairs the two-state condition is also the positivity condition.
            rec.p_div = rec.cp;
        }
        1 => {
            rec.method = CpMethod::Trivial;
            rec.cp = rec.tp_on_domain;
            rec.p_div = rec.cp;
        }
        _ => {
            rec.method = CpMethod::ChoiOfExtension;
            let pos = superop::is_positive_map(&prop.v, PureStateSample::standard(), tols.cp);
            rec.cp = choi.cp && rec.tp_on_domain;
            rec.p_div = pos.positive && rec.tp_on_domain;
            if !choi.cp {
                rec.witness = Some(Witness::ChoiEigenvector(choi.witness));
            }
        }
    }
    rec
}

/// Classifies every consecutive interval of the trajectory.
pub fn classify(traj: &MapTrajectory, tols: &ClassifyTolerances) -> DivisibilityReport {
    let intervals: Vec<IntervalRecord> =
        (0..traj.len().saturating_sub(1)).into_par_iter().map(|k| classify_interval(traj, k, tols)).collect();
    let verdict = if intervals.iter().any(|r| !r.kernel_ok) {
        Verdict::NotDivisible
    } else if intervals.iter().all(|r| r.cp) {
        Verdict::CpDivisible
    } else if intervals.iter().all(|r| r.p_div) {
        Verdict::PDivisibleOnly
    } else {
        Verdict::DivisibleNotP
    };
    let ranks = traj.ranks(tols.rank);
    let first_non_invertible = ranks.iter().position(|&r| r < 4).map(|k| (k, traj.grid.points()[k]));
    DivisibilityReport { intervals, verdict, first_non_invertible }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageEntry {
    pub t: f64,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageProfile {
    pub entries: Vec<ImageEntry>,
    /// `Im Λ_{t_{k+1}} ⊆ Im Λ_{t_k}` for every `k`.
    pub non_increasing: bool,
    /// Time at which the inclusion first fails.
    pub first_violation: Option<f64>,
}

impl ImageProfile {
    pub fn dims(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.dim).collect()
    }
}

pub fn image_profile(traj: &MapTrajectory, tol_rank: f64) -> Result<ImageProfile> {
    let profiles = traj.maps.iter().map(|m| superop::rank_profile(m, tol_rank)).collect::<Result<Vec<_>>>()?;
    let entries = traj
        .grid
        .points()
        .iter()
        .zip(&profiles)
        .map(|(&t, p)| ImageEntry { t, dim: p.rank })
        .collect();
    let mut first_violation = None;
    for (k, w) in profiles.windows(2).enumerate() {
        let contained = w[1].image_basis.iter().all(|b| w[0].image_residual(b) < tol::SUBSPACE);
        if !contained {
            first_violation = Some(traj.grid.points()[k + 1]);
            break;
        }
    }
    Ok(ImageProfile { entries, non_increasing: first_violation.is_none(), first_violation })
}

#[derive(Debug, Clone)]
pub struct LimitProjector {
    pub projector: Superoperator,
    /// Distance between the last two extrapolants.
    pub residual: f64,
    pub idempotent_defect: f64,
    pub min_choi_eig: f64,
}

/// `lim_{ε→0} Λ_{t1} Λ_{t1−ε}⁻¹`, Richardson-extrapolated from
/// `ε ∈ {1e-2, 1e-3, 1e-4}·t1`.
pub fn limit_projector(dynamics: &dyn Dynamics, t1: f64) -> Result<LimitProjector> {
    if !(t1 > 0.0) {
        return Err(Error::InvalidParameter(format!("t1 = {t1} must be positive")));
    }
    let lt = dynamics.map(t1)?;
    let v = |eps: f64| -> Result<Superoperator> { Ok(lt.compose(&dynamics.map(t1 - eps * t1)?.inverse()?)) };
    let (v1, v2, v3) = (v(1e-2)?, v(1e-3)?, v(1e-4)?);
    let r1 = (v2.scale(10.0) - v1).scale(1.0 / 9.0);
    let r2 = (v3.scale(10.0) - v2).scale(1.0 / 9.0);
    let projector = (r2.scale(100.0) - r1).scale(1.0 / 99.0);
    Ok(LimitProjector {
        projector,
        residual: projector.max_diff(&r2),
        idempotent_defect: projector.compose(&projector).max_diff(&projector),
        min_choi_eig: superop::is_cp(&projector, tol::CP).min_eigenvalue,
    })
}

/// CSV header of [`trajectory_csv`].
pub fn trajectory_header() -> String {
    let mut fields = vec!["t".to_string()];
    for r in 0..4 {
        for c in 0..4 {
            fields.push(format!("m{r}{c}_re"));
            fields.push(format!("m{r}{c}_im"));
        }
    }
    fields.push("rank".into());
    fields.push("interval_min_choi_eig".into());
    csv::record(fields)
}

/// One line per grid point: `t`, the 16 matrix entries (re/im interleaved),
/// the rank, and the smallest Choi eigenvalue of the interval ending there
/// (`nan` at `t = 0`).
pub fn trajectory_csv(traj: &MapTrajectory, report: Option<&DivisibilityReport>, tol_rank: f64) -> String {
    let ranks = traj.ranks(tol_rank);
    let mut out = trajectory_header();
    out.push('\n');
    for (k, m) in traj.maps.iter().enumerate() {
        let mut fields = vec![csv::float(traj.grid.points()[k])];
        for z in m.matrix().entries() {
            fields.push(csv::float(z.re));
            fields.push(csv::float(z.im));
        }
        fields.push(ranks[k].to_string());
        let eig = match (k, report) {
            (0, _) | (_, None) => f64::NAN,
            (_, Some(r)) => r.intervals[k - 1].min_choi_eig,
        };
        fields.push(csv::float(eig));
        out.push_str(&csv::record(fields));
        out.push('\n');
    }
    out
}

/// Column-stochastic `d × d` matrix, `d ≤ 3`.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix {
    d: usize,
    entries: Vec<f64>,
}

impl StochasticMatrix {
    /// Row-major entries; every column must be a probability vector.
    pub fn new(d: usize, entries: Vec<f64>) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(Error::NotStochasticInput(format!("dimension {d} not in 1..=3")));
        }
        if entries.len() != d * d {
            return Err(Error::NotStochasticInput(format!("{} entries for a {d}x{d} matrix", entries.len())));
        }
        if let Some(x) = entries.iter().find(|x| !x.is_finite() || **x < -tol::STOCHASTIC) {
            return Err(Error::NotStochasticInput(format!("entry {x} is negative or not finite")));
        }
        for j in 0..d {
            let sum: f64 = (0..d).map(|i| entries[i * d + j]).sum();
            if (sum - 1.0).abs() > tol::STOCHASTIC {
                return Err(Error::NotStochasticInput(format!("column {j} sums to {sum}")));
            }
        }
        Ok(Self { d, entries })
    }

    pub fn identity(d: usize) -> Self {
        let entries = (0..d * d).map(|k| if k / d == k % d { 1.0 } else { 0.0 }).collect();
        Self { d, entries }
    }

    /// Columns drawn uniformly from the simplex.
    pub fn random(d: usize, rng: &mut impl rand::Rng) -> Self {
        let mut entries = vec![0.0; d * d];
        for j in 0..d {
            let w: Vec<f64> = (0..d).map(|_| -rng.random::<f64>().max(f64::MIN_POSITIVE).ln()).collect();
            let s: f64 = w.iter().sum();
            for i in 0..d {
                entries[i * d + j] = w[i] / s;
            }
        }
        Self { d, entries }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.d + j]
    }

    pub fn mul(&self, other: &Self) -> Self {
        let d = self.d;
        let entries = (0..d * d)
            .map(|k| (0..d).map(|m| self.get(k / d, m) * other.get(m, k % d)).sum())
            .collect();
        Self { d, entries }
    }

    pub fn power(&self, n: usize) -> Self {
        (0..n).fold(Self::identity(self.d), |acc, _| self.mul(&acc))
    }

    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        (0..self.d).map(|i| (0..self.d).map(|j| self.get(i, j) * p[j]).sum()).collect()
    }

    fn as_complex(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.d, |i, j| C64::new(self.get(i, j), 0.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalVerdict {
    /// Every intermediate step is a stochastic matrix.
    pub p_div: bool,
    /// `‖T_t(x p1 − (1−x) p2)‖₁` never increases on the test grid.
    pub contraction_ok: bool,
    pub agree: bool,
    /// First step `k → k+1` at which divisibility fails.
    pub first_failure: Option<usize>,
}

fn l1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

fn simplex_grid(d: usize) -> Vec<Vec<f64>> {
    let n = 4;
    let mut out = Vec::new();
    match d {
        1 => out.push(vec![1.0]),
        2 => out.extend((0..=n).map(|a| vec![a as f64 / n as f64, 1.0 - a as f64 / n as f64])),
        _ => {
            for a in 0..=n {
                for b in 0..=n - a {
                    let (x, y) = (a as f64 / n as f64, b as f64 / n as f64);
                    out.push(vec![x, y, 1.0 - x - y]);
                }
            }
        }
    }
    out
}

/// One step `T_k → T_{k+1}`: does a stochastic `S` with `S T_k = T_{k+1}` exist?
fn classical_step_ok(a: &StochasticMatrix, b: &StochasticMatrix) -> Result<bool> {
    let d = a.d;
    let (ma, mb) = (a.as_complex(), b.as_complex());
    let sv = linalg::singular_values(&ma)?;
    let rank = linalg::numerical_rank(&sv, tol::RANK);
    if rank == d {
        let inv = ma.inverse()?;
        let s = mb * inv;
        let cond = ma.one_norm() * inv.one_norm();
        let tol_entry = tol::STOCHASTIC * cond.max(1.0);
        let entries_ok = (0..d).all(|i| (0..d).all(|j| s[(i, j)].re >= -tol_entry));
        let columns_ok = (0..d).all(|j| ((0..d).map(|i| s[(i, j)].re).sum::<f64>() - 1.0).abs() <= tol_entry);
        return Ok(entries_ok && columns_ok);
    }
    // Kernel of T_k must be annihilated by T_{k+1}.
    let right = linalg::right_singular_vectors(&ma)?;
    let scale = linalg::singular_values(&mb)?[0].max(f64::MIN_POSITIVE);
    for j in rank..d {
        if l1(&mb.mul_vec(&right.column(j)).iter().map(|z| z.norm()).collect::<Vec<_>>()) / scale > tol::RANK {
            return Ok(false);
        }
    }
    if rank == 1 {
        return Ok(true);
    }
    // Rank 2: the columns lie on a segment; test the end points with the
    // dichotomy criterion ‖a1 − δa2‖₁ ≥ ‖b1 − δb2‖₁.
    let col = |m: &StochasticMatrix, j: usize| (0..d).map(|i| m.get(i, j)).collect::<Vec<f64>>();
    let mut ends = (0, 1);
    let mut widest = -1.0;
    for i in 0..d {
        for j in i + 1..d {
            let w = l1(&col(a, i).iter().zip(col(a, j)).map(|(x, y)| x - y).collect::<Vec<_>>());
            if w > widest {
                widest = w;
                ends = (i, j);
            }
        }
    }
    let (a1, a2, b1, b2) = (col(a, ends.0), col(a, ends.1), col(b, ends.0), col(b, ends.1));
    let margin = |delta: f64| {
        let lhs = l1(&a1.iter().zip(&a2).map(|(x, y)| x - delta * y).collect::<Vec<_>>());
        let rhs = l1(&b1.iter().zip(&b2).map(|(x, y)| x - delta * y).collect::<Vec<_>>());
        lhs - rhs
    };
    Ok(certify::minimize_over_delta(margin).1 >= -tol::AU_MARGIN)
}

/// Divisibility of a chain of stochastic matrices, by construction of the
/// intermediate maps and by L1 contraction; the two must agree.
pub fn classical_pdiv(chain: &[StochasticMatrix]) -> Result<ClassicalVerdict> {
    let Some(first) = chain.first() else {
        return Err(Error::NotStochasticInput("empty chain".into()));
    };
    let d = first.d;
    if let Some(m) = chain.iter().find(|m| m.d != d) {
        return Err(Error::NotStochasticInput(format!("mixed dimensions {d} and {}", m.d)));
    }
    let mut first_failure = None;
    for (k, w) in chain.windows(2).enumerate() {
        if !classical_step_ok(&w[0], &w[1])? {
            first_failure = Some(k);
            break;
        }
    }
    let grid = simplex_grid(d);
    let xs: Vec<f64> = (1..=9).map(|k| k as f64 / 10.0).collect();
    let mut contraction_ok = true;
    'outer: for w in chain.windows(2) {
        for p1 in &grid {
            for p2 in &grid {
                for &x in &xs {
                    let v: Vec<f64> = p1.iter().zip(p2).map(|(a, b)| x * a - (1.0 - x) * b).collect();
                    if l1(&w[1].apply(&v)) > l1(&w[0].apply(&v)) + 1e-10 {
                        contraction_ok = false;
                        break 'outer;
                    }
                }
            }
        }
    }
    let p_div = first_failure.is_none();
    Ok(ClassicalVerdict { p_div, contraction_ok, agree: p_div == contraction_ok, first_failure })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::composition::{rotated_dephasing, MixingProfile};
    use crate::models::{CompositionModel, ManiscalcoModel, PauliModel, RateFn};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    struct Zero;
    impl Dynamics for Zero {
        fn generator(&self, _t: f64) -> Result<Superoperator> {
            Ok(Superoperator::zero())
        }
        fn map(&self, _t: f64) -> Result<Superoperator> {
            Ok(Superoperator::identity())
        }
        fn singular_times(&self) -> Vec<f64> {
            Vec::new()
        }
    }

    #[test]
    fn grid_lookup() {
        let g = TimeGrid::uniform(1.0, 10).unwrap();
        assert_eq!(g.len(), 11);
        assert_eq!(g.index_of(0.3).unwrap(), 3);
        assert_eq!(g.index_of(1.0).unwrap(), 10);
        assert!(matches!(g.index_of(0.35), Err(Error::OffGridTime { .. })));
        assert!(TimeGrid::from_points(vec![0.0, 0.5, 0.5]).is_err());
        assert!(TimeGrid::uniform(-1.0, 10).is_err());
    }

    #[test]
    fn zero_generator_gives_identity() {
        let traj = integrate(&Zero, &TimeGrid::uniform(2.0, 20).unwrap()).unwrap();
        assert!(traj.maps.iter().all(|m| *m == Superoperator::identity()));
    }

    #[test]
    fn pauli_integration_matches_closed_form() {
        let model = PauliModel::new(RateFn::Constant(1.0), RateFn::Sin { amp: 0.5, freq: 2.0 }, RateFn::neg_tanh());
        let grid = TimeGrid::uniform(3.0, 300).unwrap();
        let a = integrate(&model, &grid).unwrap();
        let b = analytic(&model, &grid).unwrap();
        assert!(a.max_diff(&b) < 1e-9, "{}", a.max_diff(&b));
    }

    #[test]
    fn maniscalco_integration_matches_closed_form() {
        let model = ManiscalcoModel::constant(1.0, 1.0, 1.0, 0.5);
        let grid = TimeGrid::uniform(3.0, 300).unwrap();
        let d = integrate(&model, &grid).unwrap().max_diff(&analytic(&model, &grid).unwrap());
        assert!(d < 1e-8, "{d}");
    }

    #[test]
    fn blow_up_inside_a_step_is_rejected() {
        let model = PauliModel::new(RateFn::BlowUp { amp: 1.0, at: 0.55 }, RateFn::zero(), RateFn::zero());
        let grid = TimeGrid::uniform(1.0, 10).unwrap();
        assert!(matches!(assemble(&model, &grid), Err(Error::RateBlowUpInsideStep { .. })));
        assert!(matches!(integrate(&model, &grid), Err(Error::RateBlowUpInsideStep { .. })));
    }

    #[test]
    fn assembled_pauli_blow_up() {
        let model = PauliModel::new(RateFn::BlowUp { amp: 1.0, at: 1.0 }, RateFn::Constant(0.2), RateFn::Constant(0.1));
        let grid = TimeGrid::uniform(2.0, 200).unwrap();
        let traj = assemble(&model, &grid).unwrap();
        assert_eq!(traj.source, TrajectorySource::Assembled { switch_index: 100 });
        let exact = analytic(&model, &grid).unwrap();
        assert!((0..100).all(|k| traj.maps[k].max_diff(&exact.maps[k]) < 1e-7));
        assert!((100..=200).all(|k| traj.maps[k] == exact.maps[k]));
        let profile = image_profile(&traj, tol::RANK).unwrap();
        let dims = profile.dims();
        assert!(dims[..100].iter().all(|&d| d == 4) && dims[100..].iter().all(|&d| d == 2));
        assert!(profile.non_increasing);
        let report = classify(&traj, &ClassifyTolerances::default());
        assert_eq!(report.verdict, Verdict::CpDivisible);
        assert_eq!(report.first_non_invertible, Some((100, 1.0)));
        assert!(report.intervals[100..].iter().all(|r| r.method == CpMethod::TwoState));
    }

    #[test]
    fn pauli_limit_projector() {
        let model = PauliModel::new(RateFn::BlowUp { amp: 1.0, at: 1.0 }, RateFn::Constant(0.2), RateFn::Constant(0.1));
        let lp = limit_projector(&model, 1.0).unwrap();
        assert!(lp.idempotent_defect < 1e-6, "{}", lp.idempotent_defect);
        assert!(lp.min_choi_eig >= -1e-6);
        // Projects onto span{σ0, σ1}.
        assert!(lp.projector.apply(&linalg::pauli(1)).max_diff(&linalg::pauli(1)) < 1e-6);
        assert!(lp.projector.apply(&linalg::pauli(2)).max_abs() < 1e-12);
    }

    #[test]
    fn composition_propagators() {
        let model = CompositionModel::new(MixingProfile::Smooth { t_star: 1.0 });
        let grid = TimeGrid::uniform(2.0, 100).unwrap();
        let traj = assemble(&model, &grid).unwrap();
        for k in [10, 49, 50, 75, 100] {
            let v = propagator(&traj, k, k, tol::RANK).unwrap();
            let t = grid.points()[k];
            let want = if t < 1.0 { Superoperator::identity() } else { rotated_dephasing(t) };
            assert!(v.v.max_diff(&want) < 1e-8, "t = {t}: {}", v.v.max_diff(&want));
        }
        let profile = image_profile(&traj, tol::RANK).unwrap();
        assert!(!profile.non_increasing);
        assert_eq!(profile.first_violation, Some(grid.points()[51]));
        assert_eq!(classify(&traj, &ClassifyTolerances::default()).verdict, Verdict::CpDivisible);
    }

    #[test]
    fn non_monotone_mixing_breaks_cp() {
        let model = CompositionModel::new(MixingProfile::Wiggle { t_star: 1.0, depth: 1.5 });
        let grid = TimeGrid::uniform(1.5, 150).unwrap();
        let traj = assemble(&model, &grid).unwrap();
        assert_ne!(classify(&traj, &ClassifyTolerances::default()).verdict, Verdict::CpDivisible);
    }

    #[test]
    fn eternal_scenario_is_p_divisible_only() {
        let model = PauliModel::new(RateFn::Constant(1.0), RateFn::Constant(1.0), RateFn::neg_tanh());
        let traj = analytic(&model, &TimeGrid::uniform(2.0, 100).unwrap()).unwrap();
        let report = classify(&traj, &ClassifyTolerances::default());
        assert_eq!(report.verdict, Verdict::PDivisibleOnly);
        assert!(report.intervals[1..].iter().all(|r| !r.cp));
        assert!(report.min_choi_eig() < -1e-6);
    }

    #[test]
    fn kernel_violation_is_not_divisible() {
        // Λ_1 kills σ3 but Λ_2 restores it.
        let grid = TimeGrid::uniform(2.0, 2).unwrap();
        let maps = vec![Superoperator::identity(), crate::superop::maps::equatorial_projector(), Superoperator::identity()];
        let traj = MapTrajectory { grid, maps, source: TrajectorySource::Analytic };
        assert!(matches!(propagator(&traj, 1, 2, tol::RANK), Err(Error::NotDivisible { .. })));
        let report = classify(&traj, &ClassifyTolerances::default());
        assert_eq!(report.verdict, Verdict::NotDivisible);
        assert!(matches!(report.intervals[1].witness, Some(Witness::KernelLeak(_))));
    }

    #[test]
    fn composition_law() {
        let model = ManiscalcoModel::constant(1.0, 1.0, 0.5, 0.3);
        let traj = integrate(&model, &TimeGrid::uniform(2.0, 40).unwrap()).unwrap();
        let v = |s, t| propagator(&traj, s, t, tol::RANK).unwrap().v;
        for (r, s, t) in [(0, 5, 9), (3, 17, 40), (10, 10, 20)] {
            assert!(v(s, t).compose(&v(r, s)).max_diff(&v(r, t)) < 1e-8);
        }
    }

    #[test]
    fn cf4_is_fourth_order() {
        let model = ManiscalcoModel {
            omega: RateFn::Constant(1.0),
            gamma_plus: RateFn::Sin { amp: 1.0, freq: 3.0 },
            gamma_minus: RateFn::Constant(0.4),
            gamma3: RateFn::Constant(0.2),
        };
        let exact = model.map(1.0).unwrap();
        let err = |n: usize| {
            let h = 1.0 / n as f64;
            let mut m = Superoperator::identity();
            for k in 0..n {
                m = cf4_step(&model, k as f64 * h, h).unwrap().compose(&m);
            }
            m.max_diff(&exact)
        };
        let (e1, e2) = (err(10), err(20));
        let order = (e1 / e2).log2();
        assert!(order > 3.7, "observed order {order}");
    }

    #[test]
    fn trajectory_csv_shape() {
        let traj = analytic(&PauliModel::constant(1.0, 0.5, 0.2), &TimeGrid::uniform(1.0, 10).unwrap()).unwrap();
        let report = classify(&traj, &ClassifyTolerances::default());
        let text = trajectory_csv(&traj, Some(&report), tol::RANK);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 12);
        assert!(lines.iter().all(|l| l.split(',').count() == 35));
    }

    #[test]
    fn stochastic_validation() {
        assert!(StochasticMatrix::new(2, vec![0.5, 0.5, 0.5, 0.4]).is_err());
        assert!(StochasticMatrix::new(4, vec![0.0; 16]).is_err());
        assert!(StochasticMatrix::new(2, vec![1.1, 0.0, -0.1, 1.0]).is_err());
        assert!(classical_pdiv(&[]).is_err());
    }

    #[test]
    fn classical_chains() {
        let id = StochasticMatrix::identity(3);
        let v = classical_pdiv(&[id.clone(), id.clone(), id]).unwrap();
        assert!(v.p_div && v.contraction_ok);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = StochasticMatrix::random(3, &mut rng);
        let chain: Vec<_> = (0..6).map(|k| m.power(k)).collect();
        let v = classical_pdiv(&chain).unwrap();
        assert!(v.p_div && v.contraction_ok && v.agree);
    }

    #[test]
    fn classical_rank_deficient_steps() {
        // Constant columns: rank 1, any later map of the same kind extends.
        let flat = StochasticMatrix::new(2, vec![0.3, 0.3, 0.7, 0.7]).unwrap();
        let flat2 = StochasticMatrix::new(2, vec![0.6, 0.6, 0.4, 0.4]).unwrap();
        assert!(classical_pdiv(&[StochasticMatrix::identity(2), flat.clone(), flat2]).unwrap().p_div);
        // Rank 1 followed by an invertible map: kernel not preserved.
        let v = classical_pdiv(&[flat, StochasticMatrix::identity(2)]).unwrap();
        assert!(!v.p_div && !v.contraction_ok);
    }

    #[test]
    fn hand_built_violating_chain() {
        // Brute force over T1 = [[1−a, b], [a, 1−b]]: the return step to the
        // identity needs T1⁻¹, which has a negative entry as soon as T1 is
        // invertible and not a permutation.
        let mut found = None;
        'search: for i in 1..10 {
            for j in 1..10 {
                let (a, b) = (i as f64 / 20.0, j as f64 / 20.0);
                let t1 = StochasticMatrix::new(2, vec![1.0 - a, b, a, 1.0 - b]).unwrap();
                let chain = [StochasticMatrix::identity(2), t1, StochasticMatrix::identity(2)];
                let v = classical_pdiv(&chain).unwrap();
                if !v.p_div && !v.contraction_ok {
                    found = Some((a, b, v));
                    break 'search;
                }
            }
        }
        let (a, b, v) = found.expect("a violating chain exists");
        assert_eq!((a, b), (0.05, 0.05));
        assert_eq!(v.first_failure, Some(1));
    }
}
