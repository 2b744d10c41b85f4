// Copyright 2026 The qdiv Authors
// SPDX-License-Identifier: Apache-2.0

//! Orchestration: trajectory, then image profile, classification, backflow
//! and certificates, in that order.

use std::time::{Duration, Instant};

use qdiv_core::certify::{self, OutputGeometry};
use qdiv_core::infoflow::{self, BackflowReport, HuntConfig};
use qdiv_core::linalg::ComplexMatrix;
use qdiv_core::models::composition::rotation;
use qdiv_core::models::Model;
use qdiv_core::propagation::{
    self, ClassicalVerdict, ClassifyTolerances, DivisibilityReport, ImageProfile, MapTrajectory, Verdict,
};
use qdiv_core::{Error, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::CliError;
use crate::scenario::{Analysis, ModelSpec, Scenario};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Pairs whose norm curves are exported as plot data, besides the argmax pair.
const TRACKED_PAIRS: usize = 3;

/// Intervals sampled for the per-pair two-state certificates.
const AU_INTERVALS: usize = 10;

/// Samples in the pure-output scan of a feasible PTP projector.
const PURE_SCAN_SAMPLES: usize = 400;

#[derive(Debug, Clone)]
pub struct TrackedCurve {
    pub pair_id: usize,
    pub p1: f64,
    pub ancilla_dim: usize,
    pub norm: Vec<f64>,
    pub sigma: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertificateKind {
    TwoState,
    CptpProjector,
    PtpProjector,
}

impl CertificateKind {
    pub fn name(self) -> &'static str {
        match self {
            CertificateKind::TwoState => "two-state",
            CertificateKind::CptpProjector => "cptp-projector",
            CertificateKind::PtpProjector => "ptp-projector",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateRow {
    pub kind: CertificateKind,
    pub id: usize,
    /// `δ` at the worst margin for two-state rows, canonical `p` otherwise.
    pub parameter: f64,
    pub s: f64,
    pub t: f64,
    pub feasible: bool,
    pub margin: f64,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub scenario: Scenario,
    pub trajectory: Option<MapTrajectory>,
    pub write_trajectory: bool,
    pub image_profile: Option<ImageProfile>,
    pub divisibility: Option<DivisibilityReport>,
    pub classical: Option<ClassicalVerdict>,
    pub backflow: Option<BackflowReport>,
    pub tracked: Vec<TrackedCurve>,
    pub certificates: Option<Vec<CertificateRow>>,
    pub notes: Vec<String>,
    pub wall_time: Duration,
    pub version: &'static str,
}

impl RunRecord {
    /// An analysis finished but returned an error verdict.
    pub fn has_error_verdict(&self) -> bool {
        self.divisibility.as_ref().is_some_and(|r| r.verdict == Verdict::NotDivisible)
            || self.classical.as_ref().is_some_and(|c| !c.agree)
    }
}

fn stage(stage: &'static str, model: &'static str) -> impl FnOnce(Error) -> CliError {
    move |source| CliError::Analysis { stage, model, source }
}

/// Runs every analysis of the scenario.
pub fn run(scenario: &Scenario) -> Result<RunRecord, CliError> {
    let write = !scenario.analyses.is_empty();
    execute(scenario, write)
}

/// Computes and keeps only the trajectory.
pub fn simulate(scenario: &Scenario) -> Result<RunRecord, CliError> {
    execute(&scenario.clone().with_analyses(&[]), true)
}

fn execute(scenario: &Scenario, write_trajectory: bool) -> Result<RunRecord, CliError> {
    let start = Instant::now();
    let mut rec = RunRecord {
        scenario: scenario.clone(),
        trajectory: None,
        write_trajectory,
        image_profile: None,
        divisibility: None,
        classical: None,
        backflow: None,
        tracked: Vec::new(),
        certificates: None,
        notes: Vec::new(),
        wall_time: Duration::ZERO,
        version: VERSION,
    };
    let name = scenario.model.name();
    match &scenario.model {
        ModelSpec::Quantum(model) => run_quantum(&mut rec, model, name)?,
        ModelSpec::Classical(chain) => {
            if scenario.runs(Analysis::Divisibility) {
                let chain = chain.build(scenario.sampler.seed);
                rec.classical = Some(propagation::classical_pdiv(&chain).map_err(stage("classical divisibility", name))?);
            }
            for a in [Analysis::ImageProfile, Analysis::Backflow, Analysis::Certify] {
                if scenario.runs(a) {
                    rec.notes.push(format!("{} does not apply to classical chains; skipped", a.name()));
                }
            }
        }
    }
    rec.wall_time = start.elapsed();
    Ok(rec)
}

fn run_quantum(rec: &mut RunRecord, model: &Model, name: &'static str) -> Result<(), CliError> {
    let s = rec.scenario.clone();
    let grid = propagation::TimeGrid::uniform(s.grid.t_end, s.grid.steps).map_err(stage("grid", name))?;
    let traj = propagation::assemble(model, &grid).map_err(stage("integration", name))?;

    if s.runs(Analysis::ImageProfile) {
        rec.image_profile = Some(propagation::image_profile(&traj, s.tolerances.rank).map_err(stage("image profile", name))?);
    }
    if s.runs(Analysis::Divisibility) {
        let tols = ClassifyTolerances { rank: s.tolerances.rank, cp: s.tolerances.cp, tp_domain: s.tolerances.tp_domain };
        rec.divisibility = Some(propagation::classify(&traj, &tols));
    }
    if s.runs(Analysis::Backflow) {
        let cfg = HuntConfig {
            n_pairs: s.sampler.n_pairs,
            ancilla_dim: s.sampler.ancilla_dim,
            biased: s.sampler.biased,
            seed: s.sampler.seed,
            threshold: s.tolerances.backflow,
        };
        let hunt = infoflow::hunt_backflow(&traj, &cfg).map_err(stage("backflow", name))?;
        rec.tracked = tracked_curves(&traj, &hunt, s.tolerances.rank);
        rec.backflow = Some(hunt);
    }
    if s.runs(Analysis::Certify) {
        rec.certificates = Some(certificates(&traj, &s).map_err(stage("certify", name))?);
    }
    rec.trajectory = Some(traj);
    Ok(())
}

fn tracked_curves(traj: &MapTrajectory, hunt: &BackflowReport, tol_rank: f64) -> Vec<TrackedCurve> {
    let cfg = &hunt.config;
    let mut ids: Vec<(usize, f64)> = (0..cfg.n_pairs.min(TRACKED_PAIRS)).map(|i| (i, 0.5)).collect();
    if let Some(best) = &hunt.argmax {
        ids.retain(|(i, _)| *i != best.pair_id);
        ids.push((best.pair_id, best.pair.p1));
    }
    let ranks = traj.ranks(tol_rank);
    ids.into_iter()
        .map(|(pair_id, p1)| {
            let pair = infoflow::sample_pair(cfg.seed, pair_id as u64, cfg.ancilla_dim).with_p1(p1);
            let norm = infoflow::norm_curve(traj, &pair);
            let sigma = infoflow::derivative_on_grid(traj.grid.points(), &norm, &ranks);
            TrackedCurve { pair_id, p1, ancilla_dim: cfg.ancilla_dim, norm, sigma }
        })
        .collect()
}

fn certificates(traj: &MapTrajectory, s: &Scenario) -> qdiv_core::Result<Vec<CertificateRow>> {
    let mut rows = Vec::new();
    let points = traj.grid.points();
    let n = traj.len() - 1;
    let stride = (n / AU_INTERVALS).max(1);
    for pair_id in 0..s.certify.au_pairs {
        let pair = infoflow::sample_pair(s.sampler.seed, pair_id as u64, 1);
        for k in (stride..=n).step_by(stride) {
            let (ls, lt) = (traj.map(k - 1), traj.map(k));
            let inputs = [ls.apply(&pair.rho1).hermitian_part(), ls.apply(&pair.rho2).hermitian_part()];
            let outputs = [lt.apply(&pair.rho1).hermitian_part(), lt.apply(&pair.rho2).hermitian_part()];
            let (feasible, margin, delta, detail) = match certify::extendability(inputs, outputs) {
                Ok(v) => (v.feasible, v.margin, v.worst_delta, String::new()),
                // Coinciding inputs: a replacement channel sends them anywhere.
                Err(Error::DegenerateSpan { gram }) => (true, f64::NAN, f64::NAN, format!("degenerate-span gram={gram:.3e}")),
                Err(e) => return Err(e),
            };
            rows.push(CertificateRow {
                kind: CertificateKind::TwoState,
                id: pair_id,
                parameter: delta,
                s: points[k - 1],
                t: points[k],
                feasible,
                margin,
                detail,
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(s.sampler.seed);
    for id in 0..s.certify.subspaces {
        let sub = certify::random_subspace(&mut rng)?;
        let cert = certify::cptp_projector_feasibility(&sub);
        rows.push(CertificateRow {
            kind: CertificateKind::CptpProjector,
            id,
            parameter: sub.p,
            s: f64::NAN,
            t: f64::NAN,
            feasible: cert.cptp_feasible,
            margin: cert.q1q2_slack,
            detail: format!("q1q2>=1 required; bound={:.3e}", cert.q1q2_bound),
        });
    }

    let offdiag = [C64::new(0.0, 0.0), C64::new(0.2, 0.1), C64::new(-0.1, 0.2)];
    for (id, &p) in s.certify.p_values.iter().enumerate() {
        let (theta, phi): (f64, f64) = (rng.random::<f64>() * std::f64::consts::PI, rng.random::<f64>() * std::f64::consts::TAU);
        let basis = rotation(theta) * ComplexMatrix::diagonal(&[C64::new(1.0, 0.0), C64::from_polar(1.0, phi)]);
        let sub = certify::canonicalize_subspace(&certify::subspace_from_offdiagonals(p, offdiag, &basis))?;
        let cert = certify::ptp_projector_existence(&sub);
        let detail = match &cert.projector {
            Some(proj) => {
                let scan = certify::pure_output_scan(proj, PURE_SCAN_SAMPLES, s.sampler.seed);
                let great = matches!(scan.geometry, OutputGeometry::Circle { great: true });
                format!("pure outputs: {} (plane residual {:.3e}, great={great})", scan.geometry, scan.plane_residual)
            }
            None => format!("canonical p={:?}; forced candidate min eigenvalue {:.3e}", sub.p, cert.candidate_min_eigenvalue),
        };
        rows.push(CertificateRow {
            kind: CertificateKind::PtpProjector,
            id,
            parameter: p,
            s: f64::NAN,
            t: f64::NAN,
            feasible: cert.ptp_feasible,
            margin: -cert.p_deviation,
            detail,
        });
    }
    Ok(rows)
}
