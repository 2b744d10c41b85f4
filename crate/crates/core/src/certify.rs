// Copyright 2026 The qdiv Authors
// SPDX-License-Identifier: Apache-2.0

//! Structural certificates for qubit maps.
//!
//! - [`alberti_uhlmann`]: does a channel `σ_i ↦ σ_i′` (i = 1, 2) exist?
//! - [`canonicalize_subspace`], [`cptp_projector_feasibility`],
//!   [`ptp_projector_existence`]: projectors onto 3-dimensional subspaces
//!   spanned by qubit states.
//! - [`pure_output_scan`]: geometry of the pure states a map can output.

use rand::Rng;

use crate::error::{Error, Result};
use crate::infoflow::random_density;
use crate::linalg::{self, hermitian_eigen, pauli, trace_norm, ComplexMatrix, C64};
use crate::superop::{self, maps, PureStateSample, Superoperator};
use crate::tol;

/// Points of the logarithmic `δ` grid on `[1e-4, 1e4]`.
pub const DELTA_GRID_POINTS: usize = 200;
const DELTA_LOG_MIN: f64 = -4.0;
const DELTA_LOG_MAX: f64 = 4.0;
const GOLDEN_ITERATIONS: usize = 80;

fn check_state(rho: &ComplexMatrix, what: &str) -> Result<()> {
    if rho.dim() != 2 {
        return Err(Error::InvalidState(format!("{what}: expected a 2x2 matrix, got {}x{}", rho.dim(), rho.dim())));
    }
    if (rho.trace() - C64::new(1.0, 0.0)).norm() > 1e-10 {
        return Err(Error::InvalidState(format!("{what}: trace {} is not 1", rho.trace())));
    }
    let lo = superop::min_eigenvalue_2x2(rho);
    if !rho.is_hermitian(tol::HERM) || lo < -1e-10 {
        return Err(Error::InvalidState(format!("{what}: not positive semidefinite (min eigenvalue {lo:.3e})")));
    }
    Ok(())
}

/// Sources `σ1, σ2` and targets `σ1′, σ2′`, all qubit states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuInstance {
    pub sigma1: ComplexMatrix,
    pub sigma2: ComplexMatrix,
    pub sigma1p: ComplexMatrix,
    pub sigma2p: ComplexMatrix,
}

impl AuInstance {
    pub fn new(sigma1: ComplexMatrix, sigma2: ComplexMatrix, sigma1p: ComplexMatrix, sigma2p: ComplexMatrix) -> Result<Self> {
        check_state(&sigma1, "sigma1")?;
        check_state(&sigma2, "sigma2")?;
        check_state(&sigma1p, "sigma1'")?;
        check_state(&sigma2p, "sigma2'")?;
        Ok(Self { sigma1, sigma2, sigma1p, sigma2p })
    }

    /// `‖σ1 − δσ2‖₁ − ‖σ1′ − δσ2′‖₁`.
    pub fn margin_at(&self, delta: f64) -> f64 {
        let lhs = trace_norm(&(self.sigma1 - self.sigma2 * delta)).expect("hermitian difference");
        let rhs = trace_norm(&(self.sigma1p - self.sigma2p * delta)).expect("hermitian difference");
        lhs - rhs
    }

    /// The same instance with the two pairs relabelled.
    pub fn swapped(&self) -> Self {
        Self { sigma1: self.sigma2, sigma2: self.sigma1, sigma1p: self.sigma2p, sigma2p: self.sigma1p }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuVerdict {
    pub feasible: bool,
    /// `δ` at which the margin is smallest.
    pub worst_delta: f64,
    /// Smallest margin found.
    pub margin: f64,
}

impl AuVerdict {
    /// The worst case in biased form: weights `p1 = 1/(1+δ)`, `p2 = δ/(1+δ)`
    /// and the margin `‖p1σ1 − p2σ2‖₁ − ‖p1σ1′ − p2σ2′‖₁`.
    pub fn biased(&self) -> (f64, f64, f64) {
        let s = 1.0 / (1.0 + self.worst_delta);
        (s, self.worst_delta * s, self.margin * s)
    }
}

/// Minimum of `f` over the logarithmic `δ` grid, refined by golden-section
/// search in `log δ` between the neighbours of the best grid point.
pub fn minimize_over_delta(f: impl Fn(f64) -> f64) -> (f64, f64) {
    let step = (DELTA_LOG_MAX - DELTA_LOG_MIN) / (DELTA_GRID_POINTS - 1) as f64;
    let logs: Vec<f64> = (0..DELTA_GRID_POINTS).map(|k| DELTA_LOG_MIN + step * k as f64).collect();
    let values: Vec<f64> = logs.iter().map(|&l| f(10f64.powf(l))).collect();
    let mut best = 0;
    for (k, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = k;
        }
    }
    let (mut a, mut b) = (logs[best.saturating_sub(1)], logs[(best + 1).min(DELTA_GRID_POINTS - 1)]);
    let g = |l: f64| f(10f64.powf(l));
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (g(c), g(d));
    for _ in 0..GOLDEN_ITERATIONS {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = g(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = g(d);
        }
    }
    let (mut arg, mut min) = (10f64.powf(logs[best]), values[best]);
    for (l, v) in [(c, fc), (d, fd)] {
        if v < min {
            arg = 10f64.powf(l);
            min = v;
        }
    }
    (arg, min)
}

/// Two-state channel existence test: feasible iff the margin stays
/// `≥ −1e-9` across `δ ∈ [1e-4, 1e4]`.
pub fn alberti_uhlmann(inst: &AuInstance) -> AuVerdict {
    let (worst_delta, margin) = minimize_over_delta(|d| inst.margin_at(d));
    AuVerdict { feasible: margin >= -tol::AU_MARGIN, worst_delta, margin }
}

/// Hilbert–Schmidt Gram determinant of two operators.
pub fn gram_determinant(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    (a.hs_inner(a) * b.hs_inner(b) - a.hs_inner(b) * b.hs_inner(a)).re
}

/// Whether a map defined on `span{inputs}` by `inputs[i] ↦ outputs[i]`
/// extends to a channel on all operators.
pub fn extendability(inputs: [ComplexMatrix; 2], outputs: [ComplexMatrix; 2]) -> Result<AuVerdict> {
    let gram = gram_determinant(&inputs[0], &inputs[1]);
    if gram < tol::GRAM {
        return Err(Error::DegenerateSpan { gram });
    }
    let inst = AuInstance::new(inputs[0], inputs[1], outputs[0], outputs[1])?;
    Ok(alberti_uhlmann(&inst))
}

/// Real Pauli coordinates `(Tr ρ, Tr ρσ1, Tr ρσ2, Tr ρσ3)`.
pub fn pauli_coordinates(op: &ComplexMatrix) -> [f64; 4] {
    let mut r = [0.0; 4];
    for (k, x) in r.iter_mut().enumerate() {
        *x = (*op * pauli(k)).trace().re;
    }
    r
}

fn det3(m: [[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Vector orthogonal to three vectors in R⁴ (cofactor expansion).
fn cross4(rows: &[[f64; 4]; 3]) -> [f64; 4] {
    let mut k = [0.0; 4];
    for (col, out) in k.iter_mut().enumerate() {
        let mut minor = [[0.0; 3]; 3];
        for (r, row) in rows.iter().enumerate() {
            let mut c2 = 0;
            for (c, &x) in row.iter().enumerate() {
                if c != col {
                    minor[r][c2] = x;
                    c2 += 1;
                }
            }
        }
        let sign = if col % 2 == 0 { 1.0 } else { -1.0 };
        *out = sign * det3(minor);
    }
    k
}

/// Determinant of the Hilbert–Schmidt Gram matrix of three operators.
pub fn gram_determinant3(states: &[ComplexMatrix; 3]) -> f64 {
    let mut g = [[C64::new(0.0, 0.0); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            g[i][j] = states[i].hs_inner(&states[j]);
        }
    }
    let d = g[0][0] * (g[1][1] * g[2][2] - g[1][2] * g[2][1]) - g[0][1] * (g[1][0] * g[2][2] - g[1][2] * g[2][0])
        + g[0][2] * (g[1][0] * g[2][1] - g[1][1] * g[2][0]);
    d.re
}

/// A 3-dimensional operator subspace spanned by qubit states, with the
/// canonical data of its orthogonal complement.
///
/// In `basis` (eigenvectors of the orthogonal operator `K`, larger
/// `|eigenvalue|` first) every spanning state has diagonal `(p, 1 − p)`.
#[derive(Debug, Clone)]
pub struct DensitySubspace {
    pub spanning_states: [ComplexMatrix; 3],
    /// Unit-norm Hermitian operator orthogonal to the span.
    pub k: ComplexMatrix,
    /// `K`'s eigenvalues, larger magnitude first.
    pub k_eigenvalues: [f64; 2],
    /// Columns are `K`'s eigenvectors.
    pub basis: ComplexMatrix,
    /// `λ1/λ0`, always in `[−1, 0)`.
    pub lambda: f64,
    /// `λ/(λ − 1)`, in `(0, ½]`.
    pub p: f64,
    /// `⟨0|ρ_i|1⟩` in the canonical basis.
    pub offdiag: [C64; 3],
}

impl DensitySubspace {
    /// Rotates an operator into the canonical basis.
    pub fn to_canonical(&self, op: &ComplexMatrix) -> ComplexMatrix {
        self.basis.dagger() * *op * self.basis
    }

    pub fn from_canonical(&self, op: &ComplexMatrix) -> ComplexMatrix {
        self.basis * *op * self.basis.dagger()
    }

    /// `H = |0⟩⟨0| + λ|1⟩⟨1|` in the canonical basis, in original coordinates.
    pub fn h_operator(&self) -> ComplexMatrix {
        self.from_canonical(&ComplexMatrix::from_real(2, &[1.0, 0.0, 0.0, self.lambda]))
    }

    /// Hilbert–Schmidt distance from `op` to the span, relative to `‖op‖`.
    pub fn residual(&self, op: &ComplexMatrix) -> f64 {
        let norm = op.frobenius_norm();
        if norm == 0.0 {
            return 0.0;
        }
        (self.k * self.k.hs_inner(op)).frobenius_norm() / norm
    }

    pub fn contains(&self, op: &ComplexMatrix) -> bool {
        self.residual(op) < tol::SUBSPACE
    }

    /// `|ψ_θ⟩ = √p|0⟩ + √(1−p) e^{iθ}|1⟩` (canonical basis), as a projector in
    /// original coordinates.
    pub fn pure_family_member(&self, theta: f64) -> ComplexMatrix {
        let psi = [C64::new(self.p.sqrt(), 0.0), C64::from_polar((1.0 - self.p).sqrt(), theta)];
        self.from_canonical(&ComplexMatrix::outer(&psi, &psi))
    }

    /// Contains `𝟙` and is closed under `†`.
    pub fn is_operator_system(&self) -> bool {
        let id = ComplexMatrix::identity(2);
        let closed = (0..3).all(|i| {
            let combo = self.spanning_states[i] * C64::new(0.3, 0.7) + self.spanning_states[(i + 1) % 3];
            self.contains(&combo.dagger())
        });
        self.contains(&id) && closed
    }
}

pub fn canonicalize_subspace(states: &[ComplexMatrix]) -> Result<DensitySubspace> {
    if states.len() != 3 {
        return Err(Error::NotThreeDimensional(format!("{} spanning states given, need 3", states.len())));
    }
    for (i, s) in states.iter().enumerate() {
        check_state(s, &format!("state {}", i + 1))?;
    }
    let spanning_states = [states[0], states[1], states[2]];
    let gram = gram_determinant3(&spanning_states);
    if gram < tol::GRAM {
        return Err(Error::NotThreeDimensional(format!("Gram determinant {gram:.3e}")));
    }
    let rows = [
        pauli_coordinates(&states[0]),
        pauli_coordinates(&states[1]),
        pauli_coordinates(&states[2]),
    ];
    let kc = cross4(&rows);
    let mut k = ComplexMatrix::zeros(2);
    for (a, &x) in kc.iter().enumerate() {
        k += pauli(a) * x;
    }
    k = k * (1.0 / k.frobenius_norm());
    let e = hermitian_eigen(&k)?;
    let (i0, i1) = if e.values[0].abs() >= e.values[1].abs() { (0, 1) } else { (1, 0) };
    let (l0, l1) = (e.values[i0], e.values[i1]);
    if l1.abs() < 1e-12 * l0.abs() {
        return Err(Error::NotDensitySpanned);
    }
    let lambda = l1 / l0;
    if lambda >= 0.0 {
        return Err(Error::NotDensitySpanned);
    }
    let basis = ComplexMatrix::from_columns(&[e.vector(i0), e.vector(i1)]);
    let p = lambda / (lambda - 1.0);
    let mut sub = DensitySubspace {
        spanning_states,
        k,
        k_eigenvalues: [l0, l1],
        basis,
        lambda,
        p,
        offdiag: [C64::new(0.0, 0.0); 3],
    };
    sub.offdiag = std::array::from_fn(|i| sub.to_canonical(&states[i])[(0, 1)]);
    Ok(sub)
}

/// States with common diagonal `(p, 1 − p)` in the basis with columns
/// `basis`, and the given off-diagonal entries.
pub fn subspace_from_offdiagonals(p: f64, offdiag: [C64; 3], basis: &ComplexMatrix) -> Vec<ComplexMatrix> {
    offdiag
        .iter()
        .map(|&x| {
            let rho = ComplexMatrix::from_slice(&[C64::new(p, 0.0), x, x.conj(), C64::new(1.0 - p, 0.0)]).expect("2x2");
            *basis * rho * basis.dagger()
        })
        .collect()
}

/// Three random mixed states spanning a well-conditioned subspace.
pub fn random_subspace(rng: &mut impl Rng) -> Result<DensitySubspace> {
    for _ in 0..10_000 {
        let states = [random_density(2, rng), random_density(2, rng), random_density(2, rng)];
        if gram_determinant3(&states) < 1e-6 {
            continue;
        }
        match canonicalize_subspace(&states) {
            Ok(sub) if sub.p >= 0.05 => return Ok(sub),
            Ok(_) | Err(Error::NotDensitySpanned) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::InvalidParameter("no admissible random subspace found".into()))
}

/// Choi matrix of a candidate projector fixing `|0⟩⟨1|`, `|1⟩⟨0|` and
/// sending `|0⟩⟨0| ↦ [[q1, w1], [w1*, 1−q1]]`, `|1⟩⟨1| ↦ [[1−q2, w2], [w2*, q2]]`.
pub fn projector_choi_pattern(q1: f64, w1: C64, q2: f64, w2: C64) -> ComplexMatrix {
    let (z, o) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
    let r = |x: f64| C64::new(x, 0.0);
    ComplexMatrix::from_slice(&[
        r(q1), w1, z, o, //
        w1.conj(), r(1.0 - q1), z, z, //
        z, z, r(1.0 - q2), w2, //
        o, z, w2.conj(), r(q2),
    ])
    .expect("4x4")
}

#[derive(Debug, Clone, PartialEq)]
pub struct CptpCertificate {
    pub cptp_feasible: bool,
    /// Positivity of the `{|00⟩, |11⟩}` principal minor requires `q1 q2 ≥ 1`.
    pub q1q2_bound: f64,
    /// Largest `q1 q2 − 1` attainable with `q1, q2 ≤ 1`; zero only at `q1 = q2 = 1`.
    pub q1q2_slack: f64,
    /// Relative distance of `H` from the subspace (a projector fixing `H`
    /// cannot have its image inside the subspace).
    pub h_residual: f64,
    pub grid_candidates: usize,
    /// Candidates with `(q1, q2) ≠ (1, 1)` whose Choi matrix was PSD; always 0.
    pub grid_psd_exceptions: usize,
    /// Largest relative residual of the pure family `ψ_θ` from the subspace.
    pub pure_family_residual: f64,
}

/// No CPTP projector onto a 3-dimensional density-spanned subspace exists.
pub fn cptp_projector_feasibility(sub: &DensitySubspace) -> CptpCertificate {
    let qs: [f64; 6] = [0.0, 0.25, 0.5, 0.75, 0.9, 1.0];
    let mut candidates = 0;
    let mut exceptions = 0;
    for &q1 in &qs {
        for &q2 in &qs {
            let r1 = (q1 * (1.0 - q1)).sqrt();
            let r2 = (q2 * (1.0 - q2)).sqrt();
            for (a1, a2) in [(0.0, 0.0), (0.5, 0.5), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)] {
                for phi in [0.0, std::f64::consts::FRAC_PI_2] {
                    let w1 = C64::from_polar(a1 * r1, phi);
                    let w2 = C64::from_polar(a2 * r2, -phi);
                    let gamma = projector_choi_pattern(q1, w1, q2, w2);
                    let min = linalg::hermitian_eigenvalues(&gamma).expect("hermitian")[3];
                    candidates += 1;
                    if !(q1 == 1.0 && q2 == 1.0) && min >= -tol::CP {
                        exceptions += 1;
                    }
                }
            }
        }
    }
    let h = sub.h_operator();
    let h_residual = sub.residual(&h);
    let pure_family_residual = (0..16)
        .map(|k| sub.residual(&sub.pure_family_member(k as f64 * std::f64::consts::PI / 8.0)))
        .fold(0.0, f64::max);
    // q1, q2 ∈ [0, 1] ⇒ q1 q2 − 1 ≤ 0, so positivity forces q1 = q2 = 1,
    // hence w1 = w2 = 0 and the projector fixes H, which is not in the span.
    let q1q2_slack = 0.0;
    let forced_identity_escapes = h_residual > tol::SUBSPACE;
    CptpCertificate {
        cptp_feasible: !forced_identity_escapes && exceptions > 0,
        q1q2_bound: 1.0,
        q1q2_slack,
        h_residual,
        grid_candidates: candidates,
        grid_psd_exceptions: exceptions,
        pure_family_residual,
    }
}

#[derive(Debug, Clone)]
pub struct ProjectorChecks {
    pub idempotent_defect: f64,
    pub tp: bool,
    pub positive: bool,
    pub cp: bool,
}

#[derive(Debug, Clone)]
pub struct PtpCertificate {
    pub ptp_feasible: bool,
    /// `|p − ½|`.
    pub p_deviation: f64,
    /// Off-diagonal shift of `π[H]`; positivity forces it to 0.
    pub s_offset: C64,
    /// Smallest output eigenvalue of the forced candidate over the sample.
    pub candidate_min_eigenvalue: f64,
    /// The feasible projector (original coordinates).
    pub projector: Option<Superoperator>,
    pub checks: Option<ProjectorChecks>,
    pub operator_system: bool,
}

/// The only candidate PTP projector: `π[A] = Tr(A) Z + A₀₁|0⟩⟨1| + A₁₀|1⟩⟨0|`
/// in the canonical basis, `Z = diag(p, 1 − p)`; returned in original coordinates.
pub fn forced_projector_candidate(sub: &DensitySubspace) -> Superoperator {
    let z = ComplexMatrix::from_real(2, &[sub.p, 0.0, 0.0, 1.0 - sub.p]);
    Superoperator::from_action(|a| {
        let c = sub.to_canonical(a);
        let mut out = z * c.trace();
        out[(0, 1)] = c[(0, 1)];
        out[(1, 0)] = c[(1, 0)];
        sub.from_canonical(&out)
    })
}

pub fn ptp_projector_existence(sub: &DensitySubspace) -> PtpCertificate {
    let p_deviation = (sub.p - 0.5).abs();
    let ptp_feasible = p_deviation < 1e-9;
    let candidate = forced_projector_candidate(sub);
    let candidate_min_eigenvalue = superop::is_positive_map(&candidate, PureStateSample::standard(), tol::CP).min_eigenvalue;
    let (projector, checks) = if ptp_feasible {
        let w = Superoperator::conjugation(&sub.basis);
        let w_inv = Superoperator::conjugation(&sub.basis.dagger());
        let proj = w.compose(&maps::equatorial_projector()).compose(&w_inv);
        let checks = ProjectorChecks {
            idempotent_defect: proj.compose(&proj).max_diff(&proj),
            tp: proj.is_tp(tol::TP),
            positive: superop::is_positive_map(&proj, PureStateSample::standard(), tol::CP).positive,
            cp: superop::is_cp(&proj, tol::CP).cp,
        };
        (Some(proj), Some(checks))
    } else {
        (None, None)
    };
    PtpCertificate {
        ptp_feasible,
        p_deviation,
        s_offset: C64::new(0.0, 0.0),
        candidate_min_eigenvalue,
        projector,
        checks,
        operator_system: sub.is_operator_system(),
    }
}

#[derive(Debug, Clone)]
pub struct ProjectorReport {
    pub cptp: CptpCertificate,
    pub ptp: PtpCertificate,
}

pub fn projector_report(sub: &DensitySubspace) -> ProjectorReport {
    ProjectorReport { cptp: cptp_projector_feasibility(sub), ptp: ptp_projector_existence(sub) }
}

/// Bloch affine form `r ↦ T r + c` of a qubit map.
pub fn bloch_affine(s: &Superoperator) -> ([[f64; 3]; 3], [f64; 3]) {
    let r = s.pauli_transfer();
    let mut t = [[0.0; 3]; 3];
    let mut c = [0.0; 3];
    for i in 0..3 {
        c[i] = r[i + 1][0];
        for j in 0..3 {
            t[i][j] = r[i + 1][j + 1];
        }
    }
    (t, c)
}

fn affine(t: &[[f64; 3]; 3], c: &[f64; 3], r: &[f64; 3]) -> [f64; 3] {
    let mut out = *c;
    for i in 0..3 {
        for j in 0..3 {
            out[i] += t[i][j] * r[j];
        }
    }
    out
}

fn norm3(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OutputGeometry {
    AtMostTwoPoints,
    Circle { great: bool },
    FullSphere,
    Other,
}

impl std::fmt::Display for OutputGeometry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OutputGeometry::AtMostTwoPoints => write!(f, "at-most-two-points"),
            OutputGeometry::Circle { great: true } => write!(f, "great-circle"),
            OutputGeometry::Circle { great: false } => write!(f, "circle"),
            OutputGeometry::FullSphere => write!(f, "full-sphere"),
            OutputGeometry::Other => write!(f, "other"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PureOutputScan {
    pub samples: usize,
    pub pure_count: usize,
    pub distinct_points: usize,
    pub geometry: OutputGeometry,
    /// Largest distance of a pure output from the best-fit plane.
    pub plane_residual: f64,
    /// Distance of the best-fit plane from the origin.
    pub plane_offset: f64,
}

const PURITY_GAP: f64 = 1e-9;
const POINT_MERGE: f64 = 1e-4;

/// Inputs of largest output purity: the maximizers of `‖T r + c‖²` on the
/// unit sphere. Either a single point, or (degenerate case) the sphere of
/// radius `radius` around `center` inside the span of `directions`.
#[derive(Debug, Clone, PartialEq)]
pub enum PurestInputs {
    Unique([f64; 3]),
    Degenerate { center: [f64; 3], directions: Vec<[f64; 3]>, radius: f64 },
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn axpy(acc: &mut [f64; 3], a: f64, x: &[f64; 3]) {
    for i in 0..3 {
        acc[i] += a * x[i];
    }
}

/// Solves the trust-region problem `max ‖T r + c‖²`, `‖r‖ = 1` through the
/// secular equation `Σ β_i²/(μ − a_i)² = 1` in the eigenbasis of `TᵀT`.
pub fn purest_inputs(t: &[[f64; 3]; 3], c: &[f64; 3]) -> PurestInputs {
    let ata = ComplexMatrix::from_fn(3, |i, j| C64::new((0..3).map(|k| t[k][i] * t[k][j]).sum(), 0.0));
    let e = hermitian_eigen(&ata).expect("symmetric");
    let u: Vec<[f64; 3]> = (0..3)
        .map(|i| {
            let v = e.vector(i);
            [v[0].re, v[1].re, v[2].re]
        })
        .collect();
    let a = [e.values[0], e.values[1], e.values[2]];
    let mut b = [0.0; 3];
    for i in 0..3 {
        for k in 0..3 {
            b[i] += t[k][i] * c[k];
        }
    }
    let beta: Vec<f64> = u.iter().map(|ui| dot3(ui, &b)).collect();
    let top = a[0];
    let deg_tol = 1e-9 * top.abs().max(1.0);
    let m = a.iter().filter(|&&x| x >= top - deg_tol).count();
    let beta_top = beta[..m].iter().map(|x| x * x).sum::<f64>().sqrt();
    let solution = |mu: f64| {
        let mut r = [0.0; 3];
        for i in 0..3 {
            axpy(&mut r, beta[i] / (mu - a[i]), &u[i]);
        }
        r
    };
    let norm_b = beta.iter().map(|x| x * x).sum::<f64>().sqrt();
    let g = |mu: f64| (0..3).map(|i| (beta[i] / (mu - a[i])).powi(2)).sum::<f64>();
    let mut center = [0.0; 3];
    for i in m..3 {
        axpy(&mut center, beta[i] / (top - a[i]), &u[i]);
    }
    let center_norm2 = dot3(&center, &center);
    if beta_top > 1e-12 * norm_b.max(1.0) || center_norm2 > 1.0 {
        let (mut lo, mut hi) = (top, top + norm_b.max(1e-300));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if g(mid) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let r = solution(hi);
        let n = dot3(&r, &r).sqrt();
        return PurestInputs::Unique([r[0] / n, r[1] / n, r[2] / n]);
    }
    let radius = (1.0 - center_norm2).max(0.0).sqrt();
    if radius < 1e-7 {
        let n = center_norm2.sqrt();
        return PurestInputs::Unique([center[0] / n, center[1] / n, center[2] / n]);
    }
    PurestInputs::Degenerate { center, directions: u[..m].to_vec(), radius }
}

impl PurestInputs {
    /// The maximizer closest to the unit vector `r`.
    pub fn nearest(&self, r: &[f64; 3]) -> [f64; 3] {
        match self {
            PurestInputs::Unique(x) => *x,
            PurestInputs::Degenerate { center, directions, radius } => {
                let mut w = [0.0; 3];
                for d in directions {
                    axpy(&mut w, dot3(d, r), d);
                }
                let n = dot3(&w, &w).sqrt();
                let w = if n < 1e-12 { directions[0] } else { [w[0] / n, w[1] / n, w[2] / n] };
                let mut out = *center;
                axpy(&mut out, *radius, &w);
                out
            }
        }
    }
}

/// Samples Haar-random pure inputs, moves each to the nearest input of
/// largest output purity, and classifies the outputs of purity `> 1 − 1e-9`.
pub fn pure_output_scan(s: &Superoperator, n_samples: usize, seed: u64) -> PureOutputScan {
    let (t, c) = bloch_affine(s);
    let purest = purest_inputs(&t, &c);
    let sample = PureStateSample::haar(n_samples, seed);
    let mut outputs: Vec<[f64; 3]> = Vec::new();
    for rho in sample.states() {
        let p = pauli_coordinates(&rho);
        let r = purest.nearest(&[p[1], p[2], p[3]]);
        let out = affine(&t, &c, &r);
        let purity = 0.5 * (1.0 + dot3(&out, &out));
        if purity > 1.0 - PURITY_GAP {
            outputs.push(out);
        }
    }
    let mut distinct: Vec<[f64; 3]> = Vec::new();
    for o in &outputs {
        if distinct.iter().all(|d| norm3(&[o[0] - d[0], o[1] - d[1], o[2] - d[2]]) > POINT_MERGE) {
            distinct.push(*o);
        }
    }
    let (plane_residual, plane_offset) = fit_plane(&outputs);
    let geometry = if distinct.len() <= 2 {
        OutputGeometry::AtMostTwoPoints
    } else if plane_residual < tol::SUBSPACE {
        OutputGeometry::Circle { great: plane_offset < tol::SUBSPACE }
    } else if outputs.len() as f64 >= 0.9 * n_samples as f64 {
        OutputGeometry::FullSphere
    } else {
        OutputGeometry::Other
    };
    PureOutputScan {
        samples: n_samples,
        pure_count: outputs.len(),
        distinct_points: distinct.len(),
        geometry,
        plane_residual,
        plane_offset,
    }
}

/// Total-least-squares plane through points: (max residual, |offset|).
fn fit_plane(points: &[[f64; 3]]) -> (f64, f64) {
    if points.len() < 3 {
        return (0.0, 0.0);
    }
    let n = points.len() as f64;
    let mut centroid = [0.0; 3];
    for p in points {
        for i in 0..3 {
            centroid[i] += p[i] / n;
        }
    }
    let cov = ComplexMatrix::from_fn(3, |i, j| {
        C64::new(points.iter().map(|p| (p[i] - centroid[i]) * (p[j] - centroid[j])).sum::<f64>(), 0.0)
    });
    let e = hermitian_eigen(&cov).expect("covariance is symmetric");
    let normal: Vec<f64> = e.vector(2).iter().map(|z| z.re).collect();
    let dot = |v: &[f64; 3]| v[0] * normal[0] + v[1] * normal[1] + v[2] * normal[2];
    let offset = dot(&centroid);
    let residual = points.iter().map(|p| (dot(p) - offset).abs()).fold(0.0, f64::max);
    (residual, offset.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::superop::{from_kraus, random_channel};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ket_state(k: usize) -> ComplexMatrix {
        ComplexMatrix::unit(2, k, k)
    }

    fn plus(sign: f64) -> ComplexMatrix {
        (pauli(0) + pauli(1) * sign) * 0.5
    }

    #[test]
    fn au_examples() {
        let same = AuInstance::new(plus(1.0), ket_state(0), plus(1.0), ket_state(0)).unwrap();
        let v = alberti_uhlmann(&same);
        assert!(v.feasible && v.margin >= -1e-15);

        let split = AuInstance::new(ket_state(0), ket_state(0), ket_state(0), ket_state(1)).unwrap();
        let v = alberti_uhlmann(&split);
        assert!(!v.feasible);
        assert!((split.margin_at(1.0) + 2.0).abs() < 1e-15);
        assert!(v.margin <= -2.0 + 1e-9);

        let phi = maps::disk_contraction();
        let inst = AuInstance::new(ket_state(0), ket_state(1), phi.apply(&ket_state(0)), phi.apply(&ket_state(1))).unwrap();
        assert!(alberti_uhlmann(&inst).margin >= -1e-9);
    }

    #[test]
    fn extendability_examples() {
        let ins = [ket_state(0), plus(1.0)];
        assert!(extendability(ins, ins).unwrap().feasible);
        // Outputs strictly more distinguishable than inputs.
        let mixed_ins = [ket_state(0) * 0.8 + ket_state(1) * 0.2, ket_state(0) * 0.2 + ket_state(1) * 0.8];
        let v = extendability(mixed_ins, [ket_state(0), ket_state(1)]).unwrap();
        assert!(!v.feasible);
        assert!(matches!(extendability([ket_state(0), ket_state(0)], ins), Err(Error::DegenerateSpan { .. })));
    }

    #[test]
    fn au_symmetric_under_relabelling() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let s: Vec<ComplexMatrix> = (0..4).map(|_| random_density(2, &mut rng)).collect();
            let inst = AuInstance::new(s[0], s[1], s[2], s[3]).unwrap();
            assert_eq!(alberti_uhlmann(&inst).feasible, alberti_uhlmann(&inst.swapped()).feasible);
            // margin(δ) = δ · margin'(1/δ).
            for d in [0.01, 0.3, 2.0, 50.0] {
                assert!((inst.margin_at(d) - d * inst.swapped().margin_at(1.0 / d)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn au_holds_for_channels() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let s = random_channel(&mut rng);
            let (a, b) = (random_density(2, &mut rng), random_density(2, &mut rng));
            let inst = AuInstance::new(a, b, s.apply(&a), s.apply(&b)).unwrap();
            assert!(alberti_uhlmann(&inst).margin >= -1e-9);
        }
    }

    #[test]
    fn canonical_operator_system() {
        let states = [pauli(0) * 0.5, plus(1.0), (pauli(0) + pauli(2)) * 0.5];
        let sub = canonicalize_subspace(&states).unwrap();
        assert!((sub.p - 0.5).abs() < 1e-12);
        let overlap = sub.k.hs_inner(&(pauli(3) * std::f64::consts::FRAC_1_SQRT_2)).norm();
        assert!((overlap - 1.0).abs() < 1e-12);
        assert!(sub.is_operator_system());
    }

    #[test]
    fn canonical_p_recovered() {
        let basis = crate::models::composition::rotation(0.37) * ComplexMatrix::diagonal(&[C64::new(1.0, 0.0), C64::from_polar(1.0, 0.4)]);
        let offdiag = [C64::new(0.0, 0.0), C64::new(0.1, 0.0), C64::new(0.0, 0.1)];
        let states = subspace_from_offdiagonals(0.3, offdiag, &basis);
        let sub = canonicalize_subspace(&states).unwrap();
        assert!((sub.p - 0.3).abs() < 1e-12);
        for (x, want) in sub.offdiag.iter().zip(offdiag) {
            assert!((x.norm() - want.norm()).abs() < 1e-12);
        }
        for rho in &sub.spanning_states {
            let c = sub.to_canonical(rho);
            assert!((c[(0, 0)].re - 0.3).abs() < 1e-12);
        }
        assert!(!sub.is_operator_system());

        // Diagonal 0.7 is the same subspace seen from the swapped basis.
        let sub7 = canonicalize_subspace(&subspace_from_offdiagonals(0.7, offdiag, &basis)).unwrap();
        assert!((sub7.p - 0.3).abs() < 1e-12);
    }

    #[test]
    fn canonicalize_errors() {
        assert!(matches!(canonicalize_subspace(&[ket_state(0), ket_state(1)]), Err(Error::NotThreeDimensional(_))));
        let dependent = [ket_state(0), ket_state(1), pauli(0) * 0.5];
        assert!(matches!(canonicalize_subspace(&dependent), Err(Error::NotThreeDimensional(_))));
        assert!(matches!(canonicalize_subspace(&[pauli(1), ket_state(0), ket_state(1)]), Err(Error::InvalidState(_))));
    }

    #[test]
    fn cptp_projectors_never_exist() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let sub = random_subspace(&mut rng).unwrap();
            let cert = cptp_projector_feasibility(&sub);
            assert!(!cert.cptp_feasible);
            assert_eq!(cert.grid_psd_exceptions, 0);
            assert!((cert.h_residual - 1.0).abs() < 1e-9);
            assert!(cert.pure_family_residual < 1e-12);
        }
        // Only (q1, q2) = (1, 1) gives a PSD pattern, and it is the identity's Choi matrix.
        let id = projector_choi_pattern(1.0, C64::new(0.0, 0.0), 1.0, C64::new(0.0, 0.0));
        assert!(id.max_diff(superop::choi(&Superoperator::identity()).matrix()) < 1e-15);
    }

    #[test]
    fn ptp_projector_only_at_half() {
        let basis = ComplexMatrix::identity(2);
        let offdiag = [C64::new(0.0, 0.0), C64::new(0.2, 0.1), C64::new(-0.1, 0.2)];
        for (p, want) in [(0.3, false), (0.5, true), (0.7, false)] {
            let sub = canonicalize_subspace(&subspace_from_offdiagonals(p, offdiag, &basis)).unwrap();
            let cert = ptp_projector_existence(&sub);
            assert_eq!(cert.ptp_feasible, want, "p = {p}");
            assert_eq!(cert.operator_system, want);
            if want {
                let checks = cert.checks.unwrap();
                assert!(checks.idempotent_defect < 1e-10 && checks.tp && checks.positive && !checks.cp);
                let proj = cert.projector.unwrap();
                for rho in &sub.spanning_states {
                    assert!(proj.apply(rho).max_diff(rho) < 1e-12);
                }
            } else {
                assert!(cert.candidate_min_eigenvalue < -1e-3);
            }
        }
    }

    #[test]
    fn pure_output_geometry() {
        let u = (pauli(1) * C64::new(0.0, -0.4)).expm();
        let scan = pure_output_scan(&Superoperator::conjugation(&u), 300, 1);
        assert_eq!(scan.geometry, OutputGeometry::FullSphere);

        let scan = pure_output_scan(&maps::equatorial_projector(), 300, 2);
        assert_eq!(scan.geometry, OutputGeometry::Circle { great: true });
        assert!(scan.plane_residual < 1e-6);

        let scan = pure_output_scan(&maps::disk_contraction(), 300, 3);
        assert_eq!(scan.geometry, OutputGeometry::AtMostTwoPoints);

        // Amplitude damping has one pure output, |0⟩.
        let g: f64 = 0.4;
        let k0 = ComplexMatrix::from_real(2, &[1.0, 0.0, 0.0, (1.0 - g).sqrt()]);
        let k1 = ComplexMatrix::from_real(2, &[0.0, g.sqrt(), 0.0, 0.0]);
        let ad = from_kraus(&[k0, k1], &[1.0, 1.0]).unwrap();
        let scan = pure_output_scan(&ad, 200, 4);
        assert_eq!(scan.geometry, OutputGeometry::AtMostTwoPoints);
        assert_eq!(scan.distinct_points, 1);
    }

    #[test]
    fn purest_inputs_cases() {
        let id = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert!(matches!(purest_inputs(&id, &[0.0; 3]), PurestInputs::Degenerate { ref directions, .. } if directions.len() == 3));
        // Shrink towards +z with an offset: the unique maximizer is the pole.
        let t = [[0.5, 0.0, 0.0], [0.0, 0.5, 0.0], [0.0, 0.0, 0.5]];
        let r = purest_inputs(&t, &[0.0, 0.0, 0.5]).nearest(&[1.0, 0.0, 0.0]);
        assert!((r[2] - 1.0).abs() < 1e-12);
        // Brute-force check against a dense sphere scan.
        let t = [[0.3, 0.2, 0.0], [-0.1, 0.6, 0.1], [0.0, 0.2, 0.4]];
        let c = [0.1, -0.2, 0.15];
        let f = |r: &[f64; 3]| norm3(&affine(&t, &c, r));
        let best = purest_inputs(&t, &c).nearest(&[0.0, 0.0, 1.0]);
        let mut brute: f64 = 0.0;
        for i in 0..400 {
            for j in 0..400 {
                let (th, ph) = (std::f64::consts::PI * i as f64 / 399.0, 2.0 * std::f64::consts::PI * j as f64 / 400.0);
                brute = brute.max(f(&[th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()]));
            }
        }
        assert!(f(&best) >= brute - 1e-12 && f(&best) - brute < 1e-4);
    }
}
