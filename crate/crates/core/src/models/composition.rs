// Copyright 2026 The qdiv Authors
// SPDX-License-Identifier: Apache-2.0

//! Rotating dephasing: `Λ_t = U_t ∘ Ψ_t` with `U_t = e^{−iσ2 t}` and
//! `Ψ_t = (1 − p(t)) id + p(t) Φ`, `Φ` the full dephasing channel.

use std::fmt;
use std::str::FromStr;

use super::rates::parse_call;
use super::Dynamics;
use crate::error::{Error, Result};
use crate::linalg::{pauli, ComplexMatrix, C64};
use crate::superop::{maps, Superoperator};
use crate::tol;

/// Mixing profile `p(t)` with `p(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum MixingProfile {
    /// `t/t*` up to `t*`, then 1.
    Ramp { t_star: f64 },
    /// `sin²(πt/2t*)` up to `t*`, then 1.
    Smooth { t_star: f64 },
    /// `s + depth·sin(2πs)/2π` with `s = t/t*`, then 1. Decreasing on part
    /// of `(0, t*)` when `depth > 1`.
    Wiggle { t_star: f64, depth: f64 },
    /// `amp · sin²(ωt)` with `amp < 1`; never reaches 1.
    Oscillating { amp: f64, omega: f64 },
    /// `Σ c_k t^k`; derivative by central difference.
    Poly(Vec<f64>),
}

impl MixingProfile {
    pub fn t_star(&self) -> Option<f64> {
        match self {
            MixingProfile::Ramp { t_star } | MixingProfile::Smooth { t_star } | MixingProfile::Wiggle { t_star, .. } => {
                Some(*t_star)
            }
            _ => None,
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        use std::f64::consts::PI;
        if let Some(ts) = self.t_star() {
            if t >= ts {
                return 1.0;
            }
        }
        match self {
            MixingProfile::Ramp { t_star } => t / t_star,
            MixingProfile::Smooth { t_star } => (0.5 * PI * t / t_star).sin().powi(2),
            MixingProfile::Wiggle { t_star, depth } => {
                let s = t / t_star;
                s + depth * (2.0 * PI * s).sin() / (2.0 * PI)
            }
            MixingProfile::Oscillating { amp, omega } => amp * (omega * t).sin().powi(2),
            MixingProfile::Poly(c) => c.iter().rev().fold(0.0, |acc, &ck| acc * t + ck),
        }
    }

    /// `ṗ(t)`; one-sided from the left at `t*`.
    pub fn derivative(&self, t: f64) -> f64 {
        use std::f64::consts::PI;
        if let Some(ts) = self.t_star() {
            if t > ts {
                return 0.0;
            }
        }
        match self {
            MixingProfile::Ramp { t_star } => 1.0 / t_star,
            MixingProfile::Smooth { t_star } => 0.5 * PI / t_star * (PI * t / t_star).sin(),
            MixingProfile::Wiggle { t_star, depth } => (1.0 + depth * (2.0 * PI * t / t_star).cos()) / t_star,
            MixingProfile::Oscillating { amp, omega } => amp * omega * (2.0 * omega * t).sin(),
            MixingProfile::Poly(_) => {
                let h = tol::H_RATE;
                (self.value(t + h) - self.value(t - h)) / (2.0 * h)
            }
        }
    }

    fn validate(self) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        match &self {
            MixingProfile::Ramp { t_star } | MixingProfile::Smooth { t_star } | MixingProfile::Wiggle { t_star, .. }
                if !(*t_star > 0.0) =>
            {
                bad(format!("t_star must be positive, got {t_star}"))
            }
            MixingProfile::Wiggle { depth, .. } if !(0.0..=2.0).contains(depth) => {
                bad(format!("wiggle depth must lie in [0, 2], got {depth}"))
            }
            MixingProfile::Oscillating { amp, .. } if !(0.0..1.0).contains(amp) => {
                bad(format!("oscillation amplitude must lie in [0, 1), got {amp}"))
            }
            MixingProfile::Poly(c) if c.first().copied().unwrap_or(0.0) != 0.0 => bad("poly mixing needs p(0) = 0".into()),
            _ => Ok(self),
        }
    }
}

impl fmt::Display for MixingProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MixingProfile::Ramp { t_star } => write!(f, "ramp({t_star:?})"),
            MixingProfile::Smooth { t_star } => write!(f, "smooth({t_star:?})"),
            MixingProfile::Wiggle { t_star, depth } => write!(f, "wiggle({t_star:?},{depth:?})"),
            MixingProfile::Oscillating { amp, omega } => write!(f, "osc({amp:?},{omega:?})"),
            MixingProfile::Poly(c) => {
                let parts: Vec<String> = c.iter().map(|x| format!("{x:?}")).collect();
                write!(f, "poly({})", parts.join(","))
            }
        }
    }
}

impl FromStr for MixingProfile {
    type Err = Error;

    /// `ramp(t*)`, `smooth(t*)`, `wiggle(t*,depth)`, `osc(amp,omega)`, `poly(c0,..)`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, a) = parse_call(s)?;
        let arity = |n: usize| {
            if a.len() == n {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("`{name}` takes {n} argument(s), got {}", a.len())))
            }
        };
        let p = match name.as_str() {
            "ramp" => {
                arity(1)?;
                MixingProfile::Ramp { t_star: a[0] }
            }
            "smooth" => {
                arity(1)?;
                MixingProfile::Smooth { t_star: a[0] }
            }
            "wiggle" => {
                arity(2)?;
                MixingProfile::Wiggle { t_star: a[0], depth: a[1] }
            }
            "osc" => {
                arity(2)?;
                MixingProfile::Oscillating { amp: a[0], omega: a[1] }
            }
            "poly" => MixingProfile::Poly(a.clone()),
            other => return Err(Error::InvalidParameter(format!("unknown mixing profile `{other}`"))),
        };
        p.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompositionModel {
    pub profile: MixingProfile,
}

/// `e^{−iσ2 t}`, a real rotation.
pub fn rotation(t: f64) -> ComplexMatrix {
    let (s, c) = t.sin_cos();
    ComplexMatrix::from_real(2, &[c, -s, s, c])
}

/// `U_t σ3 U_t† = cos 2t σ3 + sin 2t σ1`.
pub fn rotating_axis(t: f64) -> ComplexMatrix {
    let (s, c) = (2.0 * t).sin_cos();
    ComplexMatrix::from_real(2, &[c, s, s, -c])
}

/// `U_t ∘ Φ ∘ U_t⁻¹`.
pub fn rotated_dephasing(t: f64) -> Superoperator {
    let u = Superoperator::conjugation(&rotation(t));
    let u_inv = Superoperator::conjugation(&rotation(-t));
    u.compose(&maps::z_axis_projector()).compose(&u_inv)
}

impl CompositionModel {
    pub fn new(profile: MixingProfile) -> Self {
        Self { profile }
    }

    fn mixing(&self, t: f64) -> Result<f64> {
        let p = self.profile.value(t);
        if !(-1e-12..=1.0 + 1e-12).contains(&p) {
            return Err(Error::InvalidParameter(format!("mixing p({t}) = {p} outside [0, 1]")));
        }
        Ok(p.clamp(0.0, 1.0))
    }

    pub fn dephasing_part(&self, t: f64) -> Result<Superoperator> {
        let p = self.mixing(t)?;
        Ok(Superoperator::identity().scale(1.0 - p) + maps::z_axis_projector().scale(p))
    }

    pub fn map_at(&self, t: f64) -> Result<Superoperator> {
        Ok(Superoperator::conjugation(&rotation(t)).compose(&self.dephasing_part(t)?))
    }

    /// `ṗ/(1 − p)`.
    pub fn prefactor(&self, t: f64) -> Result<f64> {
        let p = self.mixing(t)?;
        if p >= 1.0 - 1e-15 {
            return Err(Error::GeneratorSingular { t });
        }
        Ok(self.profile.derivative(t) / (1.0 - p))
    }

    /// `−i[σ2, ·] + ṗ/(1 − p)(U_t Φ U_t⁻¹ − id)`, defined while `p(t) < 1`.
    pub fn generator_at(&self, t: f64) -> Result<Superoperator> {
        let k = self.prefactor(t)?;
        let s2 = pauli(2);
        let i = C64::new(0.0, 1.0);
        let rotation = Superoperator::from_action(|m| (s2 * *m - *m * s2) * -i);
        Ok(rotation + (rotated_dephasing(t) - Superoperator::identity()).scale(k))
    }
}

impl Dynamics for CompositionModel {
    fn generator(&self, t: f64) -> Result<Superoperator> {
        self.generator_at(t)
    }

    fn map(&self, t: f64) -> Result<Superoperator> {
        self.map_at(t)
    }

    fn singular_times(&self) -> Vec<f64> {
        match &self.profile {
            MixingProfile::Poly(c) => {
                let mut q = c.clone();
                q[0] -= 1.0;
                positive_roots(&q)
            }
            p => p.t_star().into_iter().collect(),
        }
    }
}

fn horner(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ck| acc * t + ck)
}

/// Sorted real roots on `t > 0` of `Σ c_k t^k`, double roots included.
/// Roots of the derivative split the half-line into monotone pieces; each
/// piece holds at most one simple root, and a critical point where the
/// polynomial vanishes is a touching root.
fn positive_roots(c: &[f64]) -> Vec<f64> {
    let n = match c.iter().rposition(|&x| x != 0.0) {
        Some(n) if n > 0 => n,
        _ => return Vec::new(),
    };
    let c = &c[..=n];
    let scale = c.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let bound = 1.0 + c[..n].iter().fold(0.0f64, |m, x| m.max((x / c[n]).abs()));
    let deriv: Vec<f64> = c.iter().enumerate().skip(1).map(|(k, x)| k as f64 * x).collect();
    let crit = positive_roots(&deriv);
    let mut knots = vec![0.0];
    knots.extend(crit.iter().copied().filter(|&x| x < bound));
    knots.push(bound);
    let mut roots = Vec::new();
    for &x in &crit {
        if horner(c, x).abs() <= 1e-12 * scale {
            roots.push(x);
        }
    }
    for w in knots.windows(2) {
        let (mut a, mut b) = (w[0], w[1]);
        let (fa, fb) = (horner(c, a), horner(c, b));
        if fa == 0.0 && a > 0.0 {
            roots.push(a);
        }
        if fa * fb >= 0.0 {
            continue;
        }
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if (horner(c, m) > 0.0) == (fa > 0.0) {
                a = m;
            } else {
                b = m;
            }
        }
        roots.push(0.5 * (a + b));
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * y.abs().max(1.0));
    roots
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::superop::rank_profile;

    #[test]
    fn identity_at_zero_and_axis() {
        let m = CompositionModel::new(MixingProfile::Ramp { t_star: 1.0 });
        assert!(m.map_at(0.0).unwrap().max_diff(&Superoperator::identity()) < 1e-15);
        let u = rotation(0.4);
        assert!((u * pauli(3) * u.dagger()).max_diff(&rotating_axis(0.4)) < 1e-15);
    }

    #[test]
    fn kernel_and_image_after_t_star() {
        let m = CompositionModel::new(MixingProfile::Smooth { t_star: 1.0 });
        for t in [1.0, 1.3, 2.0] {
            let profile = rank_profile(&m.map_at(t).unwrap(), tol::RANK).unwrap();
            assert_eq!(profile.rank, 2);
            for k in [pauli(1), pauli(2)] {
                assert!(m.map_at(t).unwrap().apply(&k).max_abs() < 1e-15);
            }
            assert!(profile.image_residual(&pauli(0)) < 1e-12);
            assert!(profile.image_residual(&rotating_axis(t)) < 1e-12);
        }
        let a = rank_profile(&m.map_at(1.0).unwrap(), tol::RANK).unwrap();
        assert!(a.image_residual(&rotating_axis(1.3)) > 0.1);
    }

    #[test]
    fn prefactor_closed_form_vs_difference() {
        let t_star = 2.0;
        let m = CompositionModel::new(MixingProfile::Poly(vec![0.0, 1.0 / (2.0 * t_star)]));
        for t in [0.01, 0.1, 0.5] {
            let closed = (1.0 / (2.0 * t_star)) / (1.0 - t / (2.0 * t_star));
            assert!((m.prefactor(t).unwrap() - closed).abs() < 1e-8);
        }
    }

    #[test]
    fn generator_properties() {
        let m = CompositionModel::new(MixingProfile::Smooth { t_star: 1.0 });
        for t in [0.1, 0.5, 0.9] {
            let l = m.generator_at(t).unwrap();
            assert!(l.apply(&pauli(0)).max_abs() < 1e-14);
            let h = 1e-5;
            let d = (m.map_at(t + h).unwrap() - m.map_at(t - h).unwrap()).scale(0.5 / h);
            assert!(d.max_diff(&l.compose(&m.map_at(t).unwrap())) < 1e-8);
        }
        assert_eq!(m.generator_at(1.0), Err(Error::GeneratorSingular { t: 1.0 }));
    }

    #[test]
    fn polynomial_crossings() {
        assert_eq!(positive_roots(&[-1.0, 2.0, -1.0]), vec![1.0]);
        let r = positive_roots(&[2.0, -3.0, 1.0]);
        assert!(r.len() == 2 && (r[0] - 1.0).abs() < 1e-14 && (r[1] - 2.0).abs() < 1e-14);
        assert_eq!(positive_roots(&[-0.5, 1.0]), vec![0.5]);
        assert!(positive_roots(&[1.0, 0.0, 1.0]).is_empty());
        assert!(positive_roots(&[1.0, 1.0]).is_empty());
        let m = CompositionModel::new(MixingProfile::Poly(vec![0.0, 2.0, -1.0]));
        assert_eq!(m.singular_times(), vec![1.0]);
    }

    #[test]
    fn profile_parsing_and_ranges() {
        for s in ["ramp(1.5)", "smooth(2.0)", "wiggle(1.0,2.0)", "osc(0.5,3.0)", "poly(0.0,0.25)"] {
            let p: MixingProfile = s.parse().unwrap();
            assert_eq!(p.to_string().parse::<MixingProfile>().unwrap(), p);
            for k in 0..=200 {
                let v = p.value(k as f64 * 0.01);
                assert!((0.0..=1.0).contains(&v), "{s} at {k}: {v}");
            }
        }
        assert!("osc(1.5,1)".parse::<MixingProfile>().is_err());
        assert!("poly(0.1,1)".parse::<MixingProfile>().is_err());
        let w = MixingProfile::Wiggle { t_star: 1.0, depth: 2.0 };
        assert!(w.derivative(0.5) < 0.0);
    }
}
