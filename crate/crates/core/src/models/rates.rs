// Copyright 2026 The qdiv Authors
// SPDX-License-Identifier: Apache-2.0

//! Named time-dependent rate functions.
//!
//! Every built-in has a closed-form integral `∫₀ᵗ f`. A [`RateFn::BlowUp`]
//! rate `a/(t* − t)` has an integral that diverges at `t*`; past that point
//! the integral is `+∞` and the rate itself cannot be evaluated.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum RateFn {
    Constant(f64),
    /// `before` on `[0, at)`, `after` from `at` on.
    Step { before: f64, after: f64, at: f64 },
    /// `amp · tanh(t)`.
    Tanh { amp: f64 },
    /// `amp · sin(freq · t)`.
    Sin { amp: f64, freq: f64 },
    /// `Σ c_k t^k`.
    Poly(Vec<f64>),
    /// `amp / (at − t)` with `amp > 0`; the integral diverges at `at`.
    BlowUp { amp: f64, at: f64 },
}

impl RateFn {
    pub fn zero() -> Self {
        RateFn::Constant(0.0)
    }

    pub fn neg_tanh() -> Self {
        RateFn::Tanh { amp: -1.0 }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            RateFn::Constant(c) => *c == 0.0,
            RateFn::Step { before, after, .. } => *before == 0.0 && *after == 0.0,
            RateFn::Tanh { amp } | RateFn::Sin { amp, .. } => *amp == 0.0,
            RateFn::Poly(c) => c.iter().all(|&x| x == 0.0),
            RateFn::BlowUp { .. } => false,
        }
    }

    /// Value of a constant rate, if the rate is constant.
    pub fn as_constant(&self) -> Option<f64> {
        match self {
            RateFn::Constant(c) => Some(*c),
            RateFn::Step { before, after, .. } if before == after => Some(*before),
            RateFn::Poly(c) if c.iter().skip(1).all(|&x| x == 0.0) => Some(c.first().copied().unwrap_or(0.0)),
            _ if self.is_zero() => Some(0.0),
            _ => None,
        }
    }

    pub fn blow_up_time(&self) -> Option<f64> {
        match self {
            RateFn::BlowUp { at, .. } => Some(*at),
            _ => None,
        }
    }

    pub fn value(&self, t: f64) -> Result<f64> {
        Ok(match self {
            RateFn::Constant(c) => *c,
            RateFn::Step { before, after, at } => {
                if t < *at {
                    *before
                } else {
                    *after
                }
            }
            RateFn::Tanh { amp } => amp * t.tanh(),
            RateFn::Sin { amp, freq } => amp * (freq * t).sin(),
            RateFn::Poly(c) => c.iter().rev().fold(0.0, |acc, &ck| acc * t + ck),
            RateFn::BlowUp { amp, at } => {
                if t >= *at {
                    return Err(Error::RateBlowUp { t: *at });
                }
                amp / (at - t)
            }
        })
    }

    /// `∫₀ᵗ f(τ) dτ`, `+∞` once a blow-up time has been reached.
    pub fn integral(&self, t: f64) -> f64 {
        match self {
            RateFn::Constant(c) => c * t,
            RateFn::Step { before, after, at } => before * t.min(*at) + after * (t - at).max(0.0),
            // ln cosh t, written to stay finite for large t.
            RateFn::Tanh { amp } => {
                let a = t.abs();
                amp * (a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2)
            }
            RateFn::Sin { amp, freq } => {
                if *freq == 0.0 {
                    0.0
                } else {
                    // 1 − cos(ωt) = 2 sin²(ωt/2), accurate for small ωt.
                    let s = (0.5 * freq * t).sin();
                    amp * 2.0 * s * s / freq
                }
            }
            RateFn::Poly(c) => c
                .iter()
                .enumerate()
                .rev()
                .fold(0.0, |acc, (k, &ck)| acc * t + ck / (k as f64 + 1.0))
                * t,
            RateFn::BlowUp { amp, at } => {
                if t >= *at {
                    f64::INFINITY
                } else {
                    -amp * (-t / at).ln_1p()
                }
            }
        }
    }

    fn validate(self) -> Result<Self> {
        match &self {
            RateFn::BlowUp { amp, at } if !(*amp > 0.0 && *at > 0.0) => {
                Err(Error::InvalidParameter(format!("blowup needs amp > 0 and at > 0, got ({amp}, {at})")))
            }
            RateFn::Poly(c) if c.is_empty() => Err(Error::InvalidParameter("poly needs at least one coefficient".into())),
            _ => Ok(self),
        }
    }
}

impl fmt::Display for RateFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RateFn::Constant(c) => write!(f, "const({c:?})"),
            RateFn::Step { before, after, at } => write!(f, "step({before:?},{after:?},{at:?})"),
            RateFn::Tanh { amp } if *amp == -1.0 => write!(f, "neg_tanh"),
            RateFn::Tanh { amp } => write!(f, "tanh({amp:?})"),
            RateFn::Sin { amp, freq } => write!(f, "sin({amp:?},{freq:?})"),
            RateFn::Poly(c) => {
                let parts: Vec<String> = c.iter().map(|x| format!("{x:?}")).collect();
                write!(f, "poly({})", parts.join(","))
            }
            RateFn::BlowUp { amp, at } => write!(f, "blowup({amp:?},{at:?})"),
        }
    }
}

/// Splits `name(a,b,...)` into the name and its numeric arguments.
pub(crate) fn parse_call(s: &str) -> Result<(String, Vec<f64>)> {
    let s = s.trim();
    let bad = || Error::InvalidParameter(format!("cannot parse `{s}`"));
    let Some(open) = s.find('(') else {
        if s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') && !s.is_empty() {
            return Ok((s.to_string(), Vec::new()));
        }
        return Err(bad());
    };
    if !s.ends_with(')') {
        return Err(bad());
    }
    let name = s[..open].trim().to_string();
    let inner = &s[open + 1..s.len() - 1];
    let args = if inner.trim().is_empty() {
        Vec::new()
    } else {
        inner
            .split(',')
            .map(|a| a.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?
    };
    if args.iter().any(|a| !a.is_finite()) {
        return Err(bad());
    }
    Ok((name, args))
}

impl FromStr for RateFn {
    type Err = Error;

    /// Accepted forms: `zero`, `const(c)`, a bare number, `step(a,b,t)`,
    /// `tanh(a)`, `neg_tanh`, `sin(a,w)`, `poly(c0,c1,..)`, `blowup(a,t)`.
    fn from_str(s: &str) -> Result<Self> {
        if let Ok(c) = s.trim().parse::<f64>() {
            if c.is_finite() {
                return Ok(RateFn::Constant(c));
            }
        }
        if s.trim() == "-tanh" {
            return Ok(RateFn::neg_tanh());
        }
        let (name, args) = parse_call(s)?;
        let arity = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("`{name}` takes {n} argument(s), got {}", args.len())))
            }
        };
        let rate = match name.as_str() {
            "zero" => {
                arity(0)?;
                RateFn::zero()
            }
            "const" => {
                arity(1)?;
                RateFn::Constant(args[0])
            }
            "step" => {
                arity(3)?;
                RateFn::Step { before: args[0], after: args[1], at: args[2] }
            }
            "tanh" => {
                arity(1)?;
                RateFn::Tanh { amp: args[0] }
            }
            "neg_tanh" => {
                arity(0)?;
                RateFn::neg_tanh()
            }
            "sin" => {
                arity(2)?;
                RateFn::Sin { amp: args[0], freq: args[1] }
            }
            "poly" => RateFn::Poly(args),
            "blowup" => {
                arity(2)?;
                RateFn::BlowUp { amp: args[0], at: args[1] }
            }
            other => return Err(Error::InvalidParameter(format!("unknown rate function `{other}`"))),
        };
        rate.validate()
    }
}
