// Copyright 2026 The qdiv Authors
// SPDX-License-Identifier: Apache-2.0

//! Adaptive Simpson quadrature.

use crate::error::{Error, Result};
use crate::tol;

const MAX_DEPTH: u32 = 40;

/// `∫ₐᵇ f` to absolute tolerance `abs_tol`.
///
/// Fails with [`Error::QuadratureFailure`] when the accumulated error
/// estimate exceeds [`tol::QUAD_FAIL`] or the integrand is not finite.
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, abs_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut err = 0.0;
    let value = refine(&f, a, b, fa, fm, fb, whole, abs_tol, MAX_DEPTH, &mut err);
    if !value.is_finite() || !err.is_finite() {
        return Err(Error::QuadratureFailure { estimate: f64::INFINITY });
    }
    if err > tol::QUAD_FAIL {
        return Err(Error::QuadratureFailure { estimate: err });
    }
    Ok(value)
}

#[allow(clippy::too_many_arguments)]
fn refine(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    abs_tol: f64,
    depth: u32,
    err: &mut f64,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * abs_tol || !delta.is_finite() {
        *err += delta.abs() / 15.0;
        return left + right + delta / 15.0;
    }
    refine(f, a, m, fa, flm, fm, left, 0.5 * abs_tol, depth - 1, err)
        + refine(f, m, b, fm, frm, fb, right, 0.5 * abs_tol, depth - 1, err)
}
