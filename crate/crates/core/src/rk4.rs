//! One classical RK4 step together with its quadratic slope model.
//!
//! The four stage slopes define `p(tau) = a2 tau^2 + a1 tau + a0` on the
//! normalized step `tau = (t - t_n) / h`, with
//!
//! ```text
//! p(0) = k1,  p'(0) = -3 k1 + 2 (k2 + k3) - k4,  p(1/2) = (k2 + k3) / 2,  p(1) = k4
//! ```
//!
//! Integrating `h p` gives the cubic `q(tau)`, whose endpoint `q(1)` is the
//! ordinary RK4 update. Comparing `p(1)` against `f(t_n + h, q(1))` yields
//! the error estimate; that evaluation is kept so the next step can use it as
//! its `k1`.

use crate::error::Result;
use crate::ode::{assert_finite, axpy, inf_norm, VectorField};

#[derive(Debug, Clone, PartialEq)]
pub struct StageSlopes {
    pub k1: Vec<f64>,
    pub k2: Vec<f64>,
    pub k3: Vec<f64>,
    pub k4: Vec<f64>,
}

/// Coefficients of `p(tau) = a2 tau^2 + a1 tau + a0`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadCoeffs {
    pub a0: Vec<f64>,
    pub a1: Vec<f64>,
    pub a2: Vec<f64>,
}

impl QuadCoeffs {
    pub fn dim(&self) -> usize {
        self.a0.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub y_next: Vec<f64>,
    pub coeffs: QuadCoeffs,
    /// `p(1) - f(t_n + h, q(1))`.
    pub e1: Vec<f64>,
    /// `h * |e1|_inf` over the controlled components.
    pub err: f64,
    /// `f(t_n + h, q(1))`, the next step's `k1`.
    pub f_end: Vec<f64>,
}

/// Evaluates the RK4 stages. When `k1_reuse` is given it must equal
/// `f(t_n, y_n)`; the call then costs three field evaluations instead of four.
pub fn rk4_stages<F: VectorField + ?Sized>(
    field: &F,
    t_n: f64,
    y_n: &[f64],
    theta: &[f64],
    h: f64,
    k1_reuse: Option<&[f64]>,
) -> Result<StageSlopes> {
    let k1 = match k1_reuse {
        Some(k) => k.to_vec(),
        None => field.eval(t_n, y_n, theta),
    };
    assert_finite(&k1)?;
    let half = 0.5 * h;
    let k2 = field.eval(t_n + half, &axpy(y_n, half, &k1), theta);
    assert_finite(&k2)?;
    let k3 = field.eval(t_n + half, &axpy(y_n, half, &k2), theta);
    assert_finite(&k3)?;
    let k4 = field.eval(t_n + h, &axpy(y_n, h, &k3), theta);
    assert_finite(&k4)?;
    Ok(StageSlopes { k1, k2, k3, k4 })
}

/// `y_n + h/6 (k1 + 2 (k2 + k3) + k4)`.
pub fn rk4_combine(y_n: &[f64], h: f64, s: &StageSlopes) -> Vec<f64> {
    let c = h / 6.0;
    (0..y_n.len())
        .map(|i| y_n[i] + c * (s.k1[i] + 2.0 * (s.k2[i] + s.k3[i]) + s.k4[i]))
        .collect()
}

pub fn quad_coeffs(s: &StageSlopes) -> QuadCoeffs {
    let d = s.k1.len();
    let mut a1 = Vec::with_capacity(d);
    let mut a2 = Vec::with_capacity(d);
    for i in 0..d {
        let mid = s.k2[i] + s.k3[i];
        a1.push(-3.0 * s.k1[i] + 2.0 * mid - s.k4[i]);
        a2.push(2.0 * (s.k1[i] - mid + s.k4[i]));
    }
    QuadCoeffs {
        a0: s.k1.clone(),
        a1,
        a2,
    }
}

/// The slope model `p(tau)`.
pub fn eval_p(c: &QuadCoeffs, tau: f64) -> Vec<f64> {
    (0..c.dim())
        .map(|i| (c.a2[i] * tau + c.a1[i]) * tau + c.a0[i])
        .collect()
}

/// The cubic dense output `q(tau) = y_n + h tau (a2 tau^2 / 3 + a1 tau / 2 + a0)`.
pub fn eval_q(c: &QuadCoeffs, y_n: &[f64], h: f64, tau: f64) -> Vec<f64> {
    let ht = h * tau;
    (0..c.dim())
        .map(|i| {
            y_n[i] + ht * ((c.a2[i] / 3.0 * tau + 0.5 * c.a1[i]) * tau + c.a0[i])
        })
        .collect()
}

/// Returns `(err, e1, f_end)` for a step whose RK4 result is `y_next`. One
/// field evaluation.
pub fn error_estimate<F: VectorField + ?Sized>(
    field: &F,
    t_n: f64,
    h: f64,
    c: &QuadCoeffs,
    theta: &[f64],
    y_next: &[f64],
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    error_estimate_over(field, t_n, h, c, theta, y_next, c.dim())
}

/// As [`error_estimate`], with the norm taken over the first `err_dims`
/// components only.
pub(crate) fn error_estimate_over<F: VectorField + ?Sized>(
    field: &F,
    t_n: f64,
    h: f64,
    c: &QuadCoeffs,
    theta: &[f64],
    y_next: &[f64],
    err_dims: usize,
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let f_end = field.eval(t_n + h, y_next, theta);
    assert_finite(&f_end)?;
    let p1 = eval_p(c, 1.0);
    let e1: Vec<f64> = p1.iter().zip(&f_end).map(|(p, f)| p - f).collect();
    let err = if err_dims == 0 {
        0.0
    } else {
        h * inf_norm(&e1[..err_dims])
    };
    Ok((err, e1, f_end))
}

/// Stages, update, coefficients and error estimate for one step.
pub(crate) fn full_step<F: VectorField + ?Sized>(
    field: &F,
    t_n: f64,
    y_n: &[f64],
    theta: &[f64],
    h: f64,
    k1_reuse: Option<&[f64]>,
    err_dims: usize,
) -> Result<StepOutcome> {
    let stages = rk4_stages(field, t_n, y_n, theta, h, k1_reuse)?;
    let y_next = rk4_combine(y_n, h, &stages);
    assert_finite(&y_next)?;
    let coeffs = quad_coeffs(&stages);
    let (err, e1, f_end) = error_estimate_over(field, t_n, h, &coeffs, theta, &y_next, err_dims)?;
    Ok(StepOutcome {
        y_next,
        coeffs,
        e1,
        err,
        f_end,
    })
}
