//! Numeric primitives shared by every integrator component: the vector-field
//! traits, a small dense matrix, and integrator configuration.

use crate::error::{OdeError, Result};

/// Right-hand side `f(t, y; theta)` of an ODE system.
///
/// `eval` must be deterministic and free of side effects. Implementations may
/// assume `y.len() == dim_state()` and `theta.len() == dim_params()`; the
/// driver checks both before integrating.
pub trait VectorField {
    fn dim_state(&self) -> usize;
    fn dim_params(&self) -> usize;
    fn eval(&self, t: f64, y: &[f64], theta: &[f64]) -> Vec<f64>;
}

/// A vector field that also supplies `df/dy` (d x d) and `df/dtheta` (d x p).
pub trait DifferentiableField: VectorField {
    fn jac_state(&self, t: f64, y: &[f64], theta: &[f64]) -> Matrix;
    fn jac_params(&self, t: f64, y: &[f64], theta: &[f64]) -> Matrix;

    /// `(f, df/dy, df/dtheta)` in one call. Override when the three share work.
    fn eval_with_jacobians(&self, t: f64, y: &[f64], theta: &[f64]) -> (Vec<f64>, Matrix, Matrix) {
        (
            self.eval(t, y, theta),
            self.jac_state(t, y, theta),
            self.jac_params(t, y, theta),
        )
    }
}

impl<F: VectorField + ?Sized> VectorField for &F {
    fn dim_state(&self) -> usize {
        (**self).dim_state()
    }
    fn dim_params(&self) -> usize {
        (**self).dim_params()
    }
    fn eval(&self, t: f64, y: &[f64], theta: &[f64]) -> Vec<f64> {
        (**self).eval(t, y, theta)
    }
}

impl<F: DifferentiableField + ?Sized> DifferentiableField for &F {
    fn jac_state(&self, t: f64, y: &[f64], theta: &[f64]) -> Matrix {
        (**self).jac_state(t, y, theta)
    }
    fn jac_params(&self, t: f64, y: &[f64], theta: &[f64]) -> Matrix {
        (**self).jac_params(t, y, theta)
    }
    fn eval_with_jacobians(&self, t: f64, y: &[f64], theta: &[f64]) -> (Vec<f64>, Matrix, Matrix) {
        (**self).eval_with_jacobians(t, y, theta)
    }
}

impl<F: VectorField + ?Sized> VectorField for Box<F> {
    fn dim_state(&self) -> usize {
        (**self).dim_state()
    }
    fn dim_params(&self) -> usize {
        (**self).dim_params()
    }
    fn eval(&self, t: f64, y: &[f64], theta: &[f64]) -> Vec<f64> {
        (**self).eval(t, y, theta)
    }
}

impl<F: DifferentiableField + ?Sized> DifferentiableField for Box<F> {
    fn jac_state(&self, t: f64, y: &[f64], theta: &[f64]) -> Matrix {
        (**self).jac_state(t, y, theta)
    }
    fn jac_params(&self, t: f64, y: &[f64], theta: &[f64]) -> Matrix {
        (**self).jac_params(t, y, theta)
    }
    fn eval_with_jacobians(&self, t: f64, y: &[f64], theta: &[f64]) -> (Vec<f64>, Matrix, Matrix) {
        (**self).eval_with_jacobians(t, y, theta)
    }
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from row-major data.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(OdeError::DimensionMismatch {
                what: "matrix data",
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `self * v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| dot(self.row(i), v))
            .collect()
    }

    /// `v^T * self`, i.e. `self^T * v`.
    pub fn vec_mul(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            for (o, &m) in out.iter_mut().zip(self.row(i)) {
                *o += vi * m;
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `y + c * x`, componentwise.
pub(crate) fn axpy(y: &[f64], c: f64, x: &[f64]) -> Vec<f64> {
    y.iter().zip(x).map(|(a, b)| a + c * b).collect()
}

/// Maximum absolute component. Panics on an empty vector.
pub fn inf_norm(v: &[f64]) -> f64 {
    assert!(!v.is_empty(), "inf_norm of an empty vector");
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

pub fn assert_finite(v: &[f64]) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(index) => Err(OdeError::NonFiniteState { index }),
        None => Ok(()),
    }
}

/// Settings for one integration over `[t0, t1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorConfig {
    pub t0: f64,
    pub t1: f64,
    /// Initial step.
    pub h0: f64,
    /// Required accuracy on the per-step error estimate.
    pub eps: f64,
    pub safety: f64,
    /// Lower bound on `h_new / h`.
    pub shrink_clamp: f64,
    /// Upper bound on `h_new / h`.
    pub grow_clamp: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub max_rejects_per_step: usize,
    /// Take every step at `h0` and accept it regardless of the estimate.
    pub fixed_step: bool,
    /// Let the sensitivity components take part in step control.
    pub error_norm_includes_sensitivity: bool,
}

impl IntegratorConfig {
    /// Defaults over `[t0, t1]`: `h0 = 0.1`, `eps = 1e-2`, safety 0.9, clamps
    /// `[0.2, 5]`, `h_min = 1e-10 (t1 - t0)`, `h_max = t1 - t0`.
    pub fn new(t0: f64, t1: f64) -> Self {
        let span = t1 - t0;
        Self {
            t0,
            t1,
            h0: 0.1_f64.min(span.abs()),
            eps: 1e-2,
            safety: 0.9,
            shrink_clamp: 0.2,
            grow_clamp: 5.0,
            h_min: 1e-10 * span,
            h_max: span,
            max_rejects_per_step: 10,
            fixed_step: false,
            error_norm_includes_sensitivity: false,
        }
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn with_h0(mut self, h0: f64) -> Self {
        self.h0 = h0;
        self
    }

    /// Fixed-step mode at step `h`.
    pub fn fixed(mut self, h: f64) -> Self {
        self.fixed_step = true;
        self.h0 = h;
        self
    }

    /// Moves the horizon and resets `h_min`/`h_max` to their span-relative defaults.
    pub fn with_horizon(mut self, t0: f64, t1: f64) -> Self {
        self.t0 = t0;
        self.t1 = t1;
        self.h_min = 1e-10 * (t1 - t0);
        self.h_max = t1 - t0;
        self.h0 = self.h0.min(self.h_max.abs());
        self
    }
}

pub fn validate_config(cfg: &IntegratorConfig) -> Result<()> {
    let all = [
        cfg.t0,
        cfg.t1,
        cfg.h0,
        cfg.eps,
        cfg.safety,
        cfg.shrink_clamp,
        cfg.grow_clamp,
        cfg.h_min,
        cfg.h_max,
    ];
    if all.iter().any(|x| x.is_nan()) {
        return Err(bound("config", "NaN value".into()));
    }
    if !(cfg.eps > 0.0) || !cfg.eps.is_finite() {
        return Err(OdeError::InvalidTolerance { eps: cfg.eps });
    }
    if !(cfg.t1 > cfg.t0) || !cfg.t0.is_finite() || !cfg.t1.is_finite() {
        return Err(OdeError::InvalidHorizon {
            t0: cfg.t0,
            t1: cfg.t1,
        });
    }
    if !(cfg.h0 > 0.0) {
        return Err(bound("h0", format!("must be > 0 (got {})", cfg.h0)));
    }
    if !(cfg.safety > 0.0) {
        return Err(bound("safety", format!("must be > 0 (got {})", cfg.safety)));
    }
    if !(cfg.shrink_clamp > 0.0 && cfg.shrink_clamp < 1.0) {
        return Err(bound(
            "shrink_clamp",
            format!("must lie in (0, 1) (got {})", cfg.shrink_clamp),
        ));
    }
    if !(cfg.grow_clamp > 1.0) || !cfg.grow_clamp.is_finite() {
        return Err(bound(
            "grow_clamp",
            format!("must be > 1 (got {})", cfg.grow_clamp),
        ));
    }
    if !(cfg.h_min > 0.0) {
        return Err(bound("h_min", format!("must be > 0 (got {})", cfg.h_min)));
    }
    if cfg.h_min > cfg.h0 {
        return Err(bound(
            "h_min",
            format!("h_min = {} exceeds h0 = {}", cfg.h_min, cfg.h0),
        ));
    }
    if cfg.h0 > cfg.h_max {
        return Err(bound(
            "h_max",
            format!("h0 = {} exceeds h_max = {}", cfg.h0, cfg.h_max),
        ));
    }
    Ok(())
}

fn bound(field: &'static str, detail: String) -> OdeError {
    OdeError::InvalidStepBounds { field, detail }
}
