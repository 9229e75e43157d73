//! Forward sensitivities: `S = dy/dtheta` is advanced with the state by the
//! same adaptive RK4 steps, so the loss gradient at the horizon is
//! `dL/dtheta = (dL/dy)^T S(t1)`. Nothing is stored for a backward pass.
//!
//! The augmented state is `[y, vec(S)]`, with `S` (d x p) flattened
//! column-major after `y`:
//!
//! ```text
//! dy/dt = f(t, y; theta)
//! dS/dt = (df/dy) S + df/dtheta,    S(t0) = 0
//! ```

use crate::driver::{integrate, integrate_controlled, Trajectory};
use crate::error::{OdeError, Result};
use crate::ode::{DifferentiableField, IntegratorConfig, Matrix, VectorField};

/// The state/sensitivity system of a differentiable field, with `theta`
/// frozen into it. Has no parameters of its own.
pub struct AugmentedField<F> {
    inner: F,
    theta: Vec<f64>,
}

pub fn build_augmented_field<F: DifferentiableField>(
    field: F,
    theta: &[f64],
) -> Result<AugmentedField<F>> {
    if theta.len() != field.dim_params() {
        return Err(OdeError::DimensionMismatch {
            what: "parameter vector",
            expected: field.dim_params(),
            found: theta.len(),
        });
    }
    Ok(AugmentedField {
        inner: field,
        theta: theta.to_vec(),
    })
}

impl<F: DifferentiableField> AugmentedField<F> {
    pub fn state_dim(&self) -> usize {
        self.inner.dim_state()
    }

    pub fn param_dim(&self) -> usize {
        self.theta.len()
    }

    /// Packs `y` and `S` into one augmented vector.
    pub fn flatten(&self, y: &[f64], s: &Matrix) -> Vec<f64> {
        let (d, p) = (self.state_dim(), self.param_dim());
        let mut out = Vec::with_capacity(d + d * p);
        out.extend_from_slice(y);
        for j in 0..p {
            for i in 0..d {
                out.push(s[(i, j)]);
            }
        }
        out
    }

    /// Inverse of [`flatten`](Self::flatten).
    pub fn unflatten(&self, z: &[f64]) -> (Vec<f64>, Matrix) {
        let (d, p) = (self.state_dim(), self.param_dim());
        let mut s = Matrix::zeros(d, p);
        for j in 0..p {
            for i in 0..d {
                s[(i, j)] = z[d + j * d + i];
            }
        }
        (z[..d].to_vec(), s)
    }
}

impl<F: DifferentiableField> VectorField for AugmentedField<F> {
    fn dim_state(&self) -> usize {
        let d = self.state_dim();
        d + d * self.param_dim()
    }

    fn dim_params(&self) -> usize {
        0
    }

    fn eval(&self, t: f64, z: &[f64], _theta: &[f64]) -> Vec<f64> {
        let (d, p) = (self.state_dim(), self.param_dim());
        let y = &z[..d];
        if p == 0 {
            return self.inner.eval(t, y, &self.theta);
        }
        let (mut out, jy, jp) = self.inner.eval_with_jacobians(t, y, &self.theta);
        out.reserve(d * p);
        for j in 0..p {
            let col = &z[d + j * d..d + (j + 1) * d];
            for i in 0..d {
                let row = jy.row(i);
                let mut acc = jp[(i, j)];
                for k in 0..d {
                    acc += row[k] * col[k];
                }
                out.push(acc);
            }
        }
        out
    }
}

/// Result of a state + sensitivity integration.
#[derive(Debug, Clone)]
pub struct SensitivityRun {
    /// Trajectory over the flattened augmented state.
    pub trajectory: Trajectory,
    pub y_final: Vec<f64>,
    /// `dy(t1)/dtheta`, d x p.
    pub sens: Matrix,
}

/// Integrates state and sensitivities from `S(t0) = 0`. Step control uses the
/// state components unless `cfg.error_norm_includes_sensitivity` is set.
pub fn integrate_with_sensitivity<F: DifferentiableField>(
    field: F,
    theta: &[f64],
    y0: &[f64],
    cfg: &IntegratorConfig,
) -> Result<SensitivityRun> {
    let d = field.dim_state();
    if y0.len() != d {
        return Err(OdeError::DimensionMismatch {
            what: "initial state",
            expected: d,
            found: y0.len(),
        });
    }
    let aug = build_augmented_field(field, theta)?;
    let z0 = aug.flatten(y0, &Matrix::zeros(d, aug.param_dim()));
    let err_dims = if cfg.error_norm_includes_sensitivity {
        aug.dim_state()
    } else {
        d
    };
    let trajectory = integrate_controlled(&aug, &[], &z0, cfg, err_dims)?;
    let (y_final, sens) = aug.unflatten(&trajectory.y_final);
    Ok(SensitivityRun {
        trajectory,
        y_final,
        sens,
    })
}

/// `dLdy^T S`, length p.
pub fn loss_gradient(sens: &Matrix, dldy: &[f64]) -> Result<Vec<f64>> {
    if dldy.len() != sens.rows() {
        return Err(OdeError::DimensionMismatch {
            what: "loss gradient",
            expected: sens.rows(),
            found: dldy.len(),
        });
    }
    Ok(sens.vec_mul(dldy))
}

/// Scalar loss on the terminal state.
pub trait Loss {
    fn loss(&self, y: &[f64], target: &[f64]) -> f64;
    fn grad_y(&self, y: &[f64], target: &[f64]) -> Vec<f64>;
}

/// `0.5 |y - target|^2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SquaredError;

impl Loss for SquaredError {
    fn loss(&self, y: &[f64], target: &[f64]) -> f64 {
        0.5 * y
            .iter()
            .zip(target)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
    }

    fn grad_y(&self, y: &[f64], target: &[f64]) -> Vec<f64> {
        y.iter().zip(target).map(|(a, b)| a - b).collect()
    }
}

/// Central-difference gradient of `loss(y(t1; theta))`, one pair of plain
/// integrations per parameter. Tolerances looser than `1e-8` are tightened to
/// `1e-8`.
pub fn fd_gradient<F, L>(
    field: &F,
    theta: &[f64],
    y0: &[f64],
    cfg: &IntegratorConfig,
    loss: &L,
    target: &[f64],
    delta: f64,
) -> Result<Vec<f64>>
where
    F: VectorField + ?Sized,
    L: Loss + ?Sized,
{
    assert!(delta > 0.0, "finite-difference step must be positive");
    let mut tight = cfg.clone();
    tight.eps = tight.eps.min(1e-8);
    let at = |th: &[f64]| -> Result<f64> {
        let traj = integrate(field, th, y0, &tight)?;
        Ok(loss.loss(&traj.y_final, target))
    };
    let mut grad = Vec::with_capacity(theta.len());
    let mut th = theta.to_vec();
    for j in 0..theta.len() {
        th[j] = theta[j] + delta;
        let up = at(&th)?;
        th[j] = theta[j] - delta;
        let down = at(&th)?;
        th[j] = theta[j];
        grad.push((up - down) / (2.0 * delta));
    }
    Ok(grad)
}
