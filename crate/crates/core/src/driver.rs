//! Accept/reject integration loop.
//!
//! Each attempt costs three stage evaluations plus the error evaluation. On
//! acceptance the error evaluation `f(t_n + h, q(1))` becomes the next `k1`;
//! on rejection `k1` is kept because `(t_n, y_n)` has not moved. Only the very
//! first step evaluates `k1` fresh, so
//! `n_field_evals = 1 + 4 (n_accepted + n_rejected)`.

use crate::error::{OdeError, Result};
use crate::ode::{assert_finite, validate_config, IntegratorConfig, VectorField};
use crate::rk4::{eval_p, eval_q, full_step, QuadCoeffs, StepOutcome};

/// One accepted step together with its polynomial model.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t_start: f64,
    pub h: f64,
    pub y_start: Vec<f64>,
    pub coeffs: QuadCoeffs,
    pub err: f64,
    pub e1: Vec<f64>,
}

impl StepRecord {
    pub fn t_end(&self) -> f64 {
        self.t_start + self.h
    }

    /// Cubic dense output at normalized time `tau`.
    pub fn state_at(&self, tau: f64) -> Vec<f64> {
        eval_q(&self.coeffs, &self.y_start, self.h, tau)
    }

    /// Quadratic slope model at normalized time `tau`.
    pub fn slope_at(&self, tau: f64) -> Vec<f64> {
        eval_p(&self.coeffs, tau)
    }
}

/// Any attempted step, accepted or not.
#[derive(Debug, Clone, PartialEq)]
pub struct Attempt {
    pub t: f64,
    pub h: f64,
    pub err: f64,
    pub accepted: bool,
    /// State at `t`, the start of the attempt.
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub n_accepted: usize,
    pub n_rejected: usize,
    pub n_field_evals: usize,
}

impl StepStats {
    /// Whether the evaluation count matches the reuse accounting.
    pub fn evals_consistent(&self) -> bool {
        self.n_field_evals == 1 + 4 * (self.n_accepted + self.n_rejected)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t0: f64,
    pub t1: f64,
    pub y0: Vec<f64>,
    pub records: Vec<StepRecord>,
    pub attempts: Vec<Attempt>,
    pub y_final: Vec<f64>,
    pub stats: StepStats,
}

impl Trajectory {
    fn locate(&self, t: f64) -> Result<(&StepRecord, f64)> {
        if !(t >= self.t0 && t <= self.t1) {
            return Err(OdeError::OutOfDomain {
                t,
                t0: self.t0,
                t1: self.t1,
            });
        }
        let last = self.records.len() - 1;
        // boundary times belong to the earlier record
        let idx = self.records.partition_point(|r| r.t_end() < t).min(last);
        let rec = &self.records[idx];
        let tau = if idx == last && t == self.t1 {
            1.0
        } else {
            ((t - rec.t_start) / rec.h).clamp(0.0, 1.0)
        };
        Ok((rec, tau))
    }

    pub fn dense_eval(&self, t: f64) -> Result<Vec<f64>> {
        let (rec, tau) = self.locate(t)?;
        Ok(rec.state_at(tau))
    }

    pub fn dense_deriv(&self, t: f64) -> Result<Vec<f64>> {
        let (rec, tau) = self.locate(t)?;
        Ok(rec.slope_at(tau))
    }

    pub fn step_sizes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.records.iter().map(|r| (r.t_start, r.h))
    }
}

pub fn dense_eval(traj: &Trajectory, t: f64) -> Result<Vec<f64>> {
    traj.dense_eval(t)
}

pub fn dense_deriv(traj: &Trajectory, t: f64) -> Result<Vec<f64>> {
    traj.dense_deriv(t)
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepAttempt {
    Accepted { outcome: StepOutcome, h_next: f64 },
    Rejected { outcome: StepOutcome, h_retry: f64 },
}

/// Step-size law `h1 = S h (err / eps)^(-1/4)`, with the change ratio clamped
/// to `[shrink_clamp, grow_clamp]` and the result to `[h_min, h_max]`.
pub fn propose_step(h: f64, err: f64, cfg: &IntegratorConfig) -> f64 {
    (h * step_ratio(err, cfg)).clamp(cfg.h_min, cfg.h_max)
}

fn step_ratio(err: f64, cfg: &IntegratorConfig) -> f64 {
    if err == 0.0 {
        cfg.grow_clamp
    } else {
        (cfg.safety * (err / cfg.eps).powf(-0.25)).clamp(cfg.shrink_clamp, cfg.grow_clamp)
    }
}

/// One attempt at step `h` from `(t_n, y_n)`, with the error measured over
/// every component.
pub fn step_once<F: VectorField + ?Sized>(
    field: &F,
    t_n: f64,
    y_n: &[f64],
    theta: &[f64],
    h: f64,
    k1_reuse: Option<&[f64]>,
    cfg: &IntegratorConfig,
) -> Result<StepAttempt> {
    step_once_over(field, t_n, y_n, theta, h, k1_reuse, cfg, y_n.len())
}

#[allow(clippy::too_many_arguments)]
fn step_once_over<F: VectorField + ?Sized>(
    field: &F,
    t_n: f64,
    y_n: &[f64],
    theta: &[f64],
    h: f64,
    k1_reuse: Option<&[f64]>,
    cfg: &IntegratorConfig,
    err_dims: usize,
) -> Result<StepAttempt> {
    let outcome = full_step(field, t_n, y_n, theta, h, k1_reuse, err_dims)?;
    if cfg.fixed_step {
        return Ok(StepAttempt::Accepted {
            outcome,
            h_next: cfg.h0,
        });
    }
    if outcome.err <= cfg.eps {
        let h_next = propose_step(h, outcome.err, cfg);
        return Ok(StepAttempt::Accepted { outcome, h_next });
    }
    let raw = h * step_ratio(outcome.err, cfg);
    if raw < cfg.h_min {
        return Err(OdeError::MinStepUnderflow {
            t: t_n,
            h: raw,
            h_min: cfg.h_min,
        });
    }
    Ok(StepAttempt::Rejected {
        outcome,
        h_retry: raw.min(cfg.h_max),
    })
}

/// Integrates `y' = f(t, y; theta)` from `cfg.t0` to `cfg.t1`.
pub fn integrate<F: VectorField + ?Sized>(
    field: &F,
    theta: &[f64],
    y0: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    integrate_controlled(field, theta, y0, cfg, field.dim_state())
}

/// As [`integrate`], with step control driven by the first `err_dims`
/// components.
pub(crate) fn integrate_controlled<F: VectorField + ?Sized>(
    field: &F,
    theta: &[f64],
    y0: &[f64],
    cfg: &IntegratorConfig,
    err_dims: usize,
) -> Result<Trajectory> {
    validate_config(cfg)?;
    check_dim("initial state", field.dim_state(), y0.len())?;
    check_dim("parameter vector", field.dim_params(), theta.len())?;
    assert_finite(y0)?;
    assert_finite(theta)?;

    let span = cfg.t1 - cfg.t0;
    let snap = 1e-12 * span;
    let mut t = cfg.t0;
    let mut y = y0.to_vec();
    let mut k1: Option<Vec<f64>> = None;
    let mut h = cfg.h0;
    let mut records = Vec::new();
    let mut attempts = Vec::new();
    let mut stats = StepStats {
        n_field_evals: 1,
        ..StepStats::default()
    };

    while t < cfg.t1 {
        let mut rejects = 0;
        loop {
            let remaining = cfg.t1 - t;
            let last = h >= remaining - snap;
            let h_step = if last { remaining } else { h };
            let attempt =
                step_once_over(field, t, &y, theta, h_step, k1.as_deref(), cfg, err_dims)?;
            stats.n_field_evals += 4;
            match attempt {
                StepAttempt::Accepted { outcome, h_next } => {
                    stats.n_accepted += 1;
                    attempts.push(Attempt {
                        t,
                        h: h_step,
                        err: outcome.err,
                        accepted: true,
                        y: y.clone(),
                    });
                    let StepOutcome {
                        y_next,
                        coeffs,
                        e1,
                        err,
                        f_end,
                    } = outcome;
                    records.push(StepRecord {
                        t_start: t,
                        h: h_step,
                        y_start: std::mem::replace(&mut y, y_next),
                        coeffs,
                        err,
                        e1,
                    });
                    k1 = Some(f_end);
                    t = if last { cfg.t1 } else { t + h_step };
                    h = h_next;
                    break;
                }
                StepAttempt::Rejected { outcome, h_retry } => {
                    stats.n_rejected += 1;
                    rejects += 1;
                    attempts.push(Attempt {
                        t,
                        h: h_step,
                        err: outcome.err,
                        accepted: false,
                        y: y.clone(),
                    });
                    if rejects > cfg.max_rejects_per_step {
                        return Err(OdeError::MaxRejectsExceeded { t, rejects });
                    }
                    k1 = Some(outcome.coeffs.a0);
                    h = h_retry;
                }
            }
        }
    }

    Ok(Trajectory {
        t0: cfg.t0,
        t1: cfg.t1,
        y0: y0.to_vec(),
        records,
        attempts,
        y_final: y,
        stats,
    })
}

fn check_dim(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(OdeError::DimensionMismatch {
            what,
            expected,
            found,
        });
    }
    Ok(())
}
