//! Adaptive fourth-order Runge-Kutta integration with a zero-cost step-size
//! controller, cubic dense output, and forward-mode parameter sensitivities.
//!
//! Every RK4 step fits a quadratic `p(tau)` through its four slopes. The
//! mismatch between `p(1)` and the vector field evaluated at the new state is
//! the local error estimate. That evaluation is reused as the first slope of
//! the next step, so the estimate costs nothing over plain RK4.
//!
//! Co-integrating `S = dy/dtheta` with the state gives loss gradients at the
//! horizon without backpropagation or an adjoint pass.

pub mod driver;
pub mod error;
pub mod neural;
pub mod ode;
pub mod problems;
pub mod rk4;
pub mod sensitivity;

pub use driver::{
    dense_deriv, dense_eval, integrate, propose_step, step_once, Attempt, StepAttempt, StepRecord,
    StepStats, Trajectory,
};
pub use error::{OdeError, Result};
pub use ode::{
    assert_finite, inf_norm, validate_config, DifferentiableField, IntegratorConfig, Matrix,
    VectorField,
};
pub use rk4::{
    error_estimate, eval_p, eval_q, quad_coeffs, rk4_combine, rk4_stages, QuadCoeffs, StageSlopes,
    StepOutcome,
};
pub use sensitivity::{
    build_augmented_field, fd_gradient, integrate_with_sensitivity, loss_gradient, AugmentedField,
    Loss, SensitivityRun, SquaredError,
};
