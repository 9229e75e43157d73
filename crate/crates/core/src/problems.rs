//! Registered test problems. Names double as the CLI's `--problem` values.

use std::f64::consts::PI;

use crate::error::{OdeError, Result};
use crate::ode::{DifferentiableField, Matrix, VectorField};

pub type ExactFn = fn(t: f64, theta: &[f64]) -> Vec<f64>;

pub const PROBLEM_NAMES: &[&str] = &[
    "paper1",
    "paper1-literal",
    "paper2",
    "vdp",
    "lorenz",
    "expo",
    "quadratic-time",
    "constant",
];

pub struct ProblemSpec {
    pub name: &'static str,
    pub dim: usize,
    pub t0: f64,
    pub t1: f64,
    pub y0: Vec<f64>,
    pub field: Box<dyn DifferentiableField + Send + Sync>,
    pub exact: Option<ExactFn>,
    pub params_default: Vec<f64>,
}

impl std::fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("t0", &self.t0)
            .field("t1", &self.t1)
            .field("y0", &self.y0)
            .field("has_exact", &self.exact.is_some())
            .field("params_default", &self.params_default)
            .finish()
    }
}

impl ProblemSpec {
    pub fn exact_solution(&self, t: f64, theta: &[f64]) -> Result<Vec<f64>> {
        exact_solution(self, t, theta)
    }
}

pub fn get_problem(name: &str) -> Result<ProblemSpec> {
    let spec = match name {
        "paper1" => ProblemSpec {
            name: "paper1",
            dim: 1,
            t0: 0.0,
            t1: 10.0,
            y0: bump_solution(0.0, &[]),
            field: Box::new(TimeOnly(bump_rhs)),
            exact: Some(bump_solution),
            params_default: vec![],
        },
        "paper1-literal" => ProblemSpec {
            name: "paper1-literal",
            dim: 1,
            t0: 0.0,
            t1: 10.0,
            y0: vec![1.0],
            field: Box::new(TimeOnly(bump_rhs_literal)),
            exact: None,
            params_default: vec![],
        },
        "paper2" => ProblemSpec {
            name: "paper2",
            dim: 1,
            t0: 0.0,
            t1: 2.0 * PI,
            y0: vec![1.0],
            field: Box::new(TimeOnly(plateau_rhs)),
            exact: Some(plateau_solution),
            params_default: vec![],
        },
        "vdp" => ProblemSpec {
            name: "vdp",
            dim: 2,
            t0: 0.0,
            // about three limit-cycle periods at mu = 5
            t1: 35.0,
            y0: vec![2.0, 0.0],
            field: Box::new(VanDerPol),
            exact: None,
            params_default: vec![5.0],
        },
        "lorenz" => ProblemSpec {
            name: "lorenz",
            dim: 3,
            t0: 0.0,
            t1: 25.0,
            y0: vec![1.0, 1.0, 1.0],
            field: Box::new(Lorenz),
            exact: None,
            params_default: vec![10.0, 28.0, 8.0 / 3.0],
        },
        "expo" => ProblemSpec {
            name: "expo",
            dim: 1,
            t0: 0.0,
            t1: 1.0,
            y0: vec![1.0],
            field: Box::new(Exponential),
            exact: Some(|t, theta| vec![(theta[0] * t).exp()]),
            params_default: vec![1.0],
        },
        "quadratic-time" => ProblemSpec {
            name: "quadratic-time",
            dim: 1,
            t0: 0.0,
            t1: 2.0,
            y0: vec![0.0],
            field: Box::new(TimeOnly(|t| t * t)),
            exact: Some(|t, _| vec![t * t * t / 3.0]),
            params_default: vec![],
        },
        "constant" => ProblemSpec {
            name: "constant",
            dim: 2,
            t0: 0.0,
            t1: 3.0,
            y0: vec![0.0, 0.0],
            field: Box::new(ConstantDrift(2)),
            exact: Some(|t, theta| theta.iter().map(|b| b * t).collect()),
            params_default: vec![0.5, -1.0],
        },
        _ => {
            return Err(OdeError::UnknownProblem {
                name: name.to_string(),
                valid: PROBLEM_NAMES.join(", "),
            })
        }
    };
    Ok(spec)
}

pub fn exact_solution(spec: &ProblemSpec, t: f64, theta: &[f64]) -> Result<Vec<f64>> {
    match spec.exact {
        Some(f) => Ok(f(t, theta)),
        None => Err(OdeError::NoExactSolution(spec.name.to_string())),
    }
}

/// Classical fixed-step RK4 over `[spec.t0, t1]` with `n_steps` steps, used as
/// ground truth where no closed form exists.
pub fn reference_solution(
    spec: &ProblemSpec,
    theta: &[f64],
    t1: f64,
    n_steps: usize,
) -> Result<Vec<f64>> {
    assert!(n_steps >= 1000, "reference runs need at least 1000 steps");
    let h = (t1 - spec.t0) / n_steps as f64;
    let f = &spec.field;
    let mut y = spec.y0.clone();
    let mut tmp = vec![0.0; y.len()];
    for n in 0..n_steps {
        let t = spec.t0 + n as f64 * h;
        let k1 = f.eval(t, &y, theta);
        for i in 0..y.len() {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        let k2 = f.eval(t + 0.5 * h, &tmp, theta);
        for i in 0..y.len() {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        let k3 = f.eval(t + 0.5 * h, &tmp, theta);
        for i in 0..y.len() {
            tmp[i] = y[i] + h * k3[i];
        }
        let k4 = f.eval(t + h, &tmp, theta);
        for i in 0..y.len() {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if let Some(index) = y.iter().position(|v| !v.is_finite()) {
            return Err(OdeError::NonFiniteState { index });
        }
    }
    Ok(y)
}

// --- fields -----------------------------------------------------------------

/// Scalar field that depends on `t` only.
struct TimeOnly(fn(f64) -> f64);

impl VectorField for TimeOnly {
    fn dim_state(&self) -> usize {
        1
    }
    fn dim_params(&self) -> usize {
        0
    }
    fn eval(&self, t: f64, _y: &[f64], _theta: &[f64]) -> Vec<f64> {
        vec![(self.0)(t)]
    }
}

impl DifferentiableField for TimeOnly {
    fn jac_state(&self, _t: f64, _y: &[f64], _theta: &[f64]) -> Matrix {
        Matrix::zeros(1, 1)
    }
    fn jac_params(&self, _t: f64, _y: &[f64], _theta: &[f64]) -> Matrix {
        Matrix::zeros(1, 0)
    }
}

fn bump_exponent(t: f64) -> f64 {
    // exp(-(t - 3)(t - 7))
    (-(t - 3.0) * (t - 7.0)).exp()
}

/// `sin t + 1 / (1 + exp(-(t - 3)(t - 7)))`
fn bump_solution(t: f64, _theta: &[f64]) -> Vec<f64> {
    vec![t.sin() + 1.0 / (1.0 + bump_exponent(t))]
}

/// Exact derivative of [`bump_solution`].
fn bump_rhs(t: f64) -> f64 {
    let e = bump_exponent(t);
    t.cos() + (2.0 * t - 10.0) * e / ((1.0 + e) * (1.0 + e))
}

/// The right-hand side as printed, with an unsquared denominator.
fn bump_rhs_literal(t: f64) -> f64 {
    let e = bump_exponent(t);
    t.cos() + (2.0 * t - 3.0 - 7.0) * e / (1.0 + e)
}

fn on_plateau(t: f64) -> bool {
    t > 0.75 * PI && t < 1.25 * PI
}

/// `-sin t`, except 0 strictly inside `(3pi/4, 5pi/4)`.
fn plateau_rhs(t: f64) -> f64 {
    if on_plateau(t) {
        0.0
    } else {
        -t.sin()
    }
}

fn plateau_solution(t: f64, _theta: &[f64]) -> Vec<f64> {
    if on_plateau(t) {
        vec![(0.75 * PI).cos()]
    } else {
        vec![t.cos()]
    }
}

/// `y' = theta y`.
struct Exponential;

impl VectorField for Exponential {
    fn dim_state(&self) -> usize {
        1
    }
    fn dim_params(&self) -> usize {
        1
    }
    fn eval(&self, _t: f64, y: &[f64], theta: &[f64]) -> Vec<f64> {
        vec![theta[0] * y[0]]
    }
}

impl DifferentiableField for Exponential {
    fn jac_state(&self, _t: f64, _y: &[f64], theta: &[f64]) -> Matrix {
        Matrix::from_row_major(1, 1, vec![theta[0]]).unwrap()
    }
    fn jac_params(&self, _t: f64, y: &[f64], _theta: &[f64]) -> Matrix {
        Matrix::from_row_major(1, 1, vec![y[0]]).unwrap()
    }
}

/// `y' = b`, with `b = theta`.
pub struct ConstantDrift(pub usize);

impl VectorField for ConstantDrift {
    fn dim_state(&self) -> usize {
        self.0
    }
    fn dim_params(&self) -> usize {
        self.0
    }
    fn eval(&self, _t: f64, _y: &[f64], theta: &[f64]) -> Vec<f64> {
        theta.to_vec()
    }
}

impl DifferentiableField for ConstantDrift {
    fn jac_state(&self, _t: f64, _y: &[f64], _theta: &[f64]) -> Matrix {
        Matrix::zeros(self.0, self.0)
    }
    fn jac_params(&self, _t: f64, _y: &[f64], _theta: &[f64]) -> Matrix {
        Matrix::identity(self.0)
    }
}

/// `x' = v, v' = mu (1 - x^2) v - x`, `theta = [mu]`.
struct VanDerPol;

impl VectorField for VanDerPol {
    fn dim_state(&self) -> usize {
        2
    }
    fn dim_params(&self) -> usize {
        1
    }
    fn eval(&self, _t: f64, y: &[f64], theta: &[f64]) -> Vec<f64> {
        let mu = theta[0];
        vec![y[1], mu * (1.0 - y[0] * y[0]) * y[1] - y[0]]
    }
}

impl DifferentiableField for VanDerPol {
    fn jac_state(&self, _t: f64, y: &[f64], theta: &[f64]) -> Matrix {
        let mu = theta[0];
        Matrix::from_row_major(
            2,
            2,
            vec![
                0.0,
                1.0,
                -2.0 * mu * y[0] * y[1] - 1.0,
                mu * (1.0 - y[0] * y[0]),
            ],
        )
        .unwrap()
    }
    fn jac_params(&self, _t: f64, y: &[f64], _theta: &[f64]) -> Matrix {
        Matrix::from_row_major(2, 1, vec![0.0, (1.0 - y[0] * y[0]) * y[1]]).unwrap()
    }
}

/// Lorenz system, `theta = [sigma, rho, beta]`.
struct Lorenz;

impl VectorField for Lorenz {
    fn dim_state(&self) -> usize {
        3
    }
    fn dim_params(&self) -> usize {
        3
    }
    fn eval(&self, _t: f64, y: &[f64], theta: &[f64]) -> Vec<f64> {
        let (sigma, rho, beta) = (theta[0], theta[1], theta[2]);
        vec![
            sigma * (y[1] - y[0]),
            y[0] * (rho - y[2]) - y[1],
            y[0] * y[1] - beta * y[2],
        ]
    }
}

impl DifferentiableField for Lorenz {
    fn jac_state(&self, _t: f64, y: &[f64], theta: &[f64]) -> Matrix {
        let (sigma, rho, beta) = (theta[0], theta[1], theta[2]);
        Matrix::from_row_major(
            3,
            3,
            vec![
                -sigma,
                sigma,
                0.0,
                rho - y[2],
                -1.0,
                -y[0],
                y[1],
                y[0],
                -beta,
            ],
        )
        .unwrap()
    }
    fn jac_params(&self, _t: f64, y: &[f64], _theta: &[f64]) -> Matrix {
        Matrix::from_row_major(
            3,
            3,
            vec![y[1] - y[0], 0.0, 0.0, 0.0, y[0], 0.0, 0.0, 0.0, -y[2]],
        )
        .unwrap()
    }
}
