//! Browser front end for the integrator. Three operations are exposed to
//! JavaScript: an adaptive step trace with dense output, a sensitivity versus
//! finite-difference gradient check, and incremental toy training. Each
//! returns JSON; the same computations are available natively for tests.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use afge::neural::{
    evaluate_accuracy, make_dataset, softmax, train, MlpField, Readout, Task, ToyDataset,
    TrainConfig,
};
use afge::problems::{get_problem, PROBLEM_NAMES};
use afge::{
    fd_gradient, integrate, integrate_with_sensitivity, loss_gradient, IntegratorConfig, Loss,
    SquaredError,
};

/// Uniform samples of the dense output returned by [`trace`].
pub const DENSE_POINTS: usize = 400;

#[derive(Debug, Clone, Serialize)]
pub struct StepPoint {
    pub t: f64,
    pub h: f64,
    pub err: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceReport {
    pub problem: String,
    pub dim: usize,
    pub steps: Vec<StepPoint>,
    pub t: Vec<f64>,
    /// `y[i]` is the state at `t[i]`.
    pub y: Vec<Vec<f64>>,
    pub exact: Option<Vec<Vec<f64>>>,
    pub n_accepted: usize,
    pub n_rejected: usize,
    pub n_field_evals: usize,
}

pub fn trace(problem: &str, eps: f64, h0: f64, t1: Option<f64>) -> Result<TraceReport, String> {
    let spec = get_problem(problem).map_err(|e| e.to_string())?;
    let t_end = t1.unwrap_or(spec.t1);
    let cfg = IntegratorConfig::new(spec.t0, t_end)
        .with_eps(eps)
        .with_h0(h0);
    let theta = &spec.params_default;
    let traj = integrate(&*spec.field, theta, &spec.y0, &cfg).map_err(|e| e.to_string())?;
    let steps = traj
        .attempts
        .iter()
        .map(|a| StepPoint {
            t: a.t,
            h: a.h,
            err: a.err,
            accepted: a.accepted,
        })
        .collect();
    let t: Vec<f64> = (0..DENSE_POINTS)
        .map(|i| spec.t0 + (t_end - spec.t0) * i as f64 / (DENSE_POINTS - 1) as f64)
        .collect();
    let y = t
        .iter()
        .map(|&s| traj.dense_eval(s.min(t_end)))
        .collect::<afge::Result<Vec<_>>>()
        .map_err(|e| e.to_string())?;
    let exact = spec.exact.map(|f| t.iter().map(|&s| f(s, theta)).collect());
    Ok(TraceReport {
        problem: spec.name.to_string(),
        dim: spec.dim,
        steps,
        t,
        y,
        exact,
        n_accepted: traj.stats.n_accepted,
        n_rejected: traj.stats.n_rejected,
        n_field_evals: traj.stats.n_field_evals,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GradRow {
    pub index: usize,
    pub afge: f64,
    pub fd: f64,
    pub rel_err: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradReport {
    pub problem: String,
    pub rows: Vec<GradRow>,
    pub max_rel_err: f64,
    pub sensitivity_steps: usize,
}

/// Gradient of `0.5 |y(t1) - 2|^2` with respect to the problem parameters.
pub fn gradient_check(problem: &str, t1: Option<f64>) -> Result<GradReport, String> {
    let spec = get_problem(problem).map_err(|e| e.to_string())?;
    let cfg = IntegratorConfig::new(spec.t0, t1.unwrap_or(spec.t1)).with_eps(1e-8);
    let theta = &spec.params_default;
    let target = vec![2.0; spec.dim];
    let run = integrate_with_sensitivity(&*spec.field, theta, &spec.y0, &cfg)
        .map_err(|e| e.to_string())?;
    let g = loss_gradient(&run.sens, &SquaredError.grad_y(&run.y_final, &target))
        .map_err(|e| e.to_string())?;
    let fd = fd_gradient(&*spec.field, theta, &spec.y0, &cfg, &SquaredError, &target, 1e-5)
        .map_err(|e| e.to_string())?;
    let rows: Vec<GradRow> = g
        .iter()
        .zip(&fd)
        .enumerate()
        .map(|(index, (&a, &f))| {
            let scale = a.abs().max(f.abs());
            GradRow {
                index,
                afge: a,
                fd: f,
                rel_err: if scale <= 1e-8 { 0.0 } else { (a - f).abs() / scale },
            }
        })
        .collect();
    Ok(GradReport {
        problem: spec.name.to_string(),
        max_rel_err: rows.iter().map(|r| r.rel_err).fold(0.0, f64::max),
        rows,
        sensitivity_steps: run.trajectory.stats.n_accepted,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EpochPoint {
    pub epoch: usize,
    pub mean_loss: f64,
    pub accuracy: f64,
    pub mean_steps: f64,
}

/// Toy classifier trained a few epochs at a time.
#[wasm_bindgen]
pub struct Trainer {
    mlp: MlpField,
    theta: Vec<f64>,
    readout: Readout,
    data: ToyDataset,
    cfg: TrainConfig,
    epochs_done: usize,
}

impl Trainer {
    pub fn create(task: &str, seed: u64, n: usize, learning_rate: f64) -> Result<Trainer, String> {
        let task: Task = task.parse()?;
        if n < 8 || !n.is_multiple_of(2) {
            return Err(format!("sample count must be even and >= 8 (got {n})"));
        }
        let mlp = MlpField::new(3, 16);
        let cfg = TrainConfig {
            learning_rate,
            seed,
            record_wall_time: false,
            ..TrainConfig::default()
        };
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(Trainer {
            theta: mlp.init_params(seed),
            readout: Readout::init(mlp.d, seed),
            data: make_dataset(task, n, seed),
            mlp,
            cfg,
            epochs_done: 0,
        })
    }

    pub fn advance(&mut self, epochs: usize) -> Result<Vec<EpochPoint>, String> {
        let cfg = TrainConfig {
            epochs: epochs.max(1),
            ..self.cfg.clone()
        };
        let out = train(&self.mlp, &self.theta, &self.readout, &self.data, &cfg)
            .map_err(|e| e.to_string())?;
        self.theta = out.theta;
        self.readout = out.readout;
        let offset = self.epochs_done;
        self.epochs_done += cfg.epochs;
        Ok(out
            .log
            .into_iter()
            .map(|r| EpochPoint {
                epoch: r.epoch + offset,
                mean_loss: r.mean_loss,
                accuracy: r.accuracy,
                mean_steps: r.mean_steps,
            })
            .collect())
    }

    pub fn current_accuracy(&self) -> Result<f64, String> {
        evaluate_accuracy(&self.mlp, &self.readout, &self.theta, &self.data, &self.cfg.integrator)
            .map_err(|e| e.to_string())
    }

    /// Class-1 probability on a `res x res` grid over `[-extent, extent]^2`,
    /// row by row from the top.
    pub fn probability_grid(&self, res: usize, extent: f64) -> Result<Vec<f64>, String> {
        let mut out = Vec::with_capacity(res * res);
        for r in 0..res {
            let y = extent - 2.0 * extent * (r as f64 + 0.5) / res as f64;
            for c in 0..res {
                let x = -extent + 2.0 * extent * (c as f64 + 0.5) / res as f64;
                let y0 = self.mlp.embed([x, y]);
                let traj = integrate(&self.mlp, &self.theta, &y0, &self.cfg.integrator)
                    .map_err(|e| e.to_string())?;
                out.push(softmax(self.readout.logits(&traj.y_final))[1]);
            }
        }
        Ok(out)
    }

    pub fn points(&self) -> Vec<(f64, f64, usize)> {
        self.data
            .inputs
            .iter()
            .zip(&self.data.labels)
            .map(|(p, &l)| (p[0], p[1], l))
            .collect()
    }
}

fn js<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

fn opt(x: f64) -> Option<f64> {
    (x.is_finite() && x > 0.0).then_some(x)
}

#[wasm_bindgen(js_name = problemNames)]
pub fn problem_names() -> String {
    serde_json::to_string(PROBLEM_NAMES).unwrap_or_default()
}

/// Pass `t1 <= 0` for the problem's own horizon.
#[wasm_bindgen(js_name = integrateTrace)]
pub fn integrate_trace(problem: &str, eps: f64, h0: f64, t1: f64) -> Result<String, JsError> {
    js(trace(problem, eps, h0, opt(t1)))
}

#[wasm_bindgen(js_name = gradientCheck)]
pub fn gradient_check_js(problem: &str, t1: f64) -> Result<String, JsError> {
    js(gradient_check(problem, opt(t1)))
}

#[wasm_bindgen]
impl Trainer {
    #[wasm_bindgen(constructor)]
    pub fn new(task: &str, seed: u32, n: u32, learning_rate: f64) -> Result<Trainer, JsError> {
        Trainer::create(task, seed.into(), n as usize, learning_rate).map_err(|e| JsError::new(&e))
    }

    #[wasm_bindgen(js_name = runEpochs)]
    pub fn run_epochs(&mut self, epochs: u32) -> Result<String, JsError> {
        js(self.advance(epochs as usize))
    }

    #[wasm_bindgen(js_name = accuracy)]
    pub fn accuracy_js(&self) -> Result<f64, JsError> {
        self.current_accuracy().map_err(|e| JsError::new(&e))
    }

    #[wasm_bindgen(js_name = probabilityGrid)]
    pub fn probability_grid_js(&self, res: u32, extent: f64) -> Result<Vec<f64>, JsError> {
        self.probability_grid(res as usize, extent)
            .map_err(|e| JsError::new(&e))
    }

    #[wasm_bindgen(js_name = pointsJson)]
    pub fn points_json(&self) -> String {
        serde_json::to_string(&self.points()).unwrap_or_default()
    }

    #[wasm_bindgen(getter)]
    pub fn epochs(&self) -> u32 {
        self.epochs_done as u32
    }
}
