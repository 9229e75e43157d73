//! A tanh MLP vector field, toy classification data, and a training loop
//! whose ODE-parameter gradients come entirely from forward sensitivities.
//!
//! Parameter layout of [`MlpField`]: `W1` (hidden x (d+1)) row-major, `b1`,
//! `W2` (d x hidden) row-major, `b2`. The network input is `[y; t]`.

use std::io::{Read, Write};
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::driver::integrate;
use crate::error::{OdeError, Result};
use crate::ode::{DifferentiableField, IntegratorConfig, Matrix, VectorField};
use crate::sensitivity::{integrate_with_sensitivity, loss_gradient, Loss};

/// `f(t, y) = W2 tanh(W1 [y; t] + b1) + b2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MlpField {
    pub d: usize,
    pub hidden: usize,
}

/// Borrowed view of a flat MLP parameter vector.
struct Weights<'a> {
    w1: &'a [f64],
    b1: &'a [f64],
    w2: &'a [f64],
    b2: &'a [f64],
}

impl MlpField {
    pub fn new(d: usize, hidden: usize) -> Self {
        Self { d, hidden }
    }

    pub fn n_params(&self) -> usize {
        let (d, h) = (self.d, self.hidden);
        h * (d + 1) + h + d * h + d
    }

    /// Seeded initialization, uniform in `+-1/sqrt(fan_in)` per layer.
    pub fn init_params(&self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (d, h) = (self.d, self.hidden);
        let s1 = 1.0 / ((d + 1) as f64).sqrt();
        let s2 = 1.0 / (h as f64).sqrt();
        let mut theta = Vec::with_capacity(self.n_params());
        theta.extend((0..h * (d + 1) + h).map(|_| rng.random_range(-s1..s1)));
        theta.extend((0..d * h + d).map(|_| rng.random_range(-s2..s2)));
        theta
    }

    fn split<'a>(&self, theta: &'a [f64]) -> Weights<'a> {
        let (d, h) = (self.d, self.hidden);
        let (w1, rest) = theta.split_at(h * (d + 1));
        let (b1, rest) = rest.split_at(h);
        let (w2, b2) = rest.split_at(d * h);
        Weights { w1, b1, w2, b2 }
    }

    fn check(&self, y: &[f64], theta: &[f64]) -> Result<()> {
        if y.len() != self.d {
            return Err(OdeError::DimensionMismatch {
                what: "MLP state",
                expected: self.d,
                found: y.len(),
            });
        }
        if theta.len() != self.n_params() {
            return Err(OdeError::DimensionMismatch {
                what: "MLP parameters",
                expected: self.n_params(),
                found: theta.len(),
            });
        }
        Ok(())
    }

    /// Hidden activations `tanh(W1 [y; t] + b1)`.
    fn hidden_layer(&self, w: &Weights<'_>, t: f64, y: &[f64]) -> Vec<f64> {
        let cols = self.d + 1;
        (0..self.hidden)
            .map(|j| {
                let row = &w.w1[j * cols..(j + 1) * cols];
                let z = row[..self.d].iter().zip(y).map(|(a, b)| a * b).sum::<f64>()
                    + row[self.d] * t
                    + w.b1[j];
                z.tanh()
            })
            .collect()
    }

    fn output(&self, w: &Weights<'_>, act: &[f64]) -> Vec<f64> {
        (0..self.d)
            .map(|i| {
                w.w2[i * self.hidden..(i + 1) * self.hidden]
                    .iter()
                    .zip(act)
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    + w.b2[i]
            })
            .collect()
    }

    pub fn mlp_eval(&self, t: f64, y: &[f64], theta: &[f64]) -> Result<Vec<f64>> {
        self.check(y, theta)?;
        Ok(self.eval(t, y, theta))
    }

    pub fn mlp_jacobians(&self, t: f64, y: &[f64], theta: &[f64]) -> Result<(Matrix, Matrix)> {
        self.check(y, theta)?;
        let (_, js, jp) = self.eval_with_jacobians(t, y, theta);
        Ok((js, jp))
    }

    /// Lifts a 2-D input point to the initial state, zero-padding extra
    /// dimensions.
    pub fn embed(&self, point: [f64; 2]) -> Vec<f64> {
        let mut y = vec![0.0; self.d];
        for (dst, src) in y.iter_mut().zip(point) {
            *dst = src;
        }
        y
    }
}

impl VectorField for MlpField {
    fn dim_state(&self) -> usize {
        self.d
    }

    fn dim_params(&self) -> usize {
        self.n_params()
    }

    fn eval(&self, t: f64, y: &[f64], theta: &[f64]) -> Vec<f64> {
        let w = self.split(theta);
        let act = self.hidden_layer(&w, t, y);
        self.output(&w, &act)
    }
}

impl DifferentiableField for MlpField {
    fn jac_state(&self, t: f64, y: &[f64], theta: &[f64]) -> Matrix {
        self.eval_with_jacobians(t, y, theta).1
    }

    fn jac_params(&self, t: f64, y: &[f64], theta: &[f64]) -> Matrix {
        self.eval_with_jacobians(t, y, theta).2
    }

    fn eval_with_jacobians(&self, t: f64, y: &[f64], theta: &[f64]) -> (Vec<f64>, Matrix, Matrix) {
        let (d, h) = (self.d, self.hidden);
        let cols = d + 1;
        let w = self.split(theta);
        let act = self.hidden_layer(&w, t, y);
        let out = self.output(&w, &act);
        let slope: Vec<f64> = act.iter().map(|a| 1.0 - a * a).collect();

        let mut js = Matrix::zeros(d, d);
        for i in 0..d {
            for j in 0..h {
                let g = w.w2[i * h + j] * slope[j];
                if g == 0.0 {
                    continue;
                }
                for k in 0..d {
                    js[(i, k)] += g * w.w1[j * cols + k];
                }
            }
        }

        let mut jp = Matrix::zeros(d, self.n_params());
        let b1_off = h * cols;
        let w2_off = b1_off + h;
        let b2_off = w2_off + d * h;
        for i in 0..d {
            for j in 0..h {
                let g = w.w2[i * h + j] * slope[j];
                for k in 0..d {
                    jp[(i, j * cols + k)] = g * y[k];
                }
                jp[(i, j * cols + d)] = g * t;
                jp[(i, b1_off + j)] = g;
                jp[(i, w2_off + i * h + j)] = act[j];
            }
            jp[(i, b2_off + i)] = 1.0;
        }
        (out, js, jp)
    }
}

// --- data ---------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Circles,
    Spirals,
}

impl FromStr for Task {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "circles" => Ok(Task::Circles),
            "spirals" => Ok(Task::Spirals),
            other => Err(format!("unknown task `{other}` (valid: circles, spirals)")),
        }
    }
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Circles => "circles",
            Task::Spirals => "spirals",
        }
    }

    /// Accuracy a trained model is expected to reach.
    pub fn target_accuracy(self) -> f64 {
        match self {
            Task::Circles => 0.95,
            Task::Spirals => 0.90,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyDataset {
    pub inputs: Vec<[f64; 2]>,
    pub labels: Vec<usize>,
    pub seed: u64,
}

pub const CIRCLE_RADII: [f64; 2] = [1.0, 2.5];
pub const DEFAULT_NOISE: f64 = 0.1;
/// Spiral arm `c`: `r = 0.5 + 2.5 s`, `phi = 3 pi s + c pi`, `s` in `[0, 1)`.
pub const SPIRAL_TURN: f64 = 3.0 * std::f64::consts::PI;

pub fn make_dataset(task: Task, n: usize, seed: u64) -> ToyDataset {
    make_dataset_with_noise(task, n, seed, DEFAULT_NOISE)
}

/// Balanced two-class data; sample `i` has label `i % 2`.
pub fn make_dataset_with_noise(task: Task, n: usize, seed: u64, noise: f64) -> ToyDataset {
    assert!(n >= 8 && n.is_multiple_of(2), "dataset size must be even and >= 8");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter = Normal::new(0.0, noise.max(0.0)).expect("finite noise");
    let mut inputs = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label = i % 2;
        let (r, phi) = match task {
            Task::Circles => (
                CIRCLE_RADII[label],
                rng.random_range(0.0..std::f64::consts::TAU),
            ),
            Task::Spirals => {
                let s: f64 = rng.random_range(0.0..1.0);
                (0.5 + 2.5 * s, SPIRAL_TURN * s + label as f64 * std::f64::consts::PI)
            }
        };
        let mut p = [r * phi.cos(), r * phi.sin()];
        if noise > 0.0 {
            p[0] += jitter.sample(&mut rng);
            p[1] += jitter.sample(&mut rng);
        }
        inputs.push(p);
        labels.push(label);
    }
    ToyDataset {
        inputs,
        labels,
        seed,
    }
}

impl ToyDataset {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// Writes `x0,x1,label` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> std::result::Result<(), csv::Error> {
        let mut w = csv::WriterBuilder::new().from_writer(out);
        w.write_record(["x0", "x1", "label"])?;
        for (p, l) in self.inputs.iter().zip(&self.labels) {
            w.write_record([p[0].to_string(), p[1].to_string(), l.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R, seed: u64) -> std::result::Result<Self, csv::Error> {
        let mut r = csv::Reader::from_reader(input);
        let mut inputs = Vec::new();
        let mut labels = Vec::new();
        for row in r.deserialize() {
            let (x0, x1, label): (f64, f64, usize) = row?;
            inputs.push([x0, x1]);
            labels.push(label);
        }
        Ok(Self {
            inputs,
            labels,
            seed,
        })
    }
}

// --- readout and loss -----------------------------------------------------------

/// Affine map from the terminal state to two logits.
#[derive(Debug, Clone, PartialEq)]
pub struct Readout {
    /// 2 x d.
    pub weights: Matrix,
    pub bias: [f64; 2],
}

impl Readout {
    pub fn init(d: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x005E_ED0F_2EAD);
        let s = 1.0 / (d as f64).sqrt();
        let data = (0..2 * d).map(|_| rng.random_range(-s..s)).collect();
        Self {
            weights: Matrix::from_row_major(2, d, data).expect("2 x d"),
            bias: [0.0, 0.0],
        }
    }

    pub fn logits(&self, y: &[f64]) -> [f64; 2] {
        let z = self.weights.mul_vec(y);
        [z[0] + self.bias[0], z[1] + self.bias[1]]
    }
}

/// Two-class softmax.
pub fn softmax(z: [f64; 2]) -> [f64; 2] {
    let m = z[0].max(z[1]);
    let e = [(z[0] - m).exp(), (z[1] - m).exp()];
    let s = e[0] + e[1];
    [e[0] / s, e[1] / s]
}

/// Softmax cross-entropy of the readout logits. The target is a probability
/// vector over the two classes.
#[derive(Debug, Clone)]
pub struct ReadoutCrossEntropy<'a> {
    pub readout: &'a Readout,
}

impl Loss for ReadoutCrossEntropy<'_> {
    fn loss(&self, y: &[f64], target: &[f64]) -> f64 {
        let z = self.readout.logits(y);
        let m = z[0].max(z[1]);
        let lse = m + ((z[0] - m).exp() + (z[1] - m).exp()).ln();
        -(target[0] * (z[0] - lse) + target[1] * (z[1] - lse))
    }

    fn grad_y(&self, y: &[f64], target: &[f64]) -> Vec<f64> {
        let p = softmax(self.readout.logits(y));
        self.readout
            .weights
            .vec_mul(&[p[0] - target[0], p[1] - target[1]])
    }
}

pub fn one_hot(label: usize) -> [f64; 2] {
    let mut t = [0.0; 2];
    t[label] = 1.0;
    t
}

/// Argmax with ties going to class 0.
pub fn predict(logits: [f64; 2]) -> usize {
    usize::from(logits[1] > logits[0])
}

// --- training -------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Samples per parameter update; `None` means one update per epoch.
    pub batch_size: Option<usize>,
    /// Record per-epoch wall time. Off gives byte-reproducible logs.
    pub record_wall_time: bool,
    pub integrator: IntegratorConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            epochs: 200,
            seed: 7,
            batch_size: Some(10),
            record_wall_time: true,
            integrator: IntegratorConfig::new(0.0, 1.0).with_eps(1e-4),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(OdeError::InvalidStepBounds {
                field: "learning_rate",
                detail: format!("must be finite and >= 0 (got {})", self.learning_rate),
            });
        }
        if self.epochs == 0 {
            return Err(OdeError::InvalidStepBounds {
                field: "epochs",
                detail: "must be >= 1".into(),
            });
        }
        if self.batch_size == Some(0) {
            return Err(OdeError::InvalidStepBounds {
                field: "batch_size",
                detail: "must be >= 1".into(),
            });
        }
        crate::ode::validate_config(&self.integrator)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub mean_loss: f64,
    /// Training accuracy of the parameters the epoch started with.
    pub accuracy: f64,
    /// Mean accepted steps per sample.
    pub mean_steps: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub theta: Vec<f64>,
    pub readout: Readout,
    pub log: Vec<EpochRecord>,
    /// Accuracy of the final parameters on the training data.
    pub final_accuracy: f64,
}

/// Per-sample forward pass with sensitivities. Returns the loss, whether the
/// prediction was right, the accepted step count, and gradients for the ODE
/// parameters and the readout.
pub struct SampleGrad {
    pub loss: f64,
    pub correct: bool,
    pub steps: usize,
    pub grad_theta: Vec<f64>,
    pub grad_weights: Vec<f64>,
    pub grad_bias: [f64; 2],
}

pub fn sample_gradient(
    mlp: &MlpField,
    readout: &Readout,
    theta: &[f64],
    point: [f64; 2],
    label: usize,
    integrator: &IntegratorConfig,
) -> Result<SampleGrad> {
    let y0 = mlp.embed(point);
    let run = integrate_with_sensitivity(mlp, theta, &y0, integrator)?;
    let target = one_hot(label);
    let loss_fn = ReadoutCrossEntropy { readout };
    let logits = readout.logits(&run.y_final);
    let p = softmax(logits);
    let residual = [p[0] - target[0], p[1] - target[1]];
    let dldy = loss_fn.grad_y(&run.y_final, &target);
    let grad_theta = loss_gradient(&run.sens, &dldy)?;
    let d = mlp.d;
    let mut grad_weights = vec![0.0; 2 * d];
    for c in 0..2 {
        for k in 0..d {
            grad_weights[c * d + k] = residual[c] * run.y_final[k];
        }
    }
    Ok(SampleGrad {
        loss: loss_fn.loss(&run.y_final, &target),
        correct: predict(logits) == label,
        steps: run.trajectory.stats.n_accepted,
        grad_theta,
        grad_weights,
        grad_bias: residual,
    })
}

/// Gradient descent on the mean cross-entropy. ODE-parameter gradients come
/// from `dL/dy(T)^T S(T)`; the readout gradient is taken directly.
pub fn train(
    mlp: &MlpField,
    theta0: &[f64],
    readout0: &Readout,
    data: &ToyDataset,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if theta0.len() != mlp.n_params() {
        return Err(OdeError::DimensionMismatch {
            what: "MLP parameters",
            expected: mlp.n_params(),
            found: theta0.len(),
        });
    }
    let n = data.len();
    let batch = cfg.batch_size.unwrap_or(n).min(n).max(1);
    let lr = cfg.learning_rate;
    let mut theta = theta0.to_vec();
    let mut readout = readout0.clone();
    let mut log = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        let started = cfg.record_wall_time.then(Instant::now);
        let mut total_loss = 0.0;
        let mut correct = 0usize;
        let mut steps = 0usize;
        for chunk in (0..n).collect::<Vec<_>>().chunks(batch) {
            let mut g_theta = vec![0.0; theta.len()];
            let mut g_w = vec![0.0; readout.weights.as_slice().len()];
            let mut g_b = [0.0; 2];
            for &i in chunk {
                let g = sample_gradient(
                    mlp,
                    &readout,
                    &theta,
                    data.inputs[i],
                    data.labels[i],
                    &cfg.integrator,
                )?;
                total_loss += g.loss;
                correct += usize::from(g.correct);
                steps += g.steps;
                accumulate(&mut g_theta, &g.grad_theta);
                accumulate(&mut g_w, &g.grad_weights);
                g_b[0] += g.grad_bias[0];
                g_b[1] += g.grad_bias[1];
            }
            if lr == 0.0 {
                continue;
            }
            let scale = lr / chunk.len() as f64;
            for (t, g) in theta.iter_mut().zip(&g_theta) {
                *t -= scale * g;
            }
            let d = mlp.d;
            for c in 0..2 {
                for k in 0..d {
                    readout.weights[(c, k)] -= scale * g_w[c * d + k];
                }
                readout.bias[c] -= scale * g_b[c];
            }
        }
        let wall_ms = started.map_or(0.0, |s| s.elapsed().as_secs_f64() * 1e3);
        log.push(EpochRecord {
            epoch,
            mean_loss: total_loss / n as f64,
            accuracy: correct as f64 / n as f64,
            mean_steps: steps as f64 / n as f64,
            wall_ms,
        });
    }

    let final_accuracy = evaluate_accuracy(mlp, &readout, &theta, data, &cfg.integrator)?;
    Ok(TrainOutcome {
        theta,
        readout,
        log,
        final_accuracy,
    })
}

fn accumulate(acc: &mut [f64], g: &[f64]) {
    for (a, b) in acc.iter_mut().zip(g) {
        *a += b;
    }
}

/// Fraction of samples whose argmax logit matches the label.
pub fn evaluate_accuracy(
    mlp: &MlpField,
    readout: &Readout,
    theta: &[f64],
    data: &ToyDataset,
    integrator: &IntegratorConfig,
) -> Result<f64> {
    if data.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0usize;
    for (p, &label) in data.inputs.iter().zip(&data.labels) {
        let traj = integrate(mlp, theta, &mlp.embed(*p), integrator)?;
        correct += usize::from(predict(readout.logits(&traj.y_final)) == label);
    }
    Ok(correct as f64 / data.len() as f64)
}
