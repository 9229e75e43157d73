//! Library side of the `afge` command-line tool. Each subcommand builds its
//! CSV output in memory through a `*_csv` function so it can be tested
//! without touching the filesystem; `run` adds file output and exit codes.

pub mod config;

use std::path::{Path, PathBuf};

use afge::neural::{make_dataset_with_noise, MlpField, Readout, Task, TrainConfig, DEFAULT_NOISE};
use afge::problems::{get_problem, ProblemSpec};
use afge::{
    fd_gradient, inf_norm, integrate, integrate_with_sensitivity, loss_gradient,
    DifferentiableField, IntegratorConfig, Loss, OdeError, SquaredError, Trajectory,
};

pub use config::{load_config, ConfigError, Settings};

/// Seed used when neither `--seed` nor `AFGE_SEED` is given.
pub const DEFAULT_SEED: u64 = 7;
/// Number of uniform sample times in a dense-output file.
pub const DENSE_SAMPLES: usize = 1000;
/// Step sizes used by `sweep`.
pub const SWEEP_STEPS: [f64; 5] = [0.2, 0.1, 0.05, 0.025, 0.0125];
/// Accepted range for the fitted convergence order.
pub const ORDER_RANGE: (f64, f64) = (3.6, 4.4);
/// Largest acceptable relative gradient error in `gradcheck`.
pub const GRAD_TOL: f64 = 1e-4;
/// Gradient pairs with both magnitudes at or below this have `rel_err = 0`.
pub const GRAD_ZERO: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
    #[error("{0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Runtime(_) => 2,
            CliError::CheckFailed(_) => 3,
        }
    }
}

fn runtime(e: OdeError) -> CliError {
    CliError::Runtime(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Integrate,
    Gradcheck,
    Train,
    Sweep,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Integrate => "integrate",
            Subcommand::Gradcheck => "gradcheck",
            Subcommand::Train => "train",
            Subcommand::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Invocation {
    pub subcommand: Subcommand,
    /// Problem name, `mlp` for gradcheck, or a task name for train.
    pub problem: String,
    pub settings: Settings,
    /// Output file; standard output when absent.
    pub out: Option<PathBuf>,
    pub seed: u64,
}

/// Primary CSV plus any companion file, and a one-line summary.
#[derive(Debug, Clone)]
pub struct Output {
    pub csv: String,
    pub dense: Option<String>,
    pub summary: String,
}

/// Runs the invocation and writes its files. On a failed check the CSV is
/// still written before `CheckFailed` is returned.
pub fn run(inv: &Invocation) -> Result<String, CliError> {
    let (output, verdict) = match inv.subcommand {
        Subcommand::Integrate => (integrate_csv(inv)?, Ok(())),
        Subcommand::Gradcheck => gradcheck_csv(inv)?,
        Subcommand::Train => train_csv(inv)?,
        Subcommand::Sweep => sweep_csv(inv)?,
    };
    write_out(inv.out.as_deref(), &output.csv)?;
    if let (Some(dense), Some(out)) = (&output.dense, &inv.out) {
        write_out(Some(&dense_path(out)), dense)?;
    }
    verdict.map(|()| output.summary)
}

/// `run.csv` becomes `run.dense.csv`.
pub fn dense_path(out: &Path) -> PathBuf {
    out.with_extension("dense.csv")
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn problem(name: &str) -> Result<ProblemSpec, CliError> {
    get_problem(name).map_err(|e| CliError::Usage(e.to_string()))
}

fn vector_or(
    settings: &Settings,
    key: &str,
    fallback: &[f64],
    expected: usize,
) -> Result<Vec<f64>, CliError> {
    let v = settings.list(key).unwrap_or(fallback).to_vec();
    if v.len() != expected {
        return Err(CliError::Usage(format!(
            "`{key}` needs {expected} values, got {}",
            v.len()
        )));
    }
    Ok(v)
}

fn push_row(out: &mut String, cells: impl IntoIterator<Item = String>) {
    let mut first = true;
    for c in cells {
        if !first {
            out.push(',');
        }
        out.push_str(&c);
        first = false;
    }
    out.push('\n');
}

fn numbered(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (0..n).map(move |i| format!("{prefix}{i}"))
}

fn nums(v: &[f64]) -> impl Iterator<Item = String> + '_ {
    v.iter().map(|x| x.to_string())
}

// --- integrate ----------------------------------------------------------------

pub fn integrate_csv(inv: &Invocation) -> Result<Output, CliError> {
    let s = &inv.settings;
    s.restrict("integrate", &["params", "y0"])?;
    let spec = problem(&inv.problem)?;
    let theta = vector_or(s, "params", &spec.params_default, spec.field.dim_params())?;
    let y0 = vector_or(s, "y0", &spec.y0, spec.dim)?;
    let cfg = s.integrator(IntegratorConfig::new(spec.t0, spec.t1))?;
    let traj = integrate(&*spec.field, &theta, &y0, &cfg).map_err(runtime)?;

    // A closed form only describes runs from the registered initial condition.
    let exact = spec
        .exact
        .filter(|_| s.get("y0").is_none() && cfg.t0 == spec.t0)
        .map(|f| move |t: f64| f(t, &theta));
    let csv = step_trace_csv(&traj);
    let dense = dense_csv(&traj, exact.as_ref().map(|f| f as &dyn Fn(f64) -> Vec<f64>))
        .map_err(runtime)?;
    let summary = format!(
        "{}: {} accepted, {} rejected, {} field evaluations",
        spec.name, traj.stats.n_accepted, traj.stats.n_rejected, traj.stats.n_field_evals
    );
    Ok(Output {
        csv,
        dense: Some(dense),
        summary,
    })
}

/// One row per attempted step: `t,h,err,accepted,y0..`, with the state at
/// the start of the attempt.
pub fn step_trace_csv(traj: &Trajectory) -> String {
    let d = traj.y0.len();
    let mut out = String::new();
    push_row(
        &mut out,
        ["t", "h", "err", "accepted"]
            .into_iter()
            .map(String::from)
            .chain(numbered("y", d)),
    );
    for a in &traj.attempts {
        push_row(
            &mut out,
            [
                a.t.to_string(),
                a.h.to_string(),
                a.err.to_string(),
                u8::from(a.accepted).to_string(),
            ]
            .into_iter()
            .chain(nums(&a.y)),
        );
    }
    out
}

/// Dense output at uniform times over the horizon, with `exact0..,abserr`
/// columns when a closed form is supplied. `abserr` is the max-norm error.
pub fn dense_csv(
    traj: &Trajectory,
    exact: Option<&dyn Fn(f64) -> Vec<f64>>,
) -> afge::Result<String> {
    let d = traj.y0.len();
    let mut out = String::new();
    let mut header: Vec<String> = std::iter::once("t".to_string())
        .chain(numbered("y", d))
        .collect();
    if exact.is_some() {
        header.extend(numbered("exact", d));
        header.push("abserr".into());
    }
    push_row(&mut out, header);
    for i in 0..DENSE_SAMPLES {
        let t = if i + 1 == DENSE_SAMPLES {
            traj.t1
        } else {
            traj.t0 + (traj.t1 - traj.t0) * i as f64 / (DENSE_SAMPLES - 1) as f64
        };
        let y = traj.dense_eval(t)?;
        let mut row: Vec<String> = std::iter::once(t.to_string()).chain(nums(&y)).collect();
        if let Some(f) = exact {
            let ex = f(t);
            let diff: Vec<f64> = y.iter().zip(&ex).map(|(a, b)| a - b).collect();
            row.extend(nums(&ex));
            row.push(inf_norm(&diff).to_string());
        }
        push_row(&mut out, row);
    }
    Ok(out)
}

// --- gradcheck ----------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradRow {
    pub afge: f64,
    pub fd: f64,
    pub rel_err: f64,
}

/// Relative difference, defined as 0 when both values are negligible.
pub fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale <= GRAD_ZERO {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Sensitivity gradient and central-difference gradient of
/// `0.5 |y(t1) - target|^2` for every parameter.
pub fn compare_gradients<F: DifferentiableField + ?Sized>(
    field: &F,
    theta: &[f64],
    y0: &[f64],
    cfg: &IntegratorConfig,
    target: &[f64],
    delta: f64,
) -> afge::Result<Vec<GradRow>> {
    let run = integrate_with_sensitivity(field, theta, y0, cfg)?;
    let afge = loss_gradient(&run.sens, &SquaredError.grad_y(&run.y_final, target))?;
    let fd = fd_gradient(field, theta, y0, cfg, &SquaredError, target, delta)?;
    Ok(afge
        .into_iter()
        .zip(fd)
        .map(|(a, f)| GradRow {
            afge: a,
            fd: f,
            rel_err: rel_err(a, f),
        })
        .collect())
}

/// Initial state for `gradcheck --problem mlp`.
pub fn mlp_initial_state(d: usize) -> Vec<f64> {
    (0..d).map(|i| 0.5 * (-0.5_f64).powi(i as i32)).collect()
}

pub fn gradcheck_csv(inv: &Invocation) -> Result<(Output, Result<(), CliError>), CliError> {
    let s = &inv.settings;
    let target_value = s.float("target").unwrap_or(2.0);
    let delta = s.float("delta").unwrap_or(1e-5);
    if !(delta > 0.0) {
        return Err(CliError::Usage("`delta` must be > 0".into()));
    }
    let rows = if inv.problem == "mlp" {
        s.restrict("gradcheck", &["params", "y0", "target", "delta", "d", "hidden"])?;
        let mlp = MlpField::new(s.count("d").unwrap_or(2), s.count("hidden").unwrap_or(4));
        if mlp.d == 0 || mlp.hidden == 0 {
            return Err(CliError::Usage("`d` and `hidden` must be >= 1".into()));
        }
        let theta = vector_or(s, "params", &mlp.init_params(inv.seed), mlp.n_params())?;
        let y0 = vector_or(s, "y0", &mlp_initial_state(mlp.d), mlp.d)?;
        let cfg = s.integrator(IntegratorConfig::new(0.0, 1.0).with_eps(1e-8))?;
        let target = vec![target_value; mlp.d];
        compare_gradients(&mlp, &theta, &y0, &cfg, &target, delta)
    } else {
        s.restrict("gradcheck", &["params", "y0", "target", "delta"])?;
        let spec = problem(&inv.problem)?;
        let theta = vector_or(s, "params", &spec.params_default, spec.field.dim_params())?;
        let y0 = vector_or(s, "y0", &spec.y0, spec.dim)?;
        let cfg = s.integrator(IntegratorConfig::new(spec.t0, spec.t1).with_eps(1e-8))?;
        let target = vec![target_value; spec.dim];
        compare_gradients(&*spec.field, &theta, &y0, &cfg, &target, delta)
    }
    .map_err(runtime)?;

    let mut csv = String::new();
    push_row(
        &mut csv,
        ["param_index", "afge_grad", "fd_grad", "rel_err"].map(String::from),
    );
    for (i, r) in rows.iter().enumerate() {
        push_row(
            &mut csv,
            [i.to_string(), r.afge.to_string(), r.fd.to_string(), r.rel_err.to_string()],
        );
    }
    let worst = rows.iter().map(|r| r.rel_err).fold(0.0, f64::max);
    let summary = format!(
        "{}: {} parameters, max rel_err {worst:e} (tolerance {GRAD_TOL:e})",
        inv.problem,
        rows.len()
    );
    let verdict = if worst <= GRAD_TOL {
        Ok(())
    } else {
        Err(CliError::CheckFailed(summary.clone()))
    };
    Ok((
        Output {
            csv,
            dense: None,
            summary,
        },
        verdict,
    ))
}

// --- sweep --------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub h: f64,
    pub global_err: f64,
    /// Largest per-step error estimate over the run.
    pub err_estimate: f64,
}

/// Fitted order, or `None` when every error is at rounding level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OrderFit {
    Slope(f64),
    Exact,
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

pub fn fit_order(rows: &[SweepRow], floor: f64) -> OrderFit {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.global_err > floor)
        .map(|r| (r.h, r.global_err))
        .collect();
    if pts.len() < 2 {
        OrderFit::Exact
    } else {
        OrderFit::Slope(loglog_slope(&pts))
    }
}

pub fn sweep_rows(spec: &ProblemSpec, theta: &[f64], base: &IntegratorConfig) -> afge::Result<Vec<SweepRow>> {
    let exact = spec.exact_solution(base.t1, theta)?;
    SWEEP_STEPS
        .iter()
        .map(|&h| {
            let cfg = base.clone().fixed(h);
            let traj = integrate(&*spec.field, theta, &spec.y0, &cfg)?;
            let diff: Vec<f64> = traj.y_final.iter().zip(&exact).map(|(a, b)| a - b).collect();
            Ok(SweepRow {
                h,
                global_err: inf_norm(&diff),
                err_estimate: traj.attempts.iter().map(|a| a.err).fold(0.0, f64::max),
            })
        })
        .collect()
}

pub fn sweep_csv(inv: &Invocation) -> Result<(Output, Result<(), CliError>), CliError> {
    let s = &inv.settings;
    s.restrict("sweep", &["params"])?;
    if s.get("t0").is_some() {
        return Err(CliError::Usage("sweep starts at the problem's own t0".into()));
    }
    let spec = problem(&inv.problem)?;
    if spec.exact.is_none() {
        return Err(CliError::Usage(format!(
            "sweep needs a problem with a closed-form solution; `{}` has none",
            spec.name
        )));
    }
    let theta = vector_or(s, "params", &spec.params_default, spec.field.dim_params())?;
    let base = s.integrator(IntegratorConfig::new(spec.t0, spec.t1))?;
    let rows = sweep_rows(&spec, &theta, &base).map_err(runtime)?;
    let scale = inf_norm(&spec.exact_solution(base.t1, &theta).map_err(runtime)?).max(1.0);
    let fit = fit_order(&rows, 1e-12 * scale);

    let mut csv = String::new();
    push_row(
        &mut csv,
        ["h", "global_err", "err_estimate", "order_fit"].map(String::from),
    );
    for (i, r) in rows.iter().enumerate() {
        let last = i + 1 == rows.len();
        let fit_cell = match (last, fit) {
            (false, _) => String::new(),
            (true, OrderFit::Slope(k)) => k.to_string(),
            (true, OrderFit::Exact) => "exact".to_string(),
        };
        push_row(
            &mut csv,
            [r.h.to_string(), r.global_err.to_string(), r.err_estimate.to_string(), fit_cell],
        );
    }
    let (summary, ok) = match fit {
        OrderFit::Slope(k) => (
            format!(
                "{}: fitted order {k:.4} (accepted range [{}, {}])",
                spec.name, ORDER_RANGE.0, ORDER_RANGE.1
            ),
            (ORDER_RANGE.0..=ORDER_RANGE.1).contains(&k),
        ),
        OrderFit::Exact => (format!("{}: integrated exactly at every step size", spec.name), true),
    };
    let verdict = if ok {
        Ok(())
    } else {
        Err(CliError::CheckFailed(summary.clone()))
    };
    Ok((
        Output {
            csv,
            dense: None,
            summary,
        },
        verdict,
    ))
}

// --- train --------------------------------------------------------------------

pub fn train_csv(inv: &Invocation) -> Result<(Output, Result<(), CliError>), CliError> {
    let s = &inv.settings;
    s.restrict(
        "train",
        &[
            "d",
            "hidden",
            "n",
            "noise",
            "learning_rate",
            "epochs",
            "batch_size",
            "record_wall_time",
        ],
    )?;
    let task: Task = inv.problem.parse().map_err(CliError::Usage)?;
    let d = s.count("d").unwrap_or(3);
    let hidden = s.count("hidden").unwrap_or(16);
    let n = s.count("n").unwrap_or(200);
    let noise = s.float("noise").unwrap_or(DEFAULT_NOISE);
    if d < 2 || hidden == 0 {
        return Err(CliError::Usage("`d` must be >= 2 and `hidden` >= 1".into()));
    }
    if n < 8 || !n.is_multiple_of(2) {
        return Err(CliError::Usage(format!("`n` must be even and >= 8 (got {n})")));
    }
    if !(noise >= 0.0) {
        return Err(CliError::Usage("`noise` must be >= 0".into()));
    }
    let cfg = s.train(TrainConfig {
        seed: inv.seed,
        record_wall_time: false,
        ..TrainConfig::default()
    })?;

    let mlp = MlpField::new(d, hidden);
    let theta0 = mlp.init_params(cfg.seed);
    let readout0 = Readout::init(d, cfg.seed);
    let data = make_dataset_with_noise(task, n, cfg.seed, noise);
    let started = std::time::Instant::now();
    let outcome = afge::neural::train(&mlp, &theta0, &readout0, &data, &cfg).map_err(runtime)?;

    let mut csv = String::new();
    push_row(
        &mut csv,
        ["epoch", "mean_loss", "accuracy", "mean_steps", "wall_ms"].map(String::from),
    );
    for r in &outcome.log {
        push_row(
            &mut csv,
            [
                r.epoch.to_string(),
                r.mean_loss.to_string(),
                r.accuracy.to_string(),
                r.mean_steps.to_string(),
                r.wall_ms.to_string(),
            ],
        );
    }
    let goal = task.target_accuracy();
    let summary = format!(
        "{}: final accuracy {} after {} epochs in {:.1} s (target {goal})",
        task.name(),
        outcome.final_accuracy,
        cfg.epochs,
        started.elapsed().as_secs_f64()
    );
    let verdict = if outcome.final_accuracy >= goal {
        Ok(())
    } else {
        Err(CliError::CheckFailed(summary.clone()))
    };
    Ok((
        Output {
            csv,
            dense: None,
            summary,
        },
        verdict,
    ))
}
