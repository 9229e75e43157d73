use afge::neural::{
    make_dataset, one_hot, sample_gradient, train, MlpField, Readout, ReadoutCrossEntropy, Task,
    ToyDataset, TrainConfig,
};
use afge::problems::{get_problem, PROBLEM_NAMES};
use afge::{
    fd_gradient, integrate, integrate_with_sensitivity, loss_gradient, IntegratorConfig, Loss,
    SquaredError,
};

fn tight(t0: f64, t1: f64) -> IntegratorConfig {
    IntegratorConfig::new(t0, t1).with_eps(1e-8)
}

/// Infinity-norm relative error over components larger than 1e-8.
fn rel_inf(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().map(|x| x.abs()).fold(0.0, f64::max);
    a.iter()
        .zip(b)
        .filter(|(x, y)| x.abs().max(y.abs()) > 1e-8)
        .map(|(x, y)| (x - y).abs() / scale)
        .fold(0.0, f64::max)
}

#[test]
fn sensitivity_gradients_match_finite_differences_on_every_problem() {
    for name in PROBLEM_NAMES {
        let spec = get_problem(name).unwrap();
        // the chaotic horizon is replaced by a short one
        let t1 = if *name == "lorenz" { 1.0 } else { spec.t1 };
        let cfg = tight(spec.t0, t1);
        let theta = &spec.params_default;
        let target = vec![2.0; spec.dim];
        let run = integrate_with_sensitivity(&*spec.field, theta, &spec.y0, &cfg).unwrap();
        assert!(run.trajectory.stats.evals_consistent());
        let g = loss_gradient(&run.sens, &SquaredError.grad_y(&run.y_final, &target)).unwrap();
        let fd = fd_gradient(&*spec.field, theta, &spec.y0, &cfg, &SquaredError, &target, 1e-5)
            .unwrap();
        assert_eq!(g.len(), theta.len());
        assert!(rel_inf(&g, &fd) <= 1e-4, "{name}: {g:?} vs {fd:?}");
    }
}

#[test]
fn sensitivity_predicts_first_order_response() {
    let spec = get_problem("vdp").unwrap();
    let cfg = IntegratorConfig::new(0.0, 3.0).with_eps(1e-10);
    let theta = spec.params_default.clone();
    let run = integrate_with_sensitivity(&*spec.field, &theta, &spec.y0, &cfg).unwrap();
    let residual = |dtheta: f64| {
        let moved = integrate(&*spec.field, &[theta[0] + dtheta], &spec.y0, &cfg).unwrap();
        (0..spec.dim)
            .map(|i| (moved.y_final[i] - run.y_final[i] - run.sens[(i, 0)] * dtheta).abs())
            .fold(0.0, f64::max)
    };
    let ratio = residual(1e-2) / residual(5e-3);
    assert!((3.0..=5.0).contains(&ratio), "{ratio}");
}

#[test]
fn parameter_free_fields_give_empty_gradients() {
    let spec = get_problem("paper1").unwrap();
    let run = integrate_with_sensitivity(&*spec.field, &[], &spec.y0, &tight(0.0, 1.0)).unwrap();
    assert_eq!((run.sens.rows(), run.sens.cols()), (1, 0));
    assert!(loss_gradient(&run.sens, &[1.0]).unwrap().is_empty());
}

#[test]
fn error_control_over_sensitivities_takes_more_steps() {
    let spec = get_problem("vdp").unwrap();
    let base = IntegratorConfig::new(0.0, 10.0).with_eps(1e-5);
    let mut inclusive = base.clone();
    inclusive.error_norm_includes_sensitivity = true;
    let a = integrate_with_sensitivity(&*spec.field, &spec.params_default, &spec.y0, &base).unwrap();
    let b = integrate_with_sensitivity(&*spec.field, &spec.params_default, &spec.y0, &inclusive)
        .unwrap();
    assert!(b.trajectory.stats.n_accepted >= a.trajectory.stats.n_accepted);
    assert!(b.trajectory.records.iter().all(|r| r.err <= 1e-5));
}

#[test]
fn cross_entropy_pipeline_gradient_matches_finite_differences() {
    let mlp = MlpField::new(3, 8);
    let theta = mlp.init_params(7);
    let readout = Readout::init(3, 7);
    let y0 = mlp.embed([0.8, -1.1]);
    let cfg = tight(0.0, 1.0);
    let loss = ReadoutCrossEntropy { readout: &readout };
    let target = one_hot(1);
    let g = sample_gradient(&mlp, &readout, &theta, [0.8, -1.1], 1, &cfg).unwrap();
    let fd = fd_gradient(&mlp, &theta, &y0, &cfg, &loss, &target, 1e-5).unwrap();
    assert!(rel_inf(&g.grad_theta, &fd) <= 1e-4);
}

#[test]
fn one_sample_epoch_moves_parameters_by_minus_lr_times_gradient() {
    let mlp = MlpField::new(2, 4);
    let theta0 = mlp.init_params(3);
    let readout = Readout::init(2, 3);
    let data = ToyDataset {
        inputs: vec![[0.6, 0.9]],
        labels: vec![1],
        seed: 0,
    };
    let cfg = TrainConfig {
        epochs: 1,
        record_wall_time: false,
        ..TrainConfig::default()
    };
    let out = train(&mlp, &theta0, &readout, &data, &cfg).unwrap();
    let loss = ReadoutCrossEntropy { readout: &readout };
    let fd = fd_gradient(
        &mlp,
        &theta0,
        &mlp.embed(data.inputs[0]),
        &cfg.integrator,
        &loss,
        &one_hot(1),
        1e-5,
    )
    .unwrap();
    let step: Vec<f64> = out.theta.iter().zip(&theta0).map(|(a, b)| a - b).collect();
    let expected: Vec<f64> = fd.iter().map(|g| -cfg.learning_rate * g).collect();
    assert!(rel_inf(&step, &expected) <= 1e-3, "{step:?} vs {expected:?}");
}

#[test]
fn zero_learning_rate_leaves_parameters_untouched() {
    let mlp = MlpField::new(3, 4);
    let theta0 = mlp.init_params(1);
    let readout = Readout::init(3, 1);
    let data = make_dataset(Task::Circles, 16, 2);
    let cfg = TrainConfig {
        epochs: 3,
        learning_rate: 0.0,
        record_wall_time: false,
        ..TrainConfig::default()
    };
    let out = train(&mlp, &theta0, &readout, &data, &cfg).unwrap();
    assert_eq!(out.theta, theta0);
    assert_eq!(out.readout, readout);
    assert!(out.log.iter().all(|r| r.mean_loss == out.log[0].mean_loss));
}

#[test]
fn training_is_bit_deterministic() {
    let mlp = MlpField::new(3, 8);
    let data = make_dataset(Task::Spirals, 20, 9);
    let cfg = TrainConfig {
        epochs: 4,
        record_wall_time: false,
        ..TrainConfig::default()
    };
    let run = || {
        train(&mlp, &mlp.init_params(9), &Readout::init(3, 9), &data, &cfg).unwrap()
    };
    assert_eq!(run(), run());
}
