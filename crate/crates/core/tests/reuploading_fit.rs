use evsampler_core::quantum::Observable;
use evsampler_core::reuploading::{
    build_reuploading, fit_to_function, FitConfig, GradientMode, GridFunction,
};
use evsampler_core::rng::keyed_rng;
use proptest::prelude::*;
use rand::Rng;

fn step(x: &[f64]) -> f64 {
    if x[0] < 0.5 {
        -1.0
    } else {
        1.0
    }
}

#[test]
fn step_target_loss_decreases_with_depth() {
    let z = Observable::pauli("Z").unwrap();
    let target = GridFunction::from_fn(1, 64, step).unwrap();
    let cfg = FitConfig {
        seed: 11,
        ..FitConfig::default()
    };
    let losses: Vec<f64> = [2, 4, 8]
        .iter()
        .map(|&l| {
            let c = build_reuploading(1, l).unwrap();
            fit_to_function(&c, &target, &z, &cfg).unwrap().final_loss
        })
        .collect();
    assert!(losses[0] > losses[1] && losses[1] > losses[2], "{losses:?}");
}

#[test]
fn best_restart_loss_is_nonincreasing_in_restart_count() {
    let z = Observable::pauli("Z").unwrap();
    let c = build_reuploading(1, 2).unwrap();
    let target = GridFunction::from_fn(1, 16, |x| 0.9 * (5.0 * x[0]).cos()).unwrap();
    let mut prev = f64::INFINITY;
    for restarts in 1..=4 {
        let cfg = FitConfig {
            max_iters: 150,
            restarts,
            seed: 5,
            ..FitConfig::default()
        };
        let r = fit_to_function(&c, &target, &z, &cfg).unwrap();
        assert_eq!(r.restart_losses.len(), restarts);
        assert!(r.final_loss <= prev);
        prev = r.final_loss;
    }
}

#[test]
fn two_dimensional_fit_improves_on_start() {
    let z = Observable::pauli("Z").unwrap();
    let c = build_reuploading(2, 3).unwrap();
    let target = GridFunction::from_fn(2, 6, |x| 0.5 * (x[0] - x[1])).unwrap();
    let cfg = FitConfig {
        max_iters: 200,
        restarts: 1,
        ..FitConfig::default()
    };
    let r = fit_to_function(&c, &target, &z, &cfg).unwrap();
    assert!(r.final_loss < r.loss_history[0]);
    assert_eq!(r.final_loss, *r.loss_history.last().unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn finite_difference_matches_parameter_shift(seed in any::<u64>(), m in 1usize..3, l in 1usize..4) {
        let c = build_reuploading(m, l).unwrap();
        let z = Observable::pauli("Z").unwrap();
        let mut rng = keyed_rng(seed, &[]);
        let w: Vec<f64> = (0..c.weight_count()).map(|_| rng.random_range(-3.0..3.0)).collect();
        let x: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
        let fd = c.gradient(&w, &x, &z, GradientMode::CentralDifference).unwrap();
        let ps = c.gradient(&w, &x, &z, GradientMode::ParameterShift).unwrap();
        for (a, b) in fd.iter().zip(&ps) {
            prop_assert!((a - b).abs() <= 1e-6, "{} vs {}", a, b);
        }
    }
}
