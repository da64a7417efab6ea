use evsampler_core::generators::{build_dense_encoder, build_product_encoder, EvsModel};
use evsampler_core::metrics::w1_1d;
use evsampler_core::quantum::{Binding, Circuit, GateOp, Observable};
use evsampler_core::reuploading::FitConfig;
use evsampler_core::samplers::sample_exact;
use evsampler_core::target_maps::{build_grid_density, build_triangular_map, families, sample_via_map};

#[test]
fn product_encoder_learns_uniform_target() {
    let density = build_grid_density(families::uniform, 1, 256).unwrap();
    let enc = build_product_encoder(&density, 8, &FitConfig::default()).unwrap();
    let samples = sample_exact(&enc.model, 100_000, 1).unwrap();
    let oracle = sample_via_map(&build_triangular_map(&density), 100_000, 2).unwrap();
    let w1 = w1_1d(samples.values(), oracle.values()).unwrap();
    assert!(w1 <= 0.05, "W1 {w1}");
}

#[test]
fn product_encoder_keeps_independent_coordinates_uncorrelated() {
    let pdf = |y: &[f64]| families::bimodal(&y[..1]) * (1.5 + y[1]);
    let density = build_grid_density(pdf, 2, 64).unwrap();
    let cfg = FitConfig {
        grid_points_per_dim: 12,
        max_iters: 400,
        restarts: 2,
        ..FitConfig::default()
    };
    let enc = build_product_encoder(&density, 3, &cfg).unwrap();
    assert_eq!(enc.model.n_qubits(), 2);
    let samples = sample_exact(&enc.model, 100_000, 5).unwrap();
    let rho = samples.correlation(0, 1);
    assert!(rho.abs() <= 0.05, "correlation {rho}");
}

#[test]
fn dense_encoder_marginals_match_uniform_target() {
    let density = build_grid_density(families::uniform, 3, 64).unwrap();
    let model = build_dense_encoder(&density).unwrap();
    let samples = sample_exact(&model, 100_000, 8).unwrap();
    let oracle = sample_via_map(&build_triangular_map(&density), 100_000, 9).unwrap();
    for m in 0..3 {
        let w1 = w1_1d(&samples.column(m), &oracle.column(m)).unwrap();
        assert!(w1 <= 0.02, "coordinate {m}: {w1}");
    }
}

#[test]
fn constant_circuit_gives_dirac_samples() {
    let mut c = Circuit::new(1).unwrap();
    c.push(GateOp::ry(0, Binding::Trainable { weight: 0 })).unwrap();
    let model = EvsModel::from_circuit("const", c, vec![0.8], vec![Observable::pauli("Z").unwrap()], 2).unwrap();
    let s = sample_exact(&model, 50, 3).unwrap();
    assert!(s.values().iter().all(|&v| v == s.values()[0]));
}

#[test]
fn samples_respect_observable_spectra() {
    let density = build_grid_density(families::bimodal, 1, 64).unwrap();
    let cfg = FitConfig {
        max_iters: 50,
        restarts: 1,
        grid_points_per_dim: 16,
        ..FitConfig::default()
    };
    let model = build_product_encoder(&density, 2, &cfg).unwrap().model;
    let spectra = model.spectral_summaries().unwrap();
    let s = sample_exact(&model, 2000, 4).unwrap();
    for row in s.rows() {
        for (v, sp) in row.iter().zip(&spectra) {
            assert!(*v >= sp.lambda_min - 1e-12 && *v <= sp.lambda_max + 1e-12);
        }
    }
}
