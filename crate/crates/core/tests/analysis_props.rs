use evsampler_core::analysis::{
    default_q_grid, fix_data_weights, fourier_coefficients, holevo_chernoff_coefficient,
    primary_covariance, primary_map_eval, random_layered_encoding, sample_covariance,
    symmetric_eigenvalues, numerical_rank, DEFAULT_RANK_THRESHOLD,
};
use evsampler_core::quantum::{pauli_basis, Circuit, GateOp, Binding, Observable};
use evsampler_core::reuploading::build_reuploading;
use evsampler_core::rng::{keyed_rng, uniform_input};
use rand::Rng;

#[test]
fn observables_act_linearly_on_primary_map() {
    for trial in 0..50u64 {
        let n = 1 + (trial % 2) as usize;
        let (c, w) = random_layered_encoding(n, 2, 2, trial).unwrap();
        let mut rng = keyed_rng(trial, &[1]);
        let basis = pauli_basis(n).unwrap();
        let a: Vec<f64> = (0..basis.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let terms = basis
            .iter()
            .zip(&a)
            .map(|(_, &coef)| coef)
            .collect::<Vec<_>>();
        let obs = Observable::pauli_sum(
            n,
            (0..basis.len())
                .map(|k| (terms[k], evsampler_core::quantum::PauliString::from_index(k, n)))
                .collect(),
        )
        .unwrap();
        let x = uniform_input(trial, 0, 2);
        let p = primary_map_eval(&c, &w, &x).unwrap();
        let lin: f64 = a.iter().zip(&p).map(|(ai, pi)| ai * pi).sum();
        let direct = obs.expectation(&c.run(&w, &x).unwrap()).unwrap();
        assert!((lin - direct).abs() <= 1e-10);
    }
}

#[test]
fn observable_model_rank_is_bounded_by_primary_rank() {
    let (c, w) = random_layered_encoding(2, 1, 2, 77).unwrap();
    let report = primary_covariance(&c, &w, 1, 2048, 3, DEFAULT_RANK_THRESHOLD).unwrap();
    let d = 16;
    let rows: Vec<Vec<f64>> = (0..2048)
        .map(|i| primary_map_eval(&c, &w, &uniform_input(3, i, 1)).unwrap())
        .collect();
    let mut rng = keyed_rng(5, &[]);
    for m in [2usize, 5, 10] {
        let a: Vec<Vec<f64>> = (0..m).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let out: Vec<Vec<f64>> = rows
            .iter()
            .map(|p| a.iter().map(|ai| ai.iter().zip(p).map(|(x, y)| x * y).sum()).collect())
            .collect();
        let ev = symmetric_eigenvalues(&sample_covariance(&out), m);
        assert!(numerical_rank(&ev, DEFAULT_RANK_THRESHOLD) <= report.numerical_rank);
    }
    let cov = &report.covariance;
    for i in 0..d {
        assert!(cov[i].abs() <= 1e-9 && cov[i * d].abs() <= 1e-9);
        for j in 0..d {
            assert!((cov[i * d + j] - cov[j * d + i]).abs() <= 1e-9);
        }
    }
    assert!(report.eigenvalues.iter().all(|&e| e >= -1e-9));
}

#[test]
fn rank_bounds_hold_for_random_encodings() {
    for seed in 0..5 {
        let (c, w) = random_layered_encoding(1, 3, 4, seed).unwrap();
        let r = primary_covariance(&c, &w, 3, 1024, seed, DEFAULT_RANK_THRESHOLD).unwrap();
        assert!(r.numerical_rank <= 3);
    }
    let (c, w) = random_layered_encoding(3, 3, 2, 9).unwrap();
    let r = primary_covariance(&c, &w, 3, 512, 1, DEFAULT_RANK_THRESHOLD).unwrap();
    assert!(r.numerical_rank <= 63);
}

#[test]
fn integer_spectrum_cutoff_in_two_dimensions() {
    let rc = build_reuploading(2, 2).unwrap();
    let mut rng = keyed_rng(8, &[]);
    let raw: Vec<f64> = (0..rc.weight_count()).map(|_| rng.random_range(-3.0..3.0)).collect();
    let w = fix_data_weights(&rc, &raw, 1.0);
    let z = Observable::pauli("Z").unwrap();
    let f = |x: &[f64]| z.expectation(&rc.circuit().run(&w, x).unwrap()).unwrap();
    let s = fourier_coefficients(f, 2, 4, 20).unwrap();
    assert!(s.max_beyond(2) <= 1e-9);
    assert!(s.conjugate_asymmetry() <= 1e-9);
}

#[test]
fn single_encoding_gate_has_first_order_spectrum() {
    let mut c = Circuit::new(1).unwrap();
    c.push(GateOp::ry(0, Binding::Constant { angle: 1.0 })).unwrap();
    c.push(GateOp::rz(0, Binding::DataProduct { data: 0, weight: 0 })).unwrap();
    c.push(GateOp::ry(0, Binding::Constant { angle: 0.7 })).unwrap();
    let z = Observable::pauli("Z").unwrap();
    let f = |x: &[f64]| z.expectation(&c.run(&[1.0], x).unwrap()).unwrap();
    let s = fourier_coefficients(f, 1, 4, 20).unwrap();
    assert!(s.max_beyond(1) <= 1e-9);
}

#[test]
fn feasibility_coefficient_is_positive_and_peaks_at_upper_end() {
    let grid = default_q_grid();
    let vals: Vec<f64> = grid.iter().map(|&q| holevo_chernoff_coefficient(q)).collect();
    assert!(vals.iter().all(|v| v.is_finite() && *v > 0.0));
    // The coefficient increases on (1/2, 1), so the grid maximum sits at q = 0.99.
    assert!(vals.windows(2).all(|w| w[1] > w[0]));
}

// One qubit with observables sqrt(2) X and sqrt(2) Z reaches every point of
// [-1, 1]^2: the XZ shadow of the Bloch sphere is the unit disc.
#[test]
fn two_scaled_paulis_cover_the_square_with_one_qubit() {
    use evsampler_core::quantum::Pauli;
    let s = std::f64::consts::SQRT_2;
    let ox = Observable::single_qubit(1, 0, Pauli::X, s).unwrap();
    let oz = Observable::single_qubit(1, 0, Pauli::Z, s).unwrap();
    let mut c = Circuit::new(1).unwrap();
    c.push(GateOp::ry(0, Binding::Trainable { weight: 0 })).unwrap();
    c.push(GateOp::rz(0, Binding::Trainable { weight: 1 })).unwrap();
    let mut rng = keyed_rng(17, &[]);
    let mut targets: Vec<[f64; 2]> = vec![[1.0, 1.0], [-1.0, 1.0], [1.0, -1.0], [-1.0, -1.0], [0.0, 0.0]];
    targets.extend((0..200).map(|_| [rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)]));
    for y in targets {
        let (bx, bz) = (y[0] / s, y[1] / s);
        let by = (1.0 - bx * bx - bz * bz).max(0.0).sqrt();
        let theta = bz.clamp(-1.0, 1.0).acos();
        let phi = by.atan2(bx);
        let state = c.run(&[theta, phi], &[]).unwrap();
        let got = [ox.expectation(&state).unwrap(), oz.expectation(&state).unwrap()];
        assert!((got[0] - y[0]).abs() < 1e-12 && (got[1] - y[1]).abs() < 1e-12, "{y:?} -> {got:?}");
    }
}
