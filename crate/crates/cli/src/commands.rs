use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use evsampler_core::analysis::{
    check_feasibility, default_q_grid, fix_data_weights, fourier_coefficients, primary_covariance,
    random_layered_encoding,
};
use evsampler_core::generators::{
    build_dense_encoder_with_mode, build_product_encoder, build_simplex_encoder, simplex_grid_density,
    EvsModel, Program,
};
use evsampler_core::io::{with_suffix, write_atomic};
use evsampler_core::metrics::{w1_1d, w1_exact, w1_sliced, MetricReport, MAX_EXACT_N};
use evsampler_core::quantum::{spectral_summary, Observable};
use evsampler_core::reuploading::{build_reuploading, excited_minus_ground, FitResult};
use evsampler_core::rng::{derive_seed, uniform_input};
use evsampler_core::samplers::{
    gaussian_noise_model, sample_exact, sample_with_shots, SampleSet, ShotConfig,
};
use evsampler_core::target_maps::{
    build_grid_density, build_triangular_map, default_resolution, families, sample_via_map,
    GridDensity,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{
    CheckObservable, CheckSource, Command, ConfigError, EncoderKind, ExperimentConfig, RankSource,
    SampleModeSpec, TargetFamily, TargetSpec, W1Method,
};

/// Stream key for reference draws in `w1`, kept apart from the sample inputs.
const REFERENCE_KEY: u64 = 1;
/// Stream key for the random weights of `analyze-fourier`.
const FOURIER_WEIGHTS_KEY: u64 = 2;

#[derive(Debug)]
pub enum CliError {
    /// Malformed config or inputs. Exit status 1.
    Validation(Vec<String>),
    /// A valid request that failed while running. Exit status 2.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(errs) => {
                for (i, e) in errs.iter().enumerate() {
                    if i > 0 {
                        writeln!(f)?;
                    }
                    write!(f, "error: {e}")?;
                }
                Ok(())
            }
            CliError::Runtime(msg) => write!(f, "error: {msg}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Validation(e.errors)
    }
}

impl From<evsampler_core::Error> for CliError {
    fn from(e: evsampler_core::Error) -> Self {
        if e.is_validation() {
            CliError::Validation(vec![e.to_string()])
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Runtime(format!("json: {e}"))
    }
}

type Result<T> = std::result::Result<T, CliError>;

/// Run `command` and return the paths of the artifacts it wrote.
pub fn execute(cfg: &ExperimentConfig, command: Command, out_dir: &Path) -> Result<Vec<PathBuf>> {
    cfg.check_requirements(command)?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", out_dir.display())))?;
    match command {
        Command::Fit => fit(cfg, out_dir),
        Command::Sample => sample(cfg, out_dir),
        Command::W1 => w1(cfg, out_dir),
        Command::AnalyzeRank => analyze_rank(cfg, out_dir),
        Command::AnalyzeFourier => analyze_fourier(cfg, out_dir),
        Command::Check => check(cfg, out_dir),
    }
}

fn stamped<T: Serialize>(value: &T, hash: &str) -> Result<Value> {
    let mut v = serde_json::to_value(value)?;
    match v.as_object_mut() {
        Some(obj) => {
            obj.insert("config_hash".into(), Value::String(hash.into()));
            Ok(v)
        }
        None => Ok(json!({ "config_hash": hash, "value": v })),
    }
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())?;
    Ok(())
}

fn require_file(path: &Path, key: &str) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Validation(vec![format!(
            "{key}: file not found: {}",
            path.display()
        )]))
    }
}

fn load_model(path: &Path, key: &str) -> Result<EvsModel> {
    require_file(path, key)?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))?;
    EvsModel::from_json(&text)
        .map_err(|e| CliError::Validation(vec![format!("{key}: {e}")]))
}

fn load_samples(path: &Path, key: &str) -> Result<SampleSet> {
    require_file(path, key)?;
    SampleSet::read(path).map_err(|e| CliError::Validation(vec![format!("{key}: {e}")]))
}

/// Grid density for the target. Dirichlet targets are tabulated in
/// stick-breaking coordinates.
fn target_density(target: &TargetSpec) -> Result<GridDensity> {
    let res = |dims: usize| target.resolution.unwrap_or_else(|| default_resolution(dims));
    let density = match &target.family {
        TargetFamily::Uniform { dims } => build_grid_density(families::uniform, *dims, res(*dims))?,
        TargetFamily::Bimodal => build_grid_density(families::bimodal, 1, res(1))?,
        TargetFamily::CorrelatedGaussian { rho } => {
            build_grid_density(families::correlated_gaussian(*rho), 2, res(2))?
        }
        TargetFamily::Dirichlet { alpha } => {
            let m = alpha.len();
            simplex_grid_density(families::dirichlet(alpha.clone()), m, res(m - 1))?
        }
        TargetFamily::File { path } => GridDensity::read(path)
            .map_err(|e| CliError::Validation(vec![format!("target.path: {e}")]))?,
    };
    Ok(density)
}

fn build_model(cfg: &ExperimentConfig) -> Result<(EvsModel, Option<Vec<FitResult>>)> {
    let (Some(target), Some(encoder)) = (&cfg.target, &cfg.encoder) else {
        return Err(CliError::Validation(vec![
            "building a model needs `target` and `encoder`".into(),
        ]));
    };
    let density = target_density(target)?;
    Ok(match encoder.kind {
        EncoderKind::Product => {
            let layers = encoder.layers.unwrap_or(1);
            let enc = build_product_encoder(&density, layers, &cfg.fit)?;
            (enc.model, Some(enc.fits))
        }
        EncoderKind::Dense => (build_dense_encoder_with_mode(&density, encoder.prep)?, None),
        EncoderKind::Simplex => (build_simplex_encoder(&density, density.dims() + 1)?, None),
    })
}

fn fit(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let (model, fits) = build_model(cfg)?;
    let model_path = out.join("model.json");
    let model_json: Value = serde_json::from_str(&model.to_json()?)?;
    let mut text = serde_json::to_string(&stamped(&model_json, &cfg.config_hash)?)?;
    text.push('\n');
    write_atomic(&model_path, text.as_bytes())?;
    let mut written = vec![model_path];
    if let Some(fits) = fits {
        let report = json!({
            "model_id": model.id(),
            "seed": cfg.seed,
            "fit": cfg.fit,
            "coordinates": fits,
        });
        let path = out.join("fit.json");
        write_json(&path, &stamped(&report, &cfg.config_hash)?)?;
        written.push(path);
    }
    Ok(written)
}

fn sample(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let section = cfg.sample.as_ref().expect("checked by requirements");
    let model = match &section.model {
        Some(path) => load_model(path, "sample.model")?,
        None => build_model(cfg)?.0,
    };
    let mut set = match section.mode {
        SampleModeSpec::Exact => sample_exact(&model, section.n, cfg.seed)?,
        SampleModeSpec::Shots { shots } => {
            sample_with_shots(&model, section.n, ShotConfig::new(shots)?, cfg.seed)?
        }
        SampleModeSpec::Gaussian { epsilon } => {
            gaussian_noise_model(&sample_exact(&model, section.n, cfg.seed)?, epsilon, cfg.seed)?
        }
    };
    set.meta.config_hash = Some(cfg.config_hash.clone());
    let path = out.join("samples.csv");
    set.write(&path)?;
    Ok(vec![path.clone(), with_suffix(&path, ".meta.json")])
}

fn w1(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let section = cfg.w1.as_ref().expect("checked by requirements");
    let a = load_samples(&section.a, "w1.a")?;
    let (b, b_source) = match &section.b {
        Some(path) => (load_samples(path, "w1.b")?, path.display().to_string()),
        None => {
            let target = cfg.target.as_ref().expect("checked by requirements");
            let map = build_triangular_map(&target_density(target)?);
            let n = section.reference_n.unwrap_or(a.len());
            let seed = derive_seed(cfg.seed, &[REFERENCE_KEY]);
            (sample_via_map(&map, n, seed)?, "target".to_string())
        }
    };
    if a.dims() != b.dims() {
        return Err(CliError::Validation(vec![format!(
            "w1: sample dimensions differ ({} vs {})",
            a.dims(),
            b.dims()
        )]));
    }
    let method = match section.method {
        W1Method::Auto if a.dims() == 1 => "1d",
        W1Method::Auto if a.len() == b.len() && a.len() <= MAX_EXACT_N => "exact",
        W1Method::Auto | W1Method::Sliced => "sliced",
        W1Method::Exact if a.dims() == 1 => "1d",
        W1Method::Exact => "exact",
    };
    let value = match method {
        "1d" => w1_1d(a.values(), b.values())?,
        "exact" => w1_exact(&a, &b)?,
        _ => w1_sliced(&a, &b, section.projections, cfg.seed)?,
    };
    let mut report = MetricReport::new("w1", value, a.len(), b.len())
        .with_param("method", method)
        .with_param("a", section.a.display().to_string())
        .with_param("b", b_source)
        .with_param("seed", cfg.seed)
        .with_param("config_hash", cfg.config_hash.as_str());
    if method == "sliced" {
        report = report.with_param("projections", section.projections);
    }
    let path = out.join("w1.json");
    write_json(&path, &serde_json::to_value(&report)?)?;
    Ok(vec![path])
}

fn analyze_rank(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let section = cfg.rank.as_ref().expect("checked by requirements");
    let (circuit, weights, input_dim) = match &section.source {
        RankSource::Model { path } => {
            let model = load_model(path, "rank.model")?;
            match model.program() {
                Program::Circuit { circuit, weights } => {
                    (circuit.clone(), weights.clone(), model.input_dim())
                }
                Program::Amplitude { .. } => {
                    return Err(CliError::Validation(vec![
                        "rank.model: analyze-rank needs a circuit model, not an amplitude encoder"
                            .into(),
                    ]))
                }
            }
        }
        RankSource::Random {
            n_qubits,
            input_dim,
            layers,
        } => {
            let (c, w) = random_layered_encoding(*n_qubits, *input_dim, *layers, cfg.seed)?;
            (c, w, *input_dim)
        }
    };
    let report = primary_covariance(
        &circuit,
        &weights,
        input_dim,
        section.samples,
        cfg.seed,
        section.threshold,
    )?;
    let path = out.join("rank.json");
    write_json(&path, &stamped(&report, &cfg.config_hash)?)?;
    Ok(vec![path])
}

fn analyze_fourier(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let section = cfg.fourier.as_ref().expect("checked by requirements");
    let rc = build_reuploading(section.data_dim, section.layers)?;
    let raw: Vec<f64> = uniform_input(
        derive_seed(cfg.seed, &[FOURIER_WEIGHTS_KEY]),
        0,
        rc.weight_count(),
    )
    .into_iter()
    .map(|u| PI * (2.0 * u - 1.0))
    .collect();
    let w = fix_data_weights(&rc, &raw, section.data_weight);
    let obs = excited_minus_ground(1, 0)?;
    obs.expectation(&rc.circuit().run(&w, &vec![0.0; section.data_dim])?)?;
    let f = |x: &[f64]| {
        let state = rc.circuit().run(&w, x).expect("inputs checked above");
        obs.expectation(&state).expect("observable checked above")
    };
    let spectrum = fourier_coefficients(f, section.data_dim, section.cutoff, section.points)?;

    let mut csv = String::new();
    for d in 1..=spectrum.dims {
        csv.push_str(&format!("k{d},"));
    }
    csv.push_str("re,im,abs\n");
    for (i, c) in spectrum.coefficients.iter().enumerate() {
        for k in spectrum.frequency(i) {
            csv.push_str(&format!("{k},"));
        }
        csv.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", c.re, c.im, c.norm()));
    }
    let path = out.join("fourier.csv");
    write_atomic(&path, csv.as_bytes())?;
    let meta = json!({
        "config_hash": cfg.config_hash,
        "seed": cfg.seed,
        "dims": spectrum.dims,
        "layers": section.layers,
        "cutoff": spectrum.cutoff,
        "points_per_dim": spectrum.points_per_dim,
        "data_weight": section.data_weight,
        "max_abs_beyond_layers": spectrum.max_beyond(section.layers),
        "conjugate_asymmetry": spectrum.conjugate_asymmetry(),
    });
    let meta_path = with_suffix(&path, ".meta.json");
    write_json(&meta_path, &meta)?;
    Ok(vec![path, meta_path])
}

fn check(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let section = cfg.check.as_ref().expect("checked by requirements");
    let (n, m, spectra) = match &section.source {
        CheckSource::Model { path } => {
            let model = load_model(path, "check.model")?;
            (model.n_qubits(), model.output_dim(), model.spectral_summaries()?)
        }
        CheckSource::Observable {
            n_qubits,
            output_dim,
            observable,
        } => {
            let (n, m) = (*n_qubits, *output_dim);
            let obs = match observable {
                CheckObservable::Z => Observable::z(n, 0)?,
                CheckObservable::ExcitedMinusGround => excited_minus_ground(n, 0)?,
                CheckObservable::BasisProjector => Observable::basis_projector(n, 0)?,
                CheckObservable::AmplifiedProjector => Observable::amplified_projector(n, 0, m)?,
            };
            (n, m, vec![spectral_summary(&obs)?])
        }
    };
    let q_grid = section.q_grid.clone().unwrap_or_else(default_q_grid);
    let report = check_feasibility(n, m, section.epsilon, &spectra, &q_grid)?;
    let path = out.join("check.json");
    write_json(&path, &stamped(&report, &cfg.config_hash)?)?;
    Ok(vec![path])
}
