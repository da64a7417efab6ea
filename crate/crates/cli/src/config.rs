//! TOML experiment configuration.
//!
//! ```toml
//! seed = 7
//! out_dir = "out"            # optional, `--out` wins
//! command = "sample"         # optional, `--command` wins
//!
//! [target]
//! family = "uniform"         # uniform | bimodal | correlated_gaussian | dirichlet | file
//! dims = 1                   # uniform only
//! rho = 0.7                  # correlated_gaussian only
//! alpha = [2.0, 3.0]         # dirichlet only, length M = 2^n
//! path = "density.csv"       # file only
//! resolution = 256           # optional grid resolution per axis
//!
//! [encoder]
//! kind = "product"           # product | dense | simplex
//! layers = 4                 # product only
//! prep = "exact_injection"   # dense only: exact_injection | rotation_cascade
//!
//! [fit]                      # all optional
//! grid_points_per_dim = 64
//! max_iters = 2000
//! step_size = 0.05
//! gradient = "central_difference"
//! tolerance = 1e-12
//! restarts = 4
//!
//! [sample]
//! n = 1000
//! model = "out/model.json"   # optional; otherwise built from target + encoder
//! mode = "exact"             # exact | shots | gaussian
//! shots = 100                # shots mode
//! epsilon = 0.05             # gaussian mode
//!
//! [w1]
//! a = "a.csv"
//! b = "b.csv"                # optional; otherwise reference draws from the target
//! method = "auto"            # auto | exact | sliced
//! projections = 128
//! reference_n = 1000
//!
//! [rank]
//! model = "out/model.json"   # or n_qubits + input_dim + layers for a random encoding
//! samples = 4096
//! threshold = 1e-8
//!
//! [fourier]
//! data_dim = 1
//! layers = 3
//! cutoff = 5
//! points = 24
//! data_weight = 1.0
//!
//! [check]
//! n_qubits = 1               # or model = "..."
//! output_dim = 4
//! epsilon = 0.1
//! observable = "z"           # z | excited_minus_ground | basis_projector | amplified_projector
//! q_grid = [0.6, 0.7]
//! ```
//!
//! Relative paths are resolved against the directory holding the config file.

use std::fmt;
use std::path::{Path, PathBuf};

use evsampler_core::generators::PrepMode;
use evsampler_core::reuploading::{FitConfig, GradientMode};
use serde::Serialize;
use sha2::{Digest, Sha256};
use toml::{Table, Value};

pub const COMMANDS: [&str; 6] = ["fit", "sample", "w1", "analyze-rank", "analyze-fourier", "check"];
const FAMILIES: [&str; 5] = ["uniform", "bimodal", "correlated_gaussian", "dirichlet", "file"];
const ENCODERS: [&str; 3] = ["product", "dense", "simplex"];
const PREP_MODES: [&str; 2] = ["exact_injection", "rotation_cascade"];
const GRADIENTS: [&str; 2] = ["central_difference", "parameter_shift"];
const SAMPLE_MODES: [&str; 3] = ["exact", "shots", "gaussian"];
const W1_METHODS: [&str; 3] = ["auto", "exact", "sliced"];
const CHECK_OBSERVABLES: [&str; 4] = ["z", "excited_minus_ground", "basis_projector", "amplified_projector"];

/// Every problem found in a config, each prefixed with its key path.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub errors: Vec<String>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.errors.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Fit,
    Sample,
    W1,
    AnalyzeRank,
    AnalyzeFourier,
    Check,
}

impl Command {
    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "fit" => Command::Fit,
            "sample" => Command::Sample,
            "w1" => Command::W1,
            "analyze-rank" => Command::AnalyzeRank,
            "analyze-fourier" => Command::AnalyzeFourier,
            "check" => Command::Check,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum TargetFamily {
    Uniform { dims: usize },
    Bimodal,
    CorrelatedGaussian { rho: f64 },
    Dirichlet { alpha: Vec<f64> },
    File { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TargetSpec {
    pub family: TargetFamily,
    pub resolution: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderKind {
    Product,
    Dense,
    Simplex,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EncoderSpec {
    pub kind: EncoderKind,
    pub layers: Option<usize>,
    pub prep: PrepMode,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SampleModeSpec {
    Exact,
    Shots { shots: u64 },
    Gaussian { epsilon: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleSpec {
    pub n: usize,
    pub model: Option<PathBuf>,
    pub mode: SampleModeSpec,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum W1Method {
    Auto,
    Exact,
    Sliced,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct W1Spec {
    pub a: PathBuf,
    pub b: Option<PathBuf>,
    pub method: W1Method,
    pub projections: usize,
    pub reference_n: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum RankSource {
    Model { path: PathBuf },
    Random { n_qubits: usize, input_dim: usize, layers: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankSpec {
    pub source: RankSource,
    pub samples: usize,
    pub threshold: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FourierSpec {
    pub data_dim: usize,
    pub layers: usize,
    pub cutoff: usize,
    pub points: usize,
    pub data_weight: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckObservable {
    Z,
    ExcitedMinusGround,
    BasisProjector,
    AmplifiedProjector,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum CheckSource {
    Model { path: PathBuf },
    Observable { n_qubits: usize, output_dim: usize, observable: CheckObservable },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckSpec {
    pub source: CheckSource,
    pub epsilon: f64,
    pub q_grid: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub command: Option<Command>,
    pub out_dir: Option<PathBuf>,
    pub target: Option<TargetSpec>,
    pub encoder: Option<EncoderSpec>,
    pub fit: FitConfig,
    pub sample: Option<SampleSpec>,
    pub w1: Option<W1Spec>,
    pub rank: Option<RankSpec>,
    pub fourier: Option<FourierSpec>,
    pub check: Option<CheckSpec>,
    /// Hex SHA-256 of the config text, updated by [`ExperimentConfig::override_seed`].
    pub config_hash: String,
}

impl ExperimentConfig {
    /// Replace the seed and fold the override into the config hash.
    pub fn override_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.fit.seed = seed;
        self.config_hash = sha256_hex(format!("{}\nseed-override={seed}", self.config_hash).as_bytes());
    }

    /// Sections and keys `command` needs beyond what parsing checks.
    pub fn check_requirements(&self, command: Command) -> Result<(), ConfigError> {
        let mut errs = Vec::new();
        let mut need = |present: bool, key: &str, why: &str| {
            if !present {
                errs.push(format!("missing required section `{key}` ({why})"));
            }
        };
        match command {
            Command::Fit => {
                need(self.target.is_some(), "target", "fit builds a model for a target");
                need(self.encoder.is_some(), "encoder", "fit builds a model for a target");
            }
            Command::Sample => {
                need(self.sample.is_some(), "sample", "sample needs a sample count");
                if self.sample.as_ref().is_some_and(|s| s.model.is_none()) {
                    need(self.target.is_some(), "target", "no `sample.model` given");
                    need(self.encoder.is_some(), "encoder", "no `sample.model` given");
                }
            }
            Command::W1 => {
                need(self.w1.is_some(), "w1", "w1 needs sample files");
                if self.w1.as_ref().is_some_and(|w| w.b.is_none()) {
                    need(self.target.is_some(), "target", "no `w1.b` given");
                }
            }
            Command::AnalyzeRank => need(self.rank.is_some(), "rank", "analyze-rank"),
            Command::AnalyzeFourier => need(self.fourier.is_some(), "fourier", "analyze-fourier"),
            Command::Check => need(self.check.is_some(), "check", "check"),
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigError { errors: errs })
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Read and validate a config file.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        errors: vec![format!("cannot read config {}: {e}", path.display())],
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config_str(&text, base)
}

/// Validate config text, resolving relative paths against `base_dir`.
pub fn parse_config_str(text: &str, base_dir: &Path) -> Result<ExperimentConfig, ConfigError> {
    let root: Table = text.parse().map_err(|e: toml::de::Error| ConfigError {
        errors: vec![format!("syntax error: {}", e.message())],
    })?;
    let mut p = Parser {
        errors: Vec::new(),
        base_dir,
    };
    let cfg = p.root(&root);
    match cfg {
        Some(cfg) if p.errors.is_empty() => Ok(ExperimentConfig {
            config_hash: sha256_hex(text.as_bytes()),
            ..cfg
        }),
        _ => Err(ConfigError { errors: p.errors }),
    }
}

fn key_path(section: &str, key: &str) -> String {
    if section.is_empty() {
        key.to_string()
    } else {
        format!("{section}.{key}")
    }
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::String(_) => "string",
        Value::Integer(_) => "integer",
        Value::Float(_) => "float",
        Value::Boolean(_) => "boolean",
        Value::Datetime(_) => "datetime",
        Value::Array(_) => "array",
        Value::Table(_) => "table",
    }
}

struct Parser<'a> {
    errors: Vec<String>,
    base_dir: &'a Path,
}

impl Parser<'_> {
    fn err(&mut self, section: &str, key: &str, msg: impl fmt::Display) {
        self.errors.push(format!("{}: {msg}", key_path(section, key)));
    }

    fn unknown_keys(&mut self, t: &Table, section: &str, allowed: &[&str]) {
        for k in t.keys() {
            if !allowed.contains(&k.as_str()) {
                let mut list: Vec<&str> = allowed.to_vec();
                list.sort_unstable();
                self.err(section, k, format!("unknown key (allowed: {})", list.join(", ")));
            }
        }
    }

    fn missing(&mut self, section: &str, key: &str) {
        self.errors
            .push(format!("missing required key `{}`", key_path(section, key)));
    }

    fn u64(&mut self, t: &Table, section: &str, key: &str) -> Option<u64> {
        match t.get(key)? {
            Value::Integer(i) if *i >= 0 => Some(*i as u64),
            Value::Integer(i) => {
                self.err(section, key, format!("must be nonnegative, got {i}"));
                None
            }
            v => {
                self.err(section, key, format!("expected integer, found {}", type_name(v)));
                None
            }
        }
    }

    fn usize(&mut self, t: &Table, section: &str, key: &str, min: usize) -> Option<usize> {
        let v = self.u64(t, section, key)? as usize;
        if v < min {
            self.err(section, key, format!("must be at least {min}, got {v}"));
            return None;
        }
        Some(v)
    }

    fn f64(&mut self, t: &Table, section: &str, key: &str) -> Option<f64> {
        match t.get(key)? {
            Value::Integer(i) => Some(*i as f64),
            Value::Float(x) if x.is_finite() => Some(*x),
            Value::Float(x) => {
                self.err(section, key, format!("must be finite, got {x}"));
                None
            }
            v => {
                self.err(section, key, format!("expected number, found {}", type_name(v)));
                None
            }
        }
    }

    fn f64_array(&mut self, t: &Table, section: &str, key: &str) -> Option<Vec<f64>> {
        let Value::Array(items) = t.get(key)? else {
            let found = type_name(&t[key]);
            self.err(section, key, format!("expected array of numbers, found {found}"));
            return None;
        };
        let mut out = Vec::with_capacity(items.len());
        for (i, v) in items.iter().enumerate() {
            match v {
                Value::Integer(x) => out.push(*x as f64),
                Value::Float(x) if x.is_finite() => out.push(*x),
                other => {
                    self.err(
                        section,
                        &format!("{key}[{i}]"),
                        format!("expected finite number, found {}", type_name(other)),
                    );
                    return None;
                }
            }
        }
        Some(out)
    }

    fn str<'t>(&mut self, t: &'t Table, section: &str, key: &str) -> Option<&'t str> {
        match t.get(key)? {
            Value::String(s) => Some(s),
            v => {
                self.err(section, key, format!("expected string, found {}", type_name(v)));
                None
            }
        }
    }

    fn choice(&mut self, t: &Table, section: &str, key: &str, allowed: &[&str]) -> Option<String> {
        let s = self.str(t, section, key)?;
        if allowed.contains(&s) {
            Some(s.to_string())
        } else {
            self.err(
                section,
                key,
                format!("unknown value {s:?} (allowed: {})", allowed.join(", ")),
            );
            None
        }
    }

    /// A path that must exist when the config is parsed.
    fn existing_path(&mut self, t: &Table, section: &str, key: &str) -> Option<PathBuf> {
        let p = self.base_dir.join(self.str(t, section, key)?);
        if !p.exists() {
            self.err(section, key, format!("file not found: {}", p.display()));
            return None;
        }
        Some(p)
    }

    /// A path to a file that an earlier command may still have to produce.
    fn input_path(&mut self, t: &Table, section: &str, key: &str) -> Option<PathBuf> {
        Some(self.base_dir.join(self.str(t, section, key)?))
    }

    fn table<'t>(&mut self, t: &'t Table, key: &str) -> Option<&'t Table> {
        match t.get(key)? {
            Value::Table(s) => Some(s),
            v => {
                self.err("", key, format!("expected table, found {}", type_name(v)));
                None
            }
        }
    }

    fn root(&mut self, t: &Table) -> Option<ExperimentConfig> {
        self.unknown_keys(
            t,
            "",
            &[
                "seed", "command", "out_dir", "target", "encoder", "fit", "sample", "w1", "rank",
                "fourier", "check",
            ],
        );
        if !t.contains_key("seed") {
            self.missing("", "seed");
        }
        let seed = self.u64(t, "", "seed");
        let command = self
            .choice(t, "", "command", &COMMANDS)
            .and_then(|c| Command::parse(&c));
        let out_dir = self.str(t, "", "out_dir").map(|s| self.base_dir.join(s));
        let target = self.table(t, "target").and_then(|s| self.target(s));
        let encoder = self.table(t, "encoder").and_then(|s| self.encoder(s));
        let fit = match self.table(t, "fit") {
            Some(s) => self.fit(s, seed.unwrap_or(0)),
            None => FitConfig {
                seed: seed.unwrap_or(0),
                ..FitConfig::default()
            },
        };
        let sample = self.table(t, "sample").and_then(|s| self.sample(s));
        let w1 = self.table(t, "w1").and_then(|s| self.w1(s));
        let rank = self.table(t, "rank").and_then(|s| self.rank(s));
        let fourier = self.table(t, "fourier").and_then(|s| self.fourier(s));
        let check = self.table(t, "check").and_then(|s| self.check(s));
        if let (Some(target), Some(encoder)) = (&target, &encoder) {
            self.compatible(target, encoder);
        }
        Some(ExperimentConfig {
            seed: seed?,
            command,
            out_dir,
            target,
            encoder,
            fit,
            sample,
            w1,
            rank,
            fourier,
            check,
            config_hash: String::new(),
        })
    }

    fn compatible(&mut self, target: &TargetSpec, encoder: &EncoderSpec) {
        let simplex_target = matches!(target.family, TargetFamily::Dirichlet { .. });
        match encoder.kind {
            EncoderKind::Simplex
                if !matches!(
                    target.family,
                    TargetFamily::Dirichlet { .. } | TargetFamily::File { .. }
                ) =>
            {
                self.err("encoder", "kind", "simplex encoder needs a dirichlet or file target");
            }
            EncoderKind::Product | EncoderKind::Dense if simplex_target => {
                self.err("target", "family", "dirichlet targets need the simplex encoder");
            }
            _ => {}
        }
    }

    fn target(&mut self, t: &Table) -> Option<TargetSpec> {
        const S: &str = "target";
        self.unknown_keys(t, S, &["family", "dims", "rho", "alpha", "path", "resolution"]);
        let resolution = self.usize(t, S, "resolution", 2);
        if !t.contains_key("family") {
            self.missing(S, "family");
            return None;
        }
        let family = self.choice(t, S, "family", &FAMILIES)?;
        let allowed_extra: &[&str] = match family.as_str() {
            "uniform" => &["dims"],
            "correlated_gaussian" => &["rho"],
            "dirichlet" => &["alpha"],
            "file" => &["path"],
            _ => &[],
        };
        for k in ["dims", "rho", "alpha", "path"] {
            if t.contains_key(k) && !allowed_extra.contains(&k) {
                self.err(S, k, format!("not used by family {family:?}"));
            }
        }
        let family = match family.as_str() {
            "uniform" => {
                let dims = if t.contains_key("dims") {
                    self.usize(t, S, "dims", 1)?
                } else {
                    1
                };
                TargetFamily::Uniform { dims }
            }
            "bimodal" => TargetFamily::Bimodal,
            "correlated_gaussian" => {
                if !t.contains_key("rho") {
                    self.missing(S, "rho");
                }
                let rho = self.f64(t, S, "rho")?;
                if rho.abs() >= 1.0 {
                    self.err(S, "rho", format!("must lie in (-1, 1), got {rho}"));
                    return None;
                }
                TargetFamily::CorrelatedGaussian { rho }
            }
            "dirichlet" => {
                if !t.contains_key("alpha") {
                    self.missing(S, "alpha");
                }
                let alpha = self.f64_array(t, S, "alpha")?;
                if alpha.len() < 2 || !alpha.len().is_power_of_two() {
                    self.err(
                        S,
                        "alpha",
                        format!("length must be a power of two >= 2, got {}", alpha.len()),
                    );
                    return None;
                }
                if alpha.iter().any(|&a| a <= 0.0) {
                    self.err(S, "alpha", "entries must be positive");
                    return None;
                }
                TargetFamily::Dirichlet { alpha }
            }
            _ => {
                if !t.contains_key("path") {
                    self.missing(S, "path");
                }
                TargetFamily::File {
                    path: self.existing_path(t, S, "path")?,
                }
            }
        };
        Some(TargetSpec { family, resolution })
    }

    fn encoder(&mut self, t: &Table) -> Option<EncoderSpec> {
        const S: &str = "encoder";
        self.unknown_keys(t, S, &["kind", "layers", "prep"]);
        if !t.contains_key("kind") {
            self.missing(S, "kind");
        }
        let kind = self.choice(t, S, "kind", &ENCODERS);
        let layers = self.usize(t, S, "layers", 1);
        let prep = match self.choice(t, S, "prep", &PREP_MODES).as_deref() {
            Some("rotation_cascade") => PrepMode::RotationCascade,
            _ => PrepMode::ExactInjection,
        };
        let kind = kind?;
        if kind != "dense" && t.contains_key("prep") {
            self.err(S, "prep", format!("not used by the {kind} encoder"));
        }
        let kind = match kind.as_str() {
            "product" => {
                if !t.contains_key("layers") {
                    self.missing(S, "layers");
                }
                EncoderKind::Product
            }
            other => {
                if t.contains_key("layers") {
                    self.err(S, "layers", format!("not used by the {other} encoder"));
                }
                if other == "dense" {
                    EncoderKind::Dense
                } else {
                    EncoderKind::Simplex
                }
            }
        };
        Some(EncoderSpec { kind, layers, prep })
    }

    fn fit(&mut self, t: &Table, seed: u64) -> FitConfig {
        const S: &str = "fit";
        self.unknown_keys(
            t,
            S,
            &["grid_points_per_dim", "max_iters", "step_size", "gradient", "tolerance", "restarts"],
        );
        let d = FitConfig::default();
        let cfg = FitConfig {
            grid_points_per_dim: self
                .usize(t, S, "grid_points_per_dim", 2)
                .unwrap_or(d.grid_points_per_dim),
            max_iters: self.usize(t, S, "max_iters", 0).unwrap_or(d.max_iters),
            step_size: self.f64(t, S, "step_size").unwrap_or(d.step_size),
            gradient_mode: match self.choice(t, S, "gradient", &GRADIENTS).as_deref() {
                Some("parameter_shift") => GradientMode::ParameterShift,
                _ => GradientMode::CentralDifference,
            },
            tolerance: self.f64(t, S, "tolerance").unwrap_or(d.tolerance),
            seed,
            restarts: self.usize(t, S, "restarts", 1).unwrap_or(d.restarts),
        };
        if let Err(e) = cfg.validate() {
            self.errors.push(format!("fit: {e}"));
        }
        cfg
    }

    fn sample(&mut self, t: &Table) -> Option<SampleSpec> {
        const S: &str = "sample";
        self.unknown_keys(t, S, &["n", "model", "mode", "shots", "epsilon"]);
        if !t.contains_key("n") {
            self.missing(S, "n");
        }
        let n = self.usize(t, S, "n", 1);
        let model = self.input_path(t, S, "model");
        let mode = self.choice(t, S, "mode", &SAMPLE_MODES);
        let mode = match mode.as_deref().unwrap_or("exact") {
            "shots" => {
                if !t.contains_key("shots") {
                    self.missing(S, "shots");
                }
                SampleModeSpec::Shots {
                    shots: self.usize(t, S, "shots", 1)? as u64,
                }
            }
            "gaussian" => {
                if !t.contains_key("epsilon") {
                    self.missing(S, "epsilon");
                }
                let epsilon = self.f64(t, S, "epsilon")?;
                if epsilon < 0.0 {
                    self.err(S, "epsilon", "must be nonnegative");
                    return None;
                }
                SampleModeSpec::Gaussian { epsilon }
            }
            m => {
                for k in ["shots", "epsilon"] {
                    if t.contains_key(k) {
                        self.err(S, k, format!("not used in {m} mode"));
                    }
                }
                SampleModeSpec::Exact
            }
        };
        Some(SampleSpec { n: n?, model, mode })
    }

    fn w1(&mut self, t: &Table) -> Option<W1Spec> {
        const S: &str = "w1";
        self.unknown_keys(t, S, &["a", "b", "method", "projections", "reference_n"]);
        if !t.contains_key("a") {
            self.missing(S, "a");
        }
        let a = self.input_path(t, S, "a");
        let b = self.input_path(t, S, "b");
        let method = match self.choice(t, S, "method", &W1_METHODS).as_deref() {
            Some("exact") => W1Method::Exact,
            Some("sliced") => W1Method::Sliced,
            _ => W1Method::Auto,
        };
        let projections = self.usize(t, S, "projections", 1).unwrap_or(128);
        let reference_n = self.usize(t, S, "reference_n", 1);
        if b.is_some() && reference_n.is_some() {
            self.err(S, "reference_n", "only used when `w1.b` is absent");
        }
        Some(W1Spec {
            a: a?,
            b,
            method,
            projections,
            reference_n,
        })
    }

    fn rank(&mut self, t: &Table) -> Option<RankSpec> {
        const S: &str = "rank";
        self.unknown_keys(
            t,
            S,
            &["model", "n_qubits", "input_dim", "layers", "samples", "threshold"],
        );
        let samples = self.usize(t, S, "samples", 2).unwrap_or(4096);
        let threshold = self.f64(t, S, "threshold").unwrap_or(1e-8);
        if threshold <= 0.0 {
            self.err(S, "threshold", "must be positive");
        }
        let source = if t.contains_key("model") {
            for k in ["n_qubits", "input_dim", "layers"] {
                if t.contains_key(k) {
                    self.err(S, k, "conflicts with `rank.model`");
                }
            }
            RankSource::Model {
                path: self.input_path(t, S, "model")?,
            }
        } else {
            for k in ["n_qubits", "input_dim", "layers"] {
                if !t.contains_key(k) {
                    self.missing(S, k);
                }
            }
            let n_qubits = self.usize(t, S, "n_qubits", 1);
            let input_dim = self.usize(t, S, "input_dim", 1);
            let layers = self.usize(t, S, "layers", 1);
            RankSource::Random {
                n_qubits: n_qubits?,
                input_dim: input_dim?,
                layers: layers?,
            }
        };
        Some(RankSpec {
            source,
            samples,
            threshold,
        })
    }

    fn fourier(&mut self, t: &Table) -> Option<FourierSpec> {
        const S: &str = "fourier";
        self.unknown_keys(t, S, &["data_dim", "layers", "cutoff", "points", "data_weight"]);
        if !t.contains_key("layers") {
            self.missing(S, "layers");
        }
        let data_dim = self.usize(t, S, "data_dim", 1).unwrap_or(1);
        let layers = self.usize(t, S, "layers", 1)?;
        let cutoff = self.usize(t, S, "cutoff", 0).unwrap_or(layers + 2);
        let points = self.usize(t, S, "points", 1).unwrap_or(4 * cutoff + 4);
        if points < 4 * cutoff + 4 {
            self.err(
                S,
                "points",
                format!("must be at least 4 * cutoff + 4 = {}", 4 * cutoff + 4),
            );
            return None;
        }
        let data_weight = self.f64(t, S, "data_weight").unwrap_or(1.0);
        Some(FourierSpec {
            data_dim,
            layers,
            cutoff,
            points,
            data_weight,
        })
    }

    fn check(&mut self, t: &Table) -> Option<CheckSpec> {
        const S: &str = "check";
        self.unknown_keys(
            t,
            S,
            &["model", "n_qubits", "output_dim", "epsilon", "observable", "q_grid"],
        );
        if !t.contains_key("epsilon") {
            self.missing(S, "epsilon");
        }
        let epsilon = self.f64(t, S, "epsilon");
        if let Some(e) = epsilon {
            if !(e > 0.0 && e < 1.0) {
                self.err(S, "epsilon", format!("must lie in (0, 1), got {e}"));
            }
        }
        let q_grid = self.f64_array(t, S, "q_grid");
        if let Some(q) = &q_grid {
            if q.is_empty() || q.iter().any(|&q| !(q > 0.5 && q < 1.0)) {
                self.err(S, "q_grid", "values must lie in (1/2, 1) and the grid must be nonempty");
            }
        }
        let source = if t.contains_key("model") {
            for k in ["n_qubits", "output_dim", "observable"] {
                if t.contains_key(k) {
                    self.err(S, k, "conflicts with `check.model`");
                }
            }
            CheckSource::Model {
                path: self.input_path(t, S, "model")?,
            }
        } else {
            for k in ["n_qubits", "output_dim"] {
                if !t.contains_key(k) {
                    self.missing(S, k);
                }
            }
            let n_qubits = self.usize(t, S, "n_qubits", 1);
            let output_dim = self.usize(t, S, "output_dim", 1);
            let observable = match self.choice(t, S, "observable", &CHECK_OBSERVABLES).as_deref() {
                Some("excited_minus_ground") => CheckObservable::ExcitedMinusGround,
                Some("basis_projector") => CheckObservable::BasisProjector,
                Some("amplified_projector") => CheckObservable::AmplifiedProjector,
                _ => CheckObservable::Z,
            };
            CheckSource::Observable {
                n_qubits: n_qubits?,
                output_dim: output_dim?,
                observable,
            }
        };
        Some(CheckSpec {
            source,
            epsilon: epsilon?,
            q_grid,
        })
    }
}
