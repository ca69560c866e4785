//! Experiment configuration: a flat `key = value` text format with `#`
//! comments, no structured-format dependency, trivially diffable.
//!
//! Grid fields (`d`, `delta`, `n`, `batch`, `sigma2`) accept either a single
//! value or a bracketed list `[v1, v2, …]`; the `sweep` subcommand runs the
//! Cartesian product, every other subcommand requires singleton grids. The
//! `scheme` key may repeat, one spec per line. Every field has a canonical
//! textual form and `parse(format(config)) == config`.

use std::path::Path;

use thiserror::Error;

use crate::exact::MemoryBudget;
use crate::montecarlo::SimMode;
use crate::problem::{
    make_instance, make_spectrum, DisplacementSpec, MomentModel, NoiseModel, ProblemError,
    ProblemInstance, SpectrumKind,
};
use crate::schemes::{parse_values_text, SchemeError, SchemeSpec};

/// Configuration parsing and resolution failures, with line numbers.
#[derive(Debug, Error)]
pub enum ConfigError {
    /// A line is not `key = value`, a comment, or blank.
    #[error("config line {line}: expected `key = value`, got `{text}`")]
    BadLine { line: usize, text: String },
    /// The key is not part of the documented vocabulary.
    #[error("config line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    /// A non-repeatable key occurred twice.
    #[error("config line {line}: duplicate key `{key}` (only `scheme` may repeat)")]
    DuplicateKey { line: usize, key: String },
    /// The value failed to parse or validate.
    #[error("config line {line}: bad value for `{key}`: {why}")]
    BadValue {
        line: usize,
        key: &'static str,
        why: String,
    },
    /// A grid list had no entries.
    #[error("config line {line}: empty list for `{key}`")]
    EmptyList { line: usize, key: &'static str },
    /// A scheme spec failed to parse.
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    /// An instance component failed validation when resolved.
    #[error(transparent)]
    Problem(#[from] ProblemError),
    /// A `@FILE` reference could not be read.
    #[error("failed to read values file {path}: {source}")]
    ValuesFile {
        path: String,
        source: std::io::Error,
    },
    /// A `@FILE` reference had a malformed line.
    #[error("values file {path} line {line}: cannot parse `{value}` as a number")]
    ValuesFileLine {
        path: String,
        line: usize,
        value: String,
    },
}

/// Textual spectrum spec: `power_law:A` or `explicit:@FILE`.
#[derive(Clone, Debug, PartialEq)]
pub enum SpectrumSpecText {
    /// `power_law:A` — `λ_i = i^{-A}` at each grid dimension.
    PowerLaw { a: f64 },
    /// `explicit:@FILE` — one eigenvalue per line; the file length must equal
    /// the (single) configured dimension.
    ExplicitFile { path: String },
}

/// Textual displacement spec: `ones`, `source:B`, `gaussian:SEED`, or
/// `explicit:@FILE`.
#[derive(Clone, Debug, PartialEq)]
pub enum DisplacementSpecText {
    /// `ones` — every coordinate displaced by 1.
    Ones,
    /// `source:B` — power-law source condition `λ_i η_i² = i^{-B}` (requires
    /// a power-law spectrum).
    Source { b: f64 },
    /// `gaussian:SEED` — i.i.d. standard normal coordinates from the seed.
    Gaussian { seed: u64 },
    /// `explicit:@FILE` — one displacement per line.
    ExplicitFile { path: String },
}

/// Textual noise spec: `well_specified` or `diagonal:@FILE`.
#[derive(Clone, Debug, PartialEq)]
pub enum NoiseSpecText {
    /// `well_specified` — `Σ = σ²H`.
    WellSpecified,
    /// `diagonal:@FILE` — explicit diagonal of `Σ` in the eigenbasis.
    DiagonalFile { path: String },
}

/// Textual fourth-moment spec: `gaussian_default` or `custom:PSI:BETA`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MomentSpecText {
    /// Gaussian features: ψ = 3, β = 1.
    GaussianDefault,
    /// Explicit constants.
    Custom { psi: f64, beta: f64 },
}

/// A parsed experiment configuration. Grid fields hold one or more values;
/// `sweep` expands their Cartesian product.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    /// Experiment id used in artifact names and the CSV `experiment` column
    /// (`[A-Za-z0-9_-]+`).
    pub experiment: String,
    /// Dimension grid.
    pub dims: Vec<usize>,
    /// Spectrum spec.
    pub spectrum: SpectrumSpecText,
    /// Displacement spec.
    pub displacement: DisplacementSpecText,
    /// Label-noise variance grid.
    pub sigma2s: Vec<f64>,
    /// Fourth-moment model.
    pub moment: MomentSpecText,
    /// Noise covariance model.
    pub noise: NoiseSpecText,
    /// Averaging schemes (the `scheme` key repeats, one spec per line).
    pub schemes: Vec<SchemeSpec>,
    /// Stepsize grid.
    pub deltas: Vec<f64>,
    /// Horizon grid.
    pub horizons: Vec<usize>,
    /// Batch-size grid.
    pub batches: Vec<usize>,
    /// Monte Carlo trial count.
    pub trials: usize,
    /// Master seed for all Monte Carlo work.
    pub master_seed: u64,
    /// Exact-engine memory budget (`full` or `low`).
    pub memory_budget: MemoryBudget,
    /// Simulation mode (`full`, `bias`, or `variance`).
    pub sim_mode: SimMode,
    /// Step stride for per-step outputs (0 = final step only).
    pub stride: usize,
    /// Source-condition displacement exponent used by `critical_batch` when
    /// the displacement spec itself is not `source:B`.
    pub source_b: f64,
    /// Total sample budget `M` for `critical_batch`.
    pub budget: f64,
    /// Output directory.
    pub out_dir: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: "run".to_string(),
            dims: vec![10],
            spectrum: SpectrumSpecText::PowerLaw { a: 2.0 },
            displacement: DisplacementSpecText::Ones,
            sigma2s: vec![1.0],
            moment: MomentSpecText::GaussianDefault,
            noise: NoiseSpecText::WellSpecified,
            schemes: vec![SchemeSpec::Ema { alpha: 0.9 }],
            deltas: vec![0.1],
            horizons: vec![100],
            batches: vec![1],
            trials: 10,
            master_seed: 12345,
            memory_budget: MemoryBudget::Full,
            sim_mode: SimMode::Full,
            stride: 1,
            source_b: 1.0,
            budget: 1e6,
            out_dir: "out".to_string(),
        }
    }
}

fn spectrum_to_string(s: &SpectrumSpecText) -> String {
    match s {
        SpectrumSpecText::PowerLaw { a } => format!("power_law:{a}"),
        SpectrumSpecText::ExplicitFile { path } => format!("explicit:@{path}"),
    }
}

fn displacement_to_string(s: &DisplacementSpecText) -> String {
    match s {
        DisplacementSpecText::Ones => "ones".to_string(),
        DisplacementSpecText::Source { b } => format!("source:{b}"),
        DisplacementSpecText::Gaussian { seed } => format!("gaussian:{seed}"),
        DisplacementSpecText::ExplicitFile { path } => format!("explicit:@{path}"),
    }
}

fn noise_to_string(s: &NoiseSpecText) -> String {
    match s {
        NoiseSpecText::WellSpecified => "well_specified".to_string(),
        NoiseSpecText::DiagonalFile { path } => format!("diagonal:@{path}"),
    }
}

fn moment_to_string(s: &MomentSpecText) -> String {
    match s {
        MomentSpecText::GaussianDefault => "gaussian_default".to_string(),
        MomentSpecText::Custom { psi, beta } => format!("custom:{psi}:{beta}"),
    }
}

fn memory_budget_to_string(m: MemoryBudget) -> &'static str {
    match m {
        MemoryBudget::Full => "full",
        MemoryBudget::Low => "low",
    }
}

fn list_to_string<T: std::fmt::Display>(values: &[T]) -> String {
    if values.len() == 1 {
        return format!("{}", values[0]);
    }
    let items: Vec<String> = values.iter().map(|v| format!("{v}")).collect();
    format!("[{}]", items.join(", "))
}

impl ExperimentConfig {
    /// Canonical textual form; `parse(format(config)) == config`. This text
    /// (not the on-disk file) is what run manifests checksum.
    pub fn format(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        kv("experiment", self.experiment.clone());
        kv("d", list_to_string(&self.dims));
        kv("spectrum", spectrum_to_string(&self.spectrum));
        kv("displacement", displacement_to_string(&self.displacement));
        kv("sigma2", list_to_string(&self.sigma2s));
        kv("moment_model", moment_to_string(&self.moment));
        kv("noise_model", noise_to_string(&self.noise));
        for scheme in &self.schemes {
            kv("scheme", scheme.to_spec_string());
        }
        kv("delta", list_to_string(&self.deltas));
        kv("n", list_to_string(&self.horizons));
        kv("batch", list_to_string(&self.batches));
        kv("trials", self.trials.to_string());
        kv("master_seed", self.master_seed.to_string());
        kv(
            "memory_budget",
            memory_budget_to_string(self.memory_budget).to_string(),
        );
        kv("sim_mode", self.sim_mode.as_str().to_string());
        kv("stride", self.stride.to_string());
        kv("source_b", format!("{}", self.source_b));
        kv("budget", format!("{}", self.budget));
        kv("out", self.out_dir.clone());
        out
    }

    /// Parse a config text. Unset keys keep their defaults; `parse("")` is
    /// exactly `ExperimentConfig::default()`.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut config = ExperimentConfig::default();
        let mut seen: Vec<&'static str> = Vec::new();
        let mut schemes_set = false;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let stripped = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            let stripped = stripped.trim();
            if stripped.is_empty() {
                continue;
            }
            let Some((key_raw, value_raw)) = stripped.split_once('=') else {
                return Err(ConfigError::BadLine {
                    line,
                    text: stripped.to_string(),
                });
            };
            let key = key_raw.trim();
            let value = value_raw.trim();
            if key != "scheme" {
                let canonical = KEYS
                    .iter()
                    .copied()
                    .find(|&k| k == key)
                    .ok_or_else(|| ConfigError::UnknownKey {
                        line,
                        key: key.to_string(),
                    })?;
                if seen.contains(&canonical) {
                    return Err(ConfigError::DuplicateKey {
                        line,
                        key: key.to_string(),
                    });
                }
                seen.push(canonical);
            }
            apply_key(&mut config, key, value, line, &mut schemes_set)?;
        }
        Ok(config)
    }

    /// Resolve one grid cell to a validated instance, reading any `@FILE`
    /// references relative to `base_dir`.
    pub fn resolve_instance(
        &self,
        d: usize,
        sigma2: f64,
        base_dir: &Path,
    ) -> Result<ProblemInstance, ConfigError> {
        let spectrum = match &self.spectrum {
            SpectrumSpecText::PowerLaw { a } => {
                make_spectrum(SpectrumKind::PowerLaw { a: *a }, d)?
            }
            SpectrumSpecText::ExplicitFile { path } => {
                let values = read_values(path, base_dir)?;
                make_spectrum(SpectrumKind::Explicit { values }, d)?
            }
        };
        let displacement = match &self.displacement {
            DisplacementSpecText::Ones => DisplacementSpec::Explicit {
                values: vec![1.0; d],
            },
            DisplacementSpecText::Source { b } => DisplacementSpec::SourceCondition { b: *b },
            DisplacementSpecText::Gaussian { seed } => {
                DisplacementSpec::GaussianRandom { seed: *seed }
            }
            DisplacementSpecText::ExplicitFile { path } => DisplacementSpec::Explicit {
                values: read_values(path, base_dir)?,
            },
        };
        let moment = match self.moment {
            MomentSpecText::GaussianDefault => MomentModel::GaussianDefault,
            MomentSpecText::Custom { psi, beta } => MomentModel::Custom { psi, beta },
        };
        let noise = match &self.noise {
            NoiseSpecText::WellSpecified => NoiseModel::WellSpecified,
            NoiseSpecText::DiagonalFile { path } => NoiseModel::Diagonal {
                values: read_values(path, base_dir)?,
            },
        };
        Ok(make_instance(spectrum, displacement, sigma2, moment, noise)?)
    }
}

/// Non-repeatable keys, in canonical output order.
const KEYS: [&str; 18] = [
    "experiment",
    "d",
    "spectrum",
    "displacement",
    "sigma2",
    "moment_model",
    "noise_model",
    "delta",
    "n",
    "batch",
    "trials",
    "master_seed",
    "memory_budget",
    "sim_mode",
    "stride",
    "source_b",
    "budget",
    "out",
];

fn read_values(path: &str, base_dir: &Path) -> Result<Vec<f64>, ConfigError> {
    let full = if Path::new(path).is_absolute() {
        Path::new(path).to_path_buf()
    } else {
        base_dir.join(path)
    };
    let text = std::fs::read_to_string(&full).map_err(|source| ConfigError::ValuesFile {
        path: full.display().to_string(),
        source,
    })?;
    parse_values_text(&text).map_err(|(line, value)| ConfigError::ValuesFileLine {
        path: full.display().to_string(),
        line,
        value,
    })
}

fn bad(line: usize, key: &'static str, why: impl Into<String>) -> ConfigError {
    ConfigError::BadValue {
        line,
        key,
        why: why.into(),
    }
}

/// Split a grid field into items: either one bare value or `[v1, v2, …]`.
fn grid_items<'v>(
    value: &'v str,
    line: usize,
    key: &'static str,
) -> Result<Vec<&'v str>, ConfigError> {
    if let Some(inner) = value.strip_prefix('[') {
        let inner = inner
            .strip_suffix(']')
            .ok_or_else(|| bad(line, key, "list is missing the closing `]`"))?;
        let items: Vec<&str> = inner
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .collect();
        if items.is_empty() {
            return Err(ConfigError::EmptyList { line, key });
        }
        Ok(items)
    } else {
        Ok(vec![value])
    }
}

/// Reject bracketed lists on scalar-only keys.
fn scalar_only(value: &str, line: usize, key: &'static str) -> Result<(), ConfigError> {
    if value.starts_with('[') {
        return Err(bad(
            line,
            key,
            "grids are only supported on d, delta, n, batch, sigma2",
        ));
    }
    Ok(())
}

fn parse_usize_grid(
    value: &str,
    line: usize,
    key: &'static str,
    min: usize,
) -> Result<Vec<usize>, ConfigError> {
    grid_items(value, line, key)?
        .into_iter()
        .map(|item| {
            let parsed: usize = item
                .parse()
                .map_err(|_| bad(line, key, format!("`{item}` is not a nonnegative integer")))?;
            if parsed < min {
                return Err(bad(line, key, format!("`{item}` must be >= {min}")));
            }
            Ok(parsed)
        })
        .collect()
}

fn parse_f64_grid(
    value: &str,
    line: usize,
    key: &'static str,
    check: impl Fn(f64) -> bool,
    expect: &str,
) -> Result<Vec<f64>, ConfigError> {
    grid_items(value, line, key)?
        .into_iter()
        .map(|item| {
            let parsed: f64 = item
                .parse()
                .map_err(|_| bad(line, key, format!("`{item}` is not a number")))?;
            if !check(parsed) {
                return Err(bad(line, key, format!("`{item}` must be {expect}")));
            }
            Ok(parsed)
        })
        .collect()
}

fn parse_scalar_f64(
    value: &str,
    line: usize,
    key: &'static str,
    check: impl Fn(f64) -> bool,
    expect: &str,
) -> Result<f64, ConfigError> {
    scalar_only(value, line, key)?;
    let parsed: f64 = value
        .parse()
        .map_err(|_| bad(line, key, format!("`{value}` is not a number")))?;
    if !check(parsed) {
        return Err(bad(line, key, format!("`{value}` must be {expect}")));
    }
    Ok(parsed)
}

/// Parse `tag:payload` specs whose payload may itself contain `:` (moment
/// constants). Returns (tag, rest-after-tag).
fn split_tag(value: &str) -> (&str, Option<&str>) {
    match value.split_once(':') {
        Some((tag, rest)) => (tag, Some(rest)),
        None => (value, None),
    }
}

fn apply_key(
    config: &mut ExperimentConfig,
    key: &str,
    value: &str,
    line: usize,
    schemes_set: &mut bool,
) -> Result<(), ConfigError> {
    match key {
        "experiment" => {
            scalar_only(value, line, "experiment")?;
            if value.is_empty()
                || !value
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
            {
                return Err(bad(
                    line,
                    "experiment",
                    format!("`{value}` must match [A-Za-z0-9_-]+"),
                ));
            }
            config.experiment = value.to_string();
        }
        "d" => config.dims = parse_usize_grid(value, line, "d", 1)?,
        "spectrum" => {
            scalar_only(value, line, "spectrum")?;
            config.spectrum = match split_tag(value) {
                ("power_law", Some(rest)) => {
                    let a: f64 = rest.trim().parse().map_err(|_| {
                        bad(line, "spectrum", format!("`{rest}` is not a number"))
                    })?;
                    if !a.is_finite() || a <= 0.0 {
                        return Err(bad(line, "spectrum", "the exponent must be positive"));
                    }
                    SpectrumSpecText::PowerLaw { a }
                }
                ("explicit", Some(rest)) => match rest.strip_prefix('@') {
                    Some(path) if !path.is_empty() => SpectrumSpecText::ExplicitFile {
                        path: path.to_string(),
                    },
                    _ => return Err(bad(line, "spectrum", "expected explicit:@FILE")),
                },
                _ => {
                    return Err(bad(
                        line,
                        "spectrum",
                        format!("`{value}`; expected power_law:A or explicit:@FILE"),
                    ))
                }
            };
        }
        "displacement" => {
            scalar_only(value, line, "displacement")?;
            config.displacement = match split_tag(value) {
                ("ones", None) => DisplacementSpecText::Ones,
                ("source", Some(rest)) => {
                    let b: f64 = rest.trim().parse().map_err(|_| {
                        bad(line, "displacement", format!("`{rest}` is not a number"))
                    })?;
                    if !b.is_finite() {
                        return Err(bad(line, "displacement", "the exponent must be finite"));
                    }
                    DisplacementSpecText::Source { b }
                }
                ("gaussian", Some(rest)) => {
                    let seed: u64 = rest.trim().parse().map_err(|_| {
                        bad(line, "displacement", format!("`{rest}` is not a u64 seed"))
                    })?;
                    DisplacementSpecText::Gaussian { seed }
                }
                ("explicit", Some(rest)) => match rest.strip_prefix('@') {
                    Some(path) if !path.is_empty() => DisplacementSpecText::ExplicitFile {
                        path: path.to_string(),
                    },
                    _ => return Err(bad(line, "displacement", "expected explicit:@FILE")),
                },
                _ => {
                    return Err(bad(
                        line,
                        "displacement",
                        format!("`{value}`; expected ones, source:B, gaussian:SEED, or explicit:@FILE"),
                    ))
                }
            };
        }
        "sigma2" => {
            config.sigma2s = parse_f64_grid(
                value,
                line,
                "sigma2",
                |v| v.is_finite() && v >= 0.0,
                "nonnegative and finite",
            )?;
        }
        "moment_model" => {
            scalar_only(value, line, "moment_model")?;
            config.moment = match split_tag(value) {
                ("gaussian_default", None) => MomentSpecText::GaussianDefault,
                ("custom", Some(rest)) => {
                    let Some((psi_text, beta_text)) = rest.split_once(':') else {
                        return Err(bad(line, "moment_model", "expected custom:PSI:BETA"));
                    };
                    let psi: f64 = psi_text.trim().parse().map_err(|_| {
                        bad(line, "moment_model", format!("`{psi_text}` is not a number"))
                    })?;
                    let beta: f64 = beta_text.trim().parse().map_err(|_| {
                        bad(line, "moment_model", format!("`{beta_text}` is not a number"))
                    })?;
                    if !psi.is_finite() || !beta.is_finite() {
                        return Err(bad(line, "moment_model", "psi and beta must be finite"));
                    }
                    MomentSpecText::Custom { psi, beta }
                }
                _ => {
                    return Err(bad(
                        line,
                        "moment_model",
                        format!("`{value}`; expected gaussian_default or custom:PSI:BETA"),
                    ))
                }
            };
        }
        "noise_model" => {
            scalar_only(value, line, "noise_model")?;
            config.noise = match split_tag(value) {
                ("well_specified", None) => NoiseSpecText::WellSpecified,
                ("diagonal", Some(rest)) => match rest.strip_prefix('@') {
                    Some(path) if !path.is_empty() => NoiseSpecText::DiagonalFile {
                        path: path.to_string(),
                    },
                    _ => return Err(bad(line, "noise_model", "expected diagonal:@FILE")),
                },
                _ => {
                    return Err(bad(
                        line,
                        "noise_model",
                        format!("`{value}`; expected well_specified or diagonal:@FILE"),
                    ))
                }
            };
        }
        "scheme" => {
            let spec = SchemeSpec::parse(value)?;
            if *schemes_set {
                config.schemes.push(spec);
            } else {
                config.schemes = vec![spec];
                *schemes_set = true;
            }
        }
        "delta" => {
            config.deltas = parse_f64_grid(
                value,
                line,
                "delta",
                |v| v.is_finite() && v > 0.0,
                "positive and finite",
            )?;
        }
        "n" => config.horizons = parse_usize_grid(value, line, "n", 1)?,
        "batch" => config.batches = parse_usize_grid(value, line, "batch", 1)?,
        "trials" => {
            scalar_only(value, line, "trials")?;
            config.trials = value
                .parse()
                .map_err(|_| bad(line, "trials", format!("`{value}` is not an integer")))?;
            if config.trials == 0 {
                return Err(bad(line, "trials", "must be >= 1"));
            }
        }
        "master_seed" => {
            scalar_only(value, line, "master_seed")?;
            config.master_seed = value
                .parse()
                .map_err(|_| bad(line, "master_seed", format!("`{value}` is not a u64")))?;
        }
        "memory_budget" => {
            scalar_only(value, line, "memory_budget")?;
            config.memory_budget = match value {
                "full" => MemoryBudget::Full,
                "low" => MemoryBudget::Low,
                other => {
                    return Err(bad(
                        line,
                        "memory_budget",
                        format!("`{other}`; expected full or low"),
                    ))
                }
            };
        }
        "sim_mode" => {
            scalar_only(value, line, "sim_mode")?;
            config.sim_mode = match value {
                "full" => SimMode::Full,
                "bias" => SimMode::BiasOnly,
                "variance" => SimMode::VarOnly,
                other => {
                    return Err(bad(
                        line,
                        "sim_mode",
                        format!("`{other}`; expected full, bias, or variance"),
                    ))
                }
            };
        }
        "stride" => {
            scalar_only(value, line, "stride")?;
            config.stride = value
                .parse()
                .map_err(|_| bad(line, "stride", format!("`{value}` is not an integer")))?;
        }
        "source_b" => {
            config.source_b =
                parse_scalar_f64(value, line, "source_b", |v| v.is_finite(), "finite")?;
        }
        "budget" => {
            config.budget = parse_scalar_f64(
                value,
                line,
                "budget",
                |v| v.is_finite() && v > 0.0,
                "positive and finite",
            )?;
        }
        "out" => {
            scalar_only(value, line, "out")?;
            if value.is_empty() {
                return Err(bad(line, "out", "must not be empty"));
            }
            config.out_dir = value.to_string();
        }
        other => {
            return Err(ConfigError::UnknownKey {
                line,
                key: other.to_string(),
            })
        }
    }
    Ok(())
}
