//! The `avgsgd` command-line interface: experiment configs in, CSV tables,
//! SVG panels, and run manifests out.
//!
//! Subcommands: `exact` (per-step closed-form risk), `bounds` (upper/lower/
//! mini-batch bounds plus the scheme-comparison table), `simulate` (Monte
//! Carlo), `figures` (bias and variance panels), `sweep` (Cartesian product
//! over grid fields), `critical-batch` (variance scaling laws over a batch
//! grid), and `verify` (the self-contained check battery).
//!
//! Reruns with the same config and seed are byte-identical: the inner
//! engines are deterministic for any worker count, CSV/SVG rendering embeds
//! no timestamps, and the manifest records the SHA-256 of every artifact.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use thiserror::Error;

use crate::bounds::{
    effective_dimensions, ema_lower_bound, ema_upper_bound, minibatch_upper_bound,
    scheme_comparison, BoundError, BoundReport,
};
use crate::config::{ConfigError, DisplacementSpecText, ExperimentConfig, SpectrumSpecText};
use crate::exact::{exact_risk, ExactError};
use crate::manifest::{sha256_hex, Manifest};
use crate::montecarlo::{simulate_paths, McError, SimMode};
use crate::problem::ProblemInstance;
use crate::schemes::{SchemeError, SchemeSpec};
use crate::svg::{render_log_panel, Curve};
use crate::table::{Provenance, ResultTable};
use crate::verify::run_battery;

/// Command-line interface definition.
#[derive(Debug, Parser)]
#[command(
    name = "avgsgd",
    version,
    about = "Exact computation, analytic bounds, and Monte Carlo simulation of the excess risk \
             of constant-stepsize SGD with iterate-averaging schemes"
)]
pub struct Cli {
    /// Which pipeline to run.
    #[command(subcommand)]
    pub command: Command,
}

/// One pipeline.
#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-step bias/variance/excess risk from the closed second-moment
    /// recursions (no sampling noise).
    Exact(RunArgs),
    /// Excess-risk upper/lower/mini-batch bounds, cutoff dimensions,
    /// variance identities, and the scheme-comparison table.
    Bounds(RunArgs),
    /// Monte Carlo estimates of the configured error component per step.
    Simulate(RunArgs),
    /// Bias and variance panels: one CSV per curve, one log-y SVG per panel.
    Figures(RunArgs),
    /// Cartesian product over the grid fields (d, delta, n, batch, sigma2)
    /// and schemes; exact final risks, one cell per row group.
    Sweep(RunArgs),
    /// Variance scaling laws and the critical batch size over the batch grid.
    CriticalBatch(RunArgs),
    /// Run the verification battery and print a pass/fail table (no files).
    Verify {
        /// Worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
}

/// Options shared by every artifact-producing subcommand.
#[derive(Debug, Args)]
pub struct RunArgs {
    /// Path to the experiment config (flat `key = value` text).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (overrides the config's `out`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Replace the config's schemes (repeatable, e.g. --scheme ema:0.99).
    #[arg(long)]
    pub scheme: Vec<String>,
    /// Override the config's master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the config's step stride (0 = final step only).
    #[arg(long)]
    pub stride: Option<usize>,
}

/// Everything that can go wrong between `main` and the engines.
#[derive(Debug, Error)]
pub enum CliError {
    /// The config file could not be read.
    #[error("failed to read config {path}: {source}")]
    ReadConfig {
        path: String,
        source: std::io::Error,
    },
    /// The config text failed to parse or resolve.
    #[error(transparent)]
    Config(#[from] ConfigError),
    /// A scheme spec failed to parse or resolve.
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    /// The exact engine rejected its inputs.
    #[error(transparent)]
    Exact(#[from] ExactError),
    /// A bound evaluation rejected its inputs.
    #[error(transparent)]
    Bound(#[from] BoundError),
    /// The Monte Carlo engine rejected its inputs.
    #[error(transparent)]
    Mc(#[from] McError),
    /// An artifact could not be written.
    #[error("failed to write {path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
    /// The output directory could not be created.
    #[error("failed to create output directory {path}: {source}")]
    OutDir {
        path: String,
        source: std::io::Error,
    },
    /// A grid field had several values outside `sweep`.
    #[error(
        "field `{field}` has {count} values; grids are only expanded by the `sweep` subcommand"
    )]
    GridOutsideSweep { field: &'static str, count: usize },
    /// A subcommand needed an EMA parameter but no `ema:A` scheme was given.
    #[error("the `{subcommand}` subcommand needs an `ema:A` entry among the schemes (it reads α from the first one)")]
    NeedsEmaScheme { subcommand: &'static str },
    /// `critical-batch` needs the power-law exponent.
    #[error("critical-batch needs a power-law spectrum (`spectrum = power_law:A`) to read the exponent a")]
    NeedsPowerLaw,
}

/// Entry point: returns the process exit code.
pub fn run(cli: Cli) -> Result<u8, CliError> {
    let jobs = match &cli.command {
        Command::Exact(args)
        | Command::Bounds(args)
        | Command::Simulate(args)
        | Command::Figures(args)
        | Command::Sweep(args)
        | Command::CriticalBatch(args) => args.jobs,
        Command::Verify { jobs } => *jobs,
    };
    if let Some(n) = jobs {
        // Ignore the error from a pool that is already installed (tests call
        // `run` repeatedly in one process); results do not depend on it.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match cli.command {
        Command::Exact(args) => Runner::load("exact", &args)?.exact(),
        Command::Bounds(args) => Runner::load("bounds", &args)?.bounds(),
        Command::Simulate(args) => Runner::load("simulate", &args)?.simulate(),
        Command::Figures(args) => Runner::load("figures", &args)?.figures(),
        Command::Sweep(args) => Runner::load("sweep", &args)?.sweep(),
        Command::CriticalBatch(args) => Runner::load("critical_batch", &args)?.critical_batch(),
        Command::Verify { .. } => Ok(verify_to_stdout()),
    }
}

/// Run the battery and print one line per check.
fn verify_to_stdout() -> u8 {
    let results = run_battery();
    let mut all_ok = true;
    for result in &results {
        let status = if result.ok() { "PASS" } else { "FAIL" };
        println!(
            "[{status}] {:<30} {:7.2}s — {}",
            result.name, result.seconds, result.detail
        );
        all_ok &= result.ok();
    }
    println!(
        "{}: {} of {} checks passed",
        if all_ok { "OK" } else { "FAILED" },
        results.iter().filter(|r| r.ok()).count(),
        results.len()
    );
    u8::from(!all_ok)
}

/// A loaded, override-applied run: config plus the directories involved.
struct Runner {
    subcommand: &'static str,
    config: ExperimentConfig,
    /// Directory `@FILE` references resolve against (the config's directory).
    base_dir: PathBuf,
    /// Directory artifacts are written to (relative to the working
    /// directory, not the config).
    out_dir: PathBuf,
    manifest: Manifest,
}

impl Runner {
    fn load(subcommand: &'static str, args: &RunArgs) -> Result<Self, CliError> {
        let text =
            std::fs::read_to_string(&args.config).map_err(|source| CliError::ReadConfig {
                path: args.config.display().to_string(),
                source,
            })?;
        let mut config = ExperimentConfig::parse(&text)?;
        if !args.scheme.is_empty() {
            config.schemes = args
                .scheme
                .iter()
                .map(|s| SchemeSpec::parse(s))
                .collect::<Result<_, _>>()?;
        }
        if let Some(seed) = args.seed {
            config.master_seed = seed;
        }
        if let Some(stride) = args.stride {
            config.stride = stride;
        }
        if let Some(out) = &args.out {
            config.out_dir = out.display().to_string();
        }
        let base_dir = args
            .config
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."))
            .to_path_buf();
        let out_dir = PathBuf::from(&config.out_dir);
        let mut manifest = Manifest::new(subcommand, &config.experiment);
        let canonical = config.format();
        manifest.set("config_sha256", sha256_hex(canonical.as_bytes()));
        manifest.set("master_seed", config.master_seed);
        Ok(Runner {
            subcommand,
            config,
            base_dir,
            out_dir,
            manifest,
        })
    }

    /// Singleton accessors: grid fields must hold exactly one value outside
    /// `sweep`.
    fn one_usize(values: &[usize], field: &'static str) -> Result<usize, CliError> {
        match values {
            [only] => Ok(*only),
            _ => Err(CliError::GridOutsideSweep {
                field,
                count: values.len(),
            }),
        }
    }

    fn one_f64(values: &[f64], field: &'static str) -> Result<f64, CliError> {
        match values {
            [only] => Ok(*only),
            _ => Err(CliError::GridOutsideSweep {
                field,
                count: values.len(),
            }),
        }
    }

    /// The five singleton grid values for non-sweep subcommands.
    fn cell(&self) -> Result<(usize, f64, usize, usize, f64), CliError> {
        Ok((
            Self::one_usize(&self.config.dims, "d")?,
            Self::one_f64(&self.config.deltas, "delta")?,
            Self::one_usize(&self.config.horizons, "n")?,
            Self::one_usize(&self.config.batches, "batch")?,
            Self::one_f64(&self.config.sigma2s, "sigma2")?,
        ))
    }

    fn instance(&self, d: usize, sigma2: f64) -> Result<ProblemInstance, CliError> {
        Ok(self.config.resolve_instance(d, sigma2, &self.base_dir)?)
    }

    /// α from the first `ema:A` scheme.
    fn first_ema_alpha(&self) -> Result<f64, CliError> {
        self.config
            .schemes
            .iter()
            .find_map(|s| match s {
                SchemeSpec::Ema { alpha } => Some(*alpha),
                _ => None,
            })
            .ok_or(CliError::NeedsEmaScheme {
                subcommand: self.subcommand,
            })
    }

    /// Tail start from the first `ta:S` scheme, else N/3.
    fn first_ta_start(&self, n: usize) -> usize {
        self.config
            .schemes
            .iter()
            .find_map(|s| match s {
                SchemeSpec::Ta { s } => Some(*s),
                _ => None,
            })
            .unwrap_or(n / 3)
    }

    fn ensure_out_dir(&self) -> Result<(), CliError> {
        std::fs::create_dir_all(&self.out_dir).map_err(|source| CliError::OutDir {
            path: self.out_dir.display().to_string(),
            source,
        })
    }

    /// Write one artifact and record its checksum.
    fn write_artifact(&mut self, name: &str, contents: &[u8]) -> Result<(), CliError> {
        let path = self.out_dir.join(name);
        std::fs::write(&path, contents).map_err(|source| CliError::Write {
            path: path.display().to_string(),
            source,
        })?;
        self.manifest.artifact(name, contents);
        Ok(())
    }

    /// Write the canonical config text, the given artifacts, and the
    /// manifest; report what was written.
    fn finish(mut self, artifacts: Vec<(String, Vec<u8>)>) -> Result<u8, CliError> {
        self.ensure_out_dir()?;
        let config_name = format!("{}_{}_config.txt", self.config.experiment, self.subcommand);
        let canonical = self.config.format().into_bytes();
        self.write_artifact(&config_name, &canonical)?;
        for (name, contents) in &artifacts {
            self.write_artifact(name, contents)?;
        }
        let manifest_name = format!("{}_{}_manifest.txt", self.config.experiment, self.subcommand);
        let manifest_path = self.out_dir.join(&manifest_name);
        self.manifest
            .write(&manifest_path)
            .map_err(|source| CliError::Write {
                path: manifest_path.display().to_string(),
                source,
            })?;
        println!(
            "wrote {} artifact(s) + {} to {}",
            artifacts.len() + 1,
            manifest_name,
            self.out_dir.display()
        );
        Ok(0)
    }

    /// `exact`: per-step rows (bias, variance, excess) per scheme.
    fn exact(self) -> Result<u8, CliError> {
        let (d, delta, n, batch, sigma2) = self.cell()?;
        let instance = self.instance(d, sigma2)?;
        let experiment = self.config.experiment.clone();
        let mut table = ResultTable::new();
        for spec in &self.config.schemes {
            let scheme = spec.resolve(n, &self.base_dir)?;
            for t in exact_steps(n, self.config.stride) {
                let truncated = scheme.truncated(t)?;
                let report = exact_risk(
                    &instance,
                    &truncated,
                    delta,
                    t,
                    batch,
                    self.config.memory_budget,
                )?;
                let label = scheme.label();
                table.add(&experiment, t, label, "bias", report.bias, None, Provenance::Exact);
                table.add(
                    &experiment,
                    t,
                    label,
                    "variance",
                    report.variance,
                    None,
                    Provenance::Exact,
                );
                table.add(
                    &experiment,
                    t,
                    label,
                    "excess",
                    report.excess_risk,
                    None,
                    Provenance::Exact,
                );
            }
        }
        let csv_name = format!("{experiment}_exact.csv");
        self.finish(vec![(csv_name, table.to_csv().into_bytes())])
    }

    /// `bounds`: bound reports, cutoffs, identities, and the comparison
    /// table. Bounds whose preconditions fail are skipped with a note on
    /// stderr (the run still succeeds — the point is to tabulate what holds).
    fn bounds(self) -> Result<u8, CliError> {
        let (d, delta, n, batch, sigma2) = self.cell()?;
        let instance = self.instance(d, sigma2)?;
        let experiment = self.config.experiment.clone();
        let alpha = self.first_ema_alpha()?;
        let s = self.first_ta_start(n);
        let ema_label = SchemeSpec::Ema { alpha }.to_spec_string();
        let mut table = ResultTable::new();

        // Cutoff dimensions are exact counts, emitted once.
        let (k_star, k_dagger) = effective_dimensions(instance.spectrum(), delta, alpha, n)?;
        table.add(
            &experiment,
            n,
            &ema_label,
            "k_star",
            k_star as f64,
            None,
            Provenance::Exact,
        );
        table.add(
            &experiment,
            n,
            &ema_label,
            "k_dagger",
            k_dagger as f64,
            None,
            Provenance::Exact,
        );

        let emit_report =
            |table: &mut ResultTable, report: &BoundReport, prefix: &str, provenance: Provenance| {
                for (quantity, value) in [
                    ("eff_bias", report.effective_bias),
                    ("eff_var", report.effective_variance),
                    ("feature_noise", report.feature_noise_term),
                    ("label_noise", report.label_noise_term),
                ] {
                    table.add(
                        &experiment,
                        n,
                        &ema_label,
                        &format!("{prefix}{quantity}"),
                        value,
                        None,
                        provenance,
                    );
                }
            };

        match ema_upper_bound(&instance, delta, alpha, n) {
            Ok(upper) => {
                emit_report(&mut table, &upper, "", Provenance::BoundUpper);
                for (quantity, value) in [
                    ("feature_factor", upper.identities.feature_factor_piecewise),
                    ("feature_factor_min", upper.identities.feature_factor_min_form),
                    (
                        "displacement_norm",
                        upper.identities.displacement_norm_piecewise,
                    ),
                    (
                        "displacement_norm_min",
                        upper.identities.displacement_norm_min_form,
                    ),
                    ("label_factor", upper.identities.label_factor_piecewise),
                    ("label_factor_min", upper.identities.label_factor_min_form),
                ] {
                    table.add(
                        &experiment,
                        n,
                        &ema_label,
                        quantity,
                        value,
                        None,
                        Provenance::BoundUpper,
                    );
                }
            }
            Err(err) => eprintln!("note: skipping the upper bound: {err}"),
        }
        match ema_lower_bound(&instance, delta, alpha, n) {
            Ok(lower) => emit_report(&mut table, &lower, "", Provenance::BoundLower),
            Err(err) => eprintln!("note: skipping the lower bound: {err}"),
        }
        match minibatch_upper_bound(&instance, delta, alpha, n, batch) {
            Ok(mb) => emit_report(&mut table, &mb, "mb_", Provenance::BoundUpper),
            Err(err) => eprintln!("note: skipping the mini-batch bound: {err}"),
        }

        // Scheme comparison: per-scheme decay rates, min-form variance, and
        // cutoffs at the shared (spectrum, δ, N).
        match scheme_comparison(instance.spectrum(), delta, n, alpha, s) {
            Ok(rows) => {
                for row in rows {
                    table.add(
                        &experiment,
                        n,
                        &row.scheme,
                        "min_form_variance",
                        row.variance_min_form_total,
                        None,
                        Provenance::Exact,
                    );
                    table.add(
                        &experiment,
                        n,
                        &row.scheme,
                        "k_star",
                        row.k_star as f64,
                        None,
                        Provenance::Exact,
                    );
                    table.add(
                        &experiment,
                        n,
                        &row.scheme,
                        "k_dagger",
                        row.k_dagger as f64,
                        None,
                        Provenance::Exact,
                    );
                    for (i, &b) in row.decay_rates.iter().enumerate() {
                        table.add(
                            &experiment,
                            i + 1,
                            &row.scheme,
                            "b_i",
                            b,
                            None,
                            Provenance::Exact,
                        );
                    }
                }
            }
            Err(err) => eprintln!("note: skipping the scheme comparison: {err}"),
        }

        let csv_name = format!("{experiment}_bounds.csv");
        self.finish(vec![(csv_name, table.to_csv().into_bytes())])
    }

    /// `simulate`: Monte Carlo means and standard errors per step.
    fn simulate(self) -> Result<u8, CliError> {
        let (d, delta, n, batch, sigma2) = self.cell()?;
        let instance = self.instance(d, sigma2)?;
        let experiment = self.config.experiment.clone();
        let mode = self.config.sim_mode;
        let quantity = match mode {
            SimMode::Full => "total",
            SimMode::BiasOnly => "bias",
            SimMode::VarOnly => "variance",
        };
        let mut table = ResultTable::new();
        for spec in &self.config.schemes {
            let scheme = spec.resolve(n, &self.base_dir)?;
            let estimate = simulate_paths(
                &instance,
                &scheme,
                delta,
                n,
                batch,
                mode,
                self.config.trials,
                self.config.master_seed,
            )?;
            for t in simulate_steps(n, self.config.stride) {
                table.add(
                    &experiment,
                    t,
                    scheme.label(),
                    quantity,
                    estimate.means[t],
                    Some(estimate.standard_errors[t]),
                    Provenance::Mc,
                );
            }
        }
        let csv_name = format!("{experiment}_simulate.csv");
        self.finish(vec![(csv_name, table.to_csv().into_bytes())])
    }

    /// `figures`: per-scheme bias and variance curves (Monte Carlo means),
    /// one CSV per curve plus one log-y SVG per panel.
    fn figures(self) -> Result<u8, CliError> {
        let (d, delta, n, batch, sigma2) = self.cell()?;
        let instance = self.instance(d, sigma2)?;
        let experiment = self.config.experiment.clone();
        let mut artifacts: Vec<(String, Vec<u8>)> = Vec::new();
        let panels = [
            ("bias", SimMode::BiasOnly, "bias error"),
            ("variance", SimMode::VarOnly, "variance error"),
        ];
        for (panel, mode, y_label) in panels {
            let mut curves = Vec::new();
            for spec in &self.config.schemes {
                let scheme = spec.resolve(n, &self.base_dir)?;
                let estimate = simulate_paths(
                    &instance,
                    &scheme,
                    delta,
                    n,
                    batch,
                    mode,
                    self.config.trials,
                    self.config.master_seed,
                )?;
                let steps = simulate_steps(n, self.config.stride);
                let mut table = ResultTable::new();
                for &t in &steps {
                    table.add(
                        &experiment,
                        t,
                        scheme.label(),
                        panel,
                        estimate.means[t],
                        Some(estimate.standard_errors[t]),
                        Provenance::Mc,
                    );
                }
                artifacts.push((
                    format!("{experiment}_{panel}_{}.csv", spec.slug()),
                    table.to_csv().into_bytes(),
                ));
                curves.push(Curve {
                    label: scheme.label().to_string(),
                    points: steps
                        .iter()
                        .map(|&t| (t as f64, estimate.means[t]))
                        .collect(),
                });
            }
            let title = format!("{experiment}: {y_label} (δ={delta}, N={n}, d={d})");
            let svg = render_log_panel(&title, "step t", y_label, &curves);
            artifacts.push((format!("{experiment}_{panel}.svg"), svg.into_bytes()));
        }
        self.finish(artifacts)
    }

    /// `sweep`: exact final risks over the Cartesian product of the grids
    /// and schemes; cells evaluated in parallel, emitted in grid order.
    fn sweep(self) -> Result<u8, CliError> {
        let experiment = self.config.experiment.clone();
        let mut cells = Vec::new();
        for &d in &self.config.dims {
            for &delta in &self.config.deltas {
                for &n in &self.config.horizons {
                    for &batch in &self.config.batches {
                        for &sigma2 in &self.config.sigma2s {
                            for spec in &self.config.schemes {
                                cells.push((d, delta, n, batch, sigma2, spec.clone()));
                            }
                        }
                    }
                }
            }
        }
        let config = &self.config;
        let base_dir = &self.base_dir;
        let rows: Vec<Vec<(String, String, f64, &'static str)>> = cells
            .par_iter()
            .map(|&(d, delta, n, batch, sigma2, ref spec)| {
                let instance = config.resolve_instance(d, sigma2, base_dir)?;
                let scheme = spec.resolve(n, base_dir)?;
                let report =
                    exact_risk(&instance, &scheme, delta, n, batch, config.memory_budget)?;
                let cell_id = format!(
                    "{experiment};d={d};delta={delta};n={n};batch={batch};sigma2={sigma2}"
                );
                Ok(vec![
                    (cell_id.clone(), scheme.label().to_string(), report.bias, "bias"),
                    (
                        cell_id.clone(),
                        scheme.label().to_string(),
                        report.variance,
                        "variance",
                    ),
                    (cell_id, scheme.label().to_string(), report.excess_risk, "excess"),
                ])
            })
            .collect::<Result<_, CliError>>()?;
        let mut table = ResultTable::new();
        for cell_rows in rows {
            for (cell_id, scheme, value, quantity) in cell_rows {
                table.add(
                    &cell_id,
                    "final",
                    &scheme,
                    quantity,
                    value,
                    None,
                    Provenance::Exact,
                );
            }
        }
        let csv_name = format!("{experiment}_sweep.csv");
        self.finish(vec![(csv_name, table.to_csv().into_bytes())])
    }

    /// `critical-batch`: scaling-law terms and the critical batch size for
    /// every batch in the grid.
    fn critical_batch(self) -> Result<u8, CliError> {
        let delta = Self::one_f64(&self.config.deltas, "delta")?;
        let n = Self::one_usize(&self.config.horizons, "n")?;
        let a = match &self.config.spectrum {
            SpectrumSpecText::PowerLaw { a } => *a,
            SpectrumSpecText::ExplicitFile { .. } => return Err(CliError::NeedsPowerLaw),
        };
        let b = match &self.config.displacement {
            DisplacementSpecText::Source { b } => *b,
            _ => self.config.source_b,
        };
        let alpha = self.first_ema_alpha()?;
        let ema_label = SchemeSpec::Ema { alpha }.to_spec_string();
        let experiment = self.config.experiment.clone();
        let mut table = ResultTable::new();
        for &batch in &self.config.batches {
            let report =
                crate::bounds::critical_batch_scaling(a, b, delta, alpha, n, batch, self.config.budget)?;
            let cell_id = format!("{experiment};batch={batch}");
            for (quantity, value) in [
                ("theta_term1", report.theta_term1),
                ("theta_term2", report.theta_term2),
                ("critical_batch", report.critical_batch),
            ] {
                table.add(
                    &cell_id,
                    "final",
                    &ema_label,
                    quantity,
                    value,
                    None,
                    Provenance::BoundUpper,
                );
            }
        }
        let csv_name = format!("{experiment}_critical_batch.csv");
        self.finish(vec![(csv_name, table.to_csv().into_bytes())])
    }
}

/// Steps the `exact` subcommand reports: multiples of `stride` in `1..N`
/// plus the final step (just the final step when `stride` is 0).
fn exact_steps(n: usize, stride: usize) -> Vec<usize> {
    if stride == 0 {
        return vec![n];
    }
    let mut steps: Vec<usize> = (1..n).filter(|t| t % stride == 0).collect();
    steps.push(n);
    steps
}

/// Steps the Monte Carlo subcommands report: multiples of `stride` in
/// `0..N` plus the final step (just the final step when `stride` is 0).
fn simulate_steps(n: usize, stride: usize) -> Vec<usize> {
    if stride == 0 {
        return vec![n];
    }
    let mut steps: Vec<usize> = (0..n).step_by(stride).collect();
    steps.push(n);
    steps
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_lists() {
        assert_eq!(exact_steps(5, 1), vec![1, 2, 3, 4, 5]);
        assert_eq!(exact_steps(10, 4), vec![4, 8, 10]);
        assert_eq!(exact_steps(8, 4), vec![4, 8]);
        assert_eq!(exact_steps(7, 0), vec![7]);
        assert_eq!(simulate_steps(5, 1), vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(simulate_steps(10, 4), vec![0, 4, 8, 10]);
        assert_eq!(simulate_steps(7, 0), vec![7]);
    }

    #[test]
    fn cli_parses_subcommands_and_overrides() {
        let cli = Cli::try_parse_from([
            "avgsgd", "exact", "--config", "x.cfg", "--scheme", "ema:0.9", "--scheme", "none",
            "--seed", "7", "--stride", "0", "--out", "results",
        ])
        .unwrap();
        match cli.command {
            Command::Exact(args) => {
                assert_eq!(args.scheme, vec!["ema:0.9", "none"]);
                assert_eq!(args.seed, Some(7));
                assert_eq!(args.stride, Some(0));
                assert_eq!(args.out.as_deref(), Some(Path::new("results")));
            }
            other => panic!("wrong subcommand {other:?}"),
        }
        assert!(Cli::try_parse_from(["avgsgd", "verify"]).is_ok());
        assert!(Cli::try_parse_from(["avgsgd", "exact"]).is_err()); // --config required
    }
}
