//! Seeded Monte Carlo simulation of mini-batch SGD with iterate averaging on
//! Gaussian synthetic data, plus a fourth-moment estimator used to validate
//! the moment identities behind the exact engine.
//!
//! Determinism contract: every trial draws from its own counter-derived
//! stream (`stream_seed(master_seed, trial)`), consuming normals in a fixed
//! order — for each of the `B` batch elements, the `d` feature coordinates in
//! ascending order, then the label-noise draw. Trials are statistically
//! reduced in fixed chunks of [`TRIAL_CHUNK`] whose partial statistics are
//! merged in chunk order, so results are bit-identical for any worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use thiserror::Error;

use crate::numeric::{stream_seed, RunningStats};
use crate::problem::{NoiseModel, ProblemInstance, Spectrum};
use crate::schemes::AveragingScheme;

/// Trials per statistics chunk. Fixed (not tuned to the thread count) so the
/// pairwise merge tree is the same regardless of parallelism.
const TRIAL_CHUNK: usize = 32;

/// Samples per fourth-moment statistics chunk; each chunk has its own
/// counter-derived stream.
const SAMPLE_CHUNK: usize = 4096;

/// Validation failures for the simulation entry points.
#[derive(Debug, Error)]
pub enum McError {
    /// Trials must be at least 1.
    #[error("trial count must be at least 1")]
    BadTrials,
    /// The stepsize must be positive and finite.
    #[error("stepsize must be positive and finite, got {0}")]
    BadStepsize(f64),
    /// The batch size must be at least 1.
    #[error("batch size must be at least 1")]
    BadBatch,
    /// The scheme must be built for exactly the simulated horizon.
    #[error("scheme horizon {scheme} does not match requested horizon {requested}")]
    HorizonMismatch { scheme: usize, requested: usize },
    /// Simulating label noise requires the well-specified model (a scalar
    /// noise draw cannot realize an arbitrary diagonal noise covariance).
    #[error(
        "mode {mode} cannot be simulated under an explicit diagonal noise model; \
         only the well-specified model has a samplable label noise"
    )]
    UnsupportedNoiseModel { mode: &'static str },
    /// Fourth-moment estimation needs enough samples for stable errors.
    #[error("sample count must be at least 1000, got {0}")]
    BadSamples(usize),
    /// The quadratic-form diagonal must match the spectrum dimension.
    #[error("weight diagonal has {got} entries, spectrum has {expected}")]
    WeightCount { expected: usize, got: usize },
    /// The quadratic-form diagonal must be nonnegative.
    #[error("weight diagonal entry {index} is {value}; entries must be nonnegative and finite")]
    BadWeight { index: usize, value: f64 },
}

/// Which part of the error recursion a simulation tracks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SimMode {
    /// Full error: starts at the initial displacement, injects label noise.
    Full,
    /// Bias part only: starts at the initial displacement, no label noise.
    BiasOnly,
    /// Variance part only: starts at zero, injects label noise.
    VarOnly,
}

impl SimMode {
    /// Stable lowercase token used in result tables.
    pub fn as_str(self) -> &'static str {
        match self {
            SimMode::Full => "full",
            SimMode::BiasOnly => "bias",
            SimMode::VarOnly => "variance",
        }
    }
}

/// Per-step Monte Carlo estimates of `⟨H, η̄_t ⊗ η̄_t⟩` across trials.
#[derive(Clone, Debug)]
pub struct MCEstimate {
    /// Which error component was simulated.
    pub mode: SimMode,
    /// Estimated mean at each step `t = 0..=N`.
    pub means: Vec<f64>,
    /// Standard error of each mean (0 at steps where all trials agree).
    pub standard_errors: Vec<f64>,
    /// Number of independent trials averaged.
    pub trials: usize,
    /// Seed the per-trial streams were derived from.
    pub master_seed: u64,
}

/// Monte Carlo estimate of the diagonal of the fourth-moment contraction
/// `E[(xᵀAx)·x_i²]` for diagonal nonnegative `A`.
#[derive(Clone, Debug)]
pub struct FourthMomentEstimate {
    /// Per-coordinate estimated means.
    pub means: Vec<f64>,
    /// Per-coordinate standard errors.
    pub standard_errors: Vec<f64>,
    /// Number of samples drawn.
    pub samples: usize,
    /// Seed the per-chunk streams were derived from.
    pub seed: u64,
}

/// One trial's mutable state: the tracked error vector and its running
/// average under the scheme recursion.
struct Trial {
    eta: Vec<f64>,
    average: Vec<f64>,
}

impl Trial {
    fn new(instance: &ProblemInstance, mode: SimMode) -> Self {
        let eta = match mode {
            SimMode::VarOnly => vec![0.0; instance.spectrum().dim()],
            SimMode::Full | SimMode::BiasOnly => instance.displacement().to_vec(),
        };
        Trial {
            average: eta.clone(),
            eta,
        }
    }
}

/// `Σ_i λ_i v_i²` in fixed index order (plain accumulation: deterministic,
/// and statistical noise dwarfs rounding here).
fn h_weighted_square(lambdas: &[f64], v: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..lambdas.len() {
        acc += lambdas[i] * v[i] * v[i];
    }
    acc
}

/// One SGD step at the current iterate: draw `B` samples, apply the averaged
/// gradient. `noise_scale` is σ for noisy modes and exactly 0.0 for the bias
/// recursion, which keeps the stream consumption — and hence the trials —
/// bit-aligned across modes.
fn sgd_step(
    trial: &mut Trial,
    rng: &mut ChaCha8Rng,
    sqrt_lambdas: &[f64],
    x: &mut [f64],
    grad: &mut [f64],
    delta_over_batch: f64,
    batch: usize,
    noise_scale: f64,
) {
    let d = sqrt_lambdas.len();
    grad.fill(0.0);
    for _ in 0..batch {
        for i in 0..d {
            let z: f64 = rng.sample(StandardNormal);
            x[i] = sqrt_lambdas[i] * z;
        }
        let xi: f64 = rng.sample(StandardNormal);
        let noise = noise_scale * xi;
        let mut dot = 0.0;
        for i in 0..d {
            dot += x[i] * trial.eta[i];
        }
        let residual = dot - noise;
        for i in 0..d {
            grad[i] += residual * x[i];
        }
    }
    for i in 0..d {
        trial.eta[i] -= delta_over_batch * grad[i];
    }
}

fn validate_simulation(
    instance: &ProblemInstance,
    scheme: &AveragingScheme,
    delta: f64,
    n: usize,
    batch: usize,
    mode: SimMode,
) -> Result<(), McError> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(McError::BadStepsize(delta));
    }
    if batch == 0 {
        return Err(McError::BadBatch);
    }
    if scheme.horizon() != n {
        return Err(McError::HorizonMismatch {
            scheme: scheme.horizon(),
            requested: n,
        });
    }
    if matches!(mode, SimMode::Full | SimMode::VarOnly)
        && !matches!(instance.noise_model(), NoiseModel::WellSpecified)
    {
        return Err(McError::UnsupportedNoiseModel {
            mode: mode.as_str(),
        });
    }
    Ok(())
}

/// Run one seeded trial, pushing `⟨H, η̄_t ⊗ η̄_t⟩` for `t = 0..=N` into
/// `stats[t]`. The average is updated with the *previous* iterate before each
/// recording, so the final iterate never enters the average and step `t`'s
/// recorded value corresponds to the scheme truncated at horizon `t`.
fn run_trial(
    instance: &ProblemInstance,
    scheme: &AveragingScheme,
    delta: f64,
    batch: usize,
    mode: SimMode,
    seed: u64,
    stats: &mut [RunningStats],
) {
    let lambdas = instance.spectrum().eigenvalues();
    let d = lambdas.len();
    let n = scheme.horizon();
    let sqrt_lambdas: Vec<f64> = lambdas.iter().map(|&l| l.sqrt()).collect();
    let noise_scale = match mode {
        SimMode::BiasOnly => 0.0,
        SimMode::Full | SimMode::VarOnly => instance.sigma2().sqrt(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trial = Trial::new(instance, mode);
    let mut x = vec![0.0; d];
    let mut grad = vec![0.0; d];
    let delta_over_batch = delta / batch as f64;
    stats[0].push(h_weighted_square(lambdas, &trial.average));
    for t in 1..=n {
        let alpha = scheme.alphas()[t - 1];
        for i in 0..d {
            trial.average[i] = alpha * trial.average[i] + (1.0 - alpha) * trial.eta[i];
        }
        stats[t].push(h_weighted_square(lambdas, &trial.average));
        if t < n {
            sgd_step(
                &mut trial,
                &mut rng,
                &sqrt_lambdas,
                &mut x,
                &mut grad,
                delta_over_batch,
                batch,
                noise_scale,
            );
        }
    }
}

/// Simulate `trials` independent SGD paths and estimate the per-step
/// H-weighted squared error of the running average.
///
/// At step `t` the estimate targets the scheme truncated at horizon `t`, so
/// `means[t]` is directly comparable to the exact engine's `bias + variance`
/// (mode-matched: bias-only ↔ bias, variance-only ↔ variance) at horizon `t`.
/// `means[0]` is exactly `‖η_0‖²_H` (or 0 in variance-only mode).
pub fn simulate_paths(
    instance: &ProblemInstance,
    scheme: &AveragingScheme,
    delta: f64,
    n: usize,
    batch: usize,
    mode: SimMode,
    trials: usize,
    master_seed: u64,
) -> Result<MCEstimate, McError> {
    validate_simulation(instance, scheme, delta, n, batch, mode)?;
    if trials == 0 {
        return Err(McError::BadTrials);
    }
    let chunk_count = trials.div_ceil(TRIAL_CHUNK);
    let chunk_stats: Vec<Vec<RunningStats>> = (0..chunk_count)
        .into_par_iter()
        .map(|chunk| {
            let lo = chunk * TRIAL_CHUNK;
            let hi = ((chunk + 1) * TRIAL_CHUNK).min(trials);
            let mut stats = vec![RunningStats::new(); n + 1];
            for trial in lo..hi {
                run_trial(
                    instance,
                    scheme,
                    delta,
                    batch,
                    mode,
                    stream_seed(master_seed, trial as u64),
                    &mut stats,
                );
            }
            stats
        })
        .collect();
    let mut totals = vec![RunningStats::new(); n + 1];
    for stats in chunk_stats {
        for (total, part) in totals.iter_mut().zip(stats) {
            total.merge(&part);
        }
    }
    Ok(MCEstimate {
        mode,
        means: totals.iter().map(RunningStats::mean).collect(),
        standard_errors: totals.iter().map(RunningStats::standard_error).collect(),
        trials,
        master_seed,
    })
}

/// Estimate the diagonal of `E[(xᵀAx)·xxᵀ]` for `x ~ N(0, H)` and diagonal
/// nonnegative `A`, with per-coordinate standard errors. This is the
/// empirical probe that discriminates candidate closed forms of the Gaussian
/// fourth-moment contraction.
pub fn estimate_fourth_moment(
    spectrum: &Spectrum,
    a_diag: &[f64],
    samples: usize,
    seed: u64,
) -> Result<FourthMomentEstimate, McError> {
    if samples < 1000 {
        return Err(McError::BadSamples(samples));
    }
    let d = spectrum.dim();
    if a_diag.len() != d {
        return Err(McError::WeightCount {
            expected: d,
            got: a_diag.len(),
        });
    }
    for (index, &value) in a_diag.iter().enumerate() {
        if !(value.is_finite() && value >= 0.0) {
            return Err(McError::BadWeight { index, value });
        }
    }
    let sqrt_lambdas: Vec<f64> = spectrum.eigenvalues().iter().map(|&l| l.sqrt()).collect();
    let chunk_count = samples.div_ceil(SAMPLE_CHUNK);
    let chunk_stats: Vec<Vec<RunningStats>> = (0..chunk_count)
        .into_par_iter()
        .map(|chunk| {
            let lo = chunk * SAMPLE_CHUNK;
            let hi = ((chunk + 1) * SAMPLE_CHUNK).min(samples);
            let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, chunk as u64));
            let mut stats = vec![RunningStats::new(); d];
            let mut x = vec![0.0; d];
            for _ in lo..hi {
                for i in 0..d {
                    let z: f64 = rng.sample(StandardNormal);
                    x[i] = sqrt_lambdas[i] * z;
                }
                let mut quad = 0.0;
                for i in 0..d {
                    quad += a_diag[i] * x[i] * x[i];
                }
                for i in 0..d {
                    stats[i].push(quad * x[i] * x[i]);
                }
            }
            stats
        })
        .collect();
    let mut totals = vec![RunningStats::new(); d];
    for stats in chunk_stats {
        for (total, part) in totals.iter_mut().zip(stats) {
            total.merge(&part);
        }
    }
    Ok(FourthMomentEstimate {
        means: totals.iter().map(RunningStats::mean).collect(),
        standard_errors: totals.iter().map(RunningStats::standard_error).collect(),
        samples,
        seed,
    })
}

/// Drive the full, bias, and variance recursions with one shared sample
/// stream for a single trial and return the largest absolute residual of
/// `η^full − (η^bias + η^var)` over all steps and coordinates, normalized by
/// the largest magnitude seen. The recursion is affine in η, so the residual
/// is pure floating-point non-distributivity (≈ machine epsilon scale).
pub fn decomposition_residual(
    instance: &ProblemInstance,
    scheme: &AveragingScheme,
    delta: f64,
    n: usize,
    batch: usize,
    seed: u64,
) -> Result<f64, McError> {
    validate_simulation(instance, scheme, delta, n, batch, SimMode::Full)?;
    let lambdas = instance.spectrum().eigenvalues();
    let d = lambdas.len();
    let sqrt_lambdas: Vec<f64> = lambdas.iter().map(|&l| l.sqrt()).collect();
    let sigma = instance.sigma2().sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut full = Trial::new(instance, SimMode::Full);
    let mut bias = Trial::new(instance, SimMode::BiasOnly);
    let mut var = Trial::new(instance, SimMode::VarOnly);
    let mut x = vec![0.0; d];
    let delta_over_batch = delta / batch as f64;
    let mut worst = 0.0_f64;
    let mut scale = 1e-300_f64;
    let mut check = |full: &Trial, bias: &Trial, var: &Trial| {
        for i in 0..d {
            let combined = bias.eta[i] + var.eta[i];
            worst = worst.max((full.eta[i] - combined).abs());
            scale = scale.max(full.eta[i].abs()).max(combined.abs());
        }
    };
    check(&full, &bias, &var);
    for _ in 1..n {
        // One shared draw per batch element, applied to all three recursions.
        let mut grad_full = vec![0.0; d];
        let mut grad_bias = vec![0.0; d];
        let mut grad_var = vec![0.0; d];
        for _ in 0..batch {
            for i in 0..d {
                let z: f64 = rng.sample(StandardNormal);
                x[i] = sqrt_lambdas[i] * z;
            }
            let xi: f64 = rng.sample(StandardNormal);
            let noise = sigma * xi;
            let mut dot_full = 0.0;
            let mut dot_bias = 0.0;
            let mut dot_var = 0.0;
            for i in 0..d {
                dot_full += x[i] * full.eta[i];
                dot_bias += x[i] * bias.eta[i];
                dot_var += x[i] * var.eta[i];
            }
            for i in 0..d {
                grad_full[i] += (dot_full - noise) * x[i];
                grad_bias[i] += dot_bias * x[i];
                grad_var[i] += (dot_var - noise) * x[i];
            }
        }
        for i in 0..d {
            full.eta[i] -= delta_over_batch * grad_full[i];
            bias.eta[i] -= delta_over_batch * grad_bias[i];
            var.eta[i] -= delta_over_batch * grad_var[i];
        }
        check(&full, &bias, &var);
    }
    Ok(worst / scale)
}
