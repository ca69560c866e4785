//! Exact risk computation, analytic bounds, and Monte Carlo simulation for
//! constant-stepsize SGD with iterate averaging on Gaussian linear regression.
//!
//! The library covers a general averaging class (exponential moving average,
//! last iterate, full iterate averaging, tail averaging, and arbitrary
//! per-step coefficients) and provides:
//!
//! - an exact O(N·d) risk engine driven by closed second-moment recursions,
//!   plus independent O(N²·d) and dense small-`d` oracles for cross-checks;
//! - decay-rate formulas and envelopes, effective dimensions, and excess-risk
//!   upper/lower bounds with explicit feature- and label-noise terms;
//! - reproducible Monte Carlo simulation of the same quantities;
//! - a CLI that renders experiments to CSV tables and SVG figures.

pub mod bounds;
pub mod cli;
pub mod config;
pub mod exact;
pub mod manifest;
pub mod montecarlo;
pub mod numeric;
pub mod problem;
pub mod schemes;
pub mod svg;
pub mod table;
pub mod verify;

pub use bounds::{
    critical_batch_scaling, decay_rate, decay_rate_envelope, decay_rate_summation,
    effective_dimensions, ema_lower_bound, ema_upper_bound, minibatch_upper_bound,
    scheme_comparison, BoundError, BoundKind, BoundReport, CriticalBatchReport, EnvelopeReport,
    SchemeComparisonRow, VarianceIdentities,
};
pub use exact::{
    dense_risk_oracle, deterministic_bias, direct_risk_oracle, exact_risk, second_moment_step,
    suffix_geometric_sums, DenseRiskReport, ExactError, MemoryBudget, RiskMethod, RiskReport,
    SecondMomentState,
};
pub use montecarlo::{
    decomposition_residual, estimate_fourth_moment, simulate_paths, FourthMomentEstimate,
    MCEstimate, McError, SimMode,
};
pub use problem::{
    gaussian_displacement, make_instance, make_spectrum, DisplacementSpec, MomentModel,
    NoiseModel, ProblemError, ProblemInstance, SourceCondition, Spectrum, SpectrumKind,
};
pub use schemes::{
    make_scheme, parse_values_text, scheme_weights, AveragingScheme, SchemeError, SchemeKind,
    SchemeSpec,
};

pub use config::{
    ConfigError, DisplacementSpecText, ExperimentConfig, MomentSpecText, NoiseSpecText,
    SpectrumSpecText,
};
pub use manifest::{sha256_hex, Manifest};
pub use svg::{render_log_panel, Curve};
pub use table::{format_value, Provenance, ResultRow, ResultTable};
pub use verify::{run_battery, CheckResult};
