//! Exact risk computation via diagonal second-moment recursions.
//!
//! For Gaussian features `x ~ N(0, H)` with `H = diag(λ)`, the per-step update
//! operator on second moments maps diagonal matrices to diagonal matrices:
//! the fourth-moment contraction of a symmetric `A` has diagonal
//! `2(HAH)_ii + tr(HA)·λ_i`, which depends only on `diag(A)`. The whole
//! engine rests on that closure; [`dense_risk_oracle`] verifies it with full
//! matrices rather than assuming it.
//!
//! Writing `x_i = 1 − δλ_i` and `Δ(v)_i = (δ²/B)(λ_i²v_i + λ_i·Σ_j λ_j v_j)`,
//! the bias and variance second-moment diagonals evolve as
//! `B_t = x²·B_{t−1} + Δ(B_{t−1})` and `C_t = x²·C_{t−1} + Δ(C_{t−1}) + δ²Σ/B`.
//! The averaged residual's risk telescopes into suffix-weighted sums of the
//! per-step increments, which is what [`exact_risk`] evaluates in O(N·d).

use rayon::prelude::*;
use thiserror::Error;

use crate::numeric::Kahan;
use crate::problem::{ProblemInstance, Spectrum};
use crate::schemes::AveragingScheme;

/// Validation and resource errors for the exact engine.
#[derive(Debug, Error)]
pub enum ExactError {
    /// Stepsize must be a positive finite real.
    #[error("stepsize must be positive and finite, got {0}")]
    BadStepsize(f64),
    /// The contraction precondition `δ·λ_1 < 1` failed.
    #[error("stepsize too large: delta * lambda_1 = {0} must be < 1")]
    StepsizeTooLarge(f64),
    /// Batch size must be at least 1.
    #[error("batch size must be a positive integer")]
    BadBatch,
    /// State dimension does not match the instance.
    #[error("state dimension {state} does not match instance dimension {instance}")]
    DimensionMismatch { state: usize, instance: usize },
    /// Scheme horizon does not match the requested step count.
    #[error("scheme horizon {scheme} does not match requested N = {requested}")]
    HorizonMismatch { scheme: usize, requested: usize },
    /// The quadratic-cost oracle guard was exceeded.
    #[error("problem too large for the direct oracle: N^2 * d = {0:e} exceeds 1e8")]
    DirectOracleTooLarge(f64),
    /// The dense oracle only supports small dimensions.
    #[error("dense oracle supports d <= 8, got {0}")]
    DenseOracleTooLarge(usize),
}

/// Diagonal second moments of the bias and variance residual processes.
#[derive(Clone, Debug, PartialEq)]
pub struct SecondMomentState {
    /// Number of SGD steps taken.
    pub step: usize,
    /// Diagonal of the bias second moment (noiseless process, starts at η₀²).
    pub bias_diag: Vec<f64>,
    /// Diagonal of the variance second moment (noise-driven process, starts
    /// at 0; entrywise nondecreasing in `step`).
    pub variance_diag: Vec<f64>,
}

impl SecondMomentState {
    /// The step-0 state for an instance: `bias_diag = η₀²`, `variance_diag = 0`.
    pub fn initial(instance: &ProblemInstance) -> Self {
        SecondMomentState {
            step: 0,
            bias_diag: instance.displacement().iter().map(|&e| e * e).collect(),
            variance_diag: vec![0.0; instance.spectrum().dim()],
        }
    }
}

/// How [`exact_risk`] trades memory for recomputation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MemoryBudget {
    /// Precompute the full suffix-sum table: O(N·d) memory, no recomputation.
    Full,
    /// Regenerate suffix sums per coordinate: O(N + d) memory, O(N·d) extra
    /// time. Bit-identical results to [`MemoryBudget::Full`].
    Low,
}

/// Which evaluator produced a [`RiskReport`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RiskMethod {
    /// The O(N·d) telescoped engine.
    Telescoped,
    /// The O(N²·d) pairwise-expansion oracle.
    Direct,
    /// The full-matrix small-`d` oracle.
    DenseOracle,
}

impl RiskMethod {
    /// Stable lowercase token used in result tables.
    pub fn as_str(self) -> &'static str {
        match self {
            RiskMethod::Telescoped => "telescoped",
            RiskMethod::Direct => "direct",
            RiskMethod::DenseOracle => "dense_oracle",
        }
    }
}

/// Exact bias/variance errors of an averaging scheme.
#[derive(Clone, Debug)]
pub struct RiskReport {
    /// `⟨H, E[η̄ ⊗ η̄]⟩` for the noiseless (bias) residual process.
    pub bias: f64,
    /// `⟨H, E[η̄ ⊗ η̄]⟩` for the noise-driven (variance) residual process.
    pub variance: f64,
    /// `(bias + variance) / 2`. This equals the excess risk exactly when the
    /// noise is well-specified (the cross term vanishes and the decomposition
    /// is an equality); for explicit noise diagonals it is the same
    /// definition applied to the decomposed processes.
    pub excess_risk: f64,
    /// Per-coordinate bias contributions (sum over coordinates = `bias`).
    pub per_coordinate_bias: Vec<f64>,
    /// Per-coordinate variance contributions.
    pub per_coordinate_variance: Vec<f64>,
    /// Which evaluator produced this report.
    pub method: RiskMethod,
}

fn validate_step_inputs(
    instance: &ProblemInstance,
    delta: f64,
    batch: usize,
) -> Result<(), ExactError> {
    if !delta.is_finite() || delta <= 0.0 {
        return Err(ExactError::BadStepsize(delta));
    }
    let top = delta * instance.spectrum().eigenvalues()[0];
    if top >= 1.0 {
        return Err(ExactError::StepsizeTooLarge(top));
    }
    if batch == 0 {
        return Err(ExactError::BadBatch);
    }
    Ok(())
}

/// Advance both diagonals one step in place. Returns the pre-step scalars
/// `(Σ_j λ_j B_j, Σ_j λ_j C_j)` so callers can record them. The per-coordinate
/// arithmetic here is kept textually identical to the replay in
/// `coordinate_risk` so the two passes of `exact_risk` agree to the last bit.
fn advance_diagonals(
    bias_diag: &mut [f64],
    variance_diag: &mut [f64],
    lambdas: &[f64],
    noise_diag: &[f64],
    delta: f64,
    batch: f64,
) -> (f64, f64) {
    let mut sb = Kahan::new();
    let mut sc = Kahan::new();
    for j in 0..lambdas.len() {
        sb.add(lambdas[j] * bias_diag[j]);
        sc.add(lambdas[j] * variance_diag[j]);
    }
    let (sb, sc) = (sb.total(), sc.total());
    let coupling = delta * delta / batch;
    for i in 0..lambdas.len() {
        let lambda = lambdas[i];
        let x = 1.0 - delta * lambda;
        let contraction_sq = x * x;
        let lambda_sq = lambda * lambda;
        let injection = delta * delta * noise_diag[i] / batch;
        let delta_b = coupling * (lambda_sq * bias_diag[i] + lambda * sb);
        let delta_c = coupling * (lambda_sq * variance_diag[i] + lambda * sc);
        bias_diag[i] = contraction_sq * bias_diag[i] + delta_b;
        variance_diag[i] = contraction_sq * variance_diag[i] + delta_c + injection;
    }
    (sb, sc)
}

/// One step of the exact second-moment recursion (pure; the input state is
/// untouched). Requires `δ·λ_1 < 1` and matching dimensions.
pub fn second_moment_step(
    state: &SecondMomentState,
    instance: &ProblemInstance,
    delta: f64,
    batch: usize,
) -> Result<SecondMomentState, ExactError> {
    validate_step_inputs(instance, delta, batch)?;
    let d = instance.spectrum().dim();
    if state.bias_diag.len() != d || state.variance_diag.len() != d {
        return Err(ExactError::DimensionMismatch {
            state: state.bias_diag.len(),
            instance: d,
        });
    }
    let mut bias_diag = state.bias_diag.clone();
    let mut variance_diag = state.variance_diag.clone();
    let noise = instance.noise_diag();
    advance_diagonals(
        &mut bias_diag,
        &mut variance_diag,
        instance.spectrum().eigenvalues(),
        &noise,
        delta,
        batch as f64,
    );
    Ok(SecondMomentState {
        step: state.step + 1,
        bias_diag,
        variance_diag,
    })
}

/// Fill `buf[t] = Σ_{k=t}^{N−1} c_k·x^{k−t}` for `t = 0..=N` by the backward
/// recursion `buf[N] = 0`, `buf[t] = c_t + x·buf[t+1]` (no cancellation: all
/// terms are nonnegative).
fn suffix_row(increments: &[f64], x: f64, buf: &mut [f64]) {
    let n = increments.len();
    debug_assert_eq!(buf.len(), n + 1);
    buf[n] = 0.0;
    for t in (0..n).rev() {
        buf[t] = increments[t] + x * buf[t + 1];
    }
}

/// Per-coordinate suffix-weighted geometric sums `G_{t,i}` for an increment
/// sequence: `G[i][t] = Σ_{k≥t} c_k (1−δλ_i)^{k−t}`, with `G[i][N] = 0`.
pub fn suffix_geometric_sums(
    increments: &[f64],
    spectrum: &Spectrum,
    delta: f64,
) -> Result<Vec<Vec<f64>>, ExactError> {
    if !delta.is_finite() || delta <= 0.0 {
        return Err(ExactError::BadStepsize(delta));
    }
    let top = delta * spectrum.eigenvalues()[0];
    if top >= 1.0 {
        return Err(ExactError::StepsizeTooLarge(top));
    }
    let n = increments.len();
    Ok(spectrum
        .eigenvalues()
        .iter()
        .map(|&lambda| {
            let mut row = vec![0.0; n + 1];
            suffix_row(increments, 1.0 - delta * lambda, &mut row);
            row
        })
        .collect())
}

/// Run the forward scalar pass: record `Σ_j λ_j B_{t,j}` and `Σ_j λ_j C_{t,j}`
/// for `t = 0..=N−2` (exactly the values the per-coordinate replay consumes).
fn scalar_sequences(
    instance: &ProblemInstance,
    delta: f64,
    batch: f64,
    n: usize,
) -> (Vec<f64>, Vec<f64>) {
    let lambdas = instance.spectrum().eigenvalues();
    let noise = instance.noise_diag();
    let recorded = n.saturating_sub(1);
    let mut s_bias = Vec::with_capacity(recorded);
    let mut s_variance = Vec::with_capacity(recorded);
    let mut bias_diag: Vec<f64> = instance.displacement().iter().map(|&e| e * e).collect();
    let mut variance_diag = vec![0.0; lambdas.len()];
    for u in 0..recorded {
        // advance_diagonals returns the scalars of the *pre-step* state, so
        // the first call records t = 0; the final state is discarded.
        let (sb, sc) = advance_diagonals(
            &mut bias_diag,
            &mut variance_diag,
            lambdas,
            &noise,
            delta,
            batch,
        );
        s_bias.push(sb);
        s_variance.push(sc);
        let _ = u;
    }
    (s_bias, s_variance)
}

struct CoordinateResult {
    bias: f64,
    variance: f64,
}

/// Bias/variance contribution of one coordinate, replaying the scalar
/// recursions against the shared per-step sums. `g_row` holds `G_{t,i}` for
/// `t = 0..=N`. Accumulation is compensated and strictly in step order so the
/// result is independent of scheduling.
#[allow(clippy::too_many_arguments)]
fn coordinate_risk(
    lambda: f64,
    eta0: f64,
    noise_ii: f64,
    delta: f64,
    batch: f64,
    beta0: f64,
    s_bias: &[f64],
    s_variance: &[f64],
    g_row: &[f64],
) -> CoordinateResult {
    let x = 1.0 - delta * lambda;
    let contraction_sq = x * x;
    let coupling = delta * delta / batch;
    let lambda_sq = lambda * lambda;
    let injection = delta * delta * noise_ii / batch;
    let multiplier = beta0 + g_row[0];
    let n = g_row.len() - 1;
    let mut bias_acc = Kahan::new();
    bias_acc.add(multiplier * multiplier * (eta0 * eta0));
    let mut variance_acc = Kahan::new();
    let mut b_cur = eta0 * eta0;
    let mut c_cur = 0.0;
    for t in 1..n {
        let u = t - 1;
        let delta_b = coupling * (lambda_sq * b_cur + lambda * s_bias[u]);
        let delta_c = coupling * (lambda_sq * c_cur + lambda * s_variance[u]);
        let g = g_row[t];
        let g_sq = g * g;
        bias_acc.add(g_sq * delta_b);
        variance_acc.add(g_sq * (delta_c + injection));
        b_cur = contraction_sq * b_cur + delta_b;
        c_cur = contraction_sq * c_cur + delta_c + injection;
    }
    CoordinateResult {
        bias: lambda * bias_acc.total(),
        variance: lambda * variance_acc.total(),
    }
}

fn assemble_report(results: Vec<CoordinateResult>, method: RiskMethod) -> RiskReport {
    let mut bias = Kahan::new();
    let mut variance = Kahan::new();
    let mut per_coordinate_bias = Vec::with_capacity(results.len());
    let mut per_coordinate_variance = Vec::with_capacity(results.len());
    for r in &results {
        bias.add(r.bias);
        variance.add(r.variance);
        per_coordinate_bias.push(r.bias);
        per_coordinate_variance.push(r.variance);
    }
    let (bias, variance) = (bias.total(), variance.total());
    RiskReport {
        bias,
        variance,
        excess_risk: 0.5 * (bias + variance),
        per_coordinate_bias,
        per_coordinate_variance,
        method,
    }
}

fn validate_risk_inputs(
    instance: &ProblemInstance,
    scheme: &AveragingScheme,
    delta: f64,
    n: usize,
    batch: usize,
) -> Result<(), ExactError> {
    validate_step_inputs(instance, delta, batch)?;
    if scheme.horizon() != n {
        return Err(ExactError::HorizonMismatch {
            scheme: scheme.horizon(),
            requested: n,
        });
    }
    Ok(())
}

/// Exact bias and variance of the averaged iterate after `n` steps, in
/// O(N·d) time. Parallelizes over coordinates; results are bit-identical
/// for any worker count and either [`MemoryBudget`].
pub fn exact_risk(
    instance: &ProblemInstance,
    scheme: &AveragingScheme,
    delta: f64,
    n: usize,
    batch: usize,
    memory: MemoryBudget,
) -> Result<RiskReport, ExactError> {
    validate_risk_inputs(instance, scheme, delta, n, batch)?;
    let lambdas = instance.spectrum().eigenvalues();
    let noise = instance.noise_diag();
    let displacement = instance.displacement();
    let beta0 = scheme.beta0();
    let increments = scheme.increments();
    let batch_f = batch as f64;
    let (s_bias, s_variance) = scalar_sequences(instance, delta, batch_f, n);

    let table: Option<Vec<Vec<f64>>> = match memory {
        MemoryBudget::Full => Some(suffix_geometric_sums(
            increments,
            instance.spectrum(),
            delta,
        )?),
        MemoryBudget::Low => None,
    };

    let results: Vec<CoordinateResult> = (0..lambdas.len())
        .into_par_iter()
        .map(|i| {
            let lambda = lambdas[i];
            let mut local: Vec<f64>;
            let g_row: &[f64] = match &table {
                Some(rows) => &rows[i],
                None => {
                    local = vec![0.0; n + 1];
                    suffix_row(increments, 1.0 - delta * lambda, &mut local);
                    &local
                }
            };
            coordinate_risk(
                lambda,
                displacement[i],
                noise[i],
                delta,
                batch_f,
                beta0,
                &s_bias,
                &s_variance,
                g_row,
            )
        })
        .collect();
    Ok(assemble_report(results, RiskMethod::Telescoped))
}

/// Per-coordinate deterministic decay multipliers `β_0 + G_{0,i}`: with exact
/// (full-gradient) updates the averaged displacement is exactly
/// `multiplier_i · η_{0,i}` in every coordinate.
pub fn deterministic_bias(
    instance: &ProblemInstance,
    scheme: &AveragingScheme,
    delta: f64,
    n: usize,
) -> Result<Vec<f64>, ExactError> {
    validate_risk_inputs(instance, scheme, delta, n, 1)?;
    let beta0 = scheme.beta0();
    let increments = scheme.increments();
    Ok(instance
        .spectrum()
        .eigenvalues()
        .iter()
        .map(|&lambda| {
            let x = 1.0 - delta * lambda;
            let mut g = 0.0;
            for t in (0..n).rev() {
                g = increments[t] + x * g;
            }
            beta0 + g
        })
        .collect())
}

/// Ground-truth oracle that expands `E[η̄ ⊗ η̄]` over every pair of steps
/// using the cross-moment identity `E[η_t η_k]_ii = D_{min(t,k),ii} x_i^{|t−k|}`.
/// O(N²·d) — guarded to small problems. Exists to cross-verify
/// [`exact_risk`]'s telescoping, so it shares as little structure with it as
/// possible (no suffix sums, no telescoped increments).
pub fn direct_risk_oracle(
    instance: &ProblemInstance,
    scheme: &AveragingScheme,
    delta: f64,
    n: usize,
    batch: usize,
) -> Result<RiskReport, ExactError> {
    validate_risk_inputs(instance, scheme, delta, n, batch)?;
    let d = instance.spectrum().dim();
    let cost = (n as f64) * (n as f64) * d as f64;
    if cost > 1e8 {
        return Err(ExactError::DirectOracleTooLarge(cost));
    }
    let lambdas = instance.spectrum().eigenvalues();
    let noise = instance.noise_diag();
    let displacement = instance.displacement();
    let batch_f = batch as f64;
    let (s_bias, s_variance) = scalar_sequences(instance, delta, batch_f, n);

    // Effective weight of iterate t in the output (the starting point w_0
    // carries both its increment share and the residual weight β_0).
    let mut weights = scheme.increments().to_vec();
    weights[0] += scheme.beta0();

    let results: Vec<CoordinateResult> = (0..d)
        .map(|i| {
            let lambda = lambdas[i];
            let x = 1.0 - delta * lambda;
            let coupling = delta * delta / batch_f;
            let lambda_sq = lambda * lambda;
            let injection = delta * delta * noise[i] / batch_f;
            // Replay this coordinate's diagonal second moments D_t for
            // t = 0..N−1 against the shared scalar sums.
            let mut d_bias = Vec::with_capacity(n);
            let mut d_variance = Vec::with_capacity(n);
            let mut b_cur = displacement[i] * displacement[i];
            let mut c_cur = 0.0;
            d_bias.push(b_cur);
            d_variance.push(c_cur);
            for u in 0..n - 1 {
                let delta_b = coupling * (lambda_sq * b_cur + lambda * s_bias[u]);
                let delta_c = coupling * (lambda_sq * c_cur + lambda * s_variance[u]);
                b_cur = x * x * b_cur + delta_b;
                c_cur = x * x * c_cur + delta_c + injection;
                d_bias.push(b_cur);
                d_variance.push(c_cur);
            }
            let mut powers = Vec::with_capacity(n);
            powers.push(1.0);
            for j in 1..n {
                powers.push(powers[j - 1] * x);
            }
            let mut bias_acc = Kahan::new();
            let mut variance_acc = Kahan::new();
            for t in 0..n {
                for k in 0..n {
                    let (lo, gap) = if t <= k { (t, k - t) } else { (k, t - k) };
                    let w = weights[t] * weights[k];
                    bias_acc.add(w * d_bias[lo] * powers[gap]);
                    variance_acc.add(w * d_variance[lo] * powers[gap]);
                }
            }
            CoordinateResult {
                bias: lambda * bias_acc.total(),
                variance: lambda * variance_acc.total(),
            }
        })
        .collect();
    Ok(assemble_report(results, RiskMethod::Direct))
}

/// A [`RiskReport`] plus the largest off-diagonal magnitude seen in any
/// full-matrix second moment along the way.
#[derive(Clone, Debug)]
pub struct DenseRiskReport {
    /// The risk computed from the dense recursion.
    pub report: RiskReport,
    /// `max_t max_{i≠j} |A_{t,ij}|` over both dense second-moment processes.
    /// Diagonality of the update closure predicts exactly 0 for diagonal
    /// starts; anything above ~1e-14 falsifies the closure.
    pub max_off_diagonal: f64,
}

/// Full-matrix oracle for `d ≤ 8`: evolves dense second moments under
/// `A ← (I−δH)A(I−δH) + (δ²/B)(HAH + tr(HA)H)` (plus the noise injection for
/// the variance process) and accumulates the risk through diagonal suffix
/// weights. Verifies that diagonal starts stay diagonal.
pub fn dense_risk_oracle(
    instance: &ProblemInstance,
    scheme: &AveragingScheme,
    delta: f64,
    n: usize,
    batch: usize,
) -> Result<DenseRiskReport, ExactError> {
    validate_risk_inputs(instance, scheme, delta, n, batch)?;
    let d = instance.spectrum().dim();
    if d > 8 {
        return Err(ExactError::DenseOracleTooLarge(d));
    }
    let lambdas = instance.spectrum().eigenvalues();
    let noise = instance.noise_diag();
    let displacement = instance.displacement();
    let batch_f = batch as f64;
    let coupling = delta * delta / batch_f;
    let beta0 = scheme.beta0();
    let g_rows = suffix_geometric_sums(scheme.increments(), instance.spectrum(), delta)?;

    // Dense state matrices, row-major d×d.
    let mut bias_mat = vec![0.0; d * d];
    let mut variance_mat = vec![0.0; d * d];
    for i in 0..d {
        bias_mat[i * d + i] = displacement[i] * displacement[i];
    }
    let mut max_off = 0.0_f64;
    let track_off = |m: &[f64]| {
        let mut worst = 0.0_f64;
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    worst = worst.max(m[i * d + j].abs());
                }
            }
        }
        worst
    };

    // Fourth-moment increment of a dense symmetric A:
    // Δ(A) = (δ²/B)(HAH + tr(HA)H), entrywise λ_iλ_jA_ij plus tr·λ_i on the
    // diagonal.
    let dense_delta = |a: &[f64]| -> Vec<f64> {
        let mut tr = Kahan::new();
        for j in 0..d {
            tr.add(lambdas[j] * a[j * d + j]);
        }
        let tr = tr.total();
        let mut out = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                let mut v = lambdas[i] * lambdas[j] * a[i * d + j];
                if i == j {
                    v += tr * lambdas[i];
                }
                out[i * d + j] = coupling * v;
            }
        }
        out
    };
    // A ← (I−δH)A(I−δH) + Δ, optional diagonal injection.
    let advance = |a: &mut [f64], delta_mat: &[f64], inject: Option<&[f64]>| {
        for i in 0..d {
            let xi = 1.0 - delta * lambdas[i];
            for j in 0..d {
                let xj = 1.0 - delta * lambdas[j];
                a[i * d + j] = xi * xj * a[i * d + j] + delta_mat[i * d + j];
            }
        }
        if let Some(inj) = inject {
            for i in 0..d {
                a[i * d + i] += inj[i];
            }
        }
    };
    let injection: Vec<f64> = noise
        .iter()
        .map(|&s| delta * delta * s / batch_f)
        .collect();

    // t = 0 term: ⟨H, (β₀I+G₀)·diag(η₀²)·(β₀I+G₀)⟩ per coordinate.
    let mut bias_coord: Vec<Kahan> = (0..d).map(|_| Kahan::new()).collect();
    let mut variance_coord: Vec<Kahan> = (0..d).map(|_| Kahan::new()).collect();
    for i in 0..d {
        let m = beta0 + g_rows[i][0];
        bias_coord[i].add(m * m * (displacement[i] * displacement[i]));
    }
    for t in 1..n {
        // The increments are computed from the step-(t−1) states, after which
        // the states advance to step t.
        let delta_b = dense_delta(&bias_mat);
        let delta_c = dense_delta(&variance_mat);
        for i in 0..d {
            let g = g_rows[i][t];
            let g_sq = g * g;
            bias_coord[i].add(g_sq * delta_b[i * d + i]);
            variance_coord[i].add(g_sq * (delta_c[i * d + i] + injection[i]));
        }
        advance(&mut bias_mat, &delta_b, None);
        advance(&mut variance_mat, &delta_c, Some(&injection));
        max_off = max_off.max(track_off(&bias_mat)).max(track_off(&variance_mat));
    }
    let results: Vec<CoordinateResult> = (0..d)
        .map(|i| CoordinateResult {
            bias: lambdas[i] * bias_coord[i].total(),
            variance: lambdas[i] * variance_coord[i].total(),
        })
        .collect();
    Ok(DenseRiskReport {
        report: assemble_report(results, RiskMethod::DenseOracle),
        max_off_diagonal: max_off,
    })
}
