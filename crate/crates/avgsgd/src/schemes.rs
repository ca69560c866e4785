//! Iterate-averaging schemes.
//!
//! A scheme over horizon `N` is an averaging-coefficient sequence
//! `α_0, …, α_{N−1}` with `α_t ∈ [0, 1]`. The running average follows
//! `w̄_0 = w_0`, `w̄_t = α_{t−1} w̄_{t−1} + (1 − α_{t−1}) w_{t−1}` — each update
//! folds in the *previous* iterate, so the final output is the affine
//! combination `w̄_N = β_0 w_0 + Σ_{t<N} c_t w_t` over `w_0..w_{N−1}` with
//! `β_t = Π_{k=t}^{N−1} α_k` (so `β_N = 1`) and increments
//! `c_t = β_{t+1} − β_t ≥ 0`, which satisfy `β_0 + Σ c_t = 1`.

use std::path::Path;

use thiserror::Error;

/// Validation and parse errors for schemes.
#[derive(Debug, Error)]
pub enum SchemeError {
    /// Horizon must be at least 1.
    #[error("horizon must be positive, got {0}")]
    EmptyHorizon(usize),
    /// EMA parameter out of range.
    #[error("ema parameter must lie strictly inside (0, 1), got {0}")]
    BadEmaParameter(f64),
    /// Tail-averaging start out of range.
    #[error("tail start must satisfy 0 <= s < N, got s={s}, N={n}")]
    BadTailStart { s: usize, n: usize },
    /// Custom coefficient out of range.
    #[error("averaging coefficient at step {index} must lie in [0, 1], got {value}")]
    BadCoefficient { index: usize, value: f64 },
    /// Custom coefficient sequence has the wrong length.
    #[error("expected {expected} averaging coefficients, got {got}")]
    CoefficientCount { expected: usize, got: usize },
    /// Unparseable scheme spec string.
    #[error("unrecognized scheme spec {0:?} (expected ema:A, none, ia, ta:S, or custom:@FILE)")]
    BadSpec(String),
    /// Number inside a spec string failed to parse.
    #[error("invalid number {value:?} in scheme spec {spec:?}")]
    BadSpecNumber { spec: String, value: String },
    /// Coefficient file could not be read.
    #[error("cannot read coefficient file {path}: {source}")]
    CoefficientFile {
        path: String,
        source: std::io::Error,
    },
    /// Coefficient file line failed to parse.
    #[error("coefficient file {path} line {line}: invalid number {value:?}")]
    CoefficientFileLine {
        path: String,
        line: usize,
        value: String,
    },
}

/// The named scheme families.
#[derive(Clone, Debug, PartialEq)]
pub enum SchemeKind {
    /// Exponential moving average with constant `α ∈ (0, 1)`.
    Ema { alpha: f64 },
    /// No averaging: output the last iterate `w_{N−1}`.
    None,
    /// Uniform average of `w_0..w_{N−1}`.
    IterateAveraging,
    /// Uniform average of the tail `w_s..w_{N−1}`.
    TailAveraging { s: usize },
    /// Arbitrary coefficients, one per step.
    Custom { alphas: Vec<f64> },
}

/// A validated averaging scheme over a fixed horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct AveragingScheme {
    label: String,
    alphas: Vec<f64>,
    betas: Vec<f64>,
    increments: Vec<f64>,
}

impl AveragingScheme {
    /// Horizon `N` (number of SGD steps the scheme spans).
    pub fn horizon(&self) -> usize {
        self.alphas.len()
    }

    /// Averaging coefficients `α_0..α_{N−1}`.
    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    /// Suffix products `β_0..β_N` (non-decreasing, `β_N = 1`).
    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    /// Increments `c_t = β_{t+1} − β_t ≥ 0`, the weight of iterate `w_t`.
    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    /// Weight of the starting point `w_0` beyond its increment share.
    pub fn beta0(&self) -> f64 {
        self.betas[0]
    }

    /// Short human-readable label (also used in CSV rows and file names).
    pub fn label(&self) -> &str {
        &self.label
    }

    /// The scheme truncated to the first `t ≥ 1` steps: same coefficient
    /// prefix, evaluated as its own horizon-`t` scheme. This is exactly the
    /// scheme whose output the running average reaches at step `t`.
    pub fn truncated(&self, t: usize) -> Result<AveragingScheme, SchemeError> {
        if t == 0 || t > self.horizon() {
            return Err(SchemeError::EmptyHorizon(t));
        }
        let mut s = make_scheme(
            SchemeKind::Custom {
                alphas: self.alphas[..t].to_vec(),
            },
            t,
        )?;
        s.label = format!("{}@{}", self.label, t);
        Ok(s)
    }
}

/// Build a validated scheme over horizon `n`.
pub fn make_scheme(kind: SchemeKind, n: usize) -> Result<AveragingScheme, SchemeError> {
    if n == 0 {
        return Err(SchemeError::EmptyHorizon(n));
    }
    let (label, alphas): (String, Vec<f64>) = match kind {
        SchemeKind::Ema { alpha } => {
            if !alpha.is_finite() || alpha <= 0.0 || alpha >= 1.0 {
                return Err(SchemeError::BadEmaParameter(alpha));
            }
            (format!("ema:{alpha}"), vec![alpha; n])
        }
        SchemeKind::None => ("none".to_string(), vec![0.0; n]),
        SchemeKind::IterateAveraging => (
            "ia".to_string(),
            (0..n).map(|t| t as f64 / (t + 1) as f64).collect(),
        ),
        SchemeKind::TailAveraging { s } => {
            if s >= n {
                return Err(SchemeError::BadTailStart { s, n });
            }
            let alphas = (0..n)
                .map(|t| {
                    if t < s {
                        0.0
                    } else {
                        (t - s) as f64 / (t - s + 1) as f64
                    }
                })
                .collect();
            (format!("ta:{s}"), alphas)
        }
        SchemeKind::Custom { alphas } => {
            if alphas.len() != n {
                return Err(SchemeError::CoefficientCount {
                    expected: n,
                    got: alphas.len(),
                });
            }
            for (index, &value) in alphas.iter().enumerate() {
                if !value.is_finite() || !(0.0..=1.0).contains(&value) {
                    return Err(SchemeError::BadCoefficient { index, value });
                }
            }
            ("custom".to_string(), alphas)
        }
    };
    // β by backward products keeps monotonicity exact in floating point
    // (multiplying by α ≤ 1 can never round above the multiplicand), and
    // computing c as forward differences makes β_0 + Σ c_t telescope to 1
    // up to a couple of ulps for any horizon.
    let mut betas = vec![1.0; n + 1];
    for t in (0..n).rev() {
        betas[t] = alphas[t] * betas[t + 1];
    }
    let increments = (0..n).map(|t| betas[t + 1] - betas[t]).collect();
    Ok(AveragingScheme {
        label,
        alphas,
        betas,
        increments,
    })
}

/// The `(β, c)` weight pair of a scheme.
pub fn scheme_weights(scheme: &AveragingScheme) -> (&[f64], &[f64]) {
    (scheme.betas(), scheme.increments())
}

/// A parsed scheme spec string, before any file it references is read.
///
/// Grammar: `ema:A` (A ∈ (0,1)), `none`, `ia`, `ta:S` (integer S ≥ 0),
/// `custom:@FILE` (one coefficient per line; blank lines and `#` comments
/// are ignored).
#[derive(Clone, Debug, PartialEq)]
pub enum SchemeSpec {
    /// `ema:A`
    Ema { alpha: f64 },
    /// `none`
    None,
    /// `ia`
    Ia,
    /// `ta:S`
    Ta { s: usize },
    /// `custom:@FILE`
    CustomFile { path: String },
}

impl SchemeSpec {
    /// Parse a spec string (no file IO).
    pub fn parse(spec: &str) -> Result<Self, SchemeError> {
        let spec = spec.trim();
        match spec {
            "none" => return Ok(SchemeSpec::None),
            "ia" => return Ok(SchemeSpec::Ia),
            _ => {}
        }
        if let Some(rest) = spec.strip_prefix("ema:") {
            let alpha: f64 = rest.trim().parse().map_err(|_| SchemeError::BadSpecNumber {
                spec: spec.to_string(),
                value: rest.trim().to_string(),
            })?;
            if !alpha.is_finite() || alpha <= 0.0 || alpha >= 1.0 {
                return Err(SchemeError::BadEmaParameter(alpha));
            }
            return Ok(SchemeSpec::Ema { alpha });
        }
        if let Some(rest) = spec.strip_prefix("ta:") {
            let s: usize = rest.trim().parse().map_err(|_| SchemeError::BadSpecNumber {
                spec: spec.to_string(),
                value: rest.trim().to_string(),
            })?;
            return Ok(SchemeSpec::Ta { s });
        }
        if let Some(rest) = spec.strip_prefix("custom:@") {
            if rest.is_empty() {
                return Err(SchemeError::BadSpec(spec.to_string()));
            }
            return Ok(SchemeSpec::CustomFile {
                path: rest.to_string(),
            });
        }
        Err(SchemeError::BadSpec(spec.to_string()))
    }

    /// The canonical textual form (round-trips through [`SchemeSpec::parse`]).
    pub fn to_spec_string(&self) -> String {
        match self {
            SchemeSpec::Ema { alpha } => format!("ema:{alpha}"),
            SchemeSpec::None => "none".to_string(),
            SchemeSpec::Ia => "ia".to_string(),
            SchemeSpec::Ta { s } => format!("ta:{s}"),
            SchemeSpec::CustomFile { path } => format!("custom:@{path}"),
        }
    }

    /// Resolve to a concrete scheme over horizon `n`, reading the coefficient
    /// file for `custom:@FILE` specs relative to `base_dir` (unless absolute).
    pub fn resolve(&self, n: usize, base_dir: &Path) -> Result<AveragingScheme, SchemeError> {
        let kind = match self {
            SchemeSpec::Ema { alpha } => SchemeKind::Ema { alpha: *alpha },
            SchemeSpec::None => SchemeKind::None,
            SchemeSpec::Ia => SchemeKind::IterateAveraging,
            SchemeSpec::Ta { s } => SchemeKind::TailAveraging { s: *s },
            SchemeSpec::CustomFile { path } => {
                let full = if Path::new(path).is_absolute() {
                    Path::new(path).to_path_buf()
                } else {
                    base_dir.join(path)
                };
                let text = std::fs::read_to_string(&full).map_err(|source| {
                    SchemeError::CoefficientFile {
                        path: full.display().to_string(),
                        source,
                    }
                })?;
                SchemeKind::Custom {
                    alphas: parse_values_text(&text).map_err(|(line, value)| {
                        SchemeError::CoefficientFileLine {
                            path: full.display().to_string(),
                            line,
                            value,
                        }
                    })?,
                }
            }
        };
        let mut scheme = make_scheme(kind, n)?;
        scheme.label = self.to_spec_string();
        Ok(scheme)
    }

    /// A filesystem-safe slug for artifact names.
    pub fn slug(&self) -> String {
        let raw = self.to_spec_string();
        raw.chars()
            .map(|c| {
                if c.is_ascii_alphanumeric() || c == '.' || c == '-' {
                    c
                } else {
                    '_'
                }
            })
            .collect()
    }
}

/// Parse a whitespace-trimmed numbers-per-line text (blank lines and `#`
/// comments ignored). Returns `(line_number, offending_text)` on failure.
/// Shared by coefficient files, explicit spectra, displacements, and noise
/// diagonals.
pub fn parse_values_text(text: &str) -> Result<Vec<f64>, (usize, String)> {
    let mut values = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match line.parse::<f64>() {
            Ok(v) => values.push(v),
            Err(_) => return Err((idx + 1, line.to_string())),
        }
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn ema_half_horizon_two() {
        // β = (α², α, 1) = (0.25, 0.5, 1); c = (0.25, 0.5).
        let s = make_scheme(SchemeKind::Ema { alpha: 0.5 }, 2).unwrap();
        assert_eq!(s.betas(), &[0.25, 0.5, 1.0]);
        assert_eq!(s.increments(), &[0.25, 0.5]);
    }

    #[test]
    fn none_is_last_iterate() {
        let s = make_scheme(SchemeKind::None, 5).unwrap();
        assert_eq!(s.betas(), &[0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(s.increments(), &[0.0, 0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn iterate_averaging_uniform_weights() {
        // β_t = t/4, c_t = 1/4.
        let s = make_scheme(SchemeKind::IterateAveraging, 4).unwrap();
        for (t, &b) in s.betas().iter().enumerate() {
            assert!(close(b, t as f64 / 4.0, 1e-15), "beta_{t}");
        }
        for (t, &c) in s.increments().iter().enumerate() {
            assert!(close(c, 0.25, 1e-15), "c_{t}");
        }
    }

    #[test]
    fn tail_averaging_uniform_tail() {
        let s = make_scheme(SchemeKind::TailAveraging { s: 2 }, 4).unwrap();
        assert_eq!(s.increments(), &[0.0, 0.0, 0.5, 0.5]);
    }

    #[test]
    fn ema_closed_form_increments() {
        // c_t = (1−α) α^{N−1−t} to well below 1e-15 absolute.
        for &(alpha, n) in &[(0.5_f64, 8_usize), (0.9, 40), (0.995, 400), (0.3, 3)] {
            let s = make_scheme(SchemeKind::Ema { alpha }, n).unwrap();
            for t in 0..n {
                let closed = (1.0 - alpha) * alpha.powi((n - 1 - t) as i32);
                assert!(
                    close(s.increments()[t], closed, 1e-15),
                    "alpha={alpha} n={n} t={t}"
                );
            }
            assert!(close(s.beta0(), alpha.powi(n as i32), 1e-15));
        }
    }

    #[test]
    fn affine_identity_and_monotonicity() {
        let schemes = vec![
            make_scheme(SchemeKind::Ema { alpha: 0.9999 }, 5000).unwrap(),
            make_scheme(SchemeKind::IterateAveraging, 3000).unwrap(),
            make_scheme(SchemeKind::TailAveraging { s: 999 }, 3000).unwrap(),
            make_scheme(SchemeKind::None, 7).unwrap(),
        ];
        for s in schemes {
            let mut total = crate::numeric::Kahan::new();
            total.add(s.beta0());
            for &c in s.increments() {
                assert!(c >= 0.0);
                total.add(c);
            }
            assert!(close(total.total(), 1.0, 1e-15), "{}", s.label());
            for t in 0..s.horizon() {
                assert!(s.betas()[t] <= s.betas()[t + 1]);
            }
        }
    }

    #[test]
    fn reductions_are_exact() {
        // tail(0) has the same coefficients as iterate averaging; custom all
        // zeros matches `none` bit for bit.
        let n = 17;
        let ta0 = make_scheme(SchemeKind::TailAveraging { s: 0 }, n).unwrap();
        let ia = make_scheme(SchemeKind::IterateAveraging, n).unwrap();
        assert_eq!(ta0.betas(), ia.betas());
        assert_eq!(ta0.increments(), ia.increments());
        let zeros = make_scheme(
            SchemeKind::Custom {
                alphas: vec![0.0; n],
            },
            n,
        )
        .unwrap();
        let none = make_scheme(SchemeKind::None, n).unwrap();
        assert_eq!(zeros.betas(), none.betas());
        assert_eq!(zeros.increments(), none.increments());
    }

    #[test]
    fn custom_all_ones_outputs_starting_point() {
        let s = make_scheme(
            SchemeKind::Custom {
                alphas: vec![1.0; 4],
            },
            4,
        )
        .unwrap();
        assert_eq!(s.beta0(), 1.0);
        assert!(s.increments().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn validation_errors() {
        assert!(matches!(
            make_scheme(SchemeKind::Ema { alpha: 1.0 }, 3),
            Err(SchemeError::BadEmaParameter(_))
        ));
        assert!(matches!(
            make_scheme(SchemeKind::Ema { alpha: 0.0 }, 3),
            Err(SchemeError::BadEmaParameter(_))
        ));
        assert!(matches!(
            make_scheme(SchemeKind::TailAveraging { s: 3 }, 3),
            Err(SchemeError::BadTailStart { .. })
        ));
        assert!(matches!(
            make_scheme(
                SchemeKind::Custom {
                    alphas: vec![0.5, 1.5]
                },
                2
            ),
            Err(SchemeError::BadCoefficient { index: 1, .. })
        ));
        assert!(matches!(
            make_scheme(SchemeKind::None, 0),
            Err(SchemeError::EmptyHorizon(0))
        ));
    }

    #[test]
    fn spec_strings_round_trip() {
        for spec in ["ema:0.995", "none", "ia", "ta:1000", "custom:@alphas.txt"] {
            let parsed = SchemeSpec::parse(spec).unwrap();
            assert_eq!(parsed.to_spec_string(), spec);
        }
        assert!(SchemeSpec::parse("ema:1.5").is_err());
        assert!(SchemeSpec::parse("ta:-1").is_err());
        assert!(SchemeSpec::parse("avg").is_err());
        assert!(SchemeSpec::parse("custom:@").is_err());
    }

    #[test]
    fn truncation_matches_prefix() {
        let s = make_scheme(SchemeKind::TailAveraging { s: 2 }, 6).unwrap();
        let p = s.truncated(4).unwrap();
        assert_eq!(p.alphas(), &s.alphas()[..4]);
        assert_eq!(p.horizon(), 4);
        assert!(s.truncated(0).is_err());
        assert!(s.truncated(7).is_err());
    }

    #[test]
    fn values_text_parsing() {
        let text = "# header\n0.5\n\n 0.25 \n";
        assert_eq!(parse_values_text(text).unwrap(), vec![0.5, 0.25]);
        let err = parse_values_text("0.5\nfoo\n").unwrap_err();
        assert_eq!(err, (2, "foo".to_string()));
    }
}
