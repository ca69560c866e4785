//! Problem definition: covariance spectrum, initial displacement, noise and
//! fourth-moment models for streaming linear regression.
//!
//! The data model is Gaussian-by-default: features `x ~ N(0, H)` with `H`
//! diagonalized as `diag(λ_1 ≥ λ_2 ≥ … > 0)`, responses
//! `y = ⟨w_*, x⟩ + ξ`. Everything downstream works in the eigenbasis, so an
//! instance is fully described by the eigenvalues, the per-coordinate initial
//! displacement `η_0 = w_0 − w_*`, the noise second moment, and two
//! fourth-moment constants `(ψ, β)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::numeric::kahan_sum;

/// Validation errors for spectra and instances.
#[derive(Debug, Error)]
pub enum ProblemError {
    /// Dimension must be at least 1.
    #[error("dimension must be positive, got {0}")]
    EmptyDimension(usize),
    /// Power-law exponent must be positive.
    #[error("power-law exponent must be positive, got {0}")]
    NonPositiveExponent(f64),
    /// Explicit eigenvalue list has the wrong length.
    #[error("expected {expected} eigenvalues, got {got}")]
    EigenvalueCount { expected: usize, got: usize },
    /// An eigenvalue is non-positive or not finite.
    #[error("eigenvalue at index {index} must be positive and finite, got {value}")]
    BadEigenvalue { index: usize, value: f64 },
    /// Eigenvalues must be in non-increasing order.
    #[error("eigenvalues must be non-increasing: index {index} has {value} after {previous}")]
    NotSorted {
        index: usize,
        value: f64,
        previous: f64,
    },
    /// Displacement vector has the wrong length.
    #[error("expected {expected} displacement entries, got {got}")]
    DisplacementCount { expected: usize, got: usize },
    /// A displacement entry is not finite.
    #[error("displacement at index {index} is not finite")]
    BadDisplacement { index: usize },
    /// Source-condition exponent out of range.
    #[error("source condition requires b < a+1, got a={a}, b={b}")]
    SourceConditionRange { a: f64, b: f64 },
    /// Source condition needs a power-law spectrum to validate against.
    #[error("source condition requires a power-law spectrum (needs the exponent a)")]
    SourceConditionNeedsPowerLaw,
    /// Noise variance must be nonnegative.
    #[error("sigma2 must be nonnegative and finite, got {0}")]
    BadSigma2(f64),
    /// Fourth-moment constants out of range.
    #[error("moment model requires psi >= 1 and 0 < beta <= psi, got psi={psi}, beta={beta}")]
    BadMomentConstants { psi: f64, beta: f64 },
    /// Noise covariance diagonal entry invalid.
    #[error("noise covariance diagonal at index {index} must be nonnegative and finite")]
    BadNoiseEntry { index: usize },
    /// Noise covariance diagonal has the wrong length.
    #[error("expected {expected} noise covariance entries, got {got}")]
    NoiseCount { expected: usize, got: usize },
}

/// How a spectrum is generated.
#[derive(Clone, Debug, PartialEq)]
pub enum SpectrumKind {
    /// `λ_i = i^{-a}` for `i = 1..=d`, `a > 0`.
    PowerLaw { a: f64 },
    /// Explicit positive, non-increasing eigenvalues.
    Explicit { values: Vec<f64> },
}

/// Eigenvalues of the feature covariance, non-increasing and positive.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    trace: f64,
    power_law_exponent: Option<f64>,
}

impl Spectrum {
    /// `λ_i = i^{-a}`, the polynomially decaying spectrum.
    pub fn power_law(a: f64, d: usize) -> Result<Self, ProblemError> {
        make_spectrum(SpectrumKind::PowerLaw { a }, d)
    }

    /// Spectrum from explicit eigenvalues (must be positive, non-increasing).
    pub fn explicit(values: Vec<f64>) -> Result<Self, ProblemError> {
        let d = values.len();
        make_spectrum(SpectrumKind::Explicit { values }, d)
    }

    /// Number of coordinates.
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Eigenvalues, largest first.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `tr(H) = Σ λ_i` (compensated sum, fixed order).
    pub fn trace(&self) -> f64 {
        self.trace
    }

    /// The power-law exponent when the spectrum was built as a power law.
    pub fn power_law_exponent(&self) -> Option<f64> {
        self.power_law_exponent
    }
}

/// Build a [`Spectrum`]; `d` is checked against explicit value lists.
pub fn make_spectrum(kind: SpectrumKind, d: usize) -> Result<Spectrum, ProblemError> {
    if d == 0 {
        return Err(ProblemError::EmptyDimension(d));
    }
    let (values, exponent) = match kind {
        SpectrumKind::PowerLaw { a } => {
            if !(a > 0.0) || !a.is_finite() {
                return Err(ProblemError::NonPositiveExponent(a));
            }
            let values = (1..=d).map(|i| (i as f64).powf(-a)).collect();
            (values, Some(a))
        }
        SpectrumKind::Explicit { values } => {
            if values.len() != d {
                return Err(ProblemError::EigenvalueCount {
                    expected: d,
                    got: values.len(),
                });
            }
            (values, None)
        }
    };
    for (index, &value) in values.iter().enumerate() {
        if !(value > 0.0) || !value.is_finite() {
            return Err(ProblemError::BadEigenvalue { index, value });
        }
        if index > 0 && value > values[index - 1] {
            return Err(ProblemError::NotSorted {
                index,
                value,
                previous: values[index - 1],
            });
        }
    }
    let trace = kahan_sum(values.iter().copied());
    Ok(Spectrum {
        eigenvalues: values,
        trace,
        power_law_exponent: exponent,
    })
}

/// Power-law pair (spectrum exponent `a`, displacement exponent `b`) with
/// `λ_i = i^{-a}` and `λ_i η_{0,i}² = i^{-b}`; requires `b < a + 1` so the
/// scaling-law regime is well defined.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SourceCondition {
    a: f64,
    b: f64,
    d: usize,
}

impl SourceCondition {
    /// Validate the exponent pair.
    pub fn new(a: f64, b: f64, d: usize) -> Result<Self, ProblemError> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(ProblemError::NonPositiveExponent(a));
        }
        if d == 0 {
            return Err(ProblemError::EmptyDimension(d));
        }
        if !b.is_finite() || b >= a + 1.0 {
            return Err(ProblemError::SourceConditionRange { a, b });
        }
        Ok(Self { a, b, d })
    }

    /// Spectrum exponent.
    pub fn a(&self) -> f64 {
        self.a
    }

    /// Displacement exponent.
    pub fn b(&self) -> f64 {
        self.b
    }

    /// Dimension.
    pub fn dim(&self) -> usize {
        self.d
    }

    /// The displacement magnitudes: `η_{0,i} = sqrt(i^{-b} / λ_i) = i^{(a-b)/2}`.
    pub fn displacement(&self) -> Vec<f64> {
        (1..=self.d)
            .map(|i| (i as f64).powf((self.a - self.b) / 2.0))
            .collect()
    }
}

/// How the initial displacement `η_0 = w_0 − w_*` is chosen.
#[derive(Clone, Debug, PartialEq)]
pub enum DisplacementSpec {
    /// Explicit per-coordinate values.
    Explicit { values: Vec<f64> },
    /// Power-law source condition `λ_i η_{0,i}² = i^{-b}` (needs a power-law
    /// spectrum so `b < a+1` can be validated).
    SourceCondition { b: f64 },
    /// Every coordinate i.i.d. standard normal, from a fixed 64-bit seed via
    /// a ChaCha8 stream (coordinates drawn in ascending order).
    GaussianRandom { seed: u64 },
}

/// Fourth-moment model for the features.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MomentModel {
    /// Gaussian features. Isserlis gives `E[xxᵀAxxᵀ] = 2HAH + tr(HA)H` for
    /// symmetric `A`, hence ψ = 3 (upper constant) and β = 1 (lower constant).
    GaussianDefault,
    /// User-supplied constants with ψ ≥ 1 and 0 < β ≤ ψ. The exact engine
    /// still evaluates the Gaussian recursion; the constants feed the bounds.
    Custom { psi: f64, beta: f64 },
}

/// Second moment of the gradient noise at the optimum.
#[derive(Clone, Debug, PartialEq)]
pub enum NoiseModel {
    /// `Σ = σ² H` (additive label noise independent of x).
    WellSpecified,
    /// Explicit diagonal of `Σ` in the eigenbasis.
    Diagonal { values: Vec<f64> },
}

/// A fully validated regression instance in the eigenbasis.
#[derive(Clone, Debug)]
pub struct ProblemInstance {
    spectrum: Spectrum,
    displacement: Vec<f64>,
    sigma2: f64,
    psi: f64,
    beta: f64,
    noise_model: NoiseModel,
}

impl ProblemInstance {
    /// The covariance spectrum.
    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    /// Number of coordinates.
    pub fn dim(&self) -> usize {
        self.spectrum.dim()
    }

    /// Initial displacement `η_0` per coordinate.
    pub fn displacement(&self) -> &[f64] {
        &self.displacement
    }

    /// Label-noise variance σ².
    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// Fourth-moment upper constant ψ.
    pub fn psi(&self) -> f64 {
        self.psi
    }

    /// Fourth-moment lower constant β.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// The noise model.
    pub fn noise_model(&self) -> &NoiseModel {
        &self.noise_model
    }

    /// True when `Σ = σ²H` exactly (the case in which `excess_risk`
    /// decomposes as (bias + variance)/2 with no cross term).
    pub fn is_well_specified(&self) -> bool {
        matches!(self.noise_model, NoiseModel::WellSpecified)
    }

    /// Diagonal of the noise second moment `Σ` in the eigenbasis.
    pub fn noise_diag(&self) -> Vec<f64> {
        match &self.noise_model {
            NoiseModel::WellSpecified => self
                .spectrum
                .eigenvalues()
                .iter()
                .map(|&l| self.sigma2 * l)
                .collect(),
            NoiseModel::Diagonal { values } => values.clone(),
        }
    }
}

/// Draw `d` standard normal coordinates from the documented seeded stream.
pub fn gaussian_displacement(seed: u64, d: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..d)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect()
}

/// Build a validated [`ProblemInstance`].
pub fn make_instance(
    spectrum: Spectrum,
    displacement: DisplacementSpec,
    sigma2: f64,
    moment_model: MomentModel,
    noise_model: NoiseModel,
) -> Result<ProblemInstance, ProblemError> {
    let d = spectrum.dim();
    if !sigma2.is_finite() || sigma2 < 0.0 {
        return Err(ProblemError::BadSigma2(sigma2));
    }
    let displacement = match displacement {
        DisplacementSpec::Explicit { values } => {
            if values.len() != d {
                return Err(ProblemError::DisplacementCount {
                    expected: d,
                    got: values.len(),
                });
            }
            if let Some(index) = values.iter().position(|v| !v.is_finite()) {
                return Err(ProblemError::BadDisplacement { index });
            }
            values
        }
        DisplacementSpec::SourceCondition { b } => {
            let a = spectrum
                .power_law_exponent()
                .ok_or(ProblemError::SourceConditionNeedsPowerLaw)?;
            SourceCondition::new(a, b, d)?.displacement()
        }
        DisplacementSpec::GaussianRandom { seed } => gaussian_displacement(seed, d),
    };
    let (psi, beta) = match moment_model {
        MomentModel::GaussianDefault => (3.0, 1.0),
        MomentModel::Custom { psi, beta } => {
            if !psi.is_finite() || !beta.is_finite() || psi < 1.0 || beta <= 0.0 || beta > psi {
                return Err(ProblemError::BadMomentConstants { psi, beta });
            }
            (psi, beta)
        }
    };
    match &noise_model {
        NoiseModel::WellSpecified => {}
        NoiseModel::Diagonal { values } => {
            if values.len() != d {
                return Err(ProblemError::NoiseCount {
                    expected: d,
                    got: values.len(),
                });
            }
            for (index, &v) in values.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(ProblemError::BadNoiseEntry { index });
                }
            }
        }
    }
    Ok(ProblemInstance {
        spectrum,
        displacement,
        sigma2,
        psi,
        beta,
        noise_model,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_law_small_dimension() {
        // λ_i = i^{-2}: (1, 1/4, 1/9).
        let s = Spectrum::power_law(2.0, 3).unwrap();
        assert_eq!(s.eigenvalues()[0], 1.0);
        assert_eq!(s.eigenvalues()[1], 0.25);
        assert!((s.eigenvalues()[2] - 1.0 / 9.0).abs() < 1e-16);
        // trace = 49/36, frozen from an independent compensated evaluation
        assert!((s.trace() - 1.361_111_111_111_111_2).abs() <= 1e-15);
    }

    #[test]
    fn power_law_large_trace_and_stepsize_ceiling() {
        // Frozen from an independent compensated evaluation of Σ i^{-2}, d=2000.
        let s = Spectrum::power_law(2.0, 2000).unwrap();
        assert!((s.trace() - 1.644_434_191_827_393_0).abs() < 1e-13);
        let ceiling = 1.0 / (3.0 * s.trace());
        assert!((ceiling - 0.202_703_966_501_033_12).abs() < 1e-14);
    }

    #[test]
    fn explicit_spectrum_validation_names_offender() {
        let err = Spectrum::explicit(vec![1.0, 0.5, 0.7]).unwrap_err();
        match err {
            ProblemError::NotSorted { index, .. } => assert_eq!(index, 2),
            other => panic!("unexpected error {other:?}"),
        }
        let err = Spectrum::explicit(vec![1.0, 0.0]).unwrap_err();
        match err {
            ProblemError::BadEigenvalue { index, .. } => assert_eq!(index, 1),
            other => panic!("unexpected error {other:?}"),
        }
        // Equal eigenvalues are allowed (non-increasing, not strictly decreasing).
        assert!(Spectrum::explicit(vec![1.0, 1.0, 0.5]).is_ok());
    }

    #[test]
    fn source_condition_displacement_squares() {
        // a=2, b=1: λ_i η_i² = i^{-1} so η_i² = i.
        let inst = make_instance(
            Spectrum::power_law(2.0, 4).unwrap(),
            DisplacementSpec::SourceCondition { b: 1.0 },
            1.0,
            MomentModel::GaussianDefault,
            NoiseModel::WellSpecified,
        )
        .unwrap();
        for (i, eta) in inst.displacement().iter().enumerate() {
            let want = ((i + 1) as f64).sqrt();
            assert!((eta - want).abs() < 1e-14, "coordinate {i}");
        }
    }

    #[test]
    fn source_condition_range_is_enforced() {
        // b >= a+1 is the excluded regime.
        let err = make_instance(
            Spectrum::power_law(2.0, 4).unwrap(),
            DisplacementSpec::SourceCondition { b: 3.0 },
            1.0,
            MomentModel::GaussianDefault,
            NoiseModel::WellSpecified,
        )
        .unwrap_err();
        assert!(matches!(err, ProblemError::SourceConditionRange { .. }));
        // explicit spectra cannot validate b < a+1
        let err = make_instance(
            Spectrum::explicit(vec![1.0, 0.5]).unwrap(),
            DisplacementSpec::SourceCondition { b: 1.0 },
            1.0,
            MomentModel::GaussianDefault,
            NoiseModel::WellSpecified,
        )
        .unwrap_err();
        assert!(matches!(err, ProblemError::SourceConditionNeedsPowerLaw));
    }

    #[test]
    fn gaussian_displacement_is_seed_stable() {
        let a = gaussian_displacement(42, 8);
        let b = gaussian_displacement(42, 8);
        let c = gaussian_displacement(43, 8);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn gaussian_default_constants() {
        let inst = make_instance(
            Spectrum::power_law(1.0, 2).unwrap(),
            DisplacementSpec::Explicit {
                values: vec![1.0, 1.0],
            },
            0.5,
            MomentModel::GaussianDefault,
            NoiseModel::WellSpecified,
        )
        .unwrap();
        assert_eq!(inst.psi(), 3.0);
        assert_eq!(inst.beta(), 1.0);
        // well-specified noise diagonal is σ²λ_i
        assert_eq!(inst.noise_diag(), vec![0.5, 0.25]);
    }

    #[test]
    fn custom_moment_constants_validated() {
        let bad = make_instance(
            Spectrum::power_law(1.0, 2).unwrap(),
            DisplacementSpec::Explicit {
                values: vec![0.0, 0.0],
            },
            0.0,
            MomentModel::Custom { psi: 2.0, beta: 3.0 },
            NoiseModel::WellSpecified,
        );
        assert!(matches!(
            bad.unwrap_err(),
            ProblemError::BadMomentConstants { .. }
        ));
    }
}
