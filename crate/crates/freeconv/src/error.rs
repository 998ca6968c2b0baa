//! Error types shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while building measures, evaluating
/// transforms, or running the subordination machinery.
///
/// Variants carry the offending values so callers can report precisely which
/// invariant was violated without re-deriving context.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Support interval is empty or reversed.
    #[error("degenerate support interval [{lower}, {upper}] (need lower < upper)")]
    DegenerateSupport { lower: f64, upper: f64 },

    /// An edge exponent lies outside the open interval (-1, 1).
    #[error("edge exponent {name} = {value} outside (-1, 1)")]
    ExponentOutOfRange { name: String, value: f64 },

    /// The smooth factor dips to zero or below somewhere on the support.
    #[error("smooth factor attains {min:.3e} on the support; it must stay strictly positive")]
    NonPositiveSmoothFactor { min: f64 },

    /// A transform was requested at a real point inside the support.
    #[error("evaluation point {x} lies on the support [{lower}, {upper}]")]
    EvaluationOnSupport { x: f64, lower: f64, upper: f64 },

    /// Evaluation point closer to the support than the certified floor.
    #[error("distance {dist:.3e} to the support is below the accuracy floor {floor:.3e}")]
    TooCloseToSupport { dist: f64, floor: f64 },

    /// Iteration budget exhausted before the residual dropped below tolerance.
    #[error("no convergence after {iterations} iterations (residual {residual:.3e}, tol {tol:.3e})")]
    NoConvergence {
        iterations: u64,
        residual: f64,
        tol: f64,
    },

    /// Real-axis iterates crossed into a support interval, which certifies
    /// that the spectral parameter sits inside supp(mu_a boxplus mu_b).
    #[error("real-axis iteration at E = {e} entered a support interval (E lies inside the support)")]
    LeftRealAxis { e: f64 },

    /// A root or inverse could not be bracketed.
    #[error("bracketing failed: {what}")]
    BracketFailure { what: String },

    /// The second derivative of the local inverse map came out >= 0, so the
    /// candidate edge is not a genuine square-root edge.
    #[error("second derivative {value:.3e} >= 0 at candidate edge (not converged)")]
    NonNegativeSecondDerivative { value: f64 },

    /// CDF inversion failed to bracket the requested quantile.
    #[error("quantile inversion failed at q = {q}")]
    QuantileFailure { q: f64 },

    /// A CDF was requested outside the closed support.
    #[error("point {x} outside the support [{lower}, {upper}]")]
    OutOfSupport { x: f64, lower: f64, upper: f64 },

    /// A measure specification (JSON or shorthand) failed to parse or
    /// validate.
    #[error("measure spec: {0}")]
    Spec(String),

    /// Invalid argument to a batch or sampling routine.
    #[error("invalid argument: {0}")]
    Invalid(String),

    /// A grid solve failed at a particular index.
    #[error("grid point {index}: {source}")]
    AtGridIndex {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wrap an error with the grid index it occurred at.
    pub fn at_index(self, index: usize) -> Error {
        Error::AtGridIndex {
            index,
            source: Box::new(self),
        }
    }
}
