use std::fmt;

use thiserror::Error;

/// Errors raised by the smeared-space library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("degenerate exponent: spatial dimension d = {d} is too small for this scaling law")]
    DegenerateDimension { d: u32 },

    #[error("unsupported spatial dimension d = {d}: {what} is only defined for d = 3")]
    UnsupportedDimension { d: u32, what: &'static str },

    #[error("cosmological constant must be positive (got {0}); flat and anti-de Sitter backgrounds are excluded")]
    NonPositiveLambda(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("kernel width {sigma} is below the resolution limit of 3 grid spacings ({limit})")]
    KernelUnresolved { sigma: f64, limit: f64 },

    #[error("kernel width {sigma} needs a domain of at least 12 widths ({required}); grid extent is {extent}")]
    KernelDomain {
        sigma: f64,
        required: f64,
        extent: f64,
    },

    #[error("impossible outcome {value}: density {density:e} is below the floor {floor:e}")]
    ImpossibleOutcome {
        value: f64,
        density: f64,
        floor: f64,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("step size too large: norm drift {drift:e} per step exceeds {limit:e}")]
    StepSize { drift: f64, limit: f64 },

    #[error("memory budget exceeded: {required} bytes requested, budget is {budget} bytes")]
    MemoryBudget { required: usize, budget: usize },

    #[error("regime error: {0}")]
    Regime(String),

    #[error("resolution pair violates the point uncertainty bound: {0}")]
    ResolutionConstraint(String),

    #[error("not normalized: squared norm or integral is {0}")]
    Unnormalized(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Non-fatal diagnostics attached to a computed value.
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// A density used for moments did not integrate to one.
    Unnormalized { integral: f64 },
    /// Fraction of spectral power in the outer band of the lattice.
    SpectralTail { fraction: f64 },
    /// An expansion was evaluated outside the window where it is accurate.
    OutsideValidity {
        parameter: &'static str,
        value: f64,
        limit: f64,
    },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::Unnormalized { integral } => {
                write!(f, "density integrates to {integral} instead of 1")
            }
            Warning::SpectralTail { fraction } => {
                write!(f, "spectral tail holds {fraction:e} of the norm")
            }
            Warning::OutsideValidity {
                parameter,
                value,
                limit,
            } => write!(f, "{parameter} = {value:e} is outside the validity limit {limit:e}"),
        }
    }
}

/// A value together with the warnings raised while computing it.
#[derive(Debug, Clone, PartialEq)]
pub struct Checked<T> {
    pub value: T,
    pub warnings: Vec<Warning>,
}

impl<T> Checked<T> {
    pub fn clean(value: T) -> Self {
        Self {
            value,
            warnings: Vec::new(),
        }
    }

    pub fn is_clean(&self) -> bool {
        self.warnings.is_empty()
    }

    pub fn map<U>(self, f: impl FnOnce(T) -> U) -> Checked<U> {
        Checked {
            value: f(self.value),
            warnings: self.warnings,
        }
    }
}
