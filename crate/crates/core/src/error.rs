use thiserror::Error;

/// Which side of the lattice a guard refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Position,
    Momentum,
}

impl std::fmt::Display for Domain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Domain::Position => f.write_str("position"),
            Domain::Momentum => f.write_str("momentum"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("boundary leakage in {domain} space: edge probability {probability:.3e} exceeds {limit:.1e}")]
    Leakage {
        domain: Domain,
        probability: f64,
        limit: f64,
    },

    #[error("packet support [{lo}, {hi}] lies outside the grid [{grid_lo}, {grid_hi}]")]
    SupportOutsideGrid {
        lo: f64,
        hi: f64,
        grid_lo: f64,
        grid_hi: f64,
    },

    #[error("mass rebase aliases in {domain} space: {probability:.3e} of the state falls outside the target lattice")]
    Aliasing { domain: Domain, probability: f64 },

    #[error("shift {shift} is not an integer multiple of dx = {dx}")]
    NotGridAligned { shift: f64, dx: f64 },

    #[error("Wigner map has axis {found:?}, expected {expected:?}")]
    WrongAxis {
        expected: crate::phasespace::AxisKind,
        found: crate::phasespace::AxisKind,
    },

    #[error("Liouville characteristic leaves the lattice: integral changed by {lost:.3e}")]
    LeftSupport { lost: f64 },

    #[error("phase ramp wavelength {wavelength:.3e} is shorter than 4 dx = {limit:.3e}")]
    Undersampled { wavelength: f64, limit: f64 },

    #[error("dense reduced matrix for n = {n} exceeds the limit of {limit} points")]
    MemoryGuard { n: usize, limit: usize },

    #[error("internal spectrum violates ω_max/m₀ < {limit}: ratio is {ratio:.3e}")]
    RegimeGuard { ratio: f64, limit: f64 },

    #[error("composite state is not factorized (branch deviation {deviation:.3e})")]
    NotFactorized { deviation: f64 },

    #[error("regime margin {margin:.3e} exceeds the allowed {limit}")]
    RegimeViolation { margin: f64, limit: f64 },

    #[error("path times must be strictly increasing (violated at index {index})")]
    NonMonotoneTimes { index: usize },

    #[error("weak-field guard: GM/R = {ratio:.3e} must be below {limit:.1e}")]
    WeakField { ratio: f64, limit: f64 },

    #[error("state is not normalized: norm² = {norm_sqr}")]
    NotNormalized { norm_sqr: f64 },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Short machine-readable name of the guard that tripped.
    pub fn guard_name(&self) -> &'static str {
        match self {
            Error::InvalidGrid(_) => "invalid-grid",
            Error::LengthMismatch { .. } => "length-mismatch",
            Error::InvalidParameter { .. } => "invalid-parameter",
            Error::Leakage { .. } => "boundary-leakage",
            Error::SupportOutsideGrid { .. } => "support-outside-grid",
            Error::Aliasing { .. } => "aliasing",
            Error::NotGridAligned { .. } => "grid-alignment",
            Error::WrongAxis { .. } => "wrong-axis",
            Error::LeftSupport { .. } => "left-support",
            Error::Undersampled { .. } => "undersampled",
            Error::MemoryGuard { .. } => "memory-guard",
            Error::RegimeGuard { .. } => "spectrum-regime",
            Error::NotFactorized { .. } => "not-factorized",
            Error::RegimeViolation { .. } => "regime-violation",
            Error::NonMonotoneTimes { .. } => "non-monotone-times",
            Error::WeakField { .. } => "weak-field",
            Error::NotNormalized { .. } => "not-normalized",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
