use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid layer {index} ({label}): {reason}")]
    InvalidLayer {
        index: usize,
        label: String,
        reason: String,
    },

    #[error("invalid stack: {0}")]
    InvalidStack(String),

    #[error("invalid scan point (energy {energy} eV, angle {angle} deg): {reason}")]
    InvalidScanPoint { energy: f64, angle: f64, reason: String },

    #[error("energy {energy} eV outside tabulated range [{min}, {max}] eV")]
    DispersionRange { energy: f64, min: f64, max: f64 },

    #[error("degenerate interface: k_i + k_j = 0")]
    DegenerateInterface,

    #[error("singular cavity at {energy} eV, {angle} deg: |M22| below threshold")]
    SingularCavity { energy: f64, angle: f64 },

    #[error("resonance pole at {energy} eV, {angle} deg: condition number {condition:.3e}")]
    ResonancePole { energy: f64, angle: f64, condition: f64 },

    #[error("depth {depth} nm outside {what}")]
    Geometry { depth: f64, what: String },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("data quality: {0}")]
    DataQuality(String),

    #[error("fit did not converge after {iterations} iterations (best parameters {best:?}, residual {residual:.3e})")]
    FitFailure {
        iterations: usize,
        best: Vec<f64>,
        residual: f64,
    },

    #[error("ambiguous fit: multistart candidates disagree {candidates:?}")]
    FitAmbiguity { candidates: Vec<(f64, f64)> },

    #[error("no reflectance dip between {min} and {max} deg")]
    NoDip { min: f64, max: f64 },

    #[error("{path}:{line}: {reason}")]
    Parse { path: String, line: usize, reason: String },

    #[error("{path}: {reason}")]
    Io { path: String, reason: String },
}
