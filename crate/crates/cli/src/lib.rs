//! Driver behind the `simulate` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod run;

use serde_json::{json, Value};
use xcavity::Error;

pub use config::{Overrides, RunConfig, DEFAULT_CONFIG};
pub use run::{run, RunReport};

/// Exit status for configuration and input-file problems.
pub const EXIT_INPUT: u8 = 3;
/// Exit status for failures of the numerics or of the data itself.
pub const EXIT_COMPUTE: u8 = 4;

pub fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::InvalidLayer { .. } => "invalid_layer",
        Error::InvalidStack(_) => "invalid_stack",
        Error::InvalidScanPoint { .. } => "invalid_scan_point",
        Error::DispersionRange { .. } => "dispersion_range",
        Error::DegenerateInterface => "degenerate_interface",
        Error::SingularCavity { .. } => "singular_cavity",
        Error::ResonancePole { .. } => "resonance_pole",
        Error::Geometry { .. } => "geometry",
        Error::Input(_) => "input",
        Error::DataQuality(_) => "data_quality",
        Error::FitFailure { .. } => "fit_failure",
        Error::FitAmbiguity { .. } => "fit_ambiguity",
        Error::NoDip { .. } => "no_dip",
        Error::Parse { .. } => "parse",
        Error::Io { .. } => "io",
    }
}

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidLayer { .. }
        | Error::InvalidStack(_)
        | Error::Input(_)
        | Error::Parse { .. }
        | Error::Io { .. } => EXIT_INPUT,
        _ => EXIT_COMPUTE,
    }
}

/// One-line JSON diagnostic for stderr.
pub fn diagnostic(e: &Error) -> Value {
    let mut d = json!({
        "kind": error_kind(e),
        "message": e.to_string(),
    });
    match e {
        Error::Parse { path, line, .. } => {
            d["path"] = json!(path);
            d["line"] = json!(line);
        }
        Error::Io { path, .. } => d["path"] = json!(path),
        _ => {}
    }
    json!({ "error": d })
}
