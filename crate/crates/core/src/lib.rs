//! X-ray thin-film planar cavity simulation.
//!
//! Three solvers share one stack description:
//!
//! - [`parratt`]: exact recursive reflectance, depth field profiles and
//!   reciprocity fluorescence.
//! - [`matrix_model`]: 2x2 transfer matrices, the bare-cavity factors
//!   `p`, `q`, `a`, and the two-pathway reflectance `r0 + r_a` with the
//!   cavity-enhanced width and cavity-induced shift.
//! - [`greens_model`]: sublayer coupling matrix built from the layered
//!   Green's kernel, steady-state linear response and input-output
//!   reflectance.
//!
//! Units at the API surface are eV, nm and degrees.
//!
//! Two conventions apply throughout. Fields vary as `exp(-iωt)` and
//! propagate down as `exp(+i k_z z)`, so the decaying branch of `k_z`
//! has a non-negative imaginary part. Scattering lengths are stored so
//! that absorption has `Im f <= 0`; the refractive index is then
//! `n = 1 - (2π ρ r0 / k²) f` with `β >= 0`. Tabulated `(f1, f2)` files
//! are converted to this convention when loaded, see [`dispersion`].

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dispersion;
pub mod error;
pub mod greens_model;
pub mod io;
pub mod lsq;
pub mod matrix_model;
pub mod parallel;
pub mod parratt;
pub mod scan_fit;
pub mod stack;

pub use error::{Error, Result};
pub use num_complex::Complex64;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// ħc in eV·nm.
pub const HBAR_C: f64 = 197.326_980_4;

/// Classical electron radius in nm.
pub const R0: f64 = 2.817_940_326_2e-6;

/// Avogadro's number scaled so that `g/cm³ / (g/mol) * AVOGADRO_NM3` is in nm⁻³.
pub const AVOGADRO_NM3: f64 = 602.214_076;

/// Vacuum wave number in nm⁻¹ for a photon energy in eV.
pub fn wave_number(energy_ev: f64) -> f64 {
    energy_ev / HBAR_C
}
