//! Energy-dependent scattering lengths and refractive indices.
//!
//! Internally a scattering length is `f = f1 - i·f2` with `f2 >= 0`, so an
//! absorbing resonance has `Im f <= 0` exactly like the Lorentzian
//! `f0 / (ε + i)`. With `n = 1 - (2π ρ r0 / k²) f` this gives `β >= 0`.
//! Tabulated `(f1, f2)` data crosses into this convention only in
//! [`ScatteringFactorTable::from_f1_f2`].

mod kk;
mod xas;

use num_complex::Complex64;

use crate::stack::{scattering_prefactor, RefractiveIndex};
use crate::{wave_number, Error, Result};

pub use kk::{kramers_kronig, KkResult};
pub use xas::{
    absorption_to_im_f, calibrate_absorption_scale, fit_xas_lineshape, xas_model, ArctanStep, XasDecomposition,
};

/// Anything that supplies a resonant correction `Δf(ω)`.
pub trait ResonantScattering: Send + Sync {
    fn delta_f(&self, energy: f64) -> Result<Complex64>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringFactorTable {
    pub name: String,
    energies: Vec<f64>,
    f: Vec<Complex64>,
    /// Scatterer (atom or formula-unit) number density in nm⁻³.
    pub atom_density: f64,
}

impl ScatteringFactorTable {
    pub fn new(name: &str, energies: Vec<f64>, f: Vec<Complex64>, atom_density: f64) -> Result<Self> {
        if energies.len() != f.len() {
            return Err(Error::Input("energy and f columns differ in length".into()));
        }
        if energies.len() < 3 {
            return Err(Error::Input(format!("table {name}: need at least 3 points")));
        }
        check_strictly_increasing(&energies)?;
        if !(atom_density >= 0.0) {
            return Err(Error::Input(format!("table {name}: density must be >= 0")));
        }
        Ok(Self {
            name: name.to_string(),
            energies,
            f,
            atom_density,
        })
    }

    /// From the usual `(f1, f2 >= 0)` columns.
    pub fn from_f1_f2(name: &str, energies: Vec<f64>, f1: &[f64], f2: &[f64], atom_density: f64) -> Result<Self> {
        if f1.len() != f2.len() {
            return Err(Error::Input("f1 and f2 columns differ in length".into()));
        }
        let f = f1.iter().zip(f2).map(|(&a, &b)| Complex64::new(a, -b)).collect();
        Self::new(name, energies, f, atom_density)
    }

    /// Stoichiometric sum `Σ count·f` on the grid of the first component,
    /// clipped to the range every component covers.
    pub fn compound(name: &str, components: &[(&ScatteringFactorTable, f64)], density: f64) -> Result<Self> {
        let (first, _) = components
            .first()
            .ok_or_else(|| Error::Input("compound needs at least one component".into()))?;
        let lo = components
            .iter()
            .map(|(t, _)| t.energies[0])
            .fold(f64::NEG_INFINITY, f64::max);
        let hi = components
            .iter()
            .map(|(t, _)| *t.energies.last().unwrap())
            .fold(f64::INFINITY, f64::min);
        let mut energies = Vec::new();
        let mut f = Vec::new();
        for &e in first.energies.iter().filter(|&&e| e >= lo && e <= hi) {
            let mut sum = Complex64::new(0.0, 0.0);
            for (t, count) in components {
                sum += t.f_at(e)? * *count;
            }
            energies.push(e);
            f.push(sum);
        }
        Self::new(name, energies, f, density)
    }

    pub fn with_density(mut self, density: f64) -> Self {
        self.atom_density = density;
        self
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn f_values(&self) -> &[Complex64] {
        &self.f
    }

    pub fn range(&self) -> (f64, f64) {
        (self.energies[0], *self.energies.last().unwrap())
    }

    /// Linearly interpolated scattering length.
    pub fn f_at(&self, energy: f64) -> Result<Complex64> {
        interpolate(&self.energies, &self.f, energy)
    }

    pub fn index_at(&self, energy: f64) -> Result<RefractiveIndex> {
        index_from_f(self, energy)
    }
}

fn check_strictly_increasing(x: &[f64]) -> Result<()> {
    for w in x.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::Input(format!(
                "abscissae must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

fn interpolate(x: &[f64], y: &[Complex64], at: f64) -> Result<Complex64> {
    let (min, max) = (x[0], x[x.len() - 1]);
    if !(at >= min && at <= max) {
        return Err(Error::DispersionRange { energy: at, min, max });
    }
    let i = x.partition_point(|&e| e <= at).clamp(1, x.len() - 1);
    let t = (at - x[i - 1]) / (x[i] - x[i - 1]);
    Ok(y[i - 1] * (1.0 - t) + y[i] * t)
}

/// `n = 1 - (2π ρ r0 / k²)·f` at `energy`.
pub fn index_from_f(table: &ScatteringFactorTable, energy: f64) -> Result<RefractiveIndex> {
    let f = table.f_at(energy)?;
    Ok(index_from_scattering_length(f, table.atom_density, energy))
}

pub fn index_from_scattering_length(f: Complex64, density: f64, energy: f64) -> RefractiveIndex {
    RefractiveIndex::from_deviation(-scattering_prefactor(density, wave_number(energy)) * f)
}

/// Lorentzian white line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonanceLine {
    /// Transition energy in eV.
    pub omega0: f64,
    /// Natural full width in eV.
    pub gamma: f64,
    pub f0: f64,
    /// `|d|²` in units of Γ, used by the Green's model.
    pub dipole_sq: f64,
}

impl ResonanceLine {
    pub fn new(omega0: f64, gamma: f64, f0: f64, dipole_sq: f64) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(Error::Input("resonance width must be > 0".into()));
        }
        if !(f0 >= 0.0) || !(dipole_sq >= 0.0) {
            return Err(Error::Input("f0 and dipole_sq must be >= 0".into()));
        }
        if !(omega0 > 0.0) {
            return Err(Error::Input("transition energy must be > 0".into()));
        }
        Ok(Self {
            omega0,
            gamma,
            f0,
            dipole_sq,
        })
    }

    pub fn with_f0(self, f0: f64) -> Self {
        Self { f0, ..self }
    }

    pub fn with_dipole_sq(self, dipole_sq: f64) -> Self {
        Self { dipole_sq, ..self }
    }

    /// Reduced detuning `ε = 2(ω - ω0)/Γ`.
    pub fn epsilon(&self, energy: f64) -> f64 {
        2.0 * (energy - self.omega0) / self.gamma
    }
}

/// `Δf = f0 / (ε + i)`.
pub fn lorentzian_delta_f(line: &ResonanceLine, energy: f64) -> Complex64 {
    line.f0 / Complex64::new(line.epsilon(energy), 1.0)
}

impl ResonantScattering for ResonanceLine {
    fn delta_f(&self, energy: f64) -> Result<Complex64> {
        Ok(lorentzian_delta_f(self, energy))
    }
}

/// Sampled `Δf(ω)`, e.g. from measured absorption plus Kramers-Kronig.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaFTable {
    energies: Vec<f64>,
    delta_f: Vec<Complex64>,
}

impl DeltaFTable {
    pub fn new(energies: Vec<f64>, delta_f: Vec<Complex64>) -> Result<Self> {
        if energies.len() != delta_f.len() || energies.len() < 2 {
            return Err(Error::Input("Δf table needs matching columns of >= 2 points".into()));
        }
        check_strictly_increasing(&energies)?;
        Ok(Self { energies, delta_f })
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn values(&self) -> &[Complex64] {
        &self.delta_f
    }
}

impl ResonantScattering for DeltaFTable {
    fn delta_f(&self, energy: f64) -> Result<Complex64> {
        interpolate(&self.energies, &self.delta_f, energy)
    }
}
