//! Parratt recursion: reflectance, depth field profiles and fluorescence.
//!
//! Within layer `j` the field is `A+ e^{ik(z - top)} + A- e^{-ik(z - top)}`.
//! The recursion runs bottom-up over the ratio `A-/A+` at each layer top,
//! starting from an outgoing-only substrate.

use num_complex::Complex64;

use crate::dispersion::ResonantScattering;
use crate::stack::{fresnel, CavityStack, ScanPoint, StackWaves};
use crate::{Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Field ratios of every layer at one scan point.
#[derive(Debug, Clone)]
pub struct Recursion {
    pub waves: StackWaves,
    /// `A-/A+` at the bottom of each layer, just above the next interface.
    ratio_bottom: Vec<Complex64>,
    /// `A+` at the top of each layer for unit incidence.
    amp_top: Vec<Complex64>,
}

impl Recursion {
    pub fn new(waves: StackWaves) -> Result<Self> {
        let n = waves.len();
        let mut ratio_top = vec![Complex64::new(0.0, 0.0); n];
        let mut ratio_bottom = vec![Complex64::new(0.0, 0.0); n];
        let mut denom = vec![Complex64::new(1.0, 0.0); n];
        let mut trans = vec![Complex64::new(1.0, 0.0); n];
        for j in (0..n - 1).rev() {
            let (r, t) = fresnel(waves.kz[j], waves.kz[j + 1])?;
            let below = ratio_top[j + 1];
            denom[j] = 1.0 + r * below;
            trans[j] = t;
            ratio_bottom[j] = (r + below) / denom[j];
            ratio_top[j] = ratio_bottom[j] * (2.0 * I * waves.kz[j] * waves.thickness[j]).exp();
        }
        let mut amp_top = vec![Complex64::new(1.0, 0.0); n];
        for j in 1..n {
            let above = amp_top[j - 1] * (I * waves.kz[j - 1] * waves.thickness[j - 1]).exp();
            amp_top[j] = above * trans[j - 1] / denom[j - 1];
        }
        Ok(Self {
            waves,
            ratio_bottom,
            amp_top,
        })
    }

    /// Reflection coefficient `A-/A+` in vacuum at the surface.
    pub fn reflectance(&self) -> Complex64 {
        self.ratio_bottom[0]
    }

    /// Normalised field `a(z) = (A+ + A-)/A0` at depth `z`.
    pub fn field(&self, z: f64) -> Complex64 {
        let w = &self.waves;
        let j = w.layer_at(z);
        let k = w.kz[j];
        let u = z - w.top[j];
        if j == 0 {
            (I * k * u).exp() + self.ratio_bottom[0] * (-I * k * u).exp()
        } else if j == w.len() - 1 {
            self.amp_top[j] * (I * k * u).exp()
        } else {
            let d = w.thickness[j];
            self.amp_top[j] * ((I * k * u).exp() + self.ratio_bottom[j] * (I * k * (2.0 * d - u)).exp())
        }
    }
}

/// Complex reflection coefficient. `resonance` adds its `Δf` to the
/// resonant layer; `None` is the bare cavity.
pub fn parratt_reflectance(
    stack: &CavityStack,
    point: &ScanPoint,
    resonance: Option<&dyn ResonantScattering>,
) -> Result<Complex64> {
    Ok(Recursion::new(stack.waves(point, resonance)?)?.reflectance())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldProfile {
    pub depths: Vec<f64>,
    pub a_values: Vec<Complex64>,
    pub intensity: Vec<f64>,
}

pub fn field_profile(
    stack: &CavityStack,
    point: &ScanPoint,
    resonance: Option<&dyn ResonantScattering>,
    depths: &[f64],
) -> Result<FieldProfile> {
    if let Some(z) = depths.iter().find(|z| !z.is_finite()) {
        return Err(Error::Geometry {
            depth: *z,
            what: "the stack".into(),
        });
    }
    let rec = Recursion::new(stack.waves(point, resonance)?)?;
    let a_values: Vec<Complex64> = depths.iter().map(|&z| rec.field(z)).collect();
    Ok(FieldProfile {
        depths: depths.to_vec(),
        intensity: a_values.iter().map(|a| a.norm_sqr()).collect(),
        a_values,
    })
}

/// Depth samples from the surface to `margin` nm into the substrate.
pub fn default_depths(stack: &CavityStack, step: f64, margin: f64) -> Vec<f64> {
    let end = stack.total_thickness() + margin;
    let n = (end / step).round() as usize;
    (0..=n).map(|i| i as f64 * step).collect()
}

/// Absorption coefficient (arbitrary units) from a resonance: `-Im Δf`.
pub fn absorption_from_resonance(resonance: &dyn ResonantScattering, energy: f64) -> Result<f64> {
    Ok(-resonance.delta_f(energy)?.im)
}

/// Scaling knobs of the fluorescence yield.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluorescenceOptions {
    /// Overall constant `c`.
    pub scale: f64,
    /// Emission-side intensity factor `I_f`.
    pub emission_factor: f64,
    /// Slices used to average the field over the resonant layer.
    pub slices: usize,
}

impl Default for FluorescenceOptions {
    fn default() -> Self {
        Self {
            scale: 1.0,
            emission_factor: 1.0,
            slices: 20,
        }
    }
}

fn resonant_span(stack: &CavityStack) -> Result<(f64, f64)> {
    stack
        .resonant_span()
        .ok_or_else(|| Error::Input("stack has no resonant layer".into()))
}

/// `F = c·μ·I(z_a)·I_f` with the field intensity at the single depth `z_a`.
pub fn fluorescence(
    stack: &CavityStack,
    point: &ScanPoint,
    resonance: Option<&dyn ResonantScattering>,
    mu: f64,
    z_a: f64,
    opts: &FluorescenceOptions,
) -> Result<f64> {
    let (top, bottom) = resonant_span(stack)?;
    if !(z_a >= top && z_a <= bottom) {
        return Err(Error::Geometry {
            depth: z_a,
            what: format!("the resonant layer [{top}, {bottom}] nm"),
        });
    }
    let rec = Recursion::new(stack.waves(point, resonance)?)?;
    Ok(opts.scale * mu * rec.field(z_a).norm_sqr() * opts.emission_factor)
}

/// As [`fluorescence`], with `I` averaged over slice centres of the
/// resonant layer.
pub fn fluorescence_layer_average(
    stack: &CavityStack,
    point: &ScanPoint,
    resonance: Option<&dyn ResonantScattering>,
    mu: f64,
    opts: &FluorescenceOptions,
) -> Result<f64> {
    let (top, bottom) = resonant_span(stack)?;
    let n = opts.slices.max(1);
    let rec = Recursion::new(stack.waves(point, resonance)?)?;
    let h = (bottom - top) / n as f64;
    let mean = (0..n)
        .map(|i| rec.field(top + (i as f64 + 0.5) * h).norm_sqr())
        .sum::<f64>()
        / n as f64;
    Ok(opts.scale * mu * mean * opts.emission_factor)
}
