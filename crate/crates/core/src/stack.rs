//! Multilayer geometry, per-layer wave vectors and Fresnel coefficients.
//!
//! Depth `z` is measured in nm from the vacuum/top-mirror interface and
//! increases downward. Layer 0 is the vacuum above the cavity and the last
//! layer is the semi-infinite substrate; neither carries a propagation phase.

use std::sync::Arc;

use num_complex::Complex64;

use crate::dispersion::{ResonantScattering, ScatteringFactorTable};
use crate::{wave_number, Error, Result, R0};

/// Complex refractive index `n = 1 - δ + iβ`, stored as the deviation `n - 1`
/// so that `δ ~ 1e-6` keeps full precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefractiveIndex {
    deviation: Complex64,
}

impl RefractiveIndex {
    pub const VACUUM: RefractiveIndex = RefractiveIndex {
        deviation: Complex64 { re: 0.0, im: 0.0 },
    };

    pub fn from_delta_beta(delta: f64, beta: f64) -> Self {
        Self {
            deviation: Complex64::new(-delta, beta),
        }
    }

    /// Build from `n - 1` directly.
    pub fn from_deviation(deviation: Complex64) -> Self {
        Self { deviation }
    }

    pub fn delta(&self) -> f64 {
        -self.deviation.re
    }

    pub fn beta(&self) -> f64 {
        self.deviation.im
    }

    pub fn n(&self) -> Complex64 {
        Complex64::new(1.0, 0.0) + self.deviation
    }

    pub fn deviation(&self) -> Complex64 {
        self.deviation
    }

    pub fn is_vacuum(&self) -> bool {
        self.deviation == Complex64::new(0.0, 0.0)
    }

    /// Index after adding `density` scatterers (nm⁻³) of scattering length `f`.
    pub fn with_scatterers(self, density: f64, k: f64, f: Complex64) -> Self {
        Self {
            deviation: self.deviation - scattering_prefactor(density, k) * f,
        }
    }
}

/// `2π ρ r0 / k²`, the factor turning a scattering length into `1 - n`.
pub fn scattering_prefactor(density: f64, k: f64) -> f64 {
    2.0 * std::f64::consts::PI * density * R0 / (k * k)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Thickness {
    Finite(f64),
    SemiInfinite,
}

impl Thickness {
    pub fn finite(&self) -> Option<f64> {
        match self {
            Thickness::Finite(d) => Some(*d),
            Thickness::SemiInfinite => None,
        }
    }
}

#[derive(Debug, Clone)]
pub enum IndexSource {
    Constant(RefractiveIndex),
    Table(Arc<ScatteringFactorTable>),
}

impl IndexSource {
    pub fn index_at(&self, energy: f64) -> Result<RefractiveIndex> {
        match self {
            IndexSource::Constant(n) => Ok(*n),
            IndexSource::Table(t) => t.index_at(energy),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Layer {
    pub label: String,
    pub thickness: Thickness,
    pub index: IndexSource,
    /// Number density (nm⁻³) of resonant atoms when this is the atomic layer.
    pub resonant_density: Option<f64>,
}

impl Layer {
    pub fn vacuum(label: &str) -> Self {
        Self {
            label: label.to_string(),
            thickness: Thickness::SemiInfinite,
            index: IndexSource::Constant(RefractiveIndex::VACUUM),
            resonant_density: None,
        }
    }

    pub fn constant(label: &str, thickness: Thickness, delta: f64, beta: f64) -> Self {
        Self {
            label: label.to_string(),
            thickness,
            index: IndexSource::Constant(RefractiveIndex::from_delta_beta(delta, beta)),
            resonant_density: None,
        }
    }

    pub fn tabulated(label: &str, thickness: Thickness, table: Arc<ScatteringFactorTable>) -> Self {
        Self {
            label: label.to_string(),
            thickness,
            index: IndexSource::Table(table),
            resonant_density: None,
        }
    }

    /// Mark as the atomic layer with the given resonant-atom density.
    pub fn resonant(mut self, density: f64) -> Self {
        self.resonant_density = Some(density);
        self
    }

    pub fn is_resonant(&self) -> bool {
        self.resonant_density.is_some()
    }

    pub fn index_at(&self, energy: f64) -> Result<RefractiveIndex> {
        self.index.index_at(energy)
    }
}

/// Photon energy and grazing angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPoint {
    pub energy: f64,
    pub angle: f64,
}

impl ScanPoint {
    pub fn new(energy: f64, angle: f64) -> Result<Self> {
        let bad = |reason: &str| Error::InvalidScanPoint {
            energy,
            angle,
            reason: reason.to_string(),
        };
        if !(energy > 0.0) || !energy.is_finite() {
            return Err(bad("energy must be positive"));
        }
        if !(angle > 0.0 && angle < 90.0) {
            return Err(bad("angle must lie in (0, 90) deg"));
        }
        Ok(Self { energy, angle })
    }

    pub fn k(&self) -> f64 {
        wave_number(self.energy)
    }

    pub fn theta(&self) -> f64 {
        self.angle.to_radians()
    }

    /// Vacuum `k_z = k sinθ`.
    pub fn kz_vacuum(&self) -> f64 {
        self.k() * self.theta().sin()
    }
}

/// `k·sqrt(n² - cos²θ)` on the decaying branch (`Im >= 0`).
///
/// Written as `k·sqrt(χ(χ+2) + sin²θ)` with `χ = n - 1` to avoid the
/// cancellation in `n² - cos²θ` at grazing angles.
pub fn kz_from_index(index: RefractiveIndex, point: &ScanPoint) -> Complex64 {
    let chi = index.deviation();
    let s = point.theta().sin();
    let arg = chi * (chi + 2.0) + s * s;
    let mut root = arg.sqrt();
    if root.im < 0.0 {
        root = -root;
    }
    root * point.k()
}

pub fn layer_kz(layer: &Layer, point: &ScanPoint) -> Result<Complex64> {
    Ok(kz_from_index(layer.index_at(point.energy)?, point))
}

/// Fresnel `(r_ij, t_ij)` for the interface from medium i into medium j.
pub fn fresnel(k_i: Complex64, k_j: Complex64) -> Result<(Complex64, Complex64)> {
    let sum = k_i + k_j;
    if sum.norm() == 0.0 || !sum.is_finite() {
        return Err(Error::DegenerateInterface);
    }
    Ok(((k_i - k_j) / sum, 2.0 * k_i / sum))
}

#[derive(Debug, Clone)]
pub struct CavityStack {
    layers: Vec<Layer>,
}

impl CavityStack {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.len() < 2 {
            return Err(Error::InvalidStack(
                "need at least a vacuum layer and a substrate".into(),
            ));
        }
        let n = layers.len();
        let fail = |i: usize, reason: &str| Error::InvalidLayer {
            index: i,
            label: layers[i].label.clone(),
            reason: reason.to_string(),
        };
        match &layers[0].index {
            IndexSource::Constant(idx) if idx.is_vacuum() => {}
            _ => return Err(fail(0, "topmost layer must be vacuum (n = 1)")),
        }
        if layers[0].thickness != Thickness::SemiInfinite {
            return Err(fail(0, "topmost vacuum must be semi-infinite"));
        }
        if layers[n - 1].thickness != Thickness::SemiInfinite {
            return Err(fail(n - 1, "substrate must be semi-infinite"));
        }
        let mut resonant = 0;
        for (i, layer) in layers.iter().enumerate() {
            if (1..n - 1).contains(&i) {
                match layer.thickness {
                    Thickness::Finite(d) if d > 0.0 && d.is_finite() => {}
                    Thickness::Finite(_) => return Err(fail(i, "thickness must be > 0")),
                    Thickness::SemiInfinite => {
                        return Err(fail(i, "only the vacuum and substrate may be semi-infinite"))
                    }
                }
            }
            if let IndexSource::Constant(idx) = &layer.index {
                if idx.delta() < 0.0 || idx.beta() < 0.0 {
                    return Err(fail(i, "delta and beta must be non-negative"));
                }
            }
            if let Some(rho) = layer.resonant_density {
                resonant += 1;
                if i == 0 || i == n - 1 {
                    return Err(fail(i, "resonant layer must have finite thickness"));
                }
                if !(rho > 0.0) {
                    return Err(fail(i, "resonant density must be positive"));
                }
            }
        }
        if resonant > 1 {
            return Err(Error::InvalidStack("at most one layer may be resonant".into()));
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn resonant_layer(&self) -> Option<usize> {
        self.layers.iter().position(|l| l.is_resonant())
    }

    /// Depth of the top of each layer; the vacuum reports 0.
    pub fn layer_tops(&self) -> Vec<f64> {
        let mut tops = Vec::with_capacity(self.layers.len());
        let mut z = 0.0;
        for layer in &self.layers {
            tops.push(z);
            if let Thickness::Finite(d) = layer.thickness {
                z += d;
            }
        }
        tops
    }

    /// Total thickness of the finite layers.
    pub fn total_thickness(&self) -> f64 {
        self.layers.iter().filter_map(|l| l.thickness.finite()).sum()
    }

    /// `(top, bottom)` depths of the resonant layer.
    pub fn resonant_span(&self) -> Option<(f64, f64)> {
        let i = self.resonant_layer()?;
        let top = self.layer_tops()[i];
        Some((top, top + self.layers[i].thickness.finite()?))
    }

    /// Geometric centre of the resonant layer.
    pub fn resonant_center(&self) -> Option<f64> {
        self.resonant_span().map(|(a, b)| 0.5 * (a + b))
    }

    pub fn resonant_thickness(&self) -> Option<f64> {
        self.resonant_span().map(|(a, b)| b - a)
    }

    /// Background indices of every layer at `energy`.
    pub fn indices(&self, energy: f64) -> Result<Vec<RefractiveIndex>> {
        self.layers.iter().map(|l| l.index_at(energy)).collect()
    }

    /// Wave vectors at `point`; `resonance` adds its scattering length to the
    /// resonant layer, `None` gives the bare cavity.
    pub fn waves(&self, point: &ScanPoint, resonance: Option<&dyn ResonantScattering>) -> Result<StackWaves> {
        let mut indices = self.indices(point.energy)?;
        if let (Some(res), Some(i)) = (resonance, self.resonant_layer()) {
            let rho = self.layers[i].resonant_density.unwrap_or(0.0);
            let df = res.delta_f(point.energy)?;
            indices[i] = indices[i].with_scatterers(rho, point.k(), df);
        }
        Ok(StackWaves::from_indices(self, &indices, point))
    }

    /// Copy of the stack with layer `index` cut into `parts` equal slices.
    pub fn subdivided(&self, index: usize, parts: usize) -> Result<Self> {
        let layer = self
            .layers
            .get(index)
            .ok_or_else(|| Error::Input(format!("no layer {index}")))?;
        let d = layer
            .thickness
            .finite()
            .ok_or_else(|| Error::Input("cannot subdivide a semi-infinite layer".into()))?;
        if parts == 0 {
            return Err(Error::Input("parts must be >= 1".into()));
        }
        if layer.is_resonant() {
            return Err(Error::Input("cannot subdivide the resonant layer".into()));
        }
        let mut layers = self.layers[..index].to_vec();
        for _ in 0..parts {
            let mut slice = layer.clone();
            slice.thickness = Thickness::Finite(d / parts as f64);
            layers.push(slice);
        }
        layers.extend_from_slice(&self.layers[index + 1..]);
        Self::new(layers)
    }
}

/// Per-layer `k_z`, thickness and top depth at one scan point.
#[derive(Debug, Clone)]
pub struct StackWaves {
    pub point: ScanPoint,
    pub kz: Vec<Complex64>,
    /// Finite thicknesses; 0 for the two semi-infinite media.
    pub thickness: Vec<f64>,
    pub top: Vec<f64>,
}

impl StackWaves {
    pub fn from_indices(stack: &CavityStack, indices: &[RefractiveIndex], point: &ScanPoint) -> Self {
        Self {
            point: *point,
            kz: indices.iter().map(|&n| kz_from_index(n, point)).collect(),
            thickness: stack
                .layers()
                .iter()
                .map(|l| l.thickness.finite().unwrap_or(0.0))
                .collect(),
            top: stack.layer_tops(),
        }
    }

    pub fn len(&self) -> usize {
        self.kz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kz.is_empty()
    }

    /// Layer containing depth `z`; interfaces belong to the layer below.
    pub fn layer_at(&self, z: f64) -> usize {
        if z < 0.0 {
            return 0;
        }
        let last = self.len() - 1;
        (1..last).find(|&i| z < self.top[i] + self.thickness[i]).unwrap_or(last)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn vacuum_kz_is_k_sin_theta() {
        let p = ScanPoint::new(10208.0, 0.3).unwrap();
        let kz = kz_from_index(RefractiveIndex::VACUUM, &p);
        assert_eq!(kz.im, 0.0);
        assert_relative_eq!(kz.re, p.k() * 0.3f64.to_radians().sin(), max_relative = 1e-15);
    }

    #[test]
    fn absorbing_layer_decays() {
        let p = ScanPoint::new(8000.0, 0.5).unwrap();
        let kz = kz_from_index(RefractiveIndex::from_delta_beta(1e-5, 1e-6), &p);
        assert!(kz.im > 0.0);
    }

    #[test]
    fn kz_continuous_across_critical_angle() {
        let n = RefractiveIndex::from_delta_beta(3e-5, 2e-6);
        let tc = (2.0 * 3e-5f64).sqrt().to_degrees();
        let mut prev: Option<Complex64> = None;
        for i in 0..2000 {
            let th = tc * (0.5 + i as f64 * 1e-3);
            let kz = kz_from_index(n, &ScanPoint::new(9000.0, th).unwrap());
            assert!(kz.im >= 0.0);
            if let Some(p) = prev {
                assert!((kz - p).norm() < 0.05 * p.norm().max(kz.norm()));
            }
            prev = Some(kz);
        }
    }

    #[test]
    fn fresnel_trivial_cases() {
        let (r, t) = fresnel(c(1.0, 0.2), c(1.0, 0.2)).unwrap();
        assert_eq!((r, t), (c(0.0, 0.0), c(1.0, 0.0)));
        let (r, t) = fresnel(c(0.7, -0.1), c(0.0, 0.0)).unwrap();
        assert_relative_eq!(r.re, 1.0);
        assert_relative_eq!(t.re, 2.0);
        assert!(fresnel(c(1.0, 1.0), c(-1.0, -1.0)).is_err());
    }

    #[test]
    fn fresnel_identities() {
        let (ki, kj) = (c(0.3, 0.01), c(0.2, 0.05));
        let (rij, tij) = fresnel(ki, kj).unwrap();
        let (rji, tji) = fresnel(kj, ki).unwrap();
        assert!((rij + rji).norm() < 1e-15);
        assert!((1.0 + rij - tij).norm() < 1e-15);
        assert!((tij * tji + rij * rij - 1.0).norm() < 1e-15);
    }

    #[test]
    fn scan_point_validation() {
        assert!(ScanPoint::new(0.0, 1.0).is_err());
        assert!(ScanPoint::new(1.0, 0.0).is_err());
        assert!(ScanPoint::new(1.0, 90.0).is_err());
    }

    fn simple() -> Vec<Layer> {
        vec![
            Layer::vacuum("air"),
            Layer::constant("a", Thickness::Finite(3.0), 1e-5, 1e-7),
            Layer::constant("b", Thickness::Finite(2.0), 1e-6, 1e-8).resonant(10.0),
            Layer::constant("sub", Thickness::SemiInfinite, 5e-6, 1e-7),
        ]
    }

    #[test]
    fn stack_geometry() {
        let s = CavityStack::new(simple()).unwrap();
        assert_eq!(s.layer_tops(), vec![0.0, 0.0, 3.0, 5.0]);
        assert_eq!(s.resonant_layer(), Some(2));
        assert_eq!(s.resonant_span(), Some((3.0, 5.0)));
        assert_eq!(s.resonant_center(), Some(4.0));
        let w = s.waves(&ScanPoint::new(9000.0, 0.4).unwrap(), None).unwrap();
        assert_eq!(w.layer_at(-1.0), 0);
        assert_eq!(w.layer_at(0.0), 1);
        assert_eq!(w.layer_at(3.5), 2);
        assert_eq!(w.layer_at(5.0), 3);
    }

    #[test]
    fn stack_validation_names_layer() {
        let mut l = simple();
        l[1].thickness = Thickness::Finite(-1.0);
        match CavityStack::new(l) {
            Err(Error::InvalidLayer { index, label, .. }) => {
                assert_eq!(index, 1);
                assert_eq!(label, "a");
            }
            other => panic!("{other:?}"),
        }
        let mut l = simple();
        l[1] = l[1].clone().resonant(3.0);
        assert!(CavityStack::new(l).is_err());
        let mut l = simple();
        l[0] = Layer::constant("air", Thickness::SemiInfinite, 1e-9, 0.0);
        assert!(CavityStack::new(l).is_err());
        let mut l = simple();
        l[3].thickness = Thickness::Finite(10.0);
        assert!(CavityStack::new(l).is_err());
        let mut l = simple();
        l[1] = Layer::constant("a", Thickness::Finite(3.0), -1e-5, 0.0);
        assert!(CavityStack::new(l).is_err());
    }

    #[test]
    fn subdivision_preserves_geometry() {
        let s = CavityStack::new(simple()).unwrap();
        let t = s.subdivided(1, 3).unwrap();
        assert_eq!(t.len(), 6);
        assert_relative_eq!(t.total_thickness(), s.total_thickness(), max_relative = 1e-15);
    }
}
