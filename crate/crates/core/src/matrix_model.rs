//! Transfer-matrix model of the cavity with an ultrathin resonant sheet.
//!
//! Amplitudes `(A+, A-)` are referenced locally in each layer, so the field
//! is always `A+ + A-`. The matrix of layer `i` carries the top of `i` to
//! the top of the layer below it:
//!
//! `M_i = (1/t_ji) [[1, r_ji], [r_ji, 1]] · diag(e^{ik_i d_i}, e^{-ik_i d_i})`.
//!
//! The bare cavity gives `r0 = -M21/M22` from the full product and, from the
//! partial product down to the sheet depth `z_a`, the factors
//! `p = M11 + M21`, `q = M12 + M22` and the field `a = p + q·r0`.
//!
//! A sheet of thickness `d` adds `g·K` with `K = [[1, 1], [-1, -1]]` to the
//! vacuum-referenced propagation generator, where
//! `g = -(2π ρ r0 / k_z0)·Δf` is the scattering strength per nm. Since
//! `K² = 0` the sheet matrix is exactly `1 + i d g K`, and the resulting
//! reflection is
//!
//! `r = r0 + i d g a² / (1 - i d g η)`, with `η = q·a`.

use num_complex::Complex64;
use std::ops::Mul;

use crate::dispersion::{lorentzian_delta_f, ResonanceLine, ResonantScattering};
use crate::stack::{fresnel, kz_from_index, CavityStack, RefractiveIndex, ScanPoint, StackWaves};
use crate::{Error, Result, R0};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Relative size of `M22` below which the cavity counts as singular.
pub const SINGULAR_THRESHOLD: f64 = 1e-12;

/// Expansion validity bound on `d·|g|·max(|pq|, |a|²)`.
pub const EXPANSION_BOUND: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transfer2x2 {
    pub m: [[Complex64; 2]; 2],
}

impl Transfer2x2 {
    pub const IDENTITY: Transfer2x2 = Transfer2x2 {
        m: [[ONE, ZERO], [ZERO, ONE]],
    };

    pub fn new(m11: Complex64, m12: Complex64, m21: Complex64, m22: Complex64) -> Self {
        Self {
            m: [[m11, m12], [m21, m22]],
        }
    }

    pub fn diag(a: Complex64, b: Complex64) -> Self {
        Self::new(a, ZERO, ZERO, b)
    }

    pub fn det(&self) -> Complex64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().flatten().all(|c| c.is_finite())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = *self;
        out.m.iter_mut().flatten().for_each(|c| *c *= s);
        out
    }

    /// Largest entrywise difference.
    pub fn distance(&self, other: &Self) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                d = d.max((self.m[i][j] - other.m[i][j]).norm());
            }
        }
        d
    }
}

impl Mul for Transfer2x2 {
    type Output = Transfer2x2;

    fn mul(self, b: Transfer2x2) -> Transfer2x2 {
        let a = &self.m;
        let b = &b.m;
        Transfer2x2::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

/// Interface from medium `i` down into medium `j`.
pub fn interface_matrix(k_i: Complex64, k_j: Complex64) -> Result<Transfer2x2> {
    let (r_ji, t_ji) = fresnel(k_j, k_i)?;
    Ok(Transfer2x2::new(ONE, r_ji, r_ji, ONE).scale(1.0 / t_ji))
}

pub fn propagation_matrix(k: Complex64, d: f64) -> Transfer2x2 {
    Transfer2x2::diag((I * k * d).exp(), (-I * k * d).exp())
}

/// Product form: propagate through a layer of thickness `d`, then cross
/// into the medium below.
pub fn layer_matrix(k_layer: Complex64, k_below: Complex64, d: f64) -> Result<Transfer2x2> {
    Ok(interface_matrix(k_layer, k_below)? * propagation_matrix(k_layer, d))
}

/// Generator `F = k_z0·diag(1, -1) + g·K` in the vacuum-referenced basis,
/// with `g = k²(n² - 1)/(2 k_z0)`.
pub fn generator(index: RefractiveIndex, point: &ScanPoint) -> Transfer2x2 {
    let kz0 = Complex64::new(point.kz_vacuum(), 0.0);
    let k = point.k();
    let chi = index.deviation();
    let g = k * k * chi * (chi + 2.0) / (2.0 * kz0);
    Transfer2x2::new(kz0 + g, g, -g, -kz0 - g)
}

/// `exp(iFd)` through the eigen-decomposition of `F` (eigenvalues `±k_z`).
pub fn layer_matrix_exponential(index: RefractiveIndex, point: &ScanPoint, d: f64) -> Transfer2x2 {
    let f = generator(index, point);
    let kz = kz_from_index(index, point);
    let g = f.m[0][1];
    if g == ZERO {
        return propagation_matrix(kz, d);
    }
    let kz0 = f.m[0][0] - g;
    // columns: eigenvectors for +kz and -kz
    let v = Transfer2x2::new(g, g, kz - kz0 - g, -kz - kz0 - g);
    let det = v.det();
    let v_inv = Transfer2x2::new(v.m[1][1], -v.m[0][1], -v.m[1][0], v.m[0][0]).scale(1.0 / det);
    v * propagation_matrix(kz, d) * v_inv
}

/// Vacuum-referenced matrix of a layer with vacuum on both sides, built from
/// the interface/propagation product; equals [`layer_matrix_exponential`].
pub fn sandwiched_layer_matrix(index: RefractiveIndex, point: &ScanPoint, d: f64) -> Result<Transfer2x2> {
    let k0 = Complex64::new(point.kz_vacuum(), 0.0);
    let k = kz_from_index(index, point);
    Ok(interface_matrix(k, k0)? * propagation_matrix(k, d) * interface_matrix(k0, k)?)
}

/// Bare-cavity transfer matrices at one scan point.
#[derive(Debug, Clone)]
pub struct BareCavity {
    pub waves: StackWaves,
    /// Vacuum amplitudes at `z = 0` to local amplitudes at the top of layer `j`.
    to_top: Vec<Transfer2x2>,
    pub full: Transfer2x2,
    pub r0: Complex64,
}

impl BareCavity {
    pub fn from_waves(waves: StackWaves) -> Result<Self> {
        let n = waves.len();
        let mut to_top = Vec::with_capacity(n);
        to_top.push(Transfer2x2::IDENTITY);
        for j in 0..n - 1 {
            let mj = layer_matrix(waves.kz[j], waves.kz[j + 1], waves.thickness[j])?;
            let next = mj * to_top[j];
            to_top.push(next);
        }
        let full = to_top[n - 1];
        let m22 = full.m[1][1];
        if !full.is_finite() || m22.norm() < SINGULAR_THRESHOLD * full.max_abs() {
            return Err(Error::SingularCavity {
                energy: waves.point.energy,
                angle: waves.point.angle,
            });
        }
        let r0 = -full.m[1][0] / m22;
        Ok(Self {
            waves,
            to_top,
            full,
            r0,
        })
    }

    pub fn new(stack: &CavityStack, point: &ScanPoint) -> Result<Self> {
        Self::from_waves(stack.waves(point, None)?)
    }

    /// Partial matrix from the surface down to depth `z`.
    pub fn partial(&self, z: f64) -> Transfer2x2 {
        let w = &self.waves;
        if z < 0.0 {
            return propagation_matrix(w.kz[0], z);
        }
        let j = w.layer_at(z);
        propagation_matrix(w.kz[j], z - w.top[j]) * self.to_top[j]
    }

    /// `(p, q)` at depth `z`.
    pub fn pq(&self, z: f64) -> (Complex64, Complex64) {
        let m = self.partial(z);
        (m.m[0][0] + m.m[1][0], m.m[0][1] + m.m[1][1])
    }

    /// Normalised bare field `a(z) = p + q·r0`.
    pub fn field(&self, z: f64) -> Complex64 {
        let (p, q) = self.pq(z);
        p + q * self.r0
    }

    pub fn kz0(&self) -> f64 {
        self.waves.point.kz_vacuum()
    }

    pub fn response(&self, z_a: f64) -> CavityResponse {
        let (p, q) = self.pq(z_a);
        let a = p + q * self.r0;
        CavityResponse {
            r0: self.r0,
            p,
            q,
            a,
            eta: q * a,
            kz0: self.kz0(),
            z_a,
        }
    }
}

/// Bare-cavity quantities at the sheet depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityResponse {
    pub r0: Complex64,
    pub p: Complex64,
    pub q: Complex64,
    pub a: Complex64,
    /// `η = q·a = pq + q²r0`, the self-coupling of the sheet.
    pub eta: Complex64,
    /// Vacuum `k_z` in nm⁻¹.
    pub kz0: f64,
    pub z_a: f64,
}

impl CavityResponse {
    /// The bare product `p·q`, which equals `η` only when `q·r0` is negligible.
    pub fn pq(&self) -> Complex64 {
        self.p * self.q
    }
}

/// Bare-cavity response with the sheet at `z_a`; the resonant white line is
/// not part of the background.
pub fn bare_cavity(stack: &CavityStack, point: &ScanPoint, z_a: f64) -> Result<CavityResponse> {
    Ok(BareCavity::new(stack, point)?.response(z_a))
}

/// Thickness and resonant-atom density of the collapsed atomic layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomicSheet {
    pub thickness: f64,
    pub density: f64,
    pub depth: f64,
}

impl AtomicSheet {
    pub fn from_stack(stack: &CavityStack) -> Result<Self> {
        let i = stack
            .resonant_layer()
            .ok_or_else(|| Error::Input("stack has no resonant layer".into()))?;
        Ok(Self {
            thickness: stack.resonant_thickness().unwrap_or(0.0),
            density: stack.layers()[i].resonant_density.unwrap_or(0.0),
            depth: stack.resonant_center().unwrap_or(0.0),
        })
    }

    /// Scattering strength per nm, `g = -(2π ρ r0 / k_z0)·Δf`.
    pub fn strength(&self, delta_f: Complex64, kz0: f64) -> Complex64 {
        -2.0 * std::f64::consts::PI * self.density * R0 / kz0 * delta_f
    }

    /// `B = π ρ r0 Γ / k_z0` in eV·nm, linking `g` to the Lorentzian pole.
    pub fn pole_scale(&self, gamma: f64, kz0: f64) -> f64 {
        std::f64::consts::PI * self.density * R0 * gamma / kz0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResonantReflection {
    pub r_a: Complex64,
    /// Present when `d·|g|·max(|pq|, |a|²)` exceeds [`EXPANSION_BOUND`].
    pub warning: Option<String>,
}

fn validity(resp: &CavityResponse, d: f64, g: Complex64) -> Option<String> {
    let size = d * g.norm() * resp.pq().norm().max(resp.a.norm_sqr());
    (size >= EXPANSION_BOUND).then(|| format!("thin-sheet expansion parameter {size:.3} exceeds {EXPANSION_BOUND}"))
}

/// Resonant pathway `r_a` for an arbitrary `Δf`.
pub fn sheet_reflection(resp: &CavityResponse, sheet: &AtomicSheet, delta_f: Complex64) -> ResonantReflection {
    let d = sheet.thickness;
    let g = sheet.strength(delta_f, resp.kz0);
    let idg = I * d * g;
    ResonantReflection {
        r_a: idg * resp.a * resp.a / (1.0 - idg * resp.eta),
        warning: validity(resp, d, g),
    }
}

/// Resonant pathway `r_a` for the Lorentzian line at `energy`.
pub fn resonant_reflection(
    resp: &CavityResponse,
    line: &ResonanceLine,
    sheet: &AtomicSheet,
    energy: f64,
) -> ResonantReflection {
    sheet_reflection(resp, sheet, lorentzian_delta_f(line, energy))
}

/// Cavity-induced line shift `Δc` and enhanced width `Γc`, both in eV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityShifts {
    pub delta_c: f64,
    pub gamma_c: f64,
}

/// `Δc = B d f0 Im η`, `Γc = 2 B d f0 Re η`.
pub fn cavity_shifts(resp: &CavityResponse, line: &ResonanceLine, sheet: &AtomicSheet) -> CavityShifts {
    let b = sheet.pole_scale(line.gamma, resp.kz0) * sheet.thickness * line.f0;
    CavityShifts {
        delta_c: b * resp.eta.im,
        gamma_c: 2.0 * b * resp.eta.re,
    }
}

/// `r_a = -i B d f0 a² / ((ω - ω0 - Δc) + i(Γ + Γc)/2)`.
pub fn resonant_reflection_lorentzian(
    resp: &CavityResponse,
    line: &ResonanceLine,
    sheet: &AtomicSheet,
    energy: f64,
) -> Complex64 {
    let s = cavity_shifts(resp, line, sheet);
    let b = sheet.pole_scale(line.gamma, resp.kz0) * sheet.thickness * line.f0;
    -I * b * resp.a * resp.a / Complex64::new(energy - line.omega0 - s.delta_c, 0.5 * (line.gamma + s.gamma_c))
}

/// Total `r0 + r_a` at one scan point.
pub fn matrix_reflectance(stack: &CavityStack, point: &ScanPoint, line: &ResonanceLine) -> Result<Complex64> {
    let sheet = AtomicSheet::from_stack(stack)?;
    let resp = bare_cavity(stack, point, sheet.depth)?;
    Ok(resp.r0 + resonant_reflection(&resp, line, &sheet, point.energy).r_a)
}

/// Reflection of the full stack with `Δf` spread over the whole resonant
/// layer, built from transfer matrices without any expansion.
pub fn exact_reflectance(
    stack: &CavityStack,
    point: &ScanPoint,
    resonance: &dyn ResonantScattering,
) -> Result<Complex64> {
    Ok(BareCavity::from_waves(stack.waves(point, Some(resonance))?)?.r0)
}

/// `|r_exact - (r0 + r_a)|` for the stack's resonant layer.
pub fn expansion_error(stack: &CavityStack, point: &ScanPoint, line: &ResonanceLine) -> Result<f64> {
    let exact = exact_reflectance(stack, point, line)?;
    Ok((exact - matrix_reflectance(stack, point, line)?).norm())
}
