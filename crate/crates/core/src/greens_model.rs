//! Green's function model: the resonant layer is cut into `N_l` sheets of
//! two-level emitters coupled through the bare-cavity field.
//!
//! The quasi-1D kernel between depths is
//!
//! `G(z, z') = (i / 2k_z0) · a(z_>) · q(z_<)`,
//!
//! where `z_>` is the deeper point, `a` the normalised bare field and `q`
//! the field excited by a unit up-going wave at the surface. It is the
//! outgoing-wave Green's function of the bare cavity.
//!
//! Coupling prefactors collapse into one constant `C` (eV·nm):
//!
//! `C = |d|² · Γ · DIPOLE_SCALE / k`
//!
//! with `|d|²` in units of `Γ`. One sheet then reproduces the transfer-matrix
//! sheet exactly when `C = 2π r0 f0 Γ`, see [`f0_from_dipole_sq`].

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::dispersion::ResonanceLine;
use crate::matrix_model::BareCavity;
use crate::stack::{CavityStack, ScanPoint};
use crate::{wave_number, Error, Result, R0};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Fixes the unit of `|d|²` so that `f0 = 0.36` at 10208 eV corresponds to
/// `|d|² ≈ 3.3e-7`.
pub const DIPOLE_SCALE: f64 = 1.0e3;

pub const MAX_SUBLAYERS: usize = 64;

/// Condition number of the response matrix treated as a pole.
pub const POLE_CONDITION: f64 = 1e12;

/// Coupling constant `C` in eV·nm for the line's `|d|²` at wave number `k`.
pub fn coupling_constant(line: &ResonanceLine, k: f64) -> f64 {
    line.dipole_sq * line.gamma * DIPOLE_SCALE / k
}

/// `f0` equivalent to `|d|²` at `energy` under the single-sheet mapping.
pub fn f0_from_dipole_sq(dipole_sq: f64, energy: f64) -> f64 {
    dipole_sq * DIPOLE_SCALE / (2.0 * std::f64::consts::PI * R0 * wave_number(energy))
}

pub fn dipole_sq_from_f0(f0: f64, energy: f64) -> f64 {
    f0 * 2.0 * std::f64::consts::PI * R0 * wave_number(energy) / DIPOLE_SCALE
}

#[derive(Debug, Clone, PartialEq)]
pub struct SublayerGrid {
    /// Sheet centre depths in nm.
    pub z_positions: Vec<f64>,
    /// Sheet thicknesses in nm.
    pub thickness: Vec<f64>,
    /// Emitters per area `ρ d_l` in nm⁻².
    pub area_density: Vec<f64>,
}

impl SublayerGrid {
    /// `n` equal slices of the resonant layer.
    pub fn slice(stack: &CavityStack, n: usize) -> Result<Self> {
        if n == 0 || n > MAX_SUBLAYERS {
            return Err(Error::Input(format!(
                "sublayer count must be in 1..={MAX_SUBLAYERS}, got {n}"
            )));
        }
        let i = stack
            .resonant_layer()
            .ok_or_else(|| Error::Input("stack has no resonant layer".into()))?;
        let (top, bottom) = stack.resonant_span().unwrap();
        let rho = stack.layers()[i].resonant_density.unwrap_or(0.0);
        let d = (bottom - top) / n as f64;
        Ok(Self {
            z_positions: (0..n).map(|l| top + (l as f64 + 0.5) * d).collect(),
            thickness: vec![d; n],
            area_density: vec![rho * d; n],
        })
    }

    pub fn len(&self) -> usize {
        self.z_positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z_positions.is_empty()
    }
}

/// `G_ll' = J_ll' + iΓ_ll'/2` in eV.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    pub g: DMatrix<Complex64>,
}

impl CouplingMatrix {
    pub fn j(&self) -> DMatrix<f64> {
        self.g.map(|c| c.re)
    }

    pub fn gamma(&self) -> DMatrix<f64> {
        self.g.map(|c| 2.0 * c.im)
    }

    pub fn len(&self) -> usize {
        self.g.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.g.nrows() == 0
    }
}

/// Kernel from precomputed bare-cavity matrices.
pub fn kernel(bare: &BareCavity, z_i: f64, z_j: f64) -> Complex64 {
    let (deep, shallow) = if z_i >= z_j { (z_i, z_j) } else { (z_j, z_i) };
    let (_, q) = bare.pq(shallow);
    I / (2.0 * bare.kz0()) * bare.field(deep) * q
}

pub fn greens_kernel(stack: &CavityStack, point: &ScanPoint, z_i: f64, z_j: f64) -> Result<Complex64> {
    Ok(kernel(&BareCavity::new(stack, point)?, z_i, z_j))
}

/// Bare-cavity quantities at the sheets, independent of `|d|²`.
#[derive(Debug, Clone)]
pub struct SheetFields {
    pub r0: Complex64,
    pub kz0: f64,
    pub k: f64,
    /// `sqrt(ρ d_l)·a(z_l)`.
    pub weighted_field: DVector<Complex64>,
    /// `sqrt(ρ d_l ρ d_l')·G(z_l, z_l')`.
    pub weighted_kernel: DMatrix<Complex64>,
}

impl SheetFields {
    pub fn new(bare: &BareCavity, grid: &SublayerGrid) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::Input("empty sublayer grid".into()));
        }
        let n = grid.len();
        let w: Vec<f64> = grid.area_density.iter().map(|x| x.sqrt()).collect();
        let weighted_field =
            DVector::from_iterator(n, grid.z_positions.iter().zip(&w).map(|(&z, &wl)| wl * bare.field(z)));
        let mut weighted_kernel = DMatrix::zeros(n, n);
        for l in 0..n {
            for m in l..n {
                let v = w[l] * w[m] * kernel(bare, grid.z_positions[l], grid.z_positions[m]);
                weighted_kernel[(l, m)] = v;
                weighted_kernel[(m, l)] = v;
            }
        }
        Ok(Self {
            r0: bare.r0,
            kz0: bare.kz0(),
            k: bare.waves.point.k(),
            weighted_field,
            weighted_kernel,
        })
    }

    pub fn coupling(&self, line: &ResonanceLine) -> CouplingMatrix {
        let c = coupling_constant(line, self.k);
        CouplingMatrix {
            g: self.weighted_kernel.map(|v| v * c),
        }
    }

    /// Rabi drive `Ω_l = sqrt(ρ d_l C)·a(z_l)`.
    pub fn drive(&self, line: &ResonanceLine) -> DVector<Complex64> {
        let s = coupling_constant(line, self.k).sqrt();
        self.weighted_field.map(|v| v * s)
    }

    /// `r0 + Σ_l sqrt(ρ d_l C)·(i/2k_z0)·a(z_l)·σ_l`.
    pub fn reflectance(&self, line: &ResonanceLine, sigma: &DVector<Complex64>) -> Complex64 {
        let s = coupling_constant(line, self.k).sqrt();
        let emit = I / (2.0 * self.kz0) * s;
        self.r0
            + self
                .weighted_field
                .iter()
                .zip(sigma.iter())
                .map(|(a, x)| emit * a * x)
                .sum::<Complex64>()
    }

    /// Full solve at `energy`.
    pub fn solve(&self, line: &ResonanceLine, energy: f64, point: &ScanPoint) -> Result<Complex64> {
        if line.dipole_sq == 0.0 {
            return Ok(self.r0);
        }
        let state = steady_state(
            &self.coupling(line),
            &self.drive(line),
            energy - line.omega0,
            line.gamma,
        )
        .map_err(|e| with_point(e, point))?;
        Ok(self.reflectance(line, &state.sigma))
    }
}

fn with_point(e: Error, point: &ScanPoint) -> Error {
    match e {
        Error::ResonancePole { condition, .. } => Error::ResonancePole {
            energy: point.energy,
            angle: point.angle,
            condition,
        },
        other => other,
    }
}

pub fn coupling_matrix(
    stack: &CavityStack,
    point: &ScanPoint,
    grid: &SublayerGrid,
    line: &ResonanceLine,
) -> Result<CouplingMatrix> {
    Ok(SheetFields::new(&BareCavity::new(stack, point)?, grid)?.coupling(line))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    pub sigma: DVector<Complex64>,
    /// 1-norm condition number of `𝕄`.
    pub condition: f64,
}

fn norm1(m: &DMatrix<Complex64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `σ = -𝕄⁻¹Ω` with `𝕄 = (Δ + iΓ/2)·1 + G`.
pub fn steady_state(
    coupling: &CouplingMatrix,
    drive: &DVector<Complex64>,
    detuning: f64,
    gamma0: f64,
) -> Result<SteadyState> {
    let n = coupling.len();
    if n == 0 || drive.len() != n {
        return Err(Error::Input("coupling and drive sizes differ or are empty".into()));
    }
    let mut m = coupling.g.clone();
    let diag = Complex64::new(detuning, 0.5 * gamma0);
    for l in 0..n {
        m[(l, l)] += diag;
    }
    let pole = |condition| Error::ResonancePole {
        energy: f64::NAN,
        angle: f64::NAN,
        condition,
    };
    let inv = m.clone().try_inverse().ok_or_else(|| pole(f64::INFINITY))?;
    let condition = norm1(&m) * norm1(&inv);
    if !(condition <= POLE_CONDITION) {
        return Err(pole(condition));
    }
    let sigma = -(inv * drive);
    Ok(SteadyState { sigma, condition })
}

/// Green's-model reflection with `sublayers` sheets.
pub fn greens_reflectance(
    stack: &CavityStack,
    point: &ScanPoint,
    line: &ResonanceLine,
    sublayers: usize,
) -> Result<Complex64> {
    let grid = SublayerGrid::slice(stack, sublayers)?;
    let fields = SheetFields::new(&BareCavity::new(stack, point)?, &grid)?;
    fields.solve(line, point.energy, point)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix_model::matrix_reflectance;
    use crate::stack::{Layer, Thickness};

    fn cavity() -> CavityStack {
        CavityStack::new(vec![
            Layer::vacuum("air"),
            Layer::constant("Pt", Thickness::Finite(2.1), 5.0e-5, 4e-6),
            Layer::constant("C", Thickness::Finite(28.2), 7e-6, 1e-8),
            Layer::constant("WSi2", Thickness::Finite(2.0), 2e-5, 1.5e-6).resonant(12.42),
            Layer::constant("C", Thickness::Finite(28.2), 7e-6, 1e-8),
            Layer::constant("Pt", Thickness::Finite(16.0), 5.0e-5, 4e-6),
            Layer::constant("Si", Thickness::SemiInfinite, 4.7e-6, 7e-8),
        ])
        .unwrap()
    }

    fn point(e: f64, th: f64) -> ScanPoint {
        ScanPoint::new(e, th).unwrap()
    }

    #[test]
    fn calibration_round_trip() {
        let d = dipole_sq_from_f0(0.36, 10208.0);
        assert!((d - 3.3e-7).abs() < 0.01 * 3.3e-7, "{d}");
        assert!((f0_from_dipole_sq(d, 10208.0) - 0.36).abs() < 1e-14);
    }

    #[test]
    fn free_space_kernel() {
        let s = CavityStack::new(vec![
            Layer::vacuum("air"),
            Layer::constant("v", Thickness::Finite(10.0), 0.0, 0.0).resonant(1.0),
            Layer::constant("v", Thickness::SemiInfinite, 0.0, 0.0),
        ])
        .unwrap();
        let p = point(10208.0, 0.3);
        let k = p.kz_vacuum();
        for (zi, zj) in [(1.0f64, 4.0), (7.5, 2.0), (3.0, 3.0)] {
            let g = greens_kernel(&s, &p, zi, zj).unwrap();
            let expect = I / (2.0 * k) * (I * k * (zi - zj).abs()).exp();
            assert!((g - expect).norm() < 1e-12 * expect.norm());
        }
    }

    #[test]
    fn kernel_symmetric() {
        let s = cavity();
        let bare = BareCavity::new(&s, &point(10208.0, 0.18)).unwrap();
        for (a, b) in [(30.4, 31.9), (31.0, 32.2), (10.0, 60.0)] {
            assert_eq!(kernel(&bare, a, b), kernel(&bare, b, a));
        }
    }

    #[test]
    fn zero_dipole_is_bare() {
        let s = cavity();
        let line = ResonanceLine::new(10208.0, 5.0, 0.0, 0.0).unwrap();
        let p = point(10208.0, 0.18);
        let grid = SublayerGrid::slice(&s, 4).unwrap();
        let c = coupling_matrix(&s, &p, &grid, &line).unwrap();
        assert!(c.g.iter().all(|v| *v == Complex64::new(0.0, 0.0)));
        let r = greens_reflectance(&s, &p, &line, 4).unwrap();
        assert_eq!(r, BareCavity::new(&s, &p).unwrap().r0);
    }

    #[test]
    fn bare_lorentzian_response() {
        let c = CouplingMatrix {
            g: DMatrix::zeros(1, 1),
        };
        let omega = DVector::from_element(1, Complex64::new(0.3, 0.1));
        let s = steady_state(&c, &omega, 1.5, 5.0).unwrap();
        let expect = -omega[0] / Complex64::new(1.5, 2.5);
        assert!((s.sigma[0] - expect).norm() < 1e-15);
        let s0 = steady_state(&c, &DVector::zeros(1), 1.5, 5.0).unwrap();
        assert_eq!(s0.sigma[0], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn pole_detected() {
        let c = CouplingMatrix {
            g: DMatrix::from_element(1, 1, Complex64::new(-1.0, -2.5)),
        };
        let r = steady_state(&c, &DVector::from_element(1, Complex64::new(1.0, 0.0)), 1.0, 5.0);
        assert!(matches!(r, Err(Error::ResonancePole { .. })));
    }

    #[test]
    fn empty_grid_rejected() {
        let s = cavity();
        assert!(SublayerGrid::slice(&s, 0).is_err());
        assert!(SublayerGrid::slice(&s, 65).is_err());
    }

    #[test]
    fn single_sheet_matches_matrix_model() {
        let s = cavity();
        let f0 = 0.36;
        let line = ResonanceLine::new(10208.0, 5.0, f0, dipole_sq_from_f0(f0, 10208.0)).unwrap();
        for th in [0.17, 0.18, 0.2] {
            for e in [10195.0, 10207.0, 10208.0, 10211.0] {
                let p = point(e, th);
                let lm = line.with_dipole_sq(dipole_sq_from_f0(f0, e));
                let g = greens_reflectance(&s, &p, &lm, 1).unwrap();
                let m = matrix_reflectance(&s, &p, &line).unwrap();
                assert!((g - m).norm() < 1e-12, "{th} {e}: {g} {m}");
            }
        }
    }

    #[test]
    fn sliced_coupling_invariants() {
        let s = cavity();
        let line = ResonanceLine::new(10208.0, 5.0, 0.0, 3.3e-7).unwrap();
        let grid = SublayerGrid::slice(&s, 8).unwrap();
        let c = coupling_matrix(&s, &point(10208.0, 0.18), &grid, &line).unwrap();
        assert_eq!(c.g, c.g.transpose());
        assert!(c.gamma().diagonal().iter().all(|&g| g > 0.0));
    }
}
