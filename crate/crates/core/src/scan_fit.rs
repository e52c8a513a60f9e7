//! Rocking curves, spectra and energy-angle maps; single-parameter fits
//! against a benchmark map; lineshape analysis helpers.

use num_complex::Complex64;

use crate::dispersion::{ResonanceLine, ResonantScattering};
use crate::greens_model::{SheetFields, SublayerGrid};
use crate::lsq::{golden_section, levenberg_marquardt, LmOptions};
use crate::matrix_model::{resonant_reflection, AtomicSheet, BareCavity, CavityResponse};
use crate::parallel::{map_indexed, Execution};
use crate::parratt::{
    absorption_from_resonance, fluorescence_layer_average, parratt_reflectance, FluorescenceOptions, Recursion,
};
use crate::stack::{CavityStack, ScanPoint};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    Parratt,
    Matrix,
    Greens { sublayers: usize },
}

impl Solver {
    pub fn tag(&self) -> String {
        match self {
            Solver::Parratt => "parratt".into(),
            Solver::Matrix => "matrix".into(),
            Solver::Greens { sublayers } => format!("greens:{sublayers}"),
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "parratt" => Ok(Solver::Parratt),
            "matrix" => Ok(Solver::Matrix),
            t if t.starts_with("greens") => {
                let n = match t.split_once(':') {
                    Some((_, n)) => n
                        .parse()
                        .map_err(|_| Error::Input(format!("bad sublayer count in {t}")))?,
                    None => 8,
                };
                Ok(Solver::Greens { sublayers: n })
            }
            _ => Err(Error::Input(format!("unknown solver {tag}"))),
        }
    }
}

/// Complex reflection of `solver` at one point with the resonance on.
pub fn reflection(stack: &CavityStack, solver: Solver, point: &ScanPoint, line: &ResonanceLine) -> Result<Complex64> {
    match solver {
        Solver::Parratt => parratt_reflectance(stack, point, Some(line)),
        Solver::Matrix => crate::matrix_model::matrix_reflectance(stack, point, line),
        Solver::Greens { sublayers } => crate::greens_model::greens_reflectance(stack, point, line, sublayers),
    }
}

/// Bare `|r0|²` against angle at fixed energy.
pub fn rocking_curve(
    stack: &CavityStack,
    energy: f64,
    angles: &[f64],
    resonance: Option<&dyn ResonantScattering>,
    exec: Execution,
) -> Result<Vec<f64>> {
    map_indexed(exec, angles.len(), |i| {
        let p = ScanPoint::new(energy, angles[i])?;
        Ok(parratt_reflectance(stack, &p, resonance)?.norm_sqr())
    })
    .into_iter()
    .collect()
}

/// `|R|²` against energy at fixed angle.
pub fn spectrum(
    stack: &CavityStack,
    solver: Solver,
    angle: f64,
    energies: &[f64],
    line: &ResonanceLine,
    exec: Execution,
) -> Result<Vec<f64>> {
    map_indexed(exec, energies.len(), |i| {
        let p = ScanPoint::new(energies[i], angle)?;
        Ok(reflection(stack, solver, &p, line)?.norm_sqr())
    })
    .into_iter()
    .collect()
}

fn coarse_step_count(lo: f64, hi: f64) -> usize {
    // resolves dips a few 1e-4 deg wide
    (((hi - lo) / 2.5e-4).ceil() as usize).clamp(400, 40_000)
}

/// First (smallest-angle) reflectance dip of the bare cavity, in degrees,
/// refined to 1e-7 deg.
pub fn locate_first_mode(stack: &CavityStack, energy: f64, theta_range: (f64, f64)) -> Result<f64> {
    let (lo, hi) = theta_range;
    if !(lo > 0.0 && hi > lo && hi < 90.0) {
        return Err(Error::Input(format!("bad angle range [{lo}, {hi}]")));
    }
    let n = coarse_step_count(lo, hi);
    let angles: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    let r = rocking_curve(stack, energy, &angles, None, Execution::Parallel)?;
    let reflect = |th: f64| -> f64 {
        ScanPoint::new(energy, th)
            .and_then(|p| parratt_reflectance(stack, &p, None))
            .map(|r| r.norm_sqr())
            .unwrap_or(f64::INFINITY)
    };
    for i in 1..n {
        if r[i] < r[i - 1] && r[i] < r[i + 1] {
            // prominence against the neighbouring maxima
            let left = r[..i].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let right = r[i + 1..].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if left.min(right) - r[i] < 1e-3 {
                continue;
            }
            let m = golden_section(reflect, angles[i - 1], angles[i + 1], 1e-8);
            return Ok(m.x);
        }
    }
    Err(Error::NoDip { min: lo, max: hi })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Reflectance,
    FieldIntensity,
    Fluorescence,
}

impl Quantity {
    pub fn tag(&self) -> &'static str {
        match self {
            Quantity::Reflectance => "reflectance",
            Quantity::FieldIntensity => "field_intensity",
            Quantity::Fluorescence => "fluorescence",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "reflectance" => Ok(Quantity::Reflectance),
            "field_intensity" => Ok(Quantity::FieldIntensity),
            "fluorescence" => Ok(Quantity::Fluorescence),
            _ => Err(Error::Input(format!("unknown quantity {tag}"))),
        }
    }
}

/// Energy axis × angle-offset axis about a reference angle.
#[derive(Debug, Clone, PartialEq)]
pub struct MapGrid {
    pub energies: Vec<f64>,
    /// Offsets Δθ in degrees from `theta_ref`.
    pub offsets: Vec<f64>,
    pub theta_ref: f64,
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn strictly_increasing(x: &[f64]) -> bool {
    x.windows(2).all(|w| w[1] > w[0])
}

impl MapGrid {
    pub fn new(energies: Vec<f64>, offsets: Vec<f64>, theta_ref: f64) -> Result<Self> {
        // a single angle row is a spectrum
        if energies.len() < 2 || offsets.is_empty() {
            return Err(Error::Input("map needs >= 2 energies and >= 1 angle offset".into()));
        }
        if !strictly_increasing(&energies) || !strictly_increasing(&offsets) {
            return Err(Error::Input("map axes must be strictly increasing".into()));
        }
        Ok(Self {
            energies,
            offsets,
            theta_ref,
        })
    }

    /// ω0 ± 15 eV (301 points) × Δθ ∈ [-0.01, 0.01] deg (201 points).
    pub fn paper_default(omega0: f64, theta_ref: f64) -> Self {
        Self {
            energies: linspace(omega0 - 15.0, omega0 + 15.0, 301),
            offsets: linspace(-0.01, 0.01, 201),
            theta_ref,
        }
    }

    pub fn rows(&self) -> usize {
        self.offsets.len()
    }

    pub fn cols(&self) -> usize {
        self.energies.len()
    }

    pub fn point(&self, row: usize, col: usize) -> Result<ScanPoint> {
        ScanPoint::new(self.energies[col], self.theta_ref + self.offsets[row])
    }
}

/// Values on a [`MapGrid`], row-major with one row per angle offset.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMap {
    pub energy_axis: Vec<f64>,
    pub angle_axis: Vec<f64>,
    pub theta_ref: f64,
    pub values: Vec<f64>,
    pub quantity: Quantity,
    pub model_tag: String,
    /// `true` where the solver failed; the value there is NaN.
    pub error_mask: Vec<bool>,
    pub errors: Vec<String>,
}

impl SpectralMap {
    pub fn rows(&self) -> usize {
        self.angle_axis.len()
    }

    pub fn cols(&self) -> usize {
        self.energy_axis.len()
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols() + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let c = self.cols();
        &self.values[row * c..(row + 1) * c]
    }

    pub fn grid(&self) -> MapGrid {
        MapGrid {
            energies: self.energy_axis.clone(),
            offsets: self.angle_axis.clone(),
            theta_ref: self.theta_ref,
        }
    }

    /// Bitwise equality of axes and values (NaN-safe).
    pub fn bit_equal(&self, other: &SpectralMap) -> bool {
        let same =
            |a: &[f64], b: &[f64]| a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits());
        same(&self.energy_axis, &other.energy_axis)
            && same(&self.angle_axis, &other.angle_axis)
            && self.theta_ref.to_bits() == other.theta_ref.to_bits()
            && same(&self.values, &other.values)
            && self.quantity == other.quantity
            && self.model_tag == other.model_tag
            && self.error_mask == other.error_mask
    }
}

fn collect_map(grid: &MapGrid, quantity: Quantity, model_tag: String, results: Vec<Result<f64>>) -> SpectralMap {
    let cols = grid.cols();
    let mut values = Vec::with_capacity(results.len());
    let mut error_mask = Vec::with_capacity(results.len());
    let mut errors = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => {
                values.push(v);
                error_mask.push(false);
            }
            Err(e) => {
                values.push(f64::NAN);
                error_mask.push(true);
                errors.push(format!("row {} col {}: {e}", i / cols, i % cols));
            }
        }
    }
    SpectralMap {
        energy_axis: grid.energies.clone(),
        angle_axis: grid.offsets.clone(),
        theta_ref: grid.theta_ref,
        values,
        quantity,
        model_tag,
        error_mask,
        errors,
    }
}

fn eval_grid<F>(grid: &MapGrid, exec: Execution, f: F) -> Vec<Result<f64>>
where
    F: Fn(&ScanPoint) -> Result<f64> + Send + Sync,
{
    let cols = grid.cols();
    map_indexed(exec, grid.rows() * cols, |i| {
        let p = grid.point(i / cols, i % cols)?;
        f(&p)
    })
}

/// `|R|²` of `solver` on every grid point. Point failures are masked.
pub fn scan_map(
    stack: &CavityStack,
    solver: Solver,
    grid: &MapGrid,
    line: &ResonanceLine,
    exec: Execution,
) -> SpectralMap {
    let results = eval_grid(grid, exec, |p| Ok(reflection(stack, solver, p, line)?.norm_sqr()));
    collect_map(grid, Quantity::Reflectance, solver.tag(), results)
}

/// Parratt field intensity `|a(z)|²` at depth `z` with the resonance on.
pub fn field_map(stack: &CavityStack, grid: &MapGrid, line: &ResonanceLine, z: f64, exec: Execution) -> SpectralMap {
    let results = eval_grid(grid, exec, |p| {
        Ok(Recursion::new(stack.waves(p, Some(line))?)?.field(z).norm_sqr())
    });
    collect_map(grid, Quantity::FieldIntensity, Solver::Parratt.tag(), results)
}

/// Fluorescence `c·μ·<I>·I_f` averaged over the resonant layer.
pub fn fluorescence_map(
    stack: &CavityStack,
    grid: &MapGrid,
    line: &ResonanceLine,
    opts: &FluorescenceOptions,
    exec: Execution,
) -> SpectralMap {
    let results = eval_grid(grid, exec, |p| {
        let mu = absorption_from_resonance(line, p.energy)?;
        fluorescence_layer_average(stack, p, Some(line), mu, opts)
    });
    collect_map(grid, Quantity::Fluorescence, Solver::Parratt.tag(), results)
}

/// Root-mean-square difference over points valid in both maps.
pub fn rms_difference(a: &SpectralMap, b: &SpectralMap) -> Result<f64> {
    if a.values.len() != b.values.len() {
        return Err(Error::Input("maps have different shapes".into()));
    }
    let (mut sum, mut n) = (0.0, 0usize);
    for (x, y) in a.values.iter().zip(&b.values) {
        if x.is_finite() && y.is_finite() {
            sum += (x - y).powi(2);
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::Input("maps share no valid points".into()));
    }
    Ok((sum / n as f64).sqrt())
}

pub fn max_abs_difference(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitParameter {
    F0,
    DipoleSq,
}

impl FitParameter {
    pub fn name(&self) -> &'static str {
        match self {
            FitParameter::F0 => "f0",
            FitParameter::DipoleSq => "dipole_sq",
        }
    }

    /// Search interval.
    pub fn bounds(&self) -> (f64, f64) {
        match self {
            FitParameter::F0 => (1e-3, 10.0),
            FitParameter::DipoleSq => (1e-10, 1e-4),
        }
    }

    fn apply(&self, line: &ResonanceLine, x: f64) -> ResonanceLine {
        match self {
            FitParameter::F0 => line.with_f0(x),
            FitParameter::DipoleSq => line.with_dipole_sq(x),
        }
    }
}

/// Benchmark sub-window: closed energy and offset ranges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitWindow {
    pub energy: (f64, f64),
    pub offset: (f64, f64),
}

impl FitWindow {
    /// ω0 ± 15 eV × Δθ ∈ [-0.01, 0.01] deg.
    pub fn paper_default(omega0: f64) -> Self {
        Self {
            energy: (omega0 - 15.0, omega0 + 15.0),
            offset: (-0.01, 0.01),
        }
    }

    fn contains(&self, e: f64, o: f64) -> bool {
        let tol = 1e-9;
        e >= self.energy.0 - tol && e <= self.energy.1 + tol && o >= self.offset.0 - tol && o <= self.offset.1 + tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub parameter: FitParameter,
    pub value: f64,
    /// RMS of `|R|²` differences over the window.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub points: usize,
}

enum Prepared {
    Matrix(CavityResponse, AtomicSheet),
    Greens(Box<SheetFields>),
}

/// Fit `parameter` of `solver` to a benchmark map.
///
/// The residual is scanned on a log grid over the parameter bounds; golden
/// section then refines from three seeds (the best grid point and the best
/// points of the lower and upper thirds). Distinct refined minima with
/// equal residual raise [`Error::FitAmbiguity`].
pub fn fit_parameter(
    benchmark: &SpectralMap,
    stack: &CavityStack,
    solver: Solver,
    line: &ResonanceLine,
    parameter: FitParameter,
    window: &FitWindow,
    exec: Execution,
) -> Result<FitResult> {
    let mut targets = Vec::new();
    for (r, &o) in benchmark.angle_axis.iter().enumerate() {
        for (c, &e) in benchmark.energy_axis.iter().enumerate() {
            let v = benchmark.at(r, c);
            if window.contains(e, o) && v.is_finite() {
                targets.push((ScanPoint::new(e, benchmark.theta_ref + o)?, v));
            }
        }
    }
    if targets.is_empty() {
        return Err(Error::Input("fit window selects no benchmark points".into()));
    }
    let sheet = AtomicSheet::from_stack(stack)?;
    let grid = match solver {
        Solver::Greens { sublayers } => Some(SublayerGrid::slice(stack, sublayers)?),
        _ => None,
    };
    match (solver, parameter) {
        (Solver::Matrix, FitParameter::F0) | (Solver::Greens { .. }, FitParameter::DipoleSq) => {}
        _ => {
            return Err(Error::Input(format!(
                "solver {} cannot fit {}",
                solver.tag(),
                parameter.name()
            )))
        }
    }
    let prepared: Vec<Prepared> = map_indexed(exec, targets.len(), |i| {
        let bare = BareCavity::new(stack, &targets[i].0)?;
        Ok(match &grid {
            None => Prepared::Matrix(bare.response(sheet.depth), sheet),
            Some(g) => Prepared::Greens(Box::new(SheetFields::new(&bare, g)?)),
        })
    })
    .into_iter()
    .collect::<Result<_>>()?;

    let residual = |x: f64| -> f64 {
        let l = parameter.apply(line, x);
        let sq: Vec<f64> = map_indexed(exec, targets.len(), |i| {
            let (p, target) = &targets[i];
            let r = match &prepared[i] {
                Prepared::Matrix(resp, sheet) => resp.r0 + resonant_reflection(resp, &l, sheet, p.energy).r_a,
                Prepared::Greens(f) => match f.solve(&l, p.energy, p) {
                    Ok(r) => r,
                    Err(_) => return f64::INFINITY,
                },
            };
            (r.norm_sqr() - target).powi(2)
        });
        (sq.iter().sum::<f64>() / sq.len() as f64).sqrt()
    };

    let (lo, hi) = parameter.bounds();
    let (llo, lhi) = (lo.ln(), hi.ln());
    let n = 61;
    let xs: Vec<f64> = (0..n).map(|i| llo + (lhi - llo) * i as f64 / (n - 1) as f64).collect();
    let fs: Vec<f64> = xs.iter().map(|&u| residual(u.exp())).collect();
    let argmin = |range: std::ops::Range<usize>| -> usize { range.min_by(|&a, &b| fs[a].total_cmp(&fs[b])).unwrap() };
    let third = n / 3;
    let mut seeds = vec![argmin(0..n), argmin(0..third), argmin(n - third..n)];
    seeds.dedup();
    seeds.sort_unstable();
    seeds.dedup();

    let mut candidates: Vec<(f64, f64, usize)> = seeds
        .iter()
        .map(|&s| {
            let a = xs[s.saturating_sub(1)];
            let b = xs[(s + 1).min(n - 1)];
            let m = golden_section(|u| residual(u.exp()), a, b, 1e-11);
            (m.x.exp(), m.value, m.iterations)
        })
        .collect();
    candidates.sort_by(|a, b| a.1.total_cmp(&b.1));
    let best = candidates[0];
    let rivals: Vec<(f64, f64)> = candidates
        .iter()
        .filter(|c| ((c.0 - best.0) / best.0).abs() > 1e-4 && c.1 <= best.1 * (1.0 + 1e-6) + 1e-15)
        .map(|c| (c.0, c.1))
        .collect();
    if !rivals.is_empty() {
        let mut all = vec![(best.0, best.1)];
        all.extend(rivals);
        return Err(Error::FitAmbiguity { candidates: all });
    }
    let at_bound = (best.0.ln() - llo).abs() < 1e-6 || (best.0.ln() - lhi).abs() < 1e-6;
    Ok(FitResult {
        parameter,
        value: best.0,
        residual: best.1,
        iterations: n + candidates.iter().map(|c| c.2).sum::<usize>(),
        converged: !at_bound && best.1.is_finite(),
        points: targets.len(),
    })
}

/// Lorentzian `A (w/2)² / ((E - E0)² + (w/2)²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzFit {
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
    pub residual_norm: f64,
}

pub fn fit_lorentzian(energies: &[f64], values: &[f64]) -> Result<LorentzFit> {
    let ipk = (0..values.len())
        .max_by(|&a, &b| values[a].total_cmp(&values[b]))
        .ok_or_else(|| Error::Input("empty curve".into()))?;
    let half = 0.5 * values[ipk];
    let above: Vec<f64> = energies
        .iter()
        .zip(values)
        .filter(|(_, &v)| v >= half)
        .map(|(&e, _)| e)
        .collect();
    let w0 = (above.last().unwrap() - above[0]).max(energies[1] - energies[0]);
    let model = |p: &[f64], e: f64| {
        let hw = 0.5 * p[2];
        p[0] * hw * hw / ((e - p[1]).powi(2) + hw * hw)
    };
    let out = levenberg_marquardt(
        |p| energies.iter().zip(values).map(|(&e, &v)| model(p, e) - v).collect(),
        &[values[ipk], energies[ipk], w0],
        LmOptions::default(),
    )?;
    Ok(LorentzFit {
        amplitude: out.params[0],
        center: out.params[1],
        width: out.params[2].abs(),
        residual_norm: out.residual_norm,
    })
}

/// Fano profile on a linear background:
/// `B0 + B1 (E - E0) + A (q + ε)² / (1 + ε²)`, `ε = 2 (E - E0) / w`, `A >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FanoFit {
    pub q: f64,
    pub center: f64,
    pub width: f64,
    pub amplitude: f64,
    pub background: (f64, f64),
    pub residual_norm: f64,
}

pub fn fano_model(p: &[f64], e: f64) -> f64 {
    let eps = 2.0 * (e - p[4]) / p[5];
    p[0] + p[1] * (e - p[4]) + p[2] * p[2] * (p[3] + eps).powi(2) / (1.0 + eps * eps)
}

pub fn fit_fano(energies: &[f64], values: &[f64], center: f64, width: f64) -> Result<FanoFit> {
    let n = values.len();
    if n < 8 || energies.len() != n {
        return Err(Error::Input("Fano fit needs matching columns of >= 8 points".into()));
    }
    let imax = (0..n).max_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap();
    let imin = (0..n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap();
    let base = 0.5 * (values[0] + values[n - 1]);
    let slope = (values[n - 1] - values[0]) / (energies[n - 1] - energies[0]);
    let q0 = if energies[imax] > energies[imin] { 1.0 } else { -1.0 };
    let amp = (values[imax] - values[imin]).abs().sqrt() * 0.5;
    let mut best: Option<FanoFit> = None;
    for q_start in [q0, 3.0 * q0, -q0] {
        let p0 = [base - amp * amp, slope, amp, q_start, center, width];
        let fit = levenberg_marquardt(
            |p| {
                energies
                    .iter()
                    .zip(values)
                    .map(|(&e, &v)| fano_model(p, e) - v)
                    .collect()
            },
            &p0,
            LmOptions::default(),
        );
        if let Ok(out) = fit {
            let p = &out.params;
            let cand = FanoFit {
                q: p[3] * p[5].signum(),
                center: p[4],
                width: p[5].abs(),
                amplitude: p[2] * p[2],
                background: (p[0], p[1]),
                residual_norm: out.residual_norm,
            };
            if best.is_none_or(|b| cand.residual_norm < b.residual_norm) {
                best = Some(cand);
            }
        }
    }
    best.ok_or_else(|| Error::FitFailure {
        iterations: LmOptions::default().max_iterations,
        best: vec![],
        residual: f64::INFINITY,
    })
}

/// Energies of the reflectance minima of each map row that lie strictly
/// inside the energy window, deepest first.
pub fn row_minima(map: &SpectralMap) -> Vec<Vec<f64>> {
    (0..map.rows())
        .map(|r| {
            let row = map.row(r);
            let mut mins: Vec<(f64, f64)> = (1..row.len() - 1)
                .filter(|&c| row[c] < row[c - 1] && row[c] <= row[c + 1])
                .map(|c| (row[c], map.energy_axis[c]))
                .collect();
            mins.sort_by(|a, b| a.0.total_cmp(&b.0));
            mins.into_iter().map(|m| m.1).collect()
        })
        .collect()
}

/// Energy of the smallest value in each map row (NaN skipped).
pub fn row_argmin(map: &SpectralMap) -> Vec<Option<f64>> {
    (0..map.rows())
        .map(|r| {
            map.row(r)
                .iter()
                .enumerate()
                .filter(|(_, v)| v.is_finite())
                .min_by(|a, b| a.1.total_cmp(b.1))
                .map(|(c, _)| map.energy_axis[c])
        })
        .collect()
}

/// Minimum-reflectance ridge split at the bare mode angle.
#[derive(Debug, Clone, PartialEq)]
pub struct AvoidedCrossing {
    /// `(Δθ, E_min)` for Δθ < 0.
    pub below: Vec<(f64, f64)>,
    /// Same for Δθ > 0.
    pub above: Vec<(f64, f64)>,
    /// Rows whose minimum sits on the first or last energy point.
    pub edge_rows: usize,
    /// True when the energy ranges of the two branches overlap.
    pub intersect: bool,
    /// Smallest energy separation between any points of the two branches;
    /// zero when they intersect.
    pub min_gap: f64,
    /// Separation of the branch points adjacent to Δθ = 0.
    pub splitting: f64,
}

pub fn avoided_crossing(map: &SpectralMap) -> Result<AvoidedCrossing> {
    let (e_lo, e_hi) = (map.energy_axis[0], map.energy_axis[map.cols() - 1]);
    let mut below = Vec::new();
    let mut above = Vec::new();
    let mut edge_rows = 0;
    for (r, e) in row_argmin(map).into_iter().enumerate() {
        let Some(e) = e else { continue };
        if e == e_lo || e == e_hi {
            edge_rows += 1;
        }
        let o = map.angle_axis[r];
        if o < 0.0 {
            below.push((o, e));
        } else if o > 0.0 {
            above.push((o, e));
        }
    }
    if below.is_empty() || above.is_empty() {
        return Err(Error::Input("map has no rows on one side of the mode".into()));
    }
    let range = |b: &[(f64, f64)]| {
        b.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.1), hi.max(p.1))
        })
    };
    let (bl, bh) = range(&below);
    let (al, ah) = range(&above);
    let intersect = bl <= ah && al <= bh;
    let min_gap = if intersect { 0.0 } else { (al - bh).max(bl - ah) };
    let splitting = (above[0].1 - below[below.len() - 1].1).abs();
    Ok(AvoidedCrossing {
        below,
        above,
        edge_rows,
        intersect,
        min_gap,
        splitting,
    })
}
