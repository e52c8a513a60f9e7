//! Executes a validated [`RunConfig`] and writes its outputs.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};

use xcavity::dispersion::{fit_xas_lineshape, ResonanceLine};
use xcavity::io::{load_stack, load_xas, paper_cavity, write_columns, write_map, write_text};
use xcavity::matrix_model::{bare_cavity, cavity_shifts, AtomicSheet};
use xcavity::parallel::{current_threads, map_indexed, Execution, PARALLEL};
use xcavity::parratt::{field_profile, FluorescenceOptions};
use xcavity::scan_fit::{
    field_map, fit_parameter, fluorescence_map, linspace, locate_first_mode, reflection, scan_map, spectrum,
    FitParameter, FitWindow, MapGrid, Solver, SpectralMap,
};
use xcavity::stack::{CavityStack, ScanPoint};
use xcavity::{Error, Result};

use crate::config::{LineValue, RunConfig, ScanMode, StackSource, ThetaRef};

const EXEC: Execution = Execution::Parallel;
/// Depth step of the field-profile file in nm.
const PROFILE_STEP: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct FitRecord {
    pub parameter: FitParameter,
    pub solver: Solver,
    pub value: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub theta_ref: f64,
    /// Line used by the Parratt solver.
    pub line: ResonanceLine,
    pub fits: Vec<FitRecord>,
    pub outputs: Vec<PathBuf>,
    pub manifest: PathBuf,
}

struct Outputs {
    dir: PathBuf,
    written: Vec<PathBuf>,
    entries: Vec<Value>,
}

impl Outputs {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn record(&mut self, name: &str, entry: Value) {
        self.written.push(self.path(name));
        let mut e = json!({ "file": name });
        if let (Value::Object(a), Value::Object(b)) = (&mut e, entry) {
            a.extend(b);
        }
        self.entries.push(e);
    }

    fn map(&mut self, name: &str, map: &SpectralMap, params: &BTreeMap<String, String>) -> Result<()> {
        write_map(&self.path(name), map, params)?;
        let masked = map.error_mask.iter().filter(|&&m| m).count();
        self.record(
            name,
            json!({
                "kind": "map",
                "quantity": map.quantity.tag(),
                "model": map.model_tag,
                "rows": map.rows(),
                "cols": map.cols(),
                "masked": masked,
            }),
        );
        Ok(())
    }

    fn columns(&mut self, name: &str, kind: &str, comments: &[String], names: &[&str], cols: &[&[f64]]) -> Result<()> {
        write_columns(&self.path(name), comments, names, cols)?;
        self.record(name, json!({ "kind": kind, "columns": names, "rows": cols[0].len() }));
        Ok(())
    }
}

fn file_tag(solver: Solver) -> &'static str {
    match solver {
        Solver::Parratt => "parratt",
        Solver::Matrix => "matrix",
        Solver::Greens { .. } => "greens",
    }
}

fn load(config: &RunConfig) -> Result<(CavityStack, String)> {
    match &config.stack {
        StackSource::Builtin(name) => Ok((paper_cavity()?, format!("builtin:{name}"))),
        StackSource::File(p) => Ok((load_stack(p)?, p.display().to_string())),
    }
}

fn resolve_line(config: &RunConfig, manifest: &mut Value) -> Result<ResonanceLine> {
    let fitted = match &config.xas {
        Some(path) => {
            let (e, mu) = load_xas(path)?;
            let d = fit_xas_lineshape(&e, &mu)?;
            manifest["xas_fit"] = json!({
                "file": path.display().to_string(),
                "omega0_ev": d.lorentzian.omega0,
                "gamma_ev": d.lorentzian.gamma,
                "peak": d.lorentzian.f0,
                "edge_center_ev": d.continuum.center,
                "edge_width_ev": d.continuum.width,
                "edge_amplitude": d.continuum.amplitude,
                "background": d.background,
                "residual_norm": d.residual_norm,
                "degenerate": d.degenerate,
            });
            Some(d)
        }
        None => None,
    };
    let value = |v: LineValue, name: &str, pick: fn(&ResonanceLine) -> f64| -> Result<f64> {
        match (v, &fitted) {
            (LineValue::Given(x), _) => Ok(x),
            (LineValue::FromXas, Some(d)) if !d.degenerate => Ok(pick(&d.lorentzian)),
            (LineValue::FromXas, _) => Err(Error::DataQuality(format!(
                "{name}: the absorption curve has no resolvable white line"
            ))),
        }
    };
    let omega0 = value(config.omega0, "omega0_ev", |l| l.omega0)?;
    let gamma = value(config.gamma, "gamma_ev", |l| l.gamma)?;
    ResonanceLine::new(omega0, gamma, config.f0, config.dipole_sq.unwrap_or(0.0))
}

fn fit_solver(parameter: FitParameter, sublayers: usize) -> Solver {
    match parameter {
        FitParameter::F0 => Solver::Matrix,
        FitParameter::DipoleSq => Solver::Greens { sublayers },
    }
}

fn fit_record(rec: &FitRecord, benchmark: Solver) -> Value {
    json!({
        "parameter": rec.parameter.name(),
        "model": rec.solver.tag(),
        "benchmark": benchmark.tag(),
        "value": rec.value,
        "residual": rec.residual,
        "iterations": rec.iterations,
        "converged": rec.converged,
        "points": rec.points,
    })
}

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

/// Run `config`, writing every output and `manifest.json` into its output
/// directory.
pub fn run(config: &RunConfig) -> Result<RunReport> {
    let started = Instant::now();
    let mut timing = BTreeMap::new();
    let mut manifest = json!({
        "program": "simulate",
        "versions": {
            "cli": env!("CARGO_PKG_VERSION"),
            "library": xcavity::VERSION,
            "parallel": PARALLEL,
        },
        "config": {
            "source": config.source,
            "effective": config.raw,
        },
    });

    let (stack, stack_source) = load(config)?;
    let line = resolve_line(config, &mut manifest)?;
    let sublayers = config.raw.sublayers;
    let theta_ref = match config.theta_ref {
        ThetaRef::Given(t) => t,
        ThetaRef::FirstMode(lo, hi) => locate_first_mode(&stack, line.omega0, (lo, hi))?,
    };
    timing.insert("setup", started.elapsed().as_secs_f64());

    std::fs::create_dir_all(&config.out).map_err(|e| Error::Io {
        path: config.out.display().to_string(),
        reason: e.to_string(),
    })?;
    let mut out = Outputs {
        dir: config.out.clone(),
        written: Vec::new(),
        entries: Vec::new(),
    };

    // each solver gets its own copy of the line, updated by the fits
    let mut matrix_line = line;
    let mut greens_line = line;
    let mut fits = Vec::new();
    if !config.fit.is_empty() {
        let t = Instant::now();
        let s = &config.raw.scan;
        let energies = linspace(s.energy_min_ev, s.energy_max_ev, s.energy_count.max(2));
        let grid = MapGrid::new(energies, config.fit_offsets.clone(), theta_ref)?;
        let bench_line = match config.benchmark {
            Solver::Parratt => line,
            Solver::Matrix => matrix_line,
            Solver::Greens { .. } => greens_line,
        };
        let benchmark = scan_map(&stack, config.benchmark, &grid, &bench_line, EXEC);
        let lo = config.fit_offsets.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = config.fit_offsets.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let window = FitWindow {
            energy: (s.energy_min_ev, s.energy_max_ev),
            offset: (lo, hi),
        };
        let mut records = Vec::new();
        for &parameter in &config.fit {
            let solver = fit_solver(parameter, sublayers);
            let start = match parameter {
                FitParameter::F0 => matrix_line,
                FitParameter::DipoleSq => greens_line,
            };
            let r = fit_parameter(&benchmark, &stack, solver, &start, parameter, &window, EXEC)?;
            match parameter {
                FitParameter::F0 => matrix_line = matrix_line.with_f0(r.value),
                FitParameter::DipoleSq => greens_line = greens_line.with_dipole_sq(r.value),
            }
            let rec = FitRecord {
                parameter,
                solver,
                value: r.value,
                residual: r.residual,
                iterations: r.iterations,
                converged: r.converged,
                points: r.points,
            };
            let name = format!("fit_{}.json", parameter.name());
            let value = fit_record(&rec, config.benchmark);
            write_text(&out.path(&name), &json_text(&value))?;
            out.record(&name, json!({ "kind": "fit" }));
            records.push(value);
            fits.push(rec);
        }
        manifest["fits"] = Value::Array(records);
        timing.insert("fit", t.elapsed().as_secs_f64());
    }

    let line_for = |solver: Solver| match solver {
        Solver::Parratt => line,
        Solver::Matrix => matrix_line,
        Solver::Greens { .. } => greens_line,
    };
    let params = |solver: Solver| -> BTreeMap<String, String> {
        let l = line_for(solver);
        BTreeMap::from([
            ("stack".to_string(), stack_source.clone()),
            ("omega0_ev".to_string(), l.omega0.to_string()),
            ("gamma_ev".to_string(), l.gamma.to_string()),
            ("f0".to_string(), l.f0.to_string()),
            ("dipole_sq".to_string(), l.dipole_sq.to_string()),
        ])
    };
    let header = |solver: Solver| -> Vec<String> {
        let mut h = vec![
            format!("xcavity {} curve", config.mode.name()),
            format!("model = {}", solver.tag()),
        ];
        h.extend(params(solver).into_iter().map(|(k, v)| format!("{k} = {v}")));
        h.push(format!("theta_ref_deg = {theta_ref}"));
        h
    };

    let t = Instant::now();
    for &solver in &config.solvers {
        let l = line_for(solver);
        let tag = file_tag(solver);
        match &config.mode {
            ScanMode::Map { energies, offsets } => {
                let grid = MapGrid::new(energies.clone(), offsets.clone(), theta_ref)?;
                let map = scan_map(&stack, solver, &grid, &l, EXEC);
                out.map(&format!("map_{tag}.dat"), &map, &params(solver))?;
            }
            ScanMode::Rocking { energy, angles } => {
                let r: Vec<f64> = map_indexed(EXEC, angles.len(), |i| {
                    let p = ScanPoint::new(*energy, angles[i])?;
                    Ok(reflection(&stack, solver, &p, &l)?.norm_sqr())
                })
                .into_iter()
                .collect::<Result<_>>()?;
                let mut h = header(solver);
                h.push(format!("energy_ev = {energy}"));
                out.columns(
                    &format!("rocking_{tag}.dat"),
                    "rocking",
                    &h,
                    &["angle_deg", "reflectance"],
                    &[angles, &r],
                )?;
            }
            ScanMode::Spectrum { offset, energies } => {
                let r = spectrum(&stack, solver, theta_ref + offset, energies, &l, EXEC)?;
                let mut h = header(solver);
                h.push(format!("offset_deg = {offset}"));
                out.columns(
                    &format!("spectrum_{tag}.dat"),
                    "spectrum",
                    &h,
                    &["energy_ev", "reflectance"],
                    &[energies, &r],
                )?;
            }
        }
    }
    timing.insert("scan", t.elapsed().as_secs_f64());

    if let (ScanMode::Rocking { energy, angles }, true) = (&config.mode, config.solvers.contains(&Solver::Matrix)) {
        let sheet = AtomicSheet::from_stack(&stack)?;
        let rows: Vec<[f64; 4]> = map_indexed(EXEC, angles.len(), |i| {
            let resp = bare_cavity(&stack, &ScanPoint::new(*energy, angles[i])?, sheet.depth)?;
            let c = cavity_shifts(&resp, &matrix_line, &sheet);
            Ok([resp.eta.re, resp.eta.im, c.gamma_c, c.delta_c])
        })
        .into_iter()
        .collect::<Result<_>>()?;
        let col = |k: usize| rows.iter().map(|r| r[k]).collect::<Vec<f64>>();
        let (a, b, c, d) = (col(0), col(1), col(2), col(3));
        let mut h = header(Solver::Matrix);
        h.push(format!("energy_ev = {energy}"));
        out.columns(
            "cavity_factors.dat",
            "cavity_factors",
            &h,
            &["angle_deg", "re_eta", "im_eta", "gamma_c_ev", "delta_c_ev"],
            &[angles, &a, &b, &c, &d],
        )?;
    }

    if config.field_profile {
        let t = Instant::now();
        write_field(&stack, &line, theta_ref, config, &mut out, &params(Solver::Parratt))?;
        timing.insert("field_profile", t.elapsed().as_secs_f64());
    }

    if config.fluorescence {
        let t = Instant::now();
        let opts = FluorescenceOptions::default();
        match &config.mode {
            ScanMode::Map { energies, offsets } => {
                let grid = MapGrid::new(energies.clone(), offsets.clone(), theta_ref)?;
                let map = fluorescence_map(&stack, &grid, &line, &opts, EXEC);
                out.map("fluorescence_map.dat", &map, &params(Solver::Parratt))?;
            }
            ScanMode::Spectrum { offset, energies } => {
                let grid = MapGrid::new(energies.clone(), vec![*offset], theta_ref)?;
                let map = fluorescence_map(&stack, &grid, &line, &opts, EXEC);
                if let Some(e) = map.errors.first() {
                    return Err(Error::Input(format!("fluorescence: {e}")));
                }
                let mut h = header(Solver::Parratt);
                h.push(format!("offset_deg = {offset}"));
                out.columns(
                    "fluorescence.dat",
                    "fluorescence",
                    &h,
                    &["energy_ev", "fluorescence"],
                    &[energies, map.row(0)],
                )?;
            }
            ScanMode::Rocking { .. } => unreachable!("rejected during validation"),
        }
        timing.insert("fluorescence", t.elapsed().as_secs_f64());
    }

    timing.insert("total", started.elapsed().as_secs_f64());
    manifest["inputs"] = json!({
        "stack": stack_source,
        "layers": stack.layers().iter().map(|l| l.label.clone()).collect::<Vec<_>>(),
        "xas": config.xas.as_ref().map(|p| p.display().to_string()),
    });
    manifest["resonance"] = json!({
        "omega0_ev": line.omega0,
        "gamma_ev": line.gamma,
        "f0": line.f0,
        "matrix_f0": matrix_line.f0,
        "dipole_sq": config
            .dipole_sq
            .or_else(|| fits.iter().find(|f| f.parameter == FitParameter::DipoleSq).map(|f| f.value)),
        "theta_ref_deg": theta_ref,
    });
    manifest["outputs"] = Value::Array(out.entries.clone());
    let stamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    // the only non-reproducible part of the manifest
    manifest["run"] = json!({
        "timestamp_unix": stamp,
        "threads": current_threads(),
        "timing_s": timing,
    });
    let manifest_path = out.path("manifest.json");
    write_text(&manifest_path, &json_text(&manifest))?;

    Ok(RunReport {
        theta_ref,
        line,
        fits,
        outputs: out.written,
        manifest: manifest_path,
    })
}

fn write_field(
    stack: &CavityStack,
    line: &ResonanceLine,
    theta_ref: f64,
    config: &RunConfig,
    out: &mut Outputs,
    params: &BTreeMap<String, String>,
) -> Result<()> {
    let p = ScanPoint::new(line.omega0, theta_ref)?;
    let bottom = stack.total_thickness() + 20.0;
    let n = ((bottom + 10.0) / PROFILE_STEP).round() as usize + 1;
    let depths = linspace(-10.0, bottom, n);
    let on = field_profile(stack, &p, Some(line), &depths)?;
    let off = field_profile(stack, &p, None, &depths)?;
    let mut h = vec!["xcavity field profile".to_string(), format!("theta_deg = {theta_ref}")];
    h.extend(params.iter().map(|(k, v)| format!("{k} = {v}")));
    out.columns(
        "field_profile.dat",
        "field_profile",
        &h,
        &["depth_nm", "intensity", "intensity_bare"],
        &[&depths, &on.intensity, &off.intensity],
    )?;
    if let ScanMode::Map { energies, offsets } = &config.mode {
        let z = stack
            .resonant_center()
            .ok_or_else(|| Error::InvalidStack("field map needs a resonant layer".into()))?;
        let grid = MapGrid::new(energies.clone(), offsets.clone(), theta_ref)?;
        let mut params = params.clone();
        params.insert("depth_nm".into(), z.to_string());
        out.map("field_map.dat", &field_map(stack, &grid, line, z, EXEC), &params)?;
    }
    Ok(())
}
