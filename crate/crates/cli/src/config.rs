//! Run configuration: TOML text, command-line overrides, validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use xcavity::io::{read_text, toml_error};
use xcavity::scan_fit::{linspace, FitParameter, Solver};
use xcavity::{Error, Result};

/// Configuration used when no `--config` is given.
pub const DEFAULT_CONFIG: &str = r#"
stack = "builtin:paper_cavity"
solver = "parratt"
out = "out"
sublayers = 8
field_profile = false
fluorescence = false

[resonance]
omega0_ev = 10208.0
gamma_ev = 5.0
f0 = 0.36
dipole_sq = "fit"

[scan]
mode = "map"
theta_ref_deg = "mode"
mode_search_deg = [0.05, 1.0]
energy_min_ev = 10193.0
energy_max_ev = 10223.0
energy_count = 301
offset_min_deg = -0.01
offset_max_deg = 0.01
offset_count = 201
rocking_energy_ev = 10208.0
angle_min_deg = 0.05
angle_max_deg = 1.0
angle_count = 1901
spectrum_offset_deg = 0.0

[fit]
parameters = []
benchmark = "parratt"
offsets_deg = [0.0]
"#;

/// A number, or a keyword such as `"fit"`, `"xas"` or `"mode"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NumberOr {
    Number(f64),
    Word(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawResonance {
    pub omega0_ev: NumberOr,
    pub gamma_ev: NumberOr,
    pub f0: f64,
    pub dipole_sq: NumberOr,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xas: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawScan {
    pub mode: String,
    pub theta_ref_deg: NumberOr,
    pub mode_search_deg: [f64; 2],
    pub energy_min_ev: f64,
    pub energy_max_ev: f64,
    pub energy_count: usize,
    pub offset_min_deg: f64,
    pub offset_max_deg: f64,
    pub offset_count: usize,
    pub rocking_energy_ev: f64,
    pub angle_min_deg: f64,
    pub angle_max_deg: f64,
    pub angle_count: usize,
    pub spectrum_offset_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawFit {
    pub parameters: Vec<String>,
    pub benchmark: String,
    pub offsets_deg: Vec<f64>,
}

/// The file as written, after command-line overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub stack: String,
    pub solver: String,
    pub out: String,
    pub sublayers: usize,
    pub field_profile: bool,
    pub fluorescence: bool,
    pub resonance: RawResonance,
    pub scan: RawScan,
    pub fit: RawFit,
}

/// Values that may come from the XAS lineshape fit instead of the file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LineValue {
    Given(f64),
    FromXas,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThetaRef {
    Given(f64),
    /// First reflectance dip at ω0 inside the search range.
    FirstMode(f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScanMode {
    Map { energies: Vec<f64>, offsets: Vec<f64> },
    Rocking { energy: f64, angles: Vec<f64> },
    Spectrum { offset: f64, energies: Vec<f64> },
}

impl ScanMode {
    pub fn name(&self) -> &'static str {
        match self {
            ScanMode::Map { .. } => "map",
            ScanMode::Rocking { .. } => "rocking",
            ScanMode::Spectrum { .. } => "spectrum",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StackSource {
    Builtin(String),
    File(PathBuf),
}

/// Validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub raw: RawConfig,
    pub source: String,
    pub stack: StackSource,
    pub omega0: LineValue,
    pub gamma: LineValue,
    pub f0: f64,
    /// `None` when the dipole strength is to be fitted.
    pub dipole_sq: Option<f64>,
    pub xas: Option<PathBuf>,
    pub solvers: Vec<Solver>,
    pub theta_ref: ThetaRef,
    pub mode: ScanMode,
    pub fit: Vec<FitParameter>,
    pub benchmark: Solver,
    pub fit_offsets: Vec<f64>,
    pub out: PathBuf,
    pub field_profile: bool,
    pub fluorescence: bool,
}

/// Command-line settings that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub solver: Option<String>,
    pub mode: Option<String>,
    pub energy: Option<f64>,
    pub spectrum_offset: Option<f64>,
    pub fit: Vec<String>,
    pub benchmark: Option<String>,
    pub out: Option<PathBuf>,
    pub sublayers: Option<usize>,
    pub field_profile: bool,
    pub fluorescence: bool,
}

fn invalid(source: &str, what: String) -> Error {
    Error::Input(format!("{source}: {what}"))
}

pub fn parse_raw(text: &str, source: &str) -> Result<RawConfig> {
    toml::from_str(text).map_err(|e| toml_error(text, source, e))
}

impl RawConfig {
    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(s) = &o.solver {
            self.solver = s.clone();
        }
        if let Some(m) = &o.mode {
            self.scan.mode = m.clone();
        }
        if let Some(e) = o.energy {
            if self.scan.mode != "rocking" {
                return Err(Error::Input(
                    "--energy sets the rocking-curve energy; combine it with --rocking".into(),
                ));
            }
            self.scan.rocking_energy_ev = e;
        }
        if let Some(d) = o.spectrum_offset {
            self.scan.spectrum_offset_deg = d;
        }
        if !o.fit.is_empty() {
            self.fit.parameters = o.fit.clone();
        }
        if let Some(b) = &o.benchmark {
            self.fit.benchmark = b.clone();
        }
        if let Some(p) = &o.out {
            self.out = p.display().to_string();
        }
        if let Some(n) = o.sublayers {
            self.sublayers = n;
        }
        self.field_profile |= o.field_profile;
        self.fluorescence |= o.fluorescence;
        Ok(())
    }
}

fn range(source: &str, name: &str, lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(invalid(source, format!("{name}: need min < max, got [{lo}, {hi}]")));
    }
    if n < 2 {
        return Err(invalid(source, format!("{name}: count must be >= 2, got {n}")));
    }
    Ok(linspace(lo, hi, n))
}

fn line_value(source: &str, name: &str, v: &NumberOr) -> Result<LineValue> {
    match v {
        NumberOr::Number(x) if *x > 0.0 => Ok(LineValue::Given(*x)),
        NumberOr::Word(w) if w == "xas" => Ok(LineValue::FromXas),
        other => Err(invalid(
            source,
            format!("resonance.{name}: expected a positive number or \"xas\", got {other:?}"),
        )),
    }
}

fn fit_parameter(source: &str, name: &str) -> Result<FitParameter> {
    match name {
        "f0" => Ok(FitParameter::F0),
        "dipole" | "dipole_sq" => Ok(FitParameter::DipoleSq),
        other => Err(invalid(
            source,
            format!("unknown fit parameter {other:?} (f0 or dipole)"),
        )),
    }
}

impl RunConfig {
    /// Validate `raw`; relative paths resolve against `base`.
    pub fn from_raw(raw: RawConfig, source: &str, base: &Path) -> Result<Self> {
        let stack = match raw.stack.strip_prefix("builtin:") {
            Some(name) => StackSource::Builtin(name.to_string()),
            None => StackSource::File(base.join(&raw.stack)),
        };
        if let StackSource::Builtin(name) = &stack {
            if name != "paper_cavity" {
                return Err(invalid(source, format!("unknown builtin stack {name:?}")));
            }
        }
        if raw.sublayers == 0 {
            return Err(invalid(source, "sublayers must be >= 1".into()));
        }
        let solvers = match raw.solver.as_str() {
            "all" => vec![
                Solver::Parratt,
                Solver::Matrix,
                Solver::Greens {
                    sublayers: raw.sublayers,
                },
            ],
            "greens" => vec![Solver::Greens {
                sublayers: raw.sublayers,
            }],
            tag => vec![Solver::from_tag(tag).map_err(|e| invalid(source, e.to_string()))?],
        };

        let r = &raw.resonance;
        let omega0 = line_value(source, "omega0_ev", &r.omega0_ev)?;
        let gamma = line_value(source, "gamma_ev", &r.gamma_ev)?;
        if !(r.f0 >= 0.0) {
            return Err(invalid(source, format!("resonance.f0 must be >= 0, got {}", r.f0)));
        }
        let dipole_sq = match &r.dipole_sq {
            NumberOr::Number(x) if *x >= 0.0 => Some(*x),
            NumberOr::Word(w) if w == "fit" => None,
            other => {
                return Err(invalid(
                    source,
                    format!("resonance.dipole_sq: expected a number or \"fit\", got {other:?}"),
                ))
            }
        };
        let xas = r.xas.as_ref().map(|p| base.join(p));
        if xas.is_none() && (omega0 == LineValue::FromXas || gamma == LineValue::FromXas) {
            return Err(invalid(
                source,
                "resonance values taken from \"xas\" need resonance.xas".into(),
            ));
        }

        let s = &raw.scan;
        let theta_ref = match &s.theta_ref_deg {
            NumberOr::Number(t) if *t > 0.0 && *t < 90.0 => ThetaRef::Given(*t),
            NumberOr::Word(w) if w == "mode" => {
                let [lo, hi] = s.mode_search_deg;
                if !(lo > 0.0 && lo < hi && hi < 90.0) {
                    return Err(invalid(source, format!("scan.mode_search_deg: bad range [{lo}, {hi}]")));
                }
                ThetaRef::FirstMode(lo, hi)
            }
            other => {
                return Err(invalid(
                    source,
                    format!("scan.theta_ref_deg: expected an angle or \"mode\", got {other:?}"),
                ))
            }
        };
        let energies = || range(source, "scan.energy", s.energy_min_ev, s.energy_max_ev, s.energy_count);
        let mode = match s.mode.as_str() {
            "map" => ScanMode::Map {
                energies: energies()?,
                offsets: range(
                    source,
                    "scan.offset",
                    s.offset_min_deg,
                    s.offset_max_deg,
                    s.offset_count,
                )?,
            },
            "rocking" => {
                if !(s.rocking_energy_ev > 0.0) {
                    return Err(invalid(source, "scan.rocking_energy_ev must be > 0".into()));
                }
                if !(s.angle_min_deg > 0.0) {
                    return Err(invalid(source, "scan.angle_min_deg must be > 0".into()));
                }
                ScanMode::Rocking {
                    energy: s.rocking_energy_ev,
                    angles: range(source, "scan.angle", s.angle_min_deg, s.angle_max_deg, s.angle_count)?,
                }
            }
            "spectrum" => ScanMode::Spectrum {
                offset: s.spectrum_offset_deg,
                energies: energies()?,
            },
            other => {
                return Err(invalid(
                    source,
                    format!("scan.mode must be map, rocking or spectrum, got {other:?}"),
                ))
            }
        };

        let mut fit = Vec::new();
        for p in &raw.fit.parameters {
            let p = fit_parameter(source, p)?;
            if !fit.contains(&p) {
                fit.push(p);
            }
        }
        let greens = solvers.iter().any(|s| matches!(s, Solver::Greens { .. }));
        if dipole_sq.is_none() && greens && !fit.contains(&FitParameter::DipoleSq) {
            fit.push(FitParameter::DipoleSq);
        }
        let benchmark = match raw.fit.benchmark.as_str() {
            "greens" => Solver::Greens {
                sublayers: raw.sublayers,
            },
            tag => Solver::from_tag(tag).map_err(|e| invalid(source, e.to_string()))?,
        };
        if raw.fit.offsets_deg.is_empty() {
            return Err(invalid(source, "fit.offsets_deg must not be empty".into()));
        }
        if fit.contains(&FitParameter::F0) && matches!(benchmark, Solver::Matrix) {
            return Err(invalid(source, "f0 cannot be fitted against a matrix benchmark".into()));
        }
        if fit.contains(&FitParameter::DipoleSq) && matches!(benchmark, Solver::Greens { .. }) {
            return Err(invalid(
                source,
                "the dipole cannot be fitted against a greens benchmark".into(),
            ));
        }
        if raw.fluorescence && matches!(mode, ScanMode::Rocking { .. }) {
            return Err(invalid(source, "fluorescence needs a map or spectrum scan".into()));
        }

        Ok(Self {
            out: PathBuf::from(&raw.out),
            stack,
            omega0,
            gamma,
            f0: r.f0,
            dipole_sq,
            xas,
            solvers,
            theta_ref,
            mode,
            fit,
            benchmark,
            fit_offsets: raw.fit.offsets_deg.clone(),
            field_profile: raw.field_profile,
            fluorescence: raw.fluorescence,
            source: source.to_string(),
            raw,
        })
    }

    /// Read `path` (or the default configuration) and apply `overrides`.
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let (text, source, base) = match path {
            Some(p) => (
                read_text(p)?,
                p.display().to_string(),
                p.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(".")),
            ),
            None => (
                DEFAULT_CONFIG.to_string(),
                "builtin:default".to_string(),
                PathBuf::from("."),
            ),
        };
        let mut raw = parse_raw(&text, &source)?;
        raw.apply(overrides)?;
        Self::from_raw(raw, &source, &base)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_with(edit: impl FnOnce(&mut RawConfig)) -> Result<RunConfig> {
        let mut raw = parse_raw(DEFAULT_CONFIG, "t").unwrap();
        edit(&mut raw);
        RunConfig::from_raw(raw, "t", Path::new("."))
    }

    #[test]
    fn default_is_valid() {
        let c = default_with(|_| {}).unwrap();
        assert_eq!(c.solvers, vec![Solver::Parratt]);
        assert!(c.fit.is_empty());
        assert_eq!(c.theta_ref, ThetaRef::FirstMode(0.05, 1.0));
        match c.mode {
            ScanMode::Map { energies, offsets } => {
                assert_eq!((energies.len(), offsets.len()), (301, 201));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn shipped_config_matches_default() {
        let shipped = include_str!("../../../configs/run.toml");
        let mut a = parse_raw(shipped, "run.toml").unwrap();
        let b = parse_raw(DEFAULT_CONFIG, "default").unwrap();
        assert_eq!(a.stack, "paper_cavity.toml");
        a.stack = b.stack.clone();
        assert_eq!(a, b);
    }

    #[test]
    fn overrides_take_precedence() {
        let mut raw = parse_raw(DEFAULT_CONFIG, "t").unwrap();
        let o = Overrides {
            solver: Some("all".into()),
            mode: Some("rocking".into()),
            energy: Some(10100.0),
            sublayers: Some(4),
            fit: vec!["f0".into()],
            ..Default::default()
        };
        raw.apply(&o).unwrap();
        let c = RunConfig::from_raw(raw, "t", Path::new(".")).unwrap();
        assert_eq!(c.solvers[2], Solver::Greens { sublayers: 4 });
        assert!(matches!(c.mode, ScanMode::Rocking { energy, .. } if energy == 10100.0));
        assert_eq!(c.fit, vec![FitParameter::F0, FitParameter::DipoleSq]);
    }

    #[test]
    fn dipole_fit_only_when_greens_runs() {
        let c = default_with(|r| r.solver = "matrix".into()).unwrap();
        assert!(c.fit.is_empty());
        let c = default_with(|r| r.solver = "greens".into()).unwrap();
        assert_eq!(c.fit, vec![FitParameter::DipoleSq]);
    }

    #[test]
    fn energy_needs_rocking() {
        let mut raw = parse_raw(DEFAULT_CONFIG, "t").unwrap();
        let o = Overrides {
            energy: Some(10100.0),
            ..Default::default()
        };
        assert!(raw.apply(&o).is_err());
    }

    #[test]
    fn invariants_are_checked() {
        assert!(default_with(|r| r.scan.energy_count = 1).is_err());
        assert!(default_with(|r| r.scan.offset_min_deg = 0.02).is_err());
        assert!(default_with(|r| r.scan.mode = "both".into()).is_err());
        assert!(default_with(|r| r.solver = "exact".into()).is_err());
        assert!(default_with(|r| r.sublayers = 0).is_err());
        assert!(default_with(|r| r.resonance.gamma_ev = NumberOr::Word("xas".into())).is_err());
        assert!(default_with(|r| r.resonance.dipole_sq = NumberOr::Word("guess".into())).is_err());
        assert!(default_with(|r| r.fit.parameters = vec!["gamma".into()]).is_err());
    }

    #[test]
    fn syntax_errors_carry_the_line() {
        let text = DEFAULT_CONFIG.replace("sublayers = 8", "sublayers = eight");
        let line = text.lines().position(|l| l.contains("eight")).unwrap() + 1;
        match parse_raw(&text, "cfg.toml").unwrap_err() {
            Error::Parse { path, line: l, .. } => {
                assert_eq!(path, "cfg.toml");
                assert_eq!(l, line);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = DEFAULT_CONFIG.replace("solver = \"parratt\"", "solver = \"parratt\"\nsolvr = 1");
        assert!(matches!(parse_raw(&text, "c").unwrap_err(), Error::Parse { .. }));
    }
}
