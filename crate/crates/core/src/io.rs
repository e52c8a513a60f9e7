//! Text formats: scattering-factor tables, stack descriptions, XAS
//! curves, spectral maps and column files.
//!
//! Map files carry `#` header lines with the axes and tags, then one row
//! of values per angle offset. Values are written with 17 significant
//! digits so a file re-parses to the identical doubles.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use crate::dispersion::ScatteringFactorTable;
use crate::scan_fit::{Quantity, SpectralMap};
use crate::stack::{CavityStack, Layer, Thickness};
use crate::{Error, Result, AVOGADRO_NM3};

const BUILTIN: [(&str, &str); 4] = [
    ("Pt", include_str!("../data/Pt.nff")),
    ("C", include_str!("../data/C.nff")),
    ("Si", include_str!("../data/Si.nff")),
    ("W", include_str!("../data/W.nff")),
];

/// Parsed `(energy, f1, f2)` columns plus the atomic mass header.
#[derive(Debug, Clone, PartialEq)]
pub struct NffTable {
    pub name: String,
    pub atomic_mass: Option<f64>,
    pub energies: Vec<f64>,
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
}

impl NffTable {
    /// Scattering lengths at the given number density (nm⁻³).
    pub fn to_table(&self, density: f64) -> Result<ScatteringFactorTable> {
        ScatteringFactorTable::from_f1_f2(&self.name, self.energies.clone(), &self.f1, &self.f2, density)
    }
}

fn parse_err(path: &str, line: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        reason: reason.into(),
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| io_err(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

/// Whitespace-separated numeric columns; `#` starts a comment.
pub fn parse_columns(text: &str, source: &str, ncols: usize) -> Result<Vec<Vec<f64>>> {
    let mut cols = vec![Vec::new(); ncols];
    for (i, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        if fields.len() < ncols {
            return Err(parse_err(
                source,
                i + 1,
                format!("expected {ncols} columns, found {}", fields.len()),
            ));
        }
        for (c, f) in fields.iter().take(ncols).enumerate() {
            let v: f64 = f
                .parse()
                .map_err(|_| parse_err(source, i + 1, format!("not a number: {f}")))?;
            cols[c].push(v);
        }
    }
    Ok(cols)
}

/// Parse an `energy f1 f2` table. Header comments may carry
/// `atomic_mass = <g/mol>`.
pub fn parse_nff(text: &str, name: &str, source: &str) -> Result<NffTable> {
    let mut atomic_mass = None;
    for (i, line) in text.lines().enumerate() {
        if let Some(rest) = line.trim().strip_prefix('#') {
            if let Some((k, v)) = rest.split_once('=') {
                if k.trim() == "atomic_mass" {
                    atomic_mass = Some(
                        v.trim()
                            .parse()
                            .map_err(|_| parse_err(source, i + 1, "bad atomic_mass"))?,
                    );
                }
            }
        }
    }
    let mut cols = parse_columns(text, source, 3)?;
    if cols[0].len() < 3 {
        return Err(parse_err(source, 0, "table needs at least 3 rows"));
    }
    if let Some(i) = cols[0].windows(2).position(|w| !(w[1] > w[0])) {
        return Err(parse_err(
            source,
            0,
            format!("energies not increasing at row {}", i + 2),
        ));
    }
    if cols[2].iter().any(|&f2| f2 < 0.0) {
        return Err(parse_err(source, 0, "f2 must be >= 0"));
    }
    let f2 = cols.pop().unwrap();
    let f1 = cols.pop().unwrap();
    let energies = cols.pop().unwrap();
    Ok(NffTable {
        name: name.to_string(),
        atomic_mass,
        energies,
        f1,
        f2,
    })
}

pub fn builtin_names() -> Vec<&'static str> {
    BUILTIN.iter().map(|b| b.0).collect()
}

pub fn builtin_table(symbol: &str) -> Result<NffTable> {
    let (_, text) = BUILTIN
        .iter()
        .find(|b| b.0 == symbol)
        .ok_or_else(|| Error::Input(format!("no builtin table for {symbol}")))?;
    parse_nff(text, symbol, &format!("builtin:{symbol}"))
}

pub fn load_nff(path: &Path) -> Result<NffTable> {
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_nff(&read_text(path)?, &name, &path.display().to_string())
}

/// Builtin symbol, or a path relative to `base`.
pub fn resolve_table(name: &str, base: &Path) -> Result<NffTable> {
    if builtin_names().contains(&name) {
        builtin_table(name)
    } else {
        load_nff(&base.join(name))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum ThicknessSpec {
    Value(f64),
    Word(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComponentSpec {
    table: String,
    #[serde(default = "one")]
    count: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerSpec {
    label: String,
    thickness_nm: Option<ThicknessSpec>,
    delta: Option<f64>,
    beta: Option<f64>,
    material: Option<Vec<ComponentSpec>>,
    density_g_cm3: Option<f64>,
    density_nm3: Option<f64>,
    #[serde(default)]
    resonant: bool,
    resonant_density_nm3: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct StackSpec {
    layer: Vec<LayerSpec>,
}

/// Line number (1-based) of a byte offset.
fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// TOML error with the 1-based line of its span.
pub fn toml_error(text: &str, source: &str, e: toml::de::Error) -> Error {
    let line = e.span().map(|s| line_of(text, s.start)).unwrap_or(0);
    parse_err(source, line, e.message().to_string())
}

fn build_layer(spec: &LayerSpec, index: usize, base: &Path, source: &str) -> Result<Layer> {
    let bad = |reason: String| Error::InvalidLayer {
        index,
        label: spec.label.clone(),
        reason: format!("{reason} ({source})"),
    };
    let thickness = match &spec.thickness_nm {
        None => Thickness::SemiInfinite,
        Some(ThicknessSpec::Value(d)) => Thickness::Finite(*d),
        Some(ThicknessSpec::Word(w)) if w == "inf" => Thickness::SemiInfinite,
        Some(ThicknessSpec::Word(w)) => return Err(bad(format!("thickness {w:?} is not a number or \"inf\""))),
    };
    let layer = match (&spec.material, spec.delta, spec.beta) {
        (None, None, None) => {
            if index == 0 {
                Layer::vacuum(&spec.label)
            } else {
                Layer::constant(&spec.label, thickness, 0.0, 0.0)
            }
        }
        (None, d, b) => Layer::constant(&spec.label, thickness, d.unwrap_or(0.0), b.unwrap_or(0.0)),
        (Some(parts), None, None) => {
            if parts.is_empty() {
                return Err(bad("empty material list".into()));
            }
            let tables = parts
                .iter()
                .map(|c| resolve_table(&c.table, base))
                .collect::<Result<Vec<_>>>()?;
            let density = match (spec.density_nm3, spec.density_g_cm3) {
                (Some(n), None) => n,
                (None, Some(g)) => {
                    let mut mass = 0.0;
                    for (t, c) in tables.iter().zip(parts) {
                        mass += c.count
                            * t.atomic_mass
                                .ok_or_else(|| bad(format!("table {} has no atomic_mass", t.name)))?;
                    }
                    g * AVOGADRO_NM3 / mass
                }
                _ => return Err(bad("give exactly one of density_g_cm3 or density_nm3".into())),
            };
            let converted = tables.iter().map(|t| t.to_table(density)).collect::<Result<Vec<_>>>()?;
            let table = if converted.len() == 1 && parts[0].count == 1.0 {
                converted.into_iter().next().unwrap()
            } else {
                let comps: Vec<_> = converted.iter().zip(parts).map(|(t, c)| (t, c.count)).collect();
                ScatteringFactorTable::compound(&spec.label, &comps, density)?
            };
            Layer::tabulated(&spec.label, thickness, Arc::new(table))
        }
        _ => return Err(bad("material and delta/beta are exclusive".into())),
    };
    if spec.resonant {
        let density = spec
            .resonant_density_nm3
            .or(spec.density_nm3)
            .or_else(|| match &layer.index {
                crate::stack::IndexSource::Table(t) => Some(t.atom_density),
                _ => None,
            })
            .ok_or_else(|| bad("resonant layer needs resonant_density_nm3".into()))?;
        Ok(layer.resonant(density))
    } else if spec.resonant_density_nm3.is_some() {
        Err(bad("resonant_density_nm3 without resonant = true".into()))
    } else {
        Ok(layer)
    }
}

/// Parse a stack description. Table paths resolve against `base`.
pub fn parse_stack(text: &str, source: &str, base: &Path) -> Result<CavityStack> {
    let spec: StackSpec = toml::from_str(text).map_err(|e| toml_error(text, source, e))?;
    let layers = spec
        .layer
        .iter()
        .enumerate()
        .map(|(i, l)| build_layer(l, i, base, source))
        .collect::<Result<Vec<_>>>()?;
    CavityStack::new(layers)
}

pub fn load_stack(path: &Path) -> Result<CavityStack> {
    let base = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    parse_stack(&read_text(path)?, &path.display().to_string(), &base)
}

/// The Pt/C/WSi₂/C/Pt cavity on Si used throughout the examples.
pub const PAPER_CAVITY: &str = r#"
[[layer]]
label = "vacuum"

[[layer]]
label = "Pt top"
thickness_nm = 2.1
material = [{ table = "Pt" }]
density_g_cm3 = 21.45

[[layer]]
label = "C upper"
thickness_nm = 28.2
material = [{ table = "C" }]
density_g_cm3 = 2.2

[[layer]]
label = "WSi2"
thickness_nm = 2.0
material = [{ table = "W", count = 1 }, { table = "Si", count = 2 }]
density_nm3 = 12.42
resonant = true

[[layer]]
label = "C lower"
thickness_nm = 28.2
material = [{ table = "C" }]
density_g_cm3 = 2.2

[[layer]]
label = "Pt bottom"
thickness_nm = 16.0
material = [{ table = "Pt" }]
density_g_cm3 = 21.45

[[layer]]
label = "Si"
thickness_nm = "inf"
material = [{ table = "Si" }]
density_g_cm3 = 2.33
"#;

pub fn paper_cavity() -> Result<CavityStack> {
    parse_stack(PAPER_CAVITY, "builtin:paper_cavity", Path::new("."))
}

/// Two-column `energy absorption` file.
pub fn load_xas(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut cols = parse_columns(&read_text(path)?, &path.display().to_string(), 2)?;
    let mu = cols.pop().unwrap();
    Ok((cols.pop().unwrap(), mu))
}

fn fmt_value(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_row(values: &[f64]) -> String {
    values.iter().map(|&v| fmt_value(v)).collect::<Vec<_>>().join(" ")
}

/// Serialize a map. `params` become `# param key = value` lines.
pub fn format_map(map: &SpectralMap, params: &BTreeMap<String, String>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# xcavity spectral map");
    let _ = writeln!(s, "# quantity = {}", map.quantity.tag());
    let _ = writeln!(s, "# model = {}", map.model_tag);
    let _ = writeln!(s, "# theta_ref_deg = {}", fmt_value(map.theta_ref));
    let _ = writeln!(s, "# rows = {}", map.rows());
    let _ = writeln!(s, "# cols = {}", map.cols());
    for (k, v) in params {
        let _ = writeln!(s, "# param {k} = {v}");
    }
    let _ = writeln!(s, "# offset_deg = {}", fmt_row(&map.angle_axis));
    let _ = writeln!(s, "# energy_eV = {}", fmt_row(&map.energy_axis));
    let masked: Vec<String> = map
        .error_mask
        .iter()
        .enumerate()
        .filter(|(_, &m)| m)
        .map(|(i, _)| i.to_string())
        .collect();
    if !masked.is_empty() {
        let _ = writeln!(s, "# masked = {}", masked.join(" "));
    }
    for e in &map.errors {
        let _ = writeln!(s, "# error {}", e.replace('\n', " "));
    }
    for r in 0..map.rows() {
        let _ = writeln!(s, "{}", fmt_row(map.row(r)));
    }
    s
}

pub fn write_map(path: &Path, map: &SpectralMap, params: &BTreeMap<String, String>) -> Result<()> {
    write_text(path, &format_map(map, params))
}

fn parse_floats(s: &str, source: &str, line: usize) -> Result<Vec<f64>> {
    s.split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| parse_err(source, line, format!("not a number: {t}")))
        })
        .collect()
}

/// Parsed map file: the map and its `param` header entries.
pub fn parse_map(text: &str, source: &str) -> Result<(SpectralMap, BTreeMap<String, String>)> {
    let mut header: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
    let mut params = BTreeMap::new();
    let mut errors = Vec::new();
    let mut values = Vec::new();
    let mut rows_seen = 0;
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        if let Some(rest) = line.strip_prefix("# ") {
            if let Some(e) = rest.strip_prefix("error ") {
                errors.push(e.to_string());
            } else if let Some(p) = rest.strip_prefix("param ") {
                let (k, v) = p
                    .split_once(" = ")
                    .ok_or_else(|| parse_err(source, n, "malformed param line"))?;
                params.insert(k.to_string(), v.to_string());
            } else if let Some((k, v)) = rest.split_once(" = ") {
                header.insert(k, (n, v));
            }
        } else if !line.trim().is_empty() && !line.starts_with('#') {
            values.extend(parse_floats(line, source, n)?);
            rows_seen += 1;
        }
    }
    let get = |k: &str| {
        header
            .get(k)
            .copied()
            .ok_or_else(|| parse_err(source, 0, format!("missing header {k}")))
    };
    let count = |k: &str| -> Result<usize> {
        let (n, v) = get(k)?;
        v.trim().parse().map_err(|_| parse_err(source, n, format!("bad {k}")))
    };
    let (rows, cols) = (count("rows")?, count("cols")?);
    let (qn, qv) = get("quantity")?;
    let quantity = Quantity::from_tag(qv.trim()).map_err(|e| parse_err(source, qn, e.to_string()))?;
    let (tn, tv) = get("theta_ref_deg")?;
    let theta_ref = tv
        .trim()
        .parse()
        .map_err(|_| parse_err(source, tn, "bad theta_ref_deg"))?;
    let (on, ov) = get("offset_deg")?;
    let angle_axis = parse_floats(ov, source, on)?;
    let (en, ev) = get("energy_eV")?;
    let energy_axis = parse_floats(ev, source, en)?;
    if angle_axis.len() != rows || energy_axis.len() != cols {
        return Err(parse_err(source, 0, "axis lengths disagree with rows/cols"));
    }
    if rows_seen != rows || values.len() != rows * cols {
        return Err(parse_err(
            source,
            0,
            format!(
                "expected {rows}x{cols} values, found {} in {rows_seen} rows",
                values.len()
            ),
        ));
    }
    let mut error_mask = vec![false; rows * cols];
    if let Ok((mn, mv)) = get("masked") {
        for t in mv.split_whitespace() {
            let i: usize = t.parse().map_err(|_| parse_err(source, mn, "bad mask index"))?;
            *error_mask
                .get_mut(i)
                .ok_or_else(|| parse_err(source, mn, "mask index out of range"))? = true;
        }
    }
    let model_tag = get("model")?.1.trim().to_string();
    Ok((
        SpectralMap {
            energy_axis,
            angle_axis,
            theta_ref,
            values,
            quantity,
            model_tag,
            error_mask,
            errors,
        },
        params,
    ))
}

pub fn read_map(path: &Path) -> Result<(SpectralMap, BTreeMap<String, String>)> {
    parse_map(&read_text(path)?, &path.display().to_string())
}

/// Column file with a `#` header naming each column.
pub fn format_columns(comments: &[String], names: &[&str], columns: &[&[f64]]) -> Result<String> {
    if names.len() != columns.len() || columns.is_empty() {
        return Err(Error::Input("column names and data disagree".into()));
    }
    let n = columns[0].len();
    if columns.iter().any(|c| c.len() != n) {
        return Err(Error::Input("columns differ in length".into()));
    }
    let mut s = String::new();
    for c in comments {
        let _ = writeln!(s, "# {c}");
    }
    let _ = writeln!(s, "# {}", names.join("  "));
    for i in 0..n {
        let row: Vec<String> = columns.iter().map(|c| fmt_value(c[i])).collect();
        let _ = writeln!(s, "{}", row.join(" "));
    }
    Ok(s)
}

pub fn write_columns(path: &Path, comments: &[String], names: &[&str], columns: &[&[f64]]) -> Result<()> {
    write_text(path, &format_columns(comments, names, columns)?)
}
