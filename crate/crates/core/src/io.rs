//! System files, deterministic report output and CSV trajectories.
//!
//! A system file looks like
//!
//! ```json
//! { "T": 1.0,
//!   "a": { "c0": { "const": 1.0 }, "c1": { "const": 1.0 } },
//!   "d": { "c0": { "const": -0.8, "harmonics": [[1, 0.0, 0.3]] } } }
//! ```
//!
//! Missing coefficients and components are zero. A component may instead be
//! tabulated as `{ "samples": [...], "fit_harmonics": K }` with samples at
//! `i·T/N`; it is then fitted and the fit residual reported.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::coefficients::{ModelError, QuaternionCoefficient, RiccatiSystem};
use crate::fourier::{Harmonic, RealFourierSeries};
use crate::integrator::Trajectory;
use crate::quaternion::SignedComponents;

#[derive(Debug, Error)]
pub enum InputError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid field `{field}`: {message}")]
    Validation { field: String, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    InFile { path: PathBuf, source: Box<InputError> },
}

impl InputError {
    fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Validation { field: field.into(), message: message.into() }
    }

    fn from_json(e: serde_json::Error) -> Self {
        Self::Parse { line: e.line(), column: e.column(), message: e.to_string() }
    }

    fn in_file(self, path: &Path) -> Self {
        Self::InFile { path: path.to_path_buf(), source: Box::new(self) }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesEntry {
    #[serde(rename = "const", default, skip_serializing_if = "Option::is_none")]
    pub constant: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub harmonics: Vec<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_harmonics: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c0: Option<SeriesEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<SeriesEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c2: Option<SeriesEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c3: Option<SeriesEntry>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<CoefficientEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<CoefficientEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<CoefficientEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<CoefficientEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub breakpoints: Vec<f64>,
}

/// A parsed system plus the residuals of any tabulated components.
#[derive(Debug, Clone)]
pub struct LoadedSystem {
    pub system: RiccatiSystem,
    /// `(field, max |fit − sample|)` for tabulated components.
    pub fit_residuals: Vec<(String, f64)>,
}

fn series_from_entry(
    spec: &SeriesEntry,
    period: f64,
    field: &str,
    fits: &mut Vec<(String, f64)>,
) -> Result<RealFourierSeries, InputError> {
    if let Some(samples) = &spec.samples {
        if spec.constant.is_some() || !spec.harmonics.is_empty() {
            return Err(InputError::validation(field, "tabulated components take no `const` or `harmonics`"));
        }
        let k = spec
            .fit_harmonics
            .ok_or_else(|| InputError::validation(format!("{field}.fit_harmonics"), "required with `samples`"))?;
        let (s, r) = RealFourierSeries::fit_uniform_with_residual(period, samples, k)
            .map_err(|e| InputError::validation(field, e.to_string()))?;
        fits.push((field.to_string(), r));
        return Ok(s);
    }
    if spec.fit_harmonics.is_some() {
        return Err(InputError::validation(format!("{field}.fit_harmonics"), "only valid with `samples`"));
    }
    let mut hs = Vec::with_capacity(spec.harmonics.len());
    for (i, [k, ca, sa]) in spec.harmonics.iter().copied().enumerate() {
        if !(k >= 1.0 && k.fract() == 0.0 && k <= u32::MAX as f64) {
            return Err(InputError::validation(
                format!("{field}.harmonics[{i}]"),
                format!("harmonic index must be a positive integer, got {k}"),
            ));
        }
        hs.push(Harmonic { k: k as u32, cos_amp: ca, sin_amp: sa });
    }
    RealFourierSeries::new(period, spec.constant.unwrap_or(0.0), hs)
        .map_err(|e| InputError::validation(field, e.to_string()))
}

pub fn coefficient_from_entry(
    spec: Option<&CoefficientEntry>,
    period: f64,
    name: &str,
    fits: &mut Vec<(String, f64)>,
) -> Result<QuaternionCoefficient, InputError> {
    let empty = CoefficientEntry::default();
    let spec = spec.unwrap_or(&empty);
    let parts = [&spec.c0, &spec.c1, &spec.c2, &spec.c3];
    let mut comps = Vec::with_capacity(4);
    for (n, p) in parts.iter().enumerate() {
        let field = format!("{name}.c{n}");
        comps.push(match p {
            Some(s) => series_from_entry(s, period, &field, fits)?,
            None => RealFourierSeries::zero(period).map_err(|e| InputError::validation(&field, e.to_string()))?,
        });
    }
    let arr: [RealFourierSeries; 4] = comps.try_into().expect("four components");
    QuaternionCoefficient::new(arr).map_err(|e| InputError::validation(name, e.to_string()))
}

fn validate_period(period: Option<f64>) -> Result<f64, InputError> {
    let t = period.ok_or_else(|| InputError::validation("T", "missing"))?;
    if !(t.is_finite() && t > 0.0) {
        return Err(InputError::validation("T", format!("period must be positive and finite, got {t}")));
    }
    Ok(t)
}

pub fn system_from_file(spec: &SystemFile) -> Result<LoadedSystem, InputError> {
    let t = validate_period(spec.period)?;
    let mut fits = Vec::new();
    let a = coefficient_from_entry(spec.a.as_ref(), t, "a", &mut fits)?;
    let b = coefficient_from_entry(spec.b.as_ref(), t, "b", &mut fits)?;
    let c = coefficient_from_entry(spec.c.as_ref(), t, "c", &mut fits)?;
    let d = coefficient_from_entry(spec.d.as_ref(), t, "d", &mut fits)?;
    for (i, &p) in spec.breakpoints.iter().enumerate() {
        if !(p.is_finite() && (0.0..=t).contains(&p)) {
            return Err(InputError::validation(format!("breakpoints[{i}]"), "must lie in [0, T]"));
        }
    }
    let system = RiccatiSystem::new(a, b, c, d)
        .map_err(|e: ModelError| InputError::validation("T", e.to_string()))?
        .with_breakpoints(spec.breakpoints.clone());
    Ok(LoadedSystem { system, fit_residuals: fits })
}

pub fn parse_system(text: &str) -> Result<LoadedSystem, InputError> {
    let spec: SystemFile = serde_json::from_str(text).map_err(InputError::from_json)?;
    system_from_file(&spec)
}

pub fn load_system(path: &Path) -> Result<LoadedSystem, InputError> {
    let text = read(path)?;
    parse_system(&text).map_err(|e| e.in_file(path))
}

/// `λ` file: `{ "T": ..., "lambda": { "c0": ..., ... } }`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct LambdaFile {
    #[serde(rename = "T", default)]
    period: Option<f64>,
    lambda: CoefficientEntry,
}

pub fn parse_lambda(text: &str) -> Result<QuaternionCoefficient, InputError> {
    let spec: LambdaFile = serde_json::from_str(text).map_err(InputError::from_json)?;
    let t = validate_period(spec.period)?;
    coefficient_from_entry(Some(&spec.lambda), t, "lambda", &mut Vec::new())
}

pub fn load_lambda(path: &Path) -> Result<QuaternionCoefficient, InputError> {
    let text = read(path)?;
    parse_lambda(&text).map_err(|e| e.in_file(path))
}

fn read(path: &Path) -> Result<String, InputError> {
    fs::read_to_string(path).map_err(|source| InputError::Io { path: path.to_path_buf(), source })
}

fn series_entry(s: &RealFourierSeries) -> SeriesEntry {
    SeriesEntry {
        constant: Some(s.constant_term()),
        harmonics: s.harmonics().iter().map(|h| [h.k as f64, h.cos_amp, h.sin_amp]).collect(),
        samples: None,
        fit_harmonics: None,
    }
}

fn coefficient_entry(c: &QuaternionCoefficient) -> CoefficientEntry {
    let s = |n| Some(series_entry(c.component(n)));
    CoefficientEntry { c0: s(0), c1: s(1), c2: s(2), c3: s(3) }
}

/// Serialises a system in the input schema.
pub fn system_to_file(sys: &RiccatiSystem) -> SystemFile {
    SystemFile {
        period: Some(sys.period()),
        a: Some(coefficient_entry(&sys.a)),
        b: Some(coefficient_entry(&sys.b)),
        c: Some(coefficient_entry(&sys.c)),
        d: Some(coefficient_entry(&sys.d)),
        breakpoints: sys.breakpoints().to_vec(),
    }
}

/// Formats a float with 17 significant digits; `.` decimal point always.
pub fn format_float(v: f64) -> String {
    if v == 0.0 {
        // keep the sign of negative zero out of reports
        return "0.0000000000000000e0".to_string();
    }
    format!("{v:.16e}")
}

/// Pretty JSON with sorted keys and fixed float formatting.
pub fn to_deterministic_json<T: Serialize>(value: &T) -> Result<String, serde_json::Error> {
    let v = serde_json::to_value(value)?;
    let mut out = String::new();
    write_value(&v, 0, &mut out);
    out.push('\n');
    Ok(out)
}

fn write_value(v: &Value, indent: usize, out: &mut String) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                let _ = write!(out, "{i}");
            } else if let Some(u) = n.as_u64() {
                let _ = write!(out, "{u}");
            } else {
                out.push_str(&format_float(n.as_f64().unwrap_or(f64::NAN)));
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_value(item, indent + 1, out);
                if i + 1 < items.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, k) in keys.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&Value::String((*k).clone()).to_string());
                out.push_str(": ");
                write_value(&map[*k], indent + 1, out);
                if i + 1 < keys.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
}

pub const TRAJECTORY_HEADER: &str = "t,w,x,y,z,c0,c1,c2,c3";

/// One row per sample: raw quaternion, then signed components.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::with_capacity(traj.samples().len() * 200);
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for s in traj.samples() {
        let q = s.q.to_array();
        let c = SignedComponents::from_quaternion(s.q).to_array();
        let row: Vec<String> = std::iter::once(s.t).chain(q).chain(c).map(format_float).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub const COMPARE_HEADER: &str = "system,thm31_applicable,thm11_applicable,found,residual,m0";

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub system: String,
    pub thm31_applicable: bool,
    pub thm11_applicable: bool,
    pub found: bool,
    pub residual: Option<f64>,
    pub m0: Option<u32>,
}

pub fn compare_csv(rows: &[CompareRow]) -> String {
    let mut out = String::from(COMPARE_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.system,
            r.thm31_applicable,
            r.thm11_applicable,
            r.found,
            r.residual.map(format_float).unwrap_or_default(),
            r.m0.map(|m| m.to_string()).unwrap_or_default(),
        );
    }
    out
}

/// Writes `contents` to `dir/name`, creating `dir` when needed.
pub fn write_artifact(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, InputError> {
    fs::create_dir_all(dir).map_err(|source| InputError::Io { path: dir.to_path_buf(), source })?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| InputError::Io { path: path.clone(), source })?;
    Ok(path)
}
