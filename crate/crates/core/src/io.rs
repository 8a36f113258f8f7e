//! File formats: Wavefront OBJ meshes, JSON curves and geometries, JSON-lines
//! trajectories, `key = value` configuration and CSV summaries.
//!
//! JSON floats use the shortest representation that parses back to the same
//! bits; OBJ and CSV floats are written with 17 significant digits. Both are
//! lossless.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DVector;

use crate::budget::EstimateReport;
use crate::flow::{Snapshot, Trajectory};
use crate::geom::{PolyCurve, TriMesh};
use crate::geometry::Geometry;
use crate::{Error, Result};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// 17 significant digits, enough to recover every `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Parses an OBJ mesh. `v` records may carry any number (≥ 3) of
/// coordinates, all equal; faces with more than three corners are fan
/// triangulated; texture and normal indices are ignored.
pub fn read_obj(text: &str) -> Result<TriMesh> {
    let mut vertices: Vec<DVector<f64>> = Vec::new();
    let mut triangles = Vec::new();
    let mut dim = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut tokens = line.split_whitespace();
        let Some(keyword) = tokens.next() else { continue };
        match keyword {
            "v" => {
                let coords = tokens
                    .map(|t| t.parse::<f64>().map_err(|_| parse_err(line_no, format!("bad coordinate '{t}'"))))
                    .collect::<Result<Vec<f64>>>()?;
                if coords.len() < 3 {
                    return Err(parse_err(line_no, format!("vertex has {} coordinates, need at least 3", coords.len())));
                }
                if coords.iter().any(|c| !c.is_finite()) {
                    return Err(parse_err(line_no, "non-finite coordinate"));
                }
                match dim {
                    None => dim = Some(coords.len()),
                    Some(d) if d != coords.len() => {
                        return Err(parse_err(line_no, format!("vertex has {} coordinates, earlier vertices {d}", coords.len())));
                    }
                    _ => {}
                }
                vertices.push(DVector::from_vec(coords));
            }
            "f" => {
                let corners = tokens
                    .map(|t| {
                        let idx = t.split('/').next().unwrap_or("");
                        let k: i64 = idx.parse().map_err(|_| parse_err(line_no, format!("bad face index '{t}'")))?;
                        let n = vertices.len() as i64;
                        let resolved = if k > 0 { k - 1 } else { n + k };
                        if k == 0 || resolved < 0 || resolved >= n {
                            return Err(parse_err(line_no, format!("face index {k} out of range (have {n} vertices)")));
                        }
                        Ok(resolved as usize)
                    })
                    .collect::<Result<Vec<usize>>>()?;
                if corners.len() < 3 {
                    return Err(parse_err(line_no, "face needs at least 3 corners"));
                }
                for j in 1..corners.len() - 1 {
                    triangles.push([corners[0], corners[j], corners[j + 1]]);
                }
            }
            "vt" | "vn" | "vp" | "o" | "g" | "s" | "mtllib" | "usemtl" => {}
            other => return Err(parse_err(line_no, format!("unsupported record '{other}'"))),
        }
    }
    if triangles.is_empty() {
        return Err(parse_err(text.lines().count().max(1), "no faces"));
    }
    TriMesh::new(vertices, triangles)
}

pub fn write_obj(m: &TriMesh) -> String {
    let mut out = String::new();
    for v in m.vertices() {
        out.push('v');
        for c in v.iter() {
            out.push(' ');
            out.push_str(&fmt_f64(*c));
        }
        out.push('\n');
    }
    for t in m.triangles() {
        out.push_str(&format!("f {} {} {}\n", t[0] + 1, t[1] + 1, t[2] + 1));
    }
    out
}

/// A curve as `{"closed": bool, "vertices": [[x, y, …], …]}`.
pub fn read_curve_json(text: &str) -> Result<PolyCurve> {
    Ok(serde_json::from_str(text)?)
}

pub fn write_curve_json(c: &PolyCurve) -> Result<String> {
    Ok(serde_json::to_string(c)?)
}

/// A geometry as JSON: either a tagged `{"kind", "payload"}` record or a
/// bare curve record.
pub fn read_geometry_json(text: &str) -> Result<Geometry> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    if value.get("kind").is_some() {
        Ok(serde_json::from_value(value)?)
    } else {
        Ok(Geometry::Curve(serde_json::from_value(value)?))
    }
}

pub fn write_geometry_json(g: &Geometry) -> Result<String> {
    Ok(serde_json::to_string(g)?)
}

/// Output format of geometry files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeometryFormat {
    Obj,
    Json,
}

impl FromStr for GeometryFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "obj" => Ok(GeometryFormat::Obj),
            "json" => Ok(GeometryFormat::Json),
            other => Err(Error::input(format!("unknown format '{other}' (expected obj or json)"))),
        }
    }
}

impl GeometryFormat {
    pub fn extension(self) -> &'static str {
        match self {
            GeometryFormat::Obj => "obj",
            GeometryFormat::Json => "json",
        }
    }
}

/// Serialises a geometry; OBJ is only available for meshes.
pub fn write_geometry(g: &Geometry, format: GeometryFormat) -> Result<String> {
    match (format, g) {
        (GeometryFormat::Obj, Geometry::Mesh(m)) => Ok(write_obj(m)),
        (GeometryFormat::Obj, _) => Err(Error::input(format!("a {} cannot be written as OBJ", g.kind()))),
        (GeometryFormat::Json, _) => write_geometry_json(g),
    }
}

/// Loads a geometry by extension: `.obj` meshes, `.json` geometries.
pub fn read_geometry_file(path: &Path) -> Result<Geometry> {
    let text = fs::read_to_string(path)?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("obj") => Ok(Geometry::Mesh(read_obj(&text)?)),
        Some("json") => read_geometry_json(&text),
        _ => Err(Error::input(format!("unknown geometry extension: {}", path.display()))),
    }
}

/// One snapshot per line: `{"t", "kind", "payload"}`.
pub fn write_trajectory_jsonl(tr: &Trajectory) -> Result<String> {
    let mut out = String::new();
    for s in tr.snapshots() {
        out.push_str(&serde_json::to_string(s)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn read_trajectory_jsonl(text: &str) -> Result<Trajectory> {
    let mut snaps = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let s: Snapshot = serde_json::from_str(line).map_err(|e| parse_err(i + 1, e.to_string()))?;
        snaps.push(s);
    }
    Trajectory::new(snaps)
}

/// Writes through a temporary file in the same directory and renames it
/// into place.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().ok_or_else(|| Error::input(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Flat `key = value` configuration; `#` starts a comment.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    entries: BTreeMap<String, (usize, String)>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| parse_err(i + 1, format!("expected 'key = value', got '{line}'")))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(parse_err(i + 1, "empty key"));
            }
            if entries.insert(k.to_string(), (i + 1, v.to_string())).is_some() {
                return Err(parse_err(i + 1, format!("duplicate key '{k}'")));
            }
        }
        Ok(Config { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Config::parse(&fs::read_to_string(path)?)
    }

    /// Sets a value, as if it were on a line of its own (line 0).
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), (0, value.into()));
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Rejects keys outside `known`.
    pub fn check_keys(&self, known: &[&str]) -> Result<()> {
        for (k, (line, _)) in &self.entries {
            if !known.contains(&k.as_str()) {
                return Err(parse_err(*line, format!("unknown key '{k}' (known: {})", known.join(", "))));
            }
        }
        Ok(())
    }

    pub fn str(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    pub fn require_str(&self, key: &str) -> Result<&str> {
        self.str(key).ok_or_else(|| Error::input(format!("missing config key '{key}'")))
    }

    /// Typed value, `None` when absent.
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|_| parse_err(*line, format!("cannot parse '{v}' for key '{key}'"))),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?.ok_or_else(|| Error::input(format!("missing config key '{key}'")))
    }

    /// Comma-separated list.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => v
                .split(',')
                .map(|s| s.trim())
                .filter(|s| !s.is_empty())
                .map(|s| s.parse().map_err(|_| parse_err(*line, format!("cannot parse '{s}' in list '{key}'"))))
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }

    /// Canonical text form, sorted by key.
    pub fn to_text(&self) -> String {
        self.entries.iter().map(|(k, (_, v))| format!("{k} = {v}\n")).collect()
    }
}

/// One CSV row per report: name, lhs, rhs, slack, verdict and every term.
pub fn reports_csv(reports: &[EstimateReport]) -> String {
    let mut out = String::from("name,lhs,rhs,slack,verdict,terms\n");
    for r in reports {
        let terms: Vec<String> = r.terms.iter().map(|(k, v)| format!("{k}={}", fmt_f64(*v))).collect();
        out.push_str(&format!(
            "\"{}\",{},{},{},{},\"{}\"\n",
            r.name.replace('"', "\"\""),
            fmt_f64(r.lhs),
            fmt_f64(r.rhs),
            fmt_f64(r.slack),
            r.verdict(),
            terms.join(";")
        ));
    }
    out
}
