//! Config resolution, input loading and artifact bookkeeping shared by the
//! subcommands.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context as _, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use mcflab::flow::{run_flow, FlowOptions, GraphPatch, Scheme, Trajectory};
use mcflab::geom::{shapes, AmbientVector};
use mcflab::io::{self, Config, GeometryFormat};
use mcflab::Geometry;

use crate::{Command, Common};

/// Keys describing a geometry source.
pub const GEOMETRY_KEYS: &[&str] = &[
    "geometry", "shape", "radius", "vertices", "dim", "a", "b", "level", "axes", "big", "small", "around", "along",
    "half_length", "rings", "polar", "neck", "half_height", "half_width", "cells", "amplitude", "shift",
];

/// Keys of [`FlowOptions`] plus the horizon.
pub const FLOW_KEYS: &[&str] = &[
    "horizon", "t0", "snapshot_interval", "dt_fraction", "scheme", "redistribute", "remesh", "halt_threshold",
    "min_dt_ratio", "boundary_policy",
];

/// A trajectory file, or a geometry and flow keys to compute one.
pub fn trajectory_keys() -> Vec<&'static str> {
    let mut keys = vec!["trajectory"];
    keys.extend_from_slice(GEOMETRY_KEYS);
    keys.extend_from_slice(FLOW_KEYS);
    keys
}

#[derive(Serialize)]
struct FileRecord {
    path: String,
    sha256: String,
    bytes: usize,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    seed: u64,
    config: String,
    status: &'a str,
    summary: &'a serde_json::Value,
    inputs: &'a [FileRecord],
    outputs: &'a [FileRecord],
    wall_clock_seconds: f64,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub struct Context {
    pub cfg: Config,
    pub seed: u64,
    pub format: GeometryFormat,
    base: PathBuf,
    out: PathBuf,
    command: Command,
    inputs: Vec<FileRecord>,
    outputs: Vec<FileRecord>,
    start: Instant,
}

impl Context {
    pub fn new(command: Command, common: &Common, known: &[&str]) -> Result<Self> {
        let (mut cfg, base) = match &common.config {
            Some(path) => {
                let cfg = Config::load(path).with_context(|| format!("reading config {}", path.display()))?;
                (cfg, path.parent().map(Path::to_path_buf).unwrap_or_default())
            }
            None => (Config::default(), PathBuf::new()),
        };
        for o in &common.overrides {
            let (k, v) = o.split_once('=').ok_or_else(|| anyhow!("override '{o}' is not KEY=VALUE"))?;
            cfg.set(k.trim(), v.trim());
        }
        cfg.check_keys(known)?;
        let mut ctx = Context {
            cfg,
            seed: common.seed,
            format: common.format,
            base,
            out: common.out.clone(),
            command,
            inputs: Vec::new(),
            outputs: Vec::new(),
            start: Instant::now(),
        };
        if let Some(path) = &common.config {
            ctx.record_input(path)?;
        }
        Ok(ctx)
    }

    fn resolve(&self, raw: &str) -> PathBuf {
        let p = Path::new(raw);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    fn record_input(&mut self, path: &Path) -> Result<Vec<u8>> {
        let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.inputs.push(FileRecord { path: path.display().to_string(), sha256: sha256_hex(&bytes), bytes: bytes.len() });
        Ok(bytes)
    }

    /// Reads a file named by a config key, relative to the config file.
    pub fn read_input(&mut self, key: &str) -> Result<(PathBuf, String)> {
        let path = self.resolve(self.cfg.require_str(key)?);
        let bytes = self.record_input(&path)?;
        let text = String::from_utf8(bytes).map_err(|_| mcflab::Error::Input(format!("{} is not UTF-8", path.display())))?;
        Ok((path, text))
    }

    /// Writes an artifact atomically and records its checksum.
    pub fn write(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> Result<()> {
        let bytes = bytes.as_ref();
        io::atomic_write(&self.out.join(name), bytes)?;
        self.outputs.push(FileRecord { path: name.to_string(), sha256: sha256_hex(bytes), bytes: bytes.len() });
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text)
    }

    pub fn write_geometry(&mut self, stem: &str, g: &Geometry) -> Result<()> {
        let text = io::write_geometry(g, self.format)?;
        self.write(&format!("{stem}.{}", self.format.extension()), text)
    }

    /// Writes `manifest.json` and returns `pass`.
    pub fn finish(self, pass: bool, summary: serde_json::Value) -> Result<bool> {
        let manifest = Manifest {
            command: self.command.name(),
            version: env!("CARGO_PKG_VERSION"),
            seed: self.seed,
            config: self.cfg.to_text(),
            status: if pass { "pass" } else { "violation" },
            summary: &summary,
            inputs: &self.inputs,
            outputs: &self.outputs,
            wall_clock_seconds: self.start.elapsed().as_secs_f64(),
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        io::atomic_write(&self.out.join("manifest.json"), text.as_bytes())?;
        Ok(pass)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.cfg.get_or(key, default)?)
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        Ok(self.cfg.get_or(key, default)?)
    }

    pub fn vector(&self, key: &str) -> Result<Option<AmbientVector>> {
        Ok(self.cfg.list::<f64>(key)?.map(|v| AmbientVector::from_vec(v)))
    }

    /// The geometry named by `geometry = path` or generated from `shape`.
    pub fn geometry(&mut self) -> Result<Geometry> {
        let g = if self.cfg.contains("geometry") {
            let (path, text) = self.read_input("geometry")?;
            match path.extension().and_then(|e| e.to_str()) {
                Some("obj") => Geometry::Mesh(io::read_obj(&text)?),
                Some("json") => io::read_geometry_json(&text)?,
                _ => return Err(mcflab::Error::Input(format!("unknown geometry extension: {}", path.display())).into()),
            }
        } else {
            self.shape()?
        };
        match self.vector("shift")? {
            Some(v) if v.len() != g.dim() => bail!(mcflab::Error::Input("shift has the wrong dimension".into())),
            Some(v) => Ok(g.similarity(&-v, 1.0)?),
            None => Ok(g),
        }
    }

    fn shape(&self) -> Result<Geometry> {
        let name = self.cfg.require_str("shape")?.to_string();
        let f = |k: &str, d: f64| self.f64_or(k, d);
        let n = |k: &str, d: usize| self.usize_or(k, d);
        Ok(match name.as_str() {
            "circle" => shapes::circle(f("radius", 1.0)?, n("vertices", 256)?, n("dim", 2)?).into(),
            "ellipse" => shapes::ellipse(f("a", 1.0)?, f("b", 0.5)?, n("vertices", 256)?).into(),
            "figure-eight" => shapes::figure_eight(n("vertices", 256)?).into(),
            "sphere" => shapes::icosphere(n("level", 3)?, f("radius", 1.0)?).into(),
            "ellipsoid" => {
                let axes = self.cfg.list::<f64>("axes")?.unwrap_or_else(|| vec![2.0, 1.0, 1.0]);
                let axes: [f64; 3] = axes.try_into().map_err(|_| mcflab::Error::Input("axes needs three values".into()))?;
                shapes::ellipsoid(n("level", 3)?, axes).into()
            }
            "torus" => shapes::torus(f("big", 2.0)?, f("small", 1.0)?, n("around", 64)?, n("along", 32)?).into(),
            "cylinder" => shapes::cylinder(f("radius", 1.0)?, f("half_length", 2.0)?, n("around", 32)?, n("along", 16)?).into(),
            "disk" => shapes::disk(f("radius", 1.0)?, n("rings", 16)?).into(),
            "cap" => shapes::spherical_cap(f("radius", 1.0)?, f("polar", PI / 3.0)?, n("rings", 16)?).into(),
            "catenoid" => shapes::catenoid(f("neck", 1.0)?, f("half_height", 1.5)?, n("around", 64)?, n("along", 48)?).into(),
            "plane" => shapes::plane_grid(f("half_width", 3.0)?, n("cells", 32)?).into(),
            "random-graph" => shapes::random_smooth_graph(self.seed, f("half_width", 3.0)?, n("cells", 32)?, f("amplitude", 0.3)?).into(),
            "sine-graph" => {
                let amp = f("amplitude", 0.01)?;
                GraphPatch::standard(2, 3, f("half_width", PI)?, n("cells", 32)?, |x| {
                    AmbientVector::from_element(1, amp * x[0].sin() * x[1].sin())
                })?
                .into()
            }
            other => bail!(mcflab::Error::Input(format!("unknown shape '{other}'"))),
        })
    }

    pub fn flow_options(&self) -> Result<FlowOptions> {
        let d = FlowOptions::default();
        let scheme = match self.cfg.str("scheme").unwrap_or("heun") {
            "heun" => Scheme::Heun,
            "euler" => Scheme::Euler,
            other => bail!(mcflab::Error::Input(format!("unknown scheme '{other}'"))),
        };
        let boundary = match self.cfg.str("boundary_policy").unwrap_or("fixed") {
            "fixed" => mcflab::flow::BoundaryPolicy::Fixed,
            "normal" => mcflab::flow::BoundaryPolicy::Normal,
            other => bail!(mcflab::Error::Input(format!("unknown boundary policy '{other}'"))),
        };
        Ok(FlowOptions {
            t0: self.f64_or("t0", d.t0)?,
            snapshot_interval: self.f64_or("snapshot_interval", d.snapshot_interval)?,
            dt_fraction: self.f64_or("dt_fraction", d.dt_fraction)?,
            scheme,
            boundary,
            redistribute: self.cfg.get_or("redistribute", d.redistribute)?,
            remesh: self.cfg.get_or("remesh", d.remesh)?,
            halt_threshold: self.f64_or("halt_threshold", d.halt_threshold)?,
            min_dt_ratio: self.f64_or("min_dt_ratio", d.min_dt_ratio)?,
            ..d
        })
    }

    /// Runs the configured flow.
    pub fn run_flow(&mut self) -> Result<Trajectory> {
        let g = self.geometry()?;
        let horizon: f64 = self.cfg.require("horizon")?;
        let opts = self.flow_options()?;
        Ok(run_flow(&g, horizon, &opts)?)
    }

    /// Loads `trajectory = path.jsonl`, or runs the configured flow.
    pub fn trajectory(&mut self) -> Result<Trajectory> {
        if self.cfg.contains("trajectory") {
            let (_, text) = self.read_input("trajectory")?;
            Ok(io::read_trajectory_jsonl(&text)?)
        } else {
            self.run_flow()
        }
    }
}
