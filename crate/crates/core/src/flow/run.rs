use serde::{Deserialize, Serialize};

use super::graph::{graph_dt_bound, step_graph};
use super::remesh::{remesh, tangential_smooth, RemeshEvent};
use super::step::{curve_dt_bound, mesh_dt_bound, step_curve, step_mesh_with, BoundaryPolicy, MeshStepOptions};
use super::trajectory::{FlowMetadata, Snapshot, Trajectory};
use crate::geom::{AmbientVector, PolyCurve, TriMesh};
use crate::geometry::Geometry;
use crate::{Error, Result};

/// Time integrator used by [`run_flow`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Forward Euler.
    Euler,
    /// Heun's method, `½(x + E(E(x)))` for the Euler map `E`; same
    /// stability bound, second order in time.
    #[default]
    Heun,
}

/// Options for [`run_flow`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowOptions {
    /// Fraction of the explicit stability bound used as step size.
    pub dt_fraction: f64,
    /// Fixed step for the implicit mesh scheme; ignored otherwise.
    pub implicit_dt: Option<f64>,
    /// Time between snapshots; the run lands exactly on each.
    pub snapshot_interval: f64,
    /// Start time of the run.
    pub t0: f64,
    pub scheme: Scheme,
    /// Arc-length redistribution of curves after every step, tangential
    /// smoothing of meshes at every resolution check.
    pub redistribute: bool,
    /// Edge split/collapse around the current mean edge length.
    pub remesh: bool,
    pub implicit: bool,
    pub boundary: BoundaryPolicy,
    pub slope_cap: f64,
    /// Stop when `max|A|·h_min` exceeds this.
    pub halt_threshold: f64,
    /// Steps between resolution checks (snapshots are always checked).
    pub check_every: usize,
    /// Stop when the step falls below this fraction of the first step,
    /// which happens as a well resolved geometry shrinks to a point.
    pub min_dt_ratio: f64,
    pub max_steps: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            dt_fraction: 0.9,
            implicit_dt: None,
            snapshot_interval: 0.01,
            t0: 0.0,
            scheme: Scheme::Heun,
            redistribute: true,
            remesh: true,
            implicit: false,
            boundary: BoundaryPolicy::Fixed,
            slope_cap: 10.0,
            halt_threshold: 0.5,
            check_every: 10,
            min_dt_ratio: 1e-6,
            max_steps: 5_000_000,
        }
    }
}

impl FlowOptions {
    fn validate(&self) -> Result<()> {
        if !(self.dt_fraction > 0.0 && self.dt_fraction <= 1.0) {
            return Err(Error::input("dt_fraction must lie in (0, 1]"));
        }
        if !(self.snapshot_interval > 0.0) {
            return Err(Error::input("snapshot_interval must be positive"));
        }
        if !(self.min_dt_ratio >= 0.0 && self.min_dt_ratio < 1.0) {
            return Err(Error::input("min_dt_ratio must lie in [0, 1)"));
        }
        if !(self.halt_threshold > 0.0) || !(self.slope_cap > 0.0) || !self.t0.is_finite() {
            return Err(Error::input("halt_threshold and slope_cap must be positive, t0 finite"));
        }
        if let Some(dt) = self.implicit_dt {
            if !(dt > 0.0) {
                return Err(Error::input("implicit_dt must be positive"));
            }
        }
        Ok(())
    }
}

/// Resolution indicator `max|A|·h_min`.
fn resolution(g: &Geometry) -> Result<f64> {
    Ok(g.max_abs_a()? * g.min_spacing())
}

/// Flows `initial` from `t0` to `t0 + horizon`, recording snapshots every
/// `snapshot_interval`. Stops early, with `metadata.halted_at` set, when the
/// curvature outruns the resolution or the step size collapses.
pub fn run_flow(initial: &Geometry, horizon: f64, opts: &FlowOptions) -> Result<Trajectory> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::input("horizon must be positive"));
    }
    opts.validate()?;
    let t_end = opts.t0 + horizon;
    let mut t = opts.t0;
    let mut g = initial.clone();
    let mut snaps = vec![Snapshot { t, geometry: g.clone() }];
    let mut meta = FlowMetadata { min_dt: f64::INFINITY, ..Default::default() };
    let mut next_snap = opts.t0 + opts.snapshot_interval;
    let mut check_due = true;
    let mut first_dt = None;

    while t < t_end - 1e-14 * (1.0 + t_end.abs()) {
        if meta.steps >= opts.max_steps {
            return Err(Error::Flow { t, reason: format!("step budget {} exhausted", opts.max_steps) });
        }
        if check_due || meta.steps % opts.check_every.max(1) == 0 {
            let res = resolution(&g)?;
            if !res.is_finite() {
                return Err(Error::Flow { t, reason: "curvature became non-finite".into() });
            }
            if res > opts.halt_threshold {
                meta.halted_at = Some(t);
                break;
            }
            check_due = false;
            if opts.redistribute {
                if let Geometry::Mesh(m) = &g {
                    g = Geometry::Mesh(tangential_smooth(m, 0.5).map_err(|e| Error::Flow { t, reason: e.to_string() })?);
                }
            }
        }
        let bound = match &g {
            Geometry::Curve(c) => curve_dt_bound(c),
            Geometry::Mesh(m) => mesh_dt_bound(m),
            Geometry::Graph(p) => graph_dt_bound(p),
        };
        let mut dt = match (&g, opts.implicit, opts.implicit_dt) {
            (Geometry::Mesh(_), true, Some(fixed)) => fixed,
            _ => opts.dt_fraction * bound,
        };
        let reference = *first_dt.get_or_insert(dt);
        if !(dt > opts.min_dt_ratio * reference) || !(dt > 1e-15 * (1.0 + t.abs())) {
            meta.halted_at = Some(t);
            break;
        }
        let target = next_snap.min(t_end);
        let land = dt >= target - t;
        if land {
            dt = target - t;
        }
        g = advance(&g, dt, opts, t, &mut meta)?;
        t = if land { target } else { t + dt };
        meta.steps += 1;
        meta.min_dt = meta.min_dt.min(dt);
        meta.max_dt = meta.max_dt.max(dt);
        if land {
            snaps.push(Snapshot { t, geometry: g.clone() });
            next_snap += opts.snapshot_interval;
            check_due = true;
        }
    }
    if snaps.last().map(|s| s.t) != Some(t) {
        snaps.push(Snapshot { t, geometry: g });
    }
    if meta.steps == 0 {
        meta.min_dt = 0.0;
    }
    let mut tr = Trajectory::new(snaps)?;
    tr.metadata = meta;
    Ok(tr)
}

fn average(a: &[AmbientVector], b: &[AmbientVector]) -> Vec<AmbientVector> {
    a.iter().zip(b).map(|(x, y)| (x + y) * 0.5).collect()
}

fn mesh_step(m: &TriMesh, dt: f64, opts: &FlowOptions) -> Result<TriMesh> {
    let mesh_opts = MeshStepOptions { implicit: opts.implicit, boundary: opts.boundary };
    if opts.implicit || opts.scheme == Scheme::Euler {
        return step_mesh_with(m, dt, mesh_opts);
    }
    let twice = step_mesh_with(&step_mesh_with(m, dt, mesh_opts)?, dt, mesh_opts)?;
    let next = m.with_vertices(average(m.vertices(), twice.vertices()))?;
    if let Some(face) = (0..next.face_count()).find(|&f| !(next.face_area(f) > 0.0)) {
        return Err(Error::Degenerate { face });
    }
    Ok(next)
}

fn needs_remesh(m: &TriMesh) -> bool {
    let target = m.mean_edge();
    let topo = m.topology();
    let p = m.vertices();
    topo.edges.iter().any(|&[a, b]| {
        let l = (&p[a] - &p[b]).norm();
        l > 2.0 * target || (l < 0.5 * target && !topo.boundary_vertex[a] && !topo.boundary_vertex[b])
    })
}

fn advance(g: &Geometry, dt: f64, opts: &FlowOptions, t: f64, meta: &mut FlowMetadata) -> Result<Geometry> {
    let wrap = |e: Error| match e {
        Error::Input(_) => e,
        other => Error::Flow { t, reason: other.to_string() },
    };
    let heun = opts.scheme == Scheme::Heun;
    match g {
        Geometry::Curve(c) => {
            let mut next = step_curve(c, dt).map_err(wrap)?;
            if heun {
                let twice = step_curve(&next, dt).map_err(wrap)?;
                next = PolyCurve::new(average(c.vertices(), twice.vertices()), c.is_closed()).map_err(wrap)?;
            }
            Ok(Geometry::Curve(if opts.redistribute { next.redistribute() } else { next }))
        }
        Geometry::Graph(p) => {
            let mut next = step_graph(p, dt, opts.slope_cap).map_err(wrap)?;
            if heun {
                let twice = step_graph(&next, dt, opts.slope_cap).map_err(wrap)?;
                next = p.with_values(average(p.values(), twice.values())).map_err(wrap)?;
            }
            Ok(Geometry::Graph(next))
        }
        Geometry::Mesh(m) => {
            let mut next = match mesh_step(m, dt, opts) {
                Ok(next) => next,
                Err(Error::Degenerate { face }) if opts.remesh => {
                    // remesh the current state and retry once
                    let (fixed, s, c) = remesh(m, m.mean_edge()).map_err(wrap)?;
                    meta.remesh_events.push(RemeshEvent {
                        t,
                        splits: s,
                        collapses: c,
                        vertices_before: m.vertex_count(),
                        vertices_after: fixed.vertex_count(),
                    });
                    if dt > opts.dt_fraction * mesh_dt_bound(&fixed) {
                        return Err(Error::Flow { t, reason: format!("degenerate face {face} persists after remeshing") });
                    }
                    mesh_step(&fixed, dt, opts).map_err(wrap)?
                }
                Err(e) => return Err(wrap(e)),
            };
            if opts.remesh && needs_remesh(&next) {
                let (edited, s, c) = remesh(&next, next.mean_edge()).map_err(wrap)?;
                if s + c > 0 {
                    meta.remesh_events.push(RemeshEvent {
                        t: t + dt,
                        splits: s,
                        collapses: c,
                        vertices_before: next.vertex_count(),
                        vertices_after: edited.vertex_count(),
                    });
                    next = edited;
                }
            }
            Ok(Geometry::Mesh(next))
        }
    }
}
