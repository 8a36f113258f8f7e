use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::geom::{cotan_laplacian, curvature_displaced, diff_dot, mesh_curvature, AmbientVector, CurvatureField, PolyCurve, TriMesh};
use crate::{Error, Result};

/// How boundary vertices of an open mesh move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryPolicy {
    /// Boundary vertices stay put.
    #[default]
    Fixed,
    /// Boundary vertices move with the normal part of their curvature
    /// vector, so a patch of a self-similar solution keeps its shape.
    Normal,
}

/// Explicit parabolic bound `0.25·h_min²` for curves.
pub fn curve_dt_bound(c: &PolyCurve) -> f64 {
    let h = c.edge_lengths().into_iter().fold(f64::INFINITY, f64::min);
    0.25 * h * h
}

/// Explicit parabolic bound `0.25·h_min²` for meshes.
pub fn mesh_dt_bound(m: &TriMesh) -> f64 {
    let h = m.min_edge();
    0.25 * h * h
}

/// Moves every vertex by `dt·k⃗`; the ends of an open curve are fixed.
pub fn step_curve(c: &PolyCurve, dt: f64) -> Result<PolyCurve> {
    check_dt(dt, curve_dt_bound(c))?;
    let moved = curvature_displaced(c, dt);
    if moved.iter().any(|v| v.iter().any(|x| !x.is_finite())) {
        return Err(Error::Flow { t: f64::NAN, reason: "non-finite vertex after curve step".into() });
    }
    PolyCurve::new(moved, c.is_closed()).map_err(|e| Error::Flow { t: f64::NAN, reason: e.to_string() })
}

/// [`step_curve`] followed by arc-length redistribution.
pub fn step_curve_redistributed(c: &PolyCurve, dt: f64) -> Result<PolyCurve> {
    Ok(step_curve(c, dt)?.redistribute())
}

fn check_dt(dt: f64, bound: f64) -> Result<()> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::input(format!("time step must be positive, got {dt}")));
    }
    if dt > bound * (1.0 + 1e-12) {
        return Err(Error::Stability { dt, bound });
    }
    Ok(())
}

/// Options for a single mesh step.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MeshStepOptions {
    /// Linearised backward Euler `(M − dt·L) x' = M x` instead of the
    /// explicit update. Boundary vertices are held fixed in this mode.
    pub implicit: bool,
    pub boundary: BoundaryPolicy,
}

/// Explicit mesh velocity: the cotangent Laplacian of position over the
/// mixed area in the interior, and the boundary policy on the boundary.
fn mesh_velocity(m: &TriMesh, field: &CurvatureField, policy: BoundaryPolicy) -> Vec<AmbientVector> {
    (0..m.vertex_count())
        .map(|i| {
            if !field.boundary[i] {
                field.position_laplacian[i].clone()
            } else {
                match policy {
                    BoundaryPolicy::Fixed => DVector::zeros(m.dim()),
                    BoundaryPolicy::Normal => field.mean_curvature[i].clone(),
                }
            }
        })
        .collect()
}

/// One explicit step of `∂_t x = H⃗` on a closed mesh.
pub fn step_mesh(m: &TriMesh, dt: f64) -> Result<TriMesh> {
    if !m.is_closed() {
        return Err(Error::input("step_mesh expects a closed mesh; use step_mesh_with for patches"));
    }
    step_mesh_with(m, dt, MeshStepOptions::default())
}

/// One step with explicit control of the scheme and the boundary.
pub fn step_mesh_with(m: &TriMesh, dt: f64, opts: MeshStepOptions) -> Result<TriMesh> {
    let moved = if opts.implicit {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::input(format!("time step must be positive, got {dt}")));
        }
        let (_, mixed_area) = cotan_laplacian(m);
        implicit_positions(m, &mixed_area, &m.topology().boundary_vertex, dt)?
    } else {
        check_dt(dt, mesh_dt_bound(m))?;
        let v = explicit_velocity(m, opts.boundary)?;
        m.vertices().iter().zip(&v).map(|(x, h)| x + h * dt).collect()
    };
    let next = m.with_vertices(moved).map_err(|e| Error::Flow { t: f64::NAN, reason: e.to_string() })?;
    check_faces(m, &next)?;
    Ok(next)
}

/// Velocity of the explicit scheme; the full curvature field is only
/// assembled when boundary vertices follow their normal curvature.
fn explicit_velocity(m: &TriMesh, policy: BoundaryPolicy) -> Result<Vec<AmbientVector>> {
    if policy == BoundaryPolicy::Normal && !m.is_closed() {
        let field = mesh_curvature(m)?;
        return Ok(mesh_velocity(m, &field, policy));
    }
    if let Some(i) = m.topology().vertex_faces.iter().position(|f| f.is_empty()) {
        return Err(Error::input(format!("isolated vertex {i}")));
    }
    let (mut v, _) = cotan_laplacian(m);
    for (vi, &b) in v.iter_mut().zip(&m.topology().boundary_vertex) {
        if b {
            vi.fill(0.0);
        }
    }
    Ok(v)
}

/// Rejects steps that collapse or flip a triangle.
fn check_faces(before: &TriMesh, after: &TriMesh) -> Result<()> {
    let scale = before.mean_edge().powi(2);
    let p = before.vertices();
    let q = after.vertices();
    for (f, t) in before.triangles().iter().enumerate() {
        let (p0, p1, p2) = (&p[t[0]], &p[t[1]], &p[t[2]]);
        let (q0, q1, q2) = (&q[t[0]], &q[t[1]], &q[t[2]]);
        // (a0 ∧ b0)·(a1 ∧ b1) with a = x1 − x0, b = x2 − x0
        let overlap = diff_dot(p1, p0, q1, q0) * diff_dot(p2, p0, q2, q0) - diff_dot(p1, p0, q2, q0) * diff_dot(p2, p0, q1, q0);
        let (uu, vv, uv) = (diff_dot(q1, q0, q1, q0), diff_dot(q2, q0, q2, q0), diff_dot(q1, q0, q2, q0));
        let area = 0.5 * (uu * vv - uv * uv).max(0.0).sqrt();
        if !(area > 1e-12 * scale) || overlap <= 0.0 {
            return Err(Error::Degenerate { face: f });
        }
    }
    Ok(())
}

/// Symmetric cotangent stiffness rows: `(i, j, w_ij)` with
/// `(L x)_i = Σ_j w_ij (x_j − x_i)`.
fn cotan_weights(m: &TriMesh) -> Vec<Vec<(usize, f64)>> {
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m.vertex_count()];
    let p = m.vertices();
    for t in m.triangles() {
        for k in 0..3 {
            let (i, j, o) = (t[k], t[(k + 1) % 3], t[(k + 2) % 3]);
            let u = &p[i] - &p[o];
            let v = &p[j] - &p[o];
            let cross = crate::geom::wedge_norm(&u, &v);
            let w = 0.5 * u.dot(&v) / cross;
            rows[i].push((j, w));
            rows[j].push((i, w));
        }
    }
    rows
}

/// Solves `(M − dt·L) x' = M x` per coordinate with conjugate gradients,
/// boundary rows pinned.
fn implicit_positions(m: &TriMesh, mass: &[f64], fixed: &[bool], dt: f64) -> Result<Vec<AmbientVector>> {
    let nv = m.vertex_count();
    let rows = cotan_weights(m);
    let apply = |x: &[f64], out: &mut [f64]| {
        for i in 0..nv {
            if fixed[i] {
                out[i] = x[i];
                continue;
            }
            let mut lx = 0.0;
            for &(j, w) in &rows[i] {
                let xj = if fixed[j] { 0.0 } else { x[j] };
                lx += w * (xj - x[i]);
            }
            out[i] = mass[i] * x[i] - dt * lx;
        }
    };
    let p = m.vertices();
    let mut result: Vec<AmbientVector> = p.to_vec();
    for d in 0..m.dim() {
        let x0: Vec<f64> = p.iter().map(|v| v[d]).collect();
        // right-hand side with pinned boundary values moved across
        let mut b = vec![0.0; nv];
        for i in 0..nv {
            if fixed[i] {
                b[i] = x0[i];
            } else {
                b[i] = mass[i] * x0[i];
                for &(j, w) in &rows[i] {
                    if fixed[j] {
                        b[i] += dt * w * x0[j];
                    }
                }
            }
        }
        let x = conjugate_gradient(&apply, &b, &x0, 1e-13, 10 * nv + 100)
            .ok_or_else(|| Error::Flow { t: f64::NAN, reason: "implicit solve did not converge".into() })?;
        for i in 0..nv {
            result[i][d] = x[i];
        }
    }
    Ok(result)
}

fn conjugate_gradient(apply: &impl Fn(&[f64], &mut [f64]), b: &[f64], x0: &[f64], rel_tol: f64, max_iter: usize) -> Option<Vec<f64>> {
    let n = b.len();
    let dot = |a: &[f64], c: &[f64]| a.iter().zip(c).map(|(x, y)| x * y).sum::<f64>();
    let mut x = x0.to_vec();
    let mut ax = vec![0.0; n];
    apply(&x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let target = rel_tol * rel_tol * dot(b, b).max(1e-300);
    let mut ap = vec![0.0; n];
    for _ in 0..max_iter {
        if rr <= target {
            return Some(x);
        }
        apply(&p, &mut ap);
        let alpha = rr / dot(&p, &ap);
        if !alpha.is_finite() {
            return None;
        }
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
    }
    (rr <= target * 1e4).then_some(x)
}
