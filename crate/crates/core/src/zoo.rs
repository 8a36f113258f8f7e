//! Exact self-shrinkers, Abresch–Langer curves, exact round flows and an
//! independent quadric-fit estimator of `|A|²`.
//!
//! All shrinkers are returned at time `t = −1`, where they satisfy
//! `H⃗ + x^⊥/2 = 0`.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::geom::{complete_basis, orthonormalize, shapes, vector, AmbientVector, PolyCurve, TriMesh};
use crate::geometry::Geometry;
use crate::{Error, Result};

/// A self-shrinker family with its resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum ShrinkerSpec {
    /// Circle of radius √2 in `R^dim`.
    Circle { vertices: usize, dim: usize },
    /// Round `S²` of radius 2 in `R³` as an icosphere.
    Sphere { level: usize },
    /// `S¹ × [−L, L]` of radius √2 in `R³`.
    Cylinder { around: usize, along: usize, half_length: f64 },
    /// Planar Abresch–Langer curve with rotation index `p` and `q` lobes.
    AbreschLanger { p: u32, q: u32, vertices: usize },
    /// The plane `x₃ = 0` through the origin.
    Plane { half_width: f64, cells: usize },
}

impl ShrinkerSpec {
    /// Same family with resolution doubled (meshes: one subdivision level).
    pub fn refined(&self) -> ShrinkerSpec {
        match self.clone() {
            ShrinkerSpec::Circle { vertices, dim } => ShrinkerSpec::Circle { vertices: 2 * vertices, dim },
            ShrinkerSpec::Sphere { level } => ShrinkerSpec::Sphere { level: level + 1 },
            ShrinkerSpec::Cylinder { around, along, half_length } => {
                ShrinkerSpec::Cylinder { around: 2 * around, along: 2 * along, half_length }
            }
            ShrinkerSpec::AbreschLanger { p, q, vertices } => ShrinkerSpec::AbreschLanger { p, q, vertices: 2 * vertices },
            ShrinkerSpec::Plane { half_width, cells } => ShrinkerSpec::Plane { half_width, cells: 2 * cells },
        }
    }

    /// Intrinsic dimension.
    pub fn k(&self) -> usize {
        match self {
            ShrinkerSpec::Circle { .. } | ShrinkerSpec::AbreschLanger { .. } => 1,
            _ => 2,
        }
    }
}

/// Builds the shrinker at `t = −1`.
pub fn make_shrinker(spec: &ShrinkerSpec) -> Result<Geometry> {
    Ok(match *spec {
        ShrinkerSpec::Circle { vertices, dim } => {
            if vertices < 3 || dim < 2 {
                return Err(Error::input("circle needs at least 3 vertices in dimension at least 2"));
            }
            shapes::circle(SQRT_2, vertices, dim).into()
        }
        ShrinkerSpec::Sphere { level } => shapes::icosphere(level, 2.0).into(),
        ShrinkerSpec::Cylinder { around, along, half_length } => {
            if half_length < 4.0 * SQRT_2 {
                return Err(Error::input(format!("cylinder half length must be at least 4·√2, got {half_length}")));
            }
            if around < 3 || along < 1 {
                return Err(Error::input("cylinder resolution too small"));
            }
            shapes::cylinder(SQRT_2, half_length, around, along).into()
        }
        ShrinkerSpec::AbreschLanger { p, q, vertices } => shoot_abresch_langer(p, q, vertices)?.curve.into(),
        ShrinkerSpec::Plane { half_width, cells } => {
            if !(half_width > 0.0) || cells == 0 {
                return Err(Error::input("plane needs positive half width and cells"));
            }
            shapes::plane_grid(half_width, cells).into()
        }
    })
}

/// A shot Abresch–Langer curve with its closure diagnostics.
#[derive(Debug, Clone)]
pub struct ShotCurve {
    pub curve: PolyCurve,
    /// Distance between the start and the end of the integrated curve.
    pub closure_gap: f64,
    /// Smallest distance to the origin (the shooting parameter).
    pub r_min: f64,
    /// Arc length of the closed curve.
    pub length: f64,
}

/// State `(x, y, θ)` of the planar shrinker ODE in arc length:
/// `x' = cos θ`, `y' = sin θ`, `θ' = κ = (x sin θ − y cos θ)/2`, i.e.
/// `κ = −⟨X, N⟩/2` with `N` the left normal.
fn rhs(s: &[f64; 3]) -> [f64; 3] {
    let (sn, cs) = s[2].sin_cos();
    [cs, sn, 0.5 * (s[0] * sn - s[1] * cs)]
}

fn rk4(s: &[f64; 3], h: f64) -> [f64; 3] {
    let add = |a: &[f64; 3], b: &[f64; 3], c: f64| [a[0] + c * b[0], a[1] + c * b[1], a[2] + c * b[2]];
    let k1 = rhs(s);
    let k2 = rhs(&add(s, &k1, h / 2.0));
    let k3 = rhs(&add(s, &k2, h / 2.0));
    let k4 = rhs(&add(s, &k3, h));
    std::array::from_fn(|i| s[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

/// `⟨X, T⟩`, zero exactly where the distance to the origin is critical.
fn radial_speed(s: &[f64; 3]) -> f64 {
    s[0] * s[2].cos() + s[1] * s[2].sin()
}

const STEP: f64 = 1e-3;

/// Integrates from the point at distance `r0` (tangent orthogonal to the
/// radius) to the next critical point of the distance, returning the arc
/// length and the swept polar angle.
fn half_period(r0: f64) -> Option<(f64, f64)> {
    let mut s = [r0, 0.0, PI / 2.0];
    let mut arc = 0.0;
    // leave the start point, where the radial speed vanishes
    s = rk4(&s, STEP);
    arc += STEP;
    let sign = radial_speed(&s).signum();
    if sign == 0.0 {
        return None;
    }
    while arc < 100.0 {
        let next = rk4(&s, STEP);
        if radial_speed(&next) * sign <= 0.0 {
            // secant refinement of the crossing inside this step
            let (mut lo, mut hi) = (0.0, STEP);
            let (mut flo, mut fhi) = (radial_speed(&s), radial_speed(&next));
            for _ in 0..60 {
                let mid = (lo - flo * (hi - lo) / (fhi - flo)).clamp(lo, hi);
                let fm = radial_speed(&rk4(&s, mid));
                if fm * sign > 0.0 {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                    fhi = fm;
                }
                if (hi - lo).abs() < 1e-15 || fm == 0.0 {
                    lo = mid;
                    break;
                }
            }
            let end = rk4(&s, lo);
            return Some((arc + lo, end[1].atan2(end[0])));
        }
        s = next;
        arc += STEP;
    }
    None
}

/// Shoots the planar self-shrinker with rotation index `p` and `q` lobes.
///
/// Starting at the point closest to the origin, the swept polar angle
/// between consecutive critical points of `|X|` decreases from `π/√2`
/// (the circle branch) towards `π/2`; bisection on the starting distance
/// matches it to `πp/q`. `(p, q) = (1, 1)` selects the round circle branch,
/// found by bisection on the constant-curvature condition `κ·r = 1`.
pub fn shoot_abresch_langer(p: u32, q: u32, vertices: usize) -> Result<ShotCurve> {
    if vertices < 8 {
        return Err(Error::input("need at least 8 vertices"));
    }
    if p == 1 && q == 1 {
        // κ = r/2 at a critical point; the circle needs κ = 1/r
        let (mut lo, mut hi) = (0.5, 3.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid * mid / 2.0 < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let r = 0.5 * (lo + hi);
        let curve = shapes::circle(r, vertices, 2);
        return Ok(ShotCurve { curve, closure_gap: 0.0, r_min: r, length: 2.0 * PI * r });
    }
    if p == 0 || q == 0 || gcd(p, q) != 1 {
        return Err(Error::input(format!("(p, q) = ({p}, {q}) must be a coprime pair of positive integers")));
    }
    let ratio = p as f64 / q as f64;
    if !(ratio > 0.5 && ratio < SQRT_2 / 2.0) {
        return Err(Error::Shooting(format!(
            "p/q = {ratio:.6} lies outside the admissible interval (1/2, √2/2); no closed curve with these indices"
        )));
    }
    let target = PI * ratio;
    let sweep = |r0: f64| half_period(r0).map(|(_, phi)| phi);
    // sweep(r0) decreases from π/√2 near r0 = √2 towards π/2 as r0 → 0
    let (mut lo, mut hi) = (1e-3, SQRT_2 - 1e-6);
    let (f_lo, f_hi) = match (sweep(lo), sweep(hi)) {
        (Some(a), Some(b)) => (a - target, b - target),
        _ => return Err(Error::Shooting("half period not reached at the bracket ends".into())),
    };
    if f_lo * f_hi > 0.0 {
        return Err(Error::Shooting(format!(
            "bracket [{lo}, {hi}] does not straddle the target sweep {target:.6}: residuals {f_lo:.3e}, {f_hi:.3e}"
        )));
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let f = sweep(mid).ok_or_else(|| Error::Shooting(format!("integration failed at r0 = {mid}")))? - target;
        if (f < 0.0) == (f_lo < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let r0 = 0.5 * (lo + hi);
    let (half, _) = half_period(r0).ok_or_else(|| Error::Shooting("final integration failed".into()))?;
    let length = 2.0 * q as f64 * half;
    let per_vertex = (length / vertices as f64 / STEP).ceil() as usize;
    let h = length / (vertices * per_vertex) as f64;
    let mut s = [r0, 0.0, PI / 2.0];
    let mut pts = Vec::with_capacity(vertices);
    for _ in 0..vertices {
        pts.push(vector(&[s[0], s[1]]));
        for _ in 0..per_vertex {
            s = rk4(&s, h);
        }
    }
    let closure_gap = ((s[0] - r0).powi(2) + s[1].powi(2)).sqrt();
    if closure_gap > 1e-6 {
        return Err(Error::Shooting(format!("curve failed to close: gap {closure_gap:.3e} at r0 = {r0}")));
    }
    Ok(ShotCurve { curve: PolyCurve::new(pts, true)?, closure_gap, r_min: r0, length })
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Initial data with a closed-form flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "datum", rename_all = "kebab-case")]
pub enum ExactDatum {
    /// A shrinker, `N_t = √(−t)·N_{−1}` for `t < 0`.
    Shrinker { spec: ShrinkerSpec },
    /// Round circle of radius `r0` at `t = 0`.
    RoundCircle { r0: f64, vertices: usize },
    /// Round sphere of radius `r0` at `t = 0`.
    RoundSphere { r0: f64, level: usize },
}

impl ExactDatum {
    /// Extinction time.
    pub fn extinction(&self) -> f64 {
        match self {
            ExactDatum::Shrinker { .. } => 0.0,
            ExactDatum::RoundCircle { r0, .. } => r0 * r0 / 2.0,
            ExactDatum::RoundSphere { r0, .. } => r0 * r0 / 4.0,
        }
    }

    /// Radius of the round solution at time `t`.
    pub fn radius(&self, t: f64) -> Result<f64> {
        if !(t < self.extinction()) {
            return Err(Error::input(format!("t = {t} is at or beyond extinction {}", self.extinction())));
        }
        Ok(match self {
            ExactDatum::Shrinker { spec } => {
                let base = match spec {
                    ShrinkerSpec::Sphere { .. } => 2.0,
                    ShrinkerSpec::Plane { .. } => 0.0,
                    _ => SQRT_2,
                };
                base * (-t).sqrt()
            }
            ExactDatum::RoundCircle { r0, .. } => (r0 * r0 - 2.0 * t).sqrt(),
            ExactDatum::RoundSphere { r0, .. } => (r0 * r0 - 4.0 * t).sqrt(),
        })
    }
}

/// Geometry of the exact solution at time `t`.
pub fn exact_flow(datum: &ExactDatum, t: f64) -> Result<Geometry> {
    let r = datum.radius(t)?;
    match datum {
        ExactDatum::Shrinker { spec } => {
            let base = make_shrinker(spec)?;
            if matches!(spec, ShrinkerSpec::Plane { .. }) {
                return Ok(base);
            }
            base.similarity(&AmbientVector::zeros(base.dim()), (-t).sqrt())
        }
        ExactDatum::RoundCircle { r0, vertices } => {
            if !(*r0 > 0.0) {
                return Err(Error::input("radius must be positive"));
            }
            Ok(shapes::circle(r, *vertices, 2).into())
        }
        ExactDatum::RoundSphere { r0, level } => {
            if !(*r0 > 0.0) {
                return Err(Error::input("radius must be positive"));
            }
            Ok(shapes::icosphere(*level, r).into())
        }
    }
}

/// Vertices within two edge hops of `i`, excluding `i`.
fn two_ring(m: &TriMesh, i: usize) -> Vec<usize> {
    let nb = &m.topology().vertex_neighbors;
    let mut ring: Vec<usize> = nb[i].clone();
    for &j in &nb[i] {
        ring.extend(nb[j].iter().copied());
    }
    ring.sort_unstable();
    ring.dedup();
    ring.retain(|&j| j != i);
    ring
}

/// Least-squares quadric fit of the 2-ring in local normal coordinates,
/// `|A|²` from its Hessian. `None` where the fit is rank deficient.
pub fn quadric_fit_a(m: &TriMesh) -> Vec<Option<f64>> {
    (0..m.vertex_count()).map(|i| fit_vertex(m, i)).collect()
}

fn fit_vertex(m: &TriMesh, i: usize) -> Option<f64> {
    let ring = two_ring(m, i);
    if ring.len() < 5 {
        return None;
    }
    let p = m.vertices();
    let n = m.dim();
    let x0 = &p[i];
    let offsets: Vec<AmbientVector> = ring.iter().map(|&j| &p[j] - x0).collect();
    // initial tangent plane from the 1-ring covariance
    let mut cov = DMatrix::<f64>::zeros(n, n);
    for d in &offsets {
        cov += d * d.transpose();
    }
    let eig = SymmetricEigen::new(cov);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|a, b| eig.eigenvalues[*b].total_cmp(&eig.eigenvalues[*a]));
    let mut tangent = vec![eig.eigenvectors.column(idx[0]).into_owned(), eig.eigenvectors.column(idx[1]).into_owned()];
    let mut result = None;
    for _ in 0..3 {
        let tangent_on = orthonormalize(&tangent);
        if tangent_on.len() < 2 {
            return None;
        }
        let basis = complete_basis(&tangent_on, n);
        let normals = &basis[2..];
        let rows = offsets.len();
        let mut design = DMatrix::<f64>::zeros(rows, 6);
        for (r, d) in offsets.iter().enumerate() {
            let (u, v) = (d.dot(&tangent_on[0]), d.dot(&tangent_on[1]));
            let row = [1.0, u, v, u * u, u * v, v * v];
            for (c, val) in row.iter().enumerate() {
                design[(r, c)] = *val;
            }
        }
        let svd = design.clone().svd(true, true);
        let smax = svd.singular_values.max();
        if svd.singular_values.min() < 1e-10 * smax {
            return None;
        }
        let mut sq = 0.0;
        let mut grads = Vec::with_capacity(normals.len());
        for nv in normals {
            let heights = DVector::from_iterator(rows, offsets.iter().map(|d| d.dot(nv)));
            let coef = svd.solve(&heights, 1e-14).ok()?;
            let hess = [[2.0 * coef[3], coef[4]], [coef[4], 2.0 * coef[5]]];
            let grad = [coef[1], coef[2]];
            // metric of the fitted graph at the origin
            let g = [[1.0 + grad[0] * grad[0], grad[0] * grad[1]], [grad[0] * grad[1], 1.0 + grad[1] * grad[1]]];
            let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
            let gi = [[g[1][1] / det, -g[0][1] / det], [-g[1][0] / det, g[0][0] / det]];
            let scale = 1.0 / (1.0 + grad[0] * grad[0] + grad[1] * grad[1]);
            let mut s = 0.0;
            for a in 0..2 {
                for b in 0..2 {
                    for c in 0..2 {
                        for d in 0..2 {
                            s += gi[a][c] * gi[b][d] * hess[a][b] * hess[c][d];
                        }
                    }
                }
            }
            sq += s * scale;
            grads.push(grad);
        }
        result = Some(sq);
        // tilt the plane onto the fitted tangent plane and refit
        let max_tilt = grads.iter().map(|g| g[0].abs().max(g[1].abs())).fold(0.0, f64::max);
        if max_tilt < 1e-12 {
            break;
        }
        tangent = (0..2)
            .map(|a| {
                let mut t = tangent_on[a].clone();
                for (nv, g) in normals.iter().zip(&grads) {
                    t.axpy(g[a], nv, 1.0);
                }
                t
            })
            .collect();
    }
    result
}
