use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::vector::{angle_between, check_finite, diff_dot, AmbientVector};
use crate::{Error, Result};

/// A polygonal immersed curve in `R^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CurveRecord", into = "CurveRecord")]
pub struct PolyCurve {
    vertices: Vec<AmbientVector>,
    closed: bool,
}

#[derive(Serialize, Deserialize)]
struct CurveRecord {
    closed: bool,
    vertices: Vec<Vec<f64>>,
}

impl TryFrom<CurveRecord> for PolyCurve {
    type Error = Error;

    fn try_from(rec: CurveRecord) -> Result<Self> {
        let vertices = rec.vertices.iter().map(|v| DVector::from_column_slice(v)).collect();
        PolyCurve::new(vertices, rec.closed)
    }
}

impl From<PolyCurve> for CurveRecord {
    fn from(c: PolyCurve) -> Self {
        CurveRecord {
            closed: c.closed,
            vertices: c.vertices.iter().map(|v| v.iter().copied().collect()).collect(),
        }
    }
}

impl PolyCurve {
    pub fn new(vertices: Vec<AmbientVector>, closed: bool) -> Result<Self> {
        let min = if closed { 3 } else { 2 };
        if vertices.len() < min {
            return Err(Error::input(format!(
                "{} curve needs at least {min} vertices, got {}",
                if closed { "closed" } else { "open" },
                vertices.len()
            )));
        }
        let n = vertices[0].len();
        if n < 2 {
            return Err(Error::input("ambient dimension must be at least 2"));
        }
        for v in &vertices {
            if v.len() != n {
                return Err(Error::input("mixed ambient dimensions in curve"));
            }
            check_finite(v)?;
        }
        let curve = PolyCurve { vertices, closed };
        for (i, len) in curve.edge_lengths().iter().enumerate() {
            if *len <= 0.0 {
                return Err(Error::input(format!("zero-length edge {i}")));
            }
        }
        Ok(curve)
    }

    pub fn vertices(&self) -> &[AmbientVector] {
        &self.vertices
    }

    pub fn into_vertices(self) -> Vec<AmbientVector> {
        self.vertices
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vertices[0].len()
    }

    pub fn edge_count(&self) -> usize {
        if self.closed {
            self.vertices.len()
        } else {
            self.vertices.len() - 1
        }
    }

    /// Endpoints of edge `i`.
    pub fn edge(&self, i: usize) -> (&AmbientVector, &AmbientVector) {
        let j = (i + 1) % self.vertices.len();
        (&self.vertices[i], &self.vertices[j])
    }

    pub fn edge_lengths(&self) -> Vec<f64> {
        (0..self.edge_count())
            .map(|i| {
                let (a, b) = self.edge(i);
                diff_dot(b, a, b, a).sqrt()
            })
            .collect()
    }

    pub fn length(&self) -> f64 {
        self.edge_lengths().iter().sum()
    }

    /// Signed area enclosed by the projection onto the first two coordinates.
    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        let mut a = 0.0;
        for i in 0..self.edge_count() {
            let p = &self.vertices[i];
            let q = &self.vertices[(i + 1) % n];
            a += p[0] * q[1] - q[0] * p[1];
        }
        0.5 * a
    }

    pub fn centroid(&self) -> AmbientVector {
        let mut c = DVector::zeros(self.dim());
        for v in &self.vertices {
            c += v;
        }
        c / self.vertices.len() as f64
    }

    pub fn map_points(&self, f: impl Fn(&AmbientVector) -> AmbientVector) -> Result<Self> {
        PolyCurve::new(self.vertices.iter().map(f).collect(), self.closed)
    }

    /// Resamples the polygon at equal arc-length spacing, keeping vertex 0
    /// (and, for open curves, the last vertex) in place. The image of the
    /// polygon is unchanged up to corner cutting at the new sample points.
    pub fn redistribute(&self) -> Self {
        let lengths = self.edge_lengths();
        let total: f64 = lengths.iter().sum();
        let count = self.vertices.len();
        let spacing = total / self.edge_count() as f64;
        let mut out = Vec::with_capacity(count);
        out.push(self.vertices[0].clone());
        let mut edge = 0;
        let mut walked = 0.0;
        let interior = if self.closed { count } else { count - 1 };
        for i in 1..interior {
            let target = spacing * i as f64;
            while edge + 1 < lengths.len() && walked + lengths[edge] < target {
                walked += lengths[edge];
                edge += 1;
            }
            let s = ((target - walked) / lengths[edge]).clamp(0.0, 1.0);
            let (a, b) = self.edge(edge);
            out.push(a.lerp(b, s));
        }
        if !self.closed {
            out.push(self.vertices[count - 1].clone());
        }
        PolyCurve { vertices: out, closed: self.closed }
    }
}

/// Per-vertex discrete curvature of a polygon.
#[derive(Debug, Clone)]
pub struct CurveCurvature {
    /// Curvature vectors `k⃗` (units 1/length).
    pub vectors: Vec<AmbientVector>,
    /// Dual edge lengths: half the sum of the adjacent edge lengths.
    pub weights: Vec<f64>,
    /// Turning angle at each vertex (0 at the ends of an open curve).
    pub turning: Vec<f64>,
    /// Unit tangent at each vertex (normalised sum of adjacent edge directions).
    pub tangents: Vec<AmbientVector>,
}

impl CurveCurvature {
    /// `Σ weight·|k⃗|`; equals the total turning by construction.
    pub fn integrated_norm(&self) -> f64 {
        self.vectors.iter().zip(&self.weights).map(|(k, w)| k.norm() * w).sum()
    }
}

/// Turning angle at each vertex divided by the dual edge length, pointing
/// along the bisector of the incoming and outgoing unit tangents.
pub fn curve_curvature(c: &PolyCurve) -> CurveCurvature {
    let n = c.len();
    let dim = c.dim();
    let lengths = c.edge_lengths();
    let units: Vec<AmbientVector> = (0..c.edge_count())
        .map(|i| {
            let (a, b) = c.edge(i);
            (b - a) / lengths[i]
        })
        .collect();
    let mut vectors = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let mut turning = Vec::with_capacity(n);
    let mut tangents = Vec::with_capacity(n);
    for i in 0..n {
        let (incoming, outgoing) = if c.closed {
            (Some((i + n - 1) % n), Some(i))
        } else {
            (i.checked_sub(1), (i < n - 1).then_some(i))
        };
        match (incoming, outgoing) {
            (Some(e0), Some(e1)) => {
                let w = 0.5 * (lengths[e0] + lengths[e1]);
                let theta = angle_between(&units[e0], &units[e1]);
                let mut k = &units[e1] - &units[e0];
                let dn = k.norm();
                if dn > 0.0 {
                    k *= theta / (w * dn);
                }
                let mut t = &units[e0] + &units[e1];
                let tn = t.norm();
                if tn > 1e-300 {
                    t /= tn;
                } else {
                    t.copy_from(&units[e1]);
                }
                tangents.push(t);
                vectors.push(k);
                weights.push(w);
                turning.push(theta);
            }
            (Some(e), None) | (None, Some(e)) => {
                vectors.push(DVector::zeros(dim));
                weights.push(0.5 * lengths[e]);
                turning.push(0.0);
                tangents.push(units[e].clone());
            }
            (None, None) => unreachable!("curves have at least one edge"),
        }
    }
    CurveCurvature { vectors, weights, turning, tangents }
}

/// Vertices moved by `dt·k⃗`, the same curvature vectors as
/// [`curve_curvature`] but without intermediate allocations.
pub(crate) fn curvature_displaced(c: &PolyCurve, dt: f64) -> Vec<AmbientVector> {
    let n = c.len();
    let dim = c.dim();
    let mut u0 = vec![0.0; dim];
    let mut u1 = vec![0.0; dim];
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let x = c.vertices[i].as_slice();
        let mut moved = c.vertices[i].clone();
        let interior = c.closed || (i > 0 && i + 1 < n);
        if interior {
            let prev = c.vertices[(i + n - 1) % n].as_slice();
            let next = c.vertices[(i + 1) % n].as_slice();
            for d in 0..dim {
                u0[d] = x[d] - prev[d];
                u1[d] = next[d] - x[d];
            }
            let l0 = u0.iter().map(|v| v * v).sum::<f64>().sqrt();
            let l1 = u1.iter().map(|v| v * v).sum::<f64>().sqrt();
            let w = 0.5 * (l0 + l1);
            let (mut dot, mut uu, mut vv, mut dn2) = (0.0, 0.0, 0.0, 0.0);
            for d in 0..dim {
                u0[d] /= l0;
                u1[d] /= l1;
                dot += u0[d] * u1[d];
                uu += u0[d] * u0[d];
                vv += u1[d] * u1[d];
                dn2 += (u1[d] - u0[d]).powi(2);
            }
            let cross = (uu * vv - dot * dot).max(0.0).sqrt();
            let theta = cross.atan2(dot);
            let dn = dn2.sqrt();
            if dn > 0.0 {
                let s = dt * theta / (w * dn);
                for (d, m) in moved.iter_mut().enumerate() {
                    *m += s * (u1[d] - u0[d]);
                }
            }
        }
        out.push(moved);
    }
    out
}

/// Sum of the turning angles of a closed polygon.
pub fn total_curvature(c: &PolyCurve) -> Result<f64> {
    if !c.is_closed() {
        return Err(Error::input("total curvature is defined for closed curves"));
    }
    Ok(curve_curvature(c).turning.iter().sum())
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::geom::shapes;

    #[test]
    fn circle_curvature_is_inverse_radius() {
        for (r, n) in [(1.0, 256), (2.0, 256)] {
            let c = shapes::circle(r, n, 2);
            let cc = curve_curvature(&c);
            for k in &cc.vectors {
                assert!((k.norm() - 1.0 / r).abs() < 1e-3, "|k| = {}", k.norm());
            }
            // pointing at the centre
            let v0 = &c.vertices()[0];
            assert!(cc.vectors[0].dot(v0) < 0.0);
        }
    }

    #[test]
    fn straight_polyline_has_zero_interior_curvature() {
        let pts = (0..4).map(|i| DVector::from_vec(vec![i as f64, 2.0 * i as f64])).collect();
        let c = PolyCurve::new(pts, false).unwrap();
        let cc = curve_curvature(&c);
        for k in &cc.vectors {
            assert!(k.norm() < 1e-12);
        }
    }

    #[test]
    fn square_total_turning() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]
            .iter()
            .map(|p| DVector::from_column_slice(p))
            .collect();
        let c = PolyCurve::new(pts, true).unwrap();
        assert!((total_curvature(&c).unwrap() - 2.0 * PI).abs() < 1e-15);
    }

    #[test]
    fn open_curve_total_curvature_is_an_error() {
        let c = PolyCurve::new(vec![DVector::from_vec(vec![0.0, 0.0]), DVector::from_vec(vec![1.0, 0.0])], false)
            .unwrap();
        assert!(total_curvature(&c).is_err());
    }

    #[test]
    fn degenerate_edge_rejected() {
        let p = DVector::from_vec(vec![1.0, 1.0]);
        let q = DVector::from_vec(vec![2.0, 1.0]);
        assert!(PolyCurve::new(vec![p.clone(), p, q], true).is_err());
    }

    #[test]
    fn integrated_norm_matches_turning() {
        let c = shapes::ellipse(2.0, 1.0, 100);
        let cc = curve_curvature(&c);
        let total: f64 = cc.turning.iter().sum();
        assert!((cc.integrated_norm() - total).abs() < 1e-12);
        assert!(cc.turning.iter().all(|t| (0.0..=PI).contains(t)));
    }

    #[test]
    fn redistribution_keeps_regular_polygons() {
        let c = shapes::circle(1.0, 64, 2);
        let r = c.redistribute();
        for (a, b) in c.vertices().iter().zip(r.vertices()) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
