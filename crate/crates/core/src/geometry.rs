//! A single handle over the three kinds of evolving geometry, with the
//! per-point samples that integrals and estimates consume.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::flow::{graph_second_form, GraphPatch};
use crate::geom::{
    ball_restrict, curve_curvature, mesh_curvature, point_segment_distance, point_triangle_distance, segment_length_in_ball,
    AmbientVector, PolyCurve, TriMesh,
};
use crate::{Error, Result};

/// A curve, a triangle mesh or a graphical patch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "lowercase")]
pub enum Geometry {
    Curve(PolyCurve),
    Mesh(TriMesh),
    Graph(GraphPatch),
}

/// One quadrature sample of a discrete geometry: a point, its measure
/// weight and the curvature quantities there.
#[derive(Debug, Clone)]
pub struct FieldSample {
    pub x: AmbientVector,
    pub weight: f64,
    pub mean_curvature: AmbientVector,
    pub sq_norm_a: f64,
    pub normal_projector: DMatrix<f64>,
    /// False on boundary vertices and boundary graph nodes, where the
    /// curvature stencil is incomplete.
    pub interior: bool,
}

/// Per-vertex samples of a curve: the dual edge length as weight.
fn curve_samples(c: &PolyCurve) -> Vec<FieldSample> {
    let cc = curve_curvature(c);
    let n = c.dim();
    let closed = c.is_closed();
    c.vertices()
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let t = &cc.tangents[i];
            let interior = closed || (i > 0 && i + 1 < c.len());
            FieldSample {
                x: x.clone(),
                weight: cc.weights[i],
                mean_curvature: cc.vectors[i].clone(),
                sq_norm_a: cc.vectors[i].norm_squared(),
                normal_projector: DMatrix::identity(n, n) - t * t.transpose(),
                interior,
            }
        })
        .collect()
}

fn mesh_samples(m: &TriMesh) -> Result<Vec<FieldSample>> {
    let f = mesh_curvature(m)?;
    Ok((0..m.vertex_count())
        .map(|i| FieldSample {
            x: m.vertices()[i].clone(),
            weight: f.mixed_area[i],
            mean_curvature: f.mean_curvature[i].clone(),
            sq_norm_a: f.sq_norm_a[i],
            normal_projector: f.normal_projector[i].clone(),
            interior: !f.boundary[i],
        })
        .collect())
}

/// Node samples of a graph with trapezoid weights times the area element.
fn graph_samples(p: &GraphPatch) -> Vec<FieldSample> {
    let forms = graph_second_form(p);
    let n = p.dim();
    let hk = p.spacing().powi(p.k() as i32);
    (0..p.node_count())
        .map(|v| {
            let idx = p.multi_index(v);
            let trapezoid: f64 = idx.iter().zip(p.shape()).map(|(&i, &s)| if i == 0 || i + 1 == s { 0.5 } else { 1.0 }).product();
            match &forms[v] {
                Some(f) => FieldSample {
                    x: p.point(v),
                    weight: hk * trapezoid * f.area_element,
                    mean_curvature: f.mean_curvature.clone(),
                    sq_norm_a: f.sq_norm_a,
                    normal_projector: f.normal_projector.clone(),
                    interior: true,
                },
                None => {
                    // boundary node: one-sided slope is not needed for the weight
                    // of a fixed boundary, use the plane's projector
                    let mut proj = DMatrix::zeros(n, n);
                    for nv in p.normal_basis() {
                        proj += nv * nv.transpose();
                    }
                    FieldSample {
                        x: p.point(v),
                        weight: hk * trapezoid,
                        mean_curvature: DVector::zeros(n),
                        sq_norm_a: 0.0,
                        normal_projector: proj,
                        interior: false,
                    }
                }
            }
        })
        .collect()
}

impl Geometry {
    pub fn kind(&self) -> &'static str {
        match self {
            Geometry::Curve(_) => "curve",
            Geometry::Mesh(_) => "mesh",
            Geometry::Graph(_) => "graph",
        }
    }

    /// Ambient dimension `n`.
    pub fn dim(&self) -> usize {
        match self {
            Geometry::Curve(c) => c.dim(),
            Geometry::Mesh(m) => m.dim(),
            Geometry::Graph(p) => p.dim(),
        }
    }

    /// Intrinsic dimension `k`.
    pub fn intrinsic_dim(&self) -> usize {
        match self {
            Geometry::Curve(_) => 1,
            Geometry::Mesh(_) => 2,
            Geometry::Graph(p) => p.k(),
        }
    }

    pub fn is_closed(&self) -> bool {
        match self {
            Geometry::Curve(c) => c.is_closed(),
            Geometry::Mesh(m) => m.is_closed(),
            Geometry::Graph(_) => false,
        }
    }

    /// Curvature samples with measure weights.
    pub fn samples(&self) -> Result<Vec<FieldSample>> {
        match self {
            Geometry::Curve(c) => Ok(curve_samples(c)),
            Geometry::Mesh(m) => mesh_samples(m),
            Geometry::Graph(p) => Ok(graph_samples(p)),
        }
    }

    /// Length, area or `k`-volume.
    pub fn measure(&self) -> f64 {
        match self {
            Geometry::Curve(c) => c.length(),
            Geometry::Mesh(m) => m.area(),
            Geometry::Graph(p) => graph_samples(p).iter().map(|s| s.weight).sum(),
        }
    }

    /// Sample points (vertices or nodes).
    pub fn points(&self) -> Vec<AmbientVector> {
        match self {
            Geometry::Curve(c) => c.vertices().to_vec(),
            Geometry::Mesh(m) => m.vertices().to_vec(),
            Geometry::Graph(p) => (0..p.node_count()).map(|v| p.point(v)).collect(),
        }
    }

    /// Smallest edge length or grid spacing.
    pub fn min_spacing(&self) -> f64 {
        match self {
            Geometry::Curve(c) => c.edge_lengths().into_iter().fold(f64::INFINITY, f64::min),
            Geometry::Mesh(m) => m.min_edge(),
            Geometry::Graph(p) => p.spacing(),
        }
    }

    /// `max |A|` over interior samples.
    pub fn max_abs_a(&self) -> Result<f64> {
        Ok(self
            .samples()?
            .iter()
            .filter(|s| s.interior)
            .map(|s| s.sq_norm_a.sqrt())
            .fold(0.0, f64::max))
    }

    /// The similarity `x ↦ scale·(x − shift)`.
    pub fn similarity(&self, shift: &AmbientVector, scale: f64) -> Result<Geometry> {
        if !(scale > 0.0) {
            return Err(Error::input("similarity scale must be positive"));
        }
        Ok(match self {
            Geometry::Curve(c) => Geometry::Curve(c.map_points(|x| (x - shift) * scale)?),
            Geometry::Mesh(m) => Geometry::Mesh(m.map_points(|x| (x - shift) * scale)?),
            Geometry::Graph(p) => Geometry::Graph(p.similarity(shift, scale)?),
        })
    }

    /// Rigid motion `x ↦ R x + b`.
    pub fn rigid(&self, rotation: &DMatrix<f64>, translation: &AmbientVector) -> Result<Geometry> {
        Ok(match self {
            Geometry::Curve(c) => Geometry::Curve(c.map_points(|x| rotation * x + translation)?),
            Geometry::Mesh(m) => Geometry::Mesh(m.map_points(|x| rotation * x + translation)?),
            Geometry::Graph(p) => Geometry::Graph(p.rigid(rotation, translation)?),
        })
    }

    /// Whether two geometries share kind and combinatorics, so that their
    /// vertices can be blended.
    pub fn same_structure(&self, other: &Geometry) -> bool {
        match (self, other) {
            (Geometry::Curve(a), Geometry::Curve(b)) => a.len() == b.len() && a.is_closed() == b.is_closed(),
            (Geometry::Mesh(a), Geometry::Mesh(b)) => a.triangles() == b.triangles(),
            (Geometry::Graph(a), Geometry::Graph(b)) => {
                a.shape() == b.shape()
                    && a.spacing() == b.spacing()
                    && a.lower() == b.lower()
                    && a.origin() == b.origin()
                    && a.tangent_basis() == b.tangent_basis()
            }
            _ => false,
        }
    }

    /// Vertex-wise linear blend `(1 − s)·self + s·other`.
    pub fn lerp(&self, other: &Geometry, s: f64) -> Result<Geometry> {
        if !self.same_structure(other) {
            return Err(Error::input("cannot interpolate geometries with different structure"));
        }
        let mix = |a: &[AmbientVector], b: &[AmbientVector]| -> Vec<AmbientVector> {
            a.iter().zip(b).map(|(p, q)| p * (1.0 - s) + q * s).collect()
        };
        Ok(match (self, other) {
            (Geometry::Curve(a), Geometry::Curve(b)) => {
                Geometry::Curve(PolyCurve::new(mix(a.vertices(), b.vertices()), a.is_closed())?)
            }
            (Geometry::Mesh(a), Geometry::Mesh(b)) => Geometry::Mesh(a.with_vertices(mix(a.vertices(), b.vertices()))?),
            (Geometry::Graph(a), Geometry::Graph(b)) => {
                Geometry::Graph(a.with_values(a.values().iter().zip(b.values()).map(|(p, q)| p * (1.0 - s) + q * s).collect())?)
            }
            _ => unreachable!("structure checked above"),
        })
    }

    /// `∫_{G ∩ B_r(x)} f` of a per-sample quantity. Meshes are clipped
    /// exactly; curves use the in-ball length of each edge split between
    /// its ends; graph nodes count when inside the ball.
    pub fn ball_integral(&self, center: &AmbientVector, r: f64, f: impl Fn(&FieldSample) -> f64) -> Result<f64> {
        self.ball_integral_with(&self.samples()?, center, r, f)
    }

    /// [`Geometry::ball_integral`] with samples computed by the caller.
    pub fn ball_integral_with(
        &self,
        samples: &[FieldSample],
        center: &AmbientVector,
        r: f64,
        f: impl Fn(&FieldSample) -> f64,
    ) -> Result<f64> {
        match self {
            Geometry::Mesh(m) => {
                let values: Vec<f64> = samples.iter().map(&f).collect();
                Ok(ball_restrict(m, center, r)?.integrate(&values))
            }
            Geometry::Curve(c) => {
                let mut total = 0.0;
                for e in 0..c.edge_count() {
                    let (a, b) = c.edge(e);
                    let len = segment_length_in_ball(a, b, center, r);
                    let j = (e + 1) % c.len();
                    total += 0.5 * len * (f(&samples[e]) + f(&samples[j]));
                }
                Ok(total)
            }
            Geometry::Graph(_) => Ok(samples.iter().filter(|s| (&s.x - center).norm() < r).map(|s| s.weight * f(s)).sum()),
        }
    }

    /// Distance from `p` to the geometry (to its edges, faces or the
    /// triangulated graph).
    fn distance_to(&self, p: &AmbientVector, mesh: Option<&TriMesh>) -> f64 {
        match (self, mesh) {
            (Geometry::Curve(c), _) => (0..c.edge_count())
                .map(|e| {
                    let (a, b) = c.edge(e);
                    point_segment_distance(p, a, b)
                })
                .fold(f64::INFINITY, f64::min),
            (_, Some(m)) => m
                .triangles()
                .iter()
                .map(|t| point_triangle_distance(p, &m.vertices()[t[0]], &m.vertices()[t[1]], &m.vertices()[t[2]]))
                .fold(f64::INFINITY, f64::min),
            _ => f64::INFINITY,
        }
    }

    fn as_triangles(&self) -> Result<Option<TriMesh>> {
        Ok(match self {
            Geometry::Curve(_) => None,
            Geometry::Mesh(m) => Some(m.clone()),
            Geometry::Graph(p) => Some(p.to_mesh()?),
        })
    }

    /// Symmetric Hausdorff distance measured from the vertices of each
    /// geometry to the edges or faces of the other.
    pub fn hausdorff(&self, other: &Geometry) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::input("geometries live in different ambient dimensions"));
        }
        let (ma, mb) = (self.as_triangles()?, other.as_triangles()?);
        let one_sided = |from: &Geometry, to: &Geometry, m: Option<&TriMesh>| {
            from.points().iter().map(|p| to.distance_to(p, m)).fold(0.0, f64::max)
        };
        Ok(one_sided(self, other, mb.as_ref()).max(one_sided(other, self, ma.as_ref())))
    }

    pub fn as_curve(&self) -> Option<&PolyCurve> {
        match self {
            Geometry::Curve(c) => Some(c),
            _ => None,
        }
    }

    pub fn as_mesh(&self) -> Option<&TriMesh> {
        match self {
            Geometry::Mesh(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_graph(&self) -> Option<&GraphPatch> {
        match self {
            Geometry::Graph(p) => Some(p),
            _ => None,
        }
    }
}

impl From<PolyCurve> for Geometry {
    fn from(c: PolyCurve) -> Self {
        Geometry::Curve(c)
    }
}

impl From<TriMesh> for Geometry {
    fn from(m: TriMesh) -> Self {
        Geometry::Mesh(m)
    }
}

impl From<GraphPatch> for Geometry {
    fn from(p: GraphPatch) -> Self {
        Geometry::Graph(p)
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::geom::{shapes, vector};

    #[test]
    fn measures() {
        let c: Geometry = shapes::circle(1.0, 2000, 2).into();
        assert!((c.measure() - 2.0 * PI).abs() < 1e-5);
        let g: Geometry = GraphPatch::standard(2, 3, 1.0, 10, |_| DVector::zeros(1)).unwrap().into();
        assert!((g.measure() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn ball_integral_of_unity_is_in_ball_measure() {
        let c: Geometry = shapes::circle(1.0, 400, 3).into();
        let half = c.ball_integral(&vector(&[1.0, 0.0, 0.0]), 2f64.sqrt(), |_| 1.0).unwrap();
        assert!((half - PI).abs() < 1e-2);
    }

    #[test]
    fn lerp_endpoints() {
        let a: Geometry = shapes::circle(1.0, 16, 2).into();
        let b = a.similarity(&vector(&[0.0, 0.0]), 2.0).unwrap();
        let mid = a.lerp(&b, 0.5).unwrap();
        let r = mid.points()[0].norm();
        assert!((r - 1.5).abs() < 1e-14);
        assert!(a.lerp(&Geometry::Mesh(shapes::icosphere(0, 1.0)), 0.5).is_err());
    }

    #[test]
    fn hausdorff_of_concentric_circles() {
        let a: Geometry = shapes::circle(1.0, 64, 2).into();
        let b: Geometry = shapes::circle(1.1, 64, 2).into();
        let d = a.hausdorff(&b).unwrap();
        assert!((d - 0.1).abs() < 2e-3, "{d}");
        assert_eq!(a.hausdorff(&a).unwrap(), 0.0);
        let s: Geometry = shapes::icosphere(2, 1.0).into();
        let t = s.similarity(&vector(&[0.0, 0.0, 0.0]), 1.05).unwrap();
        assert!((s.hausdorff(&t).unwrap() - 0.05).abs() < 1e-2);
    }
}
