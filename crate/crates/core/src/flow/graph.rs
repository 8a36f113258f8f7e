use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::geom::{check_finite, AmbientVector, TriMesh};
use crate::{Error, Result};

/// A vector-valued graph `x ↦ x + u(x)` over a rectangular grid in a
/// `k`-plane `T ⊂ R^n`, with `u` taking values in `T^⊥`.
///
/// Node `(i_1, …, i_k)` sits at plane coordinates `lower + spacing·i`; its
/// ambient position is `origin + Σ x_i t_i + Σ u^α ν_α`. Boundary nodes are
/// held fixed by the flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphRecord", into = "GraphRecord")]
pub struct GraphPatch {
    origin: AmbientVector,
    tangent: Vec<AmbientVector>,
    normal: Vec<AmbientVector>,
    lower: Vec<f64>,
    spacing: f64,
    shape: Vec<usize>,
    values: Vec<DVector<f64>>,
}

#[derive(Serialize, Deserialize)]
struct GraphRecord {
    origin: Vec<f64>,
    tangent: Vec<Vec<f64>>,
    normal: Vec<Vec<f64>>,
    lower: Vec<f64>,
    spacing: f64,
    shape: Vec<usize>,
    values: Vec<Vec<f64>>,
}

impl TryFrom<GraphRecord> for GraphPatch {
    type Error = Error;

    fn try_from(r: GraphRecord) -> Result<Self> {
        let v = |x: &Vec<f64>| DVector::from_column_slice(x);
        GraphPatch::new(
            v(&r.origin),
            r.tangent.iter().map(v).collect(),
            r.normal.iter().map(v).collect(),
            r.lower,
            r.spacing,
            r.shape,
            r.values.iter().map(v).collect(),
        )
    }
}

impl From<GraphPatch> for GraphRecord {
    fn from(p: GraphPatch) -> Self {
        let v = |x: &DVector<f64>| x.iter().copied().collect::<Vec<f64>>();
        GraphRecord {
            origin: v(&p.origin),
            tangent: p.tangent.iter().map(v).collect(),
            normal: p.normal.iter().map(v).collect(),
            lower: p.lower,
            spacing: p.spacing,
            shape: p.shape,
            values: p.values.iter().map(v).collect(),
        }
    }
}

/// Second fundamental form of a graph at an interior node.
#[derive(Debug, Clone)]
pub struct GraphForm {
    /// `A_ij`, row-major `k × k`, as ambient normal vectors.
    pub a: Vec<AmbientVector>,
    /// `|A|² = g^{ik} g^{jl} A_ij·A_kl`.
    pub sq_norm_a: f64,
    /// `H = g^{ij} A_ij`.
    pub mean_curvature: AmbientVector,
    /// `|D²u|² = Σ_ij |D²_ij u|²`.
    pub sq_norm_d2u: f64,
    /// `|Du|² = Σ_i |D_i u|²`.
    pub sq_norm_du: f64,
    /// `√det g`, the area element.
    pub area_element: f64,
    pub normal_projector: DMatrix<f64>,
}

impl GraphPatch {
    pub fn new(
        origin: AmbientVector,
        tangent: Vec<AmbientVector>,
        normal: Vec<AmbientVector>,
        lower: Vec<f64>,
        spacing: f64,
        shape: Vec<usize>,
        values: Vec<DVector<f64>>,
    ) -> Result<Self> {
        let n = origin.len();
        let k = tangent.len();
        if k == 0 || k >= n {
            return Err(Error::input(format!("graph plane dimension {k} must lie in 1..{n}")));
        }
        if normal.len() != n - k {
            return Err(Error::input("normal basis must have n − k vectors"));
        }
        check_finite(&origin)?;
        let basis: Vec<&AmbientVector> = tangent.iter().chain(&normal).collect();
        for (i, a) in basis.iter().enumerate() {
            if a.len() != n {
                return Err(Error::input("basis vector has the wrong dimension"));
            }
            for (j, b) in basis.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                if (a.dot(b) - expect).abs() > 1e-12 {
                    return Err(Error::input("graph bases are not orthonormal"));
                }
            }
        }
        if lower.len() != k || shape.len() != k {
            return Err(Error::input("grid lower corner and shape must have k entries"));
        }
        if shape.iter().any(|&s| s < 3) {
            return Err(Error::input("graph grid needs at least 3 nodes per axis"));
        }
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::input("grid spacing must be positive"));
        }
        if values.len() != shape.iter().product::<usize>() {
            return Err(Error::input("graph values do not match the grid shape"));
        }
        for v in &values {
            if v.len() != n - k {
                return Err(Error::input("graph values must have n − k components"));
            }
            check_finite(v)?;
        }
        Ok(GraphPatch { origin, tangent, normal, lower, spacing, shape, values })
    }

    /// Graph over the coordinate plane `span{e_1, …, e_k}` of `R^n`, on the
    /// cube `[−w, w]^k` with `cells` intervals per axis.
    pub fn standard(k: usize, n: usize, half_width: f64, cells: usize, f: impl Fn(&[f64]) -> DVector<f64>) -> Result<Self> {
        if k == 0 || k >= n {
            return Err(Error::input(format!("graph plane dimension {k} must lie in 1..{n}")));
        }
        let unit = |i: usize| {
            let mut e = DVector::zeros(n);
            e[i] = 1.0;
            e
        };
        let tangent = (0..k).map(unit).collect();
        let normal = (k..n).map(unit).collect();
        let spacing = 2.0 * half_width / cells as f64;
        let shape = vec![cells + 1; k];
        let lower = vec![-half_width; k];
        let count: usize = shape.iter().product();
        let mut values = Vec::with_capacity(count);
        let mut x = vec![0.0; k];
        for node in 0..count {
            let idx = multi_index(&shape, node);
            for i in 0..k {
                x[i] = lower[i] + spacing * idx[i] as f64;
            }
            values.push(f(&x));
        }
        GraphPatch::new(DVector::zeros(n), tangent, normal, lower, spacing, shape, values)
    }

    /// Plane dimension `k`.
    pub fn k(&self) -> usize {
        self.tangent.len()
    }

    /// Ambient dimension `n`.
    pub fn dim(&self) -> usize {
        self.origin.len()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn origin(&self) -> &AmbientVector {
        &self.origin
    }

    pub fn tangent_basis(&self) -> &[AmbientVector] {
        &self.tangent
    }

    pub fn normal_basis(&self) -> &[AmbientVector] {
        &self.normal
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn values(&self) -> &[DVector<f64>] {
        &self.values
    }

    pub fn node_count(&self) -> usize {
        self.values.len()
    }

    pub fn with_values(&self, values: Vec<DVector<f64>>) -> Result<Self> {
        GraphPatch::new(
            self.origin.clone(),
            self.tangent.clone(),
            self.normal.clone(),
            self.lower.clone(),
            self.spacing,
            self.shape.clone(),
            values,
        )
    }

    /// Applies the similarity `x ↦ scale·(x − shift)` to the embedded graph.
    pub fn similarity(&self, shift: &AmbientVector, scale: f64) -> Result<Self> {
        // express the shift in the graph frame and absorb it into the origin
        let origin = (&self.origin - shift) * scale;
        GraphPatch::new(
            origin,
            self.tangent.clone(),
            self.normal.clone(),
            self.lower.iter().map(|l| l * scale).collect(),
            self.spacing * scale,
            self.shape.clone(),
            self.values.iter().map(|v| v * scale).collect(),
        )
    }

    /// Rigid motion `x ↦ R x + b` of the embedded graph.
    pub fn rigid(&self, rotation: &DMatrix<f64>, translation: &AmbientVector) -> Result<Self> {
        GraphPatch::new(
            rotation * &self.origin + translation,
            self.tangent.iter().map(|t| rotation * t).collect(),
            self.normal.iter().map(|v| rotation * v).collect(),
            self.lower.clone(),
            self.spacing,
            self.shape.clone(),
            self.values.clone(),
        )
    }

    pub fn multi_index(&self, node: usize) -> Vec<usize> {
        multi_index(&self.shape, node)
    }

    fn linear_index(&self, idx: &[usize]) -> usize {
        let mut node = 0;
        for i in (0..idx.len()).rev() {
            node = node * self.shape[i] + idx[i];
        }
        node
    }

    /// Plane coordinates of a node.
    pub fn coords(&self, node: usize) -> Vec<f64> {
        self.multi_index(node)
            .iter()
            .enumerate()
            .map(|(i, &j)| self.lower[i] + self.spacing * j as f64)
            .collect()
    }

    /// Ambient position of a node.
    pub fn point(&self, node: usize) -> AmbientVector {
        let mut p = self.origin.clone();
        for (x, t) in self.coords(node).iter().zip(&self.tangent) {
            p.axpy(*x, t, 1.0);
        }
        for (u, v) in self.values[node].iter().zip(&self.normal) {
            p.axpy(*u, v, 1.0);
        }
        p
    }

    pub fn is_interior(&self, node: usize) -> bool {
        self.multi_index(node).iter().zip(&self.shape).all(|(&i, &s)| i > 0 && i + 1 < s)
    }

    /// Distance (in nodes) to the nearest grid face.
    pub fn depth(&self, node: usize) -> usize {
        self.multi_index(node).iter().zip(&self.shape).map(|(&i, &s)| i.min(s - 1 - i)).min().unwrap_or(0)
    }

    fn neighbour(&self, idx: &[usize], axis: usize, delta: isize) -> usize {
        let mut j = idx.to_vec();
        j[axis] = (j[axis] as isize + delta) as usize;
        self.linear_index(&j)
    }

    /// Central differences `D_i u` at an interior node.
    pub fn gradient(&self, node: usize) -> Vec<DVector<f64>> {
        let idx = self.multi_index(node);
        let h = self.spacing;
        (0..self.k())
            .map(|i| (&self.values[self.neighbour(&idx, i, 1)] - &self.values[self.neighbour(&idx, i, -1)]) / (2.0 * h))
            .collect()
    }

    /// Central second differences `D²_ij u` at an interior node, row-major.
    pub fn hessian(&self, node: usize) -> Vec<DVector<f64>> {
        let idx = self.multi_index(node);
        let h2 = self.spacing * self.spacing;
        let k = self.k();
        let mut out = Vec::with_capacity(k * k);
        for i in 0..k {
            for j in 0..k {
                let d = if i == j {
                    (&self.values[self.neighbour(&idx, i, 1)] - &self.values[node] * 2.0
                        + &self.values[self.neighbour(&idx, i, -1)])
                        / h2
                } else {
                    let mut pp = idx.clone();
                    let mut pm = idx.clone();
                    let mut mp = idx.clone();
                    let mut mm = idx.clone();
                    pp[i] += 1;
                    pp[j] += 1;
                    pm[i] += 1;
                    pm[j] -= 1;
                    mp[i] -= 1;
                    mp[j] += 1;
                    mm[i] -= 1;
                    mm[j] -= 1;
                    (&self.values[self.linear_index(&pp)] - &self.values[self.linear_index(&pm)]
                        - &self.values[self.linear_index(&mp)]
                        + &self.values[self.linear_index(&mm)])
                        / (4.0 * h2)
                };
                out.push(d);
            }
        }
        out
    }

    /// Maps a `T^⊥`-coordinate vector to the ambient space.
    fn to_ambient(&self, u: &DVector<f64>) -> AmbientVector {
        let mut v = DVector::zeros(self.dim());
        for (c, nv) in u.iter().zip(&self.normal) {
            v.axpy(*c, nv, 1.0);
        }
        v
    }

    /// Induced metric `g_ij = δ_ij + D_i u·D_j u` from a gradient.
    fn metric(grad: &[DVector<f64>]) -> DMatrix<f64> {
        let k = grad.len();
        DMatrix::from_fn(k, k, |i, j| if i == j { 1.0 } else { 0.0 } + grad[i].dot(&grad[j]))
    }

    /// `max |Du|` over interior nodes.
    pub fn max_slope(&self) -> f64 {
        (0..self.node_count())
            .filter(|&v| self.is_interior(v))
            .map(|v| self.gradient(v).iter().map(|g| g.norm_squared()).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// Triangulation of a two-dimensional patch.
    pub fn to_mesh(&self) -> Result<TriMesh> {
        if self.k() != 2 {
            return Err(Error::input("only two-dimensional graphs can be triangulated"));
        }
        let verts = (0..self.node_count()).map(|v| self.point(v)).collect();
        let (nx, ny) = (self.shape[0], self.shape[1]);
        let mut faces = Vec::with_capacity(2 * (nx - 1) * (ny - 1));
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                let a = self.linear_index(&[i, j]);
                let b = self.linear_index(&[i + 1, j]);
                let c = self.linear_index(&[i + 1, j + 1]);
                let d = self.linear_index(&[i, j + 1]);
                if (i + j) % 2 == 0 {
                    faces.push([a, b, c]);
                    faces.push([a, c, d]);
                } else {
                    faces.push([a, b, d]);
                    faces.push([b, c, d]);
                }
            }
        }
        TriMesh::new(verts, faces)
    }
}

pub(crate) fn multi_index(shape: &[usize], mut node: usize) -> Vec<usize> {
    shape
        .iter()
        .map(|&s| {
            let i = node % s;
            node /= s;
            i
        })
        .collect()
}

/// Second fundamental form at every interior node (`None` on the boundary).
///
/// `A_ij = P^⊥ D²_ij u`, where `P^⊥` projects onto the normal space of the
/// graph; `H` and `|A|²` are contracted with the inverse induced metric.
pub fn graph_second_form(p: &GraphPatch) -> Vec<Option<GraphForm>> {
    (0..p.node_count())
        .map(|v| {
            if !p.is_interior(v) {
                return None;
            }
            let k = p.k();
            let n = p.dim();
            let grad = p.gradient(v);
            let g = GraphPatch::metric(&grad);
            let g_inv = g.clone().try_inverse().expect("induced metric is positive definite");
            let frame: Vec<AmbientVector> = (0..k).map(|i| &p.tangent[i] + p.to_ambient(&grad[i])).collect();
            let x = DMatrix::from_columns(&frame);
            let tangent_proj = &x * &g_inv * x.transpose();
            let normal_projector = DMatrix::identity(n, n) - tangent_proj;
            let hess = p.hessian(v);
            let a: Vec<AmbientVector> = hess.iter().map(|d| &normal_projector * p.to_ambient(d)).collect();
            let mut mean_curvature = DVector::zeros(n);
            let mut sq_norm_a = 0.0;
            for i in 0..k {
                for j in 0..k {
                    mean_curvature.axpy(g_inv[(i, j)], &a[i * k + j], 1.0);
                    for kk in 0..k {
                        for l in 0..k {
                            sq_norm_a += g_inv[(i, kk)] * g_inv[(j, l)] * a[i * k + j].dot(&a[kk * k + l]);
                        }
                    }
                }
            }
            Some(GraphForm {
                a,
                sq_norm_a: sq_norm_a.max(0.0),
                mean_curvature,
                sq_norm_d2u: hess.iter().map(|d| d.norm_squared()).sum(),
                sq_norm_du: grad.iter().map(|d| d.norm_squared()).sum(),
                area_element: g.determinant().sqrt(),
                normal_projector,
            })
        })
        .collect()
}

/// Explicit stability bound `h² / (2k (1 + max|Du|²))`.
pub fn graph_dt_bound(p: &GraphPatch) -> f64 {
    let s = p.max_slope();
    p.spacing * p.spacing / (2.0 * p.k() as f64 * (1.0 + s * s))
}

/// One explicit step of `∂_t u = g^{ij}(Du) D²_ij u` with fixed boundary
/// values. Fails when `dt` exceeds the stability bound or the slope exceeds
/// `slope_cap`.
pub fn step_graph(p: &GraphPatch, dt: f64, slope_cap: f64) -> Result<GraphPatch> {
    let slope = p.max_slope();
    if slope > slope_cap {
        return Err(Error::GraphSlope { slope, cap: slope_cap });
    }
    let bound = graph_dt_bound(p);
    if dt > bound * (1.0 + 1e-12) {
        return Err(Error::Stability { dt, bound });
    }
    let k = p.k();
    let values = (0..p.node_count())
        .map(|v| {
            if !p.is_interior(v) {
                return p.values[v].clone();
            }
            let grad = p.gradient(v);
            let g_inv = GraphPatch::metric(&grad).try_inverse().expect("induced metric is positive definite");
            let hess = p.hessian(v);
            let mut du = DVector::zeros(p.values[v].len());
            for i in 0..k {
                for j in 0..k {
                    du.axpy(g_inv[(i, j)], &hess[i * k + j], 1.0);
                }
            }
            &p.values[v] + du * dt
        })
        .collect();
    p.with_values(values)
}
