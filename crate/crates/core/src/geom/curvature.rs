use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::mesh::TriMesh;
use super::vector::{diff_dot, AmbientVector};
use crate::{Error, Result};

/// Per-vertex discrete curvature of a triangle mesh.
#[derive(Debug, Clone)]
pub struct CurvatureField {
    /// Normal part of the cotangent Laplacian of position (1/length).
    pub mean_curvature: Vec<AmbientVector>,
    /// Raw cotangent Laplacian of position over the mixed area; this is the
    /// velocity used by the explicit flow.
    pub position_laplacian: Vec<AmbientVector>,
    /// `|A|² = max(0, |H|² − 2K)` (1/length²).
    pub sq_norm_a: Vec<f64>,
    /// Gauss curvature (1/length²). At boundary vertices this is the
    /// area-weighted mean of the interior neighbours.
    pub gauss: Vec<f64>,
    /// Orthogonal projector onto the fitted normal space.
    pub normal_projector: Vec<DMatrix<f64>>,
    /// Meyer mixed areas; they sum to the mesh area.
    pub mixed_area: Vec<f64>,
    /// Interior angle sum at each vertex.
    pub angle_sum: Vec<f64>,
    pub boundary: Vec<bool>,
    /// Largest amount `2K − |H|²` removed by the clamp, over all vertices.
    pub clamp_magnitude: f64,
}

impl CurvatureField {
    pub fn len(&self) -> usize {
        self.mixed_area.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mixed_area.is_empty()
    }

    /// Angle defect `2π − Σθ` (interior) or `π − Σθ` (boundary).
    pub fn angle_defect(&self, i: usize) -> f64 {
        if self.boundary[i] {
            PI - self.angle_sum[i]
        } else {
            2.0 * PI - self.angle_sum[i]
        }
    }

    /// Mass-lumped integral `Σ A_i f_i`.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.mixed_area.iter().zip(values).map(|(a, f)| a * f).sum()
    }

    pub fn sq_norm_h(&self) -> Vec<f64> {
        self.mean_curvature.iter().map(|h| h.norm_squared()).collect()
    }

    /// Orthonormal basis of the fitted tangent plane at vertex `i`.
    pub fn tangent_basis(&self, i: usize) -> [AmbientVector; 2] {
        let n = self.normal_projector[i].nrows();
        let tangent = DMatrix::identity(n, n) - &self.normal_projector[i];
        let eig = SymmetricEigen::new(tangent);
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|a, b| eig.eigenvalues[*b].total_cmp(&eig.eigenvalues[*a]));
        [eig.eigenvectors.column(idx[0]).into_owned(), eig.eigenvectors.column(idx[1]).into_owned()]
    }
}

/// Per-face corner data shared by curvature and area computations.
pub(crate) struct Corner {
    pub angle: f64,
    pub cot: f64,
}

pub(crate) fn face_corners(m: &TriMesh, f: usize) -> [Corner; 3] {
    let t = m.triangles()[f];
    let p = m.vertices();
    std::array::from_fn(|k| {
        let (a, b, c) = (&p[t[k]], &p[t[(k + 1) % 3]], &p[t[(k + 2) % 3]]);
        let uu = diff_dot(b, a, b, a);
        let vv = diff_dot(c, a, c, a);
        let dot = diff_dot(b, a, c, a);
        let cross = (uu * vv - dot * dot).max(0.0).sqrt();
        Corner { angle: cross.atan2(dot), cot: dot / cross }
    })
}

/// Meyer mixed-area contributions of one face to its three corners.
pub(crate) fn mixed_area_split(m: &TriMesh, f: usize, corners: &[Corner; 3]) -> [f64; 3] {
    let t = m.triangles()[f];
    let p = m.vertices();
    let area = m.face_area(f);
    let obtuse = corners.iter().position(|c| c.angle > 0.5 * PI);
    match obtuse {
        None => std::array::from_fn(|k| {
            let a = &p[t[k]];
            let b = &p[t[(k + 1) % 3]];
            let c = &p[t[(k + 2) % 3]];
            // Voronoi region: |ab|² cot(C) + |ac|² cot(B), over 8
            (diff_dot(b, a, b, a) * corners[(k + 2) % 3].cot + diff_dot(c, a, c, a) * corners[(k + 1) % 3].cot) / 8.0
        }),
        Some(o) => std::array::from_fn(|k| if k == o { area / 2.0 } else { area / 4.0 }),
    }
}

/// Cotangent Laplacian of position over the mixed area, with the mixed
/// areas: the explicit flow velocity without the curvature bookkeeping.
pub(crate) fn cotan_laplacian(m: &TriMesh) -> (Vec<AmbientVector>, Vec<f64>) {
    let nv = m.vertex_count();
    let p = m.vertices();
    let mut laplacian = vec![DVector::<f64>::zeros(m.dim()); nv];
    let mut mixed_area = vec![0.0; nv];
    for (f, t) in m.triangles().iter().enumerate() {
        let corners = face_corners(m, f);
        let split = mixed_area_split(m, f, &corners);
        for k in 0..3 {
            let (i, j, l) = (t[k], t[(k + 1) % 3], t[(k + 2) % 3]);
            mixed_area[i] += split[k];
            let (wj, wl) = (0.5 * corners[(k + 2) % 3].cot, 0.5 * corners[(k + 1) % 3].cot);
            let (pi, pj, pl) = (p[i].as_slice(), p[j].as_slice(), p[l].as_slice());
            for (d, out) in laplacian[i].iter_mut().enumerate() {
                *out += wj * (pj[d] - pi[d]) + wl * (pl[d] - pi[d]);
            }
        }
    }
    for (l, a) in laplacian.iter_mut().zip(&mixed_area) {
        *l /= *a;
    }
    (laplacian, mixed_area)
}

/// Curvature field from the intrinsic cotangent Laplacian, the angle defect
/// and the Gauss equation.
pub fn mesh_curvature(m: &TriMesh) -> Result<CurvatureField> {
    let topo = m.topology();
    let nv = m.vertex_count();
    let n = m.dim();
    let p = m.vertices();
    if let Some(i) = topo.vertex_faces.iter().position(|f| f.is_empty()) {
        return Err(Error::input(format!("isolated vertex {i}")));
    }

    let mut laplacian = vec![DVector::<f64>::zeros(n); nv];
    let mut mixed_area = vec![0.0; nv];
    let mut angle_sum = vec![0.0; nv];
    let mut plane_sum = vec![DMatrix::<f64>::zeros(n, n); nv];

    for (f, t) in m.triangles().iter().enumerate() {
        let corners = face_corners(m, f);
        let split = mixed_area_split(m, f, &corners);
        let area = m.face_area(f);
        // face tangent projector
        let u = &p[t[1]] - &p[t[0]];
        let mut v = &p[t[2]] - &p[t[0]];
        let un = u.norm();
        let e1 = &u / un;
        v.axpy(-e1.dot(&v), &e1, 1.0);
        let e2 = &v / v.norm();
        let face_proj = (&e1 * e1.transpose() + &e2 * e2.transpose()) * area;
        for k in 0..3 {
            let i = t[k];
            let j = t[(k + 1) % 3];
            let l = t[(k + 2) % 3];
            angle_sum[i] += corners[k].angle;
            mixed_area[i] += split[k];
            // edge (i, j) is opposite corner l; edge (i, l) opposite corner j
            let dij = &p[j] - &p[i];
            let dil = &p[l] - &p[i];
            laplacian[i].axpy(0.5 * corners[(k + 2) % 3].cot, &dij, 1.0);
            laplacian[i].axpy(0.5 * corners[(k + 1) % 3].cot, &dil, 1.0);
            plane_sum[i] += &face_proj;
        }
    }

    let identity = DMatrix::<f64>::identity(n, n);
    let mut normal_projector = Vec::with_capacity(nv);
    let mut position_laplacian = Vec::with_capacity(nv);
    let mut mean_curvature = Vec::with_capacity(nv);
    for i in 0..nv {
        let eig = SymmetricEigen::new(plane_sum[i].clone());
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|a, b| eig.eigenvalues[*b].total_cmp(&eig.eigenvalues[*a]));
        let t1 = eig.eigenvectors.column(idx[0]).into_owned();
        let t2 = eig.eigenvectors.column(idx[1]).into_owned();
        let proj = &identity - &t1 * t1.transpose() - &t2 * t2.transpose();
        let lap = &laplacian[i] / mixed_area[i];
        mean_curvature.push(&proj * &lap);
        position_laplacian.push(lap);
        normal_projector.push(proj);
    }

    let boundary = topo.boundary_vertex.clone();
    let mut gauss: Vec<f64> = (0..nv)
        .map(|i| if boundary[i] { 0.0 } else { (2.0 * PI - angle_sum[i]) / mixed_area[i] })
        .collect();
    for i in 0..nv {
        if boundary[i] {
            let (mut num, mut den) = (0.0, 0.0);
            for &j in &topo.vertex_neighbors[i] {
                if !boundary[j] {
                    num += gauss[j] * mixed_area[j];
                    den += mixed_area[j];
                }
            }
            gauss[i] = if den > 0.0 { num / den } else { 0.0 };
        }
    }

    let mut clamp_magnitude: f64 = 0.0;
    let sq_norm_a = (0..nv)
        .map(|i| {
            let raw = mean_curvature[i].norm_squared() - 2.0 * gauss[i];
            if raw < 0.0 {
                clamp_magnitude = clamp_magnitude.max(-raw);
            }
            raw.max(0.0)
        })
        .collect();

    Ok(CurvatureField {
        mean_curvature,
        position_laplacian,
        sq_norm_a,
        gauss,
        normal_projector,
        mixed_area,
        angle_sum,
        boundary,
        clamp_magnitude,
    })
}
