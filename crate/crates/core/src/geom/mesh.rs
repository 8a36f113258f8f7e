use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::vector::{check_finite, diff_dot, triangle_area, AmbientVector};
use crate::{Error, Result};

/// An oriented triangle mesh in `R^n` (`n >= 3`), possibly with boundary.
///
/// Construction validates edge-manifoldness, consistent orientation across
/// interior edges and strictly positive triangle areas.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "MeshRecord", into = "MeshRecord")]
pub struct TriMesh {
    vertices: Vec<AmbientVector>,
    triangles: Vec<[usize; 3]>,
    topology: OnceLock<Arc<Topology>>,
}

#[derive(Serialize, Deserialize)]
struct MeshRecord {
    vertices: Vec<Vec<f64>>,
    triangles: Vec<[usize; 3]>,
}

impl TryFrom<MeshRecord> for TriMesh {
    type Error = Error;

    fn try_from(rec: MeshRecord) -> Result<Self> {
        let vertices = rec.vertices.iter().map(|v| DVector::from_column_slice(v)).collect();
        TriMesh::new(vertices, rec.triangles)
    }
}

impl From<TriMesh> for MeshRecord {
    fn from(m: TriMesh) -> Self {
        MeshRecord {
            vertices: m.vertices.iter().map(|v| v.iter().copied().collect()).collect(),
            triangles: m.triangles,
        }
    }
}

impl PartialEq for TriMesh {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices && self.triangles == other.triangles
    }
}

/// Edge and incidence structure of a [`TriMesh`].
#[derive(Debug, Clone)]
pub struct Topology {
    /// Undirected edges as `(lo, hi)` vertex pairs.
    pub edges: Vec<[usize; 2]>,
    pub edge_index: HashMap<(usize, usize), usize>,
    /// Incident faces per edge (one for boundary edges, two otherwise).
    pub edge_faces: Vec<Vec<usize>>,
    pub vertex_faces: Vec<Vec<usize>>,
    pub vertex_neighbors: Vec<Vec<usize>>,
    pub boundary_vertex: Vec<bool>,
    /// Boundary half-edges, oriented as in their face.
    pub boundary_half_edges: Vec<(usize, usize)>,
}

impl Topology {
    pub fn is_closed(&self) -> bool {
        self.boundary_half_edges.is_empty()
    }

    pub fn edge_of(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_index.get(&(a.min(b), a.max(b))).copied()
    }
}

impl TriMesh {
    pub fn new(vertices: Vec<AmbientVector>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let mesh = Self::new_unvalidated_area(vertices, triangles)?;
        for (f, t) in mesh.triangles.iter().enumerate() {
            let area = triangle_area(&mesh.vertices[t[0]], &mesh.vertices[t[1]], &mesh.vertices[t[2]]);
            if !(area > 0.0) {
                return Err(Error::input(format!("triangle {f} has zero area")));
            }
        }
        Ok(mesh)
    }

    /// Validates combinatorics and coordinates but not triangle areas; used
    /// by steppers that report degeneracy themselves.
    pub(crate) fn new_unvalidated_area(vertices: Vec<AmbientVector>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::input("mesh has no vertices"));
        }
        let n = vertices[0].len();
        if n < 3 {
            return Err(Error::input("triangle meshes need ambient dimension at least 3"));
        }
        for v in &vertices {
            if v.len() != n {
                return Err(Error::input("mixed ambient dimensions in mesh"));
            }
            check_finite(v)?;
        }
        for (f, t) in triangles.iter().enumerate() {
            if t.iter().any(|&i| i >= vertices.len()) {
                return Err(Error::input(format!("triangle {f} references a missing vertex")));
            }
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(Error::input(format!("triangle {f} repeats a vertex")));
            }
        }
        let mesh = TriMesh { vertices, triangles, topology: OnceLock::new() };
        let topo = build_topology(&mesh.vertices, &mesh.triangles)?;
        let _ = mesh.topology.set(Arc::new(topo));
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[AmbientVector] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn dim(&self) -> usize {
        self.vertices[0].len()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn topology(&self) -> &Topology {
        self.topology
            .get_or_init(|| Arc::new(build_topology(&self.vertices, &self.triangles).expect("validated at construction")))
    }

    pub fn is_closed(&self) -> bool {
        self.topology().is_closed()
    }

    pub fn face_area(&self, f: usize) -> f64 {
        let t = self.triangles[f];
        triangle_area(&self.vertices[t[0]], &self.vertices[t[1]], &self.vertices[t[2]])
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|f| self.face_area(f)).sum()
    }

    pub fn edge_lengths(&self) -> Vec<f64> {
        self.topology()
            .edges
            .iter()
            .map(|[a, b]| diff_dot(&self.vertices[*a], &self.vertices[*b], &self.vertices[*a], &self.vertices[*b]).sqrt())
            .collect()
    }

    pub fn min_edge(&self) -> f64 {
        self.edge_lengths().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn mean_edge(&self) -> f64 {
        let l = self.edge_lengths();
        l.iter().sum::<f64>() / l.len().max(1) as f64
    }

    pub fn centroid(&self) -> AmbientVector {
        let mut c = DVector::zeros(self.dim());
        for v in &self.vertices {
            c += v;
        }
        c / self.vertices.len() as f64
    }

    /// Same connectivity, new coordinates.
    pub fn with_vertices(&self, vertices: Vec<AmbientVector>) -> Result<Self> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::input("vertex count changed"));
        }
        for v in &vertices {
            check_finite(v)?;
        }
        let topology = OnceLock::new();
        if let Some(t) = self.topology.get() {
            let _ = topology.set(t.clone());
        }
        Ok(TriMesh { vertices, triangles: self.triangles.clone(), topology })
    }

    pub fn map_points(&self, f: impl Fn(&AmbientVector) -> AmbientVector) -> Result<Self> {
        self.with_vertices(self.vertices.iter().map(f).collect())
    }

    /// Pads coordinates with zeros to ambient dimension `n`.
    pub fn embed(&self, n: usize) -> Result<Self> {
        if n < self.dim() {
            return Err(Error::input("cannot embed into a lower dimension"));
        }
        self.map_points(|v| {
            let mut w = DVector::zeros(n);
            w.rows_mut(0, v.len()).copy_from(v);
            w
        })
    }

    /// Disjoint union of two meshes of equal ambient dimension.
    pub fn disjoint_union(&self, other: &TriMesh) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::input("ambient dimensions differ"));
        }
        let offset = self.vertices.len();
        let mut vertices = self.vertices.clone();
        vertices.extend(other.vertices.iter().cloned());
        let mut triangles = self.triangles.clone();
        triangles.extend(other.triangles.iter().map(|t| [t[0] + offset, t[1] + offset, t[2] + offset]));
        TriMesh::new(vertices, triangles)
    }
}

fn build_topology(vertices: &[AmbientVector], triangles: &[[usize; 3]]) -> Result<Topology> {
    let nv = vertices.len();
    let mut edges: Vec<[usize; 2]> = Vec::new();
    let mut edge_index: HashMap<(usize, usize), usize> = HashMap::with_capacity(triangles.len() * 2);
    let mut edge_faces: Vec<Vec<usize>> = Vec::new();
    // orientation of each edge as it appears in its first face
    let mut edge_dir: Vec<(usize, usize)> = Vec::new();
    let mut vertex_faces = vec![Vec::new(); nv];
    for (f, t) in triangles.iter().enumerate() {
        for k in 0..3 {
            let a = t[k];
            let b = t[(k + 1) % 3];
            vertex_faces[a].push(f);
            let key = (a.min(b), a.max(b));
            match edge_index.get(&key) {
                Some(&e) => {
                    if edge_faces[e].len() >= 2 {
                        return Err(Error::input(format!("non-manifold edge ({}, {})", key.0, key.1)));
                    }
                    if edge_dir[e] == (a, b) {
                        return Err(Error::input(format!(
                            "inconsistent orientation across edge ({}, {})",
                            key.0, key.1
                        )));
                    }
                    edge_faces[e].push(f);
                }
                None => {
                    edge_index.insert(key, edges.len());
                    edges.push([key.0, key.1]);
                    edge_faces.push(vec![f]);
                    edge_dir.push((a, b));
                }
            }
        }
    }
    let mut vertex_neighbors = vec![Vec::new(); nv];
    let mut boundary_vertex = vec![false; nv];
    let mut boundary_half_edges = Vec::new();
    for (e, [a, b]) in edges.iter().enumerate() {
        vertex_neighbors[*a].push(*b);
        vertex_neighbors[*b].push(*a);
        if edge_faces[e].len() == 1 {
            boundary_vertex[*a] = true;
            boundary_vertex[*b] = true;
            boundary_half_edges.push(edge_dir[e]);
        }
    }
    Ok(Topology {
        edges,
        edge_index,
        edge_faces,
        vertex_faces,
        vertex_neighbors,
        boundary_vertex,
        boundary_half_edges,
    })
}

/// Topological bookkeeping of a mesh: `χ = V − E + F`, components `c`,
/// boundary loops `h` and genus `g = (2c − h − χ)/2` of the capped surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EulerData {
    pub chi: i64,
    pub components: i64,
    pub boundary_loops: i64,
    pub genus: i64,
}

pub fn euler_genus(m: &TriMesh) -> Result<EulerData> {
    let topo = m.topology();
    let used: Vec<bool> = topo.vertex_faces.iter().map(|f| !f.is_empty()).collect();
    let v = used.iter().filter(|u| **u).count() as i64;
    let e = topo.edges.len() as i64;
    let f = m.triangles.len() as i64;
    let chi = v - e + f;

    let mut uf = UnionFind::new(m.vertex_count());
    for [a, b] in &topo.edges {
        uf.union(*a, *b);
    }
    let components = (0..m.vertex_count()).filter(|&i| used[i] && uf.find(i) == i).count() as i64;
    let boundary_loops = count_boundary_loops(&topo.boundary_half_edges) as i64;
    let twice_genus = 2 * components - boundary_loops - chi;
    if twice_genus < 0 || twice_genus % 2 != 0 {
        return Err(Error::input(format!(
            "2c − h − χ = {twice_genus} is not a nonnegative even number; surface is not an orientable manifold"
        )));
    }
    Ok(EulerData { chi, components, boundary_loops, genus: twice_genus / 2 })
}

/// Traces closed loops of oriented boundary half-edges.
pub(crate) fn count_boundary_loops(half_edges: &[(usize, usize)]) -> usize {
    let mut outgoing: HashMap<usize, Vec<usize>> = HashMap::new();
    for (i, (a, _)) in half_edges.iter().enumerate() {
        outgoing.entry(*a).or_default().push(i);
    }
    let mut used = vec![false; half_edges.len()];
    let mut loops = 0;
    for start in 0..half_edges.len() {
        if used[start] {
            continue;
        }
        loops += 1;
        let mut cur = start;
        loop {
            used[cur] = true;
            let head = half_edges[cur].1;
            let next = outgoing.get(&head).and_then(|cands| cands.iter().copied().find(|&c| !used[c]));
            match next {
                Some(nx) => cur = nx,
                None => break,
            }
        }
    }
    loops
}

/// Path-compressing union–find over `0..n`.
#[derive(Debug, Clone)]
pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    pub fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}
