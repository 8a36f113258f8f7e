use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::geom::{bivector_dot, mesh_curvature, AmbientVector, TriMesh};
use crate::Result;

/// A topology-changing mesh edit, logged on trajectories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemeshEvent {
    pub t: f64,
    pub splits: usize,
    pub collapses: usize,
    pub vertices_before: usize,
    pub vertices_after: usize,
}

/// Splits edges longer than `2·target` and collapses interior edges shorter
/// than `target / 2`. Collapses respect the link condition and are skipped
/// when they would flip a surviving triangle. Returns the edited mesh and
/// the numbers of splits and collapses.
pub fn remesh(m: &TriMesh, target: f64) -> Result<(TriMesh, usize, usize)> {
    let mut verts = m.vertices().to_vec();
    let mut tris = m.triangles().to_vec();
    let budget = 4 * m.face_count() + 16;
    let mut splits = 0;
    while splits < budget {
        let mesh = TriMesh::new_unvalidated_area(verts.clone(), tris.clone())?;
        let Some((a, b)) = longest_edge_over(&mesh, 2.0 * target) else { break };
        split_edge(&mut verts, &mut tris, a, b);
        splits += 1;
    }
    let mut collapses = 0;
    let mut rejected: HashSet<(usize, usize)> = HashSet::new();
    loop {
        let mesh = TriMesh::new_unvalidated_area(verts.clone(), tris.clone())?;
        let Some((a, b)) = shortest_collapsible(&mesh, 0.5 * target, &rejected) else { break };
        match collapse_edge(&mesh, a, b) {
            Some((v, t)) => {
                verts = v;
                tris = t;
                collapses += 1;
                rejected.clear();
            }
            None => {
                rejected.insert((a, b));
            }
        }
    }
    Ok((TriMesh::new(verts, tris)?, splits, collapses))
}

/// Moves each interior vertex by `alpha` times the tangential part of the
/// offset to its neighbour average. Counteracts the tangential drift of a
/// purely normal flow without moving the surface to first order; boundary
/// vertices stay fixed.
pub fn tangential_smooth(m: &TriMesh, alpha: f64) -> Result<TriMesh> {
    let field = mesh_curvature(m)?;
    let topo = m.topology();
    let p = m.vertices();
    let moved = (0..m.vertex_count())
        .map(|i| {
            let nb = &topo.vertex_neighbors[i];
            if field.boundary[i] || nb.is_empty() {
                return p[i].clone();
            }
            let avg = nb.iter().fold(AmbientVector::zeros(m.dim()), |acc, &j| acc + &p[j]) / nb.len() as f64;
            let offset = avg - &p[i];
            let normal_part = &field.normal_projector[i] * &offset;
            &p[i] + (offset - normal_part) * alpha
        })
        .collect();
    m.with_vertices(moved)
}

fn longest_edge_over(m: &TriMesh, limit: f64) -> Option<(usize, usize)> {
    let p = m.vertices();
    m.topology()
        .edges
        .iter()
        .map(|&[a, b]| ((&p[a] - &p[b]).norm(), a, b))
        .filter(|&(l, _, _)| l > limit)
        .max_by(|x, y| x.0.total_cmp(&y.0))
        .map(|(_, a, b)| (a, b))
}

fn shortest_collapsible(m: &TriMesh, limit: f64, rejected: &HashSet<(usize, usize)>) -> Option<(usize, usize)> {
    let p = m.vertices();
    let topo = m.topology();
    topo.edges
        .iter()
        .filter(|&&[a, b]| !topo.boundary_vertex[a] && !topo.boundary_vertex[b] && !rejected.contains(&(a, b)))
        .map(|&[a, b]| ((&p[a] - &p[b]).norm(), a, b))
        .filter(|&(l, _, _)| l < limit)
        .min_by(|x, y| x.0.total_cmp(&y.0))
        .map(|(_, a, b)| (a, b))
}

/// Inserts the midpoint of `ab` and splits both incident faces.
fn split_edge(verts: &mut Vec<AmbientVector>, tris: &mut Vec<[usize; 3]>, a: usize, b: usize) {
    let mid = verts.len();
    verts.push((&verts[a] + &verts[b]) * 0.5);
    let mut added = Vec::new();
    for t in tris.iter_mut() {
        for k in 0..3 {
            let (i, j, o) = (t[k], t[(k + 1) % 3], t[(k + 2) % 3]);
            if (i == a && j == b) || (i == b && j == a) {
                *t = [i, mid, o];
                added.push([mid, j, o]);
                break;
            }
        }
    }
    tris.extend(added);
}

/// Merges `b` into `a` at the edge midpoint, or returns `None` when the
/// link condition fails or a remaining face would flip or vanish.
fn collapse_edge(m: &TriMesh, a: usize, b: usize) -> Option<(Vec<AmbientVector>, Vec<[usize; 3]>)> {
    let topo = m.topology();
    let na: HashSet<usize> = topo.vertex_neighbors[a].iter().copied().collect();
    let common = topo.vertex_neighbors[b].iter().filter(|v| na.contains(v)).count();
    if common != 2 {
        return None;
    }
    let p = m.vertices();
    let mid = (&p[a] + &p[b]) * 0.5;
    let mut verts = p.to_vec();
    verts[a] = mid;
    let mut tris = Vec::with_capacity(m.face_count());
    for (f, t) in m.triangles().iter().enumerate() {
        if t.contains(&a) && t.contains(&b) {
            continue;
        }
        let new_t = t.map(|v| if v == b { a } else { v });
        if new_t != *t || t.contains(&a) {
            let (u0, v0) = (&p[t[1]] - &p[t[0]], &p[t[2]] - &p[t[0]]);
            let (u1, v1) = (&verts[new_t[1]] - &verts[new_t[0]], &verts[new_t[2]] - &verts[new_t[0]]);
            if bivector_dot(&u0, &v0, &u1, &v1) <= 1e-3 * m.face_area(f) * m.face_area(f) {
                return None;
            }
        }
        tris.push(new_t);
    }
    // drop b and reindex
    let verts: Vec<AmbientVector> = verts.into_iter().enumerate().filter(|&(i, _)| i != b).map(|(_, v)| v).collect();
    let tris = tris.into_iter().map(|t| t.map(|v| if v > b { v - 1 } else { v })).collect();
    Some((verts, tris))
}
