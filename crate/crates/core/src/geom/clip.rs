use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use super::curvature::{face_corners, mixed_area_split, CurvatureField};
use super::mesh::{euler_genus, EulerData, TriMesh, UnionFind};
use super::vector::{point_triangle_distance, segment_sphere_crossings, triangle_area, AmbientVector};
use crate::{Error, Result};

/// Where a vertex of a clipped complex came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VertexOrigin {
    /// A parent vertex strictly inside the ball.
    Parent(usize),
    /// A crossing `(1 − t)·p_a + t·p_b` of parent edge `ab` with the sphere.
    Edge { a: usize, b: usize, t: f64 },
}

impl VertexOrigin {
    /// Linear interpolation weights on parent vertices.
    pub fn weights(&self) -> [(usize, f64); 2] {
        match *self {
            VertexOrigin::Parent(i) => [(i, 1.0), (i, 0.0)],
            VertexOrigin::Edge { a, b, t } => [(a, 1.0 - t), (b, t)],
        }
    }

    pub fn on_sphere(&self) -> bool {
        matches!(self, VertexOrigin::Edge { .. })
    }
}

/// A mesh restricted to a closed ball, with every triangle clipped exactly
/// against the bounding sphere.
#[derive(Debug, Clone)]
pub struct BallRestriction<'a> {
    parent: &'a TriMesh,
    center: AmbientVector,
    radius: f64,
    mesh: Option<TriMesh>,
    origins: Vec<VertexOrigin>,
    face_parent: Vec<usize>,
    /// Exact area of `T ∩ B` for every parent face `T` meeting the ball.
    exact_area: BTreeMap<usize, f64>,
    face_component: Vec<usize>,
    component_count: usize,
    area: f64,
}

/// Clips every triangle of `m` against the sphere `|x − center| = r`.
///
/// Crossing points are keyed by their parent edge so that neighbouring
/// triangles share them; each clipped polygon is fan triangulated. Areas
/// and integrals use the exact area of each planar triangle inside the
/// ball, so the chords of the clipped polygons cost no accuracy.
pub fn ball_restrict<'a>(m: &'a TriMesh, center: &AmbientVector, r: f64) -> Result<BallRestriction<'a>> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::input(format!("ball radius must be positive, got {r}")));
    }
    if center.len() != m.dim() {
        return Err(Error::input("ball centre dimension does not match the mesh"));
    }
    let p = m.vertices();
    // vertices on the sphere up to roundoff count as inside, so that edges
    // leaving them never need a crossing at the endpoint
    let inside: Vec<bool> = p.iter().map(|x| (x - center).norm() < r * (1.0 + 1e-9)).collect();

    #[derive(Clone, Copy, PartialEq, Eq, Hash)]
    enum Key {
        Parent(usize),
        Cross(usize, usize, usize),
    }
    let mut crossing_cache: HashMap<(usize, usize), Vec<f64>> = HashMap::new();
    let mut index: HashMap<Key, usize> = HashMap::new();
    let mut verts: Vec<AmbientVector> = Vec::new();
    let mut origins = Vec::new();
    let mut faces = Vec::new();
    let mut face_parent = Vec::new();
    let mut exact_area = BTreeMap::new();

    let mut intern = |key: Key, verts: &mut Vec<AmbientVector>, origins: &mut Vec<VertexOrigin>, pos: AmbientVector, origin: VertexOrigin| {
        *index.entry(key).or_insert_with(|| {
            verts.push(pos);
            origins.push(origin);
            verts.len() - 1
        })
    };

    for (f, t) in m.triangles().iter().enumerate() {
        let all_in = t.iter().all(|&i| inside[i]);
        if !all_in && point_triangle_distance(center, &p[t[0]], &p[t[1]], &p[t[2]]) >= r {
            continue;
        }
        let exact = if all_in { m.face_area(f) } else { triangle_ball_area(&p[t[0]], &p[t[1]], &p[t[2]], center, r) };
        if exact > 0.0 {
            exact_area.insert(f, exact);
        }
        let mut poly: Vec<usize> = Vec::with_capacity(6);
        for k in 0..3 {
            let a = t[k];
            let b = t[(k + 1) % 3];
            if inside[a] {
                poly.push(intern(Key::Parent(a), &mut verts, &mut origins, p[a].clone(), VertexOrigin::Parent(a)));
            }
            if all_in {
                continue;
            }
            let (lo, hi) = (a.min(b), a.max(b));
            let roots = crossing_cache
                .entry((lo, hi))
                .or_insert_with(|| segment_sphere_crossings(&p[lo], &p[hi], center, r))
                .clone();
            let dir = &p[hi] - &p[lo];
            let mut found: Vec<(usize, f64)> = roots.iter().copied().enumerate().collect();
            if a != lo {
                found.reverse();
            }
            for (j, s) in found {
                let pos = &p[lo] + &dir * s;
                poly.push(intern(Key::Cross(lo, hi, j), &mut verts, &mut origins, pos, VertexOrigin::Edge { a: lo, b: hi, t: s }));
            }
        }
        let scale = r * r;
        for i in 1..poly.len().saturating_sub(1) {
            let tri = [poly[0], poly[i], poly[i + 1]];
            if triangle_area(&verts[tri[0]], &verts[tri[1]], &verts[tri[2]]) > 1e-16 * scale {
                faces.push(tri);
                face_parent.push(f);
            }
        }
    }
    let area = exact_area.values().sum();

    if faces.is_empty() {
        return Ok(BallRestriction {
            parent: m,
            center: center.clone(),
            radius: r,
            mesh: None,
            origins: Vec::new(),
            face_parent: Vec::new(),
            exact_area,
            face_component: Vec::new(),
            component_count: 0,
            area,
        });
    }

    // drop vertices that only belonged to discarded slivers
    let mut used = vec![false; verts.len()];
    for t in &faces {
        for &i in t {
            used[i] = true;
        }
    }
    let mut remap = vec![usize::MAX; verts.len()];
    let mut kept_verts = Vec::new();
    let mut kept_origins = Vec::new();
    for i in 0..verts.len() {
        if used[i] {
            remap[i] = kept_verts.len();
            kept_verts.push(verts[i].clone());
            kept_origins.push(origins[i]);
        }
    }
    let faces: Vec<[usize; 3]> = faces.iter().map(|t| [remap[t[0]], remap[t[1]], remap[t[2]]]).collect();
    let mesh = TriMesh::new_unvalidated_area(kept_verts, faces)?;

    let topo = mesh.topology();
    let mut uf = UnionFind::new(mesh.face_count());
    for ef in &topo.edge_faces {
        for w in ef.windows(2) {
            uf.union(w[0], w[1]);
        }
    }
    let mut label: HashMap<usize, usize> = HashMap::new();
    let face_component: Vec<usize> = (0..mesh.face_count())
        .map(|f| {
            let root = uf.find(f);
            let next = label.len();
            *label.entry(root).or_insert(next)
        })
        .collect();

    Ok(BallRestriction {
        parent: m,
        center: center.clone(),
        radius: r,
        component_count: label.len(),
        mesh: Some(mesh),
        origins: kept_origins,
        face_parent,
        exact_area,
        face_component,
        area,
    })
}

/// Area of the planar triangle `abc` inside the ball, computed in the
/// triangle's plane as a sum of signed (origin, edge) wedge areas against
/// the disk in which the ball meets that plane.
fn triangle_ball_area(a: &AmbientVector, b: &AmbientVector, c: &AmbientVector, center: &AmbientVector, r: f64) -> f64 {
    let u = b - a;
    let e1 = &u / u.norm();
    let mut v = c - a;
    v.axpy(-e1.dot(&v), &e1, 1.0);
    let e2 = &v / v.norm();
    let w = center - a;
    let (cx, cy) = (e1.dot(&w), e2.dot(&w));
    let rho2 = r * r - (w.norm_squared() - cx * cx - cy * cy).max(0.0);
    if rho2 <= 0.0 {
        return 0.0;
    }
    let local = |q: &AmbientVector| {
        let d = q - a;
        (e1.dot(&d) - cx, e2.dot(&d) - cy)
    };
    let pts = [local(a), local(b), local(c)];
    let total: f64 = (0..3).map(|k| wedge_disk_area(pts[k], pts[(k + 1) % 3], rho2)).sum();
    total.abs()
}

/// Signed area of triangle `(0, p, q)` intersected with the disk of squared
/// radius `rho2` about the origin.
fn wedge_disk_area(p: (f64, f64), q: (f64, f64), rho2: f64) -> f64 {
    let d = (q.0 - p.0, q.1 - p.1);
    let qa = d.0 * d.0 + d.1 * d.1;
    let mut cuts = vec![0.0];
    if qa > 0.0 {
        let qb = 2.0 * (p.0 * d.0 + p.1 * d.1);
        let qc = p.0 * p.0 + p.1 * p.1 - rho2;
        let disc = qb * qb - 4.0 * qa * qc;
        if disc > 0.0 {
            let sq = disc.sqrt();
            for s in [(-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa)] {
                if s > 0.0 && s < 1.0 {
                    cuts.push(s);
                }
            }
        }
    }
    cuts.push(1.0);
    let at = |s: f64| (p.0 + s * d.0, p.1 + s * d.1);
    let mut area = 0.0;
    for w in cuts.windows(2) {
        let (s0, s1) = (w[0], w[1]);
        let (x0, x1) = (at(s0), at(s1));
        let cross = x0.0 * x1.1 - x0.1 * x1.0;
        let mid = at(0.5 * (s0 + s1));
        if mid.0 * mid.0 + mid.1 * mid.1 <= rho2 {
            area += 0.5 * cross;
        } else {
            let dot = x0.0 * x1.0 + x0.1 * x1.1;
            area += 0.5 * rho2 * cross.atan2(dot);
        }
    }
    area
}

impl<'a> BallRestriction<'a> {
    pub fn parent(&self) -> &'a TriMesh {
        self.parent
    }

    pub fn center(&self) -> &AmbientVector {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// The clipped complex, or `None` when the restriction is empty.
    pub fn mesh(&self) -> Option<&TriMesh> {
        self.mesh.as_ref()
    }

    pub fn is_empty(&self) -> bool {
        self.mesh.is_none()
    }

    /// Exact area of the piecewise-planar mesh inside the ball.
    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn origins(&self) -> &[VertexOrigin] {
        &self.origins
    }

    /// Parent face of every clipped face.
    pub fn face_parent(&self) -> &[usize] {
        &self.face_parent
    }

    /// Component label (`0..component_count`) of every clipped face.
    pub fn face_components(&self) -> &[usize] {
        &self.face_component
    }

    pub fn component_count(&self) -> usize {
        self.component_count
    }

    /// Number of components that come within distance `inner` of the centre.
    pub fn components_meeting(&self, inner: f64) -> usize {
        let Some(mesh) = &self.mesh else { return 0 };
        let p = mesh.vertices();
        let mut hit = vec![false; self.component_count];
        for (f, t) in mesh.triangles().iter().enumerate() {
            let c = self.face_component[f];
            if !hit[c] && point_triangle_distance(&self.center, &p[t[0]], &p[t[1]], &p[t[2]]) < inner {
                hit[c] = true;
            }
        }
        hit.iter().filter(|h| **h).count()
    }

    /// Euler characteristic, components, boundary loops and capped genus of
    /// the clipped complex (all zero when empty).
    pub fn euler(&self) -> Result<EulerData> {
        match &self.mesh {
            Some(m) => euler_genus(m),
            None => Ok(EulerData { chi: 0, components: 0, boundary_loops: 0, genus: 0 }),
        }
    }

    /// Parent per-vertex values interpolated onto the clipped vertices.
    pub fn interpolate(&self, parent_values: &[f64]) -> Vec<f64> {
        self.origins
            .iter()
            .map(|o| o.weights().iter().map(|(i, w)| w * parent_values[*i]).sum())
            .collect()
    }

    pub fn interpolate_vectors(&self, parent_values: &[AmbientVector]) -> Vec<AmbientVector> {
        self.origins
            .iter()
            .map(|o| {
                let [(i, wi), (j, wj)] = o.weights();
                &parent_values[i] * wi + &parent_values[j] * wj
            })
            .collect()
    }

    /// `∫_{M∩B} f` for a parent per-vertex field `f`: linear on each
    /// clipped triangle (vertex-average rule), rescaled per parent face to
    /// the exact area of that face inside the ball.
    pub fn integrate(&self, parent_values: &[f64]) -> f64 {
        let mut per_face: HashMap<usize, (f64, f64)> = HashMap::new();
        if let Some(mesh) = &self.mesh {
            let vals = self.interpolate(parent_values);
            for (f, t) in mesh.triangles().iter().enumerate() {
                let a = mesh.face_area(f);
                let e = per_face.entry(self.face_parent[f]).or_insert((0.0, 0.0));
                e.0 += a * (vals[t[0]] + vals[t[1]] + vals[t[2]]) / 3.0;
                e.1 += a;
            }
        }
        let tris = self.parent.triangles();
        self.exact_area
            .iter()
            .map(|(f, exact)| match per_face.get(f) {
                Some((sum, poly)) if *poly > 0.0 => sum * exact / poly,
                _ => {
                    let t = tris[*f];
                    exact * (parent_values[t[0]] + parent_values[t[1]] + parent_values[t[2]]) / 3.0
                }
            })
            .sum()
    }

    /// Whether clipped vertex `i` lies on the bounding sphere (crossings, and
    /// parent vertices on it up to roundoff).
    pub fn is_on_sphere(&self, i: usize) -> bool {
        match (&self.mesh, self.origins[i]) {
            (_, VertexOrigin::Edge { .. }) => true,
            (Some(m), VertexOrigin::Parent(_)) => {
                ((&m.vertices()[i] - &self.center).norm() - self.radius).abs() <= 1e-9 * self.radius
            }
            (None, _) => false,
        }
    }

    /// Boundary edges of the clipped complex that lie on the sphere, oriented
    /// as in their face.
    pub fn sphere_boundary_edges(&self) -> Vec<(usize, usize)> {
        let Some(mesh) = &self.mesh else { return Vec::new() };
        mesh.topology()
            .boundary_half_edges
            .iter()
            .copied()
            .filter(|(a, b)| self.is_on_sphere(*a) && self.is_on_sphere(*b))
            .collect()
    }
}

/// Boundary curvature quantities of a restriction `M ∩ B_r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryCurvature {
    /// `∫_{∂} k̃·n`, the geodesic curvature of the boundary paired with the
    /// inward conormal (positive on the flat disk).
    pub geodesic: f64,
    /// `∫_{∂} |k⃗|` with `k⃗` the curvature of the boundary polygon in `R^n`.
    pub ambient_total: f64,
    /// `∫_{∂} (|A⃗_M| + 1/r)/sin α` over the sphere-cut boundary, skipping
    /// points where `sin α = 0`.
    pub bound_integral: f64,
    /// Boundary edges skipped because `sin α` vanished there (the bound is
    /// `+∞` on a measure-zero set).
    pub degenerate_edges: usize,
    pub boundary_length: f64,
}

/// Geodesic curvature of the boundary of a mesh by the angle method:
/// the exterior angles `π − Σθ` at boundary vertices, less the smooth Gauss
/// curvature `K̂·A_mixed` those vertices carry. Interior vertices whose
/// star was cut contribute the part of their angle defect that now lies
/// outside their clipped mixed area. On an uncut mesh the interior terms
/// vanish identically.
fn angle_method(mesh: &TriMesh, gauss: &[f64]) -> f64 {
    let topo = mesh.topology();
    let nv = mesh.vertex_count();
    let mut angle_sum = vec![0.0; nv];
    let mut mixed = vec![0.0; nv];
    for (f, t) in mesh.triangles().iter().enumerate() {
        let corners = face_corners(mesh, f);
        let split = mixed_area_split(mesh, f, &corners);
        for k in 0..3 {
            angle_sum[t[k]] += corners[k].angle;
            mixed[t[k]] += split[k];
        }
    }
    (0..nv)
        .map(|i| {
            let defect = if topo.boundary_vertex[i] { PI } else { 2.0 * PI } - angle_sum[i];
            defect - gauss[i] * mixed[i]
        })
        .sum()
}

/// `∫_{∂M} k̃·n` for a mesh with boundary, given its curvature field.
/// Closed meshes give 0.
pub fn geodesic_boundary_integral(m: &TriMesh, field: &CurvatureField) -> f64 {
    if m.is_closed() {
        return 0.0;
    }
    let topo = m.topology();
    (0..m.vertex_count())
        .filter(|&i| topo.boundary_vertex[i])
        .map(|i| field.angle_defect(i) - field.gauss[i] * field.mixed_area[i])
        .sum()
}

/// Boundary curvature of a restriction, with the Gauss curvature and `|A|`
/// taken from the parent's curvature field.
pub fn boundary_curvature_term(b: &BallRestriction<'_>, parent_field: &CurvatureField) -> BoundaryCurvature {
    let empty = BoundaryCurvature {
        geodesic: 0.0,
        ambient_total: 0.0,
        bound_integral: 0.0,
        degenerate_edges: 0,
        boundary_length: 0.0,
    };
    let Some(mesh) = b.mesh() else { return empty };
    if mesh.is_closed() {
        return empty;
    }
    let gauss = b.interpolate(&parent_field.gauss);
    let geodesic = angle_method(mesh, &gauss);

    let p = mesh.vertices();
    let half_edges = &mesh.topology().boundary_half_edges;
    let boundary_length: f64 = half_edges.iter().map(|(a, c)| (&p[*c] - &p[*a]).norm()).sum();

    // ambient curvature of the boundary loops, by turning angles
    let mut next: HashMap<usize, usize> = HashMap::new();
    let mut prev: HashMap<usize, usize> = HashMap::new();
    for (a, c) in half_edges {
        next.insert(*a, *c);
        prev.insert(*c, *a);
    }
    let mut ambient_total = 0.0;
    for (&v, &n) in &next {
        if let Some(&pv) = prev.get(&v) {
            let t_in = &p[v] - &p[pv];
            let t_out = &p[n] - &p[v];
            ambient_total += super::vector::angle_between(&t_in, &t_out);
        }
    }

    // the bound of the intersection lemma along the sphere-cut boundary
    let abs_a: Vec<f64> = b.interpolate(&parent_field.sq_norm_a).iter().map(|x| x.max(0.0).sqrt()).collect();
    let mut bound_integral = 0.0;
    let mut degenerate_edges = 0;
    let parent = b.parent();
    let face_of_half_edge: HashMap<(usize, usize), usize> = mesh
        .triangles()
        .iter()
        .enumerate()
        .flat_map(|(f, t)| (0..3).map(move |k| ((t[k], t[(k + 1) % 3]), f)))
        .collect();
    for &(a, c) in &b.sphere_boundary_edges() {
        let len = (&p[c] - &p[a]).norm();
        let mid: AmbientVector = (&p[a] + &p[c]) * 0.5;
        let radial = &mid - b.center();
        let rn = radial.norm();
        if rn == 0.0 {
            degenerate_edges += 1;
            continue;
        }
        let e1 = radial / rn;
        let pf = b.face_parent()[face_of_half_edge[&(a, c)]];
        let t = parent.triangles()[pf];
        let pp = parent.vertices();
        let u = &pp[t[1]] - &pp[t[0]];
        let t1 = &u / u.norm();
        let mut w = &pp[t[2]] - &pp[t[0]];
        w.axpy(-t1.dot(&w), &t1, 1.0);
        let t2 = &w / w.norm();
        let sin_alpha = (t1.dot(&e1).powi(2) + t2.dot(&e1).powi(2)).sqrt();
        if sin_alpha < 1e-12 {
            degenerate_edges += 1;
            continue;
        }
        let a_mid = 0.5 * (abs_a[a] + abs_a[c]);
        bound_integral += len * (a_mid + 1.0 / b.radius()) / sin_alpha;
    }

    BoundaryCurvature { geodesic, ambient_total, bound_integral, degenerate_edges, boundary_length }
}

/// Clipped area as a function of radius, sampled at `radii`.
#[cfg(test)]
pub(crate) fn area_profile(m: &TriMesh, center: &AmbientVector, radii: &[f64]) -> Result<Vec<f64>> {
    radii.iter().map(|&r| Ok(ball_restrict(m, center, r)?.area())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{mesh_curvature, shapes, vector};

    #[test]
    fn plane_disk_area() {
        let m = shapes::plane_grid(2.0, 40);
        let b = ball_restrict(&m, &vector(&[0.0, 0.0, 0.0]), 1.0).unwrap();
        assert!((b.area() - PI).abs() < 1e-3, "area {}", b.area());
        assert_eq!(b.component_count(), 1);
        let e = b.euler().unwrap();
        assert_eq!((e.chi, e.components, e.boundary_loops, e.genus), (1, 1, 1, 0));
    }

    #[test]
    fn mesh_inside_ball_is_unclipped() {
        let m = shapes::icosphere(2, 1.0);
        let b = ball_restrict(&m, &vector(&[0.0, 0.0, 0.0]), 5.0).unwrap();
        assert!((b.area() - m.area()).abs() < 1e-12);
        assert!(b.mesh().unwrap().is_closed());
    }

    #[test]
    fn disjoint_ball_is_empty() {
        let m = shapes::icosphere(3, 2.0);
        let b = ball_restrict(&m, &vector(&[0.0, 0.0, 0.0]), 1.0).unwrap();
        assert!(b.is_empty());
        assert_eq!(b.area(), 0.0);
        assert_eq!(b.components_meeting(1.0), 0);
    }

    #[test]
    fn flat_disk_geodesic_curvature() {
        let m = shapes::plane_grid(2.0, 40);
        let f = mesh_curvature(&m).unwrap();
        let b = ball_restrict(&m, &vector(&[0.0, 0.0, 0.0]), 1.0).unwrap();
        let bc = boundary_curvature_term(&b, &f);
        assert!((bc.geodesic - 2.0 * PI).abs() < 1e-3, "{}", bc.geodesic);
        // a planar circle: ambient and geodesic curvature agree
        assert!((bc.ambient_total - 2.0 * PI).abs() < 1e-3);
        // sin α = 1 and A = 0: the bound is the length over r
        assert!((bc.bound_integral - bc.boundary_length).abs() < 1e-5);
    }

    #[test]
    fn hemisphere_cut_is_geodesic() {
        let m = shapes::icosphere(4, 1.0);
        let f = mesh_curvature(&m).unwrap();
        let b = ball_restrict(&m, &vector(&[0.0, 0.0, 1.0]), 2f64.sqrt()).unwrap();
        assert!((b.area() - 2.0 * PI).abs() < 0.02);
        let bc = boundary_curvature_term(&b, &f);
        assert!(bc.geodesic.abs() < 0.02, "{}", bc.geodesic);
        assert!(bc.ambient_total >= bc.geodesic.abs());
    }

    #[test]
    fn closed_mesh_has_no_boundary_term() {
        let m = shapes::icosphere(2, 1.0);
        let f = mesh_curvature(&m).unwrap();
        assert_eq!(geodesic_boundary_integral(&m, &f), 0.0);
        let b = ball_restrict(&m, &vector(&[0.0, 0.0, 0.0]), 3.0).unwrap();
        assert_eq!(boundary_curvature_term(&b, &f).geodesic, 0.0);
    }

    #[test]
    fn area_is_monotone_in_radius() {
        let m = shapes::random_smooth_graph(3, 2.0, 30, 0.5);
        let radii: Vec<f64> = (1..40).map(|i| 0.05 * i as f64).collect();
        let areas = area_profile(&m, &vector(&[0.1, -0.2, 0.0]), &radii).unwrap();
        for w in areas.windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }
    }

    #[test]
    fn components_meeting_inner_ball() {
        let a = shapes::plane_grid(2.0, 20);
        let b = a.map_points(|p| p + vector(&[0.0, 0.0, 0.6])).unwrap();
        let m = a.disjoint_union(&b).unwrap();
        let r = ball_restrict(&m, &vector(&[0.0, 0.0, 0.0]), 1.5).unwrap();
        assert_eq!(r.component_count(), 2);
        assert_eq!(r.components_meeting(0.5), 1);
        assert_eq!(r.components_meeting(1.0), 2);
    }
}
