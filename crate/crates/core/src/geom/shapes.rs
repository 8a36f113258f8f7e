//! Test and corpus geometry: polygons, spheres, tori, cylinders, caps,
//! catenoids and graphs.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{curve::PolyCurve, mesh::TriMesh, vector::AmbientVector};

fn v3(x: f64, y: f64, z: f64) -> AmbientVector {
    DVector::from_vec(vec![x, y, z])
}

/// Regular `n`-gon inscribed in the circle of radius `r` in the first two
/// coordinates of `R^dim`.
pub fn circle(r: f64, n: usize, dim: usize) -> PolyCurve {
    let pts = (0..n)
        .map(|i| {
            let a = 2.0 * PI * i as f64 / n as f64;
            let mut p = DVector::zeros(dim);
            p[0] = r * a.cos();
            p[1] = r * a.sin();
            p
        })
        .collect();
    PolyCurve::new(pts, true).expect("regular polygon is valid")
}

/// Planar ellipse with semi-axes `a` (x) and `b` (y), sampled uniformly in
/// arc length.
pub fn ellipse(a: f64, b: f64, n: usize) -> PolyCurve {
    let dense = 64 * n;
    let pts: Vec<AmbientVector> = (0..dense)
        .map(|i| {
            let s = 2.0 * PI * i as f64 / dense as f64;
            DVector::from_vec(vec![a * s.cos(), b * s.sin()])
        })
        .collect();
    let fine = PolyCurve::new(pts, true).expect("ellipse samples are valid");
    let mut out = Vec::with_capacity(n);
    let lengths = fine.edge_lengths();
    let total: f64 = lengths.iter().sum();
    let mut walked = 0.0;
    let mut e = 0;
    for i in 0..n {
        let target = total * i as f64 / n as f64;
        while walked + lengths[e] < target {
            walked += lengths[e];
            e += 1;
        }
        let (p, q) = fine.edge(e);
        let s = (target - walked) / lengths[e];
        // project back onto the exact ellipse along the parameter
        let mid = p + (q - p) * s;
        let ang = (mid[1] / b).atan2(mid[0] / a);
        out.push(DVector::from_vec(vec![a * ang.cos(), b * ang.sin()]));
    }
    PolyCurve::new(out, true).expect("ellipse polygon is valid")
}

/// Planar figure-eight (lemniscate of Gerono), a closed curve with one
/// self-crossing.
pub fn figure_eight(n: usize) -> PolyCurve {
    let pts = (0..n)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / n as f64;
            DVector::from_vec(vec![t.cos(), 0.5 * (2.0 * t).sin()])
        })
        .collect();
    PolyCurve::new(pts, true).expect("figure eight is valid")
}

/// Subdivided icosahedron projected to the sphere of radius `r` about the
/// origin. Level `l` has `10·4^l + 2` vertices.
pub fn icosphere(level: usize, r: f64) -> TriMesh {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<AmbientVector> = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| v3(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<AmbientVector>| -> usize {
            let key = (a.min(b), a.max(b));
            *cache.entry(key).or_insert_with(|| {
                let m = ((&verts[a] + &verts[b]) * 0.5).normalize();
                verts.push(m);
                verts.len() - 1
            })
        };
        for [a, b, c] in faces {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    let verts = verts.into_iter().map(|p| p * r).collect();
    TriMesh::new(verts, faces).expect("icosphere is valid")
}

/// Icosphere scaled by `axes` along the coordinate axes.
pub fn ellipsoid(level: usize, axes: [f64; 3]) -> TriMesh {
    icosphere(level, 1.0)
        .map_points(|p| v3(axes[0] * p[0], axes[1] * p[1], axes[2] * p[2]))
        .expect("ellipsoid is valid")
}

/// Torus of revolution with centre-line radius `big` and tube radius
/// `small`, `nu` segments around the axis and `nv` around the tube.
pub fn torus(big: f64, small: f64, nu: usize, nv: usize) -> TriMesh {
    let mut verts = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        let u = 2.0 * PI * i as f64 / nu as f64;
        for j in 0..nv {
            let v = 2.0 * PI * j as f64 / nv as f64;
            let rr = big + small * v.cos();
            verts.push(v3(rr * u.cos(), rr * u.sin(), small * v.sin()));
        }
    }
    let id = |i: usize, j: usize| (i % nu) * nv + (j % nv);
    let mut faces = Vec::with_capacity(2 * nu * nv);
    for i in 0..nu {
        for j in 0..nv {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    TriMesh::new(verts, faces).expect("torus is valid")
}

/// Open cylinder `{x² + y² = r²} × [−half_length, half_length]` with
/// `n_around` vertices per ring and `n_along` segments along the axis.
/// Alternate rings are rotated by half a segment.
pub fn cylinder(r: f64, half_length: f64, n_around: usize, n_along: usize) -> TriMesh {
    let mut verts = Vec::new();
    for j in 0..=n_along {
        let z = -half_length + 2.0 * half_length * j as f64 / n_along as f64;
        let shift = if j % 2 == 0 { 0.0 } else { 0.5 };
        for i in 0..n_around {
            let a = 2.0 * PI * (i as f64 + shift) / n_around as f64;
            verts.push(v3(r * a.cos(), r * a.sin(), z));
        }
    }
    let id = |j: usize, i: usize| j * n_around + (i % n_around);
    let mut faces = Vec::new();
    for j in 0..n_along {
        for i in 0..n_around {
            if j % 2 == 0 {
                faces.push([id(j, i), id(j, i + 1), id(j + 1, i)]);
                faces.push([id(j, i + 1), id(j + 1, i + 1), id(j + 1, i)]);
            } else {
                faces.push([id(j, i), id(j, i + 1), id(j + 1, i + 1)]);
                faces.push([id(j, i), id(j + 1, i + 1), id(j + 1, i)]);
            }
        }
    }
    TriMesh::new(verts, faces).expect("cylinder is valid")
}

/// Square grid `[−w, w]²` in the plane `z = 0` of `R³`, `cells` per side.
pub fn plane_grid(half_width: f64, cells: usize) -> TriMesh {
    graph_mesh(half_width, cells, |_, _| 0.0)
}

/// Graph `z = f(x, y)` over `[−w, w]²`; the diagonal alternates so that the
/// triangulation has no preferred direction.
pub fn graph_mesh(half_width: f64, cells: usize, f: impl Fn(f64, f64) -> f64) -> TriMesh {
    let h = 2.0 * half_width / cells as f64;
    let mut verts = Vec::with_capacity((cells + 1) * (cells + 1));
    for j in 0..=cells {
        for i in 0..=cells {
            let x = -half_width + h * i as f64;
            let y = -half_width + h * j as f64;
            verts.push(v3(x, y, f(x, y)));
        }
    }
    let id = |i: usize, j: usize| j * (cells + 1) + i;
    let mut faces = Vec::with_capacity(2 * cells * cells);
    for j in 0..cells {
        for i in 0..cells {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            if (i + j) % 2 == 0 {
                faces.push([a, b, c]);
                faces.push([a, c, d]);
            } else {
                faces.push([a, b, d]);
                faces.push([b, c, d]);
            }
        }
    }
    TriMesh::new(verts, faces).expect("graph mesh is valid")
}

/// Random smooth graph: a sum of a few low-frequency plane waves with the
/// given total amplitude, over `[−w, w]²`.
pub fn random_smooth_graph(seed: u64, half_width: f64, cells: usize, amplitude: f64) -> TriMesh {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes: Vec<(f64, f64, f64, f64)> = (0..4)
        .map(|_| {
            let a = amplitude * rng.gen_range(0.1..1.0) / 4.0;
            let kx = rng.gen_range(-1.5..1.5);
            let ky = rng.gen_range(-1.5..1.5);
            let ph = rng.gen_range(0.0..2.0 * PI);
            (a, kx, ky, ph)
        })
        .collect();
    graph_mesh(half_width, cells, move |x, y| modes.iter().map(|(a, kx, ky, ph)| a * (kx * x + ky * y + ph).sin()).sum())
}

/// Concentric ring layout of the unit disk: ring `j` holds `6j` vertices.
/// Returns `(radial fraction, angle)` per vertex and the faces.
fn ring_layout(rings: usize) -> (Vec<(f64, f64)>, Vec<[usize; 3]>) {
    let mut pts = vec![(0.0, 0.0)];
    let mut ring_start = vec![0usize];
    let mut ring_len = vec![1usize];
    for j in 1..=rings {
        ring_start.push(pts.len());
        ring_len.push(6 * j);
        let offset = if j % 2 == 0 { 0.5 } else { 0.0 };
        for i in 0..6 * j {
            pts.push((j as f64 / rings as f64, 2.0 * PI * (i as f64 + offset) / (6 * j) as f64));
        }
    }
    let mut faces = Vec::new();
    for i in 0..6 {
        faces.push([0, 1 + i, 1 + (i + 1) % 6]);
    }
    for j in 2..=rings {
        let (sa, na) = (ring_start[j - 1], ring_len[j - 1]);
        let (sb, nb) = (ring_start[j], ring_len[j]);
        let ang = |s: usize, n: usize, k: usize| {
            let base = pts[s + k % n].1;
            base + 2.0 * PI * (k / n) as f64
        };
        // rotate the start of ring b so that it begins at or after ring a's start
        let a0 = pts[sa].1;
        let mut b_off = 0;
        while pts[sb + b_off].1 < a0 - 1e-12 {
            b_off += 1;
        }
        let (mut i, mut k) = (0usize, 0usize);
        while i < na || k < nb {
            let next_a = ang(sa, na, i + 1);
            let next_b = ang(sb, nb, k + b_off + 1);
            let ai = sa + i % na;
            let bk = sb + (k + b_off) % nb;
            if k < nb && (i >= na || next_b <= next_a) {
                faces.push([ai, bk, sb + (k + b_off + 1) % nb]);
                k += 1;
            } else {
                faces.push([ai, bk, sa + (i + 1) % na]);
                i += 1;
            }
        }
    }
    (pts, faces)
}

/// Flat disk of radius `r` in the plane `z = 0`.
pub fn disk(r: f64, rings: usize) -> TriMesh {
    let (pts, faces) = ring_layout(rings);
    let verts = pts.iter().map(|(rho, a)| v3(r * rho * a.cos(), r * rho * a.sin(), 0.0)).collect();
    TriMesh::new(verts, faces).expect("disk is valid")
}

/// Spherical cap `{polar angle ≤ polar}` of the sphere of radius `r` about
/// the origin, centred on the north pole. `polar = π/2` is the hemisphere.
pub fn spherical_cap(r: f64, polar: f64, rings: usize) -> TriMesh {
    let (pts, faces) = ring_layout(rings);
    let verts = pts
        .iter()
        .map(|(rho, a)| {
            let psi = polar * rho;
            v3(r * psi.sin() * a.cos(), r * psi.sin() * a.sin(), r * psi.cos())
        })
        .collect();
    TriMesh::new(verts, faces).expect("cap is valid")
}

/// Catenoid `(a cosh(z/a) cos θ, a cosh(z/a) sin θ, z)`, `|z| ≤ half_height`.
pub fn catenoid(a: f64, half_height: f64, n_around: usize, n_along: usize) -> TriMesh {
    let cyl = cylinder(1.0, half_height, n_around, n_along);
    cyl.map_points(|p| {
        let z = p[2];
        let rr = a * (z / a).cosh();
        v3(rr * p[0], rr * p[1], z)
    })
    .expect("catenoid is valid")
}
