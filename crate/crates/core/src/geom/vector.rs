use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// A point or direction in ambient `R^n`.
pub type AmbientVector = DVector<f64>;

pub fn vector(components: &[f64]) -> AmbientVector {
    DVector::from_column_slice(components)
}

pub fn check_finite(v: &AmbientVector) -> Result<()> {
    if v.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(Error::input("non-finite coordinate"))
    }
}

/// `|u ∧ v|`, the area of the parallelogram spanned by `u` and `v`.
pub fn wedge_norm(u: &AmbientVector, v: &AmbientVector) -> f64 {
    let uu = u.norm_squared();
    let vv = v.norm_squared();
    let uv = u.dot(v);
    (uu * vv - uv * uv).max(0.0).sqrt()
}

/// Inner product of the bivectors `a ∧ b` and `c ∧ d`.
pub fn bivector_dot(a: &AmbientVector, b: &AmbientVector, c: &AmbientVector, d: &AmbientVector) -> f64 {
    a.dot(c) * b.dot(d) - a.dot(d) * b.dot(c)
}

/// Unsigned angle between two vectors, robust near 0 and π.
pub fn angle_between(u: &AmbientVector, v: &AmbientVector) -> f64 {
    wedge_norm(u, v).atan2(u.dot(v))
}

pub fn triangle_area(a: &AmbientVector, b: &AmbientVector, c: &AmbientVector) -> f64 {
    let uu = diff_dot(b, a, b, a);
    let vv = diff_dot(c, a, c, a);
    let uv = diff_dot(b, a, c, a);
    0.5 * (uu * vv - uv * uv).max(0.0).sqrt()
}

/// `(a − b)·(c − d)` without temporaries.
#[inline]
pub fn diff_dot(a: &AmbientVector, b: &AmbientVector, c: &AmbientVector, d: &AmbientVector) -> f64 {
    let (a, b, c, d) = (a.as_slice(), b.as_slice(), c.as_slice(), d.as_slice());
    (0..a.len()).map(|i| (a[i] - b[i]) * (c[i] - d[i])).sum()
}

/// Orthogonal projector onto the span of an orthonormal family.
pub fn span_projector(basis: &[AmbientVector], n: usize) -> DMatrix<f64> {
    let mut p = DMatrix::zeros(n, n);
    for e in basis {
        p += e * e.transpose();
    }
    p
}

/// Gram–Schmidt; vectors that become (numerically) dependent are dropped.
pub fn orthonormalize(vectors: &[AmbientVector]) -> Vec<AmbientVector> {
    let mut out: Vec<AmbientVector> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for e in &out {
                let c = e.dot(&w);
                w.axpy(-c, e, 1.0);
            }
        }
        let len = w.norm();
        if len > 1e-12 * v.norm().max(1e-300) {
            out.push(w / len);
        }
    }
    out
}

/// Completes an orthonormal family to an orthonormal basis of `R^n`.
pub fn complete_basis(partial: &[AmbientVector], n: usize) -> Vec<AmbientVector> {
    let mut all: Vec<AmbientVector> = partial.to_vec();
    for i in 0..n {
        all.push(DVector::from_fn(n, |j, _| if i == j { 1.0 } else { 0.0 }));
    }
    let mut basis = orthonormalize(&all);
    basis.truncate(n);
    basis
}

/// Euclidean distance from `p` to the triangle `abc` in `R^n`.
pub fn point_triangle_distance(p: &AmbientVector, a: &AmbientVector, b: &AmbientVector, c: &AmbientVector) -> f64 {
    let u = b - a;
    let v = c - a;
    let w = p - a;
    let uu = u.dot(&u);
    let uv = u.dot(&v);
    let vv = v.dot(&v);
    let det = uu * vv - uv * uv;
    if det > 1e-300 {
        let wu = w.dot(&u);
        let wv = w.dot(&v);
        let s = (vv * wu - uv * wv) / det;
        let t = (uu * wv - uv * wu) / det;
        if s >= 0.0 && t >= 0.0 && s + t <= 1.0 {
            let q = a + &u * s + &v * t;
            return (p - q).norm();
        }
    }
    point_segment_distance(p, a, b)
        .min(point_segment_distance(p, b, c))
        .min(point_segment_distance(p, c, a))
}

pub fn point_segment_distance(p: &AmbientVector, a: &AmbientVector, b: &AmbientVector) -> f64 {
    let d = b - a;
    let len2 = d.norm_squared();
    let s = if len2 > 0.0 { ((p - a).dot(&d) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (p - (a + d * s)).norm()
}

/// Parameters `s ∈ (0, 1)` where the segment `a + s (b - a)` crosses the
/// sphere `|x - center| = r`, in increasing order. Tangential touches are
/// ignored.
pub fn segment_sphere_crossings(a: &AmbientVector, b: &AmbientVector, center: &AmbientVector, r: f64) -> Vec<f64> {
    let d = b - a;
    let f = a - center;
    let qa = d.norm_squared();
    if qa == 0.0 {
        return Vec::new();
    }
    let qb = 2.0 * d.dot(&f);
    let qc = f.norm_squared() - r * r;
    let disc = qb * qb - 4.0 * qa * qc;
    if disc <= 0.0 {
        return Vec::new();
    }
    let sq = disc.sqrt();
    // numerically stable pair of roots
    let q = -0.5 * (qb + qb.signum() * sq);
    let (mut s0, mut s1) = if q != 0.0 { (q / qa, qc / q) } else { (0.0, 0.0) };
    if s0 > s1 {
        std::mem::swap(&mut s0, &mut s1);
    }
    const EDGE_EPS: f64 = 1e-12;
    [s0, s1]
        .into_iter()
        .filter(|s| *s > EDGE_EPS && *s < 1.0 - EDGE_EPS)
        .collect()
}

/// Length of the part of segment `ab` inside the open ball.
pub fn segment_length_in_ball(a: &AmbientVector, b: &AmbientVector, center: &AmbientVector, r: f64) -> f64 {
    let (s0, s1) = segment_ball_interval(a, b, center, r);
    (s1 - s0).max(0.0) * (b - a).norm()
}

/// Parameter interval `[s0, s1] ⊆ [0, 1]` of segment `ab` inside the ball
/// (empty intervals have `s1 <= s0`).
pub fn segment_ball_interval(a: &AmbientVector, b: &AmbientVector, center: &AmbientVector, r: f64) -> (f64, f64) {
    let d = b - a;
    let f = a - center;
    let qa = d.norm_squared();
    let qc = f.norm_squared() - r * r;
    if qa == 0.0 {
        return if qc < 0.0 { (0.0, 1.0) } else { (0.0, 0.0) };
    }
    let qb = 2.0 * d.dot(&f);
    let disc = qb * qb - 4.0 * qa * qc;
    if disc <= 0.0 {
        return (0.0, 0.0);
    }
    let sq = disc.sqrt();
    let lo = (-qb - sq) / (2.0 * qa);
    let hi = (-qb + sq) / (2.0 * qa);
    (lo.max(0.0), hi.min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossings_of_a_diameter() {
        let a = vector(&[-2.0, 0.0, 0.0]);
        let b = vector(&[2.0, 0.0, 0.0]);
        let c = vector(&[0.0, 0.0, 0.0]);
        let s = segment_sphere_crossings(&a, &b, &c, 1.0);
        assert_eq!(s.len(), 2);
        assert!((s[0] - 0.25).abs() < 1e-15 && (s[1] - 0.75).abs() < 1e-15);
        assert!((segment_length_in_ball(&a, &b, &c, 1.0) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn triangle_distance_regions() {
        let a = vector(&[0.0, 0.0, 0.0, 0.0]);
        let b = vector(&[1.0, 0.0, 0.0, 0.0]);
        let c = vector(&[0.0, 1.0, 0.0, 0.0]);
        let above = vector(&[0.2, 0.2, 0.0, 3.0]);
        assert!((point_triangle_distance(&above, &a, &b, &c) - 3.0).abs() < 1e-14);
        let outside = vector(&[-1.0, -1.0, 0.0, 0.0]);
        assert!((point_triangle_distance(&outside, &a, &b, &c) - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn gram_schmidt_completion() {
        let e = vec![vector(&[1.0, 1.0, 0.0]) / 2f64.sqrt()];
        let basis = complete_basis(&e, 3);
        assert_eq!(basis.len(), 3);
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((basis[i].dot(&basis[j]) - expect).abs() < 1e-14);
            }
        }
    }
}
