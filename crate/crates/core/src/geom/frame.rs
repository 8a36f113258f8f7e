use serde::{Deserialize, Serialize};

use super::vector::{check_finite, AmbientVector};
use crate::{Error, Result};

const ORTHO_TOL: f64 = 1e-12;
const CONSISTENCY_TOL: f64 = 1e-10;

/// Pointwise frame along a curve `γ = M ∩ N` where a surface `M` meets a
/// hypersurface `N` transversally.
///
/// `am` and `an` are the second fundamental forms of `M` and `N` evaluated
/// on the unit tangent `τ`; for consistency they must be the normal parts of
/// the curve's curvature `k⃗`, namely `am = k⃗ − (n·k⃗)n` and
/// `an = (e₁·k⃗)e₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntersectionFrame {
    pub tau: AmbientVector,
    /// Unit conormal of `M` along `γ`, tangent to `M` and orthogonal to `τ`.
    pub n_vec: AmbientVector,
    /// Unit normal of `N`.
    pub e1: AmbientVector,
    pub am: AmbientVector,
    pub an: AmbientVector,
    pub k_vec: AmbientVector,
}

/// Both sides of the intersection-curvature identity
/// `sin²α |P k⃗|² + |P^⊥ k⃗|² = |A⃗_M(τ,τ) − A⃗_N(τ,τ)|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma5Sides {
    pub lhs: f64,
    pub rhs: f64,
    pub sin2_alpha: f64,
    /// Whether `P` had to be completed because `n` and `e₁` are parallel.
    pub completed_plane: bool,
}

impl IntersectionFrame {
    /// Builds the consistent frame for a given curvature vector.
    pub fn from_curvature(tau: AmbientVector, n_vec: AmbientVector, e1: AmbientVector, k_vec: AmbientVector) -> Result<Self> {
        let am = &k_vec - &n_vec * n_vec.dot(&k_vec);
        let an = &e1 * e1.dot(&k_vec);
        let f = IntersectionFrame { tau, n_vec, e1, am, an, k_vec };
        f.validate()?;
        Ok(f)
    }

    pub fn dim(&self) -> usize {
        self.tau.len()
    }

    pub fn sin2_alpha(&self) -> f64 {
        self.n_vec.dot(&self.e1).powi(2).min(1.0)
    }

    /// Checks dimensions, unit lengths and the stated orthogonalities.
    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        for v in [&self.tau, &self.n_vec, &self.e1, &self.am, &self.an, &self.k_vec] {
            if v.len() != n {
                return Err(Error::input("frame vectors have mixed dimensions"));
            }
            check_finite(v)?;
        }
        if n < 3 {
            return Err(Error::input("intersection frames need ambient dimension at least 3"));
        }
        for (name, v) in [("tau", &self.tau), ("n", &self.n_vec), ("e1", &self.e1)] {
            if (v.norm() - 1.0).abs() > ORTHO_TOL {
                return Err(Error::input(format!("{name} is not a unit vector")));
            }
        }
        let scale = 1.0 + self.k_vec.norm();
        for (name, v, tol) in [
            ("n", &self.n_vec, ORTHO_TOL),
            ("e1", &self.e1, ORTHO_TOL),
            ("k", &self.k_vec, ORTHO_TOL * scale),
        ] {
            if self.tau.dot(v).abs() > tol {
                return Err(Error::input(format!("{name} is not orthogonal to tau")));
            }
        }
        Ok(())
    }

    /// Largest deviation of `am`, `an` from the normal parts of `k⃗`.
    pub fn consistency_residual(&self) -> f64 {
        let am = &self.k_vec - &self.n_vec * self.n_vec.dot(&self.k_vec);
        let an = &self.e1 * self.e1.dot(&self.k_vec);
        (&am - &self.am).norm().max((&an - &self.an).norm())
    }
}

/// Evaluates both sides of the intersection identity.
///
/// `P = span{n, e₁}`. When `n = ±e₁` the plane is completed by the part of
/// `k⃗` orthogonal to `n`, or by any unit vector orthogonal to `n` and `τ`
/// when that part vanishes; the identity holds for every completion.
pub fn lemma5_identity(f: &IntersectionFrame) -> Result<Lemma5Sides> {
    f.validate()?;
    let residual = f.consistency_residual();
    if residual > CONSISTENCY_TOL * (1.0 + f.k_vec.norm()) {
        return Err(Error::InconsistentFrame { residual });
    }
    let sin2 = f.sin2_alpha();
    let n = &f.n_vec;
    let k = &f.k_vec;

    let mut second = &f.e1 - n * n.dot(&f.e1);
    let mut completed = false;
    if second.norm() < 1e-8 {
        completed = true;
        second = k - n * n.dot(k);
        if second.norm() < 1e-12 {
            second = (0..f.dim())
                .map(|i| {
                    let mut v = AmbientVector::zeros(f.dim());
                    v[i] = 1.0;
                    v -= n * n.dot(&v);
                    v -= &f.tau * f.tau.dot(&v);
                    v
                })
                .max_by(|a, b| a.norm().total_cmp(&b.norm()))
                .expect("ambient dimension is positive");
        }
    }
    let second = &second / second.norm();
    let pk = n * n.dot(k) + &second * second.dot(k);
    let pk_perp = k - &pk;
    let lhs = sin2 * pk.norm_squared() + pk_perp.norm_squared();
    let rhs = (&f.am - &f.an).norm_squared();
    Ok(Lemma5Sides { lhs, rhs, sin2_alpha: sin2, completed_plane: completed })
}
