//! Parabolic rescaling about a space-time point, blowup ladders and the
//! self-shrinker defect `H⃗ + S^⊥x/(−2t)`.
//!
//! The rescaled flow is `M^λ_t = λ^{−1}(M_{T+λ²t} − y)`.

use serde::{Deserialize, Serialize};

use crate::budget::EstimateReport;
use crate::constants;
use crate::flow::{Snapshot, Trajectory};
use crate::geom::AmbientVector;
use crate::geometry::Geometry;
use crate::monotonicity::{huisken_functional, HeatKernel};
use crate::{Error, Result};

/// Centre `y`, singular time `T` and scale `λ` of a parabolic rescaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescaleParams {
    pub center: Vec<f64>,
    pub t_sing: f64,
    pub lambda: f64,
}

impl RescaleParams {
    pub fn new(center: &AmbientVector, t_sing: f64, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::input(format!("rescaling scale must be positive, got {lambda}")));
        }
        if !t_sing.is_finite() || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::input("rescaling centre and time must be finite"));
        }
        Ok(RescaleParams { center: center.iter().copied().collect(), t_sing, lambda })
    }

    pub fn center(&self) -> AmbientVector {
        AmbientVector::from_column_slice(&self.center)
    }

    /// Source time of the rescaled time `t`.
    pub fn source_time(&self, t: f64) -> f64 {
        self.t_sing + self.lambda * self.lambda * t
    }

    /// Rescaled time of the source time `t`.
    pub fn rescaled_time(&self, t: f64) -> f64 {
        (t - self.t_sing) / (self.lambda * self.lambda)
    }

    /// Applies the spatial part `x ↦ (x − y)/λ`.
    pub fn rescale_geometry(&self, g: &Geometry) -> Result<Geometry> {
        if g.dim() != self.center.len() {
            return Err(Error::input(format!(
                "rescaling centre has dimension {}, geometry {}",
                self.center.len(),
                g.dim()
            )));
        }
        g.similarity(&self.center(), 1.0 / self.lambda)
    }

    fn check_span(&self, tr: &Trajectory) -> Result<()> {
        let (a, _) = tr.span();
        if self.t_sing < a {
            return Err(Error::input(format!("singular time {} precedes the trajectory start {a}", self.t_sing)));
        }
        Ok(())
    }
}

/// Rescales every snapshot of `tr`.
///
/// `T` may lie past the last snapshot, since a discrete run stops short of
/// its singular time.
pub fn parabolic_rescale(tr: &Trajectory, p: &RescaleParams) -> Result<Trajectory> {
    p.check_span(tr)?;
    tr.map(|s| Ok(Snapshot { t: p.rescaled_time(s.t), geometry: p.rescale_geometry(&s.geometry)? }))
}

/// The rescaled geometry `M^λ_t`, interpolating the source in time.
pub fn rescaled_at(tr: &Trajectory, p: &RescaleParams, t: f64) -> Result<Geometry> {
    p.check_span(tr)?;
    let src = p.source_time(t);
    if !tr.contains_time(src) {
        let (a, b) = tr.span();
        return Err(Error::input(format!(
            "rescaled time {t} maps to source time {src} outside the trajectory span [{a}, {b}]"
        )));
    }
    p.rescale_geometry(&tr.at(src)?)
}

/// Norms of the shrinker defect against the measure of the geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShrinkerResidual {
    /// `(∫ |H⃗ + S^⊥x/(−2t)|²)^{1/2}`.
    pub l2: f64,
    pub linf: f64,
    /// `l2` divided by the square root of the measure.
    pub per_area: f64,
}

/// Defect of the shrinker equation at time `t < 0`, over interior samples.
pub fn shrinker_residual_at(g: &Geometry, t: f64) -> Result<ShrinkerResidual> {
    if !(t < 0.0) {
        return Err(Error::input(format!("shrinker defect needs t < 0, got {t}")));
    }
    let mut sq = 0.0;
    let mut measure = 0.0;
    let mut linf: f64 = 0.0;
    for s in g.samples()?.iter().filter(|s| s.interior) {
        let defect = &s.mean_curvature + &s.normal_projector * &s.x / (-2.0 * t);
        let d2 = defect.norm_squared();
        sq += s.weight * d2;
        measure += s.weight;
        linf = linf.max(d2.sqrt());
    }
    if !(measure > 0.0) {
        return Err(Error::input("geometry has no interior samples"));
    }
    Ok(ShrinkerResidual { l2: sq.sqrt(), linf, per_area: (sq / measure).sqrt() })
}

/// Defect of `H⃗ + S^⊥x/2 = 0` on the time `−1` slice.
pub fn shrinker_residual(g: &Geometry) -> Result<ShrinkerResidual> {
    shrinker_residual_at(g, -1.0)
}

/// `∫_a^b ∫ ρ_{0,0} |H⃗ + S^⊥x/(−2t)|²` over a rescaled trajectory.
pub fn weighted_defect(rescaled: &Trajectory, a: f64, b: f64) -> Result<f64> {
    if !(b < 0.0) {
        return Err(Error::input("defect window must end before time 0"));
    }
    let g0 = &rescaled.first().geometry;
    let kern = HeatKernel::new(AmbientVector::zeros(g0.dim()), 0.0, g0.intrinsic_dim())?;
    rescaled.time_integral(a, b, |g, t| {
        let mut total = 0.0;
        for s in g.samples()?.iter().filter(|s| s.interior) {
            let defect = &s.mean_curvature + &s.normal_projector * &s.x / (-2.0 * t);
            total += s.weight * kern.eval(&s.x, t)? * defect.norm_squared();
        }
        Ok(total)
    })
}

/// Geometric ladder `λ_j = 2^{−j}`, `j = 1..=rungs`.
pub fn default_ladder(rungs: usize) -> Vec<f64> {
    (1..=rungs).map(|j| 0.5f64.powi(j as i32)).collect()
}

/// One rung of a blowup ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupRung {
    pub lambda: f64,
    /// Source time `T − λ²` of the rescaled time `−1` slice.
    pub source_time: f64,
    pub residual: ShrinkerResidual,
    /// Gaussian density of the rescaled slice at `(0, 0)`.
    pub huisken: f64,
}

/// Per-λ shrinker residuals and Gaussian densities along a ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport {
    pub rungs: Vec<BlowupRung>,
    /// Scales whose `t = −1` slice fell outside the trajectory.
    pub exhausted: Vec<f64>,
    /// Whether `l2` residuals are nonincreasing as `λ` decreases, up to
    /// `tolerance` relative to the first rung.
    pub residuals_nonincreasing: bool,
    /// `(max − min)/mean` of the Huisken values.
    pub huisken_spread: f64,
}

impl BlowupReport {
    pub fn is_partial(&self) -> bool {
        !self.exhausted.is_empty()
    }

    /// Rows `{"lambda", "residual_l2", "huisken"}`.
    pub fn to_json_rows(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.rungs
                .iter()
                .map(|r| serde_json::json!({"lambda": r.lambda, "residual_l2": r.residual.l2, "huisken": r.huisken}))
                .collect(),
        )
    }
}

/// Rescales `tr` about `(y, T)` for each `λ` of a decreasing ladder and
/// evaluates the time `−1` slice.
pub fn blowup_sequence(tr: &Trajectory, y: &AmbientVector, t_sing: f64, lambdas: &[f64], tolerance: f64) -> Result<BlowupReport> {
    if lambdas.is_empty() {
        return Err(Error::input("empty scale ladder"));
    }
    if lambdas.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::input("scale ladder must be strictly decreasing"));
    }
    let k = tr.first().geometry.intrinsic_dim();
    let kern = HeatKernel::new(AmbientVector::zeros(y.len()), 0.0, k)?;
    let mut rungs = Vec::new();
    let mut exhausted = Vec::new();
    for &lambda in lambdas {
        let p = RescaleParams::new(y, t_sing, lambda)?;
        let src = p.source_time(-1.0);
        if !tr.contains_time(src) {
            exhausted.push(lambda);
            continue;
        }
        let g = rescaled_at(tr, &p, -1.0)?;
        rungs.push(BlowupRung {
            lambda,
            source_time: src,
            residual: shrinker_residual(&g)?,
            huisken: huisken_functional(&g, -1.0, &kern)?,
        });
    }
    let scale = rungs.first().map_or(0.0, |r| r.residual.l2);
    let residuals_nonincreasing = rungs.windows(2).all(|w| w[1].residual.l2 <= w[0].residual.l2 + tolerance * scale);
    let huisken_spread = if rungs.is_empty() {
        0.0
    } else {
        let (lo, hi) = rungs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r.huisken), hi.max(r.huisken)));
        let mean = rungs.iter().map(|r| r.huisken).sum::<f64>() / rungs.len() as f64;
        (hi - lo) / mean
    };
    Ok(BlowupReport { rungs, exhausted, residuals_nonincreasing, huisken_spread })
}

/// `∫_{−1−τ}^{−1} ∫_{M^λ ∩ B_r(x)} |H⃗|²` against
/// `C·D·τ(r^k + r^{k−1}R) + δ` on a rescaled trajectory, where `δ` is the
/// shrinker defect integrated over `B_{2r}(x)` and the same window.
pub fn improved_h_budget(rescaled: &Trajectory, x: &AmbientVector, r: f64, big_r: f64, tau: f64, d: f64) -> Result<EstimateReport> {
    if !(r > 0.0) || !(tau > 0.0) || !(d > 0.0) {
        return Err(Error::input("r, τ and D must be positive"));
    }
    if x.norm() + 2.0 * r > big_r * (1.0 + 1e-12) {
        return Err(Error::input(format!("B_2r(x) is not inside B_R: |x| + 2r = {} > R = {big_r}", x.norm() + 2.0 * r)));
    }
    let (a, b) = (-1.0 - tau, -1.0);
    if !rescaled.contains_time(a) || !rescaled.contains_time(b) {
        let (lo, hi) = rescaled.span();
        return Err(Error::input(format!("window [{a}, {b}] outside rescaled span [{lo}, {hi}]")));
    }
    let k = rescaled.first().geometry.intrinsic_dim() as i32;
    let lhs = rescaled.time_integral(a, b, |g, _| g.ball_integral(x, r, |s| s.mean_curvature.norm_squared()))?;
    let defect = rescaled.time_integral(a, b, |g, t| {
        g.ball_integral(x, 2.0 * r, |s| (&s.mean_curvature + &s.normal_projector * &s.x / (-2.0 * t)).norm_squared())
    })?;
    let shape = tau * (r.powi(k) + r.powi(k - 1) * big_r);
    let c = constants::IMPROVED_H_BUDGET;
    Ok(EstimateReport::new(
        "improved mean curvature budget on a blowup sequence",
        [
            ("integral_H2", lhs),
            ("delta_R", defect),
            ("shape", shape),
            ("ratio", lhs / shape),
            ("C_fit", c),
            ("D", d),
            ("r", r),
            ("R", big_r),
            ("tau", tau),
        ],
        lhs,
        c * d * shape + defect,
        0.0,
    ))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{PI, SQRT_2};

    use super::*;
    use crate::geom::{shapes, vector};

    fn circle_flow(r0: f64, n: usize, times: &[f64]) -> Trajectory {
        let snaps = times
            .iter()
            .map(|&t| Snapshot { t, geometry: shapes::circle((r0 * r0 - 2.0 * t).sqrt(), n, 2).into() })
            .collect();
        Trajectory::new(snaps).unwrap()
    }

    #[test]
    fn unit_rescaling_is_identity() {
        let tr = circle_flow(1.0, 32, &[0.0, 0.1, 0.2]);
        let p = RescaleParams::new(&vector(&[0.0, 0.0]), 0.0, 1.0).unwrap();
        let out = parabolic_rescale(&tr, &p).unwrap();
        assert_eq!(out.snapshots(), tr.snapshots());
        assert!(RescaleParams::new(&vector(&[0.0, 0.0]), 0.0, 0.0).is_err());
    }

    #[test]
    fn exact_circle_rescales_to_the_shrinker() {
        let times: Vec<f64> = (0..=499).map(|i| i as f64 * 1e-3).collect();
        let tr = circle_flow(1.0, 64, &times);
        for lambda in default_ladder(4) {
            let p = RescaleParams::new(&vector(&[0.0, 0.0]), 0.5, lambda).unwrap();
            let g = rescaled_at(&tr, &p, -1.0).unwrap();
            let r = g.points()[0].norm();
            assert!((r / SQRT_2 - 1.0).abs() < 1e-2, "λ = {lambda}: r = {r}");
        }
        let p = RescaleParams::new(&vector(&[0.0, 0.0]), 0.5, 1.0).unwrap();
        assert!(rescaled_at(&tr, &p, -1.0).is_err());
    }

    #[test]
    fn composition_of_rescalings() {
        let tr = circle_flow(1.0, 16, &[0.0, 0.1, 0.2, 0.3]);
        let y = vector(&[0.1, -0.2]);
        let once = parabolic_rescale(&tr, &RescaleParams::new(&y, 0.5, 0.5).unwrap()).unwrap();
        let twice = parabolic_rescale(&once, &RescaleParams::new(&vector(&[0.0, 0.0]), 0.0, 0.5).unwrap()).unwrap();
        let direct = parabolic_rescale(&tr, &RescaleParams::new(&y, 0.5, 0.25).unwrap()).unwrap();
        for (a, b) in twice.snapshots().iter().zip(direct.snapshots()) {
            assert!((a.t - b.t).abs() < 1e-10);
            for (p, q) in a.geometry.points().iter().zip(b.geometry.points()) {
                assert!((p - q).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn residual_of_round_circles() {
        let shrinker: Geometry = shapes::circle(SQRT_2, 512, 2).into();
        assert!(shrinker_residual(&shrinker).unwrap().l2 < 1e-2);
        let unit: Geometry = shapes::circle(1.0, 512, 2).into();
        let r = shrinker_residual(&unit).unwrap();
        assert!((r.per_area - 0.5).abs() < 1e-2, "{r:?}");
        // λ·shrinker has defect |1/(√2λ) − λ/√2| = |1/λ − λ|/√2
        for lambda in [0.5, 0.8, 1.5, 3.0] {
            let g = shrinker.similarity(&vector(&[0.0, 0.0]), lambda).unwrap();
            let expect = (1.0 / lambda - lambda).abs() / SQRT_2;
            let got = shrinker_residual(&g).unwrap().per_area;
            assert!((got / expect - 1.0).abs() < 5e-2, "λ = {lambda}: {got} vs {expect}");
        }
    }

    #[test]
    fn residual_of_sphere_and_plane() {
        let l2: Vec<f64> = (3..=4)
            .map(|level| shrinker_residual(&shapes::icosphere(level, 2.0).into()).unwrap().l2)
            .collect();
        assert!(l2[1] < 2e-2, "{l2:?}");
        assert!(l2[1] < l2[0], "{l2:?}");
        let plane: Geometry = shapes::plane_grid(2.0, 8).into();
        assert!(shrinker_residual(&plane).unwrap().l2 < 1e-10);
    }

    #[test]
    fn ladder_on_exact_circle() {
        let times: Vec<f64> = (0..=4990).map(|i| i as f64 * 1e-4).collect();
        let tr = circle_flow(1.0, 256, &times);
        let rep = blowup_sequence(&tr, &vector(&[0.0, 0.0]), 0.5, &[1.0, 0.5, 0.25, 0.125, 0.0625], 1e-6).unwrap();
        assert_eq!(rep.exhausted, vec![1.0]);
        assert_eq!(rep.rungs.len(), 4);
        let target = (2.0 * PI / 1f64.exp()).sqrt();
        for r in &rep.rungs {
            assert!(r.residual.l2 < 1e-2);
            assert!((r.huisken / target - 1.0).abs() < 1e-2);
        }
        assert!(rep.huisken_spread < 2e-2);
        let rows = rep.to_json_rows();
        assert_eq!(rows[0]["lambda"], 0.5);
        assert!(blowup_sequence(&tr, &vector(&[0.0, 0.0]), 0.5, &[0.25, 0.5], 0.0).is_err());
    }

    #[test]
    fn improved_budget_on_static_plane() {
        let plane: Geometry = shapes::plane_grid(4.0, 8).into();
        let tr = Trajectory::new(vec![
            Snapshot { t: -3.0, geometry: plane.clone() },
            Snapshot { t: -0.5, geometry: plane },
        ])
        .unwrap();
        let rep = improved_h_budget(&tr, &vector(&[0.0, 0.0, 0.0]), 1.0, 2.0, 1.0, 1.0).unwrap();
        assert_eq!(rep.lhs, 0.0);
        assert!(rep.pass);
        assert!(improved_h_budget(&tr, &vector(&[0.5, 0.0, 0.0]), 1.0, 2.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn shrinker_growth_classes() {
        let origin = vector(&[0.0, 0.0, 0.0]);
        let h2 = |g: &Geometry, r: f64| g.ball_integral(&origin, r, |s| s.mean_curvature.norm_squared()).unwrap();
        // the compact shrinker saturates once the ball contains it
        let sphere: Geometry = shapes::icosphere(4, 2.0).into();
        let (a, b) = (h2(&sphere, 3.0), h2(&sphere, 6.0));
        assert!((a - b).abs() < 1e-12 * a);
        assert!((a / (16.0 * PI) - 1.0).abs() < 1e-2, "{a}");
        // the cylinder grows linearly: |H|² = 1/2 on a band of length 2·√(R² − 2)
        let cyl: Geometry = shapes::cylinder(SQRT_2, 12.0, 96, 160).into();
        for r in [4.0, 8.0] {
            let expect = 0.5 * 2.0 * PI * SQRT_2 * 2.0 * (r * r - 2.0f64).sqrt();
            assert!((h2(&cyl, r) / expect - 1.0).abs() < 2e-2, "R = {r}");
        }
    }
}
