//! The backwards heat kernel, the Gaussian density functional, its
//! dissipation along a flow, area ratios and the scale-invariant mean
//! curvature estimate.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::budget::EstimateReport;
use crate::constants;
use crate::flow::Trajectory;
use crate::geom::{ball_restrict, check_finite, span_projector, AmbientVector};
use crate::geometry::Geometry;
use crate::{Error, Result};

/// `ρ_{y,s}(x, t) = (4π(s−t))^{−k/2} exp(−|x−y|²/4(s−t))`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatKernel {
    pub center: AmbientVector,
    pub s: f64,
    pub k: usize,
}

/// `ρ` together with its space and time derivatives at one point.
#[derive(Debug, Clone)]
pub struct KernelJet {
    pub value: f64,
    pub gradient: AmbientVector,
    pub hessian: DMatrix<f64>,
    pub time_derivative: f64,
}

impl HeatKernel {
    pub fn new(center: AmbientVector, s: f64, k: usize) -> Result<Self> {
        check_finite(&center)?;
        if k == 0 || k > center.len() {
            return Err(Error::input(format!("kernel dimension {k} must lie in 1..={}", center.len())));
        }
        if !s.is_finite() {
            return Err(Error::input("kernel time must be finite"));
        }
        Ok(HeatKernel { center, s, k })
    }

    fn lag(&self, t: f64) -> Result<f64> {
        let tau = self.s - t;
        if !(tau > 0.0) {
            return Err(Error::input(format!("kernel is defined for t < s = {}, got t = {t}", self.s)));
        }
        Ok(tau)
    }

    pub fn eval(&self, x: &AmbientVector, t: f64) -> Result<f64> {
        let tau = self.lag(t)?;
        Ok(self.eval_lag(x, tau))
    }

    fn eval_lag(&self, x: &AmbientVector, tau: f64) -> f64 {
        let d2 = (x - &self.center).norm_squared();
        (4.0 * PI * tau).powf(-(self.k as f64) / 2.0) * (-d2 / (4.0 * tau)).exp()
    }

    /// Closed-form derivatives: `Dρ = −ρ z/2τ`,
    /// `D²ρ = ρ(zzᵀ/4τ² − I/2τ)`, `∂_tρ = ρ(k/2τ − |z|²/4τ²)` with
    /// `z = x − y`, `τ = s − t`.
    pub fn jet(&self, x: &AmbientVector, t: f64) -> Result<KernelJet> {
        let tau = self.lag(t)?;
        let z = x - &self.center;
        let rho = self.eval_lag(x, tau);
        let n = z.len();
        let gradient = &z * (-rho / (2.0 * tau));
        let hessian = (&z * z.transpose() / (4.0 * tau * tau) - DMatrix::identity(n, n) / (2.0 * tau)) * rho;
        let time_derivative = rho * (self.k as f64 / (2.0 * tau) - z.norm_squared() / (4.0 * tau * tau));
        Ok(KernelJet { value: rho, gradient, hessian, time_derivative })
    }
}

/// `kernel_eval` as a free function.
pub fn kernel_eval(kern: &HeatKernel, x: &AmbientVector, t: f64) -> Result<f64> {
    kern.eval(x, t)
}

/// `Q_S(ρ) = |S^⊥ Dρ|²/ρ + S : D²ρ + ∂_tρ` for the `k`-plane spanned by the
/// orthonormal `plane`, which vanishes identically.
pub fn kernel_identity_check(kern: &HeatKernel, plane: &[AmbientVector], x: &AmbientVector, t: f64) -> Result<f64> {
    let n = kern.center.len();
    if plane.len() != kern.k {
        return Err(Error::input(format!("plane has dimension {}, kernel expects {}", plane.len(), kern.k)));
    }
    for (i, e) in plane.iter().enumerate() {
        if e.len() != n {
            return Err(Error::input("plane vectors have the wrong ambient dimension"));
        }
        for (j, f) in plane.iter().enumerate() {
            let expect = if i == j { 1.0 } else { 0.0 };
            if (e.dot(f) - expect).abs() > 1e-10 {
                return Err(Error::input("plane basis is not orthonormal"));
            }
        }
    }
    let jet = kern.jet(x, t)?;
    let s = span_projector(plane, n);
    let normal = DMatrix::identity(n, n) - &s;
    let perp_grad = &normal * &jet.gradient;
    let trace_term = s.component_mul(&jet.hessian).sum();
    Ok(perp_grad.norm_squared() / jet.value + trace_term + jet.time_derivative)
}

/// Options for density quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DensityOptions {
    /// Points farther than `truncation·√(s−t)` from the centre are dropped.
    pub truncation: f64,
    /// Graph nodes closer than this to the patch boundary are excluded.
    pub boundary_margin: f64,
}

impl Default for DensityOptions {
    fn default() -> Self {
        DensityOptions { truncation: 8.0, boundary_margin: 0.0 }
    }
}

/// A density integral with its bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Density {
    pub value: f64,
    /// Upper bound for the mass dropped by tail truncation.
    pub truncation_bound: f64,
    /// Measure excluded by the boundary margin.
    pub excluded_measure: f64,
}

fn margin_excluded(g: &Geometry, node: usize, margin: f64) -> bool {
    match g {
        Geometry::Graph(p) if margin > 0.0 => (p.depth(node) as f64) * p.spacing() < margin,
        _ => false,
    }
}

/// `∫_{M_t} ρ dH^k` by the symmetric 3-point rule per triangle, the
/// midpoint rule per curve edge and trapezoid weights on graphs.
pub fn huisken_density(g: &Geometry, t: f64, kern: &HeatKernel, opts: &DensityOptions) -> Result<Density> {
    let tau = kern.lag(t)?;
    if g.dim() != kern.center.len() {
        return Err(Error::input("kernel and geometry live in different dimensions"));
    }
    if g.intrinsic_dim() != kern.k {
        return Err(Error::input(format!("kernel dimension {} does not match geometry dimension {}", kern.k, g.intrinsic_dim())));
    }
    let cutoff = opts.truncation * tau.sqrt();
    let tail_rho = (4.0 * PI * tau).powf(-(kern.k as f64) / 2.0) * (-cutoff * cutoff / (4.0 * tau)).exp();
    let mut value = 0.0;
    let mut dropped = 0.0;
    let mut excluded = 0.0;
    let mut add = |x: AmbientVector, w: f64| {
        if (&x - &kern.center).norm() > cutoff {
            dropped += w;
        } else {
            value += w * kern.eval_lag(&x, tau);
        }
    };
    match g {
        Geometry::Curve(c) => {
            for e in 0..c.edge_count() {
                let (a, b) = c.edge(e);
                add((a + b) * 0.5, (b - a).norm());
            }
        }
        Geometry::Mesh(m) => {
            let p = m.vertices();
            for (f, t) in m.triangles().iter().enumerate() {
                let w = m.face_area(f) / 3.0;
                for k in 0..3 {
                    let x = &p[t[k]] * (2.0 / 3.0) + (&p[t[(k + 1) % 3]] + &p[t[(k + 2) % 3]]) * (1.0 / 6.0);
                    add(x, w);
                }
            }
        }
        Geometry::Graph(_) => {
            for (v, s) in g.samples()?.into_iter().enumerate() {
                if margin_excluded(g, v, opts.boundary_margin) {
                    excluded += s.weight;
                } else {
                    add(s.x, s.weight);
                }
            }
        }
    }
    Ok(Density { value, truncation_bound: dropped * tail_rho, excluded_measure: excluded })
}

/// The Gaussian density functional `∫_{M_t} ρ_{y,s}(·, t)`.
pub fn huisken_functional(g: &Geometry, t: f64, kern: &HeatKernel) -> Result<f64> {
    Ok(huisken_density(g, t, kern, &DensityOptions::default())?.value)
}

/// `∫ ρ |H⃗ + S^⊥(x − y)/2(s − t)|²` over the interior curvature samples.
pub fn dissipation(g: &Geometry, t: f64, kern: &HeatKernel, opts: &DensityOptions) -> Result<f64> {
    let tau = kern.lag(t)?;
    let mut total = 0.0;
    for (v, s) in g.samples()?.iter().enumerate() {
        if !s.interior || margin_excluded(g, v, opts.boundary_margin) {
            continue;
        }
        let z = &s.x - &kern.center;
        let defect = &s.mean_curvature + &s.normal_projector * z / (2.0 * tau);
        total += s.weight * kern.eval_lag(&s.x, tau) * defect.norm_squared();
    }
    Ok(total)
}

/// Per-snapshot density values along a flow with the monotonicity verdicts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub dissipation: Vec<f64>,
    /// Allowed increase on the interval ending at each snapshot (0 for the first).
    pub slack: Vec<f64>,
    /// Whether the interval ending at each snapshot respects the slack.
    pub verdicts: Vec<bool>,
    /// `(value[i+1] − value[i])/Δt + mean dissipation` per interval.
    pub derivative_mismatch: Vec<f64>,
}

impl DensityReport {
    pub fn pass(&self) -> bool {
        self.verdicts.iter().all(|&v| v)
    }

    /// First interval `(t_i, t_{i+1})` where the value rose beyond the slack.
    pub fn first_violation(&self) -> Option<(f64, f64)> {
        self.verdicts.iter().position(|&v| !v).map(|i| (self.times[i - 1], self.times[i]))
    }

    /// Largest relative spread `(max − min)/mean` of the values.
    pub fn relative_spread(&self) -> f64 {
        let max = self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = self.values.iter().copied().fold(f64::INFINITY, f64::min);
        let mean = self.values.iter().sum::<f64>() / self.values.len() as f64;
        (max - min) / mean
    }

    /// CSV with columns `t,value,dissipation,slack,verdict`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,value,dissipation,slack,verdict\n");
        for i in 0..self.times.len() {
            out.push_str(&format!(
                "{:.17e},{:.17e},{:.17e},{:.17e},{}\n",
                self.times[i],
                self.values[i],
                self.dissipation[i],
                self.slack[i],
                if self.verdicts[i] { "PASS" } else { "FAIL" }
            ));
        }
        out
    }
}

/// Evaluates the density and its dissipation on every snapshot with
/// `t < s` and checks that the density does not increase by more than
/// `10·(h² + dt)·value` between snapshots.
pub fn monotonicity_audit(tr: &Trajectory, kern: &HeatKernel, opts: &DensityOptions) -> Result<DensityReport> {
    let snaps: Vec<_> = tr.snapshots().iter().filter(|s| s.t < kern.s).collect();
    if snaps.len() < 2 {
        return Err(Error::input("monotonicity audit needs at least two snapshots before the kernel time"));
    }
    let mut report = DensityReport {
        times: Vec::new(),
        values: Vec::new(),
        dissipation: Vec::new(),
        slack: Vec::new(),
        verdicts: Vec::new(),
        derivative_mismatch: Vec::new(),
    };
    let mut prev_h: Option<f64> = None;
    for s in &snaps {
        let value = huisken_density(&s.geometry, s.t, kern, opts)?.value;
        let diss = dissipation(&s.geometry, s.t, kern, opts)?;
        let h = s.geometry.min_spacing();
        if let Some(ph) = prev_h {
            let i = report.times.len() - 1;
            let gap = s.t - report.times[i];
            let dt = if tr.metadata.steps > 0 { tr.metadata.max_dt } else { gap };
            let hh = ph.max(h);
            let slack = constants::MONOTONICITY_SLACK_FACTOR * (hh * hh + dt) * report.values[i].max(value);
            report.slack.push(slack);
            report.verdicts.push(value - report.values[i] <= slack);
            report.derivative_mismatch.push((value - report.values[i]) / gap + 0.5 * (diss + report.dissipation[i]));
        } else {
            report.slack.push(0.0);
            report.verdicts.push(true);
        }
        report.times.push(s.t);
        report.values.push(value);
        report.dissipation.push(diss);
        prev_h = Some(h);
    }
    Ok(report)
}

/// Volume of the unit ball in `R^k`.
pub fn unit_ball_volume(k: usize) -> f64 {
    match k {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(k - 2) * 2.0 * PI / k as f64,
    }
}

/// `sup H^k(M ∩ B_R(x)) / (ω_k R^k)` over the given centres and radii.
pub fn area_ratio(g: &Geometry, centers: &[AmbientVector], radii: &[f64]) -> Result<f64> {
    if radii.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::input("radii must be positive"));
    }
    let omega = unit_ball_volume(g.intrinsic_dim());
    let k = g.intrinsic_dim() as i32;
    let mut best: f64 = 0.0;
    for c in centers {
        for &r in radii {
            let measure = match g {
                Geometry::Mesh(m) => ball_restrict(m, c, r)?.area(),
                _ => g.ball_integral(c, r, |_| 1.0)?,
            };
            best = best.max(measure / (omega * r.powi(k)));
        }
    }
    Ok(best)
}

/// `r^{−k} ∫_{t−r²}^t ∫_{M_s ∩ B_r(x)} |H⃗|²` against `C·D` with the
/// corpus-fitted constant.
pub fn mc_estimate_check(tr: &Trajectory, x: &AmbientVector, t: f64, r: f64, d: f64) -> Result<EstimateReport> {
    if !(r > 0.0) || !(d > 0.0) {
        return Err(Error::input("radius and area-ratio bound must be positive"));
    }
    let k = tr.first().geometry.intrinsic_dim();
    let integral = tr.time_integral(t - r * r, t, |g, _| g.ball_integral(x, r, |s| s.mean_curvature.norm_squared()))?;
    let lhs = integral / r.powi(k as i32);
    let c = constants::MEAN_CURVATURE_ESTIMATE;
    Ok(EstimateReport::new(
        "scale-invariant mean curvature",
        [("space_time_integral", integral), ("r", r), ("D", d), ("C_fit", c)],
        lhs,
        c * d,
        0.0,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{shapes, vector};

    #[test]
    fn kernel_values() {
        let k = HeatKernel::new(vector(&[0.0, 0.0, 0.0]), 1.0 / (4.0 * PI), 2).unwrap();
        assert!((k.eval(&vector(&[0.0, 0.0, 0.0]), 0.0).unwrap() - 1.0).abs() < 1e-15);
        let k1 = HeatKernel::new(vector(&[0.0, 0.0]), 1.0, 1).unwrap();
        let v = k1.eval(&vector(&[2.0, 0.0]), 0.0).unwrap();
        assert!((v - (4.0 * PI).powf(-0.5) * (-1.0f64).exp()).abs() < 1e-15);
        assert!((v - 0.10377).abs() < 1e-5);
        assert!(k1.eval(&vector(&[0.0, 0.0]), 1.0).is_err());
    }

    #[test]
    fn unit_ball_volumes() {
        assert_eq!(unit_ball_volume(1), 2.0);
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
    }

    #[test]
    fn shrinker_densities() {
        let circle: Geometry = shapes::circle(2f64.sqrt(), 512, 2).into();
        let k1 = HeatKernel::new(vector(&[0.0, 0.0]), 0.0, 1).unwrap();
        let v = huisken_functional(&circle, -1.0, &k1).unwrap();
        assert!((v / (2.0 * PI / 1f64.exp()).sqrt() - 1.0).abs() < 5e-3, "{v}");

        let sphere: Geometry = shapes::icosphere(4, 2.0).into();
        let k2 = HeatKernel::new(vector(&[0.0, 0.0, 0.0]), 0.0, 2).unwrap();
        let v = huisken_functional(&sphere, -1.0, &k2).unwrap();
        assert!((v / (4.0 / 1f64.exp()) - 1.0).abs() < 5e-3, "{v}");
    }

    #[test]
    fn area_ratios() {
        let plane: Geometry = shapes::plane_grid(3.0, 30).into();
        let r = area_ratio(&plane, &[vector(&[0.1, -0.2, 0.0])], &[1.0, 1.5]).unwrap();
        assert!((r - 1.0).abs() < 1e-3, "{r}");
        let sphere: Geometry = shapes::icosphere(4, 2.0).into();
        let r = area_ratio(&sphere, &[vector(&[0.0, 0.0, 0.0])], &[10.0]).unwrap();
        assert!((r - 16.0 / 100.0).abs() < 1e-3, "{r}");
    }
}
