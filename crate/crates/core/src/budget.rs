//! Gauss–Bonnet identities and curvature budgets: the closed and bounded
//! identities, the local estimate on balls, the global space-time budget,
//! the integral estimate on parabolic cylinders and the small-energy scan.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants;
use crate::flow::Trajectory;
use crate::geom::{ball_restrict, euler_genus, geodesic_boundary_integral, mesh_curvature, AmbientVector, CurvatureField, TriMesh};
use crate::zoo::quadric_fit_a;
use crate::geometry::FieldSample;
use crate::{Error, Result};

/// Named terms of an inequality `lhs ≤ rhs` with its slack and verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub name: String,
    pub terms: BTreeMap<String, f64>,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`.
    pub slack: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl EstimateReport {
    /// Builds the report; passes when `slack ≥ −tolerance`.
    pub fn new(name: impl Into<String>, terms: impl IntoIterator<Item = (&'static str, f64)>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let slack = rhs - lhs;
        EstimateReport {
            name: name.into(),
            terms: terms.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            lhs,
            rhs,
            slack,
            tolerance,
            pass: slack >= -tolerance,
        }
    }

    pub fn term(&self, name: &str) -> Option<f64> {
        self.terms.get(name).copied()
    }

    pub fn verdict(&self) -> &'static str {
        if self.pass {
            "PASS"
        } else {
            "FAIL"
        }
    }
}

impl EstimateReport {
    /// Report of an identity `lhs = rhs`: passes when `|slack| ≤ tolerance`.
    pub fn identity(name: impl Into<String>, terms: impl IntoIterator<Item = (&'static str, f64)>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let mut r = EstimateReport::new(name, terms, lhs, rhs, tolerance);
        r.pass = r.slack.abs() <= tolerance;
        r
    }
}

/// Per-vertex `|H⃗|²`, `K`-route `|A|²` and quadric-fit `|A|²`, with
/// boundary vertices (incomplete stencils) taking the area-weighted mean of
/// their interior neighbours.
struct VertexIntegrands {
    field: CurvatureField,
    h2: Vec<f64>,
    a2_gauss: Vec<f64>,
    a2_fit: Vec<f64>,
}

fn extrapolate_to_boundary(m: &TriMesh, field: &CurvatureField, values: &mut [f64]) {
    let topo = m.topology();
    for i in 0..values.len() {
        if field.boundary[i] {
            let (mut num, mut den) = (0.0, 0.0);
            for &j in &topo.vertex_neighbors[i] {
                if !field.boundary[j] {
                    num += values[j] * field.mixed_area[j];
                    den += field.mixed_area[j];
                }
            }
            values[i] = if den > 0.0 { num / den } else { 0.0 };
        }
    }
}

fn vertex_integrands(m: &TriMesh) -> Result<VertexIntegrands> {
    let field = mesh_curvature(m)?;
    let mut h2 = field.sq_norm_h();
    extrapolate_to_boundary(m, &field, &mut h2);
    let a2_gauss: Vec<f64> = h2.iter().zip(&field.gauss).map(|(h, k)| (h - 2.0 * k).max(0.0)).collect();
    let mut a2_fit: Vec<f64> = quadric_fit_a(m).iter().zip(&a2_gauss).map(|(f, g)| f.unwrap_or(*g)).collect();
    extrapolate_to_boundary(m, &field, &mut a2_fit);
    Ok(VertexIntegrands { field, h2, a2_gauss, a2_fit })
}

/// Relative tolerance scale of a Gauss–Bonnet identity.
fn identity_scale(int_a2: f64) -> f64 {
    int_a2.max(4.0 * PI)
}

/// `∫|A⃗|² = ∫|H⃗|² − 4πχ` on a closed mesh.
///
/// The left side uses the quadric-fit `|A|²`, which is independent of the
/// angle defect; with the Gauss-equation `|A|²` the identity holds up to the
/// clamp by construction, and that residual is reported as a term.
pub fn closed_gb_identity(m: &TriMesh, tolerance: f64) -> Result<EstimateReport> {
    if !m.is_closed() {
        return Err(Error::input("mesh has boundary; use the boundary Gauss–Bonnet identity"));
    }
    let v = vertex_integrands(m)?;
    let area = &v.field.mixed_area;
    let int = |f: &[f64]| f.iter().zip(area).map(|(x, a)| x * a).sum::<f64>();
    let (int_a2, int_h2, int_a2_gauss) = (int(&v.a2_fit), int(&v.h2), int(&v.a2_gauss));
    let chi = euler_genus(m)?.chi as f64;
    let rhs = int_h2 - 4.0 * PI * chi;
    let scale = identity_scale(int_a2);
    Ok(EstimateReport::identity(
        "closed Gauss-Bonnet identity",
        [
            ("integral_A2", int_a2),
            ("integral_A2_gauss_route", int_a2_gauss),
            ("integral_H2", int_h2),
            ("four_pi_chi", 4.0 * PI * chi),
            ("chi", chi),
            ("relative_residual", (int_a2 - rhs).abs() / scale),
            ("gauss_route_residual", (int_a2_gauss - rhs).abs() / scale),
        ],
        int_a2,
        rhs,
        tolerance * scale,
    ))
}

/// `∫|A⃗|² = ∫|H⃗|² − 4πχ + 2∫_{∂M} k̃·n` on a mesh with boundary.
pub fn boundary_gb(m: &TriMesh, tolerance: f64) -> Result<EstimateReport> {
    if m.is_closed() {
        return Err(Error::input("mesh is closed; use the closed Gauss–Bonnet identity"));
    }
    let v = vertex_integrands(m)?;
    let area = &v.field.mixed_area;
    let int = |f: &[f64]| f.iter().zip(area).map(|(x, a)| x * a).sum::<f64>();
    let (int_a2, int_h2, int_a2_gauss) = (int(&v.a2_fit), int(&v.h2), int(&v.a2_gauss));
    let chi = euler_genus(m)?.chi as f64;
    let boundary = 2.0 * geodesic_boundary_integral(m, &v.field);
    let rhs = int_h2 - 4.0 * PI * chi + boundary;
    let scale = identity_scale(int_a2);
    Ok(EstimateReport::identity(
        "Gauss-Bonnet identity with boundary",
        [
            ("integral_A2", int_a2),
            ("integral_A2_gauss_route", int_a2_gauss),
            ("integral_H2", int_h2),
            ("four_pi_chi", 4.0 * PI * chi),
            ("chi", chi),
            ("boundary_term", boundary),
            ("relative_residual", (int_a2 - rhs).abs() / scale),
            ("gauss_route_residual", (int_a2_gauss - rhs).abs() / scale),
        ],
        int_a2,
        rhs,
        tolerance * scale,
    ))
}

/// Balls and tolerance of the local Gauss–Bonnet estimate: inner ball
/// `B_ρ(c)`, outer ball `B_R(c)` and the cutoff `φ = (R − |x − c|)²/(R − ρ)²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalGbParams {
    pub center: Vec<f64>,
    pub inner: f64,
    pub outer: f64,
    pub eps: f64,
    /// Number of radii sampled in `[ρ, R]` for the area-ratio supremum.
    pub grid: usize,
    /// Allowed negative slack as a fraction of the right side.
    pub tolerance: f64,
}

impl LocalGbParams {
    /// Unit inner ball at the origin of `R^n`.
    pub fn unit(n: usize, outer: f64, eps: f64) -> Self {
        LocalGbParams { center: vec![0.0; n], inner: 1.0, outer, eps, grid: 32, tolerance: 0.02 }
    }
}

/// `|Dφ|²/φ` of the cutoff at `x` by central differences, against
/// `4/(R − ρ)²`; returns the largest relative deviation over `points` in
/// the annulus.
pub fn cutoff_identity_deviation(center: &AmbientVector, inner: f64, outer: f64, points: &[AmbientVector]) -> f64 {
    let phi = |x: &AmbientVector| (outer - (x - center).norm()).powi(2) / (outer - inner).powi(2);
    let expect = 4.0 / (outer - inner).powi(2);
    let h = 1e-6 * outer;
    let mut worst: f64 = 0.0;
    for x in points {
        let d = (x - center).norm();
        if d <= inner || d >= outer * (1.0 - 1e-3) {
            continue;
        }
        let mut grad_sq = 0.0;
        for i in 0..x.len() {
            let (mut a, mut b) = (x.clone(), x.clone());
            a[i] += h;
            b[i] -= h;
            grad_sq += ((phi(&a) - phi(&b)) / (2.0 * h)).powi(2);
        }
        worst = worst.max((grad_sq / phi(x) / expect - 1.0).abs());
    }
    worst
}

/// The local Gauss–Bonnet estimate
/// `(1−ε)∫_{M∩B_ρ}|A⃗|² ≤ ∫_{M∩B_R}|H⃗|² + 8πg − 8πc′ + 24πD′R²/(ε(R−ρ)²)`
/// with `g` the capped genus of `M ∩ B_R`, `c′` its components meeting
/// `B_ρ` and `D′ = sup_S H²(M∩B_S)/πS²` over `S ∈ [ρ, R]`.
pub fn local_gb_estimate_with(m: &TriMesh, p: &LocalGbParams) -> Result<EstimateReport> {
    let (rho, big_r, eps) = (p.inner, p.outer, p.eps);
    if !(rho > 0.0) || !(big_r > rho) {
        return Err(Error::input(format!("need 0 < ρ < R, got ρ = {rho}, R = {big_r}")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::input(format!("ε must lie in (0, 1), got {eps}")));
    }
    if p.grid < 2 {
        return Err(Error::input("area-ratio grid needs at least two radii"));
    }
    if p.center.len() != m.dim() {
        return Err(Error::input("ball centre dimension does not match the mesh"));
    }
    let center = AmbientVector::from_column_slice(&p.center);
    let field = mesh_curvature(m)?;
    if let Some(i) = (0..m.vertex_count()).find(|&i| field.boundary[i] && (&m.vertices()[i] - &center).norm() < big_r) {
        return Err(Error::input(format!("mesh boundary vertex {i} lies inside B_R; the surface must meet the ball properly")));
    }
    let outer = ball_restrict(m, &center, big_r)?;
    let inner = ball_restrict(m, &center, rho)?;
    let h2 = field.sq_norm_h();
    let int_h2 = outer.integrate(&h2);
    let int_a2 = inner.integrate(&field.sq_norm_a);
    let topo = outer.euler()?;
    let genus = topo.genus as f64;
    let c_prime = outer.components_meeting(rho) as f64;

    let mut d_prime: f64 = 0.0;
    let mut min_components = usize::MAX;
    for j in 0..p.grid {
        let s = rho + (big_r - rho) * j as f64 / (p.grid - 1) as f64;
        let b = ball_restrict(m, &center, s)?;
        d_prime = d_prime.max(b.area() / (PI * s * s));
        min_components = min_components.min(b.component_count());
    }
    let area_term = 24.0 * PI * d_prime * big_r * big_r / (eps * (big_r - rho).powi(2));
    let lhs = (1.0 - eps) * int_a2;
    let rhs = int_h2 + 8.0 * PI * genus - 8.0 * PI * c_prime + area_term;
    let cutoff = cutoff_identity_deviation(&center, rho, big_r, m.vertices());
    Ok(EstimateReport::new(
        "local Gauss-Bonnet estimate",
        [
            ("integral_A2_inner", int_a2),
            ("integral_H2_outer", int_h2),
            ("g", genus),
            ("c_prime", c_prime),
            ("D_prime", d_prime),
            ("area_ratio_term", area_term),
            ("R", big_r),
            ("rho", rho),
            ("eps", eps),
            ("components_min_on_grid", min_components as f64),
            ("cutoff_identity_deviation", cutoff),
        ],
        lhs,
        rhs,
        p.tolerance * rhs.abs(),
    ))
}

/// The local Gauss–Bonnet estimate about the unit ball at the origin.
pub fn local_gb_estimate(m: &TriMesh, big_r: f64, eps: f64) -> Result<EstimateReport> {
    local_gb_estimate_with(m, &LocalGbParams::unit(m.dim(), big_r, eps))
}

/// `∫_0^T ∫_{M_t}|A⃗|² ≤ H²(M₀) − 4πTχ(M₀)` for a closed surface flow.
pub fn global_spacetime_budget(tr: &Trajectory) -> Result<EstimateReport> {
    let m0 = tr
        .first()
        .geometry
        .as_mesh()
        .ok_or_else(|| Error::input("space-time budget needs a surface trajectory"))?;
    if tr.snapshots().iter().any(|s| !s.geometry.is_closed() || s.geometry.as_mesh().is_none()) {
        return Err(Error::input("space-time budget needs closed surfaces"));
    }
    if tr.len() < 2 {
        return Err(Error::input("space-time budget needs at least two snapshots"));
    }
    let (a, b) = tr.span();
    let lhs = tr.time_integral(a, b, |g, _| {
        let m = g.as_mesh().expect("checked above");
        let f = mesh_curvature(m)?;
        Ok(f.integrate(&f.sq_norm_a))
    })?;
    let chi = euler_genus(m0)?.chi as f64;
    let area0 = m0.area();
    let span = b - a;
    let rhs = area0 - 4.0 * PI * span * chi;
    Ok(EstimateReport::new(
        "global space-time curvature budget",
        [("area_initial", area0), ("chi", chi), ("T", span), ("space_time_A2", lhs)],
        lhs,
        rhs,
        0.0,
    ))
}

/// `P_r(x, t) = B_r(x) × (t − r², t]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParabolicCylinder {
    pub center: Vec<f64>,
    pub t: f64,
    pub r: f64,
}

impl ParabolicCylinder {
    pub fn new(center: &AmbientVector, t: f64, r: f64) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() || !t.is_finite() {
            return Err(Error::input(format!("parabolic cylinder needs finite t and r > 0, got t = {t}, r = {r}")));
        }
        Ok(ParabolicCylinder { center: center.iter().copied().collect(), t, r })
    }

    pub fn center(&self) -> AmbientVector {
        AmbientVector::from_column_slice(&self.center)
    }

    /// `r^{−k} ∫_{t−r²}^t ∫_{M_s ∩ B_r(x)} |A⃗|²`.
    pub fn scaled_a2(&self, tr: &Trajectory) -> Result<f64> {
        let x = self.center();
        let k = tr.first().geometry.intrinsic_dim() as i32;
        let v = tr.time_integral(self.t - self.r * self.r, self.t, |g, _| g.ball_integral(&x, self.r, |s| s.sq_norm_a))?;
        Ok(v / self.r.powi(k))
    }
}

/// `r^{−k} ∫∫_{P_r(x,t)} f` for many cylinders, computing the curvature of
/// each snapshot once.
pub fn scaled_integrals(tr: &Trajectory, cyls: &[ParabolicCylinder], f: impl Fn(&FieldSample) -> f64 + Copy) -> Result<Vec<f64>> {
    let k = tr.first().geometry.intrinsic_dim() as i32;
    let mut nodes: Vec<Vec<(f64, f64)>> = Vec::with_capacity(cyls.len());
    for c in cyls {
        let (a, b) = (c.t - c.r * c.r, c.t);
        if !(b > a) || !tr.contains_time(a) || !tr.contains_time(b) {
            let (lo, hi) = tr.span();
            return Err(Error::input(format!("window [{a}, {b}] outside trajectory span [{lo}, {hi}]")));
        }
        let ga = tr.at(a)?;
        nodes.push(vec![(a, ga.ball_integral(&c.center(), c.r, f)?)]);
    }
    for s in tr.snapshots() {
        let inside: Vec<usize> = (0..cyls.len()).filter(|&i| s.t > cyls[i].t - cyls[i].r * cyls[i].r && s.t < cyls[i].t).collect();
        if inside.is_empty() {
            continue;
        }
        let samples = s.geometry.samples()?;
        for i in inside {
            let v = s.geometry.ball_integral_with(&samples, &cyls[i].center(), cyls[i].r, f)?;
            nodes[i].push((s.t, v));
        }
    }
    cyls.iter()
        .zip(nodes.iter_mut())
        .map(|(c, n)| {
            let gb = tr.at(c.t)?;
            n.push((c.t, gb.ball_integral(&c.center(), c.r, f)?));
            let v: f64 = n.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum();
            Ok(v / c.r.powi(k))
        })
        .collect()
}

/// [`ParabolicCylinder::scaled_a2`] for many cylinders.
pub fn scaled_a2_batch(tr: &Trajectory, cyls: &[ParabolicCylinder]) -> Result<Vec<f64>> {
    scaled_integrals(tr, cyls, |s| s.sq_norm_a)
}

/// `(1−ε) r^{−2} ∫∫_{P_r(x,t)} |A⃗|² ≤ 8πg₀ + C·D/ε` for surface flows,
/// with `C` the corpus-fitted constant.
pub fn integral_curvature_estimate(tr: &Trajectory, cyl: &ParabolicCylinder, eps: f64, g0: u32, d: f64) -> Result<EstimateReport> {
    if tr.first().geometry.intrinsic_dim() != 2 {
        return Err(Error::input("the integral curvature estimate is stated for surfaces"));
    }
    if !(eps > 0.0 && eps < 1.0) || !(d > 0.0) {
        return Err(Error::input("need ε in (0, 1) and D > 0"));
    }
    if cyl.center.len() != tr.first().geometry.dim() {
        return Err(Error::input("cylinder centre dimension does not match the flow"));
    }
    integral_curvature_bound(cyl.scaled_a2(tr)?, cyl.r, eps, g0, d)
}

/// The integral curvature estimate for a precomputed `r^{−2}∬|A⃗|²`.
pub fn integral_curvature_bound(scaled: f64, r: f64, eps: f64, g0: u32, d: f64) -> Result<EstimateReport> {
    if !(eps > 0.0 && eps < 1.0) || !(d > 0.0) {
        return Err(Error::input("need ε in (0, 1) and D > 0"));
    }
    let c = constants::INTEGRAL_CURVATURE;
    let lhs = (1.0 - eps) * scaled;
    let rhs = 8.0 * PI * g0 as f64 + c * d / eps;
    Ok(EstimateReport::new(
        "integral curvature estimate",
        [("scaled_A2", scaled), ("g0", g0 as f64), ("D", d), ("eps", eps), ("C_fit", c), ("r", r)],
        lhs,
        rhs,
        0.0,
    ))
}

/// Result of scanning a flow in the unit parabolic cylinder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    /// `max r^{−k} ∬_{P_r(x,t)} |A⃗|²` over admissible grid cylinders.
    pub sup_quantity: f64,
    pub sup_cylinder: Option<ParabolicCylinder>,
    /// `sup |A⃗(x,t)| min(1 − |x|, t^{1/2})` over snapshots in `B̄₁ × [0, 1]`.
    pub lambda: f64,
    /// `|A⃗|` at the sample nearest the origin on the last snapshot.
    pub final_a_at_origin: f64,
    /// `max |A⃗|` over the last snapshot inside `B₁`.
    pub final_max_a: f64,
    /// Grid cylinders skipped for leaving `B₁ × [0, t_last]`.
    pub skipped: usize,
}

/// Grid of cylinders: centres on a lattice of spacing `step` in the span of
/// `axes`, radii and end times as given.
pub fn scan_grid(axes: &[AmbientVector], step: f64, radii: &[f64], times: &[f64]) -> Result<Vec<ParabolicCylinder>> {
    if !(step > 0.0) || axes.is_empty() {
        return Err(Error::input("scan grid needs axes and a positive step"));
    }
    let n = axes[0].len();
    let m = (1.0 / step).floor() as i64;
    let mut centers = vec![AmbientVector::zeros(n)];
    for ax in axes {
        centers = centers
            .iter()
            .flat_map(|c| (-m..=m).map(move |i| c + ax * (i as f64 * step)))
            .filter(|c| c.norm() < 1.0)
            .collect();
    }
    let mut out = Vec::new();
    for c in &centers {
        for &r in radii {
            for &t in times {
                out.push(ParabolicCylinder::new(c, t, r)?);
            }
        }
    }
    Ok(out)
}

/// Scans a flow normalised to `B₁ × [0, 1]` over a cylinder grid.
pub fn small_eps_scan(tr: &Trajectory, grid: &[ParabolicCylinder]) -> Result<ScanReport> {
    let (t0, t1) = tr.span();
    if t0 > 1e-12 {
        return Err(Error::input(format!("scan expects a flow starting at t = 0, got {t0}")));
    }
    let admissible: Vec<ParabolicCylinder> = grid
        .iter()
        .filter(|c| c.center().norm() + c.r <= 1.0 + 1e-12 && c.t - c.r * c.r >= -1e-12 && c.t <= t1.min(1.0) + 1e-12)
        .cloned()
        .collect();
    let skipped = grid.len() - admissible.len();
    let mut sup_quantity: f64 = 0.0;
    let mut sup_cylinder = None;
    for (cyl, q) in admissible.iter().zip(scaled_a2_batch(tr, &admissible)?) {
        if q > sup_quantity || sup_cylinder.is_none() {
            sup_quantity = sup_quantity.max(q);
            sup_cylinder = Some(cyl.clone());
        }
    }
    let mut lambda: f64 = 0.0;
    for s in tr.snapshots().iter().filter(|s| s.t <= 1.0 + 1e-12) {
        for f in s.geometry.samples()?.iter().filter(|f| f.interior) {
            let r = f.x.norm();
            if r <= 1.0 {
                lambda = lambda.max(f.sq_norm_a.sqrt() * (1.0 - r).min(s.t.max(0.0).sqrt()));
            }
        }
    }
    let last = tr.last().geometry.samples()?;
    let final_a_at_origin = last
        .iter()
        .filter(|f| f.interior)
        .min_by(|a, b| a.x.norm().total_cmp(&b.x.norm()))
        .map_or(0.0, |f| f.sq_norm_a.sqrt());
    let final_max_a = last.iter().filter(|f| f.interior && f.x.norm() < 1.0).map(|f| f.sq_norm_a.sqrt()).fold(0.0, f64::max);
    Ok(ScanReport { sup_quantity, sup_cylinder, lambda, final_a_at_origin, final_max_a, skipped })
}
