//! One function per subcommand; each returns whether the run passed.

use anyhow::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use mcflab::blowup::{blowup_sequence, default_ladder, improved_h_budget, parabolic_rescale, shrinker_residual, RescaleParams};
use mcflab::budget::{
    boundary_gb, closed_gb_identity, global_spacetime_budget, integral_curvature_estimate, local_gb_estimate_with,
    scan_grid, small_eps_scan, EstimateReport, LocalGbParams, ParabolicCylinder,
};
use mcflab::flow::{detect_singularity, SingularityEstimate, Trajectory};
use mcflab::geom::{lemma5_identity, AmbientVector, IntersectionFrame};
use mcflab::io::{self, fmt_f64, GeometryFormat};
use mcflab::monotonicity::{area_ratio, dissipation, huisken_density, mc_estimate_check, monotonicity_audit, DensityOptions, HeatKernel};
use mcflab::zoo::{make_shrinker, shoot_abresch_langer, ShrinkerSpec};
use mcflab::Error;

use crate::context::{trajectory_keys, Context, GEOMETRY_KEYS};
use crate::{Command, Common};

fn input_error(msg: impl Into<String>) -> anyhow::Error {
    Error::Input(msg.into()).into()
}

fn with(mut base: Vec<&'static str>, extra: &[&'static str]) -> Vec<&'static str> {
    base.extend_from_slice(extra);
    base
}

pub fn run(command: Command, common: &Common) -> Result<bool> {
    match command {
        Command::Flow => flow(common),
        Command::Shrinker => shrinker(common),
        Command::Monotonicity => monotonicity(common),
        Command::Rescale => rescale(common),
        Command::GbCheck => gb_check(common),
        Command::Estimate => estimate(common),
        Command::Scan => scan(common),
        Command::Lemma5Test => lemma5_test(common),
    }
}

/// The singular point, or `None` when the flow shows no blowup.
fn singularity(tr: &Trajectory) -> Result<Option<SingularityEstimate>> {
    match detect_singularity(tr) {
        Ok(est) => Ok(Some(est)),
        Err(Error::NoSingularity(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// Kernel from `kernel_center`/`kernel_time`, else at the detected singular point.
fn kernel(ctx: &Context, tr: &Trajectory) -> Result<HeatKernel> {
    let k = ctx.usize_or("k", tr.first().geometry.intrinsic_dim())?;
    let (center, s) = match (ctx.vector("kernel_center")?, ctx.cfg.get::<f64>("kernel_time")?) {
        (Some(c), Some(s)) => (c, s),
        (None, None) => match singularity(tr)? {
            Some(est) => (est.y(), est.t_hat),
            None => return Err(input_error("no kernel_center/kernel_time given and no singularity detected")),
        },
        _ => return Err(input_error("kernel_center and kernel_time go together")),
    };
    Ok(HeatKernel::new(center, s, k)?)
}

fn flow(common: &Common) -> Result<bool> {
    let known = with(with(GEOMETRY_KEYS.to_vec(), crate::context::FLOW_KEYS), &["kernel_center", "kernel_time", "k"]);
    let mut ctx = Context::new(Command::Flow, common, &known)?;
    let g0 = ctx.geometry()?;
    if ctx.format == GeometryFormat::Obj && g0.as_mesh().is_none() {
        return Err(input_error(format!("a {} cannot be written as OBJ", g0.kind())));
    }
    let horizon: f64 = ctx.cfg.require("horizon")?;
    let tr = mcflab::flow::run_flow(&g0, horizon, &ctx.flow_options()?)?;
    ctx.write("trajectory.jsonl", io::write_trajectory_jsonl(&tr)?)?;
    ctx.write_geometry("final", &tr.last().geometry)?;

    let est = singularity(&tr)?;
    match &est {
        Some(e) => ctx.write_json("singularity.json", &json!({ "detected": true, "estimate": e }))?,
        None => ctx.write_json("singularity.json", &json!({ "detected": false }))?,
    }
    let kern = if ctx.cfg.contains("kernel_center") || est.is_some() { Some(kernel(&ctx, &tr)?) } else { None };
    let opts = DensityOptions::default();
    let mut csv = String::from("t,measure,max_abs_a,min_spacing,density,dissipation\n");
    for s in tr.snapshots() {
        let g = &s.geometry;
        let (density, diss) = match &kern {
            Some(k) if s.t < k.s => (
                fmt_f64(huisken_density(g, s.t, k, &opts)?.value),
                fmt_f64(dissipation(g, s.t, k, &opts)?),
            ),
            _ => (String::new(), String::new()),
        };
        csv.push_str(&format!(
            "{},{},{},{},{density},{diss}\n",
            fmt_f64(s.t),
            fmt_f64(g.measure()),
            fmt_f64(g.max_abs_a()?),
            fmt_f64(g.min_spacing())
        ));
    }
    ctx.write("summary.csv", csv)?;

    let last = &tr.last().geometry;
    let pts = last.points();
    let centroid = pts.iter().fold(AmbientVector::zeros(last.dim()), |a, p| a + p) / pts.len() as f64;
    let mean_radius = pts.iter().map(|p| (p - &centroid).norm()).sum::<f64>() / pts.len() as f64;
    let summary = json!({
        "steps": tr.metadata.steps,
        "snapshots": tr.len(),
        "final_time": tr.last().t,
        "halted_at": tr.metadata.halted_at,
        "partial": tr.metadata.halted_at.is_some(),
        "remesh_events": tr.metadata.remesh_events.len(),
        "final_measure": last.measure(),
        "final_mean_radius": mean_radius,
        "singularity": est,
    });
    ctx.finish(true, summary)
}

fn shrinker_spec(ctx: &Context) -> Result<ShrinkerSpec> {
    let family = ctx.cfg.require_str("family")?;
    Ok(match family {
        "circle" => ShrinkerSpec::Circle { vertices: ctx.usize_or("vertices", 256)?, dim: ctx.usize_or("dim", 2)? },
        "sphere" => ShrinkerSpec::Sphere { level: ctx.usize_or("level", 3)? },
        "cylinder" => ShrinkerSpec::Cylinder {
            around: ctx.usize_or("around", 32)?,
            along: ctx.usize_or("along", 32)?,
            half_length: ctx.f64_or("half_length", 6.0)?,
        },
        "abresch-langer" => ShrinkerSpec::AbreschLanger {
            p: ctx.cfg.require("p")?,
            q: ctx.cfg.require("q")?,
            vertices: ctx.usize_or("vertices", 1024)?,
        },
        "plane" => ShrinkerSpec::Plane { half_width: ctx.f64_or("half_width", 3.0)?, cells: ctx.usize_or("cells", 32)? },
        other => return Err(input_error(format!("unknown shrinker family '{other}'"))),
    })
}

fn shrinker(common: &Common) -> Result<bool> {
    let known = ["family", "vertices", "dim", "level", "around", "along", "half_length", "p", "q", "half_width", "cells", "tolerance"];
    let mut ctx = Context::new(Command::Shrinker, common, &known)?;
    let spec = shrinker_spec(&ctx)?;
    let tolerance = ctx.f64_or("tolerance", 2e-2)?;
    let g = make_shrinker(&spec)?;
    if ctx.format == GeometryFormat::Obj && g.as_mesh().is_none() {
        return Err(input_error(format!("a {} cannot be written as OBJ", g.kind())));
    }
    let res = shrinker_residual(&g)?;
    let closure_gap = match spec {
        ShrinkerSpec::AbreschLanger { p, q, vertices } => Some(shoot_abresch_langer(p, q, vertices)?.closure_gap),
        _ => None,
    };
    let pass = res.l2 <= tolerance;
    let report = json!({ "spec": spec, "residual": res, "closure_gap": closure_gap, "tolerance": tolerance, "pass": pass });
    ctx.write_geometry("shrinker", &g)?;
    ctx.write_json("residual.json", &report)?;
    ctx.finish(pass, report)
}

fn monotonicity(common: &Common) -> Result<bool> {
    let known = with(trajectory_keys(), &["kernel_center", "kernel_time", "k", "truncation", "boundary_margin"]);
    let mut ctx = Context::new(Command::Monotonicity, common, &known)?;
    let tr = ctx.trajectory()?;
    let kern = kernel(&ctx, &tr)?;
    let d = DensityOptions::default();
    let opts = DensityOptions {
        truncation: ctx.f64_or("truncation", d.truncation)?,
        boundary_margin: ctx.f64_or("boundary_margin", d.boundary_margin)?,
    };
    let rep = monotonicity_audit(&tr, &kern, &opts)?;
    ctx.write("density.csv", rep.to_csv())?;
    let summary = json!({
        "kernel_center": kern.center.as_slice(),
        "kernel_time": kern.s,
        "k": kern.k,
        "pass": rep.pass(),
        "first_violation": rep.first_violation(),
        "relative_spread": rep.relative_spread(),
    });
    ctx.write_json("density.json", &summary)?;
    ctx.finish(rep.pass(), summary)
}

fn rescale(common: &Common) -> Result<bool> {
    let known = with(trajectory_keys(), &["center", "t_sing", "lambdas", "tolerance", "write_trajectories"]);
    let mut ctx = Context::new(Command::Rescale, common, &known)?;
    let tr = ctx.trajectory()?;
    let (y, t_sing) = match (ctx.vector("center")?, ctx.cfg.get::<f64>("t_sing")?) {
        (Some(y), Some(t)) => (y, t),
        (None, None) => match singularity(&tr)? {
            Some(est) => (est.y(), est.t_hat),
            None => return Err(input_error("no center/t_sing given and no singularity detected")),
        },
        _ => return Err(input_error("center and t_sing go together")),
    };
    let lambdas = ctx.cfg.list::<f64>("lambdas")?.unwrap_or_else(|| default_ladder(4));
    let tolerance = ctx.f64_or("tolerance", 1e-2)?;
    let rep = blowup_sequence(&tr, &y, t_sing, &lambdas, tolerance)?;
    if ctx.cfg.get_or("write_trajectories", true)? {
        for (i, rung) in rep.rungs.iter().enumerate() {
            let scaled = parabolic_rescale(&tr, &RescaleParams::new(&y, t_sing, rung.lambda)?)?;
            ctx.write(&format!("rescaled_{i}.jsonl"), io::write_trajectory_jsonl(&scaled)?)?;
        }
    }
    ctx.write_json("blowup.json", &rep.to_json_rows())?;
    let pass = !rep.rungs.is_empty() && rep.rungs.iter().all(|r| r.residual.l2 <= tolerance);
    let summary = json!({
        "center": y.as_slice(),
        "t_sing": t_sing,
        "rungs": rep.rungs.len(),
        "exhausted": rep.exhausted,
        "residuals_nonincreasing": rep.residuals_nonincreasing,
        "huisken_spread": rep.huisken_spread,
        "tolerance": tolerance,
    });
    ctx.finish(pass, summary)
}

fn write_reports(ctx: &mut Context, stem: &str, reports: &[EstimateReport]) -> Result<bool> {
    ctx.write(&format!("{stem}.csv"), io::reports_csv(reports))?;
    ctx.write_json(&format!("{stem}.json"), &reports)?;
    Ok(reports.iter().all(|r| r.pass))
}

fn gb_check(common: &Common) -> Result<bool> {
    let known = with(GEOMETRY_KEYS.to_vec(), &["tolerance", "center", "inner", "outer", "eps", "grid", "local_tolerance"]);
    let mut ctx = Context::new(Command::GbCheck, common, &known)?;
    let g = ctx.geometry()?;
    let m = g.as_mesh().ok_or_else(|| input_error(format!("Gauss-Bonnet checks need a mesh, got a {}", g.kind())))?;
    let tolerance = ctx.f64_or("tolerance", 0.03)?;
    let mut reports = vec![if m.is_closed() { closed_gb_identity(m, tolerance)? } else { boundary_gb(m, tolerance)? }];
    if ctx.cfg.contains("outer") {
        let d = LocalGbParams::unit(m.dim(), ctx.cfg.require("outer")?, ctx.f64_or("eps", 0.5)?);
        let p = LocalGbParams {
            center: ctx.cfg.list("center")?.unwrap_or(d.center.clone()),
            inner: ctx.f64_or("inner", d.inner)?,
            grid: ctx.usize_or("grid", d.grid)?,
            tolerance: ctx.f64_or("local_tolerance", d.tolerance)?,
            ..d
        };
        reports.push(local_gb_estimate_with(m, &p)?);
    }
    let pass = write_reports(&mut ctx, "gb", &reports)?;
    let summary = json!(reports.iter().map(|r| json!({ "name": r.name, "verdict": r.verdict(), "slack": r.slack })).collect::<Vec<_>>());
    ctx.finish(pass, summary)
}

/// `sup` area ratio over snapshots, centred at sample points and `extra`.
fn area_bound(tr: &Trajectory, radii: &[f64], extra: &AmbientVector) -> Result<f64> {
    let step = (tr.len() / 6).max(1);
    let mut d: f64 = 0.0;
    for s in tr.snapshots().iter().step_by(step) {
        let pts = s.geometry.points();
        let mut centers: Vec<AmbientVector> = pts.iter().step_by((pts.len() / 40).max(1)).cloned().collect();
        centers.push(extra.clone());
        d = d.max(area_ratio(&s.geometry, &centers, radii)?);
    }
    Ok(d)
}

fn estimate(common: &Common) -> Result<bool> {
    let known = with(trajectory_keys(), &["kind", "center", "t", "r", "eps", "g0", "d", "big_r", "tau", "lambda", "y", "t_sing"]);
    let mut ctx = Context::new(Command::Estimate, common, &known)?;
    let kind = ctx.cfg.require_str("kind")?.to_string();
    let tr = ctx.trajectory()?;
    let n = tr.first().geometry.dim();
    let center = ctx.vector("center")?.unwrap_or_else(|| AmbientVector::zeros(n));
    let d_for = |ctx: &Context, r: f64| -> Result<f64> {
        match ctx.cfg.get::<f64>("d")? {
            Some(d) => Ok(d),
            None => area_bound(&tr, &[0.25 * r, 0.5 * r, r, 2.0 * r], &center),
        }
    };
    let report = match kind.as_str() {
        "global-budget" => global_spacetime_budget(&tr)?,
        "integral-curvature" => {
            let r: f64 = ctx.cfg.require("r")?;
            let cyl = ParabolicCylinder::new(&center, ctx.cfg.require("t")?, r)?;
            integral_curvature_estimate(&tr, &cyl, ctx.f64_or("eps", 0.5)?, ctx.cfg.get_or("g0", 0u32)?, d_for(&ctx, r)?)?
        }
        "mean-curvature" => {
            let r: f64 = ctx.cfg.require("r")?;
            mc_estimate_check(&tr, &center, ctx.cfg.require("t")?, r, d_for(&ctx, r)?)?
        }
        "improved-h" => {
            let y = ctx.vector("y")?.unwrap_or_else(|| AmbientVector::zeros(n));
            let p = RescaleParams::new(&y, ctx.cfg.require("t_sing")?, ctx.cfg.require("lambda")?)?;
            let rescaled = parabolic_rescale(&tr, &p)?;
            let r: f64 = ctx.cfg.require("r")?;
            let d = match ctx.cfg.get::<f64>("d")? {
                Some(d) => d,
                None => area_bound(&rescaled, &[0.5 * r, r, 2.0 * r], &center)?,
            };
            improved_h_budget(&rescaled, &center, r, ctx.cfg.require("big_r")?, ctx.f64_or("tau", 0.5)?, d)?
        }
        other => return Err(input_error(format!("unknown estimate kind '{other}'"))),
    };
    let reports = [report];
    let pass = write_reports(&mut ctx, "estimate", &reports)?;
    let [report] = reports;
    ctx.finish(pass, json!({ "name": report.name, "lhs": report.lhs, "rhs": report.rhs, "verdict": report.verdict() }))
}

fn scan(common: &Common) -> Result<bool> {
    let known = with(trajectory_keys(), &["step", "radii", "times"]);
    let mut ctx = Context::new(Command::Scan, common, &known)?;
    let tr = ctx.trajectory()?;
    let n = tr.first().geometry.dim();
    if n < 3 {
        return Err(input_error("the scan needs a surface in R^n, n >= 3"));
    }
    let axes: Vec<AmbientVector> = (0..2)
        .map(|i| {
            let mut e = AmbientVector::zeros(n);
            e[i] = 1.0;
            e
        })
        .collect();
    let radii = ctx.cfg.list("radii")?.unwrap_or_else(|| vec![0.25, 0.5]);
    let times = ctx.cfg.list("times")?.unwrap_or_else(|| vec![0.25, 0.5, 1.0]);
    let grid = scan_grid(&axes, ctx.f64_or("step", 0.25)?, &radii, &times)?;
    let rep = small_eps_scan(&tr, &grid)?;
    ctx.write_json("scan.json", &rep)?;
    let summary = json!({ "sup_quantity": rep.sup_quantity, "eps": rep.sup_quantity.sqrt(), "lambda": rep.lambda });
    ctx.finish(rep.lambda.is_finite(), summary)
}

fn lemma5_test(common: &Common) -> Result<bool> {
    let known = ["count", "dims", "tolerance"];
    let mut ctx = Context::new(Command::Lemma5Test, common, &known)?;
    let count = ctx.usize_or("count", 1000)?;
    let dims: Vec<usize> = ctx.cfg.list("dims")?.unwrap_or_else(|| vec![3, 4, 5, 6]);
    if dims.is_empty() || dims.iter().any(|&n| n < 3) {
        return Err(input_error("dims must be a nonempty list of dimensions >= 3"));
    }
    let tolerance = ctx.f64_or("tolerance", 1e-10)?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let mut csv = String::from("n,sin2_alpha,lhs,rhs,completed_plane\n");
    let mut worst: f64 = 0.0;
    for i in 0..count {
        let n = dims[rng.gen_range(0..dims.len())];
        let frame = random_frame(&mut rng, n, i % 10 == 0)?;
        let sides = lemma5_identity(&frame)?;
        worst = worst.max((sides.lhs - sides.rhs).abs() / sides.lhs.abs().max(1.0));
        csv.push_str(&format!(
            "{n},{},{},{},{}\n",
            fmt_f64(sides.sin2_alpha),
            fmt_f64(sides.lhs),
            fmt_f64(sides.rhs),
            sides.completed_plane
        ));
    }
    ctx.write("lemma5.csv", csv)?;
    let pass = worst <= tolerance;
    ctx.finish(pass, json!({ "count": count, "max_mismatch": worst, "tolerance": tolerance }))
}

/// A consistent frame: orthonormal `τ`, `e₁`, a conormal `n ⟂ τ` in the
/// plane of `e₁` and a third direction, and a curvature vector `k ⟂ τ`.
fn random_frame(rng: &mut ChaCha8Rng, n: usize, parallel: bool) -> Result<IntersectionFrame> {
    let mut basis: Vec<AmbientVector> = Vec::new();
    while basis.len() < 3 {
        let mut v = AmbientVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        for e in &basis {
            v -= e * e.dot(&v);
        }
        if v.norm() > 1e-3 {
            basis.push(v.normalize());
        }
    }
    let tilt: f64 = if parallel { 0.0 } else { rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI) };
    let n_vec = &basis[1] * tilt.cos() + &basis[2] * tilt.sin();
    let k = AmbientVector::from_fn(n, |_, _| rng.gen_range(-2.0..2.0));
    let k = &k - &basis[0] * basis[0].dot(&k);
    Ok(IntersectionFrame::from_curvature(basis[0].clone(), n_vec, basis[1].clone(), k)?)
}
