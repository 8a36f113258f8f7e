use serde::{Deserialize, Serialize};

use super::trajectory::Trajectory;
use crate::geom::AmbientVector;
use crate::{Error, Result};

/// Estimated first singular point `(ŷ, T̂)` of a flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularityEstimate {
    pub y_hat: Vec<f64>,
    pub t_hat: f64,
    /// `sup |A|·√(T̂ − t)` of the curvature level over the fitted window.
    pub type_one_ratio: f64,
    pub window: (f64, f64),
    pub fit_points: usize,
}

impl SingularityEstimate {
    pub fn y(&self) -> AmbientVector {
        AmbientVector::from_column_slice(&self.y_hat)
    }
}

/// Least squares line `y ≈ a + b·x`.
fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (my - b * mx, b)
}

/// The curvature level of a snapshot is the area-weighted RMS of `|A|` over
/// the hot set `{|A| ≥ 0.9·max|A|}`, which is less sensitive to single noisy
/// vertices than the maximum. Its inverse square is fitted linearly in `t`
/// over the last 20% of snapshots whose level exceeds twice the initial one,
/// and extrapolated to zero. The location is the weighted centroid of the
/// hot set, extrapolated linearly to `T̂`.
pub fn detect_singularity(tr: &Trajectory) -> Result<SingularityEstimate> {
    let mut rows = Vec::with_capacity(tr.len());
    for s in tr.snapshots() {
        let samples = s.geometry.samples()?;
        let interior: Vec<_> = samples.iter().filter(|x| x.interior).collect();
        let max_a = interior.iter().map(|x| x.sq_norm_a.sqrt()).fold(0.0, f64::max);
        let hot: Vec<_> = interior.iter().filter(|x| x.sq_norm_a.sqrt() >= 0.9 * max_a).collect();
        let weight: f64 = hot.iter().map(|x| x.weight).sum();
        let (level, centroid) = if hot.is_empty() || !(weight > 0.0) {
            (max_a, AmbientVector::zeros(s.geometry.dim()))
        } else {
            let rms = (hot.iter().map(|x| x.weight * x.sq_norm_a).sum::<f64>() / weight).sqrt();
            let c = hot.iter().fold(AmbientVector::zeros(s.geometry.dim()), |acc, x| acc + &x.x * x.weight) / weight;
            (rms, c)
        };
        rows.push((s.t, level, centroid));
    }
    let initial = rows[0].1;
    let tail_len = ((tr.len() as f64 * 0.2).ceil() as usize).max(3);
    let start = tr.len().saturating_sub(tail_len);
    let window: Vec<_> = rows[start..].iter().filter(|r| r.1 > 2.0 * initial && r.1 > 0.0).collect();
    if window.len() < 3 {
        return Err(Error::NoSingularity(format!(
            "only {} late snapshots with curvature above twice its initial level {initial:.3e}",
            window.len()
        )));
    }
    let ts: Vec<f64> = window.iter().map(|r| r.0).collect();
    let inv: Vec<f64> = window.iter().map(|r| r.1.powi(-2)).collect();
    let (a, b) = fit_line(&ts, &inv);
    if !(b < 0.0) {
        return Err(Error::NoSingularity("|A|^-2 is not decreasing over the window".into()));
    }
    let t_hat = -a / b;
    let last = *ts.last().expect("window nonempty");
    if !(t_hat > last) || !t_hat.is_finite() {
        return Err(Error::NoSingularity(format!("fitted time {t_hat} does not lie after the last snapshot {last}")));
    }
    let dim = window[0].2.len();
    let y_hat: Vec<f64> = (0..dim)
        .map(|d| {
            let ys: Vec<f64> = window.iter().map(|r| r.2[d]).collect();
            let (c0, c1) = fit_line(&ts, &ys);
            c0 + c1 * t_hat
        })
        .collect();
    let type_one_ratio = window.iter().map(|r| r.1 * (t_hat - r.0).sqrt()).fold(0.0, f64::max);
    Ok(SingularityEstimate { y_hat, t_hat, type_one_ratio, window: (ts[0], last), fit_points: window.len() })
}
