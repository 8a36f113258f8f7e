use serde::{Deserialize, Serialize};

use super::remesh::RemeshEvent;
use crate::geometry::Geometry;
use crate::{Error, Result};

/// One timestamped geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    #[serde(flatten)]
    pub geometry: Geometry,
}

/// Step statistics and remeshing log of a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FlowMetadata {
    pub steps: usize,
    pub min_dt: f64,
    pub max_dt: f64,
    pub remesh_events: Vec<RemeshEvent>,
    /// Set when the run stopped at the resolution limit before its horizon.
    pub halted_at: Option<f64>,
}

/// A sequence of snapshots with strictly increasing times and a single
/// geometry kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    snapshots: Vec<Snapshot>,
    pub metadata: FlowMetadata,
}

impl Trajectory {
    pub fn new(snapshots: Vec<Snapshot>) -> Result<Self> {
        if snapshots.is_empty() {
            return Err(Error::input("trajectory has no snapshots"));
        }
        let kind = snapshots[0].geometry.kind();
        for w in snapshots.windows(2) {
            if !(w[1].t > w[0].t) {
                return Err(Error::input(format!("snapshot times not increasing at t = {}", w[1].t)));
            }
            if w[1].geometry.kind() != kind {
                return Err(Error::input("snapshot geometry kind changes along the trajectory"));
            }
        }
        if snapshots.iter().any(|s| !s.t.is_finite()) {
            return Err(Error::input("non-finite snapshot time"));
        }
        Ok(Trajectory { snapshots, metadata: FlowMetadata::default() })
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn first(&self) -> &Snapshot {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("trajectories are nonempty")
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    /// `[t_first, t_last]`.
    pub fn span(&self) -> (f64, f64) {
        (self.first().t, self.last().t)
    }

    pub fn contains_time(&self, t: f64) -> bool {
        let (a, b) = self.span();
        let tol = 1e-12 * (1.0 + a.abs().max(b.abs()));
        t >= a - tol && t <= b + tol
    }

    /// Geometry at time `t`: linear in vertex positions between bracketing
    /// snapshots of equal structure, the nearer snapshot otherwise.
    pub fn at(&self, t: f64) -> Result<Geometry> {
        if !self.contains_time(t) {
            let (a, b) = self.span();
            return Err(Error::input(format!("time {t} outside trajectory span [{a}, {b}]")));
        }
        let i = self.snapshots.partition_point(|s| s.t < t);
        if i == 0 {
            return Ok(self.snapshots[0].geometry.clone());
        }
        if i == self.snapshots.len() {
            return Ok(self.last().geometry.clone());
        }
        let (lo, hi) = (&self.snapshots[i - 1], &self.snapshots[i]);
        if hi.t == t {
            return Ok(hi.geometry.clone());
        }
        let s = (t - lo.t) / (hi.t - lo.t);
        if lo.geometry.same_structure(&hi.geometry) {
            lo.geometry.lerp(&hi.geometry, s)
        } else if s < 0.5 {
            Ok(lo.geometry.clone())
        } else {
            Ok(hi.geometry.clone())
        }
    }

    /// Trapezoid rule for `∫_a^b f(M_t, t) dt` over the snapshot times in
    /// `(a, b)` plus the interpolated end points.
    pub fn time_integral(&self, a: f64, b: f64, mut f: impl FnMut(&Geometry, f64) -> Result<f64>) -> Result<f64> {
        if !(b > a) {
            return Err(Error::input(format!("empty time window [{a}, {b}]")));
        }
        if !self.contains_time(a) || !self.contains_time(b) {
            let (lo, hi) = self.span();
            return Err(Error::input(format!("window [{a}, {b}] outside trajectory span [{lo}, {hi}]")));
        }
        let mut nodes = vec![(a, f(&self.at(a)?, a)?)];
        for s in self.snapshots.iter().filter(|s| s.t > a && s.t < b) {
            nodes.push((s.t, f(&s.geometry, s.t)?));
        }
        nodes.push((b, f(&self.at(b)?, b)?));
        Ok(nodes.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum())
    }

    /// Applies `f` to every snapshot, keeping the metadata.
    pub fn map(&self, f: impl Fn(&Snapshot) -> Result<Snapshot>) -> Result<Trajectory> {
        let snaps = self.snapshots.iter().map(f).collect::<Result<Vec<_>>>()?;
        let mut out = Trajectory::new(snaps)?;
        out.metadata = self.metadata.clone();
        Ok(out)
    }
}
