//! Time integration of mean curvature flow.
//!
//! Curves and meshes use explicit Euler with a parabolic step bound
//! `0.25·h_min²`; meshes optionally use one linearised implicit step.
//! Graphical patches integrate the quasilinear graph equation by finite
//! differences. [`run_flow`] drives any of them into a [`Trajectory`].

mod graph;
mod remesh;
mod run;
mod singularity;
mod step;
mod trajectory;

pub use graph::{graph_dt_bound, graph_second_form, step_graph, GraphForm, GraphPatch};
pub use remesh::{remesh, tangential_smooth, RemeshEvent};
pub use run::{run_flow, FlowOptions, Scheme};
pub use singularity::{detect_singularity, SingularityEstimate};
pub use step::{
    curve_dt_bound, mesh_dt_bound, step_curve, step_curve_redistributed, step_mesh, step_mesh_with, BoundaryPolicy,
    MeshStepOptions,
};
pub use trajectory::{FlowMetadata, Snapshot, Trajectory};
