//! Discrete geometry in `R^n`: polygonal curves, triangle meshes and the
//! curvature operators defined on them.

mod clip;
mod curvature;
mod curve;
mod frame;
mod mesh;
pub mod shapes;
mod vector;

pub use clip::{
    ball_restrict, boundary_curvature_term, geodesic_boundary_integral, BallRestriction,
    BoundaryCurvature, VertexOrigin,
};
pub use curvature::{mesh_curvature, CurvatureField};
pub(crate) use curvature::cotan_laplacian;
pub(crate) use curve::curvature_displaced;
pub use curve::{curve_curvature, total_curvature, CurveCurvature, PolyCurve};
pub use frame::{lemma5_identity, IntersectionFrame, Lemma5Sides};
pub use mesh::{euler_genus, EulerData, Topology, TriMesh};
pub use vector::*;
