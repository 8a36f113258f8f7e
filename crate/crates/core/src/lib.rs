//! A numerical laboratory for mean curvature flow of curves and surfaces.
//!
//! The crate is organised around a handful of subsystems:
//!
//! - [`geom`]: discrete curves and triangle meshes in `R^n`, curvature
//!   operators, Euler characteristic bookkeeping and exact clipping
//!   against balls.
//! - [`flow`]: explicit (and one linearised implicit) time stepping of mean
//!   curvature flow for curves, meshes and graphical patches, plus
//!   trajectories and singularity detection.
//! - [`monotonicity`]: the backwards heat kernel, the Gaussian density
//!   functional and its dissipation, area ratios and the scale-invariant
//!   mean curvature estimate.
//! - [`blowup`]: parabolic rescaling, blowup ladders and self-shrinker
//!   residuals.
//! - [`budget`]: Gauss–Bonnet identities and the local/global curvature
//!   budgets built on them.
//! - [`zoo`]: exact self-shrinkers, Abresch–Langer curves and exact-flow
//!   oracles.
//! - [`io`]: OBJ, JSON, JSON-lines, CSV and key-value config formats.

pub mod blowup;
pub mod budget;
pub mod constants;
mod error;
pub mod flow;
pub mod geom;
pub mod geometry;
pub mod io;
pub mod monotonicity;
pub mod zoo;

pub use error::{Error, Result};
pub use geometry::{FieldSample, Geometry};
