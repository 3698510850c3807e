//! Circular symmetrization on polar-cylindrical grids.
//!
//! Sampled fields live on cell-centred `(r, θ, y)` grids. The crate builds
//! per-slice distribution functions, rearranges fields into their circular
//! (centred, even, decreasing in |θ|) form, evaluates weighted convex
//! gradient functionals before and after rearrangement, measures perimeters
//! of indicator sets, and runs diagnostics on the equality cases.

pub mod corpus;
pub mod error;
pub mod functional;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod rigidity;
pub mod sum;
pub mod symmetrize;

pub use error::{Error, Result};
pub use functional::{check_ps, evaluate, IntegrandSpec, PsReport, SpecClass, Window};
pub use grid::{
    circular_projection, extend_by_zero, validate_admissible, PolarGrid, ScalarField, SliceFlag,
};
pub use rigidity::{check_rigidity, fit_orthogonal, RigidityReport, Verdict};
pub use symmetrize::{
    distribution, rearrange, restricted_distribution, symmetrize_set, DistributionTable,
};
