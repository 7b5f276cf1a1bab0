//! Perturbation of implicit zero surfaces.
//!
//! Given a field `u` whose zero set is a closed surface `S` with
//! non-vanishing normal derivative, and a perturbation `εv`, every sample `s`
//! of `S` is moved along its unit normal `N` to the point `s + t(s)N` where
//! `u + εv` vanishes. The offset `t(s)` is the fixed point of a contraction
//! on a small ball around the first-order offset `-εv(s)/|∇u(s)|`.
//!
//! * [`field`]: scalar fields with exact second derivatives
//! * [`surface`]: seed meshes, normals and validation
//! * [`solver`]: the per-vertex fixed-point iteration
//! * [`bounds`]: sampled admissibility constants and gates
//! * [`oracle`]: bisection cross-check
//! * [`herglotz`]: Helmholtz solutions as fields

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod field;
pub mod geom;
pub mod herglotz;
pub mod oracle;
pub mod solver;
pub mod surface;
pub mod testing;

pub use bounds::{compute_bounds, BoundsConfig, BoundsReport, GateFailure};
pub use error::{Error, Result};
pub use field::{fd_check, parse_expression, Builtin, Field, FieldEval, Perturbed, ScalarField};
pub use geom::{Point3, Sym3, Vec3};
pub use oracle::{bisect_root, compare_with_oracle, Bracket};
pub use solver::{apply_b, perturb_surface, solve_point, solve_surface, PerturbOptions, PerturbedSurface, PointSolve, SolveStatus};
pub use surface::{attach_normals, validate_seed, SeedSurface, SurfaceSample, ValidationReport};
