//! Shared fixtures for the benchmarks.

use zerosurf::surface::{attach_normals, seed_sphere, DEFAULT_GRADIENT_FLOOR};
use zerosurf::{Builtin, ScalarField, SeedSurface};

pub fn unit_sphere() -> ScalarField {
    ScalarField::builtin(Builtin::unit_sphere())
}

/// Oriented unit icosphere.
pub fn sphere_seed(subdivisions: u32) -> SeedSurface {
    let seed = seed_sphere(1.0, subdivisions).expect("valid radius");
    attach_normals(&seed, &unit_sphere(), DEFAULT_GRADIENT_FLOOR).expect("sphere gradient is nonzero")
}
