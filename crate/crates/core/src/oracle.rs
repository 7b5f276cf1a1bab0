//! Independent check of solved offsets by bisection along the normal.
//!
//! Bisection shares nothing with the chord iteration except field values.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{Field, Perturbed, ScalarField};
use crate::geom::{Point3, Vec3};
use crate::solver::PerturbedSurface;
use crate::surface::SeedSurface;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

impl Bracket {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo < hi {
            Ok(Bracket { lo, hi })
        } else {
            Err(Error::invalid(format!("bracket needs lo < hi, got [{lo}, {hi}]")))
        }
    }

    pub fn symmetric(half_width: f64) -> Result<Self> {
        Bracket::new(-half_width, half_width)
    }

    /// Upper bound on the number of halvings needed to reach `tol`.
    pub fn max_halvings(&self, tol: f64) -> u32 {
        ((self.hi - self.lo) / tol).log2().ceil().max(0.0) as u32
    }
}

/// Root of `field(s + tN)` in the bracket, located to within `tol`.
pub fn bisect_root<F: Field + ?Sized>(field: &F, s: Point3, normal: Vec3, bracket: Bracket, tol: f64) -> Result<f64> {
    Ok(bisect_counted(field, s, normal, bracket, tol)?.0)
}

/// Same as [`bisect_root`], also returning the number of halvings.
pub fn bisect_counted<F: Field + ?Sized>(
    field: &F,
    s: Point3,
    normal: Vec3,
    bracket: Bracket,
    tol: f64,
) -> Result<(f64, u32)> {
    if !(tol > 0.0) {
        return Err(Error::invalid("bisection tolerance must be positive"));
    }
    let f = |t: f64| field.value(s + normal * t);
    let (mut lo, mut hi) = (bracket.lo, bracket.hi);
    let (f_lo, f_hi) = (f(lo)?, f(hi)?);
    if f_lo == 0.0 {
        return Ok((lo, 0));
    }
    if f_hi == 0.0 {
        return Ok((hi, 0));
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoBracket { vertex_id: None });
    }
    let lo_negative = f_lo < 0.0;
    let limit = bracket.max_halvings(tol);
    let mut count = 0;
    while hi - lo > tol && count < limit {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        count += 1;
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok((mid, count));
        }
        if (fm < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi), count))
}

/// Oracle root for one sample of `u + εv`: bracket `[-δ, δ]`, widened once to
/// `[-2δ, 2δ]` before giving up.
pub fn oracle_root(
    u: &ScalarField,
    v: &ScalarField,
    epsilon: f64,
    s: Point3,
    normal: Vec3,
    delta: f64,
    tol: f64,
) -> Result<OracleRoot> {
    let field = Perturbed::new(u, v, epsilon);
    match bisect_root(&field, s, normal, Bracket::symmetric(delta)?, tol) {
        Err(Error::NoBracket { .. }) => {
            let t = bisect_root(&field, s, normal, Bracket::symmetric(2.0 * delta)?, tol)?;
            Ok(OracleRoot { t, widened: true })
        }
        other => other.map(|t| OracleRoot { t, widened: false }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleRoot {
    pub t: f64,
    /// The root lies outside `[-δ, δ]` but within `[-2δ, 2δ]`.
    pub widened: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleRow {
    pub vertex_id: usize,
    pub t_solver: f64,
    pub t_oracle: Option<f64>,
    pub deviation: Option<f64>,
    pub widened: bool,
}

/// Per-vertex oracle comparison; vertices without a sign change have
/// `t_oracle == None`.
pub fn oracle_table(
    perturbed: &PerturbedSurface,
    seed: &SeedSurface,
    u: &ScalarField,
    v: &ScalarField,
    epsilon: f64,
    delta: f64,
    tol: f64,
) -> Result<Vec<OracleRow>> {
    if !seed.normals_attached() {
        return Err(Error::NormalsMissing);
    }
    if perturbed.solves.len() != seed.samples.len() {
        return Err(Error::invalid("perturbed surface does not match the seed"));
    }
    seed.samples
        .par_iter()
        .zip(perturbed.solves.par_iter())
        .map(|(sample, solve)| {
            let (t_oracle, widened) = match oracle_root(u, v, epsilon, sample.s, sample.normal, delta, tol) {
                Ok(r) => (Some(r.t), r.widened),
                Err(Error::NoBracket { .. }) => (None, false),
                Err(e) => return Err(e),
            };
            Ok(OracleRow {
                vertex_id: sample.vertex_id,
                t_solver: solve.t,
                t_oracle,
                deviation: t_oracle.map(|t| (t - solve.t).abs()),
                widened,
            })
        })
        .collect()
}

/// Largest `|t_solver - t_bisection|` over all vertices.
pub fn compare_with_oracle(
    perturbed: &PerturbedSurface,
    seed: &SeedSurface,
    u: &ScalarField,
    v: &ScalarField,
    epsilon: f64,
    delta: f64,
    tol: f64,
) -> Result<f64> {
    let rows = oracle_table(perturbed, seed, u, v, epsilon, delta, tol)?;
    let mut max = 0.0f64;
    for row in rows {
        match row.deviation {
            Some(d) => max = max.max(d),
            None => {
                return Err(Error::NoBracket {
                    vertex_id: Some(row.vertex_id),
                })
            }
        }
    }
    Ok(max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{parse_expression, Builtin};
    use crate::solver::{perturb_surface, PerturbOptions};
    use crate::surface::{attach_normals, seed_sphere, DEFAULT_GRADIENT_FLOOR};

    const E1: Vec3 = Vec3::new(1.0, 0.0, 0.0);

    fn sphere() -> ScalarField {
        ScalarField::builtin(Builtin::unit_sphere())
    }

    fn one() -> ScalarField {
        ScalarField::builtin(Builtin::constant(1.0))
    }

    #[test]
    fn bisect_shifted_sphere() {
        let (u, v) = (sphere(), one());
        let f = Perturbed::new(&u, &v, 0.1);
        let tol = 1e-13;
        let (t, n) = bisect_counted(&f, E1, E1, Bracket::symmetric(0.5).unwrap(), tol).unwrap();
        assert!((t - (0.9f64.sqrt() - 1.0)).abs() <= tol);
        assert!(n <= Bracket::symmetric(0.5).unwrap().max_halvings(tol));
    }

    #[test]
    fn squared_sphere_has_no_bracket() {
        let u = ScalarField::builtin(Builtin::SquaredSphere { radius: 1.0 });
        let one = one();
        let f = Perturbed::new(&u, &one, 0.1);
        for half in [0.1, 0.5, 3.0] {
            assert!(matches!(
                bisect_root(&f, E1, E1, Bracket::symmetric(half).unwrap(), 1e-12),
                Err(Error::NoBracket { .. })
            ));
        }
    }

    #[test]
    fn odd_linear_root_at_zero() {
        let f = parse_expression("x1").unwrap();
        let t = bisect_root(&f, Point3::ZERO, E1, Bracket::symmetric(1.0).unwrap(), 1e-12).unwrap();
        assert_eq!(t, 0.0);
    }

    #[test]
    fn bracket_must_be_ordered() {
        assert!(Bracket::new(1.0, 1.0).is_err());
        assert!(Bracket::new(1.0, -1.0).is_err());
    }

    #[test]
    fn widening_distinguishes_near_miss() {
        let (u, v) = (sphere(), one());
        // root at ≈ -0.0513, outside ±0.03 but inside ±0.06
        let r = oracle_root(&u, &v, 0.1, E1, E1, 0.03, 1e-13).unwrap();
        assert!(r.widened);
        assert!((r.t - (0.9f64.sqrt() - 1.0)).abs() < 1e-12);
        assert!(oracle_root(&u, &v, 0.1, E1, E1, 0.01, 1e-13).is_err());
    }

    #[test]
    fn compare_on_sphere() {
        let (u, v) = (sphere(), one());
        let seed = attach_normals(&seed_sphere(1.0, 2).unwrap(), &u, DEFAULT_GRADIENT_FLOOR).unwrap();
        let out = perturb_surface(&seed, &u, &v, &PerturbOptions::new(0.1, 0.5)).unwrap();
        let dev = compare_with_oracle(&out, &seed, &u, &v, 0.1, 0.5, 1e-13).unwrap();
        assert!(dev <= 1e-8);

        let out = perturb_surface(&seed, &u, &v, &PerturbOptions::new(0.0, 0.5)).unwrap();
        let dev = compare_with_oracle(&out, &seed, &u, &v, 0.0, 0.5, 1e-13).unwrap();
        assert!(dev <= 1e-13);
    }
}
