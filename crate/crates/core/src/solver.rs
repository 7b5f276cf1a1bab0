//! Per-vertex fixed-point solve of `u(s + tN) + εv(s + tN) = 0`.
//!
//! Taylor expansion about `s` gives `t·g + εv(s) + t²φ = 0` with
//! `g = ∇u(s)·N + ε∇v(s)·N` and `t²φ` the exact second-order remainder, so
//! the fixed-point map
//!
//! ```text
//! B t = -εv(s)/g - t²φ/g
//! ```
//!
//! is algebraically the parallel-chord step `B t = t - u_ε(s + tN)/g`. The
//! chord form needs only values along the normal and no intermediate point.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, Perturbed, ScalarField};
use crate::geom::{Point3, Vec3};
use crate::surface::{SeedSurface, SurfaceSample, DEFAULT_GRADIENT_FLOOR};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum T0Strategy {
    Zero,
    /// `t₀ = -εv(s)/g`, the center of the containment ball.
    FirstOrder,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerturbOptions {
    pub epsilon: f64,
    pub tol_t: f64,
    pub max_iter: usize,
    /// Radius of the containment ball around the first-order offset.
    pub delta: f64,
    pub t0_strategy: T0Strategy,
    pub gradient_floor: f64,
    /// Converged iterates must satisfy `|u_ε(s + tN)| ≤ residual_factor·|g|·tol_t`.
    pub residual_factor: f64,
}

impl PerturbOptions {
    pub fn new(epsilon: f64, delta: f64) -> Self {
        PerturbOptions {
            epsilon,
            tol_t: 1e-12,
            max_iter: 50,
            delta,
            t0_strategy: T0Strategy::FirstOrder,
            gradient_floor: DEFAULT_GRADIENT_FLOOR,
            residual_factor: 10.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid(format!("epsilon must be finite and >= 0, got {}", self.epsilon)));
        }
        if !(self.tol_t > 0.0) {
            return Err(Error::invalid("tol_t must be positive"));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::invalid(format!("delta must be finite and positive, got {}", self.delta)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxIter,
    /// An iterate left the containment ball.
    LeftM,
    DegenerateGradient,
    /// The iteration failed and `u_ε` has no sign change across the ball.
    NoBracket,
    /// Field evaluation failed along the normal.
    DomainError,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointSolve {
    pub vertex_id: usize,
    pub t: f64,
    pub iterations: usize,
    pub residual: f64,
    /// Largest observed `|Δt_{n+1}|/|Δt_n|`; `None` with fewer than two steps.
    pub contraction_ratio: Option<f64>,
    pub status: SolveStatus,
    /// Chord slope `∇u_ε(s)·N`.
    pub slope: f64,
    /// First-order offset `-εv(s)/g`.
    pub center: f64,
    /// Iterates `t₀, t₁, …`.
    pub trace: Vec<f64>,
}

impl PointSolve {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }

    /// Successive step ratios `|t_{n+2} - t_{n+1}| / |t_{n+1} - t_n|`.
    pub fn step_ratios(&self) -> Vec<f64> {
        let steps: Vec<f64> = self.trace.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        steps
            .windows(2)
            .filter(|w| w[0] > ratio_floor(self.t))
            .map(|w| w[1] / w[0])
            .collect()
    }

    fn degenerate(vertex_id: usize, t: f64) -> Self {
        PointSolve {
            vertex_id,
            t,
            iterations: 0,
            residual: f64::NAN,
            contraction_ratio: None,
            status: SolveStatus::DegenerateGradient,
            slope: 0.0,
            center: 0.0,
            trace: Vec::new(),
        }
    }
}

/// Steps at or below rounding level carry no contraction information.
fn ratio_floor(t: f64) -> f64 {
    1e3 * f64::EPSILON * t.abs().max(1.0)
}

/// Chord data fixed at a base point.
#[derive(Debug, Clone, Copy)]
struct Chord {
    slope: f64,
    center: f64,
}

fn chord(u: &ScalarField, v: &ScalarField, epsilon: f64, s: Point3, normal: Vec3, floor: f64) -> Result<Option<Chord>> {
    let eu = u.eval(s)?;
    if eu.gradient.norm() < floor {
        return Ok(None);
    }
    let (v_value, v_slope) = if epsilon == 0.0 {
        (0.0, 0.0)
    } else {
        let ev = v.eval(s)?;
        (ev.value, ev.gradient.dot(normal))
    };
    let slope = eu.gradient.dot(normal) + epsilon * v_slope;
    if !(slope.abs() >= floor) {
        return Ok(None);
    }
    Ok(Some(Chord {
        slope,
        center: -epsilon * v_value / slope,
    }))
}

/// One application of the fixed-point map at offset `t`.
pub fn apply_b(u: &ScalarField, v: &ScalarField, epsilon: f64, s: Point3, normal: Vec3, t: f64) -> Result<f64> {
    let c = chord(u, v, epsilon, s, normal, DEFAULT_GRADIENT_FLOOR)?.ok_or_else(|| {
        let magnitude = u.eval(s).map(|e| e.gradient.dot(normal)).unwrap_or(0.0);
        Error::DegenerateGradient {
            vertex_id: usize::MAX,
            magnitude,
        }
    })?;
    let field = Perturbed::new(u, v, epsilon);
    Ok(t - field.value(s + normal * t)? / c.slope)
}

/// Iterates the map from `t₀` until the step drops below `tol_t`. Failures
/// are reported through [`PointSolve::status`].
pub fn solve_point(u: &ScalarField, v: &ScalarField, opts: &PerturbOptions, sample: &SurfaceSample) -> PointSolve {
    let (s, normal) = (sample.s, sample.normal);
    let c = match chord(u, v, opts.epsilon, s, normal, opts.gradient_floor) {
        Ok(Some(c)) => c,
        Ok(None) => return PointSolve::degenerate(sample.vertex_id, 0.0),
        Err(_) => {
            let mut out = PointSolve::degenerate(sample.vertex_id, 0.0);
            out.status = SolveStatus::DomainError;
            return out;
        }
    };
    let field = Perturbed::new(u, v, opts.epsilon);
    let mut t = match opts.t0_strategy {
        T0Strategy::Zero => 0.0,
        T0Strategy::FirstOrder => c.center,
    };
    let mut trace = vec![t];
    let mut status = SolveStatus::MaxIter;
    let mut prev_step: Option<f64> = None;
    let mut max_ratio: Option<f64> = None;

    for _ in 0..opts.max_iter {
        let value = match field.value(s + normal * t) {
            Ok(v) => v,
            Err(_) => {
                status = SolveStatus::DomainError;
                break;
            }
        };
        let next = t - value / c.slope;
        trace.push(next);
        let step = (next - t).abs();
        t = next;
        if !((t - c.center).abs() <= opts.delta) {
            status = SolveStatus::LeftM;
            break;
        }
        if let Some(prev) = prev_step {
            if prev > ratio_floor(t) {
                let r = step / prev;
                max_ratio = Some(max_ratio.map_or(r, |m: f64| m.max(r)));
            }
        }
        prev_step = Some(step);
        if step <= opts.tol_t {
            status = SolveStatus::Converged;
            break;
        }
    }

    let residual = field.value(s + normal * t).map(f64::abs).unwrap_or(f64::NAN);
    if status == SolveStatus::Converged {
        if t.abs() > opts.delta {
            status = SolveStatus::LeftM;
        } else if !(residual <= opts.residual_factor * c.slope.abs() * opts.tol_t) {
            status = SolveStatus::MaxIter;
        }
    }
    if matches!(status, SolveStatus::MaxIter | SolveStatus::LeftM) {
        let lo = field.value(s + normal * (c.center - opts.delta));
        let hi = field.value(s + normal * (c.center + opts.delta));
        if let (Ok(lo), Ok(hi)) = (lo, hi) {
            if lo * hi > 0.0 {
                status = SolveStatus::NoBracket;
            }
        }
    }

    PointSolve {
        vertex_id: sample.vertex_id,
        t,
        iterations: trace.len() - 1,
        residual,
        contraction_ratio: max_ratio,
        status,
        slope: c.slope,
        center: c.center,
        trace,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbedSurface {
    /// `r = s + t(s)N`; non-converged vertices keep their last iterate.
    pub points: Vec<Point3>,
    pub solves: Vec<PointSolve>,
    pub triangles: Vec<[usize; 3]>,
    pub failed_vertices: Vec<usize>,
}

impl PerturbedSurface {
    pub fn is_complete(&self) -> bool {
        self.failed_vertices.is_empty()
    }

    pub fn max_residual(&self) -> f64 {
        self.solves.iter().map(|s| s.residual).fold(0.0, f64::max)
    }

    pub fn max_iterations(&self) -> usize {
        self.solves.iter().map(|s| s.iterations).max().unwrap_or(0)
    }

    pub fn max_contraction_ratio(&self) -> Option<f64> {
        self.solves
            .iter()
            .filter_map(|s| s.contraction_ratio)
            .reduce(f64::max)
    }

    pub fn max_abs_t(&self) -> f64 {
        self.solves.iter().map(|s| s.t.abs()).fold(0.0, f64::max)
    }
}

/// Solves every vertex and keeps whatever failed. The result does not depend
/// on the rayon pool size.
pub fn solve_surface(seed: &SeedSurface, u: &ScalarField, v: &ScalarField, opts: &PerturbOptions) -> Result<PerturbedSurface> {
    opts.validate()?;
    if !seed.normals_attached() {
        return Err(Error::NormalsMissing);
    }
    let solves: Vec<PointSolve> = seed.samples.par_iter().map(|s| solve_point(u, v, opts, s)).collect();
    let points = seed
        .samples
        .iter()
        .zip(&solves)
        .map(|(sample, solve)| {
            if solve.t.is_finite() {
                sample.s + sample.normal * solve.t
            } else {
                sample.s
            }
        })
        .collect();
    let failed_vertices = solves.iter().filter(|s| !s.converged()).map(|s| s.vertex_id).collect();
    Ok(PerturbedSurface {
        points,
        solves,
        triangles: seed.triangles.clone(),
        failed_vertices,
    })
}

/// Like [`solve_surface`] but any non-converged vertex fails the whole result.
pub fn perturb_surface(seed: &SeedSurface, u: &ScalarField, v: &ScalarField, opts: &PerturbOptions) -> Result<PerturbedSurface> {
    let out = solve_surface(seed, u, v, opts)?;
    if out.is_complete() {
        Ok(out)
    } else {
        Err(Error::SolveFailed(out.failed_vertices))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{parse_expression, Builtin};
    use crate::surface::{attach_normals, seed_sphere};

    fn sphere() -> ScalarField {
        ScalarField::builtin(Builtin::unit_sphere())
    }

    fn one() -> ScalarField {
        ScalarField::builtin(Builtin::constant(1.0))
    }

    const E1: Vec3 = Vec3::new(1.0, 0.0, 0.0);

    #[test]
    fn apply_b_examples() {
        let (u, v) = (sphere(), one());
        let bt = apply_b(&u, &v, 0.1, E1, E1, 0.0).unwrap();
        assert!((bt + 0.05).abs() < 1e-15);
        let root = 0.9f64.sqrt() - 1.0;
        let bt = apply_b(&u, &v, 0.1, E1, E1, root).unwrap();
        assert!((bt - root).abs() < 1e-15);
        assert_eq!(apply_b(&u, &v, 0.0, E1, E1, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn apply_b_rejects_flat_gradient() {
        let u = ScalarField::builtin(Builtin::SquaredSphere { radius: 1.0 });
        assert!(matches!(
            apply_b(&u, &one(), 0.1, E1, E1, 0.0),
            Err(Error::DegenerateGradient { .. })
        ));
    }

    #[test]
    fn sphere_with_constant_shift() {
        let seed = attach_normals(&seed_sphere(1.0, 1).unwrap(), &sphere(), DEFAULT_GRADIENT_FLOOR).unwrap();
        let opts = PerturbOptions::new(0.1, 0.5);
        let exact = 0.9f64.sqrt() - 1.0;
        for sample in &seed.samples {
            let r = solve_point(&sphere(), &one(), &opts, sample);
            assert_eq!(r.status, SolveStatus::Converged);
            assert!((r.t - exact).abs() < 1e-10);
            assert!(r.contraction_ratio.unwrap() < 1.0);
        }
    }

    #[test]
    fn sphere_with_linear_shift_matches_quadratic_formula() {
        let v = parse_expression("x1").unwrap();
        let sample = SurfaceSample {
            vertex_id: 0,
            s: E1,
            normal: E1,
        };
        let r = solve_point(&sphere(), &v, &PerturbOptions::new(0.1, 0.5), &sample);
        // (1+t)² + 0.1(1+t) - 1 = 0
        let exact = (-0.1 + 4.01f64.sqrt()) / 2.0 - 1.0;
        assert_eq!(r.status, SolveStatus::Converged);
        assert!((r.t - exact).abs() < 1e-10, "{} vs {exact}", r.t);
    }

    #[test]
    fn zero_start_reaches_same_root() {
        let sample = SurfaceSample {
            vertex_id: 0,
            s: E1,
            normal: E1,
        };
        let mut opts = PerturbOptions::new(0.1, 0.5);
        opts.t0_strategy = T0Strategy::Zero;
        let r = solve_point(&sphere(), &one(), &opts, &sample);
        assert!(r.converged());
        assert_eq!(r.trace[0], 0.0);
        assert!((r.t - (0.9f64.sqrt() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn squared_sphere_is_degenerate() {
        let u = ScalarField::builtin(Builtin::SquaredSphere { radius: 1.0 });
        let sample = SurfaceSample {
            vertex_id: 3,
            s: E1,
            normal: E1,
        };
        let r = solve_point(&u, &one(), &PerturbOptions::new(0.1, 0.5), &sample);
        assert_eq!(r.status, SolveStatus::DegenerateGradient);
        assert_eq!(r.vertex_id, 3);
    }

    #[test]
    fn tiny_ball_reports_left_m_or_no_bracket() {
        let sample = SurfaceSample {
            vertex_id: 0,
            s: E1,
            normal: E1,
        };
        // root is 1.3e-3 from the center; a 1e-4 ball excludes it
        let r = solve_point(&sphere(), &one(), &PerturbOptions::new(0.1, 1e-4), &sample);
        assert_eq!(r.status, SolveStatus::NoBracket);
        // with a zero start the first step lands at the center, inside the
        // ball, and the second leaves it while the root is still bracketed
        let mut opts = PerturbOptions::new(0.1, 1.5e-3);
        opts.t0_strategy = T0Strategy::Zero;
        opts.max_iter = 1;
        let r = solve_point(&sphere(), &one(), &opts, &sample);
        assert_eq!(r.status, SolveStatus::MaxIter);
    }

    #[test]
    fn perturb_surface_requires_normals_and_reports_failures() {
        let bare = seed_sphere(1.0, 0).unwrap();
        let opts = PerturbOptions::new(0.1, 0.5);
        assert_eq!(perturb_surface(&bare, &sphere(), &one(), &opts), Err(Error::NormalsMissing));
        let seed = attach_normals(&bare, &sphere(), DEFAULT_GRADIENT_FLOOR).unwrap();
        let tight = PerturbOptions::new(0.1, 1e-4);
        match perturb_surface(&seed, &sphere(), &one(), &tight) {
            Err(Error::SolveFailed(ids)) => assert_eq!(ids.len(), 12),
            other => panic!("{other:?}"),
        }
        let partial = solve_surface(&seed, &sphere(), &one(), &tight).unwrap();
        assert_eq!(partial.failed_vertices.len(), 12);
        let mut bad = opts;
        bad.epsilon = -1.0;
        assert!(perturb_surface(&seed, &sphere(), &one(), &bad).is_err());
    }

    #[test]
    fn domain_errors_become_status() {
        let u = parse_expression("x1^2 + x2^2 + x3^2 - 1").unwrap();
        let v = parse_expression("sqrt(x1 - 1)").unwrap();
        let sample = SurfaceSample {
            vertex_id: 0,
            s: E1,
            normal: E1,
        };
        let r = solve_point(&u, &v, &PerturbOptions::new(0.1, 0.5), &sample);
        assert_eq!(r.status, SolveStatus::DomainError);
    }
}
