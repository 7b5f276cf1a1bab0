//! The seed zero surface: a triangulated manifold whose vertices carry unit
//! normals oriented so that `∇u·N = |∇u|`.

mod generate;
pub mod obj;

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

pub use generate::{seed_plane_patch, seed_sphere, seed_torus};

use crate::error::{Error, Result};
use crate::field::{Field, ScalarField};
use crate::geom::{Point3, Vec3};

pub const DEFAULT_GRADIENT_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceSample {
    pub vertex_id: usize,
    pub s: Point3,
    /// Zero until [`attach_normals`] has run.
    pub normal: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedSurface {
    pub samples: Vec<SurfaceSample>,
    pub triangles: Vec<[usize; 3]>,
    pub euler_characteristic: i64,
    /// Permit boundary edges (planar test patches).
    pub allow_open: bool,
    normals_attached: bool,
}

impl SeedSurface {
    pub fn from_mesh(points: Vec<Point3>, triangles: Vec<[usize; 3]>, euler_characteristic: i64, allow_open: bool) -> Self {
        let samples = points
            .into_iter()
            .enumerate()
            .map(|(vertex_id, s)| SurfaceSample {
                vertex_id,
                s,
                normal: Vec3::ZERO,
            })
            .collect();
        SeedSurface {
            samples,
            triangles,
            euler_characteristic,
            allow_open,
            normals_attached: false,
        }
    }

    pub fn normals_attached(&self) -> bool {
        self.normals_attached
    }

    pub fn positions(&self) -> impl Iterator<Item = Point3> + '_ {
        self.samples.iter().map(|s| s.s)
    }

    /// Unique undirected edges, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<_> = self.edge_use_counts().into_keys().collect();
        e.sort_unstable();
        e
    }

    fn edge_use_counts(&self) -> BTreeMap<(usize, usize), usize> {
        let mut counts = BTreeMap::new();
        for &[a, b, c] in &self.triangles {
            for (p, q) in [(a, b), (b, c), (c, a)] {
                *counts.entry((p.min(q), p.max(q))).or_insert(0) += 1;
            }
        }
        counts
    }

    pub fn computed_euler(&self) -> i64 {
        let v = self.samples.len() as i64;
        let e = self.edge_use_counts().len() as i64;
        v - e + self.triangles.len() as i64
    }

    pub fn min_edge_length(&self) -> f64 {
        self.edges()
            .into_iter()
            .map(|(a, b)| self.samples[a].s.distance(self.samples[b].s))
            .fold(f64::INFINITY, f64::min)
    }

    /// Number of connected components of the triangle graph. Isolated
    /// vertices count as their own component.
    pub fn component_count(&self) -> usize {
        let mut parent: Vec<usize> = (0..self.samples.len()).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for &[a, b, c] in &self.triangles {
            for (p, q) in [(a, b), (b, c)] {
                let (rp, rq) = (find(&mut parent, p), find(&mut parent, q));
                if rp != rq {
                    parent[rp.max(rq)] = rp.min(rq);
                }
            }
        }
        (0..parent.len()).filter(|&i| find(&mut parent, i) == i).count()
    }

    /// Area-weighted vertex normals from the triangle winding.
    pub fn mesh_normals(&self) -> Vec<Vec3> {
        let mut acc = vec![Vec3::ZERO; self.samples.len()];
        for &[a, b, c] in &self.triangles {
            let (pa, pb, pc) = (self.samples[a].s, self.samples[b].s, self.samples[c].s);
            let n = (pb - pa).cross(pc - pa);
            for i in [a, b, c] {
                acc[i] += n;
            }
        }
        acc.into_iter().map(|n| n.normalized().unwrap_or(Vec3::ZERO)).collect()
    }

    fn check_indices(&self) -> Result<()> {
        let n = self.samples.len();
        for (k, t) in self.triangles.iter().enumerate() {
            if t.iter().any(|&i| i >= n) || t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(Error::invalid(format!("triangle {k} has invalid vertex indices {t:?}")));
            }
        }
        Ok(())
    }
}

/// Sets `N = ∇u(s)/|∇u(s)|` at every sample.
pub fn attach_normals(surface: &SeedSurface, u: &ScalarField, gradient_floor: f64) -> Result<SeedSurface> {
    let mut out = surface.clone();
    for sample in &mut out.samples {
        let g = u.eval(sample.s)?.gradient;
        let magnitude = g.norm();
        if magnitude < gradient_floor || !magnitude.is_finite() {
            return Err(Error::DegenerateGradient {
                vertex_id: sample.vertex_id,
                magnitude,
            });
        }
        sample.normal = g * (1.0 / magnitude);
    }
    out.normals_attached = true;
    Ok(out)
}

/// Like [`attach_normals`], but vertices whose gradient is below the floor get
/// the mesh normal instead. Returns the ids of those vertices. Used only for
/// forced runs past a failed gradient gate.
pub fn attach_normals_with_fallback(
    surface: &SeedSurface,
    u: &ScalarField,
    gradient_floor: f64,
) -> Result<(SeedSurface, Vec<usize>)> {
    let mesh = surface.mesh_normals();
    let mut out = surface.clone();
    let mut degenerate = Vec::new();
    for sample in &mut out.samples {
        let g = u.eval(sample.s)?.gradient;
        let magnitude = g.norm();
        if magnitude < gradient_floor || !magnitude.is_finite() {
            degenerate.push(sample.vertex_id);
            sample.normal = mesh[sample.vertex_id];
        } else {
            sample.normal = g * (1.0 / magnitude);
        }
    }
    out.normals_attached = true;
    Ok((out, degenerate))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub max_residual: f64,
    pub worst_vertex: Option<usize>,
    pub residual_ok: bool,
    pub boundary_edges: usize,
    /// Edges used by more than two triangles.
    pub nonmanifold_edges: usize,
    pub closed: bool,
    pub consistent_winding: bool,
    pub euler_computed: i64,
    pub euler_ok: bool,
    /// `None` when normals are not attached yet.
    pub orientation_ok: Option<bool>,
    pub components: usize,
    pub passed: bool,
    pub failures: Vec<String>,
}

/// Checks that the seed is a zero set of `u` within `tol`, is a closed
/// consistently wound manifold with the recorded Euler characteristic, and
/// (if normals are attached) follows the orientation convention.
pub fn validate_seed(surface: &SeedSurface, u: &ScalarField, tol: f64) -> ValidationReport {
    let mut failures = Vec::new();

    let mut max_residual = 0.0f64;
    let mut worst_vertex = None;
    let mut orientation_ok = surface.normals_attached.then_some(true);
    for sample in &surface.samples {
        match u.eval(sample.s) {
            Ok(e) => {
                let r = e.value.abs();
                if r > max_residual || worst_vertex.is_none() {
                    max_residual = max_residual.max(r);
                    worst_vertex = Some(sample.vertex_id);
                }
                if surface.normals_attached {
                    let n = sample.normal;
                    let gn = e.gradient.dot(n);
                    let gm = e.gradient.norm();
                    let ok = (n.norm() - 1.0).abs() <= 1e-12 && gn >= 0.0 && (gn - gm).abs() <= 1e-9 * gm;
                    if !ok {
                        orientation_ok = Some(false);
                    }
                }
            }
            Err(err) => {
                max_residual = f64::INFINITY;
                worst_vertex = Some(sample.vertex_id);
                failures.push(format!("vertex {}: {err}", sample.vertex_id));
            }
        }
    }
    let residual_ok = max_residual <= tol;
    if !residual_ok {
        failures.push(format!("max |u(s)| = {max_residual:e} exceeds {tol:e}"));
    }

    if let Err(e) = surface.check_indices() {
        failures.push(e.to_string());
    }

    let counts = surface.edge_use_counts();
    let boundary_edges = counts.values().filter(|&&c| c == 1).count();
    let nonmanifold_edges = counts.values().filter(|&&c| c > 2).count();
    let closed = boundary_edges == 0 && nonmanifold_edges == 0;
    if nonmanifold_edges > 0 || (boundary_edges > 0 && !surface.allow_open) {
        failures.push(format!(
            "not a closed manifold: {boundary_edges} boundary, {nonmanifold_edges} non-manifold edges"
        ));
    }

    // each directed edge at most once, and its reverse present iff interior
    let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
    for &[a, b, c] in &surface.triangles {
        for e in [(a, b), (b, c), (c, a)] {
            *directed.entry(e).or_insert(0) += 1;
        }
    }
    let consistent_winding = directed.values().all(|&c| c == 1)
        && counts
            .iter()
            .filter(|(_, &c)| c == 2)
            .all(|(&(p, q), _)| directed.contains_key(&(p, q)) && directed.contains_key(&(q, p)));
    if !consistent_winding {
        failures.push("inconsistent triangle winding".into());
    }

    let euler_computed = surface.computed_euler();
    let euler_ok = euler_computed == surface.euler_characteristic;
    if !euler_ok {
        failures.push(format!(
            "Euler characteristic {euler_computed} differs from recorded {}",
            surface.euler_characteristic
        ));
    }

    if orientation_ok == Some(false) {
        failures.push("normals violate the orientation convention".into());
    }

    ValidationReport {
        max_residual,
        worst_vertex,
        residual_ok,
        boundary_edges,
        nonmanifold_edges,
        closed,
        consistent_winding,
        euler_computed,
        euler_ok,
        orientation_ok,
        components: surface.component_count(),
        passed: failures.is_empty(),
        failures,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{parse_expression, Builtin};

    fn sphere() -> ScalarField {
        ScalarField::builtin(Builtin::unit_sphere())
    }

    #[test]
    fn normals_of_unit_sphere_are_positions() {
        let seed = seed_sphere(1.0, 2).unwrap();
        let with = attach_normals(&seed, &sphere(), DEFAULT_GRADIENT_FLOOR).unwrap();
        assert!(with.normals_attached());
        for s in &with.samples {
            assert!((s.normal - s.s).norm() < 1e-15);
        }
    }

    #[test]
    fn normals_flip_with_sign_of_u() {
        let seed = seed_sphere(1.0, 1).unwrap();
        let neg = parse_expression("-(x1^2+x2^2+x3^2-1)").unwrap();
        let with = attach_normals(&seed, &neg, DEFAULT_GRADIENT_FLOOR).unwrap();
        for s in &with.samples {
            assert!((s.normal + s.s).norm() < 1e-15);
        }
        assert!(validate_seed(&with, &neg, 1e-10).passed);
    }

    #[test]
    fn normals_invariant_under_scaling() {
        let seed = seed_sphere(1.0, 2).unwrap();
        let u = parse_expression("x1^2 + 2*x2^2 + 3*x3^2 - 1").unwrap();
        let u2 = parse_expression("2*(x1^2 + 2*x2^2 + 3*x3^2 - 1)").unwrap();
        let a = attach_normals(&seed, &u, DEFAULT_GRADIENT_FLOOR).unwrap();
        let b = attach_normals(&seed, &u2, DEFAULT_GRADIENT_FLOOR).unwrap();
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert_eq!(x.normal, y.normal);
        }
    }

    #[test]
    fn squared_sphere_is_degenerate() {
        let seed = seed_sphere(1.0, 1).unwrap();
        let u = ScalarField::builtin(Builtin::SquaredSphere { radius: 1.0 });
        assert!(matches!(
            attach_normals(&seed, &u, DEFAULT_GRADIENT_FLOOR),
            Err(Error::DegenerateGradient { .. })
        ));
        let (with, degenerate) = attach_normals_with_fallback(&seed, &u, DEFAULT_GRADIENT_FLOOR).unwrap();
        assert_eq!(degenerate.len(), seed.samples.len());
        for s in &with.samples {
            assert!((s.normal - s.s).norm() < 0.2);
        }
    }

    #[test]
    fn validation_of_exact_seed() {
        let seed = attach_normals(&seed_sphere(1.0, 2).unwrap(), &sphere(), DEFAULT_GRADIENT_FLOOR).unwrap();
        let report = validate_seed(&seed, &sphere(), 1e-10);
        assert!(report.passed, "{:?}", report.failures);
        assert!(report.max_residual <= 1e-12);
        assert_eq!(report.components, 1);
    }

    #[test]
    fn validation_catches_scaled_seed() {
        let mut seed = seed_sphere(1.0, 2).unwrap();
        for s in &mut seed.samples {
            s.s = s.s * 1.01;
        }
        let report = validate_seed(&seed, &sphere(), 1e-10);
        assert!(!report.passed);
        assert!((report.max_residual - (1.01f64.powi(2) - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn validation_catches_hole_and_bad_winding() {
        let mut seed = seed_sphere(1.0, 1).unwrap();
        seed.triangles.pop();
        let report = validate_seed(&seed, &sphere(), 1e-10);
        assert!(!report.closed && !report.passed);
        assert_eq!(report.boundary_edges, 3);

        let mut seed = seed_sphere(1.0, 1).unwrap();
        seed.triangles[0].swap(0, 1);
        let report = validate_seed(&seed, &sphere(), 1e-10);
        assert!(report.closed && !report.consistent_winding && !report.passed);
    }

    #[test]
    fn open_patch_passes_only_when_allowed() {
        let flat = parse_expression("x3").unwrap();
        let mut patch = seed_plane_patch(1.0, 4).unwrap();
        assert!(validate_seed(&patch, &flat, 1e-12).passed);
        patch.allow_open = false;
        assert!(!validate_seed(&patch, &flat, 1e-12).passed);
    }

    #[test]
    fn adjacent_normals_tighten_with_subdivision() {
        let u = sphere();
        let mut previous = f64::INFINITY;
        for level in 0..4 {
            let seed = attach_normals(&seed_sphere(1.0, level).unwrap(), &u, DEFAULT_GRADIENT_FLOOR).unwrap();
            let max_angle = seed
                .edges()
                .into_iter()
                .map(|(a, b)| seed.samples[a].normal.dot(seed.samples[b].normal).clamp(-1.0, 1.0).acos())
                .fold(0.0, f64::max);
            assert!(max_angle < previous, "level {level}");
            previous = max_angle;
        }
    }

    #[test]
    fn two_components_detected() {
        let a = seed_sphere(1.0, 0).unwrap();
        let mut points: Vec<_> = a.positions().collect();
        let mut tris = a.triangles.clone();
        let off = points.len();
        points.extend(a.positions().map(|p| p + Vec3::new(5.0, 0.0, 0.0)));
        tris.extend(a.triangles.iter().map(|t| t.map(|i| i + off)));
        let both = SeedSurface::from_mesh(points, tris, 4, false);
        assert_eq!(both.component_count(), 2);
        assert_eq!(both.computed_euler(), 4);
    }
}
