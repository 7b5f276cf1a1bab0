use std::collections::HashMap;
use std::f64::consts::PI;

use super::SeedSurface;
use crate::error::{Error, Result};
use crate::geom::{Point3, Vec3};

const ICOSAHEDRON_FACES: [[usize; 3]; 20] = [
    [0, 11, 5],
    [0, 5, 1],
    [0, 1, 7],
    [0, 7, 10],
    [0, 10, 11],
    [1, 5, 9],
    [5, 11, 4],
    [11, 10, 2],
    [10, 7, 6],
    [7, 1, 8],
    [3, 9, 4],
    [3, 4, 2],
    [3, 2, 6],
    [3, 6, 8],
    [3, 8, 9],
    [4, 9, 5],
    [2, 4, 11],
    [6, 2, 10],
    [8, 6, 7],
    [9, 8, 1],
];

/// Icosphere: an icosahedron subdivided `subdivisions` times, every vertex
/// projected onto the sphere of the given radius. Vertices of level `k` keep
/// their ids at level `k + 1`.
pub fn seed_sphere(radius: f64, subdivisions: u32) -> Result<SeedSurface> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::invalid(format!("sphere radius must be positive, got {radius}")));
    }
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut dirs: Vec<Point3> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .into_iter()
    .map(|c| Vec3(c).normalized().expect("nonzero"))
    .collect();
    let mut faces = ICOSAHEDRON_FACES.to_vec();

    for _ in 0..subdivisions {
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        let mut mid = |a: usize, b: usize, dirs: &mut Vec<Point3>| -> usize {
            let key = (a.min(b), a.max(b));
            *midpoint.entry(key).or_insert_with(|| {
                let m = (dirs[a] + dirs[b]).normalized().expect("antipodal edge");
                dirs.push(m);
                dirs.len() - 1
            })
        };
        for [a, b, c] in faces {
            let ab = mid(a, b, &mut dirs);
            let bc = mid(b, c, &mut dirs);
            let ca = mid(c, a, &mut dirs);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }

    let points = dirs.into_iter().map(|d| d * radius).collect();
    Ok(SeedSurface::from_mesh(points, faces, 2, false))
}

/// Torus around the x3 axis sampled on an `n_u × n_v` parameter grid.
pub fn seed_torus(ring_radius: f64, tube_radius: f64, n_u: usize, n_v: usize) -> Result<SeedSurface> {
    if !(tube_radius > 0.0 && ring_radius > tube_radius && ring_radius.is_finite()) {
        return Err(Error::invalid(format!(
            "torus requires ring radius > tube radius > 0, got R={ring_radius}, r={tube_radius}"
        )));
    }
    if n_u < 3 || n_v < 3 {
        return Err(Error::invalid("torus grid needs at least 3 samples per direction"));
    }
    let mut points = Vec::with_capacity(n_u * n_v);
    for i in 0..n_u {
        let (su, cu) = (2.0 * PI * i as f64 / n_u as f64).sin_cos();
        for j in 0..n_v {
            let (sv, cv) = (2.0 * PI * j as f64 / n_v as f64).sin_cos();
            let rho = ring_radius + tube_radius * cv;
            points.push(Point3::new(rho * cu, rho * su, tube_radius * sv));
        }
    }
    let id = |i: usize, j: usize| (i % n_u) * n_v + (j % n_v);
    let mut faces = Vec::with_capacity(2 * n_u * n_v);
    for i in 0..n_u {
        for j in 0..n_v {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    Ok(SeedSurface::from_mesh(points, faces, 0, false))
}

/// Open square patch `[-half_width, half_width]²` in the plane x3 = 0.
/// Only usable with `allow_open`.
pub fn seed_plane_patch(half_width: f64, n: usize) -> Result<SeedSurface> {
    if n < 2 || !(half_width > 0.0) {
        return Err(Error::invalid("plane patch needs n >= 2 and positive width"));
    }
    let step = 2.0 * half_width / (n - 1) as f64;
    let mut points = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            points.push(Point3::new(-half_width + step * i as f64, -half_width + step * j as f64, 0.0));
        }
    }
    let mut faces = Vec::new();
    for i in 0..n - 1 {
        for j in 0..n - 1 {
            let a = i * n + j;
            let (b, c, d) = (a + n, a + n + 1, a + 1);
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    Ok(SeedSurface::from_mesh(points, faces, 1, true))
}
