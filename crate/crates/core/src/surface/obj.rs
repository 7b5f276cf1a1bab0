//! ASCII OBJ reading and writing (`v` and `f` records, 1-based indices).
//!
//! Coordinates are written with 17 significant digits so that a write/read
//! cycle reproduces every `f64` exactly.

use std::fmt::Write as _;

use super::SeedSurface;
use crate::error::{Error, Result};
use crate::geom::Point3;

pub fn write_obj(points: &[Point3], triangles: &[[usize; 3]]) -> String {
    let mut out = String::with_capacity(points.len() * 72 + triangles.len() * 24);
    for p in points {
        let _ = writeln!(out, "v {:.16e} {:.16e} {:.16e}", p[0], p[1], p[2]);
    }
    for t in triangles {
        let _ = writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    out
}

/// Vertices and triangles of an OBJ document. Polygons are fan-triangulated;
/// texture and normal indices (`f 1/2/3`) are ignored, as are all other
/// record types.
pub fn parse_obj(text: &str) -> Result<(Vec<Point3>, Vec<[usize; 3]>)> {
    let mut points = Vec::new();
    let mut faces = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        let mut parts = line.split_whitespace();
        let err = |message: String| Error::Mesh {
            line: lineno + 1,
            message,
        };
        match parts.next() {
            Some("v") => {
                let coords: Vec<f64> = parts
                    .take(3)
                    .map(|c| c.parse::<f64>().map_err(|e| err(format!("bad coordinate `{c}`: {e}"))))
                    .collect::<Result<_>>()?;
                if coords.len() != 3 {
                    return Err(err("vertex needs three coordinates".into()));
                }
                points.push(Point3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let idx: Vec<usize> = parts
                    .map(|tok| {
                        let head = tok.split('/').next().unwrap_or("");
                        let i: i64 = head.parse().map_err(|_| err(format!("bad face index `{tok}`")))?;
                        let resolved = if i > 0 {
                            i - 1
                        } else if i < 0 {
                            points.len() as i64 + i
                        } else {
                            -1
                        };
                        if resolved < 0 || resolved as usize >= points.len() {
                            return Err(err(format!("face index {i} out of range")));
                        }
                        Ok(resolved as usize)
                    })
                    .collect::<Result<_>>()?;
                if idx.len() < 3 {
                    return Err(err("face needs at least three vertices".into()));
                }
                for k in 1..idx.len() - 1 {
                    faces.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    Ok((points, faces))
}

/// Loads a seed mesh. The recorded Euler characteristic is the one computed
/// from the file.
pub fn read_seed(text: &str, allow_open: bool) -> Result<SeedSurface> {
    let (points, faces) = parse_obj(text)?;
    let mut seed = SeedSurface::from_mesh(points, faces, 0, allow_open);
    seed.euler_characteristic = seed.computed_euler();
    Ok(seed)
}
