use serde::{Deserialize, Serialize};

use super::FieldEval;
use crate::geom::{Point3, Sym3, Vec3};

/// Closed-form level-set families with hand-coded derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Builtin {
    /// `|x - c|² - R²`
    Sphere { center: Point3, radius: f64 },
    /// `Σ x_i²/a_i² - 1`
    Ellipsoid { semi_axes: [f64; 3] },
    /// `(|x|² + R² - r²)² - 4R²(x1² + x2²)`, the quartic whose zero set is the
    /// torus with ring radius `R` and tube radius `r` around the x3 axis.
    Torus { ring_radius: f64, tube_radius: f64 },
    /// `n·x + b`
    Affine { normal: Vec3, offset: f64 },
    /// `(|x|² - R²)²`: vanishes on the sphere but its gradient does too.
    SquaredSphere { radius: f64 },
}

impl Builtin {
    pub fn unit_sphere() -> Self {
        Builtin::Sphere {
            center: Point3::ZERO,
            radius: 1.0,
        }
    }

    pub fn constant(value: f64) -> Self {
        Builtin::Affine {
            normal: Vec3::ZERO,
            offset: value,
        }
    }

    pub fn name(&self) -> String {
        match self {
            Builtin::Sphere { center, radius } => format!("sphere(R={radius}, c={:?})", center.0),
            Builtin::Ellipsoid { semi_axes } => format!("ellipsoid(a={semi_axes:?})"),
            Builtin::Torus {
                ring_radius,
                tube_radius,
            } => format!("torus(R={ring_radius}, r={tube_radius})"),
            Builtin::Affine { normal, offset } => format!("affine(n={:?}, b={offset})", normal.0),
            Builtin::SquaredSphere { radius } => format!("squared-sphere(R={radius})"),
        }
    }

    pub fn eval(&self, x: Point3) -> FieldEval {
        match *self {
            Builtin::Sphere { center, radius } => {
                let d = x - center;
                FieldEval {
                    value: d.norm_squared() - radius * radius,
                    gradient: d * 2.0,
                    hessian: Sym3::identity_scaled(2.0),
                }
            }
            Builtin::Ellipsoid { semi_axes } => {
                let inv = semi_axes.map(|a| 1.0 / (a * a));
                let value = (0..3).map(|i| x[i] * x[i] * inv[i]).sum::<f64>() - 1.0;
                FieldEval {
                    value,
                    gradient: Vec3([2.0 * x[0] * inv[0], 2.0 * x[1] * inv[1], 2.0 * x[2] * inv[2]]),
                    hessian: Sym3([2.0 * inv[0], 0.0, 0.0, 2.0 * inv[1], 0.0, 2.0 * inv[2]]),
                }
            }
            Builtin::Torus {
                ring_radius,
                tube_radius,
            } => {
                let r2 = ring_radius * ring_radius;
                let a = x.norm_squared() + r2 - tube_radius * tube_radius;
                let rho2 = x[0] * x[0] + x[1] * x[1];
                let planar = Vec3([x[0], x[1], 0.0]);
                let mut hessian = Sym3::identity_scaled(4.0 * a) + Sym3::outer(x, 8.0);
                hessian.0[0] -= 8.0 * r2;
                hessian.0[3] -= 8.0 * r2;
                FieldEval {
                    value: a * a - 4.0 * r2 * rho2,
                    gradient: x * (4.0 * a) - planar * (8.0 * r2),
                    hessian,
                }
            }
            Builtin::Affine { normal, offset } => FieldEval {
                value: normal.dot(x) + offset,
                gradient: normal,
                hessian: Sym3::ZERO,
            },
            Builtin::SquaredSphere { radius } => {
                let q = x.norm_squared() - radius * radius;
                FieldEval {
                    value: q * q,
                    gradient: x * (4.0 * q),
                    hessian: Sym3::identity_scaled(4.0 * q) + Sym3::outer(x, 8.0),
                }
            }
        }
    }
}
