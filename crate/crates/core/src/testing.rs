//! Random inputs for property tests and acceptance runs.

use rand::Rng;

use crate::geom::Point3;

/// Random expression text from a bounded grammar whose fields are smooth and
/// finite everywhere: sums, products, `sin`, `cos`, `exp(sin(·))`, small
/// integer powers, `sqrt(1 + ·²)` and quotients by `2 + cos(·)`.
pub fn random_expression<R: Rng + ?Sized>(rng: &mut R, depth: u32) -> String {
    if depth == 0 || rng.gen_bool(0.25) {
        return match rng.gen_range(0..4) {
            0 => "x1".into(),
            1 => "x2".into(),
            2 => "x3".into(),
            _ => {
                let c: f64 = rng.gen_range(-1.5..1.5);
                format!("({c:.2})")
            }
        };
    }
    let a = random_expression(rng, depth - 1);
    match rng.gen_range(0..10) {
        0 => format!("({a} + {})", random_expression(rng, depth - 1)),
        1 => format!("({a} - {})", random_expression(rng, depth - 1)),
        2 => format!("({a} * {})", random_expression(rng, depth - 1)),
        3 => format!("sin({a})"),
        4 => format!("cos({a})"),
        5 => format!("exp(sin({a}))"),
        6 => format!("({a})^2"),
        7 => format!("({a})^3"),
        8 => format!("sqrt(1 + ({a})^2)"),
        _ => format!("({a}) / (2 + cos({}))", random_expression(rng, depth - 1)),
    }
}

/// Uniform point in the cube `[-half_width, half_width]³`.
pub fn random_point<R: Rng + ?Sized>(rng: &mut R, half_width: f64) -> Point3 {
    Point3::new(
        rng.gen_range(-half_width..half_width),
        rng.gen_range(-half_width..half_width),
        rng.gen_range(-half_width..half_width),
    )
}
