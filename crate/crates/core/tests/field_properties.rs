#![allow(clippy::needless_range_loop)]

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use zerosurf::testing::{random_expression, random_point};
use zerosurf::{fd_check, parse_expression, Field, Point3};

/// Empirical order of the finite-difference deviation when h is halved.
/// `None` when the deviation at `h` is already at rounding level.
fn observed_order(text: &str, p: Point3, h: f64) -> Option<f64> {
    let f = parse_expression(text).unwrap();
    let e = f.eval(p).unwrap();
    let scale = 1.0 + e.value.abs() + e.gradient.norm() + e.hessian.0.iter().map(|x| x.abs()).sum::<f64>();
    let coarse = fd_check(&f, p, h).unwrap();
    let fine = fd_check(&f, p, h / 2.0).unwrap();
    if coarse <= 1e-9 * scale {
        return None;
    }
    Some((coarse / fine).log2())
}

#[test]
fn ad_matches_fd_with_second_order_convergence() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut measured = 0;
    for _ in 0..100 {
        let text = random_expression(&mut rng, 3);
        let p = random_point(&mut rng, 1.5);
        for h in [1e-3, 1e-4] {
            let f = parse_expression(&text).unwrap();
            let dev = fd_check(&f, p, h).unwrap();
            let e = f.eval(p).unwrap();
            let scale = 1.0 + e.value.abs() + e.gradient.norm();
            assert!(dev <= 1e2 * scale * h * h + 1e-9 * scale, "{text} at {p:?}: {dev}");
        }
        if let Some(order) = observed_order(&text, p, 1e-3) {
            measured += 1;
            assert!(order >= 1.8, "{text} at {p:?}: order {order}");
        }
    }
    assert!(measured > 50, "only {measured} expressions had measurable truncation error");
}

proptest! {
    #[test]
    fn evaluation_is_deterministic_and_symmetric(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let text = random_expression(&mut rng, 4);
        let p = random_point(&mut rng, 2.0);
        let f = parse_expression(&text).unwrap();
        let a = f.eval(p).unwrap();
        let b = f.eval(p).unwrap();
        prop_assert_eq!(a.value.to_bits(), b.value.to_bits());
        prop_assert_eq!(a.hessian.0.map(f64::to_bits), b.hessian.0.map(f64::to_bits));
        let m = a.hessian.to_matrix();
        for i in 0..3 {
            for j in 0..3 {
                prop_assert_eq!(m[i][j].to_bits(), m[j][i].to_bits());
            }
        }
    }

    #[test]
    fn printed_expressions_reparse(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let text = random_expression(&mut rng, 4);
        let e = zerosurf::field::Expr::parse(&text).unwrap();
        prop_assert_eq!(zerosurf::field::Expr::parse(&e.to_string()).unwrap(), e);
    }
}
