use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zerosurf::bounds::{compute_bounds, BoundsConfig};
use zerosurf::herglotz::{find_degenerate_set, herglotz_real, make_quadrature, Density, HerglotzField};
use zerosurf::oracle::compare_with_oracle;
use zerosurf::surface::{attach_normals, seed_sphere, validate_seed, DEFAULT_GRADIENT_FLOOR};
use zerosurf::testing::random_point;
use zerosurf::{perturb_surface, PerturbOptions, Vec3};

#[test]
fn helmholtz_identity_for_random_fields() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let q = Arc::new(make_quadrature(32, 32).unwrap());
    for k in [1.0, 2.0, 5.0] {
        let density: Vec<Complex64> = (0..q.len())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let hf = HerglotzField::new(k, density, Arc::clone(&q)).unwrap();
        for _ in 0..100 {
            let e = hf.eval(random_point(&mut rng, 3.0));
            let residual = (e.laplacian() + k * k * e.value).norm();
            assert!(residual <= 1e-12 * hf.scale(), "k={k}: {residual}");
        }
    }
}

#[test]
fn sinc_error_decays_geometrically() {
    let k = 2.0;
    let x = Vec3::new(1.0, 2.0, -2.0).normalized().unwrap() * 4.5;
    let exact = 4.0 * PI * (k * 4.5f64).sin() / (k * 4.5);
    let errs: Vec<f64> = [4, 8, 16, 32]
        .iter()
        .map(|&n| {
            let q = Arc::new(make_quadrature(n, n).unwrap());
            let hf = HerglotzField::new(k, Density::Constant(Complex64::new(1.0, 0.0)).tabulate(&q), q).unwrap();
            (hf.eval(x).value.re - exact).abs()
        })
        .collect();
    for w in errs.windows(2) {
        if w[0] > 1e-12 {
            assert!(w[1] <= 0.1 * w[0], "{errs:?}");
        }
    }
    assert!(errs[3] <= 1e-10);
}

#[test]
fn sinc_zero_sphere_pipeline() {
    let k = 2.0;
    let q = Arc::new(make_quadrature(32, 32).unwrap());
    let one = Complex64::new(1.0, 0.0);
    let u = herglotz_real(HerglotzField::new(k, Density::Constant(one).tabulate(&q), Arc::clone(&q)).unwrap(), 1e-14).unwrap();
    let bare = seed_sphere(PI / k, 2).unwrap();
    assert!(find_degenerate_set(&bare, &u, 1e-3).unwrap().is_empty());
    let seed = attach_normals(&bare, &u, DEFAULT_GRADIENT_FLOOR).unwrap();
    assert!(validate_seed(&seed, &u, 1e-10).passed);

    // a constant density only rescales u; an odd Hermitian one moves the surface
    for g in [Density::Constant(Complex64::new(0.01, 0.0)), Density::ZLinear(Complex64::new(0.0, 0.05))] {
        let v = herglotz_real(HerglotzField::new(k, g.tabulate(&q), Arc::clone(&q)).unwrap(), 1e-14).unwrap();
        let rep = compute_bounds(&seed, &u, &v, 1.0, &BoundsConfig::default()).unwrap();
        assert!(rep.passed(), "{g:?}: {rep:?}");
        let delta = rep.delta_max.unwrap();
        let out = perturb_surface(&seed, &u, &v, &PerturbOptions::new(1.0, delta)).unwrap();
        let dev = compare_with_oracle(&out, &seed, &u, &v, 1.0, delta, 1e-14).unwrap();
        assert!(dev <= 1e-8, "{g:?}: {dev}");
    }
}
