#![allow(clippy::needless_range_loop)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use zerosurf::bounds::{compute_bounds, BoundsConfig};
use zerosurf::oracle::compare_with_oracle;
use zerosurf::surface::{attach_normals, seed_sphere, seed_torus, DEFAULT_GRADIENT_FLOOR};
use zerosurf::testing::random_expression;
use zerosurf::{apply_b, parse_expression, Field, perturb_surface, Builtin, PerturbOptions, ScalarField, SeedSurface};

fn sphere() -> ScalarField {
    ScalarField::builtin(Builtin::unit_sphere())
}

fn torus() -> ScalarField {
    ScalarField::builtin(Builtin::Torus {
        ring_radius: 2.0,
        tube_radius: 0.5,
    })
}

fn seed_for(u: &ScalarField, bare: SeedSurface) -> SeedSurface {
    attach_normals(&bare, u, DEFAULT_GRADIENT_FLOOR).unwrap()
}

#[test]
fn sphere_constant_shift_closed_form() {
    let u = sphere();
    let v = ScalarField::builtin(Builtin::constant(1.0));
    let seed = seed_for(&u, seed_sphere(1.0, 3).unwrap());
    let out = perturb_surface(&seed, &u, &v, &PerturbOptions::new(0.1, 0.5)).unwrap();
    for p in &out.points {
        assert!((p.norm() - 0.9f64.sqrt()).abs() < 1e-10);
    }
    assert_eq!(out.triangles, seed.triangles);
}

#[test]
fn zero_epsilon_keeps_the_seed() {
    let u = torus();
    let v = parse_expression("x1*x3").unwrap();
    let seed = seed_for(&u, seed_torus(2.0, 0.5, 16, 8).unwrap());
    let opts = PerturbOptions::new(0.0, 0.1);
    let out = perturb_surface(&seed, &u, &v, &opts).unwrap();
    assert!(out.max_abs_t() <= opts.tol_t);
    for (p, s) in out.points.iter().zip(seed.positions()) {
        assert!((*p - s).norm() <= opts.tol_t);
    }
}

#[test]
fn torus_against_bisection() {
    let u = torus();
    let v = parse_expression("x3").unwrap();
    let seed = seed_for(&u, seed_torus(2.0, 0.5, 16, 8).unwrap());
    let eps = 0.05;
    let rep = compute_bounds(&seed, &u, &v, eps, &BoundsConfig::default()).unwrap();
    assert!(rep.passed(), "{rep:?}");
    let delta = rep.delta_max.unwrap();
    let out = perturb_surface(&seed, &u, &v, &PerturbOptions::new(eps, delta)).unwrap();
    assert!(out.max_residual() <= 1e-10);
    let dev = compare_with_oracle(&out, &seed, &u, &v, eps, delta, 1e-14).unwrap();
    assert!(dev <= 1e-8, "{dev}");
    // fixed-point consistency and residual bound
    for (solve, sample) in out.solves.iter().zip(&seed.samples) {
        let bt = apply_b(&u, &v, eps, sample.s, sample.normal, solve.t).unwrap();
        assert!((bt - solve.t).abs() <= 10.0 * 1e-12);
        assert!(solve.residual <= solve.slope.abs() * 1e-12 * 10.0);
        if let Some(r) = solve.contraction_ratio {
            assert!(r < 1.0 && r <= rep.c3_hat.unwrap() + 0.1);
        }
    }
}

/// ε_max depends on ε through the Hessian of u + εv; halve until the gates pass.
fn admissible_run(seed: &SeedSurface, u: &ScalarField, v: &ScalarField) -> (f64, zerosurf::BoundsReport) {
    let probe = compute_bounds(seed, u, v, 0.0, &BoundsConfig::default()).unwrap();
    let mut eps = 0.5 * probe.epsilon_max.unwrap();
    for _ in 0..30 {
        let rep = compute_bounds(seed, u, v, eps, &BoundsConfig::default()).unwrap();
        if rep.passed() {
            return (eps, rep);
        }
        eps *= 0.5;
    }
    panic!("no admissible epsilon for {}", v.descriptor());
}

#[test]
fn randomized_perturbations_agree_with_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let cases = [
        (sphere(), seed_sphere(1.0, 2).unwrap()),
        (torus(), seed_torus(2.0, 0.5, 16, 8).unwrap()),
    ];
    for (u, bare) in &cases {
        let seed = seed_for(u, bare.clone());
        for _ in 0..5 {
            let v = parse_expression(&random_expression(&mut rng, 3)).unwrap();
            let (eps, rep) = admissible_run(&seed, u, &v);
            let delta = rep.delta_max.unwrap();
            let out = perturb_surface(&seed, u, &v, &PerturbOptions::new(eps, delta)).unwrap();
            let dev = compare_with_oracle(&out, &seed, u, &v, eps, delta, 1e-14).unwrap();
            assert!(dev <= 1e-8, "{}: {dev}", v.descriptor());
        }
    }
}

#[test]
fn first_order_limit_converges_linearly() {
    // t(s; ε)/ε → -v(s)/|∇u(s)| with an O(ε) error
    let u = sphere();
    let v = parse_expression("x1 + 0.5*x2*x3").unwrap();
    let seed = seed_for(&u, seed_sphere(1.0, 1).unwrap());
    let solve = |eps: f64| perturb_surface(&seed, &u, &v, &PerturbOptions::new(eps, 0.2)).unwrap();
    let errs: Vec<Vec<f64>> = [1e-2, 5e-3, 2.5e-3]
        .iter()
        .map(|&eps| {
            solve(eps)
                .solves
                .iter()
                .zip(&seed.samples)
                .map(|(s, sample)| {
                    let lead = -v.eval(sample.s).unwrap().value / 2.0;
                    s.t / eps - lead
                })
                .collect()
        })
        .collect();
    for i in 0..seed.samples.len() {
        if errs[0][i].abs() < 1e-8 {
            continue;
        }
        for k in 0..2 {
            let ratio = errs[k][i] / errs[k + 1][i];
            assert!((ratio - 2.0).abs() < 0.1, "vertex {i}: ratio {ratio}");
        }
    }
}

#[test]
fn offsets_vary_smoothly_across_edges() {
    let u = sphere();
    let v = parse_expression("x1 + x2^2").unwrap();
    let seed = seed_for(&u, seed_sphere(1.0, 3).unwrap());
    let out = perturb_surface(&seed, &u, &v, &PerturbOptions::new(0.05, 0.2)).unwrap();
    let mut diffs: Vec<f64> = seed
        .edges()
        .into_iter()
        .map(|(a, b)| (out.solves[a].t - out.solves[b].t).abs())
        .collect();
    diffs.sort_by(f64::total_cmp);
    let median = diffs[diffs.len() / 2];
    let max = *diffs.last().unwrap();
    assert!(max <= 5.0 * median, "max {max} median {median}");
}

#[test]
fn scaling_the_problem_keeps_offsets() {
    let seed = seed_for(&sphere(), seed_sphere(1.0, 2).unwrap());
    let u = parse_expression("x1^2 + x2^2 + x3^2 - 1").unwrap();
    let v = parse_expression("x1 - 0.3*x3^2").unwrap();
    let u2 = parse_expression("2*(x1^2 + x2^2 + x3^2 - 1)").unwrap();
    let v2 = parse_expression("2*(x1 - 0.3*x3^2)").unwrap();
    let opts = PerturbOptions::new(0.1, 0.2);
    let a = perturb_surface(&seed, &u, &v, &opts).unwrap();
    let b = perturb_surface(&seed, &u2, &v2, &opts).unwrap();
    for (x, y) in a.solves.iter().zip(&b.solves) {
        assert!((x.t - y.t).abs() <= 1e-12);
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let u = torus();
    let v = parse_expression("sin(x1) * x3").unwrap();
    let seed = seed_for(&u, seed_torus(2.0, 0.5, 24, 12).unwrap());
    let opts = PerturbOptions::new(0.05, 0.1);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| perturb_surface(&seed, &u, &v, &opts).unwrap())
    };
    let (a, b) = (run(1), run(8));
    for (x, y) in a.points.iter().zip(&b.points) {
        assert_eq!(x.0.map(f64::to_bits), y.0.map(f64::to_bits));
    }
    assert_eq!(a.solves, b.solves);
}
