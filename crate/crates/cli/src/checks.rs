//! The `herglotz-check` and `fd-check` suites.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use zerosurf::herglotz::HerglotzField;
use zerosurf::testing::random_point;
use zerosurf::{fd_check, Field, Point3};

use crate::config::{RunConfig, Which};
use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct HerglotzCheck {
    pub field: &'static str,
    pub k: f64,
    pub nodes: usize,
    pub weight_sum_error: f64,
    pub node_norm_error: f64,
    pub symmetry_mismatch: Option<f64>,
    /// Scale `Σ w|f|` the Helmholtz residual is measured against.
    pub scale: f64,
    pub helmholtz_max: f64,
    pub helmholtz_ok: bool,
    /// Only for constant densities, which have a closed form.
    pub sinc_max: Option<f64>,
    pub sinc_ok: Option<bool>,
    pub weights_ok: bool,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct HerglotzCheckReport {
    pub points: usize,
    pub rng_seed: u64,
    pub fields: Vec<HerglotzCheck>,
    pub passed: bool,
}

fn constant_amplitude(hf: &HerglotzField) -> Option<Complex64> {
    let first = *hf.density().first()?;
    hf.density().iter().all(|f| *f == first).then_some(first)
}

fn sample_points(cfg: &RunConfig, radius: f64) -> Vec<Point3> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.check.rng_seed);
    let half = radius / 3f64.sqrt();
    (0..cfg.check.points).map(|_| random_point(&mut rng, half)).collect()
}

pub fn check_herglotz_field(cfg: &RunConfig, name: &'static str, hf: &HerglotzField) -> HerglotzCheck {
    let c = &cfg.check;
    let q = hf.quadrature();
    let weight_sum_error = (q.weights.iter().sum::<f64>() - 4.0 * PI).abs();
    let node_norm_error = q.nodes.iter().map(|b| (b.norm() - 1.0).abs()).fold(0.0, f64::max);
    let k = hf.k();
    let points = sample_points(cfg, c.max_kr / k);
    let scale = hf.scale();

    let mut helmholtz_max = 0.0f64;
    let mut sinc_max = 0.0f64;
    let amplitude = constant_amplitude(hf);
    for &x in &points {
        let e = hf.eval(x);
        helmholtz_max = helmholtz_max.max((e.laplacian() + k * k * e.value).norm());
        if let Some(a) = amplitude {
            let kr = k * x.norm();
            let sinc = if kr == 0.0 { 1.0 } else { kr.sin() / kr };
            sinc_max = sinc_max.max((e.value - a * (4.0 * PI * sinc)).norm());
        }
    }
    let helmholtz_ok = helmholtz_max <= c.helmholtz_tol * scale;
    let sinc_ok = amplitude.map(|_| sinc_max <= c.sinc_tol);
    let weights_ok = weight_sum_error <= c.weight_tol && node_norm_error <= c.weight_tol;
    HerglotzCheck {
        field: name,
        k,
        nodes: q.len(),
        weight_sum_error,
        node_norm_error,
        symmetry_mismatch: hf.symmetry_mismatch().ok(),
        scale,
        helmholtz_max,
        helmholtz_ok,
        sinc_max: amplitude.map(|_| sinc_max),
        sinc_ok,
        weights_ok,
        passed: helmholtz_ok && weights_ok && sinc_ok != Some(false),
    }
}

pub fn herglotz_check(cfg: &RunConfig) -> Result<HerglotzCheckReport, CliError> {
    let mut fields = Vec::new();
    for which in [Which::U, Which::V] {
        if let Some(hf) = cfg.herglotz(which)? {
            fields.push(check_herglotz_field(cfg, which.name(), &hf));
        }
    }
    if fields.is_empty() {
        return Err(CliError::Config("no herglotz block in [u] or [v]".into()));
    }
    let passed = fields.iter().all(|f| f.passed);
    Ok(HerglotzCheckReport {
        points: cfg.check.points,
        rng_seed: cfg.check.rng_seed,
        fields,
        passed,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct FdCheck {
    pub field: &'static str,
    pub h: f64,
    pub points: usize,
    pub max_deviation: f64,
    pub max_deviation_half_step: f64,
    /// `log2` of the deviation ratio under step halving, when the deviation
    /// is above rounding level.
    pub observed_order: Option<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FdCheckReport {
    pub tol: f64,
    pub fields: Vec<FdCheck>,
    pub passed: bool,
}

fn fd_one<F: Field + ?Sized>(field: &F, name: &'static str, points: &[Point3], h: f64, tol: f64) -> Result<FdCheck, CliError> {
    let mut d1 = 0.0f64;
    let mut d2 = 0.0f64;
    for &p in points {
        d1 = d1.max(fd_check(field, p, h)?);
        d2 = d2.max(fd_check(field, p, 0.5 * h)?);
    }
    let observed_order = (d1 > 1e-9 && d2 > 0.0).then(|| (d1 / d2).log2());
    Ok(FdCheck {
        field: name,
        h,
        points: points.len(),
        max_deviation: d1,
        max_deviation_half_step: d2,
        observed_order,
        passed: d1 <= tol,
    })
}

/// Derivatives of `u`, `v` and `u + εv` against central differences at the
/// seed vertices.
pub fn fd_check_config(cfg: &RunConfig, epsilon: f64) -> Result<FdCheckReport, CliError> {
    let u = cfg.field(Which::U)?;
    let v = cfg.field(Which::V)?;
    let points: Vec<Point3> = cfg.seed()?.positions().collect();
    let (h, tol) = (cfg.fd.h, cfg.fd.tol);
    if !(h > 0.0) {
        return Err(CliError::Config("[fd] h must be positive".into()));
    }
    let sum = zerosurf::Perturbed::new(&u, &v, epsilon);
    let fields = vec![
        fd_one(&u, "u", &points, h, tol)?,
        fd_one(&v, "v", &points, h, tol)?,
        fd_one(&sum, "u_eps", &points, h, tol)?,
    ];
    let passed = fields.iter().all(|f| f.passed);
    Ok(FdCheckReport { tol, fields, passed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;

    const HERGLOTZ: &str = r#"
epsilon = 0.0
[u.herglotz]
k = 2.0
[v]
builtin = "constant"
value = 0.0
[seed]
generator = "icosphere"
radius = 1.5707963267948966
subdivisions = 1
"#;

    #[test]
    fn constant_density_passes() {
        let cfg = RunConfig::from_toml(HERGLOTZ, Path::new(".")).unwrap();
        let r = herglotz_check(&cfg).unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.fields.len(), 1);
        assert!(r.fields[0].sinc_max.unwrap() <= 1e-10);
    }

    #[test]
    fn coarse_rule_fails_closed_form() {
        let text = HERGLOTZ.replace("k = 2.0", "k = 2.0\nn_theta = 6\nn_phi = 6");
        let cfg = RunConfig::from_toml(&text, Path::new(".")).unwrap();
        let r = herglotz_check(&cfg).unwrap();
        assert_eq!(r.fields[0].sinc_ok, Some(false));
        assert!(r.fields[0].helmholtz_ok);
        assert!(!r.passed);
    }

    #[test]
    fn no_herglotz_block_is_config_error() {
        let text = HERGLOTZ.replace("[u.herglotz]\nk = 2.0", "[u]\nbuiltin = \"sphere\"");
        let cfg = RunConfig::from_toml(&text, Path::new(".")).unwrap();
        assert!(matches!(herglotz_check(&cfg), Err(CliError::Config(_))));
    }

    #[test]
    fn fd_check_on_expressions() {
        let text = r#"
epsilon = 0.1
[u]
expression = "x1^2 + x2^2 + x3^2 - 1"
[v]
expression = "sin(x1) * exp(x2)"
[seed]
generator = "icosphere"
subdivisions = 1
"#;
        let cfg = RunConfig::from_toml(text, Path::new(".")).unwrap();
        let r = fd_check_config(&cfg, 0.1).unwrap();
        assert!(r.passed, "{r:?}");
        let v = &r.fields[1];
        let order = v.observed_order.unwrap();
        assert!((order - 2.0).abs() < 0.2, "order {order}");
    }
}
