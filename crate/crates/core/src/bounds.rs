//! Sampled estimates of the admissibility constants that make the per-vertex
//! map a self-map and a contraction:
//!
//! * `c1 = min_S |∇u| / 2`
//! * `c1_eps = min_S |∇u_ε|`, which must stay `≥ c1`
//! * `c2 = sup |Nᵀ·Hess u_ε(s + τN)·N|` over samples and a τ grid
//! * `δ = c1 / c2` (self-mapping), divided by a safety factor and capped by
//!   the mesh spacing
//! * `c3 = sup (2|t||φ| + t²|∂φ/∂t|) / |g|` over `|t| ≤ δ`
//! * `ε_max = δ·c1 / (2 sup_S |v|)`, at most 1
//!
//! Suprema are taken over mesh vertices and a uniform offset grid, not
//! certified.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{Field, Perturbed, ScalarField};
use crate::surface::{SeedSurface, DEFAULT_GRADIENT_FLOOR};

/// Floor on `sup|v|` in the ε bound.
const TINY: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundsConfig {
    pub gradient_floor: f64,
    /// Offsets per sample for the c2 and c3 grids.
    pub n_t: usize,
    pub safety_factor: f64,
    /// The geometric cap on δ is `cap_factor · min edge length`.
    pub cap_factor: f64,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        BoundsConfig {
            gradient_floor: DEFAULT_GRADIENT_FLOOR,
            n_t: 9,
            safety_factor: 2.0,
            cap_factor: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GateFailure {
    C1Zero,
    ContractionExceeded,
    EpsilonTooLarge,
}

impl GateFailure {
    pub fn as_str(self) -> &'static str {
        match self {
            GateFailure::C1Zero => "c1_zero",
            GateFailure::ContractionExceeded => "contraction_exceeded",
            GateFailure::EpsilonTooLarge => "epsilon_too_large",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridInfo {
    pub vertices: usize,
    pub n_t: usize,
    /// Half-width of the τ window used for c2.
    pub c2_window: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub epsilon: f64,
    pub c1: f64,
    pub c1_flagged: bool,
    pub c1_eps: f64,
    pub c1_eps_ok: bool,
    pub c2_hat: f64,
    /// `c1 / c2_hat` before the safety factor and the cap.
    pub delta_uncapped: Option<f64>,
    pub delta_cap: f64,
    pub delta_max: Option<f64>,
    pub c3_hat: Option<f64>,
    /// `c3_hat / delta_max`.
    pub c4_hat: Option<f64>,
    pub epsilon_max: Option<f64>,
    /// The ε bound is a convention with slack, not a sharp threshold.
    pub epsilon_max_conservative: bool,
    pub grid: GridInfo,
    pub gates: Vec<GateFailure>,
}

impl BoundsReport {
    pub fn passed(&self) -> bool {
        self.gates.is_empty()
    }
}

fn require_normals(seed: &SeedSurface) -> Result<()> {
    if seed.normals_attached() {
        Ok(())
    } else {
        Err(Error::NormalsMissing)
    }
}

fn offsets(delta: f64, n_t: usize) -> impl Iterator<Item = f64> {
    let denom = (n_t - 1) as f64;
    (0..n_t).map(move |k| delta * ((2 * k) as f64 / denom - 1.0))
}

fn par_max(values: Vec<Result<f64>>) -> Result<f64> {
    values.into_iter().try_fold(0.0f64, |m, v| Ok(m.max(v?)))
}

/// Half the smallest gradient magnitude over the samples, and whether it is
/// below the floor (in which case the returned value is 0).
pub fn estimate_c1(seed: &SeedSurface, u: &ScalarField, gradient_floor: f64) -> Result<(f64, bool)> {
    let mins: Vec<Result<f64>> = seed
        .samples
        .par_iter()
        .map(|s| Ok(u.eval(s.s)?.gradient.norm()))
        .collect();
    let min = mins.into_iter().try_fold(f64::INFINITY, |m, v| Ok::<_, Error>(m.min(v?)))?;
    if !(min >= gradient_floor) {
        return Ok((0.0, true));
    }
    Ok((min / 2.0, false))
}

/// Smallest `|∇u_ε(s)|` over the samples.
pub fn min_perturbed_gradient(seed: &SeedSurface, u: &ScalarField, v: &ScalarField, epsilon: f64) -> Result<f64> {
    let field = Perturbed::new(u, v, epsilon);
    let mins: Vec<Result<f64>> = seed
        .samples
        .par_iter()
        .map(|s| Ok(field.eval(s.s)?.gradient.norm()))
        .collect();
    mins.into_iter().try_fold(f64::INFINITY, |m, v| Ok(m.min(v?)))
}

/// Whether `min_S |∇u_ε| ≥ c1`.
pub fn check_c1_eps(seed: &SeedSurface, u: &ScalarField, v: &ScalarField, epsilon: f64, c1: f64) -> Result<bool> {
    if !(c1 > 0.0) {
        return Err(Error::Degenerate("c1 must be positive".into()));
    }
    Ok(min_perturbed_gradient(seed, u, v, epsilon)? >= c1)
}

fn normal_curvature(field: &Perturbed<'_>, s: crate::geom::Point3, n: crate::geom::Vec3, tau: f64) -> Result<f64> {
    Ok(field.eval(s + n * tau)?.hessian.quadratic_form(n))
}

/// Largest `|Nᵀ·Hess u_ε(s + τN)·N|` over samples and `n_t` offsets in
/// `[-delta, delta]`.
pub fn estimate_c2(
    seed: &SeedSurface,
    u: &ScalarField,
    v: &ScalarField,
    epsilon: f64,
    delta: f64,
    n_t: usize,
) -> Result<f64> {
    require_normals(seed)?;
    if !(delta > 0.0) || n_t < 2 {
        return Err(Error::invalid("estimate_c2 needs delta > 0 and n_t >= 2"));
    }
    let field = Perturbed::new(u, v, epsilon);
    let per_sample: Vec<Result<f64>> = seed
        .samples
        .par_iter()
        .map(|s| {
            offsets(delta, n_t).try_fold(0.0f64, |m, tau| Ok(m.max(normal_curvature(&field, s.s, s.normal, tau)?.abs())))
        })
        .collect();
    par_max(per_sample)
}

/// `δ = c1 / c2_hat`, limited to `cap`. Returns `cap` when `c2_hat` is zero.
pub fn admissible_delta(c1: f64, c2_hat: f64, cap: f64) -> Result<f64> {
    if !(c1 > 0.0) {
        return Err(Error::Degenerate(format!("c1 = {c1} leaves no admissible delta")));
    }
    if c2_hat <= 0.0 {
        return Ok(cap);
    }
    Ok((c1 / c2_hat).min(cap))
}

/// Empirical contraction constant over `grid` offsets in `[-delta, delta]`,
/// with `∂φ/∂t` from central differences.
pub fn estimate_c3(
    seed: &SeedSurface,
    u: &ScalarField,
    v: &ScalarField,
    epsilon: f64,
    delta: f64,
    grid: usize,
) -> Result<f64> {
    require_normals(seed)?;
    if !(delta > 0.0) || grid < 2 {
        return Err(Error::invalid("estimate_c3 needs delta > 0 and grid >= 2"));
    }
    let field = Perturbed::new(u, v, epsilon);
    let h = 1e-3 * delta;
    let per_sample: Vec<Result<f64>> = seed
        .samples
        .par_iter()
        .map(|s| {
            let g = field.eval(s.s)?.gradient.dot(s.normal).abs();
            if g == 0.0 {
                return Ok(f64::INFINITY);
            }
            offsets(delta, grid).try_fold(0.0f64, |m, t| {
                let phi = normal_curvature(&field, s.s, s.normal, t)?;
                let dphi = (normal_curvature(&field, s.s, s.normal, t + h)?
                    - normal_curvature(&field, s.s, s.normal, t - h)?)
                    / (2.0 * h);
                Ok(m.max((2.0 * t.abs() * phi.abs() + t * t * dphi.abs()) / g))
            })
        })
        .collect();
    par_max(per_sample)
}

/// `ε_max = δ·c1 / (2 sup_S |v|)`, capped at 1. Keeps the first-order offset
/// inside half the containment ball.
pub fn admissible_epsilon(seed: &SeedSurface, v: &ScalarField, delta: f64, c1: f64) -> Result<f64> {
    if !(c1 > 0.0 && delta > 0.0) {
        return Err(Error::Degenerate("admissible_epsilon needs c1 > 0 and delta > 0".into()));
    }
    let sups: Vec<Result<f64>> = seed.samples.par_iter().map(|s| Ok(v.value(s.s)?.abs())).collect();
    let sup_v = par_max(sups)?;
    Ok((0.5 * delta * c1 / sup_v.max(TINY)).min(1.0))
}

/// Runs every estimate and evaluates the gates for the given ε.
pub fn compute_bounds(
    seed: &SeedSurface,
    u: &ScalarField,
    v: &ScalarField,
    epsilon: f64,
    cfg: &BoundsConfig,
) -> Result<BoundsReport> {
    require_normals(seed)?;
    if !(cfg.safety_factor >= 1.0) || !(cfg.cap_factor > 0.0) {
        return Err(Error::invalid("safety_factor must be >= 1 and cap_factor > 0"));
    }
    let mut gates = Vec::new();
    let (c1, c1_flagged) = estimate_c1(seed, u, cfg.gradient_floor)?;
    let c1_eps = min_perturbed_gradient(seed, u, v, epsilon)?;
    let c1_eps_ok = !c1_flagged && c1_eps >= c1;
    let delta_cap = cfg.cap_factor * seed.min_edge_length();
    let c2_hat = estimate_c2(seed, u, v, epsilon, delta_cap, cfg.n_t)?;

    let mut report = BoundsReport {
        epsilon,
        c1,
        c1_flagged,
        c1_eps,
        c1_eps_ok,
        c2_hat,
        delta_uncapped: None,
        delta_cap,
        delta_max: None,
        c3_hat: None,
        c4_hat: None,
        epsilon_max: None,
        epsilon_max_conservative: true,
        grid: GridInfo {
            vertices: seed.samples.len(),
            n_t: cfg.n_t,
            c2_window: delta_cap,
        },
        gates: Vec::new(),
    };
    if c1_flagged {
        report.gates.push(GateFailure::C1Zero);
        return Ok(report);
    }

    let uncapped = if c2_hat > 0.0 { c1 / c2_hat } else { f64::INFINITY };
    let delta_max = admissible_delta(c1, c2_hat * cfg.safety_factor, delta_cap)?;
    let c3_hat = estimate_c3(seed, u, v, epsilon, delta_max, cfg.n_t)?;
    let epsilon_max = admissible_epsilon(seed, v, delta_max, c1)?;

    if !(c3_hat < 1.0) {
        gates.push(GateFailure::ContractionExceeded);
    }
    if epsilon > epsilon_max || !c1_eps_ok {
        gates.push(GateFailure::EpsilonTooLarge);
    }
    report.delta_uncapped = uncapped.is_finite().then_some(uncapped);
    report.delta_max = Some(delta_max);
    report.c3_hat = Some(c3_hat);
    report.c4_hat = Some(c3_hat / delta_max);
    report.epsilon_max = Some(epsilon_max);
    report.gates = gates;
    Ok(report)
}
