//! validate → bounds → solve → oracle, and the files it leaves behind.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use zerosurf::oracle::{oracle_table, OracleRow};
use zerosurf::surface::{attach_normals_with_fallback, obj};
use zerosurf::{compute_bounds, solve_surface, validate_seed, BoundsReport, PerturbedSurface, ScalarField, SeedSurface, ValidationReport};

use crate::config::{RunConfig, Which};
use crate::report::{
    status_name, FieldNames, OracleSummary, RunReport, Runtime, SeedSummary, SolveSummary, Status, VertexRecord,
};
use crate::CliError;

pub const SEED_INVALID: &str = "seed_invalid";

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub epsilon: Option<f64>,
    pub force: bool,
    pub partial: bool,
    pub threads: usize,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: RunReport,
    pub seed: SeedSurface,
    pub perturbed: Option<PerturbedSurface>,
    pub oracle_rows: Option<Vec<OracleRow>>,
}

/// Fields, oriented seed and gate verdicts, everything before the solve.
pub struct Prepared {
    pub epsilon: f64,
    pub u: ScalarField,
    pub v: ScalarField,
    pub seed: SeedSurface,
    pub degenerate: Vec<usize>,
    pub validation: ValidationReport,
    pub bounds: BoundsReport,
    pub gates: Vec<String>,
    pub warnings: Vec<String>,
}

struct Clock(Vec<(String, f64)>);

impl Clock {
    fn time<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.0.push((name.to_string(), start.elapsed().as_secs_f64() * 1e3));
        out
    }
}

pub fn effective_epsilon(cfg: &RunConfig, opts: &RunOptions) -> Result<f64, CliError> {
    let eps = opts.epsilon.unwrap_or(cfg.epsilon);
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(CliError::Config(format!("epsilon must be finite and >= 0, got {eps}")));
    }
    Ok(eps)
}

pub fn prepare(cfg: &RunConfig, epsilon: f64) -> Result<Prepared, CliError> {
    let u = cfg.field(Which::U)?;
    let v = cfg.field(Which::V)?;
    let bare = cfg.seed()?;
    let floor = cfg.solver.gradient_floor;
    let (seed, degenerate) = attach_normals_with_fallback(&bare, &u, floor)?;
    // Mesh normals at degenerate vertices say nothing about orientation.
    let validation = if degenerate.is_empty() {
        validate_seed(&seed, &u, cfg.seed.tol)
    } else {
        validate_seed(&bare, &u, cfg.seed.tol)
    };
    let bounds = compute_bounds(&seed, &u, &v, epsilon, &cfg.bounds_config())?;

    let mut gates: Vec<String> = Vec::new();
    let mut rest = bounds.gates.iter().map(|g| g.as_str().to_string());
    if bounds.c1_flagged {
        gates.extend(rest.next());
    }
    if !validation.passed {
        gates.push(SEED_INVALID.into());
    }
    gates.extend(rest);

    let mut warnings = Vec::new();
    if validation.components > 1 {
        warnings.push(format!("seed has {} connected components", validation.components));
    }
    if !degenerate.is_empty() {
        warnings.push(format!("{} vertices have a vanishing gradient", degenerate.len()));
    }
    Ok(Prepared {
        epsilon,
        u,
        v,
        seed,
        degenerate,
        validation,
        bounds,
        gates,
        warnings,
    })
}

/// The δ handed to the solver and the oracle.
pub fn solve_delta(cfg: &RunConfig, bounds: &BoundsReport) -> f64 {
    cfg.solver.delta.or(bounds.delta_max).unwrap_or(bounds.delta_cap)
}

pub fn run(cfg: &RunConfig, opts: &RunOptions) -> Result<RunOutcome, CliError> {
    let mut clock = Clock(Vec::new());
    let epsilon = effective_epsilon(cfg, opts)?;
    let prep = clock.time("validate_and_bounds", || prepare(cfg, epsilon))?;
    let mut report = RunReport {
        status: Status::Ok,
        cause: None,
        epsilon,
        forced: opts.force,
        fields: FieldNames {
            u: prep.u.descriptor().to_string(),
            v: prep.v.descriptor().to_string(),
        },
        seed: SeedSummary {
            vertices: prep.seed.samples.len(),
            triangles: prep.seed.triangles.len(),
            euler_characteristic: prep.seed.euler_characteristic,
            min_edge_length: prep.seed.min_edge_length(),
        },
        validation: prep.validation.clone(),
        degenerate_vertices: prep.degenerate.clone(),
        bounds: prep.bounds.clone(),
        gates: prep.gates.clone(),
        delta_used: None,
        solve: None,
        oracle: None,
        vertices: None,
        warnings: prep.warnings.clone(),
        runtime: Runtime {
            threads: opts.threads,
            ..Runtime::default()
        },
    };

    if !prep.gates.is_empty() && !opts.force {
        report.status = Status::GateFailure;
        report.cause = Some(prep.gates[0].clone());
        finish(&mut report, clock);
        return Ok(RunOutcome {
            report,
            seed: prep.seed,
            perturbed: None,
            oracle_rows: None,
        });
    }

    let delta = solve_delta(cfg, &prep.bounds);
    report.delta_used = Some(delta);
    let solve_opts = cfg.perturb_options(epsilon, delta)?;
    let perturbed = clock.time("solve", || solve_surface(&prep.seed, &prep.u, &prep.v, &solve_opts))?;
    report.solve = Some(SolveSummary::from_surface(&perturbed));

    let oracle_rows = if cfg.oracle.enabled || opts.force {
        let rows = clock.time("oracle", || {
            oracle_table(&perturbed, &prep.seed, &prep.u, &prep.v, epsilon, delta, cfg.oracle.tol)
        })?;
        let converged: Vec<bool> = perturbed.solves.iter().map(|s| s.converged()).collect();
        let summary = OracleSummary::from_rows(&rows, &converged, cfg.oracle.tol, cfg.oracle.max_deviation);
        if summary.widened > 0 {
            report
                .warnings
                .push(format!("{} oracle roots lie outside [-delta, delta]", summary.widened));
        }
        report.oracle = Some(summary);
        Some(rows)
    } else {
        None
    };

    if opts.partial {
        report.vertices = Some(
            perturbed
                .solves
                .iter()
                .enumerate()
                .map(|(i, s)| VertexRecord {
                    vertex_id: s.vertex_id,
                    status: status_name(s.status),
                    t: s.t,
                    iterations: s.iterations,
                    residual: s.residual,
                    contraction_ratio: s.contraction_ratio,
                    t_oracle: oracle_rows.as_ref().and_then(|r| r[i].t_oracle),
                })
                .collect(),
        );
    }

    let oracle_ok = report.oracle.as_ref().is_none_or(|o| o.passed);
    if !perturbed.is_complete() {
        report.status = Status::SolveFailed;
        report.cause = Some(solve_cause(&perturbed, report.oracle.as_ref()));
    } else if !oracle_ok {
        let o = report.oracle.as_ref().expect("oracle ran");
        report.status = Status::OracleMismatch;
        report.cause = Some(match o.max_deviation {
            Some(d) if d > o.max_deviation_allowed => format!("deviation={d:e}"),
            _ => format!("no_bracket vertices={}", o.no_bracket),
        });
    } else if !prep.gates.is_empty() {
        report.status = Status::OkForced;
        report.cause = Some(format!("forced_past={}", prep.gates.join(",")));
    }
    finish(&mut report, clock);
    Ok(RunOutcome {
        report,
        seed: prep.seed,
        perturbed: Some(perturbed),
        oracle_rows,
    })
}

fn solve_cause(p: &PerturbedSurface, oracle: Option<&OracleSummary>) -> String {
    let s = SolveSummary::from_surface(p);
    let (worst, _) = s
        .status_counts
        .iter()
        .filter(|(k, _)| k.as_str() != "converged")
        .max_by_key(|(_, n)| **n)
        .expect("some vertex failed");
    let mut cause = format!("{worst} failed={}/{}", p.failed_vertices.len(), s.vertex_count);
    if let Some(o) = oracle {
        cause.push_str(&format!(" oracle_no_bracket={}", o.no_bracket));
    }
    cause
}

fn finish(report: &mut RunReport, clock: Clock) {
    report.runtime.timings_ms = clock.0.into_iter().collect();
}

pub const REPORT_FILE: &str = "report.json";
pub const MESH_FILE: &str = "perturbed.obj";
pub const SEED_FILE: &str = "seed_validated.obj";

/// Writes `report.json`, and `perturbed.obj` when the solve completed (or
/// always with `partial`). A stale mesh from an earlier run is removed when no
/// mesh is produced.
pub fn write_outputs(outcome: &RunOutcome, dir: &Path, partial: bool, write_seed: bool) -> Result<Vec<PathBuf>, CliError> {
    let io = |p: &Path, e: std::io::Error| CliError::Io(format!("{}: {e}", p.display()));
    fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let mut written = Vec::new();

    let report_path = dir.join(REPORT_FILE);
    let mut json = serde_json::to_string_pretty(&outcome.report).map_err(|e| CliError::Io(e.to_string()))?;
    json.push('\n');
    fs::write(&report_path, json).map_err(|e| io(&report_path, e))?;
    written.push(report_path);

    let mesh_path = dir.join(MESH_FILE);
    match &outcome.perturbed {
        Some(p) if p.is_complete() || partial => {
            fs::write(&mesh_path, obj::write_obj(&p.points, &p.triangles)).map_err(|e| io(&mesh_path, e))?;
            written.push(mesh_path);
        }
        _ => {
            if mesh_path.exists() {
                fs::remove_file(&mesh_path).map_err(|e| io(&mesh_path, e))?;
            }
        }
    }

    if write_seed && outcome.report.validation.passed {
        let seed_path = dir.join(SEED_FILE);
        let pts: Vec<_> = outcome.seed.positions().collect();
        fs::write(&seed_path, obj::write_obj(&pts, &outcome.seed.triangles)).map_err(|e| io(&seed_path, e))?;
        written.push(seed_path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> RunConfig {
        RunConfig::from_toml(text, Path::new(".")).unwrap()
    }

    const SPHERE: &str = r#"
epsilon = 0.1
[u]
builtin = "sphere"
[v]
builtin = "constant"
value = 1.0
[seed]
generator = "icosphere"
subdivisions = 1
[solver]
delta = 0.5
"#;

    #[test]
    fn sphere_run_hits_closed_form() {
        let out = run(&cfg(SPHERE), &RunOptions::default()).unwrap();
        assert_eq!(out.report.status, Status::Ok, "{:?}", out.report.cause);
        let p = out.perturbed.unwrap();
        for x in &p.points {
            assert!((x.norm() - 0.9f64.sqrt()).abs() < 1e-12);
        }
        assert!(out.report.oracle.unwrap().max_deviation.unwrap() < 1e-8);
    }

    #[test]
    fn oversized_epsilon_is_gated() {
        let opts = RunOptions {
            epsilon: Some(0.3),
            ..RunOptions::default()
        };
        let out = run(&cfg(SPHERE), &opts).unwrap();
        assert_eq!(out.report.status, Status::GateFailure);
        assert_eq!(out.report.cause.as_deref(), Some("epsilon_too_large"));
        assert!(out.perturbed.is_none());
        let forced = run(&cfg(SPHERE), &RunOptions { force: true, ..opts }).unwrap();
        assert_eq!(forced.report.status, Status::OkForced);
    }

    #[test]
    fn bad_seed_is_gated_before_bounds() {
        let text = SPHERE.replace("subdivisions = 1", "subdivisions = 1\nradius = 1.01");
        let out = run(&cfg(&text), &RunOptions::default()).unwrap();
        assert_eq!(out.report.gates[0], SEED_INVALID);
        assert_eq!(out.report.status, Status::GateFailure);
    }

    #[test]
    fn gate_failure_removes_stale_mesh() {
        let dir = tempfile::tempdir().unwrap();
        let ok = run(&cfg(SPHERE), &RunOptions::default()).unwrap();
        write_outputs(&ok, dir.path(), false, true).unwrap();
        assert!(dir.path().join(MESH_FILE).exists());
        assert!(dir.path().join(SEED_FILE).exists());
        let gated = run(
            &cfg(SPHERE),
            &RunOptions {
                epsilon: Some(0.3),
                ..RunOptions::default()
            },
        )
        .unwrap();
        write_outputs(&gated, dir.path(), false, false).unwrap();
        assert!(!dir.path().join(MESH_FILE).exists());
        let text = fs::read_to_string(dir.path().join(REPORT_FILE)).unwrap();
        assert!(text.contains("\"gate_failure\""));
    }
}
