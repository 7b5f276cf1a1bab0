//! The machine-readable run report written as `report.json`.
//!
//! Everything outside `runtime` depends only on the configuration and inputs.

use std::collections::BTreeMap;

use serde::Serialize;
use zerosurf::oracle::OracleRow;
use zerosurf::{BoundsReport, PerturbedSurface, SolveStatus, ValidationReport};

use crate::{EXIT_GATE, EXIT_OK, EXIT_SOLVE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    /// Every gate passed, every vertex converged and the oracle agreed.
    Ok,
    /// Like `Ok`, but at least one gate failed and `--force` overrode it.
    OkForced,
    GateFailure,
    SolveFailed,
    OracleMismatch,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::OkForced => "ok_forced",
            Status::GateFailure => "gate_failure",
            Status::SolveFailed => "solve_failed",
            Status::OracleMismatch => "oracle_mismatch",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok | Status::OkForced => EXIT_OK,
            Status::GateFailure => EXIT_GATE,
            Status::SolveFailed | Status::OracleMismatch => EXIT_SOLVE,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub status: Status,
    pub cause: Option<String>,
    pub epsilon: f64,
    pub forced: bool,
    pub fields: FieldNames,
    pub seed: SeedSummary,
    pub validation: ValidationReport,
    /// Vertices where `|∇u|` is below the gradient floor.
    pub degenerate_vertices: Vec<usize>,
    pub bounds: BoundsReport,
    /// Gates that failed, in evaluation order.
    pub gates: Vec<String>,
    pub delta_used: Option<f64>,
    pub solve: Option<SolveSummary>,
    pub oracle: Option<OracleSummary>,
    /// Per-vertex records, present with `--partial`.
    pub vertices: Option<Vec<VertexRecord>>,
    pub warnings: Vec<String>,
    pub runtime: Runtime,
}

impl RunReport {
    pub fn status_line(&self) -> String {
        match &self.cause {
            Some(c) => format!("status={} cause={c}", self.status.as_str()),
            None => format!("status={}", self.status.as_str()),
        }
    }

    /// The report with `runtime` blanked, for comparing runs.
    pub fn numerics(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("runtime");
        }
        v
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FieldNames {
    pub u: String,
    pub v: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedSummary {
    pub vertices: usize,
    pub triangles: usize,
    pub euler_characteristic: i64,
    pub min_edge_length: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveSummary {
    pub vertex_count: usize,
    pub converged: usize,
    pub failed_vertices: Vec<usize>,
    pub status_counts: BTreeMap<String, usize>,
    pub max_residual: f64,
    pub max_iterations: usize,
    pub max_contraction_ratio: Option<f64>,
    pub max_abs_t: f64,
}

impl SolveSummary {
    pub fn from_surface(p: &PerturbedSurface) -> Self {
        let mut status_counts = BTreeMap::new();
        for s in &p.solves {
            *status_counts.entry(status_name(s.status).to_string()).or_insert(0) += 1;
        }
        SolveSummary {
            vertex_count: p.solves.len(),
            converged: p.solves.iter().filter(|s| s.converged()).count(),
            failed_vertices: p.failed_vertices.clone(),
            status_counts,
            max_residual: p.max_residual(),
            max_iterations: p.max_iterations(),
            max_contraction_ratio: p.max_contraction_ratio(),
            max_abs_t: p.max_abs_t(),
        }
    }
}

pub fn status_name(s: SolveStatus) -> &'static str {
    match s {
        SolveStatus::Converged => "converged",
        SolveStatus::MaxIter => "max_iter",
        SolveStatus::LeftM => "left_m",
        SolveStatus::DegenerateGradient => "degenerate_gradient",
        SolveStatus::NoBracket => "no_bracket",
        SolveStatus::DomainError => "domain_error",
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleSummary {
    pub tol: f64,
    pub max_deviation_allowed: f64,
    /// Over vertices where both the solver converged and a root was bracketed.
    pub max_deviation: Option<f64>,
    pub compared: usize,
    pub no_bracket: usize,
    pub no_bracket_vertices: Vec<usize>,
    /// Roots found only after widening the bracket to `2δ`.
    pub widened: usize,
    pub passed: bool,
}

impl OracleSummary {
    pub fn from_rows(rows: &[OracleRow], converged: &[bool], tol: f64, allowed: f64) -> Self {
        let mut max: Option<f64> = None;
        let mut compared = 0;
        let mut no_bracket_vertices = Vec::new();
        for (row, &ok) in rows.iter().zip(converged) {
            match row.deviation {
                None => no_bracket_vertices.push(row.vertex_id),
                Some(d) if ok => {
                    compared += 1;
                    max = Some(max.map_or(d, |m: f64| m.max(d)));
                }
                Some(_) => {}
            }
        }
        let converged_unbracketed = rows.iter().zip(converged).any(|(r, &ok)| ok && r.deviation.is_none());
        OracleSummary {
            tol,
            max_deviation_allowed: allowed,
            max_deviation: max,
            compared,
            no_bracket: no_bracket_vertices.len(),
            no_bracket_vertices,
            widened: rows.iter().filter(|r| r.widened).count(),
            passed: !converged_unbracketed && max.is_none_or(|m| m <= allowed),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VertexRecord {
    pub vertex_id: usize,
    pub status: &'static str,
    pub t: f64,
    pub iterations: usize,
    pub residual: f64,
    pub contraction_ratio: Option<f64>,
    pub t_oracle: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Runtime {
    pub threads: usize,
    pub timings_ms: BTreeMap<String, f64>,
}

pub fn gate_exit(gates: &[String]) -> i32 {
    if gates.is_empty() {
        EXIT_OK
    } else {
        EXIT_GATE
    }
}
