use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use zerosurf_cli::checks::{fd_check_config, herglotz_check};
use zerosurf_cli::pipeline::{effective_epsilon, prepare, write_outputs};
use zerosurf_cli::report::{gate_exit, status_name};
use zerosurf_cli::{run, CliError, RunConfig, RunOptions, EXIT_OK, EXIT_SOLVE};

/// Perturb the zero surface of u to that of u + εv.
#[derive(Parser)]
#[command(name = "zerosurf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline: validate, bounds, solve, oracle; writes mesh and report.
    Perturb(Common),
    /// Gates only; prints the bounds report.
    Bounds(Common),
    /// Solve and print the per-vertex oracle deviation table.
    Oracle(Common),
    /// Quadrature, Helmholtz and closed-form checks for herglotz fields.
    HerglotzCheck(Common),
    /// Exact derivatives against central differences.
    FdCheck(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// Run configuration (TOML).
    #[arg(value_name = "CONFIG", required_unless_present = "config")]
    path: Option<PathBuf>,
    #[arg(long, conflicts_with = "path")]
    config: Option<PathBuf>,
    /// Override the configured ε.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Proceed past failed gates.
    #[arg(long)]
    force: bool,
    /// Write the mesh and per-vertex statuses even when some vertices fail.
    #[arg(long)]
    partial: bool,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Output directory, overriding the configured one.
    #[arg(long)]
    output: Option<PathBuf>,
}

impl Common {
    fn config_path(&self) -> PathBuf {
        self.config.clone().or_else(|| self.path.clone()).expect("clap enforces a config")
    }

    fn options(&self) -> RunOptions {
        RunOptions {
            epsilon: self.epsilon,
            force: self.force,
            partial: self.partial,
            threads: self.threads,
        }
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "{text}").map_err(|e| CliError::Io(e.to_string()))
}

fn finish(code: i32, line: String) -> Result<i32, CliError> {
    if code == EXIT_OK {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
    Ok(code)
}

fn perturb(args: &Common, cfg: &RunConfig) -> Result<i32, CliError> {
    let outcome = run(cfg, &args.options())?;
    let dir = args.output.clone().unwrap_or_else(|| cfg.output.dir.clone());
    write_outputs(&outcome, &dir, args.partial, cfg.output.write_seed)?;
    finish(outcome.report.status.exit_code(), outcome.report.status_line())
}

fn bounds(args: &Common, cfg: &RunConfig) -> Result<i32, CliError> {
    #[derive(Serialize)]
    struct BoundsOut<'a> {
        gates: &'a [String],
        degenerate_vertices: &'a [usize],
        validation: &'a zerosurf::ValidationReport,
        bounds: &'a zerosurf::BoundsReport,
    }
    let prep = prepare(cfg, effective_epsilon(cfg, &args.options())?)?;
    print_json(&BoundsOut {
        gates: &prep.gates,
        degenerate_vertices: &prep.degenerate,
        validation: &prep.validation,
        bounds: &prep.bounds,
    })?;
    let line = match prep.gates.first() {
        Some(g) => format!("status=gate_failure cause={g}"),
        None => "status=ok".to_string(),
    };
    finish(gate_exit(&prep.gates), line)
}

fn oracle(args: &Common, cfg: &RunConfig) -> Result<i32, CliError> {
    let mut cfg = cfg.clone();
    cfg.oracle.enabled = true;
    let outcome = run(&cfg, &args.options())?;
    if let Some(dir) = &args.output {
        write_outputs(&outcome, dir, args.partial, cfg.output.write_seed)?;
    }
    if let (Some(rows), Some(p)) = (&outcome.oracle_rows, &outcome.perturbed) {
        let mut out = std::io::stdout().lock();
        let w = |e: std::io::Error| CliError::Io(e.to_string());
        writeln!(out, "vertex_id\tstatus\tt_solver\tt_oracle\tdeviation").map_err(w)?;
        for (row, solve) in rows.iter().zip(&p.solves) {
            let opt = |x: Option<f64>| x.map_or("none".to_string(), |v| format!("{v:.17e}"));
            writeln!(
                out,
                "{}\t{}\t{:.17e}\t{}\t{}",
                row.vertex_id,
                status_name(solve.status),
                row.t_solver,
                opt(row.t_oracle),
                opt(row.deviation)
            )
            .map_err(w)?;
        }
    }
    let r = &outcome.report;
    let mut line = r.status_line();
    if let Some(o) = &r.oracle {
        match o.max_deviation {
            Some(d) => line.push_str(&format!(" max_deviation={d:e}")),
            None => line.push_str(" max_deviation=none"),
        }
    }
    finish(r.status.exit_code(), line)
}

fn herglotz(cfg: &RunConfig) -> Result<i32, CliError> {
    let r = herglotz_check(cfg)?;
    print_json(&r)?;
    let failed: Vec<&str> = r.fields.iter().filter(|f| !f.passed).map(|f| f.field).collect();
    if failed.is_empty() {
        finish(EXIT_OK, "status=ok".into())
    } else {
        finish(EXIT_SOLVE, format!("status=check_failed cause=herglotz fields={}", failed.join(",")))
    }
}

fn fd(args: &Common, cfg: &RunConfig) -> Result<i32, CliError> {
    let r = fd_check_config(cfg, effective_epsilon(cfg, &args.options())?)?;
    print_json(&r)?;
    let failed: Vec<&str> = r.fields.iter().filter(|f| !f.passed).map(|f| f.field).collect();
    if failed.is_empty() {
        finish(EXIT_OK, "status=ok".into())
    } else {
        finish(EXIT_SOLVE, format!("status=check_failed cause=fd fields={}", failed.join(",")))
    }
}

fn dispatch(command: &Command) -> Result<i32, CliError> {
    let args = match command {
        Command::Perturb(a) | Command::Bounds(a) | Command::Oracle(a) | Command::HerglotzCheck(a) | Command::FdCheck(a) => a,
    };
    let cfg = RunConfig::load(&args.config_path())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    pool.install(|| match command {
        Command::Perturb(a) => perturb(a, &cfg),
        Command::Bounds(a) => bounds(a, &cfg),
        Command::Oracle(a) => oracle(a, &cfg),
        Command::HerglotzCheck(_) => herglotz(&cfg),
        Command::FdCheck(a) => fd(a, &cfg),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match dispatch(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", e.status_line());
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
