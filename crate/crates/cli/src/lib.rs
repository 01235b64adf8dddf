//! Command-line frontend for the interior point solver: problem file formats,
//! run configuration and machine-readable reports.

pub mod dimacs;
pub mod lpjson;

use ipm_core::flow::{random_network, solve_generalized_mcf, solve_max_flow, solve_min_cost_flow, FlowSolution};
use ipm_core::linalg::BackendChoice;
use ipm_core::pathfollow::{lp_solve, SolveReport, SolverConfig};
use ipm_core::Mode;
use serde::Serialize;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

pub use dimacs::{emit_dimacs, parse_dimacs_flow, parse_dimacs_problem, DimacsProblem, ProblemKind};
pub use lpjson::{emit_lp_json, parse_lp_json};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unsupported feature: {0}")]
    UnsupportedFeature(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid problem: {0}")]
    Invalid(ipm_core::Error),
    #[error("{0}")]
    Usage(String),
    #[error("cannot read input: {0}")]
    Io(#[from] std::io::Error),
    #[error("solver failed: {0}")]
    Solver(ipm_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Solver(_) => 3,
            _ => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    SolveLp,
    MaxFlow,
    MinCostFlow,
    GenMcf,
    Bench,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::SolveLp => "solve-lp",
            Command::MaxFlow => "max-flow",
            Command::MinCostFlow => "min-cost-flow",
            Command::GenMcf => "gen-mcf",
            Command::Bench => "bench",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub input: Option<PathBuf>,
    pub eps: f64,
    pub mode: Mode,
    pub seed: u64,
    pub backend: BackendChoice,
    pub format: Format,
    pub max_iters: Option<usize>,
    /// Delivered flow for `gen-mcf`; overrides the demand in the file.
    pub target: Option<f64>,
    /// Vertex counts for `bench`.
    pub sizes: Vec<usize>,
}

impl RunConfig {
    pub fn new(command: Command, input: Option<PathBuf>) -> Self {
        RunConfig {
            command,
            input,
            eps: 0.1,
            mode: Mode::Practical,
            seed: 0,
            backend: BackendChoice::Auto,
            format: Format::Text,
            max_iters: None,
            target: None,
            sizes: vec![16, 32, 64, 128],
        }
    }

    fn solver_config(&self) -> SolverConfig {
        let mut cfg = match self.mode {
            Mode::Paper => SolverConfig::paper(),
            Mode::Practical => SolverConfig::practical(),
        };
        cfg.backend = self.backend;
        if let Some(k) = self.max_iters {
            cfg.max_iters = k;
        }
        cfg
    }
}

#[derive(Serialize)]
struct Report {
    schema: u32,
    command: &'static str,
    mode: String,
    seed: u64,
    eps: f64,
    objective: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cost: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    x: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    flow: Option<Vec<f64>>,
    iterations: usize,
    solves: usize,
    final_delta: f64,
    gap_bound: f64,
    infeasibility: f64,
    wall_time_s: f64,
}

impl Report {
    fn new(cfg: &RunConfig, rep: &SolveReport) -> Self {
        Report {
            schema: SCHEMA_VERSION,
            command: cfg.command.name(),
            mode: cfg.mode.to_string(),
            seed: cfg.seed,
            eps: cfg.eps,
            objective: rep.objective,
            value: None,
            cost: None,
            x: None,
            flow: None,
            iterations: rep.iterations,
            solves: rep.solves,
            final_delta: rep.final_delta,
            gap_bound: rep.gap_bound,
            infeasibility: rep.infeasibility,
            wall_time_s: 0.0,
        }
    }

    fn from_flow(cfg: &RunConfig, sol: FlowSolution) -> Self {
        Report { value: Some(sol.value), cost: Some(sol.cost), flow: Some(sol.flow), ..Report::new(cfg, &sol.report) }
    }

    fn write(&self, format: Format, out: &mut dyn Write) -> std::io::Result<()> {
        match format {
            Format::Json => writeln!(out, "{}", serde_json::to_string(self).expect("report serializes")),
            Format::Text => {
                writeln!(out, "command        {}", self.command)?;
                writeln!(out, "mode           {}", self.mode)?;
                writeln!(out, "objective      {:.10e}", self.objective)?;
                if let (Some(v), Some(c)) = (self.value, self.cost) {
                    writeln!(out, "flow value     {v}")?;
                    writeln!(out, "flow cost      {c}")?;
                }
                writeln!(out, "iterations     {}", self.iterations)?;
                writeln!(out, "solves         {}", self.solves)?;
                writeln!(out, "final delta    {:.3e}", self.final_delta)?;
                writeln!(out, "gap bound      {:.3e}", self.gap_bound)?;
                writeln!(out, "infeasibility  {:.3e}", self.infeasibility)?;
                writeln!(out, "wall time      {:.3}s", self.wall_time_s)
            }
        }
    }
}

fn read_input(cfg: &RunConfig) -> Result<String, CliError> {
    let path = cfg
        .input
        .as_ref()
        .ok_or_else(|| CliError::Usage(format!("{} needs an input file", cfg.command.name())))?;
    Ok(std::fs::read_to_string(path)?)
}

fn solve(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    if !(cfg.eps > 0.0 && cfg.eps.is_finite()) {
        return Err(CliError::Usage(format!("--eps must be positive, got {}", cfg.eps)));
    }
    let solver = cfg.solver_config();
    let start = Instant::now();
    let mut report = match cfg.command {
        Command::SolveLp => {
            let (lp, x0) = parse_lp_json(&read_input(cfg)?)?;
            let x0 = x0.ok_or_else(|| {
                CliError::Usage(
                    "the LP file has no \"x0\": supply a strictly interior point with A^T x0 = b, \
                     for example by solving an auxiliary phase-one problem"
                        .into(),
                )
            })?;
            let (x, rep) = lp_solve(&lp, &x0, cfg.eps, &solver, cfg.seed).map_err(CliError::Solver)?;
            Report { x: Some(x), ..Report::new(cfg, &rep) }
        }
        Command::MaxFlow => {
            let net = parse_dimacs_flow(&read_input(cfg)?)?;
            Report::from_flow(cfg, solve_max_flow(&net, cfg.eps, &solver, cfg.seed).map_err(CliError::Solver)?)
        }
        Command::MinCostFlow => {
            let net = parse_dimacs_flow(&read_input(cfg)?)?;
            Report::from_flow(cfg, solve_min_cost_flow(&net, cfg.eps, &solver, cfg.seed).map_err(CliError::Solver)?)
        }
        Command::GenMcf => {
            let problem = parse_dimacs_problem(&read_input(cfg)?)?;
            let f = cfg
                .target
                .or(problem.target.map(|t| t as f64))
                .ok_or_else(|| CliError::Usage("gen-mcf needs --target or a sink demand line `n id -F`".into()))?;
            let sol = solve_generalized_mcf(&problem.network, f, cfg.eps, &solver, cfg.seed).map_err(CliError::Solver)?;
            Report::from_flow(cfg, sol)
        }
        Command::Bench => return bench(cfg, &solver, out),
    };
    report.wall_time_s = start.elapsed().as_secs_f64();
    report.write(cfg.format, out)?;
    Ok(())
}

fn bench(cfg: &RunConfig, solver: &SolverConfig, out: &mut dyn Write) -> Result<(), CliError> {
    writeln!(out, "n,m,iterations,solves")?;
    for &n in &cfg.sizes {
        if n < 2 {
            return Err(CliError::Usage(format!("bench sizes must be at least 2, got {n}")));
        }
        let net = random_network(n, 4 * n, 20, 10, cfg.seed.wrapping_add(n as u64));
        let sol = solve_min_cost_flow(&net, cfg.eps, solver, cfg.seed).map_err(CliError::Solver)?;
        log::info!("bench n = {n}: {} iterations", sol.report.iterations);
        writeln!(out, "{n},{},{},{}", net.m(), sol.report.iterations, sol.report.solves)?;
    }
    Ok(())
}

/// Run one command, writing the report to `out` and diagnostics to `err`.
/// Returns the process exit code.
pub fn run(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match solve(cfg, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
