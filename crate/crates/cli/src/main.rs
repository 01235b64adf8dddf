use clap::{Args, Parser, Subcommand, ValueEnum};
use ipm_cli::{run, Command, Format, RunConfig};
use ipm_core::linalg::BackendChoice;
use ipm_core::Mode;
use std::path::PathBuf;

/// Weighted path-following interior point solver for linear programs and flows.
#[derive(Parser)]
#[command(name = "ipm", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum Sub {
    /// Solve an LP given as JSON.
    SolveLp { input: PathBuf },
    /// Exact maximum flow of a DIMACS network.
    MaxFlow { input: PathBuf },
    /// Exact minimum cost maximum flow of a DIMACS network.
    MinCostFlow { input: PathBuf },
    /// Approximate generalized minimum cost flow.
    GenMcf {
        input: PathBuf,
        /// Flow to deliver at the sink.
        #[arg(long)]
        target: Option<f64>,
    },
    /// Iteration counts on generated minimum cost flow instances, as CSV.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "16,32,64,128")]
        sizes: Vec<usize>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long, global = true, default_value_t = 0.1)]
    eps: f64,
    #[arg(long, global = true, value_enum, default_value = "practical")]
    mode: ModeArg,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value = "auto")]
    backend: BackendArg,
    #[arg(long, global = true, value_enum, default_value = "text")]
    format: FormatArg,
    #[arg(long, global = true)]
    max_iters: Option<usize>,
    /// Log progress to standard error.
    #[arg(short, long, global = true)]
    verbose: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Paper,
    Practical,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Auto,
    Direct,
    Cg,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Json,
}

fn main() {
    let cli = Cli::parse();
    let c = cli.common;
    env_logger::Builder::new()
        .filter_level(if c.verbose { log::LevelFilter::Info } else { log::LevelFilter::Warn })
        .init();
    let (command, input, target, sizes) = match cli.command {
        Sub::SolveLp { input } => (Command::SolveLp, Some(input), None, None),
        Sub::MaxFlow { input } => (Command::MaxFlow, Some(input), None, None),
        Sub::MinCostFlow { input } => (Command::MinCostFlow, Some(input), None, None),
        Sub::GenMcf { input, target } => (Command::GenMcf, Some(input), target, None),
        Sub::Bench { sizes } => (Command::Bench, None, None, Some(sizes)),
    };
    let mut cfg = RunConfig::new(command, input);
    cfg.target = target;
    if let Some(sizes) = sizes {
        cfg.sizes = sizes;
    }
    cfg.eps = c.eps;
    cfg.seed = c.seed;
    cfg.max_iters = c.max_iters;
    cfg.mode = match c.mode {
        ModeArg::Paper => Mode::Paper,
        ModeArg::Practical => Mode::Practical,
    };
    cfg.backend = match c.backend {
        BackendArg::Auto => BackendChoice::Auto,
        BackendArg::Direct => BackendChoice::Direct,
        BackendArg::Cg => BackendChoice::ConjugateGradient,
    };
    cfg.format = match c.format {
        FormatArg::Text => Format::Text,
        FormatArg::Json => Format::Json,
    };
    let code = run(&cfg, &mut std::io::stdout().lock(), &mut std::io::stderr().lock());
    std::process::exit(code);
}
