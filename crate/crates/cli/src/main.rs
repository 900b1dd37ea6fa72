//! `jbw`: run experiments, benchmark generation, serve worlds, replay logs.

mod actions;
mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "jbw", version, about = "Jelly Bean World simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a baseline agent and write metrics, a final save and an action log.
    Run(RunArgs),
    /// Measure patch generation throughput along a fixed spiral.
    Bench(BenchArgs),
    /// Host a world over TCP and WebSocket until interrupted.
    Serve(ServeArgs),
    /// Re-apply an action log and print the final state digest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AgentKind {
    Greedy,
    Random,
    /// Agents connecting over the network; use `jbw serve`.
    External,
}

#[derive(Debug, Args)]
struct WorldArgs {
    /// Preset name (table2_3, table2_3_occlusion, table4_5, table6_7,
    /// table6_7_occlusion) or path to a JSON config.
    #[arg(long, default_value = "table2_3")]
    config: String,
    /// Overrides the config's world seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct RewardArgs {
    /// Reward expression, e.g. `Collect[JellyBean] & Avoid[Onion]`.
    #[arg(long, conflicts_with = "schedule")]
    reward: Option<String>,
    /// Reward schedule text, or `@path` to read it from a file, e.g.
    /// `Cyclical(Collect[JellyBean] : 100000; Collect[Onion] : 100000)`.
    #[arg(long)]
    schedule: Option<String>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    world: WorldArgs,
    #[command(flatten)]
    reward: RewardArgs,
    #[arg(long, value_enum, default_value = "greedy")]
    agent: AgentKind,
    #[arg(long, default_value_t = 100_000)]
    steps: u64,
    /// Moving-average window of the reward rate.
    #[arg(long, default_value_t = 100_000)]
    window: usize,
    /// Write every n-th step to the metrics CSV (the last step always).
    #[arg(long, default_value_t = 1)]
    stride: usize,
    /// Metrics CSV path.
    #[arg(long, default_value = "metrics.csv")]
    out: PathBuf,
    /// Final save file path.
    #[arg(long, default_value = "final.jbw")]
    save: PathBuf,
    /// Action log path.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Continue from a save file instead of a fresh world.
    #[arg(long, conflicts_with_all = ["config", "seed"])]
    load: Option<PathBuf>,
    /// Independent worlds stepped in parallel, seeded seed, seed+1, ...
    /// Output paths get a `.i` suffix before the extension.
    #[arg(long, default_value_t = 1)]
    batch: usize,
    /// Item type the greedy agent walks to (default: the first positively
    /// rewarded Collect term).
    #[arg(long)]
    target: Option<String>,
    /// Item types the greedy agent steers around (default: negatively
    /// rewarded Collect terms).
    #[arg(long)]
    avoid: Vec<String>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    world: WorldArgs,
    #[arg(long, default_value_t = 20)]
    patches: usize,
    /// Overrides the config's Metropolis-Hastings iterations per patch.
    #[arg(long)]
    mh_iterations: Option<u32>,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[command(flatten)]
    world: WorldArgs,
    #[command(flatten)]
    reward: RewardArgs,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    /// Newline-delimited JSON endpoint; 0 picks a free port.
    #[arg(long, env = "JBW_PORT", default_value_t = 54353)]
    port: u16,
    /// WebSocket endpoint; 0 picks a free port.
    #[arg(long, env = "JBW_WS_PORT", default_value_t = 54354)]
    ws_port: u16,
    /// Resume from a save file.
    #[arg(long, conflicts_with_all = ["config", "seed"])]
    load: Option<PathBuf>,
    /// Written on shutdown.
    #[arg(long, default_value = "server.jbw")]
    save: PathBuf,
    /// Directory for client save/load requests.
    #[arg(long, default_value = ".")]
    save_dir: PathBuf,
    /// Seconds a disconnected client's agents keep blocking the turn.
    #[arg(long, default_value_t = 30)]
    grace: u64,
}

#[derive(Debug, Args)]
struct ReplayArgs {
    #[command(flatten)]
    world: WorldArgs,
    /// Start from a save file instead of a fresh world.
    #[arg(long, conflicts_with_all = ["config", "seed"])]
    load: Option<PathBuf>,
    /// Action log written by `jbw run --log`.
    #[arg(long)]
    actions: PathBuf,
}

/// Command failure with its exit code class.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Config(String),
    Runtime(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Config(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Config(m) | Failure::Runtime(m) => m,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Run(a) => commands::run(a),
        Command::Bench(a) => commands::bench(a),
        Command::Serve(a) => commands::serve(a),
        Command::Replay(a) => commands::replay(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}
