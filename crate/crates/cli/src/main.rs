use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use packpair_cli::commands::{self, BatchOptions, SimulateOptions};
use packpair_cli::CmdOutput;
use packpair_core::{FailureModel, Mode, PairCombination};

#[derive(Parser)]
#[command(name = "packpair", version, about = "Plan and simulate packing a pair of shoes into a box")]
struct Cli {
    /// Log progress and timings to stderr.
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    With,
    Without,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::With => Mode::WithContactMethod,
            ModeArg::Without => Mode::WithoutContactMethod,
        }
    }
}

fn parse_combination(s: &str) -> Result<PairCombination, String> {
    PairCombination::from_label(s).ok_or_else(|| {
        let all: Vec<&str> = PairCombination::ALL.iter().map(|c| c.label()).collect();
        format!("expected one of {}", all.join(", "))
    })
}

#[derive(Subcommand)]
enum Command {
    /// Print the packing plan for a scenario.
    Plan {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Plan and execute a scenario in the simulator.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Overrides the failure-injection seed of the scenario.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trace: bool,
        #[arg(long)]
        replan: bool,
    },
    /// Run random scenarios across the catalog and print aggregates.
    Batch {
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "with")]
        mode: ModeArg,
        #[arg(long)]
        replan: bool,
        /// Restrict to one catalog shoe.
        #[arg(long)]
        shoe: Option<String>,
        /// Restrict to one initial combination, e.g. top-top.
        #[arg(long, value_parser = parse_combination)]
        combination: Option<PairCombination>,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0.0)]
        over_rotation: f64,
        #[arg(long, default_value_t = 0.0)]
        side_swap: f64,
    },
    /// Evaluate predicted keypoint heatmaps against ground truth.
    EvalKeypoints {
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long, default_value_t = 0.618)]
        alpha: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "debug" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let out: CmdOutput = match cli.command {
        Command::Plan { scenario, mode } => commands::plan(&scenario, mode.map(Into::into)),
        Command::Simulate { scenario, mode, seed, trace, replan } => commands::simulate(
            &scenario,
            SimulateOptions { mode: mode.map(Into::into), seed, trace, replan },
        ),
        Command::Batch { count, seed, mode, replan, shoe, combination, noise, over_rotation, side_swap } => {
            commands::batch(&BatchOptions {
                count,
                seed,
                mode: mode.into(),
                replan,
                shoe,
                combination,
                failure: FailureModel {
                    keypoint_noise_sigma: noise,
                    over_rotation_probability: over_rotation,
                    side_swap_probability: side_swap,
                    ..Default::default()
                },
            })
        }
        Command::EvalKeypoints { truth, pred, alpha } => commands::eval_keypoints(&truth, &pred, alpha),
    };
    let _ = std::io::stdout().write_all(out.stdout.as_bytes());
    let _ = std::io::stderr().write_all(out.stderr.as_bytes());
    ExitCode::from(out.code as u8)
}
