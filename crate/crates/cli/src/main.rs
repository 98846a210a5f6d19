mod commands;
mod run;
mod verify;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use nnlab_core::cesaro::Mode;
use run::{parse_ratio, RunConfig};

#[derive(Parser)]
#[command(name = "nnlab", version, about = "Iterated Cesàro block frequencies of digit expansions")]
struct Cli {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Arithmetic for the Cesàro ladder.
    #[arg(long, global = true, value_enum, default_value_t = ModeArg::Exact)]
    mode: ModeArg,
    /// Largest n an exact ladder may reach.
    #[arg(long, global = true, default_value_t = nnlab_core::cesaro::DEFAULT_EXACT_CAP)]
    exact_cap: usize,
    /// Bit budget for evaluating tower exponentials.
    #[arg(long, global = true, default_value_t = nnlab_core::synthesizer::DEFAULT_TOWER_BIT_CAP)]
    tower_bit_cap: u64,
    /// Ratio between consecutive checkpoints (exact, e.g. 5/4 or 1.25).
    #[arg(long, global = true, default_value = "5/4", value_parser = parse_ratio)]
    rho: f64,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Float,
}

impl ConfigArgs {
    fn config(&self) -> RunConfig {
        RunConfig {
            mode: match self.mode {
                ModeArg::Exact => Mode::Exact,
                ModeArg::Float => Mode::Float,
            },
            exact_cap: self.exact_cap,
            tower_bit_cap: self.tower_bit_cap,
            checkpoint_ratio: self.rho,
            seed: self.seed,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Certified continued-fraction or Lüroth digits of a real number.
    Expand(commands::ExpandArgs),
    /// A word whose block frequencies are within 1/n of a target vector.
    Zn(commands::ZnArgs),
    /// A digit stream realizing a schedule of targets, with witnesses.
    Synthesize(commands::SynthesizeArgs),
    /// Observed ranges of the iterated frequencies of blocks in a stream.
    Analyze(commands::AnalyzeArgs),
    /// Run a verification suite; exits 1 if any check fails.
    Verify(verify::VerifyArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let config = cli.config.config();
    let result = config.validate().and_then(|()| match &cli.command {
        Command::Expand(args) => commands::expand(args, &config),
        Command::Zn(args) => commands::zn(args, &config),
        Command::Synthesize(args) => commands::synthesize(args, &config),
        Command::Analyze(args) => commands::analyze(args, &config),
        Command::Verify(args) => verify::run(args, &config),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("nnlab: {failure}");
            ExitCode::from(failure.exit_code())
        }
    }
}
