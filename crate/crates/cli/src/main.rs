mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::Mode;
use run::{Command, Options};

#[derive(Parser)]
#[command(name = "semival", version, about = "Evaluate and plan against semimeasure environments")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Evaluate every configured policy under every configured semantics.
    Eval(Common),
    /// Plan an optimal policy per semantics and report its value.
    Plan {
        #[command(flatten)]
        common: Common,
        /// Write the planned policy as `history,action` rows.
        #[arg(long)]
        policy_out: Option<PathBuf>,
    },
    /// Evaluate the configured policies under a chosen list of semantics.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Comma-separated semantics, e.g. `death,choquet,normalized`.
        #[arg(long, value_delimiter = ',', required = true)]
        semantics: Vec<String>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Override the configured horizon.
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Recompute the pessimistic value by every route and fail on mismatch.
    #[arg(long)]
    self_check: bool,
    /// Write the table here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn options(self) -> Options {
        Options {
            config: self.config,
            semantics: None,
            horizon: self.horizon,
            mode: self.mode,
            self_check: self.self_check,
            out: self.out,
            policy_out: None,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, opts) = match cli.command {
        Sub::Eval(c) => (Command::Eval, c.options()),
        Sub::Plan { common, policy_out } => (
            Command::Plan,
            Options {
                policy_out,
                ..common.options()
            },
        ),
        Sub::Compare { common, semantics } => (
            Command::Compare,
            Options {
                semantics: Some(semantics),
                ..common.options()
            },
        ),
    };
    let mut stdout = std::io::stdout().lock();
    match run::run(command, &opts, &mut stdout) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("semival: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
