use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use imc::{Command, Options, CONFIG_ENV};

#[derive(Debug, Parser)]
#[command(name = "imc", version, about = "Imprecise Markov chain analysis")]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Model file (JSON, schema "imc-model/1").
    #[arg(long)]
    model: PathBuf,
    /// `indicator:<labels>` or a comma-separated value list.
    #[arg(long, allow_hyphen_values = true)]
    gamble: Option<String>,
    /// Time horizon for `evolve`.
    #[arg(long)]
    steps: Option<usize>,
    /// `vacuous`, `vacuous:<labels>`, `precise:<values>` or `point:<label>`.
    #[arg(long)]
    initial: Option<String>,
    /// Convergence tolerance (`eps_conv`).
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    max_strong_states: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = Options {
        model: cli.model,
        gamble: cli.gamble,
        steps: cli.steps,
        initial: cli.initial,
        tol: cli.tol,
        max_iter: cli.max_iter,
        max_strong_states: cli.max_strong_states,
        config_file: std::env::var_os(CONFIG_ENV).filter(|v| !v.is_empty()).map(PathBuf::from),
    };
    match imc::run(cli.command, &opts) {
        Ok(out) => {
            print!("{}", out.text);
            ExitCode::from(out.code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
