use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use graphinv_cli::{run, Command, Overrides};

#[derive(Parser)]
#[command(
    name = "graphinv",
    version,
    about = "Train graph models and invert their structure"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(clap::Args)]
struct Common {
    /// Experiment file (TOML).
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Subcommand)]
enum Sub {
    /// Write the configured dataset to `<output>/data`.
    GenData(Common),
    /// Train the victim and save `model.gmic`.
    Train(Common),
    /// Invert a homogeneous victim.
    AttackHomo(Common),
    /// Invert a heterogeneous victim over the configured meta-paths.
    AttackHete(Common),
    /// Score the Sim-Attr and Sim-Emb baselines.
    Baseline(Common),
    /// Score the saved reconstruction.
    Eval(Common),
    /// Rerun the attack with each loss term removed.
    Ablate(Common),
    /// Attack a victim whose logits carry Gaussian noise.
    NoiseSweep(Common),
    /// Run the attack over a hyperparameter grid.
    Sweep(Common),
}

impl Sub {
    fn split(self) -> (Command, Common) {
        match self {
            Sub::GenData(c) => (Command::GenData, c),
            Sub::Train(c) => (Command::Train, c),
            Sub::AttackHomo(c) => (Command::AttackHomo, c),
            Sub::AttackHete(c) => (Command::AttackHete, c),
            Sub::Baseline(c) => (Command::Baseline, c),
            Sub::Eval(c) => (Command::Eval, c),
            Sub::Ablate(c) => (Command::Ablate, c),
            Sub::NoiseSweep(c) => (Command::NoiseSweep, c),
            Sub::Sweep(c) => (Command::Sweep, c),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (command, common) = cli.command.split();
    match run(command, &common.config, &common.overrides) {
        Ok(out) => {
            for row in &out.rows {
                println!(
                    "{}\t{}\tauc={:.4}\tap={:.4}\tseed={}",
                    row.mode, row.variant, row.auc, row.ap, row.seed
                );
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
