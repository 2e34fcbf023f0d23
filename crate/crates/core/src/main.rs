use std::path::PathBuf;

use clap::{Parser, Subcommand};
use sqht::cli::{cmd_mre, cmd_proptest, cmd_sweep, cmd_validate, ExitCode, Overrides};

#[derive(Parser)]
#[command(name = "sqht", version, about = "Composite sequential quantum hypothesis testing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Schema and physics validation of an experiment file
    Validate(Args),
    /// Measured relative entropies between the null state and the alternative set
    Mre(Args),
    /// Error probabilities and realized exponents over the n grid
    Sweep(Args),
    /// Statistical property suite
    Proptest(Args),
}

#[derive(clap::Args)]
struct Args {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value = "warn")]
    log_level: log::LevelFilter,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() { ExitCode::Schema as i32 } else { 0 };
            std::process::exit(code);
        }
    };
    let (run, args): (fn(&std::path::Path, &Overrides) -> _, Args) = match cli.command {
        Command::Validate(a) => (cmd_validate, a),
        Command::Mre(a) => (cmd_mre, a),
        Command::Sweep(a) => (cmd_sweep, a),
        Command::Proptest(a) => (cmd_proptest, a),
    };
    env_logger::Builder::new().filter_level(args.log_level).init();
    let overrides = Overrides { output_dir: args.output_dir, workers: args.workers };
    let outcome = run(&args.config, &overrides);
    print!("{}", outcome.stdout);
    if outcome.code != ExitCode::Ok {
        eprintln!("error: {}", outcome.stderr);
    }
    std::process::exit(outcome.code as i32);
}
