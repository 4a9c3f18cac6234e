use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dist_align::solver::BaselineMode;
use dist_align_cli::report::{group_labels, labels_beside, markdown, svg};
use dist_align_cli::trace_csv::TraceTable;
use dist_align_cli::{eval_loss, presets, run, CliError, ExperimentConfig, RunStatus};

#[derive(Parser)]
#[command(name = "dist-align", version, about = "Align the group distribution of a black-box generator to uniform")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the solver described by a config file or bundled preset name.
    Run {
        config: PathBuf,
        /// How the t = 0 measurement is taken: off | zero-weights.
        #[arg(long)]
        baseline_mode: Option<BaselineMode>,
        /// Output directory, overriding the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Oracle seed, overriding the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the KL divergence from uniform of the normalized values.
    EvalLoss {
        #[arg(allow_negative_numbers = true, num_args = 0..)]
        values: Vec<String>,
    },
    /// Summarize a trace.csv as a markdown table.
    Report {
        trace: PathBuf,
        /// Also write a KL-vs-iteration chart.
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Comma-separated group labels; defaults to summary.json beside the trace.
        #[arg(long, value_delimiter = ',')]
        labels: Option<Vec<String>>,
    },
    /// List bundled presets, or print one.
    Presets { name: Option<String> },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("DIST_ALIGN_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(command: Command) -> Result<u8, CliError> {
    match command {
        Command::Run { config, baseline_mode, out, seed } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(b) = baseline_mode {
                cfg.baseline_mode = b;
            }
            if let Some(o) = out {
                cfg.output_dir = o;
            }
            if let Some(s) = seed {
                cfg.oracle.seed = s;
            }
            let status = run(&cfg)?;
            let s = status.summary();
            println!(
                "{} after {} evaluations: final KL {:.6}, best KL {:.6}",
                if matches!(status, RunStatus::Converged(_)) { "converged" } else { "not converged" },
                s.evaluations,
                s.final_kl,
                s.best_kl
            );
            println!("output in {}", cfg.output_dir.display());
            Ok(status.exit_code() as u8)
        }
        Command::EvalLoss { values } => {
            println!("{:.6}", eval_loss(&values)?);
            Ok(0)
        }
        Command::Report { trace, svg: svg_path, labels } => {
            let file = std::fs::File::open(&trace).map_err(|e| CliError::Io(format!("{}: {e}", trace.display())))?;
            let table = TraceTable::read(file)?;
            let labels = labels.or_else(|| labels_beside(&trace));
            print!("{}", markdown(&table, &group_labels(table.n, labels.as_deref())));
            if let Some(p) = svg_path {
                std::fs::write(&p, svg(&table)).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            }
            Ok(0)
        }
        Command::Presets { name: None } => {
            presets::names().for_each(|n| println!("{n}"));
            Ok(0)
        }
        Command::Presets { name: Some(n) } => {
            let text = presets::find(&n).ok_or_else(|| CliError::Config(format!("no preset named {n:?}")))?;
            print!("{text}");
            Ok(0)
        }
    }
}
