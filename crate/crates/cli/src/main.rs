use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use tracebo_core::harness::{
    enumerate_oracle, run_dir, run_experiment, sig9, simulate_once, write_oracle, write_plotdata,
    ExportKind,
};
use tracebo_core::{Error, ExperimentKind, ExperimentSpec, Pattern};

#[derive(Parser)]
#[command(
    name = "tracebo",
    version,
    about = "Simulate and optimize drawn conductive-trace circuits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one pattern and print voltage, resistance and junctions.
    Simulate {
        /// Five shape letters, L (line) or C (circle), e.g. LLCLL.
        #[arg(long)]
        shapes: String,
        /// Offsets of shapes 2, 3 and 4 in mm, e.g. -20,0,20.
        #[arg(long, allow_hyphen_values = true, default_value = "0,0,0")]
        offsets: String,
        /// Evaluate under the obstacle experiment.
        #[arg(long)]
        obstacle: bool,
    },
    /// Run the optimizer and write history.csv and summary.json.
    Optimize {
        #[arg(long)]
        experiment: ExperimentKind,
        /// Optimization iterations after the initial design.
        #[arg(long)]
        iters: Option<usize>,
        /// Size of the random initial design.
        #[arg(long)]
        init: Option<usize>,
        #[arg(long)]
        seed: u64,
        /// Output root; files land in <out>/<experiment>/<seed>/.
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
    /// Evaluate every shape combination on an offset grid.
    Enumerate {
        #[arg(long)]
        experiment: ExperimentKind,
        /// Grid spacing in mm; must divide 40.
        #[arg(long, default_value_t = 10.0)]
        grid_step: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Turn a history or enumeration CSV into a plot-ready table.
    Export {
        /// voltage_trace, probability_heatmap or resistance_by_circles.
        #[arg(long)]
        kind: ExportKind,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Simulate {
            shapes,
            offsets,
            obstacle,
        } => {
            let pattern = Pattern::parse(&shapes, &offsets)?;
            let kind = if obstacle {
                ExperimentKind::Obstacle
            } else {
                ExperimentKind::Baseline
            };
            emit(&simulate_once(&pattern, &ExperimentSpec::of_kind(kind))?.to_string());
        }
        Command::Optimize {
            experiment,
            iters,
            init,
            seed,
            out,
        } => {
            let mut spec = ExperimentSpec::of_kind(experiment).with_seed(seed);
            if let Some(n) = iters {
                spec.config.n_iter = n;
            }
            if let Some(n) = init {
                spec.config.n_init = n;
            }
            let result = run_experiment(&spec, &out)?;
            emit(&format!(
                "best_pattern: {}\nbest_voltage_V: {}\ntrials: {}\noutput: {}\n",
                result.best_pattern,
                sig9(result.best_voltage),
                result.history.len(),
                run_dir(&out, experiment, seed).display()
            ));
        }
        Command::Enumerate {
            experiment,
            grid_step,
            out,
        } => {
            let table = enumerate_oracle(&ExperimentSpec::of_kind(experiment), grid_step)?;
            write_oracle(&out, &table)?;
            let best = table.best();
            emit(&format!(
                "evaluations: {}\nbest: {} {} V\n",
                table.entries.len(),
                best.pattern,
                sig9(best.voltage)
            ));
        }
        Command::Export { kind, input, out } => {
            write_plotdata(kind, &input, &out)
                .with_context(|| format!("exporting {kind} from {}", input.display()))?;
        }
    }
    Ok(())
}

/// Writes to stdout, tolerating a closed pipe.
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(e) if e.is_numerical() => 3,
        Some(
            Error::InvalidPattern(_) | Error::OffsetOutOfRange { .. } | Error::InvalidConfig(_),
        ) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
