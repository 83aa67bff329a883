use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ltlnav_cli::plot::{PlotSpec, Projection};
use ltlnav_cli::{CliError, SimOverrides};

/// Multi-agent LTL planning and navigation-function simulation.
#[derive(Parser)]
#[command(name = "ltlnav", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the workspace and agent geometry conditions.
    Check {
        /// Scenario JSON file, or builtin:NAME for a bundled fixture.
        #[arg(long)]
        config: String,
        /// Treat failed conditions as errors (exit 2).
        #[arg(long)]
        strict: bool,
    },
    /// Translate an LTL formula into a Büchi automaton.
    Translate {
        formula: String,
        /// Comma-separated atomic propositions; other atoms are rejected.
        #[arg(long, value_delimiter = ',')]
        props: Option<Vec<String>>,
        /// Print Graphviz DOT instead of JSON.
        #[arg(long)]
        dot: bool,
        /// Also write automaton.json and automaton.dot here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute a prefix-suffix plan for every agent.
    Plan {
        #[arg(long)]
        config: String,
        /// Write plans.json here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plan and execute; writes trajectory, events, verdict and plans.
    Simulate {
        #[arg(long)]
        config: String,
        #[arg(long)]
        out: PathBuf,
        /// Per-axis control bound.
        #[arg(long)]
        clamp: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        /// Suffix repetitions to execute.
        #[arg(long)]
        cycles: Option<usize>,
        /// Record every n-th step.
        #[arg(long)]
        stride: Option<usize>,
        /// Execute the plans in this plans.json instead of planning.
        #[arg(long)]
        plans: Option<PathBuf>,
    },
    /// Render a trajectory CSV as SVG.
    Plot {
        /// Trajectory CSV written by `simulate`.
        trajectory: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// xy, xz or ortho.
        #[arg(long, default_value = "xy")]
        projection: String,
        /// Scenario supplying the workspace and regions.
        #[arg(long)]
        config: Option<String>,
        /// plans.json for plan arrows.
        #[arg(long)]
        plans: Option<PathBuf>,
        #[arg(long)]
        no_regions: bool,
        /// Draw agent bounding balls at their final positions.
        #[arg(long)]
        bounds: bool,
    },
}

fn dispatch(cmd: Command) -> Result<u8, CliError> {
    let mut out = io::stdout().lock();
    match cmd {
        Command::Check { config, strict } => ltlnav_cli::check(&config, strict, &mut out),
        Command::Translate { formula, props, dot, out: dir } => {
            ltlnav_cli::translate(&formula, props.as_deref(), dot, dir.as_deref(), &mut out)
        }
        Command::Plan { config, out: dir } => ltlnav_cli::plan(&config, dir.as_deref(), &mut out),
        Command::Simulate { config, out: dir, clamp, dt, cycles, stride, plans } => {
            let o = SimOverrides { clamp, dt, cycles, stride, plans };
            ltlnav_cli::simulate(&config, &dir, &o, &mut out)
        }
        Command::Plot { trajectory, out: svg, projection, config, plans, no_regions, bounds } => {
            let spec = PlotSpec {
                trajectory,
                projection: projection.parse::<Projection>()?,
                out: svg,
                regions: !no_regions,
                bounds,
                arrows: plans.is_some(),
            };
            ltlnav_cli::plot(&spec, config.as_deref(), plans.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { ltlnav_cli::EXIT_INPUT } else { ltlnav_cli::EXIT_OK });
        }
    };
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
