use clap::{Parser, Subcommand};
use clansim::io::commands::{
    cmd_check, cmd_compare, cmd_oracle, cmd_plot, cmd_sample, CommandError, SampleOpts,
};
use clansim::io::config::RunSpec;
use std::path::PathBuf;
use std::process::ExitCode;

/// Perfect sampler for interacting point processes via clans of ancestors.
#[derive(Parser)]
#[command(name = "clansim", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate the subcriticality bounds for a configured model.
    Check {
        /// TOML run configuration.
        config: PathBuf,
    },
    /// Draw exact samples on the configured window.
    Sample {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        n: Option<u64>,
        /// Output path; the bias ledger lands next to it with a .ledger suffix.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Sample even when no bound certifies subcriticality.
        #[arg(long)]
        force: bool,
        /// Disable the thread pool; output bytes are identical either way.
        #[arg(long)]
        serial: bool,
    },
    /// Draw reference samples by regeneration search on a dilated window.
    Oracle {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// How far to dilate the configured window for the search.
        #[arg(long)]
        margin: Option<f64>,
        #[arg(long)]
        serial: bool,
    },
    /// Test a sample file against the enumerated law or a baseline file.
    Compare {
        config: PathBuf,
        #[arg(long)]
        sample: PathBuf,
        #[arg(long)]
        baseline: Option<PathBuf>,
        #[arg(long, default_value_t = 0.01)]
        level: f64,
    },
    /// Render one record from a sample file as SVG.
    Plot {
        config: PathBuf,
        #[arg(long)]
        sample: PathBuf,
        #[arg(long, default_value_t = 0)]
        index: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<i32, CommandError> {
    let mut stdout = std::io::stdout();
    match cli.cmd {
        Cmd::Check { config } => {
            let spec = RunSpec::load(&config)?;
            cmd_check(&spec, &mut stdout)
        }
        Cmd::Sample {
            config,
            seed,
            n,
            out,
            force,
            serial,
        } => {
            let spec = RunSpec::load(&config)?;
            let opts = SampleOpts {
                seed,
                n,
                out,
                force,
                serial,
                margin: None,
            };
            cmd_sample(&spec, &opts, &mut stdout)
        }
        Cmd::Oracle {
            config,
            seed,
            n,
            out,
            margin,
            serial,
        } => {
            let spec = RunSpec::load(&config)?;
            let opts = SampleOpts {
                seed,
                n,
                out,
                force: false,
                serial,
                margin,
            };
            cmd_oracle(&spec, &opts, &mut stdout)
        }
        Cmd::Compare {
            config,
            sample,
            baseline,
            level,
        } => {
            let spec = RunSpec::load(&config)?;
            cmd_compare(&spec, &sample, baseline.as_deref(), level, &mut stdout)
        }
        Cmd::Plot {
            config,
            sample,
            index,
            out,
        } => {
            let spec = RunSpec::load(&config)?;
            cmd_plot(&spec, &sample, index, &out, &mut stdout)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
