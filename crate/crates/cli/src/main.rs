use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use weaktraj::scenario::{self, EmittedTable, OutputFormat, Scenario};
use weaktraj::Execution;

#[derive(Parser, Debug)]
#[command(name = "weaktraj", version, about = "Weak-measurement trajectories in a double-slit interferometer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Screen pattern at the final time, with its maxima.
    Pattern(Common),
    /// Density snapshots between the slits and the screen.
    Density(Common),
    /// Pointer readouts and weak trajectories on the probe grid.
    WeakGrid(Common),
    /// The four-crystal protocol, its inversion and the path split.
    Protocol(Common),
    /// Recover weak values from a file of measured contrasts.
    Invert {
        #[command(flatten)]
        common: Common,
        /// CSV with `scheme,step,C` columns, or a `protocol` table.
        #[arg(long)]
        contrasts: PathBuf,
    },
    /// Print a bundled scenario file.
    Show {
        /// One of the bundled scenario names.
        name: String,
    },
}

#[derive(clap::Args, Debug)]
struct Common {
    /// Scenario file, or the name of a bundled scenario.
    #[arg(long)]
    scenario: String,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Interaction profile override: `point` or `gaussian:<width>`.
    #[arg(long)]
    profile: Option<String>,
    /// Print the resolved scenario to standard error.
    #[arg(long)]
    echo: bool,
    /// Evaluate on one thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl Common {
    fn load(&self) -> Result<Scenario> {
        let mut scn = scenario::load_scenario(&self.scenario)?;
        if let Some(p) = &self.profile {
            scn.override_profile(scenario::parse_profile(p)?)?;
        }
        if self.echo {
            eprintln!("# config_hash = {}", scn.config_hash());
            eprint!("{}", scn.echo());
        }
        Ok(scn)
    }

    fn execution(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::default()
        }
    }

    fn emit(&self, tables: &[EmittedTable]) -> Result<()> {
        let format = match self.format {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        };
        match &self.out {
            Some(path) => {
                let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
                let mut w = BufWriter::new(file);
                scenario::write_tables(tables, format, &mut w)?;
                w.flush()?;
            }
            None => {
                let stdout = io::stdout();
                let mut w = stdout.lock();
                scenario::write_tables(tables, format, &mut w)?;
                w.flush()?;
            }
        }
        Ok(())
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Pattern(c) => {
            let scn = c.load()?;
            c.emit(&scenario::cmd_pattern(&scn, c.execution())?)
        }
        Command::Density(c) => {
            let scn = c.load()?;
            c.emit(&scenario::cmd_density(&scn, c.execution())?)
        }
        Command::WeakGrid(c) => {
            let scn = c.load()?;
            c.emit(&scenario::cmd_weak_grid(&scn, c.execution())?)
        }
        Command::Protocol(c) => {
            let scn = c.load()?;
            c.emit(&scenario::cmd_protocol(&scn, c.execution())?)
        }
        Command::Invert { common, contrasts } => {
            let scn = common.load()?;
            let text = std::fs::read_to_string(&contrasts)
                .with_context(|| format!("reading {}", contrasts.display()))?;
            common.emit(&scenario::cmd_invert(&scn, &text)?)
        }
        Command::Show { name } => {
            let text = scenario::bundled_text(&name).with_context(|| {
                format!("no bundled scenario `{name}` (have: {})", scenario::BUNDLED.join(", "))
            })?;
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
