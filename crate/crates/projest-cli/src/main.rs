use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use projest::estimator::{Algorithm, Target};
use projest_cli::{
    cmd_estimate, cmd_exact, cmd_fit, cmd_optimize, cmd_sample, cmd_table, render, CsvRecord,
    Error, GridConfig, OutputFormat,
};

/// Joint projection estimation of densities and distribution functions in
/// the Legendre basis, with an experiment harness around a two-parameter
/// test family.
#[derive(Parser)]
#[command(name = "projest", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TargetArg {
    Density,
    Distribution,
}

impl From<TargetArg> for Target {
    fn from(t: TargetArg) -> Self {
        match t {
            TargetArg::Density => Target::Density,
            TargetArg::Distribution => Target::Distribution,
        }
    }
}

#[derive(Args)]
struct FamilyArgs {
    /// Left-branch exponent ν1 (natural number)
    #[arg(long)]
    nu1: u32,
    /// Right-branch exponent ν2 (natural number, != ν1)
    #[arg(long)]
    nu2: u32,
}

#[derive(Args)]
struct OutputArgs {
    /// Output encoding
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Write to this file instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GridArgs {
    #[command(flatten)]
    family: FamilyArgs,
    /// Expansion length (repeatable)
    #[arg(long = "n", default_values_t = vec![4usize, 8, 16, 32, 64])]
    n: Vec<usize>,
    /// Sample-size exponent m, N = 2^(m+9) (repeatable)
    #[arg(long = "m", default_values_t = (0u32..=14).collect::<Vec<_>>())]
    m: Vec<u32>,
    /// Base seed; each cell derives its own
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Independent replicates per cell
    #[arg(long, default_value_t = 1)]
    replicates: u32,
    /// Coefficient route: 1 = moment combination, 2 = direct recurrence
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=2))]
    algorithm: u8,
    /// Largest admissible m; larger requests are skipped with a warning
    #[arg(long = "max-m", default_value_t = 18)]
    max_m: u32,
}

impl GridArgs {
    fn config(&self) -> GridConfig {
        GridConfig {
            nu1: self.family.nu1,
            nu2: self.family.nu2,
            n_list: self.n.clone(),
            m_list: self.m.clone(),
            seed: self.seed,
            replicates: self.replicates,
            algorithm: Algorithm::from_id(self.algorithm).expect("validated by clap"),
            max_m: self.max_m,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Exact truncation errors of the expansion (the deterministic rows)
    Exact {
        #[command(flatten)]
        family: FamilyArgs,
        /// Expansion length (repeatable)
        #[arg(long = "n", default_values_t = vec![4usize, 8, 16, 32, 64])]
        n: Vec<usize>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Full stochastic error grid over (n, N) with per-cell seeds
    Table {
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Fit the error-bound constants to a grid and emit both surfaces
    Fit {
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Conditionally optimal expansion length and sample size for a target
    /// accuracy
    Optimize {
        /// Stochastic-term constant C1
        #[arg(long)]
        c1: f64,
        /// Deterministic-term constant C2
        #[arg(long)]
        c2: f64,
        /// Smoothness exponent s
        #[arg(long)]
        s: f64,
        /// Required accuracy γ
        #[arg(long)]
        gamma: f64,
        /// Which function the accuracy refers to
        #[arg(long, value_enum, default_value = "density")]
        target: TargetArg,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Draw reproducible samples and write them as text
    Sample {
        #[command(flatten)]
        family: FamilyArgs,
        /// Number of realizations
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Stream id for independent substreams under one seed
        #[arg(long, default_value_t = 0)]
        stream: u64,
        /// Output path
        #[arg(long)]
        out: PathBuf,
    },
    /// One seeded estimation run: coefficient vectors of both estimates
    Estimate {
        #[command(flatten)]
        family: FamilyArgs,
        /// Expansion length
        #[arg(long = "n")]
        n: usize,
        /// Sample-size exponent m, N = 2^(m+9)
        #[arg(long = "m")]
        m: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=2))]
        algorithm: u8,
        #[command(flatten)]
        output: OutputArgs,
    },
}

fn emit(content: &str, out: Option<&PathBuf>) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| Error::Failure(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{content}");
            std::io::stdout().flush().ok();
            Ok(())
        }
    }
}

fn render_and_emit<T: CsvRecord + serde::Serialize>(
    rows: &[T],
    output: &OutputArgs,
) -> Result<(), Error> {
    let content = render(rows, output.format.into())?;
    emit(&content, output.out.as_ref())
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Exact { family, n, output } => {
            let rows = cmd_exact(family.nu1, family.nu2, &n)?;
            render_and_emit(&rows, &output)
        }
        Command::Table { grid, output } => {
            let rows = cmd_table(&grid.config())?;
            render_and_emit(&rows, &output)
        }
        Command::Fit { grid, output } => {
            let (constants, rows) = cmd_fit(&grid.config())?;
            eprintln!(
                "fitted constants: c1={} c2={} (s={})",
                constants.c1, constants.c2, constants.s
            );
            render_and_emit(&rows, &output)
        }
        Command::Optimize { c1, c2, s, gamma, target, output } => {
            let row = cmd_optimize(c1, c2, s, gamma, target.into())?;
            render_and_emit(&[row], &output)
        }
        Command::Sample { family, count, seed, stream, out } => {
            cmd_sample(family.nu1, family.nu2, count, seed, stream, &out)
        }
        Command::Estimate { family, n, m, seed, algorithm, output } => {
            let rows = cmd_estimate(
                family.nu1,
                family.nu2,
                n,
                m,
                seed,
                Algorithm::from_id(algorithm).expect("validated by clap"),
            )?;
            render_and_emit(&rows, &output)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::from(0);
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::from(0),
        Err(Error::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Error::Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
