use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hicontrast::harness::{run, Command, ExperimentConfig, Overrides};

/// Asymptotic expansions for high-contrast elliptic problems.
#[derive(Parser)]
#[command(name = "hicontrast", version, about)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Group,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (JSON); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for CSV artifacts and the manifest.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Relative error target for counting terms.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Highest expansion order.
    #[arg(long, global = true)]
    jmax: Option<usize>,
}

#[derive(Subcommand)]
enum Group {
    /// Mesh generation and inspection.
    #[command(subcommand)]
    Mesh(MeshCmd),
    /// Direct solves at each configured contrast.
    #[command(subcommand)]
    Solve(SolveCmd),
    /// Expansion terms.
    #[command(subcommand)]
    Expand(ExpandCmd),
    /// Localized-basis studies.
    #[command(subcommand)]
    Sweep(SweepCmd),
    /// Error, energy and term-count reports.
    #[command(subcommand)]
    Report(ReportCmd),
    /// Closed-form examples.
    #[command(subcommand)]
    Run(RunCmd),
}

#[derive(Subcommand)]
enum MeshCmd {
    Gen,
    Refine,
    Check,
}

#[derive(Subcommand)]
enum SolveCmd {
    Direct,
}

#[derive(Subcommand)]
enum ExpandCmd {
    Pressure,
    Elastic,
}

#[derive(Subcommand)]
enum SweepCmd {
    Delta,
}

#[derive(Subcommand)]
enum ReportCmd {
    Error,
    Energy,
    TermsNeeded,
}

#[derive(Subcommand)]
enum RunCmd {
    #[command(name = "1d-example")]
    OneDExample,
}

impl Group {
    fn command(&self) -> Command {
        match self {
            Group::Mesh(MeshCmd::Gen) => Command::MeshGen,
            Group::Mesh(MeshCmd::Refine) => Command::MeshRefine,
            Group::Mesh(MeshCmd::Check) => Command::MeshCheck,
            Group::Solve(SolveCmd::Direct) => Command::SolveDirect,
            Group::Expand(ExpandCmd::Pressure) => Command::ExpandPressure,
            Group::Expand(ExpandCmd::Elastic) => Command::ExpandElastic,
            Group::Sweep(SweepCmd::Delta) => Command::SweepDelta,
            Group::Report(ReportCmd::Error) => Command::ReportError,
            Group::Report(ReportCmd::Energy) => Command::ReportEnergy,
            Group::Report(ReportCmd::TermsNeeded) => Command::ReportTermsNeeded,
            Group::Run(RunCmd::OneDExample) => Command::Run1dExample,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = (|| {
        let mut config = match &cli.common.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        config.apply(&Overrides {
            output: cli.common.out.clone(),
            threads: cli.common.threads,
            tol: cli.common.tol,
            jmax: cli.common.jmax,
        })?;
        run(cli.command.command(), &config)
    })();
    match result {
        Ok(out) => {
            println!("{}", out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
