use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod annulus;
mod output;
mod pendulum;

use output::Outcome;

/// Twist maps of the annulus and the forced pendulum.
#[derive(Parser, Debug)]
#[command(name = "twistfp", version)]
struct Cli {
    /// Output directory for artifacts.
    #[arg(long, global = true, env = "TWISTFP_OUT", default_value = "twistfp-out")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Period map of x'' + sin x = a cos t.
    #[command(subcommand)]
    Pendulum(PendulumCmd),
    /// Annulus maps from the catalog (or a JSON spec).
    #[command(subcommand)]
    Annulus(AnnulusCmd),
}

#[derive(Subcommand, Debug)]
pub enum PendulumCmd {
    /// Orbits of the period map (phase portrait).
    Orbits(pendulum::OrbitsArgs),
    /// Newton search for n-cycles in a band about the centre.
    Newton(pendulum::NewtonArgs),
    /// Rotation number of an orbit about the centre.
    Rotation(pendulum::RotationArgs),
    /// Annulus chart between two invariant curves.
    Chart(pendulum::ChartArgs),
}

#[derive(Subcommand, Debug)]
pub enum AnnulusCmd {
    /// Twist and invariant-measure report.
    Check(annulus::CheckArgs),
    /// Extract the zero set of φΔ₁ - Δ₂.
    InvariantCurves(annulus::CurvesArgs),
    /// Locate and classify fixed points.
    FixedPoints(annulus::FixedArgs),
    /// Run the critical-point path machine.
    Path(annulus::PathArgs),
    /// Ball-excision audit around a fixed point.
    Audit(annulus::AuditArgs),
}

/// Map spec and extraction grid shared by the annulus commands.
#[derive(Args, Debug, Clone)]
pub struct MapArgs {
    /// Map spec as JSON, e.g. '{"name":"hamiltonian_twist","epsilon":0.1}'.
    #[arg(long, default_value = r#"{"name":"shear"}"#)]
    pub map: String,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = std::fs::create_dir_all(&cli.out) {
        eprintln!("error: cannot create {}: {e}", cli.out.display());
        return ExitCode::from(1);
    }
    let result = match cli.command {
        Command::Pendulum(cmd) => pendulum::run(cmd, &cli.out),
        Command::Annulus(cmd) => annulus::run(cmd, &cli.out),
    };
    match result {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::HypothesisFailure) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
