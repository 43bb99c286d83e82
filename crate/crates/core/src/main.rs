use std::path::PathBuf;
use std::process::ExitCode;

use chainpend::cli::{execute, Command, Overrides};
use clap::{Parser, ValueEnum};

/// Chain pendulum on a cart: simulation, equilibrium analysis and LQR design.
#[derive(Parser)]
#[command(name = "chainpend", version)]
struct Args {
    #[arg(value_enum)]
    command: Cmd,
    /// Scenario file (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output file; defaults to the scenario's `output`, else stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Time step override (s).
    #[arg(long)]
    dt: Option<f64>,
    /// Duration override (s).
    #[arg(long)]
    duration: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Cmd {
    Simulate,
    Equilibria,
    Linearize,
    Controllability,
    Lqr,
    Stabilize,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Simulate => Command::Simulate,
            Cmd::Equilibria => Command::Equilibria,
            Cmd::Linearize => Command::Linearize,
            Cmd::Controllability => Command::Controllability,
            Cmd::Lqr => Command::Lqr,
            Cmd::Stabilize => Command::Stabilize,
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let overrides = Overrides {
        output: args.output,
        dt: args.dt,
        duration: args.duration,
    };
    let code = execute(args.command.into(), &args.config, &overrides);
    ExitCode::from(code as u8)
}
