//! `foliate`: batch front end for foliate-core.
//!
//! Exit codes: 0 success, 1 numerical failure (including failed checks in
//! `verify`), 2 invalid input.

mod commands;
mod config;
mod error;
mod files;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{parse_list, Common, Resolved};
use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "foliate", version, about = "Eikonal solutions and timelike foliations on Lorentzian 2-tori")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Stable time cone from the null foliations; writes cone.json.
    Cone {
        #[command(flatten)]
        common: Common,
    },
    /// Lorentzian distance between two points; writes distance.json.
    Distance {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "X,Y", value_parser = parse_list::<2>, allow_hyphen_values = true)]
        x: Option<[f64; 2]>,
        #[arg(long, value_name = "X,Y", value_parser = parse_list::<2>, allow_hyphen_values = true)]
        y: Option<[f64; 2]>,
    },
    /// Conjugate-point scan around a point; writes pole.json.
    Pole {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "X,Y", value_parser = parse_list::<2>, allow_hyphen_values = true)]
        p: Option<[f64; 2]>,
        /// Future directions scanned (each also time-reflected).
        #[arg(long, default_value_t = 32)]
        directions: usize,
    },
    /// Busemann limit on a grid; writes field.csv, history.json and
    /// periodicity.json.
    Busemann {
        #[command(flatten)]
        common: Common,
        /// Base point of the ray; defaults to the window centre.
        #[arg(long, value_name = "X,Y", value_parser = parse_list::<2>, allow_hyphen_values = true)]
        p: Option<[f64; 2]>,
        /// Number of poles in the geometric schedule.
        #[arg(long)]
        poles: Option<usize>,
    },
    /// Integral curves of the gradient; writes leaves.csv, direction.json and
    /// disjointness.json.
    Foliate {
        #[command(flatten)]
        common: Common,
        /// Read the potential from a field.csv instead of constructing it.
        #[arg(long, value_name = "PATH")]
        field: Option<PathBuf>,
        /// Number of leaves, seeded along the bottom of the window.
        #[arg(long)]
        leaves: Option<usize>,
        #[arg(long, value_name = "X,Y", value_parser = parse_list::<2>, allow_hyphen_values = true)]
        p: Option<[f64; 2]>,
        #[arg(long)]
        poles: Option<usize>,
    },
    /// Signature gate and the metric-generic checks; writes verify.json.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Also run the twelve fixed acceptance criteria.
        #[arg(long)]
        acceptance: bool,
    },
}

fn dispatch(cmd: Command) -> Result<bool, CliError> {
    match cmd {
        Command::Cone { common } => commands::cone(&Resolved::new(&common)?).map(|_| true),
        Command::Distance { common, x, y } => commands::distance(&Resolved::new(&common)?, x, y).map(|_| true),
        Command::Pole { common, p, directions } => {
            commands::pole(&Resolved::new(&common)?, p, directions).map(|_| true)
        }
        Command::Busemann { common, p, poles } => commands::busemann(&Resolved::new(&common)?, p, poles).map(|_| true),
        Command::Foliate {
            common,
            field,
            leaves,
            p,
            poles,
        } => commands::foliate(
            &Resolved::new(&common)?,
            &commands::FoliateArgs { field, leaves, p, poles },
        )
        .map(|_| true),
        Command::Verify { common, acceptance } => commands::verify(&Resolved::new(&common)?, acceptance),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("foliate: some checks failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("foliate: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
