//! Command-line driver: simulation, reconstruction, evaluation and sweeps
//! over the `pcsmri` library, exchanging data through the binary container
//! format.
//!
//! Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 numerical
//! divergence, 5 external-prior failure.

pub mod args;
pub mod case;
pub mod config;
pub mod error;
pub mod eval;
pub mod generate;
pub mod recon;
pub mod sweep;

use args::{Cli, Command};
use error::CliResult;

/// Runs one command, returning the text to print on success.
pub fn run(cli: &Cli) -> CliResult<String> {
    match &cli.command {
        Command::Phantom(a) => generate::phantom(a),
        Command::Mask(a) => generate::mask(a),
        Command::Sense(a) => generate::sense(a),
        Command::Simulate(a) => generate::simulate(a),
        Command::Recon(a) => recon::recon(a),
        Command::Eval(a) => eval::eval(a),
        Command::Sweep(a) => sweep::sweep(a),
    }
}
