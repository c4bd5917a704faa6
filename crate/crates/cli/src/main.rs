//! `thinfilm` command-line front end.
//!
//! Each command writes a CSV series (`r,h,dh,e1,e2`) where applicable and a
//! JSON summary that embeds the run manifest. Exit codes: 0 success, 2 usage,
//! 3 solver failure, 4 verification failure, 1 output I/O error.

mod cli;
mod commands;
mod output;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use crate::cli::{Cli, Command};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(2),
            };
        }
    };
    let outcome = match &cli.command {
        Command::Smooth(a) => commands::smooth(a),
        Command::Rupture(a) => commands::rupture(a),
        Command::Bvp(a) => commands::bvp(a),
        Command::Verify(a) => commands::verify(a),
    };
    match outcome {
        Ok(path) => {
            println!("{}", path.display());
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("thinfilm: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}
