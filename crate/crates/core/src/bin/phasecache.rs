use std::process::ExitCode;

use clap::Parser;
use phasecache::cli::{main_with, Cli};

fn main() -> ExitCode {
    let code = main_with(Cli::parse());
    ExitCode::from(code as u8)
}
