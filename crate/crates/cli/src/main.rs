//! `evalplan`: plan sample sizes, audit estimator bias, build ROC curves,
//! recombine per-category rates, and run the time-delay protocol from the
//! command line. Data goes to stdout (or `--out`); diagnostics go to
//! stderr; any failure exits with code 2 and a one-line message.

#![forbid(unsafe_code)]

use clap::Parser;

mod args;
mod grid;
mod run;
mod table;

fn main() {
    let cli = args::Cli::parse();
    if let Err(message) = run::dispatch(cli) {
        eprintln!("error: {message}");
        std::process::exit(2);
    }
}
