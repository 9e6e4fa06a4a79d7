//! `spectral`: synthetic data, descriptor extraction, anomaly heads and
//! spectral compression from the command line.
//!
//! Exit codes: 0 success, 2 config error, 3 data error.

mod args;
mod config;
mod error;
mod head;
mod io;
mod kd;
mod spectra;

use std::process::ExitCode;

use clap::{CommandFactory, Parser};

use args::{Cli, Command};
use error::CliError;

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::GenSynth(a) => spectra::gen_synth(&a),
        Command::GenDataset(a) => spectra::gen_dataset(&a),
        Command::Analyze(a) => spectra::analyze(&a),
        Command::FitMp(a) => spectra::fit_mp(&a),
        Command::TwTable(a) => spectra::tw_table(&a),
        Command::Schema => {
            print!("{}", spectral_core::features::schema_text());
            Ok(())
        }
        Command::TrainHead(a) => head::train_head(&a),
        Command::Score(a) => head::score(&a),
        Command::Monitor(a) => head::monitor(&a),
        Command::Compress(a) => kd::compress(&a),
        Command::SweepQuantile(a) => kd::sweep_quantile(&a),
    }
}

fn main() -> ExitCode {
    let raw: Vec<String> = match std::env::args_os().map(|a| a.into_string()).collect() {
        Ok(v) => v,
        Err(bad) => {
            eprintln!("config error: argument is not valid UTF-8: {bad:?}");
            return ExitCode::from(2);
        }
    };
    let merged = match config::merge_config(raw, &Cli::command()) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let cli = match Cli::try_parse_from(merged) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
