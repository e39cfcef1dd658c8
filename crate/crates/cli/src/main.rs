use std::process::ExitCode;

use clap::Parser;

mod args;
mod commands;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => commands::train(a),
        Command::ExportScores(a) => commands::export_scores(a),
        Command::Project(a) => commands::project(a),
        Command::Parse(a) => commands::parse(a),
        Command::Eval(a) => commands::eval(a),
        Command::BlankoutExperiment(a) => commands::blankout_experiment(a),
        Command::Synth(a) => commands::synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}
