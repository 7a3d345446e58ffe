//! `sdof` — skipped-detection optical-flow tracking from the command line.
//!
//! Exit codes: 0 on success, 1 on usage errors (unknown flags, bad flag
//! syntax), 2 on data errors (missing or malformed inputs).

mod commands;
mod draw;

use clap::Parser;

#[derive(Parser)]
#[command(
    name = "sdof",
    version,
    about = "Multi-object tracking with detections every L frames and optical flow in between"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Subcommand)]
enum Command {
    /// Track objects through a PGM frame sequence using detections from a file
    Track(commands::track::Args),
    /// Score a result file against ground truth (CLEAR-MOT metrics)
    Eval(commands::eval::Args),
    /// Generate a synthetic scene with frames, ground truth, detections, and masks
    Synth(commands::synth::Args),
    /// Sweep the detection interval over a scene and report accuracy and speed
    Bench(commands::bench::Args),
    /// Draw result boxes and ids onto frames, written as PPM images
    Overlay(commands::overlay::Args),
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let outcome = match cli.command {
        Command::Track(args) => commands::track::run(args),
        Command::Eval(args) => commands::eval::run(args),
        Command::Synth(args) => commands::synth::run(args),
        Command::Bench(args) => commands::bench::run(args),
        Command::Overlay(args) => commands::overlay::run(args),
    };
    if let Err(e) = outcome {
        eprintln!("error: {e:#}");
        std::process::exit(2);
    }
}
