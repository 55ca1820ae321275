//! Command-line front end: evaluate, filter, synth, validate and fuse-check.

pub mod commands;
pub mod settings;
pub mod table;

use std::io::Write;

use anyhow::Result;
use clap::{Parser, Subcommand};

use commands::{EvaluateArgs, FilterArgs, FuseCheckArgs, SynthArgs, ValidateArgs};
use settings::{GlobalFlags, Settings};

#[derive(Parser, Debug)]
#[command(name = "xvrmot", version, about = "Cross-view referring multi-object tracking toolkit")]
pub struct Cli {
    #[command(flatten)]
    pub flags: GlobalFlags,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Score predictions per description and write a report
    Evaluate(EvaluateArgs),
    /// Keep the detections the prediction module emits for each description
    Filter(FilterArgs),
    /// Generate a synthetic scene with descriptions, scores and optional errors
    Synth(SynthArgs),
    /// Check scene, descriptions and predictions for problems
    Validate(ValidateArgs),
    /// Run the fusion and loss self-tests
    FuseCheck(FuseCheckArgs),
}

/// Runs a parsed command. `Ok(false)` means the command ran but found problems.
pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<bool> {
    let settings = Settings::resolve(&cli.flags)?;
    match &cli.command {
        Command::Evaluate(a) => commands::evaluate(a, &settings, out, err),
        Command::Filter(a) => commands::filter(a, &settings, out),
        Command::Synth(a) => commands::synth(a, &settings, out),
        Command::Validate(a) => commands::validate(a, out),
        Command::FuseCheck(a) => commands::fuse_check(a, &settings, out),
    }
}
