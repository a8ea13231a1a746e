//! `revdeconv` — command-line front end for the reverse-looping
//! deconvolution library: inference, oracle verification, design-space
//! exploration, the pruning trade-off sweep, host benchmarking, and
//! fixture generation.
//!
//! Exit codes: 0 on success, 1 when verification finds a mismatch,
//! 2 on usage, format, or other errors.

mod bench;
mod dse;
mod gen;
mod infer;
mod sparsity;
mod util;
mod verify;

use clap::{Parser, Subcommand};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "revdeconv", version, about = "Reverse-looping deconvolution toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a network on an input feature map and write the result
    Infer(infer::InferArgs),
    /// Check the tiled kernel against the brute-force oracle
    Verify(verify::VerifyArgs),
    /// Explore tiling factors and emit the roofline report
    Dse(dse::DseArgs),
    /// Sweep pruning fractions and emit the latency/quality report
    Sparsity(sparsity::SparsityArgs),
    /// Wall-clock host benchmark of the kernel, layer by layer
    Bench(bench::BenchArgs),
    /// Generate random weights for a config
    GenWeights(gen::GenWeightsArgs),
    /// Generate a random latent input for a config
    GenInput(gen::GenInputArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Infer(args) => infer::run(&args),
        Command::Verify(args) => verify::run(&args),
        Command::Dse(args) => dse::run(&args),
        Command::Sparsity(args) => sparsity::run(&args),
        Command::Bench(args) => bench::run(&args),
        Command::GenWeights(args) => gen::run_weights(&args),
        Command::GenInput(args) => gen::run_input(&args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
