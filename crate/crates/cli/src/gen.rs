//! `revdeconv gen-weights` / `gen-input` — deterministic fixture files.

use clap::Args;
use revdeconv::{
    init_weights, load_config, noise_inputs, save_feature_map, save_weights, Result,
};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Args)]
pub struct GenWeightsArgs {
    /// Network config (TOML)
    #[arg(long)]
    pub config: PathBuf,

    /// Where to write the weight file (RVDW)
    #[arg(long)]
    pub out: PathBuf,

    /// RNG seed
    #[arg(long, default_value_t = 42)]
    pub seed: u64,

    /// Standard deviation of the weight distribution
    #[arg(long, default_value_t = 0.1)]
    pub scale: f64,
}

pub fn run_weights(args: &GenWeightsArgs) -> Result<ExitCode> {
    let cfg = load_config(&args.config)?;
    let weights = init_weights(&cfg.layers, cfg.frac_bits, args.scale, args.seed)?;
    save_weights(&args.out, &weights, cfg.frac_bits)?;
    let count: usize = weights.iter().map(|w| w.weights().len()).sum();
    println!(
        "wrote {} ({} layers, {count} weights)",
        args.out.display(),
        weights.len()
    );
    Ok(ExitCode::SUCCESS)
}

#[derive(Args)]
pub struct GenInputArgs {
    /// Network config (TOML)
    #[arg(long)]
    pub config: PathBuf,

    /// Where to write the input feature map (RVDF)
    #[arg(long)]
    pub out: PathBuf,

    /// RNG seed
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

pub fn run_input(args: &GenInputArgs) -> Result<ExitCode> {
    let cfg = load_config(&args.config)?;
    let first = cfg.layers[0].params;
    let map = noise_inputs(&first, 1, cfg.frac_bits, args.seed)?.remove(0);
    save_feature_map(&args.out, &map)?;
    println!(
        "wrote {} ({}x{}x{})",
        args.out.display(),
        map.channels(),
        map.height(),
        map.width()
    );
    Ok(ExitCode::SUCCESS)
}
