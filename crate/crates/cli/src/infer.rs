//! `revdeconv infer` — run a network on one feature map.

use crate::util;
use clap::Args;
use revdeconv::{
    export_feature_map_text, load_config, load_feature_map, run_network, save_feature_map, Result,
};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Args)]
pub struct InferArgs {
    /// Network config (TOML)
    #[arg(long)]
    pub config: PathBuf,

    /// Weights file; overrides the config's `weights` entry
    #[arg(long)]
    pub weights: Option<PathBuf>,

    /// Input feature map (RVDF)
    #[arg(long)]
    pub input: PathBuf,

    /// Where to write the output feature map (RVDF)
    #[arg(long)]
    pub output: PathBuf,

    /// Output tiling factor; defaults to the DSE selection
    #[arg(long)]
    pub t_oh: Option<usize>,

    /// Skip multiply-accumulates whose weight is zero
    #[arg(long)]
    pub zero_skip: bool,

    /// Worker threads (0 = one per core)
    #[arg(long, default_value_t = 1)]
    pub workers: usize,

    /// Also write a human-readable dump beside the output
    #[arg(long)]
    pub text: bool,
}

pub fn run(args: &InferArgs) -> Result<ExitCode> {
    let cfg = load_config(&args.config)?;
    let weights = util::load_weights_for(&cfg, &args.config, args.weights.as_deref())?;
    let x = load_feature_map(&args.input)?;
    let t_oh = util::resolve_t_oh(&cfg, args.t_oh)?;
    let start = Instant::now();
    let (y, counter) = run_network(
        &cfg.layers,
        &weights,
        &x,
        t_oh,
        cfg.frac_bits,
        args.zero_skip,
        args.workers,
    )?;
    let elapsed = start.elapsed().as_secs_f64();
    save_feature_map(&args.output, &y)?;
    if args.text {
        std::fs::write(
            args.output.with_extension("txt"),
            export_feature_map_text(&y, cfg.frac_bits),
        )?;
    }
    println!(
        "{}: {} layers, t_oh={t_oh}, zero_skip={}",
        cfg.name,
        cfg.layers.len(),
        args.zero_skip
    );
    println!(
        "output {}x{}x{} -> {}",
        y.channels(),
        y.height(),
        y.width(),
        args.output.display()
    );
    println!(
        "macs executed={} skipped={} bytes read={} written={}",
        counter.macs_executed, counter.macs_skipped, counter.bytes_read, counter.bytes_written
    );
    println!("wall time {:.3} ms", elapsed * 1e3);
    Ok(ExitCode::SUCCESS)
}
