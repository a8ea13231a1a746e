//! `revdeconv bench` — wall-clock host benchmark, layer by layer.
//!
//! Times the functional kernel on this machine and prints the modeled
//! accelerator latency beside it. Absolute wall-clock numbers are
//! host-specific; the op counts and modeled columns are deterministic.

use crate::util;
use clap::Args;
use revdeconv::{
    deconv_layer, load_config, noise_inputs, simulate_layer_profile, Error, Result,
    SparsityProfile,
};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Args)]
pub struct BenchArgs {
    /// Network config (TOML)
    #[arg(long)]
    pub config: PathBuf,

    /// Weights file; overrides the config's `weights` entry
    #[arg(long)]
    pub weights: Option<PathBuf>,

    /// Timed repetitions per layer
    #[arg(long, default_value_t = 5)]
    pub repeat: usize,

    /// Output tiling factor; defaults to the DSE selection
    #[arg(long)]
    pub t_oh: Option<usize>,

    /// Skip multiply-accumulates whose weight is zero
    #[arg(long)]
    pub zero_skip: bool,

    /// Worker threads (0 = one per core)
    #[arg(long, default_value_t = 1)]
    pub workers: usize,

    /// RNG seed for the latent input
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

pub fn run(args: &BenchArgs) -> Result<ExitCode> {
    if args.repeat == 0 {
        return Err(Error::Param("repeat must be >= 1".into()));
    }
    let cfg = load_config(&args.config)?;
    let weights = util::load_weights_for(&cfg, &args.config, args.weights.as_deref())?;
    let t_oh = util::resolve_t_oh(&cfg, args.t_oh)?;
    println!(
        "{}: t_oh={t_oh}, zero_skip={}, repeat={}, workers={}",
        cfg.name, args.zero_skip, args.repeat, args.workers
    );

    let mut x = noise_inputs(&cfg.layers[0].params, 1, cfg.frac_bits, args.seed)?.remove(0);
    let mut total_mean = 0.0;
    let mut total_macs = 0u64;
    let mut total_modeled = 0.0;
    for (li, layer) in cfg.layers.iter().enumerate() {
        let p = layer.params;
        let mut times = Vec::with_capacity(args.repeat);
        let mut result = None;
        for _ in 0..args.repeat {
            let start = Instant::now();
            let out = deconv_layer(&x, &weights[li], &p, t_oh, cfg.frac_bits, args.zero_skip, args.workers)?;
            times.push(start.elapsed().as_secs_f64());
            result = Some(out);
        }
        let (mut y, counter) = result.expect("repeat >= 1");
        let mean = times.iter().sum::<f64>() / times.len() as f64;
        let var = times.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / times.len() as f64;
        let report = simulate_layer_profile(
            &p,
            t_oh,
            &cfg.platform,
            &SparsityProfile::from_weights(&weights[li]),
            args.zero_skip,
        )?;
        println!(
            "layer {li}: mean {:.3} ms stddev {:.3} ms macs={} skipped={} modeled {:.3} ms @ {:.3} Gops/s",
            mean * 1e3,
            var.sqrt() * 1e3,
            counter.macs_executed,
            counter.macs_skipped,
            report.seconds * 1e3,
            report.effective_gops_per_s
        );
        total_mean += mean;
        total_macs += counter.macs_executed;
        total_modeled += report.seconds;
        layer.activation.apply(&mut y, cfg.frac_bits);
        x = y;
    }
    println!(
        "total: mean {:.3} ms macs={} modeled {:.3} ms",
        total_mean * 1e3,
        total_macs,
        total_modeled * 1e3
    );
    Ok(ExitCode::SUCCESS)
}
