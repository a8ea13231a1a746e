//! `revdeconv sparsity` — pruning/quality trade-off sweep.

use crate::util;
use clap::Args;
use revdeconv::{
    emit_sweep, gaussian_sample_set, load_config, load_sample_set, noise_inputs, sparsity_sweep,
    Error, Result,
};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Args)]
pub struct SparsityArgs {
    /// Network config (TOML)
    #[arg(long)]
    pub config: PathBuf,

    /// Weights file; overrides the config's `weights` entry
    #[arg(long)]
    pub weights: Option<PathBuf>,

    /// Ground-truth sample set (RVDS); default is a synthetic Gaussian
    /// set matching the generator's output dimension
    #[arg(long)]
    pub ground_truth: Option<PathBuf>,

    /// Comma-separated pruning fractions; must include 0
    #[arg(long, default_value = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")]
    pub grid: String,

    /// Generated samples per fraction (and synthetic ground-truth size)
    #[arg(long, default_value_t = 512)]
    pub samples: usize,

    /// Output tiling factor; defaults to the DSE selection
    #[arg(long)]
    pub t_oh: Option<usize>,

    /// RNG seed for noise inputs and synthetic ground truth
    #[arg(long, default_value_t = 7)]
    pub seed: u64,

    /// Worker threads for sample generation (0 = one per core)
    #[arg(long, default_value_t = 1)]
    pub workers: usize,

    /// Report directory for sweep.csv / sweep.svg
    #[arg(long, default_value = "reports")]
    pub out: PathBuf,
}

fn parse_grid(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|e| Error::Param(format!("grid value {tok:?}: {e}")))
        })
        .collect()
}

pub fn run(args: &SparsityArgs) -> Result<ExitCode> {
    let cfg = load_config(&args.config)?;
    let weights = util::load_weights_for(&cfg, &args.config, args.weights.as_deref())?;
    let grid = parse_grid(&args.grid)?;
    let first = cfg.layers[0].params;
    let last = cfg.layers[cfg.layers.len() - 1].params;
    let d_out = last.out_channels * last.out_height * last.out_width;
    let noise = noise_inputs(&first, args.samples, cfg.frac_bits, args.seed)?;
    let ground_truth = match &args.ground_truth {
        Some(path) => {
            let set = load_sample_set(path)?;
            if set.dim() != d_out {
                return Err(Error::Shape(format!(
                    "ground truth dimension {} does not match generator output {d_out}",
                    set.dim()
                )));
            }
            set
        }
        None => gaussian_sample_set(args.samples.max(2), d_out, 0.5, args.seed ^ 0x6d6d64)?,
    };
    let t_oh = util::resolve_t_oh(&cfg, args.t_oh)?;
    let sweep = sparsity_sweep(
        &cfg.layers,
        &weights,
        &noise,
        &ground_truth,
        &grid,
        &cfg.platform,
        t_oh,
        cfg.frac_bits,
        args.workers,
    )?;
    println!(
        "{}: t_oh={t_oh}, {} noise samples, sigma={}",
        cfg.name,
        noise.len(),
        sweep.sigma
    );
    for pt in &sweep.points {
        println!("p={} t_p={} d_p={} metric={}", pt.p, pt.t_p, pt.d_p, pt.metric);
    }
    println!("argmax p={}", sweep.argmax_p);
    let (csv, svg) = emit_sweep(&sweep.points, &args.out)?;
    println!("wrote {}", csv.display());
    println!("wrote {}", svg.display());
    Ok(ExitCode::SUCCESS)
}
