//! `revdeconv dse` — tiling-factor design-space exploration.

use clap::Args;
use revdeconv::{
    default_range, emit_roofline, enumerate_designs, load_config, pick_best, Error, Result,
};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Args)]
pub struct DseArgs {
    /// Network config (TOML)
    #[arg(long)]
    pub config: PathBuf,

    /// Smallest tiling factor to evaluate
    #[arg(long, default_value_t = 1)]
    pub t_oh_min: usize,

    /// Largest tiling factor to evaluate (default: the largest layer
    /// output height)
    #[arg(long)]
    pub t_oh_max: Option<usize>,

    /// Report directory for roofline.csv / roofline.svg
    #[arg(long, default_value = "reports")]
    pub out: PathBuf,
}

pub fn run(args: &DseArgs) -> Result<ExitCode> {
    let cfg = load_config(&args.config)?;
    let params = cfg.params();
    let hi = match args.t_oh_max {
        Some(h) => h,
        None => *default_range(&params)?.end(),
    };
    let points = enumerate_designs(&params, &cfg.platform, args.t_oh_min..=hi)?;
    let (csv, svg) = emit_roofline(&points, &cfg.platform, &args.out)?;
    println!("wrote {}", csv.display());
    println!("wrote {}", svg.display());
    let feasible = points.iter().filter(|p| p.feasible).count();
    println!("evaluated {} candidates, {} feasible", points.len(), feasible);
    match pick_best(&points) {
        Some(p) => {
            println!(
                "selected t_oh={} ai={} ops/byte attainable={} Gops/s limiting={}",
                p.t_oh, p.ai, p.attainable_gops, p.limiting
            );
            Ok(ExitCode::SUCCESS)
        }
        None => Err(Error::InfeasiblePlatform(
            "no tiling factor fits the DSP/BRAM budget".into(),
        )),
    }
}
