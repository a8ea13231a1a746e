//! `revdeconv verify` — oracle-equivalence harness.
//!
//! Part A runs every layer of the config over random inputs and checks
//! the tiled reverse-looping kernel bit-exactly against the brute-force
//! scatter oracle. Part B does the same over a battery of randomized
//! geometries. Output is a pure function of the flags (no timings), so
//! reports diff cleanly across runs and worker counts.

use crate::util;
use clap::Args;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use revdeconv::{
    compute_offsets, deconv_layer, deconv_layer_with_offsets, deconv_reference, load_config,
    FeatureMap, FixedPoint32, LayerParams, Result, WeightTensor,
};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Args)]
pub struct VerifyArgs {
    /// Network config (TOML)
    #[arg(long)]
    pub config: PathBuf,

    /// Check these weights on the config layers instead of random ones
    #[arg(long)]
    pub weights: Option<PathBuf>,

    /// Random inputs per layer and per battery geometry
    #[arg(long, default_value_t = 2)]
    pub trials: usize,

    /// RNG seed; fixes every input, weight, and geometry
    #[arg(long, default_value_t = 7)]
    pub seed: u64,

    /// Worker threads for the tiled kernel (0 = one per core)
    #[arg(long, default_value_t = 1)]
    pub workers: usize,

    /// Corrupt the stride-hole offset tables before running. Failure-path
    /// hook: a correct kernel must then miscompare on strided layers.
    #[arg(long, hide = true)]
    pub corrupt_offsets: bool,
}

fn case_seed(seed: u64, part: u64, a: u64, b: u64) -> u64 {
    seed ^ part.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ a.wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
        ^ b.wrapping_mul(0x1656_67B1_9E37_79F9)
}

fn random_map(rng: &mut ChaCha20Rng, c: usize, h: usize, w: usize, frac_bits: u32) -> FeatureMap {
    let lim = 2i32 << frac_bits;
    let data = (0..c * h * w)
        .map(|_| FixedPoint32::from_raw(rng.gen_range(-lim..=lim)))
        .collect();
    FeatureMap::from_data(c, h, w, data).expect("sized to fit")
}

fn random_tensor(
    rng: &mut ChaCha20Rng,
    i_c: usize,
    o_c: usize,
    k: usize,
    frac_bits: u32,
) -> WeightTensor {
    let lim = 1i32 << frac_bits;
    let mut w = WeightTensor::zeros(i_c, o_c, k);
    for v in w.weights_mut() {
        // sprinkle zeros so zero-skipping paths are exercised
        *v = if rng.gen_bool(0.3) {
            FixedPoint32::ZERO
        } else {
            FixedPoint32::from_raw(rng.gen_range(-lim..=lim))
        };
    }
    for b in w.biases_mut() {
        *b = FixedPoint32::from_raw(rng.gen_range(-lim..=lim));
    }
    w
}

/// Distinct tiling factors worth checking for an output height.
fn tilings(o_h: usize) -> Vec<usize> {
    let mut ts = vec![1, 3.min(o_h), o_h.saturating_sub(1).max(1), o_h];
    ts.sort_unstable();
    ts.dedup();
    ts
}

struct Harness {
    frac_bits: u32,
    workers: usize,
    corrupt: bool,
    passed: usize,
    total: usize,
}

impl Harness {
    /// Compare kernel vs oracle once; returns "PASS"/"FAIL" for the report.
    fn check(
        &mut self,
        x: &FeatureMap,
        w: &WeightTensor,
        params: &LayerParams,
        t_oh: usize,
        zero_skip: bool,
    ) -> Result<&'static str> {
        let reference = deconv_reference(x, w, params, self.frac_bits)?;
        let actual = if self.corrupt && params.stride > 1 {
            let mut offsets = compute_offsets(params.kernel, params.stride, params.padding)?;
            for f in offsets.f_h.iter_mut().chain(offsets.f_w.iter_mut()) {
                *f = (*f + 1) % params.stride;
            }
            deconv_layer_with_offsets(
                x,
                w,
                params,
                &offsets,
                t_oh,
                self.frac_bits,
                zero_skip,
                self.workers,
            )?
            .0
        } else {
            deconv_layer(x, w, params, t_oh, self.frac_bits, zero_skip, self.workers)?.0
        };
        self.total += 1;
        if actual == reference {
            self.passed += 1;
            Ok("PASS")
        } else {
            Ok("FAIL")
        }
    }
}

pub fn run(args: &VerifyArgs) -> Result<ExitCode> {
    let cfg = load_config(&args.config)?;
    let fixed_weights = match &args.weights {
        Some(_) => Some(util::load_weights_for(&cfg, &args.config, args.weights.as_deref())?),
        None => None,
    };
    let mut h = Harness {
        frac_bits: cfg.frac_bits,
        workers: args.workers,
        corrupt: args.corrupt_offsets,
        passed: 0,
        total: 0,
    };
    println!(
        "verifying {}: {} layers, trials={}, seed={}",
        cfg.name,
        cfg.layers.len(),
        args.trials,
        args.seed
    );

    // Part A: the config's own layers
    for (li, layer) in cfg.layers.iter().enumerate() {
        let p = layer.params;
        for trial in 0..args.trials {
            let mut rng = ChaCha20Rng::seed_from_u64(case_seed(args.seed, 0xA, li as u64, trial as u64));
            let x = random_map(&mut rng, p.in_channels, p.in_height, p.in_width, cfg.frac_bits);
            let w = match &fixed_weights {
                Some(ws) => ws[li].clone(),
                None => random_tensor(&mut rng, p.in_channels, p.out_channels, p.kernel, cfg.frac_bits),
            };
            for (ti, t) in tilings(p.out_height).into_iter().enumerate() {
                let zero_skip = ti % 2 == 1;
                let verdict = h.check(&x, &w, &p, t, zero_skip)?;
                println!(
                    "config layer {li} trial {trial} t_oh={t} zero_skip={}: {verdict}",
                    if zero_skip { "on" } else { "off" }
                );
            }
        }
    }

    // Part B: randomized-geometry battery
    let battery = 12 * args.trials;
    for case in 0..battery {
        let mut rng = ChaCha20Rng::seed_from_u64(case_seed(args.seed, 0xB, case as u64, 0));
        let p = loop {
            let s = [1usize, 2, 3, 4][rng.gen_range(0..4)];
            let k = rng.gen_range(1..=5);
            let pad = rng.gen_range(0..k);
            let i_h = rng.gen_range(1..=5);
            let i_w = rng.gen_range(1..=5);
            let i_c = rng.gen_range(1..=4);
            let o_c = rng.gen_range(1..=4);
            match LayerParams::new(i_h, i_w, i_c, o_c, k, s, pad) {
                Ok(p) if p.out_height <= 20 && p.out_width <= 20 => break p,
                _ => continue,
            }
        };
        let x = random_map(&mut rng, p.in_channels, p.in_height, p.in_width, cfg.frac_bits);
        let w = random_tensor(&mut rng, p.in_channels, p.out_channels, p.kernel, cfg.frac_bits);
        for (ti, t) in tilings(p.out_height).into_iter().enumerate() {
            let zero_skip = ti % 2 == 0;
            let verdict = h.check(&x, &w, &p, t, zero_skip)?;
            println!(
                "battery case {case:02} S={} K={} P={} in={}x{}x{} out={}x{}x{} t_oh={t} zero_skip={}: {verdict}",
                p.stride,
                p.kernel,
                p.padding,
                p.in_channels,
                p.in_height,
                p.in_width,
                p.out_channels,
                p.out_height,
                p.out_width,
                if zero_skip { "on" } else { "off" }
            );
        }
    }

    println!("summary: {}/{} cases passed", h.passed, h.total);
    Ok(if h.passed == h.total {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}
