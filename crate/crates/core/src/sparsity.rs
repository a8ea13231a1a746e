//! Magnitude pruning, MMD-based sample-quality estimation, and the
//! latency×quality trade-off sweep.
//!
//! Pruning zeroes the globally smallest-magnitude weights; zero-skipping
//! then converts that sparsity into modeled speedup. Quality of the pruned
//! generator is measured as the squared maximum mean discrepancy between
//! generated samples and ground truth under a Gaussian kernel whose
//! bandwidth is the median pairwise ground-truth distance. The combined
//! metric `(d_0/d_p)·(t_0/t_p)` is 1 at the unpruned baseline by
//! definition and peaks at the sparsity level worth operating at.

use crate::error::{Error, Result};
use crate::fixed::FixedPoint32;
use crate::model::{simulate_network, PlatformModel, SparsityProfile};
use crate::network::{run_network, NetworkLayer};
use crate::svg::Plot;
use crate::tensor::{FeatureMap, WeightTensor};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use std::path::{Path, PathBuf};

/// A batch of flat real-valued sample vectors sharing one dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    dim: usize,
    data: Vec<f64>,
}

impl SampleSet {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Shape("sample dimension must be >= 1".into()));
        }
        if data.len() % dim != 0 {
            return Err(Error::Shape(format!(
                "data length {} is not a multiple of dimension {dim}",
                data.len()
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Deterministic synthetic "ground truth": `n` i.i.d. N(0, std²) vectors
/// of dimension `d`. Used as the shipped stand-in for a real image set.
pub fn gaussian_sample_set(n: usize, d: usize, std: f64, seed: u64) -> Result<SampleSet> {
    let normal = Normal::new(0.0, std).map_err(|e| Error::Param(format!("std: {e}")))?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    SampleSet::new(d, (0..n * d).map(|_| normal.sample(&mut rng)).collect())
}

/// How many weights a fraction `p` of `n` selects: ⌊p·n⌋, with a small
/// epsilon so decimal grid values whose binary form sits just under an
/// integer (e.g. 0.3·10) still select the intended count.
fn prune_count(p: f64, n: usize) -> usize {
    ((p * n as f64 + 1e-9).floor() as usize).min(n)
}

/// Zero the ⌊p·N⌋ smallest-magnitude weights of one tensor (biases are
/// never pruned). Ties break by ascending flat index, so the result is a
/// pure function of the tensor and `p`.
pub fn prune_by_magnitude(w: &WeightTensor, p: f64) -> Result<WeightTensor> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Param(format!("pruning fraction {p} outside [0, 1]")));
    }
    let mut order: Vec<usize> = (0..w.weights().len()).collect();
    order.sort_unstable_by_key(|&i| ((w.weights()[i].raw() as i64).abs(), i));
    let mut out = w.clone();
    for &i in order.iter().take(prune_count(p, order.len())) {
        out.weights_mut()[i] = FixedPoint32::ZERO;
    }
    Ok(out)
}

/// Magnitude pruning with a single global threshold across all layers:
/// the ⌊p·N_total⌋ smallest weights of the whole network are zeroed,
/// wherever they live. Ties break by (layer, flat index) ascending.
pub fn prune_network(weights: &[WeightTensor], p: f64) -> Result<Vec<WeightTensor>> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Param(format!("pruning fraction {p} outside [0, 1]")));
    }
    let mut order: Vec<(u64, usize, usize)> = Vec::new();
    for (li, w) in weights.iter().enumerate() {
        for (i, v) in w.weights().iter().enumerate() {
            order.push(((v.raw() as i64).unsigned_abs(), li, i));
        }
    }
    order.sort_unstable();
    let mut out: Vec<WeightTensor> = weights.to_vec();
    for &(_, li, i) in order.iter().take(prune_count(p, order.len())) {
        out[li].weights_mut()[i] = FixedPoint32::ZERO;
    }
    Ok(out)
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Median pairwise Euclidean distance between ground-truth samples; the
/// Gaussian kernel bandwidth σ. Even pair counts average the two middle
/// values. An all-identical set has no usable bandwidth.
pub fn median_bandwidth(ground_truth: &SampleSet) -> Result<f64> {
    let n = ground_truth.len();
    if n < 2 {
        return Err(Error::Param("bandwidth needs at least two samples".into()));
    }
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            dists.push(squared_distance(ground_truth.row(i), ground_truth.row(j)).sqrt());
        }
    }
    dists.sort_unstable_by(f64::total_cmp);
    let m = dists.len();
    let sigma = if m % 2 == 1 {
        dists[m / 2]
    } else {
        0.5 * (dists[m / 2 - 1] + dists[m / 2])
    };
    if sigma == 0.0 {
        return Err(Error::DegenerateBandwidth);
    }
    Ok(sigma)
}

#[inline]
fn gauss_kernel(a: &[f64], b: &[f64], two_sigma_sq: f64) -> f64 {
    (-squared_distance(a, b) / two_sigma_sq).exp()
}

fn kernel_mean(x: &SampleSet, y: &SampleSet, two_sigma_sq: f64) -> f64 {
    let mut sum = 0.0;
    for i in 0..x.len() {
        for j in 0..y.len() {
            sum += gauss_kernel(x.row(i), y.row(j), two_sigma_sq);
        }
    }
    sum / (x.len() as f64 * y.len() as f64)
}

fn check_mmd_inputs(x: &SampleSet, y: &SampleSet, sigma: f64) -> Result<()> {
    if x.dim() != y.dim() {
        return Err(Error::Shape(format!(
            "sample dimensions differ: {} vs {}",
            x.dim(),
            y.dim()
        )));
    }
    if x.is_empty() || y.is_empty() {
        return Err(Error::Param("MMD needs non-empty sample sets".into()));
    }
    if sigma <= 0.0 {
        return Err(Error::Param(format!("bandwidth must be positive, got {sigma}")));
    }
    Ok(())
}

/// Squared MMD, biased (V-statistic) estimate with the Gaussian kernel
/// `k(a, b) = exp(-‖a-b‖² / (2σ²))`:
/// `mean(k_XX) + mean(k_YY) - 2·mean(k_XY)` over all ordered pairs,
/// diagonals included. This is a squared RKHS norm, so it is clamped at
/// zero against last-ulp cancellation and is exactly 0 for `Y == X`.
pub fn mmd_squared(x: &SampleSet, y: &SampleSet, sigma: f64) -> Result<f64> {
    check_mmd_inputs(x, y, sigma)?;
    let two_sigma_sq = 2.0 * sigma * sigma;
    let v = kernel_mean(x, x, two_sigma_sq) + kernel_mean(y, y, two_sigma_sq)
        - 2.0 * kernel_mean(x, y, two_sigma_sq);
    Ok(v.max(0.0))
}

/// Squared MMD, unbiased (U-statistic) estimate: diagonal terms of the
/// within-set means are excluded and the estimate may legitimately be
/// negative. Needs at least two samples per set.
pub fn mmd_squared_unbiased(x: &SampleSet, y: &SampleSet, sigma: f64) -> Result<f64> {
    check_mmd_inputs(x, y, sigma)?;
    if x.len() < 2 || y.len() < 2 {
        return Err(Error::Param("unbiased MMD needs at least two samples per set".into()));
    }
    let two_sigma_sq = 2.0 * sigma * sigma;
    let off_diag_mean = |s: &SampleSet| {
        let n = s.len();
        let mut sum = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    sum += gauss_kernel(s.row(i), s.row(j), two_sigma_sq);
                }
            }
        }
        sum / (n as f64 * (n - 1) as f64)
    };
    Ok(off_diag_mean(x) + off_diag_mean(y) - 2.0 * kernel_mean(x, y, two_sigma_sq))
}

/// One sweep sample: pruning fraction, modeled latency, MMD² distance,
/// and the combined trade-off metric `(d_0/d_p)·(t_0/t_p)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SparsityPoint {
    pub p: f64,
    pub t_p: f64,
    pub d_p: f64,
    pub metric: f64,
}

/// Full sweep result.
#[derive(Clone, Debug, PartialEq)]
pub struct SparsitySweep {
    pub points: Vec<SparsityPoint>,
    /// Grid value with the highest metric (ties: smallest p).
    pub argmax_p: f64,
    /// Kernel bandwidth used for every MMD evaluation.
    pub sigma: f64,
}

/// Generate one flattened real-valued sample per noise input through the
/// (possibly pruned) generator. Samples are produced in input order
/// regardless of worker count.
fn generate_samples(
    layers: &[NetworkLayer],
    weights: &[WeightTensor],
    noise: &[FeatureMap],
    t_oh: usize,
    frac_bits: u32,
    pool: Option<&rayon::ThreadPool>,
) -> Result<SampleSet> {
    let run_one = |z: &FeatureMap| -> Result<Vec<f64>> {
        let (y, _) = run_network(layers, weights, z, t_oh, frac_bits, true, 1)?;
        Ok(y.to_real_vec(frac_bits))
    };
    let rows: Result<Vec<Vec<f64>>> = match pool {
        None => noise.iter().map(run_one).collect(),
        Some(pool) => pool.install(|| noise.par_iter().map(run_one).collect()),
    };
    let rows = rows?;
    let last = layers.last().expect("chain checked").params;
    let d = last.out_channels * last.out_height * last.out_width;
    SampleSet::new(d, rows.into_iter().flatten().collect())
}

/// Sweep pruning fractions over a fixed noise batch and ground-truth set.
///
/// The grid must contain 0 (the baseline defining `t_0` and `d_0`); the
/// same noise inputs serve every fraction so comparisons are paired.
/// Latencies come from the performance model with zero-skip enabled and
/// the pruned tensors' actual per-channel sparsity, never from wall
/// clock, so the sweep is reproducible. `workers` parallelizes sample
/// generation (1 = stay on the calling thread, 0 = all cores); results
/// are identical for any value.
#[allow(clippy::too_many_arguments)]
pub fn sparsity_sweep(
    layers: &[NetworkLayer],
    weights: &[WeightTensor],
    noise: &[FeatureMap],
    ground_truth: &SampleSet,
    p_grid: &[f64],
    platform: &PlatformModel,
    t_oh: usize,
    frac_bits: u32,
    workers: usize,
) -> Result<SparsitySweep> {
    if !p_grid.iter().any(|&p| p == 0.0) {
        return Err(Error::Param("pruning grid must include 0 (the baseline)".into()));
    }
    if noise.is_empty() {
        return Err(Error::Param("sparsity sweep needs at least one noise input".into()));
    }
    let sigma = median_bandwidth(ground_truth)?;
    let pool = match workers {
        1 => None,
        n => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(n) // 0 means one thread per core
                .build()
                .map_err(|e| Error::Param(format!("worker pool: {e}")))?,
        ),
    };
    let params: Vec<_> = layers.iter().map(|l| l.params).collect();

    let eval = |p: f64| -> Result<(f64, f64)> {
        let pruned = prune_network(weights, p)?;
        let profiles: Vec<_> = pruned.iter().map(SparsityProfile::from_weights).collect();
        let t_p = simulate_network(&params, t_oh, platform, Some(&profiles), true)?.total_seconds;
        let generated =
            generate_samples(layers, &pruned, noise, t_oh, frac_bits, pool.as_ref())?;
        let d_p = mmd_squared(&generated, ground_truth, sigma)?;
        Ok((t_p, d_p))
    };

    let (t_0, d_0) = eval(0.0)?;
    if d_0 == 0.0 {
        return Err(Error::Param(
            "baseline MMD is zero; quality ratios are undefined".into(),
        ));
    }
    let mut points = Vec::with_capacity(p_grid.len());
    for &p in p_grid {
        let (t_p, d_p) = if p == 0.0 { (t_0, d_0) } else { eval(p)? };
        points.push(SparsityPoint {
            p,
            t_p,
            d_p,
            metric: (d_0 / d_p) * (t_0 / t_p),
        });
    }
    let mut best = points[0];
    for pt in &points[1..] {
        if pt.metric > best.metric || (pt.metric == best.metric && pt.p < best.p) {
            best = *pt;
        }
    }
    Ok(SparsitySweep {
        points,
        argmax_p: best.p,
        sigma,
    })
}

/// Write `sweep.csv` and `sweep.svg` under `dir`; returns both paths.
/// The SVG shows the speedup ratio t_0/t_p, the quality ratio d_0/d_p,
/// and their product (the trade-off metric). Byte-identical on re-runs.
pub fn emit_sweep(points: &[SparsityPoint], dir: &Path) -> Result<(PathBuf, PathBuf)> {
    if points.is_empty() {
        return Err(Error::Param("no sweep points to emit".into()));
    }
    std::fs::create_dir_all(dir)?;
    let mut csv = String::from("p,t_p_seconds,d_p_mmd2,metric\n");
    for pt in points {
        csv.push_str(&format!("{},{},{},{}\n", pt.p, pt.t_p, pt.d_p, pt.metric));
    }
    let csv_path = dir.join("sweep.csv");
    std::fs::write(&csv_path, csv)?;

    let base = points
        .iter()
        .find(|pt| pt.p == 0.0)
        .ok_or_else(|| Error::Param("sweep points lack the p=0 baseline".into()))?;
    let speedup: Vec<(f64, f64)> = points.iter().map(|pt| (pt.p, base.t_p / pt.t_p)).collect();
    let quality: Vec<(f64, f64)> = points.iter().map(|pt| (pt.p, base.d_p / pt.d_p)).collect();
    let metric: Vec<(f64, f64)> = points.iter().map(|pt| (pt.p, pt.metric)).collect();
    let plot = Plot::new(
        "Pruning trade-off sweep",
        "pruned fraction p",
        "ratio vs unpruned baseline",
    )
    .line_series("speedup t_0/t_p", &speedup)
    .line_series("quality d_0/d_p", &quality)
    .line_series("metric (d_0/d_p)*(t_0/t_p)", &metric);
    let svg_path = dir.join("sweep.svg");
    std::fs::write(&svg_path, plot.render()?)?;
    Ok((csv_path, svg_path))
}
