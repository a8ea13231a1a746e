//! Cycle-approximate performance model of the pipelined accelerator.
//!
//! Each compute unit (CU) processes one output block at a time through
//! three pipelined stages — read (stream input span + weights from DRAM),
//! compute (the reverse-looping loop nest), write (one-shot output burst).
//! Blocks are assigned round-robin over the CU array; per-CU time follows
//! the classic three-stage pipeline recurrence, and layer time is the
//! worst CU. Absolute cycle counts are model-defined rather than measured
//! against silicon, so tests pin relative behavior: monotonicity,
//! proportionality, and exact agreement of modeled MAC counts with the
//! instrumented functional kernel.

use crate::error::{Error, Result};
use crate::kernel::{compute_offsets, tile_grid, tile_input_dim, valid_positions, TileSpec};
use crate::tensor::{LayerParams, WeightTensor};
use serde::{Deserialize, Serialize};

fn default_num_cus() -> usize {
    16
}
fn default_clock_hz() -> f64 {
    125e6
}
fn default_ddr_bw() -> f64 {
    1.0e9
}
fn default_word_bytes() -> usize {
    4
}
fn default_dsp_count() -> usize {
    220
}
fn default_bram_bytes() -> usize {
    645_120
}

/// Accelerator platform parameters. Defaults are sized for a small
/// SoC-FPGA target (Zynq-7020 class): 16 CUs at 125 MHz, 220 DSP slices,
/// 140 × 36 Kbit block RAMs, and 1 GB/s sustainable DDR bandwidth.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlatformModel {
    #[serde(default = "default_num_cus")]
    pub num_cus: usize,
    #[serde(default = "default_clock_hz")]
    pub clock_hz: f64,
    #[serde(default = "default_ddr_bw")]
    pub ddr_bw_bytes_per_s: f64,
    #[serde(default = "default_word_bytes")]
    pub word_bytes: usize,
    #[serde(default = "default_dsp_count")]
    pub dsp_count: usize,
    #[serde(default = "default_bram_bytes")]
    pub bram_bytes: usize,
}

impl Default for PlatformModel {
    fn default() -> Self {
        Self {
            num_cus: default_num_cus(),
            clock_hz: default_clock_hz(),
            ddr_bw_bytes_per_s: default_ddr_bw(),
            word_bytes: default_word_bytes(),
            dsp_count: default_dsp_count(),
            bram_bytes: default_bram_bytes(),
        }
    }
}

impl PlatformModel {
    pub fn validate(&self) -> Result<()> {
        if self.num_cus == 0
            || self.clock_hz <= 0.0
            || self.ddr_bw_bytes_per_s <= 0.0
            || self.word_bytes == 0
            || self.dsp_count == 0
            || self.bram_bytes == 0
        {
            return Err(Error::Param(
                "all platform parameters must be strictly positive".into(),
            ));
        }
        Ok(())
    }

    /// Peak compute throughput in ops/s: one MAC (2 ops) per CU per cycle.
    pub fn compute_roof_ops(&self) -> f64 {
        self.num_cus as f64 * self.clock_hz * 2.0
    }

    fn transfer_cycles(&self, bytes: u64) -> u64 {
        (bytes as f64 * self.clock_hz / self.ddr_bw_bytes_per_s).ceil() as u64
    }
}

/// Per-layer sparsity summary driving the model.
///
/// `per_oc_nnz` feeds block compute cycles (each block serves one output
/// channel); the optional per-tap counts make MAC accounting exact when
/// the profile was taken from a concrete tensor. A profile built from a
/// scalar nnz scales the dense MAC count proportionally instead.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparsityProfile {
    per_oc_nnz: Vec<usize>,
    /// nnz per (k_h, k_w) tap, summed over channel pairs; row-major K×K.
    tap_nnz: Option<Vec<u64>>,
    weight_count: u64,
    nnz_total: u64,
}

impl SparsityProfile {
    /// All weights nonzero.
    pub fn dense(layer: &LayerParams) -> Self {
        let kk = layer.kernel * layer.kernel;
        let pairs = (layer.in_channels * layer.out_channels) as u64;
        Self {
            per_oc_nnz: vec![layer.in_channels * kk; layer.out_channels],
            tap_nnz: Some(vec![pairs; kk]),
            weight_count: pairs * kk as u64,
            nnz_total: pairs * kk as u64,
        }
    }

    /// Uniform nnz per output-channel block; tap distribution unknown.
    pub fn uniform(layer: &LayerParams, nnz_per_block: usize) -> Result<Self> {
        let kk = layer.kernel * layer.kernel;
        let max = layer.in_channels * kk;
        if nnz_per_block > max {
            return Err(Error::Param(format!(
                "nnz per block {nnz_per_block} exceeds I_C*K^2 = {max}"
            )));
        }
        Ok(Self {
            per_oc_nnz: vec![nnz_per_block; layer.out_channels],
            tap_nnz: None,
            weight_count: (max * layer.out_channels) as u64,
            nnz_total: (nnz_per_block * layer.out_channels) as u64,
        })
    }

    /// Exact per-block and per-tap counts from a concrete tensor.
    pub fn from_weights(w: &WeightTensor) -> Self {
        let kk = w.kernel() * w.kernel();
        let mut per_oc = vec![0usize; w.out_channels()];
        let mut taps = vec![0u64; kk];
        for i_c in 0..w.in_channels() {
            for o_c in 0..w.out_channels() {
                for (t, v) in w.block(i_c, o_c).iter().enumerate() {
                    if !v.is_zero() {
                        per_oc[o_c] += 1;
                        taps[t] += 1;
                    }
                }
            }
        }
        let nnz_total = per_oc.iter().map(|&n| n as u64).sum();
        Self {
            per_oc_nnz: per_oc,
            tap_nnz: Some(taps),
            weight_count: (w.in_channels() * w.out_channels() * kk) as u64,
            nnz_total,
        }
    }

    pub fn nnz_for_block(&self, o_c: usize) -> usize {
        self.per_oc_nnz[o_c]
    }

    pub fn nnz_total(&self) -> u64 {
        self.nnz_total
    }

    pub fn weight_count(&self) -> u64 {
        self.weight_count
    }

    /// MACs the kernel executes for this layer and profile. Exact
    /// (boundary-aware, matching the instrumented kernel) when per-tap
    /// counts are known; a proportional estimate otherwise.
    pub fn executed_macs(&self, layer: &LayerParams, zero_skip: bool) -> f64 {
        let vp_h: Vec<u64> = (0..layer.kernel)
            .map(|k| valid_positions(layer.out_height, layer.in_height, k, layer.stride, layer.padding))
            .collect();
        let vp_w: Vec<u64> = (0..layer.kernel)
            .map(|k| valid_positions(layer.out_width, layer.in_width, k, layer.stride, layer.padding))
            .collect();
        let pairs = self.weight_count / (layer.kernel * layer.kernel) as u64;
        let dense: u64 = pairs * vp_h.iter().sum::<u64>() * vp_w.iter().sum::<u64>();
        if !zero_skip {
            return dense as f64;
        }
        match &self.tap_nnz {
            Some(taps) => {
                let mut macs = 0u64;
                for k_h in 0..layer.kernel {
                    for k_w in 0..layer.kernel {
                        macs += taps[k_h * layer.kernel + k_w] * vp_h[k_h] * vp_w[k_w];
                    }
                }
                macs as f64
            }
            None => dense as f64 * self.nnz_total as f64 / self.weight_count as f64,
        }
    }
}

/// Cycles for one block's read stage: the input span for every input
/// channel plus the channel's K×K weight block, as two sequential burst
/// transfers at sustainable bandwidth. A bias-only block (empty span)
/// pays only the weight term.
pub fn block_read_cycles(tile: &TileSpec, layer: &LayerParams, platform: &PlatformModel) -> u64 {
    let input_bytes = (tile.span_words() * layer.in_channels * platform.word_bytes) as u64;
    let weight_bytes =
        (layer.kernel * layer.kernel * layer.in_channels * platform.word_bytes) as u64;
    platform.transfer_cycles(input_bytes) + platform.transfer_cycles(weight_bytes)
}

/// Cycles for one block's compute stage, initiation interval 1: one cycle
/// per (weight, on-phase output position) pair over the nominal tile
/// schedule (`⌈T/S⌉` positions per axis; the CU's loop bounds are fixed by
/// the tiling factor, with edge positions predicated off), plus a fixed
/// `T_OH·T_OW` overhead for bias initialization of the output buffer.
/// With zero-skip the weight count drops to the block's nnz.
pub fn block_compute_cycles(
    tile: &TileSpec,
    layer: &LayerParams,
    nnz_weights: usize,
    zero_skip: bool,
) -> u64 {
    let weights = if zero_skip {
        nnz_weights
    } else {
        layer.in_channels * layer.kernel * layer.kernel
    } as u64;
    let positions =
        (tile.t_oh.div_ceil(layer.stride) * tile.t_ow.div_ceil(layer.stride)) as u64;
    let epsilon = (tile.t_oh * tile.t_ow) as u64;
    weights * positions + epsilon
}

/// Cycles for one block's write stage: the produced (edge-clipped) output
/// words as a single burst.
pub fn block_write_cycles(tile: &TileSpec, platform: &PlatformModel) -> u64 {
    platform.transfer_cycles((tile.out_words() * platform.word_bytes) as u64)
}

/// One layer's entry in a [`LatencyReport`].
///
/// Stage cycle fields are the busiest single CU's per-stage totals, so
/// `pipelined_cycles >= max(read, compute, write)` always holds.
/// `giga_ops` counts 2 operations per executed MAC.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LayerReport {
    pub read_cycles: u64,
    pub compute_cycles: u64,
    pub write_cycles: u64,
    pub pipelined_cycles: u64,
    pub seconds: f64,
    pub giga_ops: f64,
    pub effective_gops_per_s: f64,
}

/// Whole-network latency summary.
#[derive(Clone, Debug, PartialEq)]
pub struct LatencyReport {
    pub layers: Vec<LayerReport>,
    pub total_seconds: f64,
    pub total_giga_ops: f64,
    /// Sum of all layers' operations over the sum of their times.
    pub throughput_gops_per_s: f64,
}

/// On-chip buffer bytes one CU needs at tiling factor `t_oh`: the
/// allocated input tile, one weight block, and the output tile.
pub fn cu_buffer_bytes(layer: &LayerParams, t_oh: usize, word_bytes: usize) -> u64 {
    let t_ih = tile_input_dim(t_oh, layer.stride, layer.kernel) + 1;
    ((t_ih * t_ih + layer.kernel * layer.kernel + t_oh * t_oh) * word_bytes) as u64
}

fn check_feasible(layer: &LayerParams, t_oh: usize, platform: &PlatformModel) -> Result<()> {
    if platform.num_cus > platform.dsp_count {
        return Err(Error::InfeasibleDesign(format!(
            "{} CUs need more DSPs than the {} available",
            platform.num_cus, platform.dsp_count
        )));
    }
    let need = platform.num_cus as u64 * cu_buffer_bytes(layer, t_oh, platform.word_bytes);
    if need > platform.bram_bytes as u64 {
        return Err(Error::InfeasibleDesign(format!(
            "t_oh={t_oh} needs {need} BRAM bytes, only {} available",
            platform.bram_bytes
        )));
    }
    Ok(())
}

/// Classic three-stage pipeline recurrence over one CU's block sequence:
/// reads are back-to-back, each later stage starts when both its input
/// block and its own unit are free.
fn cu_pipeline(seq: &[(u64, u64, u64)]) -> (u64, u64, u64, u64) {
    let (mut rd, mut cp, mut wr) = (0u64, 0u64, 0u64);
    let (mut r_done, mut c_done, mut w_done) = (0u64, 0u64, 0u64);
    for &(r, c, w) in seq {
        r_done += r;
        c_done = r_done.max(c_done) + c;
        w_done = c_done.max(w_done) + w;
        rd += r;
        cp += c;
        wr += w;
    }
    (rd, cp, wr, w_done)
}

/// Model one layer at tiling factor `t_oh` under a uniform per-block nnz
/// (use [`simulate_layer_profile`] for tensor-exact sparsity). Blocks are
/// `⌈O_H/T⌉·⌈O_W/T⌉·O_C`, distributed round-robin over the CUs; layer
/// time is the slowest CU's pipelined time. Rejects designs whose per-CU
/// buffers exceed BRAM or whose CU count exceeds the DSP budget.
pub fn simulate_layer(
    layer: &LayerParams,
    t_oh: usize,
    platform: &PlatformModel,
    nnz_weights: usize,
    zero_skip: bool,
) -> Result<LayerReport> {
    simulate_layer_profile(
        layer,
        t_oh,
        platform,
        &SparsityProfile::uniform(layer, nnz_weights)?,
        zero_skip,
    )
}

/// [`simulate_layer`] with per-output-channel nnz counts.
pub fn simulate_layer_profile(
    layer: &LayerParams,
    t_oh: usize,
    platform: &PlatformModel,
    profile: &SparsityProfile,
    zero_skip: bool,
) -> Result<LayerReport> {
    platform.validate()?;
    check_feasible(layer, t_oh, platform)?;
    let offsets = compute_offsets(layer.kernel, layer.stride, layer.padding)?;
    let tiles = tile_grid(layer, t_oh, &offsets)?;

    // Round-robin assignment of (o_c, tile) blocks over the CU array.
    let mut cu_seqs: Vec<Vec<(u64, u64, u64)>> = vec![Vec::new(); platform.num_cus];
    let mut b = 0usize;
    for o_c in 0..layer.out_channels {
        let nnz = profile.nnz_for_block(o_c);
        for tile in &tiles {
            cu_seqs[b % platform.num_cus].push((
                block_read_cycles(tile, layer, platform),
                block_compute_cycles(tile, layer, nnz, zero_skip),
                block_write_cycles(tile, platform),
            ));
            b += 1;
        }
    }

    let (mut read, mut compute, mut write, mut pipelined) = (0u64, 0u64, 0u64, 0u64);
    for seq in &cu_seqs {
        let (r, c, w, total) = cu_pipeline(seq);
        read = read.max(r);
        compute = compute.max(c);
        write = write.max(w);
        pipelined = pipelined.max(total);
    }

    let seconds = pipelined as f64 / platform.clock_hz;
    let giga_ops = 2.0 * profile.executed_macs(layer, zero_skip) / 1e9;
    Ok(LayerReport {
        read_cycles: read,
        compute_cycles: compute,
        write_cycles: write,
        pipelined_cycles: pipelined,
        seconds,
        giga_ops,
        effective_gops_per_s: giga_ops / seconds,
    })
}

/// Model a whole network at a global tiling factor. `profiles`, when
/// given, must pair up with `layers`.
pub fn simulate_network(
    layers: &[LayerParams],
    t_oh: usize,
    platform: &PlatformModel,
    profiles: Option<&[SparsityProfile]>,
    zero_skip: bool,
) -> Result<LatencyReport> {
    if layers.is_empty() {
        return Err(Error::Param("network has no layers".into()));
    }
    if let Some(p) = profiles {
        if p.len() != layers.len() {
            return Err(Error::Param(format!(
                "{} sparsity profiles for {} layers",
                p.len(),
                layers.len()
            )));
        }
    }
    let mut reports = Vec::with_capacity(layers.len());
    for (i, layer) in layers.iter().enumerate() {
        let report = match profiles {
            Some(p) => simulate_layer_profile(layer, t_oh, platform, &p[i], zero_skip)?,
            None => simulate_layer_profile(layer, t_oh, platform, &SparsityProfile::dense(layer), zero_skip)?,
        };
        reports.push(report);
    }
    let total_seconds: f64 = reports.iter().map(|r| r.seconds).sum();
    let total_giga_ops: f64 = reports.iter().map(|r| r.giga_ops).sum();
    Ok(LatencyReport {
        throughput_gops_per_s: network_throughput(&reports)?,
        layers: reports,
        total_seconds,
        total_giga_ops,
    })
}

/// Network throughput: the sum of all layers' arithmetic operations
/// divided by the sum of their execution times.
pub fn network_throughput(reports: &[LayerReport]) -> Result<f64> {
    if reports.is_empty() {
        return Err(Error::Param("throughput of an empty report list".into()));
    }
    let ops: f64 = reports.iter().map(|r| r.giga_ops).sum();
    let secs: f64 = reports.iter().map(|r| r.seconds).sum();
    Ok(ops / secs)
}

/// External-memory traffic for one layer at tiling factor `t_oh`: every
/// block streams its input span and weight block once per input channel
/// and writes its clipped output once. Smaller tiles re-fetch overlapping
/// input more often. Agrees exactly with the functional kernel's byte
/// counter (at 4-byte words).
pub fn layer_traffic_bytes(layer: &LayerParams, t_oh: usize, word_bytes: usize) -> Result<u64> {
    let offsets = compute_offsets(layer.kernel, layer.stride, layer.padding)?;
    let tiles = tile_grid(layer, t_oh, &offsets)?;
    let kk = layer.kernel * layer.kernel;
    let per_oc: u64 = tiles
        .iter()
        .map(|t| ((t.span_words() + kk) * layer.in_channels + t.out_words()) as u64)
        .sum();
    Ok(per_oc * layer.out_channels as u64 * word_bytes as u64)
}
