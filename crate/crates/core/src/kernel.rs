//! Reverse-looping (output-space) deconvolution.
//!
//! Instead of scattering each input pixel into an overlapping output region,
//! the kernel walks output pixels directly. For a kernel tap `k`, the output
//! positions it can produce lie on one residue class modulo the stride; the
//! precomputed per-tap offset `f[k]` names that class, so the inner loops
//! step by `S` and the back-mapping `i = (o + P - k) / S` divides exactly.
//! Output maps are processed as square tiles, each tile caching the input
//! span it depends on, and taps whose weight is zero can skip their inner
//! loops entirely without changing any output value.

use crate::error::{Error, Result};
use crate::fixed::FixedPoint32;
use crate::tensor::{FeatureMap, LayerParams, WeightTensor};
use rayon::prelude::*;

/// Bytes per stored word; all feature/weight data is 32-bit fixed point.
pub const WORD_BYTES: usize = 4;

/// Per-tap stride-hole offsets for both spatial axes.
///
/// `f_h[k]` is the residue class (mod `S`) of the output rows that kernel
/// row `k` can produce; likewise `f_w[k]` for columns. Exactly `2K` entries
/// are precomputed per layer, one modulo evaluation each.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OffsetTable {
    pub f_h: Vec<usize>,
    pub f_w: Vec<usize>,
}

/// Precompute the stride-hole offset table for a `K`/`S`/`P` geometry.
///
/// Each entry equals `mod(S - mod(P - k, S), S)` under Euclidean
/// (non-negative) modulo, computed here in the algebraically identical
/// single-modulo form `(k - P) mod S`.
pub fn compute_offsets(kernel: usize, stride: usize, padding: usize) -> Result<OffsetTable> {
    if stride == 0 {
        return Err(Error::Param("stride must be >= 1".into()));
    }
    if kernel == 0 {
        return Err(Error::Param("kernel must be >= 1".into()));
    }
    let f: Vec<usize> = (0..kernel)
        .map(|k| (k as i64 - padding as i64).rem_euclid(stride as i64) as usize)
        .collect();
    Ok(OffsetTable {
        f_h: f.clone(),
        f_w: f,
    })
}

/// Back-map an output coordinate to its unique contributing input
/// coordinate: `(o + P - k) / S`.
///
/// The division is exact by construction whenever `o` was formed as
/// `ô + f[k]` with `ô ≡ 0 (mod S)`; calling this with a non-divisible
/// combination is an offset-bookkeeping bug, so it asserts.
pub fn input_index(o: i64, k: usize, stride: usize, padding: usize) -> i64 {
    let numer = o + padding as i64 - k as i64;
    assert!(
        numer.rem_euclid(stride as i64) == 0,
        "offset misuse: ({o} + {padding} - {k}) is not divisible by stride {stride}"
    );
    numer.div_euclid(stride as i64)
}

/// Allocated input-tile side length for an output tile of side `T_OH`:
/// `⌈T_OH/S⌉ + ⌈K/S⌉`.
///
/// This is a capacity bound; the exact addresses fetched for a concrete
/// tile come from [`exact_input_span`], which can need one extra pixel
/// depending on the tile's phase relative to the stride grid (buffers are
/// therefore allocated one larger, see [`TileSpec`]).
pub fn tile_input_dim(t_oh: usize, stride: usize, kernel: usize) -> usize {
    t_oh.div_ceil(stride) + kernel.div_ceil(stride)
}

/// Inclusive input-coordinate range on one axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AxisSpan {
    pub min: usize,
    pub max: usize,
}

impl AxisSpan {
    /// Number of input pixels covered.
    pub fn len(&self) -> usize {
        self.max - self.min + 1
    }

    pub fn is_empty(&self) -> bool {
        false // an AxisSpan only exists for non-empty coverage
    }
}

/// The contiguous batch of valid positions one kernel tap contributes to
/// one axis of one tile: local output coordinates `u_start + j*S` map to
/// input coordinates `i_start + j` for `j` in `[0, count)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Run {
    pub u_start: usize,
    pub i_start: usize,
    pub count: usize,
}

impl Run {
    const EMPTY: Run = Run {
        u_start: 0,
        i_start: 0,
        count: 0,
    };
}

/// Valid strided positions of tap `k` on one axis of a tile at `origin`
/// with clipped extent `eff_t`, restricted to input coordinates in
/// `[0, in_dim)`.
fn axis_run(
    f_k: usize,
    origin: usize,
    eff_t: usize,
    k: usize,
    stride: usize,
    padding: usize,
    in_dim: usize,
) -> Run {
    let s = stride as i64;
    // Local phase of the tap's residue class within this tile.
    let u0 = (f_k as i64 - origin as i64).rem_euclid(s) as usize;
    if u0 >= eff_t {
        return Run::EMPTY;
    }
    let n_tile = (eff_t - 1 - u0) / stride + 1;
    // Input index at the first on-phase position. Floor division: exact
    // when the offsets are consistent, and still well-defined (stepping by
    // one per S-step of u) if they are not.
    let i0 = (origin as i64 + u0 as i64 + padding as i64 - k as i64).div_euclid(s);
    let j_start = if i0 < 0 { (-i0) as usize } else { 0 };
    let hi = in_dim as i64 - 1 - i0;
    if hi < 0 {
        return Run::EMPTY;
    }
    let j_end = (hi as usize).min(n_tile - 1);
    if j_start > j_end {
        return Run::EMPTY;
    }
    Run {
        u_start: u0 + j_start * stride,
        i_start: (i0 + j_start as i64) as usize,
        count: j_end - j_start + 1,
    }
}

/// Exhaustive min/max scan of the input coordinates one axis of a tile
/// touches, over all (on-phase output position, tap) pairs.
fn axis_span_scan(
    f: &[usize],
    origin: usize,
    eff_t: usize,
    stride: usize,
    padding: usize,
    in_dim: usize,
) -> Option<AxisSpan> {
    let mut span: Option<AxisSpan> = None;
    for (k, &f_k) in f.iter().enumerate() {
        let u0 = (f_k as i64 - origin as i64).rem_euclid(stride as i64) as usize;
        let mut u = u0;
        while u < eff_t {
            let i = (origin as i64 + u as i64 + padding as i64 - k as i64)
                .div_euclid(stride as i64);
            if i >= 0 && (i as usize) < in_dim {
                let i = i as usize;
                span = Some(match span {
                    None => AxisSpan { min: i, max: i },
                    Some(sp) => AxisSpan {
                        min: sp.min.min(i),
                        max: sp.max.max(i),
                    },
                });
            }
            u += stride;
        }
    }
    span
}

/// One square output tile: its output-space placement, the input span it
/// depends on, and the per-tap position runs the kernel iterates.
#[derive(Clone, Debug)]
pub struct TileSpec {
    /// Nominal tile side lengths (the global tiling factor).
    pub t_oh: usize,
    pub t_ow: usize,
    /// Output-space origin of the block.
    pub origin_h: usize,
    pub origin_w: usize,
    /// Extent actually covered, clipped at the output edge.
    pub eff_t_oh: usize,
    pub eff_t_ow: usize,
    /// Allocated input-tile capacity per axis: `tile_input_dim(..) + 1`
    /// (the `+1` absorbs the tile-phase off-by-one of the capacity bound).
    pub t_ih: usize,
    pub t_iw: usize,
    /// Input-space origin of the cached span (0 when the span is empty).
    pub in_origin_h: usize,
    pub in_origin_w: usize,
    /// Exact cached extent per axis; 0 means a bias-only block.
    pub span_h: usize,
    pub span_w: usize,
    runs_h: Vec<Run>,
    runs_w: Vec<Run>,
}

impl TileSpec {
    /// Build the tile at output origin `(origin_h, origin_w)` for a square
    /// tiling factor `t_oh`, clipping at the output edges.
    pub fn new(
        layer: &LayerParams,
        t_oh: usize,
        origin_h: usize,
        origin_w: usize,
        offsets: &OffsetTable,
    ) -> Result<TileSpec> {
        if t_oh == 0 {
            return Err(Error::Param("tiling factor must be >= 1".into()));
        }
        if origin_h >= layer.out_height || origin_w >= layer.out_width {
            return Err(Error::Range(format!(
                "tile origin ({origin_h}, {origin_w}) outside output {}x{}",
                layer.out_height, layer.out_width
            )));
        }
        let eff_t_oh = t_oh.min(layer.out_height - origin_h);
        let eff_t_ow = t_oh.min(layer.out_width - origin_w);
        let alloc = tile_input_dim(t_oh, layer.stride, layer.kernel) + 1;

        let runs_h: Vec<Run> = (0..layer.kernel)
            .map(|k| {
                axis_run(
                    offsets.f_h[k],
                    origin_h,
                    eff_t_oh,
                    k,
                    layer.stride,
                    layer.padding,
                    layer.in_height,
                )
            })
            .collect();
        let runs_w: Vec<Run> = (0..layer.kernel)
            .map(|k| {
                axis_run(
                    offsets.f_w[k],
                    origin_w,
                    eff_t_ow,
                    k,
                    layer.stride,
                    layer.padding,
                    layer.in_width,
                )
            })
            .collect();

        let span_of = |f: &[usize], origin, eff_t, in_dim| {
            axis_span_scan(f, origin, eff_t, layer.stride, layer.padding, in_dim)
        };
        let sh = span_of(&offsets.f_h, origin_h, eff_t_oh, layer.in_height);
        let sw = span_of(&offsets.f_w, origin_w, eff_t_ow, layer.in_width);
        // A block only reads input when both axes have coverage.
        let (in_origin_h, span_h, in_origin_w, span_w) = match (sh, sw) {
            (Some(h), Some(w)) => (h.min, h.len(), w.min, w.len()),
            _ => (0, 0, 0, 0),
        };

        Ok(TileSpec {
            t_oh,
            t_ow: t_oh,
            origin_h,
            origin_w,
            eff_t_oh,
            eff_t_ow,
            t_ih: alloc,
            t_iw: alloc,
            in_origin_h,
            in_origin_w,
            span_h,
            span_w,
            runs_h,
            runs_w,
        })
    }

    #[inline]
    pub fn run_h(&self, k: usize) -> Run {
        self.runs_h[k]
    }

    #[inline]
    pub fn run_w(&self, k: usize) -> Run {
        self.runs_w[k]
    }

    /// Words the block caches on chip (input span, one channel).
    pub fn span_words(&self) -> usize {
        self.span_h * self.span_w
    }

    /// Output words the block produces.
    pub fn out_words(&self) -> usize {
        self.eff_t_oh * self.eff_t_ow
    }
}

/// Exact per-axis input span a tile depends on, by exhaustive scan over
/// all (on-phase output position, tap) pairs; `None` on an axis means no
/// valid contribution (the block is bias-only).
///
/// This scan is authoritative for fetch addresses; the capacity formula
/// [`tile_input_dim`] only sizes the buffer.
pub fn exact_input_span(
    tile: &TileSpec,
    offsets: &OffsetTable,
    layer: &LayerParams,
) -> (Option<AxisSpan>, Option<AxisSpan>) {
    (
        axis_span_scan(
            &offsets.f_h,
            tile.origin_h,
            tile.eff_t_oh,
            layer.stride,
            layer.padding,
            layer.in_height,
        ),
        axis_span_scan(
            &offsets.f_w,
            tile.origin_w,
            tile.eff_t_ow,
            layer.stride,
            layer.padding,
            layer.in_width,
        ),
    )
}

/// Enumerate the full tile grid for a layer in row-major order. The same
/// grid serves every output channel.
pub fn tile_grid(layer: &LayerParams, t_oh: usize, offsets: &OffsetTable) -> Result<Vec<TileSpec>> {
    if t_oh == 0 {
        return Err(Error::Param("tiling factor must be >= 1".into()));
    }
    let grid_h = layer.out_height.div_ceil(t_oh);
    let grid_w = layer.out_width.div_ceil(t_oh);
    let mut tiles = Vec::with_capacity(grid_h * grid_w);
    for g_h in 0..grid_h {
        for g_w in 0..grid_w {
            tiles.push(TileSpec::new(layer, t_oh, g_h * t_oh, g_w * t_oh, offsets)?);
        }
    }
    Ok(tiles)
}

/// Work and traffic accounting for an instrumented kernel run.
///
/// `macs_executed + macs_skipped` is invariant under the zero-skip flag:
/// skipping moves valid positions from one bucket to the other, never
/// changes the totals. Byte counts reflect the exact spans staged and
/// written by the functional kernel (4 bytes per word).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OpCounter {
    pub macs_executed: u64,
    pub macs_skipped: u64,
    pub bytes_read: u64,
    pub bytes_written: u64,
}

impl OpCounter {
    pub fn merge(&mut self, other: &OpCounter) {
        self.macs_executed += other.macs_executed;
        self.macs_skipped += other.macs_skipped;
        self.bytes_read += other.bytes_read;
        self.bytes_written += other.bytes_written;
    }

    /// All in-range MAC positions, whether executed or skipped.
    pub fn total_valid_macs(&self) -> u64 {
        self.macs_executed + self.macs_skipped
    }
}

/// Count of output positions on one axis that tap `k` validly produces,
/// over the whole (untiled) map: positions `o = i*S + k - P` with
/// `o ∈ [0, out_dim)` and `i ∈ [0, in_dim)`. Tiling never changes this
/// total because tiles partition the output.
pub fn valid_positions(
    out_dim: usize,
    in_dim: usize,
    k: usize,
    stride: usize,
    padding: usize,
) -> u64 {
    let s = stride as i64;
    let ceil_div = |a: i64, b: i64| -(-a).div_euclid(b);
    let lo = ceil_div(padding as i64 - k as i64, s).max(0);
    let hi = (out_dim as i64 - 1 + padding as i64 - k as i64)
        .div_euclid(s)
        .min(in_dim as i64 - 1);
    if hi < lo {
        0
    } else {
        (hi - lo + 1) as u64
    }
}

/// One input channel's contribution to one output block.
///
/// `x_tile` is the staged `span_h × span_w` cache for this channel;
/// `w_block` holds the channel pair's `K×K` taps row-major. When `bias` is
/// given (first input channel) the block is initialized to it before any
/// accumulation. The tap loops run in fixed order (`k_h`, `k_w`, then the
/// strided output positions ascending); with `zero_skip`, taps whose
/// weight is zero skip their inner loops and only the counter moves.
#[allow(clippy::too_many_arguments)]
pub fn deconv_block(
    x_tile: &[FixedPoint32],
    w_block: &[FixedPoint32],
    bias: Option<FixedPoint32>,
    tile: &TileSpec,
    layer: &LayerParams,
    frac_bits: u32,
    zero_skip: bool,
    y_block: &mut [FixedPoint32],
    counter: &mut OpCounter,
) {
    debug_assert_eq!(y_block.len(), tile.out_words());
    debug_assert_eq!(x_tile.len(), tile.span_words());
    debug_assert_eq!(w_block.len(), layer.kernel * layer.kernel);

    if let Some(b) = bias {
        y_block.fill(b);
    }

    let kk = layer.kernel;
    let s = layer.stride;
    for k_h in 0..kk {
        let rh = tile.run_h(k_h);
        if rh.count == 0 {
            continue;
        }
        for k_w in 0..kk {
            let rw = tile.run_w(k_w);
            if rw.count == 0 {
                continue;
            }
            let wv = w_block[k_h * kk + k_w];
            let positions = (rh.count * rw.count) as u64;
            if zero_skip && wv.is_zero() {
                counter.macs_skipped += positions;
                continue;
            }
            counter.macs_executed += positions;
            for j_h in 0..rh.count {
                let x_row = (rh.i_start + j_h - tile.in_origin_h) * tile.span_w;
                let y_row = (rh.u_start + j_h * s) * tile.eff_t_ow;
                let mut u_w = rw.u_start;
                let mut x_i = x_row + (rw.i_start - tile.in_origin_w);
                for _ in 0..rw.count {
                    let y_i = y_row + u_w;
                    y_block[y_i] = y_block[y_i].mac(wv, x_tile[x_i], frac_bits);
                    u_w += s;
                    x_i += 1;
                }
            }
        }
    }
}

fn stage_input_tile(x: &FeatureMap, i_c: usize, tile: &TileSpec, scratch: &mut [FixedPoint32]) {
    let plane = x.channel(i_c);
    let width = x.width();
    for r in 0..tile.span_h {
        let src = (tile.in_origin_h + r) * width + tile.in_origin_w;
        scratch[r * tile.span_w..(r + 1) * tile.span_w]
            .copy_from_slice(&plane[src..src + tile.span_w]);
    }
}

/// Run one output block (all input channels) for output channel `o_c`.
fn run_block(
    x: &FeatureMap,
    w: &WeightTensor,
    layer: &LayerParams,
    tile: &TileSpec,
    o_c: usize,
    frac_bits: u32,
    zero_skip: bool,
) -> (Vec<FixedPoint32>, OpCounter) {
    let mut counter = OpCounter::default();
    let mut y_block = vec![FixedPoint32::ZERO; tile.out_words()];
    let mut scratch = vec![FixedPoint32::ZERO; tile.span_words()];
    let weight_bytes = (layer.kernel * layer.kernel * WORD_BYTES) as u64;
    for i_c in 0..layer.in_channels {
        stage_input_tile(x, i_c, tile, &mut scratch);
        counter.bytes_read += (tile.span_words() * WORD_BYTES) as u64 + weight_bytes;
        let bias = if i_c == 0 { Some(w.bias(o_c)) } else { None };
        deconv_block(
            &scratch,
            w.block(i_c, o_c),
            bias,
            tile,
            layer,
            frac_bits,
            zero_skip,
            &mut y_block,
            &mut counter,
        );
    }
    counter.bytes_written += (tile.out_words() * WORD_BYTES) as u64;
    (y_block, counter)
}

/// Tiled reverse-looping deconvolution over a full layer.
///
/// The output is partitioned into `⌈O_H/T⌉·⌈O_W/T⌉` square blocks per
/// output channel (edge blocks clip); every block runs the complete
/// input-channel loop independently, so blocks may execute on any number
/// of workers with identical results. `workers` of 1 stays on the calling
/// thread; 0 uses all cores; any other value runs a dedicated pool of that
/// size. A tiling factor larger than the output behaves as one full tile.
///
/// Returns the output map and the instrumented work/traffic counter
/// (reduced over blocks in grid order; all fields are order-independent
/// sums).
pub fn deconv_layer(
    x: &FeatureMap,
    w: &WeightTensor,
    layer: &LayerParams,
    t_oh: usize,
    frac_bits: u32,
    zero_skip: bool,
    workers: usize,
) -> Result<(FeatureMap, OpCounter)> {
    let offsets = compute_offsets(layer.kernel, layer.stride, layer.padding)?;
    deconv_layer_with_offsets(x, w, layer, &offsets, t_oh, frac_bits, zero_skip, workers)
}

/// [`deconv_layer`] with a caller-supplied offset table. Exposed so that
/// verification harnesses can substitute a deliberately wrong table and
/// observe the mismatch; normal callers use [`deconv_layer`].
#[allow(clippy::too_many_arguments)]
pub fn deconv_layer_with_offsets(
    x: &FeatureMap,
    w: &WeightTensor,
    layer: &LayerParams,
    offsets: &OffsetTable,
    t_oh: usize,
    frac_bits: u32,
    zero_skip: bool,
    workers: usize,
) -> Result<(FeatureMap, OpCounter)> {
    layer.check_input(x)?;
    layer.check_weights(w)?;
    if offsets.f_h.len() != layer.kernel || offsets.f_w.len() != layer.kernel {
        return Err(Error::Param(format!(
            "offset table has {} entries, layer kernel is {}",
            offsets.f_h.len() + offsets.f_w.len(),
            2 * layer.kernel
        )));
    }
    let tiles = tile_grid(layer, t_oh, offsets)?;

    // Blocks are (o_c, tile) pairs in a fixed order; results are collected
    // in that order regardless of scheduling, so output bytes and counter
    // totals never depend on the worker count.
    let blocks: Vec<(usize, usize)> = (0..layer.out_channels)
        .flat_map(|o_c| (0..tiles.len()).map(move |g| (o_c, g)))
        .collect();
    let eval = |&(o_c, g): &(usize, usize)| {
        run_block(x, w, layer, &tiles[g], o_c, frac_bits, zero_skip)
    };
    let results: Vec<(Vec<FixedPoint32>, OpCounter)> = if workers == 1 {
        blocks.iter().map(eval).collect()
    } else if workers == 0 {
        blocks.par_iter().map(eval).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Param(format!("worker pool: {e}")))?;
        pool.install(|| blocks.par_iter().map(eval).collect())
    };

    let mut y = FeatureMap::zeros(layer.out_channels, layer.out_height, layer.out_width);
    let mut counter = OpCounter::default();
    let out_width = layer.out_width;
    for ((o_c, g), (y_block, ctr)) in blocks.iter().zip(results.iter()) {
        let tile = &tiles[*g];
        let plane = y.channel_mut(*o_c);
        for r in 0..tile.eff_t_oh {
            let dst = (tile.origin_h + r) * out_width + tile.origin_w;
            plane[dst..dst + tile.eff_t_ow]
                .copy_from_slice(&y_block[r * tile.eff_t_ow..(r + 1) * tile.eff_t_ow]);
        }
        counter.merge(ctr);
    }
    Ok((y, counter))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixed::DEFAULT_FRAC_BITS as F;
    use crate::reference::deconv_reference;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// The two-step offset definition, kept in its original form as the
    /// test oracle for `compute_offsets`.
    fn offset_by_definition(k: usize, s: usize, p: usize) -> usize {
        let inner = (p as i64 - k as i64).rem_euclid(s as i64);
        (s as i64 - inner).rem_euclid(s as i64) as usize
    }

    fn random_layer(rng: &mut ChaCha8Rng) -> LayerParams {
        loop {
            let k = rng.gen_range(1..=5);
            let s = [1usize, 2, 4][rng.gen_range(0..3)];
            let p = rng.gen_range(0..k);
            if let Ok(layer) = LayerParams::new(
                rng.gen_range(1..=9),
                rng.gen_range(1..=9),
                rng.gen_range(1..=3),
                rng.gen_range(1..=3),
                k,
                s,
                p,
            ) {
                return layer;
            }
        }
    }

    fn random_io(
        rng: &mut ChaCha8Rng,
        layer: &LayerParams,
    ) -> (FeatureMap, WeightTensor) {
        let n = layer.in_channels * layer.in_height * layer.in_width;
        let x = FeatureMap::from_data(
            layer.in_channels,
            layer.in_height,
            layer.in_width,
            (0..n).map(|_| FixedPoint32::from_raw(rng.gen_range(-(1 << 20)..(1 << 20)))).collect(),
        )
        .unwrap();
        let mut w = WeightTensor::zeros(layer.in_channels, layer.out_channels, layer.kernel);
        for v in w.weights_mut() {
            *v = FixedPoint32::from_raw(rng.gen_range(-(1 << 18)..(1 << 18)));
        }
        for b in w.biases_mut() {
            *b = FixedPoint32::from_raw(rng.gen_range(-(1 << 20)..(1 << 20)));
        }
        (x, w)
    }

    #[test]
    fn offsets_match_worked_examples() {
        assert_eq!(compute_offsets(5, 2, 2).unwrap().f_h, vec![0, 1, 0, 1, 0]);
        assert_eq!(compute_offsets(3, 2, 0).unwrap().f_h, vec![0, 1, 0]);
        // Unit stride has no holes.
        assert_eq!(compute_offsets(7, 1, 3).unwrap().f_w, vec![0; 7]);
        assert!(compute_offsets(3, 0, 0).is_err());
        assert!(compute_offsets(0, 1, 0).is_err());
    }

    #[test]
    fn offsets_match_two_step_definition_exhaustively() {
        for s in 1..=8 {
            for k_dim in 1..=7 {
                let table = compute_offsets(k_dim, s, 6.min(k_dim - 1)).unwrap();
                for p in 0..=6 {
                    let table_p = compute_offsets(k_dim, s, p).unwrap();
                    for k in 0..k_dim {
                        assert_eq!(table_p.f_h[k], offset_by_definition(k, s, p));
                        // offset lands the position on the divisible class
                        assert_eq!((table_p.f_h[k] + p + 2 * s * k_dim - k) % s, 0);
                    }
                }
                assert_eq!(table.f_h.len() + table.f_w.len(), 2 * k_dim);
            }
        }
    }

    #[test]
    fn input_index_examples() {
        assert_eq!(input_index(1, 1, 2, 2), 1); // ô=0, f=1
        assert_eq!(input_index(7, 0, 1, 0), 7); // unit stride identity
        assert_eq!(input_index(4, 2, 2, 2), 2); // ô=4, f=0
    }

    #[test]
    #[should_panic(expected = "offset misuse")]
    fn input_index_asserts_on_nondivisible() {
        input_index(1, 0, 2, 0); // (1 + 0 - 0) not divisible by 2
    }

    #[test]
    fn tile_input_dim_examples() {
        assert_eq!(tile_input_dim(12, 2, 5), 9);
        assert_eq!(tile_input_dim(24, 2, 5), 15);
        assert_eq!(tile_input_dim(1, 1, 1), 2);
    }

    #[test]
    fn exact_span_identity_geometry() {
        let layer = LayerParams::new(4, 4, 1, 1, 1, 1, 0).unwrap();
        let offsets = compute_offsets(1, 1, 0).unwrap();
        let tile = TileSpec::new(&layer, 4, 0, 0, &offsets).unwrap();
        let (h, w) = exact_input_span(&tile, &offsets, &layer);
        assert_eq!(h, Some(AxisSpan { min: 0, max: 3 }));
        assert_eq!(w, Some(AxisSpan { min: 0, max: 3 }));
    }

    #[test]
    fn exact_span_matches_brute_force_over_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..300 {
            let layer = random_layer(&mut rng);
            let t = rng.gen_range(1..=layer.out_height);
            let offsets =
                compute_offsets(layer.kernel, layer.stride, layer.padding).unwrap();
            let origin_h = rng.gen_range(0..layer.out_height);
            let origin_w = rng.gen_range(0..layer.out_width);
            let tile = TileSpec::new(&layer, t, origin_h, origin_w, &offsets).unwrap();

            // Brute force directly over all (on-phase o, k) pairs.
            let brute = |origin: usize, eff: usize, in_dim: usize| {
                let mut mm: Option<(i64, i64)> = None;
                for k in 0..layer.kernel {
                    for o in origin..origin + eff {
                        // on-phase check: o ≡ f[k] (mod S)
                        if o % layer.stride != offsets.f_h[k] {
                            continue;
                        }
                        let i = input_index(o as i64, k, layer.stride, layer.padding);
                        if i >= 0 && (i as usize) < in_dim {
                            mm = Some(match mm {
                                None => (i, i),
                                Some((lo, hi)) => (lo.min(i), hi.max(i)),
                            });
                        }
                    }
                }
                mm
            };
            let bh = brute(tile.origin_h, tile.eff_t_oh, layer.in_height);
            let bw = brute(tile.origin_w, tile.eff_t_ow, layer.in_width);
            let (sh, sw) = exact_input_span(&tile, &offsets, &layer);
            assert_eq!(sh.map(|s| (s.min as i64, s.max as i64)), bh);
            assert_eq!(sw.map(|s| (s.min as i64, s.max as i64)), bw);
            // Capacity bound with its one-pixel allowance always suffices.
            if let Some(s) = sh {
                assert!(s.len() <= tile_input_dim(t, layer.stride, layer.kernel) + 1);
            }
        }
    }

    #[test]
    fn runs_agree_with_span_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..300 {
            let layer = random_layer(&mut rng);
            let t = rng.gen_range(1..=layer.out_height + 2);
            let offsets =
                compute_offsets(layer.kernel, layer.stride, layer.padding).unwrap();
            let tile = TileSpec::new(&layer, t, 0, 0, &offsets).unwrap();
            for k in 0..layer.kernel {
                let r = tile.run_h(k);
                for j in 0..r.count {
                    let u = r.u_start + j * layer.stride;
                    let i = r.i_start + j;
                    assert!(u < tile.eff_t_oh);
                    assert!(i < layer.in_height);
                    assert!(i >= tile.in_origin_h && i < tile.in_origin_h + tile.span_h);
                    // run agrees with the direct back-mapping
                    assert_eq!(
                        input_index((tile.origin_h + u) as i64, k, layer.stride, layer.padding),
                        i as i64
                    );
                }
            }
        }
    }

    #[test]
    fn tile_grid_partitions_every_output_pixel_once() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        for _ in 0..100 {
            let layer = random_layer(&mut rng);
            let t = rng.gen_range(1..=layer.out_height + 3);
            let offsets =
                compute_offsets(layer.kernel, layer.stride, layer.padding).unwrap();
            let tiles = tile_grid(&layer, t, &offsets).unwrap();
            let mut hits = vec![0u8; layer.out_height * layer.out_width];
            for tile in &tiles {
                for r in 0..tile.eff_t_oh {
                    for c in 0..tile.eff_t_ow {
                        hits[(tile.origin_h + r) * layer.out_width + tile.origin_w + c] += 1;
                    }
                }
            }
            assert!(hits.iter().all(|&h| h == 1));
        }
    }

    #[test]
    fn zero_weights_with_zero_skip_leave_block_untouched() {
        let layer = LayerParams::new(4, 4, 1, 1, 3, 2, 1).unwrap();
        let offsets = compute_offsets(3, 2, 1).unwrap();
        let tile = TileSpec::new(&layer, layer.out_height, 0, 0, &offsets).unwrap();
        let x_tile = vec![FixedPoint32::from_raw(123); tile.span_words()];
        let w_block = vec![FixedPoint32::ZERO; 9];
        let mut y_block = vec![FixedPoint32::ZERO; tile.out_words()];
        let mut counter = OpCounter::default();
        let bias = FixedPoint32::from_raw(-7);
        deconv_block(
            &x_tile, &w_block, Some(bias), &tile, &layer, F, true, &mut y_block, &mut counter,
        );
        assert!(y_block.iter().all(|v| *v == bias));
        assert_eq!(counter.macs_executed, 0);
        assert!(counter.macs_skipped > 0);
    }

    #[test]
    fn layer_matches_reference_small_battery() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for _ in 0..40 {
            let layer = random_layer(&mut rng);
            let (x, w) = random_io(&mut rng, &layer);
            let want = deconv_reference(&x, &w, &layer, F).unwrap();
            for t in [1, 3, layer.out_height.saturating_sub(1).max(1), layer.out_height] {
                let (got, _) = deconv_layer(&x, &w, &layer, t, F, false, 1).unwrap();
                assert_eq!(got, want, "t_oh={t} layer={layer:?}");
            }
        }
    }

    #[test]
    fn worker_count_never_changes_output_or_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        let layer = LayerParams::new(9, 7, 3, 2, 4, 2, 1).unwrap();
        let (x, w) = random_io(&mut rng, &layer);
        let (y1, c1) = deconv_layer(&x, &w, &layer, 5, F, true, 1).unwrap();
        let (y8, c8) = deconv_layer(&x, &w, &layer, 5, F, true, 8).unwrap();
        assert_eq!(y1, y8);
        assert_eq!(c1, c8);
    }

    #[test]
    fn zero_skip_changes_counts_not_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for _ in 0..20 {
            let layer = random_layer(&mut rng);
            let (x, mut w) = random_io(&mut rng, &layer);
            // zero out roughly half the taps
            for v in w.weights_mut() {
                if rng.gen_bool(0.5) {
                    *v = FixedPoint32::ZERO;
                }
            }
            let (y_dense, c_dense) = deconv_layer(&x, &w, &layer, 3, F, false, 1).unwrap();
            let (y_skip, c_skip) = deconv_layer(&x, &w, &layer, 3, F, true, 1).unwrap();
            assert_eq!(y_dense, y_skip);
            assert_eq!(c_dense.macs_skipped, 0);
            assert_eq!(c_dense.total_valid_macs(), c_skip.total_valid_macs());

            // Skipped MACs == valid positions attributable to zero taps.
            let mut want_skip = 0u64;
            for i_c in 0..layer.in_channels {
                for o_c in 0..layer.out_channels {
                    for k_h in 0..layer.kernel {
                        for k_w in 0..layer.kernel {
                            if w.get(i_c, o_c, k_h, k_w).is_zero() {
                                want_skip += valid_positions(
                                    layer.out_height,
                                    layer.in_height,
                                    k_h,
                                    layer.stride,
                                    layer.padding,
                                ) * valid_positions(
                                    layer.out_width,
                                    layer.in_width,
                                    k_w,
                                    layer.stride,
                                    layer.padding,
                                );
                            }
                        }
                    }
                }
            }
            assert_eq!(c_skip.macs_skipped, want_skip);
        }
    }

    #[test]
    fn valid_positions_matches_brute_force() {
        for s in 1..=4usize {
            for k_dim in 1..=5usize {
                for p in 0..k_dim {
                    for in_dim in 1..=7usize {
                        let out = (in_dim - 1) * s + k_dim;
                        if out <= 2 * p {
                            continue;
                        }
                        let out = out - 2 * p;
                        for k in 0..k_dim {
                            let mut brute = 0u64;
                            for i in 0..in_dim {
                                let o = (i * s + k) as i64 - p as i64;
                                if o >= 0 && (o as usize) < out {
                                    brute += 1;
                                }
                            }
                            assert_eq!(valid_positions(out, in_dim, k, s, p), brute);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn executed_macs_match_closed_form_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(67);
        for _ in 0..20 {
            let layer = random_layer(&mut rng);
            let (x, w) = random_io(&mut rng, &layer);
            let t = rng.gen_range(1..=layer.out_height);
            let (_, ctr) = deconv_layer(&x, &w, &layer, t, F, false, 1).unwrap();
            let vp_h: u64 = (0..layer.kernel)
                .map(|k| valid_positions(layer.out_height, layer.in_height, k, layer.stride, layer.padding))
                .sum();
            let vp_w: u64 = (0..layer.kernel)
                .map(|k| valid_positions(layer.out_width, layer.in_width, k, layer.stride, layer.padding))
                .sum();
            let want = layer.in_channels as u64 * layer.out_channels as u64 * vp_h * vp_w;
            assert_eq!(ctr.macs_executed, want, "t={t} layer={layer:?}");
        }
    }
}
