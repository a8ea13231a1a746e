//! Brute-force input-space deconvolution oracle.
//!
//! Walks every input pixel and scatters its weighted K×K patch into the
//! output at `o = i*S + k - P`, clipping contributions that land outside
//! the output map. Deliberately simple and single-threaded: this is the
//! ground truth that the reverse-looping kernel is tested against, so it
//! favors obviousness over speed.

use crate::error::Result;
use crate::tensor::{FeatureMap, LayerParams, WeightTensor};

/// Contribution accounting for one oracle run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ScatterStats {
    /// Scatter writes that landed inside the output map.
    pub in_range: u64,
    /// Scatter writes clipped because `o_h` or `o_w` fell outside.
    pub clipped: u64,
}

impl ScatterStats {
    /// Total attempted scatters: always `I_H * I_W * I_C * O_C * K^2`.
    pub fn attempted(&self) -> u64 {
        self.in_range + self.clipped
    }
}

/// Output coordinate for an input coordinate under one kernel tap, or
/// `None` when the contribution falls outside `[0, out_dim)`.
#[inline]
fn scatter_target(i: usize, k: usize, stride: usize, padding: usize, out_dim: usize) -> Option<usize> {
    let o = (i * stride + k) as i64 - padding as i64;
    if o >= 0 && (o as usize) < out_dim {
        Some(o as usize)
    } else {
        None
    }
}

/// Transposed convolution by direct scatter, with per-channel bias
/// initialization and a fixed, documented accumulation order
/// (`i_c`, `o_c`, `i_h`, `i_w`, `k_h`, `k_w`). No activation is applied.
pub fn deconv_reference(
    x: &FeatureMap,
    w: &WeightTensor,
    layer: &LayerParams,
    frac_bits: u32,
) -> Result<FeatureMap> {
    deconv_reference_with_stats(x, w, layer, frac_bits).map(|(y, _)| y)
}

/// As [`deconv_reference`], also returning scatter-clipping statistics.
pub fn deconv_reference_with_stats(
    x: &FeatureMap,
    w: &WeightTensor,
    layer: &LayerParams,
    frac_bits: u32,
) -> Result<(FeatureMap, ScatterStats)> {
    layer.check_input(x)?;
    layer.check_weights(w)?;

    let mut y = FeatureMap::zeros(layer.out_channels, layer.out_height, layer.out_width);
    for o_c in 0..layer.out_channels {
        y.channel_mut(o_c).fill(w.bias(o_c));
    }

    let mut stats = ScatterStats::default();
    for i_c in 0..layer.in_channels {
        for o_c in 0..layer.out_channels {
            for i_h in 0..layer.in_height {
                for i_w in 0..layer.in_width {
                    let xv = x.get(i_c, i_h, i_w);
                    for k_h in 0..layer.kernel {
                        let o_h = scatter_target(i_h, k_h, layer.stride, layer.padding, layer.out_height);
                        for k_w in 0..layer.kernel {
                            let o_w = scatter_target(i_w, k_w, layer.stride, layer.padding, layer.out_width);
                            match (o_h, o_w) {
                                (Some(oh), Some(ow)) => {
                                    let acc = y.get(o_c, oh, ow);
                                    y.set(o_c, oh, ow, acc.mac(w.get(i_c, o_c, k_h, k_w), xv, frac_bits));
                                    stats.in_range += 1;
                                }
                                _ => stats.clipped += 1,
                            }
                        }
                    }
                }
            }
        }
    }
    Ok((y, stats))
}
