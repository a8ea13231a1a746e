//! Reverse-looping transposed-convolution (deconvolution) library.
//!
//! Implements an output-space deconvolution kernel that walks output pixels
//! directly using precomputed stride-hole offsets, together with:
//!
//! - a scatter-based reference implementation used as a correctness oracle,
//! - fixed-point arithmetic matching a 32-bit hardware datapath,
//! - a cycle-approximate model of a pipelined multi-CU accelerator,
//! - roofline-based design-space exploration over the output tiling factor,
//! - magnitude pruning plus an MMD-based quality/performance trade-off metric,
//! - binary weight/feature-map formats and TOML network configs.

pub mod dse;
pub mod error;
pub mod fixed;
pub mod kernel;
pub mod model;
pub mod netio;
pub mod network;
pub mod reference;
pub mod sparsity;
pub mod svg;
pub mod tensor;

pub use dse::{
    arithmetic_intensity, default_range, emit_roofline, enumerate_designs, pick_best,
    roofline_attainable, select_tiling, select_tiling_in, DesignPoint, Limiting,
};
pub use error::{Error, Result};
pub use fixed::FixedPoint32;
pub use kernel::{
    compute_offsets, deconv_block, deconv_layer, deconv_layer_with_offsets, exact_input_span,
    input_index, tile_grid, tile_input_dim, valid_positions, AxisSpan, OffsetTable, OpCounter,
    Run, TileSpec, WORD_BYTES,
};
pub use model::{
    block_compute_cycles, block_read_cycles, block_write_cycles, cu_buffer_bytes,
    layer_traffic_bytes, network_throughput, simulate_layer, simulate_layer_profile,
    simulate_network, LatencyReport, LayerReport, PlatformModel, SparsityProfile,
};
pub use netio::{
    export_feature_map_text, load_config, load_feature_map, load_sample_set, load_weights,
    save_feature_map, save_sample_set, save_weights, NetworkConfig,
};
pub use network::{
    check_chain, init_weights, noise_inputs, run_network, Activation, NetworkLayer,
};
pub use reference::{deconv_reference, deconv_reference_with_stats, ScatterStats};
pub use sparsity::{
    emit_sweep, gaussian_sample_set, median_bandwidth, mmd_squared, mmd_squared_unbiased,
    prune_by_magnitude, prune_network, sparsity_sweep, SampleSet, SparsityPoint, SparsitySweep,
};
pub use tensor::{FeatureMap, LayerParams, WeightTensor};
