//! Shared fixtures for the criterion benches.
//!
//! Everything here is deterministic so that bench numbers are comparable
//! across runs: weights and inputs come from seeded generators in the core
//! crate rather than ad-hoc RNG state.

use revdeconv::fixed::DEFAULT_FRAC_BITS;
use revdeconv::{
    init_weights, noise_inputs, prune_network, Activation, FeatureMap, LayerParams, NetworkLayer,
    WeightTensor,
};

pub const FRAC_BITS: u32 = DEFAULT_FRAC_BITS;

/// A mid-size deconvolution layer: 32ch 14x14 -> 16ch 28x28, K=4 S=2 P=1.
///
/// Large enough that the reverse-loop kernel's wins over the scatter
/// reference are visible, small enough that criterion's default sample
/// count finishes quickly.
pub fn bench_layer() -> (LayerParams, WeightTensor, FeatureMap) {
    let params = LayerParams::new(14, 14, 32, 16, 4, 2, 1).expect("static geometry");
    let net = [NetworkLayer {
        params,
        activation: Activation::None,
    }];
    let weights = init_weights(&net, FRAC_BITS, 0.1, 3).expect("weight init");
    let inputs = noise_inputs(&params, 1, FRAC_BITS, 5).expect("input gen");
    let w = weights.into_iter().next().expect("one layer");
    let x = inputs.into_iter().next().expect("one input");
    (params, w, x)
}

/// The same weights with 90% of the smallest magnitudes zeroed.
pub fn pruned_weights(w: &WeightTensor) -> WeightTensor {
    prune_network(std::slice::from_ref(w), 0.9)
        .expect("prune")
        .into_iter()
        .next()
        .expect("one layer")
}
