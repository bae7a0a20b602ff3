//! Fixtures shared by the benchmarks.

use std::collections::BTreeMap;

use hyperloom::sampling::case_control_sample;
use hyperloom::simulator::{generate_positions, lift_positions, simulate_hypergraph};
use hyperloom::{DesignConfig, Geometry, Hypergraph, LabeledSample, ModelParams, SimConfig};

/// A simulated model of `n` units with sizes 2 and 3, its hypergraph and a
/// case-control sample with `controls` controls per case.
pub fn fixture(n: usize, controls: usize) -> (ModelParams, Hypergraph, LabeledSample) {
    let sim = SimConfig { mh_iters: 20_000, seed: 1, ..SimConfig::default() };
    let alphas: BTreeMap<usize, f64> = [(2, 0.5), (3, 5e-4)].into_iter().collect();
    let positions = lift_positions(&generate_positions(n, 2, &sim).expect("valid size"))
        .expect("points lie in the disk");
    let params = ModelParams::new(positions, alphas, -20.0, Geometry::Hyperbolic).expect("valid parameters");
    let h = simulate_hypergraph(&params, &sim).expect("simulation succeeds");
    let sample = case_control_sample(&h, &DesignConfig { n_controls: controls, seed: 1 })
        .expect("sampling succeeds");
    (params, h, sample)
}
