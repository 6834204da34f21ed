//! Shared fixtures for the benchmark targets.

use ncsim_core::radio::{
    build_reception_matrix, make_topology, ChannelParams, ReceptionMatrix, TopologySpec,
};

/// The 30 m linear network used throughout the benchmarks.
pub fn linear_matrix(n: usize) -> ReceptionMatrix {
    let params = ChannelParams::new(20e-6, 4e-14, 45.0, 2.0).expect("valid parameters");
    let positions = make_topology(&TopologySpec::Line { n }, 30.0).expect("valid topology");
    build_reception_matrix(&positions, &params)
}
