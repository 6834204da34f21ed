//! Simulates both protocols on a linear network and prints the measured
//! stopping times next to the analytic bound.
//!
//!     cargo run --release -p ncsim-core --example linear_network

use ncsim_core::bounds::expected_stopping_bound;
use ncsim_core::engine::{run_experiment, Protocol, SimConfig};
use ncsim_core::radio::{build_reception_matrix, make_topology, ChannelParams, TopologySpec};

fn main() {
    let params = ChannelParams::new(20e-6, 4e-14, 45.0, 2.0).unwrap();
    println!("{:>4} {:>12} {:>12} {:>12} {:>8}", "N", "nc_mean", "base_mean", "bound", "ratio");
    for n in [23usize, 27, 30, 35] {
        let positions = make_topology(&TopologySpec::Line { n }, 30.0).unwrap();
        let matrix = build_reception_matrix(&positions, &params);
        let start = std::time::Instant::now();
        let nc = run_experiment(
            &matrix,
            &SimConfig {
                trials: 500,
                seed: 7,
                ..SimConfig::default()
            },
        )
        .unwrap();
        let nc_elapsed = start.elapsed();
        let start = std::time::Instant::now();
        let base = run_experiment(
            &matrix,
            &SimConfig {
                protocol: Protocol::RandomSelection,
                trials: 500,
                seed: 7,
                ..SimConfig::default()
            },
        )
        .unwrap();
        let base_elapsed = start.elapsed();
        let bound = expected_stopping_bound(&matrix).unwrap();
        println!(
            "{:>4} {:>12.2} {:>12.1} {:>12.1} {:>8.1}   ({:.1?} nc, {:.1?} base)",
            n,
            nc.mean,
            base.mean,
            bound.value,
            base.mean / nc.mean,
            nc_elapsed,
            base_elapsed
        );
    }
}
