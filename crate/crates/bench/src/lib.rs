//! Instance families shared by the criterion benches.

use treeplace::{generate, GenConfig, NetworkInstance};

/// Balanced, feasible instance with about `nodes` nodes and QoS ranges up
/// to `max_qos`.
pub fn balanced(nodes: usize, max_qos: u64, seed: u64) -> NetworkInstance {
    generate(&GenConfig::bench(nodes, max_qos, seed)).expect("bench configs are valid")
}
