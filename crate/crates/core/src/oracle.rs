//! Exhaustive search for the minimum feasible replica set.
//!
//! Subsets of the internal nodes are enumerated by increasing size, in
//! lexicographic order of ids within a size, and each is judged by the
//! verifier alone. The first size with a feasible subset is the optimum.

use itertools::Itertools;
use serde_json::{json, Value};
use thiserror::Error;

use crate::generator::DualRoleTree;
use crate::model::{ModelError, NetworkInstance, NodeId};
use crate::verifier::{self, VerifyError};
use crate::Mode;

pub const DEFAULT_MAX_N: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Optimum {
    pub cardinality: usize,
    /// First feasible set in enumeration order.
    pub witness: Vec<NodeId>,
    /// Number of feasible sets of that size.
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    pub optimum: Option<Optimum>,
    pub explored: u64,
    pub mode: Mode,
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("{count} candidate nodes exceed the enumeration guard of {max}")]
    GuardExceeded { count: usize, max: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
}

pub fn brute_force_min(inst: &NetworkInstance, mode: Mode, max_n: usize) -> Result<OracleResult, OracleError> {
    let topo = inst.topology()?;
    let mut candidates: Vec<&NodeId> = inst.internal_nodes().map(|n| &n.id).collect();
    if candidates.len() > max_n {
        return Err(OracleError::GuardExceeded {
            count: candidates.len(),
            max: max_n,
        });
    }
    candidates.sort();

    let mut explored = 0;
    for size in 0..=candidates.len() {
        let mut witness = None;
        let mut count = 0;
        for subset in candidates.iter().copied().combinations(size) {
            explored += 1;
            let resolved = verifier::resolve(inst, &topo, subset.iter().copied())?;
            if verifier::is_feasible(inst, &resolved, mode) {
                count += 1;
                if witness.is_none() {
                    witness = Some(subset.into_iter().cloned().collect());
                }
            }
        }
        if let Some(witness) = witness {
            return Ok(OracleResult {
                optimum: Some(Optimum {
                    cardinality: size,
                    witness,
                    count,
                }),
                explored,
                mode,
            });
        }
    }
    Ok(OracleResult {
        optimum: None,
        explored,
        mode,
    })
}

pub fn oracle_to_value(result: &OracleResult) -> Value {
    let optimum = result.optimum.as_ref().map(|o| {
        json!({ "count": o.cardinality, "witness": o.witness, "optimal_sets": o.count })
    });
    json!({ "mode": result.mode.as_str(), "explored": result.explored, "optimum": optimum })
}

/// Minimum replica count of a model where every node may both request and
/// serve. A node's requests go to the nearest equipped node on the path
/// from itself (inclusive) to the root, within `q` hops, and may not
/// exceed the bandwidth of any link on the way.
pub fn brute_force_dual_role(tree: &DualRoleTree, max_n: usize) -> Result<Option<usize>, OracleError> {
    let n = tree.nodes.len();
    if n > max_n {
        return Err(OracleError::GuardExceeded { count: n, max: max_n });
    }
    let index: std::collections::HashMap<&NodeId, usize> =
        tree.nodes.iter().enumerate().map(|(ix, d)| (&d.id, ix)).collect();
    let parent: Vec<Option<usize>> = tree
        .nodes
        .iter()
        .map(|d| d.parent.as_ref().map(|p| index[p]))
        .collect();

    let feasible = |equipped: &[bool]| {
        let mut loads = vec![0u128; n];
        for (ix, node) in tree.nodes.iter().enumerate() {
            let Some((w, q)) = node.demand else { continue };
            if w == 0 {
                continue;
            }
            let mut cur = ix;
            let mut hops = 0;
            loop {
                if equipped[cur] {
                    break;
                }
                if !tree.nodes[cur].link_bw.is_some_and(|bw| w <= bw) {
                    return false;
                }
                match parent[cur] {
                    Some(p) => {
                        cur = p;
                        hops += 1;
                    }
                    None => return false,
                }
            }
            if hops > q {
                return false;
            }
            loads[cur] += u128::from(w);
        }
        loads.iter().all(|&l| l <= u128::from(tree.capacity))
    };

    for size in 0..=n {
        for subset in (0..n).combinations(size) {
            let mut equipped = vec![false; n];
            for ix in subset {
                equipped[ix] = true;
            }
            if feasible(&equipped) {
                return Ok(Some(size));
            }
        }
    }
    Ok(None)
}
