//! Seeded random instances and the dual-role reduction.
//!
//! All randomness comes from a `ChaCha8Rng` seeded with `GenConfig::seed`,
//! so a config always yields the same instance on every platform.

use std::collections::HashSet;
use std::ops::RangeInclusive;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ModelError, NetworkInstance, NodeId, NodeKind, NodeSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    /// Level by level, each node taking a fan-out drawn from `branching`.
    Balanced,
    /// A single chain of internal nodes.
    Path,
    /// Each node hangs under a uniformly chosen earlier node with fewer
    /// than `branching.1` children.
    Random,
}

impl std::str::FromStr for Shape {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "balanced" => Ok(Shape::Balanced),
            "path" => Ok(Shape::Path),
            "random" => Ok(Shape::Random),
            other => Err(format!("unknown shape `{other}` (expected balanced, path or random)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenConfig {
    pub seed: u64,
    pub internal_count: usize,
    pub client_count: usize,
    pub branching: (usize, usize),
    pub capacity: u64,
    pub bandwidth: (u64, u64),
    pub requests: (u64, u64),
    pub qos: (u64, u64),
    pub shape: Shape,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: 0,
            internal_count: 8,
            client_count: 10,
            branching: (1, 3),
            capacity: 20,
            bandwidth: (1, 20),
            requests: (1, 8),
            qos: (1, 4),
            shape: Shape::Random,
        }
    }
}

impl GenConfig {
    /// Small instance for exhaustive comparison: at most 10 internal nodes
    /// and 12 clients, sizes and shape drawn from the seed as well.
    pub fn small(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5a11);
        let shape = match rng.gen_range(0..4) {
            0 => Shape::Path,
            1 => Shape::Balanced,
            _ => Shape::Random,
        };
        GenConfig {
            seed,
            internal_count: rng.gen_range(1..=10),
            client_count: rng.gen_range(1..=12),
            branching: (1, 3),
            capacity: rng.gen_range(8..=20),
            bandwidth: (5, 16),
            requests: (0, 6),
            qos: (1, 4),
            shape,
        }
    }

    /// Balanced, always-feasible instance of about `nodes` nodes with QoS
    /// ranges up to `max_qos`, used for timing.
    pub fn bench(nodes: usize, max_qos: u64, seed: u64) -> Self {
        let internal = (nodes / 2).max(1);
        GenConfig {
            seed,
            internal_count: internal,
            client_count: nodes.saturating_sub(internal).max(1),
            branching: (2, 4),
            capacity: 100,
            bandwidth: (10, 1000),
            requests: (1, 10),
            qos: (1, max_qos.max(1)),
            shape: Shape::Balanced,
        }
    }

    fn check(&self) -> Result<(), GenError> {
        let bad = |what: &str| Err(GenError::Config(what.to_string()));
        if self.internal_count == 0 || self.client_count == 0 {
            return bad("internal and client counts must be at least 1");
        }
        if self.capacity == 0 {
            return bad("capacity must be positive");
        }
        for (name, (lo, hi)) in [
            ("bandwidth", self.bandwidth),
            ("requests", self.requests),
            ("qos", self.qos),
        ] {
            if lo > hi {
                return bad(&format!("{name} range {lo}..={hi} is empty"));
            }
        }
        let (bmin, bmax) = self.branching;
        if bmin > bmax {
            return bad(&format!("branching range {bmin}..={bmax} is empty"));
        }
        if self.shape != Shape::Path && bmax == 0 && self.internal_count > 1 {
            return bad("branching of 0 cannot hold more than one internal node");
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum GenError {
    #[error("invalid generator config: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn range(r: (u64, u64)) -> RangeInclusive<u64> {
    r.0..=r.1
}

fn width(count: usize) -> usize {
    count.saturating_sub(1).to_string().len()
}

/// Parent index of every internal node after the first.
fn internal_parents(cfg: &GenConfig, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = cfg.internal_count;
    let (bmin, bmax) = cfg.branching;
    let mut parents = Vec::with_capacity(n.saturating_sub(1));
    match cfg.shape {
        Shape::Path => parents.extend(0..n.saturating_sub(1)),
        Shape::Balanced => {
            let mut next = 0;
            while parents.len() + 1 < n {
                // a fan-out of 0 would stall the fill
                let fanout = rng.gen_range(bmin.max(1)..=bmax);
                for _ in 0..fanout {
                    if parents.len() + 1 == n {
                        break;
                    }
                    parents.push(next);
                }
                next += 1;
            }
        }
        Shape::Random => {
            let mut open = vec![0usize];
            let mut fanout = vec![0usize; n];
            for ix in 1..n {
                let slot = rng.gen_range(0..open.len());
                let p = open[slot];
                parents.push(p);
                fanout[p] += 1;
                if fanout[p] == bmax {
                    open.swap_remove(slot);
                }
                open.push(ix);
            }
        }
    }
    parents
}

pub fn generate(cfg: &GenConfig) -> Result<NetworkInstance, GenError> {
    cfg.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (iw, cw) = (width(cfg.internal_count), width(cfg.client_count));
    let internal_id = |ix: usize| format!("n{ix:0iw$}");

    let parents = internal_parents(cfg, &mut rng);
    let mut nodes = Vec::with_capacity(cfg.internal_count + cfg.client_count);
    let mut has_children = vec![false; cfg.internal_count];
    nodes.push(NodeSpec::internal(&internal_id(0), None, None));
    for (k, &p) in parents.iter().enumerate() {
        has_children[p] = true;
        let bw = rng.gen_range(range(cfg.bandwidth));
        nodes.push(NodeSpec::internal(&internal_id(k + 1), Some(&internal_id(p)), Some(bw)));
    }

    // Balanced trees keep clients at the bottom level so depth matters.
    let hosts: Vec<usize> = match cfg.shape {
        Shape::Balanced => (0..cfg.internal_count).filter(|&ix| !has_children[ix]).collect(),
        _ => (0..cfg.internal_count).collect(),
    };
    for c in 0..cfg.client_count {
        let host = *hosts.choose(&mut rng).expect("at least one internal node");
        let w = rng.gen_range(range(cfg.requests));
        let q = rng.gen_range(range(cfg.qos));
        let bw = rng.gen_range(range(cfg.bandwidth));
        nodes.push(NodeSpec::client(&format!("c{c:0cw$}"), &internal_id(host), bw, w, q));
    }

    let inst = NetworkInstance {
        capacity: cfg.capacity,
        nodes,
    };
    inst.topology()?;
    Ok(inst)
}

/// Node of a tree where every node may serve and may also issue requests.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DualNode {
    pub id: NodeId,
    #[serde(default)]
    pub parent: Option<NodeId>,
    #[serde(default, rename = "bw", skip_serializing_if = "Option::is_none")]
    pub link_bw: Option<u64>,
    /// Requests and QoS range.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demand: Option<(u64, u64)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DualRoleTree {
    #[serde(rename = "W")]
    pub capacity: u64,
    pub nodes: Vec<DualNode>,
}

impl DualRoleTree {
    pub fn parse(text: &str) -> Result<Self, ModelError> {
        let tree: DualRoleTree =
            serde_json::from_str(text).map_err(|e| ModelError::MalformedDocument(e.to_string()))?;
        // Structural checks are those of the reduced instance.
        fictivize(&tree).topology()?;
        Ok(tree)
    }

    pub fn to_document(&self) -> String {
        crate::document::render(&serde_json::to_value(self).expect("dual-role trees always serialize"))
    }
}

/// Random dual-role tree of `n` nodes with small parameters.
pub fn generate_dual_role(seed: u64, n: usize) -> DualRoleTree {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = n.max(1);
    let w = width(n);
    let id = |ix: usize| NodeId::new(format!("u{ix:0w$}"));
    let mut nodes = Vec::with_capacity(n);
    for ix in 0..n {
        let parent = (ix > 0).then(|| id(rng.gen_range(0..ix)));
        let link_bw = parent.as_ref().map(|_| rng.gen_range(1..=10));
        let demand = rng.gen_bool(0.75).then(|| (rng.gen_range(0..=6), rng.gen_range(0..=3)));
        nodes.push(DualNode {
            id: id(ix),
            parent,
            link_bw,
            demand,
        });
    }
    if nodes.iter().all(|d| d.demand.is_none_or(|(w, _)| w == 0)) {
        nodes[n - 1].demand = Some((rng.gen_range(1..=6), rng.gen_range(0..=3)));
    }
    DualRoleTree {
        capacity: rng.gen_range(5..=15),
        nodes,
    }
}

/// Moves each node's demand onto a new client child. The client's link is
/// unbounded and its QoS range grows by one for the extra hop. Nodes
/// without positive demand stay as they are.
pub fn fictivize(tree: &DualRoleTree) -> NetworkInstance {
    let mut taken: HashSet<String> = tree.nodes.iter().map(|d| d.id.to_string()).collect();
    let mut nodes = Vec::with_capacity(tree.nodes.len() * 2);
    let mut clients = Vec::new();
    for d in &tree.nodes {
        nodes.push(NodeSpec {
            id: d.id.clone(),
            parent: d.parent.clone(),
            link_bw: d.link_bw,
            kind: NodeKind::Internal,
            requests: None,
            qos: None,
        });
        let Some((w, q)) = d.demand else { continue };
        if w == 0 {
            continue;
        }
        let mut cid = format!("{}#client", d.id);
        while taken.contains(&cid) {
            cid.push('#');
        }
        clients.push(NodeSpec::client(&cid, d.id.as_str(), u64::MAX, w, q.saturating_add(1)));
        taken.insert(cid);
    }
    nodes.extend(clients);
    NetworkInstance {
        capacity: tree.capacity,
        nodes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_internal_one_client() {
        let cfg = GenConfig {
            seed: 1,
            internal_count: 1,
            client_count: 1,
            ..GenConfig::default()
        };
        let inst = generate(&cfg).unwrap();
        assert_eq!(inst.nodes.len(), 2);
        assert_eq!(inst, generate(&cfg).unwrap());
    }

    #[test]
    fn shapes_have_the_requested_sizes() {
        for shape in [Shape::Balanced, Shape::Path, Shape::Random] {
            let cfg = GenConfig {
                seed: 7,
                internal_count: 30,
                client_count: 40,
                shape,
                ..GenConfig::default()
            };
            let inst = generate(&cfg).unwrap();
            assert_eq!(inst.internal_nodes().count(), 30);
            assert_eq!(inst.clients().count(), 40);
        }
    }

    #[test]
    fn rejects_empty_ranges() {
        let cfg = GenConfig {
            requests: (5, 2),
            ..GenConfig::default()
        };
        assert!(matches!(generate(&cfg), Err(GenError::Config(_))));
        let cfg = GenConfig {
            client_count: 0,
            ..GenConfig::default()
        };
        assert!(matches!(generate(&cfg), Err(GenError::Config(_))));
    }

    #[test]
    fn fictive_client_for_a_demanding_root() {
        let tree = DualRoleTree {
            capacity: 10,
            nodes: vec![DualNode {
                id: "r".into(),
                parent: None,
                link_bw: None,
                demand: Some((5, 0)),
            }],
        };
        let inst = fictivize(&tree);
        assert_eq!(inst.nodes.len(), 2);
        let c = &inst.nodes[1];
        assert_eq!((c.requests, c.qos, c.link_bw), (Some(5), Some(1), Some(u64::MAX)));
        assert_eq!(c.parent, Some("r".into()));
    }

    #[test]
    fn zero_demand_gets_no_fictive_child() {
        let tree = DualRoleTree {
            capacity: 10,
            nodes: vec![
                DualNode { id: "r".into(), parent: None, link_bw: None, demand: Some((0, 2)) },
                DualNode { id: "s".into(), parent: Some("r".into()), link_bw: Some(3), demand: Some((2, 1)) },
            ],
        };
        let inst = fictivize(&tree);
        assert_eq!(inst.clients().count(), 1);
        assert_eq!(inst.clients().next().unwrap().parent, Some("s".into()));
    }

    #[test]
    fn fictive_ids_avoid_collisions() {
        let tree = DualRoleTree {
            capacity: 10,
            nodes: vec![
                DualNode { id: "r".into(), parent: None, link_bw: None, demand: Some((1, 1)) },
                DualNode { id: "r#client".into(), parent: Some("r".into()), link_bw: Some(3), demand: None },
            ],
        };
        let inst = fictivize(&tree);
        assert!(inst.topology().is_ok());
        assert_eq!(inst.nodes[2].id, NodeId::from("r#client#"));
    }

    #[test]
    fn dual_documents_round_trip() {
        let tree = generate_dual_role(3, 6);
        assert_eq!(DualRoleTree::parse(&tree.to_document()).unwrap(), tree);
    }
}
