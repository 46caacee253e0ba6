//! Builds the computation tree: an artificial root above the original root,
//! joined by a zero-bandwidth link, with sibling clients merged into one
//! leaf per parent.
//!
//! A parent whose children are all clients becomes an eligible leaf itself
//! (suppression); its QoS budget loses the one hop between the clients and
//! the parent. A parent with at least one internal child keeps its clients
//! as a single ineligible leaf (compression) hanging off an unbounded link.
//! The rules apply once, to the original tree: a node whose only children
//! become leaves after suppression stays internal.
//!
//! Zero-demand clients never constrain anything, so QoS minima are taken
//! over positive-demand clients only.

use std::collections::VecDeque;
use std::sync::{LazyLock, OnceLock};

use rustc_hash::FxHashMap;
use serde_json::{json, Value};

use crate::amount::{Bound, Contribution};
use crate::error::{Infeasibility, SolveError};
use crate::model::{precheck_client_links, ChildLists, NetworkInstance, NodeId, ARTIFICIAL_ROOT_ID};

/// What a leaf of the computation tree stands for in the original tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    /// A former internal node, same id, whose client children were folded
    /// into it.
    Internal,
    /// Sibling clients compressed into one bundle named after the first.
    Clients,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StarLeaf {
    /// Sum of the merged requests.
    pub weight: u64,
    /// Hops this leaf's bundle may travel upward. Meaningless (never
    /// consulted) when `weight` is zero.
    pub qos: u64,
    /// Only former internal nodes may host a replica.
    pub eligible: bool,
    pub origin: Origin,
    /// Original clients in the bundle.
    pub clients: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StarKind {
    ArtificialRoot,
    Internal,
    Leaf(StarLeaf),
}

#[derive(Debug, Clone)]
pub struct StarNode {
    pub id: NodeId,
    pub parent: Option<usize>,
    /// Sorted by id.
    pub children: Vec<usize>,
    /// Bandwidth of the link to the parent; zero above the original root,
    /// unbounded for compressed bundles.
    pub link_bw: Bound,
    /// Hops to the artificial root.
    pub depth: usize,
    pub kind: StarKind,
}

impl StarNode {
    pub fn leaf(&self) -> Option<&StarLeaf> {
        match &self.kind {
            StarKind::Leaf(leaf) => Some(leaf),
            _ => None,
        }
    }

    /// Whether this node is an internal node of the original tree.
    pub fn eligible(&self) -> bool {
        match &self.kind {
            StarKind::ArtificialRoot => false,
            StarKind::Internal => true,
            StarKind::Leaf(leaf) => leaf.eligible,
        }
    }
}

/// The transformed tree. Index 0 is the artificial root and nodes are laid
/// out breadth-first, so every parent precedes its children.
#[derive(Debug, Clone)]
pub struct StarTree {
    nodes: Vec<StarNode>,
    capacity: u64,
    /// Built on the first lookup; solving never needs it.
    index: OnceLock<FxHashMap<NodeId, usize>>,
}

impl StarTree {
    pub const ROOT: usize = 0;

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, ix: usize) -> &StarNode {
        &self.nodes[ix]
    }

    pub fn nodes(&self) -> &[StarNode] {
        &self.nodes
    }

    pub fn id(&self, ix: usize) -> &NodeId {
        &self.nodes[ix].id
    }

    pub fn lookup(&self, id: &NodeId) -> Option<usize> {
        self.index
            .get_or_init(|| self.nodes.iter().enumerate().map(|(ix, n)| (n.id.clone(), ix)).collect())
            .get(id)
            .copied()
    }

    pub fn root_plus(&self) -> &NodeId {
        &self.nodes[Self::ROOT].id
    }

    pub fn leaves(&self) -> impl Iterator<Item = (usize, &StarLeaf)> {
        self.nodes.iter().enumerate().filter_map(|(ix, n)| n.leaf().map(|l| (ix, l)))
    }

    /// Largest QoS budget among leaves that carry requests. Contributions of
    /// every node are constant beyond this many hops.
    pub fn max_range(&self) -> u64 {
        self.leaves().filter(|(_, l)| l.weight > 0).map(|(_, l)| l.qos).max().unwrap_or(0)
    }

    pub fn max_depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    /// The original-tree node a replica on `ix` stands for, if it can host one.
    pub fn project(&self, ix: usize) -> Option<&NodeId> {
        let node = &self.nodes[ix];
        match &node.kind {
            StarKind::ArtificialRoot => None,
            StarKind::Internal => Some(&node.id),
            StarKind::Leaf(StarLeaf {
                origin: Origin::Internal,
                ..
            }) => Some(&node.id),
            StarKind::Leaf(_) => None,
        }
    }

    /// Every original node that `ix` absorbs.
    pub fn back_map(&self, ix: usize) -> Vec<NodeId> {
        let node = &self.nodes[ix];
        match &node.kind {
            StarKind::ArtificialRoot => Vec::new(),
            StarKind::Internal => vec![node.id.clone()],
            StarKind::Leaf(leaf) => {
                let mut out = Vec::with_capacity(leaf.clients.len() + 1);
                if leaf.origin == Origin::Internal {
                    out.push(node.id.clone());
                }
                out.extend(leaf.clients.iter().cloned());
                out
            }
        }
    }

    /// Nodes in depth-first pre-order with children by ascending id.
    pub fn preorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![Self::ROOT];
        while let Some(ix) = stack.pop() {
            out.push(ix);
            stack.extend(self.nodes[ix].children.iter().rev().copied());
        }
        out
    }
}

/// Demand of one original client.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClientDemand {
    pub id: NodeId,
    pub requests: u64,
    pub qos: u64,
}

impl ClientDemand {
    pub fn new(id: &str, requests: u64, qos: u64) -> Self {
        ClientDemand {
            id: id.into(),
            requests,
            qos,
        }
    }
}

fn merge(clients: &[ClientDemand]) -> (u64, Option<u64>, Vec<NodeId>) {
    let weight = clients.iter().map(|c| c.requests).fold(0u64, u64::saturating_add);
    let qos = clients.iter().filter(|c| c.requests > 0).map(|c| c.qos).min();
    let mut ids: Vec<NodeId> = clients.iter().map(|c| c.id.clone()).collect();
    if !ids.is_sorted() {
        ids.sort();
    }
    (weight, qos, ids)
}

/// Folds the clients of `parent` (all of its children) into the parent,
/// which becomes an eligible leaf one hop closer to the servers.
pub fn suppress_clients(parent: &NodeId, clients: &[ClientDemand]) -> Result<StarLeaf, Infeasibility> {
    let (weight, qos, ids) = merge(clients);
    let qos = match qos {
        Some(0) => return Err(Infeasibility::QosExhausted { node: parent.clone() }),
        Some(q) => q - 1,
        None => clients.iter().map(|c| c.qos).min().unwrap_or(1).saturating_sub(1),
    };
    Ok(StarLeaf {
        weight,
        qos,
        eligible: true,
        origin: Origin::Internal,
        clients: ids,
    })
}

/// Merges sibling clients of a parent that also has internal children into
/// one ineligible bundle.
pub fn compress_clients(clients: &[ClientDemand]) -> StarLeaf {
    let (weight, qos, ids) = merge(clients);
    let qos = qos.unwrap_or_else(|| clients.iter().map(|c| c.qos).min().unwrap_or(0));
    StarLeaf {
        weight,
        qos,
        eligible: false,
        origin: Origin::Clients,
        clients: ids,
    }
}

static ROOT_PLUS: LazyLock<NodeId> = LazyLock::new(|| NodeId::from(ARTIFICIAL_ROOT_ID));

/// The original tree with an optional artificial root, before any client
/// folding. Ids are borrowed from the instance.
#[derive(Debug, Clone)]
pub struct AugmentedTree<'a> {
    ids: Vec<&'a NodeId>,
    parent: Vec<Option<usize>>,
    children: ChildLists,
    /// Child list of the artificial root, once added.
    above_root: Option<[usize; 1]>,
    link_bw: Vec<Bound>,
    /// `(requests, qos)` of clients.
    demand: Vec<Option<(u64, u64)>>,
    root: usize,
    capacity: u64,
    /// Some client fails the link or capacity precheck or has no QoS left.
    doubtful_client: bool,
}

impl<'a> AugmentedTree<'a> {
    pub fn from_instance(inst: &'a NetworkInstance) -> Result<Self, SolveError> {
        let (parent, children, root) = inst.topology()?.into_links();
        // room for the artificial root
        let n = inst.nodes.len() + 1;
        let (mut ids, mut link_bw, mut demand) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        let mut doubtful_client = false;
        for node in &inst.nodes {
            ids.push(&node.id);
            link_bw.push(node.link_bw.map_or(Contribution::Unbounded, Contribution::Finite));
            let d = node.is_client().then(|| (node.requests.unwrap_or(0), node.qos.unwrap_or(0)));
            if let Some((requests, qos)) = d {
                doubtful_client |= requests > node.link_bw.unwrap_or(0)
                    || requests > inst.capacity
                    || (requests > 0 && qos == 0);
            }
            demand.push(d);
        }
        Ok(AugmentedTree {
            ids,
            parent,
            children,
            above_root: None,
            link_bw,
            demand,
            root,
            capacity: inst.capacity,
            doubtful_client,
        })
    }

    /// Puts the artificial root above the current root with a zero-bandwidth
    /// link. Allowed once.
    pub fn add_artificial_root(&mut self) -> Result<(), SolveError> {
        if self.has_artificial_root() {
            return Err(SolveError::ContractViolation(
                "artificial root already present".to_owned(),
            ));
        }
        let plus = self.ids.len();
        self.ids.push(&ROOT_PLUS);
        self.parent.push(None);
        self.above_root = Some([self.root]);
        self.link_bw.push(Contribution::Unbounded);
        self.demand.push(None);
        self.parent[self.root] = Some(plus);
        self.link_bw[self.root] = Contribution::ZERO;
        self.root = plus;
        Ok(())
    }

    pub fn has_artificial_root(&self) -> bool {
        self.ids[self.root].as_str() == ARTIFICIAL_ROOT_ID
    }

    pub fn root_id(&self) -> &NodeId {
        self.ids[self.root]
    }

    pub fn link_bw(&self, id: &NodeId) -> Option<Bound> {
        self.ids.iter().position(|&x| x == id).map(|ix| self.link_bw[ix])
    }

    fn children(&self, ix: usize) -> &[usize] {
        match &self.above_root {
            Some(list) if ix == self.ids.len() - 1 => list,
            _ => self.children.get(ix),
        }
    }

    /// Edges on the longest root-to-leaf path.
    pub fn height(&self) -> usize {
        let mut best = 0;
        let mut stack = vec![(self.root, 0)];
        while let Some((ix, d)) = stack.pop() {
            best = best.max(d);
            stack.extend(self.children(ix).iter().map(|&c| (c, d + 1)));
        }
        best
    }

    fn client_demands(&self, of: &[usize], out: &mut Vec<ClientDemand>) {
        out.clear();
        out.extend(of.iter().filter_map(|&c| {
            self.demand[c].map(|(requests, qos)| ClientDemand {
                id: self.ids[c].clone(),
                requests,
                qos,
            })
        }));
    }

    /// Applies suppression and compression and lays the result out
    /// breadth-first.
    pub fn into_star(self) -> Result<StarTree, SolveError> {
        self.fold().map(|(star, _)| star)
    }

    /// [`Self::into_star`], also reporting the first leaf heavier than `W`.
    fn fold(self) -> Result<(StarTree, Option<usize>), SolveError> {
        if !self.has_artificial_root() {
            return Err(SolveError::ContractViolation(
                "artificial root must be added before folding clients".to_owned(),
            ));
        }
        let mut nodes: Vec<StarNode> = Vec::with_capacity(self.ids.len());
        nodes.push(StarNode {
            id: self.ids[self.root].clone(),
            parent: None,
            children: Vec::new(),
            link_bw: Contribution::Unbounded,
            depth: 0,
            kind: StarKind::ArtificialRoot,
        });
        // (original index, star index) of nodes whose children still need placing
        let mut queue = VecDeque::from([(self.root, StarTree::ROOT)]);
        let mut kids: Vec<(NodeId, Result<usize, StarLeaf>, Bound)> = Vec::new();
        let mut clients = Vec::new();
        let mut overweight = None;
        while let Some((orig, star)) = queue.pop_front() {
            let depth = nodes[star].depth + 1;
            kids.clear();
            for &child in self.children(orig) {
                if self.demand[child].is_some() {
                    continue;
                }
                let grandchildren = self.children(child);
                if grandchildren.iter().all(|&g| self.demand[g].is_some()) {
                    self.client_demands(grandchildren, &mut clients);
                    let leaf = suppress_clients(self.ids[child], &clients).map_err(SolveError::Infeasible)?;
                    kids.push((self.ids[child].clone(), Err(leaf), self.link_bw[child]));
                } else {
                    kids.push((self.ids[child].clone(), Ok(child), self.link_bw[child]));
                }
            }
            // child lists come sorted, so only the bundle needs placing
            self.client_demands(self.children(orig), &mut clients);
            if !clients.is_empty() {
                let leaf = compress_clients(&clients);
                let id = leaf.clients[0].clone();
                let at = kids.partition_point(|k| k.0 < id);
                kids.insert(at, (id, Err(leaf), Contribution::Unbounded));
            }

            nodes[star].children.reserve_exact(kids.len());
            for (id, what, link_bw) in kids.drain(..) {
                let ix = nodes.len();
                let kind = match what {
                    Ok(orig_child) => {
                        queue.push_back((orig_child, ix));
                        StarKind::Internal
                    }
                    Err(leaf) => {
                        if leaf.weight > self.capacity && overweight.is_none() {
                            overweight = Some(ix);
                        }
                        StarKind::Leaf(leaf)
                    }
                };
                nodes.push(StarNode {
                    id,
                    parent: Some(star),
                    children: Vec::new(),
                    link_bw,
                    depth,
                    kind,
                });
                nodes[star].children.push(ix);
            }
        }
        let star = StarTree {
            nodes,
            capacity: self.capacity,
            index: OnceLock::new(),
        };
        Ok((star, overweight))
    }
}

/// Full transformation: client precheck, artificial root, client folding,
/// and the per-bundle capacity check.
pub fn transform_to_star(inst: &NetworkInstance) -> Result<StarTree, SolveError> {
    let mut aug = AugmentedTree::from_instance(inst)?;
    // the full reports need another pass over the nodes, so only build them on failure
    if aug.doubtful_client {
        precheck_client_links(inst).map_err(|f| SolveError::Infeasible(Infeasibility::ClientLinks(f)))?;
        if let Some(client) = inst.clients().find(|c| c.requests.unwrap_or(0) > 0 && c.qos == Some(0)) {
            return Err(SolveError::Infeasible(Infeasibility::QosExhausted {
                node: client.id.clone(),
            }));
        }
    }
    aug.add_artificial_root()?;
    let (star, overweight) = aug.fold()?;
    if let Some(ix) = overweight {
        let leaf = star.node(ix).leaf().expect("flagged nodes are leaves");
        return Err(SolveError::Infeasible(Infeasibility::LeafOverCapacity {
            leaf: star.id(ix).clone(),
            weight: leaf.weight,
            capacity: star.capacity,
        }));
    }
    Ok(star)
}

fn bound_value(b: Bound) -> Value {
    match b {
        Contribution::Finite(v) => json!(v),
        Contribution::Unbounded => json!("inf"),
    }
}

/// Dump of the computation tree in the instance layout, each leaf annotated
/// with what it stands for.
pub fn star_to_value(tree: &StarTree) -> Value {
    let nodes: Vec<Value> = tree
        .nodes
        .iter()
        .map(|n| {
            let mut obj = serde_json::Map::new();
            obj.insert("id".into(), json!(n.id));
            obj.insert("parent".into(), json!(n.parent.map(|p| tree.id(p))));
            obj.insert("depth".into(), json!(n.depth));
            if n.parent.is_some() {
                obj.insert("bw".into(), bound_value(n.link_bw));
            }
            match &n.kind {
                StarKind::ArtificialRoot => {
                    obj.insert("kind".into(), json!("root"));
                }
                StarKind::Internal => {
                    obj.insert("kind".into(), json!("internal"));
                }
                StarKind::Leaf(leaf) => {
                    obj.insert("kind".into(), json!("leaf"));
                    obj.insert("w".into(), json!(leaf.weight));
                    obj.insert("q".into(), json!(leaf.qos));
                    obj.insert("eligible".into(), json!(leaf.eligible));
                    let origin = match &leaf.origin {
                        Origin::Internal => json!({ "internal": n.id, "clients": leaf.clients }),
                        Origin::Clients => json!({ "clients": leaf.clients }),
                    };
                    obj.insert("origin".into(), origin);
                }
            }
            Value::Object(obj)
        })
        .collect();
    json!({ "W": tree.capacity, "root": tree.root_plus(), "nodes": nodes })
}
