//! Problem instances: the distribution tree, its clients and its links.
//!
//! A [`NetworkInstance`] is a plain record mirroring the instance document.
//! It can hold invalid data; [`validate_instance`] reports every broken
//! invariant and [`NetworkInstance::topology`] is the gate the solver,
//! verifier and oracle go through before touching the tree.

use std::fmt;
use std::sync::Arc;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Id reserved for the artificial root placed above the original root.
pub const ARTIFICIAL_ROOT_ID: &str = "__r_plus__";

/// Textual node identifier. Ordering is lexicographic and drives every
/// tie-break in the solver. Clones share the text.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(Arc<str>);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Self {
        NodeId(Arc::from(id.into()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(Arc::from(s))
    }
}

impl From<String> for NodeId {
    fn from(s: String) -> Self {
        NodeId(Arc::from(s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Client,
    Internal,
}

/// One node of the distribution tree, field for field as in the document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSpec {
    pub id: NodeId,
    pub parent: Option<NodeId>,
    /// Bandwidth of the link to the parent. Absent on the root.
    pub link_bw: Option<u64>,
    pub kind: NodeKind,
    /// Requests per time unit (clients only).
    pub requests: Option<u64>,
    /// QoS range in hops (clients only).
    pub qos: Option<u64>,
}

impl NodeSpec {
    pub fn internal(id: &str, parent: Option<&str>, link_bw: Option<u64>) -> Self {
        NodeSpec {
            id: id.into(),
            parent: parent.map(NodeId::from),
            link_bw,
            kind: NodeKind::Internal,
            requests: None,
            qos: None,
        }
    }

    pub fn client(id: &str, parent: &str, link_bw: u64, requests: u64, qos: u64) -> Self {
        NodeSpec {
            id: id.into(),
            parent: Some(parent.into()),
            link_bw: Some(link_bw),
            kind: NodeKind::Client,
            requests: Some(requests),
            qos: Some(qos),
        }
    }

    pub fn is_client(&self) -> bool {
        self.kind == NodeKind::Client
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkInstance {
    /// Homogeneous server capacity `W`.
    pub capacity: u64,
    pub nodes: Vec<NodeSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Problem {
    ZeroCapacity,
    DuplicateId,
    ReservedId,
    NoRoot,
    MultipleRoots,
    UnknownParent(NodeId),
    /// Not reachable from the root: part of a cycle or a detached piece.
    Unreachable,
    RootHasBandwidth,
    MissingBandwidth,
    NoClients,
    NoInternalNodes,
    RootIsClient,
    ClientHasChildren,
    InternalHasDemand,
    ClientMissingDemand,
}

impl Problem {
    fn is_role(&self) -> bool {
        matches!(
            self,
            Problem::RootIsClient
                | Problem::ClientHasChildren
                | Problem::InternalHasDemand
                | Problem::ClientMissingDemand
        )
    }
}

/// A broken instance invariant, naming the offending node where there is one.
/// Edges are named by their child end.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelViolation {
    pub node: Option<NodeId>,
    pub problem: Problem,
}

impl fmt::Display for ModelViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match &self.problem {
            Problem::ZeroCapacity => "server capacity W must be positive".to_owned(),
            Problem::DuplicateId => "duplicate node id".to_owned(),
            Problem::ReservedId => format!("id {ARTIFICIAL_ROOT_ID:?} is reserved"),
            Problem::NoRoot => "no root (every node has a parent)".to_owned(),
            Problem::MultipleRoots => "more than one root".to_owned(),
            Problem::UnknownParent(p) => format!("parent {p:?} does not exist"),
            Problem::Unreachable => "not reachable from the root (cycle or detached)".to_owned(),
            Problem::RootHasBandwidth => "root must not carry a link bandwidth".to_owned(),
            Problem::MissingBandwidth => "missing link bandwidth to parent".to_owned(),
            Problem::NoClients => "instance has no client".to_owned(),
            Problem::NoInternalNodes => "instance has no internal node".to_owned(),
            Problem::RootIsClient => "root must be an internal node".to_owned(),
            Problem::ClientHasChildren => "client has children (clients must be leaves)".to_owned(),
            Problem::InternalHasDemand => "internal node carries w or q".to_owned(),
            Problem::ClientMissingDemand => "client lacks w or q".to_owned(),
        };
        match &self.node {
            Some(id) => write!(f, "node {id:?}: {what}"),
            None => f.write_str(&what),
        }
    }
}

fn join(violations: &[ModelViolation]) -> String {
    violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("malformed document: {0}")]
    MalformedDocument(String),
    #[error("invalid tree structure: {}", join(.0))]
    Structure(Vec<ModelViolation>),
    #[error("invalid node role: {}", join(.0))]
    Role(Vec<ModelViolation>),
}

impl ModelError {
    fn from_violations(violations: Vec<ModelViolation>) -> Self {
        if violations.iter().all(|v| v.problem.is_role()) {
            ModelError::Role(violations)
        } else {
            ModelError::Structure(violations)
        }
    }
}

/// Reports every invariant the instance breaks; empty means valid.
pub fn validate_instance(inst: &NetworkInstance) -> Vec<ModelViolation> {
    scan(inst).0
}

/// Child lists of every node packed into one array.
#[derive(Debug, Clone)]
pub(crate) struct ChildLists {
    offsets: Vec<usize>,
    items: Vec<usize>,
}

impl ChildLists {
    fn from_parents(parent: &[Option<usize>]) -> Self {
        let mut offsets = vec![0; parent.len() + 1];
        for p in parent.iter().flatten() {
            offsets[p + 1] += 1;
        }
        for ix in 0..parent.len() {
            offsets[ix + 1] += offsets[ix];
        }
        let mut fill = offsets.clone();
        let mut items = vec![0; offsets[parent.len()]];
        for (ix, p) in parent.iter().enumerate() {
            if let Some(p) = *p {
                items[fill[p]] = ix;
                fill[p] += 1;
            }
        }
        ChildLists { offsets, items }
    }

    pub(crate) fn get(&self, ix: usize) -> &[usize] {
        &self.items[self.offsets[ix]..self.offsets[ix + 1]]
    }

    fn get_mut(&mut self, ix: usize) -> &mut [usize] {
        &mut self.items[self.offsets[ix]..self.offsets[ix + 1]]
    }

    fn len(&self) -> usize {
        self.offsets.len() - 1
    }
}

/// Links recovered while validating, reused by [`NetworkInstance::topology`].
struct Scan<'a> {
    index: FxHashMap<&'a str, usize>,
    /// Ids by position, packed for the sibling sort.
    names: Vec<&'a str>,
    parent: Vec<Option<usize>>,
    children: ChildLists,
    roots: Vec<usize>,
}

fn scan(inst: &NetworkInstance) -> (Vec<ModelViolation>, Scan<'_>) {
    let mut out = Vec::new();
    let mut flag = |node: Option<&NodeId>, problem| {
        out.push(ModelViolation {
            node: node.cloned(),
            problem,
        })
    };

    if inst.capacity == 0 {
        flag(None, Problem::ZeroCapacity);
    }

    let n = inst.nodes.len();
    let mut index: FxHashMap<&str, usize> = FxHashMap::default();
    index.reserve(n);
    let mut names = Vec::with_capacity(n);
    // one spare slot for the artificial root the transform adds
    let mut parent = Vec::with_capacity(n + 1);
    parent.resize(n, None);
    let mut is_client = vec![false; n];
    let mut roots = Vec::new();
    // parents listed after their children, resolved once every id is known
    let mut deferred = Vec::new();
    let mut clients = 0;
    let mut internals = 0;
    // siblings are usually listed together, so remember the last hit
    let mut last: Option<(&NodeId, usize)> = None;
    for (ix, node) in inst.nodes.iter().enumerate() {
        names.push(node.id.as_str());
        if index.insert(node.id.as_str(), ix).is_some() {
            flag(Some(&node.id), Problem::DuplicateId);
        }
        if node.id.as_str() == ARTIFICIAL_ROOT_ID {
            flag(Some(&node.id), Problem::ReservedId);
        }
        let is_root = node.parent.is_none();
        match &node.parent {
            None => roots.push(ix),
            Some(p) => match last.filter(|(id, _)| *id == p).map(|(_, pix)| pix).or_else(|| index.get(p.as_str()).copied()) {
                Some(pix) => {
                    parent[ix] = Some(pix);
                    last = Some((p, pix));
                }
                None => deferred.push(ix),
            },
        }
        match (is_root, node.link_bw) {
            (true, Some(_)) => flag(Some(&node.id), Problem::RootHasBandwidth),
            (false, None) => flag(Some(&node.id), Problem::MissingBandwidth),
            _ => {}
        }
        match node.kind {
            NodeKind::Client => {
                clients += 1;
                is_client[ix] = true;
                if is_root {
                    flag(Some(&node.id), Problem::RootIsClient);
                }
                if node.requests.is_none() || node.qos.is_none() {
                    flag(Some(&node.id), Problem::ClientMissingDemand);
                }
            }
            NodeKind::Internal => {
                internals += 1;
                if node.requests.is_some() || node.qos.is_some() {
                    flag(Some(&node.id), Problem::InternalHasDemand);
                }
            }
        }
    }
    for ix in deferred {
        let p = inst.nodes[ix].parent.as_ref().expect("only children are deferred");
        match index.get(p.as_str()) {
            Some(&pix) => parent[ix] = Some(pix),
            None => flag(Some(&inst.nodes[ix].id), Problem::UnknownParent(p.clone())),
        }
    }
    let children = ChildLists::from_parents(&parent);
    for (ix, _) in is_client.iter().enumerate().filter(|(_, c)| **c) {
        if !children.get(ix).is_empty() {
            flag(Some(&inst.nodes[ix].id), Problem::ClientHasChildren);
        }
    }
    match roots.len() {
        0 => flag(None, Problem::NoRoot),
        1 => {}
        _ => {
            for &ix in &roots[1..] {
                flag(Some(&inst.nodes[ix].id), Problem::MultipleRoots);
            }
        }
    }

    if let Some(&root) = roots.first() {
        let mut seen = vec![false; inst.nodes.len()];
        let mut reached = 0;
        let mut stack = vec![root];
        while let Some(ix) = stack.pop() {
            if std::mem::replace(&mut seen[ix], true) {
                continue;
            }
            reached += 1;
            stack.extend(children.get(ix).iter().copied());
        }
        // anything short of a full sweep means a cycle or a dangling parent
        if reached < inst.nodes.len() {
            for (ix, node) in inst.nodes.iter().enumerate() {
                if !seen[ix] && !roots.contains(&ix) && index.contains_key(node.parent.as_ref().unwrap().as_str()) {
                    flag(Some(&node.id), Problem::Unreachable);
                }
            }
        }
    }

    if clients == 0 {
        flag(None, Problem::NoClients);
    }
    if internals == 0 {
        flag(None, Problem::NoInternalNodes);
    }
    let links = Scan {
        index,
        names,
        parent,
        children,
        roots,
    };
    (out, links)
}

/// Index structure over a validated instance. Children are sorted by id.
#[derive(Debug, Clone)]
pub struct Topology<'a> {
    index: FxHashMap<&'a str, usize>,
    parent: Vec<Option<usize>>,
    children: ChildLists,
    root: usize,
}

impl Topology<'_> {
    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, ix: usize) -> Option<usize> {
        self.parent[ix]
    }

    pub fn children(&self, ix: usize) -> &[usize] {
        self.children.get(ix)
    }

    pub fn lookup(&self, id: &NodeId) -> Option<usize> {
        self.index.get(id.as_str()).copied()
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    /// Parent links, sorted child lists and the root.
    pub(crate) fn into_links(self) -> (Vec<Option<usize>>, ChildLists, usize) {
        (self.parent, self.children, self.root)
    }
}

impl NetworkInstance {
    /// Validates and indexes the tree.
    pub fn topology(&self) -> Result<Topology<'_>, ModelError> {
        let (violations, scan) = scan(self);
        if !violations.is_empty() {
            return Err(ModelError::from_violations(violations));
        }
        let mut children = scan.children;
        for ix in 0..children.len() {
            let list = children.get_mut(ix);
            if !list.is_sorted_by(|&a, &b| scan.names[a] <= scan.names[b]) {
                list.sort_by(|&a, &b| scan.names[a].cmp(scan.names[b]));
            }
        }
        Ok(Topology {
            index: scan.index,
            parent: scan.parent,
            children,
            root: scan.roots[0],
        })
    }

    pub fn node(&self, ix: usize) -> &NodeSpec {
        &self.nodes[ix]
    }

    pub fn clients(&self) -> impl Iterator<Item = &NodeSpec> {
        self.nodes.iter().filter(|n| n.is_client())
    }

    pub fn internal_nodes(&self) -> impl Iterator<Item = &NodeSpec> {
        self.nodes.iter().filter(|n| !n.is_client())
    }

    pub fn total_demand(&self) -> u128 {
        self.clients().map(|c| u128::from(c.requests.unwrap_or(0))).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrecheckCause {
    /// The client's own link cannot carry its requests.
    LinkBandwidth { requests: u64, bandwidth: u64 },
    /// A single client asks for more than one server can process.
    OverCapacity { requests: u64, capacity: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrecheckFailure {
    pub client: NodeId,
    pub cause: PrecheckCause,
}

impl fmt::Display for PrecheckFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.cause {
            PrecheckCause::LinkBandwidth { requests, bandwidth } => write!(
                f,
                "client {}: client link bandwidth {bandwidth} below its {requests} requests",
                self.client
            ),
            PrecheckCause::OverCapacity { requests, capacity } => write!(
                f,
                "client {}: {requests} requests exceed server capacity {capacity}",
                self.client
            ),
        }
    }
}

/// Lists every client that no placement can serve, either because its own
/// link is too thin or because it alone overloads a server.
pub fn precheck_client_links(inst: &NetworkInstance) -> Result<(), Vec<PrecheckFailure>> {
    let mut failures = Vec::new();
    for client in inst.clients() {
        let requests = client.requests.unwrap_or(0);
        let bandwidth = client.link_bw.unwrap_or(0);
        if requests > bandwidth {
            failures.push(PrecheckFailure {
                client: client.id.clone(),
                cause: PrecheckCause::LinkBandwidth { requests, bandwidth },
            });
        }
        if requests > inst.capacity {
            failures.push(PrecheckFailure {
                client: client.id.clone(),
                cause: PrecheckCause::OverCapacity {
                    requests,
                    capacity: inst.capacity,
                },
            });
        }
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(failures)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    #[serde(rename = "W")]
    capacity: u64,
    nodes: Vec<NodeDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDoc {
    id: NodeId,
    #[serde(default)]
    parent: Option<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bw: Option<u64>,
    kind: NodeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    w: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    q: Option<u64>,
}

/// Parses and validates an instance document.
pub fn parse_instance(text: &str) -> Result<NetworkInstance, ModelError> {
    let doc: InstanceDoc =
        serde_json::from_str(text).map_err(|e| ModelError::MalformedDocument(e.to_string()))?;
    let inst = NetworkInstance {
        capacity: doc.capacity,
        nodes: doc
            .nodes
            .into_iter()
            .map(|n| NodeSpec {
                id: n.id,
                parent: n.parent,
                link_bw: n.bw,
                kind: n.kind,
                requests: n.w,
                qos: n.q,
            })
            .collect(),
    };
    inst.topology()?;
    Ok(inst)
}

/// Serializes to the instance document as a key-sorted JSON value.
pub fn instance_to_value(inst: &NetworkInstance) -> serde_json::Value {
    let doc = InstanceDoc {
        capacity: inst.capacity,
        nodes: inst
            .nodes
            .iter()
            .map(|n| NodeDoc {
                id: n.id.clone(),
                parent: n.parent.clone(),
                bw: n.link_bw,
                kind: n.kind,
                w: n.requests,
                q: n.qos,
            })
            .collect(),
    };
    serde_json::to_value(doc).expect("instance documents always serialize")
}

pub fn serialize_instance(inst: &NetworkInstance) -> String {
    crate::document::render(&instance_to_value(inst))
}
