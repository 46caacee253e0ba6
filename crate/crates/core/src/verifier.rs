//! Feasibility of a replica set, checked on the original tree.
//!
//! Nothing here looks at the computation tree or the contribution tables.
//! Every client with requests is served by its nearest equipped strict
//! ancestor; if that server is more than `q` hops away (or there is none)
//! the client is unserved, there is no fallback to a farther server.
//!
//! Bandwidth is tracked as a list of bundle flows per link. A client's own
//! link carries that client alone. Above the parent, all client children of
//! one parent travel together to the same server and form one bundle.
//! Per-bundle mode bounds each bundle by the link bandwidth; aggregate mode
//! bounds the sum.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::{json, Value};
use thiserror::Error;

use crate::document::wide;
use crate::model::{ModelError, NetworkInstance, NodeId, Topology};
use crate::Mode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ViolationKind {
    Qos,
    Capacity,
    Bandwidth,
    Unserved,
}

impl ViolationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationKind::Qos => "qos",
            ViolationKind::Capacity => "capacity",
            ViolationKind::Bandwidth => "bandwidth",
            ViolationKind::Unserved => "unserved",
        }
    }
}

/// `location` is a client (unserved), a server (capacity) or the child end
/// of a link (bandwidth). `amount` is the excess over the limit, or the
/// stranded requests for an unserved client.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Violation {
    pub kind: ViolationKind,
    pub location: NodeId,
    pub amount: u128,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub server: NodeId,
    pub distance: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeasibilityReport {
    pub mode: Mode,
    pub assignment: BTreeMap<NodeId, Assignment>,
    pub server_loads: BTreeMap<NodeId, u128>,
    /// Total flow per link, keyed by child end.
    pub link_flows: BTreeMap<NodeId, u128>,
    /// Individual bundle flows per link.
    pub bundle_flows: BTreeMap<NodeId, Vec<u64>>,
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, kind: ViolationKind) -> usize {
        self.violations.iter().filter(|v| v.kind == kind).count()
    }
}

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("replica {0} is not a node of the instance")]
    UnknownReplica(NodeId),
    #[error("replica {0} is a client; only internal nodes can be equipped")]
    ClientReplica(NodeId),
}

/// Replica set resolved against an instance.
pub(crate) struct Resolved<'t> {
    pub(crate) topo: &'t Topology<'t>,
    pub(crate) equipped: Vec<bool>,
}

pub(crate) fn resolve<'a, 't>(
    inst: &NetworkInstance,
    topo: &'t Topology<'t>,
    replicas: impl IntoIterator<Item = &'a NodeId>,
) -> Result<Resolved<'t>, VerifyError> {
    let mut equipped = vec![false; inst.nodes.len()];
    for id in replicas {
        let ix = topo.lookup(id).ok_or_else(|| VerifyError::UnknownReplica(id.clone()))?;
        if inst.node(ix).is_client() {
            return Err(VerifyError::ClientReplica(id.clone()));
        }
        equipped[ix] = true;
    }
    Ok(Resolved { topo, equipped })
}

/// Nearest equipped strict ancestor of every client, as tree indices.
/// Clients without requests are assigned when a server is in range and
/// are otherwise left alone.
fn assign(inst: &NetworkInstance, r: &Resolved) -> (BTreeMap<usize, (usize, u64)>, Vec<Violation>) {
    let mut served = BTreeMap::new();
    let mut violations = Vec::new();
    for (ix, node) in inst.nodes.iter().enumerate() {
        if !node.is_client() {
            continue;
        }
        let requests = node.requests.unwrap_or(0);
        let qos = node.qos.unwrap_or(0);
        let mut hops = 0u64;
        let mut cur = r.topo.parent(ix);
        let mut server = None;
        while let Some(up) = cur {
            hops += 1;
            if r.equipped[up] {
                server = Some(up);
                break;
            }
            cur = r.topo.parent(up);
        }
        match server {
            Some(s) if hops <= qos => {
                served.insert(ix, (s, hops));
            }
            _ if requests == 0 => {}
            _ => violations.push(Violation {
                kind: ViolationKind::Unserved,
                location: node.id.clone(),
                amount: u128::from(requests),
            }),
        }
    }
    (served, violations)
}

pub fn closest_assignment<'a>(
    inst: &NetworkInstance,
    replicas: impl IntoIterator<Item = &'a NodeId>,
) -> Result<(BTreeMap<NodeId, Assignment>, Vec<Violation>), VerifyError> {
    let topo = inst.topology()?;
    let resolved = resolve(inst, &topo, replicas)?;
    let (served, violations) = assign(inst, &resolved);
    let assignment = served
        .into_iter()
        .map(|(c, (s, d))| {
            (
                inst.node(c).id.clone(),
                Assignment {
                    server: inst.node(s).id.clone(),
                    distance: d,
                },
            )
        })
        .collect();
    Ok((assignment, violations))
}

pub fn verify_placement<'a>(
    inst: &NetworkInstance,
    replicas: impl IntoIterator<Item = &'a NodeId>,
    mode: Mode,
) -> Result<FeasibilityReport, VerifyError> {
    let topo = inst.topology()?;
    let resolved = resolve(inst, &topo, replicas)?;
    Ok(verify_resolved(inst, &resolved, mode))
}

pub(crate) fn is_feasible(inst: &NetworkInstance, resolved: &Resolved, mode: Mode) -> bool {
    verify_resolved(inst, resolved, mode).is_feasible()
}

fn verify_resolved(inst: &NetworkInstance, r: &Resolved, mode: Mode) -> FeasibilityReport {
    let (served, mut violations) = assign(inst, r);
    let n = inst.nodes.len();

    let mut loads = vec![0u128; n];
    let mut flows: Vec<Vec<u64>> = vec![Vec::new(); n];
    for (&client, &(server, _)) in &served {
        let requests = inst.node(client).requests.unwrap_or(0);
        loads[server] += u128::from(requests);
        flows[client].push(requests);
    }
    // Requests that must cross a client's own link whether or not they end
    // up served.
    for (ix, node) in inst.nodes.iter().enumerate() {
        if node.is_client() && !served.contains_key(&ix) && node.requests.unwrap_or(0) > 0 {
            flows[ix].push(node.requests.unwrap_or(0));
        }
    }

    // bundles: served client children of one parent, all headed for one server
    let mut bundles: BTreeMap<usize, (usize, u64)> = BTreeMap::new();
    for (&client, &(server, _)) in &served {
        let parent = r.topo.parent(client).expect("clients have parents");
        let entry = bundles.entry(parent).or_insert((server, 0));
        entry.1 = entry.1.saturating_add(inst.node(client).requests.unwrap_or(0));
    }
    for (&parent, &(server, weight)) in &bundles {
        if weight == 0 {
            continue;
        }
        let mut cur = parent;
        while cur != server {
            flows[cur].push(weight);
            cur = r.topo.parent(cur).expect("server is an ancestor");
        }
    }

    let capacity = u128::from(inst.capacity);
    let mut server_loads = BTreeMap::new();
    for (ix, &load) in loads.iter().enumerate() {
        if r.equipped[ix] {
            server_loads.insert(inst.node(ix).id.clone(), load);
            if load > capacity {
                violations.push(Violation {
                    kind: ViolationKind::Capacity,
                    location: inst.node(ix).id.clone(),
                    amount: load - capacity,
                });
            }
        }
    }

    let mut link_flows = BTreeMap::new();
    let mut bundle_flows = BTreeMap::new();
    for (ix, list) in flows.into_iter().enumerate() {
        if list.is_empty() {
            continue;
        }
        let node = inst.node(ix);
        let bw = u128::from(node.link_bw.unwrap_or(0));
        let total: u128 = list.iter().map(|&f| u128::from(f)).sum();
        match mode {
            Mode::PaperLiteral => {
                for &f in &list {
                    if u128::from(f) > bw {
                        violations.push(Violation {
                            kind: ViolationKind::Bandwidth,
                            location: node.id.clone(),
                            amount: u128::from(f) - bw,
                        });
                    }
                }
            }
            Mode::Aggregate => {
                if total > bw {
                    violations.push(Violation {
                        kind: ViolationKind::Bandwidth,
                        location: node.id.clone(),
                        amount: total - bw,
                    });
                }
            }
        }
        link_flows.insert(node.id.clone(), total);
        bundle_flows.insert(node.id.clone(), list);
    }

    violations.sort();
    let assignment = served
        .into_iter()
        .map(|(c, (s, d))| {
            (
                inst.node(c).id.clone(),
                Assignment {
                    server: inst.node(s).id.clone(),
                    distance: d,
                },
            )
        })
        .collect();
    FeasibilityReport {
        mode,
        assignment,
        server_loads,
        link_flows,
        bundle_flows,
        violations,
    }
}

pub fn report_to_value(report: &FeasibilityReport) -> Value {
    let assignment: serde_json::Map<String, Value> = report
        .assignment
        .iter()
        .map(|(c, a)| (c.to_string(), json!({ "server": a.server, "distance": a.distance })))
        .collect();
    let loads: serde_json::Map<String, Value> =
        report.server_loads.iter().map(|(s, &l)| (s.to_string(), wide(l))).collect();
    let flows: serde_json::Map<String, Value> =
        report.link_flows.iter().map(|(e, &f)| (e.to_string(), wide(f))).collect();
    let bundles: serde_json::Map<String, Value> =
        report.bundle_flows.iter().map(|(e, l)| (e.to_string(), json!(l))).collect();
    let violations: Vec<Value> = report
        .violations
        .iter()
        .map(|v| json!({ "kind": v.kind.as_str(), "location": v.location, "amount": wide(v.amount) }))
        .collect();
    json!({
        "mode": report.mode.as_str(),
        "feasible": report.is_feasible(),
        "assignment": assignment,
        "server_loads": loads,
        "link_flows": flows,
        "bundle_flows": bundles,
        "violations": violations,
    })
}

/// Replica ids as a set, for callers holding a slice.
pub fn replica_set(ids: &[&str]) -> BTreeSet<NodeId> {
    ids.iter().map(|&s| s.into()).collect()
}
