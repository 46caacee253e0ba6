//! Top-down pass: walks the tree from the artificial root, equipping
//! `e(v,i)` at every internal node where `i` is the distance to the nearest
//! equipped ancestor.

use std::collections::BTreeSet;

use crate::dp::{run_phase1, ContributionTable};
use crate::error::{Infeasibility, SolveError};
use crate::model::{NetworkInstance, NodeId};
use crate::transform::{transform_to_star, StarKind, StarTree};
use crate::Mode;

/// One `Place-replica(v, i)` call and the children it equipped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEntry {
    pub node: NodeId,
    pub i: usize,
    pub placed: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlacementResult {
    /// Equipped nodes of the computation tree.
    pub replicas_star: BTreeSet<NodeId>,
    /// The same replicas named in the original tree.
    pub replicas_original: BTreeSet<NodeId>,
    pub cardinality: usize,
    /// Equipped tree indices in placement order.
    pub equipped: Vec<usize>,
    /// `(node, i)` of every call in execution order: pre-order, children
    /// by ascending id.
    pub calls: Vec<(usize, usize)>,
}

impl PlacementResult {
    /// The calls with node names and the children each one equipped.
    pub fn trace(&self, tree: &StarTree, table: &ContributionTable) -> Vec<TraceEntry> {
        self.calls
            .iter()
            .map(|&(v, i)| TraceEntry {
                node: tree.id(v).clone(),
                i,
                placed: table.node(v).e(i).iter().map(|&m| tree.id(m).clone()).collect(),
            })
            .collect()
    }
}

pub fn place_replicas(tree: &StarTree, table: &ContributionTable) -> Result<PlacementResult, SolveError> {
    let mut equipped = Vec::new();
    // every node is visited exactly once
    let mut calls = Vec::with_capacity(tree.len());
    // explicit stack: path-shaped trees can be very deep
    let mut stack = vec![(StarTree::ROOT, 0usize)];
    while let Some((v, i)) = stack.pop() {
        calls.push((v, i));
        let node = tree.node(v);
        if let StarKind::Leaf(_) = node.kind {
            continue;
        }
        let t = table.node(v);
        if !t.c(i).is_finite() {
            return Err(SolveError::ContractViolation(format!(
                "placement reached {} at distance {i} where no configuration fits",
                node.id
            )));
        }
        let members = t.e(i);
        for &m in members {
            if !tree.node(m).eligible() {
                return Err(SolveError::ContractViolation(format!(
                    "{} selected but cannot host a replica",
                    tree.id(m)
                )));
            }
            equipped.push(m);
        }
        for &child in node.children.iter().rev() {
            let next = if members.binary_search(&child).is_ok() { 0 } else { i + 1 };
            stack.push((child, next));
        }
    }

    let replicas_star: BTreeSet<NodeId> = equipped.iter().map(|&ix| tree.id(ix).clone()).collect();
    let replicas_original = map_replicas_to_original(&equipped, tree);
    let cardinality = replicas_star.len();
    if cardinality as u64 != table.optimum() || replicas_original.len() != cardinality {
        return Err(SolveError::ContractViolation(format!(
            "placed {cardinality} replicas but the optimum count is {}",
            table.optimum()
        )));
    }
    Ok(PlacementResult {
        replicas_star,
        replicas_original,
        cardinality,
        equipped,
        calls,
    })
}

/// Names replicas in the original tree: folded leaves map back to the
/// internal node they replaced.
pub fn map_replicas_to_original(equipped: &[usize], tree: &StarTree) -> BTreeSet<NodeId> {
    equipped.iter().filter_map(|&ix| tree.project(ix).cloned()).collect()
}

/// Recomputes server loads on the computation tree from the placed set and
/// checks that nothing arriving at the original root overflows it or leaks
/// past it.
pub fn root_workload_check(
    tree: &StarTree,
    _table: &ContributionTable,
    result: &PlacementResult,
) -> Result<(), SolveError> {
    let mut equipped = vec![false; tree.len()];
    for &ix in &result.equipped {
        equipped[ix] = true;
    }
    let mut pending = vec![0u128; tree.len()];
    let capacity = u128::from(tree.capacity());
    let fail = |what: String| Err(SolveError::Infeasible(Infeasibility::Exhausted { node: what.into() }));
    for ix in (0..tree.len()).rev() {
        let node = tree.node(ix);
        if let Some(leaf) = node.leaf() {
            pending[ix] = u128::from(leaf.weight);
        }
        if equipped[ix] {
            if pending[ix] > capacity {
                return fail(node.id.to_string());
            }
            pending[ix] = 0;
        }
        if let Some(p) = node.parent {
            pending[p] += pending[ix];
        }
    }
    let root = tree.node(StarTree::ROOT).children[0];
    if pending[root] > capacity || pending[StarTree::ROOT] > 0 {
        return fail(tree.id(root).to_string());
    }
    Ok(())
}

/// Transform, both passes and the root workload check.
#[derive(Debug, Clone)]
pub struct Solution {
    pub tree: StarTree,
    pub table: ContributionTable,
    pub placement: PlacementResult,
}

pub fn solve(inst: &NetworkInstance, mode: Mode) -> Result<Solution, SolveError> {
    let tree = transform_to_star(inst)?;
    let table = run_phase1(&tree, mode)?;
    let placement = place_replicas(&tree, &table)?;
    root_workload_check(&tree, &table, &placement).map_err(|e| {
        SolveError::ContractViolation(format!("solver produced an overloaded placement: {e}"))
    })?;
    Ok(Solution {
        tree,
        table,
        placement,
    })
}
