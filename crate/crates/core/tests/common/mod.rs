#![allow(dead_code)]

use std::path::PathBuf;

use treeplace::{parse_instance, Contribution, NetworkInstance, NodeId};

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

pub fn load(rel: &str) -> NetworkInstance {
    let text = std::fs::read_to_string(fixture(rel)).expect("fixture readable");
    parse_instance(&text).expect("fixture parses")
}

pub const INF: Option<u64> = None;

pub fn c(v: u64) -> Option<u64> {
    Some(v)
}

pub fn as_opt(c: Contribution) -> Option<u64> {
    c.finite()
}

pub fn ids(names: &[&str]) -> Vec<NodeId> {
    names.iter().map(|&s| NodeId::from(s)).collect()
}

use treeplace::transform::StarTree;
use treeplace::{Mode, Solution, SolveError};

/// Checks the structural invariants of a solved instance. Returns a
/// description of the first broken one.
pub fn check_invariants(sol: &Solution) -> Result<(), String> {
    let tree: &StarTree = &sol.tree;
    let table = &sol.table;
    for ix in 0..tree.len() {
        let t = table.node(ix);
        let id = tree.id(ix);
        for i in 1..=t.depth {
            if t.c(i) < t.c(i - 1) {
                return Err(format!("C({id},{i}) = {} < C({id},{}) = {}", t.c(i), i - 1, t.c(i - 1)));
            }
            if t.e(i).len() < t.e(i - 1).len() {
                return Err(format!("|e({id},{i})| shrinks"));
            }
        }
        if t.is_leaf() {
            continue;
        }
        for i in 0..=t.depth {
            if t.c(i).is_finite() && t.e(i).len() != t.e(0).len() {
                return Err(format!("C({id},{i}) finite but |e({id},{i})| != |e({id},0)|"));
            }
        }
        if table.mode() == Mode::PaperLiteral && ix != StarTree::ROOT {
            greedy_certificate(sol, ix)?;
        }
    }
    let placed = sol.placement.cardinality as u64;
    if placed != table.optimum() {
        return Err(format!("placed {placed} but m(T*) = {}", table.optimum()));
    }
    Ok(())
}

/// Dropping any one member from `e(v,0)` (the best case being the smallest
/// of them, re-spent on nothing) must leave the residual above W, i.e. no
/// smaller set of eligible children fits.
fn greedy_certificate(sol: &Solution, v: usize) -> Result<(), String> {
    let tree = &sol.tree;
    let t = sol.table.node(v);
    let e0 = t.e(0);
    if e0.is_empty() {
        return Ok(());
    }
    let node = tree.node(v);
    let mut total: u128 = 0;
    let mut infinite_ineligible = false;
    let mut eligible: Vec<Option<u64>> = Vec::new();
    for &child in &node.children {
        let cv = sol.table.node(child).c(1).finite();
        if tree.node(child).eligible() {
            eligible.push(cv);
        } else {
            match cv {
                Some(x) => total += u128::from(x),
                None => infinite_ineligible = true,
            }
        }
    }
    if infinite_ineligible {
        return Err(format!("{} has an ineligible child with infinite contribution", node.id));
    }
    // Best set of size |e|-1: the largest contributions.
    eligible.sort_by(|a, b| match (a, b) {
        (None, None) => std::cmp::Ordering::Equal,
        (None, _) => std::cmp::Ordering::Less,
        (_, None) => std::cmp::Ordering::Greater,
        (Some(x), Some(y)) => y.cmp(x),
    });
    let rest = &eligible[e0.len() - 1..];
    if rest.iter().any(Option::is_none) {
        return Ok(());
    }
    let residual = total + rest.iter().map(|x| u128::from(x.unwrap())).sum::<u128>();
    if residual <= u128::from(tree.capacity()) {
        return Err(format!("{} fits with {} replicas among its children", node.id, e0.len() - 1));
    }
    Ok(())
}

pub fn is_infeasible(err: &SolveError) -> bool {
    err.infeasibility().is_some()
}
