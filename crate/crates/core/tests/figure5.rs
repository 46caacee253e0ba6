//! The 16-internal-node example tree with W = 15. Expected values are the
//! published tables with the corrections listed in
//! `fixtures/figure5/README.md`.

mod common;

use std::collections::BTreeSet;

use common::{as_opt, c, ids, load, INF};
use treeplace::oracle::{brute_force_min, DEFAULT_MAX_N};
use treeplace::transform::StarKind;
use treeplace::{solve, verify_placement, Mode, NodeId, Solution};

fn solved() -> Solution {
    solve(&load("figure5/instance.json"), Mode::PaperLiteral).expect("example is feasible")
}

fn e_ids(sol: &Solution, v: &str, i: usize) -> Vec<NodeId> {
    let t = sol.table.by_id(&sol.tree, &v.into()).unwrap();
    let mut out: Vec<NodeId> = t.e(i).iter().map(|&ix| sol.tree.id(ix).clone()).collect();
    out.sort();
    out
}

fn c_row(sol: &Solution, v: &str) -> Vec<Option<u64>> {
    let t = sol.table.by_id(&sol.tree, &v.into()).unwrap();
    (0..=t.depth).map(|i| as_opt(t.c(i))).collect()
}

#[test]
fn transformed_shape() {
    let sol = solved();
    let mut leaves: Vec<&str> = sol
        .tree
        .nodes()
        .iter()
        .filter(|n| matches!(n.kind, StarKind::Leaf(_)))
        .map(|n| n.id.as_str())
        .collect();
    leaves.sort();
    assert_eq!(leaves, ["f", "h", "i", "k", "l", "m", "n", "o", "p", "x", "y"]);
    let x = sol.tree.node(sol.tree.lookup(&"x".into()).unwrap()).leaf().unwrap();
    assert!(!x.eligible);
    assert_eq!((x.weight, x.qos), (3, 1));
    let l = sol.tree.node(sol.tree.lookup(&"l".into()).unwrap()).leaf().unwrap();
    assert!(l.eligible);
    assert_eq!((l.weight, l.qos), (3, 2));
}

#[test]
fn leaf_contributions() {
    let sol = solved();
    let expected: [(&str, &[Option<u64>]); 11] = [
        ("l", &[c(3), c(3), c(3), INF, INF]),
        ("f", &[c(4), c(4), INF, INF]),
        ("x", &[c(3), c(3), INF, INF]),
        ("m", &[c(2), c(2), c(2), c(2), INF]),
        ("n", &[c(5), c(5), INF, INF, INF]),
        ("h", &[c(8), c(8), c(8), INF]),
        ("i", &[c(7), INF, INF, INF]),
        ("o", &[c(4), c(4), c(4), c(4), INF]),
        ("p", &[c(12), c(12), c(12), c(12), INF]),
        ("k", &[c(3), INF, INF, INF]),
        ("y", &[c(8), c(8), c(8), INF]),
    ];
    for (leaf, row) in expected {
        assert_eq!(c_row(&sol, leaf), row, "leaf {leaf}");
    }
}

#[test]
fn internal_tables() {
    let sol = solved();
    // (e(v,i), C(v,i))
    type Row = (Vec<&'static str>, Option<u64>);
    let expected: [(&str, u64, Vec<Row>); 8] = [
        ("e", 0, vec![(vec![], c(3)), (vec![], c(3)), (vec!["l"], INF), (vec!["l"], INF)]),
        ("g", 0, vec![(vec![], c(7)), (vec!["n"], INF), (vec!["n"], INF), (vec!["m", "n"], INF)]),
        ("j", 1, vec![(vec!["p"], c(4)), (vec!["p"], c(4)), (vec!["p"], c(4)), (vec!["o", "p"], INF)]),
        ("b", 0, vec![(vec![], c(7)), (vec!["e", "f"], INF), (vec!["e", "f"], INF)]),
        ("c", 2, vec![(vec!["g", "i"], c(11)), (vec!["g", "h", "i"], INF), (vec!["g", "h", "i"], INF)]),
        ("d", 2, vec![(vec!["k"], c(12)), (vec!["k"], c(12)), (vec!["j", "k"], INF)]),
        ("a", 6, vec![(vec!["b", "c"], c(12)), (vec!["b", "c", "d"], INF)]),
        ("__r_plus__", 7, vec![(vec!["a"], c(0))]),
    ];
    for (v, m, rows) in expected {
        let t = sol.table.by_id(&sol.tree, &v.into()).unwrap();
        assert_eq!(t.m(), Some(m), "m({v})");
        assert_eq!(t.depth + 1, rows.len(), "depth of {v}");
        for (i, (e, cv)) in rows.into_iter().enumerate() {
            assert_eq!(e_ids(&sol, v, i), ids(&e), "e({v},{i})");
            assert_eq!(as_opt(t.c(i)), cv, "C({v},{i})");
        }
    }
}

#[test]
fn placement_and_trace() {
    let sol = solved();
    assert_eq!(sol.table.optimum(), 7);
    let want: BTreeSet<NodeId> = ids(&["a", "b", "c", "g", "i", "k", "p"]).into_iter().collect();
    assert_eq!(sol.placement.replicas_original, want);

    let calls: Vec<(String, usize, Vec<NodeId>)> = sol
        .placement
        .trace(&sol.tree, &sol.table)
        .iter()
        .map(|t| (t.node.to_string(), t.i, t.placed.clone()))
        .collect();
    let expected: Vec<(String, usize, Vec<NodeId>)> = [
        ("__r_plus__", 0, vec!["a"]),
        ("a", 0, vec!["b", "c"]),
        ("b", 0, vec![]),
        ("e", 1, vec![]),
        ("l", 2, vec![]),
        ("f", 1, vec![]),
        ("c", 0, vec!["g", "i"]),
        ("g", 0, vec![]),
        ("m", 1, vec![]),
        ("n", 1, vec![]),
        ("h", 1, vec![]),
        ("i", 0, vec![]),
        ("x", 1, vec![]),
        ("d", 1, vec!["k"]),
        ("j", 2, vec!["p"]),
        ("o", 3, vec![]),
        ("p", 0, vec![]),
        ("k", 0, vec![]),
        ("y", 2, vec![]),
    ]
    .into_iter()
    .map(|(n, i, p)| (n.to_string(), i, ids(&p)))
    .collect();
    assert_eq!(calls, expected);
}

#[test]
fn verifier_and_oracle_agree() {
    let inst = load("figure5/instance.json");
    let sol = solved();
    let report = verify_placement(&inst, &sol.placement.replicas_original, Mode::PaperLiteral).unwrap();
    assert!(report.is_feasible(), "{:?}", report.violations);

    let six_fail = verify_placement(&inst, &ids(&["a", "b", "c", "g", "i", "k"]), Mode::PaperLiteral).unwrap();
    assert!(!six_fail.is_feasible());

    assert_eq!(inst.internal_nodes().count(), 16);
    let oracle = brute_force_min(&inst, Mode::PaperLiteral, DEFAULT_MAX_N).unwrap();
    assert_eq!(oracle.optimum.unwrap().cardinality, 7);
}
