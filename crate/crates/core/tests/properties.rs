//! Randomized checks against the generator, verifier and oracle.

mod common;

use common::{check_invariants, is_infeasible};
use proptest::prelude::*;
use treeplace::generator::{generate_dual_role, GenError};
use treeplace::model::precheck_client_links;
use treeplace::oracle::{brute_force_dual_role, brute_force_min, DEFAULT_MAX_N};
use treeplace::{
    fictivize, generate, parse_instance, serialize_instance, solve, validate_instance, verify_placement, GenConfig,
    Mode, NodeKind, Shape,
};

fn shape() -> impl Strategy<Value = Shape> {
    prop_oneof![Just(Shape::Balanced), Just(Shape::Path), Just(Shape::Random)]
}

fn config() -> impl Strategy<Value = GenConfig> {
    (any::<u64>(), 1usize..=12, 1usize..=14, shape(), 3u64..=25, 1u64..=6).prop_map(
        |(seed, internal_count, client_count, shape, capacity, max_q)| GenConfig {
            seed,
            internal_count,
            client_count,
            branching: (1, 3),
            capacity,
            bandwidth: (1, 20),
            requests: (0, 10),
            qos: (0, max_q),
            shape,
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn documents_round_trip(cfg in config()) {
        let inst = generate(&cfg).unwrap();
        let text = serialize_instance(&inst);
        let back = parse_instance(&text).unwrap();
        prop_assert_eq!(&back, &inst);
        prop_assert_eq!(serialize_instance(&back), text);
    }

    #[test]
    fn same_config_same_instance(cfg in config()) {
        prop_assert_eq!(generate(&cfg).unwrap(), generate(&cfg).unwrap());
    }

    #[test]
    fn structural_mutations_are_rejected(cfg in config(), pick in any::<prop::sample::Index>(), which in 0..4u8) {
        let mut inst = generate(&cfg).unwrap();
        let ix = pick.index(inst.nodes.len());
        match which {
            0 => {
                // duplicate id
                let other = (ix + 1) % inst.nodes.len();
                if other == ix { return Ok(()); }
                inst.nodes[ix].id = inst.nodes[other].id.clone();
            }
            1 => inst.nodes[ix].parent = Some("nowhere".into()),
            2 => inst.capacity = 0,
            _ => {
                if inst.nodes[ix].parent.is_none() { return Ok(()); }
                inst.nodes[ix].link_bw = None;
            }
        }
        prop_assert!(!validate_instance(&inst).is_empty());
        prop_assert!(inst.topology().is_err());
    }

    #[test]
    fn raising_client_bandwidth_keeps_precheck_passing(cfg in config(), bump in 0u64..50) {
        let mut inst = generate(&cfg).unwrap();
        if precheck_client_links(&inst).is_err() { return Ok(()); }
        for n in inst.nodes.iter_mut().filter(|n| n.kind == NodeKind::Client) {
            n.link_bw = n.link_bw.map(|b| b + bump);
        }
        prop_assert!(precheck_client_links(&inst).is_ok());
    }

    #[test]
    fn solver_invariants_and_verifier(cfg in config()) {
        let inst = generate(&cfg).unwrap();
        for mode in [Mode::PaperLiteral, Mode::Aggregate] {
            match solve(&inst, mode) {
                Ok(sol) => {
                    if let Err(why) = check_invariants(&sol) {
                        return Err(TestCaseError::fail(why));
                    }
                    let report = verify_placement(&inst, &sol.placement.replicas_original, mode).unwrap();
                    prop_assert!(report.is_feasible(), "{:?}", report.violations);
                }
                Err(e) => prop_assert!(is_infeasible(&e), "{e}"),
            }
        }
    }

    #[test]
    fn aggregate_feasible_implies_per_bundle_feasible(cfg in config(), mask in any::<u32>()) {
        let inst = generate(&cfg).unwrap();
        let replicas: Vec<_> = inst
            .internal_nodes()
            .enumerate()
            .filter(|(k, _)| mask >> (k % 32) & 1 == 1)
            .map(|(_, n)| n.id.clone())
            .collect();
        let agg = verify_placement(&inst, &replicas, Mode::Aggregate).unwrap();
        let lit = verify_placement(&inst, &replicas, Mode::PaperLiteral).unwrap();
        if agg.is_feasible() {
            prop_assert!(lit.is_feasible());
        }
    }
}

#[test]
fn solver_matches_oracle_on_small_corpus() {
    for seed in 1..=200 {
        let inst = generate(&GenConfig::small(seed)).unwrap();
        let oracle = brute_force_min(&inst, Mode::PaperLiteral, DEFAULT_MAX_N).unwrap();
        let solved = solve(&inst, Mode::PaperLiteral);
        match (&solved, &oracle.optimum) {
            (Ok(sol), Some(opt)) => assert_eq!(sol.placement.cardinality, opt.cardinality, "seed {seed}"),
            (Err(e), None) => assert!(is_infeasible(e), "seed {seed}: {e}"),
            (Ok(sol), None) => panic!("seed {seed}: solver placed {} but oracle finds none", sol.placement.cardinality),
            (Err(e), Some(opt)) => panic!("seed {seed}: solver failed ({e}) but oracle found {}", opt.cardinality),
        }
    }
}

#[test]
fn fictivized_solver_matches_dual_role_oracle() {
    for seed in 1..=60 {
        let tree = generate_dual_role(seed, 1 + (seed as usize % 8));
        let direct = brute_force_dual_role(&tree, DEFAULT_MAX_N).unwrap();
        let via = match solve(&fictivize(&tree), Mode::PaperLiteral) {
            Ok(sol) => Some(sol.placement.cardinality),
            Err(e) => {
                assert!(is_infeasible(&e), "seed {seed}: {e}");
                None
            }
        };
        assert_eq!(via, direct, "seed {seed}");
    }
}

#[test]
fn chain_of_three_dual_role_nodes() {
    let tree = treeplace::DualRoleTree::parse(
        r#"{"W": 10, "nodes": [
            {"id": "a", "demand": [4, 0]},
            {"id": "b", "parent": "a", "bw": 5, "demand": [4, 1]},
            {"id": "c", "parent": "b", "bw": 5, "demand": [4, 1]}
        ]}"#,
    )
    .unwrap();
    let inst = fictivize(&tree);
    assert_eq!(inst.internal_nodes().count(), 3);
    assert_eq!(inst.clients().count(), 3);
    // a has range 0 and must serve itself; c cannot reach a, so b or c
    // holds a second replica.
    assert_eq!(brute_force_dual_role(&tree, DEFAULT_MAX_N).unwrap(), Some(2));
    assert_eq!(solve(&inst, Mode::PaperLiteral).unwrap().placement.cardinality, 2);
}

#[test]
fn bad_generator_configs() {
    let cfg = GenConfig { qos: (3, 1), ..GenConfig::default() };
    assert!(matches!(generate(&cfg), Err(GenError::Config(_))));
    let cfg = GenConfig { branching: (0, 0), internal_count: 3, ..GenConfig::default() };
    assert!(matches!(generate(&cfg), Err(GenError::Config(_))));
}
