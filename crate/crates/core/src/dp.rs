//! Bottom-up pass: contribution values `C(v,i)`, equipped child sets
//! `e(v,i)` and minimum replica counts `m(t(v))`.
//!
//! `C(v,i)` is the least workload the subtree of `v` puts on its `i`-th
//! ancestor when the subtree below `v` holds exactly `m(t(v))` replicas and
//! nothing between `v` and that ancestor is equipped. Rows are computed for
//! `0 ..= depth(v)`, but every row is constant past `max_range + 1` (no
//! bundle carrying requests can travel that far), so storage is clipped
//! there and reads beyond it return the last stored entry.

use std::fmt::Write as _;

use crate::amount::{Bound, Contribution, Load};
use crate::error::{Infeasibility, SolveError};
use crate::transform::{StarKind, StarLeaf, StarTree};
use crate::Mode;

/// Row view of one node: `C(v,.)`, `e(v,.)` and `m(t(v))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeTable<'a> {
    pub depth: usize,
    c_row: &'a [Contribution],
    /// `rows + 1` offsets into `e_items`; empty for leaves.
    e_bounds: &'a [usize],
    e_items: &'a [usize],
    m: Option<u64>,
}

impl<'a> NodeTable<'a> {
    /// `C(v,i)`. Panics when `i` exceeds the node depth.
    pub fn c(&self, i: usize) -> Contribution {
        assert!(i <= self.depth, "C(v, {i}) beyond depth {}", self.depth);
        self.c_row[i.min(self.c_row.len() - 1)]
    }

    /// `e(v,i)` as tree indices in ascending id order. Empty for leaves.
    pub fn e(&self, i: usize) -> &'a [usize] {
        assert!(i <= self.depth, "e(v, {i}) beyond depth {}", self.depth);
        if self.e_bounds.is_empty() {
            return &[];
        }
        let r = i.min(self.e_bounds.len() - 2);
        &self.e_items[self.e_bounds[r]..self.e_bounds[r + 1]]
    }

    /// `m(t(v))`; `None` on leaves.
    pub fn m(&self) -> Option<u64> {
        self.m
    }

    pub fn is_leaf(&self) -> bool {
        self.m.is_none()
    }

    pub fn stored_len(&self) -> usize {
        self.c_row.len()
    }
}

/// All node tables, stored flat and indexed by tree index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContributionTable {
    depth: Vec<usize>,
    /// (start, len) into `c_vals`.
    c_span: Vec<(usize, usize)>,
    c_vals: Vec<Contribution>,
    /// (start, len) into `e_bounds`.
    e_span: Vec<(usize, usize)>,
    e_bounds: Vec<usize>,
    e_items: Vec<usize>,
    m: Vec<Option<u64>>,
    max_range: u64,
    mode: Mode,
}

impl ContributionTable {
    /// Table of the node at tree index `ix`.
    pub fn node(&self, ix: usize) -> NodeTable<'_> {
        let (cs, cl) = self.c_span[ix];
        let (es, el) = self.e_span[ix];
        NodeTable {
            depth: self.depth[ix],
            c_row: &self.c_vals[cs..cs + cl],
            e_bounds: &self.e_bounds[es..es + el],
            e_items: &self.e_items,
            m: self.m[ix],
        }
    }

    pub fn by_id(&self, tree: &StarTree, id: &crate::NodeId) -> Option<NodeTable<'_>> {
        tree.lookup(id).map(|ix| self.node(ix))
    }

    /// `m(T*)`, the optimum replica count.
    pub fn optimum(&self) -> u64 {
        self.m[StarTree::ROOT].expect("root table is internal")
    }

    /// Largest QoS budget among loaded leaves (`L` in the cost bound).
    pub fn max_range(&self) -> u64 {
        self.max_range
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.depth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.depth.is_empty()
    }

    fn c_at(&self, ix: usize, i: usize) -> Contribution {
        let (start, len) = self.c_span[ix];
        self.c_vals[start + i.min(len - 1)]
    }
}

/// Minimum bandwidth over the `i` links from `v` up to its `i`-th ancestor.
pub fn min_bw_on_path(tree: &StarTree, v: usize, i: usize) -> Result<Bound, SolveError> {
    let node = tree.node(v);
    if i > node.depth {
        return Err(SolveError::Range {
            node: node.id.clone(),
            index: i,
            depth: node.depth,
        });
    }
    let mut cur = v;
    let mut min = Contribution::Unbounded;
    for _ in 0..i {
        let n = tree.node(cur);
        min = min.min(n.link_bw);
        cur = n.parent.expect("depth counts existing ancestors");
    }
    Ok(min)
}

/// Contribution of a leaf bundle on its `i`-th ancestor. A bundle with no
/// requests contributes nothing anywhere.
pub fn leaf_contribution(leaf: &StarLeaf, i: usize, path_min_bw: Bound) -> Contribution {
    if leaf.weight == 0 {
        return Contribution::ZERO;
    }
    let in_range = u64::try_from(i).is_ok_and(|i| i <= leaf.qos);
    if in_range && path_min_bw.admits(leaf.weight) {
        Contribution::Finite(leaf.weight)
    } else {
        Contribution::Unbounded
    }
}

/// One child as seen by the greedy selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Candidate<K> {
    pub key: K,
    pub eligible: bool,
    pub value: Contribution,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Greedy<K> {
    /// Members sorted by key, and what the remaining children still send up.
    Chosen { members: Vec<K>, residual: Contribution },
    /// Every eligible child is equipped and the rest still exceeds the bound.
    Exhausted { members: Vec<K> },
}

impl<K> Greedy<K> {
    pub fn members(&self) -> &[K] {
        match self {
            Greedy::Chosen { members, .. } | Greedy::Exhausted { members } => members,
        }
    }
}

/// Equips eligible children, largest contribution first (ties to the
/// smaller key), until what the others send fits under `bound`.
pub fn greedy_e_set<K: Ord + Copy>(children: &[Candidate<K>], bound: Bound) -> Greedy<K> {
    let mut members = Vec::new();
    match greedy_into(children, bound, &mut Vec::new(), &mut members) {
        Some(residual) => Greedy::Chosen { members, residual },
        None => Greedy::Exhausted { members },
    }
}

/// [`greedy_e_set`] writing into caller buffers; `None` when exhausted.
fn greedy_into<K: Ord + Copy>(
    children: &[Candidate<K>],
    bound: Bound,
    order: &mut Vec<usize>,
    members: &mut Vec<K>,
) -> Option<Contribution> {
    members.clear();
    let mut load = Load::default();
    for c in children {
        load.push(c.value);
    }
    if !load.exceeds(bound) {
        return Some(load.total());
    }
    order.clear();
    order.extend((0..children.len()).filter(|&k| children[k].eligible));
    order.sort_by(|&a, &b| {
        let (a, b) = (&children[a], &children[b]);
        b.value.cmp(&a.value).then(a.key.cmp(&b.key))
    });
    for &k in order.iter() {
        load.pop(children[k].value);
        members.push(children[k].key);
        if !load.exceeds(bound) {
            members.sort();
            return Some(load.total());
        }
    }
    members.sort();
    None
}

/// `m(t(v))` from the children's counts and the size of `e(v,0)`.
pub fn compute_m(children_m: impl IntoIterator<Item = u64>, e0_len: usize) -> u64 {
    children_m.into_iter().sum::<u64>() + e0_len as u64
}

/// Fills every node table bottom-up.
pub fn run_phase1(tree: &StarTree, mode: Mode) -> Result<ContributionTable, SolveError> {
    let n = tree.len();
    let max_range = tree.max_range();
    let horizon = usize::try_from(max_range).unwrap_or(usize::MAX).saturating_add(1);
    let capacity = Contribution::Finite(tree.capacity());

    // Exact sizes would need another sweep over the tree. Generous
    // reservations cost nothing until touched and are trimmed at the end.
    let depth: Vec<usize> = tree.nodes().iter().map(|v| v.depth).collect();
    let rows = depth.iter().max().map_or(1, |&d| d.min(horizon) + 1);
    let mut table = ContributionTable {
        depth,
        c_span: vec![(0, 0); n],
        c_vals: Vec::with_capacity(n * rows),
        e_span: vec![(0, 0); n],
        e_bounds: Vec::with_capacity(n * (rows + 1)),
        e_items: Vec::with_capacity(n * rows),
        m: vec![None; n],
        max_range,
        mode,
    };
    let mut candidates: Vec<Candidate<usize>> = Vec::new();
    let mut order = Vec::new();
    let mut members = Vec::new();

    for ix in (0..n).rev() {
        let node = tree.node(ix);
        let len = node.depth.min(horizon) + 1;
        let c_start = table.c_vals.len();
        match &node.kind {
            StarKind::Leaf(leaf) => {
                let mut path = PathMin::new(tree, ix);
                for i in 0..len {
                    table.c_vals.push(leaf_contribution(leaf, i, path.next_bound()));
                }
            }
            StarKind::Internal | StarKind::ArtificialRoot => {
                let e_start = table.e_bounds.len();
                table.e_bounds.push(table.e_items.len());
                let mut path = PathMin::new(tree, ix);
                let mut e0_len = 0;
                for i in 0..len {
                    let bound = match mode {
                        Mode::PaperLiteral => capacity,
                        Mode::Aggregate => capacity.min(path.next_bound()),
                    };
                    candidates.clear();
                    for (pos, &child) in node.children.iter().enumerate() {
                        candidates.push(Candidate {
                            key: pos,
                            eligible: tree.node(child).eligible(),
                            value: table.c_at(child, i + 1),
                        });
                    }
                    let outcome = greedy_into(&candidates, bound, &mut order, &mut members);
                    let c = match outcome {
                        None if i == 0 => {
                            return Err(SolveError::Infeasible(Infeasibility::Exhausted {
                                node: node.id.clone(),
                            }));
                        }
                        None => Contribution::Unbounded,
                        Some(residual) if i == 0 => {
                            e0_len = members.len();
                            let m = compute_m(node.children.iter().filter_map(|&c| table.m[c]), e0_len);
                            table.m[ix] = Some(m);
                            residual
                        }
                        Some(residual) if members.len() == e0_len => residual,
                        Some(_) => Contribution::Unbounded,
                    };
                    table.c_vals.push(c);
                    table.e_items.extend(members.iter().map(|&pos| node.children[pos]));
                    table.e_bounds.push(table.e_items.len());
                }
                table.e_span[ix] = (e_start, len + 1);
            }
        }
        table.c_span[ix] = (c_start, len);
    }
    table.c_vals.shrink_to_fit();
    table.e_bounds.shrink_to_fit();
    table.e_items.shrink_to_fit();
    Ok(table)
}

/// Walks up from a node yielding the bandwidth bound for 0, 1, 2, ... hops.
struct PathMin<'a> {
    tree: &'a StarTree,
    cursor: Option<usize>,
    min: Bound,
    first: bool,
}

impl<'a> PathMin<'a> {
    fn new(tree: &'a StarTree, start: usize) -> Self {
        PathMin {
            tree,
            cursor: Some(start),
            min: Contribution::Unbounded,
            first: true,
        }
    }

    fn next_bound(&mut self) -> Bound {
        if std::mem::replace(&mut self.first, false) {
            return self.min;
        }
        let at = self.cursor.expect("walked past the root");
        let node = self.tree.node(at);
        self.min = self.min.min(node.link_bw);
        self.cursor = node.parent;
        self.min
    }
}

fn set_label(tree: &StarTree, members: &[usize]) -> String {
    if members.is_empty() {
        return "{}".to_owned();
    }
    let ids: Vec<&str> = members.iter().map(|&m| tree.id(m).as_str()).collect();
    format!("{{{}}}", ids.join(","))
}

fn render_grid(out: &mut String, header: &[String], rows: &[(String, Vec<String>)]) {
    let label_w = rows.iter().map(|r| r.0.len()).max().unwrap_or(0).max(1);
    let widths: Vec<usize> = (0..header.len())
        .map(|c| {
            rows.iter()
                .map(|r| r.1[c].len())
                .chain(std::iter::once(header[c].len()))
                .max()
                .unwrap_or(1)
        })
        .collect();
    let _ = write!(out, "{:label_w$}", "");
    for (h, w) in header.iter().zip(&widths) {
        let _ = write!(out, " | {h:>w$}");
    }
    out.push('\n');
    for (label, cells) in rows {
        let _ = write!(out, "{label:label_w$}");
        for (cell, w) in cells.iter().zip(&widths) {
            let _ = write!(out, " | {cell:>w$}");
        }
        out.push('\n');
    }
}

/// Plain-text rendering: leaf contributions first, then the internal node
/// table grouped by level from the deepest up. `inf` stands for unbounded.
pub fn render_tables(tree: &StarTree, table: &ContributionTable) -> String {
    let order = tree.preorder();
    let leaves: Vec<usize> = order.iter().copied().filter(|&ix| tree.node(ix).leaf().is_some()).collect();
    let mut internals: Vec<usize> =
        order.iter().copied().filter(|&ix| tree.node(ix).leaf().is_none()).collect();
    internals.sort_by_key(|&ix| std::cmp::Reverse(tree.node(ix).depth));

    let mut out = String::new();
    let header: Vec<String> = leaves.iter().map(|&ix| tree.id(ix).to_string()).collect();
    let deepest = leaves.iter().map(|&ix| tree.node(ix).depth).max().unwrap_or(0);
    let rows: Vec<(String, Vec<String>)> = (0..=deepest)
        .map(|i| {
            let cells = leaves
                .iter()
                .map(|&ix| {
                    let t = table.node(ix);
                    if i <= t.depth {
                        t.c(i).to_string()
                    } else {
                        String::new()
                    }
                })
                .collect();
            (format!("C(v,{i})"), cells)
        })
        .collect();
    render_grid(&mut out, &header, &rows);
    out.push('\n');

    let header: Vec<String> = internals.iter().map(|&ix| tree.id(ix).to_string()).collect();
    let deepest = internals.iter().map(|&ix| tree.node(ix).depth).max().unwrap_or(0);
    let cell = |ix: usize, i: usize, f: &dyn Fn(&NodeTable) -> String| {
        let t = table.node(ix);
        if i <= t.depth {
            f(&t)
        } else {
            String::new()
        }
    };
    let mut rows = Vec::new();
    for i in 0..=deepest {
        rows.push((
            format!("e(v,{i})"),
            internals.iter().map(|&ix| cell(ix, i, &|t| set_label(tree, t.e(i)))).collect(),
        ));
        if i == 0 {
            rows.push((
                "m(t(v))".to_owned(),
                internals.iter().map(|&ix| table.node(ix).m().unwrap_or(0).to_string()).collect(),
            ));
        }
        rows.push((
            format!("C(v,{i})"),
            internals.iter().map(|&ix| cell(ix, i, &|t| t.c(i).to_string())).collect(),
        ));
    }
    render_grid(&mut out, &header, &rows);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::{transform_to_star, Origin};
    use crate::{NetworkInstance, NodeSpec};

    const INF: Contribution = Contribution::Unbounded;

    fn f(v: u64) -> Contribution {
        Contribution::Finite(v)
    }

    fn cand(key: &'static str, eligible: bool, value: Contribution) -> Candidate<&'static str> {
        Candidate { key, eligible, value }
    }

    fn leaf(weight: u64, qos: u64) -> StarLeaf {
        StarLeaf {
            weight,
            qos,
            eligible: true,
            origin: Origin::Internal,
            clients: Vec::new(),
        }
    }

    #[test]
    fn greedy_removes_the_largest() {
        let g = greedy_e_set(&[cand("o", true, f(4)), cand("p", true, f(12))], f(15));
        assert_eq!(g, Greedy::Chosen { members: vec!["p"], residual: f(4) });

        let g = greedy_e_set(&[cand("l", true, f(3))], f(15));
        assert_eq!(g, Greedy::Chosen { members: vec![], residual: f(3) });

        let g = greedy_e_set(
            &[cand("x", false, f(3)), cand("g", true, INF), cand("h", true, f(8)), cand("i", true, INF)],
            f(15),
        );
        assert_eq!(g, Greedy::Chosen { members: vec!["g", "i"], residual: f(11) });

        let g = greedy_e_set(&[cand("x", false, f(20))], f(15));
        assert_eq!(g, Greedy::Exhausted { members: vec![] });
    }

    #[test]
    fn greedy_ties_prefer_smaller_key() {
        let g = greedy_e_set(&[cand("b", true, f(9)), cand("a", true, f(9))], f(10));
        assert_eq!(g, Greedy::Chosen { members: vec!["a"], residual: f(9) });
    }

    #[test]
    fn leaf_formula() {
        let l = leaf(3, 2);
        let row: Vec<_> = (0..5).map(|i| leaf_contribution(&l, i, f(4))).collect();
        assert_eq!(row, vec![f(3), f(3), f(3), INF, INF]);
        assert_eq!(leaf_contribution(&leaf(7, 3), 1, f(6)), INF);
        assert_eq!(leaf_contribution(&leaf(5, 1), 1, f(5)), f(5));
        for i in 0..4 {
            assert_eq!(leaf_contribution(&leaf(0, 1), i, f(0)), f(0));
        }
    }

    #[test]
    fn compute_m_adds_children() {
        assert_eq!(compute_m([0, 0], 1), 1);
        assert_eq!(compute_m([0, 0, 0, 0], 2), 2);
        assert_eq!(compute_m([6], 1), 7);
    }

    fn chain(bws: &[u64]) -> NetworkInstance {
        // r -(bws[0])- n1 -(bws[1])- n2 ... with a client on the last node
        let mut nodes = vec![NodeSpec::internal("n0", None, None)];
        for (k, &bw) in bws.iter().enumerate() {
            let id = format!("n{}", k + 1);
            let parent = format!("n{k}");
            nodes.push(NodeSpec::internal(&id, Some(&parent), Some(bw)));
        }
        let last = format!("n{}", bws.len());
        nodes.push(NodeSpec::client("z", &last, 100, 1, 10));
        NetworkInstance { capacity: 10, nodes }
    }

    #[test]
    fn path_minimum() {
        let star = transform_to_star(&chain(&[2, 7, 4])).unwrap();
        let v = star.lookup(&"n3".into()).unwrap();
        assert_eq!(min_bw_on_path(&star, v, 0).unwrap(), INF);
        assert_eq!(min_bw_on_path(&star, v, 1).unwrap(), f(4));
        assert_eq!(min_bw_on_path(&star, v, 3).unwrap(), f(2));
        // the fourth hop crosses the zero link above the root
        assert_eq!(min_bw_on_path(&star, v, 4).unwrap(), f(0));
        assert!(matches!(min_bw_on_path(&star, v, 5), Err(SolveError::Range { .. })));
    }

    #[test]
    fn single_leaf_under_root_plus() {
        let inst = NetworkInstance {
            capacity: 10,
            nodes: vec![NodeSpec::internal("r", None, None), NodeSpec::client("c", "r", 5, 2, 1)],
        };
        let star = transform_to_star(&inst).unwrap();
        let table = run_phase1(&star, Mode::PaperLiteral).unwrap();
        assert_eq!(table.optimum(), 1);
        assert_eq!(table.node(0).e(0), &[1]);
        assert_eq!(table.node(0).c(0), f(0));
        assert_eq!(table.node(1).c(1), INF);
    }

    #[test]
    fn clipped_rows_read_their_tail() {
        let mut inst = chain(&[20, 20, 20, 20, 20, 20, 20, 20]);
        inst.nodes.last_mut().unwrap().qos = Some(2);
        let star = transform_to_star(&inst).unwrap();
        let table = run_phase1(&star, Mode::PaperLiteral).unwrap();
        assert_eq!(table.max_range(), 1);
        let n8 = table.by_id(&star, &"n8".into()).unwrap();
        assert_eq!(n8.depth, 9);
        assert_eq!(n8.stored_len(), 3);
        let row: Vec<_> = (0..=9).map(|i| n8.c(i)).collect();
        assert_eq!(&row[..3], &[f(1), f(1), INF]);
        assert!(row[3..].iter().all(|&c| c == INF));
        let n7 = table.by_id(&star, &"n7".into()).unwrap();
        assert_eq!(n7.c(0), f(1));
        assert_eq!(n7.c(7), INF);
        assert_eq!(table.optimum(), 1);
    }

    #[test]
    fn aggregate_bounds_residual_by_links() {
        // two bundles of 6 crossing a shared link of 10
        let inst = NetworkInstance {
            capacity: 15,
            nodes: vec![
                NodeSpec::internal("r", None, None),
                NodeSpec::internal("u", Some("r"), Some(10)),
                NodeSpec::internal("p1", Some("u"), Some(6)),
                NodeSpec::internal("p2", Some("u"), Some(6)),
                NodeSpec::client("c1", "p1", 6, 6, 3),
                NodeSpec::client("c2", "p2", 6, 6, 3),
            ],
        };
        let star = transform_to_star(&inst).unwrap();
        let literal = run_phase1(&star, Mode::PaperLiteral).unwrap();
        let u = star.lookup(&"u".into()).unwrap();
        assert_eq!(literal.node(u).c(1), f(12));
        let aggregate = run_phase1(&star, Mode::Aggregate).unwrap();
        assert_eq!(aggregate.node(u).c(1), INF);
        assert_eq!(literal.optimum(), 1);
        assert_eq!(aggregate.optimum(), 1);
    }

    #[test]
    fn bundle_and_unreachable_leaf() {
        // r keeps a compressed bundle {b, c}; u folds a qos-1 client so it can
        // only be served at u itself
        let inst = NetworkInstance {
            capacity: 10,
            nodes: vec![
                NodeSpec::internal("r", None, None),
                NodeSpec::internal("u", Some("r"), Some(5)),
                NodeSpec::client("a", "u", 5, 1, 1),
                NodeSpec::client("b", "r", 5, 4, 1),
                NodeSpec::client("c", "r", 5, 4, 1),
                NodeSpec::client("d", "u", 5, 1, 1),
            ],
        };
        let star = transform_to_star(&inst).unwrap();
        let table = run_phase1(&star, Mode::PaperLiteral).unwrap();
        let r = table.by_id(&star, &"r".into()).unwrap();
        assert_eq!(r.e(0), &[star.lookup(&"u".into()).unwrap()]);
        assert_eq!(r.c(0), f(8));
        assert_eq!(r.c(1), INF);
        assert_eq!(table.optimum(), 2);
    }
}
