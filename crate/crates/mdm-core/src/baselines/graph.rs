//! Per-relation graph features.
//!
//! Every relation type induces a directed multigraph over the users that
//! touched it. Eight statistics per user and relation:
//!
//! | column     | meaning                                                  |
//! |------------|----------------------------------------------------------|
//! | `in_deg`   | incoming edge count, multiplicity-weighted               |
//! | `out_deg`  | outgoing edge count, multiplicity-weighted               |
//! | `tri`      | triangles through the node (simple undirected view)      |
//! | `core`     | core number from degree peeling (simple undirected view) |
//! | `color`    | color under greedy largest-degree-first coloring         |
//! | `pagerank` | multiplicity-weighted PageRank, damping 0.85             |
//! | `wcc_id`   | smallest user id in the node's weak component            |
//! | `wcc_size` | size of that component                                   |
//!
//! Conventions: self-loops count toward degrees and PageRank but are
//! invisible to the simple undirected view; a user absent from a relation's
//! graph gets all-zero features for it. The [`slow`] module re-derives each
//! statistic with a deliberately naive algorithm for cross-checking.

use crate::ingest::{Event, UserId};
use crate::{Error, Result};
use std::collections::{BTreeMap, BTreeSet};

pub const FEATURES_PER_RELATION: usize = 8;
pub const FEATURE_NAMES: [&str; FEATURES_PER_RELATION] =
    ["in_deg", "out_deg", "tri", "core", "color", "pagerank", "wcc_id", "wcc_size"];

pub const PAGERANK_DAMPING: f64 = 0.85;
pub const PAGERANK_TOL: f64 = 1e-8;
pub const PAGERANK_MAX_ITER: usize = 200;

/// Directed multigraph over user ids.
#[derive(Clone, Debug, Default)]
pub struct RelationGraph {
    ids: Vec<UserId>,
    index: BTreeMap<UserId, usize>,
    /// `(src, dst) -> multiplicity` over node indices.
    edges: BTreeMap<(usize, usize), usize>,
}

impl RelationGraph {
    pub fn from_pairs(pairs: &[(UserId, UserId)]) -> Self {
        let mut id_set = BTreeSet::new();
        for &(s, d) in pairs {
            id_set.insert(s);
            id_set.insert(d);
        }
        let ids: Vec<UserId> = id_set.into_iter().collect();
        let index: BTreeMap<UserId, usize> =
            ids.iter().enumerate().map(|(i, &u)| (u, i)).collect();
        let mut edges: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for &(s, d) in pairs {
            *edges.entry((index[&s], index[&d])).or_insert(0) += 1;
        }
        RelationGraph { ids, index, edges }
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn node_ids(&self) -> &[UserId] {
        &self.ids
    }

    pub fn multiplicity(&self, src: UserId, dst: UserId) -> usize {
        match (self.index.get(&src), self.index.get(&dst)) {
            (Some(&s), Some(&d)) => self.edges.get(&(s, d)).copied().unwrap_or(0),
            _ => 0,
        }
    }

    /// Undirected adjacency sets without self-loops.
    fn simple_neighbors(&self) -> Vec<BTreeSet<usize>> {
        let mut nbrs = vec![BTreeSet::new(); self.ids.len()];
        for &(s, d) in self.edges.keys() {
            if s != d {
                nbrs[s].insert(d);
                nbrs[d].insert(s);
            }
        }
        nbrs
    }

    pub fn in_out_degrees(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.ids.len();
        let mut din = vec![0.0; n];
        let mut dout = vec![0.0; n];
        for (&(s, d), &m) in &self.edges {
            dout[s] += m as f64;
            din[d] += m as f64;
        }
        (din, dout)
    }

    pub fn triangle_counts(&self) -> Vec<f64> {
        let nbrs = self.simple_neighbors();
        let mut tri = vec![0.0; self.ids.len()];
        for (i, ni) in nbrs.iter().enumerate() {
            let around: Vec<usize> = ni.iter().copied().collect();
            let mut count = 0usize;
            for (a, &j) in around.iter().enumerate() {
                for &k in &around[a + 1..] {
                    if nbrs[j].contains(&k) {
                        count += 1;
                    }
                }
            }
            tri[i] = count as f64;
        }
        tri
    }

    /// Core numbers by peeling: repeatedly remove a minimum-degree node; a
    /// node's core is the largest minimum degree seen up to its removal.
    pub fn core_numbers(&self) -> Vec<f64> {
        let nbrs = self.simple_neighbors();
        let n = self.ids.len();
        let mut degree: Vec<usize> = nbrs.iter().map(|s| s.len()).collect();
        let mut alive = vec![true; n];
        let mut core = vec![0.0; n];
        let mut level = 0usize;
        for _ in 0..n {
            let mut pick = None;
            for i in 0..n {
                if alive[i] && pick.map_or(true, |p: usize| degree[i] < degree[p]) {
                    pick = Some(i);
                }
            }
            let i = pick.expect("one node per round");
            level = level.max(degree[i]);
            core[i] = level as f64;
            alive[i] = false;
            for &j in &nbrs[i] {
                if alive[j] {
                    degree[j] -= 1;
                }
            }
        }
        core
    }

    /// Greedy coloring, visiting nodes by descending simple degree (user id
    /// breaks ties), assigning the smallest color unused by colored
    /// neighbors. Deterministic by construction.
    pub fn greedy_colors(&self) -> Vec<f64> {
        let nbrs = self.simple_neighbors();
        let n = self.ids.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| (std::cmp::Reverse(nbrs[i].len()), self.ids[i]));
        let mut color = vec![usize::MAX; n];
        for &i in &order {
            let taken: BTreeSet<usize> =
                nbrs[i].iter().filter_map(|&j| (color[j] != usize::MAX).then_some(color[j])).collect();
            color[i] = (0..).find(|c| !taken.contains(c)).unwrap();
        }
        color.into_iter().map(|c| c as f64).collect()
    }

    /// Multiplicity-weighted PageRank with uniform dangling redistribution.
    pub fn pagerank(&self, damping: f64, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
        if !(0.0..1.0).contains(&damping) || !(tol > 0.0) {
            return Err(Error::invalid("pagerank: damping must be in [0,1), tol positive"));
        }
        let n = self.ids.len();
        if n == 0 {
            return Ok(Vec::new());
        }
        let mut out_weight = vec![0.0; n];
        for (&(s, _), &m) in &self.edges {
            out_weight[s] += m as f64;
        }
        let uniform = 1.0 / n as f64;
        let mut pr = vec![uniform; n];
        for _ in 0..max_iter {
            let dangling: f64 =
                (0..n).filter(|&i| out_weight[i] == 0.0).map(|i| pr[i]).sum();
            let base = (1.0 - damping) * uniform + damping * dangling * uniform;
            let mut next = vec![base; n];
            for (&(s, d), &m) in &self.edges {
                next[d] += damping * pr[s] * m as f64 / out_weight[s];
            }
            let shift: f64 = pr.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
            pr = next;
            if shift < tol {
                break;
            }
        }
        Ok(pr)
    }

    /// Weak components by union-find: per node, the smallest user id in its
    /// component and the component size.
    pub fn weak_components(&self) -> (Vec<UserId>, Vec<f64>) {
        let n = self.ids.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut Vec<usize>, mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        for &(s, d) in self.edges.keys() {
            let (rs, rd) = (find(&mut parent, s), find(&mut parent, d));
            if rs != rd {
                parent[rs.max(rd)] = rs.min(rd);
            }
        }
        let mut min_id: BTreeMap<usize, UserId> = BTreeMap::new();
        let mut size: BTreeMap<usize, usize> = BTreeMap::new();
        for i in 0..n {
            let r = find(&mut parent, i);
            let entry = min_id.entry(r).or_insert(self.ids[i]);
            *entry = (*entry).min(self.ids[i]);
            *size.entry(r).or_insert(0) += 1;
        }
        let mut ids_out = Vec::with_capacity(n);
        let mut sizes_out = Vec::with_capacity(n);
        for i in 0..n {
            let r = find(&mut parent, i);
            ids_out.push(min_id[&r]);
            sizes_out.push(size[&r] as f64);
        }
        (ids_out, sizes_out)
    }

    /// All eight features per node, in [`FEATURE_NAMES`] order.
    pub fn features(&self) -> Result<BTreeMap<UserId, [f64; FEATURES_PER_RELATION]>> {
        let (din, dout) = self.in_out_degrees();
        let tri = self.triangle_counts();
        let core = self.core_numbers();
        let color = self.greedy_colors();
        let pr = self.pagerank(PAGERANK_DAMPING, PAGERANK_TOL, PAGERANK_MAX_ITER)?;
        let (wcc_id, wcc_size) = self.weak_components();
        let mut out = BTreeMap::new();
        for (i, &u) in self.ids.iter().enumerate() {
            out.insert(
                u,
                [din[i], dout[i], tri[i], core[i], color[i], pr[i], wcc_id[i] as f64, wcc_size[i]],
            );
        }
        Ok(out)
    }
}

/// One graph per relation id (slot `m - 1`).
pub fn relation_graphs(events: &[Event], relation_count: usize) -> Result<Vec<RelationGraph>> {
    let mut pairs: Vec<Vec<(UserId, UserId)>> = vec![Vec::new(); relation_count];
    for ev in events {
        if ev.relation < 1 || ev.relation > relation_count {
            return Err(Error::invalid(format!(
                "relation graphs: relation id {} outside 1..={relation_count}",
                ev.relation
            )));
        }
        pairs[ev.relation - 1].push((ev.src, ev.dst));
    }
    Ok(pairs.iter().map(|p| RelationGraph::from_pairs(p)).collect())
}

/// Reference implementations, deliberately naive (dense matrices, triple
/// loops, stripping rounds). The fast paths must agree with these exactly.
pub mod slow {
    use super::*;

    fn undirected_adj(g: &RelationGraph) -> Vec<Vec<bool>> {
        let n = g.node_count();
        let mut adj = vec![vec![false; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i != j
                    && (g.multiplicity(g.node_ids()[i], g.node_ids()[j]) > 0
                        || g.multiplicity(g.node_ids()[j], g.node_ids()[i]) > 0)
                {
                    adj[i][j] = true;
                }
            }
        }
        adj
    }

    pub fn triangles(g: &RelationGraph) -> Vec<f64> {
        let adj = undirected_adj(g);
        let n = g.node_count();
        let mut tri = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                for k in (j + 1)..n {
                    if adj[i][j] && adj[i][k] && adj[j][k] {
                        tri[i] += 1.0;
                    }
                }
            }
        }
        tri
    }

    /// Core numbers by direct definition: a node has core at least `k` when
    /// it survives repeatedly stripping every node of degree below `k`.
    pub fn core_numbers(g: &RelationGraph) -> Vec<f64> {
        let adj = undirected_adj(g);
        let n = g.node_count();
        let mut core = vec![0.0; n];
        for k in 1..=n {
            let mut alive = vec![true; n];
            loop {
                let mut removed = false;
                for i in 0..n {
                    if !alive[i] {
                        continue;
                    }
                    let deg = (0..n).filter(|&j| alive[j] && adj[i][j]).count();
                    if deg < k {
                        alive[i] = false;
                        removed = true;
                    }
                }
                if !removed {
                    break;
                }
            }
            for i in 0..n {
                if alive[i] {
                    core[i] = k as f64;
                }
            }
        }
        core
    }

    /// The same greedy rule as the fast path, recomputed over the raw edge
    /// map instead of adjacency sets.
    pub fn greedy_colors(g: &RelationGraph) -> Vec<f64> {
        let n = g.node_count();
        let adj = undirected_adj(g);
        let degree = |i: usize| (0..n).filter(|&j| adj[i][j]).count();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| (std::cmp::Reverse(degree(i)), g.node_ids()[i]));
        let mut color: Vec<Option<usize>> = vec![None; n];
        for &i in &order {
            let mut c = 0usize;
            loop {
                if (0..n).any(|j| adj[i][j] && color[j] == Some(c)) {
                    c += 1;
                } else {
                    break;
                }
            }
            color[i] = Some(c);
        }
        color.into_iter().map(|c| c.unwrap() as f64).collect()
    }

    /// Power iteration on the explicitly built dense transition matrix,
    /// dangling rows replaced by the uniform distribution.
    pub fn pagerank(g: &RelationGraph, damping: f64, tol: f64, max_iter: usize) -> Vec<f64> {
        let n = g.node_count();
        if n == 0 {
            return Vec::new();
        }
        let ids = g.node_ids();
        let mut t = vec![vec![0.0; n]; n];
        for i in 0..n {
            let total: f64 =
                (0..n).map(|j| g.multiplicity(ids[i], ids[j]) as f64).sum();
            for j in 0..n {
                t[i][j] = if total > 0.0 {
                    g.multiplicity(ids[i], ids[j]) as f64 / total
                } else {
                    1.0 / n as f64
                };
            }
        }
        let mut pr = vec![1.0 / n as f64; n];
        for _ in 0..max_iter {
            let mut next = vec![(1.0 - damping) / n as f64; n];
            for j in 0..n {
                for i in 0..n {
                    next[j] += damping * pr[i] * t[i][j];
                }
            }
            let shift: f64 = pr.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
            pr = next;
            if shift < tol {
                break;
            }
        }
        pr
    }

    /// Weak components by breadth-first search.
    pub fn weak_components(g: &RelationGraph) -> (Vec<UserId>, Vec<f64>) {
        let adj = undirected_adj(g);
        let n = g.node_count();
        let mut comp = vec![usize::MAX; n];
        let mut count = 0usize;
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            let mut queue = vec![start];
            comp[start] = count;
            while let Some(i) = queue.pop() {
                for j in 0..n {
                    if adj[i][j] && comp[j] == usize::MAX {
                        comp[j] = count;
                        queue.push(j);
                    }
                }
            }
            count += 1;
        }
        let mut min_id = vec![UserId::MAX; count];
        let mut size = vec![0usize; count];
        for i in 0..n {
            min_id[comp[i]] = min_id[comp[i]].min(g.node_ids()[i]);
            size[comp[i]] += 1;
        }
        (
            (0..n).map(|i| min_id[comp[i]]).collect(),
            (0..n).map(|i| size[comp[i]] as f64).collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn k3() -> RelationGraph {
        RelationGraph::from_pairs(&[(1, 2), (2, 3), (3, 1)])
    }

    #[test]
    fn triangle_cycle_has_the_expected_profile() {
        let g = k3();
        let f = g.features().unwrap();
        for u in 1..=3u64 {
            let row = f[&u];
            assert_eq!(row[0], 1.0, "in degree");
            assert_eq!(row[1], 1.0, "out degree");
            assert_eq!(row[2], 1.0, "triangles");
            assert_eq!(row[3], 2.0, "core");
            assert!((row[5] - 1.0 / 3.0).abs() < 1e-7, "symmetric pagerank");
            assert_eq!(row[6], 1.0, "component id");
            assert_eq!(row[7], 3.0, "component size");
        }
        // K3 needs three distinct colors
        let colors: BTreeSet<u64> = (1..=3).map(|u| f[&u][4] as u64).collect();
        assert_eq!(colors.len(), 3);
    }

    #[test]
    fn complete_four_clique() {
        let mut pairs = Vec::new();
        for a in 1..=4u64 {
            for b in 1..=4u64 {
                if a != b {
                    pairs.push((a, b));
                }
            }
        }
        let g = RelationGraph::from_pairs(&pairs);
        let f = g.features().unwrap();
        for u in 1..=4u64 {
            assert_eq!(f[&u][2], 3.0, "triangles through a K4 node");
            assert_eq!(f[&u][3], 3.0, "K4 core");
            assert!((f[&u][5] - 0.25).abs() < 1e-7);
        }
        let colors: BTreeSet<u64> = (1..=4).map(|u| f[&u][4] as u64).collect();
        assert_eq!(colors.len(), 4);
    }

    #[test]
    fn path_and_star_are_degenerate() {
        let path = RelationGraph::from_pairs(&[(1, 2), (2, 3)]);
        let f = path.features().unwrap();
        assert_eq!(f[&2][0], 1.0);
        assert_eq!(f[&2][1], 1.0);
        assert!(f.values().all(|r| r[2] == 0.0), "no triangles on a path");
        assert!(f.values().all(|r| r[3] == 1.0), "path core is 1");
        assert!(f.values().all(|r| r[4] <= 1.0), "two colors suffice");

        let star = RelationGraph::from_pairs(&[(1, 2), (1, 3), (1, 4)]);
        let sf = star.features().unwrap();
        assert!(sf.values().all(|r| r[3] == 1.0), "star core is 1");
        assert_eq!(sf[&1][4], 0.0, "hub is colored first");
    }

    #[test]
    fn disjoint_edges_split_components() {
        let g = RelationGraph::from_pairs(&[(1, 2), (3, 4)]);
        let f = g.features().unwrap();
        assert_eq!(f[&1][6], 1.0);
        assert_eq!(f[&2][6], 1.0);
        assert_eq!(f[&3][6], 3.0);
        assert_eq!(f[&4][6], 3.0);
        assert!(f.values().all(|r| r[7] == 2.0));
    }

    #[test]
    fn multiplicity_weights_degrees_but_not_the_simple_view() {
        let g = RelationGraph::from_pairs(&[(1, 2), (1, 2), (2, 1)]);
        let f = g.features().unwrap();
        assert_eq!(f[&1][1], 2.0, "two parallel out edges");
        assert_eq!(f[&1][0], 1.0);
        assert_eq!(f[&1][2], 0.0, "still no triangle");
        assert!((f[&1][5] - 0.5).abs() < 1e-7, "two-cycle pagerank is uniform");
    }

    #[test]
    fn self_loops_count_for_degrees_only() {
        let g = RelationGraph::from_pairs(&[(1, 1), (1, 2)]);
        let f = g.features().unwrap();
        assert_eq!(f[&1][1], 2.0, "loop adds an out edge");
        assert_eq!(f[&1][0], 1.0, "loop adds an in edge");
        assert_eq!(f[&1][2], 0.0);
        assert_eq!(f[&1][3], 1.0, "core ignores the loop");
    }

    #[test]
    fn dangling_node_pagerank_closed_form() {
        // 1 -> 2 with 2 dangling: p1 = (1-d)/2 + d*p2/2, p2 = 1 - p1
        let g = RelationGraph::from_pairs(&[(1, 2)]);
        let pr = g.pagerank(0.85, 1e-12, 500).unwrap();
        let p1 = 0.5 / 1.425;
        assert!((pr[0] - p1).abs() < 1e-9);
        assert!((pr[1] - (1.0 - p1)).abs() < 1e-9);
    }

    #[test]
    fn empty_graph_yields_no_features() {
        let g = RelationGraph::from_pairs(&[]);
        assert_eq!(g.node_count(), 0);
        assert!(g.features().unwrap().is_empty());
        assert!(g.pagerank(0.85, 1e-8, 100).unwrap().is_empty());
    }

    #[test]
    fn events_split_into_one_graph_per_relation() {
        let events = vec![
            Event { timestamp: 1, src: 1, dst: 2, relation: 1 },
            Event { timestamp: 2, src: 2, dst: 3, relation: 1 },
            Event { timestamp: 3, src: 7, dst: 8, relation: 5 },
        ];
        let graphs = relation_graphs(&events, 7).unwrap();
        assert_eq!(graphs.len(), 7);
        assert_eq!(graphs[0].node_count(), 3);
        assert_eq!(graphs[4].node_count(), 2);
        assert_eq!(graphs[1].node_count(), 0);
        let bad = vec![Event { timestamp: 1, src: 1, dst: 2, relation: 9 }];
        assert!(relation_graphs(&bad, 7).is_err());
    }

    fn random_graph(rng: &mut ChaCha8Rng, max_nodes: usize) -> RelationGraph {
        let n = rng.gen_range(0..=max_nodes);
        let edges = if n == 0 { 0 } else { rng.gen_range(0..=(3 * n)) };
        let pairs: Vec<(UserId, UserId)> = (0..edges)
            .map(|_| {
                (rng.gen_range(0..n as u64 * 3), rng.gen_range(0..n as u64 * 3))
            })
            .collect();
        RelationGraph::from_pairs(&pairs)
    }

    #[test]
    fn fast_paths_agree_with_naive_reference_on_random_graphs() {
        let mut rng = ChaCha8Rng::seed_from_u64(404);
        for round in 0..25 {
            let g = random_graph(&mut rng, 10);
            assert_eq!(g.triangle_counts(), slow::triangles(&g), "round {round}");
            assert_eq!(g.core_numbers(), slow::core_numbers(&g), "round {round}");
            assert_eq!(g.greedy_colors(), slow::greedy_colors(&g), "round {round}");
            let fast = g.pagerank(0.85, 1e-10, 500).unwrap();
            let naive = slow::pagerank(&g, 0.85, 1e-10, 500);
            for (a, b) in fast.iter().zip(&naive) {
                assert!((a - b).abs() < 1e-7, "round {round}: {a} vs {b}");
            }
            let (fid, fsz) = g.weak_components();
            let (sid, ssz) = slow::weak_components(&g);
            assert_eq!(fid, sid, "round {round}");
            assert_eq!(fsz, ssz, "round {round}");
        }
    }

    #[test]
    fn core_is_monotone_under_edge_addition() {
        let base = vec![(1u64, 2u64), (2, 3), (3, 4), (4, 1)];
        let g1 = RelationGraph::from_pairs(&base);
        let mut denser = base.clone();
        denser.extend_from_slice(&[(1, 3), (2, 4)]);
        let g2 = RelationGraph::from_pairs(&denser);
        let c1 = g1.core_numbers();
        let c2 = g2.core_numbers();
        for (a, b) in c1.iter().zip(&c2) {
            assert!(b >= a);
        }
        assert!(c2.iter().all(|&c| c == 3.0), "4-cycle plus diagonals is K4");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn pagerank_is_a_distribution(
            pairs in proptest::collection::vec((0u64..12, 0u64..12), 1..40),
        ) {
            let g = RelationGraph::from_pairs(&pairs);
            let pr = g.pagerank(0.85, 1e-10, 500).unwrap();
            let total: f64 = pr.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-8);
            prop_assert!(pr.iter().all(|&p| p > 0.0));
        }

        #[test]
        fn greedy_coloring_is_proper(
            pairs in proptest::collection::vec((0u64..10, 0u64..10), 1..30),
        ) {
            let g = RelationGraph::from_pairs(&pairs);
            let colors = g.greedy_colors();
            let ids = g.node_ids();
            for i in 0..g.node_count() {
                for j in 0..g.node_count() {
                    if i != j
                        && (g.multiplicity(ids[i], ids[j]) > 0
                            || g.multiplicity(ids[j], ids[i]) > 0)
                    {
                        prop_assert_ne!(colors[i], colors[j]);
                    }
                }
            }
        }

        #[test]
        fn shifting_user_ids_shifts_nothing_structural(
            pairs in proptest::collection::vec((0u64..8, 0u64..8), 1..20),
            offset in 1u64..1000,
        ) {
            let g = RelationGraph::from_pairs(&pairs);
            let moved: Vec<(UserId, UserId)> =
                pairs.iter().map(|&(s, d)| (s + offset, d + offset)).collect();
            let h = RelationGraph::from_pairs(&moved);
            prop_assert_eq!(g.triangle_counts(), h.triangle_counts());
            prop_assert_eq!(g.core_numbers(), h.core_numbers());
            prop_assert_eq!(g.greedy_colors(), h.greedy_colors());
            let (gid, gsz) = g.weak_components();
            let (hid, hsz) = h.weak_components();
            prop_assert_eq!(gsz, hsz);
            let shifted: Vec<UserId> = gid.iter().map(|&u| u + offset).collect();
            prop_assert_eq!(shifted, hid);
        }
    }
}
