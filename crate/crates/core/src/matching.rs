//! Step 3: complete the residual graph's matching and fuse it with the
//! partial 2-matching.

use std::collections::{BinaryHeap, VecDeque};
use std::cmp::Reverse;

use serde::Serialize;
use thiserror::Error;

use crate::graph::{EdgeId, Graph, Vertex, NONE};
use crate::greedy::GreedyOutcome;

/// The residual graph `Γ` on compact ids. Local edge order follows the
/// original edge order.
#[derive(Clone, Debug)]
pub struct ResidualGraph {
    pub graph: Graph,
    /// Local vertex → original vertex.
    pub vertex: Vec<Vertex>,
    /// Local edge → original edge.
    pub edge: Vec<EdgeId>,
}

impl ResidualGraph {
    pub fn from_outcome(g: &Graph, out: &GreedyOutcome) -> Self {
        let vertex = out.residual_vertices();
        let mut local = vec![NONE; g.n()];
        for (i, &v) in vertex.iter().enumerate() {
            local[v as usize] = i as Vertex;
        }
        let edge = out.residual_edges();
        let pairs = edge
            .iter()
            .map(|&e| {
                let [u, v] = g.edge(e);
                [local[u as usize], local[v as usize]]
            })
            .collect();
        let graph = Graph::from_edges(vertex.len(), pairs).expect("subgraph of a simple graph");
        ResidualGraph {
            graph,
            vertex,
            edge,
        }
    }

    /// Degree histogram of the residual graph.
    pub fn degree_histogram(&self) -> Vec<usize> {
        let mut h = vec![0usize; self.graph.max_degree() + 1];
        for v in 0..self.graph.n() as Vertex {
            h[self.graph.degree(v)] += 1;
        }
        h
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matching {
    pub mate: Vec<Vertex>,
    /// Edge joining `v` to its mate, `NONE` if exposed.
    pub mate_edge: Vec<EdgeId>,
}

impl Matching {
    pub fn empty(n: usize) -> Self {
        Matching {
            mate: vec![NONE; n],
            mate_edge: vec![NONE; n],
        }
    }

    pub fn size(&self) -> usize {
        self.mate.iter().filter(|&&m| m != NONE).count() / 2
    }

    pub fn exposed(&self) -> Vec<Vertex> {
        (0..self.mate.len() as Vertex)
            .filter(|&v| self.mate[v as usize] == NONE)
            .collect()
    }

    /// Matched edges, ascending.
    pub fn edges(&self) -> Vec<EdgeId> {
        let mut es: Vec<EdgeId> = (0..self.mate.len())
            .filter(|&v| self.mate[v] != NONE && (v as Vertex) < self.mate[v])
            .map(|v| self.mate_edge[v])
            .collect();
        es.sort_unstable();
        es
    }

    fn join(&mut self, g: &Graph, u: Vertex, v: Vertex) {
        let e = g.find_edge(u, v).expect("matched pair is an edge");
        self.mate[u as usize] = v;
        self.mate[v as usize] = u;
        self.mate_edge[u as usize] = e;
        self.mate_edge[v as usize] = e;
    }

    /// Checks that `mate` is an involution along graph edges.
    pub fn is_valid(&self, g: &Graph) -> bool {
        (0..self.mate.len()).all(|v| {
            let m = self.mate[v];
            m == NONE
                || (self.mate[m as usize] == v as Vertex
                    && g.find_edge(v as Vertex, m) == Some(self.mate_edge[v]))
        })
    }
}

/// Karp-Sipser: match a pendant vertex if any (least pendant edge first),
/// else the first edge in order with both ends free.
pub fn karp_sipser(g: &Graph) -> Matching {
    let n = g.n();
    let mut m = Matching::empty(n);
    let mut deg: Vec<u32> = (0..n as Vertex).map(|v| g.degree(v) as u32).collect();
    let mut cursor = vec![0u32; n];
    let mut pendants: BinaryHeap<Reverse<(EdgeId, Vertex)>> = BinaryHeap::new();
    let free = |m: &Matching, v: Vertex| m.mate[v as usize] == NONE;

    fn first_free(g: &Graph, m: &Matching, cursor: &mut [u32], v: Vertex) -> Option<crate::graph::Arc> {
        let adj = g.neighbors(v);
        let mut i = cursor[v as usize] as usize;
        while i < adj.len() && m.mate[adj[i].to as usize] != NONE {
            i += 1;
        }
        cursor[v as usize] = i as u32;
        adj.get(i).copied()
    }

    for v in 0..n as Vertex {
        if deg[v as usize] == 1 {
            pendants.push(Reverse((g.neighbors(v)[0].edge, v)));
        }
    }
    let mut scan = 0usize;
    let mut touched = Vec::new();
    loop {
        let mut pick = None;
        while let Some(Reverse((_, v))) = pendants.pop() {
            if free(&m, v) && deg[v as usize] == 1 {
                let a = first_free(g, &m, &mut cursor, v).expect("pendant keeps its edge");
                pick = Some((v, a.to));
                break;
            }
        }
        if pick.is_none() {
            while scan < g.m() {
                let [u, v] = g.edge(scan as EdgeId);
                if free(&m, u) && free(&m, v) {
                    pick = Some((u, v));
                    break;
                }
                scan += 1;
            }
        }
        let Some((u, v)) = pick else { break };
        m.join(g, u, v);
        touched.clear();
        for x in [u, v] {
            for a in g.neighbors(x) {
                let y = a.to;
                if free(&m, y) {
                    deg[y as usize] -= 1;
                    touched.push(y);
                }
            }
        }
        for &y in &touched {
            if deg[y as usize] == 1 {
                let f = first_free(g, &m, &mut cursor, y).expect("degree one");
                pendants.push(Reverse((f.edge, y)));
            }
        }
    }
    m
}

/// Edmonds' blossom search with union-find over blossom bases.
struct Blossom<'a> {
    g: &'a Graph,
    label: Vec<u8>,
    parent: Vec<Vertex>,
    base: Vec<Vertex>,
    stamp: Vec<u32>,
    clock: u32,
    queue: VecDeque<Vertex>,
}

const UNSEEN: u8 = 2;
const EVEN: u8 = 0;
const ODD: u8 = 1;

impl<'a> Blossom<'a> {
    fn new(g: &'a Graph) -> Self {
        let n = g.n();
        Blossom {
            g,
            label: vec![UNSEEN; n],
            parent: vec![NONE; n],
            base: (0..n as Vertex).collect(),
            stamp: vec![0; n],
            clock: 0,
            queue: VecDeque::new(),
        }
    }

    fn find(&mut self, mut x: Vertex) -> Vertex {
        let mut r = x;
        while self.base[r as usize] != r {
            r = self.base[r as usize];
        }
        while self.base[x as usize] != r {
            let next = self.base[x as usize];
            self.base[x as usize] = r;
            x = next;
        }
        r
    }

    fn lca(&mut self, m: &Matching, mut x: Vertex, mut y: Vertex) -> Vertex {
        self.clock += 1;
        loop {
            if x != NONE {
                if self.stamp[x as usize] == self.clock {
                    return x;
                }
                self.stamp[x as usize] = self.clock;
                let mx = m.mate[x as usize];
                x = if mx == NONE {
                    NONE
                } else {
                    let p = self.parent[mx as usize];
                    self.find(p)
                };
            }
            std::mem::swap(&mut x, &mut y);
        }
    }

    fn contract(&mut self, m: &Matching, mut v: Vertex, mut w: Vertex, a: Vertex) {
        while self.find(v) != a {
            self.parent[v as usize] = w;
            w = m.mate[v as usize];
            if self.label[w as usize] == ODD {
                self.label[w as usize] = EVEN;
                self.queue.push_back(w);
            }
            let (rv, rw) = (self.find(v), self.find(w));
            self.base[rv as usize] = a;
            self.base[rw as usize] = a;
            v = self.parent[w as usize];
        }
    }

    /// Searches for an augmenting path from `root`, to `target` if given,
    /// else to any exposed vertex. Augments `m` and returns true on success.
    fn search(&mut self, m: &mut Matching, root: Vertex, target: Option<Vertex>) -> bool {
        let n = self.g.n();
        self.label.iter_mut().for_each(|l| *l = UNSEEN);
        self.parent.iter_mut().for_each(|p| *p = NONE);
        for i in 0..n {
            self.base[i] = i as Vertex;
        }
        self.queue.clear();
        self.label[root as usize] = EVEN;
        self.queue.push_back(root);
        while let Some(v) = self.queue.pop_front() {
            for i in 0..self.g.degree(v) {
                let u = self.g.neighbors(v)[i].to;
                if self.label[u as usize] == UNSEEN {
                    if m.mate[u as usize] == NONE {
                        if u == root || target.is_some_and(|t| t != u) {
                            continue;
                        }
                        self.parent[u as usize] = v;
                        self.flip(m, u);
                        return true;
                    }
                    self.label[u as usize] = ODD;
                    self.parent[u as usize] = v;
                    let w = m.mate[u as usize];
                    self.label[w as usize] = EVEN;
                    self.queue.push_back(w);
                } else if self.label[u as usize] == EVEN {
                    let (bu, bv) = (self.find(u), self.find(v));
                    if bu != bv {
                        let a = self.lca(m, bu, bv);
                        self.contract(m, u, v, a);
                        self.contract(m, v, u, a);
                    }
                }
            }
        }
        false
    }

    fn flip(&self, m: &mut Matching, mut u: Vertex) {
        while u != NONE {
            let pv = self.parent[u as usize];
            let ppv = m.mate[pv as usize];
            m.join(self.g, u, pv);
            u = ppv;
        }
    }
}

/// Outcome counts of the augmentation phase.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct AugmentStats {
    pub pair_paths: usize,
    pub fallback_paths: usize,
}

/// Augments to a maximum matching: designated exposed pairs first, then one
/// unrestricted search per remaining exposed vertex.
pub fn augment(g: &Graph, m: &mut Matching) -> AugmentStats {
    let mut stats = AugmentStats::default();
    let mut bl = Blossom::new(g);
    let exposed = m.exposed();
    for pair in exposed.chunks_exact(2) {
        let (a, b) = (pair[0], pair[1]);
        if m.mate[a as usize] == NONE && m.mate[b as usize] == NONE && bl.search(m, a, Some(b)) {
            stats.pair_paths += 1;
        }
    }
    // no augmenting path from an exposed vertex means none will appear later
    for u in m.exposed() {
        if m.mate[u as usize] == NONE && bl.search(m, u, None) {
            stats.fallback_paths += 1;
        }
    }
    stats
}

/// One component of a 2-matching, as a vertex sequence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Component {
    pub vertices: Vec<Vertex>,
    pub cycle: bool,
}

impl Component {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FuseError {
    #[error("vertex {0} would have degree above two")]
    DegreeOverflow(Vertex),
}

/// A spanning subgraph of maximum degree two with its decomposition.
#[derive(Clone, Debug)]
pub struct TwoMatching {
    pub n: usize,
    pub edges: Vec<[Vertex; 2]>,
    pub components: Vec<Component>,
}

impl TwoMatching {
    pub fn paths(&self) -> usize {
        self.components.iter().filter(|c| !c.cycle).count()
    }

    pub fn cycles(&self) -> usize {
        self.components.iter().filter(|c| c.cycle).count()
    }
}

/// Splits a max-degree-2 edge set on `n` vertices into paths and cycles.
/// Isolated vertices are one-vertex paths.
pub fn decompose(n: usize, edges: &[[Vertex; 2]]) -> Result<Vec<Component>, FuseError> {
    let mut nb = vec![[NONE; 2]; n];
    for &[u, v] in edges {
        for (x, y) in [(u, v), (v, u)] {
            let slot = &mut nb[x as usize];
            if slot[0] == NONE {
                slot[0] = y;
            } else if slot[1] == NONE {
                slot[1] = y;
            } else {
                return Err(FuseError::DegreeOverflow(x));
            }
        }
    }
    let mut seen = vec![false; n];
    let mut comps = Vec::new();
    let walk = |start: Vertex, seen: &mut Vec<bool>| {
        let mut seq = vec![start];
        seen[start as usize] = true;
        let (mut prev, mut cur) = (NONE, start);
        loop {
            let [a, b] = nb[cur as usize];
            let next = if a != NONE && a != prev && !seen[a as usize] {
                a
            } else if b != NONE && b != prev && !seen[b as usize] {
                b
            } else {
                break;
            };
            seen[next as usize] = true;
            seq.push(next);
            prev = cur;
            cur = next;
        }
        seq
    };
    for v in 0..n as Vertex {
        let d = nb[v as usize].iter().filter(|&&x| x != NONE).count();
        if d <= 1 && !seen[v as usize] {
            comps.push(Component {
                vertices: walk(v, &mut seen),
                cycle: false,
            });
        }
    }
    for v in 0..n as Vertex {
        if !seen[v as usize] {
            comps.push(Component {
                vertices: walk(v, &mut seen),
                cycle: true,
            });
        }
    }
    Ok(comps)
}

/// `M ∪ M*` with its component decomposition.
pub fn fuse(n: usize, partial: &[[Vertex; 2]], mstar: &[[Vertex; 2]]) -> Result<TwoMatching, FuseError> {
    let mut edges = partial.to_vec();
    edges.extend_from_slice(mstar);
    let components = decompose(n, &edges)?;
    Ok(TwoMatching {
        n,
        edges,
        components,
    })
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Step3Stats {
    pub residual_vertices: usize,
    pub residual_edges: usize,
    pub ks_matched: usize,
    pub ks_exposed: usize,
    pub final_exposed: usize,
    pub augment: AugmentStats,
}

/// Runs Step 3 on a finished 2GREEDY outcome and fuses the result.
pub fn complete_two_matching(
    g: &Graph,
    out: &GreedyOutcome,
) -> Result<(TwoMatching, Step3Stats), FuseError> {
    let res = ResidualGraph::from_outcome(g, out);
    let mut m = karp_sipser(&res.graph);
    let mut stats = Step3Stats {
        residual_vertices: res.graph.n(),
        residual_edges: res.graph.m(),
        ks_matched: m.size(),
        ks_exposed: res.graph.n() - 2 * m.size(),
        ..Default::default()
    };
    stats.augment = augment(&res.graph, &mut m);
    stats.final_exposed = res.graph.n() - 2 * m.size();
    let partial: Vec<[Vertex; 2]> = out.matching.iter().map(|&e| g.edge(e)).collect();
    let mstar: Vec<[Vertex; 2]> = m
        .edges()
        .iter()
        .map(|&e| g.edge(res.edge[e as usize]))
        .collect();
    Ok((fuse(g.n(), &partial, &mstar)?, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::builders;
    use rand::{Rng, SeedableRng};

    fn g(n: usize, edges: &[[u32; 2]]) -> Graph {
        Graph::from_edges(n, edges.to_vec()).unwrap()
    }

    /// Exhaustive maximum matching size.
    fn brute_max_matching(gr: &Graph) -> usize {
        fn rec(gr: &Graph, e: usize, used: &mut Vec<bool>) -> usize {
            if e == gr.m() {
                return 0;
            }
            let skip = rec(gr, e + 1, used);
            let [u, v] = gr.edge(e as EdgeId);
            if used[u as usize] || used[v as usize] {
                return skip;
            }
            used[u as usize] = true;
            used[v as usize] = true;
            let take = 1 + rec(gr, e + 1, used);
            used[u as usize] = false;
            used[v as usize] = false;
            skip.max(take)
        }
        rec(gr, 0, &mut vec![false; gr.n()])
    }

    #[test]
    fn karp_sipser_small_cases() {
        let p = builders::path(3);
        let m = karp_sipser(&p);
        assert_eq!(m.size(), 1);
        assert_eq!(m.exposed().len(), 1);
        let t = builders::cycle(3);
        assert_eq!(karp_sipser(&t).size(), 1);
        let c4 = builders::cycle(4);
        let m = karp_sipser(&c4);
        assert_eq!(m.mate[0], 1);
        assert_eq!(m.mate[2], 3);
        assert!(m.is_valid(&c4));
    }

    #[test]
    fn augment_textbook_and_parity() {
        let p = builders::path(4);
        let mut m = Matching::empty(4);
        m.join(&p, 1, 2);
        augment(&p, &mut m);
        assert_eq!(m.size(), 2);
        assert_eq!(m.mate[0], 1);
        assert_eq!(m.mate[3], 2);
        let c5 = builders::cycle(5);
        let mut m = Matching::empty(5);
        m.join(&c5, 0, 1);
        m.join(&c5, 2, 3);
        augment(&c5, &mut m);
        assert_eq!(m.exposed().len(), 1);
    }

    #[test]
    fn augment_through_a_blossom() {
        // C5 on 0..5 with pendant 5 on vertex 0, and pendant 6 on vertex 2
        let gr = g(7, &[[0, 1], [1, 2], [2, 3], [3, 4], [4, 0], [0, 5], [2, 6]]);
        let mut m = Matching::empty(7);
        m.join(&gr, 1, 2);
        m.join(&gr, 3, 4);
        // 0 is exposed inside the blossom; 5 and 6 exposed pendants
        augment(&gr, &mut m);
        assert!(m.is_valid(&gr));
        assert_eq!(m.size(), brute_max_matching(&gr));
        assert_eq!(m.size(), 3);
    }

    #[test]
    fn augment_equals_brute_force() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..600 {
            let n = rng.random_range(2..=10);
            let p = rng.random_range(0.15..0.7);
            let mut edges = Vec::new();
            for u in 0..n as u32 {
                for v in u + 1..n as u32 {
                    if rng.random_bool(p) {
                        edges.push([u, v]);
                    }
                }
            }
            let gr = g(n, &edges);
            let mut m = karp_sipser(&gr);
            assert!(m.is_valid(&gr));
            augment(&gr, &mut m);
            assert!(m.is_valid(&gr));
            assert_eq!(m.size(), brute_max_matching(&gr));
            // from scratch too
            let mut e = Matching::empty(n);
            augment(&gr, &mut e);
            assert_eq!(e.size(), brute_max_matching(&gr));
        }
    }

    #[test]
    fn fuse_examples() {
        let tm = fuse(4, &[[0, 1], [1, 2]], &[[2, 3]]).unwrap();
        assert_eq!(tm.components.len(), 1);
        assert_eq!(tm.components[0].vertices, vec![0, 1, 2, 3]);
        assert!(!tm.components[0].cycle);
        let tm = fuse(6, &[], &[[0, 1], [2, 3], [4, 5]]).unwrap();
        assert_eq!(tm.paths(), 3);
        let tm = fuse(4, &[[0, 1], [1, 2], [2, 3]], &[[3, 0]]).unwrap();
        assert_eq!(tm.cycles(), 1);
        assert_eq!(tm.components[0].len(), 4);
        assert_eq!(
            fuse(4, &[[0, 1], [0, 2]], &[[0, 3]]).unwrap_err(),
            FuseError::DegreeOverflow(0)
        );
        let tm = fuse(3, &[[0, 1]], &[]).unwrap();
        assert_eq!(tm.components.len(), 2);
    }

    #[test]
    fn step3_on_sampled_graphs() {
        use crate::greedy::{run_two_greedy, GreedyConfig};
        use crate::model::sample_graph;
        use crate::rng::{StreamRng, COIN_STREAM, GRAPH_STREAM};
        for seed in 0..5 {
            let gr = sample_graph(2000, 5.0, &mut StreamRng::new(seed, GRAPH_STREAM)).unwrap();
            let out =
                run_two_greedy(&gr, &GreedyConfig::default(), StreamRng::new(seed, COIN_STREAM))
                    .unwrap();
            let (tm, st) = complete_two_matching(&gr, &out).unwrap();
            assert!(st.final_exposed <= st.ks_exposed);
            let covered: usize = tm.components.iter().map(|c| c.len()).sum();
            assert_eq!(covered, 2000);
            for &[u, v] in &tm.edges {
                assert!(gr.has_edge(u, v));
            }
        }
    }
}
