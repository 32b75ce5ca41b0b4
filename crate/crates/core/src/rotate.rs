//! Extension-rotation: turn a 2-matching into a Hamilton cycle.
//!
//! Rotation trees never store paths. A node records the start `s` of the
//! suffix reversal that produced it from its parent, so the path of a node is
//! the root path with one reversal of positions `s..L` per ancestor. Position
//! lookups replay those reversals, which costs the node depth.

use serde::Serialize;
use thiserror::Error;

use crate::graph::{Graph, Vertex, NONE};
use crate::matching::{Component, TwoMatching};

/// Path with an inverse position index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PosaPath {
    seq: Vec<Vertex>,
    pos: Vec<u32>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RotateError {
    #[error("pivot {0} is not on the path")]
    NotOnPath(Vertex),
    #[error("pivot {pivot} at position {pos} is too close to the end of a path of length {len}")]
    InvalidPivot { pivot: Vertex, pos: usize, len: usize },
    #[error("path repeats vertex {0}")]
    Repeat(Vertex),
}

impl PosaPath {
    pub fn new(n: usize, seq: Vec<Vertex>) -> Result<Self, RotateError> {
        let mut pos = vec![NONE; n];
        for (i, &v) in seq.iter().enumerate() {
            if pos[v as usize] != NONE {
                return Err(RotateError::Repeat(v));
            }
            pos[v as usize] = i as u32;
        }
        Ok(PosaPath { seq, pos })
    }

    pub fn seq(&self) -> &[Vertex] {
        &self.seq
    }

    pub fn len(&self) -> usize {
        self.seq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seq.is_empty()
    }

    pub fn position(&self, v: Vertex) -> Option<usize> {
        match self.pos.get(v as usize) {
            Some(&p) if p != NONE => Some(p as usize),
            _ => None,
        }
    }

    /// Rotation with inserted edge `(u_k, pivot)`: `(u_1..u_i, u_k, u_{k-1}..u_{i+1})`.
    pub fn rotate(&self, pivot: Vertex) -> Result<PosaPath, RotateError> {
        let i = self.position(pivot).ok_or(RotateError::NotOnPath(pivot))?;
        let k = self.seq.len();
        if i + 2 >= k {
            return Err(RotateError::InvalidPivot {
                pivot,
                pos: i + 1,
                len: k,
            });
        }
        let mut out = self.clone();
        out.seq[i + 1..].reverse();
        for (p, &v) in out.seq.iter().enumerate().skip(i + 1) {
            out.pos[v as usize] = p as u32;
        }
        Ok(out)
    }

    /// True if consecutive vertices are joined by graph edges.
    pub fn is_graph_path(&self, g: &Graph) -> bool {
        self.seq.windows(2).all(|w| g.has_edge(w[0], w[1]))
    }
}

#[derive(Clone, Debug)]
pub struct ErConfig {
    /// Endpoint budget; `None` means `⌈n^nu_exponent⌉`.
    pub nu: Option<usize>,
    pub nu_exponent: f64,
    pub retries: u32,
    pub use_l0_cases: bool,
    /// Reconstruct and check sampled tree paths.
    pub validate_paths: bool,
    /// How many first-level trees keep their level sizes.
    pub keep_trees: usize,
}

impl Default for ErConfig {
    fn default() -> Self {
        ErConfig {
            nu: None,
            nu_exponent: 0.55,
            retries: 3,
            use_l0_cases: true,
            validate_paths: false,
            keep_trees: 64,
        }
    }
}

impl ErConfig {
    pub fn nu_for(&self, n: usize) -> usize {
        self.nu
            .unwrap_or_else(|| (n as f64).powf(self.nu_exponent).ceil() as usize)
            .max(2)
    }
}

/// `max(4, ⌊ln n / (20 ln c)⌋)`.
pub fn level_threshold(n: usize, c: f64) -> usize {
    if c <= 1.0 {
        return 4;
    }
    (((n as f64).ln() / (20.0 * c.ln())).floor() as usize).max(4)
}

/// Sizes of one tree level.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct LevelStat {
    pub a: u32,
    pub b: u32,
    pub c: u32,
    /// False if the budget cut the level short.
    pub complete: bool,
}

#[derive(Clone, Copy, Debug)]
struct Node {
    vertex: Vertex,
    parent: u32,
    /// Start of the suffix reversal applied to the parent's path; `NONE` at the root.
    s: u32,
    level: u32,
}

enum Grown {
    Extension { node: u32, outside: Vertex },
    Tree { end: Vec<(Vertex, u32)>, levels: Vec<LevelStat> },
}

/// Search state for one path: arena of nodes plus membership stamps.
pub struct Searcher<'g> {
    g: &'g Graph,
    root: Vec<Vertex>,
    root_pos: Vec<u32>,
    nodes: Vec<Node>,
    in_c: Vec<u32>,
    a_mark: Vec<u32>,
    b_mark: Vec<u32>,
    tree_clock: u32,
    level_clock: u32,
    end_mark: Vec<u32>,
    end_clock: u32,
    l0: usize,
    use_l0: bool,
    chain: Vec<u32>,
    pub edges_scanned: u64,
    pub rotations: u64,
}

impl<'g> Searcher<'g> {
    pub fn new(g: &'g Graph, l0: usize, use_l0: bool) -> Self {
        let n = g.n();
        Searcher {
            g,
            root: Vec::new(),
            root_pos: vec![NONE; n],
            nodes: Vec::new(),
            in_c: vec![0; n],
            a_mark: vec![0; n],
            b_mark: vec![0; n],
            tree_clock: 0,
            level_clock: 0,
            end_mark: vec![0; n],
            end_clock: 0,
            l0,
            use_l0,
            chain: Vec::new(),
            edges_scanned: 0,
            rotations: 0,
        }
    }

    fn set_root(&mut self, path: &[Vertex]) {
        for &v in &self.root {
            self.root_pos[v as usize] = NONE;
        }
        self.root.clear();
        self.root.extend_from_slice(path);
        for (i, &v) in path.iter().enumerate() {
            self.root_pos[v as usize] = i as u32;
        }
        self.nodes.clear();
    }

    fn len(&self) -> u32 {
        self.root.len() as u32
    }

    /// Reversal starts from the root down to `node`, into `self.chain`.
    fn load_chain(&mut self, node: u32) {
        self.chain.clear();
        let mut x = node;
        while x != NONE {
            let nd = self.nodes[x as usize];
            if nd.s != NONE {
                self.chain.push(nd.s);
            }
            x = nd.parent;
        }
        self.chain.reverse();
    }

    fn forward(&self, mut p: u32) -> u32 {
        let last = self.len() - 1;
        for &s in &self.chain {
            if p >= s {
                p = last + s - p;
            }
        }
        p
    }

    fn vertex_at(&self, mut p: u32) -> Vertex {
        let last = self.len() - 1;
        for &s in self.chain.iter().rev() {
            if p >= s {
                p = last + s - p;
            }
        }
        self.root[p as usize]
    }

    /// The path of `node`: fixed endpoint first, `node`'s vertex last.
    pub fn materialize(&self, node: u32) -> Vec<Vertex> {
        let mut chain = Vec::new();
        let mut x = node;
        while x != NONE {
            let nd = self.nodes[x as usize];
            if nd.s != NONE {
                chain.push(nd.s);
            }
            x = nd.parent;
        }
        let mut p = self.root.clone();
        for &s in chain.iter().rev() {
            p[s as usize..].reverse();
        }
        p
    }

    fn push(&mut self, vertex: Vertex, parent: u32, s: u32, level: u32) -> u32 {
        self.nodes.push(Node {
            vertex,
            parent,
            s,
            level,
        });
        (self.nodes.len() - 1) as u32
    }

    fn external_neighbor(&mut self, v: Vertex) -> Option<Vertex> {
        for a in self.g.neighbors(v) {
            self.edges_scanned += 1;
            if self.root_pos[a.to as usize] == NONE {
                return Some(a.to);
            }
        }
        None
    }

    /// Breadth-first rotation tree below `root`, whose path rotates at its
    /// last position. Stops at `nu` nodes, an extension, or an empty frontier.
    fn grow(&mut self, root: u32, nu: usize) -> Grown {
        self.tree_clock += 1;
        let tree = self.tree_clock;
        let first = self.nodes.len() - 1;
        let rv = self.nodes[root as usize].vertex;
        self.in_c[rv as usize] = tree;
        let mut c_size = 1u32;
        let mut levels = vec![LevelStat {
            a: 1,
            b: 0,
            c: 1,
            complete: true,
        }];
        let mut end = vec![(rv, root)];
        let mut frontier = vec![root];
        let last = self.len() - 1;
        let mut budget_hit = false;
        'levels: while !frontier.is_empty() {
            let case1 = self.use_l0 && (c_size as usize) <= self.l0;
            self.level_clock += 1;
            let lv = self.level_clock;
            let mut next = Vec::new();
            let mut nb = 0u32;
            for &node in &frontier {
                self.load_chain(node);
                let v = self.nodes[node as usize].vertex;
                let level = self.nodes[node as usize].level;
                for a in self.g.neighbors(v) {
                    self.edges_scanned += 1;
                    let u = a.to;
                    let ru = self.root_pos[u as usize];
                    if ru == NONE {
                        return Grown::Extension { node, outside: u };
                    }
                    let pu = self.forward(ru);
                    if pu + 2 > last {
                        continue;
                    }
                    let w = self.vertex_at(pu + 1);
                    if case1 {
                        if self.b_mark[u as usize] == lv {
                            continue;
                        }
                        self.b_mark[u as usize] = lv;
                        nb += 1;
                        if self.in_c[u as usize] != tree {
                            self.in_c[u as usize] = tree;
                            c_size += 1;
                        }
                        if self.a_mark[w as usize] == lv {
                            continue;
                        }
                    } else {
                        if self.in_c[u as usize] == tree || self.in_c[w as usize] == tree {
                            continue;
                        }
                        self.in_c[u as usize] = tree;
                        self.b_mark[u as usize] = lv;
                        c_size += 1;
                        nb += 1;
                    }
                    self.a_mark[w as usize] = lv;
                    if self.in_c[w as usize] != tree {
                        self.in_c[w as usize] = tree;
                        c_size += 1;
                    }
                    let id = self.push(w, node, pu + 1, level + 1);
                    self.rotations += 1;
                    next.push(id);
                    if self.nodes.len() - first >= nu {
                        budget_hit = true;
                        levels.push(LevelStat {
                            a: next.len() as u32,
                            b: nb,
                            c: c_size,
                            complete: false,
                        });
                        frontier = next;
                        break 'levels;
                    }
                }
            }
            // levels are complete here
            levels.push(LevelStat {
                a: next.len() as u32,
                b: nb,
                c: c_size,
                complete: true,
            });
            frontier = next;
        }
        if budget_hit {
            // leaves never expanded still count as extension candidates
            for &node in &frontier {
                let v = self.nodes[node as usize].vertex;
                if let Some(z) = self.external_neighbor(v) {
                    return Grown::Extension { node, outside: z };
                }
            }
        } else if levels.last().is_some_and(|l| l.a == 0) {
            levels.pop();
        }
        self.end_clock += 1;
        for nd in first..self.nodes.len() {
            let x = self.nodes[nd].vertex;
            if self.end_mark[x as usize] != self.end_clock {
                self.end_mark[x as usize] = self.end_clock;
                if nd != first {
                    end.push((x, nd as u32));
                }
            }
        }
        Grown::Tree { end, levels }
    }

    /// Checks `materialize(node)` against the tree contract.
    fn check_node(&self, node: u32, fixed: Vertex) -> bool {
        let p = self.materialize(node);
        let mut seen = vec![false; self.g.n()];
        p.len() == self.root.len()
            && p[0] == fixed
            && *p.last().unwrap() == self.nodes[node as usize].vertex
            && p.iter().all(|&v| {
                let fresh = !seen[v as usize] && self.root_pos[v as usize] != NONE;
                seen[v as usize] = true;
                fresh
            })
            && p.windows(2).all(|w| self.g.has_edge(w[0], w[1]))
    }
}

/// Result of one restricted rotation search.
#[derive(Clone, Debug)]
pub enum Rrs {
    /// `path` is a rotation of the input whose last vertex is adjacent to `outside`.
    Extension { path: Vec<Vertex>, outside: Vertex },
    /// A cycle on the vertex set of the input path.
    Cycle(Vec<Vertex>),
    NoClosingEdge,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct AtlasSizes {
    pub end_a: usize,
    pub second_level_trees: usize,
    pub second_level_endpoints: usize,
}

#[derive(Clone, Debug, Default)]
pub struct RrsReport {
    pub atlas: AtlasSizes,
    pub first_levels: Vec<LevelStat>,
    pub edges_scanned: u64,
    pub checked_nodes: usize,
    pub bad_nodes: usize,
}

/// One first-level tree fixing `path[0]`, then second-level trees fixing each
/// endpoint in discovery order. Closing edges are looked for as soon as each
/// endpoint set is complete.
pub fn rrs(s: &mut Searcher<'_>, path: &[Vertex], nu: usize, validate: bool) -> (Rrs, RrsReport) {
    let mut rep = RrsReport::default();
    let before = s.edges_scanned;
    s.set_root(path);
    let l = path.len();
    let a = path[0];
    let b = path[l - 1];
    let done = |s: &mut Searcher<'_>, r: Rrs, mut rep: RrsReport| {
        rep.edges_scanned = s.edges_scanned - before;
        (r, rep)
    };
    if let Some(z) = s.external_neighbor(a) {
        let mut p = path.to_vec();
        p.reverse();
        return done(s, Rrs::Extension { path: p, outside: z }, rep);
    }
    let root = s.push(b, NONE, NONE, 0);
    let (end_a, levels) = match s.grow(root, nu) {
        Grown::Extension { node, outside } => {
            let p = s.materialize(node);
            return done(s, Rrs::Extension { path: p, outside }, rep);
        }
        Grown::Tree { end, levels } => (end, levels),
    };
    rep.atlas.end_a = end_a.len();
    rep.first_levels = levels;
    if validate {
        let step = (s.nodes.len() / 100).max(1);
        for nd in (0..s.nodes.len()).step_by(step) {
            rep.checked_nodes += 1;
            if !s.check_node(nd as u32, a) {
                rep.bad_nodes += 1;
            }
        }
    }
    if l < 3 {
        return done(s, Rrs::NoClosingEdge, rep);
    }
    // q = a is in every END(x): look for a chord (a, x) first
    s.end_clock += 1;
    for &(x, _) in &end_a {
        s.end_mark[x as usize] = s.end_clock;
    }
    let hit = s
        .g
        .neighbors(a)
        .iter()
        .find(|arc| s.end_mark[arc.to as usize] == s.end_clock && arc.to != path[1])
        .map(|arc| arc.to);
    s.edges_scanned += s.g.degree(a) as u64;
    if let Some(x) = hit {
        let node = end_a.iter().find(|e| e.0 == x).unwrap().1;
        return done(s, Rrs::Cycle(s.materialize(node)), rep);
    }
    let keep = s.nodes.len();
    for &(x, xnode) in &end_a {
        s.nodes.truncate(keep);
        let root2 = s.push(a, xnode, 0, 0);
        rep.atlas.second_level_trees += 1;
        match s.grow(root2, nu) {
            Grown::Extension { node, outside } => {
                let p = s.materialize(node);
                return done(s, Rrs::Extension { path: p, outside }, rep);
            }
            Grown::Tree { end, .. } => {
                rep.atlas.second_level_endpoints += end.len();
                if validate {
                    let step = ((s.nodes.len() - keep) / 20).max(1);
                    for nd in (keep..s.nodes.len()).step_by(step) {
                        rep.checked_nodes += 1;
                        if !s.check_node(nd as u32, x) {
                            rep.bad_nodes += 1;
                        }
                    }
                }
                s.end_clock += 1;
                for &(q, _) in &end {
                    s.end_mark[q as usize] = s.end_clock;
                }
                let second = s.materialize(root2)[1];
                let hit = s
                    .g
                    .neighbors(x)
                    .iter()
                    .find(|arc| s.end_mark[arc.to as usize] == s.end_clock && arc.to != second)
                    .map(|arc| arc.to);
                s.edges_scanned += s.g.degree(x) as u64;
                if let Some(q) = hit {
                    let node = end.iter().find(|e| e.0 == q).unwrap().1;
                    return done(s, Rrs::Cycle(s.materialize(node)), rep);
                }
            }
        }
    }
    done(s, Rrs::NoClosingEdge, rep)
}

/// Rotation tree below a fixed path, for tests and the growth diagnostics:
/// endpoint vertices per level, or `None` if an extension was found.
pub fn grow_tree_levels(
    g: &Graph,
    path: &[Vertex],
    nu: usize,
    l0: usize,
    use_l0: bool,
) -> Option<Vec<Vec<Vertex>>> {
    let mut s = Searcher::new(g, l0, use_l0);
    s.set_root(path);
    let root = s.push(*path.last().unwrap(), NONE, NONE, 0);
    match s.grow(root, nu) {
        Grown::Extension { .. } => None,
        Grown::Tree { .. } => {
            let depth = s.nodes.iter().map(|n| n.level).max().unwrap_or(0) as usize;
            let mut levels = vec![Vec::new(); depth + 1];
            for n in &s.nodes {
                levels[n.level as usize].push(n.vertex);
            }
            Some(levels)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FailureReason {
    NoClosingEdge,
    Disconnected,
}

#[derive(Clone, Debug, Serialize)]
pub struct FailureReport {
    pub reason: FailureReason,
    pub retries_used: u32,
    pub atlas_per_retry: Vec<AtlasSizes>,
    pub component_sizes: Vec<usize>,
    pub path_len: usize,
    pub edges_scanned: u64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ErStats {
    pub er3: u32,
    pub er2_merges: u32,
    pub extensions: u32,
    pub closings: u32,
    pub rotations: u64,
    pub edges_scanned: u64,
    pub max_edges_per_rrs: u64,
    pub retries_used: u32,
    pub second_level_trees: u64,
    pub checked_nodes: usize,
    pub bad_nodes: usize,
    pub nu: usize,
    pub l0: usize,
    /// Level sizes of the first `keep_trees` first-level trees.
    pub trees: Vec<Vec<LevelStat>>,
}

#[derive(Clone, Debug)]
pub enum ErOutcome {
    Hamilton(Vec<Vertex>),
    Failure(FailureReport),
}

/// Components of the current 2-matching other than the path being grown.
struct Pool {
    comps: Vec<Option<Component>>,
    comp_of: Vec<u32>,
    index: Vec<u32>,
}

impl Pool {
    fn new(n: usize, components: &[Component]) -> Self {
        let mut p = Pool {
            comps: Vec::with_capacity(components.len()),
            comp_of: vec![NONE; n],
            index: vec![NONE; n],
        };
        for c in components {
            p.add(c.clone());
        }
        p
    }

    fn add(&mut self, c: Component) {
        let id = self.comps.len() as u32;
        for (i, &v) in c.vertices.iter().enumerate() {
            self.comp_of[v as usize] = id;
            self.index[v as usize] = i as u32;
        }
        self.comps.push(Some(c));
    }

    fn take(&mut self, id: u32) -> Component {
        self.comps[id as usize].take().expect("live component")
    }

    fn sizes(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.comps.iter().flatten().map(|c| c.len()).collect();
        s.sort_unstable_by(|a, b| b.cmp(a));
        s
    }

    /// Removes the component holding `v` and returns a path starting at `v`
    /// that covers all of a cycle, or the longer side of a path (ties go
    /// toward index 0). The rest of a path stays in the pool.
    fn detach_from(&mut self, v: Vertex) -> Vec<Vertex> {
        let id = self.comp_of[v as usize];
        let j = self.index[v as usize] as usize;
        let c = self.take(id);
        let k = c.vertices.len();
        for &x in &c.vertices {
            self.comp_of[x as usize] = NONE;
        }
        if c.cycle {
            let mut out = c.vertices[j..].to_vec();
            out.extend_from_slice(&c.vertices[..j]);
            return out;
        }
        let low = j + 1;
        let high = k - j;
        if low >= high {
            let out: Vec<Vertex> = c.vertices[..=j].iter().rev().copied().collect();
            if j + 1 < k {
                self.add(Component {
                    vertices: c.vertices[j + 1..].to_vec(),
                    cycle: false,
                });
            }
            out
        } else {
            let out = c.vertices[j..].to_vec();
            if j > 0 {
                self.add(Component {
                    vertices: c.vertices[..j].to_vec(),
                    cycle: false,
                });
            }
            out
        }
    }
}

fn er3_budget(components: &[Component]) -> f64 {
    components.len() as f64
        + components
            .iter()
            .map(|c| (c.len().max(1) as f64).log2())
            .sum::<f64>()
}

/// ER1 to ER3 with restarts. `c` is only used for the level threshold.
pub fn er_loop(g: &Graph, tm: &TwoMatching, cfg: &ErConfig) -> (ErOutcome, ErStats) {
    let n = g.n();
    let c = g.m() as f64 / n.max(1) as f64;
    let l0 = level_threshold(n, c);
    let mut stats = ErStats {
        nu: cfg.nu_for(n),
        l0,
        ..Default::default()
    };
    let mut atlas_per_retry = Vec::new();
    let mut s = Searcher::new(g, l0, cfg.use_l0_cases);
    let k1 = (0..tm.components.len())
        .max_by(|&i, &j| tm.components[i].len().cmp(&tm.components[j].len()).then(j.cmp(&i)))
        .expect("at least one component");
    let mut nu = stats.nu;
    let mut attempt = 0u32;
    loop {
        let mut pool = Pool::new(n, &tm.components);
        let k1c = pool.take(k1 as u32);
        for &v in &k1c.vertices {
            pool.comp_of[v as usize] = NONE;
        }
        let mut path = k1c.vertices.clone();
        let len = path.len();
        if k1c.cycle {
            // drop the edge entering position `attempt`
            path.rotate_left(attempt as usize % len);
        } else if attempt % 2 == 1 {
            path.reverse();
        }
        let mut in_path = vec![false; n];
        for &v in &path {
            in_path[v as usize] = true;
        }
        let mut is_cycle = false;
        let mut last_atlas = AtlasSizes::default();
        let result = loop {
            if is_cycle {
                // ER2
                if path.len() == n {
                    break Ok(path.clone());
                }
                let mut found = None;
                'scan: for (i, &u) in path.iter().enumerate() {
                    for a in g.neighbors(u) {
                        stats.edges_scanned += 1;
                        if !in_path[a.to as usize] {
                            found = Some((i, a.to));
                            break 'scan;
                        }
                    }
                }
                let Some((i, v)) = found else {
                    break Err(FailureReason::Disconnected);
                };
                path.rotate_left(i + 1);
                let tail = pool.detach_from(v);
                for &x in &tail {
                    in_path[x as usize] = true;
                }
                path.extend_from_slice(&tail);
                stats.er2_merges += 1;
                is_cycle = false;
            }
            // ER3
            stats.er3 += 1;
            let (r, rep) = rrs(&mut s, &path, nu, cfg.validate_paths);
            stats.max_edges_per_rrs = stats.max_edges_per_rrs.max(rep.edges_scanned);
            stats.second_level_trees += rep.atlas.second_level_trees as u64;
            stats.checked_nodes += rep.checked_nodes;
            stats.bad_nodes += rep.bad_nodes;
            if stats.trees.len() < cfg.keep_trees && !rep.first_levels.is_empty() {
                stats.trees.push(rep.first_levels.clone());
            }
            last_atlas = rep.atlas.clone();
            match r {
                Rrs::Extension { path: q, outside } => {
                    stats.extensions += 1;
                    path = q;
                    let tail = pool.detach_from(outside);
                    for &x in &tail {
                        in_path[x as usize] = true;
                    }
                    path.extend_from_slice(&tail);
                }
                Rrs::Cycle(q) => {
                    stats.closings += 1;
                    path = q;
                    is_cycle = true;
                }
                Rrs::NoClosingEdge => break Err(FailureReason::NoClosingEdge),
            }
        };
        atlas_per_retry.push(last_atlas);
        match result {
            Ok(cycle) => {
                stats.retries_used = attempt;
                stats.edges_scanned += s.edges_scanned;
                stats.rotations = s.rotations;
                return (ErOutcome::Hamilton(cycle), stats);
            }
            Err(reason) => {
                if reason == FailureReason::NoClosingEdge && attempt < cfg.retries {
                    attempt += 1;
                    nu = nu.saturating_mul(2);
                    continue;
                }
                stats.retries_used = attempt;
                stats.edges_scanned += s.edges_scanned;
                stats.rotations = s.rotations;
                let mut sizes = vec![path.len()];
                sizes.extend(pool.sizes());
                return (
                    ErOutcome::Failure(FailureReport {
                        reason,
                        retries_used: attempt,
                        atlas_per_retry,
                        component_sizes: sizes,
                        path_len: path.len(),
                        edges_scanned: stats.edges_scanned,
                    }),
                    stats,
                );
            }
        }
    }
}

/// Upper bound on ER3 executions implied by the initial decomposition.
pub fn er3_bound(tm: &TwoMatching) -> f64 {
    er3_budget(&tm.components)
}
