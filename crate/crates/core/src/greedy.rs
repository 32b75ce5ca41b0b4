//! The 2GREEDY state machine.
//!
//! Vertices are classified by their residual degree and matching degree `b`.
//! Each selectable class keeps a lazy min-heap keyed by the member's first
//! alive incident edge. Keys only grow as edges die, so a popped entry whose
//! key is stale is pushed back with the current key.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;
use std::io::{self, Write};

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::graph::{Arc, EdgeId, Graph, Vertex, NONE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Class {
    Y0,
    Y1,
    Y2,
    Y,
    Z0,
    Z1,
    Z,
    /// Deleted with `b = 2`.
    Done,
}

impl Class {
    fn of(deg: u32, b: u8) -> Class {
        match (b, deg) {
            (0, 0) => Class::Y0,
            (0, 1) => Class::Y1,
            (0, 2) => Class::Y2,
            (0, _) => Class::Y,
            (1, 0) => Class::Z0,
            (1, 1) => Class::Z1,
            (1, _) => Class::Z,
            _ => Class::Done,
        }
    }

    fn in_gamma(self) -> bool {
        matches!(self, Class::Y1 | Class::Y2 | Class::Y | Class::Z1 | Class::Z)
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// The selectable buckets, in priority order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Bucket {
    Y1,
    Y2,
    Z1,
    Y,
}

impl Bucket {
    fn class(self) -> Class {
        match self {
            Bucket::Y1 => Class::Y1,
            Bucket::Y2 => Class::Y2,
            Bucket::Z1 => Class::Z1,
            Bucket::Y => Class::Y,
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum StepKind {
    #[serde(rename = "1a")]
    S1a,
    #[serde(rename = "1b")]
    S1b,
    #[serde(rename = "1c")]
    S1c,
    #[serde(rename = "2")]
    S2,
    Done,
}

impl StepKind {
    pub fn is_step1(self) -> bool {
        matches!(self, StepKind::S1a | StepKind::S1b | StepKind::S1c)
    }

    fn code(self) -> u8 {
        self as u8
    }

    fn from_code(c: u8) -> StepKind {
        [
            StepKind::S1a,
            StepKind::S1b,
            StepKind::S1c,
            StepKind::S2,
            StepKind::Done,
        ][c as usize]
    }
}

impl fmt::Display for StepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StepKind::S1a => "1a",
            StepKind::S1b => "1b",
            StepKind::S1c => "1c",
            StepKind::S2 => "2",
            StepKind::Done => "done",
        })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GreedyError {
    #[error("bucket member {vertex} has no alive incident edge")]
    Inconsistent { vertex: Vertex },
}

/// Bucket sizes after a step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Sizes {
    pub y1: u32,
    pub y2: u32,
    pub z1: u32,
    pub y: u32,
    pub z: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct StepRecord {
    pub t: u32,
    pub kind: StepKind,
    pub vertex: Vertex,
    pub edge: EdgeId,
    pub sizes: Sizes,
    pub mu: u32,
    /// The added edge closed an M-cycle.
    pub closed_cycle: bool,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct StepTrace {
    pub records: Vec<StepRecord>,
    removed: Vec<Vertex>,
    removed_start: Vec<u32>,
}

impl StepTrace {
    /// A trace without removal lists.
    pub fn from_records(records: Vec<StepRecord>) -> Self {
        StepTrace {
            removed_start: vec![0; records.len()],
            records,
            removed: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Vertices that left `Γ` during record `i`.
    pub fn removed(&self, i: usize) -> &[Vertex] {
        let a = self.removed_start[i] as usize;
        let b = self
            .removed_start
            .get(i + 1)
            .map_or(self.removed.len(), |&x| x as usize);
        &self.removed[a..b]
    }

    /// Indices of the Step-2 records.
    pub fn step2_indices(&self) -> Vec<usize> {
        self.records
            .iter()
            .enumerate()
            .filter(|(_, r)| r.kind == StepKind::S2)
            .map(|(i, _)| i)
            .collect()
    }

    /// Tab-separated dump: `t kind edge y1 y2 z1 y z mu`, edge 1-based.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> io::Result<()> {
        for r in &self.records {
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.t,
                r.kind,
                r.edge as u64 + 1,
                r.sizes.y1,
                r.sizes.y2,
                r.sizes.z1,
                r.sizes.y,
                r.sizes.z,
                r.mu
            )?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default)]
pub struct GreedyConfig {
    pub record_trace: bool,
}

/// What 2GREEDY leaves behind at the Step-3 condition.
#[derive(Clone, Debug)]
pub struct GreedyOutcome {
    pub n: usize,
    /// Partial 2-matching, in insertion order.
    pub matching: Vec<EdgeId>,
    pub b: Vec<u8>,
    /// Removal step per vertex, `NONE` if still in `Γ`.
    pub removed_at: Vec<u32>,
    /// Z-witness per regular vertex, `NONE` otherwise.
    pub witness: Vec<EdgeId>,
    pub regular: Vec<bool>,
    /// Step at which each edge left `Γ`, `NONE` if alive at the end.
    pub edge_death: Vec<u32>,
    /// Kind of step `t` at index `t - 1`.
    pub kinds: Vec<u8>,
    pub steps: u32,
    pub step_counts: StepCounts,
    /// Vertices that became isolated with `b = 0`.
    pub y0: Vec<Vertex>,
    pub closed_cycles: u32,
    pub trace: Option<StepTrace>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct StepCounts {
    pub s1a: u32,
    pub s1b: u32,
    pub s1c: u32,
    pub s2: u32,
}

impl StepCounts {
    pub fn step1(&self) -> u32 {
        self.s1a + self.s1b + self.s1c
    }

    pub fn total(&self) -> u32 {
        self.step1() + self.s2
    }
}

impl GreedyOutcome {
    pub fn kind_at(&self, t: u32) -> StepKind {
        StepKind::from_code(self.kinds[t as usize - 1])
    }

    pub fn edge_alive(&self, e: EdgeId) -> bool {
        self.edge_death[e as usize] == NONE
    }

    /// Vertices still in `Γ`; each has `b = 1` and degree at least 2.
    pub fn residual_vertices(&self) -> Vec<Vertex> {
        (0..self.n as Vertex)
            .filter(|&v| self.removed_at[v as usize] == NONE)
            .collect()
    }

    pub fn residual_edges(&self) -> Vec<EdgeId> {
        (0..self.edge_death.len() as EdgeId)
            .filter(|&e| self.edge_alive(e))
            .collect()
    }

    /// Sorted matching edge ids.
    pub fn matching_set(&self) -> Vec<EdgeId> {
        let mut m = self.matching.clone();
        m.sort_unstable();
        m
    }

    /// `(vertex, witness)` for every regular vertex, ascending by vertex.
    pub fn witness_pairs(&self) -> Vec<(Vertex, EdgeId)> {
        (0..self.n as Vertex)
            .filter(|&v| self.regular[v as usize])
            .map(|v| (v, self.witness[v as usize]))
            .collect()
    }
}

pub struct TwoGreedy<'g, R> {
    g: &'g Graph,
    coin: R,
    deg: Vec<u32>,
    b: Vec<u8>,
    class: Vec<Class>,
    cursor: Vec<u32>,
    other_end: Vec<Vertex>,
    heaps: [BinaryHeap<Reverse<(EdgeId, Vertex)>>; 4],
    counts: [u32; 8],
    edge_death: Vec<u32>,
    mu: u32,
    t: u32,
    matching: Vec<EdgeId>,
    removed_at: Vec<u32>,
    witness: Vec<EdgeId>,
    regular: Vec<bool>,
    kinds: Vec<u8>,
    step_counts: StepCounts,
    y0: Vec<Vertex>,
    closed_cycles: u32,
    trace: Option<StepTrace>,
}

impl<'g, R: Rng> TwoGreedy<'g, R> {
    pub fn new(g: &'g Graph, coin: R, cfg: &GreedyConfig) -> Self {
        let n = g.n();
        let mut s = TwoGreedy {
            g,
            coin,
            deg: (0..n as Vertex).map(|v| g.degree(v) as u32).collect(),
            b: vec![0; n],
            class: vec![Class::Y0; n],
            cursor: vec![0; n],
            other_end: (0..n as Vertex).collect(),
            heaps: Default::default(),
            counts: [n as u32, 0, 0, 0, 0, 0, 0, 0],
            edge_death: vec![NONE; g.m()],
            mu: g.m() as u32,
            t: 0,
            matching: Vec::new(),
            removed_at: vec![NONE; n],
            witness: vec![NONE; n],
            regular: vec![false; n],
            kinds: Vec::new(),
            step_counts: StepCounts::default(),
            y0: Vec::new(),
            closed_cycles: 0,
            trace: cfg.record_trace.then(StepTrace::default),
        };
        for v in 0..n as Vertex {
            let c = Class::of(s.deg[v as usize], 0);
            s.set_class(v, c);
            if c == Class::Y0 {
                s.removed_at[v as usize] = 0;
                s.y0.push(v);
            }
        }
        s
    }

    pub fn graph(&self) -> &Graph {
        self.g
    }

    pub fn class(&self, v: Vertex) -> Class {
        self.class[v as usize]
    }

    pub fn b(&self, v: Vertex) -> u8 {
        self.b[v as usize]
    }

    pub fn degree(&self, v: Vertex) -> u32 {
        self.deg[v as usize]
    }

    pub fn mu(&self) -> u32 {
        self.mu
    }

    pub fn t(&self) -> u32 {
        self.t
    }

    pub fn edge_alive(&self, e: EdgeId) -> bool {
        self.edge_death[e as usize] == NONE
    }

    pub fn sizes(&self) -> Sizes {
        Sizes {
            y1: self.counts[Class::Y1.index()],
            y2: self.counts[Class::Y2.index()],
            z1: self.counts[Class::Z1.index()],
            y: self.counts[Class::Y.index()],
            z: self.counts[Class::Z.index()],
        }
    }

    fn set_class(&mut self, v: Vertex, c: Class) {
        let old = self.class[v as usize];
        self.counts[old.index()] -= 1;
        self.counts[c.index()] += 1;
        self.class[v as usize] = c;
        let slot = match c {
            Class::Y1 => Some(Bucket::Y1),
            Class::Y2 => Some(Bucket::Y2),
            Class::Z1 => Some(Bucket::Z1),
            Class::Y => Some(Bucket::Y),
            _ => None,
        };
        if let Some(bk) = slot {
            if old != c {
                if let Some(a) = self.first_alive(v) {
                    self.heaps[bk.slot()].push(Reverse((a.edge, v)));
                }
            }
        }
    }

    /// First alive incident edge of `v`, advancing its cursor past dead ones.
    pub fn first_alive(&mut self, v: Vertex) -> Option<Arc> {
        let adj = self.g.neighbors(v);
        let mut i = self.cursor[v as usize] as usize;
        while i < adj.len() && self.edge_death[adj[i].edge as usize] != NONE {
            i += 1;
        }
        self.cursor[v as usize] = i as u32;
        adj.get(i).copied()
    }

    /// Alive incident edges of `v` in edge order.
    pub fn alive_arcs(&self, v: Vertex) -> impl Iterator<Item = Arc> + '_ {
        self.g.neighbors(v)[self.cursor[v as usize] as usize..]
            .iter()
            .copied()
            .filter(move |a| self.edge_death[a.edge as usize] == NONE)
    }

    pub fn select_step(&mut self) -> StepKind {
        for (bk, kind) in [
            (Bucket::Y1, StepKind::S1a),
            (Bucket::Y2, StepKind::S1b),
            (Bucket::Z1, StepKind::S1c),
            (Bucket::Y, StepKind::S2),
        ] {
            if self.counts[bk.class().index()] > 0 {
                return kind;
            }
        }
        StepKind::Done
    }

    /// The bucket member whose first alive edge comes first in the ordering.
    pub fn first_edge_for_bucket(&mut self, bk: Bucket) -> Result<(Vertex, EdgeId), GreedyError> {
        loop {
            let Some(&Reverse((key, v))) = self.heaps[bk.slot()].peek() else {
                // heap exhausted while the count says otherwise
                let v = (0..self.g.n() as Vertex)
                    .find(|&v| self.class[v as usize] == bk.class())
                    .unwrap_or(NONE);
                return Err(GreedyError::Inconsistent { vertex: v });
            };
            if self.class[v as usize] != bk.class() {
                self.heaps[bk.slot()].pop();
                continue;
            }
            match self.first_alive(v) {
                None => return Err(GreedyError::Inconsistent { vertex: v }),
                Some(a) if a.edge == key => return Ok((v, key)),
                Some(a) => {
                    self.heaps[bk.slot()].pop();
                    self.heaps[bk.slot()].push(Reverse((a.edge, v)));
                }
            }
        }
    }

    fn kill_edge(&mut self, e: EdgeId) {
        debug_assert_eq!(self.edge_death[e as usize], NONE);
        self.edge_death[e as usize] = self.t;
        self.mu -= 1;
        let [u, v] = self.g.edge(e);
        self.deg[u as usize] -= 1;
        self.deg[v as usize] -= 1;
    }

    fn leave_gamma(&mut self, v: Vertex, removed: &mut Vec<Vertex>) {
        self.removed_at[v as usize] = self.t;
        removed.push(v);
    }

    /// Recomputes the class of a vertex still in `Γ` after its degree or `b` changed.
    fn reclassify(&mut self, v: Vertex, removed: &mut Vec<Vertex>) {
        if !self.class[v as usize].in_gamma() {
            return;
        }
        let c = Class::of(self.deg[v as usize], self.b[v as usize]);
        if c == self.class[v as usize] {
            return;
        }
        self.set_class(v, c);
        match c {
            Class::Y0 => {
                self.y0.push(v);
                self.leave_gamma(v, removed);
            }
            Class::Z0 => self.leave_gamma(v, removed),
            Class::Done => unreachable!("b = 2 is handled by delete_vertex"),
            _ => {}
        }
    }

    /// Removes a vertex that reached `b = 2` and all its alive edges.
    fn delete_vertex(&mut self, w: Vertex, was: Class, removed: &mut Vec<Vertex>) {
        if was == Class::Z {
            let a = self.first_alive(w).expect("a Z vertex keeps an edge after one is matched");
            self.witness[w as usize] = a.edge;
            self.regular[w as usize] = true;
        }
        self.set_class(w, Class::Done);
        self.leave_gamma(w, removed);
        let start = self.cursor[w as usize] as usize;
        let adj = self.g.neighbors(w);
        for &a in &adj[start..] {
            if self.edge_death[a.edge as usize] == NONE {
                self.kill_edge(a.edge);
                self.reclassify(a.to, removed);
            }
        }
        self.cursor[w as usize] = adj.len() as u32;
    }

    fn settle(&mut self, x: Vertex, was: Class, removed: &mut Vec<Vertex>) {
        if self.b[x as usize] == 2 {
            self.delete_vertex(x, was, removed);
        } else {
            self.reclassify(x, removed);
        }
    }

    /// Adds `e = {v, w}` to `M`, removes it from `Γ` and settles both ends.
    fn take(&mut self, v: Vertex, w: Vertex, e: EdgeId, removed: &mut Vec<Vertex>) -> bool {
        let (cv, cw) = (self.class[v as usize], self.class[w as usize]);
        let (ev, ew) = (self.other_end[v as usize], self.other_end[w as usize]);
        let closes = ev == w;
        if !closes {
            self.other_end[ev as usize] = ew;
            self.other_end[ew as usize] = ev;
        }
        self.kill_edge(e);
        self.matching.push(e);
        self.b[v as usize] += 1;
        self.b[w as usize] += 1;
        self.settle(v, cv, removed);
        self.settle(w, cw, removed);
        closes
    }

    /// Runs one step; `None` once the Step-3 condition holds.
    pub fn step(&mut self) -> Result<Option<StepRecord>, GreedyError> {
        let kind = self.select_step();
        let bucket = match kind {
            StepKind::S1a => Bucket::Y1,
            StepKind::S1b => Bucket::Y2,
            StepKind::S1c => Bucket::Z1,
            StepKind::S2 => Bucket::Y,
            StepKind::Done => return Ok(None),
        };
        let (v, mut e) = self.first_edge_for_bucket(bucket)?;
        self.t += 1;
        let mut removed = Vec::new();
        let mut w = self.g.opposite(e, v);
        if kind == StepKind::S1b {
            let mut arcs = self.alive_arcs(v);
            let a1 = arcs.next().expect("Y2 vertex has two alive edges");
            let a2 = arcs.next().expect("Y2 vertex has two alive edges");
            drop(arcs);
            let pick = if self.coin.random_bool(0.5) { a2 } else { a1 };
            w = pick.to;
            e = pick.edge;
        }
        let closed = self.take(v, w, e, &mut removed);
        if closed {
            self.closed_cycles += 1;
        }
        self.kinds.push(kind.code());
        match kind {
            StepKind::S1a => self.step_counts.s1a += 1,
            StepKind::S1b => self.step_counts.s1b += 1,
            StepKind::S1c => self.step_counts.s1c += 1,
            StepKind::S2 => self.step_counts.s2 += 1,
            StepKind::Done => {}
        }
        let rec = StepRecord {
            t: self.t,
            kind,
            vertex: v,
            edge: e,
            sizes: self.sizes(),
            mu: self.mu,
            closed_cycle: closed,
        };
        if let Some(tr) = &mut self.trace {
            tr.removed_start.push(tr.removed.len() as u32);
            tr.removed.extend_from_slice(&removed);
            tr.records.push(rec);
        }
        Ok(Some(rec))
    }

    /// Recomputes every class from `(degree, b)` and compares with the
    /// incremental state. Returns the first mismatching vertex.
    pub fn check_buckets(&self) -> Result<(), Vertex> {
        let mut counts = [0u32; 8];
        for v in 0..self.g.n() as Vertex {
            let alive = self
                .g
                .neighbors(v)
                .iter()
                .filter(|a| self.edge_death[a.edge as usize] == NONE)
                .count() as u32;
            if alive != self.deg[v as usize] {
                return Err(v);
            }
            let want = Class::of(alive, self.b[v as usize]);
            if want != self.class[v as usize] {
                return Err(v);
            }
            counts[want.index()] += 1;
        }
        if counts != self.counts {
            return Err(NONE);
        }
        Ok(())
    }

    pub fn run(mut self) -> Result<GreedyOutcome, GreedyError> {
        while self.step()?.is_some() {}
        Ok(self.finish())
    }

    pub fn finish(self) -> GreedyOutcome {
        GreedyOutcome {
            n: self.g.n(),
            matching: self.matching,
            b: self.b,
            removed_at: self.removed_at,
            witness: self.witness,
            regular: self.regular,
            edge_death: self.edge_death,
            kinds: self.kinds,
            steps: self.t,
            step_counts: self.step_counts,
            y0: self.y0,
            closed_cycles: self.closed_cycles,
            trace: self.trace,
        }
    }
}

/// Runs 2GREEDY to the Step-3 condition.
pub fn run_two_greedy<R: Rng>(
    g: &Graph,
    cfg: &GreedyConfig,
    coin: R,
) -> Result<GreedyOutcome, GreedyError> {
    TwoGreedy::new(g, coin, cfg).run()
}

/// Reference lookup: the alive edge of least index touching any of `members`,
/// with the member it certifies (smaller id when both ends qualify).
pub fn first_edge_in_sigma(
    g: &Graph,
    alive: impl Fn(EdgeId) -> bool,
    members: &[Vertex],
) -> Option<(Vertex, EdgeId)> {
    let mut is_member = vec![false; g.n()];
    for &v in members {
        is_member[v as usize] = true;
    }
    (0..g.m() as EdgeId).filter(|&e| alive(e)).find_map(|e| {
        let [u, v] = g.edge(e);
        match (is_member[u as usize], is_member[v as usize]) {
            (true, true) => Some((u.min(v), e)),
            (true, false) => Some((u, e)),
            (false, true) => Some((v, e)),
            _ => None,
        }
    })
}

/// `ε = K (ln ln n)² / ln n`.
pub fn epsilon(n: usize, k: f64) -> f64 {
    let ln = (n as f64).ln();
    k * ln.ln().powi(2) / ln
}

/// Regular vertices, their witnesses, and the early/punctual cutoffs.
#[derive(Clone, Debug, Serialize)]
pub struct WitnessLedger {
    pub regular: Vec<Vertex>,
    pub witness: Vec<(Vertex, EdgeId)>,
    pub alpha: f64,
    pub k: f64,
    pub epsilon: f64,
    /// A vertex is early if removed at a step `≤ early_cutoff`.
    pub early_cutoff: f64,
    /// An edge with 1-based index `≤ punctual_cutoff` is punctual.
    pub punctual_cutoff: f64,
}

impl WitnessLedger {
    pub fn new(out: &GreedyOutcome, m: usize, alpha: f64, k: f64) -> Self {
        let eps = epsilon(out.n, k);
        let witness = out.witness_pairs();
        WitnessLedger {
            regular: witness.iter().map(|&(v, _)| v).collect(),
            witness,
            alpha,
            k,
            epsilon: eps,
            early_cutoff: (out.n as f64).powf(1.0 - eps),
            punctual_cutoff: (1.0 - alpha) * m as f64,
        }
    }

    pub fn is_early(&self, removed_at: u32) -> bool {
        removed_at != NONE && removed_at as f64 <= self.early_cutoff
    }

    pub fn is_punctual(&self, e: EdgeId) -> bool {
        (e as f64 + 1.0) <= self.punctual_cutoff
    }
}
