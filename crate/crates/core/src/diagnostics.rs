//! Empirical probes of the quantities the analysis relies on.

use std::collections::{HashSet, VecDeque};

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::graph::{EdgeId, Graph, Vertex, NONE};
use crate::greedy::{run_two_greedy, GreedyConfig, GreedyOutcome, StepKind, StepTrace, WitnessLedger};
use crate::model::f_trunc;
use crate::rng::{StreamRng, COIN_STREAM};
use crate::rotate::{level_threshold, LevelStat};

#[derive(Debug, Error, PartialEq)]
pub enum DiagnosticsError {
    #[error("closure for lambda has no solution at t = {t} (y = {y}, z = {z}, mu = {mu})")]
    ClosureFailure { t: f64, y: f64, z: f64, mu: f64 },
    #[error("no tardy R0:Lambda0 edge")]
    NoTardyEdge,
    #[error("the 2GREEDY run was not traced")]
    NoTrace,
}

// ---------------------------------------------------------------- ODE

#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct OdeState {
    pub t: f64,
    pub y: f64,
    pub z: f64,
    pub mu: f64,
    pub lambda: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    /// `θ_a, θ_b, θ_c, θ_2`.
    pub theta: [f64; 4],
}

impl OdeState {
    pub fn theta_sum(&self) -> f64 {
        self.theta.iter().sum()
    }
}

/// Solves `y·λf₂/f₃ + z·λf₁/f₂ = 2μ` for `λ` by bisection.
pub fn closure_lambda(y: f64, z: f64, mu: f64) -> Option<f64> {
    let g = |l: f64| {
        let mut s = 0.0;
        if y > 0.0 {
            s += y * l * f_trunc(2, l) / f_trunc(3, l);
        }
        if z > 0.0 {
            s += z * l * f_trunc(1, l) / f_trunc(2, l);
        }
        s
    };
    let target = 2.0 * mu;
    // the left side decreases to 3y + 2z as λ → 0
    if !(target > 3.0 * y + 2.0 * z) || y + z <= 0.0 {
        return None;
    }
    let mut lo = 1e-9;
    let mut hi = 1.0;
    while g(hi) < target {
        hi *= 2.0;
        if hi > 700.0 {
            return None;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    Some(0.5 * (lo + hi))
}

fn rates(t: f64, y: f64, z: f64, mu: f64) -> Result<OdeState, DiagnosticsError> {
    let l = closure_lambda(y, z, mu).ok_or(DiagnosticsError::ClosureFailure { t, y, z, mu })?;
    let f0 = l.exp();
    let (f2, f3) = (f_trunc(2, l), f_trunc(3, l));
    let a = y * z * l.powi(5) * f0 / (8.0 * mu * mu * f2 * f3);
    let b = z * z * l.powi(4) * f0 / (4.0 * mu * mu * f2 * f2);
    let c = y * l * f2 / (2.0 * mu * f3);
    let d = z * l * l * f0 / (2.0 * mu * f2);
    let (ta, tb, tc) = (0.0, a, a + b);
    Ok(OdeState {
        t,
        y,
        z,
        mu,
        lambda: l,
        a,
        b,
        c,
        d,
        theta: [ta, tb, tc, 1.0 - ta - tb - tc],
    })
}

fn deriv(s: &OdeState) -> [f64; 3] {
    [
        s.a + s.b - s.c - 1.0,
        2.0 * s.c - 2.0 * s.a - 2.0 * s.b,
        -1.0 - s.d,
    ]
}

/// RK4 from `(n, 0, cn)` with step `dt`, keeping every `stride`-th state.
pub fn ode_integrate(
    c: f64,
    n: usize,
    horizon: f64,
    dt: f64,
    stride: usize,
) -> Result<Vec<OdeState>, DiagnosticsError> {
    let stride = stride.max(1);
    let mut s = rates(0.0, n as f64, 0.0, c * n as f64)?;
    let mut out = vec![s];
    let steps = (horizon / dt).ceil() as usize;
    for i in 1..=steps {
        let h = dt.min(horizon - s.t);
        let at = |s0: &OdeState, k: [f64; 3], f: f64| {
            rates(
                s0.t + f * h,
                s0.y + f * h * k[0],
                s0.z + f * h * k[1],
                s0.mu + f * h * k[2],
            )
        };
        let k1 = deriv(&s);
        let k2 = deriv(&at(&s, k1, 0.5)?);
        let k3 = deriv(&at(&s, k2, 0.5)?);
        let k4 = deriv(&at(&s, k3, 1.0)?);
        let mut nx = [s.y, s.z, s.mu];
        for j in 0..3 {
            nx[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        s = rates(s.t + h, nx[0], nx[1], nx[2])?;
        if i % stride == 0 || i == steps {
            out.push(s);
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub y: f64,
    pub z: f64,
    pub mu: f64,
}

/// `(|Y|, |Z|, |E(Γ)|)` after every traced step, starting at `t = 0`.
pub fn observed_trajectory(trace: &StepTrace, n: usize, m: usize) -> Vec<TrajectoryPoint> {
    let mut v = vec![TrajectoryPoint {
        t: 0.0,
        y: n as f64,
        z: 0.0,
        mu: m as f64,
    }];
    v.extend(trace.records.iter().map(|r| TrajectoryPoint {
        t: r.t as f64,
        y: (r.sizes.y1 + r.sizes.y2 + r.sizes.y) as f64,
        z: (r.sizes.z1 + r.sizes.z) as f64,
        mu: r.mu as f64,
    }));
    v
}

pub fn ode_points(traj: &[OdeState]) -> Vec<TrajectoryPoint> {
    traj.iter()
        .map(|s| TrajectoryPoint {
            t: s.t,
            y: s.y,
            z: s.z,
            mu: s.mu,
        })
        .collect()
}

/// L1 distance at each predicted time inside the observed range, with linear
/// interpolation of the observations.
pub fn compare_trajectory(observed: &[TrajectoryPoint], predicted: &[TrajectoryPoint]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut j = 0;
    for p in predicted {
        while j + 1 < observed.len() && observed[j + 1].t < p.t {
            j += 1;
        }
        if observed.is_empty() || p.t < observed[0].t || p.t > observed[observed.len() - 1].t {
            continue;
        }
        let a = observed[j];
        let o = if a.t >= p.t || j + 1 >= observed.len() {
            a
        } else {
            let b = observed[j + 1];
            let f = (p.t - a.t) / (b.t - a.t);
            TrajectoryPoint {
                t: p.t,
                y: a.y + f * (b.y - a.y),
                z: a.z + f * (b.z - a.z),
                mu: a.mu + f * (b.mu - a.mu),
            }
        };
        out.push((p.t, (o.y - p.y).abs() + (o.z - p.z).abs() + (o.mu - p.mu).abs()));
    }
    out
}

/// `z(t) / 2t` at `t = ⌊n^0.8⌋`, or `None` if 2GREEDY stopped earlier.
pub fn x1_ratio(trace: &StepTrace, n: usize) -> Option<f64> {
    let t = (n as f64).powf(0.8).floor() as usize;
    let r = trace.records.get(t.checked_sub(1)?)?;
    Some((r.sizes.z1 + r.sizes.z) as f64 / (2.0 * t as f64))
}

// ---------------------------------------------------------------- batches

#[derive(Clone, Copy, Debug, Serialize, PartialEq, Eq)]
pub struct Batch {
    /// Step of the opening Step 2.
    pub start: u32,
    pub span: u32,
    pub vertices: u32,
    pub edges: u32,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct BatchStats {
    pub batches: Vec<Batch>,
    pub max_span: u32,
    pub max_vertices: u32,
    pub span_limit: f64,
    pub vertex_limit: f64,
    pub oversized: usize,
    /// Step-1 records entered with `ζ = 0`, or Step-2 records with `ζ > 0`.
    pub zeta_violations: usize,
}

pub fn zeta(s: &crate::greedy::Sizes) -> u32 {
    s.y1 + 2 * s.y2 + s.z1
}

/// Batches are the Step-1 runs between consecutive Step-2 records.
pub fn batch_stats(out: &GreedyOutcome, scale: f64) -> Result<BatchStats, DiagnosticsError> {
    let trace = out.trace.as_ref().ok_or(DiagnosticsError::NoTrace)?;
    let ln = (out.n.max(3) as f64).ln();
    let mut st = BatchStats {
        span_limit: scale * ln * ln,
        vertex_limit: scale * ln * ln * ln,
        ..Default::default()
    };
    let mut deaths = vec![0u32; trace.len() + 2];
    for &t in &out.edge_death {
        if t != NONE && (t as usize) < deaths.len() {
            deaths[t as usize] += 1;
        }
    }
    for (i, r) in trace.records.iter().enumerate() {
        let z = if i == 0 { 0 } else { zeta(&trace.records[i - 1].sizes) };
        match r.kind {
            StepKind::S2 if z != 0 => st.zeta_violations += 1,
            k if k.is_step1() && z == 0 => st.zeta_violations += 1,
            _ => {}
        }
    }
    let s2 = trace.step2_indices();
    for w in s2.windows(2) {
        let (i, j) = (w[0], w[1]);
        let vertices = (i + 1..j).map(|k| trace.removed(k).len() as u32).sum();
        let edges = (i + 1..j).map(|k| deaths[trace.records[k].t as usize]).sum();
        let b = Batch {
            start: trace.records[i].t,
            span: (j - i - 1) as u32,
            vertices,
            edges,
        };
        st.max_span = st.max_span.max(b.span);
        st.max_vertices = st.max_vertices.max(b.vertices);
        if b.span as f64 > st.span_limit || b.vertices as f64 > st.vertex_limit {
            st.oversized += 1;
        }
        st.batches.push(b);
    }
    Ok(st)
}

// ---------------------------------------------------------------- residual randomness

#[derive(Clone, Debug, Serialize)]
pub struct ResidualLedger {
    pub alpha: f64,
    pub epsilon: f64,
    pub early_cutoff: f64,
    pub punctual_cutoff: f64,
    pub regular: usize,
    pub r0: Vec<Vertex>,
    pub lambda0: usize,
    pub lambda2: usize,
    pub lambda3: usize,
    pub tardy_r0_lambda0: Vec<EdgeId>,
    #[serde(skip)]
    pub in_r0: Vec<bool>,
    #[serde(skip)]
    pub in_lambda0: Vec<bool>,
}

pub fn ledger_build(g: &Graph, out: &GreedyOutcome, alpha: f64, k: f64) -> ResidualLedger {
    let n = g.n();
    let w = WitnessLedger::new(out, g.m(), alpha, k);
    let t0 = w.early_cutoff.floor() as u32;
    let mut in_r0 = vec![false; n];
    let mut r0 = Vec::new();
    for &(v, e) in &w.witness {
        if w.is_early(out.removed_at[v as usize]) && w.is_punctual(e) {
            in_r0[v as usize] = true;
            r0.push(v);
        }
    }
    let mut deg_t0 = vec![0u32; n];
    let mut step1_losses = vec![0u32; n];
    for (e, &[u, v]) in g.edges().iter().enumerate() {
        let d = out.edge_death[e];
        if d == NONE || d > t0 {
            deg_t0[u as usize] += 1;
            deg_t0[v as usize] += 1;
        } else if out.kind_at(d).is_step1() {
            step1_losses[u as usize] += 1;
            step1_losses[v as usize] += 1;
        }
    }
    let in_lambda0: Vec<bool> = deg_t0.iter().map(|&d| d >= 4).collect();
    let first = (n as f64).powf(1.0 - w.epsilon / 2.0).floor() as usize;
    let mut in_lambda2 = vec![false; n];
    for &[u, v] in g.edges().iter().take(first) {
        in_lambda2[u as usize] = true;
        in_lambda2[v as usize] = true;
    }
    let lambda3 = (0..n)
        .filter(|&v| !in_lambda2[v] && step1_losses[v] >= 24)
        .count();
    let tardy: Vec<EdgeId> = (0..g.m() as EdgeId)
        .filter(|&e| {
            let [u, v] = g.edge(e);
            !w.is_punctual(e)
                && ((in_r0[u as usize] && in_lambda0[v as usize])
                    || (in_r0[v as usize] && in_lambda0[u as usize]))
        })
        .collect();
    ResidualLedger {
        alpha,
        epsilon: w.epsilon,
        early_cutoff: w.early_cutoff,
        punctual_cutoff: w.punctual_cutoff,
        regular: w.regular.len(),
        r0,
        lambda0: in_lambda0.iter().filter(|&&b| b).count(),
        lambda2: in_lambda2.iter().filter(|&&b| b).count(),
        lambda3,
        tardy_r0_lambda0: tardy,
        in_r0,
        in_lambda0,
    }
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct ProbeResult {
    pub edge: [Vertex; 2],
    pub matching_equal: bool,
    pub witness_equal: bool,
}

impl ProbeResult {
    pub fn holds(&self) -> bool {
        self.matching_equal && self.witness_equal
    }
}

fn key(a: Vertex, b: Vertex) -> (Vertex, Vertex) {
    (a.min(b), a.max(b))
}

fn matching_pairs(g: &Graph, out: &GreedyOutcome) -> HashSet<(Vertex, Vertex)> {
    out.matching
        .iter()
        .map(|&e| {
            let [a, b] = g.edge(e);
            key(a, b)
        })
        .collect()
}

fn witness_pairs(g: &Graph, out: &GreedyOutcome) -> HashSet<(Vertex, (Vertex, Vertex))> {
    out.witness_pairs()
        .into_iter()
        .map(|(v, e)| {
            let [a, b] = g.edge(e);
            (v, key(a, b))
        })
        .collect()
}

/// Deletes edge `e`, reruns 2GREEDY with the same coin and compares `M` and `W`.
pub fn deletion_probe(g: &Graph, out: &GreedyOutcome, e: EdgeId, coin_seed: u64) -> ProbeResult {
    let h = g.without_edge(e);
    let cfg = GreedyConfig::default();
    let other = run_two_greedy(&h, &cfg, StreamRng::new(coin_seed, COIN_STREAM))
        .expect("2GREEDY on a subgraph");
    ProbeResult {
        edge: g.edge(e),
        matching_equal: matching_pairs(g, out) == matching_pairs(&h, &other),
        witness_equal: witness_pairs(g, out) == witness_pairs(&h, &other),
    }
}

/// Deletes a uniformly chosen tardy `R₀:Λ₀` edge and checks `M = M'`, `W = W'`.
pub fn invariance_probe<R: Rng + ?Sized>(
    g: &Graph,
    out: &GreedyOutcome,
    ledger: &ResidualLedger,
    coin_seed: u64,
    rng: &mut R,
) -> Result<ProbeResult, DiagnosticsError> {
    if ledger.tardy_r0_lambda0.is_empty() {
        return Err(DiagnosticsError::NoTardyEdge);
    }
    let e = ledger.tardy_r0_lambda0[rng.random_range(0..ledger.tardy_r0_lambda0.len())];
    Ok(deletion_probe(g, out, e, coin_seed))
}

/// Negative control: the same probe on a uniformly chosen punctual edge.
pub fn punctual_probe<R: Rng + ?Sized>(
    g: &Graph,
    out: &GreedyOutcome,
    ledger: &ResidualLedger,
    coin_seed: u64,
    rng: &mut R,
) -> Option<ProbeResult> {
    let cut = ledger.punctual_cutoff.floor() as usize;
    if cut == 0 {
        return None;
    }
    let e = rng.random_range(0..cut.min(g.m())) as EdgeId;
    Some(deletion_probe(g, out, e, coin_seed))
}

// ---------------------------------------------------------------- local density

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct DenseSet {
    pub vertices: Vec<Vertex>,
    pub edges: usize,
}

pub const EXACT_DENSE_MAX: usize = 14;

fn induced_edges(g: &Graph, mask: &[bool], set: &[Vertex]) -> usize {
    set.iter()
        .map(|&v| g.neighbors(v).iter().filter(|a| mask[a.to as usize] && a.to > v).count())
        .sum()
}

/// Sets `S` with `3 ≤ |S| ≤ s_max` spanning at least `|S| + 1` edges. Exact
/// for `n ≤ 14`; otherwise unions of two intersecting short cycles are
/// tried and only the hits are reported.
pub fn dense_set_scan(g: &Graph, s_max: usize) -> (Vec<DenseSet>, bool) {
    let n = g.n();
    let mut found = Vec::new();
    if n <= EXACT_DENSE_MAX {
        let adj: Vec<u32> = (0..n as u32)
            .map(|v| g.neighbors(v).iter().fold(0u32, |m, a| m | (1 << a.to)))
            .collect();
        for s in 1u32..(1 << n) {
            let k = s.count_ones() as usize;
            if k < 3 || k > s_max {
                continue;
            }
            let e: u32 = (0..n).filter(|&v| s >> v & 1 == 1).map(|v| (adj[v] & s).count_ones()).sum::<u32>() / 2;
            if e as usize > k {
                found.push(DenseSet {
                    vertices: (0..n as u32).filter(|&v| s >> v & 1 == 1).collect(),
                    edges: e as usize,
                });
            }
        }
        return (found, true);
    }
    let cycles = short_cycles(g, (s_max / 2).max(2), 4096);
    let mut by_vertex: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, c) in cycles.iter().enumerate() {
        for &v in c {
            by_vertex[v as usize].push(i);
        }
    }
    let mut seen = HashSet::new();
    let mut mask = vec![false; n];
    for list in &by_vertex {
        for (x, &i) in list.iter().enumerate() {
            for &j in &list[x + 1..] {
                let mut set: Vec<Vertex> = cycles[i].iter().chain(&cycles[j]).copied().collect();
                set.sort_unstable();
                set.dedup();
                if set.len() > s_max || !seen.insert(set.clone()) {
                    continue;
                }
                for &v in &set {
                    mask[v as usize] = true;
                }
                let e = induced_edges(g, &mask, &set);
                for &v in &set {
                    mask[v as usize] = false;
                }
                if e > set.len() {
                    found.push(DenseSet { vertices: set, edges: e });
                }
            }
        }
    }
    (found, false)
}

/// Shortest cycle through each vertex of length at most `2·radius`, found
/// by a BFS truncated at `radius` levels or `ball_cap` visited vertices.
fn short_cycles(g: &Graph, radius: usize, ball_cap: usize) -> Vec<Vec<Vertex>> {
    let n = g.n();
    let mut dist = vec![u32::MAX; n];
    let mut parent = vec![NONE; n];
    let mut branch = vec![NONE; n];
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    let mut touched = Vec::new();
    for r in 0..n as Vertex {
        for &v in &touched {
            dist[v as usize] = u32::MAX;
        }
        touched.clear();
        dist[r as usize] = 0;
        touched.push(r);
        let mut q = VecDeque::from([r]);
        let mut best: Option<(u32, Vertex, Vertex)> = None;
        while let Some(x) = q.pop_front() {
            let dx = dist[x as usize];
            if dx as usize >= radius || touched.len() > ball_cap {
                break;
            }
            for a in g.neighbors(x) {
                let y = a.to;
                if y == parent[x as usize] && dx > 0 {
                    continue;
                }
                if dist[y as usize] == u32::MAX {
                    dist[y as usize] = dx + 1;
                    parent[y as usize] = x;
                    branch[y as usize] = if dx == 0 { y } else { branch[x as usize] };
                    touched.push(y);
                    q.push_back(y);
                } else if y != r && branch[y as usize] != branch[x as usize] && dx > 0 {
                    let len = dx + dist[y as usize] + 1;
                    if best.is_none_or(|b| len < b.0) {
                        best = Some((len, x, y));
                    }
                }
            }
        }
        if let Some((_, x, y)) = best {
            let mut left = vec![];
            let mut p = x;
            while p != r {
                left.push(p);
                p = parent[p as usize];
            }
            let mut right = vec![];
            let mut p = y;
            while p != r {
                right.push(p);
                p = parent[p as usize];
            }
            let mut c = vec![r];
            c.extend(left.into_iter().rev());
            c.extend(right);
            let mut k = c.clone();
            k.sort_unstable();
            if seen.insert(k) {
                out.push(c);
            }
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct NearCycleCensus {
    pub ell0: usize,
    pub cycle_vertices: usize,
    pub near: usize,
    /// False if some BFS hit the work cap, making `near` a lower bound.
    pub exact: bool,
}

/// `|W₁|`: vertices within distance `ell0` of a cycle of length `≤ 2·ell0`.
pub fn near_cycle_census(g: &Graph, ell0: usize, ball_cap: usize) -> NearCycleCensus {
    let n = g.n();
    let radius = ell0.max(1);
    let mut on_cycle = vec![false; n];
    let mut exact = true;
    let mut dist = vec![u32::MAX; n];
    let mut parent = vec![NONE; n];
    let mut branch = vec![NONE; n];
    let mut touched: Vec<Vertex> = Vec::new();
    for r in 0..n as Vertex {
        for &v in &touched {
            dist[v as usize] = u32::MAX;
        }
        touched.clear();
        dist[r as usize] = 0;
        touched.push(r);
        let mut q = VecDeque::from([r]);
        let mut hit = false;
        'bfs: while let Some(x) = q.pop_front() {
            let dx = dist[x as usize];
            if dx as usize >= radius {
                break;
            }
            if touched.len() > ball_cap {
                exact = false;
                break;
            }
            for a in g.neighbors(x) {
                let y = a.to;
                if dx > 0 && y == parent[x as usize] {
                    continue;
                }
                if dist[y as usize] == u32::MAX {
                    dist[y as usize] = dx + 1;
                    parent[y as usize] = x;
                    branch[y as usize] = if dx == 0 { y } else { branch[x as usize] };
                    touched.push(y);
                    q.push_back(y);
                } else if y != r && branch[y as usize] != branch[x as usize] {
                    // the two branches meet: cycle through r of length ≤ 2·radius
                    hit = true;
                    break 'bfs;
                }
            }
        }
        on_cycle[r as usize] = hit;
    }
    let mut d = vec![u32::MAX; n];
    let mut q = VecDeque::new();
    for v in 0..n {
        if on_cycle[v] {
            d[v] = 0;
            q.push_back(v as Vertex);
        }
    }
    while let Some(x) = q.pop_front() {
        if d[x as usize] as usize >= ell0 {
            continue;
        }
        for a in g.neighbors(x) {
            if d[a.to as usize] == u32::MAX {
                d[a.to as usize] = d[x as usize] + 1;
                q.push_back(a.to);
            }
        }
    }
    NearCycleCensus {
        ell0,
        cycle_vertices: on_cycle.iter().filter(|&&b| b).count(),
        near: d.iter().filter(|&&x| x != u32::MAX).count(),
        exact,
    }
}

// ---------------------------------------------------------------- rotation trees

#[derive(Clone, Debug, Default, Serialize)]
pub struct TreeGrowth {
    pub ratios: Vec<f64>,
    pub band: [f64; 2],
    pub inside: usize,
    pub median: Option<f64>,
}

impl TreeGrowth {
    pub fn fraction_inside(&self) -> Option<f64> {
        (!self.ratios.is_empty()).then(|| self.inside as f64 / self.ratios.len() as f64)
    }
}

/// `|A_{k+1}| / |C_k|` over complete levels with `L₀ ≤ |C_k| ≤ n^0.6`.
pub fn tree_growth_stats(trees: &[Vec<LevelStat>], n: usize, c: f64, beta: f64) -> TreeGrowth {
    let l0 = level_threshold(n, c) as f64;
    let hi = (n as f64).powf(0.6);
    let band = [2.0 * (1.0 - beta) * c, 2.0 * (1.0 + beta) * c];
    let mut ratios = Vec::new();
    for levels in trees {
        for w in levels.windows(2) {
            let ck = w[0].c as f64;
            if !w[1].complete || w[1].a == 0 || ck < l0 || ck > hi {
                continue;
            }
            ratios.push(w[1].a as f64 / ck);
        }
    }
    let inside = ratios.iter().filter(|&&r| r >= band[0] && r <= band[1]).count();
    let mut sorted = ratios.clone();
    sorted.sort_by(f64::total_cmp);
    TreeGrowth {
        median: (!sorted.is_empty()).then(|| sorted[sorted.len() / 2]),
        ratios,
        band,
        inside,
    }
}

// ---------------------------------------------------------------- report

#[derive(Clone, Copy, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Warn,
    Error,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: serde_json::Value,
    pub budget: Option<f64>,
    pub status: Status,
}

pub const CHECKS: &[&str] = &[
    "ode", "trajectory", "batch", "ledger", "invariance", "dense", "nearcycle", "trees",
];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::builders;
    use crate::greedy::{Sizes, StepRecord};
    use crate::model::solve_lambda;

    #[test]
    fn ode_initial_rates() {
        let traj = ode_integrate(20.0, 10_000, 100.0, 1.0, 1).unwrap();
        let s0 = traj[0];
        assert_eq!((s0.a, s0.b, s0.d), (0.0, 0.0, 0.0));
        assert!((s0.c - 1.0).abs() < 1e-9);
        assert_eq!(s0.theta[3], 1.0);
        let d = deriv(&s0);
        assert!((d[1] - 2.0 * s0.c).abs() < 1e-12 && d[1] >= 0.0);
        assert_eq!(d[2], -1.0);
        let l = solve_lambda(20.0, 1e-13).unwrap();
        assert!((s0.lambda - l).abs() < 1e-8 * l);
        for s in &traj {
            assert!((s.theta_sum() - 1.0).abs() <= 1e-12);
            assert!(s.y >= 0.0 && s.z >= 0.0 && s.mu >= 0.0);
        }
        // early on z grows by about 2 per step
        let last = traj.last().unwrap();
        assert!((last.z / (2.0 * last.t) - 1.0).abs() < 0.05);
    }

    #[test]
    fn closure_failure() {
        assert!(closure_lambda(10.0, 0.0, 14.0).is_none());
        assert!(closure_lambda(10.0, 0.0, 16.0).is_some());
    }

    #[test]
    fn trajectory_self_distance_is_zero() {
        let g = builders::complete(8);
        let out = run_two_greedy(&g, &GreedyConfig { record_trace: true }, StreamRng::new(1, 1)).unwrap();
        let obs = observed_trajectory(out.trace.as_ref().unwrap(), 8, g.m());
        assert!(compare_trajectory(&obs, &obs).iter().all(|&(_, d)| d == 0.0));
    }

    fn rec(t: u32, kind: StepKind, sizes: Sizes) -> StepRecord {
        StepRecord {
            t,
            kind,
            vertex: 0,
            edge: 0,
            sizes,
            mu: 0,
            closed_cycle: false,
        }
    }

    #[test]
    fn batches_on_a_synthetic_trace() {
        let z1 = Sizes { z1: 1, ..Default::default() };
        let z0 = Sizes::default();
        let records = vec![
            rec(1, StepKind::S2, z1),
            rec(2, StepKind::S1a, z1),
            rec(3, StepKind::S1a, z0),
            rec(4, StepKind::S2, z0),
            rec(5, StepKind::S2, z0),
        ];
        let trace = StepTrace::from_records(records);
        let out = GreedyOutcome {
            n: 10,
            matching: vec![],
            b: vec![],
            removed_at: vec![],
            witness: vec![],
            regular: vec![],
            edge_death: vec![2, 3, 3, NONE],
            kinds: vec![3, 0, 0, 3, 3],
            steps: 5,
            step_counts: Default::default(),
            y0: vec![],
            closed_cycles: 0,
            trace: Some(trace),
        };
        let st = batch_stats(&out, 10.0).unwrap();
        assert_eq!(st.batches.len(), 2);
        assert_eq!((st.batches[0].span, st.batches[0].edges), (2, 3));
        assert_eq!(st.batches[1].span, 0);
        assert_eq!(st.zeta_violations, 0);
    }

    #[test]
    fn zeta_drift_on_real_runs() {
        let mut rng = StreamRng::new(3, 0);
        for _ in 0..5 {
            let g = crate::model::sample_graph(3000, 5.0, &mut rng).unwrap();
            let out = run_two_greedy(&g, &GreedyConfig { record_trace: true }, StreamRng::new(3, 1)).unwrap();
            let st = batch_stats(&out, 10.0).unwrap();
            assert_eq!(st.zeta_violations, 0);
            assert!(!st.batches.is_empty());
        }
    }

    #[test]
    fn ledger_definitions() {
        let mut rng = StreamRng::new(11, 0);
        let g = crate::model::sample_graph(5000, 10.0, &mut rng).unwrap();
        let out = run_two_greedy(&g, &GreedyConfig::default(), StreamRng::new(11, 1)).unwrap();
        let l = ledger_build(&g, &out, 0.1, 1.0);
        let w = WitnessLedger::new(&out, g.m(), 0.1, 1.0);
        for &v in &l.r0 {
            assert!(out.regular[v as usize]);
            assert!(out.removed_at[v as usize] as f64 <= l.early_cutoff);
            assert!(w.is_punctual(out.witness[v as usize]));
        }
        for &e in &l.tardy_r0_lambda0 {
            assert!(!w.is_punctual(e));
        }
        assert!(!l.r0.is_empty());
    }

    #[test]
    fn invariance_probe_no_tardy() {
        let g = builders::complete(5);
        let out = run_two_greedy(&g, &GreedyConfig::default(), StreamRng::new(0, 1)).unwrap();
        let mut l = ledger_build(&g, &out, 0.1, 1.0);
        l.tardy_r0_lambda0.clear();
        let mut rng = StreamRng::new(0, 4);
        assert_eq!(
            invariance_probe(&g, &out, &l, 0, &mut rng).err(),
            Some(DiagnosticsError::NoTardyEdge)
        );
    }

    fn naive_dense(g: &Graph, s_max: usize) -> usize {
        let n = g.n();
        (1u32..1 << n)
            .filter(|s| {
                let k = s.count_ones() as usize;
                let e = g
                    .edges()
                    .iter()
                    .filter(|&&[u, v]| s >> u & 1 == 1 && s >> v & 1 == 1)
                    .count();
                (3..=s_max).contains(&k) && e > k
            })
            .count()
    }

    #[test]
    fn dense_scan_examples() {
        let (v, exact) = dense_set_scan(&builders::complete(4), 4);
        assert!(exact);
        assert_eq!(v, vec![DenseSet { vertices: vec![0, 1, 2, 3], edges: 6 }]);
        assert!(dense_set_scan(&builders::path(7), 7).0.is_empty());
        assert!(dense_set_scan(&builders::star(6), 7).0.is_empty());
        assert!(dense_set_scan(&builders::cycle(5), 5).0.is_empty());
        let mut rng = StreamRng::new(2, 9);
        for _ in 0..60 {
            let n = rng.random_range(3..=10);
            let mut edges = Vec::new();
            for u in 0..n as u32 {
                for v in u + 1..n as u32 {
                    if rng.random_bool(0.3) {
                        edges.push([u, v]);
                    }
                }
            }
            let g = Graph::from_edges(n, edges).unwrap();
            let s_max = rng.random_range(3..=n);
            assert_eq!(dense_set_scan(&g, s_max).0.len(), naive_dense(&g, s_max));
        }
        // heuristic mode finds two triangles sharing an edge
        let mut edges: Vec<[u32; 2]> = (0..19).map(|i| [i, i + 1]).collect();
        edges.extend([[0, 2], [1, 3]]);
        let g = Graph::from_edges(20, edges).unwrap();
        let (v, exact) = dense_set_scan(&g, 4);
        assert!(!exact);
        assert!(v.iter().any(|d| d.vertices == vec![0, 1, 2, 3] && d.edges == 5));
    }

    #[test]
    fn near_cycle_examples() {
        assert_eq!(near_cycle_census(&builders::path(9), 3, 1 << 20).near, 0);
        // triangle 0-1-2 with pendant path 2-3-4-5
        let g = Graph::from_edges(8, vec![[0, 1], [1, 2], [2, 0], [2, 3], [3, 4], [4, 5], [5, 6], [6, 7]]).unwrap();
        let c = near_cycle_census(&g, 3, 1 << 20);
        assert_eq!((c.cycle_vertices, c.near), (3, 6));
        assert!(c.exact);
    }

    #[test]
    fn growth_band() {
        let lv = |a, c, complete| LevelStat { a, b: 0, c, complete };
        let t = vec![vec![lv(1, 100, true), lv(4000, 5000, true)], vec![lv(1, 100, true), lv(50, 150, false)]];
        let st = tree_growth_stats(&t, 100_000, 20.0, 0.5);
        assert_eq!(st.ratios, vec![40.0]);
        assert_eq!(st.fraction_inside(), Some(1.0));
    }
}
