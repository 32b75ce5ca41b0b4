//! Random graphs with minimum degree at least three.
//!
//! Degrees are truncated Poisson `Po(λ; ≥3)` conditioned on summing to `2m`,
//! and the graph is the configuration-model pairing of those degrees.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::Serialize;
use thiserror::Error;

use crate::graph::{Graph, GraphError, Vertex, NONE};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("lambda bracket exceeded 8c for c = {c}")]
    NonConvergence { c: f64 },
    #[error("no degree sequence with minimum degree 3 sums to 2m = {two_m} on n = {n} vertices")]
    DegenerateInstance { n: usize, two_m: u64 },
    #[error("gave up after {attempts} attempts: {what}")]
    ResampleLimitExceeded { attempts: usize, what: &'static str },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// `P(Po(x) ≥ j) = e^{-x} f_j(x)`, computed without overflow.
pub fn poisson_tail(j: u32, x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x < 1.0 {
        // series: sum_{k >= j} x^k / k!, no cancellation for small x
        let mut term = 1.0;
        for k in 1..=j {
            term *= x / k as f64;
        }
        let mut sum = 0.0;
        let mut k = j;
        while term > sum * 1e-18 || k == j {
            sum += term;
            k += 1;
            term *= x / k as f64;
            if term == 0.0 {
                break;
            }
        }
        sum * (-x).exp()
    } else {
        let mut head = 0.0;
        let mut term = 1.0;
        for k in 0..j {
            if k > 0 {
                term *= x / k as f64;
            }
            head += term;
        }
        1.0 - head * (-x).exp()
    }
}

/// `f_j(x) = e^x − Σ_{k<j} x^k/k!`.
pub fn f_trunc(j: u32, x: f64) -> f64 {
    assert!(j <= 3 && x >= 0.0, "f_trunc domain is j <= 3, x >= 0");
    if x < 1.0 {
        poisson_tail(j, x) * x.exp()
    } else {
        let mut head = 0.0;
        let mut term = 1.0;
        for k in 0..j {
            if k > 0 {
                term *= x / k as f64;
            }
            head += term;
        }
        x.exp() - head
    }
}

/// Mean of `Po(λ; ≥3)`, i.e. `λ f_2(λ) / f_3(λ)`.
pub fn truncated_mean(lambda: f64) -> f64 {
    lambda * poisson_tail(2, lambda) / poisson_tail(3, lambda)
}

fn truncated_mean_derivative(lambda: f64) -> f64 {
    // f_j' = f_{j-1}; scaled tails share the e^{-λ} factor so it cancels.
    let t1 = poisson_tail(1, lambda);
    let t2 = poisson_tail(2, lambda);
    let t3 = poisson_tail(3, lambda);
    t2 / t3 + lambda * (t1 * t3 - t2 * t2) / (t3 * t3)
}

/// Solves `λ f_2(λ)/f_3(λ) = 2c` for `λ > 0`.
pub fn solve_lambda(c: f64, tol: f64) -> Result<f64, ModelError> {
    if !(2.0 * c > 3.0) || !c.is_finite() {
        return Err(ModelError::InvalidParameter(format!(
            "mean degree 2c = {} must exceed 3",
            2.0 * c
        )));
    }
    let target = 2.0 * c;
    let mut lo = 1e-9;
    let mut hi = c.max(1.0);
    while truncated_mean(hi) < target {
        lo = hi;
        hi *= 2.0;
        if hi > 8.0 * c {
            return Err(ModelError::NonConvergence { c });
        }
    }
    while hi - lo > 1e-10 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if truncated_mean(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..50 {
        let r = truncated_mean(x) - target;
        if r.abs() <= tol * 0.01 {
            break;
        }
        let step = r / truncated_mean_derivative(x);
        let next = x - step;
        if !(next > lo * 0.5 && next < hi * 2.0) {
            break;
        }
        x = next;
        if step.abs() < f64::EPSILON * x {
            break;
        }
    }
    Ok(x)
}

/// Parameters of `G_{n,m}^{δ≥3}` with `m = round(c·n)`.
#[derive(Clone, Debug, Serialize)]
pub struct DegreeModel {
    pub c: f64,
    pub lambda: f64,
    pub n: usize,
    pub m: usize,
}

impl DegreeModel {
    pub fn new(n: usize, c: f64) -> Result<Self, ModelError> {
        if n < 1 {
            return Err(ModelError::InvalidParameter("n must be positive".into()));
        }
        let m = (c * n as f64).round() as usize;
        if 2 * m < 3 * n {
            return Err(ModelError::DegenerateInstance {
                n,
                two_m: 2 * m as u64,
            });
        }
        // exact mean 2m/n; equals 2c up to rounding of m
        let lambda = if 2 * m == 3 * n {
            0.0
        } else {
            solve_lambda(m as f64 / n as f64, 1e-12)?
        };
        Ok(DegreeModel { c, lambda, n, m })
    }

    /// Expected fraction of vertices of degree `k`.
    pub fn pmf(&self, k: u32) -> f64 {
        truncated_poisson_pmf(self.lambda, k)
    }
}

/// `P(Po(λ;≥3) = k) = λ^k / (k! f_3(λ))`.
pub fn truncated_poisson_pmf(lambda: f64, k: u32) -> f64 {
    if k < 3 {
        return 0.0;
    }
    if lambda == 0.0 {
        return if k == 3 { 1.0 } else { 0.0 };
    }
    let ln = k as f64 * lambda.ln() - lambda - ln_factorial(k) - poisson_tail(3, lambda).ln();
    ln.exp()
}

fn ln_factorial(k: u32) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

/// Inverse-CDF sampler for `Po(λ; ≥3)`, truncated where the tail mass drops
/// below `1e-15`.
#[derive(Clone, Debug)]
pub struct TruncatedPoisson {
    lambda: f64,
    /// `pmf[i]` is the probability of degree `3 + i`.
    pmf: Vec<f64>,
    cdf: Vec<f64>,
}

impl TruncatedPoisson {
    pub fn new(lambda: f64) -> Self {
        let mut pmf = Vec::new();
        if lambda == 0.0 {
            pmf.push(1.0);
        } else {
            let mut p = truncated_poisson_pmf(lambda, 3);
            let mut k = 3u32;
            loop {
                pmf.push(p);
                let next = p * lambda / (k + 1) as f64;
                let ratio = lambda / (k + 2) as f64;
                if ratio < 1.0 && next / (1.0 - ratio) < 1e-15 {
                    break;
                }
                p = next;
                k += 1;
            }
        }
        let total: f64 = pmf.iter().sum();
        for p in &mut pmf {
            *p /= total;
        }
        let mut acc = 0.0;
        let cdf = pmf
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        TruncatedPoisson { lambda, pmf, cdf }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn k_max(&self) -> u32 {
        3 + self.pmf.len() as u32 - 1
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let u: f64 = rng.random();
        let i = self.cdf.partition_point(|&c| c < u);
        3 + i.min(self.pmf.len() - 1) as u32
    }

    /// Multinomial counts of each degree among `n` i.i.d. draws.
    fn sample_counts<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<u64> {
        let mut counts = vec![0u64; self.pmf.len()];
        let mut left = n as u64;
        let mut mass = 1.0f64;
        for (i, &p) in self.pmf.iter().enumerate() {
            if left == 0 {
                break;
            }
            if i + 1 == self.pmf.len() || mass <= p {
                counts[i] = left;
                break;
            }
            let q = (p / mass).clamp(0.0, 1.0);
            let draw = Binomial::new(left, q).expect("valid binomial").sample(rng);
            counts[i] = draw;
            left -= draw;
            mass -= p;
        }
        counts
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeSequence {
    pub degrees: Vec<u32>,
}

impl DegreeSequence {
    pub fn new(degrees: Vec<u32>) -> Self {
        DegreeSequence { degrees }
    }

    pub fn sum(&self) -> u64 {
        self.degrees.iter().map(|&d| d as u64).sum()
    }

    pub fn max(&self) -> u32 {
        self.degrees.iter().copied().max().unwrap_or(0)
    }

    pub fn min(&self) -> u32 {
        self.degrees.iter().copied().min().unwrap_or(0)
    }

    /// `counts[k]` = number of vertices of degree `k`.
    pub fn histogram(&self) -> Vec<usize> {
        let mut h = vec![0usize; self.max() as usize + 1];
        for &d in &self.degrees {
            h[d as usize] += 1;
        }
        h
    }
}

/// How a degree sequence was obtained.
#[derive(Clone, Debug, Default, Serialize)]
pub struct DegreeSampleStats {
    pub rejections: usize,
    pub repair_moves: usize,
}

/// Samples i.i.d. `Po(λ;≥3)` degrees conditioned on summing to `2m`.
///
/// Rejection runs on the multinomial degree counts, which carry the same
/// conditional law as whole sequences; the accepted counts are spread over
/// vertices by a uniform shuffle. After `rejection_cap` failures the last draw
/// is repaired by unit moves.
pub fn sample_degrees<R: Rng + ?Sized>(
    model: &DegreeModel,
    rejection_cap: Option<usize>,
    rng: &mut R,
) -> Result<(DegreeSequence, DegreeSampleStats), ModelError> {
    let n = model.n;
    let two_m = 2 * model.m as u64;
    if two_m < 3 * n as u64 {
        return Err(ModelError::DegenerateInstance { n, two_m });
    }
    let dist = TruncatedPoisson::new(model.lambda);
    let cap = rejection_cap.unwrap_or_else(|| (64.0 * (n as f64).sqrt()).ceil() as usize);
    let mut stats = DegreeSampleStats::default();
    let mut counts = dist.sample_counts(n, rng);
    loop {
        let sum: u64 = counts
            .iter()
            .enumerate()
            .map(|(i, &c)| (3 + i as u64) * c)
            .sum();
        if sum == two_m || stats.rejections >= cap {
            break;
        }
        stats.rejections += 1;
        counts = dist.sample_counts(n, rng);
    }
    let mut degrees = Vec::with_capacity(n);
    for (i, &c) in counts.iter().enumerate() {
        degrees.extend(std::iter::repeat_n(3 + i as u32, c as usize));
    }
    degrees.shuffle(rng);
    let mut sum: u64 = degrees.iter().map(|&d| d as u64).sum();
    while sum != two_m {
        let i = rng.random_range(0..n);
        if sum > two_m {
            if degrees[i] > 3 {
                degrees[i] -= 1;
                sum -= 1;
                stats.repair_moves += 1;
            }
        } else {
            degrees[i] += 1;
            sum += 1;
            stats.repair_moves += 1;
        }
    }
    Ok((DegreeSequence::new(degrees), stats))
}

/// Why a configuration pairing was not a simple graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
#[error("pairing is not simple: {loops} loops, {multi} repeated edges")]
pub struct NotSimple {
    pub loops: usize,
    pub multi: usize,
}

/// Uniform random pairing of the configuration points; edge order is pairing order.
fn pair_points<R: Rng + ?Sized>(degrees: &DegreeSequence, rng: &mut R) -> Vec<[Vertex; 2]> {
    let mut points: Vec<Vertex> = Vec::with_capacity(degrees.sum() as usize);
    for (v, &d) in degrees.degrees.iter().enumerate() {
        points.extend(std::iter::repeat_n(v as Vertex, d as usize));
    }
    points.shuffle(rng);
    points.chunks_exact(2).map(|p| [p[0], p[1]]).collect()
}

/// Multigraph with per-vertex incidence lists of edge ids, used to detect and
/// remove loops and repeated edges in place.
struct Multigraph {
    edges: Vec<[Vertex; 2]>,
    offsets: Vec<usize>,
    incid: Vec<u32>,
}

impl Multigraph {
    fn new(n: usize, edges: Vec<[Vertex; 2]>) -> Self {
        let mut deg = vec![0usize; n + 1];
        for &[u, v] in &edges {
            deg[u as usize] += 1;
            deg[v as usize] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for v in 0..n {
            offsets[v + 1] = offsets[v] + deg[v];
        }
        let mut fill = offsets[..n].to_vec();
        let mut incid = vec![0u32; offsets[n]];
        for (e, &[u, v]) in edges.iter().enumerate() {
            incid[fill[u as usize]] = e as u32;
            fill[u as usize] += 1;
            incid[fill[v as usize]] = e as u32;
            fill[v as usize] += 1;
        }
        Multigraph {
            edges,
            offsets,
            incid,
        }
    }

    fn incident(&self, v: Vertex) -> &[u32] {
        &self.incid[self.offsets[v as usize]..self.offsets[v as usize + 1]]
    }

    fn other(&self, e: u32, v: Vertex) -> Vertex {
        let [a, b] = self.edges[e as usize];
        if a == v {
            b
        } else {
            a
        }
    }

    /// Edges between `u` and `x`, ignoring the listed edge ids.
    fn multiplicity(&self, u: Vertex, x: Vertex, skip: [u32; 2]) -> usize {
        self.incident(u)
            .iter()
            .filter(|&&f| !skip.contains(&f) && self.other(f, u) == x)
            .count()
            / if u == x { 2 } else { 1 }
    }

    fn is_bad(&self, e: u32) -> bool {
        let [u, v] = self.edges[e as usize];
        u == v || self.multiplicity(u, v, [NONE, NONE]) > 1
    }

    /// Loops, and every copy of a repeated edge after the first.
    fn defects(&self, n: usize) -> (Vec<u32>, NotSimple) {
        let mut bad = Vec::new();
        let mut loops = 0;
        let mut multi = 0;
        let mut seen = vec![NONE; n];
        for v in 0..n as Vertex {
            for &e in self.incident(v) {
                let w = self.other(e, v);
                if w == v {
                    if self.edges[e as usize][0] == v && !bad.contains(&e) {
                        loops += 1;
                        bad.push(e);
                    }
                    continue;
                }
                if w < v {
                    continue;
                }
                if seen[w as usize] == v {
                    multi += 1;
                    bad.push(e);
                } else {
                    seen[w as usize] = v;
                }
            }
        }
        (bad, NotSimple { loops, multi })
    }

    fn replace_in(&mut self, v: Vertex, old: u32, new: u32) {
        let (a, b) = (self.offsets[v as usize], self.offsets[v as usize + 1]);
        let slot = self.incid[a..b]
            .iter()
            .position(|&f| f == old)
            .expect("edge incident to vertex");
        self.incid[a + slot] = new;
    }

    /// Replaces edges `e = {u, v}` and `j = {x, y}` by `{u, x}` and `{v, y}`.
    fn switch(&mut self, e: u32, j: u32, u: Vertex, v: Vertex, x: Vertex, y: Vertex) {
        self.replace_in(v, e, j);
        self.replace_in(x, j, e);
        self.edges[e as usize] = [u, x];
        self.edges[j as usize] = [v, y];
    }
}

/// Removes loops and repeated edges by random double-edge switchings, keeping
/// every degree fixed.
fn repair_by_switching<R: Rng + ?Sized>(
    n: usize,
    edges: Vec<[Vertex; 2]>,
    attempts_per_defect: usize,
    rng: &mut R,
) -> Result<(Vec<[Vertex; 2]>, usize), ModelError> {
    let mut g = Multigraph::new(n, edges);
    let (mut bad, _) = g.defects(n);
    let m = g.edges.len() as u32;
    let mut switches = 0usize;
    while let Some(e) = bad.pop() {
        if !g.is_bad(e) {
            continue;
        }
        let mut done = false;
        for _ in 0..attempts_per_defect {
            let j = rng.random_range(0..m);
            if j == e {
                continue;
            }
            let [mut u, mut v] = g.edges[e as usize];
            if rng.random_bool(0.5) {
                std::mem::swap(&mut u, &mut v);
            }
            let [mut x, mut y] = g.edges[j as usize];
            if rng.random_bool(0.5) {
                std::mem::swap(&mut x, &mut y);
            }
            if u == x || v == y {
                continue;
            }
            if (u.min(x), u.max(x)) == (v.min(y), v.max(y)) {
                continue;
            }
            if g.multiplicity(u, x, [e, j]) > 0 || g.multiplicity(v, y, [e, j]) > 0 {
                continue;
            }
            g.switch(e, j, u, v, x, y);
            switches += 1;
            done = true;
            break;
        }
        if !done {
            return Err(ModelError::ResampleLimitExceeded {
                attempts: attempts_per_defect,
                what: "switching repair",
            });
        }
        if g.is_bad(e) {
            bad.push(e);
        }
    }
    Ok((g.edges, switches))
}

/// One configuration-model pairing of `degrees`; succeeds only if simple.
pub fn pair_configuration<R: Rng + ?Sized>(
    degrees: &DegreeSequence,
    rng: &mut R,
) -> Result<Graph, NotSimple> {
    assert!(degrees.sum().is_multiple_of(2), "degree sum must be even");
    let n = degrees.degrees.len();
    let edges = pair_points(degrees, rng);
    let mg = Multigraph::new(n, edges);
    let (bad, report) = mg.defects(n);
    if !bad.is_empty() {
        return Err(report);
    }
    Ok(Graph::from_edges(n, mg.edges).expect("checked simple"))
}

/// How loops and repeated edges of a pairing are dealt with.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SimplicityPolicy {
    /// Resample degrees and pairing until simple (exactly uniform).
    Reject,
    /// Pair once, then remove defects by degree-preserving switchings.
    Repair,
    /// Reject when the expected number of attempts is small, else repair.
    Auto,
}

#[derive(Clone, Debug)]
pub struct SampleConfig {
    /// Cap on whole-pairing resamples under rejection.
    pub retry_cap: usize,
    /// Cap on degree-sum rejections; `None` means `64·√n`.
    pub degree_rejection_cap: Option<usize>,
    pub simplicity: SimplicityPolicy,
    pub switch_attempts_per_defect: usize,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig {
            retry_cap: 1000,
            degree_rejection_cap: None,
            simplicity: SimplicityPolicy::Auto,
            switch_attempts_per_defect: 100_000,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct SampleStats {
    pub lambda: f64,
    pub max_degree: u32,
    pub degree_rejections: usize,
    pub degree_repair_moves: usize,
    pub pairing_attempts: usize,
    pub switchings: usize,
    pub repaired: bool,
}

/// `exp(−ν/2 − ν²/4)` with `ν = Σd(d−1)/Σd`: the classical limit of the
/// probability that a pairing is simple.
pub fn estimated_simple_probability(degrees: &DegreeSequence) -> f64 {
    let s: f64 = degrees.degrees.iter().map(|&d| d as f64).sum();
    if s == 0.0 {
        return 1.0;
    }
    let s2: f64 = degrees
        .degrees
        .iter()
        .map(|&d| d as f64 * (d as f64 - 1.0))
        .sum();
    let nu = s2 / s;
    (-nu / 2.0 - nu * nu / 4.0).exp()
}

/// Samples `G_{n,m}^{δ≥3}` with `m = round(c·n)` and a uniformly random edge order.
pub fn sample_graph<R: Rng + ?Sized>(n: usize, c: f64, rng: &mut R) -> Result<Graph, ModelError> {
    sample_graph_with(n, c, &SampleConfig::default(), rng).map(|(g, _)| g)
}

pub fn sample_graph_with<R: Rng + ?Sized>(
    n: usize,
    c: f64,
    cfg: &SampleConfig,
    rng: &mut R,
) -> Result<(Graph, SampleStats), ModelError> {
    if n < 4 {
        return Err(ModelError::InvalidParameter(format!("n = {n} must be at least 4")));
    }
    let model = DegreeModel::new(n, c)?;
    let mut stats = SampleStats {
        lambda: model.lambda,
        ..Default::default()
    };
    let mut edges = None;
    while edges.is_none() {
        if stats.pairing_attempts >= cfg.retry_cap {
            return Err(ModelError::ResampleLimitExceeded {
                attempts: stats.pairing_attempts,
                what: "simple pairing",
            });
        }
        let (degrees, dstats) = sample_degrees(&model, cfg.degree_rejection_cap, rng)?;
        stats.degree_rejections += dstats.rejections;
        stats.degree_repair_moves += dstats.repair_moves;
        stats.max_degree = degrees.max();
        stats.pairing_attempts += 1;
        if degrees.max() as usize >= n {
            continue;
        }
        let repair = match cfg.simplicity {
            SimplicityPolicy::Reject => false,
            SimplicityPolicy::Repair => true,
            SimplicityPolicy::Auto => {
                let p = estimated_simple_probability(&degrees);
                p * (cfg.retry_cap as f64 / 10.0) < 1.0
            }
        };
        let raw = pair_points(&degrees, rng);
        if repair {
            // a stuck repair means a hard degree sequence; draw a new one
            if let Ok((fixed, switches)) = repair_by_switching(n, raw, cfg.switch_attempts_per_defect, rng) {
                stats.switchings = switches;
                stats.repaired = true;
                edges = Some(fixed);
            }
        } else {
            let mg = Multigraph::new(n, raw);
            let (bad, _) = mg.defects(n);
            if bad.is_empty() {
                edges = Some(mg.edges);
            }
        }
    }
    let mut edges = edges.unwrap();
    edges.shuffle(rng);
    Ok((Graph::from_edges(n, edges)?, stats))
}
