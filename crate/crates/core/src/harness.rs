//! Batch drivers shared by the command line and the acceptance suite.

use std::io::{self, Write};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;

use rand::SeedableRng;
use serde::Serialize;

use crate::diagnostics::{self as diag, Check, Status};
use crate::graph::Graph;
use crate::greedy::{run_two_greedy, GreedyConfig};
use crate::matching::complete_two_matching;
use crate::pipeline::{run_on_graph, run_sampled, sample, PipelineConfig, PipelineError};
use crate::rng::{StreamRng, COIN_STREAM, DIAGNOSTICS_STREAM};
use crate::rotate::{er_loop, ErOutcome};
use crate::verify::{check_hamilton, oracle_hamiltonian};

/// Worker count: `HAMDS3_THREADS` if set, else the available parallelism.
pub fn threads() -> usize {
    std::env::var("HAMDS3_THREADS")
        .ok()
        .and_then(|s| s.parse().ok())
        .filter(|&t: &usize| t > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Applies `f` to every job on a bounded pool; results come back in job order.
pub fn parallel_map<I, T, F>(jobs: &[I], workers: usize, f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync,
{
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel();
    let mut out: Vec<Option<T>> = (0..jobs.len()).map(|_| None).collect();
    std::thread::scope(|s| {
        for _ in 0..workers.clamp(1, jobs.len().max(1)) {
            let tx = tx.clone();
            let (next, f) = (&next, &f);
            s.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= jobs.len() {
                    break;
                }
                if tx.send((i, f(&jobs[i]))).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for (i, t) in rx {
            out[i] = Some(t);
        }
    });
    out.into_iter().map(|t| t.expect("every job reports")).collect()
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub seed: u64,
    pub success: bool,
    pub ms_total: f64,
    pub ms_2greedy: f64,
    pub ms_er: f64,
    pub components: usize,
    pub er3_count: u32,
}

pub const BENCH_HEADER: &str = "n,seed,success,ms_total,ms_2greedy,ms_er,components,er3_count";

impl BenchRow {
    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{:.3},{:.3},{:.3},{},{}",
            self.n,
            self.seed,
            self.success,
            self.ms_total,
            self.ms_2greedy,
            self.ms_er,
            self.components,
            self.er3_count
        )
    }
}

/// One row per `(n, seed)`. A failed sample becomes an unsuccessful row.
pub fn bench(ns: &[usize], c: f64, seeds: &[u64], cfg: &PipelineConfig, warmup: bool, workers: usize) -> Vec<BenchRow> {
    if warmup {
        if let Some(&n) = ns.iter().min() {
            let _ = run_sampled(n, c, u64::MAX, cfg);
        }
    }
    let jobs: Vec<(usize, u64)> = ns.iter().flat_map(|&n| seeds.iter().map(move |&s| (n, s))).collect();
    parallel_map(&jobs, workers, |&(n, seed)| match run_sampled(n, c, seed, cfg) {
        Ok((_, run)) => {
            let r = run.report;
            BenchRow {
                n,
                seed,
                success: r.success,
                ms_total: r.timings.total_ms,
                ms_2greedy: r.timings.greedy_ms,
                ms_er: r.timings.er_ms,
                components: r.components_fused,
                er3_count: r.er3_count,
            }
        }
        Err(_) => BenchRow {
            n,
            seed,
            success: false,
            ms_total: 0.0,
            ms_2greedy: 0.0,
            ms_er: 0.0,
            components: 0,
            er3_count: 0,
        },
    })
}

pub fn median(xs: &mut [f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(f64::total_cmp);
    let k = xs.len();
    Some(if k % 2 == 1 { xs[k / 2] } else { 0.5 * (xs[k / 2 - 1] + xs[k / 2]) })
}

/// Median `ms_total` per `n`, ascending in `n`.
pub fn median_times(rows: &[BenchRow]) -> Vec<(usize, f64)> {
    let mut ns: Vec<usize> = rows.iter().map(|r| r.n).collect();
    ns.sort_unstable();
    ns.dedup();
    ns.into_iter()
        .filter_map(|n| {
            let mut t: Vec<f64> = rows.iter().filter(|r| r.n == n).map(|r| r.ms_total).collect();
            median(&mut t).map(|m| (n, m))
        })
        .collect()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(usize, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.1 > 0.0)
        .map(|&(x, y)| ((x as f64).ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn write_bench_csv<W: Write>(mut w: W, rows: &[BenchRow]) -> io::Result<()> {
    writeln!(w, "{BENCH_HEADER}")?;
    for r in rows {
        writeln!(w, "{}", r.csv())?;
    }
    let med = median_times(rows);
    if med.len() >= 3 {
        if let Some(s) = loglog_slope(&med) {
            writeln!(w, "# slope,{s:.4}")?;
        }
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleRow {
    pub index: usize,
    pub n: usize,
    pub seed: u64,
    pub success: bool,
    pub verified: bool,
    pub hamiltonian: bool,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct OracleTable {
    pub rows: Vec<OracleRow>,
    /// `[success][hamiltonian]`.
    pub cells: [[usize; 2]; 2],
    pub sample_failures: usize,
}

impl OracleTable {
    pub fn unsound(&self) -> usize {
        self.cells[1][0] + self.rows.iter().filter(|r| r.success && !r.verified).count()
    }
}

/// Instance `i` has `n = n_min + i mod (n_max − n_min + 1)`. A sample that
/// fails is redrawn from the next seed, up to 100 times.
pub fn oracle_compare(count: usize, n_min: usize, n_max: usize, c: f64, seed: u64, cfg: &PipelineConfig) -> OracleTable {
    let mut t = OracleTable::default();
    let span = n_max - n_min + 1;
    for i in 0..count {
        let n = n_min + i % span;
        let base = seed.wrapping_mul(1_000_003).wrapping_add(i as u64 * 100);
        let mut drawn = None;
        for k in 0..100 {
            match sample(n, c, base + k, cfg) {
                Ok((g, _, _)) => {
                    drawn = Some((g, base + k));
                    break;
                }
                Err(_) => t.sample_failures += 1,
            }
        }
        let Some((g, s)) = drawn else { continue };
        let (success, verified) = match run_on_graph(&g, s, cfg) {
            Ok(run) => {
                let v = run.cycle.as_ref().is_some_and(|c| check_hamilton(&g, c));
                (run.cycle.is_some(), v)
            }
            Err(PipelineError::BadCycle) => (true, false),
            Err(_) => (false, false),
        };
        let hamiltonian = oracle_hamiltonian(&g).unwrap_or(false);
        t.cells[success as usize][hamiltonian as usize] += 1;
        t.rows.push(OracleRow {
            index: i,
            n,
            seed: s,
            success,
            verified,
            hamiltonian,
        });
    }
    t
}

#[derive(Clone, Debug)]
pub struct DiagConfig {
    pub alpha: f64,
    pub k: f64,
    pub beta: f64,
    pub batch_scale: f64,
    pub ode_dt: f64,
    pub dense_s_max: usize,
    pub ball_cap: usize,
}

impl Default for DiagConfig {
    fn default() -> Self {
        DiagConfig {
            alpha: 0.1,
            k: 1.0,
            beta: 0.5,
            batch_scale: 10.0,
            ode_dt: 1.0,
            dense_s_max: 8,
            ball_cap: 4096,
        }
    }
}

fn check(name: &str, value: impl Serialize, budget: Option<f64>, status: Status) -> Check {
    Check {
        name: name.into(),
        value: serde_json::to_value(value).unwrap_or(serde_json::Value::Null),
        budget,
        status,
    }
}

fn error_check(name: &str, e: impl std::fmt::Display) -> Check {
    check(name, e.to_string(), None, Status::Error)
}

/// Runs the named checks on one instance; a failing check does not stop the others.
pub fn diagnose(g: &Graph, seed: u64, checks: &[&str], cfg: &PipelineConfig, dc: &DiagConfig) -> Vec<Check> {
    let n = g.n();
    let c = g.m() as f64 / n as f64;
    let mut out = Vec::new();
    let greedy = match run_two_greedy(g, &GreedyConfig { record_trace: true }, StreamRng::new(seed, COIN_STREAM)) {
        Ok(o) => o,
        Err(e) => return checks.iter().map(|k| error_check(k, &e)).collect(),
    };
    let trace = greedy.trace.as_ref().expect("traced");
    let ledger = diag::ledger_build(g, &greedy, dc.alpha, dc.k);
    for &name in checks {
        let item = match name {
            "ode" => {
                let horizon = (n as f64).powf(0.8).min(greedy.steps as f64);
                match diag::ode_integrate(c, n, horizon, dc.ode_dt, 100) {
                    Ok(tr) => {
                        let worst = tr.iter().map(|s| (s.theta_sum() - 1.0).abs()).fold(0.0, f64::max);
                        let st = if worst <= 1e-12 { Status::Pass } else { Status::Warn };
                        check(name, serde_json::json!({"points": tr.len(), "max_theta_error": worst, "last": tr.last()}), Some(1e-12), st)
                    }
                    Err(e) => error_check(name, e),
                }
            }
            "trajectory" => {
                let horizon = greedy.steps as f64;
                match diag::ode_integrate(c, n, horizon, dc.ode_dt.max(horizon / 20_000.0), 10) {
                    Ok(tr) => {
                        let obs = diag::observed_trajectory(trace, n, g.m());
                        let d = diag::compare_trajectory(&obs, &diag::ode_points(&tr));
                        let max = d.iter().map(|p| p.1).fold(0.0, f64::max);
                        let budget = (n as f64).powf(0.95);
                        let x1 = diag::x1_ratio(trace, n);
                        let st = if max <= budget && x1.is_some_and(|x| (0.85..=1.15).contains(&x)) {
                            Status::Pass
                        } else {
                            Status::Warn
                        };
                        check(name, serde_json::json!({"max_l1": max, "x1_ratio": x1}), Some(budget), st)
                    }
                    Err(e) => error_check(name, e),
                }
            }
            "batch" => match diag::batch_stats(&greedy, dc.batch_scale) {
                Ok(b) => {
                    let st = if b.zeta_violations == 0 && b.oversized == 0 { Status::Pass } else { Status::Warn };
                    check(
                        name,
                        serde_json::json!({
                            "batches": b.batches.len(),
                            "max_span": b.max_span,
                            "max_vertices": b.max_vertices,
                            "span_limit": b.span_limit,
                            "vertex_limit": b.vertex_limit,
                            "oversized": b.oversized,
                            "zeta_violations": b.zeta_violations,
                        }),
                        Some(b.span_limit),
                        st,
                    )
                }
                Err(e) => error_check(name, e),
            },
            "ledger" => {
                let budget = (n as f64).sqrt();
                let st = if ledger.tardy_r0_lambda0.len() as f64 >= budget { Status::Pass } else { Status::Warn };
                check(
                    name,
                    serde_json::json!({
                        "regular": ledger.regular,
                        "r0": ledger.r0.len(),
                        "lambda0": ledger.lambda0,
                        "lambda2": ledger.lambda2,
                        "lambda3": ledger.lambda3,
                        "tardy_r0_lambda0": ledger.tardy_r0_lambda0.len(),
                        "epsilon": ledger.epsilon,
                        "early_cutoff": ledger.early_cutoff,
                    }),
                    Some(budget),
                    st,
                )
            }
            "invariance" => {
                let mut rng = StreamRng::new(seed, DIAGNOSTICS_STREAM);
                match diag::invariance_probe(g, &greedy, &ledger, seed, &mut rng) {
                    Ok(p) => {
                        let st = if p.holds() { Status::Pass } else { Status::Warn };
                        check(name, p, None, st)
                    }
                    Err(e) => check(name, e.to_string(), None, Status::Pass),
                }
            }
            "dense" => {
                let (found, exact) = diag::dense_set_scan(g, dc.dense_s_max);
                let st = if found.is_empty() { Status::Pass } else { Status::Warn };
                check(
                    name,
                    serde_json::json!({"exact": exact, "found": found.len(), "examples": &found[..found.len().min(5)]}),
                    None,
                    st,
                )
            }
            "nearcycle" => {
                let ln = (n as f64).ln();
                let ell0 = ((2.0 * ln.ln()).floor() as usize).max(1);
                let census = diag::near_cycle_census(g, ell0, dc.ball_cap);
                let budget = (n as f64).sqrt() * ln.powf(4.0 * ell0 as f64);
                let st = if census.near as f64 <= budget { Status::Pass } else { Status::Warn };
                check(name, census, Some(budget), st)
            }
            "trees" => {
                let run = complete_two_matching(g, &greedy).map(|(tm, _)| er_loop(g, &tm, &cfg.er));
                match run {
                    Ok((outcome, stats)) => {
                        let tg = diag::tree_growth_stats(&stats.trees, n, c, dc.beta);
                        let f = tg.fraction_inside();
                        let st = if f.is_some_and(|f| f >= 0.9) { Status::Pass } else { Status::Warn };
                        check(
                            name,
                            serde_json::json!({
                                "levels": tg.ratios.len(),
                                "inside": tg.inside,
                                "fraction_inside": f,
                                "median_ratio": tg.median,
                                "band": tg.band,
                                "success": matches!(outcome, ErOutcome::Hamilton(_)),
                            }),
                            Some(0.9),
                            st,
                        )
                    }
                    Err(e) => error_check(name, e),
                }
            }
            other => error_check(other, "unknown check"),
        };
        out.push(item);
    }
    out
}

/// Deterministic per-index seeds for suites that need many instances.
pub fn seed_list(base: u64, count: usize) -> Vec<u64> {
    let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(base);
    (0..count).map(|_| rand::RngCore::next_u64(&mut r) >> 1).collect()
}
