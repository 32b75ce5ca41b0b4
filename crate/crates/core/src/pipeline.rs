//! Sample, 2GREEDY, Step 3, extend-rotate, verify.

use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::graph::{Graph, Vertex};
use crate::greedy::{run_two_greedy, GreedyConfig, GreedyError, GreedyOutcome, StepCounts};
use crate::matching::{complete_two_matching, decompose, FuseError, Step3Stats, TwoMatching};
use crate::model::{sample_graph_with, ModelError, SampleConfig, SampleStats};
use crate::rng::{StreamRng, COIN_STREAM, GRAPH_STREAM};
use crate::rotate::{er3_bound, er_loop, ErConfig, ErOutcome, ErStats, FailureReport};
use crate::verify::check_hamilton;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("input graph has minimum degree {0}, need at least 3")]
    MinDegree(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Greedy(#[from] GreedyError),
    #[error(transparent)]
    Fuse(#[from] FuseError),
    #[error("extend-rotate returned an invalid cycle")]
    BadCycle,
}

impl PipelineError {
    /// Input problems versus broken invariants.
    pub fn is_input_error(&self) -> bool {
        matches!(self, PipelineError::MinDegree(_) | PipelineError::Model(_))
    }
}

#[derive(Clone, Debug, Default)]
pub struct PipelineConfig {
    pub sample: SampleConfig,
    pub greedy: GreedyConfig,
    pub er: ErConfig,
}

#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct Timings {
    pub sample_ms: f64,
    pub greedy_ms: f64,
    pub matching_ms: f64,
    pub er_ms: f64,
    /// 2GREEDY through extend-rotate; sampling excluded.
    pub total_ms: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub seed: Option<u64>,
    pub n: usize,
    pub m: usize,
    pub c: f64,
    pub success: bool,
    pub verified: bool,
    pub cycle_len: usize,
    pub components_2greedy: usize,
    pub components_fused: usize,
    pub er3_count: u32,
    pub er3_bound: f64,
    pub rotations: u64,
    pub extensions: u32,
    pub closings: u32,
    pub retries_used: u32,
    pub steps: StepCounts,
    pub step3: Step3Stats,
    pub er: ErStats,
    pub sampling: Option<SampleStats>,
    pub timings: Timings,
    pub failure: Option<FailureReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<serde_json::Value>,
}

pub fn report_json(r: &RunReport) -> String {
    serde_json::to_string_pretty(r).expect("report serializes")
}

/// Everything a run produced, for callers that need more than the report.
pub struct Run {
    pub report: RunReport,
    pub cycle: Option<Vec<Vertex>>,
    pub greedy: GreedyOutcome,
    pub two_matching: TwoMatching,
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Runs the algorithm on a given graph; `seed` drives the Step-1(b) coin.
pub fn run_on_graph(g: &Graph, seed: u64, cfg: &PipelineConfig) -> Result<Run, PipelineError> {
    if g.n() < 3 || g.min_degree() < 3 {
        return Err(PipelineError::MinDegree(g.min_degree()));
    }
    let t0 = Instant::now();
    let greedy = run_two_greedy(g, &cfg.greedy, StreamRng::new(seed, COIN_STREAM))?;
    let greedy_ms = ms(t0);
    let t1 = Instant::now();
    let partial: Vec<[Vertex; 2]> = greedy.matching.iter().map(|&e| g.edge(e)).collect();
    let components_2greedy = decompose(g.n(), &partial)?.len();
    let (tm, step3) = complete_two_matching(g, &greedy)?;
    let matching_ms = ms(t1);
    let t2 = Instant::now();
    let (outcome, er) = er_loop(g, &tm, &cfg.er);
    let er_ms = ms(t2);
    let total_ms = ms(t0);
    let (cycle, failure) = match outcome {
        ErOutcome::Hamilton(c) => (Some(c), None),
        ErOutcome::Failure(f) => (None, Some(f)),
    };
    let verified = cycle.as_ref().is_some_and(|c| check_hamilton(g, c));
    if cycle.is_some() && !verified {
        return Err(PipelineError::BadCycle);
    }
    let report = RunReport {
        seed: Some(seed),
        n: g.n(),
        m: g.m(),
        c: g.m() as f64 / g.n() as f64,
        success: verified,
        verified,
        cycle_len: cycle.as_ref().map_or(0, |c| c.len()),
        components_2greedy,
        components_fused: tm.components.len(),
        er3_count: er.er3,
        er3_bound: er3_bound(&tm),
        rotations: er.rotations,
        extensions: er.extensions,
        closings: er.closings,
        retries_used: er.retries_used,
        steps: greedy.step_counts,
        step3,
        er,
        sampling: None,
        timings: Timings {
            sample_ms: 0.0,
            greedy_ms,
            matching_ms,
            er_ms,
            total_ms,
        },
        failure,
        diagnostics: None,
    };
    Ok(Run {
        report,
        cycle,
        greedy,
        two_matching: tm,
    })
}

/// Samples `G_{n,m}^{δ≥3}` with `m = round(cn)` from `seed` and runs on it.
pub fn sample(n: usize, c: f64, seed: u64, cfg: &PipelineConfig) -> Result<(Graph, SampleStats, f64), PipelineError> {
    let t = Instant::now();
    let mut rng = StreamRng::new(seed, GRAPH_STREAM);
    let (g, st) = sample_graph_with(n, c, &cfg.sample, &mut rng)?;
    Ok((g, st, ms(t)))
}

pub fn run_sampled(n: usize, c: f64, seed: u64, cfg: &PipelineConfig) -> Result<(Graph, Run), PipelineError> {
    let (g, st, sample_ms) = sample(n, c, seed, cfg)?;
    let mut run = run_on_graph(&g, seed, cfg)?;
    run.report.sampling = Some(st);
    run.report.timings.sample_ms = sample_ms;
    Ok((g, run))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::builders;

    #[test]
    fn k4_and_c5() {
        let run = run_on_graph(&builders::complete(4), 1, &PipelineConfig::default()).unwrap();
        assert!(run.report.success);
        assert_eq!(run.report.cycle_len, 4);
        let err = run_on_graph(&builders::cycle(5), 1, &PipelineConfig::default()).err().unwrap();
        assert!(matches!(err, PipelineError::MinDegree(2)));
        assert!(err.is_input_error());
    }

    #[test]
    fn sampled_runs_succeed_and_verify() {
        let cfg = PipelineConfig {
            er: ErConfig {
                validate_paths: true,
                ..Default::default()
            },
            ..Default::default()
        };
        let mut ok = 0;
        for seed in 0..20 {
            let (g, run) = run_sampled(2000, 5.0, seed, &cfg).unwrap();
            if let Some(c) = &run.cycle {
                assert!(check_hamilton(&g, c));
                ok += 1;
            }
            assert_eq!(run.report.er.bad_nodes, 0);
            assert!(run.report.er3_count as f64 <= 4.0 * run.report.er3_bound + 4.0);
        }
        assert!(ok >= 18, "{ok}/20");
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = PipelineConfig::default();
        let (_, a) = run_sampled(500, 4.0, 7, &cfg).unwrap();
        let (_, b) = run_sampled(500, 4.0, 7, &cfg).unwrap();
        assert_eq!(a.cycle, b.cycle);
        assert_eq!(a.report.er3_count, b.report.er3_count);
    }
}
