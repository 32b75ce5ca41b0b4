use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hamds3::diagnostics::{Status, CHECKS};
use hamds3::graph::Graph;
use hamds3::harness::{self, DiagConfig};
use hamds3::model::SampleStats;
use hamds3::pipeline::{run_on_graph, sample, PipelineConfig, PipelineError, RunReport};
use hamds3::rotate::ErConfig;

const OK: u8 = 0;
const VIOLATION: u8 = 2;
const INPUT: u8 = 3;

#[derive(Parser)]
#[command(name = "hamds3", version, about = "Hamilton cycles in random graphs with minimum degree 3")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample a graph and write it in the text format
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        c: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout if omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the full pipeline and print a report
    Run {
        #[command(flatten)]
        src: Source,
        #[command(flatten)]
        algo: Algo,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Write the 2GREEDY step trace (TSV) to this file
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Also print the cycle (1-based) after the report
        #[arg(long)]
        print_cycle: bool,
    },
    /// Runtime and success table over sizes and seeds (CSV)
    Bench {
        /// Comma-separated sizes
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long, default_value_t = 20.0)]
        c: f64,
        /// Number of seeds per size
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        no_warmup: bool,
        #[command(flatten)]
        algo: Algo,
    },
    /// Compare pipeline verdicts against an exact Hamiltonicity oracle
    Oracle {
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long, default_value_t = 8)]
        n_min: usize,
        #[arg(long, default_value_t = 14)]
        n_max: usize,
        #[arg(long, default_value_t = 2.0)]
        c: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[command(flatten)]
        algo: Algo,
    },
    /// Structural diagnostics on one instance (JSON)
    Diagnose {
        #[command(flatten)]
        src: Source,
        #[command(flatten)]
        algo: Algo,
        /// Comma-separated subset of: ode, trajectory, batch, ledger, invariance, dense, nearcycle, trees
        #[arg(long, value_delimiter = ',', default_values_t = CHECKS.iter().map(|s| s.to_string()).collect::<Vec<_>>())]
        checks: Vec<String>,
        #[arg(long, default_value_t = 0.5)]
        beta: f64,
    },
}

#[derive(Args)]
struct Source {
    /// Graph file; otherwise a graph is sampled from --n and --c
    #[arg(long, conflicts_with_all = ["n", "c"])]
    graph: Option<PathBuf>,
    #[arg(long, requires = "c")]
    n: Option<usize>,
    #[arg(long, requires = "n")]
    c: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct Algo {
    /// Endpoint budget per rotation tree
    #[arg(long)]
    nu: Option<usize>,
    #[arg(long, default_value_t = 0.55)]
    nu_exponent: f64,
    #[arg(long, default_value_t = 3)]
    retries: u32,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long = "K", default_value_t = 1.0)]
    k: f64,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    use_l0_cases: bool,
}

impl Algo {
    fn pipeline(&self) -> Result<PipelineConfig, String> {
        if self.nu.is_some_and(|v| v < 2) {
            return Err("--nu must be at least 2".into());
        }
        if !(self.nu_exponent > 0.0 && self.nu_exponent <= 1.0) {
            return Err("--nu-exponent must be in (0, 1]".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err("--alpha must be in (0, 1)".into());
        }
        Ok(PipelineConfig {
            er: ErConfig {
                nu: self.nu,
                nu_exponent: self.nu_exponent,
                retries: self.retries,
                use_l0_cases: self.use_l0_cases,
                ..Default::default()
            },
            ..Default::default()
        })
    }
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

struct Fail(u8, String);

impl From<io::Error> for Fail {
    fn from(e: io::Error) -> Self {
        Fail(INPUT, e.to_string())
    }
}

fn pipeline_fail(e: PipelineError) -> Fail {
    Fail(if e.is_input_error() { INPUT } else { VIOLATION }, e.to_string())
}

fn load(src: &Source, cfg: &PipelineConfig) -> Result<(Graph, Option<(SampleStats, f64)>), Fail> {
    match (&src.graph, src.n, src.c) {
        (Some(p), _, _) => Graph::load(p)
            .map(|g| (g, None))
            .map_err(|e| Fail(INPUT, format!("{}: {e}", p.display()))),
        (None, Some(n), Some(c)) => sample(n, c, src.seed, cfg)
            .map(|(g, st, ms)| (g, Some((st, ms))))
            .map_err(pipeline_fail),
        _ => Err(Fail(INPUT, "give either --graph or both --n and --c".into())),
    }
}

fn report_csv(r: &RunReport) -> String {
    let head = "seed,n,m,c,success,cycle_len,components_2greedy,components_fused,er3_count,rotations,extensions,retries_used,ms_sample,ms_2greedy,ms_matching,ms_er,ms_total";
    let t = r.timings;
    format!(
        "{head}\n{},{},{},{},{},{},{},{},{},{},{},{},{:.3},{:.3},{:.3},{:.3},{:.3}",
        r.seed.unwrap_or(0),
        r.n,
        r.m,
        r.c,
        r.success,
        r.cycle_len,
        r.components_2greedy,
        r.components_fused,
        r.er3_count,
        r.rotations,
        r.extensions,
        r.retries_used,
        t.sample_ms,
        t.greedy_ms,
        t.matching_ms,
        t.er_ms,
        t.total_ms
    )
}

fn exec(cmd: Cmd) -> Result<(), Fail> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cmd {
        Cmd::Gen { n, c, seed, out: path } => {
            let (g, _, _) = sample(n, c, seed, &PipelineConfig::default()).map_err(pipeline_fail)?;
            match path {
                Some(p) => g.save(&p)?,
                None => g.write_to(&mut out)?,
            }
        }
        Cmd::Run { src, algo, format, trace, print_cycle } => {
            let mut cfg = algo.pipeline().map_err(|e| Fail(INPUT, e))?;
            cfg.greedy.record_trace = trace.is_some();
            let (g, sampled) = load(&src, &cfg)?;
            let run = run_on_graph(&g, src.seed, &cfg).map_err(pipeline_fail)?;
            let mut report = run.report;
            if let Some((st, ms)) = sampled {
                report.sampling = Some(st);
                report.timings.sample_ms = ms;
            }
            if let (Some(p), Some(t)) = (&trace, &run.greedy.trace) {
                t.write_tsv(std::io::BufWriter::new(std::fs::File::create(p)?))?;
            }
            match format {
                Format::Json => serde_json::to_writer_pretty(&mut out, &report).map_err(|e| Fail(VIOLATION, e.to_string()))?,
                Format::Csv => write!(out, "{}", report_csv(&report))?,
            }
            writeln!(out)?;
            if print_cycle {
                if let Some(c) = &run.cycle {
                    let s: Vec<String> = c.iter().map(|v| (v + 1).to_string()).collect();
                    writeln!(out, "{}", s.join(" "))?;
                }
            }
        }
        Cmd::Bench { n, c, seeds, seed, no_warmup, algo } => {
            let cfg = algo.pipeline().map_err(|e| Fail(INPUT, e))?;
            let seeds: Vec<u64> = (seed..seed + seeds).collect();
            let rows = harness::bench(&n, c, &seeds, &cfg, !no_warmup, harness::threads());
            harness::write_bench_csv(&mut out, &rows)?;
        }
        Cmd::Oracle { count, n_min, n_max, c, seed, format, algo } => {
            if !(8..=14).contains(&n_min) || !(n_min..=14).contains(&n_max) {
                return Err(Fail(INPUT, "need 8 <= n-min <= n-max <= 14".into()));
            }
            let cfg = algo.pipeline().map_err(|e| Fail(INPUT, e))?;
            let t = harness::oracle_compare(count, n_min, n_max, c, seed, &cfg);
            match format {
                Format::Json => serde_json::to_writer_pretty(&mut out, &t).map_err(|e| Fail(VIOLATION, e.to_string()))?,
                Format::Csv => {
                    writeln!(out, "index,n,seed,success,verified,hamiltonian")?;
                    for r in &t.rows {
                        writeln!(out, "{},{},{},{},{},{}", r.index, r.n, r.seed, r.success, r.verified, r.hamiltonian)?;
                    }
                    writeln!(
                        out,
                        "# success&ham,{} success&!ham,{} fail&ham,{} fail&!ham,{}",
                        t.cells[1][1], t.cells[1][0], t.cells[0][1], t.cells[0][0]
                    )?;
                }
            }
            writeln!(out)?;
            if t.unsound() > 0 {
                return Err(Fail(VIOLATION, format!("{} cycles on instances the oracle rejects", t.unsound())));
            }
        }
        Cmd::Diagnose { src, algo, checks, beta } => {
            if let Some(bad) = checks.iter().find(|c| !CHECKS.contains(&c.as_str())) {
                return Err(Fail(INPUT, format!("unknown check '{bad}'; expected one of {}", CHECKS.join(", "))));
            }
            let cfg = algo.pipeline().map_err(|e| Fail(INPUT, e))?;
            let (g, _) = load(&src, &cfg)?;
            if g.min_degree() < 3 {
                return Err(pipeline_fail(PipelineError::MinDegree(g.min_degree())));
            }
            let dc = DiagConfig {
                alpha: algo.alpha,
                k: algo.k,
                beta,
                ..Default::default()
            };
            let names: Vec<&str> = checks.iter().map(|s| s.as_str()).collect();
            let res = harness::diagnose(&g, src.seed, &names, &cfg, &dc);
            let errors = res.iter().filter(|c| c.status == Status::Error).count();
            serde_json::to_writer_pretty(&mut out, &serde_json::json!({ "n": g.n(), "m": g.m(), "checks": res, "errors": errors }))
                .map_err(|e| Fail(VIOLATION, e.to_string()))?;
            writeln!(out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { INPUT } else { OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match exec(cli.cmd) {
        Ok(()) => ExitCode::from(OK),
        Err(Fail(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
