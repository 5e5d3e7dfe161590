//! Benchmark harness: runs a method matrix over an instance corpus and
//! aggregates per-dataset rows (feasibility rate, average total
//! degeneracy, zero-degeneracy rate, matheuristic delta).

use std::fmt::Write as _;
use std::sync::Mutex;

use thiserror::Error;

use crate::criteria::{compute_criteria_unchecked, CriteriaReport};
use crate::ffs::PlacementMethod;
use crate::model::{Instance, Schedule};
use crate::search::{initial_order, local_search, solve_flow, warm_order, SearchConfig};
use crate::special::{johnson_single_period, solve_theory};

#[derive(Debug, Error)]
pub enum MethodError {
    #[error("unknown method tag `{0}`")]
    Unknown(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Warm {
    /// Plain local search from the rate-monotonic order.
    None,
    /// Local search started from the canonical-packing order.
    Pack,
    /// Full flow: local search, warm-start fallback, reopt sweep.
    Flow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Ffs {
        placement: PlacementMethod,
        warm: Warm,
    },
    Offset,
    Johnson,
}

impl Method {
    pub fn parse(tag: &str) -> Result<Self, MethodError> {
        let ffs = |placement, warm| Ok(Method::Ffs { placement, warm });
        match tag {
            "leftmost" => ffs(PlacementMethod::Leftmost, Warm::None),
            "predecessor" => ffs(PlacementMethod::Predecessor, Warm::None),
            "leftmost-warm" => ffs(PlacementMethod::Leftmost, Warm::Pack),
            "predecessor-warm" => ffs(PlacementMethod::Predecessor, Warm::Pack),
            "leftmost-flow" => ffs(PlacementMethod::Leftmost, Warm::Flow),
            "predecessor-flow" => ffs(PlacementMethod::Predecessor, Warm::Flow),
            "offset" => Ok(Method::Offset),
            "johnson" => Ok(Method::Johnson),
            other => Err(MethodError::Unknown(other.to_string())),
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Method::Ffs {
                placement: PlacementMethod::Leftmost,
                warm: Warm::None,
            } => "leftmost",
            Method::Ffs {
                placement: PlacementMethod::Predecessor,
                warm: Warm::None,
            } => "predecessor",
            Method::Ffs {
                placement: PlacementMethod::Leftmost,
                warm: Warm::Pack,
            } => "leftmost-warm",
            Method::Ffs {
                placement: PlacementMethod::Predecessor,
                warm: Warm::Pack,
            } => "predecessor-warm",
            Method::Ffs {
                placement: PlacementMethod::Leftmost,
                warm: Warm::Flow,
            } => "leftmost-flow",
            Method::Ffs {
                placement: PlacementMethod::Predecessor,
                warm: Warm::Flow,
            } => "predecessor-flow",
            Method::Offset => "offset",
            Method::Johnson => "johnson",
        }
    }

    pub const ALL: [&'static str; 8] = [
        "leftmost",
        "predecessor",
        "leftmost-warm",
        "predecessor-warm",
        "leftmost-flow",
        "predecessor-flow",
        "offset",
        "johnson",
    ];
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub schedule: Option<Schedule>,
    pub report: Option<CriteriaReport>,
    /// Criterion change from the reopt sweep, when the method ran one.
    pub sweep_delta: Option<i64>,
    /// (elapsed_ms, best value) trace for search-based methods.
    pub trace: Vec<(u64, crate::model::Time)>,
    /// Method rejected the instance shape (offset / Johnson prerequisites).
    pub shape_mismatch: bool,
}

/// Runs one method on one instance. A method that cannot produce a
/// feasible schedule reports `schedule: None`, never an invalid schedule.
pub fn run_method(instance: &Instance, method: Method, config: &SearchConfig) -> RunOutcome {
    let none = |shape_mismatch| RunOutcome {
        schedule: None,
        report: None,
        sweep_delta: None,
        trace: Vec::new(),
        shape_mismatch,
    };
    match method {
        Method::Ffs { placement, warm } => {
            let mut cfg = config.clone();
            cfg.method = placement;
            let result = match warm {
                Warm::None => local_search(instance, &cfg, None),
                Warm::Pack => {
                    let order = warm_order(instance, &cfg)
                        .unwrap_or_else(|| initial_order(instance));
                    local_search(instance, &cfg, Some(order))
                }
                Warm::Flow => solve_flow(instance, &cfg),
            };
            match result.best {
                Some(best) => RunOutcome {
                    schedule: Some(best.schedule),
                    report: Some(best.report),
                    sweep_delta: result.sweep_delta,
                    trace: result.trace,
                    shape_mismatch: false,
                },
                None => none(false),
            }
        }
        Method::Offset => match solve_theory(instance) {
            Ok((schedule, report)) => RunOutcome {
                schedule: Some(schedule),
                report: Some(report),
                sweep_delta: None,
                trace: Vec::new(),
                shape_mismatch: false,
            },
            Err(_) => none(true),
        },
        Method::Johnson => match johnson_single_period(instance) {
            Ok(schedule) => {
                let report = compute_criteria_unchecked(instance, &schedule, &config.alphas);
                RunOutcome {
                    schedule: Some(schedule),
                    report: Some(report),
                    sweep_delta: None,
                    trace: Vec::new(),
                    shape_mismatch: false,
                }
            }
            Err(_) => none(true),
        },
    }
}

#[derive(Debug, Clone)]
pub struct BenchRow {
    pub dataset: String,
    pub method: String,
    pub instances: usize,
    pub solved: usize,
    /// Percentage of instances with a feasible result, in [0, 100].
    pub feasible_pct: f64,
    /// Average total degeneracy; over solved instances only unless the
    /// all-instances mode is selected (unsolved then count as worst-case).
    pub avg_dg_sum: Option<f64>,
    pub zero_dg_pct: Option<f64>,
    pub avg_sweep_delta: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub methods: Vec<Method>,
    pub search: SearchConfig,
    pub jobs: usize,
    /// Averages over solved instances only (reporting convention); set to
    /// false to average over all instances with unsolved treated as the
    /// instance's chain count times the hyperperiod ratio bound.
    pub solved_only: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            methods: vec![Method::parse("predecessor").unwrap()],
            search: SearchConfig::default(),
            jobs: 1,
            solved_only: true,
        }
    }
}

/// Runs every configured method over the corpus. Results are aggregated
/// per method in instance order, so output is independent of worker
/// interleaving.
pub fn bench_corpus(
    dataset: &str,
    instances: &[(String, Instance)],
    config: &BenchConfig,
) -> Vec<BenchRow> {
    let mut rows = Vec::new();
    for &method in &config.methods {
        // (instance idx, dg_sum if solved)
        let results: Mutex<Vec<(usize, Option<(u64, Option<i64>)>)>> =
            Mutex::new(Vec::new());
        let next = std::sync::atomic::AtomicUsize::new(0);
        std::thread::scope(|scope| {
            for _ in 0..config.jobs.max(1) {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                    if i >= instances.len() {
                        break;
                    }
                    let outcome = run_method(&instances[i].1, method, &config.search);
                    let cell = outcome
                        .report
                        .map(|r| (r.dg_sum, outcome.sweep_delta));
                    results.lock().unwrap().push((i, cell));
                });
            }
        });
        let mut results = results.into_inner().unwrap();
        results.sort_by_key(|&(i, _)| i);

        let solved: Vec<(u64, Option<i64>)> =
            results.iter().filter_map(|(_, c)| *c).collect();
        let n = instances.len();
        let feasible_pct = 100.0 * solved.len() as f64 / n.max(1) as f64;
        let (avg_dg_sum, zero_dg_pct) = if config.solved_only {
            if solved.is_empty() {
                (None, None)
            } else {
                let sum: u64 = solved.iter().map(|s| s.0).sum();
                let zeros = solved.iter().filter(|s| s.0 == 0).count();
                (
                    Some(sum as f64 / solved.len() as f64),
                    Some(100.0 * zeros as f64 / solved.len() as f64),
                )
            }
        } else {
            // All-instances mode: unsolved instances contribute the crude
            // upper bound of one degeneracy per chain per period ratio.
            let mut sum = 0.0;
            let mut zeros = 0usize;
            for (i, cell) in &results {
                match cell {
                    Some((dg, _)) => {
                        sum += *dg as f64;
                        zeros += (*dg == 0) as usize;
                    }
                    None => {
                        let inst = &instances[*i].1;
                        let ratio = inst.period_set().hyperperiod() / inst.period_set().w();
                        sum += (inst.chains().len() as u64 * ratio) as f64;
                    }
                }
            }
            (
                Some(sum / n.max(1) as f64),
                Some(100.0 * zeros as f64 / n.max(1) as f64),
            )
        };
        let deltas: Vec<i64> = solved.iter().filter_map(|s| s.1).collect();
        let avg_sweep_delta = if deltas.is_empty() {
            None
        } else {
            Some(deltas.iter().sum::<i64>() as f64 / deltas.len() as f64)
        };
        rows.push(BenchRow {
            dataset: dataset.to_string(),
            method: method.tag().to_string(),
            instances: n,
            solved: solved.len(),
            feasible_pct,
            avg_dg_sum,
            zero_dg_pct,
            avg_sweep_delta,
        });
    }
    rows
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.2}")).unwrap_or_else(|| "-".into())
}

pub fn rows_to_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(
        "dataset,method,instances,solved,feasible_pct,avg_dg_sum,zero_dg_pct,avg_sweep_delta\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{:.1},{},{},{}",
            r.dataset,
            r.method,
            r.instances,
            r.solved,
            r.feasible_pct,
            fmt_opt(r.avg_dg_sum),
            fmt_opt(r.zero_dg_pct),
            fmt_opt(r.avg_sweep_delta),
        );
    }
    out
}

pub fn summarize(rows: &[BenchRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<12} {:<18} {:>6} {:>8} {:>10} {:>10} {:>9} {:>8}",
        "dataset", "method", "n", "solved", "feasible%", "avg DGsum", "zeroDG%", "sweepΔ"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<12} {:<18} {:>6} {:>8} {:>10.1} {:>10} {:>9} {:>8}",
            r.dataset,
            r.method,
            r.instances,
            r.solved,
            r.feasible_pct,
            fmt_opt(r.avg_dg_sum),
            fmt_opt(r.zero_dg_pct),
            fmt_opt(r.avg_sweep_delta),
        );
    }
    out
}
