//! Local search over ordered task lists wrapping the first-fit scheduler,
//! and the full solve flow with warm-start fallback and the periodic
//! reoptimization pass.

use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::criteria::{compute_criteria_unchecked, CriteriaReport, Criterion, Rat};
use crate::ffs::{ffs_run, is_permutation, PlacementMethod};
use crate::matheur::{reopt_sweep, MatheurConfig};
use crate::model::{Instance, Schedule, TaskId, Time};
use crate::packing::{pack_instance, packings_to_core, warmstart_order, leftmost_order,
    PackOutcome2, DEFAULT_PACK_BUDGET};

#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub method: PlacementMethod,
    /// Predecessor placements fall back to the resource tail when the
    /// predecessor is unscheduled (variant flag, off by default).
    pub predecessor_tail: bool,
    pub time_limit_s: f64,
    /// Warm start engages when no feasible solution exists by this time.
    pub warmstart_trigger_s: f64,
    /// The reoptimization pass engages after this long without improvement.
    pub stagnation_trigger_s: f64,
    pub rng_seed: u64,
    pub criterion: Criterion,
    /// Alphas evaluated in every report; `Criterion::DgAlphaSum` indexes
    /// this list.
    pub alphas: Vec<Rat>,
    /// Hard iteration cap; makes runs reproducible independent of wall
    /// time when set.
    pub max_iters: Option<u64>,
    /// Metropolis acceptance with geometric cooling instead of strict
    /// hill climbing.
    pub anneal: bool,
    pub pack_budget: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            method: PlacementMethod::Predecessor,
            predecessor_tail: false,
            time_limit_s: 60.0,
            warmstart_trigger_s: 15.0,
            stagnation_trigger_s: 60.0,
            rng_seed: 0,
            criterion: Criterion::DgSum,
            alphas: Vec::new(),
            max_iters: None,
            anneal: false,
            pack_budget: DEFAULT_PACK_BUDGET,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Best {
    pub order: Vec<TaskId>,
    pub schedule: Schedule,
    pub report: CriteriaReport,
    pub value: Time,
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub best: Option<Best>,
    /// (elapsed_ms, best criterion value) at every acceptance plus a 1 s
    /// heartbeat. Wall times vary between runs; values do not.
    pub trace: Vec<(u64, Time)>,
    pub iterations: u64,
    /// Criterion change contributed by the final reoptimization sweep
    /// (negative means improvement); `None` when the sweep never ran.
    pub sweep_delta: Option<i64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Reorder,
    Perturb,
}

/// Rate-monotonic initial order; ties broken by (chain, index) so chain
/// precedence order is kept within a period class.
pub fn initial_order(instance: &Instance) -> Vec<TaskId> {
    let mut order: Vec<TaskId> = (0..instance.num_tasks()).map(TaskId).collect();
    order.sort_by_key(|&id| (instance.period_of(id), id));
    order
}

/// Chains whose tasks appear out of chain order in the list.
fn violating_chains(instance: &Instance, order: &[TaskId]) -> Vec<usize> {
    let mut pos = vec![0usize; instance.num_tasks()];
    for (i, &id) in order.iter().enumerate() {
        pos[id.0] = i;
    }
    instance
        .chains()
        .iter()
        .enumerate()
        .filter(|(_, c)| c.tasks.windows(2).any(|p| pos[p[0].0] > pos[p[1].0]))
        .map(|(k, _)| k)
        .collect()
}

/// Restores the in-list relative order of one chain's tasks, leaving every
/// other position untouched. Returns false when no chain violates order.
fn reorder_move(instance: &Instance, order: &mut [TaskId], rng: &mut impl Rng) -> bool {
    let violating = violating_chains(instance, order);
    let Some(&k) = violating.choose(rng) else {
        return false;
    };
    let chain = &instance.chains()[k];
    let member = |id: TaskId| instance.task(id).chain == k;
    let mut slots: Vec<usize> = order
        .iter()
        .enumerate()
        .filter(|(_, &id)| member(id))
        .map(|(i, _)| i)
        .collect();
    slots.sort_unstable();
    for (&slot, &id) in slots.iter().zip(&chain.tasks) {
        order[slot] = id;
    }
    true
}

fn perturb_move(order: &mut [TaskId], rng: &mut impl Rng) {
    if order.len() < 2 {
        return;
    }
    let i = rng.gen_range(0..order.len());
    let mut j = rng.gen_range(0..order.len() - 1);
    if j >= i {
        j += 1;
    }
    order.swap(i, j);
}

/// Moves the failing task to a uniformly random earlier position.
fn repair_move(order: &mut Vec<TaskId>, failing: TaskId, rng: &mut impl Rng) {
    let pos = order.iter().position(|&id| id == failing).unwrap();
    if pos == 0 {
        return;
    }
    let dest = rng.gen_range(0..pos);
    let id = order.remove(pos);
    order.insert(dest, id);
}

const RESTART_AFTER_REJECTIONS: u64 = 5000;
const ANNEAL_T0: f64 = 2.0;
const ANNEAL_FACTOR: f64 = 0.99;
const ANNEAL_STEP: u64 = 100;

/// First-improvement local search over orders. `warm` replaces the
/// rate-monotonic starting order when given.
pub fn local_search(
    instance: &Instance,
    config: &SearchConfig,
    warm: Option<Vec<TaskId>>,
) -> SearchResult {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut current = warm.unwrap_or_else(|| initial_order(instance));
    debug_assert!(is_permutation(instance, &current));
    let mut best: Option<Best> = None;
    let mut trace = Vec::new();
    let mut phase = Phase::Reorder;
    let mut rejections: u64 = 0;
    let mut iterations: u64 = 0;
    let mut last_heartbeat = 0u64;
    let mut temp = ANNEAL_T0;

    let evaluate = |order: &[TaskId]| -> Result<(Schedule, CriteriaReport, Time), TaskId> {
        match ffs_run(instance, order, config.method, config.predecessor_tail) {
            Ok(schedule) => {
                let report = compute_criteria_unchecked(instance, &schedule, &config.alphas);
                let value = config.criterion.value(&report);
                Ok((schedule, report, value))
            }
            Err(e) => Err(e.task),
        }
    };

    // Evaluate the starting order itself first.
    if let Ok((schedule, report, value)) = evaluate(&current) {
        trace.push((started.elapsed().as_millis() as u64, value));
        best = Some(Best {
            order: current.clone(),
            schedule,
            report,
            value,
        });
    }

    loop {
        if let Some(cap) = config.max_iters {
            if iterations >= cap {
                break;
            }
        }
        if started.elapsed().as_secs_f64() >= config.time_limit_s {
            break;
        }
        if best.as_ref().is_some_and(|b| b.value == 0) {
            break; // criteria are non-negative; nothing left to gain
        }
        iterations += 1;
        if config.anneal && iterations % ANNEAL_STEP == 0 {
            temp *= ANNEAL_FACTOR;
        }
        let elapsed_ms = started.elapsed().as_millis() as u64;
        if elapsed_ms >= last_heartbeat + 1000 {
            last_heartbeat = elapsed_ms;
            if let Some(b) = &best {
                trace.push((elapsed_ms, b.value));
            }
        }

        let mut candidate = current.clone();
        let mut was_reorder = false;
        if phase == Phase::Reorder {
            was_reorder = reorder_move(instance, &mut candidate, &mut rng);
        }
        if !was_reorder {
            perturb_move(&mut candidate, &mut rng);
        }
        debug_assert!(is_permutation(instance, &candidate));

        match evaluate(&candidate) {
            Ok((schedule, report, value)) => {
                let improved = best.as_ref().map_or(true, |b| value < b.value);
                if improved {
                    trace.push((started.elapsed().as_millis() as u64, value));
                    best = Some(Best {
                        order: candidate.clone(),
                        schedule,
                        report,
                        value,
                    });
                    current = candidate;
                    rejections = 0;
                    continue;
                }
                let accept_anyway = config.anneal && {
                    let delta = value.saturating_sub(best.as_ref().unwrap().value) as f64;
                    rng.gen::<f64>() < (-delta / temp).exp()
                };
                if accept_anyway {
                    current = candidate;
                } else {
                    rejections += 1;
                }
                if was_reorder {
                    phase = Phase::Perturb;
                }
            }
            Err(failing) => {
                repair_move(&mut candidate, failing, &mut rng);
                // Keep exploring from the repaired order only while no
                // feasible solution is known; afterwards stay at the best.
                if best.is_none() {
                    current = candidate;
                }
                rejections += 1;
                if was_reorder {
                    phase = Phase::Perturb;
                }
            }
        }

        if rejections >= RESTART_AFTER_REJECTIONS {
            rejections = 0;
            current = best
                .as_ref()
                .map(|b| b.order.clone())
                .unwrap_or_else(|| initial_order(instance));
            current.shuffle(&mut rng);
            phase = Phase::Reorder;
        }
    }

    if let Some(b) = &best {
        trace.push((started.elapsed().as_millis() as u64, b.value));
    }
    SearchResult {
        best,
        trace,
        iterations,
        sweep_delta: None,
    }
}

/// Warm-start order from the canonical packer, per the configured method.
pub fn warm_order(instance: &Instance, config: &SearchConfig) -> Option<Vec<TaskId>> {
    let per_resource = match pack_instance(instance, config.pack_budget) {
        PackOutcome2::Packed(p) => p,
        _ => return None,
    };
    let core = packings_to_core(instance, &per_resource).ok()?;
    match config.method {
        PlacementMethod::Leftmost => Some(leftmost_order(instance, &core)),
        // A cycle witness only invalidates the precedence augmentation;
        // the plain start-sorted order is still a usable warm start.
        PlacementMethod::Predecessor => Some(
            warmstart_order(instance, &core)
                .unwrap_or_else(|_| leftmost_order(instance, &core)),
        ),
    }
}

/// Full solve flow: local search from the rate-monotonic order; if nothing
/// feasible by the warm-start trigger, pack and restart from the inferred
/// order; once the search stagnates, hand the best schedule to the periodic
/// reoptimization pass.
pub fn solve_flow(instance: &Instance, config: &SearchConfig) -> SearchResult {
    let started = Instant::now();

    let mut first = config.clone();
    first.time_limit_s = config.time_limit_s.min(config.warmstart_trigger_s);
    if let Some(cap) = config.max_iters {
        first.max_iters = Some(cap / 2);
    }
    let mut result = local_search(instance, &first, None);

    if result.best.is_none() {
        if let Some(order) = warm_order(instance, config) {
            let mut second = config.clone();
            second.time_limit_s =
                (config.time_limit_s - started.elapsed().as_secs_f64()).max(0.0);
            let warmed = local_search(instance, &second, Some(order));
            result = merge(result, warmed);
        } else {
            let mut second = config.clone();
            second.time_limit_s =
                (config.time_limit_s - started.elapsed().as_secs_f64()).max(0.0);
            let resumed = local_search(instance, &second, None);
            result = merge(result, resumed);
        }
    }

    // Local search has gone as far as it will within its budget; treat the
    // remaining time as stagnation and reoptimize period by period.
    if let Some(best) = result.best.take() {
        if best.value > 0 {
            let mh = MatheurConfig::default();
            let improved =
                reopt_sweep(instance, &best.schedule, config.criterion, &config.alphas, &mh);
            let report = compute_criteria_unchecked(instance, &improved, &config.alphas);
            let value = config.criterion.value(&report);
            result.sweep_delta = Some(value as i64 - best.value as i64);
            if value < best.value {
                result.trace.push((started.elapsed().as_millis() as u64, value));
                result.best = Some(Best {
                    order: best.order,
                    schedule: improved,
                    report,
                    value,
                });
            } else {
                result.best = Some(best);
            }
        } else {
            result.best = Some(best);
        }
    }
    result
}

fn merge(a: SearchResult, b: SearchResult) -> SearchResult {
    let best = match (a.best, b.best) {
        (Some(x), Some(y)) => Some(if y.value < x.value { y } else { x }),
        (x, y) => x.or(y),
    };
    let mut trace = a.trace;
    trace.extend(b.trace);
    SearchResult {
        best,
        trace,
        iterations: a.iterations + b.iterations,
        sweep_delta: b.sweep_delta.or(a.sweep_delta),
    }
}
