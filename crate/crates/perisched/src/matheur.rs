//! Period-focused reoptimization: fix every task of other periods, re-place
//! the tasks of one target period inside `[0, T_beta)` to cut degeneracy,
//! under per-chain no-worse constraints, sweeping periods from longest to
//! shortest with K-chain chunking for oversized windows.

use std::collections::BTreeMap;
use std::time::Instant;

use crate::criteria::{compute_criteria_unchecked, Criterion, Rat};
use crate::feasibility::derive_core;
use crate::model::{Instance, Schedule, TaskId, Time};

#[derive(Debug, Clone)]
pub struct MatheurConfig {
    /// Windows larger than this are chunked by chain.
    pub max_free_tasks: usize,
    /// Chains per chunk, worst degeneracy first.
    pub chunk_k: usize,
    /// Wall-clock fallback per reopt call.
    pub iter_time_limit_s: f64,
    /// Deterministic primary cutoff for the branch-and-bound (placements
    /// tried); keeps seeded runs byte-reproducible when they finish fast.
    pub node_budget: u64,
}

impl Default for MatheurConfig {
    fn default() -> Self {
        Self {
            max_free_tasks: 500,
            chunk_k: 10,
            iter_time_limit_s: 10.0,
            node_budget: 200_000,
        }
    }
}

/// Exact integer-start enumeration below this target period; event-point
/// candidates above.
const EXACT_PERIOD_LIMIT: Time = 512;

/// One reoptimization window: everything outside the selected chains is
/// frozen, projected modulo the target period.
#[derive(Debug, Clone)]
pub struct ReoptWindow {
    pub beta: usize,
    pub t_beta: Time,
    /// Per resource: merged busy intervals of fixed tasks on the torus
    /// `[0, t_beta)` (wrapping intervals split).
    pub fixed: Vec<Vec<(Time, Time)>>,
    /// Chains selected for re-placement, worst current degeneracy first.
    pub free_chains: Vec<usize>,
    /// Current degeneracy per chain of the whole instance.
    pub deg: Vec<Time>,
    /// Observation-interval origin per resource (start of its earliest
    /// least-period task). Informational: the solver works in absolute
    /// residues, where chain gaps are origin-independent.
    pub origins: Vec<Time>,
}

/// Builds the window for target period index `beta`. `free_chains` must all
/// have that period; every other task is frozen.
pub fn build_window(
    instance: &Instance,
    schedule: &Schedule,
    beta: usize,
    free_chains: &[usize],
) -> ReoptWindow {
    let t_beta = instance.period_set().period(beta);
    let core = derive_core(instance, schedule);
    let mut is_free = vec![false; instance.chains().len()];
    for &k in free_chains {
        debug_assert_eq!(instance.chains()[k].period_index, beta);
        is_free[k] = true;
    }

    let mut fixed: Vec<Vec<(Time, Time)>> = vec![Vec::new(); instance.num_resources()];
    for (i, task) in instance.tasks().iter().enumerate() {
        if is_free[task.chain] {
            continue;
        }
        let id = TaskId(i);
        let t = instance.period_of(id);
        let p = task.proc_time;
        // Project every occurrence that meets a t_beta window onto the
        // torus. Shorter periods repeat inside the window; longer periods
        // appear once per their own window but still block the matching
        // residue for a task that repeats every t_beta.
        let reps = if t <= t_beta { t_beta / t } else { 1 };
        for j in 0..reps {
            let s = (core.sigma_of(id) + j * t) % t_beta;
            if s + p <= t_beta {
                fixed[task.resource].push((s, s + p));
            } else {
                fixed[task.resource].push((s, t_beta));
                fixed[task.resource].push((0, s + p - t_beta));
            }
        }
    }
    for intervals in &mut fixed {
        intervals.sort_unstable();
        // Merge adjacent/overlapping intervals.
        let mut merged: Vec<(Time, Time)> = Vec::with_capacity(intervals.len());
        for &(a, b) in intervals.iter() {
            match merged.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }
        *intervals = merged;
    }

    let report = compute_criteria_unchecked(instance, schedule, &[]);
    let deg: Vec<Time> = report.chains.iter().map(|c| c.dg).collect();
    let mut ordered: Vec<usize> = free_chains.to_vec();
    ordered.sort_by_key(|&k| (std::cmp::Reverse(deg[k]), k));

    ReoptWindow {
        beta,
        t_beta,
        fixed,
        free_chains: ordered,
        deg,
        origins: core.origins.clone(),
    }
}

/// Occupancy on the torus `[0, t)` used inside the branch-and-bound.
struct Torus {
    t: Time,
    busy: BTreeMap<Time, Time>,
}

impl Torus {
    fn new(t: Time, fixed: &[(Time, Time)]) -> Self {
        Self {
            t,
            busy: fixed.iter().copied().collect(),
        }
    }

    fn part_conflicts(&self, b: Time, e: Time) -> bool {
        if b >= e {
            return false;
        }
        self.busy.range(..e).next_back().is_some_and(|(_, &oe)| oe > b)
    }

    fn conflicts(&self, s: Time, p: Time) -> bool {
        if p >= self.t && !self.busy.is_empty() {
            return true;
        }
        let e = (s + p).min(self.t);
        self.part_conflicts(s, e) || (s + p > self.t && self.part_conflicts(0, s + p - self.t))
    }

    fn insert(&mut self, s: Time, p: Time) {
        let e = s + p;
        if e <= self.t {
            self.busy.insert(s, e);
        } else {
            self.busy.insert(s, self.t);
            self.busy.insert(0, e - self.t);
        }
    }

    fn remove(&mut self, s: Time, p: Time) {
        self.busy.remove(&s);
        if s + p > self.t {
            self.busy.remove(&0);
        }
    }

    /// Candidate starts at occupancy event points: each gap's start and its
    /// latest start still fitting `p`.
    fn event_candidates(&self, p: Time, extra: Time) -> Vec<Time> {
        let mut out = Vec::new();
        if self.busy.is_empty() {
            out.push(0);
        } else {
            let ivs: Vec<(Time, Time)> = self.busy.iter().map(|(&a, &b)| (a, b)).collect();
            for (i, &(_, end)) in ivs.iter().enumerate() {
                let next_start = if i + 1 < ivs.len() {
                    ivs[i + 1].0
                } else {
                    ivs[0].0 + self.t
                };
                let gap = next_start - end;
                if gap >= p {
                    out.push(end % self.t);
                    out.push((next_start - p) % self.t);
                }
            }
        }
        out.push(extra % self.t);
        out.sort_unstable();
        out.dedup();
        out.retain(|&s| !self.conflicts(s, p));
        out
    }
}

/// Per-chain objective contribution for a completed span.
fn chain_value(se: Time, t: Time, criterion: Criterion, alphas: &[Rat]) -> Time {
    let ceil = |a: Time, b: Time| (a + b - 1) / b;
    match criterion {
        Criterion::DgSum | Criterion::DgMax => ceil(se, t) - 1,
        Criterion::DgAlphaSum(i) => {
            let a = alphas[i];
            ceil(se * a.denom(), a.numer() * t) - 1
        }
    }
}

/// Result of one window optimization: new core starts for the free tasks,
/// or `None` when the incumbent could not be improved.
pub fn reopt_period(
    instance: &Instance,
    schedule: &Schedule,
    window: &ReoptWindow,
    criterion: Criterion,
    alphas: &[Rat],
    config: &MatheurConfig,
) -> Option<Vec<(TaskId, Time)>> {
    let t = window.t_beta;
    let is_sum = !matches!(criterion, Criterion::DgMax);

    // Free tasks in branching order: chain by chain (worst degeneracy
    // first), chain order within.
    struct Slot {
        id: TaskId,
        resource: usize,
        p: Time,
        first_of_chain: bool,
        last_of_chain: bool,
        /// No-worse cap on the chain's SE (sum criteria only).
        se_cap: Option<Time>,
    }
    let mut slots = Vec::new();
    for &k in &window.free_chains {
        let chain = &instance.chains()[k];
        let cap = is_sum.then_some((window.deg[k] + 1) * t);
        for (i, &id) in chain.tasks.iter().enumerate() {
            slots.push(Slot {
                id,
                resource: instance.task(id).resource,
                p: instance.task(id).proc_time,
                first_of_chain: i == 0,
                last_of_chain: i + 1 == chain.tasks.len(),
                se_cap: cap,
            });
        }
    }

    // Incumbent objective over the window's chains is the baseline to beat.
    let incumbent_value = {
        let mut acc: Time = 0;
        let mut mx: Time = 0;
        for &k in &window.free_chains {
            let chain = &instance.chains()[k];
            let first = chain.tasks[0];
            let last = *chain.tasks.last().unwrap();
            let se = schedule.start_of(last) + instance.task(last).proc_time
                - schedule.start_of(first);
            let v = chain_value(se, t, criterion, alphas);
            acc += v;
            mx = mx.max(v);
        }
        if is_sum {
            acc
        } else {
            mx
        }
    };
    if incumbent_value == 0 {
        return None;
    }

    let mut tori: Vec<Torus> = window
        .fixed
        .iter()
        .map(|f| Torus::new(t, f))
        .collect();

    struct Dfs<'a> {
        slots: &'a [Slot],
        t: Time,
        criterion: Criterion,
        alphas: &'a [Rat],
        is_sum: bool,
        tori: &'a mut Vec<Torus>,
        assignment: Vec<Time>,
        best: Option<(Time, Vec<Time>)>,
        nodes: u64,
        budget: u64,
        deadline: Instant,
        aborted: bool,
    }
    impl Dfs<'_> {
        /// `acc` = objective over completed chains (sum or running max);
        /// `prev_end` / `se` track the chain in progress.
        fn go(&mut self, depth: usize, acc: Time, prev_end: Time, se: Time) {
            if self.aborted {
                return;
            }
            let bound = self.best.as_ref().map_or(Time::MAX, |b| b.0);
            if acc >= bound {
                return;
            }
            let Some(slot) = self.slots.get(depth) else {
                self.best = Some((acc, self.assignment.clone()));
                return;
            };
            self.nodes += 1;
            if self.nodes > self.budget
                || (self.nodes % 4096 == 0 && Instant::now() >= self.deadline)
            {
                self.aborted = true;
                return;
            }
            let torus = &self.tori[slot.resource];
            let candidates: Vec<Time> = if self.t <= EXACT_PERIOD_LIMIT {
                (0..self.t).filter(|&s| !torus.conflicts(s, slot.p)).collect()
            } else {
                torus.event_candidates(slot.p, prev_end)
            };
            for s in candidates {
                let (new_prev_end, new_se) = if slot.first_of_chain {
                    (s + slot.p, slot.p)
                } else {
                    let df = (s + self.t - prev_end % self.t) % self.t;
                    debug_assert!(df < self.t);
                    (s + slot.p, se + df + slot.p)
                };
                if let Some(cap) = slot.se_cap {
                    if new_se > cap {
                        continue;
                    }
                }
                let next_acc = if slot.last_of_chain {
                    let v = chain_value(new_se, self.t, self.criterion, self.alphas);
                    if self.is_sum {
                        acc + v
                    } else {
                        acc.max(v)
                    }
                } else {
                    acc
                };
                if next_acc >= self.best.as_ref().map_or(Time::MAX, |b| b.0) {
                    continue;
                }
                self.assignment[depth] = s;
                self.tori[slot.resource].insert(s, slot.p);
                self.go(depth + 1, next_acc, new_prev_end, new_se);
                self.tori[slot.resource].remove(s, slot.p);
                if self.aborted {
                    return;
                }
            }
        }
    }

    let n = slots.len();
    let mut dfs = Dfs {
        slots: &slots,
        t,
        criterion,
        alphas,
        is_sum,
        tori: &mut tori,
        assignment: vec![0; n],
        best: None,
        nodes: 0,
        budget: config.node_budget,
        deadline: Instant::now() + std::time::Duration::from_secs_f64(config.iter_time_limit_s),
        aborted: false,
    };
    dfs.go(0, 0, 0, 0);
    let (value, assignment) = dfs.best?;
    if value >= incumbent_value {
        return None;
    }
    // Positions are already core starts: residues in [0, t).
    Some(slots.iter().zip(assignment).map(|(slot, s)| (slot.id, s)).collect())
}

/// One improvement-log row: (period index, chunk index, delta of the
/// configured criterion, elapsed ms).
pub type LogRow = (usize, usize, i64, u64);

/// Sweeps target periods longest to shortest, chunking oversized windows by
/// the K worst-degeneracy chains, and returns the improved schedule plus
/// the improvement log.
pub fn reopt_sweep_logged(
    instance: &Instance,
    schedule: &Schedule,
    criterion: Criterion,
    alphas: &[Rat],
    config: &MatheurConfig,
) -> (Schedule, Vec<LogRow>) {
    let started = Instant::now();
    let mut current = schedule.clone();
    let mut log = Vec::new();
    for beta in (0..instance.period_set().rho()).rev() {
        let period_chains: Vec<usize> = instance
            .chains()
            .iter()
            .enumerate()
            .filter(|(_, c)| c.period_index == beta)
            .map(|(k, _)| k)
            .collect();
        if period_chains.is_empty() {
            continue;
        }
        let total_tasks: usize = period_chains
            .iter()
            .map(|&k| instance.chains()[k].tasks.len())
            .sum();
        let chunked = total_tasks > config.max_free_tasks;
        let mut round = 0usize;
        loop {
            let selection: Vec<usize> = if chunked {
                let report = compute_criteria_unchecked(instance, &current, &[]);
                let mut by_deg = period_chains.clone();
                by_deg.sort_by_key(|&k| (std::cmp::Reverse(report.chains[k].dg), k));
                by_deg.into_iter().take(config.chunk_k).collect()
            } else {
                period_chains.clone()
            };
            let window = build_window(instance, &current, beta, &selection);
            let before = window_value(instance, &current, &selection, criterion, alphas);
            match reopt_period(instance, &current, &window, criterion, alphas, config) {
                Some(placements) => {
                    current = apply_placements(instance, &current, &selection, &placements);
                    let after = window_value(instance, &current, &selection, criterion, alphas);
                    log.push((
                        beta,
                        round,
                        after as i64 - before as i64,
                        started.elapsed().as_millis() as u64,
                    ));
                    debug_assert!(crate::feasibility::check_feasible(instance, &current).is_ok());
                }
                None => break,
            }
            round += 1;
            if round > instance.chains().len() {
                break;
            }
        }
    }
    (current, log)
}

pub fn reopt_sweep(
    instance: &Instance,
    schedule: &Schedule,
    criterion: Criterion,
    alphas: &[Rat],
    config: &MatheurConfig,
) -> Schedule {
    reopt_sweep_logged(instance, schedule, criterion, alphas, config).0
}

/// Criterion contribution of the given chains under `schedule`.
pub fn window_value(
    instance: &Instance,
    schedule: &Schedule,
    chains: &[usize],
    criterion: Criterion,
    alphas: &[Rat],
) -> Time {
    let is_sum = !matches!(criterion, Criterion::DgMax);
    let mut acc = 0;
    let mut mx = 0;
    for &k in chains {
        let chain = &instance.chains()[k];
        let t = instance.period_set().period(chain.period_index);
        let first = chain.tasks[0];
        let last = *chain.tasks.last().unwrap();
        let se =
            schedule.start_of(last) + instance.task(last).proc_time - schedule.start_of(first);
        let v = chain_value(se, t, criterion, alphas);
        acc += v;
        mx = mx.max(v);
    }
    if is_sum {
        acc
    } else {
        mx
    }
}

/// Rewrites the touched chains from their new core starts via the
/// postponement rule; every other task keeps its start bit-identically.
pub fn apply_placements(
    instance: &Instance,
    schedule: &Schedule,
    chains: &[usize],
    placements: &[(TaskId, Time)],
) -> Schedule {
    let mut sigma: Vec<Time> = (0..instance.num_tasks())
        .map(|i| {
            let id = TaskId(i);
            schedule.start_of(id) % instance.period_of(id)
        })
        .collect();
    for &(id, s) in placements {
        sigma[id.0] = s;
    }
    let mut start = schedule.start.clone();
    for &k in chains {
        let chain = &instance.chains()[k];
        let t = instance.period_set().period(chain.period_index);
        let mut q: Time = 0;
        for (i, &id) in chain.tasks.iter().enumerate() {
            if i > 0 {
                let prev = chain.tasks[i - 1];
                let prev_end = sigma[prev.0] + instance.task(prev).proc_time;
                if prev_end <= sigma[id.0] {
                } else if prev_end <= sigma[id.0] + t {
                    q += 1;
                } else {
                    q += 2;
                }
            }
            start[id.0] = sigma[id.0] + q * t;
        }
    }
    Schedule::new(start)
}
