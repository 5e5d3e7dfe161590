//! First-fit scheduling: maps an ordered task list to a schedule by placing
//! each task at the earliest start that keeps every occurrence conflict-free,
//! then postpones successors to restore precedence.

use thiserror::Error;

use crate::feasibility::{derive_core, postpone_to_schedule};
use crate::model::{Instance, Schedule, TaskId, Time};

/// Where the start search begins for each task.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlacementMethod {
    /// Search from t = 0 for every task.
    Leftmost,
    /// Search from the predecessor's completion time when the predecessor is
    /// already placed, else from 0.
    Predecessor,
}

#[derive(Debug, Error)]
#[error("no feasible start for task {task:?} under the given order")]
pub struct InfeasibleAt {
    pub order: Vec<TaskId>,
    pub task: TaskId,
}

/// Occupancy of one resource over the torus `[0, hyperperiod)`.
///
/// Intervals are kept in a sorted map keyed by start; occurrences that wrap
/// past the hyperperiod are split in two.
#[derive(Debug, Clone)]
pub struct ResourceTimeline {
    hyper: Time,
    busy: std::collections::BTreeMap<Time, Time>,
}

impl ResourceTimeline {
    pub fn new(hyper: Time) -> Self {
        Self {
            hyper,
            busy: Default::default(),
        }
    }

    /// Occupied interval overlapping `[b, e)` (no wraparound), if any.
    fn conflict_in(&self, b: Time, e: Time) -> Option<(Time, Time)> {
        if b >= e {
            return None;
        }
        let (&os, &oe) = self.busy.range(..e).next_back()?;
        (oe > b).then_some((os, oe))
    }

    /// If an occurrence `[b, b+len)` (wrap-aware) hits existing occupancy,
    /// returns the smallest forward shift of the occurrence that clears the
    /// blocking interval.
    fn conflict_shift(&self, b: Time, len: Time) -> Option<Time> {
        debug_assert!(b < self.hyper);
        let e = (b + len).min(self.hyper);
        if let Some((_, oe)) = self.conflict_in(b, e) {
            return Some(oe - b);
        }
        if b + len > self.hyper {
            if let Some((_, oe)) = self.conflict_in(0, b + len - self.hyper) {
                return Some(oe + self.hyper - b);
            }
        }
        None
    }

    /// True when a task of the given period and length can start at `s`.
    pub fn is_free(&self, s: Time, len: Time, period: Time) -> bool {
        (0..self.hyper / period)
            .all(|j| self.conflict_shift((s + j * period) % self.hyper, len).is_none())
    }

    /// Marks all occurrences of a placement as busy. Caller guarantees the
    /// slot is free.
    pub fn insert(&mut self, s: Time, len: Time, period: Time) {
        for j in 0..self.hyper / period {
            let b = (s + j * period) % self.hyper;
            let e = b + len;
            if e <= self.hyper {
                self.busy.insert(b, e);
            } else {
                self.busy.insert(b, self.hyper);
                self.busy.insert(0, e - self.hyper);
            }
        }
    }
}

/// Least start `s >= from` such that no occurrence `s + j*period` overlaps
/// the timeline, or `None` when no such start exists within one period of
/// `from` (beyond that, candidate residues repeat).
pub fn earliest_fit(
    timeline: &ResourceTimeline,
    period: Time,
    len: Time,
    from: Time,
) -> Option<Time> {
    let limit = from + period;
    let occurrences = timeline.hyper / period;
    let mut s = from;
    'candidate: while s < limit {
        for j in 0..occurrences {
            let b = (s + j * period) % timeline.hyper;
            if let Some(shift) = timeline.conflict_shift(b, len) {
                // The shift is forced: the occurrence overlaps the blocking
                // interval for every smaller advance.
                s += shift;
                continue 'candidate;
            }
        }
        return Some(s);
    }
    None
}

/// Places every task of `order` in turn, then postpones successors so the
/// result satisfies precedence. `predecessor_tail` makes the predecessor
/// method fall back to the latest placement on the task's resource (instead
/// of 0) when the predecessor has not been placed yet.
pub fn ffs_run(
    instance: &Instance,
    order: &[TaskId],
    method: PlacementMethod,
    predecessor_tail: bool,
) -> Result<Schedule, InfeasibleAt> {
    debug_assert!(is_permutation(instance, order));
    let hyper = instance.period_set().hyperperiod();
    let mut timelines: Vec<ResourceTimeline> = (0..instance.num_resources())
        .map(|_| ResourceTimeline::new(hyper))
        .collect();
    let mut last_end = vec![0; instance.num_resources()];
    let mut placed: Vec<Option<Time>> = vec![None; instance.num_tasks()];

    for &id in order {
        let task = instance.task(id);
        let period = instance.period_of(id);
        let from = match method {
            PlacementMethod::Leftmost => 0,
            PlacementMethod::Predecessor => match instance.predecessor(id) {
                Some(pred) => match placed[pred.0] {
                    Some(t) => t + instance.task(pred).proc_time,
                    None if predecessor_tail => last_end[task.resource],
                    None => 0,
                },
                None => 0,
            },
        };
        let timeline = &mut timelines[task.resource];
        let Some(s) = earliest_fit(timeline, period, task.proc_time, from) else {
            return Err(InfeasibleAt {
                order: order.to_vec(),
                task: id,
            });
        };
        timeline.insert(s, task.proc_time, period);
        placed[id.0] = Some(s);
        last_end[task.resource] = last_end[task.resource].max(s + task.proc_time);
    }

    let raw = Schedule::new(placed.into_iter().map(Option::unwrap).collect());
    let core = derive_core(instance, &raw);
    // sigma < period always holds after the modulo reduction.
    let (schedule, _) = postpone_to_schedule(instance, &core).unwrap();
    Ok(schedule)
}

pub fn is_permutation(instance: &Instance, order: &[TaskId]) -> bool {
    if order.len() != instance.num_tasks() {
        return false;
    }
    let mut seen = vec![false; instance.num_tasks()];
    for &id in order {
        if id.0 >= seen.len() || seen[id.0] {
            return false;
        }
        seen[id.0] = true;
    }
    true
}
