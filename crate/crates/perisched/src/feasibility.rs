//! Feasibility checking and the core-schedule / postponement correspondence.

use crate::model::{CoreSchedule, Instance, ModelError, Schedule, TaskId, Time};

/// Outcome of a feasibility check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeasibilityVerdict {
    Ok,
    /// Task `later` starts before `earlier` finishes within its chain.
    PrecedenceViolation {
        chain: usize,
        earlier: TaskId,
        later: TaskId,
    },
    /// Two occurrences overlap on a resource; `time` is a concrete instant
    /// at which both tasks are busy.
    CapacityViolation {
        resource: usize,
        first: TaskId,
        second: TaskId,
        time: Time,
    },
}

impl FeasibilityVerdict {
    pub fn is_ok(&self) -> bool {
        matches!(self, FeasibilityVerdict::Ok)
    }
}

/// Tests whether two periodic tasks collide on a shared resource.
///
/// Both occurrence patterns repeat with harmonic periods, so reducing modulo
/// the smaller period turns the question into intersection of two intervals
/// on the torus `Z_t`, which is O(1) per pair.
pub fn periodic_overlap(s1: Time, p1: Time, t1: Time, s2: Time, p2: Time, t2: Time) -> bool {
    let t = t1.min(t2);
    debug_assert!(t1.max(t2) % t == 0, "periods must be harmonic");
    let a = s1 % t;
    let b = s2 % t;
    if p1 >= t || p2 >= t {
        return true;
    }
    (b + t - a) % t < p1 || (a + t - b) % t < p2
}

/// Checks precedence (within each chain) and capacity (pairwise per
/// resource) for a complete schedule.
pub fn check_feasible(instance: &Instance, schedule: &Schedule) -> FeasibilityVerdict {
    if schedule.start.len() != instance.num_tasks() {
        // An incomplete schedule cannot be checked meaningfully.
        panic!(
            "schedule covers {} tasks, instance has {}",
            schedule.start.len(),
            instance.num_tasks()
        );
    }
    for (k, chain) in instance.chains().iter().enumerate() {
        for pair in chain.tasks.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let end = schedule.start_of(a) + instance.task(a).proc_time;
            if schedule.start_of(b) < end {
                return FeasibilityVerdict::PrecedenceViolation {
                    chain: k,
                    earlier: a,
                    later: b,
                };
            }
        }
    }
    for m in 0..instance.num_resources() {
        let ids = instance.tasks_on_resource(m);
        for (i, &a) in ids.iter().enumerate() {
            for &b in &ids[i + 1..] {
                let (sa, pa, ta) = (
                    schedule.start_of(a),
                    instance.task(a).proc_time,
                    instance.period_of(a),
                );
                let (sb, pb, tb) = (
                    schedule.start_of(b),
                    instance.task(b).proc_time,
                    instance.period_of(b),
                );
                if periodic_overlap(sa, pa, ta, sb, pb, tb) {
                    let time = first_overlap_instant(sa, pa, ta, sb, pb, tb);
                    return FeasibilityVerdict::CapacityViolation {
                        resource: m,
                        first: a,
                        second: b,
                        time,
                    };
                }
            }
        }
    }
    FeasibilityVerdict::Ok
}

/// Finds an instant (modulo the longer period, steady state) at which both
/// tasks are busy. Only called on a known-violating pair.
fn first_overlap_instant(s1: Time, p1: Time, t1: Time, s2: Time, p2: Time, t2: Time) -> Time {
    // Orient so task A has the shorter period.
    let (sa, pa, ta, sb, _pb, tb) = if t1 <= t2 {
        (s1, p1, t1, s2, p2, t2)
    } else {
        (s2, p2, t2, s1, p1, t1)
    };
    let a = sa % ta;
    let b = sb % tb;
    let bo = b % ta;
    if pa >= ta || (bo + ta - a) % ta < pa {
        // A is busy when B's occurrence starts.
        return b;
    }
    // Otherwise B's occurrence runs into the next start of A.
    b + (a + ta - bo) % ta
}

/// Derives the per-resource core schedules of a (chain) schedule:
/// `sigma = t mod T`, plus the observation-interval origin of each resource
/// (start of its earliest least-period task, 0 if it hosts none).
pub fn derive_core(instance: &Instance, schedule: &Schedule) -> CoreSchedule {
    let w = instance.period_set().w();
    let sigma: Vec<Time> = (0..instance.num_tasks())
        .map(|i| {
            let id = TaskId(i);
            schedule.start_of(id) % instance.period_of(id)
        })
        .collect();
    let origins = (0..instance.num_resources())
        .map(|m| {
            instance
                .tasks_on_resource(m)
                .iter()
                .filter(|&&id| instance.period_of(id) == w)
                .map(|&id| sigma[id.0])
                .min()
                .unwrap_or(0)
        })
        .collect();
    CoreSchedule { sigma, origins }
}

/// Rebuilds a precedence-feasible schedule from capacity-feasible core
/// schedules by postponing successors to later periods where needed.
///
/// Returns the schedule and, per chain, the postponement counts `q_i`
/// (so `q` of the last task is the chain's degeneracy).
pub fn postpone_to_schedule(
    instance: &Instance,
    core: &CoreSchedule,
) -> Result<(Schedule, Vec<Vec<Time>>), ModelError> {
    let mut start = vec![0; instance.num_tasks()];
    let mut counts = Vec::with_capacity(instance.chains().len());
    for chain in instance.chains() {
        let period = instance.period_set().period(chain.period_index);
        let mut qs = Vec::with_capacity(chain.tasks.len());
        let mut q: Time = 0;
        for (i, &id) in chain.tasks.iter().enumerate() {
            let sigma = core.sigma_of(id);
            if sigma >= period {
                return Err(ModelError::SigmaOutOfRange {
                    sigma,
                    period,
                });
            }
            if i > 0 {
                let prev = chain.tasks[i - 1];
                let prev_end = core.sigma_of(prev) + instance.task(prev).proc_time;
                if prev_end <= sigma {
                    // q unchanged
                } else if prev_end <= sigma + period {
                    q += 1;
                } else {
                    q += 2;
                }
            }
            start[id.0] = sigma + q * period;
            qs.push(q);
        }
        counts.push(qs);
    }
    Ok((Schedule::new(start), counts))
}
