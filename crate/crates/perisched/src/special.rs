//! Polynomial special cases: the two-resource single-period scattering
//! solved by Johnson's rule, and offset schedules on line and out-tree
//! resource topologies.

use thiserror::Error;

use crate::criteria::{compute_criteria_unchecked, CriteriaReport};
use crate::feasibility::check_feasible;
use crate::model::{CoreSchedule, Instance, Schedule, Time, TopologyMeta};
use crate::packing::{pack_canonical, packing_to_core_starts, PackOutcome, DEFAULT_PACK_BUDGET};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SpecialError {
    #[error("chain {0} is not a two-task resource-1/resource-2 chain")]
    NotTwoResourceChain(usize),
    #[error("instance must have exactly one period")]
    NotSinglePeriod,
    #[error("instance must have exactly two resources")]
    NotTwoResources,
    #[error("chain {chain}: tasks must run on consecutive resources from the first one, got resource {resource} at position {index}")]
    NotScattering {
        chain: usize,
        index: usize,
        resource: usize,
    },
    #[error("chain {0} has unequal processing times")]
    UnequalProcTimes(usize),
    #[error("instance carries no usable topology metadata")]
    MissingTopology,
    #[error("tree topology must have exactly one root")]
    BadTreeRoot,
    #[error("chain {chain}: resource {resource} does not follow its predecessor in the tree")]
    NotTreePath { chain: usize, resource: usize },
    #[error("root resource admits no height-divisible packing")]
    RootUnsat,
    #[error("root packing ran out of search budget")]
    RootUnknown,
}

/// Chains scattering down a line of resources `1..M`: chain `k` runs on
/// resources `1..u^k` with one fixed processing time `p^k`.
#[derive(Debug)]
pub struct LineInstance<'a> {
    pub instance: &'a Instance,
    /// Number of resources chain `k` traverses (its last resource,
    /// 1-based).
    pub reach: Vec<usize>,
    /// Common processing time per chain.
    pub proc: Vec<Time>,
}

impl<'a> LineInstance<'a> {
    pub fn try_new(instance: &'a Instance) -> Result<Self, SpecialError> {
        let mut reach = Vec::new();
        let mut proc = Vec::new();
        for (k, chain) in instance.chains().iter().enumerate() {
            let p0 = instance.task(chain.tasks[0]).proc_time;
            for (i, &id) in chain.tasks.iter().enumerate() {
                let task = instance.task(id);
                if task.resource != i {
                    return Err(SpecialError::NotScattering {
                        chain: k,
                        index: i,
                        resource: task.resource,
                    });
                }
                if task.proc_time != p0 {
                    return Err(SpecialError::UnequalProcTimes(k));
                }
            }
            reach.push(chain.tasks.len());
            proc.push(p0);
        }
        Ok(Self {
            instance,
            reach,
            proc,
        })
    }
}

/// Chains scattering down an out-tree of resources: every chain starts at
/// the root and follows a directed root-to-node path.
#[derive(Debug)]
pub struct TreeInstance<'a> {
    pub instance: &'a Instance,
    pub parents: Vec<Option<usize>>,
    pub root: usize,
    pub proc: Vec<Time>,
}

impl<'a> TreeInstance<'a> {
    pub fn try_new(instance: &'a Instance) -> Result<Self, SpecialError> {
        let Some(TopologyMeta::Tree { parents }) = &instance.topology else {
            return Err(SpecialError::MissingTopology);
        };
        let roots: Vec<usize> = (0..instance.num_resources())
            .filter(|&r| parents.get(r).copied().flatten().is_none())
            .collect();
        let [root] = roots[..] else {
            return Err(SpecialError::BadTreeRoot);
        };
        let mut proc = Vec::new();
        for (k, chain) in instance.chains().iter().enumerate() {
            let p0 = instance.task(chain.tasks[0]).proc_time;
            let first = instance.task(chain.tasks[0]).resource;
            if first != root {
                return Err(SpecialError::NotTreePath {
                    chain: k,
                    resource: first,
                });
            }
            for pair in chain.tasks.windows(2) {
                let (a, b) = (
                    instance.task(pair[0]).resource,
                    instance.task(pair[1]).resource,
                );
                if parents[b] != Some(a) {
                    return Err(SpecialError::NotTreePath {
                        chain: k,
                        resource: b,
                    });
                }
            }
            for &id in &chain.tasks {
                if instance.task(id).proc_time != p0 {
                    return Err(SpecialError::UnequalProcTimes(k));
                }
            }
            proc.push(p0);
        }
        Ok(Self {
            instance,
            parents: parents.clone(),
            root,
            proc,
        })
    }
}

/// Root core schedule replicated down the topology with one offset per
/// resource.
#[derive(Debug, Clone)]
pub struct OffsetSchedule {
    /// Core start of each chain's first task on the root resource.
    pub root_sigma: Vec<Time>,
    /// Offset per resource; 0 at the root.
    pub offsets: Vec<Time>,
}

/// Johnson's rule on the two-resource single-period scattering: a
/// permutation schedule with the resource-1 block left-shifted, the
/// resource-2 block right-shifted against the optimal flow-shop makespan.
/// Every chain ends with degeneracy 0.
pub fn johnson_single_period(instance: &Instance) -> Result<Schedule, SpecialError> {
    if instance.period_set().rho() != 1 {
        return Err(SpecialError::NotSinglePeriod);
    }
    if instance.num_resources() != 2 {
        return Err(SpecialError::NotTwoResources);
    }
    for (k, chain) in instance.chains().iter().enumerate() {
        let ok = chain.tasks.len() == 2
            && instance.task(chain.tasks[0]).resource == 0
            && instance.task(chain.tasks[1]).resource == 1;
        if !ok {
            return Err(SpecialError::NotTwoResourceChain(k));
        }
    }
    // Per-resource load <= T is enforced at instance construction
    // (hyperperiod = T here).

    let p1 = |k: usize| instance.task(instance.chains()[k].tasks[0]).proc_time;
    let p2 = |k: usize| instance.task(instance.chains()[k].tasks[1]).proc_time;
    let mut order: Vec<usize> = (0..instance.chains().len()).collect();
    order.sort_by_key(|&k| {
        if p1(k) < p2(k) {
            (0, p1(k), k)
        } else {
            (1, Time::MAX - p2(k), k)
        }
    });

    // Flow-shop completion recurrence gives the optimal makespan.
    let (mut c1, mut c2) = (0, 0);
    for &k in &order {
        c1 += p1(k);
        c2 = c2.max(c1) + p2(k);
    }
    let makespan = c2;

    let mut start = vec![0; instance.num_tasks()];
    let mut acc1 = 0;
    for &k in &order {
        start[instance.chains()[k].tasks[0].0] = acc1;
        acc1 += p1(k);
    }
    let mut tail = makespan;
    for &k in order.iter().rev() {
        tail -= p2(k);
        start[instance.chains()[k].tasks[1].0] = tail;
    }
    Ok(Schedule::new(start))
}

fn offset_result(
    instance: &Instance,
    root_sigma: Vec<Time>,
    offsets: Vec<Time>,
    resource_of: impl Fn(usize, usize) -> usize,
) -> (OffsetSchedule, Schedule, CriteriaReport) {
    let mut start = vec![0; instance.num_tasks()];
    for (k, chain) in instance.chains().iter().enumerate() {
        for (i, &id) in chain.tasks.iter().enumerate() {
            start[id.0] = root_sigma[k] + offsets[resource_of(k, i)];
        }
    }
    let schedule = Schedule::new(start);
    let report = compute_criteria_unchecked(instance, &schedule, &[]);
    (
        OffsetSchedule {
            root_sigma,
            offsets,
        },
        schedule,
        report,
    )
}

/// Offset schedule on a line: each edge's offset increment is the largest
/// processing time among chains crossing it, so every chain's spacing is
/// exactly met and `SE^k = o_{u^k} + p^k`.
pub fn offset_schedule_line(
    line: &LineInstance,
    root_core: &CoreSchedule,
) -> (OffsetSchedule, Schedule, CriteriaReport) {
    let instance = line.instance;
    let m = instance.num_resources();
    let root_sigma: Vec<Time> = instance
        .chains()
        .iter()
        .map(|c| root_core.sigma_of(c.tasks[0]))
        .collect();
    let mut offsets = vec![0; m];
    for r in 1..m {
        let crossing = (0..instance.chains().len())
            .filter(|&k| line.reach[k] > r)
            .map(|k| line.proc[k])
            .max()
            .unwrap_or(0);
        offsets[r] = offsets[r - 1] + crossing;
    }
    offset_result(instance, root_sigma, offsets, |k, i| {
        debug_assert!(i < line.reach[k]);
        i
    })
}

/// Offset schedule on an out-tree: per edge, the increment is the largest
/// processing time among chains whose path crosses that edge.
pub fn offset_schedule_tree(
    tree: &TreeInstance,
    root_core: &CoreSchedule,
) -> (OffsetSchedule, Schedule, CriteriaReport) {
    let instance = tree.instance;
    let m = instance.num_resources();
    let root_sigma: Vec<Time> = instance
        .chains()
        .iter()
        .map(|c| root_core.sigma_of(c.tasks[0]))
        .collect();
    // One DFS-free pass: per-edge maxima keyed by the child resource.
    let mut edge_max = vec![0; m];
    for (k, chain) in instance.chains().iter().enumerate() {
        for &id in &chain.tasks[1..] {
            let child = instance.task(id).resource;
            edge_max[child] = edge_max[child].max(tree.proc[k]);
        }
    }
    // Offsets accumulate along root-to-node paths; resolve iteratively
    // (parents may appear in any index order).
    let mut offsets = vec![None; m];
    offsets[tree.root] = Some(0);
    let mut remaining: Vec<usize> = (0..m).filter(|&r| r != tree.root).collect();
    while !remaining.is_empty() {
        let before = remaining.len();
        remaining.retain(|&r| match tree.parents[r] {
            Some(parent) => match offsets[parent] {
                Some(o) => {
                    offsets[r] = Some(o + edge_max[r]);
                    false
                }
                None => true,
            },
            // Disconnected resource never used by a validated chain.
            None => {
                offsets[r] = Some(0);
                false
            }
        });
        assert!(remaining.len() < before, "parent links contain a loop");
    }
    let offsets: Vec<Time> = offsets.into_iter().map(Option::unwrap).collect();
    let chains = instance.chains();
    let resource_of = move |k: usize, i: usize| instance.task(chains[k].tasks[i]).resource;
    offset_result(instance, root_sigma, offsets, resource_of)
}

/// Packs the root resource, then replicates it down the topology with
/// offsets. The returned schedule is verified end to end.
pub fn solve_theory(instance: &Instance) -> Result<(Schedule, CriteriaReport), SpecialError> {
    let is_tree = matches!(instance.topology, Some(TopologyMeta::Tree { .. }));
    let root = if is_tree {
        TreeInstance::try_new(instance)?.root
    } else {
        LineInstance::try_new(instance)?;
        0
    };
    let rects = match pack_canonical(instance, root, DEFAULT_PACK_BUDGET) {
        PackOutcome::Packed { rects, .. } => rects,
        PackOutcome::Unsat => return Err(SpecialError::RootUnsat),
        PackOutcome::Unknown => return Err(SpecialError::RootUnknown),
    };
    let mut sigma = vec![0; instance.num_tasks()];
    for (id, s) in packing_to_core_starts(instance, &rects).expect("packer output is aligned") {
        sigma[id.0] = s;
    }
    let core = CoreSchedule {
        sigma,
        origins: vec![0; instance.num_resources()],
    };
    let (_, schedule, report) = if is_tree {
        let tree = TreeInstance::try_new(instance)?;
        offset_schedule_tree(&tree, &core)
    } else {
        let line = LineInstance::try_new(instance)?;
        offset_schedule_line(&line, &core)
    };
    assert!(
        check_feasible(instance, &schedule).is_ok(),
        "offset construction must preserve feasibility"
    );
    Ok((schedule, report))
}
