//! Instance and schedule data model.
//!
//! An instance is a set of chains of periodic tasks. Every task of a chain
//! shares the chain's period, taken from a harmonic period set, and runs on a
//! pre-assigned unit-capacity resource. A schedule assigns an integer start
//! time to the first occurrence of every task; the occurrence pattern then
//! repeats with the task's period.

use thiserror::Error;

/// All times are integers. Non-integer inputs are rejected at load time.
pub type Time = u64;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("period list must be non-empty, ascending and harmonic: {0}")]
    BadPeriods(String),
    #[error("chain {0} is empty")]
    EmptyChain(usize),
    #[error("chain {chain} has period index {index} out of range")]
    BadPeriodIndex { chain: usize, index: usize },
    #[error("task {index} of chain {chain}: resource {resource} out of range 1..={max}")]
    BadResource {
        chain: usize,
        index: usize,
        resource: usize,
        max: usize,
    },
    #[error("task {index} of chain {chain}: processing time {proc_time} invalid (must be in 1..=period {period})")]
    BadProcTime {
        chain: usize,
        index: usize,
        proc_time: Time,
        period: Time,
    },
    #[error("resource {resource} is over-utilized: busy {busy} of {hyperperiod} time units per hyperperiod")]
    OverUtilized {
        resource: usize,
        busy: Time,
        hyperperiod: Time,
    },
    #[error("unknown task reference: chain {chain}, task {index}")]
    UnknownTask { chain: usize, index: usize },
    #[error("core start {sigma} out of range for period {period}")]
    SigmaOutOfRange { sigma: Time, period: Time },
}

/// Ascending harmonic periods `T_1..T_rho`, each dividing the next.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeriodSet {
    periods: Vec<Time>,
}

impl PeriodSet {
    pub fn new(periods: Vec<Time>) -> Result<Self, ModelError> {
        if periods.is_empty() {
            return Err(ModelError::BadPeriods("empty".into()));
        }
        if periods[0] == 0 {
            return Err(ModelError::BadPeriods("zero period".into()));
        }
        for win in periods.windows(2) {
            let (a, b) = (win[0], win[1]);
            if b <= a || b % a != 0 {
                return Err(ModelError::BadPeriods(format!(
                    "{b} does not harmonically extend {a}"
                )));
            }
        }
        Ok(Self { periods })
    }

    pub fn periods(&self) -> &[Time] {
        &self.periods
    }

    /// Number of distinct periods, `rho`.
    pub fn rho(&self) -> usize {
        self.periods.len()
    }

    /// The least period `w`, which is the bin width in the packing view.
    pub fn w(&self) -> Time {
        self.periods[0]
    }

    /// The longest period, equal to the hyperperiod under harmonicity.
    pub fn hyperperiod(&self) -> Time {
        *self.periods.last().unwrap()
    }

    /// Ratios `b_l = T_l / T_{l-1}` for `l = 2..=rho` (all at least 2).
    pub fn multipliers(&self) -> Vec<Time> {
        self.periods.windows(2).map(|p| p[1] / p[0]).collect()
    }

    /// Number of width-`w` rows in one hyperperiod, `H`.
    pub fn height(&self) -> Time {
        self.hyperperiod() / self.w()
    }

    pub fn period(&self, index: usize) -> Time {
        self.periods[index]
    }

    /// Rectangle height for period class `index`: hyperperiod / T.
    pub fn rect_height(&self, index: usize) -> Time {
        self.hyperperiod() / self.periods[index]
    }
}

/// Flat task identifier, stable across an instance's lifetime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TaskId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Task {
    /// Chain this task belongs to (0-based).
    pub chain: usize,
    /// Position within the chain (0-based).
    pub index: usize,
    pub proc_time: Time,
    /// Resource index (0-based).
    pub resource: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chain {
    /// Index into the instance's period set (0-based).
    pub period_index: usize,
    /// Tasks in chain order.
    pub tasks: Vec<TaskId>,
}

/// Topology metadata carried by instance files, consumed by the
/// special-case validators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TopologyMeta {
    Line,
    /// `parents[r]` is the parent resource of `r`, or `None` for the root.
    Tree { parents: Vec<Option<usize>> },
}

/// Chain description used to build an instance: period index (0-based) and
/// `(resource, proc_time)` pairs in chain order.
#[derive(Debug, Clone)]
pub struct ChainSpec {
    pub period_index: usize,
    pub tasks: Vec<(usize, Time)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    period_set: PeriodSet,
    num_resources: usize,
    chains: Vec<Chain>,
    tasks: Vec<Task>,
    tasks_by_resource: Vec<Vec<TaskId>>,
    pub topology: Option<TopologyMeta>,
}

impl Instance {
    /// Validates and builds an instance. Rejects over-utilized resources,
    /// out-of-range resource indices and processing times outside
    /// `1..=period`.
    pub fn new(
        period_set: PeriodSet,
        num_resources: usize,
        specs: Vec<ChainSpec>,
    ) -> Result<Self, ModelError> {
        let mut chains = Vec::with_capacity(specs.len());
        let mut tasks = Vec::new();
        let mut tasks_by_resource = vec![Vec::new(); num_resources];
        for (k, spec) in specs.iter().enumerate() {
            if spec.tasks.is_empty() {
                return Err(ModelError::EmptyChain(k));
            }
            if spec.period_index >= period_set.rho() {
                return Err(ModelError::BadPeriodIndex {
                    chain: k,
                    index: spec.period_index,
                });
            }
            let period = period_set.period(spec.period_index);
            let mut ids = Vec::with_capacity(spec.tasks.len());
            for (i, &(resource, proc_time)) in spec.tasks.iter().enumerate() {
                if resource >= num_resources {
                    return Err(ModelError::BadResource {
                        chain: k,
                        index: i,
                        resource,
                        max: num_resources,
                    });
                }
                if proc_time == 0 || proc_time > period {
                    return Err(ModelError::BadProcTime {
                        chain: k,
                        index: i,
                        proc_time,
                        period,
                    });
                }
                let id = TaskId(tasks.len());
                tasks.push(Task {
                    chain: k,
                    index: i,
                    proc_time,
                    resource,
                });
                tasks_by_resource[resource].push(id);
                ids.push(id);
            }
            chains.push(Chain {
                period_index: spec.period_index,
                tasks: ids,
            });
        }
        let instance = Self {
            period_set,
            num_resources,
            chains,
            tasks,
            tasks_by_resource,
            topology: None,
        };
        // Utilization above 1 cannot be scheduled; reject at load time.
        for m in 0..num_resources {
            let busy = instance.busy_time(m);
            if busy > instance.period_set.hyperperiod() {
                return Err(ModelError::OverUtilized {
                    resource: m,
                    busy,
                    hyperperiod: instance.period_set.hyperperiod(),
                });
            }
        }
        Ok(instance)
    }

    pub fn period_set(&self) -> &PeriodSet {
        &self.period_set
    }

    pub fn num_resources(&self) -> usize {
        self.num_resources
    }

    pub fn chains(&self) -> &[Chain] {
        &self.chains
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn num_tasks(&self) -> usize {
        self.tasks.len()
    }

    pub fn task(&self, id: TaskId) -> &Task {
        &self.tasks[id.0]
    }

    pub fn tasks_on_resource(&self, m: usize) -> &[TaskId] {
        &self.tasks_by_resource[m]
    }

    /// Period of the chain the task belongs to.
    pub fn period_of(&self, id: TaskId) -> Time {
        self.period_set
            .period(self.chains[self.tasks[id.0].chain].period_index)
    }

    pub fn period_index_of(&self, id: TaskId) -> usize {
        self.chains[self.tasks[id.0].chain].period_index
    }

    /// Busy time of resource `m` within one hyperperiod (exact integer).
    /// `U_m = busy_time(m) / hyperperiod`.
    pub fn busy_time(&self, m: usize) -> Time {
        let hyper = self.period_set.hyperperiod();
        self.tasks_by_resource[m]
            .iter()
            .map(|&id| self.tasks[id.0].proc_time * (hyper / self.period_of(id)))
            .sum()
    }

    /// Predecessor of a task in its chain, if any.
    pub fn predecessor(&self, id: TaskId) -> Option<TaskId> {
        let task = &self.tasks[id.0];
        if task.index == 0 {
            None
        } else {
            Some(self.chains[task.chain].tasks[task.index - 1])
        }
    }

    /// Human-readable `chain.task` label, 1-based as in instance files.
    pub fn label(&self, id: TaskId) -> String {
        let t = &self.tasks[id.0];
        format!("{}.{}", t.chain + 1, t.index + 1)
    }
}

/// Start time of the first occurrence of every task, indexed by `TaskId`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    pub start: Vec<Time>,
}

impl Schedule {
    pub fn new(start: Vec<Time>) -> Self {
        Self { start }
    }

    pub fn start_of(&self, id: TaskId) -> Time {
        self.start[id.0]
    }
}

/// Per-task start times reduced modulo each task's period, plus the
/// observation-interval origin of every resource.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoreSchedule {
    pub sigma: Vec<Time>,
    pub origins: Vec<Time>,
}

impl CoreSchedule {
    pub fn sigma_of(&self, id: TaskId) -> Time {
        self.sigma[id.0]
    }
}
