//! Schedule <-> height-divisible 2D packing correspondence, the canonical
//! backtracking packer used for warm starts, and order inference from packed
//! schedules.
//!
//! A resource's core schedule over one hyperperiod, cut into rows of width
//! `w` (the least period), becomes a 2D bin of width `w` and height
//! `H = hyperperiod / w`. Reordering the rows with a mixed-radix
//! digit-reversal permutation merges all occurrences of a task into a single
//! rectangle of height `hyperperiod / T`, whose vertical position is a
//! multiple of its height.

use thiserror::Error;

use crate::model::{CoreSchedule, Instance, PeriodSet, TaskId, Time};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PackingError {
    #[error("task {task:?} crosses a row boundary (x {x} + width {width} > {w})")]
    RowCrossing {
        task: TaskId,
        x: Time,
        width: Time,
        w: Time,
    },
    #[error("rectangle for task {task:?} is not height-aligned (y {y}, height {height})")]
    Misaligned { task: TaskId, y: Time, height: Time },
    #[error("order graph has a cycle: {0:?}")]
    OrderCycle(Vec<TaskId>),
}

/// One placed rectangle of the packing view.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlacedRect {
    pub task: TaskId,
    pub x: Time,
    pub y: Time,
    pub width: Time,
    pub height: Time,
}

/// Bijection between time-view rows and packing-view rows of one
/// hyperperiod. Row indices are written in the mixed-radix system with bases
/// `b_2..b_rho` (period ratios); the map reverses the digit order together
/// with the base order, so a task's `hyperperiod/T` occurrence rows become
/// contiguous.
#[derive(Debug, Clone)]
pub struct RowPermutation {
    forward: Vec<Time>,
    inverse: Vec<Time>,
}

fn digit_reversal(bases: &[Time]) -> Vec<Time> {
    let h: Time = bases.iter().product();
    let mut map = Vec::with_capacity(h as usize);
    for v in 0..h {
        let mut rest = v;
        let mut out = 0;
        let mut place: Time = h;
        for &b in bases {
            place /= b;
            out += (rest % b) * place;
            rest /= b;
        }
        map.push(out);
    }
    map
}

impl RowPermutation {
    pub fn new(period_set: &PeriodSet) -> Self {
        let bases = period_set.multipliers();
        let mut reversed = bases.clone();
        reversed.reverse();
        Self {
            forward: digit_reversal(&bases),
            inverse: digit_reversal(&reversed),
        }
    }

    /// Time-view row -> packing-view row.
    pub fn to_packing(&self, row: Time) -> Time {
        self.forward[row as usize]
    }

    /// Packing-view row -> time-view row.
    pub fn to_time(&self, row: Time) -> Time {
        self.inverse[row as usize]
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }
}

/// Row-arranged occupancy of one resource: `H` rows of `w` unit cells, row
/// `v` covering `[origin + v*w, origin + (v+1)*w)` of the observation
/// interval.
pub fn rows_view(instance: &Instance, resource: usize, core: &CoreSchedule) -> Vec<Vec<Option<TaskId>>> {
    let ps = instance.period_set();
    let (w, h) = (ps.w(), ps.height());
    let origin = core.origins[resource];
    let mut rows = vec![vec![None; w as usize]; h as usize];
    for &id in instance.tasks_on_resource(resource) {
        let period = instance.period_of(id);
        let p = instance.task(id).proc_time;
        let rel = (core.sigma_of(id) + period - origin % period) % period;
        for j in 0..ps.hyperperiod() / period {
            for t in 0..p {
                let abs = rel + j * period + t;
                let abs = abs % ps.hyperperiod();
                rows[(abs / w) as usize][(abs % w) as usize] = Some(id);
            }
        }
    }
    rows
}

/// Converts a resource's core schedule into placed rectangles. Fails when a
/// task crosses a row boundary (such cores have no rectangle image).
pub fn core_to_packing(
    instance: &Instance,
    resource: usize,
    core: &CoreSchedule,
) -> Result<Vec<PlacedRect>, PackingError> {
    let ps = instance.period_set();
    let w = ps.w();
    let perm = RowPermutation::new(ps);
    let origin = core.origins[resource];
    let mut rects = Vec::new();
    for &id in instance.tasks_on_resource(resource) {
        let period = instance.period_of(id);
        let width = instance.task(id).proc_time;
        let rel = (core.sigma_of(id) + period - origin % period) % period;
        let x = rel % w;
        if x + width > w {
            return Err(PackingError::RowCrossing {
                task: id,
                x,
                width,
                w,
            });
        }
        let height = ps.rect_height(instance.period_index_of(id));
        rects.push(PlacedRect {
            task: id,
            x,
            y: perm.to_packing(rel / w),
            width,
            height,
        });
    }
    Ok(rects)
}

/// Inverse of [`core_to_packing`] (origin 0): recovers per-task core starts
/// from a height-divisible placement.
pub fn packing_to_core_starts(
    instance: &Instance,
    rects: &[PlacedRect],
) -> Result<Vec<(TaskId, Time)>, PackingError> {
    let ps = instance.period_set();
    let w = ps.w();
    let perm = RowPermutation::new(ps);
    let mut out = Vec::with_capacity(rects.len());
    for r in rects {
        if r.y % r.height != 0 || r.y + r.height > ps.height() {
            return Err(PackingError::Misaligned {
                task: r.task,
                y: r.y,
                height: r.height,
            });
        }
        if r.x + r.width > w {
            return Err(PackingError::RowCrossing {
                task: r.task,
                x: r.x,
                width: r.width,
                w,
            });
        }
        let row = perm.to_time(r.y);
        out.push((r.task, (r.x + row * w) % instance.period_of(r.task)));
    }
    Ok(out)
}

/// Assembles a full core schedule (all origins 0) from per-resource packings.
pub fn packings_to_core(
    instance: &Instance,
    per_resource: &[Vec<PlacedRect>],
) -> Result<CoreSchedule, PackingError> {
    let mut sigma = vec![0; instance.num_tasks()];
    for rects in per_resource {
        for (id, s) in packing_to_core_starts(instance, rects)? {
            sigma[id.0] = s;
        }
    }
    Ok(CoreSchedule {
        sigma,
        origins: vec![0; instance.num_resources()],
    })
}

/// Sub-bin assignment model of one resource: one height class per period,
/// `H / h_j` sub-bins per class, load = sum of widths assigned.
#[derive(Debug, Clone)]
pub struct SubBinModel {
    pub classes: Vec<HeightClass>,
}

#[derive(Debug, Clone)]
pub struct HeightClass {
    pub period_index: usize,
    pub height: Time,
    /// Tasks of this class, sorted by decreasing width (ties by id).
    pub rects: Vec<TaskId>,
    pub widths: Vec<Time>,
    /// Sub-bin index per rectangle, parallel to `rects`.
    pub assignment: Vec<usize>,
    /// Load per sub-bin.
    pub loads: Vec<Time>,
}

#[derive(Debug, Clone)]
pub enum PackOutcome {
    Packed {
        model: SubBinModel,
        rects: Vec<PlacedRect>,
    },
    /// Search space exhausted: no height-divisible packing exists.
    Unsat,
    /// Node budget exhausted before a verdict.
    Unknown,
}

pub const DEFAULT_PACK_BUDGET: u64 = 1_000_000;

/// Depth-first backtracking packer over sub-bin assignments.
///
/// Classes are processed in decreasing height (ascending period index),
/// rectangles within a class in decreasing width, so taller-left canonical
/// placements fall out directly. Because deeper classes carry no load while
/// a class is being assigned, the row constraint reduces to a residual check
/// against the ancestor sub-bins of the already-assigned classes.
pub fn pack_canonical(instance: &Instance, resource: usize, budget: u64) -> PackOutcome {
    let ps = instance.period_set();
    let (w, h_total) = (ps.w(), ps.height());

    let mut classes: Vec<HeightClass> = (0..ps.rho())
        .map(|j| HeightClass {
            period_index: j,
            height: ps.rect_height(j),
            rects: Vec::new(),
            widths: Vec::new(),
            assignment: Vec::new(),
            loads: vec![0; (ps.height() / ps.rect_height(j)) as usize],
        })
        .collect();
    for &id in instance.tasks_on_resource(resource) {
        let j = instance.period_index_of(id);
        classes[j].rects.push(id);
    }
    let mut area = 0;
    for class in &mut classes {
        class.rects.sort_by_key(|&id| {
            (std::cmp::Reverse(instance.task(id).proc_time), id)
        });
        class.widths = class
            .rects
            .iter()
            .map(|&id| instance.task(id).proc_time)
            .collect();
        class.assignment = vec![usize::MAX; class.rects.len()];
        area += class.widths.iter().sum::<Time>() * class.height;
    }
    if area > w * h_total {
        return PackOutcome::Unsat;
    }

    // Flatten the branching order: (class, rect-in-class).
    let slots: Vec<(usize, usize)> = classes
        .iter()
        .enumerate()
        .flat_map(|(j, c)| (0..c.rects.len()).map(move |i| (j, i)))
        .collect();

    struct Dfs<'a> {
        classes: &'a mut Vec<HeightClass>,
        slots: &'a [(usize, usize)],
        w: Time,
        nodes: u64,
        budget: u64,
    }
    impl Dfs<'_> {
        /// Free width of sub-bin `k` of class `j`: bin width minus the loads
        /// of `k` and its ancestor sub-bins in the taller classes.
        fn residual(&self, j: usize, k: usize) -> Time {
            let h_j = self.classes[j].height;
            let mut used = 0;
            for class in &self.classes[..=j] {
                used += class.loads[(k as Time * h_j / class.height) as usize];
            }
            self.w - used.min(self.w)
        }

        fn solve(&mut self, depth: usize) -> Option<bool> {
            let Some(&(j, i)) = self.slots.get(depth) else {
                return Some(true);
            };
            self.nodes += 1;
            if self.nodes > self.budget {
                return None;
            }
            let width = self.classes[j].widths[i];
            let bins = self.classes[j].loads.len();
            let mut seen_empty_residual: Option<Time> = None;
            for k in 0..bins {
                let res = self.residual(j, k);
                if res < width {
                    continue;
                }
                if self.classes[j].loads[k] == 0 {
                    // Empty sub-bins of equal residual are interchangeable.
                    if seen_empty_residual == Some(res) {
                        continue;
                    }
                    seen_empty_residual = Some(res);
                }
                self.classes[j].assignment[i] = k;
                self.classes[j].loads[k] += width;
                match self.solve(depth + 1) {
                    Some(true) => return Some(true),
                    Some(false) => {}
                    None => return None,
                }
                self.classes[j].loads[k] -= width;
                self.classes[j].assignment[i] = usize::MAX;
            }
            Some(false)
        }
    }

    let mut dfs = Dfs {
        classes: &mut classes,
        slots: &slots,
        w,
        nodes: 0,
        budget,
    };
    match dfs.solve(0) {
        None => PackOutcome::Unknown,
        Some(false) => PackOutcome::Unsat,
        Some(true) => {
            // Realize x positions: within each sub-bin, rectangles sit
            // left-to-right in assignment order, after the prefix occupied
            // by the taller classes.
            let mut rects = Vec::new();
            let mut cursors: Vec<Vec<Time>> = classes
                .iter()
                .map(|c| vec![0; c.loads.len()])
                .collect();
            for j in 0..classes.len() {
                for i in 0..classes[j].rects.len() {
                    let k = classes[j].assignment[i];
                    let h_j = classes[j].height;
                    let prefix: Time = classes[..j]
                        .iter()
                        .map(|c| c.loads[(k as Time * h_j / c.height) as usize])
                        .sum();
                    let x = prefix + cursors[j][k];
                    cursors[j][k] += classes[j].widths[i];
                    rects.push(PlacedRect {
                        task: classes[j].rects[i],
                        x,
                        y: k as Time * h_j,
                        width: classes[j].widths[i],
                        height: h_j,
                    });
                }
            }
            PackOutcome::Packed {
                model: SubBinModel { classes },
                rects,
            }
        }
    }
}

/// Packs every resource (descending utilization first). Any unsat or
/// budget-exhausted resource aborts the whole warm start.
pub fn pack_instance(instance: &Instance, budget: u64) -> PackOutcome2 {
    let mut order: Vec<usize> = (0..instance.num_resources()).collect();
    order.sort_by_key(|&m| (std::cmp::Reverse(instance.busy_time(m)), m));
    let mut per_resource = vec![Vec::new(); instance.num_resources()];
    for m in order {
        match pack_canonical(instance, m, budget) {
            PackOutcome::Packed { rects, .. } => per_resource[m] = rects,
            PackOutcome::Unsat => return PackOutcome2::Unsat(m),
            PackOutcome::Unknown => return PackOutcome2::Unknown(m),
        }
    }
    PackOutcome2::Packed(per_resource)
}

/// Instance-level packing outcome; failures name the first resource that
/// could not be packed.
#[derive(Debug, Clone)]
pub enum PackOutcome2 {
    Packed(Vec<Vec<PlacedRect>>),
    Unsat(usize),
    Unknown(usize),
}

/// Order inference for the predecessor method: a directed graph whose
/// lexicographically smallest topological order feeds `ffs_run`.
///
/// Edges: consecutive same-resource tasks by ascending core start, and
/// successor -> predecessor whenever the packed schedule effectively
/// postpones the successor (`sigma_i + p_i > sigma_{i+1}`), so first-fit
/// does not postpone it further.
pub fn warmstart_order(
    instance: &Instance,
    core: &CoreSchedule,
) -> Result<Vec<TaskId>, PackingError> {
    let n = instance.num_tasks();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut indeg = vec![0usize; n];
    let add_edge = |adj: &mut Vec<Vec<usize>>, indeg: &mut Vec<usize>, u: usize, v: usize| {
        adj[u].push(v);
        indeg[v] += 1;
    };
    for m in 0..instance.num_resources() {
        let mut ids: Vec<TaskId> = instance.tasks_on_resource(m).to_vec();
        ids.sort_by_key(|&id| (core.sigma_of(id), id));
        for pair in ids.windows(2) {
            add_edge(&mut adj, &mut indeg, pair[0].0, pair[1].0);
        }
    }
    for chain in instance.chains() {
        for pair in chain.tasks.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if core.sigma_of(a) + instance.task(a).proc_time > core.sigma_of(b) {
                add_edge(&mut adj, &mut indeg, b.0, a.0);
            }
        }
    }

    let mut heap: std::collections::BinaryHeap<std::cmp::Reverse<usize>> = (0..n)
        .filter(|&v| indeg[v] == 0)
        .map(std::cmp::Reverse)
        .collect();
    let mut order = Vec::with_capacity(n);
    let mut indeg_left = indeg.clone();
    while let Some(std::cmp::Reverse(u)) = heap.pop() {
        order.push(TaskId(u));
        for &v in &adj[u] {
            indeg_left[v] -= 1;
            if indeg_left[v] == 0 {
                heap.push(std::cmp::Reverse(v));
            }
        }
    }
    if order.len() == n {
        return Ok(order);
    }
    // Extract one cycle among the unresolved vertices as a witness. Every
    // stuck vertex keeps at least one stuck predecessor (a popped vertex
    // would have decremented the in-degree), so walk the edges backwards
    // and reverse the recorded path.
    let stuck: Vec<usize> = (0..n).filter(|&v| indeg_left[v] > 0).collect();
    let mut seen = vec![usize::MAX; n];
    let mut path = Vec::new();
    let mut v = stuck[0];
    loop {
        if seen[v] != usize::MAX {
            let mut cycle: Vec<TaskId> =
                path[seen[v]..].iter().map(|&u| TaskId(u)).collect();
            cycle.reverse();
            return Err(PackingError::OrderCycle(cycle));
        }
        seen[v] = path.len();
        path.push(v);
        v = stuck
            .iter()
            .copied()
            .find(|&u| adj[u].contains(&v))
            .expect("stuck vertex has a stuck predecessor");
    }
}

/// Warm-start order for the leftmost method: plain start-time sorting.
pub fn leftmost_order(instance: &Instance, core: &CoreSchedule) -> Vec<TaskId> {
    let mut ids: Vec<TaskId> = (0..instance.num_tasks()).map(TaskId).collect();
    ids.sort_by_key(|&id| (core.sigma_of(id), id));
    ids
}
