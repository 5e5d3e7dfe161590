//! Synthetic instance generators. All of them ship a zero-degeneracy
//! witness schedule (except the 3-partition stress gadget) and are
//! deterministic per seed.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::criteria::Rat;
use crate::model::{ChainSpec, Instance, PeriodSet, Schedule, Time, TopologyMeta};
use crate::packing::RowPermutation;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("item sum {sum} != n*B = {expected}")]
    BadItemSum { sum: Time, expected: Time },
    #[error("item {0} outside the required bounds")]
    BadItemBound(Time),
    #[error("need 3n items, got {0}")]
    BadItemCount(usize),
    #[error("topology has fewer than two endpoints")]
    TooFewEndpoints,
}

#[derive(Debug, Clone)]
pub struct GenConfig {
    pub base_period: Time,
    pub num_periods: usize,
    /// Candidate consecutive period ratios.
    pub ratios: Vec<Time>,
    pub resources: usize,
    /// Chains are removed (longest period first) until the minimum
    /// per-resource utilization drops to this target.
    pub target_util: Rat,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            base_period: 100,
            num_periods: 3,
            ratios: vec![2, 3, 4],
            resources: 5,
            target_util: Rat::from_integer(1),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub instance: Instance,
    /// Feasible schedule with zero total degeneracy, when the generator
    /// provides one.
    pub witness: Option<Schedule>,
    /// Number of trailing filler chains (topology generator only).
    pub filler_chains: usize,
}

fn build_period_set(config: &GenConfig, rng: &mut ChaCha8Rng) -> PeriodSet {
    let mut periods = vec![config.base_period];
    for _ in 1..config.num_periods {
        let r = *config.ratios.choose(rng).unwrap();
        periods.push(periods.last().unwrap() * r);
    }
    PeriodSet::new(periods).unwrap()
}

/// One carved rectangle, already mapped back to time coordinates.
struct CarvedTask {
    period_index: usize,
    resource: usize,
    proc_time: Time,
    sigma: Time,
}

/// Fills one resource's w x H bin completely by recursive slicing: each
/// horizontal chunk of a height class either becomes a task of that class
/// or splits into the next class's rows.
fn carve_resource(
    ps: &PeriodSet,
    perm: &RowPermutation,
    resource: usize,
    rng: &mut ChaCha8Rng,
    out: &mut Vec<CarvedTask>,
) {
    let w = ps.w();
    let multipliers = ps.multipliers();
    // (class, x0, width, packing-row of the region top)
    let mut stack = vec![(0usize, 0, w, 0)];
    while let Some((j, x0, width, y0)) = stack.pop() {
        if width == 0 {
            continue;
        }
        // Cut a chunk off the left edge; small widths dominate so task
        // counts scale with the bin area.
        let max_chunk = width.min((w / 4).max(1));
        let chunk = rng.gen_range(1..=max_chunk);
        let split = j + 1 < ps.rho() && rng.gen_bool(0.5);
        if split {
            let child_height = ps.rect_height(j + 1);
            for band in 0..multipliers[j] {
                stack.push((j + 1, x0, chunk, y0 + band * child_height));
            }
        } else {
            let row = perm.to_time(y0);
            out.push(CarvedTask {
                period_index: j,
                resource,
                proc_time: chunk,
                sigma: x0 + row * w,
            });
        }
        stack.push((j, x0 + chunk, width - chunk, y0));
    }
}

/// Links same-period tasks into chains with strictly gapped witness starts
/// (each successor starts at or after its predecessor's completion), which
/// pins every chain's span inside one period.
fn link_chains(
    rng: &mut ChaCha8Rng,
    period_index: usize,
    mut tasks: Vec<CarvedTask>,
) -> Vec<(ChainSpec, Vec<Time>)> {
    tasks.sort_by_key(|t| (t.sigma, t.resource, t.proc_time));
    // Open chains: (spec tasks, witness starts, completion of the last).
    let mut open: Vec<(Vec<(usize, Time)>, Vec<Time>, Time)> = Vec::new();
    for task in tasks {
        let eligible: Vec<usize> = open
            .iter()
            .enumerate()
            .filter(|(_, c)| c.2 <= task.sigma)
            .map(|(i, _)| i)
            .collect();
        let pick = rng.gen_range(0..=eligible.len());
        if pick == eligible.len() {
            open.push((
                vec![(task.resource, task.proc_time)],
                vec![task.sigma],
                task.sigma + task.proc_time,
            ));
        } else {
            let chain = &mut open[eligible[pick]];
            chain.0.push((task.resource, task.proc_time));
            chain.1.push(task.sigma);
            chain.2 = task.sigma + task.proc_time;
        }
    }
    open.into_iter()
        .map(|(tasks, starts, _)| {
            (
                ChainSpec {
                    period_index,
                    tasks,
                },
                starts,
            )
        })
        .collect()
}

fn min_utilization(chains: &[(ChainSpec, Vec<Time>)], ps: &PeriodSet, resources: usize) -> Rat {
    let hyper = ps.hyperperiod();
    let mut busy = vec![0; resources];
    for (spec, _) in chains {
        let reps = hyper / ps.period(spec.period_index);
        for &(m, p) in &spec.tasks {
            busy[m] += p * reps;
        }
    }
    busy.iter()
        .map(|&b| Rat::new(b, hyper))
        .min()
        .unwrap_or_else(|| Rat::from_integer(0))
}

/// Removes whole chains, longest period first (random within a period
/// class), until the minimum utilization reaches the target.
fn remove_to_target(
    chains: &mut Vec<(ChainSpec, Vec<Time>)>,
    ps: &PeriodSet,
    resources: usize,
    target: Rat,
    rng: &mut ChaCha8Rng,
) {
    while min_utilization(chains, ps, resources) > target {
        let longest = chains
            .iter()
            .map(|(s, _)| s.period_index)
            .max()
            .unwrap();
        let candidates: Vec<usize> = chains
            .iter()
            .enumerate()
            .filter(|(_, (s, _))| s.period_index == longest)
            .map(|(i, _)| i)
            .collect();
        let victim = *candidates.choose(rng).unwrap();
        chains.remove(victim);
    }
}

fn assemble(
    ps: PeriodSet,
    resources: usize,
    chains: Vec<(ChainSpec, Vec<Time>)>,
    topology: Option<TopologyMeta>,
    filler_chains: usize,
) -> Generated {
    let (specs, starts): (Vec<ChainSpec>, Vec<Vec<Time>>) = chains.into_iter().unzip();
    let mut instance = Instance::new(ps, resources, specs).expect("generator invariant");
    instance.topology = topology;
    let witness = Schedule::new(starts.into_iter().flatten().collect());
    debug_assert!(crate::feasibility::check_feasible(&instance, &witness).is_ok());
    Generated {
        instance,
        witness: Some(witness),
        filler_chains,
    }
}

/// General carve-and-chain generator: fully covers every resource, links
/// rectangles into chains with a zero-degeneracy witness, then sheds chains
/// to the target utilization.
pub fn gen_general(config: &GenConfig) -> Generated {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let ps = build_period_set(config, &mut rng);
    let perm = RowPermutation::new(&ps);
    let mut carved = Vec::new();
    for m in 0..config.resources {
        carve_resource(&ps, &perm, m, &mut rng, &mut carved);
    }
    let mut chains = Vec::new();
    for j in 0..ps.rho() {
        let of_class: Vec<CarvedTask> = carved
            .extract_if(.., |t| t.period_index == j)
            .collect();
        chains.extend(link_chains(&mut rng, j, of_class));
    }
    remove_to_target(&mut chains, &ps, config.resources, config.target_util, &mut rng);
    assemble(ps, config.resources, chains, None, 0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopologyKind {
    /// One switch, `leaves` endpoints.
    Star { leaves: usize },
    /// Three switches in a cycle, one endpoint each.
    Triangle,
    /// Two switches joined by a bridge link, two endpoints each.
    Bridge,
    /// A line of `switches` switches, one endpoint stub each.
    StubbedLine { switches: usize },
}

#[derive(Debug, Clone)]
pub struct TopConfig {
    pub kind: TopologyKind,
    pub base_period: Time,
    pub num_periods: usize,
    pub ratios: Vec<Time>,
    pub messages: usize,
    /// Filler chains stop once every resource reaches this utilization.
    pub target_util: Rat,
    pub seed: u64,
}

impl Default for TopConfig {
    fn default() -> Self {
        Self {
            kind: TopologyKind::Star { leaves: 3 },
            base_period: 100,
            num_periods: 3,
            ratios: vec![2, 3, 4],
            messages: 20,
            target_util: Rat::from_integer(1),
            seed: 0,
        }
    }
}

struct Network {
    nodes: usize,
    /// Sorted adjacency per node.
    adj: Vec<Vec<usize>>,
    /// Directed link (a, b) -> resource index; two resources per physical
    /// link (full duplex).
    link: std::collections::BTreeMap<(usize, usize), usize>,
    endpoints: Vec<usize>,
}

impl Network {
    fn build(kind: TopologyKind) -> Self {
        let (edges, endpoints, nodes): (Vec<(usize, usize)>, Vec<usize>, usize) = match kind {
            TopologyKind::Star { leaves } => {
                let edges = (1..=leaves).map(|l| (0, l)).collect();
                ((edges), (1..=leaves).collect(), leaves + 1)
            }
            TopologyKind::Triangle => {
                // Switches 0..3 in a cycle, endpoints 3..6.
                let edges = vec![(0, 1), (1, 2), (0, 2), (0, 3), (1, 4), (2, 5)];
                (edges, vec![3, 4, 5], 6)
            }
            TopologyKind::Bridge => {
                // Switches 0, 1; endpoints 2, 3 on 0 and 4, 5 on 1.
                let edges = vec![(0, 1), (0, 2), (0, 3), (1, 4), (1, 5)];
                (edges, vec![2, 3, 4, 5], 6)
            }
            TopologyKind::StubbedLine { switches } => {
                let mut edges: Vec<(usize, usize)> =
                    (0..switches - 1).map(|i| (i, i + 1)).collect();
                for i in 0..switches {
                    edges.push((i, switches + i));
                }
                (edges, (switches..2 * switches).collect(), 2 * switches)
            }
        };
        let mut adj = vec![Vec::new(); nodes];
        let mut link = std::collections::BTreeMap::new();
        for &(u, v) in &edges {
            adj[u].push(v);
            adj[v].push(u);
            let id = link.len();
            link.insert((u, v), id);
            link.insert((v, u), id + 1);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        Self {
            nodes,
            adj,
            link,
            endpoints,
        }
    }

    /// Shortest path (BFS; ties resolved toward lower node indices by the
    /// sorted adjacency).
    fn route(&self, from: usize, to: usize) -> Vec<usize> {
        let mut parent = vec![usize::MAX; self.nodes];
        parent[from] = from;
        let mut queue = std::collections::VecDeque::from([from]);
        while let Some(u) = queue.pop_front() {
            if u == to {
                break;
            }
            for &v in &self.adj[u] {
                if parent[v] == usize::MAX {
                    parent[v] = u;
                    queue.push_back(v);
                }
            }
        }
        let mut path = vec![to];
        let mut v = to;
        while v != from {
            v = parent[v];
            path.push(v);
        }
        path.reverse();
        path
    }
}

/// Routes random endpoint-to-endpoint messages over a switched network
/// (each directed link is one resource), placing a zero-degeneracy witness
/// by sequential earliest fit, then tops utilization up with single-task
/// filler chains at the longest period.
pub fn gen_topology(config: &TopConfig) -> Result<Generated, GenError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let gen_cfg = GenConfig {
        base_period: config.base_period,
        num_periods: config.num_periods,
        ratios: config.ratios.clone(),
        ..Default::default()
    };
    let ps = build_period_set(&gen_cfg, &mut rng);
    let net = Network::build(config.kind);
    if net.endpoints.len() < 2 {
        return Err(GenError::TooFewEndpoints);
    }
    let resources = net.link.len();
    let hyper = ps.hyperperiod();
    let mut busy: Vec<Vec<bool>> = vec![vec![false; hyper as usize]; resources];

    let occupies = |busy: &Vec<Vec<bool>>, m: usize, s: Time, p: Time, t: Time| -> bool {
        (0..hyper / t).any(|j| (0..p).any(|d| busy[m][((s + j * t + d) % hyper) as usize]))
    };
    let mark = |busy: &mut Vec<Vec<bool>>, m: usize, s: Time, p: Time, t: Time, value: bool| {
        for j in 0..hyper / t {
            for d in 0..p {
                busy[m][((s + j * t + d) % hyper) as usize] = value;
            }
        }
    };

    let mut chains: Vec<(ChainSpec, Vec<Time>)> = Vec::new();
    for _ in 0..config.messages {
        let a = *net.endpoints.choose(&mut rng).unwrap();
        let b = loop {
            let x = *net.endpoints.choose(&mut rng).unwrap();
            if x != a {
                break x;
            }
        };
        let path = net.route(a, b);
        let route: Vec<usize> = path.windows(2).map(|e| net.link[&(e[0], e[1])]).collect();
        let period_index = rng.gen_range(0..ps.rho());
        let t = ps.period(period_index);
        let p = rng.gen_range(1..=(ps.w() / 4).max(1));

        // Sequential earliest fit; a successor searches from its
        // predecessor's completion. The whole message is dropped if any
        // hop fails or the span leaves one period.
        let mut starts = Vec::new();
        let mut from = 0;
        let mut ok = true;
        for &m in &route {
            let mut s = from;
            while s < from + t && occupies(&busy, m, s % hyper, p, t) {
                s += 1;
            }
            if s >= from + t {
                ok = false;
                break;
            }
            mark(&mut busy, m, s % hyper, p, t, true);
            starts.push(s);
            from = s + p;
        }
        let span_ok = ok && starts.last().unwrap() + p - starts[0] <= t;
        if !span_ok {
            for (&m, &s) in route.iter().zip(&starts) {
                mark(&mut busy, m, s % hyper, p, t, false);
            }
            continue;
        }
        chains.push((
            ChainSpec {
                period_index,
                tasks: route.iter().map(|&m| (m, p)).collect(),
            },
            starts,
        ));
    }

    // Fillers: longest-period single-task chains dropped into free gaps
    // until each resource meets the utilization target.
    let longest = ps.rho() - 1;
    let t_long = ps.period(longest);
    let mut filler_chains = 0;
    for m in 0..resources {
        let mut used: Time = busy[m].iter().map(|&b| b as Time).sum();
        let mut s = 0;
        while s < hyper && Rat::new(used, hyper) < config.target_util {
            if busy[m][s as usize] {
                s += 1;
                continue;
            }
            let mut e = s;
            while e < hyper && !busy[m][e as usize] && e - s < t_long {
                e += 1;
            }
            let p = e - s;
            mark(&mut busy, m, s % t_long, p, t_long, true);
            chains.push((
                ChainSpec {
                    period_index: longest,
                    tasks: vec![(m, p)],
                },
                vec![s],
            ));
            filler_chains += 1;
            used += p * (hyper / t_long);
            s = e;
        }
    }

    Ok(assemble(ps, resources, chains, None, filler_chains))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TheoryKind {
    Line,
    Tree,
}

#[derive(Debug, Clone)]
pub struct TheoryConfig {
    pub kind: TheoryKind,
    pub resources: usize,
    pub base_period: Time,
    pub num_periods: usize,
    pub ratios: Vec<Time>,
    pub target_util: Rat,
    pub seed: u64,
}

impl Default for TheoryConfig {
    fn default() -> Self {
        Self {
            kind: TheoryKind::Line,
            resources: 5,
            base_period: 100,
            num_periods: 3,
            ratios: vec![2, 3, 4],
            target_util: Rat::from_integer(1),
            seed: 0,
        }
    }
}

/// Scattering generator: carves the root resource, extends each root task
/// into a chain down the line or tree, and trims chain reach until the
/// offset-schedule witness keeps every span within its period.
pub fn gen_theory(config: &TheoryConfig) -> Generated {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let gen_cfg = GenConfig {
        base_period: config.base_period,
        num_periods: config.num_periods,
        ratios: config.ratios.clone(),
        ..Default::default()
    };
    let ps = build_period_set(&gen_cfg, &mut rng);
    let perm = RowPermutation::new(&ps);
    let m = config.resources;

    // Resource paths. For a line the path to depth d is 0..=d; for a tree
    // each non-root picks an earlier parent.
    let parents: Vec<Option<usize>> = match config.kind {
        TheoryKind::Line => (0..m).map(|r| r.checked_sub(1)).collect(),
        TheoryKind::Tree => (0..m)
            .map(|r| {
                if r == 0 {
                    None
                } else {
                    Some(rng.gen_range(0..r))
                }
            })
            .collect(),
    };
    let path_to = |r: usize| -> Vec<usize> {
        let mut path = vec![r];
        let mut v = r;
        while let Some(p) = parents[v] {
            path.push(p);
            v = p;
        }
        path.reverse();
        path
    };

    let mut carved = Vec::new();
    carve_resource(&ps, &perm, 0, &mut rng, &mut carved);
    // Root chain seeds: (period_index, p, sigma, full path).
    let mut seeds: Vec<(usize, Time, Time, Vec<usize>)> = carved
        .into_iter()
        .map(|t| {
            let target = rng.gen_range(0..m);
            (t.period_index, t.proc_time, t.sigma, path_to(target))
        })
        .collect();
    // Shed root load to the target before trimming.
    while {
        let hyper = ps.hyperperiod();
        let busy: Time = seeds
            .iter()
            .map(|&(j, p, _, _)| p * (hyper / ps.period(j)))
            .sum();
        Rat::new(busy, hyper) > config.target_util
    } {
        let longest = seeds.iter().map(|s| s.0).max().unwrap();
        let candidates: Vec<usize> = seeds
            .iter()
            .enumerate()
            .filter(|(_, s)| s.0 == longest)
            .map(|(i, _)| i)
            .collect();
        seeds.remove(*candidates.choose(&mut rng).unwrap());
    }

    // Trim reaches until every witness span fits one period. Offsets only
    // shrink when chains retreat, so this terminates.
    loop {
        let mut edge_max = vec![0; m];
        for (_, p, _, path) in &seeds {
            for &r in &path[1..] {
                edge_max[r] = edge_max[r].max(*p);
            }
        }
        let mut offsets = vec![0; m];
        for r in 1..m {
            // Parents always precede children in index order here.
            offsets[r] = offsets[parents[r].unwrap()] + edge_max[r];
        }
        let mut trimmed = false;
        for (j, p, _, path) in &mut seeds {
            while path.len() > 1 && offsets[*path.last().unwrap()] + *p > ps.period(*j) {
                path.pop();
                trimmed = true;
            }
        }
        if !trimmed {
            let chains = seeds
                .iter()
                .map(|(j, p, sigma, path)| {
                    (
                        ChainSpec {
                            period_index: *j,
                            tasks: path.iter().map(|&r| (r, *p)).collect(),
                        },
                        path.iter().map(|&r| sigma + offsets[r]).collect(),
                    )
                })
                .collect();
            let topology = match config.kind {
                TheoryKind::Line => TopologyMeta::Line,
                TheoryKind::Tree => TopologyMeta::Tree {
                    parents: parents.clone(),
                },
            };
            return assemble(ps, m, chains, Some(topology), 0);
        }
    }
}

/// Two-resource gadget mirroring the 3-partition reduction: a period-2B
/// frame chain forces degeneracy >= 1, and the per-period slack on the
/// second resource admits the item chains exactly when the 3-partition
/// instance is a yes-instance.
///
/// By default only `sum = n*B` and `1 <= a_i < B` are enforced; `strict`
/// additionally requires the classic `B/4 < a_i < B/3` window.
pub fn gen_3partition(
    n: usize,
    b: Time,
    items: &[Time],
    strict: bool,
) -> Result<Instance, GenError> {
    if items.len() != 3 * n {
        return Err(GenError::BadItemCount(items.len()));
    }
    let sum: Time = items.iter().sum();
    let expected = n as Time * b;
    if sum != expected {
        return Err(GenError::BadItemSum { sum, expected });
    }
    for &a in items {
        let ok = if strict {
            4 * a > b && 3 * a < b
        } else {
            a >= 1 && a < b
        };
        if !ok {
            return Err(GenError::BadItemBound(a));
        }
    }
    let ps = PeriodSet::new(vec![2 * b, 2 * b * n as Time]).unwrap();
    let mut specs = vec![ChainSpec {
        period_index: 0,
        tasks: vec![(0, 2 * b), (1, b)],
    }];
    for &a in items {
        specs.push(ChainSpec {
            period_index: 1,
            tasks: vec![(1, a)],
        });
    }
    Ok(Instance::new(ps, 2, specs).expect("gadget is utilization-exact"))
}
