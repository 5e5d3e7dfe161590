//! Start-to-end latency, degeneracy and the derived criteria.

use num_rational::Ratio;

use crate::feasibility::{check_feasible, FeasibilityVerdict};
use crate::model::{Instance, Schedule, Time};

/// Exact rational used for utilization and the diagnostic ratios.
pub type Rat = Ratio<u64>;

/// Renders an exact ratio as a fixed-precision decimal string.
pub fn render_ratio(r: Rat, decimals: u32) -> String {
    let scale = 10u64.pow(decimals);
    // Round half up on the scaled numerator.
    let scaled = r * Ratio::from_integer(scale);
    let rounded = (scaled.numer() * 2 + scaled.denom()) / (scaled.denom() * 2);
    let int = rounded / scale;
    let frac = rounded % scale;
    if decimals == 0 {
        format!("{int}")
    } else {
        format!("{int}.{frac:0width$}", width = decimals as usize)
    }
}

fn ceil_div(a: Time, b: Time) -> Time {
    (a + b - 1) / b
}

/// Per-chain criteria values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainCriteria {
    /// Start-to-end latency: completion of the last task minus start of the
    /// first.
    pub se: Time,
    /// `ceil(SE / T) - 1`.
    pub dg: Time,
    /// Alpha-degeneracy per configured alpha, `ceil(SE / (alpha T)) - 1`.
    pub dg_alpha: Vec<Time>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CriteriaReport {
    pub alphas: Vec<Rat>,
    pub chains: Vec<ChainCriteria>,
    pub dg_sum: Time,
    pub dg_max: Time,
    pub dg_alpha_sum: Vec<Time>,
    pub dg_alpha_max: Vec<Time>,
    /// Share of total degeneracy carried by the longest-period chains.
    /// Defined as 0 when the total degeneracy is 0.
    pub phi_longest: Rat,
    /// Share of the most utilized resource's load caused by longest-period
    /// tasks. Ties on utilization break to the lowest resource index.
    pub omega_longest: Rat,
}

/// Objective selector used by the search and matheuristic layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    DgSum,
    DgMax,
    /// Sum of alpha-degeneracies for the alpha at this index of the
    /// report's alpha list.
    DgAlphaSum(usize),
}

impl Criterion {
    pub fn value(&self, report: &CriteriaReport) -> Time {
        match *self {
            Criterion::DgSum => report.dg_sum,
            Criterion::DgMax => report.dg_max,
            Criterion::DgAlphaSum(i) => report.dg_alpha_sum[i],
        }
    }
}

/// Exact per-resource utilizations and the maximum over resources.
pub fn utilization(instance: &Instance) -> (Vec<Rat>, Rat) {
    let hyper = instance.period_set().hyperperiod();
    let per: Vec<Rat> = (0..instance.num_resources())
        .map(|m| Ratio::new(instance.busy_time(m), hyper))
        .collect();
    let max = per.iter().copied().max().unwrap_or_else(|| Ratio::from_integer(0));
    (per, max)
}

/// Computes all criteria of a feasible schedule. Refuses infeasible input
/// with the offending verdict.
pub fn compute_criteria(
    instance: &Instance,
    schedule: &Schedule,
    alphas: &[Rat],
) -> Result<CriteriaReport, FeasibilityVerdict> {
    let verdict = check_feasible(instance, schedule);
    if !verdict.is_ok() {
        return Err(verdict);
    }
    Ok(compute_criteria_unchecked(instance, schedule, alphas))
}

/// Criteria of a schedule assumed feasible (callers that just verified
/// feasibility can skip the repeated check).
pub fn compute_criteria_unchecked(
    instance: &Instance,
    schedule: &Schedule,
    alphas: &[Rat],
) -> CriteriaReport {
    let mut chains = Vec::with_capacity(instance.chains().len());
    for chain in instance.chains() {
        let period = instance.period_set().period(chain.period_index);
        let first = chain.tasks[0];
        let last = *chain.tasks.last().unwrap();
        let se = schedule.start_of(last) + instance.task(last).proc_time
            - schedule.start_of(first);
        let dg = ceil_div(se, period) - 1;
        let dg_alpha = alphas
            .iter()
            .map(|a| ceil_div(se * a.denom(), a.numer() * period) - 1)
            .collect();
        chains.push(ChainCriteria { se, dg, dg_alpha });
    }
    let dg_sum = chains.iter().map(|c| c.dg).sum();
    let dg_max = chains.iter().map(|c| c.dg).max().unwrap_or(0);
    let dg_alpha_sum: Vec<Time> = (0..alphas.len())
        .map(|i| chains.iter().map(|c| c.dg_alpha[i]).sum())
        .collect();
    let dg_alpha_max: Vec<Time> = (0..alphas.len())
        .map(|i| chains.iter().map(|c| c.dg_alpha[i]).max().unwrap_or(0))
        .collect();

    let longest_index = instance.period_set().rho() - 1;
    let longest_dg: Time = instance
        .chains()
        .iter()
        .zip(&chains)
        .filter(|(c, _)| c.period_index == longest_index)
        .map(|(_, v)| v.dg)
        .sum();
    let phi_longest = if dg_sum == 0 {
        Ratio::from_integer(0)
    } else {
        Ratio::new(longest_dg, dg_sum)
    };

    // Most utilized resource, lowest index on ties.
    let busiest = (0..instance.num_resources())
        .max_by_key(|&m| (instance.busy_time(m), std::cmp::Reverse(m)))
        .unwrap_or(0);
    let busy = instance.busy_time(busiest);
    let longest_period = instance.period_set().hyperperiod();
    let longest_busy: Time = instance
        .tasks_on_resource(busiest)
        .iter()
        .filter(|&&id| instance.period_of(id) == longest_period)
        .map(|&id| instance.task(id).proc_time)
        .sum();
    let omega_longest = if busy == 0 {
        Ratio::from_integer(0)
    } else {
        Ratio::new(longest_busy, busy)
    };

    CriteriaReport {
        alphas: alphas.to_vec(),
        chains,
        dg_sum,
        dg_max,
        dg_alpha_sum,
        dg_alpha_max,
        phi_longest,
        omega_longest,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ChainSpec, Instance, PeriodSet};

    #[test]
    fn single_task_chain_has_zero_degeneracy() {
        let ps = PeriodSet::new(vec![40]).unwrap();
        let instance = Instance::new(
            ps,
            1,
            vec![ChainSpec {
                period_index: 0,
                tasks: vec![(0, 7)],
            }],
        )
        .unwrap();
        let schedule = Schedule::new(vec![3]);
        let one = Ratio::from_integer(1);
        let report = compute_criteria(&instance, &schedule, &[one]).unwrap();
        assert_eq!(report.chains[0].se, 7);
        assert_eq!(report.chains[0].dg, 0);
        assert_eq!(report.chains[0].dg_alpha[0], 0);
    }

    #[test]
    fn alpha_ceiling_cases() {
        // SE = 60, T = 80, alpha = 0.75 -> DG = 0, DG_0.75 = 0.
        // SE = 61 -> DG_0.75 = 1.
        let a = Ratio::new(3u64, 4);
        assert_eq!(ceil_div(60 * a.denom(), a.numer() * 80) - 1, 0);
        assert_eq!(ceil_div(61 * a.denom(), a.numer() * 80) - 1, 1);
        assert_eq!(ceil_div(60, 80) - 1, 0);
    }

    #[test]
    fn alpha_monotone_small_grid() {
        // DG_alpha never decreases when alpha shrinks; alpha = 1 matches DG.
        for se in 1u64..=200 {
            for t in [40u64, 80] {
                let dg = ceil_div(se, t) - 1;
                let mut prev = None;
                for (n, d) in [(1u64, 1u64), (9, 10), (3, 4), (1, 2), (1, 4)] {
                    let v = ceil_div(se * d, n * t) - 1;
                    if let Some(p) = prev {
                        assert!(v >= p, "se={se} t={t} alpha={n}/{d}");
                    }
                    if (n, d) == (1, 1) {
                        assert_eq!(v, dg);
                    }
                    prev = Some(v);
                }
            }
        }
    }

    #[test]
    fn render_ratio_rounds() {
        assert_eq!(render_ratio(Ratio::new(230u64, 240), 2), "0.96");
        assert_eq!(render_ratio(Ratio::new(1u64, 3), 4), "0.3333");
        assert_eq!(render_ratio(Ratio::from_integer(1u64), 2), "1.00");
    }
}
