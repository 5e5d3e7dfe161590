//! Line-delimited text formats for instances, schedules and packing dumps.
//!
//! Writers emit a canonical form; `write(parse(write(x)))` is bit-identical
//! to `write(x)`.

use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{
    ChainSpec, Instance, ModelError, PeriodSet, Schedule, TaskId, Time, TopologyMeta,
};
use crate::packing::PlacedRect;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn syntax(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Syntax {
        line: line + 1,
        message: message.into(),
    }
}

fn parse_int(line: usize, token: &str) -> Result<Time, FormatError> {
    token
        .parse::<Time>()
        .map_err(|_| syntax(line, format!("expected non-negative integer, got `{token}`")))
}

/// Parses one instance document.
pub fn parse_instance(text: &str) -> Result<Instance, FormatError> {
    let mut periods: Option<Vec<Time>> = None;
    let mut resources: Option<usize> = None;
    let mut topology: Option<TopologyMeta> = None;
    let mut parents: Option<Vec<Option<usize>>> = None;
    let mut tree_pending = false;
    let mut specs: Vec<ChainSpec> = Vec::new();

    for (ln, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let key = tokens.next().unwrap();
        match key {
            "periods" => {
                let values: Result<Vec<_>, _> = tokens.map(|t| parse_int(ln, t)).collect();
                periods = Some(values?);
            }
            "resources" => {
                let v = parse_int(ln, tokens.next().ok_or_else(|| syntax(ln, "missing count"))?)?;
                resources = Some(v as usize);
            }
            "topology" => {
                match tokens.next() {
                    Some("line") => topology = Some(TopologyMeta::Line),
                    Some("tree") => tree_pending = true,
                    other => {
                        return Err(syntax(ln, format!("unknown topology kind {other:?}")));
                    }
                }
            }
            "parents" => {
                let values: Result<Vec<Time>, _> = tokens.map(|t| parse_int(ln, t)).collect();
                let values = values?;
                parents = Some(
                    values
                        .iter()
                        .map(|&v| if v == 0 { None } else { Some(v as usize - 1) })
                        .collect(),
                );
            }
            "chain" => {
                let idx =
                    parse_int(ln, tokens.next().ok_or_else(|| syntax(ln, "missing period index"))?)?;
                if idx == 0 {
                    return Err(syntax(ln, "period index is 1-based"));
                }
                specs.push(ChainSpec {
                    period_index: idx as usize - 1,
                    tasks: Vec::new(),
                });
            }
            "task" => {
                let spec = specs
                    .last_mut()
                    .ok_or_else(|| syntax(ln, "task before any chain"))?;
                let res =
                    parse_int(ln, tokens.next().ok_or_else(|| syntax(ln, "missing resource"))?)?;
                let p = parse_int(
                    ln,
                    tokens.next().ok_or_else(|| syntax(ln, "missing proc time"))?,
                )?;
                if res == 0 {
                    return Err(syntax(ln, "resource index is 1-based"));
                }
                spec.tasks.push((res as usize - 1, p));
            }
            other => return Err(syntax(ln, format!("unknown directive `{other}`"))),
        }
    }

    let periods = periods.ok_or_else(|| syntax(0, "missing `periods` line"))?;
    let resources = resources.ok_or_else(|| syntax(0, "missing `resources` line"))?;
    if tree_pending {
        let parents = parents.ok_or_else(|| syntax(0, "tree topology requires `parents`"))?;
        topology = Some(TopologyMeta::Tree { parents });
    }
    let period_set = PeriodSet::new(periods)?;
    let mut instance = Instance::new(period_set, resources, specs)?;
    instance.topology = topology;
    Ok(instance)
}

/// Canonical instance serialization.
pub fn write_instance(instance: &Instance) -> String {
    let mut out = String::new();
    write!(out, "periods").unwrap();
    for p in instance.period_set().periods() {
        write!(out, " {p}").unwrap();
    }
    out.push('\n');
    writeln!(out, "resources {}", instance.num_resources()).unwrap();
    match &instance.topology {
        Some(TopologyMeta::Line) => writeln!(out, "topology line").unwrap(),
        Some(TopologyMeta::Tree { parents }) => {
            writeln!(out, "topology tree").unwrap();
            write!(out, "parents").unwrap();
            for p in parents {
                match p {
                    None => write!(out, " 0").unwrap(),
                    Some(r) => write!(out, " {}", r + 1).unwrap(),
                }
            }
            out.push('\n');
        }
        None => {}
    }
    for chain in instance.chains() {
        writeln!(out, "chain {}", chain.period_index + 1).unwrap();
        for &id in &chain.tasks {
            let task = instance.task(id);
            writeln!(out, "task {} {}", task.resource + 1, task.proc_time).unwrap();
        }
    }
    out
}

/// Parses a schedule file (`chain.task start` per line) against an instance.
pub fn parse_schedule(instance: &Instance, text: &str) -> Result<Schedule, FormatError> {
    let mut start = vec![None; instance.num_tasks()];
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let key = tokens.next().unwrap();
        let (k, i) = key
            .split_once('.')
            .ok_or_else(|| syntax(ln, "expected `chain.task` key"))?;
        let k = parse_int(ln, k)? as usize;
        let i = parse_int(ln, i)? as usize;
        if k == 0 || i == 0 {
            return Err(syntax(ln, "chain and task indices are 1-based"));
        }
        let chain = instance
            .chains()
            .get(k - 1)
            .ok_or(ModelError::UnknownTask { chain: k, index: i })?;
        let id = *chain
            .tasks
            .get(i - 1)
            .ok_or(ModelError::UnknownTask { chain: k, index: i })?;
        let t = parse_int(ln, tokens.next().ok_or_else(|| syntax(ln, "missing start"))?)?;
        start[id.0] = Some(t);
    }
    let start: Result<Vec<Time>, FormatError> = start
        .iter()
        .enumerate()
        .map(|(i, s)| {
            s.ok_or_else(|| {
                let task = instance.task(TaskId(i));
                FormatError::Model(ModelError::UnknownTask {
                    chain: task.chain + 1,
                    index: task.index + 1,
                })
            })
        })
        .collect();
    Ok(Schedule::new(start?))
}

/// Canonical schedule serialization: chains in order, tasks in order.
pub fn write_schedule(instance: &Instance, schedule: &Schedule) -> String {
    let mut out = String::new();
    for chain in instance.chains() {
        for &id in &chain.tasks {
            writeln!(out, "{} {}", instance.label(id), schedule.start_of(id)).unwrap();
        }
    }
    out
}

/// Packing dump: `resource chain task x y w h`, one rectangle per line,
/// all indices 1-based.
pub fn write_packing(instance: &Instance, rects: &[(usize, PlacedRect)]) -> String {
    let mut out = String::new();
    for (resource, rect) in rects {
        let task = instance.task(rect.task);
        writeln!(
            out,
            "{} {} {} {} {} {} {}",
            resource + 1,
            task.chain + 1,
            task.index + 1,
            rect.x,
            rect.y,
            rect.width,
            rect.height
        )
        .unwrap();
    }
    out
}

/// Search trace rows as comma-separated `(elapsed_ms, criterion)` pairs.
pub fn write_trace(trace: &[(u64, Time)]) -> String {
    let mut out = String::new();
    for (ms, value) in trace {
        writeln!(out, "{ms},{value}").unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "periods 40 80\nresources 2\nchain 1\ntask 1 10\ntask 2 5\nchain 2\ntask 2 8\n";

    #[test]
    fn instance_round_trip_is_bit_exact() {
        let instance = parse_instance(SAMPLE).unwrap();
        let written = write_instance(&instance);
        assert_eq!(written, SAMPLE);
        let reparsed = parse_instance(&written).unwrap();
        assert_eq!(write_instance(&reparsed), written);
    }

    #[test]
    fn schedule_round_trip() {
        let instance = parse_instance(SAMPLE).unwrap();
        let text = "1.1 0\n1.2 10\n2.1 20\n";
        let schedule = parse_schedule(&instance, text).unwrap();
        assert_eq!(write_schedule(&instance, &schedule), text);
    }

    #[test]
    fn schedule_rejects_unknown_task() {
        let instance = parse_instance(SAMPLE).unwrap();
        assert!(parse_schedule(&instance, "9.1 0\n").is_err());
    }

    #[test]
    fn schedule_rejects_non_integer() {
        let instance = parse_instance(SAMPLE).unwrap();
        assert!(parse_schedule(&instance, "1.1 0.5\n1.2 10\n2.1 20\n").is_err());
    }

    #[test]
    fn instance_rejects_overutilization_at_load() {
        let text = "periods 10\nresources 1\nchain 1\ntask 1 6\nchain 1\ntask 1 5\n";
        assert!(parse_instance(text).is_err());
    }
}
