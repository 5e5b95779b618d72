//! Ground truth for explicit schedules.
//!
//! [`check_schedule`] verifies every problem rule directly on shift cells.
//! [`brute_force_optimum`] enumerates shift-by-shift assignments for tiny
//! instances. Neither uses rest tasks or subintervals.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::jps::{Cell, ShiftSchedule};
use crate::model::Instance;
use crate::num::ShiftTime;
use crate::solver::greedy_schedule;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    Duration,
    Precedence,
    Overlap,
    SameOperator,
    Maxw,
    Makespan,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleViolation {
    pub rule: Rule,
    pub location: String,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckReport {
    pub ok: bool,
    pub violations: Vec<RuleViolation>,
}

impl CheckReport {
    pub fn has(&self, rule: Rule) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Checks task durations, operator assignment, precedences, one cell per
/// operator-shift, every MaxW constraint of the instance and the claimed
/// makespan.
pub fn check_schedule<T: ShiftTime>(
    schedule: &ShiftSchedule,
    instance: &Instance<T>,
    claimed_cmax: T,
) -> CheckReport {
    let mut out = Vec::new();
    let mut flag = |rule, location: String, detail: String| {
        out.push(RuleViolation {
            rule,
            location,
            detail,
        })
    };

    if schedule.num_operators() != instance.num_operators {
        flag(
            Rule::Overlap,
            "schedule".into(),
            format!(
                "{} operator rows for {} operators",
                schedule.num_operators(),
                instance.num_operators
            ),
        );
    }
    for (k, row) in schedule.cells.iter().enumerate() {
        if row.len() != schedule.horizon {
            flag(
                Rule::Overlap,
                format!("operator {k}"),
                format!("{} cells for horizon {}", row.len(), schedule.horizon),
            );
        }
    }

    let n = instance.num_tasks();
    let mut count = vec![0usize; n];
    let mut first = vec![usize::MAX; n];
    let mut last = vec![0usize; n];
    let mut busy_at: HashSet<(usize, usize)> = HashSet::new();
    for (k, row) in schedule.cells.iter().enumerate() {
        for (t, cell) in row.iter().enumerate() {
            let Cell::Work(id) = cell else { continue };
            let Some(i) = instance.task_index(*id) else {
                flag(
                    Rule::Duration,
                    format!("operator {k}, shift {t}"),
                    format!("unknown task {}.{}", id.job, id.pos),
                );
                continue;
            };
            if !busy_at.insert((i, t)) {
                flag(
                    Rule::Overlap,
                    format!("task {}.{}, shift {t}", id.job, id.pos),
                    "task runs on two operators at once".into(),
                );
            }
            let task = &instance.tasks()[i];
            if task.operator != k {
                flag(
                    Rule::SameOperator,
                    format!("operator {k}, shift {t}"),
                    format!("task {}.{} belongs to operator {}", id.job, id.pos, task.operator),
                );
                continue;
            }
            count[i] += 1;
            first[i] = first[i].min(t);
            last[i] = last[i].max(t);
        }
    }

    for (i, task) in instance.tasks().iter().enumerate() {
        if count[i] != task.duration.idx() {
            flag(
                Rule::Duration,
                format!("task {}.{}", task.job, task.pos),
                format!("{} units placed, {} required", count[i], task.duration),
            );
        }
    }
    for job in 0..instance.num_jobs() {
        for i in instance.job_range(job).skip(1) {
            if count[i - 1] > 0 && count[i] > 0 && last[i - 1] >= first[i] {
                let t = &instance.tasks()[i];
                flag(
                    Rule::Precedence,
                    format!("task {}.{}", t.job, t.pos),
                    format!(
                        "starts at shift {} before predecessor ends at shift {}",
                        first[i], last[i - 1]
                    ),
                );
            }
        }
    }
    for (c, con) in instance.maxw().iter().enumerate() {
        if con.operator >= schedule.num_operators() {
            continue;
        }
        let worked = schedule.worked_in(con.operator, con.lo.idx(), con.hi.idx());
        if worked > con.delta.idx() {
            flag(
                Rule::Maxw,
                format!("constraint {c}"),
                format!(
                    "operator {} works {worked} shifts in [{}, {}), limit {}",
                    con.operator, con.lo, con.hi, con.delta
                ),
            );
        }
    }
    let makespan = schedule.makespan();
    if T::of(makespan) > claimed_cmax {
        flag(
            Rule::Makespan,
            "schedule".into(),
            format!("last work shift ends at {makespan}, claimed {claimed_cmax}"),
        );
    }

    CheckReport {
        ok: out.is_empty(),
        violations: out,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("node cap reached before the search finished")]
    Exhausted,
    #[error("no schedule within the horizon cap")]
    NoScheduleWithinCap,
}

/// Minimum makespan by exhaustive search over shifts.
///
/// At every shift each operator idles or runs one unit of a task whose
/// predecessor has finished in an earlier shift, provided no MaxW window
/// containing the shift has spent its budget. Visited states are memoized
/// and branches that cannot beat the incumbent are cut; both are exact.
/// `horizon_cap` defaults to the greedy makespan.
pub fn brute_force_optimum<T: ShiftTime>(
    instance: &Instance<T>,
    horizon_cap: Option<usize>,
    node_cap: u64,
) -> Result<T, OracleError> {
    let cap = match horizon_cap {
        Some(c) => c,
        None => greedy_schedule(instance)
            .map_err(|_| OracleError::NoScheduleWithinCap)?
            .makespan(),
    };
    let mut oracle = Oracle::new(instance, cap, node_cap);
    if instance.num_tasks() == 0 {
        return Ok(T::zero());
    }
    oracle.shift(0)?;
    oracle
        .best
        .map(T::of)
        .ok_or(OracleError::NoScheduleWithinCap)
}

struct Oracle<'a, T> {
    instance: &'a Instance<T>,
    cap: usize,
    node_cap: u64,
    nodes: u64,
    /// Units done per task.
    done: Vec<usize>,
    /// Shift at which each task completed, if it has.
    finished_at: Vec<Option<usize>>,
    /// Work counted so far per constraint.
    used: Vec<usize>,
    best: Option<usize>,
    seen: HashSet<(usize, Vec<usize>, Vec<usize>)>,
    /// Tasks per operator and constraints per operator.
    by_op: Vec<Vec<usize>>,
    cons_by_op: Vec<Vec<usize>>,
}

impl<'a, T: ShiftTime> Oracle<'a, T> {
    fn new(instance: &'a Instance<T>, cap: usize, node_cap: u64) -> Self {
        let k = instance.num_operators;
        let mut cons_by_op = vec![Vec::new(); k];
        for (c, con) in instance.maxw().iter().enumerate() {
            cons_by_op[con.operator].push(c);
        }
        Oracle {
            instance,
            cap,
            node_cap,
            nodes: 0,
            done: vec![0; instance.num_tasks()],
            finished_at: vec![None; instance.num_tasks()],
            used: vec![0; instance.maxw().len()],
            best: None,
            seen: HashSet::new(),
            by_op: (0..k).map(|o| instance.operator_tasks(o).to_vec()).collect(),
            cons_by_op,
        }
    }

    fn duration(&self, i: usize) -> usize {
        self.instance.tasks()[i].duration.idx()
    }

    fn eligible(&self, i: usize, t: usize) -> bool {
        let task = &self.instance.tasks()[i];
        if self.done[i] == self.duration(i) {
            return false;
        }
        let first = self.instance.job_range(task.job).start;
        i == first || self.finished_at[i - 1].is_some_and(|f| f < t)
    }

    fn budget_ok(&self, op: usize, t: usize) -> bool {
        self.cons_by_op[op].iter().all(|&c| {
            let con = &self.instance.maxw()[c];
            !(con.lo.idx() <= t && t < con.hi.idx()) || self.used[c] < con.delta.idx()
        })
    }

    /// Remaining work lower bound on the finishing shift.
    fn lower_bound(&self, t: usize) -> usize {
        let per_op = self
            .by_op
            .iter()
            .map(|ts| ts.iter().map(|&i| self.duration(i) - self.done[i]).sum::<usize>())
            .max()
            .unwrap_or(0);
        let per_job = (0..self.instance.num_jobs())
            .map(|j| {
                self.instance
                    .job_range(j)
                    .map(|i| self.duration(i) - self.done[i])
                    .sum::<usize>()
            })
            .max()
            .unwrap_or(0);
        t + per_op.max(per_job)
    }

    fn all_done(&self) -> bool {
        (0..self.done.len()).all(|i| self.done[i] == self.duration(i))
    }

    /// Explores every assignment for shift `t` onwards.
    fn shift(&mut self, t: usize) -> Result<(), OracleError> {
        if self.all_done() {
            self.best = Some(self.best.map_or(t, |b| b.min(t)));
            return Ok(());
        }
        let limit = self.best.unwrap_or(self.cap + 1).min(self.cap + 1);
        if self.lower_bound(t) >= limit {
            return Ok(());
        }
        self.nodes += 1;
        if self.nodes > self.node_cap {
            return Err(OracleError::Exhausted);
        }
        // only windows still open matter for the future
        let open = self
            .instance
            .maxw()
            .iter()
            .enumerate()
            .map(|(c, con)| if con.hi.idx() > t { self.used[c] } else { 0 })
            .collect();
        if !self.seen.insert((t, self.done.clone(), open)) {
            return Ok(());
        }
        self.assign(0, t, &mut Vec::new())
    }

    /// Chooses idle or one task for operator `op`, then recurses.
    fn assign(&mut self, op: usize, t: usize, picked: &mut Vec<usize>) -> Result<(), OracleError> {
        if op == self.instance.num_operators {
            for &i in picked.iter() {
                self.done[i] += 1;
                if self.done[i] == self.duration(i) {
                    self.finished_at[i] = Some(t);
                }
            }
            let r = self.shift(t + 1);
            for &i in picked.iter() {
                if self.done[i] == self.duration(i) {
                    self.finished_at[i] = None;
                }
                self.done[i] -= 1;
            }
            return r;
        }
        if self.budget_ok(op, t) {
            let candidates = self.by_op[op]
                .iter()
                .copied()
                .filter(|&i| self.eligible(i, t))
                .collect::<Vec<_>>();
            let windows = self.cons_by_op[op]
                .iter()
                .copied()
                .filter(|&c| {
                    let con = &self.instance.maxw()[c];
                    con.lo.idx() <= t && t < con.hi.idx()
                })
                .collect::<Vec<_>>();
            for i in candidates {
                for &c in &windows {
                    self.used[c] += 1;
                }
                picked.push(i);
                let r = self.assign(op + 1, t, picked);
                picked.pop();
                for &c in &windows {
                    self.used[c] -= 1;
                }
                r?;
            }
        }
        self.assign(op + 1, t, picked)
    }
}
