//! Single-operator preemptive scheduling.
//!
//! A set of windowed tasks fits on one preemptive machine iff no interval
//! `[a, b)` contains more work than its length (Horn's condition).
//! [`build_jps`] produces such a schedule by earliest-deadline-first, one
//! shift at a time; [`reconstruct`] applies it per operator to a window
//! solution to obtain an explicit [`ShiftSchedule`].

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;

use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::model::{Instance, SubintervalPlan, TaskId};
use crate::num::ShiftTime;
use crate::solver::WindowSolution;

/// Work tasks order before rest tasks with the same deadline.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TaskRef {
    Work(TaskId),
    /// Rest task of a subinterval (global plan index).
    Rest(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WindowedTask<T> {
    pub id: TaskRef,
    pub release: T,
    pub deadline: T,
    pub duration: T,
}

impl<T: ShiftTime> WindowedTask<T> {
    pub fn new(id: TaskRef, release: T, deadline: T, duration: T) -> Self {
        WindowedTask {
            id,
            release,
            deadline,
            duration,
        }
    }

    pub fn is_rest(&self) -> bool {
        matches!(self.id, TaskRef::Rest(_))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Horn<T> {
    Feasible,
    /// `[lo, hi)` holds `excess` more units than it has shifts.
    Overload { lo: T, hi: T, excess: T },
}

impl<T> Horn<T> {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Horn::Feasible)
    }
}

/// Interval energy test over all release/deadline pairs.
///
/// Returns the interval with the largest excess (earliest on ties). Pairs
/// with `a >= b` are included so that a task with a positive duration and an
/// empty window is reported as well.
pub fn check_horn<T: ShiftTime>(tasks: &[WindowedTask<T>]) -> Horn<T> {
    horn_by(tasks.iter().map(|t| (t.release, t.deadline, t.duration)))
}

/// Horn's test on `(release, deadline, energy)` triples.
pub(crate) fn horn_by<T: ShiftTime>(items: impl Iterator<Item = (T, T, T)>) -> Horn<T> {
    let mut items = items.filter(|i| i.2 > T::zero()).collect::<Vec<_>>();
    if items.is_empty() {
        return Horn::Feasible;
    }
    items.sort_unstable_by_key(|i| (i.1, i.0));
    let mut releases = items.iter().map(|i| i.0).collect::<Vec<_>>();
    releases.sort_unstable();
    releases.dedup();

    let mut worst: Option<(T, T, T)> = None;
    for &a in &releases {
        let mut energy = T::zero();
        let mut i = 0;
        while i < items.len() {
            let b = items[i].1;
            while i < items.len() && items[i].1 == b {
                if items[i].0 >= a {
                    energy = energy + items[i].2;
                }
                i += 1;
            }
            let excess = energy - (b - a).max(T::zero());
            if excess > T::zero() && worst.is_none_or(|w| excess > w.2) {
                worst = Some((a, b, excess));
            }
        }
    }
    match worst {
        None => Horn::Feasible,
        Some((lo, hi, excess)) => Horn::Overload { lo, hi, excess },
    }
}

/// One operator-shift slot of a schedule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Cell {
    #[default]
    Idle,
    Work(TaskId),
    Rest(usize),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Idle => f.write_str("."),
            Cell::Work(id) => write!(f, "W{}.{}", id.job, id.pos),
            Cell::Rest(q) => write!(f, "R{q}"),
        }
    }
}

impl std::str::FromStr for Cell {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("invalid cell tag `{s}`");
        if s == "." {
            return Ok(Cell::Idle);
        }
        if let Some(rest) = s.strip_prefix('R') {
            return rest.parse().map(Cell::Rest).map_err(|_| bad());
        }
        if let Some(work) = s.strip_prefix('W') {
            let (job, pos) = work.split_once('.').ok_or_else(bad)?;
            return Ok(Cell::Work(TaskId::new(
                job.parse().map_err(|_| bad())?,
                pos.parse().map_err(|_| bad())?,
            )));
        }
        Err(bad())
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Cell {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(de::Error::custom)
    }
}

/// Explicit per-operator, per-shift assignment.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShiftSchedule {
    pub horizon: usize,
    #[serde(rename = "operators")]
    pub cells: Vec<Vec<Cell>>,
}

impl ShiftSchedule {
    pub fn new(num_operators: usize, horizon: usize) -> Self {
        ShiftSchedule {
            horizon,
            cells: vec![vec![Cell::Idle; horizon]; num_operators],
        }
    }

    pub fn num_operators(&self) -> usize {
        self.cells.len()
    }

    /// One past the last worked shift; zero for an empty schedule.
    pub fn makespan(&self) -> usize {
        self.cells
            .iter()
            .filter_map(|row| row.iter().rposition(|c| matches!(c, Cell::Work(_))))
            .map(|t| t + 1)
            .max()
            .unwrap_or(0)
    }

    /// Number of `Work` cells of `operator` in `[lo, hi)`, clipped to the horizon.
    pub fn worked_in(&self, operator: usize, lo: usize, hi: usize) -> usize {
        let row = &self.cells[operator];
        let hi = hi.min(row.len());
        let lo = lo.min(hi);
        row[lo..hi]
            .iter()
            .filter(|c| matches!(c, Cell::Work(_)))
            .count()
    }

    /// One row per operator, one character per shift: a job letter for
    /// work, `r` for rest and `.` for idle.
    pub fn to_gantt(&self) -> String {
        let mut out = String::new();
        for row in &self.cells {
            out.extend(row.iter().map(|c| match c {
                Cell::Idle => '.',
                Cell::Rest(_) => 'r',
                Cell::Work(id) => job_letter(id.job),
            }));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("schedule serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

fn job_letter(job: usize) -> char {
    const LETTERS: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
    LETTERS.get(job).map_or('#', |&b| b as char)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no preemptive schedule: {task:?} misses its deadline at shift {shift}")]
pub struct JpsInfeasible {
    pub shift: usize,
    pub task: TaskRef,
}

/// Earliest-deadline-first schedule of `tasks` over `[0, horizon)`.
///
/// Ties go to the smaller deadline, then work before rest, then the smaller
/// task id. Fails at the first shift where an unfinished task's deadline has
/// passed.
pub fn build_jps<T: ShiftTime>(
    tasks: &[WindowedTask<T>],
    horizon: usize,
) -> Result<Vec<Cell>, JpsInfeasible> {
    let mut order = (0..tasks.len())
        .filter(|&i| tasks[i].duration > T::zero())
        .collect::<Vec<_>>();
    order.sort_by_key(|&i| (tasks[i].release, tasks[i].id));
    let mut remaining = tasks.iter().map(|t| t.duration).collect::<Vec<_>>();
    let mut ready = BinaryHeap::new();
    let mut cells = vec![Cell::Idle; horizon];
    let mut next = 0;

    for (t, cell) in cells.iter_mut().enumerate() {
        let now = T::of(t);
        while next < order.len() && tasks[order[next]].release <= now {
            let i = order[next];
            ready.push(Reverse((tasks[i].deadline, tasks[i].id, i)));
            next += 1;
        }
        let Some(Reverse((deadline, id, i))) = ready.pop() else {
            continue;
        };
        if deadline <= now {
            return Err(JpsInfeasible { shift: t, task: id });
        }
        *cell = match id {
            TaskRef::Work(task) => Cell::Work(task),
            TaskRef::Rest(q) => Cell::Rest(q),
        };
        remaining[i] = remaining[i] - T::one();
        if remaining[i] > T::zero() {
            ready.push(Reverse((deadline, id, i)));
        }
    }
    if let Some(Reverse((_, id, _))) = ready.pop() {
        return Err(JpsInfeasible {
            shift: horizon,
            task: id,
        });
    }
    if next < order.len() {
        return Err(JpsInfeasible {
            shift: horizon,
            task: tasks[order[next]].id,
        });
    }
    Ok(cells)
}

#[derive(Debug, Error)]
#[error("operator {operator}: {cause}\n{dump}")]
pub struct ReconstructError {
    pub operator: usize,
    pub cause: JpsInfeasible,
    pub dump: String,
}

/// Work and rest tasks of one operator under a window solution.
pub fn operator_tasks<T: ShiftTime>(
    solution: &WindowSolution<T>,
    plan: &SubintervalPlan<T>,
    instance: &Instance<T>,
    operator: usize,
) -> Vec<WindowedTask<T>> {
    let work = instance.operator_tasks(operator).iter().map(|&i| {
        let task = &instance.tasks()[i];
        WindowedTask::new(
            TaskRef::Work(task.id()),
            solution.starts[i],
            solution.ends[i],
            task.duration,
        )
    });
    let rest = plan.operator_subintervals(operator).iter().map(|&q| {
        let sub = &plan.subintervals()[q];
        WindowedTask::new(TaskRef::Rest(q), sub.lo, sub.hi, solution.rests[q])
    });
    work.chain(rest).collect()
}

/// Rebuilds an explicit schedule from task windows and rest durations.
///
/// The horizon covers both the makespan and every subinterval, so rest
/// placed after the last work shift is kept.
pub fn reconstruct<T: ShiftTime>(
    solution: &WindowSolution<T>,
    plan: &SubintervalPlan<T>,
    instance: &Instance<T>,
) -> Result<ShiftSchedule, ReconstructError> {
    let horizon = solution.cmax.max(plan.horizon()).max(T::zero()).idx();
    let mut schedule = ShiftSchedule::new(instance.num_operators, horizon);
    for k in 0..instance.num_operators {
        let tasks = operator_tasks(solution, plan, instance, k);
        match build_jps(&tasks, horizon) {
            Ok(row) => schedule.cells[k] = row,
            Err(cause) => {
                let dump = tasks
                    .iter()
                    .map(|t| format!("  {:?} [{}, {}) x{}", t.id, t.release, t.deadline, t.duration))
                    .collect::<Vec<_>>()
                    .join("\n");
                return Err(ReconstructError {
                    operator: k,
                    cause,
                    dump,
                });
            }
        }
    }
    Ok(schedule)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn work(job: usize, release: i64, deadline: i64, duration: i64) -> WindowedTask<i64> {
        WindowedTask::new(TaskRef::Work(TaskId::new(job, 0)), release, deadline, duration)
    }

    fn w(job: usize) -> Cell {
        Cell::Work(TaskId::new(job, 0))
    }

    #[test]
    fn horn_examples() {
        assert_eq!(check_horn(&[work(0, 0, 5, 3)]), Horn::Feasible);
        assert_eq!(
            check_horn(&[work(0, 0, 2, 2), work(1, 0, 2, 1)]),
            Horn::Overload { lo: 0, hi: 2, excess: 1 }
        );
        assert_eq!(check_horn(&[work(0, 0, 4, 2), work(1, 1, 3, 2)]), Horn::Feasible);
        assert_eq!(check_horn::<i64>(&[]), Horn::Feasible);
    }

    #[test]
    fn horn_reports_empty_windows() {
        assert!(!check_horn(&[work(0, 5, 3, 1)]).is_feasible());
        assert!(check_horn(&[work(0, 5, 3, 0)]).is_feasible());
    }

    #[test]
    fn edf_examples() {
        let row = build_jps(&[work(0, 0, 5, 3)], 5).unwrap();
        assert_eq!(row, vec![w(0), w(0), w(0), Cell::Idle, Cell::Idle]);

        let row = build_jps(&[work(0, 0, 4, 2), work(1, 1, 3, 2)], 4).unwrap();
        assert_eq!(row, vec![w(0), w(1), w(1), w(0)]);

        let err = build_jps(&[work(0, 0, 2, 2), work(1, 0, 2, 1)], 4).unwrap_err();
        assert_eq!(err.shift, 2);
    }

    #[test]
    fn edf_tie_break_prefers_work_then_lower_id() {
        let tasks = [
            WindowedTask::new(TaskRef::Rest(0), 0, 3, 1),
            work(1, 0, 3, 1),
            work(0, 0, 3, 1),
        ];
        let row = build_jps(&tasks, 3).unwrap();
        assert_eq!(row, vec![w(0), w(1), Cell::Rest(0)]);
    }

    #[test]
    fn edf_fails_when_horizon_is_short() {
        assert!(build_jps(&[work(0, 0, 10, 3)], 2).is_err());
        assert!(build_jps(&[work(0, 4, 10, 1)], 3).is_err());
    }

    #[test]
    fn cell_tags_roundtrip() {
        for c in [Cell::Idle, Cell::Rest(4), Cell::Work(TaskId::new(3, 1))] {
            assert_eq!(c.to_string().parse::<Cell>().unwrap(), c);
        }
        assert!("W3".parse::<Cell>().is_err());
        assert!("X".parse::<Cell>().is_err());
    }

    #[test]
    fn gantt_and_json() {
        let mut s = ShiftSchedule::new(2, 4);
        s.cells[0] = vec![w(0), Cell::Rest(0), Cell::Idle, w(1)];
        s.cells[1][1] = w(2);
        assert_eq!(s.to_gantt(), "Ar.B\n.C..\n");
        assert_eq!(s.makespan(), 4);
        assert_eq!(s.worked_in(0, 0, 3), 1);
        assert_eq!(s.worked_in(0, 2, 100), 1);
        let back = ShiftSchedule::from_json(&s.to_json()).unwrap();
        assert_eq!(back, s);
        assert_eq!(ShiftSchedule::new(0, 0).makespan(), 0);
    }
}
