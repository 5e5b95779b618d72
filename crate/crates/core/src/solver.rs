//! Branch and bound on the window model for a fixed set of active MaxW
//! constraints.
//!
//! The makespan is minimized by linear descent: starting from a greedy upper
//! bound, each improving solution tightens the cap by one shift until the
//! decision problem becomes unsatisfiable.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::jps::{Cell, ShiftSchedule};
use crate::model::{required_rest, Instance, SubintervalPlan};
use crate::num::ShiftTime;
use crate::propagation::{propagate_all, SearchState, VarId};

/// Fixed values of every model variable.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSolution<T> {
    /// Window start per task (global index).
    pub starts: Vec<T>,
    /// Window end per task (global index).
    pub ends: Vec<T>,
    /// Rest shifts per plan subinterval.
    pub rests: Vec<T>,
    pub cmax: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Optimal,
    Feasible,
    Infeasible,
    Timeout,
}

impl Status {
    pub fn has_solution(self) -> bool {
        matches!(self, Status::Optimal | Status::Feasible)
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Status::Optimal => "optimal",
            Status::Feasible => "feasible",
            Status::Infeasible => "infeasible",
            Status::Timeout => "timeout",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug)]
pub struct SolveOutcome<T> {
    pub status: Status,
    pub best: Option<WindowSolution<T>>,
    /// Number of improving solutions, the greedy start included.
    pub makespan_iterations: usize,
    pub nodes: u64,
    pub elapsed: Duration,
}

impl<T: ShiftTime> SolveOutcome<T> {
    pub fn cmax(&self) -> Option<T> {
        self.best.as_ref().map(|b| b.cmax)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("greedy construction exceeded {limit} shifts; instance infeasible as posed")]
pub struct Unbounded {
    pub limit: usize,
}

/// Places tasks job by job on the earliest shifts where the operator is free
/// and no MaxW budget of the full pool is exhausted.
pub fn greedy_schedule<T: ShiftTime>(instance: &Instance<T>) -> Result<ShiftSchedule, Unbounded> {
    let limit = instance.total_work().idx()
        + instance.maxw().iter().map(|c| required_rest(c).idx()).sum::<usize>()
        + instance.maxw().iter().map(|c| c.hi.idx()).max().unwrap_or(0);
    let k = instance.num_operators;
    let mut rows: Vec<Vec<Cell>> = vec![Vec::new(); k];
    let mut used = vec![0usize; instance.maxw().len()];
    let mut by_op = vec![Vec::new(); k];
    for (c, con) in instance.maxw().iter().enumerate() {
        by_op[con.operator].push(c);
    }

    for job in 0..instance.num_jobs() {
        let mut ready = 0usize;
        for task in instance.job(job) {
            let op = task.operator;
            let mut left = task.duration.idx();
            let mut t = ready;
            while left > 0 {
                if t >= limit {
                    return Err(Unbounded { limit });
                }
                let row = &mut rows[op];
                if row.len() <= t {
                    row.resize(t + 1, Cell::Idle);
                }
                let free = row[t] == Cell::Idle;
                let within_budget = || {
                    by_op[op].iter().all(|&c| {
                        let con = &instance.maxw()[c];
                        !(con.lo.idx() <= t && t < con.hi.idx()) || used[c] < con.delta.idx()
                    })
                };
                if free && within_budget() {
                    row[t] = Cell::Work(task.id());
                    for &c in &by_op[op] {
                        let con = &instance.maxw()[c];
                        if con.lo.idx() <= t && t < con.hi.idx() {
                            used[c] += 1;
                        }
                    }
                    left -= 1;
                }
                t += 1;
            }
            ready = t;
        }
    }
    let horizon = rows.iter().map(Vec::len).max().unwrap_or(0);
    for row in &mut rows {
        row.resize(horizon, Cell::Idle);
    }
    let mut schedule = ShiftSchedule::new(k, horizon);
    schedule.cells = rows;
    let makespan = schedule.makespan();
    for row in &mut schedule.cells {
        row.truncate(makespan);
    }
    schedule.horizon = makespan;
    Ok(schedule)
}

/// Reads model values off an explicit schedule: windows run from the
/// predecessor's completion to the task's own completion, and each rest
/// variable takes as many idle shifts as its upper bound allows.
pub fn window_solution_from_schedule<T: ShiftTime>(
    schedule: &ShiftSchedule,
    plan: &SubintervalPlan<T>,
    instance: &Instance<T>,
) -> WindowSolution<T> {
    let n = instance.num_tasks();
    let mut completion = vec![0usize; n];
    for row in &schedule.cells {
        for (t, cell) in row.iter().enumerate() {
            if let Cell::Work(id) = cell {
                let i = instance.task_index(*id).expect("schedule task exists");
                completion[i] = completion[i].max(t + 1);
            }
        }
    }
    let mut starts = vec![T::zero(); n];
    let mut ends = vec![T::zero(); n];
    for job in 0..instance.num_jobs() {
        let mut ready = 0;
        for i in instance.job_range(job) {
            starts[i] = T::of(ready);
            ends[i] = T::of(completion[i]);
            ready = completion[i];
        }
    }
    let rests = plan
        .subintervals()
        .iter()
        .map(|q| {
            let len = q.len().idx();
            let worked = schedule.worked_in(q.operator, q.lo.idx(), q.hi.idx());
            T::of(len - worked).min(q.rest_ub)
        })
        .collect();
    WindowSolution {
        starts,
        ends,
        rests,
        cmax: T::of(schedule.makespan()),
    }
}

/// Greedy makespan respecting the whole constraint pool, with the matching
/// window solution for `plan`.
pub fn initial_upper_bound<T: ShiftTime>(
    instance: &Instance<T>,
    plan: &SubintervalPlan<T>,
) -> Result<(T, WindowSolution<T>), Unbounded> {
    let schedule = greedy_schedule(instance)?;
    let sol = window_solution_from_schedule(&schedule, plan, instance);
    Ok((sol.cmax, sol))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decision<T> {
    Sat(WindowSolution<T>),
    Unsat,
    Timeout,
}

struct TimedOut;

struct Search<'a, T> {
    instance: &'a Instance<T>,
    plan: &'a SubintervalPlan<T>,
    state: SearchState<T>,
    deadline: Option<Instant>,
    nodes: u64,
}

impl<'a, T: ShiftTime> Search<'a, T> {
    /// Propagates and applies the start dominance: once a task's predecessor
    /// end is fixed, the task's start takes its lowest value (wider windows
    /// never hurt), and the makespan takes its lowest value once every other
    /// variable is fixed.
    fn settle(&mut self) -> bool {
        loop {
            if propagate_all(&mut self.state, self.instance, self.plan).is_err() {
                return false;
            }
            let mut fixed_any = false;
            for job in 0..self.instance.num_jobs() {
                for i in self.instance.job_range(job).skip(1) {
                    let s = self.state.start(i);
                    let prev_end = self.state.get(self.state.end(i - 1));
                    if prev_end.is_fixed() && !self.state.get(s).is_fixed() {
                        let lo = self.state.lo(s);
                        if self.state.set_hi(s, lo).is_err() {
                            return false;
                        }
                        fixed_any = true;
                    }
                }
            }
            if !fixed_any {
                return true;
            }
        }
    }

    /// Unfixed task windows first (ends, then starts), then rest durations;
    /// smallest domain, then smallest lower bound.
    fn select(&self) -> Option<VarId> {
        let st = &self.state;
        let pick = |vars: &mut dyn Iterator<Item = VarId>| {
            vars.filter(|&v| !st.get(v).is_fixed())
                .min_by_key(|&v| (st.get(v).size(), st.lo(v), v))
        };
        let n = st.num_tasks();
        pick(&mut (0..n).map(|i| st.end(i)))
            .or_else(|| pick(&mut (0..n).map(|i| st.start(i))))
            .or_else(|| pick(&mut (0..st.num_rests()).map(|q| st.rest(q))))
    }

    fn solution(&self) -> WindowSolution<T> {
        let st = &self.state;
        let n = st.num_tasks();
        WindowSolution {
            starts: (0..n).map(|i| st.lo(st.start(i))).collect(),
            ends: (0..n).map(|i| st.lo(st.end(i))).collect(),
            rests: (0..st.num_rests()).map(|q| st.lo(st.rest(q))).collect(),
            cmax: st.lo(st.cmax()),
        }
    }

    fn dfs(&mut self) -> Result<Option<WindowSolution<T>>, TimedOut> {
        self.nodes += 1;
        if self.deadline.is_some_and(|d| Instant::now() >= d) {
            return Err(TimedOut);
        }
        if !self.settle() {
            return Ok(None);
        }
        let Some(var) = self.select() else {
            let cmax = self.state.cmax();
            let lo = self.state.lo(cmax);
            self.state.set_hi(cmax, lo).expect("lower bound is in domain");
            return Ok(Some(self.solution()));
        };
        let b = self.state.get(var);
        let mid = b.lo + (b.hi - b.lo) / (T::one() + T::one());
        for lower_half in [true, false] {
            self.state.push_level();
            let ok = if lower_half {
                self.state.set_hi(var, mid)
            } else {
                self.state.set_lo(var, mid + T::one())
            };
            let found = match ok {
                Ok(_) => self.dfs(),
                Err(_) => Ok(None),
            };
            self.state.pop_level();
            if let Some(sol) = found? {
                return Ok(Some(sol));
            }
        }
        Ok(None)
    }
}

/// Decides whether a solution with makespan in `[lower_bound, cap]` exists.
/// Returns the decision and the number of search nodes.
pub fn solve_decision<T: ShiftTime>(
    instance: &Instance<T>,
    plan: &SubintervalPlan<T>,
    ub: T,
    cap: T,
    lower_bound: T,
    deadline: Option<Instant>,
) -> (Decision<T>, u64) {
    let mut state = SearchState::new(instance, plan, ub);
    let cmax = state.cmax();
    if cap < lower_bound || state.set_hi(cmax, cap).is_err() || state.set_lo(cmax, lower_bound).is_err() {
        return (Decision::Unsat, 0);
    }
    let mut search = Search {
        instance,
        plan,
        state,
        deadline,
        nodes: 0,
    };
    let decision = match search.dfs() {
        Ok(Some(sol)) => Decision::Sat(sol),
        Ok(None) => Decision::Unsat,
        Err(TimedOut) => Decision::Timeout,
    };
    (decision, search.nodes)
}

/// Minimizes the makespan with the constraints in `active`.
pub fn minimize_makespan<T: ShiftTime>(
    instance: &Instance<T>,
    active: &[usize],
    deadline: Option<Instant>,
) -> SolveOutcome<T> {
    let plan = SubintervalPlan::build(instance, active);
    minimize_with_plan(instance, &plan, T::zero(), deadline)
}

/// Linear descent from the greedy bound. `lower_bound` is a makespan known to
/// be unreachable from below, e.g. the optimum of a weaker relaxation.
pub fn minimize_with_plan<T: ShiftTime>(
    instance: &Instance<T>,
    plan: &SubintervalPlan<T>,
    lower_bound: T,
    deadline: Option<Instant>,
) -> SolveOutcome<T> {
    let started = Instant::now();
    let (ub, mut best) = match initial_upper_bound(instance, plan) {
        Ok(v) => v,
        Err(_) => {
            return SolveOutcome {
                status: Status::Infeasible,
                best: None,
                makespan_iterations: 0,
                nodes: 0,
                elapsed: started.elapsed(),
            }
        }
    };
    let mut iterations = 1;
    let mut nodes = 0;
    let status = loop {
        let cap = best.cmax - T::one();
        if cap < lower_bound {
            break Status::Optimal;
        }
        let (decision, n) = solve_decision(instance, plan, ub, cap, lower_bound, deadline);
        nodes += n;
        match decision {
            Decision::Sat(sol) => {
                debug_assert!(sol.cmax < best.cmax);
                best = sol;
                iterations += 1;
            }
            Decision::Unsat => break Status::Optimal,
            Decision::Timeout => break Status::Feasible,
        }
    };
    SolveOutcome {
        status,
        best: Some(best),
        makespan_iterations: iterations,
        nodes,
        elapsed: started.elapsed(),
    }
}
