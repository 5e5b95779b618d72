//! Iterative activation of MaxW constraints.
//!
//! The master problem is solved with only a subset of the constraints. Its
//! solution is turned into an explicit schedule by EDF, the inactive
//! constraints are recounted on that schedule, and a set of pairwise
//! non-overlapping violated windows per operator is activated for the next
//! round. The loop ends when the reconstructed schedule violates nothing.

use std::collections::BTreeSet;
use std::time::Instant;

use serde::Serialize;

use crate::jps::{reconstruct, ShiftSchedule};
use crate::model::{required_rest, Instance, MaxWConstraint, SubintervalPlan};
use crate::num::ShiftTime;
use crate::solver::{greedy_schedule, minimize_with_plan, SolveOutcome, Status, WindowSolution};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Violation {
    pub constraint: usize,
    /// Worked shifts in the window minus the budget; at least one.
    pub amount: usize,
}

/// One line of the iteration log.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IterationLog {
    pub iter: usize,
    pub activated: Vec<usize>,
    pub active_total: usize,
    pub cmax: Option<i64>,
    pub status: Status,
    pub violated: usize,
    pub elapsed_ms: u128,
}

#[derive(Clone, Debug, Default)]
pub struct ActivationState {
    pub active: BTreeSet<usize>,
    pub pool_size: usize,
    /// Non-vacuous constraints, the ones that can ever be activated.
    pub binding: usize,
    pub log: Vec<IterationLog>,
    /// Size of the active set when a master solution first passed separation.
    pub active_at_first_feasible: Option<usize>,
}

impl ActivationState {
    pub fn inactive(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.pool_size).filter(|c| !self.active.contains(c))
    }

    /// Activated share of the binding constraints (0 when there are none).
    pub fn activated_fraction(&self) -> f64 {
        if self.binding == 0 {
            0.0
        } else {
            self.active.len() as f64 / self.binding as f64
        }
    }

    pub fn log_jsonl(&self) -> String {
        self.log
            .iter()
            .map(|l| serde_json::to_string(l).expect("log serializes") + "\n")
            .collect()
    }
}

/// Inactive constraints whose windows hold more worked shifts than allowed.
pub fn separate<T: ShiftTime>(
    schedule: &ShiftSchedule,
    pool: &[MaxWConstraint<T>],
    active: &BTreeSet<usize>,
) -> Vec<Violation> {
    let amount = |c: &MaxWConstraint<T>| {
        schedule
            .worked_in(c.operator, c.lo.idx(), c.hi.idx())
            .saturating_sub(c.delta.idx())
    };
    if cfg!(debug_assertions) {
        for &c in active {
            debug_assert_eq!(amount(&pool[c]), 0, "active constraint {c} violated");
        }
    }
    pool.iter()
        .enumerate()
        .filter(|(c, _)| !active.contains(c))
        .filter_map(|(c, con)| {
            let amount = amount(con);
            (amount > 0).then_some(Violation {
                constraint: c,
                amount,
            })
        })
        .collect()
}

/// Per operator, repeatedly takes the most violated constraint (then the
/// smaller window start, then the smaller index) and drops every remaining
/// candidate whose window overlaps it. Returns sorted constraint indices.
pub fn select_activation<T: ShiftTime>(violations: &[Violation], pool: &[MaxWConstraint<T>]) -> Vec<usize> {
    let mut ranked = violations.to_vec();
    ranked.sort_by_key(|v| {
        (
            std::cmp::Reverse(v.amount),
            pool[v.constraint].lo,
            v.constraint,
        )
    });
    let mut chosen: Vec<usize> = Vec::new();
    for v in ranked {
        let con = &pool[v.constraint];
        if chosen.iter().all(|&c| !pool[c].overlaps(con)) {
            chosen.push(v.constraint);
        }
    }
    chosen.sort_unstable();
    chosen
}

/// Starting set: every binding constraint counts as violated by its
/// required rest.
pub fn initial_pool<T: ShiftTime>(instance: &Instance<T>) -> Vec<usize> {
    let assumed = instance
        .binding_constraints()
        .map(|c| Violation {
            constraint: c,
            amount: required_rest(&instance.maxw()[c]).idx(),
        })
        .collect::<Vec<_>>();
    select_activation(&assumed, instance.maxw())
}

#[derive(Clone, Debug)]
pub struct LazyResult<T> {
    pub outcome: SolveOutcome<T>,
    /// Schedule satisfying the whole pool, if one was found.
    pub schedule: Option<ShiftSchedule>,
    pub activation: ActivationState,
    /// Master iterations run.
    pub maxw_iterations: usize,
}

/// Solves with progressively activated constraints.
///
/// Each master starts from scratch with all remaining time, using the last
/// proven master optimum as a lower bound. When the time runs out the best
/// schedule that satisfies the whole pool is returned as `Feasible`; the
/// greedy start always qualifies.
pub fn solve_iterative<T: ShiftTime>(instance: &Instance<T>, deadline: Option<Instant>) -> LazyResult<T> {
    let started = Instant::now();
    let pool = instance.maxw();
    let mut activation = ActivationState {
        active: initial_pool(instance).into_iter().collect(),
        pool_size: pool.len(),
        binding: instance.binding_constraints().count(),
        ..Default::default()
    };

    let fallback = greedy_schedule(instance).ok();
    let mut best_feasible: Option<(ShiftSchedule, WindowSolution<T>)> = None;
    let mut lower_bound = T::zero();
    let mut nodes = 0;
    let mut makespan_iterations = 0;
    let mut iter = 0;

    let finish = |status: Status,
                  best: Option<(ShiftSchedule, WindowSolution<T>)>,
                  activation: ActivationState,
                  nodes: u64,
                  makespan_iterations: usize,
                  iter: usize| {
        let (schedule, best) = match best {
            Some((s, w)) => (Some(s), Some(w)),
            None => (None, None),
        };
        LazyResult {
            outcome: SolveOutcome {
                status,
                best,
                makespan_iterations,
                nodes,
                elapsed: started.elapsed(),
            },
            schedule,
            activation,
            maxw_iterations: iter,
        }
    };

    loop {
        iter += 1;
        let active = activation.active.iter().copied().collect::<Vec<_>>();
        let plan = SubintervalPlan::build(instance, &active);
        let master = minimize_with_plan(instance, &plan, lower_bound, deadline);
        nodes += master.nodes;
        makespan_iterations += master.makespan_iterations;

        let Some(sol) = master.best.clone() else {
            // only reachable when even the greedy construction fails
            let status = if master.status == Status::Infeasible {
                Status::Infeasible
            } else {
                Status::Timeout
            };
            return finish(status, None, activation, nodes, makespan_iterations, iter);
        };
        let schedule = reconstruct(&sol, &plan, instance)
            .unwrap_or_else(|e| panic!("master solution is not reconstructible: {e}"));
        let violations = separate(&schedule, pool, &activation.active);
        let selected = if violations.is_empty() {
            Vec::new()
        } else {
            select_activation(&violations, pool)
        };
        activation.log.push(IterationLog {
            iter,
            activated: selected.clone(),
            active_total: activation.active.len(),
            cmax: sol.cmax.to_i64(),
            status: master.status,
            violated: violations.len(),
            elapsed_ms: started.elapsed().as_millis(),
        });

        if violations.is_empty() {
            activation.active_at_first_feasible.get_or_insert(activation.active.len());
            let status = if master.status == Status::Optimal {
                Status::Optimal
            } else {
                Status::Feasible
            };
            return finish(status, Some((schedule, sol)), activation, nodes, makespan_iterations, iter);
        }
        if master.status == Status::Optimal {
            lower_bound = lower_bound.max(sol.cmax);
        } else {
            // out of time: fall back to the greedy schedule, which honours every constraint
            if best_feasible.is_none() {
                if let Some(g) = fallback.clone() {
                    let all = instance.binding_constraints().collect::<Vec<_>>();
                    let plan = SubintervalPlan::build(instance, &all);
                    let w = crate::solver::window_solution_from_schedule(&g, &plan, instance);
                    best_feasible = Some((g, w));
                }
            }
            let status = if best_feasible.is_some() {
                Status::Feasible
            } else {
                Status::Timeout
            };
            return finish(status, best_feasible, activation, nodes, makespan_iterations, iter);
        }
        activation.active.extend(selected);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jps::Cell;
    use crate::model::{validate_instance, RawInstance, TaskId};

    fn c(delta: i64, lo: i64, hi: i64) -> MaxWConstraint<i64> {
        MaxWConstraint::new(0, delta, lo, hi)
    }

    fn inst(text: &str) -> Instance<i64> {
        validate_instance(RawInstance::parse_text("t", text).unwrap()).unwrap()
    }

    fn worked(shifts: &[usize], horizon: usize) -> ShiftSchedule {
        let mut s = ShiftSchedule::new(1, horizon);
        for &t in shifts {
            s.cells[0][t] = Cell::Work(TaskId::new(0, 0));
        }
        s
    }

    #[test]
    fn separation_counts_work_cells() {
        let s = worked(&[0, 1, 2], 5);
        let none = BTreeSet::new();
        assert_eq!(
            separate(&s, &[c(2, 0, 4)], &none),
            vec![Violation { constraint: 0, amount: 1 }]
        );
        assert!(separate(&s, &[c(3, 0, 4)], &none).is_empty());
    }

    #[test]
    fn figure_one_separation_and_selection() {
        let pool = [c(5, 0, 6), c(2, 4, 9)];
        let s = worked(&(0..9).collect::<Vec<_>>(), 9);
        let v = separate(&s, &pool, &BTreeSet::new());
        assert_eq!(
            v,
            vec![
                Violation { constraint: 0, amount: 1 },
                Violation { constraint: 1, amount: 3 }
            ]
        );
        assert_eq!(select_activation(&v, &pool), vec![1]);
        let active = BTreeSet::from([1]);
        assert_eq!(separate(&worked(&[0, 1, 2, 3, 4, 5], 9), &pool, &active).len(), 1);
    }

    #[test]
    fn selection_keeps_disjoint_windows() {
        let pool = [c(1, 0, 3), c(1, 5, 8)];
        let v = [
            Violation { constraint: 0, amount: 1 },
            Violation { constraint: 1, amount: 2 },
        ];
        assert_eq!(select_activation(&v, &pool), vec![0, 1]);
        assert_eq!(select_activation(&v[..1], &pool), vec![0]);
    }

    #[test]
    fn selection_is_per_operator() {
        let pool = [c(1, 0, 5), MaxWConstraint::new(1, 1, 0, 5)];
        let v = [
            Violation { constraint: 0, amount: 1 },
            Violation { constraint: 1, amount: 1 },
        ];
        assert_eq!(select_activation(&v, &pool), vec![0, 1]);
    }

    #[test]
    fn initial_pool_examples() {
        assert_eq!(initial_pool(&inst("1 1\n0 1\nMAXW 2\n0 5 0 6\n0 2 4 9\n")), vec![1]);
        assert!(initial_pool(&inst("1 1\n0 1\n")).is_empty());
        assert_eq!(initial_pool(&inst("1 1\n0 1\nMAXW 2\n0 1 0 3\n0 1 5 8\n")), vec![0, 1]);
        // vacuous constraints never enter
        assert!(initial_pool(&inst("1 1\n0 1\nMAXW 1\n0 3 0 3\n")).is_empty());
    }

    #[test]
    fn single_task_with_rest() {
        let r = solve_iterative(&inst("1 1\n0 3\nMAXW 1\n0 1 0 3\n"), None);
        assert_eq!(r.outcome.status, Status::Optimal);
        assert_eq!(r.outcome.cmax(), Some(5));
        assert_eq!(r.maxw_iterations, 1);
        assert_eq!(r.activation.active.len(), 1);
    }

    #[test]
    fn relaxation_already_feasible() {
        // window far after the work: never violated, but required rest puts it in the initial pool
        let r = solve_iterative(&inst("1 1\n0 2\nMAXW 1\n0 0 10 12\n"), None);
        assert_eq!(r.outcome.status, Status::Optimal);
        assert_eq!(r.maxw_iterations, 1);
        assert_eq!(r.activation.log[0].activated, Vec::<usize>::new());
    }

    #[test]
    fn activation_grows_until_feasible() {
        // the initial pool keeps [4,9) only; [0,6) must be activated later or hold by chance
        let i = inst("1 1\n0 7\nMAXW 2\n0 5 0 6\n0 2 4 9\n");
        let r = solve_iterative(&i, None);
        assert_eq!(r.outcome.status, Status::Optimal);
        let s = r.schedule.unwrap();
        for con in i.maxw() {
            assert!(s.worked_in(0, con.lo as usize, con.hi as usize) <= con.delta as usize);
        }
        let sizes = r.activation.log.iter().map(|l| l.active_total).collect::<Vec<_>>();
        assert!(sizes.windows(2).all(|w| w[0] < w[1]));
    }
}
