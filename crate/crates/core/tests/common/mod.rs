//! Helpers shared by the integration tests: random tiny instances and
//! reference implementations that share no code with the library.

#![allow(dead_code)]

use std::collections::HashSet;

use maxw_core::model::{validate_instance, MaxWConstraint, RawInstance, RawTask};
use maxw_core::{Instance, SubintervalPlan};
use rand::Rng;

/// Shape limits for [`tiny_instance`].
#[derive(Clone, Copy, Debug)]
pub struct Tiny {
    pub jobs: usize,
    pub tasks_per_job: usize,
    pub max_duration: i64,
    pub operators: usize,
    pub constraints: usize,
    /// Windows lie inside `[0, span)`.
    pub span: i64,
}

pub const ORACLE_SHAPE: Tiny = Tiny {
    jobs: 3,
    tasks_per_job: 2,
    max_duration: 3,
    operators: 2,
    constraints: 3,
    span: 10,
};

pub fn tiny_instance(rng: &mut impl Rng, shape: Tiny, name: &str) -> Instance {
    let k = rng.random_range(1..=shape.operators);
    let jobs = (0..rng.random_range(1..=shape.jobs))
        .map(|_| {
            (0..rng.random_range(1..=shape.tasks_per_job))
                .map(|_| RawTask {
                    operator: rng.random_range(0..k),
                    duration: rng.random_range(1..=shape.max_duration),
                })
                .collect()
        })
        .collect();
    let maxw = (0..rng.random_range(0..=shape.constraints))
        .map(|_| {
            let lo = rng.random_range(0..shape.span - 1);
            let hi = rng.random_range(lo + 1..=shape.span.min(lo + 6));
            let delta = rng.random_range(0..=hi - lo);
            MaxWConstraint::new(rng.random_range(0..k), delta, lo, hi)
        })
        .collect();
    validate_instance(RawInstance {
        name: name.to_string(),
        jobs,
        num_operators: k,
        maxw,
    })
    .expect("tiny instance is valid")
}

/// Horn's condition by enumerating every interval `[a, b)` in `[0, horizon]`.
/// Items are `(release, deadline, duration)`.
pub fn naive_horn(items: &[(i64, i64, i64)]) -> bool {
    if items.iter().any(|&(r, d, p)| p > 0 && d - r < p) {
        return false;
    }
    let horizon = items.iter().map(|&(_, d, _)| d).max().unwrap_or(0);
    for a in 0..=horizon {
        for b in a + 1..=horizon {
            let demand: i64 = items
                .iter()
                .filter(|&&(r, d, _)| r >= a && d <= b)
                .map(|&(_, _, p)| p)
                .sum();
            if demand > b - a {
                return false;
            }
        }
    }
    true
}

/// Full assignment of the window model, indexed like the solver's vectors.
#[derive(Clone, Debug)]
pub struct Assignment {
    pub starts: Vec<i64>,
    pub ends: Vec<i64>,
    pub rests: Vec<i64>,
    pub cmax: i64,
}

/// Direct check of every model constraint for the constraints in `active`.
pub fn satisfies(instance: &Instance, plan: &SubintervalPlan, active: &[usize], a: &Assignment) -> bool {
    let tasks = instance.tasks();
    for job in 0..instance.num_jobs() {
        let range = instance.job_range(job);
        if a.starts[range.start] != 0 || a.ends[range.end - 1] > a.cmax {
            return false;
        }
        for i in range.clone() {
            if a.ends[i] < a.starts[i] + tasks[i].duration {
                return false;
            }
            if i + 1 < range.end && a.starts[i + 1] < a.ends[i] {
                return false;
            }
        }
    }
    let subs = plan.subintervals();
    for (q, sub) in subs.iter().enumerate() {
        if a.rests[q] < 0 || a.rests[q] > sub.rest_ub {
            return false;
        }
    }
    for &c in active {
        let con = instance.maxw()[c];
        let required = (con.hi - con.lo - con.delta).max(0);
        if required == 0 {
            continue;
        }
        let got: i64 = subs
            .iter()
            .enumerate()
            .filter(|(_, q)| q.operator == con.operator && con.lo <= q.lo && q.hi <= con.hi)
            .map(|(q, _)| a.rests[q])
            .sum();
        if got < required {
            return false;
        }
    }
    (0..instance.num_operators).all(|k| {
        let mut items = instance
            .operator_tasks(k)
            .iter()
            .map(|&i| (a.starts[i], a.ends[i], tasks[i].duration))
            .collect::<Vec<_>>();
        items.extend(plan.operator_subintervals(k).iter().map(|&q| (subs[q].lo, subs[q].hi, a.rests[q])));
        naive_horn(&items)
    })
}

/// Minimum makespan by breadth-first search over shifts with no pruning
/// beyond removing duplicate states. `None` if no schedule ends by `cap`.
pub fn bfs_optimum(instance: &Instance, cap: usize) -> Option<usize> {
    let tasks = instance.tasks();
    let n = tasks.len();
    let pred = (0..n)
        .map(|i| (tasks[i].pos > 0).then(|| i - 1))
        .collect::<Vec<_>>();
    let cons = instance.maxw();
    let start = (tasks.iter().map(|t| t.duration as u8).collect::<Vec<_>>(), vec![0u8; cons.len()]);
    let mut layer: HashSet<(Vec<u8>, Vec<u8>)> = HashSet::from([start]);
    for t in 0..=cap {
        if layer.iter().any(|(rem, _)| rem.iter().all(|&r| r == 0)) {
            return Some(t);
        }
        if t == cap {
            break;
        }
        let mut next = HashSet::new();
        for (rem, used) in &layer {
            let ready = (0..n)
                .filter(|&i| rem[i] > 0 && pred[i].is_none_or(|p| rem[p] == 0))
                .collect::<Vec<_>>();
            // one choice per operator: idle or a ready task of that operator
            let mut choices: Vec<Vec<Option<usize>>> = vec![vec![]];
            for k in 0..instance.num_operators {
                let open = cons
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| c.operator == k && c.lo as usize <= t && t < c.hi as usize)
                    .map(|(c, _)| c)
                    .collect::<Vec<_>>();
                let can_work = open.iter().all(|&c| (used[c] as i64) < cons[c].delta);
                let mut options = vec![None];
                if can_work {
                    options.extend(ready.iter().filter(|&&i| tasks[i].operator == k).map(|&i| Some(i)));
                }
                choices = choices
                    .into_iter()
                    .flat_map(|c| {
                        options.iter().map(move |o| {
                            let mut c = c.clone();
                            c.push(*o);
                            c
                        })
                    })
                    .collect();
            }
            for choice in choices {
                let mut rem = rem.clone();
                let mut used = used.clone();
                for (k, pick) in choice.iter().enumerate() {
                    if let Some(i) = *pick {
                        rem[i] -= 1;
                        for (c, con) in cons.iter().enumerate() {
                            if con.operator == k && con.lo as usize <= t && t < con.hi as usize {
                                used[c] += 1;
                            }
                        }
                    }
                }
                for (c, con) in cons.iter().enumerate() {
                    if con.hi as usize <= t + 1 {
                        used[c] = 0;
                    }
                }
                next.insert((rem, used));
            }
        }
        layer = next;
    }
    None
}
