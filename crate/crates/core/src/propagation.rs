//! Bound propagation over the window model.
//!
//! Variables are integer intervals: a start and an end per task, a rest
//! duration per subinterval and the makespan. Every bound change is recorded
//! on a trail so the search can restore a previous level in O(changes).
//!
//! Propagators:
//! - chain: `e >= s + P`, `s[j+1] >= e[j]`, `s[0] = 0`, `e[last] <= cmax`
//! - maxw: the rest inside each active window covers its required rest
//! - overload: interval energy test per operator using the smallest rest
//!   durations
//! - filter: energy-based tightening of task ends/starts and rest durations,
//!   counting the required rest of the covers inside each interval
//!
//! Only intervals `[a, b)` whose tasks are *necessarily* inside are used for
//! inference, and rest counts only what every solution must place there, so
//! no propagator ever removes a value that belongs to a solution.

use log::{log_enabled, trace, Level};

use crate::jps::{horn_by, Horn};

use crate::model::{Instance, SubintervalPlan};
use crate::num::ShiftTime;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct VarBounds<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: ShiftTime> VarBounds<T> {
    pub fn new(lo: T, hi: T) -> Self {
        VarBounds { lo, hi }
    }

    pub fn is_fixed(&self) -> bool {
        self.lo == self.hi
    }

    pub fn size(&self) -> T {
        self.hi - self.lo + T::one()
    }

    pub fn contains(&self, v: T) -> bool {
        self.lo <= v && v <= self.hi
    }
}

pub type VarId = usize;

/// Propagation failure. `witness` is the overloaded interval when the
/// energy test fired.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Conflict<T> {
    pub propagator: &'static str,
    pub var: Option<VarId>,
    pub witness: Option<(T, T)>,
}

pub type PropResult<T> = Result<bool, Conflict<T>>;

/// Variable domains plus the trail used for backtracking.
#[derive(Clone, Debug)]
pub struct SearchState<T> {
    bounds: Vec<VarBounds<T>>,
    trail: Vec<(VarId, VarBounds<T>)>,
    levels: Vec<usize>,
    num_tasks: usize,
    num_rests: usize,
    tag: &'static str,
}

impl<T: ShiftTime> SearchState<T> {
    /// Initial domains: `s in [0, UB - P]`, `e in [P, UB]`, `d in [0, rest_ub]`
    /// and `cmax in [0, UB]`.
    pub fn new(instance: &Instance<T>, plan: &SubintervalPlan<T>, ub: T) -> Self {
        let tasks = instance.tasks();
        let starts = tasks
            .iter()
            .map(|t| VarBounds::new(T::zero(), ub - t.duration))
            .collect::<Vec<_>>();
        let ends = tasks
            .iter()
            .map(|t| VarBounds::new(t.duration, ub))
            .collect::<Vec<_>>();
        let rests = plan
            .subintervals()
            .iter()
            .map(|q| VarBounds::new(T::zero(), q.rest_ub))
            .collect::<Vec<_>>();
        Self::from_bounds(&starts, &ends, &rests, VarBounds::new(T::zero(), ub))
    }

    /// Builds a state from explicit domains; `starts` and `ends` are indexed
    /// by global task index and `rests` by plan subinterval.
    pub fn from_bounds(
        starts: &[VarBounds<T>],
        ends: &[VarBounds<T>],
        rests: &[VarBounds<T>],
        cmax: VarBounds<T>,
    ) -> Self {
        assert_eq!(starts.len(), ends.len());
        let mut bounds = Vec::with_capacity(2 * starts.len() + rests.len() + 1);
        for (s, e) in starts.iter().zip(ends) {
            bounds.push(*s);
            bounds.push(*e);
        }
        bounds.extend_from_slice(rests);
        bounds.push(cmax);
        SearchState {
            bounds,
            trail: Vec::new(),
            levels: Vec::new(),
            num_tasks: starts.len(),
            num_rests: rests.len(),
            tag: "init",
        }
    }

    pub fn start(&self, task: usize) -> VarId {
        2 * task
    }

    pub fn end(&self, task: usize) -> VarId {
        2 * task + 1
    }

    pub fn rest(&self, q: usize) -> VarId {
        2 * self.num_tasks + q
    }

    pub fn cmax(&self) -> VarId {
        2 * self.num_tasks + self.num_rests
    }

    pub fn num_tasks(&self) -> usize {
        self.num_tasks
    }

    pub fn num_rests(&self) -> usize {
        self.num_rests
    }

    pub fn num_vars(&self) -> usize {
        self.bounds.len()
    }

    pub fn get(&self, var: VarId) -> VarBounds<T> {
        self.bounds[var]
    }

    pub fn lo(&self, var: VarId) -> T {
        self.bounds[var].lo
    }

    pub fn hi(&self, var: VarId) -> T {
        self.bounds[var].hi
    }

    pub fn all_fixed(&self) -> bool {
        self.bounds.iter().all(VarBounds::is_fixed)
    }

    fn conflict(&self, var: VarId) -> Conflict<T> {
        Conflict {
            propagator: self.tag,
            var: Some(var),
            witness: None,
        }
    }

    fn record(&mut self, var: VarId, new: VarBounds<T>) {
        let old = self.bounds[var];
        if log_enabled!(Level::Trace) {
            trace!("({}, {}, {:?}, {:?})", self.tag, var, (old.lo, old.hi), (new.lo, new.hi));
        }
        self.trail.push((var, old));
        self.bounds[var] = new;
    }

    /// Raises the lower bound; `Ok(true)` when the domain changed.
    pub fn set_lo(&mut self, var: VarId, v: T) -> PropResult<T> {
        let b = self.bounds[var];
        if v <= b.lo {
            return Ok(false);
        }
        if v > b.hi {
            return Err(self.conflict(var));
        }
        self.record(var, VarBounds::new(v, b.hi));
        Ok(true)
    }

    /// Lowers the upper bound; `Ok(true)` when the domain changed.
    pub fn set_hi(&mut self, var: VarId, v: T) -> PropResult<T> {
        let b = self.bounds[var];
        if v >= b.hi {
            return Ok(false);
        }
        if v < b.lo {
            return Err(self.conflict(var));
        }
        self.record(var, VarBounds::new(b.lo, v));
        Ok(true)
    }

    pub fn push_level(&mut self) {
        self.levels.push(self.trail.len());
    }

    /// Undoes every change made since the matching [`push_level`](Self::push_level).
    pub fn pop_level(&mut self) {
        let mark = self.levels.pop().expect("pop_level without push_level");
        while self.trail.len() > mark {
            let (var, old) = self.trail.pop().unwrap();
            self.bounds[var] = old;
        }
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }
}

/// Bound consistency of the job chains and the makespan.
pub fn propagate_chain<T: ShiftTime>(state: &mut SearchState<T>, instance: &Instance<T>) -> PropResult<T> {
    state.tag = "chain";
    let tasks = instance.tasks();
    let cmax = state.cmax();
    let mut changed = false;
    for job in 0..instance.num_jobs() {
        let range = instance.job_range(job);
        changed |= state.set_hi(state.start(range.start), T::zero())?;
        for i in range.clone() {
            let e_lo = state.lo(state.start(i)) + tasks[i].duration;
            changed |= state.set_lo(state.end(i), e_lo)?;
            if i + 1 < range.end {
                changed |= state.set_lo(state.start(i + 1), state.lo(state.end(i)))?;
            }
        }
        let last = range.end - 1;
        changed |= state.set_lo(cmax, state.lo(state.end(last)))?;
        changed |= state.set_hi(state.end(last), state.hi(cmax))?;
        for i in range.clone().rev() {
            let s_hi = state.hi(state.end(i)) - tasks[i].duration;
            changed |= state.set_hi(state.start(i), s_hi)?;
            if i > range.start {
                changed |= state.set_hi(state.end(i - 1), state.hi(state.start(i)))?;
            }
        }
    }
    Ok(changed)
}

/// Rest inside each active window must reach its required amount.
pub fn propagate_maxw<T: ShiftTime>(state: &mut SearchState<T>, plan: &SubintervalPlan<T>) -> PropResult<T> {
    state.tag = "maxw";
    let mut changed = false;
    for cover in plan.covers() {
        let capacity: T = cover.subintervals.iter().map(|&q| state.hi(state.rest(q))).sum();
        if capacity < cover.required {
            return Err(Conflict {
                propagator: "maxw",
                var: None,
                witness: None,
            });
        }
        for &q in &cover.subintervals {
            let var = state.rest(q);
            let need = cover.required - (capacity - state.hi(var));
            changed |= state.set_lo(var, need)?;
        }
    }
    Ok(changed)
}

/// One operator's tasks as `(est, lct, min energy, var of the quantity that
/// may be filtered)`.
#[derive(Clone, Copy)]
struct Item<T> {
    est: T,
    lct: T,
    energy: T,
    kind: ItemKind,
}

#[derive(Clone, Copy)]
enum ItemKind {
    Work(usize),
    Rest(usize),
}

fn operator_items<T: ShiftTime>(
    state: &SearchState<T>,
    instance: &Instance<T>,
    plan: &SubintervalPlan<T>,
    operator: usize,
) -> Vec<Item<T>> {
    let work = instance.operator_tasks(operator).iter().map(|&i| Item {
        est: state.lo(state.start(i)),
        lct: state.hi(state.end(i)),
        energy: instance.tasks()[i].duration,
        kind: ItemKind::Work(i),
    });
    let rest = plan.operator_subintervals(operator).iter().map(|&q| {
        let sub = &plan.subintervals()[q];
        Item {
            est: sub.lo,
            lct: sub.hi,
            energy: state.lo(state.rest(q)),
            kind: ItemKind::Rest(q),
        }
    });
    work.chain(rest).collect()
}

/// Rest subintervals of one operator in time order, with the covers that
/// span contiguous runs of them.
struct RestProfile<T> {
    lo: Vec<T>,
    hi: Vec<T>,
    min: Vec<T>,
    /// `(first, last, required)` in local indices, sorted by `last`.
    covers: Vec<(usize, usize, T)>,
}

impl<T: ShiftTime> RestProfile<T> {
    fn new(state: &SearchState<T>, plan: &SubintervalPlan<T>, operator: usize) -> Self {
        let mine = plan.operator_subintervals(operator);
        let subs = plan.subintervals();
        let base = mine.first().copied().unwrap_or(0);
        let mut covers = plan
            .covers()
            .iter()
            .filter(|c| c.subintervals.first().is_some_and(|&q| subs[q].operator == operator))
            .map(|c| (c.subintervals[0] - base, c.subintervals[c.subintervals.len() - 1] - base, c.required))
            .collect::<Vec<_>>();
        covers.sort_unstable_by_key(|c| c.1);
        RestProfile {
            lo: mine.iter().map(|&q| subs[q].lo).collect(),
            hi: mine.iter().map(|&q| subs[q].hi).collect(),
            min: mine.iter().map(|&q| state.lo(state.rest(q))).collect(),
            covers,
        }
    }

    /// Lower bound on the rest placed inside `[a, b)`: the best combination
    /// of disjoint covers inside the interval, each worth its required rest,
    /// with the remaining subintervals at their minimum.
    fn energy_within(&self, a: T, b: T, dp: &mut Vec<T>) -> T {
        let from = self.lo.partition_point(|&lo| lo < a);
        let to = self.hi.partition_point(|&hi| hi <= b);
        if from >= to {
            return T::zero();
        }
        dp.clear();
        dp.push(T::zero());
        let mut c = self.covers.partition_point(|cv| cv.1 < from);
        for i in from..to {
            let mut best = dp[i - from] + self.min[i];
            while c < self.covers.len() && self.covers[c].1 == i {
                let (first, _, required) = self.covers[c];
                if first >= from {
                    best = best.max(dp[first - from] + required);
                }
                c += 1;
            }
            dp.push(best);
        }
        dp[to - from]
    }
}

/// Minimum energy that must be processed inside `[a, b)` for every
/// candidate pair, work tasks with windows `[s.lo, e.hi)` plus rest.
struct Intervals<T> {
    ests: Vec<T>,
    lcts: Vec<T>,
    /// Row-major over `ests` x `lcts`; only pairs with `a < b` are meaningful.
    energy: Vec<T>,
}

impl<T: ShiftTime> Intervals<T> {
    fn new(items: &[Item<T>], profile: &RestProfile<T>) -> Self {
        let mut ests = items.iter().map(|i| i.est).collect::<Vec<_>>();
        let mut lcts = items.iter().map(|i| i.lct).collect::<Vec<_>>();
        ests.sort_unstable();
        ests.dedup();
        lcts.sort_unstable();
        lcts.dedup();
        let mut energy = vec![T::zero(); ests.len() * lcts.len()];
        let mut dp = Vec::new();
        for (x, &a) in ests.iter().enumerate() {
            for (y, &b) in lcts.iter().enumerate().filter(|(_, &b)| b > a) {
                let work: T = items
                    .iter()
                    .filter(|i| matches!(i.kind, ItemKind::Work(_)) && i.est >= a && i.lct <= b)
                    .map(|i| i.energy)
                    .sum();
                energy[x * lcts.len() + y] = work + profile.energy_within(a, b, &mut dp);
            }
        }
        Intervals { ests, lcts, energy }
    }

    fn pairs(&self) -> impl Iterator<Item = (T, T, T)> + '_ {
        self.ests.iter().enumerate().flat_map(move |(x, &a)| {
            self.lcts
                .iter()
                .enumerate()
                .filter(move |(_, &b)| b > a)
                .map(move |(y, &b)| (a, b, self.energy[x * self.lcts.len() + y]))
        })
    }
}

/// Interval energy test with windows `[s.lo, e.hi)` and minimum rest durations.
pub fn overload_check<T: ShiftTime>(
    state: &SearchState<T>,
    instance: &Instance<T>,
    plan: &SubintervalPlan<T>,
    operator: usize,
) -> Result<(), Conflict<T>> {
    let items = operator_items(state, instance, plan, operator);
    match horn_by(items.iter().map(|i| (i.est, i.lct, i.energy))) {
        Horn::Feasible => Ok(()),
        Horn::Overload { lo, hi, .. } => Err(Conflict {
            propagator: "overload",
            var: None,
            witness: Some((lo, hi)),
        }),
    }
}

/// Energy-based filtering on one operator.
///
/// For each candidate interval `[a, b)` (a task's earliest start, another's
/// latest end) let `E` be the minimum energy that must be processed inside
/// it: work tasks whose windows lie inside plus the best combination of
/// disjoint covers inside, each worth its required rest. `E > b - a` is a
/// conflict. A work task `t` outside the set with `est(t) >= a` and
/// `E + P(t) > b - a` cannot finish inside, so its end is at least
/// `a + E + P(t)`; the mirrored rule caps its start at `b - E - P(t)`. A
/// rest task inside the set keeps at most `b - a - (E - d.lo)` shifts.
pub fn filter_noverlap<T: ShiftTime>(
    state: &mut SearchState<T>,
    instance: &Instance<T>,
    plan: &SubintervalPlan<T>,
    operator: usize,
) -> PropResult<T> {
    state.tag = "filter";
    let items = operator_items(state, instance, plan, operator);
    if items.len() < 2 {
        return Ok(false);
    }
    let profile = RestProfile::new(state, plan, operator);
    let intervals = Intervals::new(&items, &profile);

    let mut changed = false;
    for (a, b, energy) in intervals.pairs() {
        let inside = |i: &Item<T>| i.est >= a && i.lct <= b;
        let room = b - a;
        if energy > room {
            return Err(Conflict {
                propagator: "filter",
                var: None,
                witness: Some((a, b)),
            });
        }
        let minimum: T = items.iter().filter(|i| inside(i)).map(|i| i.energy).sum();
        for item in &items {
            match item.kind {
                ItemKind::Rest(q) if inside(item) => {
                    let cap = room - (minimum - item.energy);
                    changed |= state.set_hi(state.rest(q), cap)?;
                }
                ItemKind::Work(t) if !inside(item) && energy + item.energy > room => {
                    if item.est >= a {
                        changed |= state.set_lo(state.end(t), a + energy + item.energy)?;
                    } else if item.lct <= b {
                        changed |= state.set_hi(state.start(t), b - energy - item.energy)?;
                    }
                }
                _ => {}
            }
        }
    }
    Ok(changed)
}

/// Runs chain, maxw, overload and filter round-robin until no bound moves.
pub fn propagate_all<T: ShiftTime>(
    state: &mut SearchState<T>,
    instance: &Instance<T>,
    plan: &SubintervalPlan<T>,
) -> Result<(), Conflict<T>> {
    loop {
        let mut changed = propagate_chain(state, instance)?;
        changed |= propagate_maxw(state, plan)?;
        for k in 0..instance.num_operators {
            overload_check(state, instance, plan, k)?;
        }
        for k in 0..instance.num_operators {
            changed |= filter_noverlap(state, instance, plan, k)?;
        }
        if !changed {
            return Ok(());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_instance, RawInstance};

    fn inst(text: &str) -> Instance<i64> {
        validate_instance(RawInstance::parse_text("t", text).unwrap()).unwrap()
    }

    fn vb(lo: i64, hi: i64) -> VarBounds<i64> {
        VarBounds::new(lo, hi)
    }

    #[test]
    fn chain_two_tasks() {
        let i = inst("1 2\n0 2 1 3\n");
        let plan = SubintervalPlan::build(&i, &[]);
        let mut st = SearchState::new(&i, &plan, 5);
        assert!(propagate_chain(&mut st, &i).unwrap());
        assert_eq!(st.get(st.start(0)), vb(0, 0));
        assert_eq!(st.get(st.end(0)), vb(2, 2));
        assert_eq!(st.get(st.start(1)), vb(2, 2));
        assert_eq!(st.get(st.end(1)), vb(5, 5));
        assert!(!propagate_chain(&mut st, &i).unwrap());
    }

    #[test]
    fn chain_conflict_and_empty() {
        let i = inst("1 1\n0 3\n");
        let plan = SubintervalPlan::build(&i, &[]);
        let mut st = SearchState::new(&i, &plan, 3);
        st.set_hi(st.cmax(), 2).unwrap();
        assert!(propagate_chain(&mut st, &i).is_err());

        let empty = inst("0 1\n");
        let plan = SubintervalPlan::build(&empty, &[]);
        let mut st = SearchState::new(&empty, &plan, 3);
        assert!(!propagate_chain(&mut st, &empty).unwrap());
    }

    #[test]
    fn overload_uses_minimum_rest() {
        // one work task [0,4) x3 and a rest subinterval [0,2) from (0,[0,2))
        let i = inst("1 1\n0 3\nMAXW 1\n0 0 0 2\n");
        let plan = SubintervalPlan::build(&i, &[0]);
        let mut st = SearchState::from_bounds(&[vb(0, 0)], &[vb(4, 4)], &[vb(0, 2)], vb(0, 4));
        assert!(overload_check(&st, &i, &plan, 0).is_ok());
        st.set_lo(st.rest(0), 2).unwrap();
        let err = overload_check(&st, &i, &plan, 0).unwrap_err();
        assert_eq!(err.witness, Some((0, 4)));
    }

    #[test]
    fn filter_counts_required_rest() {
        let i = inst("1 1\n0 3\nMAXW 1\n0 0 0 2\n");
        let plan = SubintervalPlan::build(&i, &[0]);
        let mut st = SearchState::from_bounds(&[vb(0, 0)], &[vb(4, 4)], &[vb(0, 2)], vb(0, 4));
        // [0,2) holds the 2 required rest shifts, so the work ends by 5 > 4
        assert!(filter_noverlap(&mut st, &i, &plan, 0).is_err());
        let mut wide = SearchState::from_bounds(&[vb(0, 0)], &[vb(5, 5)], &[vb(0, 2)], vb(0, 5));
        assert!(filter_noverlap(&mut wide, &i, &plan, 0).is_ok());
    }

    #[test]
    fn rest_energy_takes_disjoint_covers() {
        // covers [0,3) and [3,6) need 2 each; [0,6) holds 4 rest shifts
        let i = inst("1 1\n0 3\nMAXW 2\n0 1 0 3\n0 1 3 6\n");
        let plan = SubintervalPlan::build(&i, &[0, 1]);
        let st = SearchState::new(&i, &plan, 10);
        let profile = RestProfile::new(&st, &plan, 0);
        let mut dp = Vec::new();
        assert_eq!(profile.energy_within(0, 6, &mut dp), 4);
        assert_eq!(profile.energy_within(0, 5, &mut dp), 2);
        assert_eq!(profile.energy_within(1, 6, &mut dp), 2);
        assert_eq!(profile.energy_within(1, 5, &mut dp), 0);
    }

    #[test]
    fn overload_two_work_tasks() {
        let i = inst("2 1\n0 2\n0 1\n");
        let plan = SubintervalPlan::build(&i, &[]);
        let st = SearchState::from_bounds(&[vb(0, 0), vb(0, 0)], &[vb(2, 2), vb(1, 2)], &[], vb(0, 2));
        assert_eq!(overload_check(&st, &i, &plan, 0).unwrap_err().witness, Some((0, 2)));
    }

    #[test]
    fn filter_pushes_end_past_blocking_task() {
        let i = inst("2 1\n0 4\n0 2\n");
        let plan = SubintervalPlan::build(&i, &[]);
        let mut st = SearchState::from_bounds(&[vb(0, 2), vb(0, 0)], &[vb(4, 6), vb(2, 2)], &[], vb(0, 6));
        assert!(filter_noverlap(&mut st, &i, &plan, 0).unwrap());
        assert_eq!(st.get(st.end(0)), vb(6, 6));
        assert_eq!(st.lo(st.start(0)), 0);
    }

    #[test]
    fn filter_single_task_is_noop() {
        let i = inst("1 1\n0 2\n");
        let plan = SubintervalPlan::build(&i, &[]);
        let mut st = SearchState::new(&i, &plan, 6);
        assert!(!filter_noverlap(&mut st, &i, &plan, 0).unwrap());
    }

    #[test]
    fn maxw_bound_arithmetic() {
        let i = inst("1 1\n0 1\nMAXW 2\n0 5 0 6\n0 2 4 9\n");
        let plan = SubintervalPlan::build(&i, &[0, 1]);
        let mut st = SearchState::new(&i, &plan, 20);
        assert_eq!(
            (0..3).map(|q| st.get(st.rest(q))).collect::<Vec<_>>(),
            vec![vb(0, 1), vb(0, 2), vb(0, 3)]
        );
        // d3 >= 3 - d2.hi = 1 is forced before any decision
        assert!(propagate_maxw(&mut st, &plan).unwrap());
        assert_eq!(st.lo(st.rest(0)), 0);
        assert_eq!(st.lo(st.rest(1)), 0);
        assert_eq!(st.lo(st.rest(2)), 1);
        assert!(!propagate_maxw(&mut st, &plan).unwrap());
        st.set_hi(st.rest(1), 0).unwrap();
        assert!(propagate_maxw(&mut st, &plan).unwrap());
        assert_eq!(st.lo(st.rest(0)), 1);
        assert_eq!(st.lo(st.rest(2)), 3);
    }

    #[test]
    fn maxw_shortfall_and_no_constraints() {
        let i = inst("1 1\n0 1\nMAXW 1\n0 0 0 3\n");
        let plan = SubintervalPlan::build(&i, &[0]);
        let mut st = SearchState::new(&i, &plan, 10);
        st.set_hi(st.rest(0), 2).unwrap();
        assert!(propagate_maxw(&mut st, &plan).is_err());

        let plan = SubintervalPlan::build(&i, &[]);
        let mut st = SearchState::new(&i, &plan, 10);
        assert!(!propagate_maxw(&mut st, &plan).unwrap());
    }

    #[test]
    fn fixpoint_examples() {
        let i = inst("1 1\n0 3\n");
        let plan = SubintervalPlan::build(&i, &[]);
        let mut st = SearchState::from_bounds(&[vb(0, 0)], &[vb(3, 3)], &[], vb(3, 3));
        propagate_all(&mut st, &i, &plan).unwrap();
        assert!(st.trail.is_empty());

        let i = inst("1 1\n0 2 0 3\n");
        let plan = SubintervalPlan::build(&i, &[]);
        let mut st = SearchState::new(&i, &plan, 4);
        assert!(propagate_all(&mut st, &i, &plan).is_err());

        // 9 units of work plus at least 4 rest shifts cannot fit in 9 shifts
        let i = inst("1 1\n0 9\nMAXW 2\n0 5 0 6\n0 2 4 9\n");
        let plan = SubintervalPlan::build(&i, &[0, 1]);
        let mut st = SearchState::new(&i, &plan, 9);
        assert!(propagate_all(&mut st, &i, &plan).is_err());
    }

    #[test]
    fn trail_restores_levels() {
        let i = inst("1 1\n0 2\n");
        let plan = SubintervalPlan::build(&i, &[]);
        let mut st = SearchState::new(&i, &plan, 6);
        let before = st.bounds.clone();
        st.push_level();
        st.set_lo(st.end(0), 5).unwrap();
        st.push_level();
        st.set_hi(st.cmax(), 5).unwrap();
        assert_eq!(st.depth(), 2);
        st.pop_level();
        assert_eq!(st.hi(st.cmax()), 6);
        assert_eq!(st.lo(st.end(0)), 5);
        st.pop_level();
        assert_eq!(st.bounds, before);
    }
}
