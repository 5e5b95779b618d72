//! Problem data: jobs, tasks, operators and MaxW constraints.
//!
//! Time is counted in shifts and every window is half-open: `[lo, hi)` covers
//! shifts `lo, lo + 1, ..., hi - 1`. A MaxW constraint `(delta, [lo, hi))`
//! requires at least `(hi - lo) - delta` rest shifts inside its window. The
//! [`SubintervalPlan`] splits the windows of each operator at every constraint
//! boundary so that rest can be expressed as one variable-length task per
//! piece.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::{parse_token, ShiftTime};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid JSON instance: {0}")]
    Json(#[from] serde_json::Error),
    #[error("job {job} has no tasks")]
    EmptyJob { job: usize },
    #[error("task ({job},{pos}) uses operator {operator} but only {num_operators} operators exist")]
    OperatorOutOfRange {
        job: usize,
        pos: usize,
        operator: usize,
        num_operators: usize,
    },
    #[error("task ({job},{pos}) has non-positive duration")]
    NonPositiveDuration { job: usize, pos: usize },
    #[error("MaxW constraint {index} refers to operator {operator} but only {num_operators} operators exist")]
    ConstraintOperator {
        index: usize,
        operator: usize,
        num_operators: usize,
    },
    #[error("MaxW constraint {index} has an empty or negative window")]
    EmptyWindow { index: usize },
    #[error("MaxW constraint {index} has a negative delta")]
    NegativeDelta { index: usize },
}

/// Identifies task `pos` of job `job`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TaskId {
    pub job: usize,
    pub pos: usize,
}

impl TaskId {
    pub fn new(job: usize, pos: usize) -> Self {
        TaskId { job, pos }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Task<T> {
    pub job: usize,
    pub pos: usize,
    pub operator: usize,
    pub duration: T,
}

impl<T> Task<T> {
    pub fn id(&self) -> TaskId {
        TaskId::new(self.job, self.pos)
    }
}

/// At most `delta` worked shifts for `operator` inside `[lo, hi)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MaxWConstraint<T> {
    pub operator: usize,
    pub delta: T,
    pub lo: T,
    pub hi: T,
}

impl<T: ShiftTime> MaxWConstraint<T> {
    pub fn new(operator: usize, delta: T, lo: T, hi: T) -> Self {
        MaxWConstraint {
            operator,
            delta,
            lo,
            hi,
        }
    }

    pub fn len(&self) -> T {
        self.hi - self.lo
    }

    /// A constraint is vacuous when its budget is at least its window length.
    pub fn is_vacuous(&self) -> bool {
        self.delta >= self.len()
    }

    pub fn contains(&self, lo: T, hi: T) -> bool {
        self.lo <= lo && hi <= self.hi
    }

    pub fn overlaps(&self, other: &Self) -> bool {
        self.operator == other.operator && self.lo < other.hi && other.lo < self.hi
    }
}

/// Minimum number of rest shifts a constraint imposes in its window.
pub fn required_rest<T: ShiftTime>(c: &MaxWConstraint<T>) -> T {
    (c.len() - c.delta).max(T::zero())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawTask<T> {
    pub operator: usize,
    pub duration: T,
}

/// Unvalidated instance as read from disk; also the JSON schema.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawInstance<T> {
    #[serde(default)]
    pub name: String,
    pub jobs: Vec<Vec<RawTask<T>>>,
    pub num_operators: usize,
    #[serde(default)]
    pub maxw: Vec<MaxWConstraint<T>>,
}

impl<T: ShiftTime> RawInstance<T> {
    /// Parses the plain-text format: a job-shop body followed by an optional
    /// `MAXW <count>` section. Blank lines and lines starting with `#` are
    /// skipped.
    pub fn parse_text(name: &str, text: &str) -> Result<Self, ModelError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let err = |line: usize, msg: &str| ModelError::Parse {
            line,
            msg: msg.to_string(),
        };

        let (ln, header) = lines.next().ok_or_else(|| err(1, "empty file"))?;
        let head = header.split_whitespace().collect::<Vec<_>>();
        if head.len() != 2 {
            return Err(err(ln, "expected `<num_jobs> <num_operators>`"));
        }
        let num_jobs: usize = head[0].parse().map_err(|_| err(ln, "bad job count"))?;
        let num_operators: usize = head[1]
            .parse()
            .map_err(|_| err(ln, "bad operator count"))?;

        let mut jobs = Vec::with_capacity(num_jobs);
        for j in 0..num_jobs {
            let (ln, line) = lines
                .next()
                .ok_or_else(|| err(ln, &format!("missing line for job {j}")))?;
            let toks = line.split_whitespace().collect::<Vec<_>>();
            if toks.len() % 2 != 0 {
                return Err(err(ln, "job line must hold `<operator> <duration>` pairs"));
            }
            let mut tasks = Vec::with_capacity(toks.len() / 2);
            for pair in toks.chunks(2) {
                let operator: usize = pair[0].parse().map_err(|_| err(ln, "bad operator"))?;
                let duration = parse_token(pair[1]).ok_or_else(|| err(ln, "bad duration"))?;
                tasks.push(RawTask { operator, duration });
            }
            jobs.push(tasks);
        }

        let mut maxw = Vec::new();
        if let Some((ln, line)) = lines.next() {
            let toks = line.split_whitespace().collect::<Vec<_>>();
            if toks.len() != 2 || toks[0] != "MAXW" {
                return Err(err(ln, "expected `MAXW <count>`"));
            }
            let count: usize = toks[1].parse().map_err(|_| err(ln, "bad MAXW count"))?;
            for c in 0..count {
                let (ln, line) = lines
                    .next()
                    .ok_or_else(|| err(ln, &format!("missing MaxW constraint {c}")))?;
                let toks = line.split_whitespace().collect::<Vec<_>>();
                if toks.len() != 4 {
                    return Err(err(ln, "expected `<operator> <delta> <lo> <hi>`"));
                }
                let operator: usize = toks[0].parse().map_err(|_| err(ln, "bad operator"))?;
                let nums = toks[1..]
                    .iter()
                    .map(|t| parse_token::<T>(t).ok_or_else(|| err(ln, "bad integer")))
                    .collect::<Result<Vec<_>, _>>()?;
                maxw.push(MaxWConstraint::new(operator, nums[0], nums[1], nums[2]));
            }
        }
        if let Some((ln, _)) = lines.next() {
            return Err(err(ln, "trailing content"));
        }

        Ok(RawInstance {
            name: name.to_string(),
            jobs,
            num_operators,
            maxw,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{} {}", self.jobs.len(), self.num_operators).unwrap();
        for job in &self.jobs {
            let line = job
                .iter()
                .map(|t| format!("{} {}", t.operator, t.duration))
                .collect::<Vec<_>>()
                .join(" ");
            writeln!(out, "{line}").unwrap();
        }
        writeln!(out, "MAXW {}", self.maxw.len()).unwrap();
        for c in &self.maxw {
            writeln!(out, "{} {} {} {}", c.operator, c.delta, c.lo, c.hi).unwrap();
        }
        out
    }
}

impl<T: ShiftTime + Serialize> RawInstance<T> {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }
}

impl<T: ShiftTime + for<'de> Deserialize<'de>> RawInstance<T> {
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        Ok(serde_json::from_str(text)?)
    }
}

/// A validated instance. Tasks are stored job-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance<T> {
    pub name: String,
    pub num_operators: usize,
    tasks: Vec<Task<T>>,
    job_starts: Vec<usize>,
    by_operator: Vec<Vec<usize>>,
    maxw: Vec<MaxWConstraint<T>>,
    vacuous: Vec<bool>,
}

/// Checks every structural invariant of `raw`.
pub fn validate_instance<T: ShiftTime>(raw: RawInstance<T>) -> Result<Instance<T>, ModelError> {
    let k = raw.num_operators;
    let mut tasks = Vec::new();
    let mut job_starts = vec![0];
    let mut by_operator = vec![Vec::new(); k];
    for (job, raw_tasks) in raw.jobs.iter().enumerate() {
        if raw_tasks.is_empty() {
            return Err(ModelError::EmptyJob { job });
        }
        for (pos, t) in raw_tasks.iter().enumerate() {
            if t.operator >= k {
                return Err(ModelError::OperatorOutOfRange {
                    job,
                    pos,
                    operator: t.operator,
                    num_operators: k,
                });
            }
            if t.duration < T::one() {
                return Err(ModelError::NonPositiveDuration { job, pos });
            }
            by_operator[t.operator].push(tasks.len());
            tasks.push(Task {
                job,
                pos,
                operator: t.operator,
                duration: t.duration,
            });
        }
        job_starts.push(tasks.len());
    }
    for (index, c) in raw.maxw.iter().enumerate() {
        if c.operator >= k {
            return Err(ModelError::ConstraintOperator {
                index,
                operator: c.operator,
                num_operators: k,
            });
        }
        if c.lo < T::zero() || c.lo >= c.hi {
            return Err(ModelError::EmptyWindow { index });
        }
        if c.delta < T::zero() {
            return Err(ModelError::NegativeDelta { index });
        }
    }
    let vacuous = raw.maxw.iter().map(|c| c.is_vacuous()).collect();
    Ok(Instance {
        name: raw.name,
        num_operators: k,
        tasks,
        job_starts,
        by_operator,
        maxw: raw.maxw,
        vacuous,
    })
}

impl<T: ShiftTime> Instance<T> {
    pub fn num_jobs(&self) -> usize {
        self.job_starts.len() - 1
    }

    pub fn num_tasks(&self) -> usize {
        self.tasks.len()
    }

    /// All tasks, job-major. The position in this slice is the task's global index.
    pub fn tasks(&self) -> &[Task<T>] {
        &self.tasks
    }

    pub fn job(&self, job: usize) -> &[Task<T>] {
        &self.tasks[self.job_starts[job]..self.job_starts[job + 1]]
    }

    /// Global index range of a job's tasks.
    pub fn job_range(&self, job: usize) -> std::ops::Range<usize> {
        self.job_starts[job]..self.job_starts[job + 1]
    }

    pub fn task_index(&self, id: TaskId) -> Option<usize> {
        let range = self.job_range_checked(id.job)?;
        (id.pos < range.len()).then(|| range.start + id.pos)
    }

    fn job_range_checked(&self, job: usize) -> Option<std::ops::Range<usize>> {
        (job < self.num_jobs()).then(|| self.job_range(job))
    }

    /// Global indices of the tasks processed by `operator`.
    pub fn operator_tasks(&self, operator: usize) -> &[usize] {
        &self.by_operator[operator]
    }

    pub fn maxw(&self) -> &[MaxWConstraint<T>] {
        &self.maxw
    }

    pub fn is_vacuous(&self, c: usize) -> bool {
        self.vacuous[c]
    }

    /// Indices of constraints that actually restrict the schedule.
    pub fn binding_constraints(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.maxw.len()).filter(|&c| !self.vacuous[c])
    }

    pub fn total_work(&self) -> T {
        self.tasks.iter().map(|t| t.duration).sum()
    }

    /// The same jobs without any MaxW constraint.
    pub fn without_maxw(&self) -> Self {
        Instance {
            maxw: Vec::new(),
            vacuous: Vec::new(),
            ..self.clone()
        }
    }

    /// The same jobs with a replaced constraint list.
    pub fn with_maxw(&self, maxw: Vec<MaxWConstraint<T>>) -> Result<Self, ModelError> {
        let mut raw = self.to_raw();
        raw.maxw = maxw;
        validate_instance(raw)
    }

    pub fn to_raw(&self) -> RawInstance<T> {
        RawInstance {
            name: self.name.clone(),
            jobs: (0..self.num_jobs())
                .map(|j| {
                    self.job(j)
                        .iter()
                        .map(|t| RawTask {
                            operator: t.operator,
                            duration: t.duration,
                        })
                        .collect()
                })
                .collect(),
            num_operators: self.num_operators,
            maxw: self.maxw.clone(),
        }
    }
}

/// A piece `[lo, hi)` of an operator's constrained horizon with a rest task.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subinterval<T> {
    pub operator: usize,
    pub lo: T,
    pub hi: T,
    /// Upper bound on rest shifts placed inside this piece.
    pub rest_ub: T,
}

impl<T: ShiftTime> Subinterval<T> {
    pub fn len(&self) -> T {
        self.hi - self.lo
    }
}

/// Cuts the union of the constraint windows at every window boundary.
///
/// All constraints must belong to one operator. Gaps between windows get no
/// subinterval.
pub fn partition_subintervals<T: ShiftTime>(constraints: &[MaxWConstraint<T>]) -> Vec<Subinterval<T>> {
    let Some(first) = constraints.first() else {
        return Vec::new();
    };
    debug_assert!(constraints.iter().all(|c| c.operator == first.operator));
    let mut cuts = constraints
        .iter()
        .flat_map(|c| [c.lo, c.hi])
        .collect::<Vec<_>>();
    cuts.sort_unstable();
    cuts.dedup();
    cuts.windows(2)
        .filter(|w| constraints.iter().any(|c| c.contains(w[0], w[1])))
        .map(|w| {
            let mut q = Subinterval {
                operator: first.operator,
                lo: w[0],
                hi: w[1],
                rest_ub: T::zero(),
            };
            q.rest_ub = rest_upper_bound(&q, constraints);
            q
        })
        .collect()
}

/// `min(|q|, max required rest over constraints containing q)`; zero when no
/// constraint contains `q`.
pub fn rest_upper_bound<T: ShiftTime>(q: &Subinterval<T>, constraints: &[MaxWConstraint<T>]) -> T {
    constraints
        .iter()
        .filter(|c| c.operator == q.operator && c.contains(q.lo, q.hi))
        .map(required_rest)
        .max()
        .unwrap_or_else(T::zero)
        .min(q.len())
}

/// Subintervals of one active constraint and the rest it demands.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cover<T> {
    pub constraint: usize,
    pub required: T,
    pub subintervals: Vec<usize>,
}

/// Subintervals for every operator, built from a set of active constraints.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubintervalPlan<T> {
    subintervals: Vec<Subinterval<T>>,
    by_operator: Vec<Vec<usize>>,
    covers: Vec<Cover<T>>,
}

impl<T: ShiftTime> SubintervalPlan<T> {
    /// Builds the plan for the constraints listed in `active`. Vacuous
    /// constraints are skipped.
    pub fn build(instance: &Instance<T>, active: &[usize]) -> Self {
        let mut active = active
            .iter()
            .copied()
            .filter(|&c| !instance.is_vacuous(c))
            .collect::<Vec<_>>();
        active.sort_unstable();
        active.dedup();

        let mut subintervals = Vec::new();
        let mut by_operator = vec![Vec::new(); instance.num_operators];
        let mut covers = Vec::new();
        for (k, slots) in by_operator.iter_mut().enumerate() {
            let mine = active
                .iter()
                .copied()
                .filter(|&c| instance.maxw()[c].operator == k)
                .collect::<Vec<_>>();
            let cons = mine.iter().map(|&c| instance.maxw()[c]).collect::<Vec<_>>();
            let base = subintervals.len();
            let parts = partition_subintervals(&cons);
            for (c_idx, c) in mine.iter().zip(&cons) {
                covers.push(Cover {
                    constraint: *c_idx,
                    required: required_rest(c),
                    subintervals: parts
                        .iter()
                        .enumerate()
                        .filter(|(_, q)| c.contains(q.lo, q.hi))
                        .map(|(i, _)| base + i)
                        .collect(),
                });
            }
            slots.extend(base..base + parts.len());
            subintervals.extend(parts);
        }
        covers.sort_by_key(|c| c.constraint);
        SubintervalPlan {
            subintervals,
            by_operator,
            covers,
        }
    }

    pub fn subintervals(&self) -> &[Subinterval<T>] {
        &self.subintervals
    }

    pub fn operator_subintervals(&self, operator: usize) -> &[usize] {
        &self.by_operator[operator]
    }

    pub fn covers(&self) -> &[Cover<T>] {
        &self.covers
    }

    /// Last shift (exclusive) touched by any subinterval.
    pub fn horizon(&self) -> T {
        self.subintervals
            .iter()
            .map(|q| q.hi)
            .max()
            .unwrap_or_else(T::zero)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(delta: i64, lo: i64, hi: i64) -> MaxWConstraint<i64> {
        MaxWConstraint::new(0, delta, lo, hi)
    }

    fn bounds(qs: &[Subinterval<i64>]) -> Vec<(i64, i64)> {
        qs.iter().map(|q| (q.lo, q.hi)).collect()
    }

    #[test]
    fn minimal_instance_is_valid() {
        let raw = RawInstance::<i64>::parse_text("tiny", "1 1\n0 3\n").unwrap();
        let inst = validate_instance(raw).unwrap();
        assert_eq!(inst.num_jobs(), 1);
        assert_eq!(inst.tasks()[0].duration, 3);
        assert!(inst.maxw().is_empty());
    }

    #[test]
    fn vacuous_constraints_are_kept_and_flagged() {
        let raw = RawInstance::<i64>::parse_text("v", "1 1\n0 3\nMAXW 2\n0 5 0 6\n0 7 0 6\n").unwrap();
        let inst = validate_instance(raw).unwrap();
        assert_eq!(inst.maxw().len(), 2);
        assert!(!inst.is_vacuous(0));
        assert_eq!(required_rest(&inst.maxw()[0]), 1);
        assert!(inst.is_vacuous(1));
        assert_eq!(inst.binding_constraints().collect::<Vec<_>>(), vec![0]);
    }

    #[test]
    fn validation_errors() {
        let parse = |s: &str| validate_instance(RawInstance::<i64>::parse_text("e", s).unwrap());
        assert!(matches!(parse("1 1\n2 3\n"), Err(ModelError::OperatorOutOfRange { .. })));
        assert!(matches!(parse("1 1\n0 0\n"), Err(ModelError::NonPositiveDuration { .. })));
        assert!(matches!(
            RawInstance::<i64>::parse_text("e", "2 1\n0 1\n\n"),
            Err(ModelError::Parse { .. })
        ));
        assert!(matches!(
            parse("1 1\n0 1\nMAXW 1\n0 1 4 4\n"),
            Err(ModelError::EmptyWindow { .. })
        ));
        assert!(matches!(
            parse("1 1\n0 1\nMAXW 1\n0 -1 0 4\n"),
            Err(ModelError::NegativeDelta { .. })
        ));
        assert!(matches!(
            parse("1 1\n0 1\nMAXW 1\n3 1 0 4\n"),
            Err(ModelError::ConstraintOperator { .. })
        ));
        let empty = RawInstance::<i64> {
            name: "e".into(),
            jobs: vec![vec![]],
            num_operators: 1,
            maxw: vec![],
        };
        assert!(matches!(validate_instance(empty), Err(ModelError::EmptyJob { job: 0 })));
    }

    #[test]
    fn parse_errors() {
        assert!(RawInstance::<i64>::parse_text("x", "").is_err());
        assert!(RawInstance::<i64>::parse_text("x", "1 1\n0\n").is_err());
        assert!(RawInstance::<i64>::parse_text("x", "1 1\n0 1\nMAXW 2\n0 1 0 3\n").is_err());
        assert!(RawInstance::<i64>::parse_text("x", "1 1\n0 1\nFOO 1\n").is_err());
        assert!(RawInstance::<i64>::parse_text("x", "1 1\n0 1\nMAXW 0\n7\n").is_err());
    }

    #[test]
    fn text_format_is_exact() {
        let text = "2 2\n0 3 1 2\n1 4\nMAXW 1\n1 2 0 5\n";
        let raw = RawInstance::<i64>::parse_text("t", text).unwrap();
        assert_eq!(raw.to_text(), text);
        let json = raw.to_json();
        assert_eq!(RawInstance::<i64>::from_json(&json).unwrap(), raw);
    }

    #[test]
    fn json_mirror_defaults() {
        let raw = RawInstance::<i64>::from_json(
            r#"{"jobs": [[{"operator": 0, "duration": 2}]], "num_operators": 1}"#,
        )
        .unwrap();
        assert!(raw.maxw.is_empty());
        assert!(validate_instance(raw).is_ok());
    }

    #[test]
    fn figure_one_partition() {
        let cons = [c(5, 0, 6), c(2, 4, 9)];
        let qs = partition_subintervals(&cons);
        assert_eq!(bounds(&qs), vec![(0, 4), (4, 6), (6, 9)]);
        assert_eq!(qs.iter().map(|q| q.rest_ub).collect::<Vec<_>>(), vec![1, 2, 3]);
        assert_eq!(required_rest(&cons[0]), 1);
        assert_eq!(required_rest(&cons[1]), 3);
    }

    #[test]
    fn partition_skips_gaps() {
        assert!(partition_subintervals::<i64>(&[]).is_empty());
        let qs = partition_subintervals(&[c(1, 0, 3), c(1, 5, 8)]);
        assert_eq!(bounds(&qs), vec![(0, 3), (5, 8)]);
    }

    #[test]
    fn required_rest_clamps() {
        assert_eq!(required_rest(&c(3, 0, 3)), 0);
        assert_eq!(required_rest(&c(9, 0, 3)), 0);
    }

    #[test]
    fn rest_upper_bound_outside_windows_is_zero() {
        let q = Subinterval {
            operator: 0,
            lo: 10,
            hi: 12,
            rest_ub: 0,
        };
        assert_eq!(rest_upper_bound(&q, &[c(1, 0, 3)]), 0);
    }

    #[test]
    fn plan_covers_tile_windows() {
        let raw = RawInstance::<i64>::parse_text(
            "p",
            "1 2\n0 3 1 2\nMAXW 4\n0 5 0 6\n0 2 4 9\n1 1 2 4\n1 9 0 3\n",
        )
        .unwrap();
        let inst = validate_instance(raw).unwrap();
        let plan = SubintervalPlan::build(&inst, &[0, 1, 2, 3]);
        assert_eq!(plan.subintervals().len(), 4);
        assert_eq!(plan.operator_subintervals(0), &[0, 1, 2]);
        assert_eq!(plan.operator_subintervals(1), &[3]);
        // the vacuous constraint 3 is not part of the plan
        assert_eq!(plan.covers().len(), 3);
        assert_eq!(plan.covers()[0].subintervals, vec![0, 1]);
        assert_eq!(plan.covers()[1].subintervals, vec![1, 2]);
        assert_eq!(plan.covers()[2].subintervals, vec![3]);
        assert_eq!(plan.horizon(), 9);
    }

    #[test]
    fn generic_over_i32() {
        let raw = RawInstance::<i32>::parse_text("s", "1 1\n0 2\nMAXW 1\n0 2 4 9\n").unwrap();
        let inst = validate_instance(raw).unwrap();
        assert_eq!(required_rest(&inst.maxw()[0]), 3i32);
    }
}
