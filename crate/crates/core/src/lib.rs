//! Preemptive job-shop scheduling under maximum-workload (MaxW) constraints.
//!
//! Tasks are placed on unary operators in whole shifts and may be interrupted
//! and resumed freely. A MaxW constraint `(delta, [lo, hi))` caps the number
//! of shifts an operator works inside a window. The solver never decomposes
//! tasks into unit pieces: each task gets a window `[s, e)`, MaxW windows are
//! cut into subintervals carrying variable-length rest tasks, and a
//! preemptive no-overlap constraint keeps every operator feasible. Explicit
//! shift schedules are rebuilt afterwards with earliest-deadline-first
//! (Jackson preemptive schedule).
//!
//! Modules:
//! - [`model`]: instances, file formats, subinterval partitioning
//! - [`jps`]: interval feasibility test and EDF schedule construction
//! - [`propagation`]: bound propagation with a trail
//! - [`solver`]: branch and bound on the window model
//! - [`lazy`]: iterative activation of MaxW constraints
//! - [`checker`]: schedule validation and a brute-force oracle
//! - [`gen`]: random instance generation
//!
//! All algorithms are generic over [`ShiftTime`]; the aliases below fix the
//! time type to `i64`.

pub mod checker;
pub mod gen;
pub mod jps;
pub mod lazy;
pub mod model;
pub mod num;
pub mod propagation;
pub mod solver;

pub use num::ShiftTime;

/// Default shift type.
pub type Shift = i64;

pub type Instance = model::Instance<Shift>;
pub type RawInstance = model::RawInstance<Shift>;
pub type Task = model::Task<Shift>;
pub type MaxWConstraint = model::MaxWConstraint<Shift>;
pub type Subinterval = model::Subinterval<Shift>;
pub type SubintervalPlan = model::SubintervalPlan<Shift>;
pub type WindowedTask = jps::WindowedTask<Shift>;
pub type VarBounds = propagation::VarBounds<Shift>;
pub type SearchState = propagation::SearchState<Shift>;
pub type WindowSolution = solver::WindowSolution<Shift>;
pub type SolveOutcome = solver::SolveOutcome<Shift>;
pub type LazyResult = lazy::LazyResult<Shift>;

/// `i32` variants for callers that want compact instances.
pub type Instance32 = model::Instance<i32>;
pub type WindowSolution32 = solver::WindowSolution<i32>;
pub type SolveOutcome32 = solver::SolveOutcome<i32>;
