//! Integer time scalar used throughout the solver.
//!
//! Every duration, window bound and workload budget is a count of shifts. The
//! solver is written against [`ShiftTime`] so that instances can be held in
//! `i32` when memory matters or `i64` (the default) otherwise.

use std::fmt::{Debug, Display};
use std::hash::Hash;
use std::iter::Sum;

use num_traits::{PrimInt, Signed};

/// Signed primitive integer usable as a shift count.
pub trait ShiftTime:
    PrimInt + Signed + Hash + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Converts a non-negative shift count into an array index.
    ///
    /// Panics on negative values, which never occur for validated data.
    #[inline]
    fn idx(self) -> usize {
        self.to_usize().expect("negative shift used as index")
    }

    /// Converts an index or count into the time type.
    #[inline]
    fn of(n: usize) -> Self {
        Self::from(n).expect("shift count overflows time type")
    }
}

impl<T> ShiftTime for T where
    T: PrimInt + Signed + Hash + Debug + Display + Default + Sum + Send + Sync + 'static
{
}

/// Parses a base-10 integer token.
pub(crate) fn parse_token<T: ShiftTime>(tok: &str) -> Option<T> {
    T::from_str_radix(tok, 10).ok()
}
