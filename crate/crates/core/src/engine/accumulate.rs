//! Combiners for superstep accumulators.
//!
//! Every contribution emitted during the edge phase, and every global
//! contribution emitted during the vertex phase, is folded through an
//! [`Accumulator`]. Implementations must be associative and commutative;
//! the engine is free to regroup them in parallel mode.

use num_complex::Complex64;

pub trait Accumulator: Copy + Send + Sync {
    fn identity() -> Self;
    fn combine(self, other: Self) -> Self;
}

/// Additive combiner.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Sum<T>(pub T);

/// Maximum combiner. NaN is absorbing so a poisoned value is never hidden.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Max(pub f64);

/// Minimum combiner. NaN is absorbing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Min(pub f64);

impl Accumulator for Sum<f64> {
    fn identity() -> Self {
        Sum(0.0)
    }
    fn combine(self, other: Self) -> Self {
        Sum(self.0 + other.0)
    }
}

impl Accumulator for Sum<i64> {
    fn identity() -> Self {
        Sum(0)
    }
    fn combine(self, other: Self) -> Self {
        Sum(self.0.wrapping_add(other.0))
    }
}

impl Accumulator for Sum<Complex64> {
    fn identity() -> Self {
        Sum(Complex64::new(0.0, 0.0))
    }
    fn combine(self, other: Self) -> Self {
        Sum(self.0 + other.0)
    }
}

impl Accumulator for Max {
    fn identity() -> Self {
        Max(f64::NEG_INFINITY)
    }
    fn combine(self, other: Self) -> Self {
        if self.0.is_nan() || self.0 >= other.0 {
            self
        } else {
            other
        }
    }
}

impl Accumulator for Min {
    fn identity() -> Self {
        Min(f64::INFINITY)
    }
    fn combine(self, other: Self) -> Self {
        if self.0.is_nan() || self.0 <= other.0 {
            self
        } else {
            other
        }
    }
}

impl Accumulator for () {
    fn identity() -> Self {}
    fn combine(self, _other: Self) -> Self {}
}

macro_rules! tuple_accumulator {
    ($($name:ident $idx:tt),+) => {
        impl<$($name: Accumulator),+> Accumulator for ($($name,)+) {
            fn identity() -> Self {
                ($($name::identity(),)+)
            }
            fn combine(self, other: Self) -> Self {
                ($(self.$idx.combine(other.$idx),)+)
            }
        }
    };
}

tuple_accumulator!(A 0);
tuple_accumulator!(A 0, B 1);
tuple_accumulator!(A 0, B 1, C 2);
tuple_accumulator!(A 0, B 1, C 2, D 3);
