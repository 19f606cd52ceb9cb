//! Probability scalar abstraction.
//!
//! Grammars, charts and the EM machinery are generic over [`Real`], which is
//! implemented for `f32` and `f64`. The experiment harness and the CLI use
//! `f64` throughout.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point type usable as a rule probability.
pub trait Real: Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static {
    /// Allowed deviation of a rule row sum from 1.
    ///
    /// `1e-9` for `f64`; single precision cannot hold that, so `f32` uses a
    /// bound a few ulps wide.
    const ROW_TOLERANCE: f64;

    /// Converts an `f64` literal, panicking only if the type cannot represent
    /// finite doubles at all (never the case for `f32`/`f64`).
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to Real")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("Real converts to f64")
    }
}

impl Real for f64 {
    const ROW_TOLERANCE: f64 = 1e-9;
}

impl Real for f32 {
    const ROW_TOLERANCE: f64 = 1e-5;
}

/// Sums `values` by recursive halving, which bounds the rounding error growth
/// to `O(log n)` instead of `O(n)`.
pub fn pairwise_sum<T: Real>(values: &[T]) -> T {
    const LEAF: usize = 16;
    if values.len() <= LEAF {
        return values.iter().fold(T::zero(), |acc, &v| acc + v);
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_small_input() {
        let v: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(pairwise_sum(&v), 55.0);
        assert_eq!(pairwise_sum::<f64>(&[]), 0.0);
    }

    #[test]
    fn pairwise_is_more_accurate_than_naive() {
        let v = vec![0.1f32; 1 << 20];
        let naive: f32 = v.iter().fold(0.0, |a, &b| a + b);
        let exact = 0.1f64 * f64::from(1u32 << 20);
        let pw = f64::from(pairwise_sum(&v));
        assert!((pw - exact).abs() < (f64::from(naive) - exact).abs());
    }
}
