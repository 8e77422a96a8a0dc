//! Numeric abstraction shared by the metric, schedule and budget code.
//!
//! Every score in this crate is a ratio of counts, so the math is written
//! once against [`Scalar`] and instantiated for `f32`, `f64` or an exact
//! rational. Exact instantiations make hand-computed fractions such as
//! `11/15` testable without tolerances.

use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, ToPrimitive};

/// A field-like number type usable for scores and ratios.
pub trait Scalar:
    Num + Copy + PartialOrd + Debug + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// Converts a count. Integer counts in this crate always fit.
    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("count representable in scalar type")
    }

    /// `num / den` for integer counts; `den` must be non-zero.
    fn ratio(num: u64, den: u64) -> Self {
        debug_assert!(den != 0);
        Self::from_count(num) / Self::from_count(den)
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
impl Scalar for Ratio<i64> {}
impl Scalar for Ratio<i128> {}

/// Floating-point scalars, needed where the math is transcendental
/// (perplexity, polynomial decay with a non-integer power).
pub trait FloatScalar: Scalar + num_traits::Float {}

impl FloatScalar for f32 {}
impl FloatScalar for f64 {}

/// Rounds a non-negative exact value to `decimals` places, half away from zero.
pub fn round_half_up(value: Ratio<i64>, decimals: u32) -> Ratio<i64> {
    let scale = 10i64.pow(decimals);
    let scaled = value * Ratio::from_integer(scale);
    let half = Ratio::new(1, 2);
    let rounded = if scaled >= Ratio::from_integer(0) {
        (scaled + half).floor()
    } else {
        (scaled - half).ceil()
    };
    rounded / Ratio::from_integer(scale)
}

/// Nearest exact decimal with `decimals` places for a float input.
pub fn quantize(value: f64, decimals: u32) -> Ratio<i64> {
    let scale = 10i64.pow(decimals);
    Ratio::new((value * scale as f64).round() as i64, scale)
}

/// Formats an exact value with a fixed number of decimals, rounding half up.
pub fn format_fixed(value: Ratio<i64>, decimals: u32) -> String {
    let scale = 10i64.pow(decimals);
    let rounded = round_half_up(value, decimals) * Ratio::from_integer(scale);
    let units = rounded.to_integer();
    let sign = if units < 0 { "-" } else { "" };
    let units = units.abs();
    if decimals == 0 {
        return format!("{sign}{units}");
    }
    format!(
        "{sign}{}.{:0width$}",
        units / scale,
        units % scale,
        width = decimals as usize
    )
}
