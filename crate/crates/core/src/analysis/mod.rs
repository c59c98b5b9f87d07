//! Summability-condition evidence, BN versus beta-binomial comparisons and
//! power-law rate fits.

pub mod compare;
pub mod conditions;
pub mod fit;

pub use compare::{compare_rows, tv_distance_curve, RowComparison, TvCurve};
pub use conditions::{check_conditions, Condition, ConditionReport, Status};
pub use fit::{fit_rate, RateFit};
