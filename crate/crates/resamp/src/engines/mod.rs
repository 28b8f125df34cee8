//! Resampling p-value engines.
//!
//! Every test comes in two shapes sharing one estimator:
//!
//! * a **cross-combination** engine that draws only `B_side = round(√B)`
//!   resamples per input and takes all `B_side²` pairings as null
//!   statistics, paying the expensive per-resample work √B times instead
//!   of B times;
//! * straightforward baselines — a naive loop that redraws and recomputes
//!   everything per iteration, and for Welch additionally a
//!   multinomial-weight bootstrap where resample moments become weighted
//!   sums.
//!
//! The cross-combination statistics are pairwise dependent (each resample
//! participates in `B_side` cells); their validity as a null sample is
//! established empirically by the calibration harness in
//! [`crate::validation`] rather than by independence arguments.
//!
//! # Determinism
//!
//! Engines fork one RNG sub-stream per independent draw up front, so the
//! same seed gives bit-identical results whether the draws then run on
//! one thread or many.
//!
//! # Degenerate resamples
//!
//! A resampling run is not aborted by isolated degenerate draws; instead
//! the offending statistic is substituted and counted, and the counts are
//! reported on [`TestResult`]. The substitutions: a resampled correlation
//! at ±1 becomes the sign-matched largest finite statistic; a resampled
//! Welch denominator of exactly zero becomes a statistic of 0 (counts
//! toward the null); a James resample whose covariance cannot be factored
//! is redrawn once, then skipped with `m` decremented.

mod james;
mod permcor;
mod welch;

pub use james::{
    james_boot_efficient, james_boot_efficient_detail, james_boot_ordinary,
    james_boot_ordinary_detail, materialize_rows, JamesDetail,
};
pub use permcor::{
    permcor_efficient, permcor_efficient_detail, permcor_exhaustive, permcor_naive,
    permcor_naive_detail, PermcorDetail, MAX_FINITE_LOG_RATIO,
};
pub use welch::{
    boot_ttest2_efficient, boot_ttest2_efficient_detail, boot_ttest2_naive,
    boot_ttest2_naive_detail, boot_ttest2_neto, boot_ttest2_neto_detail, common_mean_1d,
    NetoDetail, WelchDetail,
};

use crate::error::{Error, Result};

/// Which tail(s) of the null distribution count as evidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sidedness {
    /// Exceedance in absolute value (correlation, Welch).
    TwoSidedAbs,
    /// Exceedance above the observed value (James, a squared statistic).
    OneSidedGreater,
}

/// The resampled null statistics backing one p-value.
#[derive(Debug, Clone, PartialEq)]
pub struct NullStats {
    values: Vec<f64>,
    sidedness: Sidedness,
}

impl NullStats {
    pub fn new(values: Vec<f64>, sidedness: Sidedness) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidConfig(
                "null statistics vector is empty".into(),
            ));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteData { index });
        }
        Ok(NullStats { values, sidedness })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sidedness(&self) -> Sidedness {
        self.sidedness
    }

    pub fn m(&self) -> usize {
        self.values.len()
    }
}

/// The add-one exceedance estimator (#{exceed} + 1)/(m + 1).
///
/// Exceedance is strict, so ties count for the null, and the estimate is
/// never 0: it always lies in [1/(m+1), 1].
pub fn pvalue_from_null(observed: f64, null: &NullStats) -> f64 {
    let exceed = match null.sidedness {
        Sidedness::TwoSidedAbs => {
            let thr = observed.abs();
            null.values.iter().filter(|v| v.abs() > thr).count()
        }
        Sidedness::OneSidedGreater => null.values.iter().filter(|&&v| v > observed).count(),
    };
    (exceed + 1) as f64 / (null.values.len() + 1) as f64
}

/// Per-call operation counts for the resampling phase of an engine
/// (observed-statistic preamble excluded). These are the
/// hardware-independent record of how much work a method did: the
/// cross-combination James engine performs exactly `2·B_side` covariance
/// computations and `B_side²` solves where the ordinary loop needs `2B`
/// and `B`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EngineStats {
    /// Fisher–Yates shuffles performed.
    pub shuffles: usize,
    /// Bootstrap resamples drawn (index vectors or weight columns).
    pub resamples: usize,
    /// Covariance matrices computed from a resample.
    pub covariances: usize,
    /// SPD solves attempted for resampled statistics.
    pub spd_solves: usize,
}

/// Gather values from `source` at the given indices (bootstrap
/// materialization helper shared with oracle code).
pub fn materialize(source: &[f64], indices: &[usize]) -> Vec<f64> {
    indices.iter().map(|&i| source[i]).collect()
}
