//! Resampling-based hypothesis tests built around a cross-combination
//! trick: instead of B independent resamples, draw √B per input and score
//! every pairing, getting ~B null statistics for a fraction of the
//! resampling and summarization work.
//!
//! Three tests ship with both a cross-combination engine and a
//! from-scratch baseline:
//!
//! * Pearson correlation permutation test ([`permcor_efficient`] /
//!   [`permcor_naive`], plus exact enumeration for tiny n);
//! * bootstrap two-sample Welch t test ([`boot_ttest2_efficient`] /
//!   [`boot_ttest2_naive`], plus a multinomial-weight baseline
//!   [`boot_ttest2_neto`]);
//! * bootstrap James test for multivariate means under unequal
//!   covariances ([`james_boot_efficient`] / [`james_boot_ordinary`]).
//!
//! All engines are deterministic given a seed: every parallel task forks
//! its own counter-based RNG stream, so results are bit-identical across
//! thread counts and across serial/parallel runs. The validation and
//! bench modules wrap the engines in a null-calibration harness and a
//! timing harness.

pub mod bench;
pub mod engines;
pub mod error;
pub mod io;
pub mod linalg;
pub mod sampling;
pub mod statistics;
pub mod validation;

pub use engines::{
    boot_ttest2_efficient, boot_ttest2_naive, boot_ttest2_neto, james_boot_efficient,
    james_boot_ordinary, permcor_efficient, permcor_exhaustive, permcor_naive,
};
pub use error::{Error, Result};
pub use sampling::{ResamplePlan, RngState};
pub use statistics::{Method, MultivariateSample, PairedSample, TestResult};
