//! Null-simulation harness: type-I-error estimation and null-quantile
//! comparison.
//!
//! Each replication draws a fresh dataset under the null hypothesis
//! (standard normals; equal means/mean vectors, with an optional scale
//! difference for the two-sample tests), runs the requested engine, and
//! records the p-value together with empirical quantiles of the engine's
//! null statistics. The report compares those quantiles against the
//! matching asymptotic reference curve — Student t for the correlation
//! statistic (Fisher form) and for the Welch statistic — and measures the
//! sup-distance of the p-value sample from Uniform(0,1).
//!
//! Replications are forked onto independent RNG sub-streams, so reports
//! are identical across thread counts.

use rayon::prelude::*;
use serde::Serialize;

use crate::engines::{
    boot_ttest2_efficient_detail, boot_ttest2_naive_detail, boot_ttest2_neto_detail,
    james_boot_efficient_detail, james_boot_ordinary_detail, permcor_efficient_detail,
    permcor_naive_detail, NullStats,
};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::sampling::{ResamplePlan, Rng, RngState};
use crate::statistics::{
    corr_asymptotic_pvalue, summarize, t_quantile, welch_asymptotic_pvalue, Method,
    MultivariateSample, PairedSample,
};

/// Which of the shipped hypothesis tests a harness run exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TestKind {
    Corr,
    Welch,
    James,
}

impl TestKind {
    pub fn name(&self) -> &'static str {
        match self {
            TestKind::Corr => "corr",
            TestKind::Welch => "welch",
            TestKind::James => "james",
        }
    }

    /// Engines that make sense for this test.
    pub fn supports(&self, method: Method) -> bool {
        match self {
            TestKind::Corr => matches!(
                method,
                Method::Asymptotic | Method::Naive | Method::Efficient
            ),
            TestKind::Welch => matches!(
                method,
                Method::Asymptotic | Method::Naive | Method::Efficient | Method::Neto
            ),
            TestKind::James => matches!(method, Method::Efficient | Method::Ordinary),
        }
    }
}

impl std::fmt::Display for TestKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for TestKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "corr" => Ok(TestKind::Corr),
            "welch" => Ok(TestKind::Welch),
            "james" => Ok(TestKind::James),
            other => Err(Error::InvalidConfig(format!("unknown test {other:?}"))),
        }
    }
}

/// Probability grid for the report's quantile table.
pub const QUANTILE_PROBS: [f64; 9] = [0.01, 0.05, 0.10, 0.25, 0.50, 0.75, 0.90, 0.95, 0.99];

/// Configuration of one null simulation.
#[derive(Debug, Clone, Copy)]
pub struct NullSimConfig {
    pub test: TestKind,
    pub method: Method,
    /// Observations per vector (corr) or per group (welch/james).
    pub n: usize,
    /// Dimension; must be 1 unless `test` is james.
    pub d: usize,
    pub reps: usize,
    pub b: usize,
    pub alpha: f64,
    /// Standard-deviation multiplier for the second group (welch) or its
    /// coordinates (james); the null of equal means still holds. Ignored
    /// for corr.
    pub group2_scale: f64,
}

impl NullSimConfig {
    fn validate(&self) -> Result<()> {
        if self.reps < 1 {
            return Err(Error::InvalidConfig("reps must be ≥ 1".into()));
        }
        if self.b < 1 {
            return Err(Error::EmptyResamplePlan);
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha must lie in (0,1), got {}",
                self.alpha
            )));
        }
        if self.d != 1 && self.test != TestKind::James {
            return Err(Error::InvalidConfig(format!(
                "d={} only valid for the james test",
                self.d
            )));
        }
        if self.d < 1 {
            return Err(Error::InvalidConfig("d must be ≥ 1".into()));
        }
        if !(self.group2_scale > 0.0 && self.group2_scale.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "group2_scale must be positive and finite, got {}",
                self.group2_scale
            )));
        }
        if !self.test.supports(self.method) {
            return Err(Error::InvalidConfig(format!(
                "method {} not available for test {}",
                self.method, self.test
            )));
        }
        let n_min = match self.test {
            TestKind::Corr => 4,
            TestKind::Welch => 2,
            TestKind::James => self.d + 1,
        };
        if self.n < n_min {
            return Err(Error::TooFewObservations {
                got: self.n,
                need: n_min,
            });
        }
        Ok(())
    }
}

/// One row of the quantile table: probability, mean empirical null
/// quantile across replications, and the asymptotic reference (absent
/// where no closed-form curve applies, i.e. for james).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuantileRow {
    pub prob: f64,
    pub empirical: f64,
    pub reference: Option<f64>,
}

/// Outcome of a null simulation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NullSimReport {
    pub schema: &'static str,
    pub test: TestKind,
    pub method: Method,
    pub n: usize,
    pub d: usize,
    pub b: usize,
    pub reps: usize,
    pub alpha: f64,
    pub group2_scale: f64,
    pub rejection_rate: f64,
    pub pvalue_ks_distance: f64,
    /// Empty when the method produces no resampled null statistics
    /// (asymptotic).
    pub quantile_table: Vec<QuantileRow>,
}

impl NullSimReport {
    pub fn to_json(&self) -> String {
        // Serialization of these plain fields cannot fail.
        serde_json::to_string_pretty(self).expect("report serialization")
    }

    /// Quantile table as TSV (`prob`, `empirical`, `reference`; the
    /// reference cell is empty where no curve applies).
    pub fn quantile_tsv(&self) -> String {
        let mut out = String::from("prob\tempirical\treference\n");
        for row in &self.quantile_table {
            let reference = row
                .reference
                .map(|r| format!("{r:.10e}"))
                .unwrap_or_default();
            out.push_str(&format!(
                "{}\t{:.10e}\t{}\n",
                row.prob, row.empirical, reference
            ));
        }
        out
    }
}

/// Empirical quantiles of a null sample under the inclusive linear
/// interpolation convention: with m sorted values v₀ ≤ … ≤ v_{m−1}, the
/// quantile at probability p is v at fractional rank h = (m−1)·p,
/// linearly interpolated between the bracketing order statistics. The
/// sample (1,2,3,4) therefore has median 2.5.
pub fn null_quantiles(stats: &NullStats, probs: &[f64]) -> Result<Vec<(f64, f64)>> {
    check_probs(probs)?;
    let mut sorted = stats.values().to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(probs
        .iter()
        .map(|&p| (p, quantile_sorted(&sorted, p)))
        .collect())
}

fn check_probs(probs: &[f64]) -> Result<()> {
    for pair in probs.windows(2) {
        if !(pair[0] < pair[1]) {
            return Err(Error::InvalidConfig(
                "quantile probs must be strictly increasing".into(),
            ));
        }
    }
    if probs.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
        return Err(Error::InvalidConfig(
            "quantile probs must lie in (0,1)".into(),
        ));
    }
    Ok(())
}

fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let w = h - lo as f64;
    sorted[lo] + w * (sorted[hi] - sorted[lo])
}

/// Asymptotic reference quantiles for a test's null statistic: Student
/// t with n−3 degrees of freedom for the correlation statistic in Fisher
/// form (½·log((1+r)/(1−r))·√(n−3)), and t with the equal-variance
/// Satterthwaite value 2(n−1) for the Welch statistic at equal group
/// sizes. The james statistic has no closed-form reference here — `None`.
pub fn reference_quantiles(test: TestKind, n: usize, probs: &[f64]) -> Result<Option<Vec<f64>>> {
    check_probs(probs)?;
    let df = match test {
        TestKind::Corr => {
            if n < 4 {
                return Err(Error::TooFewObservations { got: n, need: 4 });
            }
            (n - 3) as f64
        }
        TestKind::Welch => {
            if n < 2 {
                return Err(Error::TooFewObservations { got: n, need: 2 });
            }
            2.0 * (n - 1) as f64
        }
        TestKind::James => return Ok(None),
    };
    Ok(Some(probs.iter().map(|&p| t_quantile(p, df)).collect()))
}

/// One-sample Kolmogorov–Smirnov distance of `pvalues` from Uniform(0,1):
/// sup over the sample of the larger one-sided ECDF discrepancy.
pub fn ks_distance_uniform(pvalues: &[f64]) -> f64 {
    let mut sorted = pvalues.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &p) in sorted.iter().enumerate() {
        let upper = (i + 1) as f64 / m - p;
        let lower = p - i as f64 / m;
        d = d.max(upper).max(lower);
    }
    d
}

/// P-value and (for resampling methods) scaled null statistics of one
/// replication.
struct RepOutcome {
    pvalue: f64,
    quantiles: Option<Vec<f64>>,
}

fn gaussian_vec(rng: &mut Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| scale * rng.standard_normal()).collect()
}

fn gaussian_matrix(rng: &mut Rng, n: usize, d: usize, scale: f64) -> MultivariateSample {
    let mut m = Matrix::zeros(n, d);
    for i in 0..n {
        for j in 0..d {
            m.set(i, j, scale * rng.standard_normal());
        }
    }
    MultivariateSample::new(m).expect("generated matrix is valid")
}

fn run_rep(config: &NullSimConfig, rep_state: RngState, probs: &[f64]) -> Result<RepOutcome> {
    let mut data_rng = rep_state.child(0).rng();
    let engine_state = rep_state.child(1);
    let plan = ResamplePlan::new(config.b)?;
    let n = config.n;

    // Scale factor mapping engine null statistics onto the reference
    // curve's scale (corr only: the engine works on the log-ratio scale
    // without the Fisher constants).
    let fisher = 0.5 * ((n as f64) - 3.0).sqrt();

    let (pvalue, raw): (f64, Option<(NullStats, f64)>) = match config.test {
        TestKind::Corr => {
            let s = PairedSample::new(
                gaussian_vec(&mut data_rng, n, 1.0),
                gaussian_vec(&mut data_rng, n, 1.0),
            )?;
            match config.method {
                Method::Asymptotic => (corr_asymptotic_pvalue(&s)?.pvalue, None),
                Method::Naive => {
                    let d = permcor_naive_detail(&s, config.b, engine_state)?;
                    (d.result.pvalue, Some((d.null, fisher)))
                }
                Method::Efficient => {
                    let d = permcor_efficient_detail(&s, plan, engine_state)?;
                    (d.result.pvalue, Some((d.null, fisher)))
                }
                _ => unreachable!("validated"),
            }
        }
        TestKind::Welch => {
            let x1 = gaussian_vec(&mut data_rng, n, 1.0);
            let x2 = gaussian_vec(&mut data_rng, n, config.group2_scale);
            match config.method {
                Method::Asymptotic => {
                    let r = welch_asymptotic_pvalue(&summarize(&x1)?, &summarize(&x2)?)?;
                    (r.pvalue, None)
                }
                Method::Naive => {
                    let d = boot_ttest2_naive_detail(&x1, &x2, config.b, engine_state)?;
                    (d.result.pvalue, Some((d.null, 1.0)))
                }
                Method::Efficient => {
                    let d = boot_ttest2_efficient_detail(&x1, &x2, plan, engine_state)?;
                    (d.result.pvalue, Some((d.null, 1.0)))
                }
                Method::Neto => {
                    let d = boot_ttest2_neto_detail(&x1, &x2, config.b, engine_state)?;
                    (d.result.pvalue, Some((d.null, 1.0)))
                }
                _ => unreachable!("validated"),
            }
        }
        TestKind::James => {
            let y1 = gaussian_matrix(&mut data_rng, n, config.d, 1.0);
            let y2 = gaussian_matrix(&mut data_rng, n, config.d, config.group2_scale);
            match config.method {
                Method::Efficient => {
                    let d = james_boot_efficient_detail(&y1, &y2, plan, engine_state)?;
                    (d.result.pvalue, Some((d.null, 1.0)))
                }
                Method::Ordinary => {
                    let d = james_boot_ordinary_detail(&y1, &y2, config.b, engine_state)?;
                    (d.result.pvalue, Some((d.null, 1.0)))
                }
                _ => unreachable!("validated"),
            }
        }
    };

    let quantiles = match raw {
        None => None,
        Some((null, scale)) => {
            let qs = null_quantiles(&null, probs)?;
            Some(qs.into_iter().map(|(_, v)| scale * v).collect())
        }
    };
    Ok(RepOutcome { pvalue, quantiles })
}

/// Run `config.reps` independent null replications and aggregate.
///
/// The report's empirical quantile at probability p is the mean across
/// replications of each replication's null-statistic quantile at p — one
/// engine run per dataset, quantiles averaged, never pooled.
pub fn simulate_null(config: &NullSimConfig, state: RngState) -> Result<NullSimReport> {
    config.validate()?;
    let probs = QUANTILE_PROBS;

    let outcomes: Vec<RepOutcome> = state
        .fork(config.reps)
        .par_iter()
        .map(|sub| run_rep(config, *sub, &probs))
        .collect::<Result<_>>()?;

    let reps = config.reps as f64;
    let rejections = outcomes
        .iter()
        .filter(|o| o.pvalue <= config.alpha)
        .count();
    let pvalues: Vec<f64> = outcomes.iter().map(|o| o.pvalue).collect();

    let quantile_table = if outcomes.iter().all(|o| o.quantiles.is_some()) {
        let reference = reference_quantiles(config.test, config.n, &probs)?;
        let mut means = vec![0.0; probs.len()];
        for o in &outcomes {
            for (acc, q) in means.iter_mut().zip(o.quantiles.as_ref().unwrap()) {
                *acc += q;
            }
        }
        probs
            .iter()
            .enumerate()
            .map(|(k, &prob)| QuantileRow {
                prob,
                empirical: means[k] / reps,
                reference: reference.as_ref().map(|r| r[k]),
            })
            .collect()
    } else {
        Vec::new()
    };

    Ok(NullSimReport {
        schema: "1",
        test: config.test,
        method: config.method,
        n: config.n,
        d: config.d,
        b: config.b,
        reps: config.reps,
        alpha: config.alpha,
        group2_scale: config.group2_scale,
        rejection_rate: rejections as f64 / reps,
        pvalue_ks_distance: ks_distance_uniform(&pvalues),
        quantile_table,
    })
}
