//! Bootstrap two-sample tests on the Welch t statistic.
//!
//! Three engines share one null model — resample each group with
//! replacement after shifting both groups onto a common null mean — and
//! differ in how the null statistics are produced:
//!
//! * cross-combination: √B resamples per group, all pairings scored;
//! * naive: B paired resamples, statistic recomputed each time;
//! * multinomial weights: Neto's formulation, which never materializes a
//!   resample — each bootstrap column is a count vector and the statistic
//!   uses plug-in (biased) moments computed from the weights.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sampling::{bootstrap_indices, ResamplePlan, RngState, WeightMatrix};
use crate::statistics::{summarize, welch_t, GroupSummary, Method, TestResult};

use super::{materialize, pvalue_from_null, EngineStats, NullStats, Sidedness};

/// Null-hypothesis common mean for two summarized groups: the
/// inverse-variance weighted mean (n_k/s_k² weights). If either sample
/// variance is zero the weights are undefined, so the pooled grand mean
/// of all observations is used instead.
pub fn common_mean_1d(a: &GroupSummary, b: &GroupSummary) -> f64 {
    let (na, nb) = (a.n as f64, b.n as f64);
    if a.var > 0.0 && b.var > 0.0 {
        let wa = na / a.var;
        let wb = nb / b.var;
        (wa * a.mean + wb * b.mean) / (wa + wb)
    } else {
        (na * a.mean + nb * b.mean) / (na + nb)
    }
}

fn centered_groups(x1: &[f64], x2: &[f64]) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let s1 = summarize(x1)?;
    let s2 = summarize(x2)?;
    let g = common_mean_1d(&s1, &s2);
    let c1 = x1.iter().map(|v| v - s1.mean + g).collect();
    let c2 = x2.iter().map(|v| v - s2.mean + g).collect();
    Ok((c1, c2, g))
}

/// Welch t for a resample, with the zero-variance degeneracy policy
/// applied: an all-ties resample gets statistic 0.0 (never beats a
/// nonzero observed statistic) and is counted rather than fatal.
#[inline]
fn resampled_welch(s1: &GroupSummary, s2: &GroupSummary) -> (f64, bool) {
    match welch_t(s1, s2) {
        Ok(t) => (t, false),
        Err(_) => (0.0, true),
    }
}

/// Cross-combination engine internals exposed for verification: the
/// per-side bootstrap index vectors and summaries let an oracle rebuild
/// every grid cell from materialized resamples.
#[derive(Debug, Clone)]
pub struct WelchDetail {
    pub result: TestResult,
    pub null: NullStats,
    pub resample_indices: (Vec<Vec<usize>>, Vec<Vec<usize>>),
    pub summaries: (Vec<GroupSummary>, Vec<GroupSummary>),
    pub centered: (Vec<f64>, Vec<f64>),
    pub ops: EngineStats,
}

/// Cross-combination bootstrap Welch test. The observed statistic is the
/// Welch t of the original (uncentered) groups; the null statistics come
/// from `B_side` centered resamples per group crossed into a `B_side²`
/// grid, each cell needing only the two cached summaries.
pub fn boot_ttest2_efficient(
    x1: &[f64],
    x2: &[f64],
    plan: ResamplePlan,
    state: RngState,
) -> Result<TestResult> {
    Ok(boot_ttest2_efficient_detail(x1, x2, plan, state)?.result)
}

pub fn boot_ttest2_efficient_detail(
    x1: &[f64],
    x2: &[f64],
    plan: ResamplePlan,
    state: RngState,
) -> Result<WelchDetail> {
    let t_obs = welch_t(&summarize(x1)?, &summarize(x2)?)?;
    let (c1, c2, _) = centered_groups(x1, x2)?;
    let b = plan.b_side();

    let subs = state.fork(2 * b);
    let idx1: Vec<Vec<usize>> = subs[..b]
        .par_iter()
        .map(|sub| bootstrap_indices(c1.len(), &mut sub.rng()))
        .collect();
    let idx2: Vec<Vec<usize>> = subs[b..]
        .par_iter()
        .map(|sub| bootstrap_indices(c2.len(), &mut sub.rng()))
        .collect();

    let sum1: Vec<GroupSummary> = idx1
        .iter()
        .map(|ix| summarize_resample(&c1, ix))
        .collect::<Result<_>>()?;
    let sum2: Vec<GroupSummary> = idx2
        .iter()
        .map(|ix| summarize_resample(&c2, ix))
        .collect::<Result<_>>()?;

    let rows: Vec<(Vec<f64>, usize)> = sum1
        .par_iter()
        .map(|a| {
            let mut row = Vec::with_capacity(b);
            let mut bad = 0usize;
            for b2 in &sum2 {
                let (t, deg) = resampled_welch(a, b2);
                bad += deg as usize;
                row.push(t);
            }
            (row, bad)
        })
        .collect();

    let mut values = Vec::with_capacity(b * b);
    let mut degenerate_resamples = 0;
    for (row, bad) in rows {
        values.extend(row);
        degenerate_resamples += bad;
    }
    let null = NullStats::new(values, Sidedness::TwoSidedAbs)?;
    let pvalue = pvalue_from_null(t_obs, &null);

    Ok(WelchDetail {
        result: TestResult {
            statistic: t_obs,
            pvalue,
            method: Method::Efficient,
            resamples_effective: plan.b_effective(),
            degenerate_resamples,
            skipped_resamples: 0,
        },
        null,
        resample_indices: (idx1, idx2),
        summaries: (sum1, sum2),
        centered: (c1, c2),
        ops: EngineStats {
            resamples: 2 * b,
            ..EngineStats::default()
        },
    })
}

fn summarize_resample(source: &[f64], indices: &[usize]) -> Result<GroupSummary> {
    summarize(&materialize(source, indices))
}

/// Naive baseline: B iterations, each drawing a fresh resample of both
/// centered groups and recomputing the Welch t from raw values.
pub fn boot_ttest2_naive(
    x1: &[f64],
    x2: &[f64],
    b: usize,
    state: RngState,
) -> Result<TestResult> {
    Ok(boot_ttest2_naive_detail(x1, x2, b, state)?.result)
}

pub fn boot_ttest2_naive_detail(
    x1: &[f64],
    x2: &[f64],
    b: usize,
    state: RngState,
) -> Result<WelchDetail> {
    if b < 1 {
        return Err(Error::EmptyResamplePlan);
    }
    let t_obs = welch_t(&summarize(x1)?, &summarize(x2)?)?;
    let (c1, c2, _) = centered_groups(x1, x2)?;

    let cells: Vec<(f64, bool)> = state
        .fork(b)
        .par_iter()
        .map(|sub| {
            let mut rng = sub.rng();
            let ix1 = bootstrap_indices(c1.len(), &mut rng);
            let ix2 = bootstrap_indices(c2.len(), &mut rng);
            let r1 = materialize(&c1, &ix1);
            let r2 = materialize(&c2, &ix2);
            // summarize re-walks the data both passes: the honest cost
            // of a from-scratch loop iteration.
            let (s1, s2) = (summarize(&r1), summarize(&r2));
            match (s1, s2) {
                (Ok(a), Ok(c)) => resampled_welch(&a, &c),
                _ => (0.0, true),
            }
        })
        .collect();

    let mut values = Vec::with_capacity(b);
    let mut degenerate_resamples = 0;
    for (t, bad) in cells {
        values.push(t);
        degenerate_resamples += bad as usize;
    }
    let null = NullStats::new(values, Sidedness::TwoSidedAbs)?;
    let pvalue = pvalue_from_null(t_obs, &null);

    Ok(WelchDetail {
        result: TestResult {
            statistic: t_obs,
            pvalue,
            method: Method::Naive,
            resamples_effective: b,
            degenerate_resamples,
            skipped_resamples: 0,
        },
        null,
        resample_indices: (Vec::new(), Vec::new()),
        summaries: (Vec::new(), Vec::new()),
        centered: (c1, c2),
        ops: EngineStats {
            resamples: 2 * b,
            ..EngineStats::default()
        },
    })
}

/// Multinomial-weight engine internals: the weight matrices and the
/// per-column plug-in moments.
#[derive(Debug, Clone)]
pub struct NetoDetail {
    pub result: TestResult,
    pub null: NullStats,
    pub weights: (WeightMatrix, WeightMatrix),
    /// Per-column (mean1, var1, mean2, var2) plug-in moments.
    pub moments: Vec<(f64, f64, f64, f64)>,
    pub centered: (Vec<f64>, Vec<f64>),
    pub ops: EngineStats,
}

/// Weight-based bootstrap baseline (after Neto): each of the B columns is
/// a Multinomial(n, 1/n) count vector per group, and the null statistic
/// uses plug-in moments m = Σc·x/n, v = Σc·x² /n − m². The variance is
/// the biased (divide-by-n) form, so null statistics differ from the
/// materialized-resample engines by O(1/n) scaling — the observed
/// statistic stays the unbiased Welch t shared by every engine.
pub fn boot_ttest2_neto(
    x1: &[f64],
    x2: &[f64],
    b: usize,
    state: RngState,
) -> Result<TestResult> {
    Ok(boot_ttest2_neto_detail(x1, x2, b, state)?.result)
}

pub fn boot_ttest2_neto_detail(
    x1: &[f64],
    x2: &[f64],
    b: usize,
    state: RngState,
) -> Result<NetoDetail> {
    if b < 1 {
        return Err(Error::EmptyResamplePlan);
    }
    let t_obs = welch_t(&summarize(x1)?, &summarize(x2)?)?;
    let (c1, c2, _) = centered_groups(x1, x2)?;
    let (n1, n2) = (c1.len(), c2.len());

    let streams = state.fork(2);
    let w1 = WeightMatrix::draw(n1, b, streams[0]);
    let w2 = WeightMatrix::draw(n2, b, streams[1]);

    let cols: Vec<(f64, bool, (f64, f64, f64, f64))> = (0..b)
        .into_par_iter()
        .map(|j| {
            let (m1, v1) = plugin_moments(&c1, w1.column(j));
            let (m2, v2) = plugin_moments(&c2, w2.column(j));
            let se2 = v1 / n1 as f64 + v2 / n2 as f64;
            if se2 > 0.0 {
                ((m1 - m2) / se2.sqrt(), false, (m1, v1, m2, v2))
            } else {
                (0.0, true, (m1, v1, m2, v2))
            }
        })
        .collect();

    let mut values = Vec::with_capacity(b);
    let mut moments = Vec::with_capacity(b);
    let mut degenerate_resamples = 0;
    for (t, bad, m) in cols {
        values.push(t);
        moments.push(m);
        degenerate_resamples += bad as usize;
    }
    let null = NullStats::new(values, Sidedness::TwoSidedAbs)?;
    let pvalue = pvalue_from_null(t_obs, &null);

    Ok(NetoDetail {
        result: TestResult {
            statistic: t_obs,
            pvalue,
            method: Method::Neto,
            resamples_effective: b,
            degenerate_resamples,
            skipped_resamples: 0,
        },
        null,
        weights: (w1, w2),
        moments,
        centered: (c1, c2),
        ops: EngineStats {
            resamples: 2 * b,
            ..EngineStats::default()
        },
    })
}

/// Plug-in (biased, divide-by-n) weighted moments: m = Σc·x/n,
/// v = Σc·x²/n − m².
fn plugin_moments(x: &[f64], counts: &[u32]) -> (f64, f64) {
    let n = x.len() as f64;
    let mut s = 0.0;
    let mut sq = 0.0;
    for (&xi, &ci) in x.iter().zip(counts) {
        let c = ci as f64;
        s += c * xi;
        sq += c * xi * xi;
    }
    let m = s / n;
    (m, sq / n - m * m)
}
