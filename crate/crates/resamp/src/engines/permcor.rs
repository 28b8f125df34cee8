//! Permutation tests for the Pearson correlation.
//!
//! The statistic pipeline follows the sums identity: with Σx, Σx², Σy,
//! Σy² fixed under permutation, only the cross-sum Σxy moves, so
//! r = (Σxy − ΣxΣy/n) / down for a constant `down`. The permuted
//! statistics are compared on the monotone log-ratio scale
//! t = log((1+r)/(1−r)) — the Fisher transform without its constant
//! factors, which cannot change exceedance counts.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sampling::{shuffle, ResamplePlan, RngState};
use crate::statistics::{Method, PairedSample, TestResult, DEGENERATE_CORRELATION_TOL};

use super::{pvalue_from_null, EngineStats, NullStats, Sidedness};

/// Largest log-ratio statistic a non-degenerate correlation can reach:
/// the value of log((1+r)/(1−r)) at |r| = 1 − 1e-12, evaluated in f64
/// arithmetic. Resampled correlations at or beyond the degeneracy
/// threshold are clamped to ±this (sign-matched) and counted, so a
/// handful of tied resamples cannot abort a long run yet still rank
/// at or above every regular statistic.
pub const MAX_FINITE_LOG_RATIO: f64 = 28.324190418452805;

/// Permutation-invariant pieces of the sums formulation.
struct SumsFrame {
    up: f64,
    down: f64,
    r_obs: f64,
    t_obs: f64,
}

fn sums_frame(s: &PairedSample) -> Result<SumsFrame> {
    let n = s.n() as f64;
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&xi, &yi) in s.x().iter().zip(s.y()) {
        sx += xi;
        sy += yi;
        sxx += xi * xi;
        syy += yi * yi;
        sxy += xi * yi;
    }
    let vx = sxx - sx * sx / n;
    let vy = syy - sy * sy / n;
    if !(vx > 0.0) || !(vy > 0.0) {
        return Err(Error::ConstantVector);
    }
    let up = sx * sy / n;
    let down = (vx * vy).sqrt();
    let r_obs = (sxy - up) / down;
    if r_obs.abs() >= 1.0 - DEGENERATE_CORRELATION_TOL {
        return Err(Error::DegenerateCorrelation { r: r_obs });
    }
    Ok(SumsFrame {
        up,
        down,
        r_obs,
        t_obs: log_ratio(r_obs),
    })
}

#[inline]
fn log_ratio(r: f64) -> f64 {
    ((1.0 + r) / (1.0 - r)).ln()
}

/// Convert a resampled correlation to the comparison statistic, clamping
/// degenerate values. Returns (statistic, was_degenerate).
#[inline]
fn resampled_statistic(r: f64) -> (f64, bool) {
    if r.abs() >= 1.0 - DEGENERATE_CORRELATION_TOL {
        (MAX_FINITE_LOG_RATIO.copysign(r), true)
    } else {
        (log_ratio(r), false)
    }
}

/// Everything a permutation-correlation engine produced: the result plus
/// the null statistics and, where retained, the permuted columns so a
/// brute-force oracle can recompute each cell from materialized data.
#[derive(Debug, Clone)]
pub struct PermcorDetail {
    pub result: TestResult,
    pub null: NullStats,
    /// Permuted copies of x (cross-combination engine only).
    pub x_columns: Vec<Vec<f64>>,
    /// Permuted copies of y.
    pub y_columns: Vec<Vec<f64>>,
    pub ops: EngineStats,
}

/// Cross-combination permutation test: `B_side` shuffles of each vector,
/// all `B_side²` pairings scored through one cross-sum matrix.
///
/// The reported statistic is the correlation itself; the p-value is the
/// two-sided add-one estimator over the log-ratio statistics.
pub fn permcor_efficient(
    s: &PairedSample,
    plan: ResamplePlan,
    state: RngState,
) -> Result<TestResult> {
    Ok(permcor_efficient_detail(s, plan, state)?.result)
}

pub fn permcor_efficient_detail(
    s: &PairedSample,
    plan: ResamplePlan,
    state: RngState,
) -> Result<PermcorDetail> {
    let frame = sums_frame(s)?;
    let b = plan.b_side();

    let subs = state.fork(2 * b);
    let x_columns: Vec<Vec<f64>> = subs[..b]
        .par_iter()
        .map(|sub| shuffle(s.x(), &mut sub.rng()))
        .collect();
    let y_columns: Vec<Vec<f64>> = subs[b..]
        .par_iter()
        .map(|sub| shuffle(s.y(), &mut sub.rng()))
        .collect();

    // Cross-sum grid: S[i][j] = Σ_k Xp[k,i]·Yp[k,j], then each cell is
    // finished with the permutation-invariant constants. Row-parallel;
    // each cell is an independent exact dot product, so the arithmetic
    // is the definitional triple loop regardless of scheduling.
    let rows: Vec<(Vec<f64>, usize)> = x_columns
        .par_iter()
        .map(|xp| {
            let mut row = Vec::with_capacity(b);
            let mut degenerate = 0usize;
            for yp in &y_columns {
                let sxy: f64 = xp.iter().zip(yp).map(|(a, c)| a * c).sum();
                let r = (sxy - frame.up) / frame.down;
                let (t, bad) = resampled_statistic(r);
                degenerate += bad as usize;
                row.push(t);
            }
            (row, degenerate)
        })
        .collect();

    let mut values = Vec::with_capacity(b * b);
    let mut degenerate_resamples = 0;
    for (row, bad) in rows {
        values.extend(row);
        degenerate_resamples += bad;
    }
    let null = NullStats::new(values, Sidedness::TwoSidedAbs)?;
    let pvalue = pvalue_from_null(frame.t_obs, &null);

    Ok(PermcorDetail {
        result: TestResult {
            statistic: frame.r_obs,
            pvalue,
            method: Method::Efficient,
            resamples_effective: plan.b_effective(),
            degenerate_resamples,
            skipped_resamples: 0,
        },
        null,
        x_columns,
        y_columns,
        ops: EngineStats {
            shuffles: 2 * b,
            ..EngineStats::default()
        },
    })
}

/// Naive baseline: B full shuffles of y, recomputing the correlation from
/// scratch (all five sums) each time.
pub fn permcor_naive(s: &PairedSample, b: usize, state: RngState) -> Result<TestResult> {
    Ok(permcor_naive_detail(s, b, state)?.result)
}

pub fn permcor_naive_detail(
    s: &PairedSample,
    b: usize,
    state: RngState,
) -> Result<PermcorDetail> {
    if b < 1 {
        return Err(Error::EmptyResamplePlan);
    }
    let frame = sums_frame(s)?;
    let n = s.n() as f64;

    let cells: Vec<(f64, bool)> = state
        .fork(b)
        .par_iter()
        .map(|sub| {
            let yp = shuffle(s.y(), &mut sub.rng());
            // Deliberately recompute every sum: this is the honest cost
            // of the loop the cross-combination scheme replaces.
            let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for (&xi, &yi) in s.x().iter().zip(&yp) {
                sx += xi;
                sy += yi;
                sxx += xi * xi;
                syy += yi * yi;
                sxy += xi * yi;
            }
            let down = ((sxx - sx * sx / n) * (syy - sy * sy / n)).sqrt();
            let r = (sxy - sx * sy / n) / down;
            resampled_statistic(r)
        })
        .collect();

    let mut values = Vec::with_capacity(b);
    let mut degenerate_resamples = 0;
    for (t, bad) in cells {
        values.push(t);
        degenerate_resamples += bad as usize;
    }
    let null = NullStats::new(values, Sidedness::TwoSidedAbs)?;
    let pvalue = pvalue_from_null(frame.t_obs, &null);

    Ok(PermcorDetail {
        result: TestResult {
            statistic: frame.r_obs,
            pvalue,
            method: Method::Naive,
            resamples_effective: b,
            degenerate_resamples,
            skipped_resamples: 0,
        },
        null,
        x_columns: Vec::new(),
        y_columns: Vec::new(),
        ops: EngineStats {
            shuffles: b,
            ..EngineStats::default()
        },
    })
}

/// Exact permutation test by full enumeration of the n! orderings of y
/// (no randomness). The p-value is the exact tail probability
/// #{π : |t_π| ≥ |t_obs|} / n!; the identity ordering guarantees it is
/// positive. Practical only for tiny n, so n > 10 is rejected.
pub fn permcor_exhaustive(s: &PairedSample) -> Result<TestResult> {
    const MAX_N: usize = 10;
    if s.n() > MAX_N {
        return Err(Error::InvalidConfig(format!(
            "exhaustive enumeration supports n ≤ {MAX_N}, got {}",
            s.n()
        )));
    }
    let frame = sums_frame(s)?;
    let x = s.x();

    let statistic_of = |y_perm: &[f64]| -> (f64, bool) {
        let sxy: f64 = x.iter().zip(y_perm).map(|(a, b)| a * b).sum();
        let r = (sxy - frame.up) / frame.down;
        resampled_statistic(r)
    };

    // The first arrangement visited is the identity, so abs_obs is the
    // enumerated statistic of the unpermuted data — bit-identical
    // arithmetic, making the ≥ comparison immune to rounding.
    let abs_obs = statistic_of(s.y()).0.abs();
    let mut total = 0usize;
    let mut at_least = 0usize;
    let mut degenerate_resamples = 0usize;
    let mut y = s.y().to_vec();
    heaps(&mut y, &mut |perm| {
        let (t, bad) = statistic_of(perm);
        total += 1;
        at_least += (t.abs() >= abs_obs) as usize;
        degenerate_resamples += bad as usize;
    });

    Ok(TestResult {
        statistic: frame.r_obs,
        pvalue: at_least as f64 / total as f64,
        method: Method::Naive,
        resamples_effective: total,
        degenerate_resamples,
        skipped_resamples: 0,
    })
}

/// Heap's algorithm: visit every arrangement of `items` exactly once,
/// starting with the current (identity) order.
fn heaps(items: &mut [f64], visit: &mut impl FnMut(&[f64])) {
    fn rec(k: usize, items: &mut [f64], visit: &mut impl FnMut(&[f64])) {
        if k <= 1 {
            visit(items);
            return;
        }
        for i in 0..k {
            rec(k - 1, items, visit);
            if k % 2 == 0 {
                items.swap(i, k - 1);
            } else {
                items.swap(0, k - 1);
            }
        }
    }
    rec(items.len(), items, visit);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statistics::pearson_r;

    fn sample(seed: u64, n: usize) -> PairedSample {
        let mut rng = RngState::new(seed).rng();
        let x: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
        PairedSample::new(x, y).unwrap()
    }

    #[test]
    fn efficient_matches_materialized_pairs() {
        let s = sample(3, 15);
        let plan = ResamplePlan::new(99).unwrap();
        let d = permcor_efficient_detail(&s, plan, RngState::new(5)).unwrap();
        assert_eq!(d.x_columns.len(), plan.b_side());
        assert_eq!(d.null.m(), plan.b_effective());
        for (i, xp) in d.x_columns.iter().enumerate() {
            for (j, yp) in d.y_columns.iter().enumerate() {
                // Definitional recomputation on the materialized pair.
                let pair = PairedSample::new(xp.clone(), yp.clone()).unwrap();
                let r = pearson_r(&pair).unwrap();
                let want = ((1.0 + r) / (1.0 - r)).ln();
                let got = d.null.values()[i * plan.b_side() + j];
                assert!(
                    (got - want).abs() < 1e-12,
                    "cell ({i},{j}): {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn deterministic_under_fixed_seed() {
        let s = sample(8, 20);
        let plan = ResamplePlan::new(199).unwrap();
        let a = permcor_efficient(&s, plan, RngState::new(42)).unwrap();
        let b = permcor_efficient(&s, plan, RngState::new(42)).unwrap();
        assert_eq!(a, b);
        let c = permcor_naive(&s, 199, RngState::new(42)).unwrap();
        let d = permcor_naive(&s, 199, RngState::new(42)).unwrap();
        assert_eq!(c, d);
    }

    #[test]
    fn affine_map_of_x_keeps_pvalue() {
        let s = sample(11, 25);
        let plan = ResamplePlan::new(499).unwrap();
        let base = permcor_efficient(&s, plan, RngState::new(7)).unwrap();
        let mapped = PairedSample::new(
            s.x().iter().map(|v| 2.5 * v - 3.0).collect(),
            s.y().to_vec(),
        )
        .unwrap();
        let moved = permcor_efficient(&mapped, plan, RngState::new(7)).unwrap();
        assert_eq!(base.pvalue, moved.pvalue);
        assert!((base.statistic - moved.statistic).abs() < 1e-12);
    }

    #[test]
    fn perfect_correlation_is_degenerate() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let s = PairedSample::new(x.clone(), x).unwrap();
        let plan = ResamplePlan::new(99).unwrap();
        assert!(matches!(
            permcor_efficient(&s, plan, RngState::new(1)),
            Err(Error::DegenerateCorrelation { .. })
        ));
    }

    #[test]
    fn constant_vector_rejected() {
        let s = PairedSample::new(vec![1.0; 8], (0..8).map(|i| i as f64).collect());
        let s = s.unwrap();
        assert!(matches!(
            permcor_naive(&s, 99, RngState::new(1)),
            Err(Error::ConstantVector)
        ));
    }

    #[test]
    fn tied_data_clamps_instead_of_erroring() {
        // With only two distinct values a permutation can reproduce
        // |r| = 1 exactly; the engine must clamp and count, not fail.
        let s = PairedSample::new(
            vec![0.0, 0.0, 1.0, 1.0],
            vec![0.0, 1.0, 0.0, 1.0],
        )
        .unwrap();
        let plan = ResamplePlan::new(400).unwrap();
        let res = permcor_efficient(&s, plan, RngState::new(2)).unwrap();
        assert!(res.degenerate_resamples > 0);
        assert!(res.pvalue > 0.0 && res.pvalue <= 1.0);
    }

    #[test]
    fn exhaustive_enumeration_matches_independent_recursion() {
        let s = sample(17, 6);
        let res = permcor_exhaustive(&s).unwrap();
        assert_eq!(res.resamples_effective, 720);

        // Independent oracle: lexicographic-style recursion over index
        // permutations with a definitional Pearson r per arrangement.
        let obs = pearson_r(&s).unwrap();
        let t_obs = ((1.0 + obs) / (1.0 - obs)).ln().abs();
        let mut count = 0usize;
        let mut idx: Vec<usize> = (0..6).collect();
        let mut total = 0usize;
        permute_indices(&mut idx, 0, &mut |perm| {
            let y: Vec<f64> = perm.iter().map(|&i| s.y()[i]).collect();
            let pair = PairedSample::new(s.x().to_vec(), y).unwrap();
            let r = pearson_r(&pair).unwrap();
            let t = ((1.0 + r) / (1.0 - r)).ln().abs();
            // The oracle compares with a strict-inequality guard band to
            // dodge last-ulp differences from its different sum order.
            total += 1;
            if t >= t_obs - 1e-9 {
                count += 1;
            }
        });
        assert_eq!(total, 720);
        assert_eq!(res.pvalue, count as f64 / 720.0);

        fn permute_indices(
            idx: &mut Vec<usize>,
            k: usize,
            visit: &mut impl FnMut(&[usize]),
        ) {
            if k == idx.len() {
                visit(idx);
                return;
            }
            for i in k..idx.len() {
                idx.swap(k, i);
                permute_indices(idx, k + 1, visit);
                idx.swap(k, i);
            }
        }
    }

    #[test]
    fn exhaustive_rejects_large_n() {
        let s = sample(1, 12);
        assert!(matches!(
            permcor_exhaustive(&s),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn pvalues_stay_in_bounds() {
        for seed in 0..20 {
            let s = sample(seed, 12);
            let plan = ResamplePlan::new(120).unwrap();
            let res = permcor_efficient(&s, plan, RngState::new(seed)).unwrap();
            let m = res.resamples_effective as f64;
            assert!(res.pvalue >= 1.0 / (m + 1.0) - 1e-15);
            assert!(res.pvalue <= 1.0);
        }
    }

    #[test]
    fn clamp_constant_matches_formula() {
        let r = 1.0 - DEGENERATE_CORRELATION_TOL;
        assert_eq!(MAX_FINITE_LOG_RATIO, ((1.0 + r) / (1.0 - r)).ln());
        // Any representable correlation below the threshold must rank
        // strictly under the clamp.
        let below = f64::from_bits(r.to_bits() - 1);
        assert!(((1.0 + below) / (1.0 - below)).ln() < MAX_FINITE_LOG_RATIO);
    }
}
