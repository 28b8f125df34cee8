//! Bootstrap tests on James's two-sample statistic for multivariate
//! means with unequal covariances:
//!
//! T = (m₁ − m₂)ᵀ (S₁/n₁ + S₂/n₂)⁻¹ (m₁ − m₂),
//!
//! with S_k the unbiased sample covariance of group k. The null model
//! shifts both groups onto the generalized-least-squares common mean and
//! resamples rows with replacement; resampled statistics use the same
//! S*/n_k covariance convention as the observed one, so the d = 1 case
//! collapses exactly to the squared bootstrap Welch t.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{common_mean_center, means_and_covariance, Matrix, SpdMatrix};
use crate::sampling::{bootstrap_indices, ResamplePlan, RngState};
use crate::statistics::{james_stat, Method, MultivariateSample, TestResult};

use super::{pvalue_from_null, EngineStats, NullStats, Sidedness};

/// Row-resample a multivariate sample: row i of the output is row
/// `indices[i]` of the input.
pub fn materialize_rows(s: &MultivariateSample, indices: &[usize]) -> MultivariateSample {
    let d = s.dim();
    let mut out = Matrix::zeros(indices.len(), d);
    for (r, &i) in indices.iter().enumerate() {
        for c in 0..d {
            out.set(r, c, s.row(i)[c]);
        }
    }
    MultivariateSample::from_validated(out)
}

fn observed_statistic(y1: &MultivariateSample, y2: &MultivariateSample) -> Result<f64> {
    if y1.dim() != y2.dim() {
        return Err(Error::DimensionMismatch {
            left: y1.dim(),
            right: y2.dim(),
        });
    }
    let (m1, s1) = means_and_covariance(y1);
    let (m2, s2) = means_and_covariance(y2);
    let v = s1
        .scale(1.0 / y1.n() as f64)
        .add(&s2.scale(1.0 / y2.n() as f64))?;
    james_stat(&m1, &m2, &v)
}

/// Per-resample cache for the cross-combination grid: the mean vector and
/// the already-scaled S*/n_k term.
struct SideResample {
    indices: Vec<usize>,
    mean: Vec<f64>,
    vterm: SpdMatrix,
}

fn side_resamples(
    centered: &MultivariateSample,
    subs: &[RngState],
) -> Vec<SideResample> {
    let n = centered.n() as f64;
    subs.par_iter()
        .map(|sub| {
            let indices = bootstrap_indices(centered.n(), &mut sub.rng());
            let resample = materialize_rows(centered, &indices);
            let (mean, cov) = means_and_covariance(&resample);
            SideResample {
                indices,
                mean,
                vterm: cov.scale(1.0 / n),
            }
        })
        .collect()
}

/// Cross-combination engine internals for verification: the bootstrap
/// index vectors per side plus the centered samples let an oracle rebuild
/// any grid cell from first principles.
#[derive(Debug, Clone)]
pub struct JamesDetail {
    pub result: TestResult,
    pub null: NullStats,
    pub resample_indices: (Vec<Vec<usize>>, Vec<Vec<usize>>),
    pub centered: (MultivariateSample, MultivariateSample),
    pub ops: EngineStats,
}

/// Cross-combination bootstrap James test: `B_side` row-resamples per
/// group, each summarized once into (mean, S*/n_k); every pairing costs
/// one matrix add and one SPD solve. A cell whose summed covariance is
/// numerically singular is skipped and counted — with both terms formed
/// from real resamples this effectively never happens, so no retry is
/// attempted.
pub fn james_boot_efficient(
    y1: &MultivariateSample,
    y2: &MultivariateSample,
    plan: ResamplePlan,
    state: RngState,
) -> Result<TestResult> {
    Ok(james_boot_efficient_detail(y1, y2, plan, state)?.result)
}

pub fn james_boot_efficient_detail(
    y1: &MultivariateSample,
    y2: &MultivariateSample,
    plan: ResamplePlan,
    state: RngState,
) -> Result<JamesDetail> {
    let t_obs = observed_statistic(y1, y2)?;
    let (c1, c2) = common_mean_center(y1, y2)?;
    let b = plan.b_side();

    let subs = state.fork(2 * b);
    let side1 = side_resamples(&c1, &subs[..b]);
    let side2 = side_resamples(&c2, &subs[b..]);

    let rows: Vec<(Vec<f64>, usize)> = side1
        .par_iter()
        .map(|a| {
            let mut row = Vec::with_capacity(b);
            let mut skipped = 0usize;
            for c in &side2 {
                let cell = a
                    .vterm
                    .add(&c.vterm)
                    .and_then(|v| james_stat(&a.mean, &c.mean, &v));
                match cell {
                    Ok(t) => row.push(t),
                    Err(_) => skipped += 1,
                }
            }
            (row, skipped)
        })
        .collect();

    let mut values = Vec::with_capacity(b * b);
    let mut skipped_resamples = 0;
    for (row, skipped) in rows {
        values.extend(row);
        skipped_resamples += skipped;
    }
    let null = NullStats::new(values, Sidedness::OneSidedGreater)?;
    let pvalue = pvalue_from_null(t_obs, &null);

    Ok(JamesDetail {
        result: TestResult {
            statistic: t_obs,
            pvalue,
            method: Method::Efficient,
            resamples_effective: null.m(),
            degenerate_resamples: 0,
            skipped_resamples,
        },
        null,
        resample_indices: (
            side1.into_iter().map(|s| s.indices).collect(),
            side2.into_iter().map(|s| s.indices).collect(),
        ),
        centered: (c1, c2),
        ops: EngineStats {
            resamples: 2 * b,
            covariances: 2 * b,
            spd_solves: b * b,
            ..EngineStats::default()
        },
    })
}

/// Ordinary bootstrap baseline: B iterations, each drawing one resample
/// per group and recomputing both covariances and the statistic. An
/// iteration whose summed covariance is singular retries once with a
/// fresh draw; a second failure drops the iteration (counted, and the
/// null sample shrinks by one).
pub fn james_boot_ordinary(
    y1: &MultivariateSample,
    y2: &MultivariateSample,
    b: usize,
    state: RngState,
) -> Result<TestResult> {
    Ok(james_boot_ordinary_detail(y1, y2, b, state)?.result)
}

pub fn james_boot_ordinary_detail(
    y1: &MultivariateSample,
    y2: &MultivariateSample,
    b: usize,
    state: RngState,
) -> Result<JamesDetail> {
    if b < 1 {
        return Err(Error::EmptyResamplePlan);
    }
    let t_obs = observed_statistic(y1, y2)?;
    let (c1, c2) = common_mean_center(y1, y2)?;
    let (n1, n2) = (c1.n() as f64, c2.n() as f64);

    let one_draw = |state: &RngState| -> (Result<f64>, Vec<usize>, Vec<usize>) {
        let mut rng = state.rng();
        let ix1 = bootstrap_indices(c1.n(), &mut rng);
        let ix2 = bootstrap_indices(c2.n(), &mut rng);
        let (m1, s1) = means_and_covariance(&materialize_rows(&c1, &ix1));
        let (m2, s2) = means_and_covariance(&materialize_rows(&c2, &ix2));
        let value = s1
            .scale(1.0 / n1)
            .add(&s2.scale(1.0 / n2))
            .and_then(|v| james_stat(&m1, &m2, &v));
        (value, ix1, ix2)
    };

    struct Cell {
        value: Option<f64>,
        retried: bool,
        ix1: Vec<usize>,
        ix2: Vec<usize>,
    }

    let cells: Vec<Cell> = state
        .fork(b)
        .par_iter()
        .map(|sub| {
            let (first, ix1, ix2) = one_draw(sub);
            match first {
                Ok(t) => Cell { value: Some(t), retried: false, ix1, ix2 },
                Err(_) => {
                    let (second, ix1, ix2) = one_draw(&sub.child(0));
                    Cell { value: second.ok(), retried: true, ix1, ix2 }
                }
            }
        })
        .collect();

    let mut values = Vec::with_capacity(b);
    let mut skipped_resamples = 0;
    let mut extra_draws = 0;
    let mut idx1 = Vec::with_capacity(b);
    let mut idx2 = Vec::with_capacity(b);
    for cell in cells {
        match cell.value {
            Some(t) => values.push(t),
            None => skipped_resamples += 1,
        }
        extra_draws += cell.retried as usize;
        idx1.push(cell.ix1);
        idx2.push(cell.ix2);
    }
    let null = NullStats::new(values, Sidedness::OneSidedGreater)?;
    let pvalue = pvalue_from_null(t_obs, &null);

    Ok(JamesDetail {
        result: TestResult {
            statistic: t_obs,
            pvalue,
            method: Method::Ordinary,
            resamples_effective: null.m(),
            degenerate_resamples: 0,
            skipped_resamples,
        },
        null,
        resample_indices: (idx1, idx2),
        centered: (c1, c2),
        ops: EngineStats {
            resamples: 2 * (b + extra_draws),
            covariances: 2 * (b + extra_draws),
            spd_solves: b + extra_draws,
            ..EngineStats::default()
        },
    })
}
