//! Dataset ingestion and the batch column-wise Welch workload.
//!
//! A [`DataMatrix`] holds an observations × features table parsed from
//! CSV/TSV; [`batch_welch`] runs a two-sample test down every column
//! against a binary group labeling, skipping columns with missing cells
//! and flagging all-constant columns instead of aborting. Results render
//! to a TSV table that parses back losslessly.

use rayon::prelude::*;

use crate::engines::{boot_ttest2_efficient, boot_ttest2_naive, boot_ttest2_neto};
use crate::error::{Error, Result};
use crate::sampling::{ResamplePlan, RngState};
use crate::statistics::{summarize, welch_asymptotic_pvalue, Method, TestResult};

/// Rectangular numeric table; cells are finite numbers or missing.
/// Missing cells are stored as NaN and tallied per column — column-level
/// analyses skip any column containing one.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    n_rows: usize,
    n_cols: usize,
    /// Row-major values; NaN marks a missing cell.
    values: Vec<f64>,
    missing_per_col: Vec<usize>,
    column_names: Option<Vec<String>>,
    row_names: Option<Vec<String>>,
}

impl DataMatrix {
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n_cols + col]
    }

    /// Copy of column `j` (length n_rows; NaN where missing).
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.get(i, j)).collect()
    }

    pub fn column_missing(&self, j: usize) -> usize {
        self.missing_per_col[j]
    }

    pub fn column_names(&self) -> Option<&[String]> {
        self.column_names.as_deref()
    }

    pub fn row_names(&self) -> Option<&[String]> {
        self.row_names.as_deref()
    }

    /// Display name of column `j`: the header name when present, else a
    /// 1-based positional name (`col1`, `col2`, …).
    pub fn column_name(&self, j: usize) -> String {
        match &self.column_names {
            Some(names) => names[j].clone(),
            None => format!("col{}", j + 1),
        }
    }
}

/// Parsing options for [`load_matrix`].
#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Field delimiter; `None` auto-detects: tab if the first line
    /// contains one, comma otherwise.
    pub delimiter: Option<char>,
    /// First line holds column names.
    pub header: bool,
    /// First field of every data line is a row name (with `header`, the
    /// header's leading field is discarded).
    pub rownames: bool,
}

/// Parse a delimited numeric matrix from a file.
///
/// Cells must be finite decimal numbers; an empty cell or the literal
/// `NA` marks a missing value. Errors carry 1-based file coordinates.
pub fn load_matrix(path: &str, options: LoadOptions) -> Result<DataMatrix> {
    let text = std::fs::read_to_string(path)?;
    parse_matrix(&text, path, options)
}

/// [`load_matrix`] on in-memory text; `path` only labels errors.
pub fn parse_matrix(text: &str, path: &str, options: LoadOptions) -> Result<DataMatrix> {
    let delimiter = options.delimiter.unwrap_or_else(|| {
        match text.lines().next() {
            Some(line) if line.contains('\t') => '\t',
            _ => ',',
        }
    });

    let mut lines = text.lines().enumerate();
    let mut column_names = None;
    if options.header {
        let (_, line) = lines.next().ok_or_else(|| Error::Parse {
            path: path.into(),
            message: "empty file, expected a header line".into(),
        })?;
        let mut fields: Vec<String> = line.split(delimiter).map(str::to_owned).collect();
        if options.rownames && !fields.is_empty() {
            fields.remove(0);
        }
        column_names = Some(fields);
    }

    let mut values = Vec::new();
    let mut row_names = options.rownames.then(Vec::new);
    let mut n_cols = None;
    let mut missing_per_col: Vec<usize> = Vec::new();
    let mut n_rows = 0usize;

    for (idx, line) in lines {
        let file_row = idx + 1; // lines() is 0-based; errors are 1-based
        let mut fields: Vec<&str> = line.split(delimiter).collect();
        if options.rownames {
            if fields.is_empty() {
                return Err(Error::RaggedRows {
                    path: path.into(),
                    row: file_row,
                    got: 0,
                    expected: n_cols.unwrap_or(1),
                });
            }
            row_names.as_mut().unwrap().push(fields.remove(0).to_owned());
        }
        let expected = *n_cols.get_or_insert(fields.len());
        if fields.len() != expected {
            return Err(Error::RaggedRows {
                path: path.into(),
                row: file_row,
                got: fields.len(),
                expected,
            });
        }
        if missing_per_col.is_empty() {
            missing_per_col = vec![0; expected];
        }
        for (j, raw) in fields.iter().enumerate() {
            let cell = raw.trim();
            // 1-based file column, counting the row-name field if present.
            let file_col = j + 1 + options.rownames as usize;
            if cell.is_empty() || cell == "NA" {
                values.push(f64::NAN);
                missing_per_col[j] += 1;
                continue;
            }
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => values.push(v),
                _ => {
                    return Err(Error::NonNumericCell {
                        path: path.into(),
                        row: file_row,
                        col: file_col,
                        contents: cell.to_owned(),
                    })
                }
            }
        }
        n_rows += 1;
    }

    let n_cols = n_cols.ok_or_else(|| Error::Parse {
        path: path.into(),
        message: "no data rows".into(),
    })?;
    if let Some(names) = &column_names {
        if names.len() != n_cols {
            return Err(Error::Parse {
                path: path.into(),
                message: format!(
                    "header names {} columns but rows have {n_cols}",
                    names.len()
                ),
            });
        }
    }

    Ok(DataMatrix {
        n_rows,
        n_cols,
        values,
        missing_per_col,
        column_names,
        row_names,
    })
}

/// Binary group assignment over rows. The label seen first in the input
/// names group 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupLabels {
    /// true → row belongs to group 1.
    in_group1: Vec<bool>,
    names: (String, String),
}

impl GroupLabels {
    /// Build from one label token per row. Exactly two distinct labels
    /// must appear, each at least twice.
    pub fn new<S: AsRef<str>>(tokens: &[S]) -> Result<Self> {
        let mut names: Vec<&str> = Vec::new();
        for t in tokens {
            let t = t.as_ref();
            if !names.contains(&t) {
                names.push(t);
            }
        }
        if names.len() != 2 {
            return Err(Error::LabelGroups { got: names.len() });
        }
        let in_group1: Vec<bool> = tokens.iter().map(|t| t.as_ref() == names[0]).collect();
        let n1 = in_group1.iter().filter(|&&g| g).count();
        let n2 = in_group1.len() - n1;
        if n1.min(n2) < 2 {
            return Err(Error::TooFewObservations {
                got: n1.min(n2),
                need: 2,
            });
        }
        Ok(GroupLabels {
            in_group1,
            names: (names[0].to_owned(), names[1].to_owned()),
        })
    }

    /// Parse labels from text: one token per line, or comma-separated on
    /// a single line. Blank tokens are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let tokens: Vec<&str> = text
            .split(|c: char| c == '\n' || c == '\r' || c == ',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .collect();
        GroupLabels::new(&tokens)
    }

    /// g1 for the first half of the rows, g2 for the rest.
    pub fn split_half(n: usize) -> Result<Self> {
        let tokens: Vec<&str> = (0..n).map(|i| if i < n / 2 { "g1" } else { "g2" }).collect();
        GroupLabels::new(&tokens)
    }

    pub fn len(&self) -> usize {
        self.in_group1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.in_group1.is_empty()
    }

    pub fn group_names(&self) -> (&str, &str) {
        (&self.names.0, &self.names.1)
    }

    /// Split a column into (group 1, group 2) values by row.
    pub fn split(&self, column: &[f64]) -> (Vec<f64>, Vec<f64>) {
        debug_assert_eq!(column.len(), self.in_group1.len());
        let mut g1 = Vec::new();
        let mut g2 = Vec::new();
        for (&v, &first) in column.iter().zip(&self.in_group1) {
            if first {
                g1.push(v);
            } else {
                g2.push(v);
            }
        }
        (g1, g2)
    }
}

/// Outcome of one column in a batch run.
#[derive(Debug, Clone, PartialEq)]
pub enum ColumnOutcome {
    /// Engine ran normally.
    Tested(TestResult),
    /// Column constant within both groups: statistic pinned to 0, p to 1.
    Degenerate(TestResult),
    /// Column not tested; the string says why (e.g. missing cells).
    Skipped(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnResult {
    pub name: String,
    pub outcome: ColumnOutcome,
}

impl ColumnResult {
    pub fn pvalue(&self) -> Option<f64> {
        match &self.outcome {
            ColumnOutcome::Tested(r) | ColumnOutcome::Degenerate(r) => Some(r.pvalue),
            ColumnOutcome::Skipped(_) => None,
        }
    }
}

/// Run the requested two-sample engine down every column of `m`.
///
/// Column `j` draws its randomness from `state.child(j)` — keyed by
/// position, so a column's result is a pure function of (its values, its
/// position, the seed) and the run parallelizes without reordering
/// anything. Columns with missing cells are skipped with a reason;
/// columns whose observed statistic is degenerate (constant data) report
/// statistic 0 and p-value 1 with a flag.
pub fn batch_welch(
    m: &DataMatrix,
    labels: &GroupLabels,
    method: Method,
    b: usize,
    state: RngState,
) -> Result<Vec<ColumnResult>> {
    if labels.len() != m.n_rows() {
        return Err(Error::LabelMismatch {
            labels: labels.len(),
            rows: m.n_rows(),
        });
    }
    if !matches!(
        method,
        Method::Asymptotic | Method::Naive | Method::Efficient | Method::Neto
    ) {
        return Err(Error::InvalidConfig(format!(
            "method {method} not available for the two-sample batch"
        )));
    }
    let plan = ResamplePlan::new(b)?;

    (0..m.n_cols())
        .into_par_iter()
        .map(|j| {
            let name = m.column_name(j);
            let missing = m.column_missing(j);
            if missing > 0 {
                return Ok(ColumnResult {
                    name,
                    outcome: ColumnOutcome::Skipped(format!(
                        "{missing} missing cell(s); column not resampled"
                    )),
                });
            }
            let (x1, x2) = labels.split(&m.column(j));
            let sub = state.child(j as u64);
            let run = match method {
                Method::Asymptotic => {
                    summarize(&x1).and_then(|s1| {
                        summarize(&x2).and_then(|s2| welch_asymptotic_pvalue(&s1, &s2))
                    })
                }
                Method::Naive => boot_ttest2_naive(&x1, &x2, b, sub),
                Method::Efficient => boot_ttest2_efficient(&x1, &x2, plan, sub),
                Method::Neto => boot_ttest2_neto(&x1, &x2, b, sub),
                _ => unreachable!("validated above"),
            };
            match run {
                Ok(result) => Ok(ColumnResult {
                    name,
                    outcome: ColumnOutcome::Tested(result),
                }),
                Err(e) if e.is_degenerate() => Ok(ColumnResult {
                    name,
                    outcome: ColumnOutcome::Degenerate(TestResult {
                        statistic: 0.0,
                        pvalue: 1.0,
                        method,
                        resamples_effective: 0,
                        degenerate_resamples: 0,
                        skipped_resamples: 0,
                    }),
                }),
                Err(e) => Err(e),
            }
        })
        .collect()
}

pub const RESULTS_HEADER: &str = "name\tstatistic\tpvalue\tmethod\tresamples_effective\tflags";

fn sanitize_field(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

/// Render batch results as TSV. Numeric cells use 17 significant digits,
/// enough to reparse the exact f64; skipped columns carry `NA` values and
/// the reason inside the flags field.
pub fn results_tsv(results: &[ColumnResult]) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for r in results {
        let (stat, p, method, b_eff, flags) = match &r.outcome {
            ColumnOutcome::Tested(t) => {
                let mut flags = Vec::new();
                if t.degenerate_resamples > 0 {
                    flags.push(format!("degenerate_resamples={}", t.degenerate_resamples));
                }
                if t.skipped_resamples > 0 {
                    flags.push(format!("skipped_resamples={}", t.skipped_resamples));
                }
                (
                    format!("{:.16e}", t.statistic),
                    format!("{:.16e}", t.pvalue),
                    t.method.to_string(),
                    t.resamples_effective.to_string(),
                    flags.join(";"),
                )
            }
            ColumnOutcome::Degenerate(t) => (
                format!("{:.16e}", t.statistic),
                format!("{:.16e}", t.pvalue),
                t.method.to_string(),
                t.resamples_effective.to_string(),
                "degenerate".to_string(),
            ),
            ColumnOutcome::Skipped(reason) => (
                "NA".to_string(),
                "NA".to_string(),
                "none".to_string(),
                "0".to_string(),
                format!("skipped={}", sanitize_field(reason)),
            ),
        };
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            sanitize_field(&r.name),
            stat,
            p,
            method,
            b_eff,
            flags
        ));
    }
    out
}

/// Inverse of [`results_tsv`]. Counter flags are folded back into the
/// result; degenerate and skipped rows reconstruct their variants.
pub fn parse_results(text: &str) -> Result<Vec<ColumnResult>> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header != RESULTS_HEADER {
        return Err(Error::Parse {
            path: "<tsv>".into(),
            message: format!("unexpected header {header:?}"),
        });
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 6 {
            return Err(Error::Parse {
                path: "<tsv>".into(),
                message: format!("row {}: expected 6 fields, got {}", i + 2, f.len()),
            });
        }
        let name = f[0].to_owned();
        let outcome = if let Some(reason) = f[5].strip_prefix("skipped=") {
            ColumnOutcome::Skipped(reason.to_owned())
        } else {
            let bad = |what: &str| Error::Parse {
                path: "<tsv>".into(),
                message: format!("row {}: bad {what}", i + 2),
            };
            let mut result = TestResult {
                statistic: f[1].parse().map_err(|_| bad("statistic"))?,
                pvalue: f[2].parse().map_err(|_| bad("pvalue"))?,
                method: f[3].parse().map_err(|_| bad("method"))?,
                resamples_effective: f[4].parse().map_err(|_| bad("resamples_effective"))?,
                degenerate_resamples: 0,
                skipped_resamples: 0,
            };
            if f[5] == "degenerate" {
                ColumnOutcome::Degenerate(result)
            } else {
                for flag in f[5].split(';').filter(|s| !s.is_empty()) {
                    if let Some(v) = flag.strip_prefix("degenerate_resamples=") {
                        result.degenerate_resamples =
                            v.parse().map_err(|_| bad("degenerate_resamples"))?;
                    } else if let Some(v) = flag.strip_prefix("skipped_resamples=") {
                        result.skipped_resamples =
                            v.parse().map_err(|_| bad("skipped_resamples"))?;
                    } else {
                        return Err(bad("flags"));
                    }
                }
                ColumnOutcome::Tested(result)
            }
        };
        out.push(ColumnResult { name, outcome });
    }
    Ok(out)
}

/// Write batch results to a TSV file.
pub fn write_results(results: &[ColumnResult], path: &str) -> Result<()> {
    std::fs::write(path, results_tsv(results))?;
    Ok(())
}

/// Standard-normal synthetic matrix of the batch workload's shape class
/// (rows = observations, columns = features), with positional column
/// names. Entries are drawn column by column from forked sub-streams, so
/// any leading submatrix of a bigger generation is reproducible.
pub fn synthetic_matrix(n_rows: usize, n_cols: usize, state: RngState) -> DataMatrix {
    let mut values = vec![0.0; n_rows * n_cols];
    let columns: Vec<Vec<f64>> = state
        .fork(n_cols)
        .par_iter()
        .map(|sub| {
            let mut rng = sub.rng();
            (0..n_rows).map(|_| rng.standard_normal()).collect()
        })
        .collect();
    for (j, col) in columns.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            values[i * n_cols + j] = v;
        }
    }
    DataMatrix {
        n_rows,
        n_cols,
        values,
        missing_per_col: vec![0; n_cols],
        column_names: Some((1..=n_cols).map(|j| format!("col{j}")).collect()),
        row_names: None,
    }
}
