//! `resamp` — resampling-based hypothesis tests from the command line.
//!
//! Subcommands: `corr` (permutation test for Pearson correlation),
//! `ttest2` (bootstrap two-sample Welch t test), `james` (bootstrap
//! multivariate mean test), `batch` (column-wise ttest2 over a matrix),
//! `validate` (null-calibration simulation), `bench` (engine timings).
//!
//! Exit codes: 0 success, 1 usage error, 2 unreadable or malformed data,
//! 3 degenerate statistic (constant/singular input), 4 internal error.
//! Every subcommand is deterministic for a fixed `--seed`, independent of
//! `--threads`.

use std::fmt::Write as _;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use resamp::bench::{run_grid, speedup_svg, speedups, write_csv, GridSpec};
use resamp::io::{
    batch_welch, load_matrix, results_tsv, synthetic_matrix, ColumnOutcome, DataMatrix,
    GroupLabels, LoadOptions,
};
use resamp::linalg::Matrix;
use resamp::statistics::{corr_asymptotic_pvalue, summarize, welch_asymptotic_pvalue};
use resamp::validation::{simulate_null, NullSimConfig, TestKind};
use resamp::{
    boot_ttest2_efficient, boot_ttest2_naive, boot_ttest2_neto, james_boot_efficient,
    james_boot_ordinary, permcor_efficient, permcor_naive, Error, Method, MultivariateSample,
    PairedSample, ResamplePlan, RngState, TestResult,
};

#[derive(Parser)]
#[command(
    name = "resamp",
    version,
    about = "Resampling-based hypothesis tests (permutation and bootstrap)",
    long_about = "Resampling-based hypothesis tests (permutation and bootstrap).\n\
        Defaults across subcommands: B=999, seed=42, alpha=0.05, method=efficient.\n\
        Runs are byte-identical for a fixed seed, regardless of thread count."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Permutation test for Pearson correlation between two numeric vectors
    Corr(CorrArgs),
    /// Bootstrap two-sample Welch t test (unequal variances)
    Ttest2(Ttest2Args),
    /// Bootstrap James test: two multivariate means, unequal covariances
    James(JamesArgs),
    /// Two-sample test down every column of a data matrix
    Batch(BatchArgs),
    /// Simulate the null to check calibration and null quantiles
    Validate(ValidateArgs),
    /// Time engines over a grid of sizes; write CSV and speedup SVGs
    Bench(BenchArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Resampling method: asymptotic|naive|efficient (corr);
    /// +neto (ttest2/batch); efficient|ordinary (james)
    #[arg(long, default_value = "efficient")]
    method: String,

    /// Requested number of resamples (the efficient engines round to a
    /// perfect square)
    #[arg(short = 'B', long = "B", default_value_t = 999, value_name = "B")]
    b: usize,

    /// RNG seed; a fixed seed gives byte-identical output
    #[arg(long, default_value_t = 42)]
    seed: u64,

    /// Worker threads for parallel sections (0 = all cores)
    #[arg(long, default_value_t = 0)]
    threads: usize,

    /// Print a JSON document instead of human-readable lines
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct InputFormatArgs {
    /// Field delimiter: a single character, or "tab"/"comma"
    /// (default: auto-detect per file)
    #[arg(long)]
    delimiter: Option<String>,

    /// First line of each input file holds column names
    #[arg(long)]
    header: bool,

    /// First field of each data line is a row name
    #[arg(long)]
    rownames: bool,
}

#[derive(Args)]
struct CorrArgs {
    /// Input file: two numeric columns (x, y), or the x column when a
    /// second file is given
    input: String,

    /// Optional second file holding the y column
    y_input: Option<String>,

    #[command(flatten)]
    common: CommonArgs,

    #[command(flatten)]
    format: InputFormatArgs,
}

#[derive(Args)]
struct Ttest2Args {
    /// Input file: group 1 values (one column), or all values when
    /// --labels/--labels-file assigns rows to groups
    input: String,

    /// Optional second file holding group 2 values
    group2: Option<String>,

    /// Inline group labels, comma-separated (e.g. "a,a,b,b"); first label
    /// seen names group 1
    #[arg(long, conflicts_with = "group2")]
    labels: Option<String>,

    /// File of group labels, one per line
    #[arg(long, conflicts_with_all = ["group2", "labels"])]
    labels_file: Option<String>,

    #[command(flatten)]
    common: CommonArgs,

    #[command(flatten)]
    format: InputFormatArgs,
}

#[derive(Args)]
struct JamesArgs {
    /// Matrix file for sample 1 (rows = observations, columns = coordinates)
    y1: String,

    /// Matrix file for sample 2 (same column count)
    y2: String,

    #[command(flatten)]
    common: CommonArgs,

    #[command(flatten)]
    format: InputFormatArgs,
}

#[derive(Args)]
struct BatchArgs {
    /// Data matrix file (rows = observations, columns = features)
    #[arg(long, required_unless_present = "synthetic", conflicts_with = "synthetic")]
    input: Option<String>,

    /// Generate a standard-normal matrix with this many columns instead
    /// of reading a file (labels default to a half/half split)
    #[arg(long, value_name = "COLS")]
    synthetic: Option<usize>,

    /// Row count for --synthetic
    #[arg(long, default_value_t = 40)]
    rows: usize,

    /// Inline group labels, comma-separated; first label seen names group 1
    #[arg(long)]
    labels: Option<String>,

    /// File of group labels, one per line
    #[arg(long, conflicts_with = "labels")]
    labels_file: Option<String>,

    /// Rejection threshold used in the printed summary
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,

    /// Directory for results.tsv
    #[arg(long, default_value = ".")]
    output: String,

    #[command(flatten)]
    common: CommonArgs,

    #[command(flatten)]
    format: InputFormatArgs,
}

#[derive(Args)]
struct ValidateArgs {
    /// Which test's null to simulate: corr|welch|james
    #[arg(long)]
    test: String,

    /// Observations per vector (corr) or per group (welch/james)
    #[arg(long, default_value_t = 30)]
    n: usize,

    /// Dimension (james only)
    #[arg(long, default_value_t = 1)]
    d: usize,

    /// Number of independent null replications
    #[arg(long, default_value_t = 1000)]
    reps: usize,

    /// Nominal rejection level
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,

    /// Standard-deviation multiplier for group 2 (null still holds)
    #[arg(long, default_value_t = 1.0)]
    group2_scale: f64,

    /// Directory for the report JSON and quantile TSV
    #[arg(long, default_value = ".")]
    output: String,

    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct BenchArgs {
    /// Restrict to one test's grid: corr|welch|james (default: all three)
    #[arg(long)]
    test: Option<String>,

    /// Desk-scale preset (n ∈ {10,50,100}, B ∈ {999,9999}) instead of the
    /// full grid
    #[arg(long)]
    desk: bool,

    /// Timing repetitions per grid cell
    #[arg(long, default_value_t = 10)]
    reps: usize,

    /// Directory for bench.csv and speedup SVGs
    #[arg(long, default_value = ".")]
    output: String,

    /// Worker threads inside each timed engine call
    #[arg(long, default_value_t = 1)]
    threads: usize,

    /// RNG seed for the benchmark inputs
    #[arg(long, default_value_t = 42)]
    seed: u64,

    /// Print a JSON document instead of human-readable lines
    #[arg(long)]
    json: bool,
}

enum AppError {
    Usage(String),
    Lib(Error),
}

impl From<Error> for AppError {
    fn from(e: Error) -> Self {
        AppError::Lib(e)
    }
}

fn usage(msg: impl Into<String>) -> AppError {
    AppError::Usage(msg.into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap exits 2 on usage errors; this tool's contract is 1.
            let failed = e.use_stderr();
            let _ = e.print();
            return if failed { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(AppError::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("run with --help for usage");
            ExitCode::from(1)
        }
        Err(AppError::Lib(e)) => {
            eprintln!("error: {e}");
            let code = if e.is_degenerate() {
                3
            } else if e.is_data() {
                2
            } else {
                4
            };
            ExitCode::from(code)
        }
    }
}

fn run(command: Command) -> Result<(), AppError> {
    match command {
        Command::Corr(a) => cmd_corr(a),
        Command::Ttest2(a) => cmd_ttest2(a),
        Command::James(a) => cmd_james(a),
        Command::Batch(a) => cmd_batch(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Bench(a) => cmd_bench(a),
    }
}

/// Parse and validate `--method` for a subcommand before any file is read.
fn parse_method(s: &str, test: TestKind) -> Result<Method, AppError> {
    let method: Method = s
        .parse()
        .map_err(|_| usage(format!("unknown method {s:?}")))?;
    if !test.supports(method) {
        return Err(usage(format!(
            "method {method} is not available for the {test} test"
        )));
    }
    Ok(method)
}

fn parse_test_kind(s: &str) -> Result<TestKind, AppError> {
    s.parse()
        .map_err(|_| usage(format!("unknown test {s:?}, expected corr|welch|james")))
}

fn parse_delimiter(s: &str) -> Result<char, AppError> {
    match s {
        "tab" | "\\t" => Ok('\t'),
        "comma" => Ok(','),
        _ => {
            let mut chars = s.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) => Ok(c),
                _ => Err(usage(format!(
                    "delimiter must be a single character or \"tab\"/\"comma\", got {s:?}"
                ))),
            }
        }
    }
}

fn load_options(format: &InputFormatArgs) -> Result<LoadOptions, AppError> {
    let delimiter = match &format.delimiter {
        Some(s) => Some(parse_delimiter(s)?),
        None => None,
    };
    Ok(LoadOptions {
        delimiter,
        header: format.header,
        rownames: format.rownames,
    })
}

fn check_common(common: &CommonArgs) -> Result<(), AppError> {
    if common.b < 1 {
        return Err(usage("B must be ≥ 1"));
    }
    Ok(())
}

/// Size the global worker pool. Engines fork deterministic RNG streams
/// per task, so the thread count never changes results.
fn init_threads(threads: usize) -> Result<(), AppError> {
    if threads == 0 {
        return Ok(());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| AppError::Lib(Error::InvalidConfig(format!("thread pool: {e}"))))
}

/// Pull a complete (no missing cells) column out of a parsed matrix.
fn complete_column(m: &DataMatrix, j: usize, path: &str) -> Result<Vec<f64>, Error> {
    if m.n_cols() <= j {
        return Err(Error::Parse {
            path: path.into(),
            message: format!("need at least {} column(s), found {}", j + 1, m.n_cols()),
        });
    }
    if m.column_missing(j) > 0 {
        return Err(Error::Parse {
            path: path.into(),
            message: format!(
                "column {} has {} missing cell(s); this command needs complete data",
                j + 1,
                m.column_missing(j)
            ),
        });
    }
    Ok(m.column(j))
}

fn to_multivariate(m: &DataMatrix, path: &str) -> Result<MultivariateSample, Error> {
    let rows: Vec<Vec<f64>> = (0..m.n_rows())
        .map(|i| (0..m.n_cols()).map(|j| m.get(i, j)).collect())
        .collect();
    for j in 0..m.n_cols() {
        if m.column_missing(j) > 0 {
            return Err(Error::Parse {
                path: path.into(),
                message: format!("column {} has missing cell(s)", j + 1),
            });
        }
    }
    MultivariateSample::new(Matrix::from_rows(&rows)?)
}

fn flags_suffix(r: &TestResult) -> String {
    let mut s = String::new();
    if r.degenerate_resamples > 0 {
        let _ = write!(s, " degenerate_resamples={}", r.degenerate_resamples);
    }
    if r.skipped_resamples > 0 {
        let _ = write!(s, " skipped_resamples={}", r.skipped_resamples);
    }
    s
}

fn print_result(test: &str, n: usize, r: &TestResult, common: &CommonArgs) {
    if common.json {
        let doc = json!({
            "schema": "1",
            "test": test,
            "method": r.method.to_string(),
            "n": n,
            "b_requested": common.b,
            "seed": common.seed,
            "statistic": r.statistic,
            "pvalue": r.pvalue,
            "resamples_effective": r.resamples_effective,
            "degenerate_resamples": r.degenerate_resamples,
            "skipped_resamples": r.skipped_resamples,
        });
        println!("{doc}");
    } else {
        println!(
            "{test}: statistic={} pvalue={} method={} B_effective={}{}",
            r.statistic,
            r.pvalue,
            r.method,
            r.resamples_effective,
            flags_suffix(r)
        );
    }
}

fn cmd_corr(a: CorrArgs) -> Result<(), AppError> {
    let method = parse_method(&a.common.method, TestKind::Corr)?;
    check_common(&a.common)?;
    let opts = load_options(&a.format)?;
    init_threads(a.common.threads)?;

    let m = load_matrix(&a.input, opts)?;
    let (x, y) = match &a.y_input {
        Some(path) => {
            let y = load_matrix(path, opts)?;
            (
                complete_column(&m, 0, &a.input)?,
                complete_column(&y, 0, path)?,
            )
        }
        None => (
            complete_column(&m, 0, &a.input)?,
            complete_column(&m, 1, &a.input)?,
        ),
    };
    let sample = PairedSample::new(x, y)?;
    let n = sample.n();
    let state = RngState::new(a.common.seed);
    let result = match method {
        Method::Asymptotic => corr_asymptotic_pvalue(&sample)?,
        Method::Naive => permcor_naive(&sample, a.common.b, state)?,
        Method::Efficient => {
            permcor_efficient(&sample, ResamplePlan::new(a.common.b)?, state)?
        }
        _ => unreachable!("validated above"),
    };
    print_result("corr", n, &result, &a.common);
    Ok(())
}

fn cmd_ttest2(a: Ttest2Args) -> Result<(), AppError> {
    let method = parse_method(&a.common.method, TestKind::Welch)?;
    check_common(&a.common)?;
    if a.group2.is_none() && a.labels.is_none() && a.labels_file.is_none() {
        return Err(usage(
            "provide a second input file, or --labels/--labels-file to split the first",
        ));
    }
    let opts = load_options(&a.format)?;
    init_threads(a.common.threads)?;

    let m = load_matrix(&a.input, opts)?;
    let (x1, x2) = if let Some(path) = &a.group2 {
        let m2 = load_matrix(path, opts)?;
        (
            complete_column(&m, 0, &a.input)?,
            complete_column(&m2, 0, path)?,
        )
    } else {
        let labels = match (&a.labels, &a.labels_file) {
            (Some(inline), _) => GroupLabels::parse(inline)?,
            (None, Some(path)) => GroupLabels::parse(&std::fs::read_to_string(path).map_err(Error::from)?)?,
            (None, None) => unreachable!("checked above"),
        };
        let col = complete_column(&m, 0, &a.input)?;
        if labels.len() != col.len() {
            return Err(AppError::Lib(Error::LabelMismatch {
                labels: labels.len(),
                rows: col.len(),
            }));
        }
        labels.split(&col)
    };
    let n = x1.len() + x2.len();
    let state = RngState::new(a.common.seed);
    let result = match method {
        Method::Asymptotic => {
            let (s1, s2) = (summarize(&x1)?, summarize(&x2)?);
            welch_asymptotic_pvalue(&s1, &s2)?
        }
        Method::Naive => boot_ttest2_naive(&x1, &x2, a.common.b, state)?,
        Method::Efficient => {
            boot_ttest2_efficient(&x1, &x2, ResamplePlan::new(a.common.b)?, state)?
        }
        Method::Neto => boot_ttest2_neto(&x1, &x2, a.common.b, state)?,
        _ => unreachable!("validated above"),
    };
    print_result("ttest2", n, &result, &a.common);
    Ok(())
}

fn cmd_james(a: JamesArgs) -> Result<(), AppError> {
    let method = parse_method(&a.common.method, TestKind::James)?;
    check_common(&a.common)?;
    let opts = load_options(&a.format)?;
    init_threads(a.common.threads)?;

    let y1 = to_multivariate(&load_matrix(&a.y1, opts)?, &a.y1)?;
    let y2 = to_multivariate(&load_matrix(&a.y2, opts)?, &a.y2)?;
    let n = y1.n() + y2.n();
    let state = RngState::new(a.common.seed);
    let result = match method {
        Method::Efficient => {
            james_boot_efficient(&y1, &y2, ResamplePlan::new(a.common.b)?, state)?
        }
        Method::Ordinary => james_boot_ordinary(&y1, &y2, a.common.b, state)?,
        _ => unreachable!("validated above"),
    };
    print_result("james", n, &result, &a.common);
    Ok(())
}

fn cmd_batch(a: BatchArgs) -> Result<(), AppError> {
    let method = parse_method(&a.common.method, TestKind::Welch)?;
    check_common(&a.common)?;
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(usage("alpha must lie in (0,1)"));
    }
    if a.synthetic.is_none() && a.labels.is_none() && a.labels_file.is_none() {
        return Err(usage("provide --labels or --labels-file for --input data"));
    }
    let opts = load_options(&a.format)?;
    init_threads(a.common.threads)?;

    let m = match (&a.input, a.synthetic) {
        (Some(path), None) => load_matrix(path, opts)?,
        (None, Some(cols)) => {
            if cols < 1 || a.rows < 4 {
                return Err(usage("--synthetic needs ≥ 1 column and --rows ≥ 4"));
            }
            // Column data and engine streams come from separate forks so
            // the same seed never feeds both.
            synthetic_matrix(a.rows, cols, RngState::new(a.common.seed).child(u64::MAX))
        }
        _ => unreachable!("clap enforces exactly one source"),
    };
    let labels = match (&a.labels, &a.labels_file) {
        (Some(inline), _) => GroupLabels::parse(inline)?,
        (None, Some(path)) => {
            GroupLabels::parse(&std::fs::read_to_string(path).map_err(Error::from)?)?
        }
        (None, None) => GroupLabels::split_half(m.n_rows())?,
    };

    let results = batch_welch(&m, &labels, method, a.common.b, RngState::new(a.common.seed))?;

    std::fs::create_dir_all(&a.output).map_err(Error::from)?;
    let out_path = format!("{}/results.tsv", a.output.trim_end_matches('/'));
    std::fs::write(&out_path, results_tsv(&results)).map_err(Error::from)?;

    let mut tested = 0usize;
    let mut degenerate = 0usize;
    let mut skipped = 0usize;
    let mut rejected = 0usize;
    for r in &results {
        match &r.outcome {
            ColumnOutcome::Tested(t) => {
                tested += 1;
                if t.pvalue <= a.alpha {
                    rejected += 1;
                }
            }
            ColumnOutcome::Degenerate(_) => degenerate += 1,
            ColumnOutcome::Skipped(_) => skipped += 1,
        }
    }
    if a.common.json {
        let doc = json!({
            "schema": "1",
            "command": "batch",
            "method": method.to_string(),
            "b_requested": a.common.b,
            "seed": a.common.seed,
            "alpha": a.alpha,
            "columns": results.len(),
            "tested": tested,
            "degenerate": degenerate,
            "skipped": skipped,
            "rejected": rejected,
            "results": out_path,
        });
        println!("{doc}");
    } else {
        println!(
            "batch: {} columns (tested={tested} degenerate={degenerate} skipped={skipped}) \
             rejected at alpha={}: {rejected}",
            results.len(),
            a.alpha
        );
        println!("wrote {out_path}");
    }
    Ok(())
}

fn cmd_validate(a: ValidateArgs) -> Result<(), AppError> {
    let test = parse_test_kind(&a.test)?;
    let method = parse_method(&a.common.method, test)?;
    check_common(&a.common)?;
    init_threads(a.common.threads)?;

    let config = NullSimConfig {
        test,
        method,
        n: a.n,
        d: if test == TestKind::James { a.d } else { 1 },
        reps: a.reps,
        b: a.common.b,
        alpha: a.alpha,
        group2_scale: a.group2_scale,
    };
    let report = simulate_null(&config, RngState::new(a.common.seed))?;

    std::fs::create_dir_all(&a.output).map_err(Error::from)?;
    let base = format!("{}/null_{test}_{method}", a.output.trim_end_matches('/'));
    let json_path = format!("{base}.json");
    let tsv_path = format!("{base}_quantiles.tsv");
    std::fs::write(&json_path, report.to_json()).map_err(Error::from)?;
    std::fs::write(&tsv_path, report.quantile_tsv()).map_err(Error::from)?;

    if a.common.json {
        println!("{}", report.to_json());
    } else {
        println!(
            "validate {test}/{method}: n={} d={} reps={} B={} rejection_rate={} ks={}",
            report.n, report.d, report.reps, report.b, report.rejection_rate,
            report.pvalue_ks_distance
        );
        println!("wrote {json_path}");
        println!("wrote {tsv_path}");
    }
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> Result<(), AppError> {
    let tests = match &a.test {
        Some(s) => vec![parse_test_kind(s)?],
        None => vec![TestKind::Corr, TestKind::Welch, TestKind::James],
    };
    if a.reps < 1 {
        return Err(usage("reps must be ≥ 1"));
    }
    if a.threads < 1 {
        return Err(usage("threads must be ≥ 1"));
    }

    std::fs::create_dir_all(&a.output).map_err(Error::from)?;
    let dir = a.output.trim_end_matches('/').to_string();
    let state = RngState::new(a.seed);

    let mut all_records = Vec::new();
    let mut svg_paths = Vec::new();
    let mut lines = Vec::new();
    for (i, &test) in tests.iter().enumerate() {
        let mut spec = if a.desk {
            GridSpec::desk(test)
        } else {
            GridSpec::full(test)
        };
        spec.reps = a.reps;
        spec.threads = a.threads;
        lines.push(format!(
            "bench {test}: {} sizes x {} B values x {} methods, reps={}, threads={}",
            spec.ns.len(),
            spec.bs.len(),
            spec.methods.len(),
            spec.reps,
            spec.threads
        ));
        let records = run_grid(&spec, state.child(i as u64))?;

        let baseline = match test {
            TestKind::James => Method::Ordinary,
            _ => Method::Naive,
        };
        let ratios = speedups(&records, baseline, Method::Efficient)?;
        let svg_path = format!("{dir}/speedup_{test}.svg");
        std::fs::write(&svg_path, speedup_svg(&ratios)?).map_err(Error::from)?;
        svg_paths.push(svg_path);
        all_records.extend(records);
    }

    let csv_path = format!("{dir}/bench.csv");
    std::fs::write(&csv_path, write_csv(&all_records)).map_err(Error::from)?;

    // Timings go only to the CSV/SVG artifacts; stdout stays
    // byte-identical across runs so the command's console output is
    // seed-deterministic like every other subcommand.
    if a.json {
        let doc = json!({
            "schema": "1",
            "command": "bench",
            "seed": a.seed,
            "desk": a.desk,
            "records": all_records.len(),
            "csv": csv_path,
            "svgs": svg_paths,
        });
        println!("{doc}");
    } else {
        for line in &lines {
            println!("{line}");
        }
        println!("wrote {csv_path}");
        for p in &svg_paths {
            println!("wrote {p}");
        }
    }
    Ok(())
}

// Keep the derive honest: clap validates the whole command tree at test
// time instead of first use.
#[test]
fn cli_definition_is_consistent() {
    use clap::CommandFactory;
    Cli::command().debug_assert();
}
