//! Timing harness for the resampling engines.
//!
//! Each measurement draws fresh input data per repetition (untimed),
//! runs the engine once inside a dedicated thread pool, and records
//! wall-clock seconds; the record keeps the median (primary, robust to
//! scheduler noise) and mean over repetitions plus the thread count the
//! engine ran with — timings default to one thread for stability.
//! Speed-up factors divide a baseline engine's median by a candidate's
//! at the same (test, n, B) cell, and can be rendered as a
//! self-contained SVG line chart (factor vs n, one series per B).
//!
//! Wall-clock numbers are hardware-bound; the hardware-independent
//! performance surface is the engines' operation counters
//! ([`crate::engines::EngineStats`]), which the tests pin exactly.

use std::time::Instant;

use serde::Serialize;

use crate::engines::{
    boot_ttest2_efficient, boot_ttest2_naive, boot_ttest2_neto, james_boot_efficient,
    james_boot_ordinary, permcor_efficient, permcor_naive,
};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::sampling::{ResamplePlan, Rng, RngState};
use crate::statistics::{
    corr_asymptotic_pvalue, summarize, welch_asymptotic_pvalue, Method, MultivariateSample,
    PairedSample,
};
use crate::validation::TestKind;

/// One timed grid cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRecord {
    pub test: TestKind,
    pub method: Method,
    /// Observations per vector/group.
    pub n: usize,
    pub d: usize,
    pub b: usize,
    pub reps: usize,
    pub median_seconds: f64,
    pub mean_seconds: f64,
    /// Thread-pool size the engine ran with.
    pub threads: usize,
}

/// Ratio of two engines' medians at one grid cell; factor > 1 means the
/// candidate is faster than the baseline.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeedupRecord {
    pub test: TestKind,
    pub n: usize,
    pub b: usize,
    pub baseline: Method,
    pub candidate: Method,
    pub factor: f64,
}

/// What to time: one engine at one size.
#[derive(Debug, Clone, Copy)]
pub struct BenchConfig {
    pub test: TestKind,
    pub method: Method,
    pub n: usize,
    pub d: usize,
    pub b: usize,
    /// Engine thread-pool size (1 = stable single-threaded timing).
    pub threads: usize,
}

impl BenchConfig {
    fn validate(&self) -> Result<()> {
        if !self.test.supports(self.method) {
            return Err(Error::InvalidConfig(format!(
                "method {} not available for test {}",
                self.method, self.test
            )));
        }
        if self.b < 1 {
            return Err(Error::EmptyResamplePlan);
        }
        if self.threads < 1 {
            return Err(Error::InvalidConfig("threads must be ≥ 1".into()));
        }
        if self.d != 1 && self.test != TestKind::James {
            return Err(Error::InvalidConfig(format!(
                "d={} only valid for the james test",
                self.d
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

/// Freshly generated input for one repetition, with a content hash so the
/// harness can verify the engine did not mutate it.
enum BenchInput {
    Corr(PairedSample),
    Welch(Vec<f64>, Vec<f64>),
    James(MultivariateSample, MultivariateSample),
}

impl BenchInput {
    fn generate(config: &BenchConfig, rng: &mut Rng) -> Self {
        let n = config.n;
        let normals = |rng: &mut Rng, k: usize| -> Vec<f64> {
            (0..k).map(|_| rng.standard_normal()).collect()
        };
        match config.test {
            TestKind::Corr => {
                let x = normals(rng, n);
                let y = normals(rng, n);
                BenchInput::Corr(PairedSample::new(x, y).expect("generated sample"))
            }
            TestKind::Welch => BenchInput::Welch(normals(rng, n), normals(rng, n)),
            TestKind::James => {
                let mat = |rng: &mut Rng| {
                    let mut m = Matrix::zeros(n, config.d);
                    for i in 0..n {
                        for j in 0..config.d {
                            m.set(i, j, rng.standard_normal());
                        }
                    }
                    MultivariateSample::new(m).expect("generated sample")
                };
                BenchInput::James(mat(rng), mat(rng))
            }
        }
    }

    fn content_hash(&self) -> u64 {
        fn feed(h: &mut u64, xs: &[f64]) {
            for &x in xs {
                *h ^= x.to_bits();
                *h = h.wrapping_mul(0x100000001b3);
            }
        }
        let mut h = 0xcbf29ce484222325u64;
        match self {
            BenchInput::Corr(s) => {
                feed(&mut h, s.x());
                feed(&mut h, s.y());
            }
            BenchInput::Welch(a, b) => {
                feed(&mut h, a);
                feed(&mut h, b);
            }
            BenchInput::James(a, b) => {
                feed(&mut h, a.matrix().data());
                feed(&mut h, b.matrix().data());
            }
        }
        h
    }

    fn run(&self, config: &BenchConfig, engine_state: RngState) -> Result<()> {
        let plan = ResamplePlan::new(config.b)?;
        match (self, config.method) {
            (BenchInput::Corr(s), Method::Asymptotic) => {
                corr_asymptotic_pvalue(s)?;
            }
            (BenchInput::Corr(s), Method::Naive) => {
                permcor_naive(s, config.b, engine_state)?;
            }
            (BenchInput::Corr(s), Method::Efficient) => {
                permcor_efficient(s, plan, engine_state)?;
            }
            (BenchInput::Welch(a, b), Method::Asymptotic) => {
                welch_asymptotic_pvalue(&summarize(a)?, &summarize(b)?)?;
            }
            (BenchInput::Welch(a, b), Method::Naive) => {
                boot_ttest2_naive(a, b, config.b, engine_state)?;
            }
            (BenchInput::Welch(a, b), Method::Efficient) => {
                boot_ttest2_efficient(a, b, plan, engine_state)?;
            }
            (BenchInput::Welch(a, b), Method::Neto) => {
                boot_ttest2_neto(a, b, config.b, engine_state)?;
            }
            (BenchInput::James(a, b), Method::Efficient) => {
                james_boot_efficient(a, b, plan, engine_state)?;
            }
            (BenchInput::James(a, b), Method::Ordinary) => {
                james_boot_ordinary(a, b, config.b, engine_state)?;
            }
            _ => {
                return Err(Error::InvalidConfig(format!(
                    "method {} not available for test {}",
                    config.method, config.test
                )))
            }
        }
        Ok(())
    }
}

/// Time one engine configuration over `reps` repetitions.
///
/// Protocol per repetition: generate a fresh dataset (untimed), then time
/// exactly one engine invocation inside a thread pool of
/// `config.threads`. One untimed warmup invocation precedes measurement.
/// The input is hashed before and after every timed call; a mismatch —
/// an engine mutating its input — is a bug worth crashing on.
pub fn time_engine(config: &BenchConfig, reps: usize, state: RngState) -> Result<BenchRecord> {
    config.validate()?;
    if reps < 1 {
        return Err(Error::InvalidConfig("reps must be ≥ 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;

    let warm_state = state.child(u64::MAX);
    let warm_input = BenchInput::generate(config, &mut warm_state.child(0).rng());
    pool.install(|| warm_input.run(config, warm_state.child(1)))?;

    let mut seconds = Vec::with_capacity(reps);
    for sub in state.fork(reps) {
        let input = BenchInput::generate(config, &mut sub.child(0).rng());
        let before = input.content_hash();
        let start = Instant::now();
        pool.install(|| input.run(config, sub.child(1)))?;
        seconds.push(start.elapsed().as_secs_f64());
        assert_eq!(
            input.content_hash(),
            before,
            "engine mutated its input data"
        );
    }

    let mean = seconds.iter().sum::<f64>() / reps as f64;
    let mut sorted = seconds;
    sorted.sort_by(f64::total_cmp);
    let median = if reps % 2 == 1 {
        sorted[reps / 2]
    } else {
        0.5 * (sorted[reps / 2 - 1] + sorted[reps / 2])
    };

    Ok(BenchRecord {
        test: config.test,
        method: config.method,
        n: config.n,
        d: config.d,
        b: config.b,
        reps,
        median_seconds: median,
        mean_seconds: mean,
        threads: config.threads,
    })
}

/// A cross product of sizes and engines to time.
#[derive(Debug, Clone)]
pub struct GridSpec {
    pub test: TestKind,
    pub methods: Vec<Method>,
    pub ns: Vec<usize>,
    pub bs: Vec<usize>,
    pub d: usize,
    pub reps: usize,
    pub threads: usize,
}

impl GridSpec {
    /// Full-scale grid: n from 10 to 300 in steps of 10 crossed with
    /// B ∈ {999, 4999, 9999, 14999, 19999} for the univariate tests;
    /// n up to 100 and B ∈ {999, 4999} for james. Expect a long run.
    pub fn full(test: TestKind) -> GridSpec {
        let (ns, bs, methods, d) = match test {
            TestKind::Corr => (
                (1..=30).map(|k| 10 * k).collect::<Vec<_>>(),
                vec![999, 4999, 9999, 14999, 19999],
                vec![Method::Naive, Method::Efficient],
                1,
            ),
            TestKind::Welch => (
                (1..=30).map(|k| 10 * k).collect(),
                vec![999, 4999, 9999, 14999, 19999],
                vec![Method::Naive, Method::Neto, Method::Efficient],
                1,
            ),
            TestKind::James => (
                (1..=10).map(|k| 10 * k).collect(),
                vec![999, 4999],
                vec![Method::Ordinary, Method::Efficient],
                5,
            ),
        };
        GridSpec {
            test,
            methods,
            ns,
            bs,
            d,
            reps: 10,
            threads: 1,
        }
    }

    /// Desk-scale preset (n ∈ {10, 50, 100}, B ∈ {999, 9999}, 10 reps):
    /// the same protocol at a size that finishes in minutes.
    pub fn desk(test: TestKind) -> GridSpec {
        let mut spec = GridSpec::full(test);
        spec.ns = vec![10, 50, 100];
        spec.bs = vec![999, 9999];
        spec.reps = 10;
        spec
    }
}

/// Time every (n, B, method) cell of the grid. Cells get deterministic
/// sub-streams keyed by their position, so a grid run is reproducible
/// cell by cell.
pub fn run_grid(spec: &GridSpec, state: RngState) -> Result<Vec<BenchRecord>> {
    let mut records = Vec::with_capacity(spec.ns.len() * spec.bs.len() * spec.methods.len());
    let mut cell = 0u64;
    for &n in &spec.ns {
        for &b in &spec.bs {
            for &method in &spec.methods {
                let config = BenchConfig {
                    test: spec.test,
                    method,
                    n,
                    d: spec.d,
                    b,
                    threads: spec.threads,
                };
                records.push(time_engine(&config, spec.reps, state.child(cell))?);
                cell += 1;
            }
        }
    }
    Ok(records)
}

/// Pair up baseline and candidate medians at every (test, n, B) cell the
/// candidate appears in. Cells are emitted in the order the candidate
/// records appear.
pub fn speedups(
    records: &[BenchRecord],
    baseline: Method,
    candidate: Method,
) -> Result<Vec<SpeedupRecord>> {
    let mut out = Vec::new();
    for cand in records.iter().filter(|r| r.method == candidate) {
        let base = records
            .iter()
            .find(|r| {
                r.method == baseline && r.test == cand.test && r.n == cand.n && r.b == cand.b
            })
            .ok_or_else(|| Error::MissingPair {
                test: cand.test.to_string(),
                n: cand.n,
                b: cand.b,
            })?;
        out.push(SpeedupRecord {
            test: cand.test,
            n: cand.n,
            b: cand.b,
            baseline,
            candidate,
            factor: base.median_seconds / cand.median_seconds,
        });
    }
    Ok(out)
}

pub const CSV_HEADER: &str = "test,method,n,d,B,reps,median_seconds,mean_seconds,threads";

/// Render records as CSV. Seconds use the shortest representation that
/// round-trips through parsing exactly.
pub fn write_csv(records: &[BenchRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.test, r.method, r.n, r.d, r.b, r.reps, r.median_seconds, r.mean_seconds, r.threads
        ));
    }
    out
}

/// Inverse of [`write_csv`].
pub fn parse_csv(text: &str) -> Result<Vec<BenchRecord>> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header != CSV_HEADER {
        return Err(Error::Parse {
            path: "<csv>".into(),
            message: format!("unexpected header {header:?}"),
        });
    }
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(Error::Parse {
                path: "<csv>".into(),
                message: format!("row {}: expected 9 fields, got {}", i + 2, fields.len()),
            });
        }
        let parse_err = |what: &str| Error::Parse {
            path: "<csv>".into(),
            message: format!("row {}: bad {what}", i + 2),
        };
        records.push(BenchRecord {
            test: fields[0].parse().map_err(|_| parse_err("test"))?,
            method: fields[1].parse().map_err(|_| parse_err("method"))?,
            n: fields[2].parse().map_err(|_| parse_err("n"))?,
            d: fields[3].parse().map_err(|_| parse_err("d"))?,
            b: fields[4].parse().map_err(|_| parse_err("B"))?,
            reps: fields[5].parse().map_err(|_| parse_err("reps"))?,
            median_seconds: fields[6].parse().map_err(|_| parse_err("median_seconds"))?,
            mean_seconds: fields[7].parse().map_err(|_| parse_err("mean_seconds"))?,
            threads: fields[8].parse().map_err(|_| parse_err("threads"))?,
        });
    }
    Ok(records)
}

/// Self-contained SVG line chart of speed-up factor against n, one
/// polyline per B value. All records must share one (test, baseline,
/// candidate) triple — callers split heterogeneous sets first.
pub fn speedup_svg(records: &[SpeedupRecord]) -> Result<String> {
    let first = records.first().ok_or_else(|| {
        Error::InvalidConfig("cannot chart an empty speed-up set".into())
    })?;
    if records.iter().any(|r| {
        r.test != first.test || r.baseline != first.baseline || r.candidate != first.candidate
    }) {
        return Err(Error::InvalidConfig(
            "speed-up chart needs a single (test, baseline, candidate) group".into(),
        ));
    }

    const W: f64 = 800.0;
    const H: f64 = 500.0;
    const ML: f64 = 70.0; // margins
    const MR: f64 = 160.0;
    const MT: f64 = 50.0;
    const MB: f64 = 60.0;

    let n_min = records.iter().map(|r| r.n).min().unwrap() as f64;
    let n_max = records.iter().map(|r| r.n).max().unwrap() as f64;
    let f_max = records
        .iter()
        .map(|r| r.factor)
        .fold(1.0f64, f64::max)
        .max(1.5);
    let n_span = (n_max - n_min).max(1.0);

    let sx = |n: f64| ML + (n - n_min) / n_span * (W - ML - MR);
    let sy = |f: f64| H - MB - (f / f_max) * (H - MT - MB);

    let mut bs: Vec<usize> = records.iter().map(|r| r.b).collect();
    bs.sort_unstable();
    bs.dedup();

    const COLORS: [&str; 5] = ["#1b6ca8", "#c0392b", "#1e8449", "#8e44ad", "#b7950b"];

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {W} {H}\" \
         font-family=\"sans-serif\" font-size=\"13\">\n"
    ));
    svg.push_str(&format!(
        "  <title>{}: {} median / {} median</title>\n",
        first.test, first.baseline, first.candidate
    ));
    svg.push_str(&format!(
        "  <text x=\"{}\" y=\"28\" font-size=\"16\">Speed-up of {} over {} ({} test)</text>\n",
        ML, first.candidate, first.baseline, first.test
    ));

    // Axes.
    svg.push_str(&format!(
        "  <line x1=\"{ML}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\" stroke=\"#333\"/>\n",
        H - MB,
        W - MR
    ));
    svg.push_str(&format!(
        "  <line x1=\"{ML}\" y1=\"{MT}\" x2=\"{ML}\" y2=\"{}\" stroke=\"#333\"/>\n",
        H - MB
    ));
    svg.push_str(&format!(
        "  <text x=\"{}\" y=\"{}\">n per group</text>\n",
        (W - MR + ML) / 2.0 - 30.0,
        H - 18.0
    ));
    svg.push_str(&format!(
        "  <text x=\"16\" y=\"{}\" transform=\"rotate(-90 16 {0})\">factor</text>\n",
        (H - MB + MT) / 2.0
    ));

    // Parity line at factor 1.
    svg.push_str(&format!(
        "  <line x1=\"{ML}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\" stroke=\"#999\" \
         stroke-dasharray=\"4 3\"/>\n",
        sy(1.0),
        W - MR
    ));
    svg.push_str(&format!(
        "  <text x=\"{}\" y=\"{}\" fill=\"#666\">1x</text>\n",
        W - MR + 6.0,
        sy(1.0) + 4.0
    ));

    // Y ticks at quarters.
    for k in 0..=4 {
        let f = f_max * k as f64 / 4.0;
        svg.push_str(&format!(
            "  <text x=\"{}\" y=\"{}\" text-anchor=\"end\" fill=\"#333\">{f:.1}</text>\n",
            ML - 8.0,
            sy(f) + 4.0
        ));
    }

    for (ci, &b) in bs.iter().enumerate() {
        let color = COLORS[ci % COLORS.len()];
        let mut pts: Vec<(usize, f64)> = records
            .iter()
            .filter(|r| r.b == b)
            .map(|r| (r.n, r.factor))
            .collect();
        pts.sort_by_key(|p| p.0);
        let path: Vec<String> = pts
            .iter()
            .map(|&(n, f)| format!("{:.2},{:.2}", sx(n as f64), sy(f)))
            .collect();
        svg.push_str(&format!(
            "  <polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>\n",
            path.join(" ")
        ));
        // X tick labels ride the first series.
        if ci == 0 {
            for &(n, _) in &pts {
                svg.push_str(&format!(
                    "  <text x=\"{}\" y=\"{}\" text-anchor=\"middle\" fill=\"#333\">{n}</text>\n",
                    sx(n as f64),
                    H - MB + 18.0
                ));
            }
        }
        let ly = MT + 20.0 * ci as f64;
        svg.push_str(&format!(
            "  <line x1=\"{0}\" y1=\"{ly}\" x2=\"{1}\" y2=\"{ly}\" stroke=\"{color}\" \
             stroke-width=\"2\"/>\n",
            W - MR + 10.0,
            W - MR + 40.0
        ));
        svg.push_str(&format!(
            "  <text x=\"{}\" y=\"{}\">B = {b}</text>\n",
            W - MR + 46.0,
            ly + 4.0
        ));
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}
