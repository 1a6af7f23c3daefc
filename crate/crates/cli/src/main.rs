//! `modegap` — mode-vs-Bayes decision analysis from the command line.
//!
//! Subcommands: `canonicalize`, `decide`, `certify`, `oracle`, `regions`,
//! `regret`. Data goes to stdout (or `--out`); diagnostics go to stderr.
//! Exit codes: 0 success, 1 usage error, 2 parse error, 3 unreasonable
//! matrix, 4 internal invariant violation.

mod probs;

use std::fmt;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use modegap::{
    bayes_regions_ternary, bayes_set, brute_force_oracle_with_threads, decimal_approx,
    disagreement_region, expected_loss, format_rational, mode_is_bayes, mode_set, regret_with_policy,
    render_svg, sample_decision, CertifyError, CostMatrix, CostMatrixError, DecisionSet,
    MatrixParseError, ProbVector, Rational, RegionError, RenderOptions, TiePolicy,
};
use probs::{ProbParseError, ProbReader};

const PROBS_BATCH: usize = 1024;

#[derive(Parser)]
#[command(
    name = "modegap",
    version,
    about = "Mode vs. Bayes decisions under arbitrary cost matrices, exactly"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reduce the cost matrix to canonical form and emit it as JSON.
    Canonicalize(CommonArgs),
    /// Mode/Bayes decision sets and expected losses per vector (JSON lines).
    Decide(CommonArgs),
    /// Certify whether the mode rule is the Bayes classifier; emit a verdict.
    Certify(CommonArgs),
    /// Brute-force simplex-grid search for a counterexample.
    Oracle(CommonArgs),
    /// Render three-class decision regions as SVG (k = 3 only).
    Regions(CommonArgs),
    /// Aggregate regret of the mode rule over a dataset of vectors.
    Regret(CommonArgs),
}

impl Command {
    fn args(&self) -> &CommonArgs {
        match self {
            Command::Canonicalize(a)
            | Command::Decide(a)
            | Command::Certify(a)
            | Command::Oracle(a)
            | Command::Regions(a)
            | Command::Regret(a) => a,
        }
    }
}

#[derive(Args)]
struct CommonArgs {
    /// Cost matrix file, CSV or JSON.
    #[arg(long, value_name = "PATH")]
    matrix: PathBuf,

    /// Probability vectors file: CSV, one vector per line.
    #[arg(long, value_name = "PATH")]
    probs: Option<PathBuf>,

    /// Output file; stdout when omitted.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Grid resolution for `oracle` (default depends on k).
    #[arg(long, value_name = "N")]
    resolution: Option<u32>,

    /// Renormalize rows whose exact sum is within 1e-6 of 1.
    #[arg(long)]
    renormalize: bool,

    /// How mode ties are charged in `regret`.
    #[arg(long, value_enum, default_value_t = TiePolicyArg::Uniform)]
    tie_policy: TiePolicyArg,

    /// Worker threads for `oracle` and `regret`; defaults to MODEGAP_THREADS
    /// or 1.
    #[arg(long, value_name = "N")]
    threads: Option<usize>,

    /// Seed for tie-breaking samples in `decide`.
    #[arg(long, value_name = "N", default_value_t = 0)]
    seed: u64,

    /// Matrix input format; sniffed from the file extension when omitted.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TiePolicyArg {
    Uniform,
    WorstCase,
}

impl TiePolicyArg {
    fn as_str(self) -> &'static str {
        match self {
            TiePolicyArg::Uniform => "uniform",
            TiePolicyArg::WorstCase => "worst-case",
        }
    }
}

impl From<TiePolicyArg> for TiePolicy {
    fn from(a: TiePolicyArg) -> Self {
        match a {
            TiePolicyArg::Uniform => TiePolicy::Uniform,
            TiePolicyArg::WorstCase => TiePolicy::WorstCase,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

// ---------------------------------------------------------------------------
// error-to-exit-code mapping
// ---------------------------------------------------------------------------

#[derive(Debug)]
enum CliError {
    Usage(String),
    Parse(String),
    Unreasonable(String),
    Internal(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Parse(_) => 2,
            CliError::Unreasonable(_) => 3,
            CliError::Internal(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m)
            | CliError::Parse(m)
            | CliError::Unreasonable(m)
            | CliError::Internal(m) => f.write_str(m),
        }
    }
}

impl From<MatrixParseError> for CliError {
    fn from(e: MatrixParseError) -> Self {
        CliError::Parse(format!("matrix: {e}"))
    }
}

impl From<ProbParseError> for CliError {
    fn from(e: ProbParseError) -> Self {
        CliError::Parse(format!("probs: {e}"))
    }
}

impl From<CostMatrixError> for CliError {
    fn from(e: CostMatrixError) -> Self {
        match e {
            CostMatrixError::NotReasonable { .. } => CliError::Unreasonable(e.to_string()),
            other => CliError::Parse(other.to_string()),
        }
    }
}

impl From<CertifyError> for CliError {
    fn from(e: CertifyError) -> Self {
        match e {
            CertifyError::NotReasonable(_) => CliError::Unreasonable(e.to_string()),
            CertifyError::Internal { .. } => CliError::Internal(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<RegionError> for CliError {
    fn from(e: RegionError) -> Self {
        match e {
            RegionError::WrongArity { .. } => {
                CliError::Usage(format!("{e}; regions are available for k=3 only"))
            }
            RegionError::EmptyInput => CliError::Internal(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("modegap: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn run(command: &Command) -> Result<(), CliError> {
    let args = command.args();
    let matrix = load_matrix(args)?;
    let mut out = open_output(args)?;
    match command {
        Command::Canonicalize(_) => canonicalize_cmd(&matrix, &mut out),
        Command::Decide(args) => decide_cmd(&matrix, args, &mut out),
        Command::Certify(_) => certify_cmd(&matrix, &mut out),
        Command::Oracle(args) => oracle_cmd(&matrix, args, &mut out),
        Command::Regions(_) => regions_cmd(&matrix, &mut out),
        Command::Regret(args) => regret_cmd(&matrix, args, &mut out),
    }
}

// ---------------------------------------------------------------------------
// input/output plumbing
// ---------------------------------------------------------------------------

fn load_matrix(args: &CommonArgs) -> Result<CostMatrix, CliError> {
    let path = &args.matrix;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let format = args.format.unwrap_or_else(|| sniff_format(path));
    let matrix = match format {
        FormatArg::Csv => CostMatrix::from_csv_str(&text)?,
        FormatArg::Json => CostMatrix::from_json_str(&text)?,
    };
    Ok(matrix)
}

fn sniff_format(path: &Path) -> FormatArg {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("json") => FormatArg::Json,
        _ => FormatArg::Csv,
    }
}

fn open_output(args: &CommonArgs) -> Result<Box<dyn Write>, CliError> {
    match &args.out {
        Some(path) => {
            let file = File::create(path)
                .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
            Ok(Box::new(BufWriter::new(file)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout()))),
    }
}

fn open_probs(args: &CommonArgs, k: usize) -> Result<ProbReader<BufReader<File>>, CliError> {
    let path = args
        .probs
        .as_ref()
        .ok_or_else(|| CliError::Usage("this subcommand requires --probs".to_owned()))?;
    let file = File::open(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(ProbReader::new(BufReader::new(file), k, args.renormalize))
}

fn thread_count(args: &CommonArgs) -> Result<usize, CliError> {
    let n = match args.threads {
        Some(n) => n,
        None => match std::env::var("MODEGAP_THREADS") {
            Ok(v) => v.parse().map_err(|_| {
                CliError::Usage(format!("MODEGAP_THREADS is not a thread count: {v:?}"))
            })?,
            Err(_) => 1,
        },
    };
    if n == 0 {
        return Err(CliError::Usage("--threads must be at least 1".to_owned()));
    }
    Ok(n)
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| CliError::Usage(format!("cannot write output: {e}")))
}

// ---------------------------------------------------------------------------
// subcommands
// ---------------------------------------------------------------------------

fn canonicalize_cmd(matrix: &CostMatrix, out: &mut dyn Write) -> Result<(), CliError> {
    let canonical = matrix.canonicalize()?;
    emit(out, &format!("{}\n", canonical.to_json()))
}

fn decide_cmd(matrix: &CostMatrix, args: &CommonArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let reader = open_probs(args, matrix.k())?;
    let mut buffer = String::new();
    for (idx, row) in reader.enumerate() {
        let p = row?;
        let row_no = idx as u64 + 1;
        let mode = mode_set(&p);
        let bayes = bayes_set(matrix, &p).map_err(|e| CliError::Parse(e.to_string()))?;
        let losses: Vec<Value> = (1..=matrix.k())
            .map(|label| {
                expected_loss(matrix, label, &p)
                    .map(|l| Value::String(format_rational(&l)))
                    .map_err(|e| CliError::Parse(e.to_string()))
            })
            .collect::<Result<_, _>>()?;
        let line = serde_json::json!({
            "row": row_no,
            "mode": decision_set_json(&mode),
            "bayes": decision_set_json(&bayes),
            "losses": losses,
            "mode_pick": sample_decision(&mode, args.seed.wrapping_add(2 * row_no)),
            "bayes_pick": sample_decision(&bayes, args.seed.wrapping_add(2 * row_no + 1)),
        });
        buffer.clear();
        buffer.push_str(&line.to_string());
        buffer.push('\n');
        emit(out, &buffer)?;
    }
    Ok(())
}

fn decision_set_json(d: &DecisionSet) -> Value {
    let labels: Vec<Value> = d.labels().iter().map(|&l| Value::Number(l.into())).collect();
    serde_json::json!({
        "labels": labels,
        "value": format_rational(d.value()),
        "value_decimal": decimal_approx(d.value(), 12),
    })
}

fn certify_cmd(matrix: &CostMatrix, out: &mut dyn Write) -> Result<(), CliError> {
    let verdict = mode_is_bayes(matrix)?;
    if let Some(ce) = &verdict.counterexample {
        if !ce.verify(matrix) {
            return Err(CliError::Internal(
                "counterexample failed re-verification".to_owned(),
            ));
        }
    }
    emit(out, &format!("{}\n", verdict.to_json()))
}

fn oracle_cmd(matrix: &CostMatrix, args: &CommonArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let resolution = args.resolution.unwrap_or_else(|| default_resolution(matrix.k()));
    let threads = thread_count(args)?;
    let result = brute_force_oracle_with_threads(matrix, resolution, threads)?;
    let mut obj = serde_json::json!({
        "found": result.is_some(),
        "resolution": resolution,
    });
    if let Some(ce) = result {
        if !ce.verify(matrix) {
            return Err(CliError::Internal(
                "oracle witness failed re-verification".to_owned(),
            ));
        }
        obj["counterexample"] = ce.to_json();
    }
    emit(out, &format!("{obj}\n"))
}

/// Grid resolutions keeping the scan under a million points or so.
fn default_resolution(k: usize) -> u32 {
    match k {
        2 => 200,
        3 => 60,
        4 => 20,
        5 => 10,
        _ => 6,
    }
}

fn regions_cmd(matrix: &CostMatrix, out: &mut dyn Write) -> Result<(), CliError> {
    let canonical = matrix.canonicalize()?;
    let sets = vec![
        bayes_regions_ternary(&canonical)?,
        disagreement_region(&canonical)?,
    ];
    let svg = render_svg(&sets, &RenderOptions::default())?;
    emit(out, &svg)
}

fn regret_cmd(matrix: &CostMatrix, args: &CommonArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let reader = open_probs(args, matrix.k())?;
    let threads = thread_count(args)?;
    let policy: TiePolicy = args.tie_policy.into();

    let zero = Rational::from_integer(0.into());
    let mut n_vectors: u64 = 0;
    let mut total = zero.clone();
    let mut max = zero.clone();
    let mut disagreements: u64 = 0;

    let mut batch: Vec<ProbVector> = Vec::with_capacity(PROBS_BATCH);
    let mut rows = reader.peekable();
    while rows.peek().is_some() {
        batch.clear();
        for row in rows.by_ref().take(PROBS_BATCH) {
            batch.push(row?);
        }
        let regrets = batch_regrets(matrix, &batch, policy, threads)?;
        for r in regrets {
            n_vectors += 1;
            if r > zero {
                disagreements += 1;
            }
            if r > max {
                max = r.clone();
            }
            total += r;
        }
    }
    if n_vectors == 0 {
        return Err(CliError::Parse("probs: no probability vectors found".to_owned()));
    }

    let n = Rational::from_integer(n_vectors.into());
    let mean = total / &n;
    let rate = Rational::from_integer(disagreements.into()) / &n;
    let summary = serde_json::json!({
        "n_vectors": n_vectors,
        "mean_regret": format_rational(&mean),
        "mean_regret_decimal": decimal_approx(&mean, 12),
        "max_regret": format_rational(&max),
        "max_regret_decimal": decimal_approx(&max, 12),
        "disagreement_rate": format_rational(&rate),
        "disagreement_rate_decimal": decimal_approx(&rate, 12),
        "tie_policy": args.tie_policy.as_str(),
    });
    emit(out, &format!("{summary}\n"))
}

/// Per-row regrets for one batch, order preserved. With more than one thread
/// the batch is split into contiguous chunks; exact arithmetic keeps the
/// totals identical to the sequential pass.
fn batch_regrets(
    matrix: &CostMatrix,
    batch: &[ProbVector],
    policy: TiePolicy,
    threads: usize,
) -> Result<Vec<Rational>, CliError> {
    let compute = |p: &ProbVector| -> Result<Rational, CliError> {
        regret_with_policy(matrix, p, policy).map_err(|e| CliError::Parse(e.to_string()))
    };
    if threads <= 1 || batch.len() < 2 {
        return batch.iter().map(compute).collect();
    }
    let chunk_size = batch.len().div_ceil(threads);
    let chunks: Vec<&[ProbVector]> = batch.chunks(chunk_size).collect();
    let mut results: Vec<Result<Vec<Rational>, CliError>> = Vec::new();
    std::thread::scope(|scope| {
        let handles: Vec<_> = chunks
            .into_iter()
            .map(|chunk| scope.spawn(move || chunk.iter().map(compute).collect()))
            .collect();
        for h in handles {
            results.push(h.join().expect("regret worker panicked"));
        }
    });
    let mut all = Vec::with_capacity(batch.len());
    for r in results {
        all.extend(r?);
    }
    Ok(all)
}
