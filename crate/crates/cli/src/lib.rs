//! Front end for the `credible` binary: `score`, `solve` and `report`.

use std::ffi::OsString;
use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use credible::solver::{solve_opt_with_limit, DEFAULT_COUNT_LIMIT, DEFAULT_DP_LIMIT};
use credible::{
    enumerate_credible, generate_candidates, parse_dataset, partition, read_scores,
    resolve_epsilon, verify_credible, write_scores, CredibleSet, DataFormat, EpsilonSpec,
    PruneStats, ScoreConfig, ScoreFunction, ScoreTable, Solution,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_CAPACITY: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "credible", version, about = "Enumerate near-optimal Bayesian network structures")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute and prune local scores, then write a score file.
    Score(ScoreArgs),
    /// Find every network within the window and group it into classes.
    Solve(SolveArgs),
    /// Score deviation from the optimum by rank, with Bayes-factor reference lines.
    Report(ReportArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    /// Whitespace-separated data with a names line and an arities line.
    Native,
    /// CSV data with a header row.
    Csv,
    /// Precomputed local scores.
    Scores,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FunctionArg {
    Bic,
    Bdeu,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Dataset or score file.
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    /// Input format; defaults by extension (.csv, .scores, otherwise native).
    #[arg(long, value_enum)]
    pub format: Option<InputFormat>,
    /// Scoring function.
    #[arg(long = "fn", value_enum, default_value = "bic")]
    pub function: FunctionArg,
    /// BDeu equivalent sample size.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Hard cap on parent-set size.
    #[arg(long)]
    pub max_parents: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Accepted for reproducible scripting; the pipeline is deterministic.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct WindowArgs {
    /// Score window ε.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Bayes factor; ε = ln BF.
    #[arg(long)]
    pub bf: Option<f64>,
    /// Approximation factor; ε = (ρ − 1)·|OPT|.
    #[arg(long)]
    pub rho: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Maximum number of networks collected.
    #[arg(long, default_value_t = DEFAULT_COUNT_LIMIT)]
    pub limit: usize,
    /// Largest variable count accepted by the exact search.
    #[arg(long, default_value_t = DEFAULT_DP_LIMIT)]
    pub dp_limit: usize,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub window: WindowArgs,
    /// Score file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Largest variable count accepted when `--rho` needs the optimum.
    #[arg(long, default_value_t = DEFAULT_DP_LIMIT)]
    pub dp_limit: usize,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub window: WindowArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Directory for credible.txt, mecs.csv and arcs.csv.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub window: WindowArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Bayes factors drawn as reference lines, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub sweep: Vec<f64>,
    /// CSV destination (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A failure with its process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<credible::Error> for CliError {
    fn from(e: credible::Error) -> Self {
        use credible::Error as E;
        let code = match &e {
            E::Capacity(_) => EXIT_CAPACITY,
            E::Domain(_) | E::InvalidQuery(_) => EXIT_USAGE,
            _ => EXIT_INPUT,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

fn io_error(path: &Path, e: io::Error) -> CliError {
    CliError {
        code: EXIT_INPUT,
        message: format!("{}: {e}", path.display()),
    }
}

type CliResult<T> = Result<T, CliError>;

impl WindowArgs {
    fn spec(&self) -> CliResult<Option<EpsilonSpec>> {
        let given = [self.epsilon.is_some(), self.bf.is_some(), self.rho.is_some()];
        if given.iter().filter(|&&g| g).count() > 1 {
            return Err(CliError::usage("conflicting epsilon options: give one of --epsilon, --bf, --rho"));
        }
        Ok(self
            .epsilon
            .map(EpsilonSpec::Direct)
            .or(self.bf.map(EpsilonSpec::BayesFactor))
            .or(self.rho.map(EpsilonSpec::Factor)))
    }
}

enum Source {
    Data(credible::Dataset, ScoreConfig),
    Scores(ScoreTable),
}

struct Loaded {
    source: Source,
    max_parents: Option<usize>,
}

impl Loaded {
    fn rows(&self) -> Option<usize> {
        match &self.source {
            Source::Data(d, _) => Some(d.row_count()),
            Source::Scores(_) => None,
        }
    }

    fn variable_count(&self) -> usize {
        match &self.source {
            Source::Data(d, _) => d.variable_count(),
            Source::Scores(t) => t.variable_count(),
        }
    }

    fn table(&self, eps: f64) -> CliResult<(ScoreTable, Option<PruneStats>)> {
        match &self.source {
            Source::Data(d, cfg) => {
                let (t, s) = generate_candidates(d, cfg, eps, self.max_parents)?;
                Ok((t, Some(s)))
            }
            Source::Scores(t) => Ok((t.clone(), None)),
        }
    }
}

fn load(args: &InputArgs) -> CliResult<Loaded> {
    if let Some(jobs) = args.jobs {
        if jobs == 0 {
            return Err(CliError::usage("--jobs must be at least 1"));
        }
        // a second initialization in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    let file = File::open(&args.input).map_err(|e| {
        CliError::usage(format!("cannot open {}: {e}", args.input.display()))
    })?;
    let reader = BufReader::new(file);
    let format = args.format.unwrap_or_else(|| {
        match args.input.extension().and_then(|e| e.to_str()) {
            Some("csv") => InputFormat::Csv,
            Some("scores") | Some("score") => InputFormat::Scores,
            _ => InputFormat::Native,
        }
    });
    let source = match format {
        InputFormat::Scores => Source::Scores(read_scores(reader)?),
        InputFormat::Native | InputFormat::Csv => {
            let fmt = if format == InputFormat::Csv { DataFormat::Csv } else { DataFormat::Native };
            let data = parse_dataset(reader, fmt)?;
            let function = match args.function {
                FunctionArg::Bic => ScoreFunction::Bic,
                FunctionArg::Bdeu => ScoreFunction::BDeu,
            };
            let cfg = ScoreConfig::new(function, args.alpha, &data)?;
            Source::Data(data, cfg)
        }
    };
    Ok(Loaded {
        source,
        max_parents: args.max_parents,
    })
}

struct Prepared {
    table: ScoreTable,
    stats: Option<PruneStats>,
    eps: f64,
    solution: Option<Solution>,
}

/// Resolves the window and prunes at it. A factor window first needs the
/// optimum, found from the ε = 0 lists, which contain every optimal set.
fn prepare(loaded: &Loaded, spec: EpsilonSpec, dp_limit: usize, need_solution: bool) -> CliResult<Prepared> {
    let solve = |t: &ScoreTable| solve_opt_with_limit(t, dp_limit).map_err(CliError::from);
    if !spec.needs_opt() {
        let eps = resolve_epsilon(spec, f64::NAN)?;
        let (table, stats) = loaded.table(eps)?;
        let solution = if need_solution { Some(solve(&table)?) } else { None };
        return Ok(Prepared { table, stats, eps, solution });
    }
    let (strict, _) = loaded.table(0.0)?;
    let opt = solve(&strict)?.opt;
    let eps = resolve_epsilon(spec, opt)?;
    let (table, stats) = loaded.table(eps)?;
    let solution = if need_solution { Some(solve(&table)?) } else { None };
    Ok(Prepared { table, stats, eps, solution })
}

fn report_stats(stats: &Option<PruneStats>, out: &mut dyn Write) -> io::Result<()> {
    if let Some(s) = stats {
        writeln!(out, "{}", s.to_string().trim_end())?;
    }
    Ok(())
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| io_error(path, e))
}

pub fn cmd_score(args: &ScoreArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let spec = args
        .window
        .spec()?
        .ok_or_else(|| CliError::usage("one of --epsilon, --bf, --rho is required"))?;
    let loaded = load(&args.input)?;
    let prepared = prepare(&loaded, spec, args.dp_limit, false)?;
    let mut out = create(&args.out)?;
    write_scores(&prepared.table, &mut out)
        .and_then(|_| out.flush())
        .map_err(|e| io_error(&args.out, e))?;
    report_stats(&prepared.stats, stdout).map_err(|e| io_error(Path::new("stdout"), e))?;
    Ok(())
}

fn enumerate(prepared: &Prepared, limit: usize) -> CliResult<CredibleSet> {
    if limit == 0 {
        return Err(CliError::usage("--limit must be at least 1"));
    }
    let sol = prepared.solution.as_ref().expect("solution requested");
    let set = enumerate_credible(&prepared.table, &sol.tables, sol.opt, prepared.eps, limit)?;
    let report = verify_credible(&set, &prepared.table);
    if !report.is_ok() {
        return Err(CliError {
            code: 1,
            message: format!("credible set failed verification: {}", report.failures.join("; ")),
        });
    }
    Ok(set)
}

pub fn cmd_solve(args: &SolveArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult<()> {
    let spec = args
        .window
        .spec()?
        .ok_or_else(|| CliError::usage("one of --epsilon, --bf, --rho is required"))?;
    let loaded = load(&args.input)?;
    if loaded.variable_count() > args.search.dp_limit {
        return Err(CliError {
            code: EXIT_CAPACITY,
            message: format!(
                "{} variables exceed --dp-limit {}",
                loaded.variable_count(),
                args.search.dp_limit
            ),
        });
    }
    let prepared = prepare(&loaded, spec, args.search.dp_limit, true)?;
    let _ = report_stats(&prepared.stats, stderr);
    let set = enumerate(&prepared, args.search.limit)?;
    let classes = partition(&set);
    let names = &prepared.table.names;

    fs::create_dir_all(&args.out).map_err(|e| io_error(&args.out, e))?;
    let path = args.out.join("credible.txt");
    let mut out = create(&path)?;
    set.write_text(names, &mut out)
        .and_then(|_| out.flush())
        .map_err(|e| io_error(&path, e))?;
    let path = args.out.join("mecs.csv");
    classes
        .write_classes(&set, names, create(&path)?)
        .map_err(|e| io_error(&path, e.into()))?;
    let path = args.out.join("arcs.csv");
    classes
        .write_arcs(names, create(&path)?)
        .map_err(|e| io_error(&path, e.into()))?;

    let rows = loaded.rows().map_or_else(|| "-".to_string(), |n| n.to_string());
    writeln!(
        stdout,
        "n={} N={} OPT={} eps={} |G|={} |M|={} truncated={}",
        names.len(),
        rows,
        set.opt_score,
        set.epsilon,
        set.len(),
        classes.classes.len(),
        u8::from(set.truncated)
    )
    .map_err(|e| io_error(Path::new("stdout"), e))?;
    if set.truncated {
        let _ = writeln!(stderr, "warning: counting limit {} reached; output truncated", args.search.limit);
    }
    Ok(())
}

pub fn cmd_report(args: &ReportArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult<()> {
    let window = args.window.spec()?;
    let mut references = Vec::with_capacity(args.sweep.len());
    for &bf in &args.sweep {
        references.push((bf, resolve_epsilon(EpsilonSpec::BayesFactor(bf), f64::NAN)?));
    }
    let loaded = load(&args.input)?;
    let sweep_eps = references.iter().map(|r| r.1).fold(0.0, f64::max);
    // the largest requested window covers every reference line
    let prepared = match window {
        Some(spec) => {
            let p = prepare(&loaded, spec, args.search.dp_limit, true)?;
            if p.eps >= sweep_eps {
                p
            } else {
                prepare(&loaded, EpsilonSpec::Direct(sweep_eps), args.search.dp_limit, true)?
            }
        }
        None => prepare(&loaded, EpsilonSpec::Direct(sweep_eps), args.search.dp_limit, true)?,
    };
    let _ = report_stats(&prepared.stats, stderr);
    let set = enumerate(&prepared, args.search.limit)?;

    let mut text = String::from("kind,rank,bayes_factor,deviation\n");
    for (k, g) in set.networks.iter().enumerate() {
        text.push_str(&format!("network,{},,{}\n", k + 1, g.score() - set.opt_score));
    }
    for (bf, eps) in references {
        text.push_str(&format!("reference,,{bf},{eps}\n"));
    }
    match &args.out {
        Some(path) => fs::write(path, text).map_err(|e| io_error(path, e))?,
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| io_error(Path::new("stdout"), e))?,
    }
    if set.truncated {
        let _ = writeln!(stderr, "warning: counting limit {} reached; output truncated", args.search.limit);
    }
    Ok(())
}

/// Parses `argv` and runs the command, returning the exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { stderr.write_all(text.as_bytes()) } else { stdout.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Score(a) => cmd_score(a, stdout),
        Command::Solve(a) => cmd_solve(a, stdout, stderr),
        Command::Report(a) => cmd_report(a, stdout, stderr),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.code
        }
    }
}
