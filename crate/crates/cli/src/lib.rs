//! `schedtrace` command line: `analyze`, `validate` and `generate`.
//!
//! Exit codes: 0 success, 1 unreadable or malformed input, 2 inconsistent
//! trace in strict mode (or any violation found by `validate`), 3 usage error.

use std::ffi::OsString;
use std::fs;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use schedtrace_core::reports::{self, render_histograms_csv, render_to};
use schedtrace_core::synthgen::{generate_trace, parse_script, random_scenario, RandomParams};
use schedtrace_core::{
    build_slices_with_diagnostics, parse_trace, validate_consistency, AnalysisWindow, BuildError, EventLog, Format,
    Mode, ParseError, Report, ReportKind, ReportOptions, SliceSet, Timestamp,
};

#[derive(Debug, Parser)]
#[command(name = "schedtrace", version, about = "Post-mortem analysis of scheduler and interrupt traces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute reports from one or more trace files.
    Analyze(AnalyzeArgs),
    /// Check traces for consistency violations.
    Validate(ValidateArgs),
    /// Generate a synthetic trace and its ground-truth manifest.
    Generate(GenerateArgs),
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// Trace files; `-` reads standard input.
    #[arg(required = true, value_name = "TRACE")]
    traces: Vec<PathBuf>,
    /// Report to produce: load, utilization, stats or timeline. Repeatable.
    #[arg(long = "report", value_name = "NAME")]
    reports: Vec<ReportKind>,
    /// Utilization timeslot width in microseconds.
    #[arg(long, value_name = "N", default_value_t = reports::DEFAULT_SLOT_WIDTH_US,
          value_parser = clap::value_parser!(u64).range(1..))]
    slot_width_us: u64,
    /// Zoom start, absolute trace microseconds.
    #[arg(long, value_name = "US")]
    from_us: Option<u64>,
    /// Zoom end, absolute trace microseconds.
    #[arg(long, value_name = "US")]
    to_us: Option<u64>,
    /// Histogram bins for the stats report.
    #[arg(long, value_name = "N", default_value_t = schedtrace_core::stats::DEFAULT_BINS,
          value_parser = parse_bins)]
    bins: usize,
    /// Skip malformed lines and recover from inconsistent events.
    #[arg(long)]
    lenient: bool,
    /// Output format: text, csv or json.
    #[arg(long, value_name = "FORMAT", default_value = "text")]
    format: Format,
    /// Write one file per report into this directory instead of stdout.
    #[arg(short = 'o', value_name = "DIR")]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(required = true, value_name = "TRACE")]
    traces: Vec<PathBuf>,
    /// Skip malformed lines instead of failing on them.
    #[arg(long)]
    lenient: bool,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Scenario script; `-` reads standard input.
    #[arg(value_name = "SCRIPT", required_unless_present = "seed", conflicts_with = "seed")]
    script: Option<PathBuf>,
    /// Generate a random scenario from this seed instead of a script.
    #[arg(long)]
    seed: Option<u64>,
    /// Random mode: task ids are drawn from 0..N, 0 being idle.
    #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u32).range(1..))]
    tasks: u32,
    /// Random mode: number of scheduled runs.
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(1..))]
    runs: u64,
    /// Random mode: longest run, in microseconds.
    #[arg(long, default_value_t = 1_000, value_parser = clap::value_parser!(u64).range(1..))]
    max_gross_us: u64,
    /// Random mode: chance of an interrupt at each placement attempt.
    #[arg(long, default_value_t = 0.3)]
    irq_probability: f64,
    /// Random mode: IRQ ids are drawn from 1..=N.
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u32).range(1..))]
    irqs: u32,
    /// Output directory for trace.txt and manifest.csv.
    #[arg(short = 'o', value_name = "DIR", required = true)]
    output: PathBuf,
}

fn parse_bins(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(n) if n >= 1 => Ok(n),
        _ => Err(format!("'{s}' is not a positive integer")),
    }
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Input(String),
    Inconsistent(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Inconsistent(_) => 2,
            CliError::Usage(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Input(m) | CliError::Inconsistent(m) => m,
        }
    }
}

fn io_error(path: &Path, e: io::Error) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code. Reports go to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let text = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    let result = match cli.command {
        Command::Analyze(args) => analyze(&args, out, err),
        Command::Validate(args) => validate(&args, out, err),
        Command::Generate(args) => generate(&args, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message());
            e.exit_code()
        }
    }
}

fn open_input(path: &Path) -> Result<Box<dyn BufRead>, CliError> {
    if path == Path::new("-") {
        Ok(Box::new(BufReader::new(io::stdin())))
    } else {
        let file = fs::File::open(path).map_err(|e| io_error(path, e))?;
        Ok(Box::new(BufReader::with_capacity(1 << 16, file)))
    }
}

fn read_log(path: &Path, mode: Mode, err: &mut dyn Write) -> Result<EventLog, CliError> {
    let log = parse_trace(open_input(path)?, mode).map_err(|e| match e {
        ParseError::Io(e) => io_error(path, e),
        ParseError::Line(d) => CliError::Input(format!("{}:{}: {:?}: {}", path.display(), d.line, d.kind, d.message)),
        ParseError::EmptyTrace => CliError::Input(format!("{}: trace contains no events", path.display())),
    })?;
    for d in &log.diagnostics {
        let _ = writeln!(err, "warning: {}:{}: {:?}: {}, line skipped", path.display(), d.line, d.kind, d.message);
    }
    Ok(log)
}

fn build(path: &Path, log: &EventLog, mode: Mode, err: &mut dyn Write) -> Result<SliceSet, CliError> {
    match build_slices_with_diagnostics(log, mode) {
        Ok((slices, violations)) => {
            for v in violations {
                let _ = writeln!(err, "warning: {}: {v} (recovered)", path.display());
            }
            Ok(slices)
        }
        Err(BuildError::Inconsistent(v)) => Err(CliError::Inconsistent(format!(
            "{}: {v}; rerun with --lenient to recover",
            path.display()
        ))),
        Err(e) => Err(CliError::Input(format!("{}: {e}", path.display()))),
    }
}

fn zoom(args: &AnalyzeArgs) -> Result<Option<AnalysisWindow>, CliError> {
    if args.from_us.is_none() && args.to_us.is_none() {
        return Ok(None);
    }
    let from = args.from_us.unwrap_or(0);
    let to = args.to_us.unwrap_or(u64::MAX);
    if from >= to {
        return Err(CliError::Usage(format!("--from-us ({from}) must be less than --to-us ({to})")));
    }
    Ok(AnalysisWindow::new(Timestamp::from_micros(from), Timestamp::from_micros(to)))
}

fn selected_reports(args: &AnalyzeArgs) -> Result<Vec<ReportKind>, CliError> {
    if args.reports.is_empty() {
        return Err(CliError::Usage(
            "select at least one report with --report load|utilization|stats|timeline".into(),
        ));
    }
    let mut kinds = Vec::new();
    for &k in &args.reports {
        if !kinds.contains(&k) {
            kinds.push(k);
        }
    }
    Ok(kinds)
}

fn analyze(args: &AnalyzeArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let kinds = selected_reports(args)?;
    let opts = ReportOptions { slot_width_us: args.slot_width_us, bins: args.bins, zoom: zoom(args)? };
    let mode = if args.lenient { Mode::Lenient } else { Mode::Strict };
    if let Some(dir) = &args.output {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    let multiple = args.traces.len() > 1;
    let mut first_block = true;
    for path in &args.traces {
        let log = read_log(path, mode, err)?;
        let slices = build(path, &log, mode, err)?;
        drop(log);
        let reports = compute_all(&kinds, &slices, &opts).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        match &args.output {
            Some(dir) => {
                let prefix = if multiple { format!("{}.", file_stem(path)) } else { String::new() };
                for report in &reports {
                    write_report_files(dir, &prefix, report, args.format)?;
                }
            }
            None => {
                for report in &reports {
                    if !first_block {
                        out.write_all(b"\n").map_err(stdout_error)?;
                    }
                    first_block = false;
                    if multiple && args.format == Format::Text {
                        writeln!(out, "==> {} <==", path.display()).map_err(stdout_error)?;
                    }
                    write_report(out, report, args.format).map_err(stdout_error)?;
                }
            }
        }
    }
    Ok(0)
}

/// Reports are independent pure functions of the slice set.
fn compute_all(
    kinds: &[ReportKind],
    slices: &SliceSet,
    opts: &ReportOptions,
) -> Result<Vec<Report>, schedtrace_core::ReportError> {
    std::thread::scope(|scope| {
        let handles: Vec<_> =
            kinds.iter().map(|&kind| scope.spawn(move || reports::compute(kind, slices, opts))).collect();
        handles.into_iter().map(|h| h.join().expect("report computation panicked")).collect()
    })
}

/// The stats report's histograms are a second table; on a single stream they
/// follow the main table after a blank line.
fn write_report(out: &mut dyn Write, report: &Report, format: Format) -> io::Result<()> {
    render_to(&mut &mut *out, report, format)?;
    if let (Report::Stats(stats), Format::Csv) = (report, format) {
        out.write_all(b"\n")?;
        out.write_all(&render_histograms_csv(stats))?;
    }
    Ok(())
}

fn write_report_files(dir: &Path, prefix: &str, report: &Report, format: Format) -> Result<(), CliError> {
    let name = report.kind().name();
    let path = dir.join(format!("{prefix}{name}.{}", format.extension()));
    let mut file = io::BufWriter::new(fs::File::create(&path).map_err(|e| io_error(&path, e))?);
    render_to(&mut file, report, format).and_then(|_| file.flush()).map_err(|e| io_error(&path, e))?;
    if let (Report::Stats(stats), Format::Csv) = (report, format) {
        let path = dir.join(format!("{prefix}{name}_histograms.csv"));
        fs::write(&path, render_histograms_csv(stats)).map_err(|e| io_error(&path, e))?;
    }
    Ok(())
}

fn file_stem(path: &Path) -> String {
    if path == Path::new("-") {
        return "stdin".into();
    }
    path.file_stem().map_or_else(|| "trace".into(), |s| s.to_string_lossy().into_owned())
}

fn stdout_error(e: io::Error) -> CliError {
    CliError::Input(format!("writing output: {e}"))
}

fn validate(args: &ValidateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let mode = if args.lenient { Mode::Lenient } else { Mode::Strict };
    let mut found = 0usize;
    for path in &args.traces {
        let log = read_log(path, mode, err)?;
        let violations = validate_consistency(&log);
        if violations.is_empty() {
            writeln!(out, "{}: ok ({} events)", path.display(), log.events.len()).map_err(stdout_error)?;
        }
        for v in &violations {
            writeln!(out, "{}: {v}", path.display()).map_err(stdout_error)?;
        }
        found += violations.len();
    }
    Ok(if found == 0 { 0 } else { 2 })
}

fn generate(args: &GenerateArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let scenario = match (&args.script, args.seed) {
        (Some(path), _) => {
            let mut text = String::new();
            open_input(path)?.read_to_string(&mut text).map_err(|e| io_error(path, e))?;
            parse_script(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
        }
        (None, Some(seed)) => {
            if !(0.0..=1.0).contains(&args.irq_probability) {
                return Err(CliError::Usage("--irq-probability must be within [0, 1]".into()));
            }
            let params = RandomParams {
                n_tasks: args.tasks,
                n_runs: args.runs as usize,
                max_gross_us: args.max_gross_us,
                irq_probability: args.irq_probability,
                n_irqs: args.irqs,
            };
            random_scenario(seed, &params)
        }
        (None, None) => return Err(CliError::Usage("give a scenario script or --seed".into())),
    };
    let (trace, manifest) = generate_trace(&scenario).map_err(|e| CliError::Input(e.to_string()))?;
    fs::create_dir_all(&args.output).map_err(|e| io_error(&args.output, e))?;
    let trace_path = args.output.join("trace.txt");
    fs::write(&trace_path, &trace).map_err(|e| io_error(&trace_path, e))?;
    let manifest_path = args.output.join("manifest.csv");
    fs::write(&manifest_path, manifest.to_csv()).map_err(|e| io_error(&manifest_path, e))?;
    writeln!(
        out,
        "wrote {} ({} events, {} us) and {}",
        trace_path.display(),
        trace.lines().count(),
        manifest.window_us,
        manifest_path.display()
    )
    .map_err(stdout_error)?;
    Ok(0)
}
