use std::fs;
use std::path::Path;

use schedtrace_core::reports::{compute, render, render_histograms_csv, Report};
use schedtrace_core::synthgen::parse_manifest_csv;
use schedtrace_core::{build_slices, parse_str, Format, Mode, ReportKind, ReportOptions};

const SAMPLE_PATH: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/tests/fixtures/sample.trace");

struct Output {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run(args: &[&str]) -> Output {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = schedtrace_cli::run(std::iter::once("schedtrace").chain(args.iter().copied()), &mut out, &mut err);
    Output { code, stdout: String::from_utf8(out).unwrap(), stderr: String::from_utf8(err).unwrap() }
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn sample_report(kind: ReportKind, opts: &ReportOptions) -> Report {
    let log = parse_str(&fs::read_to_string(SAMPLE_PATH).unwrap(), Mode::Strict).unwrap();
    compute(kind, &build_slices(&log, Mode::Strict).unwrap(), opts).unwrap()
}

#[test]
fn sample_stats_text_shows_task4() {
    let o = run(&["analyze", SAMPLE_PATH, "--report", "stats"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let row = o.stdout.lines().find(|l| l.starts_with("task 4")).unwrap();
    assert!(row.contains("135 us"), "{row}");
}

#[test]
fn single_report_on_stdout_matches_library_render() {
    for (kind, name) in [(ReportKind::Load, "load"), (ReportKind::Timeline, "timeline")] {
        for (format, fname) in [(Format::Text, "text"), (Format::Csv, "csv"), (Format::Json, "json")] {
            let o = run(&["analyze", SAMPLE_PATH, "--report", name, "--format", fname]);
            assert_eq!(o.code, 0);
            let expected = render(&sample_report(kind, &ReportOptions::default()), format);
            assert_eq!(o.stdout.as_bytes(), &expected[..], "{name} {fname}");
        }
    }
}

#[test]
fn stats_csv_on_stdout_appends_histograms() {
    let o = run(&["analyze", SAMPLE_PATH, "--report", "stats", "--format", "csv"]);
    let report = sample_report(ReportKind::Stats, &ReportOptions::default());
    let Report::Stats(stats) = &report else { unreachable!() };
    let mut expected = render(&report, Format::Csv);
    expected.push(b'\n');
    expected.extend(render_histograms_csv(stats));
    assert_eq!(o.stdout.as_bytes(), &expected[..]);
}

#[test]
fn zoom_restricts_utilization() {
    let o = run(&[
        "analyze", SAMPLE_PATH, "--report", "utilization", "--slot-width-us", "100", "--from-us", "1290802", "--to-us",
        "1291002", "--format", "csv",
    ]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let rows: Vec<&str> = o.stdout.lines().skip(1).collect();
    assert!(rows.iter().all(|r| r.starts_with("1290802,100,") || r.starts_with("1290902,100,")), "{rows:?}");
    let irq16: Vec<&str> = rows.iter().copied().filter(|r| r.ends_with(",irq,0.230000")).collect();
    assert_eq!(irq16, ["1290802,100,16,irq,0.230000"]);
}

#[test]
fn output_directory_gets_one_file_per_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = run(&["analyze", SAMPLE_PATH, "--report", "load", "--report", "stats", "--format", "csv", "-o", d]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert!(o.stdout.is_empty());
    let mut names: Vec<String> =
        fs::read_dir(d).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names, ["load.csv", "stats.csv", "stats_histograms.csv"]);

    let second = write(dir.path(), "other.trace", &fs::read_to_string(SAMPLE_PATH).unwrap());
    let out = dir.path().join("multi");
    let o = run(&["analyze", SAMPLE_PATH, &second, "--report", "load", "--format", "json", "-o", out.to_str().unwrap()]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert!(out.join("sample.load.json").exists() && out.join("other.load.json").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write(dir.path(), "empty.trace", "\n\n");
    assert_eq!(run(&["analyze", &empty, "--report", "load"]).code, 1);
    assert_eq!(run(&["analyze", "/nonexistent/trace", "--report", "load"]).code, 1);

    let garbage = write(dir.path(), "bad.trace", "<0000h 00m 00s 000 000> Task schedule: old 0 new 1\nnonsense\n");
    assert_eq!(run(&["analyze", &garbage, "--report", "load"]).code, 1);

    let unmatched = write(
        dir.path(),
        "unmatched.trace",
        "<0000h 00m 00s 000 000> Task schedule: old 0 new 1\n\
         <0000h 00m 00s 000 010> IRQ end: 5\n\
         <0000h 00m 00s 000 020> Task schedule: old 1 new 0\n",
    );
    let strict = run(&["analyze", &unmatched, "--report", "load"]);
    assert_eq!(strict.code, 2);
    assert!(strict.stderr.contains("--lenient"));
    let lenient = run(&["analyze", &unmatched, "--report", "load", "--lenient"]);
    assert_eq!(lenient.code, 0);
    assert!(lenient.stderr.contains("warning"));
    assert_eq!(run(&["validate", &unmatched]).code, 2);
    assert_eq!(run(&["validate", SAMPLE_PATH]).code, 0);

    assert_eq!(run(&["analyze", SAMPLE_PATH]).code, 3);
    assert_eq!(run(&["analyze", SAMPLE_PATH, "--report", "bogus"]).code, 3);
    assert_eq!(run(&["analyze", SAMPLE_PATH, "--report", "load", "--slot-width-us", "0"]).code, 3);
    assert_eq!(run(&["analyze", SAMPLE_PATH, "--report", "load", "--bins", "0"]).code, 3);
    assert_eq!(run(&["analyze", SAMPLE_PATH, "--report", "load", "--from-us", "9", "--to-us", "9"]).code, 3);
    assert_eq!(run(&["frobnicate"]).code, 3);
    assert_eq!(run(&["--help"]).code, 0);
    assert_eq!(run(&["--version"]).code, 0);
}

#[test]
fn zoom_outside_window_is_an_error() {
    let o = run(&["analyze", SAMPLE_PATH, "--report", "timeline", "--from-us", "0", "--to-us", "10"]);
    assert_eq!(o.code, 1);
    assert!(o.stderr.contains("empty"), "{}", o.stderr);
}

#[test]
fn generated_trace_analyzes_to_its_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("gen");
    let o = run(&["generate", "--seed", "42", "--runs", "200", "--irq-probability", "0.5", "-o", out.to_str().unwrap()]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let trace = out.join("trace.txt");
    let (expected, window) = parse_manifest_csv(&fs::read_to_string(out.join("manifest.csv")).unwrap()).unwrap();

    let o = run(&["analyze", trace.to_str().unwrap(), "--report", "load", "--format", "csv"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let log = parse_str(&fs::read_to_string(&trace).unwrap(), Mode::Strict).unwrap();
    let set = build_slices(&log, Mode::Strict).unwrap();
    assert_eq!(set.window.duration(), window);
    assert_eq!(set.net_times(), expected);
    let load_rows = o.stdout.lines().count() - 1;
    assert_eq!(load_rows, expected.len());
}

#[test]
fn generate_from_script() {
    let dir = tempfile::tempdir().unwrap();
    let script = write(dir.path(), "s.txt", "run 1 100\nrun 2 50\n  irq 7 10 5\n");
    let out = dir.path().join("o");
    let o = run(&["generate", &script, "-o", out.to_str().unwrap()]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let a = run(&["analyze", out.join("trace.txt").to_str().unwrap(), "--report", "load", "--format", "csv"]);
    assert!(a.stdout.contains("\n7,irq,"), "{}", a.stdout);

    let bad = write(dir.path(), "bad.txt", "walk 1 100\n");
    assert_eq!(run(&["generate", &bad, "-o", out.to_str().unwrap()]).code, 1);
    assert_eq!(run(&["generate", "-o", out.to_str().unwrap()]).code, 3);
}
