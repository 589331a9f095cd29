//! Text, CSV and JSON output. All three are deterministic: entities in
//! task-then-IRQ id order, slots and segments in time order.
//!
//! CSV and JSON carry times as integer microseconds and fractions with six
//! decimals (CSV) or full precision (JSON). Only the text tables scale times
//! for reading.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::{
    EntityStats, LoadReport, Report, SeriesStats, StatsReport, TimelineReport, UtilizationReport,
};
use super::Format;
use crate::model::{EntityId, EntityKind};

/// Renders `report` into a fresh buffer.
pub fn render(report: &Report, format: Format) -> Vec<u8> {
    let mut out = Vec::new();
    render_to(&mut out, report, format).expect("writing to a Vec cannot fail");
    out
}

pub fn render_to<W: Write>(out: &mut W, report: &Report, format: Format) -> io::Result<()> {
    match format {
        Format::Text => match report {
            Report::Load(r) => load_text(out, r),
            Report::Utilization(r) => utilization_text(out, r),
            Report::Stats(r) => stats_text(out, r),
            Report::Timeline(r) => timeline_text(out, r),
        },
        Format::Csv => match report {
            Report::Load(r) => load_csv(out, r),
            Report::Utilization(r) => utilization_csv(out, r),
            Report::Stats(r) => stats_csv(out, r),
            Report::Timeline(r) => timeline_csv(out, r),
        },
        Format::Json => {
            let doc = DocumentRef { units: Units::default(), report };
            serde_json::to_writer_pretty(&mut *out, &doc).map_err(io::Error::other)?;
            out.write_all(b"\n")
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Units {
    time: String,
    fraction: String,
}

impl Default for Units {
    fn default() -> Self {
        Units { time: "us".into(), fraction: "fraction".into() }
    }
}

#[derive(Serialize)]
struct DocumentRef<'a> {
    units: Units,
    #[serde(flatten)]
    report: &'a Report,
}

#[derive(Deserialize)]
struct Document {
    #[allow(dead_code)]
    units: Units,
    #[serde(flatten)]
    report: Report,
}

/// Reads back a JSON rendering.
pub fn parse_json(bytes: &[u8]) -> Result<Report, serde_json::Error> {
    serde_json::from_slice::<Document>(bytes).map(|d| d.report)
}

/// The companion histogram table for a stats report:
/// `entity,kind,series,bin_lower,bin_upper,count`.
pub fn render_histograms_csv(report: &StatsReport) -> Vec<u8> {
    let mut out = Vec::new();
    histograms_csv(&mut out, report).expect("writing to a Vec cannot fail");
    out
}

fn histograms_csv<W: Write>(out: &mut W, report: &StatsReport) -> io::Result<()> {
    writeln!(out, "entity,kind,series,bin_lower,bin_upper,count")?;
    for row in &report.rows {
        let series = [("exec", Some(&row.execution)), ("period", row.period.as_ref())];
        for (name, stats) in series {
            let Some(stats) = stats else { continue };
            for (lo, hi, count) in stats.histogram.bins() {
                writeln!(out, "{},{},{name},{lo:.3},{hi:.3},{count}", row.entity.id, row.entity.kind.as_str())?;
            }
        }
    }
    Ok(())
}

fn load_csv<W: Write>(out: &mut W, r: &LoadReport) -> io::Result<()> {
    writeln!(out, "entity,kind,net_us,utilization")?;
    for row in &r.rows {
        writeln!(out, "{},{},{},{:.6}", row.entity.id, row.entity.kind.as_str(), row.net_us, row.utilization)?;
    }
    Ok(())
}

fn utilization_csv<W: Write>(out: &mut W, r: &UtilizationReport) -> io::Result<()> {
    writeln!(out, "slot_start_us,slot_span_us,entity,kind,fraction")?;
    for slot in &r.slots {
        for e in &slot.entries {
            writeln!(
                out,
                "{},{},{},{},{:.6}",
                slot.start.micros(),
                slot.span_us,
                e.entity.id,
                e.entity.kind.as_str(),
                e.fraction
            )?;
        }
    }
    Ok(())
}

fn stats_csv<W: Write>(out: &mut W, r: &StatsReport) -> io::Result<()> {
    writeln!(
        out,
        "entity,kind,share,dispatches,min_us,max_us,mean_us,exp_rate_per_us,exp_ks,uni_lower_us,uni_upper_us,uni_ks"
    )?;
    for row in &r.rows {
        let exec = &row.execution;
        let (rate, ks) = match &exec.exponential {
            Some(fit) => (format!("{:.6e}", fit.rate_per_us), format!("{:.6}", fit.ks)),
            None => (String::new(), String::new()),
        };
        writeln!(
            out,
            "{},{},{:.6},{},{},{},{:.3},{rate},{ks},{},{},{:.6}",
            row.entity.id,
            row.entity.kind.as_str(),
            row.share,
            row.dispatches,
            exec.summary.min_us,
            exec.summary.max_us,
            exec.summary.mean_us,
            exec.uniform.lower_us,
            exec.uniform.upper_us,
            exec.uniform.ks
        )?;
    }
    Ok(())
}

fn timeline_csv<W: Write>(out: &mut W, r: &TimelineReport) -> io::Result<()> {
    writeln!(out, "entity,kind,state,start_us,end_us")?;
    for t in &r.entities {
        for seg in &t.segments {
            writeln!(
                out,
                "{},{},{},{},{}",
                t.entity.id,
                t.entity.kind.as_str(),
                seg.state.as_str(),
                seg.start.micros(),
                seg.end.micros()
            )?;
        }
    }
    Ok(())
}

/// Human-scaled duration for text tables.
pub(crate) fn human_us(us: u64) -> String {
    match us {
        0..=9_999 => format!("{us} us"),
        10_000..=9_999_999 => format!("{:.3} ms", us as f64 / 1e3),
        _ => format!("{:.3} s", us as f64 / 1e6),
    }
}

fn human_us_f(us: f64) -> String {
    if us < 10_000.0 {
        format!("{us:.1} us")
    } else if us < 10_000_000.0 {
        format!("{:.3} ms", us / 1e3)
    } else {
        format!("{:.3} s", us / 1e6)
    }
}

fn label(entity: EntityId) -> String {
    match entity.kind {
        EntityKind::Task if entity.is_idle() => "idle".to_string(),
        _ => entity.to_string(),
    }
}

/// Column-aligned table: first column left-aligned, the rest right-aligned.
struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: Vec<&'static str>) -> Self {
        Table { header, rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn write<W: Write>(&self, out: &mut W) -> io::Result<()> {
        let mut widths: Vec<usize> = self.header.iter().map(|h| h.len()).collect();
        for row in &self.rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let line = |out: &mut W, cells: &mut dyn Iterator<Item = &str>| -> io::Result<()> {
            let mut text = String::new();
            for (i, (cell, w)) in cells.zip(&widths).enumerate() {
                if i == 0 {
                    text.push_str(&format!("{cell:<w$}"));
                } else {
                    text.push_str(&format!("  {cell:>w$}"));
                }
            }
            writeln!(out, "{}", text.trim_end())
        };
        line(out, &mut self.header.iter().copied())?;
        for row in &self.rows {
            line(out, &mut row.iter().map(String::as_str))?;
        }
        Ok(())
    }
}

fn load_text<W: Write>(out: &mut W, r: &LoadReport) -> io::Result<()> {
    writeln!(out, "Average processor load")?;
    writeln!(out, "window: <{}> .. <{}> ({})", r.window.start, r.window.end, human_us(r.window.duration()))?;
    writeln!(out)?;
    let mut table = Table::new(vec!["entity", "net_time", "utilization"]);
    for row in &r.rows {
        table.push(vec![label(row.entity), human_us(row.net_us), format!("{:.6}", row.utilization)]);
    }
    let total_fraction: f64 = r.rows.iter().map(|row| row.utilization).sum();
    table.push(vec!["total".into(), human_us(r.total_us()), format!("{total_fraction:.6}")]);
    table.write(out)?;
    writeln!(out)?;
    writeln!(out, "idle fraction: {:.6}", r.idle_fraction)
}

fn utilization_text<W: Write>(out: &mut W, r: &UtilizationReport) -> io::Result<()> {
    writeln!(out, "Processor utilization per timeslot")?;
    writeln!(
        out,
        "range: <{}> .. <{}>, slot width {}",
        r.range.start,
        r.range.end,
        human_us(r.slot_width_us)
    )?;
    writeln!(out)?;
    let mut table = Table::new(vec!["slot_start", "span", "entity", "fraction"]);
    let mut any_partial = false;
    for slot in &r.slots {
        let span = if slot.partial {
            any_partial = true;
            format!("{}*", human_us(slot.span_us))
        } else {
            human_us(slot.span_us)
        };
        for e in &slot.entries {
            table.push(vec![format!("<{}>", slot.start), span.clone(), label(e.entity), format!("{:.6}", e.fraction)]);
        }
    }
    table.write(out)?;
    if any_partial {
        writeln!(out)?;
        writeln!(out, "* partial slot, fractions relative to its own span")?;
    }
    Ok(())
}

fn fit_cells(series: &SeriesStats) -> [String; 4] {
    let (rate, ks) = match &series.exponential {
        Some(fit) => (format!("{:.6e}", fit.rate_per_us), format!("{:.6}", fit.ks)),
        None => ("-".into(), "-".into()),
    };
    [rate, ks, format!("{}..{}", series.uniform.lower_us, series.uniform.upper_us), format!("{:.6}", series.uniform.ks)]
}

fn stats_row(row: &EntityStats) -> Vec<String> {
    let s = &row.execution.summary;
    let mut cells = vec![
        label(row.entity),
        format!("{:.6}", row.share),
        row.dispatches.to_string(),
        human_us(s.max_us),
        human_us(s.min_us),
        human_us_f(s.mean_us),
    ];
    cells.extend(fit_cells(&row.execution));
    cells
}

fn stats_text<W: Write>(out: &mut W, r: &StatsReport) -> io::Result<()> {
    writeln!(out, "Task execution-time statistics")?;
    writeln!(out, "window: <{}> .. <{}> ({})", r.window.start, r.window.end, human_us(r.window.duration()))?;
    writeln!(out)?;
    let mut table = Table::new(vec![
        "entity",
        "utilization",
        "dispatches",
        "worst_case",
        "minimum",
        "average",
        "exp_rate/us",
        "exp_ks",
        "uniform_us",
        "uni_ks",
    ]);
    for row in &r.rows {
        table.push(stats_row(row));
    }
    table.write(out)?;

    let with_periods: Vec<_> = r.rows.iter().filter_map(|row| row.period.as_ref().map(|p| (row.entity, p))).collect();
    if !with_periods.is_empty() {
        writeln!(out)?;
        writeln!(out, "Task periods (schedule-in to schedule-in)")?;
        writeln!(out)?;
        let mut table = Table::new(vec![
            "entity", "periods", "maximum", "minimum", "average", "exp_rate/us", "exp_ks", "uniform_us", "uni_ks",
        ]);
        for (entity, p) in with_periods {
            let mut cells = vec![
                label(entity),
                p.summary.count.to_string(),
                human_us(p.summary.max_us),
                human_us(p.summary.min_us),
                human_us_f(p.summary.mean_us),
            ];
            cells.extend(fit_cells(p));
            table.push(cells);
        }
        table.write(out)?;
    }
    let excluded: usize = r
        .rows
        .iter()
        .flat_map(|row| std::iter::once(&row.execution).chain(row.period.as_ref()))
        .map(|s| s.excluded_zero_samples)
        .sum();
    if excluded > 0 {
        writeln!(out)?;
        writeln!(out, "note: {excluded} zero-length samples excluded from exponential fits")?;
    }
    Ok(())
}

fn timeline_text<W: Write>(out: &mut W, r: &TimelineReport) -> io::Result<()> {
    writeln!(out, "Task execution timeline")?;
    writeln!(out, "range: <{}> .. <{}>", r.range.start, r.range.end)?;
    writeln!(out)?;
    // Same layout as `Table`, but streamed: a timeline can run to millions of
    // rows. Timestamps render at a fixed width.
    let labels: Vec<String> = r.entities.iter().map(|t| label(t.entity)).collect();
    let segments = || r.entities.iter().flat_map(|t| &t.segments);
    let we = labels.iter().map(String::len).fold("entity".len(), usize::max);
    let ws = segments().map(|s| s.state.as_str().len()).fold("state".len(), usize::max);
    let wt = format!("<{}>", r.range.start).len().max("start".len());
    let wd = segments().map(|s| human_us(s.duration()).len()).fold("duration".len(), usize::max);
    writeln!(out, "{:<we$}  {:>ws$}  {:>wt$}  {:>wt$}  {:>wd$}", "entity", "state", "start", "end", "duration")?;
    for (t, name) in r.entities.iter().zip(&labels) {
        for seg in &t.segments {
            writeln!(
                out,
                "{name:<we$}  {:>ws$}  <{}>  <{}>  {:>wd$}",
                seg.state.as_str(),
                seg.start,
                seg.end,
                human_us(seg.duration())
            )?;
        }
    }
    Ok(())
}
