//! The four analyses computed from a [`SliceSet`]: average processor load,
//! per-timeslot utilization, per-entity execution-time statistics, and the
//! state timeline. Each is a plain value; see [`render`] for output.

mod load;
mod render;
mod task_stats;
mod timeline;
mod utilization;

use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use load::{average_load, LoadReport, LoadRow};
pub use render::{parse_json, render, render_histograms_csv, render_to};
pub use task_stats::{dispatch_samples, period_samples, task_statistics, EntityStats, SeriesStats, StatsReport};
pub use timeline::{timeline, EntityTimeline, Segment, SegmentState, TimelineReport};
pub use utilization::{utilization, SlotEntry, UtilizationReport, UtilizationSlot, DEFAULT_SLOT_WIDTH_US};

use crate::error::ReportError;
use crate::model::{AnalysisWindow, SliceSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "report", content = "data", rename_all = "lowercase")]
pub enum Report {
    Load(LoadReport),
    Utilization(UtilizationReport),
    Stats(StatsReport),
    Timeline(TimelineReport),
}

impl Report {
    pub fn kind(&self) -> ReportKind {
        match self {
            Report::Load(_) => ReportKind::Load,
            Report::Utilization(_) => ReportKind::Utilization,
            Report::Stats(_) => ReportKind::Stats,
            Report::Timeline(_) => ReportKind::Timeline,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ReportKind {
    Load,
    Utilization,
    Stats,
    Timeline,
}

impl ReportKind {
    pub const ALL: [ReportKind; 4] = [ReportKind::Load, ReportKind::Utilization, ReportKind::Stats, ReportKind::Timeline];

    pub fn name(self) -> &'static str {
        match self {
            ReportKind::Load => "load",
            ReportKind::Utilization => "utilization",
            ReportKind::Stats => "stats",
            ReportKind::Timeline => "timeline",
        }
    }
}

impl FromStr for ReportKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ReportKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown report '{s}' (expected load, utilization, stats or timeline)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Format {
    #[default]
    Text,
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Text => "txt",
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(Format::Text),
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("unknown format '{s}' (expected text, csv or json)")),
        }
    }
}

/// Options shared by the reports that need more than the slice set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReportOptions {
    pub slot_width_us: u64,
    pub bins: usize,
    pub zoom: Option<AnalysisWindow>,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions { slot_width_us: DEFAULT_SLOT_WIDTH_US, bins: crate::stats::DEFAULT_BINS, zoom: None }
    }
}

/// Computes one report. Zoom applies to the utilization and timeline reports.
pub fn compute(kind: ReportKind, slices: &SliceSet, opts: &ReportOptions) -> Result<Report, ReportError> {
    Ok(match kind {
        ReportKind::Load => Report::Load(average_load(slices)?),
        ReportKind::Utilization => Report::Utilization(utilization(slices, opts.slot_width_us, opts.zoom)?),
        ReportKind::Stats => Report::Stats(task_statistics(slices, opts.bins)?),
        ReportKind::Timeline => Report::Timeline(timeline(slices, opts.zoom)?),
    })
}

/// The window, or its intersection with `zoom`; errors if that is empty.
fn resolve_range(window: AnalysisWindow, zoom: Option<AnalysisWindow>) -> Result<AnalysisWindow, ReportError> {
    match zoom {
        Some(z) => window.intersect(z).ok_or(ReportError::EmptyWindow),
        None if window.is_empty() => Err(ReportError::EmptyWindow),
        None => Ok(window),
    }
}

/// `part / whole` as a fraction. Every report divides the same way so that
/// equal integer inputs give bit-identical fractions.
fn fraction(part: u64, whole: u64) -> f64 {
    part as f64 / whole as f64
}
