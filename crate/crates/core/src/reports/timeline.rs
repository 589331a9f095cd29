use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::resolve_range;
use crate::error::ReportError;
use crate::model::{AnalysisWindow, EntityId, SliceSet, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentState {
    /// Task scheduled and not interrupted.
    Running,
    /// Task scheduled while one or more IRQ handlers run.
    PreemptedByIrq,
    /// IRQ handler on the interrupt stack, nested or not.
    Active,
    Inactive,
}

impl SegmentState {
    pub fn as_str(self) -> &'static str {
        match self {
            SegmentState::Running => "running",
            SegmentState::PreemptedByIrq => "preempted_by_irq",
            SegmentState::Active => "active",
            SegmentState::Inactive => "inactive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub state: SegmentState,
    #[serde(rename = "start_us")]
    pub start: Timestamp,
    #[serde(rename = "end_us")]
    pub end: Timestamp,
}

impl Segment {
    pub fn duration(&self) -> u64 {
        self.end.since(self.start)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityTimeline {
    pub entity: EntityId,
    pub segments: Vec<Segment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineReport {
    pub range: AnalysisWindow,
    pub entities: Vec<EntityTimeline>,
}

impl TimelineReport {
    pub fn entity(&self, entity: EntityId) -> Option<&EntityTimeline> {
        self.entities.iter().find(|t| t.entity == entity)
    }
}

/// Clips sorted, non-overlapping `active` segments to `range`, fills the gaps
/// with `Inactive`, and merges neighbours in the same state.
fn assemble(range: AnalysisWindow, active: impl IntoIterator<Item = Segment>) -> Vec<Segment> {
    let mut out: Vec<Segment> = Vec::new();
    let mut push = |seg: Segment| {
        if seg.start >= seg.end {
            return;
        }
        match out.last_mut() {
            Some(last) if last.state == seg.state && last.end == seg.start => last.end = seg.end,
            _ => out.push(seg),
        }
    };
    let mut cursor = range.start;
    for seg in active {
        let start = seg.start.max(range.start);
        let end = seg.end.min(range.end);
        if start >= end {
            continue;
        }
        push(Segment { state: SegmentState::Inactive, start: cursor, end: start });
        push(Segment { state: seg.state, start, end });
        cursor = end;
    }
    push(Segment { state: SegmentState::Inactive, start: cursor, end: range.end });
    out
}

/// Per-entity state over `range` (the whole window when `None`). Every
/// entity active anywhere in the window is listed, even if it is inactive
/// throughout the range.
pub fn timeline(slices: &SliceSet, range: Option<AnalysisWindow>) -> Result<TimelineReport, ReportError> {
    let range = resolve_range(slices.window, range)?;

    let mut charged: BTreeMap<EntityId, Vec<(Timestamp, Timestamp)>> = BTreeMap::new();
    for s in &slices.slices {
        charged.entry(s.entity).or_default().push((s.start, s.end));
    }
    let mut scheduled: BTreeMap<u32, Vec<(Timestamp, Timestamp)>> = BTreeMap::new();
    for d in &slices.dispatches {
        scheduled.entry(d.task).or_default().push((d.start, d.end));
    }
    let mut invoked: BTreeMap<u32, Vec<(Timestamp, Timestamp)>> = BTreeMap::new();
    for inv in &slices.invocations {
        invoked.entry(inv.irq).or_default().push((inv.start, inv.end));
    }

    let entities: BTreeSet<EntityId> = charged
        .keys()
        .copied()
        .chain(scheduled.keys().map(|&t| EntityId::task(t)))
        .chain(invoked.keys().map(|&i| EntityId::irq(i)))
        .collect();

    let no_intervals = Vec::new();
    let entities = entities
        .into_iter()
        .map(|entity| {
            let segments = if entity.is_task() {
                let running = charged.get(&entity).unwrap_or(&no_intervals);
                let dispatches = scheduled.get(&entity.id).unwrap_or(&no_intervals);
                assemble(range, task_segments(dispatches, running))
            } else {
                let mut spans = invoked.get(&entity.id).cloned().unwrap_or_default();
                spans.sort_unstable();
                assemble(range, irq_segments(&spans))
            };
            EntityTimeline { entity, segments }
        })
        .collect();
    Ok(TimelineReport { range, entities })
}

/// Within each dispatch, the task is running where it was charged and
/// preempted everywhere else.
fn task_segments(dispatches: &[(Timestamp, Timestamp)], running: &[(Timestamp, Timestamp)]) -> Vec<Segment> {
    let mut out = Vec::new();
    let mut next = 0;
    for &(d_start, d_end) in dispatches {
        let mut cursor = d_start;
        while let Some(&(r_start, r_end)) = running.get(next).filter(|r| r.0 < d_end) {
            let (a, b) = (r_start.max(d_start), r_end.min(d_end));
            if a < b {
                if a > cursor {
                    out.push(Segment { state: SegmentState::PreemptedByIrq, start: cursor, end: a });
                }
                out.push(Segment { state: SegmentState::Running, start: a, end: b });
                cursor = b;
            }
            if r_end <= d_end {
                next += 1;
            } else {
                break;
            }
        }
        if cursor < d_end {
            out.push(Segment { state: SegmentState::PreemptedByIrq, start: cursor, end: d_end });
        }
    }
    out
}

/// Union of the (possibly nested) invocation spans, which arrive sorted.
fn irq_segments(spans: &[(Timestamp, Timestamp)]) -> Vec<Segment> {
    let mut out: Vec<Segment> = Vec::new();
    for &(start, end) in spans {
        match out.last_mut() {
            Some(last) if start <= last.end => last.end = last.end.max(end),
            _ => out.push(Segment { state: SegmentState::Active, start, end }),
        }
    }
    out
}
