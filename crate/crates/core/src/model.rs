//! Domain types shared by the parser, the replay engine and the reports.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::RangeError;
use crate::parser::ParseDiagnostic;

pub type TaskId = u32;
pub type IrqId = u32;

/// The task id the kernel uses for processor idle time.
pub const IDLE_TASK: TaskId = 0;

const MICROS_PER_SECOND: u64 = 1_000_000;
const MICROS_PER_MINUTE: u64 = 60 * MICROS_PER_SECOND;
const MICROS_PER_HOUR: u64 = 60 * MICROS_PER_MINUTE;

/// Largest hour count the four-digit hour field can hold.
pub const MAX_HOURS: u64 = 9999;

/// Microseconds since the trace clock origin (`0000h 00m 00s 000 000`).
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Timestamp(u64);

impl Timestamp {
    pub const ZERO: Timestamp = Timestamp(0);
    /// `9999h 59m 59s 999 999`, the last instant the trace format can express.
    pub const MAX_FORMATTABLE: Timestamp = Timestamp((MAX_HOURS + 1) * MICROS_PER_HOUR - 1);

    pub const fn from_micros(micros: u64) -> Self {
        Timestamp(micros)
    }

    pub const fn micros(self) -> u64 {
        self.0
    }

    /// Builds a timestamp from the `h m s ms us` fields of a trace line.
    pub fn from_fields(h: u64, m: u64, s: u64, ms: u64, us: u64) -> Result<Self, RangeError> {
        if m >= 60 {
            return Err(RangeError::Field { field: "minutes", value: m, limit: 60 });
        }
        if s >= 60 {
            return Err(RangeError::Field { field: "seconds", value: s, limit: 60 });
        }
        if ms >= 1000 {
            return Err(RangeError::Field { field: "milliseconds", value: ms, limit: 1000 });
        }
        if us >= 1000 {
            return Err(RangeError::Field { field: "microseconds", value: us, limit: 1000 });
        }
        h.checked_mul(MICROS_PER_HOUR)
            .and_then(|t| t.checked_add(m * MICROS_PER_MINUTE + s * MICROS_PER_SECOND + ms * 1000 + us))
            .map(Timestamp)
            .ok_or(RangeError::Overflow)
    }

    /// Splits into `(hours, minutes, seconds, milliseconds, microseconds)`.
    pub fn fields(self) -> (u64, u64, u64, u64, u64) {
        let t = self.0;
        (
            t / MICROS_PER_HOUR,
            t % MICROS_PER_HOUR / MICROS_PER_MINUTE,
            t % MICROS_PER_MINUTE / MICROS_PER_SECOND,
            t % MICROS_PER_SECOND / 1000,
            t % 1000,
        )
    }

    pub fn checked_add_micros(self, us: u64) -> Option<Timestamp> {
        self.0.checked_add(us).map(Timestamp)
    }

    /// Microseconds from `earlier` to `self`; zero if `earlier` is later.
    pub fn since(self, earlier: Timestamp) -> u64 {
        self.0.saturating_sub(earlier.0)
    }

    /// Renders in the fixed-width trace layout, e.g. `0000h 00m 01s 290 602`.
    pub fn format(self) -> Result<String, RangeError> {
        if self > Self::MAX_FORMATTABLE {
            return Err(RangeError::Unformattable(self.0));
        }
        Ok(self.to_string())
    }
}

/// Same layout as [`Timestamp::format`], but without the hour ceiling.
impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (h, m, s, ms, us) = self.fields();
        write!(f, "{h:04}h {m:02}m {s:02}s {ms:03} {us:03}")
    }
}

pub fn timestamp_from_fields(h: u64, m: u64, s: u64, ms: u64, us: u64) -> Result<Timestamp, RangeError> {
    Timestamp::from_fields(h, m, s, ms, us)
}

pub fn format_timestamp(t: Timestamp) -> Result<String, RangeError> {
    t.format()
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum EntityKind {
    Task,
    Irq,
}

impl EntityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::Task => "task",
            EntityKind::Irq => "irq",
        }
    }
}

/// A task or an interrupt handler. Task and IRQ ids are separate namespaces.
///
/// Ordering puts every task before every IRQ, each group by ascending id;
/// all reports list entities in this order.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct EntityId {
    pub kind: EntityKind,
    pub id: u32,
}

impl EntityId {
    pub const IDLE: EntityId = EntityId::task(IDLE_TASK);

    pub const fn task(id: TaskId) -> Self {
        EntityId { kind: EntityKind::Task, id }
    }

    pub const fn irq(id: IrqId) -> Self {
        EntityId { kind: EntityKind::Irq, id }
    }

    pub fn is_task(self) -> bool {
        self.kind == EntityKind::Task
    }

    pub fn is_idle(self) -> bool {
        self == Self::IDLE
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.kind.as_str(), self.id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventPayload {
    TaskSchedule { old: TaskId, new: TaskId },
    IrqBegin(IrqId),
    IrqEnd(IrqId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TraceEvent {
    pub at: Timestamp,
    pub payload: EventPayload,
}

impl TraceEvent {
    pub fn schedule(at: Timestamp, old: TaskId, new: TaskId) -> Self {
        TraceEvent { at, payload: EventPayload::TaskSchedule { old, new } }
    }

    pub fn irq_begin(at: Timestamp, irq: IrqId) -> Self {
        TraceEvent { at, payload: EventPayload::IrqBegin(irq) }
    }

    pub fn irq_end(at: Timestamp, irq: IrqId) -> Self {
        TraceEvent { at, payload: EventPayload::IrqEnd(irq) }
    }
}

/// Parsed trace: events in non-decreasing timestamp order, plus whatever the
/// lenient parser had to skip.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventLog {
    pub events: Vec<TraceEvent>,
    pub diagnostics: Vec<ParseDiagnostic>,
}

impl EventLog {
    pub fn new(events: Vec<TraceEvent>) -> Self {
        EventLog { events, diagnostics: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn is_sorted(&self) -> bool {
        self.events.windows(2).all(|w| w[0].at <= w[1].at)
    }

    /// `[first event, last event]`, or `None` for an empty log.
    pub fn window(&self) -> Option<AnalysisWindow> {
        let first = self.events.first()?;
        let last = self.events.last()?;
        Some(AnalysisWindow { start: first.at, end: last.at })
    }
}

/// A half-open span `[start, end)` of trace time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AnalysisWindow {
    #[serde(rename = "start_us")]
    pub start: Timestamp,
    #[serde(rename = "end_us")]
    pub end: Timestamp,
}

impl AnalysisWindow {
    pub fn new(start: Timestamp, end: Timestamp) -> Option<Self> {
        (start <= end).then_some(AnalysisWindow { start, end })
    }

    pub fn duration(self) -> u64 {
        self.end.since(self.start)
    }

    pub fn is_empty(self) -> bool {
        self.start == self.end
    }

    pub fn contains(self, t: Timestamp) -> bool {
        self.start <= t && t < self.end
    }

    pub fn intersect(self, other: AnalysisWindow) -> Option<AnalysisWindow> {
        let start = self.start.max(other.start);
        let end = self.end.min(other.end);
        (start < end).then_some(AnalysisWindow { start, end })
    }
}

/// Processor time charged to exactly one entity over `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ExecutionSlice {
    pub entity: EntityId,
    pub start: Timestamp,
    pub end: Timestamp,
}

impl ExecutionSlice {
    pub fn duration(&self) -> u64 {
        self.end.since(self.start)
    }
}

/// One contiguous scheduled run of a task, clipped to the analysis window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dispatch {
    pub task: TaskId,
    pub start: Timestamp,
    pub end: Timestamp,
    /// Time charged to the task itself, i.e. gross time minus interrupt time.
    pub net_us: u64,
}

/// One interrupt handler activation, begin to end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct IrqInvocation {
    pub irq: IrqId,
    pub start: Timestamp,
    pub end: Timestamp,
    /// Gross time minus time spent in handlers nested inside this one.
    pub net_us: u64,
    /// Nesting depth at activation; 0 for an interrupt that preempted a task.
    pub depth: usize,
}

/// The replayed trace: slices tiling the window exactly, plus the dispatch
/// and invocation boundaries the statistics and timeline reports need.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SliceSet {
    pub window: AnalysisWindow,
    /// Maximal same-entity runs, sorted and contiguous.
    pub slices: Vec<ExecutionSlice>,
    /// Dispatches with non-zero gross duration, in start order.
    pub dispatches: Vec<Dispatch>,
    /// Completed (or window-closed) interrupt activations, in start order.
    pub invocations: Vec<IrqInvocation>,
    /// Every task schedule-in seen, including the one at the window end.
    pub schedule_ins: Vec<(TaskId, Timestamp)>,
}

impl SliceSet {
    pub fn empty(window: AnalysisWindow) -> Self {
        SliceSet {
            window,
            slices: Vec::new(),
            dispatches: Vec::new(),
            invocations: Vec::new(),
            schedule_ins: Vec::new(),
        }
    }

    /// Sum of charged time per entity, in report order.
    pub fn net_times(&self) -> std::collections::BTreeMap<EntityId, u64> {
        let mut totals = std::collections::BTreeMap::new();
        for slice in &self.slices {
            *totals.entry(slice.entity).or_insert(0) += slice.duration();
        }
        totals
    }

    pub fn net_time(&self, entity: EntityId) -> u64 {
        self.slices.iter().filter(|s| s.entity == entity).map(ExecutionSlice::duration).sum()
    }

    /// Checks the tiling invariant: sorted, gap-free, non-empty slices that
    /// cover the window exactly.
    pub fn tiles_window(&self) -> bool {
        if self.slices.is_empty() {
            return self.window.is_empty();
        }
        let contiguous = self.slices.windows(2).all(|w| w[0].end == w[1].start);
        let non_empty = self.slices.iter().all(|s| s.start < s.end);
        contiguous
            && non_empty
            && self.slices[0].start == self.window.start
            && self.slices[self.slices.len() - 1].end == self.window.end
    }
}

/// How to react to malformed lines and inconsistent event sequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Strict,
    Lenient,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_fields_examples() {
        assert_eq!(Timestamp::from_fields(0, 0, 1, 290, 602).unwrap().micros(), 1_290_602);
        assert_eq!(Timestamp::from_fields(0, 0, 0, 0, 0).unwrap(), Timestamp::ZERO);
        assert_eq!(Timestamp::from_fields(1, 2, 3, 4, 5).unwrap().micros(), 3_723_004_005);
    }

    #[test]
    fn from_fields_rejects_out_of_range() {
        assert!(Timestamp::from_fields(0, 60, 0, 0, 0).is_err());
        assert!(Timestamp::from_fields(0, 0, 60, 0, 0).is_err());
        assert!(Timestamp::from_fields(0, 0, 0, 1000, 0).is_err());
        assert!(Timestamp::from_fields(0, 0, 0, 0, 1000).is_err());
        assert_eq!(Timestamp::from_fields(u64::MAX, 0, 0, 0, 0), Err(RangeError::Overflow));
    }

    #[test]
    fn format_examples() {
        let fmt = |us| format_timestamp(Timestamp::from_micros(us)).unwrap();
        assert_eq!(fmt(1_290_602), "0000h 00m 01s 290 602");
        assert_eq!(fmt(0), "0000h 00m 00s 000 000");
        assert_eq!(fmt(3_723_004_005), "0001h 02m 03s 004 005");
        assert_eq!(fmt(Timestamp::MAX_FORMATTABLE.micros()), "9999h 59m 59s 999 999");
    }

    #[test]
    fn format_rejects_beyond_hour_field() {
        let t = Timestamp::MAX_FORMATTABLE.checked_add_micros(1).unwrap();
        assert!(matches!(t.format(), Err(RangeError::Unformattable(_))));
    }

    #[test]
    fn covers_at_least_9999_hours() {
        assert!(Timestamp::MAX_FORMATTABLE.micros() >= 36_000_000_000_000 - 1);
    }

    #[test]
    fn entity_order_tasks_then_irqs() {
        let mut ids = vec![EntityId::irq(1), EntityId::task(16), EntityId::irq(16), EntityId::task(0)];
        ids.sort();
        assert_eq!(ids, vec![EntityId::task(0), EntityId::task(16), EntityId::irq(1), EntityId::irq(16)]);
        assert_ne!(EntityId::task(16), EntityId::irq(16));
    }

    #[test]
    fn window_intersection() {
        let w = AnalysisWindow::new(Timestamp(10), Timestamp(20)).unwrap();
        let z = AnalysisWindow::new(Timestamp(15), Timestamp(30)).unwrap();
        assert_eq!(w.intersect(z), AnalysisWindow::new(Timestamp(15), Timestamp(20)));
        let far = AnalysisWindow::new(Timestamp(20), Timestamp(30)).unwrap();
        assert_eq!(w.intersect(far), None);
        assert!(AnalysisWindow::new(Timestamp(2), Timestamp(1)).is_none());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn fields_round_trip(h in 0u64..=MAX_HOURS, m in 0u64..60, s in 0u64..60, ms in 0u64..1000, us in 0u64..1000) {
                let t = Timestamp::from_fields(h, m, s, ms, us).unwrap();
                prop_assert_eq!(t.fields(), (h, m, s, ms, us));
                let text = t.format().unwrap();
                prop_assert_eq!(text, format!("{h:04}h {m:02}m {s:02}s {ms:03} {us:03}"));
            }

            #[test]
            fn ordering_matches_field_order(a in 0u64..=Timestamp::MAX_FORMATTABLE.micros(), b in 0u64..=Timestamp::MAX_FORMATTABLE.micros()) {
                let (ta, tb) = (Timestamp::from_micros(a), Timestamp::from_micros(b));
                prop_assert_eq!(ta.cmp(&tb), ta.fields().cmp(&tb.fields()));
            }
        }
    }
}
