//! Replays an [`EventLog`] into a [`SliceSet`].
//!
//! Every microsecond of the window is charged to exactly one entity: the
//! innermost open interrupt handler if any, otherwise the scheduled task.
//! Interrupt time is therefore subtracted from whatever it preempted, and a
//! nested handler's time from the handler it interrupted.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::BuildError;
use crate::model::{
    AnalysisWindow, Dispatch, EntityId, EventLog, EventPayload, ExecutionSlice, IrqId, IrqInvocation, Mode,
    SliceSet, TaskId, Timestamp, TraceEvent, IDLE_TASK,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ViolationKind {
    OldTaskMismatch,
    IrqEndWithoutBegin,
    IrqEndIdMismatch,
    IrqOpenAtTraceEnd,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConsistencyViolation {
    pub at: Timestamp,
    pub kind: ViolationKind,
    pub detail: String,
}

impl fmt::Display for ConsistencyViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {:?}: {}", self.at, self.kind, self.detail)
    }
}

#[derive(Debug, Clone, Copy)]
struct OpenIrq {
    id: IrqId,
    begin: Timestamp,
    net: u64,
}

/// Replay state. The charged entity is the top of `irq_stack`, or
/// `current_task` when the stack is empty.
struct Replay {
    window: AnalysisWindow,
    current_task: TaskId,
    dispatch_start: Timestamp,
    dispatch_net: u64,
    irq_stack: Vec<OpenIrq>,
    cursor: Timestamp,
    out: SliceSet,
    violations: Vec<ConsistencyViolation>,
    /// Events as actually applied after lenient recovery.
    applied: Option<Vec<TraceEvent>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Policy {
    Abort,
    Recover,
}

impl Replay {
    fn new(log: &EventLog, window: AnalysisWindow, keep_applied: bool) -> Self {
        let current_task = log
            .events
            .iter()
            .find_map(|e| match e.payload {
                EventPayload::TaskSchedule { old, .. } => Some(old),
                _ => None,
            })
            .unwrap_or(IDLE_TASK);
        Replay {
            window,
            current_task,
            dispatch_start: window.start,
            dispatch_net: 0,
            irq_stack: Vec::new(),
            cursor: window.start,
            out: SliceSet::empty(window),
            violations: Vec::new(),
            applied: keep_applied.then(Vec::new),
        }
    }

    fn charge_until(&mut self, until: Timestamp) {
        let len = until.since(self.cursor);
        if len == 0 {
            return;
        }
        let entity = match self.irq_stack.last_mut() {
            Some(top) => {
                top.net += len;
                EntityId::irq(top.id)
            }
            None => {
                self.dispatch_net += len;
                EntityId::task(self.current_task)
            }
        };
        match self.out.slices.last_mut() {
            Some(last) if last.entity == entity && last.end == self.cursor => last.end = until,
            _ => self.out.slices.push(ExecutionSlice { entity, start: self.cursor, end: until }),
        }
        self.cursor = until;
    }

    fn close_dispatch(&mut self, at: Timestamp) {
        if at > self.dispatch_start {
            self.out.dispatches.push(Dispatch {
                task: self.current_task,
                start: self.dispatch_start,
                end: at,
                net_us: self.dispatch_net,
            });
        }
        self.dispatch_net = 0;
        self.dispatch_start = at;
    }

    fn pop_irq(&mut self, at: Timestamp) {
        let frame = self.irq_stack.pop().expect("caller checked the stack");
        if at > frame.begin {
            self.out.invocations.push(IrqInvocation {
                irq: frame.id,
                start: frame.begin,
                end: at,
                net_us: frame.net,
                depth: self.irq_stack.len(),
            });
        }
    }

    fn violation(&mut self, policy: Policy, v: ConsistencyViolation) -> Result<(), BuildError> {
        match policy {
            Policy::Abort => Err(BuildError::Inconsistent(v)),
            Policy::Recover => {
                self.violations.push(v);
                Ok(())
            }
        }
    }

    fn apply(&mut self, event: &TraceEvent, policy: Policy) -> Result<(), BuildError> {
        self.charge_until(event.at);
        let at = event.at;
        let applied = match event.payload {
            EventPayload::TaskSchedule { old, new } => {
                let running = self.current_task;
                if old != running {
                    self.violation(
                        policy,
                        ConsistencyViolation {
                            at,
                            kind: ViolationKind::OldTaskMismatch,
                            detail: format!("switch names old task {old} but task {running} is running"),
                        },
                    )?;
                }
                self.close_dispatch(at);
                self.current_task = new;
                self.out.schedule_ins.push((new, at));
                Some(TraceEvent::schedule(at, running, new))
            }
            EventPayload::IrqBegin(id) => {
                self.irq_stack.push(OpenIrq { id, begin: at, net: 0 });
                Some(*event)
            }
            EventPayload::IrqEnd(id) => match self.irq_stack.last() {
                Some(top) if top.id == id => {
                    self.pop_irq(at);
                    Some(*event)
                }
                Some(top) => {
                    let detail = format!("end of IRQ {id} while IRQ {} is innermost", top.id);
                    self.violation(policy, ConsistencyViolation { at, kind: ViolationKind::IrqEndIdMismatch, detail })?;
                    None
                }
                None => {
                    let detail = format!("end of IRQ {id} with no IRQ active");
                    self.violation(policy, ConsistencyViolation { at, kind: ViolationKind::IrqEndWithoutBegin, detail })?;
                    None
                }
            },
        };
        if let (Some(list), Some(e)) = (self.applied.as_mut(), applied) {
            list.push(e);
        }
        Ok(())
    }

    fn finish(mut self, policy: Policy) -> Result<Replay, BuildError> {
        let end = self.window.end;
        self.charge_until(end);
        while let Some(top) = self.irq_stack.last().copied() {
            self.violation(
                policy,
                ConsistencyViolation {
                    at: end,
                    kind: ViolationKind::IrqOpenAtTraceEnd,
                    detail: format!("IRQ {} began at {} and never ended", top.id, top.begin),
                },
            )?;
            self.pop_irq(end);
            if let Some(list) = self.applied.as_mut() {
                list.push(TraceEvent::irq_end(end, top.id));
            }
        }
        self.close_dispatch(end);
        self.out.invocations.sort_by_key(|inv| (inv.start, inv.depth));
        Ok(self)
    }
}

fn replay(log: &EventLog, policy: Policy, keep_applied: bool) -> Result<Replay, BuildError> {
    let window = log.window().ok_or(BuildError::EmptyLog)?;
    if !log.is_sorted() {
        return Err(BuildError::Unsorted);
    }
    let mut state = Replay::new(log, window, keep_applied);
    for event in &log.events {
        state.apply(event, policy)?;
    }
    state.finish(policy)
}

/// Builds the slice set, also returning the violations lenient mode
/// recovered from (always empty in strict mode).
///
/// The window is `[first event, last event]`. The task running before the
/// window opens is the `old` task of the first switch (idle if the log has
/// no switches). Strict mode aborts at the first inconsistency. Lenient mode
/// resyncs to the switch's `new` task on an `old` mismatch, drops unmatched
/// IRQ ends, and closes IRQs still open when the window ends.
pub fn build_slices_with_diagnostics(
    log: &EventLog,
    mode: Mode,
) -> Result<(SliceSet, Vec<ConsistencyViolation>), BuildError> {
    let policy = match mode {
        Mode::Strict => Policy::Abort,
        Mode::Lenient => Policy::Recover,
    };
    let state = replay(log, policy, false)?;
    Ok((state.out, state.violations))
}

pub fn build_slices(log: &EventLog, mode: Mode) -> Result<SliceSet, BuildError> {
    build_slices_with_diagnostics(log, mode).map(|(slices, _)| slices)
}

/// Every violation a strict build would hit, found without stopping at the
/// first one. Replay continues past each violation using lenient recovery.
pub fn validate_consistency(log: &EventLog) -> Vec<ConsistencyViolation> {
    match replay(log, Policy::Recover, false) {
        Ok(state) => state.violations,
        Err(_) => Vec::new(),
    }
}

/// The event stream lenient mode effectively replays: `old` fields
/// corrected, unmatched IRQ ends removed, and ends appended for IRQs left
/// open. The result always validates clean, and replays to the same slices
/// as a lenient build unless a dropped event sat at the edge of the window,
/// in which case the repaired window is correspondingly shorter.
pub fn repair(log: &EventLog) -> Result<(EventLog, Vec<ConsistencyViolation>), BuildError> {
    let state = replay(log, Policy::Recover, true)?;
    let events = state.applied.expect("applied events were requested");
    Ok((EventLog::new(events), state.violations))
}
