#![allow(dead_code)]

use std::collections::BTreeMap;

use schedtrace_core::{EntityId, EventLog, EventPayload, Mode, SliceSet};

pub const SAMPLE: &str = include_str!("../fixtures/sample.trace");

pub fn sample_log() -> EventLog {
    schedtrace_core::parse_str(SAMPLE, Mode::Strict).unwrap()
}

pub fn sample_slices() -> SliceSet {
    schedtrace_core::build_slices(&sample_log(), Mode::Strict).unwrap()
}

/// Charges each microsecond of the window one at a time: the entity charged
/// for `[t, t+1)` is whatever is innermost after applying every event at or
/// before `t`. Unmatched IRQ ends are ignored, the lenient rule.
pub fn brute_force_charges(log: &EventLog) -> BTreeMap<EntityId, u64> {
    let mut totals = BTreeMap::new();
    let (Some(first), Some(last)) = (log.events.first(), log.events.last()) else {
        return totals;
    };
    let mut task = log
        .events
        .iter()
        .find_map(|e| match e.payload {
            EventPayload::TaskSchedule { old, .. } => Some(old),
            _ => None,
        })
        .unwrap_or(0);
    let mut stack: Vec<u32> = Vec::new();
    let mut next = 0;
    for t in first.at.micros()..last.at.micros() {
        while next < log.events.len() && log.events[next].at.micros() <= t {
            match log.events[next].payload {
                EventPayload::TaskSchedule { new, .. } => task = new,
                EventPayload::IrqBegin(irq) => stack.push(irq),
                EventPayload::IrqEnd(irq) => {
                    if stack.last() == Some(&irq) {
                        stack.pop();
                    }
                }
            }
            next += 1;
        }
        let entity = match stack.last() {
            Some(&irq) => EntityId::irq(irq),
            None => EntityId::task(task),
        };
        *totals.entry(entity).or_insert(0) += 1;
    }
    totals
}
