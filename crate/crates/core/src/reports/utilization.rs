use serde::{Deserialize, Serialize};

use super::{fraction, resolve_range};
use crate::error::ReportError;
use crate::model::{AnalysisWindow, EntityId, SliceSet, Timestamp};

pub const DEFAULT_SLOT_WIDTH_US: u64 = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotEntry {
    pub entity: EntityId,
    pub charged_us: u64,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilizationSlot {
    #[serde(rename = "start_us")]
    pub start: Timestamp,
    pub span_us: u64,
    /// Set on a trailing slot shorter than the slot width. Its fractions are
    /// still relative to its own span.
    pub partial: bool,
    pub entries: Vec<SlotEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilizationReport {
    pub slot_width_us: u64,
    pub range: AnalysisWindow,
    pub slots: Vec<UtilizationSlot>,
}

/// Splits `range` (the whole window when `None`) into slots
/// `[start + k·w, start + (k+1)·w)` and reports each entity's share of each
/// slot. Entities that did not run in a slot are omitted from it.
pub fn utilization(
    slices: &SliceSet,
    slot_width_us: u64,
    range: Option<AnalysisWindow>,
) -> Result<UtilizationReport, ReportError> {
    if slot_width_us == 0 {
        return Err(ReportError::ZeroSlotWidth);
    }
    let range = resolve_range(slices.window, range)?;
    let all = &slices.slices;
    let mut next = all.partition_point(|s| s.end <= range.start);
    let mut slots = Vec::with_capacity(range.duration().div_ceil(slot_width_us) as usize);
    let mut slot_start = range.start;
    while slot_start < range.end {
        let slot_end = slot_start.checked_add_micros(slot_width_us).map_or(range.end, |e| e.min(range.end));
        let mut charged: Vec<(EntityId, u64)> = Vec::new();
        while let Some(slice) = all.get(next).filter(|s| s.start < slot_end) {
            let overlap = slice.end.min(slot_end).since(slice.start.max(slot_start));
            if overlap > 0 {
                match charged.iter_mut().find(|(e, _)| *e == slice.entity) {
                    Some((_, t)) => *t += overlap,
                    None => charged.push((slice.entity, overlap)),
                }
            }
            if slice.end <= slot_end {
                next += 1;
            } else {
                break;
            }
        }
        charged.sort_unstable_by_key(|(e, _)| *e);
        let span_us = slot_end.since(slot_start);
        slots.push(UtilizationSlot {
            start: slot_start,
            span_us,
            partial: span_us < slot_width_us,
            entries: charged
                .into_iter()
                .map(|(entity, charged_us)| SlotEntry { entity, charged_us, fraction: fraction(charged_us, span_us) })
                .collect(),
        });
        slot_start = slot_end;
    }
    Ok(UtilizationReport { slot_width_us, range, slots })
}
