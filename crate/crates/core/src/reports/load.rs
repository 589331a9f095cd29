use serde::{Deserialize, Serialize};

use super::fraction;
use crate::error::ReportError;
use crate::model::{AnalysisWindow, EntityId, SliceSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadRow {
    pub entity: EntityId,
    pub net_us: u64,
    pub utilization: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadReport {
    pub window: AnalysisWindow,
    pub rows: Vec<LoadRow>,
    /// Task 0's utilization, or 0 if idle never ran.
    pub idle_fraction: f64,
}

impl LoadReport {
    pub fn total_us(&self) -> u64 {
        self.rows.iter().map(|r| r.net_us).sum()
    }

    pub fn row(&self, entity: EntityId) -> Option<&LoadRow> {
        self.rows.iter().find(|r| r.entity == entity)
    }
}

/// Net time and share of the window for every entity that was charged.
pub fn average_load(slices: &SliceSet) -> Result<LoadReport, ReportError> {
    let duration = slices.window.duration();
    if duration == 0 {
        return Err(ReportError::EmptyWindow);
    }
    let rows: Vec<LoadRow> = slices
        .net_times()
        .into_iter()
        .map(|(entity, net_us)| LoadRow { entity, net_us, utilization: fraction(net_us, duration) })
        .collect();
    let idle_fraction = rows.iter().find(|r| r.entity.is_idle()).map_or(0.0, |r| r.utilization);
    Ok(LoadReport { window: slices.window, rows, idle_fraction })
}
