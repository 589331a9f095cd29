use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::fraction;
use crate::error::{ReportError, StatsError};
use crate::model::{EntityId, SliceSet, TaskId};
use crate::stats::{self, ExponentialFit, Histogram, SampleSummary, UniformFit};

/// Distribution of one sample series (execution times or periods).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesStats {
    pub summary: SampleSummary,
    pub histogram: Histogram,
    /// Absent when every sample is zero.
    pub exponential: Option<ExponentialFit>,
    pub uniform: UniformFit,
    /// Zero-valued samples left out of the exponential fit.
    pub excluded_zero_samples: usize,
}

impl SeriesStats {
    fn from_samples(samples: &[u64], bins: usize) -> Result<Self, StatsError> {
        let positive: Vec<u64> = samples.iter().copied().filter(|&x| x > 0).collect();
        let exponential = if positive.is_empty() { None } else { Some(stats::fit_exponential(&positive)?) };
        Ok(SeriesStats {
            summary: stats::summarize(samples)?,
            histogram: stats::histogram(samples, bins)?,
            exponential,
            uniform: stats::fit_uniform(samples)?,
            excluded_zero_samples: samples.len() - positive.len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityStats {
    pub entity: EntityId,
    pub net_us: u64,
    /// Fraction of the window charged to this entity.
    pub share: f64,
    /// Dispatches for a task, invocations for an IRQ.
    pub dispatches: usize,
    pub execution: SeriesStats,
    /// Schedule-in to schedule-in intervals; tasks with two or more
    /// schedule-ins only.
    pub period: Option<SeriesStats>,
}

impl EntityStats {
    pub fn utilization(&self) -> f64 {
        self.share
    }

    pub fn worst_case_us(&self) -> u64 {
        self.execution.summary.max_us
    }

    pub fn minimum_us(&self) -> u64 {
        self.execution.summary.min_us
    }

    pub fn average_us(&self) -> f64 {
        self.execution.summary.mean_us
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub window: crate::model::AnalysisWindow,
    pub bins: usize,
    pub rows: Vec<EntityStats>,
}

impl StatsReport {
    pub fn row(&self, entity: EntityId) -> Option<&EntityStats> {
        self.rows.iter().find(|r| r.entity == entity)
    }
}

/// Net time per dispatch for each task and per invocation for each IRQ.
pub fn dispatch_samples(slices: &SliceSet) -> BTreeMap<EntityId, Vec<u64>> {
    let mut samples: BTreeMap<EntityId, Vec<u64>> = BTreeMap::new();
    for d in &slices.dispatches {
        samples.entry(EntityId::task(d.task)).or_default().push(d.net_us);
    }
    for inv in &slices.invocations {
        samples.entry(EntityId::irq(inv.irq)).or_default().push(inv.net_us);
    }
    samples
}

/// Intervals between successive schedule-ins of each task.
pub fn period_samples(slices: &SliceSet) -> BTreeMap<TaskId, Vec<u64>> {
    let mut last_in: BTreeMap<TaskId, crate::model::Timestamp> = BTreeMap::new();
    let mut periods: BTreeMap<TaskId, Vec<u64>> = BTreeMap::new();
    for &(task, at) in &slices.schedule_ins {
        if let Some(prev) = last_in.insert(task, at) {
            periods.entry(task).or_default().push(at.since(prev));
        }
    }
    periods
}

pub fn task_statistics(slices: &SliceSet, bins: usize) -> Result<StatsReport, ReportError> {
    let duration = slices.window.duration();
    if duration == 0 {
        return Err(ReportError::EmptyWindow);
    }
    if bins == 0 {
        return Err(StatsError::ZeroBins.into());
    }
    let nets = slices.net_times();
    let mut periods = period_samples(slices);
    let rows = dispatch_samples(slices)
        .into_iter()
        .map(|(entity, samples)| {
            let net_us = nets.get(&entity).copied().unwrap_or(0);
            let period = match entity.is_task().then(|| periods.remove(&entity.id)).flatten() {
                Some(p) => Some(SeriesStats::from_samples(&p, bins)?),
                None => None,
            };
            Ok(EntityStats {
                entity,
                net_us,
                share: fraction(net_us, duration),
                dispatches: samples.len(),
                execution: SeriesStats::from_samples(&samples, bins)?,
                period,
            })
        })
        .collect::<Result<Vec<_>, StatsError>>()?;
    Ok(StatsReport { window: slices.window, bins, rows })
}
