//! Post-mortem analysis of operating-system scheduler and interrupt traces.
//!
//! The pipeline is parse → replay → report → render:
//!
//! ```
//! use schedtrace_core::{build_slices, parse_str, reports, EntityId, Mode};
//!
//! let trace = "\
//! <0000h 00m 01s 290 764> Task schedule: old 1 new 4
//! <0000h 00m 01s 290 838> IRQ begin: 16
//! <0000h 00m 01s 290 861> IRQ end: 16
//! <0000h 00m 01s 290 922> Task schedule: old 4 new 2
//! ";
//! let log = parse_str(trace, Mode::Strict)?;
//! let slices = build_slices(&log, Mode::Strict)?;
//! assert_eq!(slices.net_time(EntityId::task(4)), 135);
//! let load = reports::average_load(&slices)?;
//! assert_eq!(load.row(EntityId::irq(16)).unwrap().net_us, 23);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod builder;
pub mod error;
pub mod model;
pub mod parser;
pub mod reports;
pub mod stats;
pub mod synthgen;

pub use builder::{
    build_slices, build_slices_with_diagnostics, repair, validate_consistency, ConsistencyViolation, ViolationKind,
};
pub use error::{BuildError, ParseError, RangeError, ReportError, ScenarioError, StatsError};
pub use model::{
    format_timestamp, timestamp_from_fields, AnalysisWindow, Dispatch, EntityId, EntityKind, EventLog, EventPayload,
    ExecutionSlice, IrqId, IrqInvocation, Mode, SliceSet, TaskId, Timestamp, TraceEvent, IDLE_TASK,
};
pub use parser::{parse_line, parse_str, parse_trace, render_event, write_trace, DiagnosticKind, ParseDiagnostic};
pub use reports::{Format, Report, ReportKind, ReportOptions};
