//! Reader and writer for the line-oriented trace format:
//!
//! ```text
//! <0000h 00m 01s 290 602> Task schedule: old 5 new 3
//! <0000h 00m 01s 290 838> IRQ begin: 16
//! <0000h 00m 01s 290 861> IRQ end: 16
//! ```
//!
//! Input is accepted with any digit count per timestamp field and any run of
//! spaces or tabs between tokens; output is always the canonical fixed-width,
//! single-space layout.

use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{ParseError, RangeError};
use crate::model::{EventLog, EventPayload, Mode, Timestamp, TraceEvent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DiagnosticKind {
    MalformedTimestamp,
    UnknownEvent,
    MalformedPayload,
    NonMonotonicTimestamp,
}

/// A problem with a single line, before a line number is attached.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineError {
    pub kind: DiagnosticKind,
    pub message: String,
}

impl LineError {
    fn new(kind: DiagnosticKind, message: impl Into<String>) -> Self {
        LineError { kind, message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseDiagnostic {
    /// 1-based.
    pub line: usize,
    pub kind: DiagnosticKind,
    pub message: String,
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {:?}: {}", self.line, self.kind, self.message)
    }
}

fn is_blank(b: u8) -> bool {
    b == b' ' || b == b'\t'
}

fn parse_decimal(token: &str) -> Option<u64> {
    if token.is_empty() || !token.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    token.parse().ok()
}

fn parse_timestamp(inner: &str) -> Result<Timestamp, LineError> {
    let bad = |msg: &str| LineError::new(DiagnosticKind::MalformedTimestamp, format!("{msg} in <{inner}>"));
    let mut tokens = inner.split([' ', '\t']).filter(|t| !t.is_empty());
    let mut unit_field = |unit: char| {
        tokens
            .next()
            .and_then(|t| t.strip_suffix(unit))
            .and_then(parse_decimal)
            .ok_or_else(|| bad(&format!("expected a '{unit}' field")))
    };
    let h = unit_field('h')?;
    let m = unit_field('m')?;
    let s = unit_field('s')?;
    let mut plain_field = |name: &str| tokens.next().and_then(parse_decimal).ok_or_else(|| bad(&format!("expected {name}")));
    let ms = plain_field("milliseconds")?;
    let us = plain_field("microseconds")?;
    if tokens.next().is_some() {
        return Err(bad("trailing tokens"));
    }
    Timestamp::from_fields(h, m, s, ms, us).map_err(|e: RangeError| bad(&e.to_string()))
}

fn parse_id(token: Option<&str>, what: &str) -> Result<u32, LineError> {
    let bad = || LineError::new(DiagnosticKind::MalformedPayload, format!("expected a non-negative integer {what}"));
    let value = token.and_then(parse_decimal).ok_or_else(bad)?;
    u32::try_from(value).map_err(|_| bad())
}

fn parse_payload(text: &str) -> Result<EventPayload, LineError> {
    let mut tokens = text.split([' ', '\t']).filter(|t| !t.is_empty());
    let first = tokens.next();
    let second = tokens.next();
    let payload = match (first, second) {
        (Some("Task"), Some("schedule:")) => {
            let malformed = || LineError::new(DiagnosticKind::MalformedPayload, "expected 'old <task> new <task>'");
            if tokens.next() != Some("old") {
                return Err(malformed());
            }
            let old = parse_id(tokens.next(), "old task id")?;
            if tokens.next() != Some("new") {
                return Err(malformed());
            }
            let new = parse_id(tokens.next(), "new task id")?;
            EventPayload::TaskSchedule { old, new }
        }
        (Some("IRQ"), Some("begin:")) => EventPayload::IrqBegin(parse_id(tokens.next(), "irq id")?),
        (Some("IRQ"), Some("end:")) => EventPayload::IrqEnd(parse_id(tokens.next(), "irq id")?),
        _ => return Err(LineError::new(DiagnosticKind::UnknownEvent, format!("unrecognized event '{text}'"))),
    };
    if let Some(extra) = tokens.next() {
        return Err(LineError::new(DiagnosticKind::MalformedPayload, format!("unexpected trailing token '{extra}'")));
    }
    Ok(payload)
}

/// Parses one trace line (without its line terminator).
pub fn parse_line(text: &str) -> Result<TraceEvent, LineError> {
    let text = text.trim_matches(|c| c == ' ' || c == '\t');
    let Some(rest) = text.strip_prefix('<') else {
        return Err(LineError::new(DiagnosticKind::UnknownEvent, format!("unrecognized line '{text}'")));
    };
    let Some(close) = rest.find('>') else {
        return Err(LineError::new(DiagnosticKind::MalformedTimestamp, "missing '>' after timestamp"));
    };
    let at = parse_timestamp(&rest[..close])?;
    let tail = &rest[close + 1..];
    if !tail.bytes().next().is_some_and(is_blank) {
        return Err(LineError::new(DiagnosticKind::UnknownEvent, "expected whitespace after timestamp"));
    }
    let payload = parse_payload(tail)?;
    Ok(TraceEvent { at, payload })
}

/// Reads a whole trace. Blank lines are skipped.
///
/// In strict mode the first bad line (including a timestamp that goes
/// backwards) aborts the parse. In lenient mode bad lines are dropped and
/// recorded in [`EventLog::diagnostics`].
pub fn parse_trace<R: BufRead>(mut input: R, mode: Mode) -> Result<EventLog, ParseError> {
    let mut log = EventLog::default();
    let mut buf = String::new();
    let mut line_no = 0usize;
    loop {
        buf.clear();
        if input.read_line(&mut buf)? == 0 {
            break;
        }
        line_no += 1;
        let line = buf.trim_end_matches(['\n', '\r']);
        if line.bytes().all(is_blank) {
            continue;
        }
        let result = parse_line(line).and_then(|event| match log.events.last() {
            Some(prev) if event.at < prev.at => Err(LineError::new(
                DiagnosticKind::NonMonotonicTimestamp,
                format!("timestamp {} is earlier than the preceding event at {}", event.at, prev.at),
            )),
            _ => Ok(event),
        });
        match result {
            Ok(event) => log.events.push(event),
            Err(e) => {
                let diag = ParseDiagnostic { line: line_no, kind: e.kind, message: e.message };
                match mode {
                    Mode::Strict => return Err(ParseError::Line(diag)),
                    Mode::Lenient => log.diagnostics.push(diag),
                }
            }
        }
    }
    if log.events.is_empty() {
        return Err(ParseError::EmptyTrace);
    }
    Ok(log)
}

pub fn parse_str(text: &str, mode: Mode) -> Result<EventLog, ParseError> {
    parse_trace(text.as_bytes(), mode)
}

/// Renders one event in the canonical layout, without a line terminator.
pub fn render_event(event: &TraceEvent) -> Result<String, RangeError> {
    let at = event.at.format()?;
    Ok(match event.payload {
        EventPayload::TaskSchedule { old, new } => format!("<{at}> Task schedule: old {old} new {new}"),
        EventPayload::IrqBegin(irq) => format!("<{at}> IRQ begin: {irq}"),
        EventPayload::IrqEnd(irq) => format!("<{at}> IRQ end: {irq}"),
    })
}

fn write_event<W: Write>(out: &mut W, event: &TraceEvent) -> std::io::Result<()> {
    if event.at > Timestamp::MAX_FORMATTABLE {
        return Err(std::io::Error::other(RangeError::Unformattable(event.at.micros())));
    }
    write!(out, "<{}> ", event.at)?;
    match event.payload {
        EventPayload::TaskSchedule { old, new } => write!(out, "Task schedule: old {old} new {new}"),
        EventPayload::IrqBegin(irq) => write!(out, "IRQ begin: {irq}"),
        EventPayload::IrqEnd(irq) => write!(out, "IRQ end: {irq}"),
    }
}

/// Writes events as an LF-terminated trace file.
pub fn write_trace<W: Write>(out: &mut W, events: &[TraceEvent]) -> std::io::Result<()> {
    for event in events {
        write_event(out, event)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
