//! Synthetic traces with known answers.
//!
//! A [`Scenario`] is a literal schedule: a sequence of task runs, each with
//! interrupt activations at fixed offsets. [`generate_trace`] turns it into
//! trace text and, independently of the replay engine, computes the
//! [`Manifest`] of net times and samples the analyzer must reproduce.
//!
//! Script format:
//!
//! ```text
//! # comments and blank lines are ignored
//! start 1290602      # absolute start time in us (default 0)
//! prior 5            # task running before the first switch (default 0)
//! final 3            # task switched to at the end (default 0)
//! run 3 76
//! run 4 158
//!   irq 16 74 23     # irq <id> <offset_us> <len_us>, relative to the run
//! ```
//!
//! Interrupts lie strictly inside their run and are either disjoint with a
//! gap or strictly nested, so no two generated events share a timestamp.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{RangeError, ScenarioError};
use crate::model::{EntityId, EntityKind, IrqId, TaskId, Timestamp, TraceEvent, IDLE_TASK};
use crate::parser::write_trace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct IrqSpec {
    pub irq: IrqId,
    pub offset_us: u64,
    pub len_us: u64,
}

impl IrqSpec {
    fn end_us(&self) -> u64 {
        self.offset_us + self.len_us
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Run {
    pub task: TaskId,
    pub gross_us: u64,
    pub irqs: Vec<IrqSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Scenario {
    pub start: Timestamp,
    pub prior_task: TaskId,
    pub final_task: TaskId,
    pub runs: Vec<Run>,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario { start: Timestamp::ZERO, prior_task: IDLE_TASK, final_task: IDLE_TASK, runs: Vec::new() }
    }
}

/// Ground truth for a generated trace.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Manifest {
    pub window_us: u64,
    /// Entities with non-zero net time.
    pub net_us: BTreeMap<EntityId, u64>,
    /// Per-dispatch net times for tasks, per-invocation net times for IRQs.
    pub dispatch_samples: BTreeMap<EntityId, Vec<u64>>,
    pub period_samples: BTreeMap<TaskId, Vec<u64>>,
}

impl Manifest {
    /// `entity,kind,net_us` rows followed by a `window_us,,<n>` footer.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("entity,kind,net_us\n");
        for (entity, net) in &self.net_us {
            writeln!(out, "{},{},{net}", entity.id, entity.kind.as_str()).unwrap();
        }
        writeln!(out, "window_us,,{}", self.window_us).unwrap();
        out
    }
}

/// Reads the net-time part of a manifest CSV back.
pub fn parse_manifest_csv(text: &str) -> Result<(BTreeMap<EntityId, u64>, u64), ScenarioError> {
    let err = |line: usize, message: &str| ScenarioError::Script { line, message: message.to_string() };
    let mut net = BTreeMap::new();
    let mut window = None;
    for (i, line) in text.lines().enumerate().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let [entity, kind, value] = fields[..] else {
            return Err(err(i + 1, "expected three columns"));
        };
        let value: u64 = value.parse().map_err(|_| err(i + 1, "bad net_us"))?;
        if entity == "window_us" {
            window = Some(value);
            continue;
        }
        let id: u32 = entity.parse().map_err(|_| err(i + 1, "bad entity id"))?;
        let kind = match kind {
            "task" => EntityKind::Task,
            "irq" => EntityKind::Irq,
            _ => return Err(err(i + 1, "bad kind")),
        };
        net.insert(EntityId { kind, id }, value);
    }
    Ok((net, window.ok_or_else(|| err(text.lines().count(), "missing window_us row"))?))
}

/// For each IRQ of a run (any order), the index of its innermost enclosing
/// IRQ. Fails on IRQs that stick out of the run, touch, or overlap without
/// nesting.
fn nesting(run: &Run) -> Result<Vec<Option<usize>>, (usize, String)> {
    for (i, irq) in run.irqs.iter().enumerate() {
        if irq.len_us == 0 {
            return Err((i, format!("IRQ {} has zero length", irq.irq)));
        }
        if irq.offset_us == 0 || irq.end_us() >= run.gross_us {
            return Err((
                i,
                format!(
                    "IRQ {} at offset {} length {} must lie strictly inside the {} us run",
                    irq.irq, irq.offset_us, irq.len_us, run.gross_us
                ),
            ));
        }
    }
    let mut order: Vec<usize> = (0..run.irqs.len()).collect();
    order.sort_by_key(|&i| (run.irqs[i].offset_us, std::cmp::Reverse(run.irqs[i].len_us)));
    let mut parent = vec![None; run.irqs.len()];
    let mut open: Vec<usize> = Vec::new();
    for i in order {
        let irq = run.irqs[i];
        while open.last().is_some_and(|&top| run.irqs[top].end_us() < irq.offset_us) {
            open.pop();
        }
        if let Some(&top) = open.last() {
            let outer = run.irqs[top];
            if irq.offset_us <= outer.offset_us || irq.end_us() >= outer.end_us() {
                return Err((
                    i,
                    format!(
                        "IRQ {} [{}, {}) neither nests strictly inside nor is separated from IRQ {} [{}, {})",
                        irq.irq,
                        irq.offset_us,
                        irq.end_us(),
                        outer.irq,
                        outer.offset_us,
                        outer.end_us()
                    ),
                ));
            }
            parent[i] = Some(top);
        }
        open.push(i);
    }
    Ok(parent)
}

impl Scenario {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        for (index, run) in self.runs.iter().enumerate() {
            if run.gross_us == 0 {
                return Err(ScenarioError::InvalidRun { run: index, message: "a run must last at least 1 us".into() });
            }
            nesting(run).map_err(|(_, message)| ScenarioError::InvalidRun { run: index, message })?;
        }
        Ok(())
    }

    pub fn window_us(&self) -> u64 {
        self.runs.iter().map(|r| r.gross_us).sum()
    }
}

fn script_error(line: usize, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Script { line, message: message.into() }
}

fn parse_number<T: std::str::FromStr>(token: Option<&str>, line: usize, what: &str) -> Result<T, ScenarioError> {
    token
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| script_error(line, format!("expected {what}")))
}

pub fn parse_script(text: &str) -> Result<Scenario, ScenarioError> {
    let mut scenario = Scenario::default();
    // Source line of each run and of each of its IRQs, for error reporting.
    let mut run_lines: Vec<(usize, Vec<usize>)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let content = raw.split('#').next().unwrap_or_default();
        let mut tokens = content.split_whitespace();
        let Some(keyword) = tokens.next() else { continue };
        match keyword {
            "run" => {
                let task = parse_number(tokens.next(), line_no, "a task id")?;
                let gross_us = parse_number(tokens.next(), line_no, "a gross duration in us")?;
                if gross_us == 0 {
                    return Err(script_error(line_no, "a run must last at least 1 us"));
                }
                scenario.runs.push(Run { task, gross_us, irqs: Vec::new() });
                run_lines.push((line_no, Vec::new()));
            }
            "irq" => {
                let irq = parse_number(tokens.next(), line_no, "an irq id")?;
                let offset_us = parse_number(tokens.next(), line_no, "an offset in us")?;
                let len_us = parse_number(tokens.next(), line_no, "a length in us")?;
                let Some(run) = scenario.runs.last_mut() else {
                    return Err(script_error(line_no, "irq line before any run"));
                };
                run.irqs.push(IrqSpec { irq, offset_us, len_us });
                run_lines.last_mut().expect("pushed with the run").1.push(line_no);
            }
            "start" => scenario.start = Timestamp::from_micros(parse_number(tokens.next(), line_no, "a start time in us")?),
            "prior" => scenario.prior_task = parse_number(tokens.next(), line_no, "a task id")?,
            "final" => scenario.final_task = parse_number(tokens.next(), line_no, "a task id")?,
            other => return Err(script_error(line_no, format!("unknown directive '{other}'"))),
        }
        if let Some(extra) = tokens.next() {
            return Err(script_error(line_no, format!("unexpected token '{extra}'")));
        }
    }
    for (run, (_, irq_lines)) in scenario.runs.iter().zip(&run_lines) {
        if let Err((irq_index, message)) = nesting(run) {
            return Err(script_error(irq_lines[irq_index], message));
        }
    }
    Ok(scenario)
}

/// The events a scenario describes, in timestamp order.
pub fn scenario_events(sc: &Scenario) -> Result<Vec<TraceEvent>, ScenarioError> {
    sc.validate()?;
    let end = sc.start.checked_add_micros(sc.window_us()).ok_or(RangeError::Overflow)?;
    if end > Timestamp::MAX_FORMATTABLE {
        return Err(RangeError::Unformattable(end.micros()).into());
    }
    let irq_events: usize = sc.runs.iter().map(|r| 2 * r.irqs.len()).sum();
    let mut events = Vec::with_capacity(sc.runs.len() + 1 + irq_events);
    let mut previous = sc.prior_task;
    let mut t = sc.start.micros();
    let mut run_events = Vec::new();
    for run in &sc.runs {
        events.push(TraceEvent::schedule(Timestamp::from_micros(t), previous, run.task));
        run_events.clear();
        for irq in &run.irqs {
            run_events.push(TraceEvent::irq_begin(Timestamp::from_micros(t + irq.offset_us), irq.irq));
            run_events.push(TraceEvent::irq_end(Timestamp::from_micros(t + irq.end_us()), irq.irq));
        }
        // Validated IRQs never share a timestamp, so this order is total.
        run_events.sort_by_key(|e| e.at);
        events.extend_from_slice(&run_events);
        previous = run.task;
        t += run.gross_us;
    }
    events.push(TraceEvent::schedule(Timestamp::from_micros(t), previous, sc.final_task));
    Ok(events)
}

/// Net times and samples computed from the scenario by subtraction alone.
pub fn manifest(sc: &Scenario) -> Result<Manifest, ScenarioError> {
    sc.validate()?;
    let mut m = Manifest { window_us: sc.window_us(), ..Manifest::default() };
    let mut schedule_ins: Vec<(TaskId, u64)> = Vec::with_capacity(sc.runs.len() + 1);
    let mut t = sc.start.micros();
    for (index, run) in sc.runs.iter().enumerate() {
        let parent = nesting(run).map_err(|(_, message)| ScenarioError::InvalidRun { run: index, message })?;
        let mut irq_net: Vec<u64> = run.irqs.iter().map(|i| i.len_us).collect();
        let mut task_net = run.gross_us;
        for (i, irq) in run.irqs.iter().enumerate() {
            match parent[i] {
                Some(p) => irq_net[p] -= irq.len_us,
                None => task_net -= irq.len_us,
            }
        }
        let task = EntityId::task(run.task);
        *m.net_us.entry(task).or_insert(0) += task_net;
        m.dispatch_samples.entry(task).or_default().push(task_net);
        for (irq, net) in run.irqs.iter().zip(irq_net) {
            let entity = EntityId::irq(irq.irq);
            *m.net_us.entry(entity).or_insert(0) += net;
            m.dispatch_samples.entry(entity).or_default().push(net);
        }
        schedule_ins.push((run.task, t));
        t += run.gross_us;
    }
    schedule_ins.push((sc.final_task, t));
    let mut last_in: BTreeMap<TaskId, u64> = BTreeMap::new();
    for (task, at) in schedule_ins {
        if let Some(prev) = last_in.insert(task, at) {
            m.period_samples.entry(task).or_default().push(at - prev);
        }
    }
    m.net_us.retain(|_, net| *net > 0);
    Ok(m)
}

/// Renders the scenario as trace text and computes its manifest.
pub fn generate_trace(sc: &Scenario) -> Result<(String, Manifest), ScenarioError> {
    let events = scenario_events(sc)?;
    let mut out = Vec::with_capacity(events.len() * 48);
    write_trace(&mut out, &events).expect("timestamps were range-checked");
    let text = String::from_utf8(out).expect("rendered traces are ASCII");
    Ok((text, manifest(sc)?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomParams {
    /// Task ids are drawn from `0..n_tasks`.
    pub n_tasks: u32,
    pub n_runs: usize,
    pub max_gross_us: u64,
    /// Chance of adding each further IRQ at each nesting level.
    pub irq_probability: f64,
    /// IRQ ids are drawn from `1..=n_irqs`.
    pub n_irqs: u32,
}

impl Default for RandomParams {
    fn default() -> Self {
        RandomParams { n_tasks: 6, n_runs: 50, max_gross_us: 1_000, irq_probability: 0.3, n_irqs: 8 }
    }
}

const MAX_IRQ_DEPTH: usize = 3;

/// Places IRQs inside `[lo, hi]` (offsets relative to the run start).
fn place_irqs(rng: &mut ChaCha8Rng, lo: u64, hi: u64, depth: usize, p: &RandomParams, out: &mut Vec<IrqSpec>) {
    let mut cursor = lo;
    while cursor < hi && rng.random_bool(p.irq_probability) {
        let begin = rng.random_range(cursor..hi);
        let end = rng.random_range(begin + 1..=hi);
        out.push(IrqSpec { irq: rng.random_range(1..=p.n_irqs), offset_us: begin, len_us: end - begin });
        if depth + 1 < MAX_IRQ_DEPTH && begin + 1 < end - 1 {
            place_irqs(rng, begin + 1, end - 1, depth + 1, p, out);
        }
        cursor = end + 1;
    }
}

/// A valid scenario drawn deterministically from `seed`.
///
/// # Panics
///
/// If `n_tasks`, `n_runs`, `max_gross_us` or `n_irqs` is zero.
pub fn random_scenario(seed: u64, params: &RandomParams) -> Scenario {
    assert!(params.n_tasks >= 1 && params.n_runs >= 1, "need at least one task and one run");
    assert!(params.max_gross_us >= 1 && params.n_irqs >= 1, "need a positive run length and IRQ id range");
    let p = RandomParams { irq_probability: params.irq_probability.clamp(0.0, 1.0), ..*params };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pick_task = |rng: &mut ChaCha8Rng| rng.random_range(0..p.n_tasks);
    let prior_task = pick_task(&mut rng);
    let runs = (0..p.n_runs)
        .map(|_| {
            let task = pick_task(&mut rng);
            let gross_us = rng.random_range(1..=p.max_gross_us);
            let mut irqs = Vec::new();
            if gross_us >= 3 {
                place_irqs(&mut rng, 1, gross_us - 1, 0, &p, &mut irqs);
            }
            Run { task, gross_us, irqs }
        })
        .collect();
    let final_task = pick_task(&mut rng);
    Scenario { start: Timestamp::ZERO, prior_task, final_task, runs }
}
