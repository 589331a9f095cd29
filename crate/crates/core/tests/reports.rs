mod common;

use common::{brute_force_charges, sample_log, sample_slices};
use schedtrace_core::reports::{
    self, average_load, parse_json, render, task_statistics, timeline, utilization, Segment, SegmentState,
};
use schedtrace_core::{
    build_slices, AnalysisWindow, EntityId, EventLog, Format, Mode, Report, ReportError, Timestamp, TraceEvent,
};

fn ts(us: u64) -> Timestamp {
    Timestamp::from_micros(us)
}

fn window(a: u64, b: u64) -> AnalysisWindow {
    AnalysisWindow::new(ts(a), ts(b)).unwrap()
}

fn single_task(task: u32, len: u64) -> schedtrace_core::SliceSet {
    let log = EventLog::new(vec![TraceEvent::schedule(ts(0), 0, task), TraceEvent::schedule(ts(len), task, 0)]);
    build_slices(&log, Mode::Strict).unwrap()
}

#[test]
fn sample_matches_brute_force() {
    assert_eq!(sample_slices().net_times(), brute_force_charges(&sample_log()));
}

#[test]
fn sample_average_load() {
    let load = average_load(&sample_slices()).unwrap();
    assert_eq!(load.rows.len(), 7);
    assert_eq!(load.total_us(), 628);
    let util = |e| load.row(e).unwrap().utilization;
    assert_eq!(util(EntityId::task(5)), 182.0 / 628.0);
    assert_eq!(util(EntityId::task(4)), 135.0 / 628.0);
    assert_eq!(util(EntityId::irq(16)), 23.0 / 628.0);
    assert!((util(EntityId::task(5)) - 0.2898).abs() < 5e-5);
    assert!((util(EntityId::task(4)) - 0.2150).abs() < 5e-5);
    assert!((util(EntityId::irq(16)) - 0.0366).abs() < 5e-5);
    assert_eq!(load.idle_fraction, 0.0);
    let sum: f64 = load.rows.iter().map(|r| r.utilization).sum();
    assert!((sum - 1.0).abs() < 1e-9);
}

#[test]
fn single_task_load_and_utilization() {
    let set = single_task(7, 100);
    let load = average_load(&set).unwrap();
    assert_eq!(load.rows.len(), 1);
    assert_eq!(load.rows[0].utilization, 1.0);
    assert_eq!(load.idle_fraction, 0.0);
    for width in [1, 7, 33, 100, 1000] {
        let u = utilization(&set, width, None).unwrap();
        for slot in &u.slots {
            assert_eq!(slot.entries.len(), 1);
            assert_eq!(slot.entries[0].fraction, 1.0);
        }
    }
}

#[test]
fn empty_window_errors() {
    let log = EventLog::new(vec![TraceEvent::schedule(ts(5), 0, 1)]);
    let set = build_slices(&log, Mode::Strict).unwrap();
    assert_eq!(average_load(&set), Err(ReportError::EmptyWindow));
    assert_eq!(utilization(&set, 10, None), Err(ReportError::EmptyWindow));
    assert_eq!(task_statistics(&set, 20), Err(ReportError::EmptyWindow));
    assert_eq!(timeline(&set, None), Err(ReportError::EmptyWindow));
    let sample = sample_slices();
    assert_eq!(utilization(&sample, 10, Some(window(0, 1_000))), Err(ReportError::EmptyWindow));
    assert_eq!(utilization(&sample, 0, None), Err(ReportError::ZeroSlotWidth));
    assert!(task_statistics(&sample, 0).is_err());
}

#[test]
fn sample_single_slot_equals_load() {
    let set = sample_slices();
    let load = average_load(&set).unwrap();
    let u = utilization(&set, 628, None).unwrap();
    assert_eq!(u.slots.len(), 1);
    assert!(!u.slots[0].partial);
    let slot: Vec<(EntityId, f64)> = u.slots[0].entries.iter().map(|e| (e.entity, e.fraction)).collect();
    let rows: Vec<(EntityId, f64)> = load.rows.iter().map(|r| (r.entity, r.utilization)).collect();
    assert_eq!(slot, rows);
}

#[test]
fn sample_two_slots() {
    let u = utilization(&sample_slices(), 314, None).unwrap();
    assert_eq!(u.slots.len(), 2);
    let charged = |i: usize| -> Vec<(EntityId, u64)> { u.slots[i].entries.iter().map(|e| (e.entity, e.charged_us)).collect() };
    assert_eq!(
        charged(0),
        vec![(EntityId::task(1), 86), (EntityId::task(3), 76), (EntityId::task(4), 129), (EntityId::irq(16), 23)]
    );
    assert_eq!(
        charged(1),
        vec![(EntityId::task(2), 93), (EntityId::task(4), 6), (EntityId::task(5), 182), (EntityId::irq(23), 33)]
    );
    assert_eq!(u.slots[1].start, ts(1_290_916));
    assert_eq!(u.slots[0].entries[2].fraction, 129.0 / 314.0);
}

#[test]
fn partial_final_slot_is_normalized_by_its_span() {
    let u = utilization(&sample_slices(), 500, None).unwrap();
    assert_eq!(u.slots.len(), 2);
    assert!(u.slots[1].partial);
    assert_eq!(u.slots[1].span_us, 128);
    let sum: f64 = u.slots[1].entries.iter().map(|e| e.fraction).sum();
    assert!((sum - 1.0).abs() < 1e-9);
}

#[test]
fn zoom_restricts_to_range() {
    let set = sample_slices();
    let u = utilization(&set, 1_000_000, Some(window(1_290_764, 1_290_922))).unwrap();
    assert_eq!(u.slots.len(), 1);
    let charged: Vec<(EntityId, u64)> = u.slots[0].entries.iter().map(|e| (e.entity, e.charged_us)).collect();
    assert_eq!(charged, vec![(EntityId::task(4), 135), (EntityId::irq(16), 23)]);
    // A range reaching past the window is clipped to it.
    let clipped = utilization(&set, 10, Some(window(0, 1_290_700))).unwrap();
    assert_eq!(clipped.range, window(1_290_602, 1_290_700));
}

#[test]
fn sample_task_statistics() {
    let stats = task_statistics(&sample_slices(), 20).unwrap();
    assert_eq!(stats.rows.len(), 7);
    let t4 = stats.row(EntityId::task(4)).unwrap();
    assert_eq!(t4.dispatches, 1);
    assert_eq!((t4.minimum_us(), t4.worst_case_us(), t4.average_us()), (135, 135, 135.0));
    assert_eq!(t4.utilization(), 135.0 / 628.0);
    assert!(t4.period.is_none());
    let irq23 = stats.row(EntityId::irq(23)).unwrap();
    assert_eq!((irq23.dispatches, irq23.execution.summary.max_us), (1, 33));
    assert!(irq23.period.is_none());
    let t3 = stats.row(EntityId::task(3)).unwrap();
    assert_eq!(t3.period.as_ref().unwrap().summary.min_us, 628);
    assert_eq!(t3.period.as_ref().unwrap().summary.count, 1);
    let shares: f64 = stats.rows.iter().map(|r| r.share).sum();
    assert!((shares - 1.0).abs() < 1e-9);
    let sums: u64 = stats.rows.iter().map(|r| r.execution.summary.sum_us).sum();
    assert_eq!(sums, 628);
}

#[test]
fn sample_timeline() {
    let tl = timeline(&sample_slices(), None).unwrap();
    let seg = |state, a, b| Segment { state, start: ts(a), end: ts(b) };
    assert_eq!(
        tl.entity(EntityId::task(4)).unwrap().segments,
        vec![
            seg(SegmentState::Inactive, 1_290_602, 1_290_764),
            seg(SegmentState::Running, 1_290_764, 1_290_838),
            seg(SegmentState::PreemptedByIrq, 1_290_838, 1_290_861),
            seg(SegmentState::Running, 1_290_861, 1_290_922),
            seg(SegmentState::Inactive, 1_290_922, 1_291_230),
        ]
    );
    assert_eq!(
        tl.entity(EntityId::irq(16)).unwrap().segments,
        vec![
            seg(SegmentState::Inactive, 1_290_602, 1_290_838),
            seg(SegmentState::Active, 1_290_838, 1_290_861),
            seg(SegmentState::Inactive, 1_290_861, 1_291_230),
        ]
    );
    // Task 5 ran only before the window, so it is listed but never running.
    assert_eq!(tl.entities.len(), 7);
}

#[test]
fn timeline_zoom_keeps_entities_inactive_in_range() {
    let tl = timeline(&sample_slices(), Some(window(1_290_764, 1_290_922))).unwrap();
    assert_eq!(tl.entities.len(), 7);
    let t2 = tl.entity(EntityId::task(2)).unwrap();
    assert_eq!(t2.segments, vec![Segment { state: SegmentState::Inactive, start: ts(1_290_764), end: ts(1_290_922) }]);
}

#[test]
fn load_csv_shape() {
    let report = Report::Load(average_load(&single_task(7, 100)).unwrap());
    let csv = String::from_utf8(render(&report, Format::Csv)).unwrap();
    assert_eq!(csv, "entity,kind,net_us,utilization\n7,task,100,1.000000\n");
}

#[test]
fn csv_headers() {
    let set = sample_slices();
    let opts = reports::ReportOptions::default();
    let header = |kind| {
        let r = reports::compute(kind, &set, &opts).unwrap();
        String::from_utf8(render(&r, Format::Csv)).unwrap().lines().next().unwrap().to_string()
    };
    use schedtrace_core::ReportKind::*;
    assert_eq!(header(Utilization), "slot_start_us,slot_span_us,entity,kind,fraction");
    assert_eq!(
        header(Stats),
        "entity,kind,share,dispatches,min_us,max_us,mean_us,exp_rate_per_us,exp_ks,uni_lower_us,uni_upper_us,uni_ks"
    );
    assert_eq!(header(Timeline), "entity,kind,state,start_us,end_us");
    let stats = task_statistics(&set, 20).unwrap();
    let hist = String::from_utf8(reports::render_histograms_csv(&stats)).unwrap();
    assert!(hist.starts_with("entity,kind,series,bin_lower,bin_upper,count\n"));
    assert!(hist.contains("3,task,period,628.000,629.000,1\n"));
    assert!(hist.contains("4,task,exec,135.000,136.000,1\n"));
}

#[test]
fn sample_stats_csv_rows() {
    let r = Report::Stats(task_statistics(&sample_slices(), 20).unwrap());
    let csv = String::from_utf8(render(&r, Format::Csv)).unwrap();
    assert!(csv.contains("\n4,task,0.214968,1,135,135,135.000,7.407407e-3,0.632121,135,135,0.000000\n"), "{csv}");
}

#[test]
fn sample_load_text() {
    let r = Report::Load(average_load(&sample_slices()).unwrap());
    let text = String::from_utf8(render(&r, Format::Text)).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| l.starts_with("task ") || l.starts_with("irq ")).collect();
    assert_eq!(rows.len(), 7);
    let total = text.lines().find(|l| l.starts_with("total")).unwrap();
    assert!(total.contains("628 us"), "{total}");
    assert!(total.ends_with("1.000000"));
}

#[test]
fn sample_stats_text_mentions_task4() {
    let r = Report::Stats(task_statistics(&sample_slices(), 20).unwrap());
    let text = String::from_utf8(render(&r, Format::Text)).unwrap();
    let line = text.lines().find(|l| l.starts_with("task 4")).unwrap();
    assert!(line.contains("135 us"), "{line}");
    let header = text.lines().find(|l| l.starts_with("entity")).unwrap();
    for column in ["utilization", "worst_case", "minimum", "average"] {
        assert!(header.contains(column));
    }
}

#[test]
fn json_round_trips_every_report() {
    let set = sample_slices();
    let opts = reports::ReportOptions { slot_width_us: 100, ..Default::default() };
    for kind in schedtrace_core::ReportKind::ALL {
        let report = reports::compute(kind, &set, &opts).unwrap();
        let json = render(&report, Format::Json);
        let text = String::from_utf8(json.clone()).unwrap();
        assert!(text.contains("\"time\": \"us\""));
        assert_eq!(parse_json(&json).unwrap(), report, "{kind:?}");
    }
}

#[test]
fn renders_are_deterministic() {
    let set = sample_slices();
    let opts = reports::ReportOptions::default();
    for kind in schedtrace_core::ReportKind::ALL {
        for format in [Format::Text, Format::Csv, Format::Json] {
            let a = render(&reports::compute(kind, &set, &opts).unwrap(), format);
            let b = render(&reports::compute(kind, &sample_slices(), &opts).unwrap(), format);
            assert_eq!(a, b);
        }
    }
}

#[test]
fn idle_is_labelled_in_text() {
    let log = EventLog::new(vec![
        TraceEvent::schedule(ts(0), 1, 0),
        TraceEvent::schedule(ts(40), 0, 1),
        TraceEvent::schedule(ts(100), 1, 0),
    ]);
    let load = average_load(&build_slices(&log, Mode::Strict).unwrap()).unwrap();
    assert_eq!(load.idle_fraction, 0.4);
    let text = String::from_utf8(render(&Report::Load(load), Format::Text)).unwrap();
    assert!(text.lines().any(|l| l.starts_with("idle ")));
    assert!(text.contains("idle fraction: 0.400000"));
}
