use std::fs;

use tempfile::tempdir;
use tracebo_core::circuit::obstacle_contact;
use tracebo_core::harness::{
    enumerate_oracle, execute, export_plotdata, history_to_string, read_history, read_oracle,
    read_summary, run_experiment, simulate_once, write_history, write_oracle, ExportKind,
    HistoryRow, HISTORY_HEADER,
};
use tracebo_core::{load_voltage, ExperimentKind, ExperimentSpec, Pattern, ShapeKind};

fn short(kind: ExperimentKind, seed: u64) -> ExperimentSpec {
    let mut spec = ExperimentSpec::of_kind(kind).with_seed(seed);
    spec.config.n_iter = 8;
    spec
}

#[test]
fn run_writes_history_and_summary() {
    let dir = tempdir().unwrap();
    let spec = ExperimentSpec::baseline().with_seed(42);
    let result = run_experiment(&spec, dir.path()).unwrap();
    let run = dir.path().join("baseline").join("42");

    let text = fs::read_to_string(run.join("history.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), HISTORY_HEADER.join(","));
    assert_eq!(lines.count(), 45);

    let summary = read_summary(&run.join("summary.json")).unwrap();
    assert_eq!(summary.trials, 45);
    assert_eq!(summary.best_voltage, result.best_voltage);
    assert_eq!(summary.best_pattern, result.best_pattern.to_string());
    let max = result
        .history
        .iter()
        .map(|r| r.voltage)
        .fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(result.best_voltage, max);
}

#[test]
fn history_round_trip() {
    let dir = tempdir().unwrap();
    let result = execute(&short(ExperimentKind::Obstacle, 5)).unwrap();
    let path = dir.path().join("h.csv");
    write_history(&path, &result.history).unwrap();
    let parsed = read_history(&path).unwrap();
    let expected: Vec<HistoryRow> = result
        .history
        .iter()
        .map(|r| HistoryRow::from_record(r).unwrap())
        .collect();
    assert_eq!(parsed, expected);
    for (row, rec) in parsed.iter().zip(&result.history) {
        assert_eq!(row.iter, rec.iteration);
        assert_eq!(row.offsets.to_vec(), rec.input.continuous);
        assert!((row.voltage - rec.voltage).abs() <= 1e-8 * rec.voltage.abs().max(1.0));
        assert!(row.p_circle.iter().all(|p| (0.0..=1.0).contains(p)));
    }
    // Re-emitting the parsed rows is byte-identical.
    let again = fs::read_to_string(&path).unwrap();
    assert_eq!(again, history_to_string(&result.history));
}

#[test]
fn identical_seeds_give_identical_files() {
    let a = tempdir().unwrap();
    let b = tempdir().unwrap();
    for dir in [&a, &b] {
        run_experiment(&short(ExperimentKind::Baseline, 9), dir.path()).unwrap();
    }
    let read = |d: &tempfile::TempDir| fs::read(d.path().join("baseline/9/history.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    let other = execute(&short(ExperimentKind::Baseline, 10)).unwrap();
    assert_ne!(history_to_string(&other.history).into_bytes(), read(&a));
}

#[test]
fn best_pattern_replays_bit_exactly() {
    for kind in [ExperimentKind::Baseline, ExperimentKind::Obstacle] {
        let spec = short(kind, 3);
        let result = execute(&spec).unwrap();
        let report = simulate_once(&result.best_pattern, &spec).unwrap();
        assert_eq!(report.load_voltage.to_bits(), result.best_voltage.to_bits());
        // Also after a trip through the printed pattern string.
        let reparsed: Pattern = result.best_pattern.to_string().parse().unwrap();
        assert_eq!(
            load_voltage(&reparsed, &spec).unwrap().to_bits(),
            result.best_voltage.to_bits()
        );
    }
}

#[test]
fn contact_trials_are_penalized() {
    let spec = ExperimentSpec::obstacle().with_seed(1);
    let result = execute(&spec).unwrap();
    let free = spec.without_obstacle();
    for rec in &result.history {
        let p = rec.pattern().unwrap();
        let open = load_voltage(&p, &free).unwrap();
        if obstacle_contact(&p) && open > 0.0 {
            assert!(rec.voltage < open, "{p}: {} vs {open}", rec.voltage);
        } else if !obstacle_contact(&p) {
            assert_eq!(rec.voltage, open);
        }
    }
}

#[test]
fn simulate_report_examples() {
    let base = ExperimentSpec::baseline();
    let obs = ExperimentSpec::obstacle();
    let lines = simulate_once(&"LLLLL@0,0,0".parse().unwrap(), &base).unwrap();
    assert!((lines.load_voltage - 11.157).abs() < 1e-3);
    assert_eq!(lines.resistance, Some(76.0));
    assert!(
        simulate_once(&"LLCLL@0,0,0".parse().unwrap(), &obs)
            .unwrap()
            .contact
    );
    assert!(
        !simulate_once(&"LLLLL@-20,0,20".parse().unwrap(), &obs)
            .unwrap()
            .contact
    );
    let text = lines.to_string();
    assert!(text.contains("load_voltage_V: 11.1570248"));
    assert!(text.contains("resistance_ohm: 76"));
}

#[test]
fn oracle_table_and_exports() {
    let dir = tempdir().unwrap();
    let table = enumerate_oracle(&ExperimentSpec::baseline(), 20.0).unwrap();
    assert_eq!(table.entries.len(), 32 * 27);
    let best = table.best();
    assert!(
        best.pattern.shapes.iter().all(|&s| s == ShapeKind::Circle),
        "{}",
        best.pattern
    );

    let oracle = dir.path().join("oracle.csv");
    write_oracle(&oracle, &table).unwrap();
    let parsed = read_oracle(&oracle).unwrap();
    assert_eq!(parsed.len(), table.entries.len());
    for (a, b) in parsed.iter().zip(&table.entries) {
        assert_eq!(a.pattern, b.pattern);
        assert_eq!(a.contact, b.contact);
        assert_eq!(a.resistance.is_some(), b.resistance.is_some());
    }

    let by_k = export_plotdata(ExportKind::ResistanceByCircles, &oracle).unwrap();
    let rows: Vec<&str> = by_k.lines().collect();
    assert_eq!(
        rows[0],
        "k,connected,disconnected,mean_ohms,min_ohms,max_ohms"
    );
    assert_eq!(rows.len(), 7);
    assert!(rows[1].starts_with("0,"));

    let history = dir.path().join("h.csv");
    let run = execute(&ExperimentSpec::baseline().with_seed(42)).unwrap();
    write_history(&history, &run.history).unwrap();
    let trace = export_plotdata(ExportKind::VoltageTrace, &history).unwrap();
    assert_eq!(trace.lines().next().unwrap(), "iter,voltage,best_so_far");
    assert_eq!(trace.lines().count(), 46);
    let heat = export_plotdata(ExportKind::ProbabilityHeatmap, &history).unwrap();
    assert_eq!(heat.lines().count(), 46);
    for line in heat.lines().skip(1) {
        let vals: Vec<f64> = line
            .split(',')
            .skip(1)
            .map(|v| v.parse().unwrap())
            .collect();
        assert_eq!(vals.len(), 5);
        assert!(vals.iter().all(|p| (0.0..=1.0).contains(p)));
    }
    // Idempotent.
    assert_eq!(
        trace,
        export_plotdata(ExportKind::VoltageTrace, &history).unwrap()
    );
    // Wrong input type is an error, not a silent empty table.
    assert!(export_plotdata(ExportKind::VoltageTrace, &oracle).is_err());
    assert!(export_plotdata(ExportKind::ResistanceByCircles, &history).is_err());
}

#[test]
fn missing_input_reports_path() {
    let err = read_history(std::path::Path::new("/nonexistent/history.csv")).unwrap_err();
    assert!(
        err.to_string().contains("/nonexistent/history.csv"),
        "{err}"
    );
}
