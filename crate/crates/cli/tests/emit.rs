mod common;

use common::tiny;
use divsbl_cli::emit::{emit, load_csv, load_json, Format};
use divsbl_cli::harness::run_sweep;
use divsbl_cli::{Error, SweepAxis, SweepParam};

#[test]
fn csv_round_trips_metrics() {
    let mut cfg = tiny();
    cfg.sweep = vec![SweepAxis {
        param: SweepParam::GammaInitScale,
        values: vec![0.5, 2.0],
    }];
    let result = run_sweep(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    emit(&result, Format::Csv, &path).unwrap();
    let rows = load_csv(&path).unwrap();
    assert_eq!(rows.len(), 6);
    let originals = result
        .cells
        .iter()
        .flat_map(|c| c.records.iter().map(move |r| (c, r)));
    for (row, (cell, rec)) in rows.iter().zip(originals) {
        assert_eq!(row.params, cell.params);
        assert_eq!(row.metrics, rec.metrics);
        assert_eq!(row.seed, rec.seed);
        assert_eq!(row.beta, rec.beta);
        assert_eq!(row.snr_db, rec.snr_db);
    }
    let header = std::fs::read_to_string(&path)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_owned();
    assert!(header.starts_with("cell,gamma_init_scale,trial,seed,snr_db,nmse,corr"));
    assert!(!header.contains("elapsed"));
}

#[test]
fn json_round_trips_and_records_seeds() {
    let result = run_sweep(&tiny()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    emit(&result, Format::Json, &path).unwrap();
    assert_eq!(load_json(&path).unwrap(), result);
    let value: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(value["config"]["base_seed"], 42);
    let seeds: Vec<u64> = value["cells"][0]["records"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["seed"].as_u64().unwrap())
        .collect();
    assert_eq!(seeds, vec![42, 43, 44]);
    assert!(value["cells"][0]["records"][0]["data_seeds"]["noise"].is_u64());
    assert!(value["tool_version"].is_string());
    assert!(!value["cells"][0]["records"][0]["cost_trace"]
        .as_array()
        .unwrap()
        .is_empty());
}

#[test]
fn rerunning_the_json_config_reproduces_metrics() {
    let result = run_sweep(&tiny()).unwrap();
    let again = run_sweep(&result.config).unwrap();
    let metrics = |r: &divsbl_cli::SweepResult| {
        r.cells[0]
            .records
            .iter()
            .map(|t| t.metrics)
            .collect::<Vec<_>>()
    };
    assert_eq!(metrics(&result), metrics(&again));
}

#[test]
fn empty_result_writes_nothing() {
    let mut result = run_sweep(&tiny()).unwrap();
    result.cells.clear();
    let dir = tempfile::tempdir().unwrap();
    for (format, name) in [(Format::Csv, "e.csv"), (Format::Json, "e.json")] {
        let path = dir.path().join(name);
        assert!(matches!(
            emit(&result, format, &path),
            Err(Error::EmptySweep)
        ));
        assert!(!path.exists());
    }
}

#[test]
fn unwritable_path_is_an_io_error() {
    let result = run_sweep(&tiny()).unwrap();
    let err = emit(
        &result,
        Format::Csv,
        std::path::Path::new("/nonexistent-dir/x.csv"),
    )
    .unwrap_err();
    assert_eq!(err.exit_code(), 2, "{err}");
}
