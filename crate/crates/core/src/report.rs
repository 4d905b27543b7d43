//! Run outputs: one JSON document per dataset, an aggregate accuracy table
//! and a ranked summary.
//!
//! Layout of a run directory:
//!
//! ```text
//! reports/<dataset id>.json   every EvalReport of that dataset
//! aggregate.csv               dataset rows x estimator columns, test accuracy
//! summary.csv                 estimators ranked by test accuracy per dataset
//! ```
//!
//! The CSV files hold no timings, so two runs with the same seeds produce
//! identical bytes. Accuracies are printed in Rust's shortest round-trip
//! form; parsing a cell gives back the exact value in the JSON report.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::dataset::write_atomic;
use crate::error::{Error, Result};
use crate::estimators::EstimatorKind;
use crate::modelsel::{EvalReport, ReportStatus};

pub const REPORTS_DIR: &str = "reports";
pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const SUMMARY_FILE: &str = "summary.csv";

pub fn report_path(run_dir: &Path, dataset_id: &str) -> PathBuf {
    run_dir.join(REPORTS_DIR).join(format!("{dataset_id}.json"))
}

/// Write the reports of one dataset. All of them must carry the same id.
pub fn write_dataset_reports(run_dir: &Path, reports: &[EvalReport]) -> Result<PathBuf> {
    let id = match reports.first() {
        Some(r) => &r.dataset_id,
        None => return Err(Error::invalid("no reports to write")),
    };
    if reports.iter().any(|r| &r.dataset_id != id) {
        return Err(Error::invalid("reports of different datasets in one file"));
    }
    let path = report_path(run_dir, id);
    let mut text = serde_json::to_string_pretty(reports).map_err(|e| Error::Format(e.to_string()))?;
    text.push('\n');
    write_atomic(&path, text.as_bytes())?;
    Ok(path)
}

/// Every report under `run_dir/reports`, sorted by dataset id and then by
/// estimator, so the result does not depend on directory order.
pub fn load_reports(run_dir: &Path) -> Result<Vec<EvalReport>> {
    let dir = run_dir.join(REPORTS_DIR);
    let entries = match fs::read_dir(&dir) {
        Ok(e) => e,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(Error::MissingInput(dir)),
        Err(e) => return Err(e.into()),
    };
    let mut out = Vec::new();
    for entry in entries {
        let path = entry?.path();
        if path.extension().and_then(|s| s.to_str()) != Some("json") {
            continue;
        }
        let text = fs::read_to_string(&path)?;
        let mut reports: Vec<EvalReport> = serde_json::from_str(&text)
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        out.append(&mut reports);
    }
    if out.is_empty() {
        return Err(Error::MissingInput(dir));
    }
    out.sort_by(|a, b| {
        a.dataset_id
            .cmp(&b.dataset_id)
            .then(a.estimator.cmp(&b.estimator))
    });
    Ok(out)
}

fn cell(r: &EvalReport) -> String {
    match r.status {
        ReportStatus::Ok => format!("{}", r.test_accuracy),
        ReportStatus::Failed => "failed".into(),
    }
}

/// Wide table: one row per dataset, one column per estimator present in
/// any report, cells are test accuracy in percent. Missing cells are empty.
pub fn aggregate_csv(reports: &[EvalReport]) -> String {
    let mut kinds: Vec<EstimatorKind> = reports.iter().map(|r| r.estimator).collect();
    kinds.sort();
    kinds.dedup();
    let mut ids: Vec<&str> = reports.iter().map(|r| r.dataset_id.as_str()).collect();
    ids.sort();
    ids.dedup();

    let mut out = String::from("dataset");
    for k in &kinds {
        out.push(',');
        out.push_str(k.short_name());
    }
    out.push('\n');
    for id in ids {
        out.push_str(id);
        for k in &kinds {
            out.push(',');
            if let Some(r) = reports.iter().find(|r| r.dataset_id == id && r.estimator == *k) {
                out.push_str(&cell(r));
            }
        }
        out.push('\n');
    }
    out
}

/// Reports of one dataset ordered best first. Failed reports go last; ties
/// keep the estimator order.
pub fn rank<'a>(reports: &'a [EvalReport], dataset_id: &str) -> Vec<&'a EvalReport> {
    let mut rows: Vec<&EvalReport> = reports.iter().filter(|r| r.dataset_id == dataset_id).collect();
    rows.sort_by(|a, b| {
        let key = |r: &EvalReport| if r.is_ok() { r.test_accuracy } else { f64::NEG_INFINITY };
        key(b)
            .total_cmp(&key(a))
            .then(a.estimator.cmp(&b.estimator))
    });
    rows
}

fn dataset_ids(reports: &[EvalReport]) -> Vec<&str> {
    let mut ids: Vec<&str> = reports.iter().map(|r| r.dataset_id.as_str()).collect();
    ids.sort();
    ids.dedup();
    ids
}

pub fn summary_csv(reports: &[EvalReport]) -> String {
    let mut out = String::from("dataset,rank,estimator,test_accuracy,validation_accuracy,selected_params\n");
    for id in dataset_ids(reports) {
        for (i, r) in rank(reports, id).into_iter().enumerate() {
            let params = r
                .selected_params
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect::<Vec<_>>()
                .join(" ");
            let (test, valid) = match r.status {
                ReportStatus::Ok => (format!("{}", r.test_accuracy), format!("{}", r.validation_accuracy)),
                ReportStatus::Failed => ("failed".into(), "failed".into()),
            };
            let _ = writeln!(out, "{id},{},{},{test},{valid},{params}", i + 1, r.estimator.short_name());
        }
    }
    out
}

/// Human-readable ranking for the terminal.
pub fn summary_text(reports: &[EvalReport]) -> String {
    let mut out = String::new();
    for id in dataset_ids(reports) {
        let _ = writeln!(out, "{id}");
        for (i, r) in rank(reports, id).into_iter().enumerate() {
            match r.status {
                ReportStatus::Ok => {
                    let _ = writeln!(
                        out,
                        "  {:>2}. {:<4} test {:>6.2}%  valid {:>6.2}%",
                        i + 1,
                        r.estimator.short_name(),
                        r.test_accuracy,
                        r.validation_accuracy
                    );
                }
                ReportStatus::Failed => {
                    let _ = writeln!(
                        out,
                        "  {:>2}. {:<4} failed: {}",
                        i + 1,
                        r.estimator.short_name(),
                        r.error.as_deref().unwrap_or("unknown error")
                    );
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(id: &str, kind: EstimatorKind, acc: f64) -> EvalReport {
        EvalReport {
            dataset_id: id.into(),
            estimator: kind,
            status: ReportStatus::Ok,
            error: None,
            selected_params: vec![],
            candidates: vec![],
            validation_accuracy: acc,
            test_accuracy: acc,
            confusion: vec![],
            grid_search_ms: 1.0,
            fit_ms: 1.0,
            predict_ms: 1.0,
            n_train: 1,
            n_valid: 1,
            n_test: 1,
            dropped: 0,
        }
    }

    #[test]
    fn ranking_ignores_input_order() {
        use EstimatorKind::*;
        let mut rs = vec![
            report("a", DecisionTree, 70.0),
            report("a", RandomForest, 90.0),
            report("a", ExtraTrees, 90.0),
            report("a", KNearestNeighbors, 80.0),
        ];
        let first: Vec<_> = rank(&rs, "a").iter().map(|r| r.estimator).collect();
        rs.reverse();
        let second: Vec<_> = rank(&rs, "a").iter().map(|r| r.estimator).collect();
        assert_eq!(first, second);
        assert_eq!(first, [RandomForest, ExtraTrees, KNearestNeighbors, DecisionTree]);
        assert_eq!(summary_csv(&rs).lines().count(), 5);
    }

    #[test]
    fn aggregate_cells_round_trip() {
        let acc = 100.0 * 173.0 / 300.0;
        let rs = vec![report("x", EstimatorKind::RandomForest, acc)];
        let csv = aggregate_csv(&rs);
        let cell: f64 = csv.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(cell, acc);
    }

    #[test]
    fn failed_reports_survive_json() {
        let mut r = report("x", EstimatorKind::Perceptron, 0.0);
        r.status = ReportStatus::Failed;
        r.test_accuracy = f64::NAN;
        r.validation_accuracy = f64::NAN;
        r.error = Some("boom".into());
        let dir = tempfile::tempdir().unwrap();
        write_dataset_reports(dir.path(), &[r]).unwrap();
        let back = load_reports(dir.path()).unwrap();
        assert!(back[0].test_accuracy.is_nan());
        assert_eq!(back[0].status, ReportStatus::Failed);
        assert!(aggregate_csv(&back).contains("failed"));
    }

    #[test]
    fn empty_run_dir_is_missing_input() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_reports(dir.path()), Err(Error::MissingInput(_))));
        fs::create_dir(dir.path().join(REPORTS_DIR)).unwrap();
        assert!(matches!(load_reports(dir.path()), Err(Error::MissingInput(_))));
    }
}
