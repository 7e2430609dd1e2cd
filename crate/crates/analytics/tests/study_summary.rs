use spice_analytics::report::TestOutcome;
use spice_analytics::{analyze, load_records, summarize, Metric, TestKind};
use std::path::PathBuf;

fn fixture() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/study_summary.csv")
}

#[test]
fn group_means_match_table() {
    let recs = load_records(&fixture()).unwrap();
    assert_eq!(recs.len(), 50);
    let s = summarize(&recs).unwrap();
    let expect = [
        (Metric::Efficiency, 7.631, 8.526, 6.300),
        (Metric::Confidence, 5.310, 7.895, 5.400),
        (Metric::Taste, 6.166, 8.444, 6.500),
        (Metric::Difficulty, 7.894, 8.000, 7.800),
        (Metric::Duration, 559.58, 524.47, 471.30),
        (Metric::Stops, 10.0, 6.15, 6.0),
    ];
    for (m, a, sp, b) in expect {
        let row = s.row(m).unwrap();
        assert!((row.experiment_smartphone - a).abs() < 1e-9, "{m:?}");
        assert!((row.experiment_spice - sp).abs() < 1e-9, "{m:?}");
        assert!((row.validation - b).abs() < 1e-9, "{m:?}");
    }
}

// Reference statistics from scipy on the same fixture.
#[test]
fn tests_on_fixture_match_reference() {
    let recs = load_records(&fixture()).unwrap();
    let report = analyze(&recs).unwrap();
    let expect = [
        (Metric::Efficiency, TestKind::PairedT, 0.4079201569231556, 3.0281896885211297, 0.00691585357647373),
        (Metric::Taste, TestKind::PairedT, 0.07910019951514353, 5.755373216343952, 1.5148386147800226e-05),
        (Metric::Difficulty, TestKind::PairedT, 0.4761784399498933, 0.2823704354755072, 0.7807124864599312),
        (Metric::Duration, TestKind::PairedT, 0.6263851283213869, -1.194694079211604, 0.24690760759583932),
        (Metric::Stops, TestKind::PairedT, 0.4219994795075627, -3.963489065513436, 0.0008328345750092455),
    ];
    for (metric, kind, norm_p, stat, p) in expect {
        let t = report.tests.iter().find(|t| t.metric == metric).unwrap();
        let TestOutcome::Report(r) = &t.outcome else { panic!("{metric:?} failed") };
        assert_eq!(r.test, kind);
        assert!((r.normality_p - norm_p).abs() < 1e-4, "{metric:?}");
        assert!((r.statistic - stat).abs() < 1e-9, "{metric:?}");
        assert!((r.p_value - p).abs() < 1e-9, "{metric:?}");
    }
    let conf = report.tests.iter().find(|t| t.metric == Metric::Confidence).unwrap();
    let TestOutcome::Report(r) = &conf.outcome else { panic!() };
    assert_eq!(r.test, TestKind::Wilcoxon);
    assert!(r.normality_p < 0.05);
    assert_eq!(r.statistic, 1.0);
}

#[test]
fn selection_invariant_holds_for_every_metric() {
    let recs = load_records(&fixture()).unwrap();
    for t in analyze(&recs).unwrap().tests {
        if let TestOutcome::Report(r) = t.outcome {
            assert_eq!(r.normality_p < r.alpha, r.test == TestKind::Wilcoxon);
        }
    }
}

#[test]
fn text_report_lists_all_rows() {
    let recs = load_records(&fixture()).unwrap();
    let text = analyze(&recs).unwrap().to_text();
    for m in Metric::ALL {
        assert!(text.contains(m.label()));
    }
    assert!(text.contains("-40%"));
    assert!(text.contains("-17.44%"));
}
