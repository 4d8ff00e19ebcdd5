mod common;

use common::{at, golden_package, hash_tree, refresh_navigation, set_body};
use labpack::catalog::{builtin_catalog, builtin_checklist, RequirementLevel};
use labpack::export::{export_html, ExportError};
use labpack::lifecycle::{missing_components, publish_core_version, LifecycleError};
use labpack::lint::check_completeness;
use labpack::store::serialize_package;

#[test]
fn golden_fixture_has_no_missing_components() {
    let package = golden_package();
    let missing = missing_components(&package, &builtin_catalog());
    assert!(missing.is_empty(), "missing: {:?}", missing.entries);
}

#[test]
fn emptying_one_section_lists_exactly_that_component() {
    let mut package = golden_package();
    set_body(&mut package, "4.5.1", Some(String::new()));
    let missing = missing_components(&package, &builtin_catalog());
    assert_eq!(missing.entries.len(), 1);
    assert_eq!(missing.entries[0].number.to_string(), "4.5.1");
    assert_eq!(missing.entries[0].title, "Data collection");
    assert_eq!(missing.entries[0].level, RequirementLevel::Mandatory);
}

#[test]
fn missing_components_is_consistent_with_completeness() {
    let catalog = builtin_catalog();
    for mutate in [None, Some("4.3.2"), Some("1.2")] {
        let mut package = golden_package();
        if let Some(number) = mutate {
            set_body(&mut package, number, None);
        }
        let missing = missing_components(&package, &catalog);
        let report = check_completeness(&package, &catalog);
        let recommended_warnings = report
            .findings
            .iter()
            .filter(|f| f.code == labpack::finding::FindingCode::MissingRecommendedSection)
            .count();
        assert_eq!(
            missing.is_empty(),
            report.completeness_ratio() == 1.0 && recommended_warnings == 0
        );
    }
}

#[test]
fn publish_edit_publish_keeps_v1_byte_identical_and_isolates_the_diff() {
    let catalog = builtin_catalog();
    let checklist = builtin_checklist();
    let dir = tempfile::tempdir().unwrap();
    let v1 = golden_package(); // already published once
    serialize_package(&v1, dir.path()).unwrap();
    let tree_v1 = hash_tree(dir.path());
    let v1_files: Vec<&String> = tree_v1.keys().filter(|k| k.starts_with("versions/1/")).collect();
    assert!(!v1_files.is_empty());

    // Edit the experiment module, then publish again.
    let mut edited = v1.clone();
    set_body(
        &mut edited,
        "4.4.3",
        Some("Revised session instructions with stricter timing.\n".to_string()),
    );
    let v2 = publish_core_version(&edited, "tightened session timing", at("2016-09-01T00:00:00Z"), &catalog, &checklist).unwrap();
    serialize_package(&v2, dir.path()).unwrap();
    let tree_v2 = hash_tree(dir.path());

    // v1 snapshot bytes unchanged, byte for byte.
    for key in &v1_files {
        assert_eq!(tree_v2.get(*key), tree_v1.get(*key), "{key} changed");
    }
    // v2 exists; its digests differ from v1's only in the experiment module.
    assert_eq!(v2.version_history.len(), 2);
    assert_eq!(v2.version_history[1].version_id, 2);
    let d1 = &v2.version_history[0].recorded_digests;
    let d2 = &v2.version_history[1].recorded_digests;
    for (module_dir, digest) in d1 {
        if module_dir == "04-experiment" {
            assert_ne!(d2.get(module_dir), Some(digest));
        } else {
            assert_eq!(d2.get(module_dir), Some(digest), "{module_dir} drifted");
        }
    }
}

#[test]
fn publish_gate_counts_lint_errors() {
    let mut package = golden_package();
    set_body(&mut package, "4.2.2", Some(String::new()));
    let err = publish_core_version(
        &package,
        "should not happen",
        at("2016-09-01T00:00:00Z"),
        &builtin_catalog(),
        &builtin_checklist(),
    )
    .unwrap_err();
    assert!(matches!(err, LifecycleError::LintErrorsPresent(1)));
}

#[test]
fn export_writes_core_study_index_and_timeline_pages() {
    let package = golden_package();
    let out = tempfile::tempdir().unwrap();
    let summary = export_html(&package, out.path(), &builtin_catalog(), &builtin_checklist()).unwrap();
    // 5 core pages + 1 per study + index (+ timeline).
    let expected = [
        "01-introduction.html",
        "02-theory.html",
        "03-training.html",
        "04-experiment.html",
        "05-evolution.html",
        "aggregation-7.1.html",
        "index.html",
        "replication-6.1.html",
        "timeline.html",
    ];
    assert_eq!(summary.pages, expected);
    assert_eq!(summary.attachments_copied, 3);
    let index = std::fs::read_to_string(out.path().join("index.html")).unwrap();
    assert!(index.contains("replication-6.1.html#s-6.1.1"));
    let timeline = std::fs::read_to_string(out.path().join("timeline.html")).unwrap();
    assert!(timeline.contains("v1 (2016-07-01): initial publication"));
    assert!(timeline.contains("Study 6.1"));
    // Body link to 4.4.3 resolved into a page anchor.
    let replication = std::fs::read_to_string(out.path().join("replication-6.1.html")).unwrap();
    assert!(replication.contains("<a href=\"04-experiment.html#s-4.4.3\">4.4.3</a>"));
}

#[test]
fn export_twice_is_identical() {
    let package = golden_package();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    export_html(&package, a.path(), &builtin_catalog(), &builtin_checklist()).unwrap();
    export_html(&package, b.path(), &builtin_catalog(), &builtin_checklist()).unwrap();
    assert_eq!(hash_tree(a.path()), hash_tree(b.path()));
}

#[test]
fn export_refuses_lint_errors_and_broken_references() {
    let out = tempfile::tempdir().unwrap();
    let mut package = golden_package();
    set_body(&mut package, "4.1.2", Some(String::new()));
    let err = export_html(&package, out.path(), &builtin_catalog(), &builtin_checklist()).unwrap_err();
    assert!(matches!(err, ExportError::LintErrorsPresent(_)));

    let mut package = golden_package();
    set_body(&mut package, "2.1", Some("see lp:9.9 nowhere\n".to_string()));
    refresh_navigation(&mut package);
    let err = export_html(&package, out.path(), &builtin_catalog(), &builtin_checklist()).unwrap_err();
    match err {
        ExportError::BrokenReference { from, target } => {
            assert_eq!(from, "2.1");
            assert_eq!(target, "9.9");
        }
        other => panic!("expected BrokenReference, got {other:?}"),
    }
}
