mod common;

use common::{golden_package, refresh_navigation, set_body};
use labpack::catalog::{builtin_catalog, builtin_checklist};
use labpack::finding::{FindingCode, RuleSource, Severity};
use labpack::lint::{check_completeness, evaluate_checklist, lint, ChecklistStatus};
use labpack::model::ModuleKind;

#[test]
fn golden_package_lints_completely_clean() {
    let package = golden_package();
    let report = lint(&package, &builtin_catalog(), &builtin_checklist());
    assert_eq!(report.findings, vec![], "golden fixture must be green");
    assert_eq!(report.completeness_ratio(), 1.0);
    let evaluation = evaluate_checklist(&package, &builtin_checklist());
    for judgment in &evaluation.judgments {
        assert_eq!(judgment.status, ChecklistStatus::Satisfied, "{judgment:?}");
    }
}

#[test]
fn removing_theory_yields_one_structure_error() {
    let mut package = golden_package();
    package.core_modules.retain(|m| m.kind != ModuleKind::Theory);
    let report = lint(&package, &builtin_catalog(), &builtin_checklist());
    let structure_errors: Vec<_> = report
        .findings
        .iter()
        .filter(|f| f.rule_source == RuleSource::Structure)
        .collect();
    assert_eq!(structure_errors.len(), 1);
    assert_eq!(structure_errors[0].code, FindingCode::MissingCoreModule);
    assert!(structure_errors[0].message.contains("theory"));
    assert!(report.has_errors());
}

#[test]
fn emptying_one_leaf_yields_exactly_one_template_error_naming_it() {
    let catalog = builtin_catalog();
    let mut package = golden_package();
    set_body(&mut package, "4.1.1", Some(String::new()));
    let report = check_completeness(&package, &catalog);
    assert_eq!(report.counts.error, 1);
    let finding = &report.findings[0];
    assert_eq!(finding.code, FindingCode::MissingMandatorySection);
    assert!(finding.message.contains("4.1.1"));
    assert!(finding.message.contains("List of replication activities"));
    assert_eq!(finding.rule_source, RuleSource::Template("4.1.1".to_string()));
    assert!(report.completeness_ratio() < 1.0);
}

#[test]
fn composed_faults_keep_distinct_rule_sources() {
    let mut package = golden_package();
    package.core_modules.retain(|m| m.kind != ModuleKind::Theory);
    set_body(&mut package, "4.1.1", Some(String::new()));
    let report = lint(&package, &builtin_catalog(), &builtin_checklist());
    let error_sources: std::collections::BTreeSet<_> = report
        .findings
        .iter()
        .filter(|f| f.severity == Severity::Error)
        .map(|f| f.rule_source.clone())
        .collect();
    assert!(report.counts.error >= 2);
    assert!(error_sources.contains(&RuleSource::Structure));
    assert!(error_sources.contains(&RuleSource::Template("4.1.1".to_string())));
}

#[test]
fn monotonicity_filling_a_section_never_hurts() {
    let catalog = builtin_catalog();
    let mut package = golden_package();
    set_body(&mut package, "4.2.1", Some(String::new()));
    set_body(&mut package, "4.5.2", Some(String::new()));
    let before = check_completeness(&package, &catalog);

    set_body(&mut package, "4.2.1", Some("Objectives text.\n".to_string()));
    let after = check_completeness(&package, &catalog);
    assert!(after.counts.error <= before.counts.error);
    assert!(after.completeness_ratio() >= before.completeness_ratio());
}

#[test]
fn locality_editing_one_module_only_moves_its_findings() {
    let catalog = builtin_catalog();
    let checklist = builtin_checklist();
    let mut package = golden_package();
    set_body(&mut package, "3.1", Some(String::new()));
    let report = lint(&package, &catalog, &checklist);
    // Everything that changed versus the green fixture is located in the
    // training module.
    for finding in &report.findings {
        assert_eq!(finding.locus.module.as_deref(), Some("training"), "{finding}");
    }
}

#[test]
fn zero_section_package_has_ratio_zero() {
    let catalog = builtin_catalog();
    let mut package = golden_package();
    package.study_modules.clear();
    package.version_history.clear();
    package.assessments.clear();
    for module in &mut package.core_modules {
        module.sections.clear();
        module.guidance.clear();
        module.evidence.clear();
        module.attachments.clear();
    }
    let report = check_completeness(&package, &catalog);
    assert_eq!(report.satisfied_mandatory, 0);
    assert_eq!(report.counts.error, report.total_mandatory);
    assert_eq!(report.completeness_ratio(), 0.0);
}

#[test]
fn missing_replication_report_makes_rr_unsatisfied() {
    let mut package = golden_package();
    set_body(&mut package, "6.1.1", Some(String::new()));
    let evaluation = evaluate_checklist(&package, &builtin_checklist());
    assert_eq!(evaluation.status_of("RR"), Some(ChecklistStatus::Unsatisfied));
    assert_eq!(evaluation.status_of("RP"), Some(ChecklistStatus::Satisfied));
    assert_eq!(evaluation.status_of("ST"), Some(ChecklistStatus::Satisfied));
    assert_eq!(evaluation.status_of("NS"), Some(ChecklistStatus::Satisfied));
}

#[test]
fn one_dangling_reference_makes_ns_partially_satisfied_at_that_locus() {
    let mut package = golden_package();
    let notes = package
        .study_modules
        .iter_mut()
        .find(|m| m.kind == ModuleKind::Replication)
        .unwrap()
        .find_section_mut(&"6.1.4".parse().unwrap())
        .unwrap();
    notes.body = Some("see lp:4.9.9 which does not exist\n".to_string());

    let evaluation = evaluate_checklist(&package, &builtin_checklist());
    assert_eq!(
        evaluation.status_of("NS"),
        Some(ChecklistStatus::PartiallySatisfied)
    );
    let ns_findings: Vec<_> = evaluation
        .findings
        .iter()
        .filter(|f| f.rule_source == RuleSource::Checklist("NS".to_string()))
        .collect();
    assert_eq!(ns_findings.len(), 1, "exactly one NS finding");
    assert_eq!(ns_findings[0].locus.section.as_deref(), Some("6.1.4"));
    assert!(ns_findings[0].message.contains("4.9.9"));
    // Other items keep their judgment.
    assert_eq!(evaluation.status_of("RP"), Some(ChecklistStatus::Satisfied));
}

#[test]
fn missing_evidence_downgrades_rp() {
    let mut package = golden_package();
    package
        .core_mut(ModuleKind::Experiment)
        .unwrap()
        .evidence
        .retain(|e| !(e.item == "RP" && e.component == "Basic replication schedule"));
    let evaluation = evaluate_checklist(&package, &builtin_checklist());
    assert_eq!(
        evaluation.status_of("RP"),
        Some(ChecklistStatus::PartiallySatisfied)
    );
    // Dropping all RP evidence empties the component set entirely.
    package
        .core_mut(ModuleKind::Experiment)
        .unwrap()
        .evidence
        .retain(|e| e.item != "RP");
    let evaluation = evaluate_checklist(&package, &builtin_checklist());
    assert_eq!(evaluation.status_of("RP"), Some(ChecklistStatus::Unsatisfied));
}

#[test]
fn snapshot_tamper_is_a_versioning_error() {
    let mut package = golden_package();
    let frozen = &mut package.version_history[0].modules[3];
    frozen
        .find_section_mut(&"4.1.1".parse().unwrap())
        .unwrap()
        .body = Some("history rewritten".to_string());
    let report = lint(&package, &builtin_catalog(), &builtin_checklist());
    let versioning: Vec<_> = report
        .findings
        .iter()
        .filter(|f| f.rule_source == RuleSource::Versioning)
        .collect();
    assert_eq!(versioning.len(), 1);
    assert_eq!(versioning[0].code, FindingCode::SnapshotDigestMismatch);
    assert!(versioning[0].message.contains("04-experiment"));
}

#[test]
fn report_json_is_deterministic() {
    let package = golden_package();
    let report_a = lint(&package, &builtin_catalog(), &builtin_checklist());
    let report_b = lint(&package, &builtin_catalog(), &builtin_checklist());
    assert_eq!(report_a.to_json_string(), report_b.to_json_string());
}

#[test]
fn toc_regeneration_keeps_links_resolving_after_study_additions() {
    let mut package = golden_package();
    // A toc that references every section, including study sections, must
    // stay consistent after regeneration.
    refresh_navigation(&mut package);
    assert!(labpack::lint::broken_references(&package).is_empty());
}
