//! Lint passes: template completeness, packaging-checklist conformance,
//! and the composed lint that also folds in structure, dependency and
//! version-history checks.
//!
//! Severity policy: mandatory template sections and structural rules are
//! errors; recommended sections and checklist items are warnings. All
//! passes are pure functions of the package value and deterministic.


use std::sync::OnceLock;

use regex::Regex;
use serde::Serialize;

use crate::catalog::{
    CatalogEntry, ChecklistItem, ChecklistTarget, RequirementLevel, TemplateCatalog, TemplateSeg,
};
use crate::deps::{validate_dependencies, DependencyGraph};
use crate::finding::{sort_findings, Finding, FindingCode, Locus, RuleSource, Severity};
use crate::model::{validate_structure, ModuleKind, Package, SectionNumber};

/// Counts per severity; always consistent with the finding list.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SeverityCounts {
    pub error: usize,
    pub warning: usize,
    pub info: usize,
}

impl SeverityCounts {
    pub fn of(findings: &[Finding]) -> SeverityCounts {
        let mut counts = SeverityCounts::default();
        for finding in findings {
            match finding.severity {
                Severity::Error => counts.error += 1,
                Severity::Warning => counts.warning += 1,
                Severity::Info => counts.info += 1,
            }
        }
        counts
    }
}

/// A lint result: ranked findings plus the mandatory-completeness ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct LintReport {
    pub findings: Vec<Finding>,
    pub counts: SeverityCounts,
    pub satisfied_mandatory: usize,
    pub total_mandatory: usize,
}

impl LintReport {
    fn build(mut findings: Vec<Finding>, satisfied_mandatory: usize, total_mandatory: usize) -> LintReport {
        sort_findings(&mut findings);
        let counts = SeverityCounts::of(&findings);
        LintReport {
            findings,
            counts,
            satisfied_mandatory,
            total_mandatory,
        }
    }

    /// Fraction of applicable mandatory entries satisfied; 1.0 when none
    /// apply (vacuously complete).
    pub fn completeness_ratio(&self) -> f64 {
        if self.total_mandatory == 0 {
            1.0
        } else {
            self.satisfied_mandatory as f64 / self.total_mandatory as f64
        }
    }

    pub fn has_errors(&self) -> bool {
        self.counts.error > 0
    }

    pub fn to_json_string(&self) -> String {
        #[derive(Serialize)]
        struct ReportJson<'a> {
            completeness_ratio: f64,
            counts: SeverityCounts,
            findings: &'a [Finding],
            satisfied_mandatory: usize,
            total_mandatory: usize,
        }
        let mut s = serde_json::to_string_pretty(&ReportJson {
            completeness_ratio: self.completeness_ratio(),
            counts: self.counts,
            findings: &self.findings,
            satisfied_mandatory: self.satisfied_mandatory,
            total_mandatory: self.total_mandatory,
        })
        .expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for finding in &self.findings {
            out.push_str(&finding.to_string());
            out.push('\n');
        }
        out.push_str(&format!(
            "errors: {}, warnings: {}, info: {}\n",
            self.counts.error, self.counts.warning, self.counts.info
        ));
        out.push_str(&format!(
            "mandatory completeness: {}/{} ({:.2})\n",
            self.satisfied_mandatory,
            self.total_mandatory,
            self.completeness_ratio()
        ));
        out
    }
}

/// Human label of the module owning a section number, e.g. "experiment"
/// or "replication 6.1".
fn module_label_for(number: &SectionNumber) -> String {
    let parts = number.parts();
    let kind = ModuleKind::CORE
        .iter()
        .chain(ModuleKind::STUDY.iter())
        .copied()
        .find(|k| k.number() == parts[0]);
    match kind {
        Some(kind) if kind.is_study() && parts.len() >= 2 => {
            format!("{} {}.{}", kind.label(), parts[0], parts[1])
        }
        Some(kind) => kind.label().to_string(),
        None => format!("module {}", parts[0]),
    }
}

/// One catalog entry instantiated at a concrete section number.
#[derive(Debug, Clone)]
pub struct ApplicableEntry<'a> {
    pub number: SectionNumber,
    pub entry: &'a CatalogEntry,
}

/// Expands the catalog against the modules actually present: concrete
/// entries apply when their module exists; study patterns expand once per
/// matching study module; evolution patterns expand once per study module
/// overall (one entry section is expected per study).
pub fn applicable_entries<'a>(
    package: &Package,
    catalog: &'a TemplateCatalog,
) -> Vec<ApplicableEntry<'a>> {
    let mut out = Vec::new();
    for entry in catalog.entries() {
        let has_study_seg = entry.number.segments().iter().any(|s| matches!(s, TemplateSeg::Study));
        if !has_study_seg {
            let number = entry.number.resolve(0);
            let module_present = if entry.module_kind.is_core() {
                package.core(entry.module_kind).is_some()
            } else {
                // A concrete study-section entry (extension-supplied):
                // applicable when that exact study module exists.
                package
                    .study_modules
                    .iter()
                    .any(|m| m.kind == entry.module_kind && m.study_index == number.parts().get(1).copied())
            };
            if module_present {
                out.push(ApplicableEntry { number, entry });
            }
            continue;
        }
        match entry.module_kind {
            ModuleKind::Evolution => {
                if package.core(ModuleKind::Evolution).is_some() {
                    for ordinal in 1..=package.study_modules.len() as u32 {
                        out.push(ApplicableEntry {
                            number: entry.number.resolve(ordinal),
                            entry,
                        });
                    }
                }
            }
            kind => {
                for module in package.study_modules.iter().filter(|m| m.kind == kind) {
                    if let Some(index) = module.study_index {
                        out.push(ApplicableEntry {
                            number: entry.number.resolve(index),
                            entry,
                        });
                    }
                }
            }
        }
    }
    out.sort_by(|a, b| a.number.cmp(&b.number));
    out
}

fn section_present(package: &Package, number: &SectionNumber) -> bool {
    package
        .find_section(number)
        .map(|(_, section)| section.is_present())
        .unwrap_or(false)
}

/// Checks every applicable template entry: one error per missing or
/// empty-bodied mandatory section, one warning per missing recommended
/// section, plus the mandatory completeness ratio.
pub fn check_completeness(package: &Package, catalog: &TemplateCatalog) -> LintReport {
    let mut findings = Vec::new();
    let mut satisfied = 0usize;
    let mut total = 0usize;
    for applicable in applicable_entries(package, catalog) {
        let present = section_present(package, &applicable.number);
        let entry = applicable.entry;
        if entry.level == RequirementLevel::Mandatory {
            total += 1;
            if present {
                satisfied += 1;
            }
        }
        if present {
            continue;
        }
        let locus = Locus::section(module_label_for(&applicable.number), applicable.number.to_string());
        let source = RuleSource::Template(entry.number.to_string());
        match entry.level {
            RequirementLevel::Mandatory => findings.push(Finding::new(
                FindingCode::MissingMandatorySection,
                Severity::Error,
                locus,
                format!(
                    "mandatory section {} \"{}\" is missing or empty",
                    applicable.number, entry.title
                ),
                source,
            )),
            RequirementLevel::Recommended => findings.push(Finding::new(
                FindingCode::MissingRecommendedSection,
                Severity::Warning,
                locus,
                format!(
                    "recommended section {} \"{}\" is missing or empty",
                    applicable.number, entry.title
                ),
                source,
            )),
        }
    }
    LintReport::build(findings, satisfied, total)
}

// ---------------------------------------------------------------------------
// Cross-references
// ---------------------------------------------------------------------------

/// An intra-package reference written `lp:<dotted-number>` in a section
/// body or navigation file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossReference {
    /// "toc.md", "references.md" or a module label.
    pub source: String,
    /// Section number of the referencing section, when in a body.
    pub source_section: Option<String>,
    pub target: SectionNumber,
    /// Whether the target section exists anywhere in the package tree.
    pub resolved: bool,
}

fn reference_pattern() -> &'static Regex {
    static PATTERN: OnceLock<Regex> = OnceLock::new();
    PATTERN.get_or_init(|| Regex::new(r"lp:([0-9]+(?:\.[0-9]+)*)").expect("valid regex"))
}

/// Scans every section body plus toc.md/references.md for `lp:` references
/// and resolves them against the package's section tree. Resolution is by
/// existence, not body presence, so emptying a section does not break the
/// links pointing at it.
pub fn scan_cross_references(package: &Package) -> Vec<CrossReference> {
    let mut refs = Vec::new();
    let scan = |text: &str, source: &str, source_section: Option<String>, refs: &mut Vec<CrossReference>| {
        for capture in reference_pattern().captures_iter(text) {
            if let Ok(target) = capture[1].parse::<SectionNumber>() {
                let resolved = package.find_section(&target).is_some();
                refs.push(CrossReference {
                    source: source.to_string(),
                    source_section: source_section.clone(),
                    target,
                    resolved,
                });
            }
        }
    };
    if let Some(toc) = &package.toc {
        scan(toc, "toc.md", None, &mut refs);
    }
    if let Some(references) = &package.references {
        scan(references, "references.md", None, &mut refs);
    }
    for module in package.modules() {
        let label = module.display_label();
        for section in module.sections_preorder() {
            if let Some(body) = &section.body {
                scan(body, &label, Some(section.number.to_string()), &mut refs);
            }
        }
    }
    refs
}

pub fn broken_references(package: &Package) -> Vec<CrossReference> {
    scan_cross_references(package)
        .into_iter()
        .filter(|r| !r.resolved)
        .collect()
}

// ---------------------------------------------------------------------------
// Checklist conformance
// ---------------------------------------------------------------------------

/// Judgment for one checklist item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChecklistStatus {
    Satisfied,
    PartiallySatisfied,
    Unsatisfied,
}

impl std::fmt::Display for ChecklistStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ChecklistStatus::Satisfied => f.write_str("satisfied"),
            ChecklistStatus::PartiallySatisfied => f.write_str("partially-satisfied"),
            ChecklistStatus::Unsatisfied => f.write_str("unsatisfied"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChecklistJudgment {
    pub code: String,
    pub name: String,
    pub status: ChecklistStatus,
    /// One line per failing check, empty when satisfied.
    pub problems: Vec<String>,
}

/// The checklist evaluation: per-item judgments plus at most one finding
/// per non-satisfied item.
#[derive(Debug, Clone, PartialEq)]
pub struct ChecklistEvaluation {
    pub judgments: Vec<ChecklistJudgment>,
    pub findings: Vec<Finding>,
}

impl ChecklistEvaluation {
    pub fn status_of(&self, code: &str) -> Option<ChecklistStatus> {
        self.judgments.iter().find(|j| j.code == code).map(|j| j.status)
    }

    /// The evaluation as a report; checklist findings are warnings, and no
    /// template entries are judged here (vacuous ratio).
    pub fn into_report(self) -> LintReport {
        LintReport::build(self.findings, 0, 0)
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.judgments).expect("judgments serialize");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for judgment in &self.judgments {
            out.push_str(&format!("{} ({}): {}\n", judgment.code, judgment.name, judgment.status));
            for problem in &judgment.problems {
                out.push_str(&format!("  - {problem}\n"));
            }
        }
        out
    }
}

struct ComponentCheck {
    ok: bool,
    problem: Option<String>,
    locus: Option<Locus>,
}

fn component_ok() -> ComponentCheck {
    ComponentCheck {
        ok: true,
        problem: None,
        locus: None,
    }
}

fn component_failed(problem: String, locus: Option<Locus>) -> ComponentCheck {
    ComponentCheck {
        ok: false,
        problem: Some(problem),
        locus,
    }
}

/// Is there a declared evidence entry for (item, component) whose locus
/// exists? Loci may be section numbers, `attachments/<path>` within the
/// declaring module, or the root navigation files.
fn evidence_check(package: &Package, item_code: &str, component: &str) -> ComponentCheck {
    for module in package.modules() {
        for entry in &module.evidence {
            if entry.item != item_code || entry.component != component {
                continue;
            }
            if locus_exists(package, module, &entry.locus) {
                return component_ok();
            }
            return component_failed(
                format!(
                    "evidence for \"{component}\" points at `{}` which does not exist",
                    entry.locus
                ),
                Some(Locus {
                    module: Some(module.display_label()),
                    section: None,
                    path: Some(entry.locus.clone()),
                }),
            );
        }
    }
    component_failed(format!("no evidence declared for \"{component}\""), None)
}

fn locus_exists(package: &Package, declaring: &crate::model::LpModule, locus: &str) -> bool {
    if let Ok(number) = locus.parse::<SectionNumber>() {
        return package.find_section(&number).is_some();
    }
    match locus {
        "toc.md" => package.toc.is_some(),
        "references.md" => package.references.is_some(),
        other => other
            .strip_prefix("attachments/")
            .is_some_and(|path| declaring.attachments.iter().any(|a| a.path == path)),
    }
}

/// Built-in transversal checks for the navigation-and-search components;
/// anything unrecognized falls back to declared evidence.
fn transversal_check(package: &Package, item_code: &str, component: &str) -> ComponentCheck {
    let lower = component.to_lowercase();
    if lower.contains("table of contents") || lower.starts_with("conventional structures") {
        if package.toc.as_deref().is_some_and(|t| !t.trim().is_empty()) {
            component_ok()
        } else {
            component_failed(
                "no table of contents (toc.md) at the package root".to_string(),
                Some(Locus::path("toc.md")),
            )
        }
    } else if lower == "hyperlinks" {
        let broken = broken_references(package);
        match broken.first() {
            None => component_ok(),
            Some(first) => component_failed(
                format!(
                    "{} broken cross-reference(s); first: `lp:{}` in {}",
                    broken.len(),
                    first.target,
                    first
                        .source_section
                        .clone()
                        .unwrap_or_else(|| first.source.clone())
                ),
                Some(Locus {
                    module: Some(first.source.clone()),
                    section: first.source_section.clone(),
                    path: None,
                }),
            ),
        }
    } else if lower.contains("external references") {
        if package.references.as_deref().is_some_and(|t| !t.trim().is_empty()) {
            component_ok()
        } else {
            component_failed(
                "no external reference list (references.md) at the package root".to_string(),
                Some(Locus::path("references.md")),
            )
        }
    } else {
        evidence_check(package, item_code, component)
    }
}

/// Expands a checklist target pattern into the concrete sections expected
/// in this package. Study patterns expand per study module of that kind;
/// an empty expansion (no such modules) means the anchor cannot hold.
fn expand_target(package: &Package, pattern: &crate::catalog::TemplatePath) -> Option<Vec<SectionNumber>> {
    let has_study_seg = pattern.segments().iter().any(|s| matches!(s, TemplateSeg::Study));
    if !has_study_seg {
        return Some(vec![pattern.resolve(0)]);
    }
    let kind = ModuleKind::CORE
        .iter()
        .chain(ModuleKind::STUDY.iter())
        .copied()
        .find(|k| Some(k.number()) == pattern.module_number())?;
    let numbers: Vec<SectionNumber> = package
        .study_modules
        .iter()
        .filter(|m| m.kind == kind)
        .filter_map(|m| m.study_index)
        .map(|i| pattern.resolve(i))
        .collect();
    if numbers.is_empty() {
        None
    } else {
        Some(numbers)
    }
}

/// Judges every checklist item. An item is satisfied when its anchor holds
/// (target sections present, or the table of contents for transversal
/// items) and every component checks out; it is unsatisfied when the
/// anchor is gone or nothing checks out, partially satisfied in between.
pub fn evaluate_checklist(package: &Package, items: &[ChecklistItem]) -> ChecklistEvaluation {
    let mut judgments = Vec::new();
    let mut findings = Vec::new();

    for item in items {
        let mut problems: Vec<String> = Vec::new();
        let mut first_locus: Option<Locus> = None;

        // Anchor.
        let anchor_ok = match &item.target {
            ChecklistTarget::Sections(patterns) => {
                let mut ok = true;
                for pattern in patterns {
                    match expand_target(package, pattern) {
                        None => {
                            ok = false;
                            problems.push(format!(
                                "target {pattern} has no instances (no matching study modules)"
                            ));
                        }
                        Some(numbers) => {
                            for number in numbers {
                                if !section_present(package, &number) {
                                    ok = false;
                                    problems.push(format!(
                                        "anchor section {number} is missing or empty"
                                    ));
                                    first_locus.get_or_insert_with(|| {
                                        Locus::section(module_label_for(&number), number.to_string())
                                    });
                                }
                            }
                        }
                    }
                }
                ok
            }
            ChecklistTarget::Transversal => {
                let ok = package.toc.as_deref().is_some_and(|t| !t.trim().is_empty());
                if !ok {
                    problems.push("no table of contents (toc.md): the package has no navigation anchor".to_string());
                    first_locus.get_or_insert_with(|| Locus::path("toc.md"));
                }
                ok
            }
        };

        let mut components_ok = 0usize;
        if anchor_ok {
            for component in &item.components {
                let check = match item.target {
                    ChecklistTarget::Transversal => transversal_check(package, &item.code, component),
                    ChecklistTarget::Sections(_) => evidence_check(package, &item.code, component),
                };
                if check.ok {
                    components_ok += 1;
                } else {
                    if let Some(problem) = check.problem {
                        problems.push(problem);
                    }
                    if first_locus.is_none() {
                        first_locus = check.locus;
                    }
                }
            }
        }

        let status = if !anchor_ok {
            ChecklistStatus::Unsatisfied
        } else if components_ok == item.components.len() {
            ChecklistStatus::Satisfied
        } else if components_ok > 0 {
            ChecklistStatus::PartiallySatisfied
        } else {
            ChecklistStatus::Unsatisfied
        };

        if status != ChecklistStatus::Satisfied {
            let code = match status {
                ChecklistStatus::PartiallySatisfied => FindingCode::ChecklistItemPartiallySatisfied,
                _ => FindingCode::ChecklistItemUnsatisfied,
            };
            findings.push(Finding::new(
                code,
                Severity::Warning,
                first_locus.clone().unwrap_or_default(),
                format!(
                    "checklist item {} ({}) is {}: {}",
                    item.code,
                    item.name,
                    status,
                    problems.join("; ")
                ),
                RuleSource::Checklist(item.code.clone()),
            ));
        }

        judgments.push(ChecklistJudgment {
            code: item.code.clone(),
            name: item.name.clone(),
            status,
            problems,
        });
    }

    sort_findings(&mut findings);
    ChecklistEvaluation {
        judgments,
        findings,
    }
}

// ---------------------------------------------------------------------------
// Version history checks
// ---------------------------------------------------------------------------

/// Version history rules: ids must be exactly 1..k and frozen module
/// content must still match the digests recorded at publication time.
pub fn version_findings(package: &Package) -> Vec<Finding> {
    let mut findings = Vec::new();
    for (i, snapshot) in package.version_history.iter().enumerate() {
        let expected = i as u32 + 1;
        if snapshot.version_id != expected {
            findings.push(Finding::new(
                FindingCode::VersionIdGap,
                Severity::Error,
                Locus::path(format!("versions/{}", snapshot.version_id)),
                format!(
                    "version ids must be exactly 1..k: found {} where {expected} was expected",
                    snapshot.version_id
                ),
                RuleSource::Versioning,
            ));
        }
        let computed = snapshot.computed_digests();
        if computed != snapshot.recorded_digests {
            let changed: Vec<&str> = computed
                .iter()
                .filter(|(k, v)| snapshot.recorded_digests.get(*k) != Some(v))
                .map(|(k, _)| k.as_str())
                .chain(
                    snapshot
                        .recorded_digests
                        .keys()
                        .filter(|k| !computed.contains_key(*k))
                        .map(String::as_str),
                )
                .collect();
            findings.push(Finding::new(
                FindingCode::SnapshotDigestMismatch,
                Severity::Error,
                Locus::path(format!("versions/{}", snapshot.version_id)),
                format!(
                    "frozen content of version {} no longer matches its recorded digests ({})",
                    snapshot.version_id,
                    changed.join(", ")
                ),
                RuleSource::Versioning,
            ));
        }
    }
    findings
}

/// The composed lint: structure, implied dependencies, template
/// completeness, checklist conformance and version checks, sorted by
/// (severity, locus).
pub fn lint(package: &Package, catalog: &TemplateCatalog, items: &[ChecklistItem]) -> LintReport {
    let mut findings = validate_structure(package);
    findings.extend(validate_dependencies(&DependencyGraph::canonical_for(package)));
    let completeness = check_completeness(package, catalog);
    findings.extend(completeness.findings.clone());
    findings.extend(evaluate_checklist(package, items).findings);
    findings.extend(version_findings(package));
    LintReport::build(
        findings,
        completeness.satisfied_mandatory,
        completeness.total_mandatory,
    )
}
