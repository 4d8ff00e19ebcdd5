//! Lint findings: the common currency of every validation pass.
//!
//! A [`Finding`] never aborts anything; validators return all of them and let
//! the caller decide what an `Error` means (the CLI maps it to exit code 1).

use std::fmt;

use serde::{Deserialize, Serialize};

/// How bad a finding is. `Error` blocks publishing and export.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Severity {
    Error,
    Warning,
    Info,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Severity::Error => write!(f, "error"),
            Severity::Warning => write!(f, "warning"),
            Severity::Info => write!(f, "info"),
        }
    }
}

/// The rule family a finding traces back to. Every finding has exactly one.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "detail")]
pub enum RuleSource {
    /// A template catalog entry, identified by its section number pattern.
    Template(String),
    /// A packaging checklist item, identified by its code (RP, ST, ...).
    Checklist(String),
    Structure,
    Dependency,
    Versioning,
}

impl fmt::Display for RuleSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuleSource::Template(number) => write!(f, "template:{number}"),
            RuleSource::Checklist(code) => write!(f, "checklist:{code}"),
            RuleSource::Structure => write!(f, "structure"),
            RuleSource::Dependency => write!(f, "dependency"),
            RuleSource::Versioning => write!(f, "versioning"),
        }
    }
}

/// Closed set of finding codes emitted by the validators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FindingCode {
    // Structural rules over the module set.
    MissingCoreModule,
    DuplicateCoreModule,
    MisplacedStudyIndex,
    DuplicateStudyIndex,
    EvolutionOutOfSync,
    BadSectionNumbering,
    UntitledSection,
    BadAttachmentPath,
    // Dependency rules.
    CycleDetected,
    RankViolation,
    // Template completeness.
    MissingMandatorySection,
    MissingRecommendedSection,
    // Packaging checklist conformance.
    ChecklistItemUnsatisfied,
    ChecklistItemPartiallySatisfied,
    // Version history rules.
    VersionIdGap,
    SnapshotDigestMismatch,
}

impl fmt::Display for FindingCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FindingCode::MissingCoreModule => "missing-core-module",
            FindingCode::DuplicateCoreModule => "duplicate-core-module",
            FindingCode::MisplacedStudyIndex => "misplaced-study-index",
            FindingCode::DuplicateStudyIndex => "duplicate-study-index",
            FindingCode::EvolutionOutOfSync => "evolution-out-of-sync",
            FindingCode::BadSectionNumbering => "bad-section-numbering",
            FindingCode::UntitledSection => "untitled-section",
            FindingCode::BadAttachmentPath => "bad-attachment-path",
            FindingCode::CycleDetected => "cycle-detected",
            FindingCode::RankViolation => "rank-violation",
            FindingCode::MissingMandatorySection => "missing-mandatory-section",
            FindingCode::MissingRecommendedSection => "missing-recommended-section",
            FindingCode::ChecklistItemUnsatisfied => "checklist-item-unsatisfied",
            FindingCode::ChecklistItemPartiallySatisfied => "checklist-item-partially-satisfied",
            FindingCode::VersionIdGap => "version-id-gap",
            FindingCode::SnapshotDigestMismatch => "snapshot-digest-mismatch",
        };
        f.write_str(s)
    }
}

/// Where in the package a finding points. All parts optional; a package-wide
/// finding leaves everything unset.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Locus {
    /// Module label, e.g. "theory" or "replication 6.1".
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub module: Option<String>,
    /// Dotted section number, e.g. "4.1.1".
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub section: Option<String>,
    /// A file path relative to the package root or module directory.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub path: Option<String>,
}

impl Locus {
    pub fn module(label: impl Into<String>) -> Self {
        Locus {
            module: Some(label.into()),
            ..Locus::default()
        }
    }

    pub fn section(module: impl Into<String>, number: impl Into<String>) -> Self {
        Locus {
            module: Some(module.into()),
            section: Some(number.into()),
            ..Locus::default()
        }
    }

    pub fn path(path: impl Into<String>) -> Self {
        Locus {
            path: Some(path.into()),
            ..Locus::default()
        }
    }
}

impl fmt::Display for Locus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<&str> = Vec::new();
        if let Some(m) = &self.module {
            parts.push(m);
        }
        if let Some(s) = &self.section {
            parts.push(s);
        }
        if let Some(p) = &self.path {
            parts.push(p);
        }
        if parts.is_empty() {
            write!(f, "package")
        } else {
            write!(f, "{}", parts.join(" "))
        }
    }
}

/// One violated rule, traceable to its source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub code: FindingCode,
    pub severity: Severity,
    pub locus: Locus,
    pub message: String,
    pub rule_source: RuleSource,
}

impl Finding {
    pub fn new(
        code: FindingCode,
        severity: Severity,
        locus: Locus,
        message: impl Into<String>,
        rule_source: RuleSource,
    ) -> Self {
        Finding {
            code,
            severity,
            locus,
            message: message.into(),
            rule_source,
        }
    }

    /// Structural error shorthand; structure findings are always `Error`.
    pub fn structure(code: FindingCode, locus: Locus, message: impl Into<String>) -> Self {
        Finding::new(code, Severity::Error, locus, message, RuleSource::Structure)
    }

    /// Sort key used everywhere a report is emitted: severity first, then
    /// locus, then code so identical inputs produce identical reports.
    pub fn sort_key(&self) -> (Severity, Locus, FindingCode, String) {
        (
            self.severity,
            self.locus.clone(),
            self.code,
            self.message.clone(),
        )
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} [{}] {}: {}",
            self.severity, self.code, self.rule_source, self.locus, self.message
        )
    }
}

/// Orders findings with the canonical report ordering.
pub fn sort_findings(findings: &mut [Finding]) {
    findings.sort_by_key(Finding::sort_key);
}
