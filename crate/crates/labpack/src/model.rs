//! Domain model for laboratory packages.
//!
//! A package is five singleton core modules (introduction, theory, training,
//! experiment, evolution), any number of append-only study modules
//! (replications 6.n and aggregations 7.n), a version history of frozen core
//! snapshots, and the assessments recorded for its replications.
//!
//! Values are immutable after construction: lifecycle operations return new
//! `Package` values, which makes the append-only guarantees checkable by
//! comparing content digests across operations.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::assess::Assessment;
use crate::finding::{sort_findings, Finding, FindingCode, Locus};

/// The seven module kinds of a laboratory package.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModuleKind {
    Introduction,
    Theory,
    Training,
    Experiment,
    Evolution,
    Replication,
    Aggregation,
}

impl ModuleKind {
    /// Core kinds in canonical number order (1..=5).
    pub const CORE: [ModuleKind; 5] = [
        ModuleKind::Introduction,
        ModuleKind::Theory,
        ModuleKind::Training,
        ModuleKind::Experiment,
        ModuleKind::Evolution,
    ];

    /// Study kinds in canonical number order (6, 7).
    pub const STUDY: [ModuleKind; 2] = [ModuleKind::Replication, ModuleKind::Aggregation];

    pub fn is_core(self) -> bool {
        !self.is_study()
    }

    pub fn is_study(self) -> bool {
        matches!(self, ModuleKind::Replication | ModuleKind::Aggregation)
    }

    /// Canonical correlative module number: 1=introduction .. 7=aggregation.
    pub fn number(self) -> u32 {
        match self {
            ModuleKind::Introduction => 1,
            ModuleKind::Theory => 2,
            ModuleKind::Training => 3,
            ModuleKind::Experiment => 4,
            ModuleKind::Evolution => 5,
            ModuleKind::Replication => 6,
            ModuleKind::Aggregation => 7,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ModuleKind::Introduction => "introduction",
            ModuleKind::Theory => "theory",
            ModuleKind::Training => "training",
            ModuleKind::Experiment => "experiment",
            ModuleKind::Evolution => "evolution",
            ModuleKind::Replication => "replication",
            ModuleKind::Aggregation => "aggregation",
        }
    }

    pub fn from_label(label: &str) -> Option<ModuleKind> {
        Some(match label {
            "introduction" => ModuleKind::Introduction,
            "theory" => ModuleKind::Theory,
            "training" => ModuleKind::Training,
            "experiment" => ModuleKind::Experiment,
            "evolution" => ModuleKind::Evolution,
            "replication" => ModuleKind::Replication,
            "aggregation" => ModuleKind::Aggregation,
            _ => return None,
        })
    }
}

impl fmt::Display for ModuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Dotted correlative section identifier such as `4.1.1`.
///
/// Always non-empty; the first component is the owning module's number.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SectionNumber(Vec<u32>);

impl SectionNumber {
    pub fn new(parts: Vec<u32>) -> Option<SectionNumber> {
        if parts.is_empty() {
            None
        } else {
            Some(SectionNumber(parts))
        }
    }

    pub fn parts(&self) -> &[u32] {
        &self.0
    }

    pub fn parent(&self) -> Option<SectionNumber> {
        if self.0.len() > 1 {
            Some(SectionNumber(self.0[..self.0.len() - 1].to_vec()))
        } else {
            None
        }
    }

    /// Appends a sibling ordinal, e.g. `4.1`.child(3) == `4.1.3`.
    pub fn child(&self, ordinal: u32) -> SectionNumber {
        let mut parts = self.0.clone();
        parts.push(ordinal);
        SectionNumber(parts)
    }

    pub fn is_prefix_of(&self, other: &SectionNumber) -> bool {
        other.0.len() > self.0.len() && other.0[..self.0.len()] == self.0[..]
    }
}

impl fmt::Display for SectionNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        f.write_str(&parts.join("."))
    }
}

impl FromStr for SectionNumber {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = Vec::new();
        for piece in s.split('.') {
            if piece.is_empty() || !piece.bytes().all(|b| b.is_ascii_digit()) {
                return Err(format!("invalid section number `{s}`"));
            }
            parts.push(
                piece
                    .parse::<u32>()
                    .map_err(|_| format!("invalid section number `{s}`"))?,
            );
        }
        SectionNumber::new(parts).ok_or_else(|| format!("invalid section number `{s}`"))
    }
}

impl Serialize for SectionNumber {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SectionNumber {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One section of a module. `body` is `None` when no section file exists on
/// disk and `Some("")` when the file exists but is empty; completeness
/// treats both as absent, round-tripping distinguishes them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Section {
    pub number: SectionNumber,
    pub title: String,
    pub body: Option<String>,
    pub children: Vec<Section>,
}

impl Section {
    pub fn new(number: SectionNumber, title: impl Into<String>) -> Section {
        Section {
            number,
            title: title.into(),
            body: None,
            children: Vec::new(),
        }
    }

    /// A section counts as present when its file exists and the body has at
    /// least one non-whitespace character. Emptiness is a lint concern, not
    /// a structural one.
    pub fn is_present(&self) -> bool {
        self.body
            .as_deref()
            .is_some_and(|b| b.chars().any(|c| !c.is_whitespace()))
    }

    fn walk<'a>(&'a self, out: &mut Vec<&'a Section>) {
        out.push(self);
        for child in &self.children {
            child.walk(out);
        }
    }
}

/// A file bundled with a module, stored under its `attachments/` directory.
/// `path` is relative to that directory, forward slashes only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attachment {
    pub path: String,
    pub data: Vec<u8>,
}

/// Declares that a packaging-checklist component is covered, pointing at the
/// section or file that shows it. Verified by the linter.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EvidenceEntry {
    /// Checklist item code, e.g. "RP".
    pub item: String,
    /// Exact component text the evidence covers.
    pub component: String,
    /// A section number, an `attachments/...` path, or a root file name.
    pub locus: String,
}

/// One module of a laboratory package.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpModule {
    pub kind: ModuleKind,
    /// 1-based study index; `Some` exactly for study modules.
    pub study_index: Option<u32>,
    /// Top-level sections, children nested inside.
    pub sections: Vec<Section>,
    pub attachments: Vec<Attachment>,
    /// Authoring guidance per section number; kept out of section bodies so
    /// scaffolded sections still count as empty.
    pub guidance: BTreeMap<String, String>,
    pub evidence: Vec<EvidenceEntry>,
}

impl LpModule {
    pub fn new_core(kind: ModuleKind) -> LpModule {
        debug_assert!(kind.is_core());
        LpModule {
            kind,
            study_index: None,
            sections: Vec::new(),
            attachments: Vec::new(),
            guidance: BTreeMap::new(),
            evidence: Vec::new(),
        }
    }

    pub fn new_study(kind: ModuleKind, study_index: u32) -> LpModule {
        debug_assert!(kind.is_study());
        LpModule {
            kind,
            study_index: Some(study_index),
            sections: Vec::new(),
            attachments: Vec::new(),
            guidance: BTreeMap::new(),
            evidence: Vec::new(),
        }
    }

    /// The number that roots this module's sections: `4` for the experiment
    /// module, `6.1` for the first replication.
    pub fn module_number(&self) -> SectionNumber {
        let mut parts = vec![self.kind.number()];
        if let Some(n) = self.study_index {
            parts.push(n);
        }
        SectionNumber(parts)
    }

    /// Human label, e.g. "experiment" or "replication 6.1".
    pub fn display_label(&self) -> String {
        match self.study_index {
            Some(_) => format!("{} {}", self.kind.label(), self.module_number()),
            None => self.kind.label().to_string(),
        }
    }

    /// All sections in pre-order.
    pub fn sections_preorder(&self) -> Vec<&Section> {
        let mut out = Vec::new();
        for section in &self.sections {
            section.walk(&mut out);
        }
        out
    }

    pub fn find_section(&self, number: &SectionNumber) -> Option<&Section> {
        self.sections_preorder()
            .into_iter()
            .find(|s| &s.number == number)
    }

    pub fn find_section_mut(&mut self, number: &SectionNumber) -> Option<&mut Section> {
        fn walk<'a>(sections: &'a mut [Section], number: &SectionNumber) -> Option<&'a mut Section> {
            for section in sections {
                if &section.number == number {
                    return Some(section);
                }
                if let Some(found) = walk(&mut section.children, number) {
                    return Some(found);
                }
            }
            None
        }
        walk(&mut self.sections, number)
    }

    /// SHA-256 over the canonical serialization of the module: metadata in
    /// sorted key order, the section tree in pre-order, then attachment
    /// bytes in path order. Stable across processes and platforms.
    pub fn content_digest(&self) -> String {
        let mut hasher = Sha256::new();
        let mut feed = |bytes: &[u8]| hasher.update(bytes);
        feed(b"labpack-module-v1\n");
        feed(format!("kind:{}\n", self.kind.label()).as_bytes());
        feed(format!("module_number:{}\n", self.kind.number()).as_bytes());
        match self.study_index {
            Some(n) => feed(format!("study_index:{n}\n").as_bytes()),
            None => feed(b"study_index:-\n"),
        }
        for entry in self.evidence.iter().collect::<BTreeSet<_>>() {
            feed(
                format!(
                    "evidence:{}:{}:{}:{}:{}:{}\n",
                    entry.item.len(),
                    entry.item,
                    entry.component.len(),
                    entry.component,
                    entry.locus.len(),
                    entry.locus
                )
                .as_bytes(),
            );
        }
        for (number, guidance) in &self.guidance {
            feed(format!("guidance:{}:{}\n{}", number, guidance.len(), guidance).as_bytes());
        }
        for section in self.sections_preorder() {
            let body_state = match &section.body {
                None => "-".to_string(),
                Some(b) => b.len().to_string(),
            };
            feed(
                format!(
                    "section:{}:{}:{}\n",
                    section.number,
                    section.title.len(),
                    body_state
                )
                .as_bytes(),
            );
            feed(section.title.as_bytes());
            if let Some(body) = &section.body {
                feed(body.as_bytes());
            }
        }
        let mut attachments: Vec<&Attachment> = self.attachments.iter().collect();
        attachments.sort_by(|a, b| a.path.cmp(&b.path));
        for attachment in attachments {
            feed(format!("attachment:{}:{}\n", attachment.path, attachment.data.len()).as_bytes());
            feed(&attachment.data);
        }
        hex::encode(hasher.finalize())
    }
}

/// A contact person for the packaged experiment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Contact {
    pub email: String,
    pub name: String,
}

/// The format versions this build can read and write.
pub const SUPPORTED_FORMAT_VERSIONS: &[u32] = &[1];

/// Package-level metadata, stored as `labpack.json` at the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub package_id: String,
    pub experiment_name: String,
    pub family: String,
    pub language_tag: String,
    pub contacts: Vec<Contact>,
    pub created: DateTime<Utc>,
    pub format_version: u32,
}

impl Manifest {
    /// Checks the manifest invariants: non-empty slug id and a supported
    /// format version. Returns a human-readable reason on failure.
    pub fn validate(&self) -> Result<(), String> {
        if !is_slug(&self.package_id) {
            return Err(format!(
                "package_id `{}` is not a slug ([a-z0-9], dash-separated)",
                self.package_id
            ));
        }
        if !SUPPORTED_FORMAT_VERSIONS.contains(&self.format_version) {
            return Err(format!(
                "format_version {} is not supported (supported: {:?})",
                self.format_version, SUPPORTED_FORMAT_VERSIONS
            ));
        }
        if self.experiment_name.trim().is_empty() {
            return Err("experiment_name is empty".to_string());
        }
        Ok(())
    }
}

/// Lowercase slug: `[a-z0-9]` runs separated by single dashes.
pub fn is_slug(s: &str) -> bool {
    !s.is_empty()
        && !s.starts_with('-')
        && !s.ends_with('-')
        && !s.contains("--")
        && s.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'-')
}

/// Turns free text into a slug usable as a file name.
pub fn slugify(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut last_dash = true;
    for c in s.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
            last_dash = false;
        } else if !last_dash {
            out.push('-');
            last_dash = true;
        }
    }
    while out.ends_with('-') {
        out.pop();
    }
    out
}

/// A frozen copy of all core modules at publication time. Snapshots are
/// immutable once written; the store refuses any write that would alter one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoreSnapshot {
    /// Monotonically increasing, assigned as previous max + 1.
    pub version_id: u32,
    pub timestamp: DateTime<Utc>,
    pub change_note: String,
    /// Frozen core modules in canonical order.
    pub modules: Vec<LpModule>,
    /// Digests recorded at publication time, keyed by module directory name.
    /// Lint recomputes and compares; a mismatch means tampered history.
    pub recorded_digests: BTreeMap<String, String>,
}

impl CoreSnapshot {
    /// Digests of the frozen modules as they are now.
    pub fn computed_digests(&self) -> BTreeMap<String, String> {
        self.modules
            .iter()
            .map(|m| (core_dir_name(m.kind), m.content_digest()))
            .collect()
    }
}

/// Directory name for a core module, e.g. `04-experiment`.
pub fn core_dir_name(kind: ModuleKind) -> String {
    format!("{:02}-{}", kind.number(), kind.label())
}

/// A full laboratory package.
#[derive(Debug, Clone, PartialEq)]
pub struct Package {
    pub manifest: Manifest,
    /// Exactly one module per core kind, canonical order when valid.
    pub core_modules: Vec<LpModule>,
    /// Replications then aggregations, each sorted by study index.
    /// Append-only: an existing study module's digest never changes.
    pub study_modules: Vec<LpModule>,
    pub version_history: Vec<CoreSnapshot>,
    pub assessments: Vec<Assessment>,
    /// Root-level `toc.md`: the package's table of contents and link hub.
    pub toc: Option<String>,
    /// Root-level `references.md`: the external reference list.
    pub references: Option<String>,
}

impl Package {
    pub fn core(&self, kind: ModuleKind) -> Option<&LpModule> {
        self.core_modules.iter().find(|m| m.kind == kind)
    }

    pub fn core_mut(&mut self, kind: ModuleKind) -> Option<&mut LpModule> {
        self.core_modules.iter_mut().find(|m| m.kind == kind)
    }

    /// All modules, core first, study modules in canonical order.
    pub fn modules(&self) -> impl Iterator<Item = &LpModule> {
        self.core_modules.iter().chain(self.study_modules.iter())
    }

    pub fn replications(&self) -> impl Iterator<Item = &LpModule> {
        self.study_modules
            .iter()
            .filter(|m| m.kind == ModuleKind::Replication)
    }

    pub fn aggregations(&self) -> impl Iterator<Item = &LpModule> {
        self.study_modules
            .iter()
            .filter(|m| m.kind == ModuleKind::Aggregation)
    }

    /// Next free 1-based index for a study kind. Indices are assigned, never
    /// supplied, so they cannot collide.
    pub fn next_study_index(&self, kind: ModuleKind) -> u32 {
        self.study_modules
            .iter()
            .filter(|m| m.kind == kind)
            .filter_map(|m| m.study_index)
            .max()
            .unwrap_or(0)
            + 1
    }

    /// `(kind, index, digest)` for every study module; the append-only
    /// property says this multiset only ever grows.
    pub fn study_digests(&self) -> BTreeSet<(ModuleKind, u32, String)> {
        self.study_modules
            .iter()
            .map(|m| (m.kind, m.study_index.unwrap_or(0), m.content_digest()))
            .collect()
    }

    /// Finds a section anywhere in the package by its full number.
    pub fn find_section(&self, number: &SectionNumber) -> Option<(&LpModule, &Section)> {
        self.modules()
            .find_map(|m| m.find_section(number).map(|s| (m, s)))
    }

    /// Evolution entry sections (top-level sections of the evolution module).
    pub fn evolution_entries(&self) -> &[Section] {
        self.core(ModuleKind::Evolution)
            .map(|m| m.sections.as_slice())
            .unwrap_or(&[])
    }
}

/// Validates the structural invariants of a package and returns one finding
/// per violation. An empty list means structurally valid; findings, not
/// failures, so callers always see the complete picture.
pub fn validate_structure(package: &Package) -> Vec<Finding> {
    let mut findings = Vec::new();

    for kind in ModuleKind::CORE {
        let count = package.core_modules.iter().filter(|m| m.kind == kind).count();
        if count == 0 {
            findings.push(Finding::structure(
                FindingCode::MissingCoreModule,
                Locus::module(kind.label()),
                format!("core module `{}` is missing", kind.label()),
            ));
        } else if count > 1 {
            findings.push(Finding::structure(
                FindingCode::DuplicateCoreModule,
                Locus::module(kind.label()),
                format!("core module `{}` appears {count} times", kind.label()),
            ));
        }
    }

    for module in &package.core_modules {
        if !module.kind.is_core() {
            findings.push(Finding::structure(
                FindingCode::MisplacedStudyIndex,
                Locus::module(module.display_label()),
                format!("study module `{}` listed among core modules", module.display_label()),
            ));
        } else if module.study_index.is_some() {
            findings.push(Finding::structure(
                FindingCode::MisplacedStudyIndex,
                Locus::module(module.display_label()),
                format!("core module `{}` carries a study index", module.kind.label()),
            ));
        }
    }

    let mut seen: BTreeSet<(ModuleKind, u32)> = BTreeSet::new();
    for module in &package.study_modules {
        if !module.kind.is_study() {
            findings.push(Finding::structure(
                FindingCode::MisplacedStudyIndex,
                Locus::module(module.display_label()),
                format!("core module `{}` listed among study modules", module.kind.label()),
            ));
            continue;
        }
        match module.study_index {
            None | Some(0) => {
                findings.push(Finding::structure(
                    FindingCode::MisplacedStudyIndex,
                    Locus::module(module.display_label()),
                    format!(
                        "study module `{}` needs a 1-based study index",
                        module.kind.label()
                    ),
                ));
            }
            Some(n) => {
                if !seen.insert((module.kind, n)) {
                    findings.push(Finding::structure(
                        FindingCode::DuplicateStudyIndex,
                        Locus::module(module.display_label()),
                        format!("study index {}.{n} is used more than once", module.kind.number()),
                    ));
                }
            }
        }
    }

    // One evolution entry section per study module.
    if let Some(evolution) = package.core(ModuleKind::Evolution) {
        let expected = package.study_modules.len();
        let found = evolution.sections.len();
        if expected != found {
            findings.push(Finding::structure(
                FindingCode::EvolutionOutOfSync,
                Locus::module(ModuleKind::Evolution.label()),
                format!("evolution module has {found} entry sections, expected {expected} (one per study module)"),
            ));
        }
    }

    for module in package.modules() {
        validate_module_sections(module, &mut findings);
        validate_attachments(module, &mut findings);
    }

    sort_findings(&mut findings);
    findings
}

fn validate_module_sections(module: &LpModule, findings: &mut Vec<Finding>) {
    let root = module.module_number();
    validate_section_level(module, &root, &module.sections, findings);
}

fn validate_section_level(
    module: &LpModule,
    parent: &SectionNumber,
    sections: &[Section],
    findings: &mut Vec<Finding>,
) {
    for (i, section) in sections.iter().enumerate() {
        let expected = parent.child(i as u32 + 1);
        if section.number != expected {
            findings.push(Finding::structure(
                FindingCode::BadSectionNumbering,
                Locus::section(module.display_label(), section.number.to_string()),
                format!(
                    "section numbered `{}` where `{expected}` was expected (siblings must be gapless under their parent)",
                    section.number
                ),
            ));
        }
        if section.title.trim().is_empty() {
            findings.push(Finding::structure(
                FindingCode::UntitledSection,
                Locus::section(module.display_label(), section.number.to_string()),
                format!("section `{}` has an empty title", section.number),
            ));
        }
        validate_section_level(module, &section.number, &section.children, findings);
    }
}

fn validate_attachments(module: &LpModule, findings: &mut Vec<Finding>) {
    let mut seen = BTreeSet::new();
    for attachment in &module.attachments {
        if let Err(reason) = check_attachment_path(&attachment.path) {
            findings.push(Finding::structure(
                FindingCode::BadAttachmentPath,
                Locus {
                    module: Some(module.display_label()),
                    section: None,
                    path: Some(attachment.path.clone()),
                },
                format!("attachment path `{}` {reason}", attachment.path),
            ));
        } else if !seen.insert(attachment.path.as_str()) {
            findings.push(Finding::structure(
                FindingCode::BadAttachmentPath,
                Locus {
                    module: Some(module.display_label()),
                    section: None,
                    path: Some(attachment.path.clone()),
                },
                format!("attachment path `{}` is listed twice", attachment.path),
            ));
        }
    }
}

/// Attachment paths must be relative, normalized, forward-slash separated and
/// resolve inside the package root (no `..`, `.` or empty segments).
pub fn check_attachment_path(path: &str) -> Result<(), &'static str> {
    if path.is_empty() {
        return Err("is empty");
    }
    if path.starts_with('/') {
        return Err("is absolute");
    }
    if path.contains('\\') {
        return Err("must use forward slashes");
    }
    for segment in path.split('/') {
        match segment {
            "" => return Err("has empty path segments"),
            "." | ".." => return Err("must be normalized (no `.` or `..` segments)"),
            _ => {}
        }
    }
    Ok(())
}
