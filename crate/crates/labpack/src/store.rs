//! Bit-exact on-disk representation of a package.
//!
//! Layout, relative to the package root:
//!
//! ```text
//! labpack.json                      manifest
//! toc.md, references.md             optional navigation artifacts
//! modules/01-introduction/          module.json + sections/<number>.md
//!   ...                             (+ attachments/<path> when present)
//! modules/06-replications/6.<n>/    one directory per study module
//! modules/07-aggregations/7.<n>/
//! versions/<version_id>/            snapshot.json + frozen core modules
//! assessments/<replication>.json    incident and rubric records
//! ```
//!
//! Serialization is a pure function of the package value: sorted keys, two
//! space JSON indentation, `\n` newlines, UTF-8, trailing newline at EOF.
//! Rewriting an unchanged package is a byte-level no-op. Files under
//! `versions/` are frozen: any write that would alter them is refused.
//!
//! Parsing returns either a package or *all* diagnostics found, never just
//! the first. Files the layout does not know at the package root (e.g.
//! `.git`) are ignored; unknown files inside owned directories are
//! diagnosed.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use crate::assess::{parse_assessment_json, assessment_file_bytes, Assessment};
use crate::finding::{Finding, Severity};
use crate::model::{
    core_dir_name, is_slug, slugify, validate_structure, Attachment, Contact, CoreSnapshot,
    EvidenceEntry, LpModule, Manifest, ModuleKind, Package, Section, SectionNumber,
    SUPPORTED_FORMAT_VERSIONS,
};

pub const MANIFEST_FILE: &str = "labpack.json";
pub const TOC_FILE: &str = "toc.md";
pub const REFERENCES_FILE: &str = "references.md";
pub const LOCK_FILE: &str = ".labpack.lock";
const REPLICATIONS_DIR: &str = "06-replications";
const AGGREGATIONS_DIR: &str = "07-aggregations";

/// Closed set of parse diagnostic codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagnosticCode {
    MissingManifest,
    MalformedMetadata,
    UnsupportedFormatVersion,
    DanglingAttachment,
}

/// One problem found while parsing a package tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParseDiagnostic {
    /// Path relative to the package root.
    pub file: String,
    /// 1-based line in that file.
    pub line: u32,
    pub code: DiagnosticCode,
    pub message: String,
}

impl ParseDiagnostic {
    fn new(file: impl Into<String>, line: u32, code: DiagnosticCode, message: impl Into<String>) -> Self {
        ParseDiagnostic {
            file: file.into(),
            line: line.max(1),
            code,
            message: message.into(),
        }
    }
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {:?}: {}", self.file, self.line, self.code, self.message)
    }
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("package is structurally invalid ({} error findings)", .0.len())]
    StructurallyInvalid(Vec<Finding>),
    #[error("write would alter frozen snapshot version {0}")]
    RefusedOverwriteOfSnapshot(u32),
    #[error("package is locked by another writer ({0})")]
    LockHeld(PathBuf),
    #[error("two assessments share the file name for `{0}`")]
    DuplicateAssessmentId(String),
    #[error("io failure at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> StoreError {
    let path = path.into();
    move |source| StoreError::Io { path, source }
}

/// Advisory single-writer lock: `.labpack.lock` in the package root,
/// created exclusively and removed on drop.
pub struct PackageLock {
    path: PathBuf,
}

impl PackageLock {
    pub fn acquire(root: &Path) -> Result<PackageLock, StoreError> {
        std::fs::create_dir_all(root).map_err(io_err(root))?;
        let path = root.join(LOCK_FILE);
        match std::fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(PackageLock { path }),
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => Err(StoreError::LockHeld(path)),
            Err(source) => Err(StoreError::Io { path, source }),
        }
    }
}

impl Drop for PackageLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}

// ---------------------------------------------------------------------------
// Rendering (Package -> bytes)
// ---------------------------------------------------------------------------

fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("value serializes");
    bytes.push(b'\n');
    bytes
}

#[derive(Serialize)]
struct ManifestFile<'a> {
    contacts: &'a [Contact],
    created: &'a DateTime<Utc>,
    experiment_name: &'a str,
    family: &'a str,
    format_version: u32,
    language_tag: &'a str,
    package_id: &'a str,
}

#[derive(Serialize)]
struct ModuleFile<'a> {
    attachments: Vec<&'a str>,
    content_digest: String,
    evidence: &'a [EvidenceEntry],
    guidance: &'a BTreeMap<String, String>,
    kind: &'a str,
    module_number: u32,
    sections: BTreeMap<String, &'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    study_index: Option<u32>,
}

#[derive(Serialize)]
struct SnapshotFile<'a> {
    change_note: &'a str,
    digests: &'a BTreeMap<String, String>,
    timestamp: &'a DateTime<Utc>,
    version_id: u32,
}

/// Directory of a module relative to the root, e.g.
/// `modules/04-experiment` or `modules/06-replications/6.2`.
pub fn module_dir(module: &LpModule) -> String {
    match (module.kind, module.study_index) {
        (ModuleKind::Replication, Some(n)) => format!("modules/{REPLICATIONS_DIR}/6.{n}"),
        (ModuleKind::Aggregation, Some(n)) => format!("modules/{AGGREGATIONS_DIR}/7.{n}"),
        (kind, _) => format!("modules/{}", core_dir_name(kind)),
    }
}

fn render_module(dir: &str, module: &LpModule, out: &mut BTreeMap<String, Vec<u8>>) {
    let sections_index: BTreeMap<String, &str> = module
        .sections_preorder()
        .into_iter()
        .map(|s| (s.number.to_string(), s.title.as_str()))
        .collect();
    let file = ModuleFile {
        attachments: module.attachments.iter().map(|a| a.path.as_str()).collect(),
        content_digest: module.content_digest(),
        evidence: &module.evidence,
        guidance: &module.guidance,
        kind: module.kind.label(),
        module_number: module.kind.number(),
        sections: sections_index,
        study_index: module.study_index,
    };
    out.insert(format!("{dir}/module.json"), json_bytes(&file));
    for section in module.sections_preorder() {
        if let Some(body) = &section.body {
            out.insert(
                format!("{dir}/sections/{}.md", section.number),
                body.as_bytes().to_vec(),
            );
        }
    }
    for attachment in &module.attachments {
        out.insert(
            format!("{dir}/attachments/{}", attachment.path),
            attachment.data.clone(),
        );
    }
}

/// Renders the full canonical tree of a package as `relative path -> bytes`.
/// This is the single source of truth for what the tool owns on disk.
pub fn render_package(package: &Package) -> Result<BTreeMap<String, Vec<u8>>, StoreError> {
    let mut out = BTreeMap::new();
    out.insert(
        MANIFEST_FILE.to_string(),
        json_bytes(&ManifestFile {
            contacts: &package.manifest.contacts,
            created: &package.manifest.created,
            experiment_name: &package.manifest.experiment_name,
            family: &package.manifest.family,
            format_version: package.manifest.format_version,
            language_tag: &package.manifest.language_tag,
            package_id: &package.manifest.package_id,
        }),
    );
    if let Some(toc) = &package.toc {
        out.insert(TOC_FILE.to_string(), toc.as_bytes().to_vec());
    }
    if let Some(references) = &package.references {
        out.insert(REFERENCES_FILE.to_string(), references.as_bytes().to_vec());
    }
    for module in package.modules() {
        render_module(&module_dir(module), module, &mut out);
    }
    for snapshot in &package.version_history {
        let base = format!("versions/{}", snapshot.version_id);
        out.insert(
            format!("{base}/snapshot.json"),
            json_bytes(&SnapshotFile {
                change_note: &snapshot.change_note,
                digests: &snapshot.recorded_digests,
                timestamp: &snapshot.timestamp,
                version_id: snapshot.version_id,
            }),
        );
        for module in &snapshot.modules {
            render_module(&format!("{base}/{}", core_dir_name(module.kind)), module, &mut out);
        }
    }
    let mut seen_slugs = BTreeSet::new();
    for assessment in &package.assessments {
        if !seen_slugs.insert(slugify(&assessment.replication_id)) {
            return Err(StoreError::DuplicateAssessmentId(
                assessment.replication_id.clone(),
            ));
        }
        out.insert(
            format!("assessments/{}.json", slugify(&assessment.replication_id)),
            assessment_file_bytes(assessment),
        );
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Serialization to disk
// ---------------------------------------------------------------------------

/// Writes the canonical layout under `root`, taking the package write lock.
///
/// Preconditions: the package passes structure validation with zero error
/// findings. The write is staged per file and skips files whose bytes are
/// already identical, so rewriting an unchanged package changes nothing.
/// Any write that would alter bytes under `versions/` is refused before
/// anything is touched.
pub fn serialize_package(package: &Package, root: &Path) -> Result<(), StoreError> {
    let errors: Vec<Finding> = validate_structure(package)
        .into_iter()
        .filter(|f| f.severity == Severity::Error)
        .collect();
    if !errors.is_empty() {
        return Err(StoreError::StructurallyInvalid(errors));
    }

    let rendered = render_package(package)?;
    let _lock = PackageLock::acquire(root)?;

    // Refusal pass: nothing under versions/ may change or disappear.
    let versions_dir = root.join("versions");
    if versions_dir.exists() {
        for entry in walkdir::WalkDir::new(&versions_dir).sort_by_file_name() {
            let entry = entry.map_err(|e| StoreError::Io {
                path: versions_dir.clone(),
                source: e.into(),
            })?;
            if !entry.file_type().is_file() {
                continue;
            }
            let rel = relative_key(root, entry.path());
            let version_id = rel
                .strip_prefix("versions/")
                .and_then(|rest| rest.split('/').next())
                .and_then(|id| id.parse::<u32>().ok())
                .unwrap_or(0);
            match rendered.get(&rel) {
                None => return Err(StoreError::RefusedOverwriteOfSnapshot(version_id)),
                Some(bytes) => {
                    let existing = std::fs::read(entry.path()).map_err(io_err(entry.path()))?;
                    if &existing != bytes {
                        return Err(StoreError::RefusedOverwriteOfSnapshot(version_id));
                    }
                }
            }
        }
    }

    for (rel, bytes) in &rendered {
        let path = root.join(rel);
        if let Ok(existing) = std::fs::read(&path) {
            if &existing == bytes {
                continue;
            }
        }
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        // Stage in the same directory so the rename cannot cross filesystems.
        let staged = path.with_extension("labpack-stage");
        std::fs::write(&staged, bytes).map_err(io_err(&staged))?;
        std::fs::rename(&staged, &path).map_err(io_err(&path))?;
    }

    remove_stale_owned_files(root, &rendered)?;
    Ok(())
}

fn relative_key(root: &Path, path: &Path) -> String {
    path.strip_prefix(root)
        .expect("walked under root")
        .components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

/// Deletes owned files that the rendered tree no longer contains: the root
/// artifacts, everything under modules/ that belongs to the layout, and
/// assessments/*.json. Files under versions/ were already verified intact.
/// Foreign files (anything else) are never touched.
fn remove_stale_owned_files(root: &Path, rendered: &BTreeMap<String, Vec<u8>>) -> Result<(), StoreError> {
    let mut stale = Vec::new();
    for fixed in [TOC_FILE, REFERENCES_FILE] {
        if root.join(fixed).exists() && !rendered.contains_key(fixed) {
            stale.push(root.join(fixed));
        }
    }
    let modules_root = root.join("modules");
    if modules_root.exists() {
        for entry in walkdir::WalkDir::new(&modules_root).sort_by_file_name() {
            let entry = entry.map_err(|e| StoreError::Io {
                path: modules_root.clone(),
                source: e.into(),
            })?;
            if !entry.file_type().is_file() {
                continue;
            }
            let rel = relative_key(root, entry.path());
            if rendered.contains_key(&rel) {
                continue;
            }
            if is_owned_module_file(&rel) {
                stale.push(entry.path().to_path_buf());
            }
        }
    }
    let assessments_root = root.join("assessments");
    if assessments_root.exists() {
        for entry in std::fs::read_dir(&assessments_root).map_err(io_err(&assessments_root))? {
            let entry = entry.map_err(io_err(&assessments_root))?;
            let rel = relative_key(root, &entry.path());
            if entry.path().extension().is_some_and(|e| e == "json") && !rendered.contains_key(&rel) {
                stale.push(entry.path());
            }
        }
    }
    for path in stale {
        std::fs::remove_file(&path).map_err(io_err(&path))?;
    }
    prune_empty_dirs(&modules_root)?;
    prune_empty_dirs(&assessments_root)?;
    Ok(())
}

/// module.json plus anything under sections/ or attachments/ of a module
/// directory is owned by the tool; stray files next to them are not.
fn is_owned_module_file(rel: &str) -> bool {
    let parts: Vec<&str> = rel.split('/').collect();
    let in_module = |rest: &[&str]| -> bool {
        rest == ["module.json"]
            || rest.first() == Some(&"sections")
            || rest.first() == Some(&"attachments")
    };
    match parts.as_slice() {
        ["modules", dir, rest @ ..] if ModuleKind::CORE.iter().any(|&k| core_dir_name(k) == *dir) => {
            in_module(rest)
        }
        ["modules", REPLICATIONS_DIR | AGGREGATIONS_DIR, _study, rest @ ..] => in_module(rest),
        _ => false,
    }
}

fn prune_empty_dirs(base: &Path) -> Result<(), StoreError> {
    if !base.exists() {
        return Ok(());
    }
    // Deepest first so parents empty out as children go.
    let mut dirs: Vec<PathBuf> = walkdir::WalkDir::new(base)
        .into_iter()
        .filter_map(Result::ok)
        .filter(|e| e.file_type().is_dir())
        .map(|e| e.path().to_path_buf())
        .collect();
    dirs.sort_by_key(|d| std::cmp::Reverse(d.components().count()));
    for dir in dirs {
        if dir != *base {
            let _ = std::fs::remove_dir(&dir); // fails when non-empty; fine
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Parsing (bytes -> Package)
// ---------------------------------------------------------------------------

struct Collector {
    diags: Vec<ParseDiagnostic>,
}

impl Collector {
    fn push(&mut self, file: &str, line: u32, code: DiagnosticCode, message: impl Into<String>) {
        self.diags.push(ParseDiagnostic::new(file, line, code, message));
    }
}

/// Parses a package tree. On success the returned package serializes back
/// to byte-identical owned files; on failure all diagnostics are returned.
pub fn parse_package(root: &Path) -> Result<Package, Vec<ParseDiagnostic>> {
    let mut collector = Collector { diags: Vec::new() };

    let manifest_path = root.join(MANIFEST_FILE);
    if !manifest_path.is_file() {
        collector.push(
            MANIFEST_FILE,
            1,
            DiagnosticCode::MissingManifest,
            format!("no {MANIFEST_FILE} at package root {}", root.display()),
        );
        return Err(collector.diags);
    }
    let manifest = parse_manifest(&manifest_path, &mut collector);

    let toc = read_optional_text(root, TOC_FILE, &mut collector);
    let references = read_optional_text(root, REFERENCES_FILE, &mut collector);

    let (core_modules, study_modules) = parse_modules(root, &mut collector);
    let version_history = parse_versions(root, &mut collector);
    let assessments = parse_assessments(root, &mut collector);

    if !collector.diags.is_empty() {
        collector.diags.sort_by(|a, b| {
            (&a.file, a.line, a.code, &a.message).cmp(&(&b.file, b.line, b.code, &b.message))
        });
        return Err(collector.diags);
    }

    Ok(Package {
        manifest: manifest.expect("manifest present when no diagnostics"),
        core_modules,
        study_modules,
        version_history,
        assessments,
        toc,
        references,
    })
}

fn read_optional_text(root: &Path, name: &str, collector: &mut Collector) -> Option<String> {
    let path = root.join(name);
    if !path.is_file() {
        return None;
    }
    match std::fs::read(&path) {
        Ok(bytes) => match String::from_utf8(bytes) {
            Ok(text) => Some(text),
            Err(_) => {
                collector.push(name, 1, DiagnosticCode::MalformedMetadata, "file is not UTF-8");
                None
            }
        },
        Err(e) => {
            collector.push(name, 1, DiagnosticCode::MalformedMetadata, format!("cannot read: {e}"));
            None
        }
    }
}

fn read_json(path: &Path, rel: &str, collector: &mut Collector) -> Option<Value> {
    let text = match std::fs::read_to_string(path) {
        Ok(text) => text,
        Err(e) => {
            collector.push(rel, 1, DiagnosticCode::MalformedMetadata, format!("cannot read: {e}"));
            return None;
        }
    };
    match serde_json::from_str(&text) {
        Ok(value) => Some(value),
        Err(e) => {
            collector.push(
                rel,
                e.line() as u32,
                DiagnosticCode::MalformedMetadata,
                e.to_string(),
            );
            None
        }
    }
}

fn take_string(
    obj: &serde_json::Map<String, Value>,
    key: &str,
    rel: &str,
    collector: &mut Collector,
) -> Option<String> {
    match obj.get(key) {
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => {
            collector.push(rel, 1, DiagnosticCode::MalformedMetadata, format!("`{key}` must be a string"));
            None
        }
        None => {
            collector.push(rel, 1, DiagnosticCode::MalformedMetadata, format!("missing key `{key}`"));
            None
        }
    }
}

fn parse_manifest(path: &Path, collector: &mut Collector) -> Option<Manifest> {
    let rel = MANIFEST_FILE;
    let value = read_json(path, rel, collector)?;
    let obj = match value.as_object() {
        Some(obj) => obj,
        None => {
            collector.push(rel, 1, DiagnosticCode::MalformedMetadata, "manifest must be a JSON object");
            return None;
        }
    };

    const KNOWN: [&str; 7] = [
        "contacts",
        "created",
        "experiment_name",
        "family",
        "format_version",
        "language_tag",
        "package_id",
    ];
    for key in obj.keys() {
        if !KNOWN.contains(&key.as_str()) {
            collector.push(rel, 1, DiagnosticCode::MalformedMetadata, format!("unknown key `{key}`"));
        }
    }

    let package_id = take_string(obj, "package_id", rel, collector);
    if let Some(id) = &package_id {
        if !is_slug(id) {
            collector.push(
                rel,
                1,
                DiagnosticCode::MalformedMetadata,
                format!("package_id `{id}` is not a slug"),
            );
        }
    }
    let experiment_name = take_string(obj, "experiment_name", rel, collector);
    let family = take_string(obj, "family", rel, collector);
    let language_tag = take_string(obj, "language_tag", rel, collector);

    let format_version = match obj.get("format_version") {
        Some(Value::Number(n)) if n.as_u64().is_some() => {
            let v = n.as_u64().unwrap() as u32;
            if !SUPPORTED_FORMAT_VERSIONS.contains(&v) {
                collector.push(
                    rel,
                    1,
                    DiagnosticCode::UnsupportedFormatVersion,
                    format!("format_version {v} unsupported (supported: {SUPPORTED_FORMAT_VERSIONS:?})"),
                );
                None
            } else {
                Some(v)
            }
        }
        Some(_) => {
            collector.push(rel, 1, DiagnosticCode::MalformedMetadata, "`format_version` must be an integer");
            None
        }
        None => {
            collector.push(rel, 1, DiagnosticCode::MalformedMetadata, "missing key `format_version`");
            None
        }
    };

    let created = match take_string(obj, "created", rel, collector) {
        Some(s) => match DateTime::parse_from_rfc3339(&s) {
            Ok(dt) => Some(dt.with_timezone(&Utc)),
            Err(e) => {
                collector.push(
                    rel,
                    1,
                    DiagnosticCode::MalformedMetadata,
                    format!("`created` is not RFC 3339: {e}"),
                );
                None
            }
        },
        None => None,
    };

    let mut contacts = Vec::new();
    match obj.get("contacts") {
        Some(Value::Array(items)) => {
            for (i, item) in items.iter().enumerate() {
                match item.as_object() {
                    Some(c) => {
                        let email = c.get("email").and_then(Value::as_str);
                        let name = c.get("name").and_then(Value::as_str);
                        match (email, name) {
                            (Some(email), Some(name)) => contacts.push(Contact {
                                email: email.to_string(),
                                name: name.to_string(),
                            }),
                            _ => collector.push(
                                rel,
                                1,
                                DiagnosticCode::MalformedMetadata,
                                format!("contact {i} needs string `name` and `email`"),
                            ),
                        }
                    }
                    None => collector.push(
                        rel,
                        1,
                        DiagnosticCode::MalformedMetadata,
                        format!("contact {i} must be an object"),
                    ),
                }
            }
        }
        Some(_) => collector.push(rel, 1, DiagnosticCode::MalformedMetadata, "`contacts` must be an array"),
        None => collector.push(rel, 1, DiagnosticCode::MalformedMetadata, "missing key `contacts`"),
    }

    Some(Manifest {
        package_id: package_id?,
        experiment_name: experiment_name?,
        family: family?,
        language_tag: language_tag?,
        contacts,
        created: created?,
        format_version: format_version?,
    })
}

fn parse_modules(root: &Path, collector: &mut Collector) -> (Vec<LpModule>, Vec<LpModule>) {
    let mut core_modules = Vec::new();
    let mut study_modules = Vec::new();
    let modules_root = root.join("modules");
    if !modules_root.exists() {
        return (core_modules, study_modules);
    }

    let mut entries: Vec<PathBuf> = match std::fs::read_dir(&modules_root) {
        Ok(rd) => rd.filter_map(Result::ok).map(|e| e.path()).collect(),
        Err(e) => {
            collector.push("modules", 1, DiagnosticCode::MalformedMetadata, format!("cannot read: {e}"));
            return (core_modules, study_modules);
        }
    };
    entries.sort();

    for entry in entries {
        let name = entry.file_name().unwrap_or_default().to_string_lossy().to_string();
        let rel = format!("modules/{name}");
        if let Some(&kind) = ModuleKind::CORE.iter().find(|&&k| core_dir_name(k) == name) {
            if !entry.is_dir() {
                collector.push(&rel, 1, DiagnosticCode::MalformedMetadata, "expected a directory");
                continue;
            }
            if let Some(module) = parse_module_dir(&entry, &rel, kind, None, collector) {
                core_modules.push(module);
            }
        } else if name == REPLICATIONS_DIR || name == AGGREGATIONS_DIR {
            let kind = if name == REPLICATIONS_DIR {
                ModuleKind::Replication
            } else {
                ModuleKind::Aggregation
            };
            parse_study_dirs(&entry, &rel, kind, &mut study_modules, collector);
        } else {
            collector.push(
                &rel,
                1,
                DiagnosticCode::MalformedMetadata,
                "unexpected entry under modules/ (not part of the layout)",
            );
        }
    }

    core_modules.sort_by_key(|m| m.kind.number());
    study_modules.sort_by_key(|m| (m.kind.number(), m.study_index));
    (core_modules, study_modules)
}

fn parse_study_dirs(
    base: &Path,
    base_rel: &str,
    kind: ModuleKind,
    out: &mut Vec<LpModule>,
    collector: &mut Collector,
) {
    let mut entries: Vec<PathBuf> = match std::fs::read_dir(base) {
        Ok(rd) => rd.filter_map(Result::ok).map(|e| e.path()).collect(),
        Err(e) => {
            collector.push(base_rel, 1, DiagnosticCode::MalformedMetadata, format!("cannot read: {e}"));
            return;
        }
    };
    entries.sort();
    for entry in entries {
        let name = entry.file_name().unwrap_or_default().to_string_lossy().to_string();
        let rel = format!("{base_rel}/{name}");
        let index = name
            .strip_prefix(&format!("{}.", kind.number()))
            .and_then(|n| n.parse::<u32>().ok())
            .filter(|&n| n >= 1);
        match index {
            Some(n) if entry.is_dir() => {
                if let Some(module) = parse_module_dir(&entry, &rel, kind, Some(n), collector) {
                    out.push(module);
                }
            }
            _ => collector.push(
                &rel,
                1,
                DiagnosticCode::MalformedMetadata,
                format!("expected a study directory named `{}.<index>`", kind.number()),
            ),
        }
    }
}

fn parse_module_dir(
    dir: &Path,
    rel: &str,
    kind: ModuleKind,
    study_index: Option<u32>,
    collector: &mut Collector,
) -> Option<LpModule> {
    let module_json_rel = format!("{rel}/module.json");
    let module_json = dir.join("module.json");
    if !module_json.is_file() {
        collector.push(&module_json_rel, 1, DiagnosticCode::MalformedMetadata, "module.json is missing");
        return None;
    }
    let value = read_json(&module_json, &module_json_rel, collector)?;
    let obj = match value.as_object() {
        Some(obj) => obj,
        None => {
            collector.push(&module_json_rel, 1, DiagnosticCode::MalformedMetadata, "module.json must be a JSON object");
            return None;
        }
    };

    const KNOWN: [&str; 8] = [
        "attachments",
        "content_digest",
        "evidence",
        "guidance",
        "kind",
        "module_number",
        "sections",
        "study_index",
    ];
    for key in obj.keys() {
        if key == "format_version" {
            // Not part of module metadata; tolerated at 1 for hand-edited
            // trees, rejected otherwise.
            match obj.get(key).and_then(Value::as_u64) {
                Some(v) if SUPPORTED_FORMAT_VERSIONS.contains(&(v as u32)) => {}
                other => collector.push(
                    &module_json_rel,
                    1,
                    DiagnosticCode::UnsupportedFormatVersion,
                    format!(
                        "format_version {} unsupported (supported: {SUPPORTED_FORMAT_VERSIONS:?})",
                        other.map_or_else(|| "?".to_string(), |v| v.to_string())
                    ),
                ),
            }
            continue;
        }
        if !KNOWN.contains(&key.as_str()) {
            collector.push(&module_json_rel, 1, DiagnosticCode::MalformedMetadata, format!("unknown key `{key}`"));
        }
    }

    match obj.get("kind").and_then(Value::as_str) {
        Some(label) if ModuleKind::from_label(label) == Some(kind) => {}
        Some(label) => collector.push(
            &module_json_rel,
            1,
            DiagnosticCode::MalformedMetadata,
            format!("kind `{label}` does not match directory (expected `{}`)", kind.label()),
        ),
        None => collector.push(&module_json_rel, 1, DiagnosticCode::MalformedMetadata, "missing string key `kind`"),
    }
    match obj.get("module_number").and_then(Value::as_u64) {
        Some(n) if n as u32 == kind.number() => {}
        Some(n) => collector.push(
            &module_json_rel,
            1,
            DiagnosticCode::MalformedMetadata,
            format!("module_number {n} does not match kind `{}` ({})", kind.label(), kind.number()),
        ),
        None => collector.push(&module_json_rel, 1, DiagnosticCode::MalformedMetadata, "missing integer key `module_number`"),
    }
    match (study_index, obj.get("study_index").and_then(Value::as_u64)) {
        (Some(expected), Some(found)) if u64::from(expected) == found => {}
        (Some(expected), found) => collector.push(
            &module_json_rel,
            1,
            DiagnosticCode::MalformedMetadata,
            format!("study_index {found:?} does not match directory index {expected}"),
        ),
        (None, Some(_)) => collector.push(
            &module_json_rel,
            1,
            DiagnosticCode::MalformedMetadata,
            "core module must not carry a study_index",
        ),
        (None, None) => {}
    }

    let mut module = LpModule {
        kind,
        study_index,
        sections: Vec::new(),
        attachments: Vec::new(),
        guidance: BTreeMap::new(),
        evidence: Vec::new(),
    };

    // Section index: number -> title, rooted under the module number.
    let mut index: BTreeMap<SectionNumber, String> = BTreeMap::new();
    let module_number = module.module_number();
    match obj.get("sections") {
        Some(Value::Object(map)) => {
            for (raw, title) in map {
                let number = match raw.parse::<SectionNumber>() {
                    Ok(number) => number,
                    Err(e) => {
                        collector.push(&module_json_rel, 1, DiagnosticCode::MalformedMetadata, e);
                        continue;
                    }
                };
                if !module_number.is_prefix_of(&number) {
                    collector.push(
                        &module_json_rel,
                        1,
                        DiagnosticCode::MalformedMetadata,
                        format!("section `{number}` is not rooted under module number {module_number}"),
                    );
                    continue;
                }
                match title.as_str() {
                    Some(title) => {
                        index.insert(number, title.to_string());
                    }
                    None => collector.push(
                        &module_json_rel,
                        1,
                        DiagnosticCode::MalformedMetadata,
                        format!("title of section `{number}` must be a string"),
                    ),
                }
            }
        }
        _ => collector.push(&module_json_rel, 1, DiagnosticCode::MalformedMetadata, "missing object key `sections`"),
    }

    // Section bodies live in sections/<number>.md.
    let mut bodies: BTreeMap<SectionNumber, String> = BTreeMap::new();
    let sections_dir = dir.join("sections");
    if sections_dir.exists() {
        let mut files: Vec<PathBuf> = match std::fs::read_dir(&sections_dir) {
            Ok(rd) => rd.filter_map(Result::ok).map(|e| e.path()).collect(),
            Err(e) => {
                collector.push(&format!("{rel}/sections"), 1, DiagnosticCode::MalformedMetadata, format!("cannot read: {e}"));
                Vec::new()
            }
        };
        files.sort();
        for file in files {
            let name = file.file_name().unwrap_or_default().to_string_lossy().to_string();
            let file_rel = format!("{rel}/sections/{name}");
            let number = name
                .strip_suffix(".md")
                .and_then(|stem| stem.parse::<SectionNumber>().ok());
            match number {
                Some(number) if index.contains_key(&number) => {
                    match std::fs::read(&file).map(String::from_utf8) {
                        Ok(Ok(text)) => {
                            bodies.insert(number, text);
                        }
                        Ok(Err(_)) => collector.push(&file_rel, 1, DiagnosticCode::MalformedMetadata, "section body is not UTF-8"),
                        Err(e) => collector.push(&file_rel, 1, DiagnosticCode::MalformedMetadata, format!("cannot read: {e}")),
                    }
                }
                Some(number) => collector.push(
                    &file_rel,
                    1,
                    DiagnosticCode::MalformedMetadata,
                    format!("section file `{number}` is not in the module's section index"),
                ),
                None => collector.push(
                    &file_rel,
                    1,
                    DiagnosticCode::MalformedMetadata,
                    "section files must be named `<dotted-number>.md`",
                ),
            }
        }
    }

    module.sections = build_section_tree(&module_number, &index, &mut bodies, &module_json_rel, collector);

    // Attachments: listed paths must exist; unlisted files are diagnosed.
    let mut listed: Vec<String> = Vec::new();
    match obj.get("attachments") {
        Some(Value::Array(items)) => {
            for item in items {
                match item.as_str() {
                    Some(path) => listed.push(path.to_string()),
                    None => collector.push(&module_json_rel, 1, DiagnosticCode::MalformedMetadata, "attachments must be strings"),
                }
            }
        }
        Some(_) => collector.push(&module_json_rel, 1, DiagnosticCode::MalformedMetadata, "`attachments` must be an array"),
        None => {}
    }
    for path in &listed {
        if crate::model::check_attachment_path(path).is_err() {
            collector.push(
                &module_json_rel,
                1,
                DiagnosticCode::MalformedMetadata,
                format!("attachment path `{path}` is not a normalized relative path"),
            );
            continue;
        }
        let full = dir.join("attachments").join(path);
        match std::fs::read(&full) {
            Ok(data) => module.attachments.push(Attachment {
                path: path.clone(),
                data,
            }),
            Err(_) => collector.push(
                &format!("{rel}/attachments/{path}"),
                1,
                DiagnosticCode::DanglingAttachment,
                format!("attachment `{path}` is listed in module.json but missing on disk"),
            ),
        }
    }
    let attachments_dir = dir.join("attachments");
    if attachments_dir.exists() {
        for entry in walkdir::WalkDir::new(&attachments_dir).sort_by_file_name() {
            let Ok(entry) = entry else { continue };
            if !entry.file_type().is_file() {
                continue;
            }
            let rel_path = entry
                .path()
                .strip_prefix(&attachments_dir)
                .unwrap_or(entry.path())
                .components()
                .map(|c| c.as_os_str().to_string_lossy())
                .collect::<Vec<_>>()
                .join("/");
            if !listed.contains(&rel_path) {
                collector.push(
                    &format!("{rel}/attachments/{rel_path}"),
                    1,
                    DiagnosticCode::MalformedMetadata,
                    "file under attachments/ is not listed in module.json",
                );
            }
        }
    }

    // Guidance map keys must refer to indexed sections.
    if let Some(Value::Object(map)) = obj.get("guidance") {
        for (raw, text) in map {
            let known = raw
                .parse::<SectionNumber>()
                .map(|number| index.contains_key(&number))
                .unwrap_or(false);
            if !known {
                collector.push(
                    &module_json_rel,
                    1,
                    DiagnosticCode::MalformedMetadata,
                    format!("guidance refers to unknown section `{raw}`"),
                );
                continue;
            }
            match text.as_str() {
                Some(text) => {
                    module.guidance.insert(raw.clone(), text.to_string());
                }
                None => collector.push(&module_json_rel, 1, DiagnosticCode::MalformedMetadata, "guidance entries must be strings"),
            }
        }
    } else if obj.get("guidance").is_some_and(|v| !v.is_object()) {
        collector.push(&module_json_rel, 1, DiagnosticCode::MalformedMetadata, "`guidance` must be an object");
    }

    if let Some(value) = obj.get("evidence") {
        match value.as_array() {
            Some(items) => {
                for (i, item) in items.iter().enumerate() {
                    let parsed = item.as_object().and_then(|o| {
                        Some(EvidenceEntry {
                            item: o.get("item")?.as_str()?.to_string(),
                            component: o.get("component")?.as_str()?.to_string(),
                            locus: o.get("locus")?.as_str()?.to_string(),
                        })
                    });
                    match parsed {
                        Some(entry) => module.evidence.push(entry),
                        None => collector.push(
                            &module_json_rel,
                            1,
                            DiagnosticCode::MalformedMetadata,
                            format!("evidence entry {i} needs string `item`, `component`, `locus`"),
                        ),
                    }
                }
            }
            None => collector.push(&module_json_rel, 1, DiagnosticCode::MalformedMetadata, "`evidence` must be an array"),
        }
    }

    // The stored content_digest is a cache refreshed on serialize; a stale
    // value is not an error (section files are edited by hand), but it must
    // at least be a string.
    if obj.get("content_digest").is_some_and(|v| !v.is_string()) {
        collector.push(&module_json_rel, 1, DiagnosticCode::MalformedMetadata, "`content_digest` must be a string");
    }

    Some(module)
}

/// Rebuilds the nested section tree from the flat index. Every non-top
/// section's parent must be indexed too; bodies attach by number.
fn build_section_tree(
    module_number: &SectionNumber,
    index: &BTreeMap<SectionNumber, String>,
    bodies: &mut BTreeMap<SectionNumber, String>,
    rel: &str,
    collector: &mut Collector,
) -> Vec<Section> {
    let mut roots = Vec::new();
    for number in index.keys() {
        let parent = number.parent().expect("section numbers have >= 2 parts");
        if &parent != module_number && !index.contains_key(&parent) {
            collector.push(
                rel,
                1,
                DiagnosticCode::MalformedMetadata,
                format!("section `{number}` has no parent `{parent}` in the index"),
            );
        }
        if &parent == module_number {
            roots.push(number.clone());
        }
    }
    fn build(
        number: &SectionNumber,
        index: &BTreeMap<SectionNumber, String>,
        bodies: &mut BTreeMap<SectionNumber, String>,
    ) -> Section {
        let mut section = Section::new(number.clone(), index[number].clone());
        section.body = bodies.remove(number);
        let children: Vec<SectionNumber> = index
            .keys()
            .filter(|k| k.parent().as_ref() == Some(number))
            .cloned()
            .collect();
        section.children = children.iter().map(|c| build(c, index, bodies)).collect();
        section
    }
    roots.iter().map(|r| build(r, index, bodies)).collect()
}

fn parse_versions(root: &Path, collector: &mut Collector) -> Vec<CoreSnapshot> {
    let mut history = Vec::new();
    let versions_root = root.join("versions");
    if !versions_root.exists() {
        return history;
    }
    let mut entries: Vec<PathBuf> = match std::fs::read_dir(&versions_root) {
        Ok(rd) => rd.filter_map(Result::ok).map(|e| e.path()).collect(),
        Err(e) => {
            collector.push("versions", 1, DiagnosticCode::MalformedMetadata, format!("cannot read: {e}"));
            return history;
        }
    };
    entries.sort();
    for entry in entries {
        let name = entry.file_name().unwrap_or_default().to_string_lossy().to_string();
        let rel = format!("versions/{name}");
        let Some(version_id) = name.parse::<u32>().ok().filter(|&v| v >= 1 && entry.is_dir()) else {
            collector.push(
                &rel,
                1,
                DiagnosticCode::MalformedMetadata,
                "expected a version directory named by its integer id",
            );
            continue;
        };
        let snapshot_rel = format!("{rel}/snapshot.json");
        let Some(value) = read_json(&entry.join("snapshot.json"), &snapshot_rel, collector) else {
            continue;
        };
        let Some(obj) = value.as_object() else {
            collector.push(&snapshot_rel, 1, DiagnosticCode::MalformedMetadata, "snapshot.json must be a JSON object");
            continue;
        };
        match obj.get("version_id").and_then(Value::as_u64) {
            Some(v) if v as u32 == version_id => {}
            other => collector.push(
                &snapshot_rel,
                1,
                DiagnosticCode::MalformedMetadata,
                format!("version_id {other:?} does not match directory `{name}`"),
            ),
        }
        let timestamp = obj
            .get("timestamp")
            .and_then(Value::as_str)
            .and_then(|s| DateTime::parse_from_rfc3339(s).ok())
            .map(|dt| dt.with_timezone(&Utc));
        if timestamp.is_none() {
            collector.push(&snapshot_rel, 1, DiagnosticCode::MalformedMetadata, "missing RFC 3339 `timestamp`");
        }
        let change_note = obj.get("change_note").and_then(Value::as_str).map(str::to_string);
        if change_note.is_none() {
            collector.push(&snapshot_rel, 1, DiagnosticCode::MalformedMetadata, "missing string `change_note`");
        }
        let mut recorded_digests = BTreeMap::new();
        match obj.get("digests").and_then(Value::as_object) {
            Some(map) => {
                for (k, v) in map {
                    match v.as_str() {
                        Some(digest) => {
                            recorded_digests.insert(k.clone(), digest.to_string());
                        }
                        None => collector.push(&snapshot_rel, 1, DiagnosticCode::MalformedMetadata, "digest values must be strings"),
                    }
                }
            }
            None => collector.push(&snapshot_rel, 1, DiagnosticCode::MalformedMetadata, "missing object `digests`"),
        }

        let mut modules = Vec::new();
        for kind in ModuleKind::CORE {
            let module_dir = entry.join(core_dir_name(kind));
            let module_rel = format!("{rel}/{}", core_dir_name(kind));
            if !module_dir.is_dir() {
                collector.push(
                    &module_rel,
                    1,
                    DiagnosticCode::MalformedMetadata,
                    format!("snapshot {version_id} is missing frozen module `{}`", core_dir_name(kind)),
                );
                continue;
            }
            if let Some(module) = parse_module_dir(&module_dir, &module_rel, kind, None, collector) {
                modules.push(module);
            }
        }

        if let (Some(timestamp), Some(change_note)) = (timestamp, change_note) {
            history.push(CoreSnapshot {
                version_id,
                timestamp,
                change_note,
                modules,
                recorded_digests,
            });
        }
    }
    history.sort_by_key(|s| s.version_id);
    history
}

fn parse_assessments(root: &Path, collector: &mut Collector) -> Vec<Assessment> {
    let mut assessments = Vec::new();
    let dir = root.join("assessments");
    if !dir.exists() {
        return assessments;
    }
    let mut entries: Vec<PathBuf> = match std::fs::read_dir(&dir) {
        Ok(rd) => rd.filter_map(Result::ok).map(|e| e.path()).collect(),
        Err(e) => {
            collector.push("assessments", 1, DiagnosticCode::MalformedMetadata, format!("cannot read: {e}"));
            return assessments;
        }
    };
    entries.sort();
    for path in entries {
        let name = path.file_name().unwrap_or_default().to_string_lossy().to_string();
        let rel = format!("assessments/{name}");
        if path.extension().is_none_or(|e| e != "json") {
            // Foreign files; only *.json belongs to the layout here.
            continue;
        }
        let text = match std::fs::read_to_string(&path) {
            Ok(text) => text,
            Err(e) => {
                collector.push(&rel, 1, DiagnosticCode::MalformedMetadata, format!("cannot read: {e}"));
                continue;
            }
        };
        match parse_assessment_json(&text) {
            Ok(assessment) => {
                let expected = format!("{}.json", slugify(&assessment.replication_id));
                if name != expected {
                    collector.push(
                        &rel,
                        1,
                        DiagnosticCode::MalformedMetadata,
                        format!("file name should be `{expected}` for replication `{}`", assessment.replication_id),
                    );
                }
                assessments.push(assessment);
            }
            Err(message) => collector.push(&rel, 1, DiagnosticCode::MalformedMetadata, message),
        }
    }
    assessments.sort_by(|a, b| a.replication_id.cmp(&b.replication_id));
    assessments
}
