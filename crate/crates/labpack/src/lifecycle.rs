//! Package instantiation and evolution: scaffolding from the template,
//! mapping existing documents onto sections, listing missing components,
//! appending studies and publishing core versions.
//!
//! Every operation is value to value; persistence goes through the store.
//! Study modules are append-only: operations assign indices themselves and
//! never touch existing study content, and each study adds exactly one
//! entry section to the evolution module.

use std::collections::BTreeMap;
use std::io;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::Serialize;
use thiserror::Error;

use crate::catalog::{ChecklistItem, RequirementLevel, TemplateCatalog};
use crate::finding::Finding;
use crate::lint::{applicable_entries, lint};
use crate::model::{
    Attachment, EvidenceEntry, LpModule, Manifest, ModuleKind, Package, Section, SectionNumber,
    validate_structure,
};

#[derive(Debug, Error)]
pub enum LifecycleError {
    #[error("invalid manifest: {0}")]
    InvalidManifest(String),
    #[error("package is structurally invalid ({} findings)", .0.len())]
    StructurallyInvalidPackage(Vec<Finding>),
    #[error("{0} lint error(s) present; fix them before publishing")]
    LintErrorsPresent(usize),
    #[error("cannot read source `{path}`: {source}")]
    UnreadableSource {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

// ---------------------------------------------------------------------------
// Scaffolding
// ---------------------------------------------------------------------------

/// Builds a fresh package skeleton: all five core modules with every
/// applicable catalog section present but empty, guidance attached, no
/// studies and no history. Structurally valid, completeness ratio zero.
pub fn scaffold_init(manifest: Manifest, catalog: &TemplateCatalog) -> Result<Package, LifecycleError> {
    manifest.validate().map_err(LifecycleError::InvalidManifest)?;

    let mut core_modules = Vec::new();
    for kind in ModuleKind::CORE {
        let mut module = LpModule::new_core(kind);
        let concrete: Vec<_> = catalog
            .entries_for(kind)
            .filter(|e| e.number.is_concrete())
            .collect();
        let mut sections: BTreeMap<SectionNumber, (String, String)> = BTreeMap::new();
        for entry in concrete {
            sections.insert(
                entry.number.resolve(0),
                (entry.title.clone(), entry.guidance.clone()),
            );
        }
        module.sections = build_tree(&module.module_number(), &sections);
        for (number, (_, guidance)) in &sections {
            if !guidance.is_empty() {
                module.guidance.insert(number.to_string(), guidance.clone());
            }
        }
        core_modules.push(module);
    }

    Ok(Package {
        manifest,
        core_modules,
        study_modules: Vec::new(),
        version_history: Vec::new(),
        assessments: Vec::new(),
        toc: None,
        references: None,
    })
}

/// Builds a nested tree from a flat (number -> title) map; every section
/// gets an empty body so the file exists after serialization.
fn build_tree(
    root: &SectionNumber,
    sections: &BTreeMap<SectionNumber, (String, String)>,
) -> Vec<Section> {
    fn build(
        number: &SectionNumber,
        sections: &BTreeMap<SectionNumber, (String, String)>,
    ) -> Section {
        let mut section = Section::new(number.clone(), sections[number].0.clone());
        section.body = Some(String::new());
        section.children = sections
            .keys()
            .filter(|k| k.parent().as_ref() == Some(number))
            .map(|k| build(k, sections))
            .collect();
        section
    }
    sections
        .keys()
        .filter(|k| k.parent().as_ref() == Some(root))
        .map(|k| build(k, sections))
        .collect()
}

// ---------------------------------------------------------------------------
// Document gathering
// ---------------------------------------------------------------------------

/// Confidence of a source-to-section assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchConfidence {
    /// The file name starts with an explicit dotted section number.
    Exact,
    /// Best title keyword match; needs human confirmation before applying.
    Heuristic,
    Unmapped,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GatherAssignment {
    pub source: PathBuf,
    /// Target section; `None` exactly for unmapped sources.
    pub target: Option<SectionNumber>,
    pub confidence: MatchConfidence,
    /// Why this assignment was made (or not).
    pub note: String,
}

/// Total mapping over the sources: every file appears exactly once.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GatherMapping {
    pub assignments: Vec<GatherAssignment>,
}

impl GatherMapping {
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.assignments).expect("mapping serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for a in &self.assignments {
            let target = a
                .target
                .as_ref()
                .map(|t| t.to_string())
                .unwrap_or_else(|| "-".to_string());
            out.push_str(&format!(
                "{:9} {} -> {} ({})\n",
                format!("{:?}", a.confidence).to_lowercase(),
                a.source.display(),
                target,
                a.note
            ));
        }
        out
    }
}

fn tokenize(text: &str) -> std::collections::BTreeSet<String> {
    text.split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn first_heading(text: &str) -> Option<&str> {
    text.lines().find_map(|line| {
        let trimmed = line.trim_start();
        let rest = trimmed.trim_start_matches('#');
        if rest.len() < trimmed.len() && (1..=6).contains(&(trimmed.len() - rest.len())) {
            Some(rest.trim())
        } else {
            None
        }
    })
}

/// Maps source files onto template sections: an explicit dotted-number
/// prefix in the file name is an exact match; otherwise the file name and
/// first markdown heading are matched against catalog titles, and a unique
/// best overlap of at least two tokens is a heuristic match. Nothing is
/// ever dropped: unmatched files come back as unmapped.
pub fn gather_documents(
    sources: &[PathBuf],
    catalog: &TemplateCatalog,
) -> Result<GatherMapping, LifecycleError> {
    let mut assignments = Vec::new();
    for source in sources {
        let bytes = std::fs::read(source).map_err(|e| LifecycleError::UnreadableSource {
            path: source.clone(),
            source: e,
        })?;
        assignments.push(assign_source(source, &bytes, catalog));
    }
    Ok(GatherMapping { assignments })
}

fn assign_source(source: &Path, bytes: &[u8], catalog: &TemplateCatalog) -> GatherAssignment {
    let stem = source
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_default();

    // Explicit dotted number prefix, e.g. "4.1.1-activities.md".
    let prefix: String = stem
        .chars()
        .take_while(|c| c.is_ascii_digit() || *c == '.')
        .collect();
    let prefix = prefix.trim_end_matches('.');
    let stops_cleanly = stem.len() == prefix.len()
        || matches!(stem.as_bytes().get(prefix.len()), Some(b'-' | b'_' | b' ' | b'.'));
    if !prefix.is_empty() && stops_cleanly {
        if let Ok(number) = prefix.parse::<SectionNumber>() {
            if catalog.match_number(&number).is_some() {
                return GatherAssignment {
                    source: source.to_path_buf(),
                    target: Some(number.clone()),
                    confidence: MatchConfidence::Exact,
                    note: format!("file name carries section number {number}"),
                };
            }
        }
    }

    // Keyword match against catalog titles, file name plus first heading.
    let mut tokens = tokenize(&stem);
    if let Ok(text) = std::str::from_utf8(bytes) {
        if let Some(heading) = first_heading(text) {
            tokens.extend(tokenize(heading));
        }
    }
    let mut best: Option<(usize, SectionNumber, &str)> = None;
    let mut tied = false;
    for entry in catalog.entries() {
        if !entry.number.is_concrete() {
            // Study patterns have no single concrete target to map onto.
            continue;
        }
        let overlap = tokenize(&entry.title).intersection(&tokens).count();
        if overlap < 2 {
            continue;
        }
        match &best {
            Some((top, _, _)) if overlap == *top => tied = true,
            Some((top, _, _)) if overlap > *top => {
                best = Some((overlap, entry.number.resolve(0), &entry.title));
                tied = false;
            }
            None => {
                best = Some((overlap, entry.number.resolve(0), &entry.title));
                tied = false;
            }
            _ => {}
        }
    }
    match best {
        Some((overlap, number, title)) if !tied => GatherAssignment {
            source: source.to_path_buf(),
            target: Some(number),
            confidence: MatchConfidence::Heuristic,
            note: format!("{overlap} shared title tokens with \"{title}\""),
        },
        Some(_) => GatherAssignment {
            source: source.to_path_buf(),
            target: None,
            confidence: MatchConfidence::Unmapped,
            note: "ambiguous: several sections match equally well".to_string(),
        },
        None => GatherAssignment {
            source: source.to_path_buf(),
            target: None,
            confidence: MatchConfidence::Unmapped,
            note: "no catalog title shares enough tokens".to_string(),
        },
    }
}

// ---------------------------------------------------------------------------
// Missing components
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MissingComponent {
    pub number: SectionNumber,
    pub title: String,
    pub level: RequirementLevel,
}

/// Catalog entries (mandatory and recommended) whose sections are absent
/// or empty, ordered by section number. Consistent with the completeness
/// check by construction: both expand the catalog the same way.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MissingComponentsList {
    pub entries: Vec<MissingComponent>,
}

impl MissingComponentsList {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.entries).expect("list serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for entry in &self.entries {
            out.push_str(&format!("{} {} ({})\n", entry.number, entry.title, entry.level));
        }
        out
    }
}

pub fn missing_components(package: &Package, catalog: &TemplateCatalog) -> MissingComponentsList {
    let entries = applicable_entries(package, catalog)
        .into_iter()
        .filter(|a| {
            !package
                .find_section(&a.number)
                .map(|(_, s)| s.is_present())
                .unwrap_or(false)
        })
        .map(|a| MissingComponent {
            number: a.number,
            title: a.entry.title.clone(),
            level: a.entry.level,
        })
        .collect();
    MissingComponentsList { entries }
}

// ---------------------------------------------------------------------------
// Studies
// ---------------------------------------------------------------------------

/// Content for a new replication module (6.n).
#[derive(Debug, Clone, Default)]
pub struct ReplicationContent {
    /// Body of 6.n.1: identification, characterization, results, lessons.
    pub description: String,
    /// Body of 6.n.2.
    pub adapted_design: String,
    /// Body of 6.n.3.
    pub data: String,
    /// Body of 6.n.4.
    pub notes: String,
    /// One-line summary for the evolution entry.
    pub change_summary: String,
    /// When the study was recorded; goes into the evolution entry.
    pub recorded: DateTime<Utc>,
    pub attachments: Vec<Attachment>,
    pub evidence: Vec<EvidenceEntry>,
}

/// Content for a new aggregation module (7.n).
#[derive(Debug, Clone, Default)]
pub struct AggregationContent {
    /// Body of 7.n.1.
    pub protocol: String,
    /// Body of 7.n.2.
    pub results: String,
    pub change_summary: String,
    pub recorded: DateTime<Utc>,
    pub attachments: Vec<Attachment>,
    pub evidence: Vec<EvidenceEntry>,
}

fn require_valid(package: &Package) -> Result<(), LifecycleError> {
    let findings = validate_structure(package);
    if findings.is_empty() {
        Ok(())
    } else {
        Err(LifecycleError::StructurallyInvalidPackage(findings))
    }
}

fn study_section(number: SectionNumber, title: &str, body: String) -> Section {
    let mut section = Section::new(number, title);
    section.body = Some(body);
    section
}

/// Appends the evolution entry for a freshly added study. The entry body
/// records the study id, the core version it ran against, the date and a
/// one-line summary.
fn push_evolution_entry(
    package: &mut Package,
    study_number: &SectionNumber,
    recorded: DateTime<Utc>,
    summary: &str,
) {
    let current_version = package.version_history.iter().map(|s| s.version_id).max().unwrap_or(0);
    let evolution = package
        .core_mut(ModuleKind::Evolution)
        .expect("structure checked");
    let ordinal = evolution.sections.len() as u32 + 1;
    let number = SectionNumber::new(vec![ModuleKind::Evolution.number(), ordinal]).unwrap();
    let body = format!(
        "study: {study_number}\ncore-version: {current_version}\ndate: {}\nsummary: {summary}\n",
        recorded.format("%Y-%m-%d")
    );
    evolution
        .sections
        .push(study_section(number, &format!("Study {study_number}"), body));
}

fn insert_study(package: &mut Package, module: LpModule) {
    // Canonical order: replications block, then aggregations, by index.
    let key = (module.kind.number(), module.study_index);
    let position = package
        .study_modules
        .iter()
        .position(|m| (m.kind.number(), m.study_index) > key)
        .unwrap_or(package.study_modules.len());
    package.study_modules.insert(position, module);
}

/// Adds a replication module with the next free index. Pre-existing module
/// digests are untouched; the evolution module gains exactly one entry.
pub fn add_replication(
    package: &Package,
    content: &ReplicationContent,
) -> Result<Package, LifecycleError> {
    require_valid(package)?;
    let mut next = package.clone();
    let index = next.next_study_index(ModuleKind::Replication);
    let mut module = LpModule::new_study(ModuleKind::Replication, index);
    let root = module.module_number();
    module.sections = vec![
        study_section(root.child(1), "Description of the replication", content.description.clone()),
        study_section(root.child(2), "Adapted design", content.adapted_design.clone()),
        study_section(root.child(3), "Data", content.data.clone()),
        study_section(root.child(4), "Notes", content.notes.clone()),
    ];
    module.attachments = content.attachments.clone();
    module.evidence = content.evidence.clone();
    insert_study(&mut next, module);
    push_evolution_entry(&mut next, &root, content.recorded, &content.change_summary);
    Ok(next)
}

/// Adds an aggregation module with the next free index; same append-only
/// and evolution rules as replications.
pub fn add_aggregation(
    package: &Package,
    content: &AggregationContent,
) -> Result<Package, LifecycleError> {
    require_valid(package)?;
    let mut next = package.clone();
    let index = next.next_study_index(ModuleKind::Aggregation);
    let mut module = LpModule::new_study(ModuleKind::Aggregation, index);
    let root = module.module_number();
    module.sections = vec![
        study_section(root.child(1), "Aggregation protocol", content.protocol.clone()),
        study_section(root.child(2), "Results", content.results.clone()),
    ];
    module.attachments = content.attachments.clone();
    module.evidence = content.evidence.clone();
    insert_study(&mut next, module);
    push_evolution_entry(&mut next, &root, content.recorded, &content.change_summary);
    Ok(next)
}

// ---------------------------------------------------------------------------
// Versioning
// ---------------------------------------------------------------------------

/// Publishes the current core modules as the next version. Gated on a
/// clean lint (zero errors); earlier snapshots are never rewritten, the
/// new snapshot freezes copies plus digests of all core modules.
pub fn publish_core_version(
    package: &Package,
    change_note: &str,
    at: DateTime<Utc>,
    catalog: &TemplateCatalog,
    checklist: &[ChecklistItem],
) -> Result<Package, LifecycleError> {
    let report = lint(package, catalog, checklist);
    if report.counts.error > 0 {
        return Err(LifecycleError::LintErrorsPresent(report.counts.error));
    }
    let mut next = package.clone();
    let version_id = next.version_history.iter().map(|s| s.version_id).max().unwrap_or(0) + 1;
    let modules: Vec<LpModule> = next.core_modules.clone();
    let recorded_digests = modules
        .iter()
        .map(|m| (crate::model::core_dir_name(m.kind), m.content_digest()))
        .collect();
    next.version_history.push(crate::model::CoreSnapshot {
        version_id,
        timestamp: at,
        change_note: change_note.to_string(),
        modules,
        recorded_digests,
    });
    Ok(next)
}

/// Applies a gather mapping to a package: exact assignments (and, when
/// accepted, heuristic ones) fill the target section body with the source
/// file content, but only where the section is still empty. Returns the
/// new package and one note per source describing what happened.
pub fn apply_gather(
    package: &Package,
    mapping: &GatherMapping,
    accept_heuristics: bool,
) -> Result<(Package, Vec<String>), LifecycleError> {
    let mut next = package.clone();
    let mut notes = Vec::new();
    for assignment in &mapping.assignments {
        let display = assignment.source.display();
        let (target, apply) = match (&assignment.target, assignment.confidence) {
            (Some(target), MatchConfidence::Exact) => (target, true),
            (Some(target), MatchConfidence::Heuristic) => (target, accept_heuristics),
            _ => {
                notes.push(format!("{display}: unmapped ({})", assignment.note));
                continue;
            }
        };
        if !apply {
            notes.push(format!(
                "{display}: heuristic match to {target} not applied (needs confirmation)"
            ));
            continue;
        }
        let text = std::fs::read_to_string(&assignment.source).map_err(|e| {
            LifecycleError::UnreadableSource {
                path: assignment.source.clone(),
                source: e,
            }
        })?;
        let mut filled = false;
        for module in next
            .core_modules
            .iter_mut()
            .chain(next.study_modules.iter_mut())
        {
            if let Some(section) = module.find_section_mut(target) {
                if section.is_present() {
                    notes.push(format!("{display}: skipped, section {target} already has content"));
                } else {
                    section.body = Some(text.clone());
                    notes.push(format!("{display}: filled section {target}"));
                }
                filled = true;
                break;
            }
        }
        if !filled {
            notes.push(format!("{display}: section {target} is not in this package"));
        }
    }
    Ok((next, notes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::builtin_catalog;
    use crate::lint::check_completeness;
    use crate::model::Contact;

    fn manifest() -> Manifest {
        Manifest {
            package_id: "defdetect".to_string(),
            experiment_name: "Defect detection".to_string(),
            family: "testing".to_string(),
            language_tag: "es".to_string(),
            contacts: vec![Contact {
                email: "researcher@example.org".to_string(),
                name: "R. Esearcher".to_string(),
            }],
            created: DateTime::parse_from_rfc3339("2016-03-01T10:00:00Z")
                .unwrap()
                .with_timezone(&Utc),
            format_version: 1,
        }
    }

    fn at(s: &str) -> DateTime<Utc> {
        DateTime::parse_from_rfc3339(s).unwrap().with_timezone(&Utc)
    }

    #[test]
    fn scaffold_is_valid_but_empty() {
        let catalog = builtin_catalog();
        let package = scaffold_init(manifest(), &catalog).unwrap();
        assert!(validate_structure(&package).is_empty());
        let report = check_completeness(&package, &catalog);
        assert_eq!(report.completeness_ratio(), 0.0);
        // The experiment skeleton has exactly the 16 leaf subsections.
        let experiment = package.core(ModuleKind::Experiment).unwrap();
        let leaves = experiment
            .sections_preorder()
            .into_iter()
            .filter(|s| s.children.is_empty())
            .count();
        assert_eq!(leaves, 16);
        // Every scaffolded section file exists (empty body, not absent).
        assert!(experiment.sections_preorder().iter().all(|s| s.body == Some(String::new())));
    }

    #[test]
    fn scaffold_is_deterministic_modulo_created() {
        let catalog = builtin_catalog();
        let a = scaffold_init(manifest(), &catalog).unwrap();
        let b = scaffold_init(manifest(), &catalog).unwrap();
        assert_eq!(a, b);

        let mut later = manifest();
        later.created = at("2017-01-01T00:00:00Z");
        let mut c = scaffold_init(later, &catalog).unwrap();
        c.manifest.created = a.manifest.created;
        assert_eq!(a, c);
    }

    #[test]
    fn scaffold_rejects_bad_manifest() {
        let mut bad = manifest();
        bad.package_id = "Not A Slug".to_string();
        assert!(matches!(
            scaffold_init(bad, &builtin_catalog()),
            Err(LifecycleError::InvalidManifest(_))
        ));
    }

    #[test]
    fn fresh_scaffold_misses_every_catalog_entry() {
        let catalog = builtin_catalog();
        let package = scaffold_init(manifest(), &catalog).unwrap();
        let missing = missing_components(&package, &catalog);
        let concrete_entries = catalog.entries().iter().filter(|e| e.number.is_concrete()).count();
        assert_eq!(missing.entries.len(), concrete_entries);
    }

    #[test]
    fn first_replication_gets_index_one_and_an_evolution_entry() {
        let catalog = builtin_catalog();
        let package = scaffold_init(manifest(), &catalog).unwrap();
        let content = ReplicationContent {
            description: "who, where, results".to_string(),
            change_summary: "first external replication".to_string(),
            recorded: at("2016-05-01T00:00:00Z"),
            ..ReplicationContent::default()
        };
        let next = add_replication(&package, &content).unwrap();
        assert_eq!(next.replications().count(), 1);
        let module = next.replications().next().unwrap();
        assert_eq!(module.study_index, Some(1));
        assert!(module.find_section(&"6.1.1".parse().unwrap()).is_some());
        assert_eq!(next.evolution_entries().len(), 1);
        assert!(next.evolution_entries()[0].body.as_deref().unwrap().contains("study: 6.1"));
    }

    #[test]
    fn existing_study_digests_never_change() {
        let catalog = builtin_catalog();
        let package = scaffold_init(manifest(), &catalog).unwrap();
        let content = ReplicationContent {
            description: "first".to_string(),
            change_summary: "first".to_string(),
            recorded: at("2016-05-01T00:00:00Z"),
            ..ReplicationContent::default()
        };
        let one = add_replication(&package, &content).unwrap();
        let before = one.study_digests();
        let two = add_replication(
            &one,
            &ReplicationContent {
                description: "second".to_string(),
                change_summary: "second".to_string(),
                recorded: at("2016-06-01T00:00:00Z"),
                ..ReplicationContent::default()
            },
        )
        .unwrap();
        let after = two.study_digests();
        assert!(before.is_subset(&after));
        assert_eq!(after.len(), 2);
        let indices: Vec<Option<u32>> = two.replications().map(|m| m.study_index).collect();
        assert_eq!(indices, vec![Some(1), Some(2)]);
    }

    #[test]
    fn evolution_count_tracks_both_study_kinds() {
        let catalog = builtin_catalog();
        let mut package = scaffold_init(manifest(), &catalog).unwrap();
        package = add_replication(
            &package,
            &ReplicationContent {
                description: "r".to_string(),
                change_summary: "r".to_string(),
                recorded: at("2016-05-01T00:00:00Z"),
                ..ReplicationContent::default()
            },
        )
        .unwrap();
        package = add_aggregation(
            &package,
            &AggregationContent {
                protocol: "meta-analysis".to_string(),
                results: "pooled effect".to_string(),
                change_summary: "first aggregation".to_string(),
                recorded: at("2016-07-01T00:00:00Z"),
                ..AggregationContent::default()
            },
        )
        .unwrap();
        assert_eq!(package.aggregations().next().unwrap().study_index, Some(1));
        assert_eq!(
            package.evolution_entries().len(),
            package.study_modules.len()
        );
        assert!(validate_structure(&package).is_empty());
    }

    #[test]
    fn publish_is_gated_on_clean_lint() {
        let catalog = builtin_catalog();
        let checklist = crate::catalog::builtin_checklist();
        let package = scaffold_init(manifest(), &catalog).unwrap();
        // Scaffold has empty mandatory sections: publishing must refuse.
        let err = publish_core_version(&package, "v1", at("2016-05-01T00:00:00Z"), &catalog, &checklist);
        assert!(matches!(err, Err(LifecycleError::LintErrorsPresent(n)) if n > 0));
    }

    #[test]
    fn gather_maps_by_number_heading_and_gives_up_cleanly() {
        let dir = tempfile::tempdir().unwrap();
        let catalog = builtin_catalog();
        let exact = dir.path().join("4.1.1-activities.md");
        std::fs::write(&exact, "anything").unwrap();
        let heuristic = dir.path().join("session-instructions.md");
        std::fs::write(&heuristic, "# Instructions for running sessions\n...").unwrap();
        let unmapped = dir.path().join("budget.xlsx");
        std::fs::write(&unmapped, [0u8, 159, 146, 150]).unwrap();

        let mapping = gather_documents(
            &[exact.clone(), heuristic.clone(), unmapped.clone()],
            &catalog,
        )
        .unwrap();
        assert_eq!(mapping.assignments.len(), 3);
        let by_source = |p: &PathBuf| {
            mapping
                .assignments
                .iter()
                .find(|a| &a.source == p)
                .unwrap()
        };
        let a = by_source(&exact);
        assert_eq!(a.confidence, MatchConfidence::Exact);
        assert_eq!(a.target.as_ref().unwrap().to_string(), "4.1.1");
        let b = by_source(&heuristic);
        assert_eq!(b.confidence, MatchConfidence::Heuristic);
        assert_eq!(b.target.as_ref().unwrap().to_string(), "4.4.3");
        let c = by_source(&unmapped);
        assert_eq!(c.confidence, MatchConfidence::Unmapped);
        assert_eq!(c.target, None);
    }

    #[test]
    fn gather_errors_on_unreadable_source() {
        let missing = PathBuf::from("/nonexistent/source.md");
        assert!(matches!(
            gather_documents(&[missing], &builtin_catalog()),
            Err(LifecycleError::UnreadableSource { .. })
        ));
    }
}
