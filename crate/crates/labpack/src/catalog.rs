//! The section template and the packaging checklist, in machine form.
//!
//! The template catalog is the normative section tree used by the linter and
//! the scaffolder. Experiment-module entries (4.x) and the replication
//! report (6.n.1) are mandatory; the remaining entries are recommended
//! starting points that experiment families refine through catalog
//! extension files.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde_json::Value;
use thiserror::Error;

use crate::model::{ModuleKind, SectionNumber};

/// How strongly the template requires a section.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RequirementLevel {
    Recommended,
    Mandatory,
}

impl fmt::Display for RequirementLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RequirementLevel::Mandatory => f.write_str("mandatory"),
            RequirementLevel::Recommended => f.write_str("recommended"),
        }
    }
}

/// One segment of a template section pattern: a literal ordinal or the
/// per-study placeholder written `n` (as in `6.n.1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TemplateSeg {
    Literal(u32),
    Study,
}

/// A section number pattern from the template, e.g. `4.1.1` or `6.n.1`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TemplatePath(Vec<TemplateSeg>);

impl TemplatePath {
    pub fn segments(&self) -> &[TemplateSeg] {
        &self.0
    }

    /// The module number this pattern is rooted under.
    pub fn module_number(&self) -> Option<u32> {
        match self.0.first() {
            Some(TemplateSeg::Literal(n)) => Some(*n),
            _ => None,
        }
    }

    pub fn is_concrete(&self) -> bool {
        self.0.iter().all(|s| matches!(s, TemplateSeg::Literal(_)))
    }

    /// Substitutes the study placeholder, `6.n.1`.resolve(2) == `6.2.1`.
    pub fn resolve(&self, study_index: u32) -> SectionNumber {
        let parts: Vec<u32> = self
            .0
            .iter()
            .map(|seg| match seg {
                TemplateSeg::Literal(v) => *v,
                TemplateSeg::Study => study_index,
            })
            .collect();
        SectionNumber::new(parts).expect("template paths are non-empty")
    }

    /// True when `number` matches this pattern with any study index >= 1.
    pub fn matches(&self, number: &SectionNumber) -> bool {
        let parts = number.parts();
        if parts.len() != self.0.len() {
            return false;
        }
        self.0.iter().zip(parts).all(|(seg, part)| match seg {
            TemplateSeg::Literal(v) => v == part,
            TemplateSeg::Study => *part >= 1,
        })
    }
}

impl fmt::Display for TemplatePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|seg| match seg {
                TemplateSeg::Literal(v) => v.to_string(),
                TemplateSeg::Study => "n".to_string(),
            })
            .collect();
        f.write_str(&parts.join("."))
    }
}

impl FromStr for TemplatePath {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut segs = Vec::new();
        for piece in s.split('.') {
            if piece == "n" {
                segs.push(TemplateSeg::Study);
            } else if !piece.is_empty() && piece.bytes().all(|b| b.is_ascii_digit()) {
                segs.push(TemplateSeg::Literal(
                    piece.parse().map_err(|_| format!("invalid template path `{s}`"))?,
                ));
            } else {
                return Err(format!("invalid template path `{s}`"));
            }
        }
        if segs.is_empty() || !matches!(segs[0], TemplateSeg::Literal(_)) {
            return Err(format!("invalid template path `{s}`"));
        }
        Ok(TemplatePath(segs))
    }
}

/// One row of the template catalog.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatalogEntry {
    pub number: TemplatePath,
    pub title: String,
    pub level: RequirementLevel,
    pub module_kind: ModuleKind,
    pub guidance: String,
}

/// The canonical section tree with correlative numbers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateCatalog {
    entries: Vec<CatalogEntry>,
}

impl TemplateCatalog {
    fn from_entries(mut entries: Vec<CatalogEntry>) -> TemplateCatalog {
        entries.sort_by(|a, b| a.number.cmp(&b.number));
        TemplateCatalog { entries }
    }

    pub fn entries(&self) -> &[CatalogEntry] {
        &self.entries
    }

    pub fn entries_for(&self, kind: ModuleKind) -> impl Iterator<Item = &CatalogEntry> {
        self.entries.iter().filter(move |e| e.module_kind == kind)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, number: &TemplatePath) -> Option<&CatalogEntry> {
        self.entries.iter().find(|e| &e.number == number)
    }

    /// Finds the entry whose pattern matches a concrete section number.
    pub fn match_number(&self, number: &SectionNumber) -> Option<&CatalogEntry> {
        self.entries.iter().find(|e| e.number.matches(number))
    }
}

/// The four packaging categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChecklistCategory {
    InstructionsForReplicator,
    OperationalMaterial,
    ResearchProcessSupport,
    StructuralUsability,
}

impl ChecklistCategory {
    pub fn label(self) -> &'static str {
        match self {
            ChecklistCategory::InstructionsForReplicator => "instructions for the replicating experimenter",
            ChecklistCategory::OperationalMaterial => "operational material",
            ChecklistCategory::ResearchProcessSupport => "experimental research process support",
            ChecklistCategory::StructuralUsability => "structural and usability improvements",
        }
    }

    fn from_key(key: &str) -> Option<ChecklistCategory> {
        Some(match key {
            "instructions-for-replicator" => ChecklistCategory::InstructionsForReplicator,
            "operational-material" => ChecklistCategory::OperationalMaterial,
            "research-process-support" => ChecklistCategory::ResearchProcessSupport,
            "structural-usability" => ChecklistCategory::StructuralUsability,
            _ => return None,
        })
    }
}

/// Where a checklist item anchors: specific template sections, or the whole
/// package (transversal).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChecklistTarget {
    Sections(Vec<TemplatePath>),
    Transversal,
}

/// One packaging-checklist improvement with its verifiable components.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChecklistItem {
    /// Short id, e.g. `RP`.
    pub code: String,
    pub name: String,
    pub category: ChecklistCategory,
    pub components: Vec<String>,
    pub target: ChecklistTarget,
}

fn entry(
    number: &str,
    title: &str,
    level: RequirementLevel,
    module_kind: ModuleKind,
    guidance: &str,
) -> CatalogEntry {
    CatalogEntry {
        number: number.parse().expect("builtin template path"),
        title: title.to_string(),
        level,
        module_kind,
        guidance: guidance.to_string(),
    }
}

/// The built-in template catalog. Experiment-module entries and the
/// replication report are mandatory; everything else is a recommended
/// skeleton that catalog extensions refine per experiment family.
pub fn builtin_catalog() -> TemplateCatalog {
    use ModuleKind::*;
    use RequirementLevel::{Mandatory, Recommended};
    let entries = vec![
        entry("1.1", "Purpose of this package", Recommended, Introduction,
            "What this package is for, which experiment family it serves and how replications enrich it."),
        entry("1.2", "How to use this package", Recommended, Introduction,
            "How the modules fit together and where each researcher role should start reading."),
        entry("1.3", "Researcher contacts", Recommended, Introduction,
            "Who should be contacted before running a replication, and at which points communication is expected."),
        entry("2.1", "Constructs and theory", Recommended, Theory,
            "The theoretical framework the experiment rests on and how results are interpreted against it."),
        entry("3.1", "Training materials", Recommended, Training,
            "All materials used to train experimental subjects, including material for teachers."),
        entry("4.1", "Planning", Mandatory, Experiment,
            "Overview of the replication planning aids in this module."),
        entry("4.1.1", "List of replication activities", Mandatory, Experiment,
            "Describe every activity the replication requires, with the order and dependencies between activities."),
        entry("4.1.2", "Estimated workload", Mandatory, Experiment,
            "Estimate the workload per activity, in person-hours."),
        entry("4.1.3", "General schedule", Mandatory, Experiment,
            "A baseline schedule the replicating experimenter can adapt."),
        entry("4.2", "Study conception", Mandatory, Experiment,
            "What the study examines and why."),
        entry("4.2.1", "Objectives", Mandatory, Experiment,
            "The high-level goals and attributes the experiment examines."),
        entry("4.2.2", "Hypotheses and sub studies", Mandatory, Experiment,
            "The hypotheses under test and any sub studies."),
        entry("4.2.3", "Factors and response variables", Mandatory, Experiment,
            "The factors manipulated and the response variables measured."),
        entry("4.2.4", "Contextual variables", Mandatory, Experiment,
            "Contextual variables and how to record them."),
        entry("4.3", "Experimental design", Mandatory, Experiment,
            "Design material for the replication."),
        entry("4.3.1", "Design alternatives", Mandatory, Experiment,
            "Candidate designs, including designs used by earlier replications, with pointers to the supporting theory."),
        entry("4.3.2", "Guidelines for selecting the experimental design", Mandatory, Experiment,
            "How to choose among the candidate designs for a given context."),
        entry("4.3.3", "Validation of the experimental design", Mandatory, Experiment,
            "How to validate the chosen design before running sessions."),
        entry("4.4", "Operation", Mandatory, Experiment,
            "Operational material and session procedures."),
        entry("4.4.1", "Instructions for preparing material", Mandatory, Experiment,
            "Step-by-step preparation of session material, with a deliverables checklist per treatment."),
        entry("4.4.2", "Operating material", Mandatory, Experiment,
            "The material handed to subjects during sessions."),
        entry("4.4.3", "Instructions for running sessions", Mandatory, Experiment,
            "Step-by-step instructions for running sessions, including timing and contingencies."),
        entry("4.5", "Analysis", Mandatory, Experiment,
            "Data collection and analysis procedures."),
        entry("4.5.1", "Data collection", Mandatory, Experiment,
            "The data collection method, units and transformations, plus collection templates that keep replications comparable."),
        entry("4.5.2", "Analysis methods", Mandatory, Experiment,
            "The analysis methods, with guidelines and examples."),
        entry("4.5.3", "Results interpretation", Mandatory, Experiment,
            "How to interpret results and compare them with earlier replications."),
        entry("5.n", "Evolution entry", Recommended, Evolution,
            "One entry per study: which core version it used, when it ran and what changed."),
        entry("6.n.1", "Description of the replication", Mandatory, Replication,
            "Identification and characterization of the replication, its results and the lessons learned."),
        entry("6.n.2", "Adapted design", Recommended, Replication,
            "The experimental design as adapted for this replication."),
        entry("6.n.3", "Data", Recommended, Replication,
            "The data produced by this replication."),
        entry("6.n.4", "Notes", Recommended, Replication,
            "Notes on the replication experience."),
        entry("7.n.1", "Aggregation protocol", Recommended, Aggregation,
            "The protocol of the secondary analysis over replication data."),
        entry("7.n.2", "Results", Recommended, Aggregation,
            "The findings of the secondary analysis."),
    ];
    TemplateCatalog::from_entries(entries)
}

fn item(
    code: &str,
    name: &str,
    category: ChecklistCategory,
    components: &[&str],
    targets: &[&str],
) -> ChecklistItem {
    let target = if targets.is_empty() {
        ChecklistTarget::Transversal
    } else {
        ChecklistTarget::Sections(
            targets
                .iter()
                .map(|t| t.parse().expect("builtin checklist target"))
                .collect(),
        )
    };
    ChecklistItem {
        code: code.to_string(),
        name: name.to_string(),
        category,
        components: components.iter().map(|c| c.to_string()).collect(),
        target,
    }
}

/// The built-in packaging checklist: the four confirmed improvements.
/// Further items are supplied per experiment family via catalog extensions.
pub fn builtin_checklist() -> Vec<ChecklistItem> {
    vec![
        item(
            "RP",
            "Replication plan",
            ChecklistCategory::InstructionsForReplicator,
            &[
                "List of activities and dependencies",
                "Estimation of times and resources by activity",
                "Basic replication schedule",
            ],
            &["4.1"],
        ),
        item(
            "ST",
            "Sessions with time limit",
            ChecklistCategory::OperationalMaterial,
            &[
                "Maximum session time for subjects",
                "Short time limit (sessions lasting two or three hours)",
            ],
            &["4.4.3"],
        ),
        item(
            "RR",
            "Replication report",
            ChecklistCategory::ResearchProcessSupport,
            &[
                "Replication template: identification, characterization, results and lessons learned",
                "Modules added to the LP for each replication",
            ],
            &["6.n.1"],
        ),
        item(
            "NS",
            "Navigation and search",
            ChecklistCategory::StructuralUsability,
            &[
                "Conventional structures (index, table of contents, sections)",
                "Hyperlinks",
                "External references management",
                "Search engine",
            ],
            &[],
        ),
    ]
}

/// A template catalog together with its checklist; what [`load_catalog`]
/// produces after merging extensions over the builtins.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatalogBundle {
    pub catalog: TemplateCatalog,
    pub checklist: Vec<ChecklistItem>,
}

impl CatalogBundle {
    pub fn builtin() -> CatalogBundle {
        CatalogBundle {
            catalog: builtin_catalog(),
            checklist: builtin_checklist(),
        }
    }
}

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("{path}:{line}: malformed catalog: {message}")]
    Malformed {
        path: PathBuf,
        line: u32,
        message: String,
    },
    #[error("catalog extension deletes normative entry `{number}`")]
    IllegalDeletion { number: String },
    #[error("cannot read catalog `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Loads a catalog extension file and merges it over the builtins.
///
/// The file is a JSON array; each element either adds/overrides a template
/// entry (`{number, title, level, module_kind, guidance}`), adds a checklist
/// item (`{code, name, category, components[], targets[]}`) or deletes an
/// entry added earlier in the same file (`{"delete": "..."}`). Extensions
/// may raise a recommended entry to mandatory but can never delete or
/// demote a built-in entry. An empty file leaves the builtins untouched.
pub fn load_catalog(path: &Path) -> Result<CatalogBundle, CatalogError> {
    let text = std::fs::read_to_string(path).map_err(|source| CatalogError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_catalog_extension(&text, path)
}

fn malformed(path: &Path, line: u32, message: impl Into<String>) -> CatalogError {
    CatalogError::Malformed {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_catalog_extension(text: &str, path: &Path) -> Result<CatalogBundle, CatalogError> {
    let mut bundle = CatalogBundle::builtin();
    if text.trim().is_empty() {
        return Ok(bundle);
    }
    let value: Value = serde_json::from_str(text)
        .map_err(|e| malformed(path, e.line() as u32, e.to_string()))?;
    let items = value
        .as_array()
        .ok_or_else(|| malformed(path, 1, "extension root must be a JSON array"))?;

    let builtin_numbers: BTreeSet<TemplatePath> = bundle
        .catalog
        .entries()
        .iter()
        .map(|e| e.number.clone())
        .collect();
    let mut entries: Vec<CatalogEntry> = bundle.catalog.entries().to_vec();

    for (i, raw) in items.iter().enumerate() {
        let obj = raw
            .as_object()
            .ok_or_else(|| malformed(path, 1, format!("element {i} is not an object")))?;
        if let Some(delete) = obj.get("delete") {
            let number: TemplatePath = delete
                .as_str()
                .ok_or_else(|| malformed(path, 1, format!("element {i}: `delete` must be a string")))?
                .parse()
                .map_err(|e: String| malformed(path, 1, format!("element {i}: {e}")))?;
            if builtin_numbers.contains(&number) {
                return Err(CatalogError::IllegalDeletion {
                    number: number.to_string(),
                });
            }
            let before = entries.len();
            entries.retain(|e| e.number != number);
            if entries.len() == before {
                return Err(malformed(
                    path,
                    1,
                    format!("element {i}: deletes unknown entry `{number}`"),
                ));
            }
        } else if obj.contains_key("number") {
            let parsed = parse_extension_entry(obj, i, path)?;
            if let Some(existing) = entries.iter_mut().find(|e| e.number == parsed.number) {
                // Existing entries can only be raised, never demoted or retitled.
                existing.level = existing.level.max(parsed.level);
                if !parsed.guidance.is_empty() {
                    existing.guidance = parsed.guidance;
                }
            } else {
                entries.push(parsed);
            }
        } else if obj.contains_key("code") {
            let item = parse_extension_item(obj, i, path)?;
            if bundle.checklist.iter().any(|existing| existing.code == item.code) {
                return Err(malformed(
                    path,
                    1,
                    format!("element {i}: checklist code `{}` already exists", item.code),
                ));
            }
            bundle.checklist.push(item);
        } else {
            return Err(malformed(
                path,
                1,
                format!("element {i}: expected `number`, `code` or `delete`"),
            ));
        }
    }

    bundle.catalog = TemplateCatalog::from_entries(entries);
    validate_bundle(&bundle, path)?;
    Ok(bundle)
}

fn get_str<'a>(
    obj: &'a serde_json::Map<String, Value>,
    key: &str,
    i: usize,
    path: &Path,
) -> Result<&'a str, CatalogError> {
    obj.get(key)
        .and_then(Value::as_str)
        .ok_or_else(|| malformed(path, 1, format!("element {i}: missing string field `{key}`")))
}

fn parse_extension_entry(
    obj: &serde_json::Map<String, Value>,
    i: usize,
    path: &Path,
) -> Result<CatalogEntry, CatalogError> {
    let number: TemplatePath = get_str(obj, "number", i, path)?
        .parse()
        .map_err(|e: String| malformed(path, 1, format!("element {i}: {e}")))?;
    let title = get_str(obj, "title", i, path)?.to_string();
    if title.trim().is_empty() {
        return Err(malformed(path, 1, format!("element {i}: empty title")));
    }
    let level = match get_str(obj, "level", i, path)? {
        "mandatory" => RequirementLevel::Mandatory,
        "recommended" => RequirementLevel::Recommended,
        other => {
            return Err(malformed(
                path,
                1,
                format!("element {i}: unknown level `{other}`"),
            ))
        }
    };
    let kind_label = get_str(obj, "module_kind", i, path)?;
    let module_kind = ModuleKind::from_label(kind_label)
        .ok_or_else(|| malformed(path, 1, format!("element {i}: unknown module kind `{kind_label}`")))?;
    if number.module_number() != Some(module_kind.number()) {
        return Err(malformed(
            path,
            1,
            format!(
                "element {i}: number `{number}` is not rooted under module {} ({})",
                module_kind.number(),
                module_kind.label()
            ),
        ));
    }
    let guidance = obj
        .get("guidance")
        .and_then(Value::as_str)
        .unwrap_or("")
        .to_string();
    Ok(CatalogEntry {
        number,
        title,
        level,
        module_kind,
        guidance,
    })
}

fn parse_extension_item(
    obj: &serde_json::Map<String, Value>,
    i: usize,
    path: &Path,
) -> Result<ChecklistItem, CatalogError> {
    let code = get_str(obj, "code", i, path)?.to_string();
    let name = obj
        .get("name")
        .and_then(Value::as_str)
        .unwrap_or(&code)
        .to_string();
    let category_key = get_str(obj, "category", i, path)?;
    let category = ChecklistCategory::from_key(category_key)
        .ok_or_else(|| malformed(path, 1, format!("element {i}: unknown category `{category_key}`")))?;
    let components: Vec<String> = obj
        .get("components")
        .and_then(Value::as_array)
        .ok_or_else(|| malformed(path, 1, format!("element {i}: missing `components` array")))?
        .iter()
        .map(|v| v.as_str().map(str::to_string))
        .collect::<Option<_>>()
        .ok_or_else(|| malformed(path, 1, format!("element {i}: components must be strings")))?;
    if components.is_empty() {
        return Err(malformed(path, 1, format!("element {i}: components must be non-empty")));
    }
    let raw_targets = obj
        .get("targets")
        .and_then(Value::as_array)
        .ok_or_else(|| malformed(path, 1, format!("element {i}: missing `targets` array")))?;
    let target = if raw_targets.len() == 1 && raw_targets[0].as_str() == Some("transversal") {
        ChecklistTarget::Transversal
    } else {
        let mut sections = Vec::new();
        for t in raw_targets {
            let s = t
                .as_str()
                .ok_or_else(|| malformed(path, 1, format!("element {i}: targets must be strings")))?;
            sections.push(
                s.parse()
                    .map_err(|e: String| malformed(path, 1, format!("element {i}: {e}")))?,
            );
        }
        if sections.is_empty() {
            return Err(malformed(path, 1, format!("element {i}: targets must be non-empty")));
        }
        ChecklistTarget::Sections(sections)
    };
    Ok(ChecklistItem {
        code,
        name,
        category,
        components,
        target,
    })
}

fn validate_bundle(bundle: &CatalogBundle, path: &Path) -> Result<(), CatalogError> {
    let mut seen = BTreeSet::new();
    for entry in bundle.catalog.entries() {
        if !seen.insert(entry.number.clone()) {
            return Err(malformed(
                path,
                1,
                format!("duplicate catalog number `{}`", entry.number),
            ));
        }
    }
    for item in &bundle.checklist {
        if let ChecklistTarget::Sections(targets) = &item.target {
            for target in targets {
                if bundle.catalog.get(target).is_none() {
                    return Err(malformed(
                        path,
                        1,
                        format!(
                            "checklist item `{}` targets `{target}` which is not in the catalog",
                            item.code
                        ),
                    ));
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_catalog_is_deterministic() {
        assert_eq!(builtin_catalog(), builtin_catalog());
        assert_eq!(builtin_checklist(), builtin_checklist());
    }

    #[test]
    fn experiment_module_has_5_sections_and_16_leaves() {
        let catalog = builtin_catalog();
        let module4: Vec<_> = catalog.entries_for(ModuleKind::Experiment).collect();
        let first_level: Vec<_> = module4
            .iter()
            .filter(|e| e.number.segments().len() == 2)
            .collect();
        let leaves: Vec<_> = module4
            .iter()
            .filter(|e| e.number.segments().len() == 3)
            .collect();
        assert_eq!(first_level.len(), 5);
        assert_eq!(leaves.len(), 16);
        assert!(module4.iter().all(|e| e.level == RequirementLevel::Mandatory));
    }

    #[test]
    fn confirmed_entries_are_present() {
        let catalog = builtin_catalog();
        let activities = catalog.get(&"4.1.1".parse().unwrap()).unwrap();
        assert_eq!(activities.title, "List of replication activities");
        assert_eq!(activities.level, RequirementLevel::Mandatory);
        assert_eq!(activities.module_kind, ModuleKind::Experiment);

        let report = catalog.get(&"6.n.1".parse().unwrap()).unwrap();
        assert_eq!(report.title, "Description of the replication");
        assert_eq!(report.level, RequirementLevel::Mandatory);
        assert_eq!(report.module_kind, ModuleKind::Replication);
    }

    #[test]
    fn checklist_has_the_four_confirmed_items() {
        let checklist = builtin_checklist();
        let codes: Vec<&str> = checklist.iter().map(|i| i.code.as_str()).collect();
        assert_eq!(codes, ["RP", "ST", "RR", "NS"]);
        let mut unique = codes.clone();
        unique.dedup();
        assert_eq!(unique.len(), codes.len());

        let ns = &checklist[3];
        assert_eq!(ns.components.len(), 4);
        assert_eq!(ns.target, ChecklistTarget::Transversal);

        let st = &checklist[1];
        assert_eq!(
            st.target,
            ChecklistTarget::Sections(vec!["4.4.3".parse().unwrap()])
        );

        let rp = &checklist[0];
        assert_eq!(rp.components.len(), 3);
        assert_eq!(rp.target, ChecklistTarget::Sections(vec!["4.1".parse().unwrap()]));
    }

    #[test]
    fn checklist_targets_exist_in_catalog() {
        let bundle = CatalogBundle::builtin();
        validate_bundle(&bundle, Path::new("builtin")).unwrap();
    }

    #[test]
    fn empty_extension_keeps_builtin() {
        let bundle = parse_catalog_extension("", Path::new("ext.json")).unwrap();
        assert_eq!(bundle, CatalogBundle::builtin());
        let bundle = parse_catalog_extension("[]", Path::new("ext.json")).unwrap();
        assert_eq!(bundle, CatalogBundle::builtin());
    }

    #[test]
    fn extension_can_add_a_section() {
        let ext = r#"[{"number": "4.6", "title": "Threats to validity", "level": "recommended",
                       "module_kind": "experiment", "guidance": "Known threats."}]"#;
        let bundle = parse_catalog_extension(ext, Path::new("ext.json")).unwrap();
        assert_eq!(bundle.catalog.len(), builtin_catalog().len() + 1);
        assert!(bundle.catalog.get(&"4.6".parse().unwrap()).is_some());
    }

    #[test]
    fn extension_cannot_delete_normative_entry() {
        let ext = r#"[{"delete": "4.1.1"}]"#;
        let err = parse_catalog_extension(ext, Path::new("ext.json")).unwrap_err();
        match err {
            CatalogError::IllegalDeletion { number } => assert_eq!(number, "4.1.1"),
            other => panic!("expected IllegalDeletion, got {other:?}"),
        }
    }

    #[test]
    fn extension_can_raise_but_not_demote() {
        let ext = r#"[{"number": "3.1", "title": "Training materials", "level": "mandatory",
                       "module_kind": "training"}]"#;
        let bundle = parse_catalog_extension(ext, Path::new("ext.json")).unwrap();
        let raised = bundle.catalog.get(&"3.1".parse().unwrap()).unwrap();
        assert_eq!(raised.level, RequirementLevel::Mandatory);

        let ext = r#"[{"number": "4.1.1", "title": "List of replication activities",
                       "level": "recommended", "module_kind": "experiment"}]"#;
        let bundle = parse_catalog_extension(ext, Path::new("ext.json")).unwrap();
        let kept = bundle.catalog.get(&"4.1.1".parse().unwrap()).unwrap();
        assert_eq!(kept.level, RequirementLevel::Mandatory);
    }

    #[test]
    fn extension_can_add_checklist_items() {
        let ext = r#"[
            {"code": "GL", "name": "Analysis guidelines", "category": "research-process-support",
             "components": ["Worked analysis example"], "targets": ["4.5.2"]},
            {"code": "WS", "name": "Writing style", "category": "structural-usability",
             "components": ["Step-by-step instructions"], "targets": ["transversal"]}
        ]"#;
        let bundle = parse_catalog_extension(ext, Path::new("ext.json")).unwrap();
        assert_eq!(bundle.checklist.len(), builtin_checklist().len() + 2);
        let gl = bundle.checklist.iter().find(|i| i.code == "GL").unwrap();
        assert_eq!(gl.target, ChecklistTarget::Sections(vec!["4.5.2".parse().unwrap()]));
        let ws = bundle.checklist.iter().find(|i| i.code == "WS").unwrap();
        assert_eq!(ws.target, ChecklistTarget::Transversal);

        // Duplicate codes and dangling targets are malformed.
        let dup = r#"[{"code": "RP", "category": "operational-material",
                       "components": ["x"], "targets": ["4.1"]}]"#;
        assert!(matches!(
            parse_catalog_extension(dup, Path::new("ext.json")),
            Err(CatalogError::Malformed { .. })
        ));
        let dangling = r#"[{"code": "XX", "category": "operational-material",
                            "components": ["x"], "targets": ["4.9.9"]}]"#;
        assert!(matches!(
            parse_catalog_extension(dangling, Path::new("ext.json")),
            Err(CatalogError::Malformed { .. })
        ));
    }

    #[test]
    fn study_patterns_match_and_resolve() {
        let pattern: TemplatePath = "6.n.1".parse().unwrap();
        assert!(pattern.matches(&"6.1.1".parse().unwrap()));
        assert!(pattern.matches(&"6.12.1".parse().unwrap()));
        assert!(!pattern.matches(&"6.0.1".parse().unwrap()));
        assert!(!pattern.matches(&"6.1.2".parse().unwrap()));
        assert_eq!(pattern.resolve(3).to_string(), "6.3.1");
    }
}
