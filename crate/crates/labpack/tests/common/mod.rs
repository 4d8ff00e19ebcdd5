//! Shared fixture builders for the integration tests: a fully green golden
//! package built through the real lifecycle operations, plus seeded random
//! package generators for the round-trip and append-only suites.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{DateTime, TimeZone, Utc};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use labpack::catalog::builtin_catalog;
use labpack::lifecycle::{
    add_aggregation, add_replication, publish_core_version, AggregationContent, ReplicationContent,
};
use labpack::model::{
    Attachment, Contact, CoreSnapshot, EvidenceEntry, LpModule, Manifest, ModuleKind, Package,
    Section, SectionNumber,
};

pub fn at(s: &str) -> DateTime<Utc> {
    DateTime::parse_from_rfc3339(s).unwrap().with_timezone(&Utc)
}

pub fn golden_manifest() -> Manifest {
    Manifest {
        package_id: "defdetect".to_string(),
        experiment_name: "Defect detection techniques".to_string(),
        family: "testing-techniques".to_string(),
        language_tag: "es".to_string(),
        contacts: vec![
            Contact {
                email: "lead@example.org".to_string(),
                name: "Lead Experimenter".to_string(),
            },
            Contact {
                email: "packager@example.org".to_string(),
                name: "Package Maintainer".to_string(),
            },
        ],
        created: at("2016-03-01T10:00:00Z"),
        format_version: 1,
    }
}

/// Sets the body of a section anywhere in the package.
pub fn set_body(package: &mut Package, number: &str, body: Option<String>) {
    let number: SectionNumber = number.parse().unwrap();
    for module in package
        .core_modules
        .iter_mut()
        .chain(package.study_modules.iter_mut())
    {
        if let Some(section) = module.find_section_mut(&number) {
            section.body = body;
            return;
        }
    }
    panic!("section {number} not found");
}

fn fill_all_bodies(package: &mut Package) {
    fn fill(section: &mut Section) {
        section.body = Some(format!("Content for {} {}.\n", section.number, section.title));
        for child in &mut section.children {
            fill(child);
        }
    }
    for module in &mut package.core_modules {
        for section in &mut module.sections {
            fill(section);
        }
    }
}

/// Regenerates toc.md with one `lp:` link per section plus references.md.
pub fn refresh_navigation(package: &mut Package) {
    let mut toc = String::from("# Table of contents\n\n");
    for module in package.modules() {
        toc.push_str(&format!("## {}\n", module.display_label()));
        for section in module.sections_preorder() {
            toc.push_str(&format!("- lp:{} {}\n", section.number, section.title));
        }
    }
    package.toc = Some(toc);
    package.references = Some(
        "# External references\n\n- Experimentation handbook\n- Baseline experiment report\n"
            .to_string(),
    );
}

/// A fully green package: every catalog section filled, checklist evidence
/// declared, one replication, one aggregation, navigation files and one
/// published version. `lint` reports zero findings on it.
pub fn golden_package() -> Package {
    let catalog = builtin_catalog();
    let checklist = labpack::catalog::builtin_checklist();
    let mut package = labpack::lifecycle::scaffold_init(golden_manifest(), &catalog).unwrap();
    fill_all_bodies(&mut package);

    let experiment = package.core_mut(ModuleKind::Experiment).unwrap();
    experiment.attachments.push(Attachment {
        path: "objects/program-a.c".to_string(),
        data: b"int main(void) { return 0; }\n".to_vec(),
    });
    experiment.attachments.push(Attachment {
        path: "forms/data-collection.csv".to_string(),
        data: b"subject,treatment,defects\n".to_vec(),
    });
    for (component, locus) in [
        ("List of activities and dependencies", "4.1.1"),
        ("Estimation of times and resources by activity", "4.1.2"),
        ("Basic replication schedule", "4.1.3"),
    ] {
        experiment.evidence.push(EvidenceEntry {
            item: "RP".to_string(),
            component: component.to_string(),
            locus: locus.to_string(),
        });
    }
    for component in [
        "Maximum session time for subjects",
        "Short time limit (sessions lasting two or three hours)",
    ] {
        experiment.evidence.push(EvidenceEntry {
            item: "ST".to_string(),
            component: component.to_string(),
            locus: "4.4.3".to_string(),
        });
    }
    package
        .core_mut(ModuleKind::Introduction)
        .unwrap()
        .evidence
        .push(EvidenceEntry {
            item: "NS".to_string(),
            component: "Search engine".to_string(),
            locus: "toc.md".to_string(),
        });

    let replication = ReplicationContent {
        description: "Replication at site A: context, results, lessons learned.\n".to_string(),
        adapted_design: "Crossed factors, two sessions.\n".to_string(),
        data: "See attachment data/raw.csv.\n".to_string(),
        notes: "Sessions ran within the time limit (see lp:4.4.3).\n".to_string(),
        change_summary: "first external replication".to_string(),
        recorded: at("2016-05-10T09:00:00Z"),
        attachments: vec![Attachment {
            path: "data/raw.csv".to_string(),
            data: b"subject,defects\n1,3\n".to_vec(),
        }],
        evidence: vec![
            EvidenceEntry {
                item: "RR".to_string(),
                component:
                    "Replication template: identification, characterization, results and lessons learned"
                        .to_string(),
                locus: "6.1.1".to_string(),
            },
            EvidenceEntry {
                item: "RR".to_string(),
                component: "Modules added to the LP for each replication".to_string(),
                locus: "6.1.1".to_string(),
            },
        ],
    };
    package = add_replication(&package, &replication).unwrap();

    let aggregation = AggregationContent {
        protocol: "Pool effect sizes across replications.\n".to_string(),
        results: "Consistent direction across sites.\n".to_string(),
        change_summary: "first secondary analysis".to_string(),
        recorded: at("2016-06-15T09:00:00Z"),
        attachments: vec![],
        evidence: vec![],
    };
    package = add_aggregation(&package, &aggregation).unwrap();

    refresh_navigation(&mut package);
    publish_core_version(
        &package,
        "initial publication",
        at("2016-07-01T12:00:00Z"),
        &catalog,
        &checklist,
    )
    .unwrap()
}

/// SHA-256 of every file under `dir` keyed by relative path, lock file
/// excluded. The whole-tree fingerprint used by determinism tests.
pub fn hash_tree(dir: &Path) -> BTreeMap<String, [u8; 32]> {
    let mut out = BTreeMap::new();
    for entry in walkdir::WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.unwrap();
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = entry
            .path()
            .strip_prefix(dir)
            .unwrap()
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        if rel == ".labpack.lock" {
            continue;
        }
        let bytes = std::fs::read(entry.path()).unwrap();
        out.insert(rel, Sha256::digest(&bytes).into());
    }
    out
}

// ---------------------------------------------------------------------------
// Random generators
// ---------------------------------------------------------------------------

pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_word(rng: &mut ChaCha8Rng) -> String {
    let len = rng.gen_range(2..10);
    (0..len)
        .map(|_| (b'a' + rng.gen_range(0..26)) as char)
        .collect()
}

fn random_text(rng: &mut ChaCha8Rng) -> String {
    // Mixed scripts, stray markup and the occasional CR so the round-trip
    // suite sees realistic byte patterns, not just lowercase ASCII.
    const SPICE: [&str; 6] = ["métodos", "диагностика", "実験", "<b>…</b>", "a\rb", "lp:4.1"];
    let words = rng.gen_range(0..30);
    let mut out = String::new();
    for i in 0..words {
        if rng.gen_bool(0.1) {
            out.push_str(SPICE[rng.gen_range(0..SPICE.len())]);
        } else {
            out.push_str(&random_word(rng));
        }
        if i % 7 == 6 {
            out.push('\n');
        } else {
            out.push(' ');
        }
    }
    if rng.gen_bool(0.7) && !out.is_empty() {
        out.push('\n');
    }
    out
}

fn random_instant(rng: &mut ChaCha8Rng) -> DateTime<Utc> {
    Utc.timestamp_opt(1_200_000_000 + rng.gen_range(0..500_000_000), rng.gen_range(0..1_000) * 1_000_000)
        .unwrap()
}

fn random_body(rng: &mut ChaCha8Rng) -> Option<String> {
    match rng.gen_range(0..5) {
        0 => None,
        1 => Some(String::new()),
        _ => Some(random_text(rng)),
    }
}

fn random_sections(rng: &mut ChaCha8Rng, root: &SectionNumber, depth: u32) -> Vec<Section> {
    let count = if depth == 0 {
        rng.gen_range(1..4)
    } else {
        rng.gen_range(0..3)
    };
    (1..=count)
        .map(|i| {
            let number = root.child(i);
            let mut section = Section::new(number.clone(), random_word(rng));
            section.body = random_body(rng);
            if depth < 2 {
                section.children = random_sections(rng, &number, depth + 1);
            }
            section
        })
        .collect()
}

fn random_attachments(rng: &mut ChaCha8Rng) -> Vec<Attachment> {
    (0..rng.gen_range(0..3))
        .map(|i| {
            let len = rng.gen_range(0..64);
            let mut data = vec![0u8; len];
            rng.fill_bytes(&mut data);
            Attachment {
                path: format!("{}/{}-{i}.bin", random_word(rng), random_word(rng)),
                data,
            }
        })
        .collect()
}

/// A structurally valid package with randomized content everywhere the
/// format allows it: bodies absent/empty/filled, attachments with binary
/// data, studies, snapshots, assessments and navigation files.
pub fn random_valid_package(seed: u64) -> Package {
    let mut rng = rng_for(seed);
    let manifest = Manifest {
        package_id: format!("{}-{}", random_word(&mut rng), rng.gen_range(0..100)),
        experiment_name: format!("{} {}", random_word(&mut rng), random_word(&mut rng)),
        family: random_word(&mut rng),
        language_tag: ["en", "es", "de-AT"][rng.gen_range(0..3)].to_string(),
        contacts: (0..rng.gen_range(0..3))
            .map(|_| Contact {
                email: format!("{}@example.org", random_word(&mut rng)),
                name: random_word(&mut rng),
            })
            .collect(),
        created: random_instant(&mut rng),
        format_version: 1,
    };

    let mut core_modules: Vec<LpModule> = ModuleKind::CORE
        .iter()
        .map(|&kind| {
            let mut module = LpModule::new_core(kind);
            module.sections = random_sections(&mut rng, &module.module_number(), 0);
            module.attachments = random_attachments(&mut rng);
            module
        })
        .collect();

    let mut study_modules = Vec::new();
    let replication_count = rng.gen_range(0..3);
    for index in 1..=replication_count {
        let mut module = LpModule::new_study(ModuleKind::Replication, index);
        module.sections = random_sections(&mut rng, &module.module_number(), 0);
        module.attachments = random_attachments(&mut rng);
        study_modules.push(module);
    }
    let aggregation_count = rng.gen_range(0..2);
    for index in 1..=aggregation_count {
        let mut module = LpModule::new_study(ModuleKind::Aggregation, index);
        module.sections = random_sections(&mut rng, &module.module_number(), 0);
        study_modules.push(module);
    }

    // Evolution entries must match the study count exactly.
    let evolution = core_modules
        .iter_mut()
        .find(|m| m.kind == ModuleKind::Evolution)
        .unwrap();
    let evolution_root = evolution.module_number();
    evolution.sections = (1..=study_modules.len() as u32)
        .map(|i| {
            let mut section = Section::new(evolution_root.child(i), format!("Study {i}"));
            section.body = Some(random_text(&mut rng));
            section
        })
        .collect();

    // Guidance and evidence sprinkled over existing sections.
    for module in core_modules.iter_mut().chain(study_modules.iter_mut()) {
        let numbers: Vec<String> = module
            .sections_preorder()
            .iter()
            .map(|s| s.number.to_string())
            .collect();
        for number in &numbers {
            if rng.gen_bool(0.2) {
                module.guidance.insert(number.clone(), random_text(&mut rng));
            }
        }
        if rng.gen_bool(0.3) && !numbers.is_empty() {
            module.evidence.push(EvidenceEntry {
                item: "RP".to_string(),
                component: random_word(&mut rng),
                locus: numbers[rng.gen_range(0..numbers.len())].clone(),
            });
        }
    }

    let mut version_history = Vec::new();
    for version_id in 1..=rng.gen_range(0..3u32) {
        let modules: Vec<LpModule> = core_modules.clone();
        let recorded_digests = modules
            .iter()
            .map(|m| (labpack::model::core_dir_name(m.kind), m.content_digest()))
            .collect();
        version_history.push(CoreSnapshot {
            version_id,
            timestamp: random_instant(&mut rng),
            change_note: random_text(&mut rng),
            modules,
            recorded_digests,
        });
    }

    let mut assessments = Vec::new();
    if rng.gen_bool(0.5) {
        let mut assessment = labpack::assess::Assessment::new(format!(
            "{} {}",
            random_word(&mut rng).to_uppercase(),
            2000 + rng.gen_range(0..20)
        ));
        for seed in labpack::incidents::SEED_INCIDENTS.iter().take(rng.gen_range(0..6)) {
            assessment.incidents.push(labpack::assess::IncidentRecord {
                replication_id: assessment.replication_id.clone(),
                category: seed.category,
                code: seed.code.to_string(),
                description: seed.description.to_string(),
            });
        }
        if rng.gen_bool(0.7) {
            let values = labpack::assess::UsabilityComponent::ALL
                .iter()
                .map(|&c| {
                    let halves = rng.gen_range(2..=10u8);
                    (c, labpack::assess::HalfScore::from_f64(f64::from(halves) / 2.0).unwrap())
                })
                .collect();
            assessment.usability = Some(values);
        }
        if rng.gen_bool(0.5) {
            assessment.effort.push(
                labpack::assess::EffortRecord::new(
                    labpack::assess::EffortActivity::Replication,
                    f64::from(rng.gen_range(0..8000u32)) / 100.0,
                )
                .unwrap(),
            );
        }
        assessments.push(assessment);
    }

    let mut package = Package {
        manifest,
        core_modules,
        study_modules,
        version_history,
        assessments,
        toc: None,
        references: None,
    };
    if rng.gen_bool(0.6) {
        refresh_navigation(&mut package);
    }
    assert!(
        labpack::model::validate_structure(&package).is_empty(),
        "generator must produce structurally valid packages"
    );
    package
}

/// Random non-empty study content for append-only sequences; everything
/// filled so the package stays lint-clean and publishable.
pub fn random_replication_content(rng: &mut ChaCha8Rng) -> ReplicationContent {
    ReplicationContent {
        description: format!("{}\n", random_word(rng)),
        adapted_design: format!("{}\n", random_word(rng)),
        data: format!("{}\n", random_word(rng)),
        notes: format!("{}\n", random_word(rng)),
        change_summary: random_word(rng),
        recorded: random_instant(rng),
        attachments: random_attachments(rng),
        evidence: vec![],
    }
}

pub fn random_aggregation_content(rng: &mut ChaCha8Rng) -> AggregationContent {
    AggregationContent {
        protocol: format!("{}\n", random_word(rng)),
        results: format!("{}\n", random_word(rng)),
        change_summary: random_word(rng),
        recorded: random_instant(rng),
        attachments: vec![],
        evidence: vec![],
    }
}
