mod common;

use common::{golden_package, hash_tree};
use labpack::store::{
    parse_package, serialize_package, DiagnosticCode, PackageLock, StoreError,
};

#[test]
fn golden_round_trip_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let package = golden_package();
    serialize_package(&package, dir.path()).unwrap();
    let before = hash_tree(dir.path());

    let parsed = parse_package(dir.path()).unwrap();
    assert_eq!(parsed, package);

    serialize_package(&parsed, dir.path()).unwrap();
    assert_eq!(hash_tree(dir.path()), before);
}

#[test]
fn serialization_is_deterministic_across_roots() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let package = golden_package();
    serialize_package(&package, a.path()).unwrap();
    serialize_package(&package, b.path()).unwrap();
    assert_eq!(hash_tree(a.path()), hash_tree(b.path()));
}

#[test]
fn minimal_scaffold_writes_manifest_and_five_module_dirs() {
    let dir = tempfile::tempdir().unwrap();
    let package = labpack::lifecycle::scaffold_init(
        common::golden_manifest(),
        &labpack::catalog::builtin_catalog(),
    )
    .unwrap();
    serialize_package(&package, dir.path()).unwrap();
    assert!(dir.path().join("labpack.json").is_file());
    for name in [
        "01-introduction",
        "02-theory",
        "03-training",
        "04-experiment",
        "05-evolution",
    ] {
        assert!(dir.path().join("modules").join(name).join("module.json").is_file());
    }
    assert!(!dir.path().join("versions").exists());
}

#[test]
fn missing_manifest_is_the_only_diagnostic_for_an_empty_dir() {
    let dir = tempfile::tempdir().unwrap();
    let diags = parse_package(dir.path()).unwrap_err();
    assert_eq!(diags.len(), 1);
    assert_eq!(diags[0].code, DiagnosticCode::MissingManifest);
}

#[test]
fn unsupported_manifest_format_version_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    serialize_package(&golden_package(), dir.path()).unwrap();
    let manifest_path = dir.path().join("labpack.json");
    let text = std::fs::read_to_string(&manifest_path).unwrap();
    std::fs::write(&manifest_path, text.replace("\"format_version\": 1", "\"format_version\": 99")).unwrap();
    let diags = parse_package(dir.path()).unwrap_err();
    assert!(diags.iter().any(|d| d.code == DiagnosticCode::UnsupportedFormatVersion));
}

#[test]
fn module_json_format_version_edit_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    serialize_package(&golden_package(), dir.path()).unwrap();
    let module_json = dir.path().join("modules/02-theory/module.json");
    let text = std::fs::read_to_string(&module_json).unwrap();
    let edited = text.replacen("{", "{\n  \"format_version\": 99,", 1);
    std::fs::write(&module_json, edited).unwrap();
    let diags = parse_package(dir.path()).unwrap_err();
    assert!(
        diags
            .iter()
            .any(|d| d.code == DiagnosticCode::UnsupportedFormatVersion
                && d.file == "modules/02-theory/module.json"),
        "diagnostics were: {diags:?}"
    );
}

#[test]
fn dangling_attachment_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    serialize_package(&golden_package(), dir.path()).unwrap();
    std::fs::remove_file(dir.path().join("modules/04-experiment/attachments/objects/program-a.c")).unwrap();
    let diags = parse_package(dir.path()).unwrap_err();
    assert!(diags.iter().any(|d| d.code == DiagnosticCode::DanglingAttachment));
}

#[test]
fn multiple_independent_errors_yield_multiple_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    serialize_package(&golden_package(), dir.path()).unwrap();
    let manifest_path = dir.path().join("labpack.json");
    let text = std::fs::read_to_string(&manifest_path).unwrap();
    // Three independent problems: bad slug, bad timestamp, unknown key.
    let edited = text
        .replace("\"package_id\": \"defdetect\"", "\"package_id\": \"Not A Slug\"")
        .replace("\"created\": \"2016-03-01T10:00:00Z\"", "\"created\": \"yesterday\"")
        .replacen("{", "{\n  \"absolutely_unknown\": 1,", 1);
    std::fs::write(&manifest_path, edited).unwrap();
    let diags = parse_package(dir.path()).unwrap_err();
    assert!(diags.len() >= 3, "expected >= 3 diagnostics, got {diags:?}");
}

#[test]
fn stale_module_digest_does_not_fail_parse() {
    // Hand-editing section files is the normal authoring flow; the stored
    // digest is refreshed on the next serialize.
    let dir = tempfile::tempdir().unwrap();
    serialize_package(&golden_package(), dir.path()).unwrap();
    let section = dir.path().join("modules/02-theory/sections/2.1.md");
    std::fs::write(&section, "New theory text.\n").unwrap();
    let parsed = parse_package(dir.path()).unwrap();
    assert_eq!(
        parsed
            .core(labpack::model::ModuleKind::Theory)
            .unwrap()
            .find_section(&"2.1".parse().unwrap())
            .unwrap()
            .body
            .as_deref(),
        Some("New theory text.\n")
    );
    // Serializing refreshes module.json; the tree stabilizes again.
    serialize_package(&parsed, dir.path()).unwrap();
    let reparsed = parse_package(dir.path()).unwrap();
    assert_eq!(reparsed, parsed);
}

#[test]
fn altering_a_snapshot_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let package = golden_package();
    serialize_package(&package, dir.path()).unwrap();

    let mut tampered = package.clone();
    let frozen = &mut tampered.version_history[0].modules[1];
    frozen.find_section_mut(&"2.1".parse().unwrap()).unwrap().body =
        Some("rewritten history".to_string());
    let err = serialize_package(&tampered, dir.path()).unwrap_err();
    assert!(matches!(err, StoreError::RefusedOverwriteOfSnapshot(1)), "got {err:?}");

    // And dropping a snapshot from the value is refused too.
    let mut truncated = package.clone();
    truncated.version_history.clear();
    let err = serialize_package(&truncated, dir.path()).unwrap_err();
    assert!(matches!(err, StoreError::RefusedOverwriteOfSnapshot(1)), "got {err:?}");
}

#[test]
fn structurally_invalid_packages_are_not_written() {
    let dir = tempfile::tempdir().unwrap();
    let mut package = golden_package();
    package.core_modules.retain(|m| m.kind != labpack::model::ModuleKind::Theory);
    let err = serialize_package(&package, dir.path()).unwrap_err();
    assert!(matches!(err, StoreError::StructurallyInvalid(_)));
    assert!(!dir.path().join("labpack.json").exists());
}

#[test]
fn writer_lock_is_exclusive() {
    let dir = tempfile::tempdir().unwrap();
    let _held = PackageLock::acquire(dir.path()).unwrap();
    let err = serialize_package(&golden_package(), dir.path()).unwrap_err();
    assert!(matches!(err, StoreError::LockHeld(_)));
}

#[test]
fn foreign_files_survive_rewrites() {
    let dir = tempfile::tempdir().unwrap();
    let package = golden_package();
    serialize_package(&package, dir.path()).unwrap();
    // A stray note inside a module dir and a VCS dir at the root.
    std::fs::write(dir.path().join("modules/04-experiment/notes.txt"), "mine").unwrap();
    std::fs::create_dir_all(dir.path().join(".git")).unwrap();
    std::fs::write(dir.path().join(".git/config"), "[core]").unwrap();
    serialize_package(&package, dir.path()).unwrap();
    assert_eq!(
        std::fs::read_to_string(dir.path().join("modules/04-experiment/notes.txt")).unwrap(),
        "mine"
    );
    assert!(dir.path().join(".git/config").exists());
}

#[test]
fn removing_owned_content_cleans_stale_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut package = golden_package();
    serialize_package(&package, dir.path()).unwrap();
    assert!(dir.path().join("toc.md").exists());
    package.toc = None;
    // Dropping an attachment removes its file as well.
    package
        .core_mut(labpack::model::ModuleKind::Experiment)
        .unwrap()
        .attachments
        .retain(|a| a.path != "forms/data-collection.csv");
    serialize_package(&package, dir.path()).unwrap();
    assert!(!dir.path().join("toc.md").exists());
    assert!(!dir.path().join("modules/04-experiment/attachments/forms/data-collection.csv").exists());
    let reparsed = parse_package(dir.path()).unwrap();
    assert_eq!(reparsed, package);
}
