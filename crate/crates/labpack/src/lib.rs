//! Laboratory packages for software engineering experiment replications.
//!
//! A laboratory package (LP) bundles everything a researcher needs to
//! replicate an experiment: the theory, the experiment definition, training
//! material, and a growing record of the replications and aggregations run
//! against it. This crate provides:
//!
//! - the in-memory package model and its structural rules ([`model`], [`deps`]),
//! - a deterministic plain-file on-disk format ([`store`]),
//! - the section template and packaging checklist catalogs ([`catalog`]),
//! - completeness/conformance linting ([`mod@lint`]),
//! - the instantiation and evolution operations ([`lifecycle`]),
//! - replication assessment: incident taxonomy and rating rubrics ([`assess`]),
//! - a static HTML export ([`export`]).
//!
//! All values are immutable after construction; operations that "mutate" a
//! package return a new value. Everything a package owns serializes
//! deterministically, so packages diff cleanly under version control.

pub mod assess;
pub mod catalog;
pub mod deps;
pub mod export;
pub mod finding;
pub mod incidents;
pub mod lifecycle;
pub mod lint;
pub mod model;
pub mod store;

pub use catalog::{builtin_catalog, builtin_checklist, load_catalog, ChecklistItem, TemplateCatalog};
pub use deps::{validate_dependencies, DependencyGraph};
pub use finding::{Finding, FindingCode, Locus, RuleSource, Severity};
pub use lint::{check_completeness, evaluate_checklist, lint, LintReport};
pub use model::{validate_structure, LpModule, Manifest, ModuleKind, Package, Section, SectionNumber};
pub use store::{parse_package, serialize_package, ParseDiagnostic};
