//! `lp` — the laboratory package command line.
//!
//! Exit codes: 0 success (and lint without errors), 1 lint found errors or,
//! under --strict, checklist items were not satisfied, 2 usage or
//! structural failures (unparseable package, bad flags, io).

use std::collections::BTreeSet;
use std::io::IsTerminal;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use chrono::{DateTime, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};

use labpack::assess::{
    assessment_report, summarize_pre_post, summary_json, summary_text, AssessmentStore,
    CompletenessRating, EfficacyRating, EffortActivity, EffortRecord, HalfScore, IncidentCategory,
    IncidentRecord, UsabilityComponent, UsabilityScore,
};
use labpack::catalog::{load_catalog, CatalogBundle};
use labpack::export::export_html;
use labpack::lifecycle::{
    add_aggregation, add_replication, apply_gather, gather_documents, missing_components,
    publish_core_version, scaffold_init, AggregationContent, MatchConfidence, ReplicationContent,
};
use labpack::lint::{evaluate_checklist, lint, ChecklistStatus};
use labpack::model::{Attachment, Contact, Manifest, Package};
use labpack::store::{parse_package, serialize_package};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
enum OutputFormat {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
enum ColorChoice {
    #[default]
    Auto,
    On,
    Off,
}

#[derive(Parser)]
#[command(name = "lp", version, about = "Laboratory packages for experiment replications")]
struct Cli {
    /// Package root directory (or set LABPACK_ROOT).
    #[arg(long, global = true)]
    root: Option<PathBuf>,
    /// Catalog extension file merged over the built-in template/checklist.
    #[arg(long, global = true)]
    catalog: Option<PathBuf>,
    /// Output format for reports and listings.
    #[arg(long, global = true, value_enum, default_value_t)]
    format: OutputFormat,
    #[arg(long, global = true, value_enum, default_value_t)]
    color: ColorChoice,
    /// Treat checklist findings as failures.
    #[arg(long, global = true)]
    strict: bool,
    /// Apply heuristic gather matches without asking.
    #[arg(long, global = true)]
    accept_heuristics: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Create a new package skeleton from the template.
    Init(InitArgs),
    /// Map existing documents onto template sections.
    Gather(GatherArgs),
    /// List template sections that are still missing or empty.
    Missing,
    /// Check structure, dependencies, completeness, checklist and history.
    Lint,
    /// Judge the packaging checklist items.
    Checklist,
    /// Append a study module.
    #[command(subcommand)]
    Add(AddCommand),
    /// Version history operations.
    #[command(subcommand)]
    Version(VersionCommand),
    /// Record and report replication assessments.
    #[command(subcommand)]
    Assess(AssessCommand),
    /// Aggregate usability scores into PRE/POST means.
    #[command(subcommand)]
    Summary(SummaryCommand),
    /// Export the package as a static site.
    Export(ExportArgs),
}

#[derive(Args)]
struct InitArgs {
    /// Package id (slug).
    #[arg(long)]
    id: String,
    /// Experiment name.
    #[arg(long)]
    name: String,
    #[arg(long, default_value = "")]
    family: String,
    #[arg(long, default_value = "en")]
    language: String,
    /// Contact in the form "Name <email>"; may repeat.
    #[arg(long = "contact")]
    contacts: Vec<String>,
    /// Creation timestamp (defaults to now).
    #[arg(long)]
    created: Option<DateTime<Utc>>,
}

#[derive(Args)]
struct GatherArgs {
    /// Write matched sources into their target sections.
    #[arg(long)]
    apply: bool,
    /// Source files to map.
    #[arg(required = true)]
    sources: Vec<PathBuf>,
}

#[derive(Subcommand)]
enum AddCommand {
    /// Append a replication module (6.n).
    Replication(AddReplicationArgs),
    /// Append an aggregation module (7.n).
    Aggregation(AddAggregationArgs),
}

#[derive(Args)]
struct AddReplicationArgs {
    /// File with the replication description (section 6.n.1).
    #[arg(long)]
    description_file: PathBuf,
    #[arg(long)]
    design_file: Option<PathBuf>,
    #[arg(long)]
    data_file: Option<PathBuf>,
    #[arg(long)]
    notes_file: Option<PathBuf>,
    /// One-line change summary for the evolution entry.
    #[arg(long, default_value = "replication added")]
    summary: String,
    /// Study date (defaults to now).
    #[arg(long)]
    date: Option<DateTime<Utc>>,
    /// Attachment files copied into the module; may repeat.
    #[arg(long = "attach")]
    attachments: Vec<PathBuf>,
}

#[derive(Args)]
struct AddAggregationArgs {
    /// File with the aggregation protocol (section 7.n.1).
    #[arg(long)]
    protocol_file: PathBuf,
    #[arg(long)]
    results_file: Option<PathBuf>,
    #[arg(long, default_value = "aggregation added")]
    summary: String,
    #[arg(long)]
    date: Option<DateTime<Utc>>,
    #[arg(long = "attach")]
    attachments: Vec<PathBuf>,
}

#[derive(Subcommand)]
enum VersionCommand {
    /// Freeze the current core modules as the next version.
    Publish(PublishArgs),
    /// List published versions.
    List,
}

#[derive(Args)]
struct PublishArgs {
    /// Change note describing this version.
    #[arg(long)]
    note: String,
    /// Publication timestamp (defaults to now).
    #[arg(long)]
    date: Option<DateTime<Utc>>,
}

#[derive(Subcommand)]
enum AssessCommand {
    /// Record an assessment datum.
    #[command(subcommand)]
    Record(RecordCommand),
    /// Print the structured report for one replication.
    Report { replication: String },
}

#[derive(Subcommand)]
enum RecordCommand {
    /// Record one experimental incident.
    Incident {
        #[arg(long)]
        replication: String,
        /// One of the seven process activities, e.g. `operation`.
        #[arg(long)]
        category: String,
        /// Slug identifying the incident, e.g. `limited-session-time`.
        #[arg(long)]
        code: String,
        #[arg(long, default_value = "")]
        description: String,
    },
    /// Record the nine usability component scores from a JSON file
    /// ({"task-orientation": 4.5, ...}).
    Usability {
        #[arg(long)]
        replication: String,
        #[arg(long)]
        file: PathBuf,
    },
    /// Record the completeness rubric from a JSON file.
    Completeness {
        #[arg(long)]
        replication: String,
        #[arg(long)]
        file: PathBuf,
    },
    /// Record the efficacy rubric from a JSON file.
    Efficacy {
        #[arg(long)]
        replication: String,
        #[arg(long)]
        file: PathBuf,
    },
    /// Record logged effort in person-hours.
    Effort {
        #[arg(long)]
        replication: String,
        /// `instantiation` or `replication`.
        #[arg(long)]
        activity: String,
        #[arg(long)]
        hours: f64,
    },
}

#[derive(Subcommand)]
enum SummaryCommand {
    /// Mean usability scores before/after the given replications.
    PrePost {
        /// Comma-separated replication ids forming the POST group.
        #[arg(long)]
        post_ids: String,
    },
}

#[derive(Args)]
struct ExportArgs {
    /// Output directory for the static site.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("lp: error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let root = cli
        .root
        .clone()
        .or_else(|| std::env::var_os("LABPACK_ROOT").map(PathBuf::from))
        .ok_or_else(|| anyhow!("no package root: pass --root or set LABPACK_ROOT"))?;
    let bundle = match &cli.catalog {
        Some(path) => load_catalog(path).context("loading catalog extension")?,
        None => CatalogBundle::builtin(),
    };
    let color = match cli.color {
        ColorChoice::Auto => std::io::stdout().is_terminal(),
        ColorChoice::On => true,
        ColorChoice::Off => false,
    };

    match &cli.command {
        Command::Init(args) => cmd_init(&root, &bundle, args),
        Command::Gather(args) => cmd_gather(&root, &bundle, &cli, args),
        Command::Missing => cmd_missing(&root, &bundle, &cli),
        Command::Lint => cmd_lint(&root, &bundle, &cli, color),
        Command::Checklist => cmd_checklist(&root, &bundle, &cli),
        Command::Add(AddCommand::Replication(args)) => cmd_add_replication(&root, args),
        Command::Add(AddCommand::Aggregation(args)) => cmd_add_aggregation(&root, args),
        Command::Version(VersionCommand::Publish(args)) => cmd_publish(&root, &bundle, args),
        Command::Version(VersionCommand::List) => cmd_version_list(&root, &cli),
        Command::Assess(AssessCommand::Record(record)) => cmd_assess_record(&root, record),
        Command::Assess(AssessCommand::Report { replication }) => {
            cmd_assess_report(&root, &cli, replication)
        }
        Command::Summary(SummaryCommand::PrePost { post_ids }) => {
            cmd_summary(&root, &cli, post_ids)
        }
        Command::Export(args) => cmd_export(&root, &bundle, args),
    }
}

/// Parses the package or prints every diagnostic and exits with status 2.
fn load_package(root: &Path) -> Result<Package> {
    match parse_package(root) {
        Ok(package) => Ok(package),
        Err(diagnostics) => {
            for d in &diagnostics {
                eprintln!("lp: {d}");
            }
            bail!("package at {} failed to parse ({} diagnostics)", root.display(), diagnostics.len());
        }
    }
}

fn require_package_root(root: &Path) -> Result<()> {
    if root.join("labpack.json").is_file() {
        Ok(())
    } else {
        bail!("{} is not a package root (no labpack.json)", root.display())
    }
}

fn parse_contact(raw: &str) -> Result<Contact> {
    let (name, rest) = raw
        .split_once('<')
        .ok_or_else(|| anyhow!("contact `{raw}` must look like \"Name <email>\""))?;
    let email = rest
        .strip_suffix('>')
        .ok_or_else(|| anyhow!("contact `{raw}` must look like \"Name <email>\""))?;
    Ok(Contact {
        name: name.trim().to_string(),
        email: email.trim().to_string(),
    })
}

fn cmd_init(root: &Path, bundle: &CatalogBundle, args: &InitArgs) -> Result<ExitCode> {
    if root.join("labpack.json").exists() {
        bail!("{} already contains a package", root.display());
    }
    let manifest = Manifest {
        package_id: args.id.clone(),
        experiment_name: args.name.clone(),
        family: args.family.clone(),
        language_tag: args.language.clone(),
        contacts: args.contacts.iter().map(|c| parse_contact(c)).collect::<Result<_>>()?,
        created: args.created.unwrap_or_else(Utc::now),
        format_version: 1,
    };
    let package = scaffold_init(manifest, &bundle.catalog)?;
    serialize_package(&package, root)?;
    println!(
        "initialized package `{}` at {} ({} sections scaffolded)",
        args.id,
        root.display(),
        package.modules().map(|m| m.sections_preorder().len()).sum::<usize>()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_gather(root: &Path, bundle: &CatalogBundle, cli: &Cli, args: &GatherArgs) -> Result<ExitCode> {
    require_package_root(root)?;
    let mut mapping = gather_documents(&args.sources, &bundle.catalog)?;

    if !args.apply {
        match cli.format {
            OutputFormat::Json => print!("{}", mapping.to_json_string()),
            OutputFormat::Text => print!("{}", mapping.to_text()),
        }
        return Ok(ExitCode::SUCCESS);
    }

    // Heuristic matches need confirmation: a terminal prompt, or the
    // --accept-heuristics flag in scripts.
    let mut accept_all = cli.accept_heuristics;
    if !accept_all && std::io::stdin().is_terminal() {
        for assignment in &mut mapping.assignments {
            if assignment.confidence != MatchConfidence::Heuristic {
                continue;
            }
            let target = assignment.target.as_ref().expect("heuristic has target");
            eprint!("apply {} -> {target}? [y/N] ", assignment.source.display());
            let mut line = String::new();
            std::io::stdin().read_line(&mut line)?;
            if !line.trim().eq_ignore_ascii_case("y") {
                assignment.confidence = MatchConfidence::Unmapped;
                assignment.target = None;
                assignment.note = "heuristic match declined".to_string();
            }
        }
        accept_all = true;
    }

    let package = load_package(root)?;
    let (next, notes) = apply_gather(&package, &mapping, accept_all)?;
    serialize_package(&next, root)?;
    for note in notes {
        println!("{note}");
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_missing(root: &Path, bundle: &CatalogBundle, cli: &Cli) -> Result<ExitCode> {
    let package = load_package(root)?;
    let missing = missing_components(&package, &bundle.catalog);
    match cli.format {
        OutputFormat::Json => print!("{}", missing.to_json_string()),
        OutputFormat::Text => print!("{}", missing.to_text()),
    }
    Ok(ExitCode::SUCCESS)
}

fn paint_severity(line: &str) -> String {
    if let Some(rest) = line.strip_prefix("error") {
        format!("\x1b[31merror\x1b[0m{rest}")
    } else if let Some(rest) = line.strip_prefix("warning") {
        format!("\x1b[33mwarning\x1b[0m{rest}")
    } else {
        line.to_string()
    }
}

fn cmd_lint(root: &Path, bundle: &CatalogBundle, cli: &Cli, color: bool) -> Result<ExitCode> {
    let package = load_package(root)?;
    let report = lint(&package, &bundle.catalog, &bundle.checklist);
    match cli.format {
        OutputFormat::Json => print!("{}", report.to_json_string()),
        OutputFormat::Text => {
            for line in report.to_text().lines() {
                if color {
                    println!("{}", paint_severity(line));
                } else {
                    println!("{line}");
                }
            }
        }
    }
    let checklist_failures = report
        .findings
        .iter()
        .any(|f| matches!(f.rule_source, labpack::finding::RuleSource::Checklist(_)));
    if report.has_errors() || (cli.strict && checklist_failures) {
        Ok(ExitCode::from(1))
    } else {
        Ok(ExitCode::SUCCESS)
    }
}

fn cmd_checklist(root: &Path, bundle: &CatalogBundle, cli: &Cli) -> Result<ExitCode> {
    let package = load_package(root)?;
    let evaluation = evaluate_checklist(&package, &bundle.checklist);
    match cli.format {
        OutputFormat::Json => print!("{}", evaluation.to_json_string()),
        OutputFormat::Text => print!("{}", evaluation.to_text()),
    }
    let unsatisfied = evaluation
        .judgments
        .iter()
        .any(|j| j.status != ChecklistStatus::Satisfied);
    if cli.strict && unsatisfied {
        Ok(ExitCode::from(1))
    } else {
        Ok(ExitCode::SUCCESS)
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn read_attachments(paths: &[PathBuf]) -> Result<Vec<Attachment>> {
    paths
        .iter()
        .map(|path| {
            let data = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
            let name = path
                .file_name()
                .ok_or_else(|| anyhow!("{} has no file name", path.display()))?
                .to_string_lossy()
                .to_string();
            Ok(Attachment { path: name, data })
        })
        .collect()
}

fn cmd_add_replication(root: &Path, args: &AddReplicationArgs) -> Result<ExitCode> {
    let package = load_package(root)?;
    let content = ReplicationContent {
        description: read_text(&args.description_file)?,
        adapted_design: args.design_file.as_deref().map(read_text).transpose()?.unwrap_or_default(),
        data: args.data_file.as_deref().map(read_text).transpose()?.unwrap_or_default(),
        notes: args.notes_file.as_deref().map(read_text).transpose()?.unwrap_or_default(),
        change_summary: args.summary.clone(),
        recorded: args.date.unwrap_or_else(Utc::now),
        attachments: read_attachments(&args.attachments)?,
        evidence: vec![],
    };
    let next = add_replication(&package, &content)?;
    serialize_package(&next, root)?;
    let index = next.replications().filter_map(|m| m.study_index).max().unwrap_or(0);
    println!("added replication module 6.{index}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_add_aggregation(root: &Path, args: &AddAggregationArgs) -> Result<ExitCode> {
    let package = load_package(root)?;
    let content = AggregationContent {
        protocol: read_text(&args.protocol_file)?,
        results: args.results_file.as_deref().map(read_text).transpose()?.unwrap_or_default(),
        change_summary: args.summary.clone(),
        recorded: args.date.unwrap_or_else(Utc::now),
        attachments: read_attachments(&args.attachments)?,
        evidence: vec![],
    };
    let next = add_aggregation(&package, &content)?;
    serialize_package(&next, root)?;
    let index = next.aggregations().filter_map(|m| m.study_index).max().unwrap_or(0);
    println!("added aggregation module 7.{index}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_publish(root: &Path, bundle: &CatalogBundle, args: &PublishArgs) -> Result<ExitCode> {
    let package = load_package(root)?;
    let next = publish_core_version(
        &package,
        &args.note,
        args.date.unwrap_or_else(Utc::now),
        &bundle.catalog,
        &bundle.checklist,
    )?;
    serialize_package(&next, root)?;
    let version = next.version_history.last().expect("just published");
    println!("published version {}", version.version_id);
    Ok(ExitCode::SUCCESS)
}

fn cmd_version_list(root: &Path, cli: &Cli) -> Result<ExitCode> {
    let package = load_package(root)?;
    match cli.format {
        OutputFormat::Json => {
            let rows: Vec<serde_json::Value> = package
                .version_history
                .iter()
                .map(|s| {
                    serde_json::json!({
                        "change_note": s.change_note,
                        "timestamp": s.timestamp.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
                        "version_id": s.version_id,
                    })
                })
                .collect();
            let mut out = serde_json::to_string_pretty(&rows)?;
            out.push('\n');
            print!("{out}");
        }
        OutputFormat::Text => {
            for snapshot in &package.version_history {
                println!(
                    "v{} {} {}",
                    snapshot.version_id,
                    snapshot.timestamp.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
                    snapshot.change_note
                );
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_assess_record(root: &Path, record: &RecordCommand) -> Result<ExitCode> {
    require_package_root(root)?;
    let store = AssessmentStore::open(root);
    match record {
        RecordCommand::Incident {
            replication,
            category,
            code,
            description,
        } => {
            let category: IncidentCategory = category.parse()?;
            store.record_incident(&IncidentRecord {
                replication_id: replication.clone(),
                category,
                code: code.clone(),
                description: description.clone(),
            })?;
            println!("recorded incident `{code}` for {replication}");
        }
        RecordCommand::Usability { replication, file } => {
            let values: std::collections::BTreeMap<UsabilityComponent, HalfScore> =
                serde_json::from_str(&read_text(file)?)
                    .with_context(|| format!("parsing {}", file.display()))?;
            let score = UsabilityScore::new(replication.clone(), values)?;
            store.record_usability(&score)?;
            println!("recorded usability scores for {replication}");
        }
        RecordCommand::Completeness { replication, file } => {
            let rating: CompletenessRating = serde_json::from_str(&read_text(file)?)
                .with_context(|| format!("parsing {}", file.display()))?;
            store.record_completeness(replication, &rating)?;
            println!("recorded completeness rating for {replication}");
        }
        RecordCommand::Efficacy { replication, file } => {
            let rating: EfficacyRating = serde_json::from_str(&read_text(file)?)
                .with_context(|| format!("parsing {}", file.display()))?;
            store.record_efficacy(replication, &rating)?;
            println!("recorded efficacy rating for {replication}");
        }
        RecordCommand::Effort {
            replication,
            activity,
            hours,
        } => {
            let activity: EffortActivity = activity.parse().map_err(|e: String| anyhow!(e))?;
            store.record_effort(replication, &EffortRecord::new(activity, *hours)?)?;
            println!("recorded {hours} person-hours for {replication}");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_assess_report(root: &Path, cli: &Cli, replication: &str) -> Result<ExitCode> {
    require_package_root(root)?;
    let store = AssessmentStore::open(root);
    let report = assessment_report(&store, replication)?;
    match cli.format {
        OutputFormat::Json => print!("{}", report.to_json_string()),
        OutputFormat::Text => print!("{}", report.to_text()),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_summary(root: &Path, cli: &Cli, post_ids: &str) -> Result<ExitCode> {
    require_package_root(root)?;
    let store = AssessmentStore::open(root);
    let scores: Vec<UsabilityScore> = store
        .load_all()?
        .iter()
        .filter_map(|a| a.usability_score())
        .collect();
    let post: BTreeSet<String> = post_ids
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    let summary = summarize_pre_post(&scores, &post)?;
    match cli.format {
        OutputFormat::Json => print!("{}", summary_json(&summary)),
        OutputFormat::Text => print!("{}", summary_text(&summary)),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_export(root: &Path, bundle: &CatalogBundle, args: &ExportArgs) -> Result<ExitCode> {
    let package = load_package(root)?;
    let summary = export_html(&package, &args.out, &bundle.catalog, &bundle.checklist)?;
    println!(
        "exported {} pages and {} attachment(s) to {}",
        summary.pages.len(),
        summary.attachments_copied,
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}
