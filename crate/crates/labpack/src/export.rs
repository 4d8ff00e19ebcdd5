//! Static site export: one page per module, a table of contents, and an
//! evolution timeline listing versions and studies.
//!
//! Section bodies are opaque text and render preformatted; `lp:` references
//! become hyperlinks. Output is a pure function of the package value, so
//! exporting twice produces identical trees. Refuses packages that lint
//! with errors or contain dangling references, since those links cannot be
//! resolved.

use std::collections::BTreeMap;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::catalog::{ChecklistItem, TemplateCatalog};
use crate::lint::{broken_references, lint};
use crate::model::{core_dir_name, LpModule, ModuleKind, Package, Section, SectionNumber};

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("{0} lint error(s) present; fix them before exporting")]
    LintErrorsPresent(usize),
    #[error("broken cross-reference `lp:{target}` in {from}")]
    BrokenReference { from: String, target: String },
    #[error("io failure at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

/// What was written: page names plus copied attachment count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExportSummary {
    pub pages: Vec<String>,
    pub attachments_copied: usize,
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}

fn page_name(module: &LpModule) -> String {
    match (module.kind, module.study_index) {
        (ModuleKind::Replication, Some(n)) => format!("replication-6.{n}.html"),
        (ModuleKind::Aggregation, Some(n)) => format!("aggregation-7.{n}.html"),
        (kind, _) => format!("{}.html", core_dir_name(kind)),
    }
}

/// Replaces `lp:<number>` references in escaped text with anchors into the
/// right module page. Targets were validated before rendering.
fn linkify(package: &Package, escaped: &str) -> String {
    static PATTERN: std::sync::OnceLock<regex::Regex> = std::sync::OnceLock::new();
    let pattern = PATTERN
        .get_or_init(|| regex::Regex::new(r"lp:([0-9]+(?:\.[0-9]+)*)").expect("valid regex"));
    pattern
        .replace_all(escaped, |caps: &regex::Captures<'_>| {
            let raw = &caps[1];
            match raw.parse::<SectionNumber>().ok().and_then(|n| package.find_section(&n)) {
                Some((module, section)) => format!(
                    "<a href=\"{}#s-{}\">{}</a>",
                    page_name(module),
                    section.number,
                    section.number
                ),
                None => caps[0].to_string(),
            }
        })
        .into_owned()
}

fn html_page(title: &str, body: &str) -> String {
    format!(
        "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>{}</title>\n</head>\n<body>\n{}</body>\n</html>\n",
        escape(title),
        body
    )
}

fn render_section(package: &Package, section: &Section, depth: usize, out: &mut String) {
    let level = (depth + 2).min(6);
    out.push_str(&format!(
        "<h{level} id=\"s-{}\">{} {}</h{level}>\n",
        section.number,
        section.number,
        escape(&section.title)
    ));
    match &section.body {
        Some(body) if !body.trim().is_empty() => {
            out.push_str(&format!("<pre class=\"body\">{}</pre>\n", linkify(package, &escape(body))));
        }
        _ => out.push_str("<p class=\"empty\">(empty section)</p>\n"),
    }
    for child in &section.children {
        render_section(package, child, depth + 1, out);
    }
}

fn render_module_page(package: &Package, module: &LpModule) -> String {
    let mut body = String::new();
    body.push_str("<p><a href=\"index.html\">table of contents</a></p>\n");
    body.push_str(&format!(
        "<h1>{} {}</h1>\n",
        module.module_number(),
        escape(&module.display_label())
    ));
    for section in &module.sections {
        render_section(package, section, 0, &mut body);
    }
    if !module.attachments.is_empty() {
        body.push_str("<h2>Attachments</h2>\n<ul>\n");
        for attachment in &module.attachments {
            body.push_str(&format!(
                "<li><a href=\"files/{}/{}\">{}</a></li>\n",
                module.module_number(),
                escape(&attachment.path),
                escape(&attachment.path)
            ));
        }
        body.push_str("</ul>\n");
    }
    html_page(&module.display_label(), &body)
}

fn render_index(package: &Package) -> String {
    let mut body = String::new();
    body.push_str(&format!("<h1>{}</h1>\n", escape(&package.manifest.experiment_name)));
    body.push_str(&format!(
        "<p>package <code>{}</code>, family {}, language {}</p>\n",
        escape(&package.manifest.package_id),
        escape(&package.manifest.family),
        escape(&package.manifest.language_tag)
    ));
    if !package.manifest.contacts.is_empty() {
        body.push_str("<ul class=\"contacts\">\n");
        for contact in &package.manifest.contacts {
            body.push_str(&format!(
                "<li>{} &lt;{}&gt;</li>\n",
                escape(&contact.name),
                escape(&contact.email)
            ));
        }
        body.push_str("</ul>\n");
    }
    body.push_str("<p><a href=\"timeline.html\">evolution timeline</a></p>\n");
    body.push_str("<h2>Modules</h2>\n");
    for module in package.modules() {
        body.push_str(&format!(
            "<h3><a href=\"{}\">{} {}</a></h3>\n<ul>\n",
            page_name(module),
            module.module_number(),
            escape(&module.display_label())
        ));
        for section in module.sections_preorder() {
            body.push_str(&format!(
                "<li><a href=\"{}#s-{}\">{} {}</a></li>\n",
                page_name(module),
                section.number,
                section.number,
                escape(&section.title)
            ));
        }
        body.push_str("</ul>\n");
    }
    html_page(&package.manifest.experiment_name, &body)
}

fn render_timeline(package: &Package) -> String {
    let mut body = String::new();
    body.push_str("<p><a href=\"index.html\">table of contents</a></p>\n");
    body.push_str("<h1>Evolution timeline</h1>\n<h2>Published versions</h2>\n");
    if package.version_history.is_empty() {
        body.push_str("<p>No versions published yet.</p>\n");
    } else {
        body.push_str("<ol>\n");
        for snapshot in &package.version_history {
            body.push_str(&format!(
                "<li>v{} ({}): {}</li>\n",
                snapshot.version_id,
                snapshot.timestamp.format("%Y-%m-%d"),
                escape(&snapshot.change_note)
            ));
        }
        body.push_str("</ol>\n");
    }
    body.push_str("<h2>Studies</h2>\n");
    if package.evolution_entries().is_empty() {
        body.push_str("<p>No studies recorded yet.</p>\n");
    } else {
        for entry in package.evolution_entries() {
            body.push_str(&format!(
                "<h3 id=\"e-{}\">{} {}</h3>\n",
                entry.number,
                entry.number,
                escape(&entry.title)
            ));
            if let Some(text) = &entry.body {
                body.push_str(&format!("<pre class=\"body\">{}</pre>\n", linkify(package, &escape(text))));
            }
        }
    }
    html_page("Evolution timeline", &body)
}

/// Exports the package as a static site under `out_dir`: `index.html`, one
/// page per module, `timeline.html`, and a `files/` tree with attachments.
pub fn export_html(
    package: &Package,
    out_dir: &Path,
    catalog: &TemplateCatalog,
    checklist: &[ChecklistItem],
) -> Result<ExportSummary, ExportError> {
    let report = lint(package, catalog, checklist);
    if report.counts.error > 0 {
        return Err(ExportError::LintErrorsPresent(report.counts.error));
    }
    if let Some(broken) = broken_references(package).first() {
        return Err(ExportError::BrokenReference {
            from: broken
                .source_section
                .clone()
                .unwrap_or_else(|| broken.source.clone()),
            target: broken.target.to_string(),
        });
    }

    let mut pages: BTreeMap<String, String> = BTreeMap::new();
    pages.insert("index.html".to_string(), render_index(package));
    pages.insert("timeline.html".to_string(), render_timeline(package));
    for module in package.modules() {
        pages.insert(page_name(module), render_module_page(package, module));
    }

    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source: io::Error| ExportError::Io { path, source }
    };
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    for (name, content) in &pages {
        let path = out_dir.join(name);
        std::fs::write(&path, content).map_err(io_err(&path))?;
    }
    let mut attachments_copied = 0usize;
    for module in package.modules() {
        for attachment in &module.attachments {
            let path = out_dir
                .join("files")
                .join(module.module_number().to_string())
                .join(&attachment.path);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent).map_err(io_err(parent))?;
            }
            std::fs::write(&path, &attachment.data).map_err(io_err(&path))?;
            attachments_copied += 1;
        }
    }

    Ok(ExportSummary {
        pages: pages.into_keys().collect(),
        attachments_copied,
    })
}
