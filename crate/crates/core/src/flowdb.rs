//! Cross-file registry of annotated functions.
//!
//! Each source file gets a `<stem>.flowdb` text file with one record per
//! annotated function:
//!
//! ```text
//! qualified_name <TAB> html_path#anchor <TAB> max_zoom <LF>
//! ```
//!
//! Records are sorted by qualified name. Merging all files of a directory
//! gives the [`FlowDb`] that call highlights are resolved against.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::annotations::AnnotationKind;
use crate::cxx::CallSite;
use crate::diag::Diagnostic;
use crate::error::{Error, Result};
use crate::fsio;
use crate::pipeline::{self, SourceAnalysis};

pub const EXTENSION: &str = "flowdb";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct FlowDbEntry {
    pub qualified_name: String,
    pub html_path: String,
    pub anchor: String,
    pub max_zoom: u32,
}

impl FlowDbEntry {
    pub fn link(&self) -> Link {
        Link {
            qualified_name: self.qualified_name.clone(),
            html_path: self.html_path.clone(),
            anchor: self.anchor.clone(),
        }
    }
}

/// Target of a hyperlink to a function's diagrams.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Link {
    pub qualified_name: String,
    pub html_path: String,
    pub anchor: String,
}

impl Link {
    /// `base` is prepended as-is; pass `""` for links between pages.
    pub fn href(&self, base: &str) -> String {
        format!("{base}{}#{}", self.html_path, self.anchor)
    }
}

/// HTML-id safe form of a qualified name: `::` becomes `__`, and every other
/// character outside `[A-Za-z0-9_]` becomes `_`.
pub fn mangle(qualified_name: &str) -> String {
    qualified_name
        .replace("::", "__")
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Records for the annotated functions of one analyzed source, sorted.
pub fn entries_for(analysis: &SourceAnalysis) -> Vec<FlowDbEntry> {
    let html_path = analysis.html_name();
    let mut entries: Vec<FlowDbEntry> = analysis
        .functions
        .iter()
        .map(|f| FlowDbEntry {
            qualified_name: f.def.qualified_name.clone(),
            html_path: html_path.clone(),
            anchor: mangle(&f.def.qualified_name),
            max_zoom: f
                .annotations
                .iter()
                .filter(|a| a.kind == AnnotationKind::Action)
                .map(|a| a.zoom)
                .max()
                .unwrap_or(0),
        })
        .collect();
    entries.sort();
    entries.dedup_by(|a, b| a.qualified_name == b.qualified_name);
    entries
}

pub fn serialize(entries: &[FlowDbEntry]) -> String {
    let mut sorted: Vec<&FlowDbEntry> = entries.iter().collect();
    sorted.sort();
    sorted
        .iter()
        .map(|e| {
            format!(
                "{}\t{}#{}\t{}\n",
                e.qualified_name, e.html_path, e.anchor, e.max_zoom
            )
        })
        .collect()
}

/// Parses one `.flowdb` file; bad lines are reported and skipped.
pub fn parse(text: &str, file: &Path) -> (Vec<FlowDbEntry>, Vec<Diagnostic>) {
    let mut entries = Vec::new();
    let mut diagnostics = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        match parse_line(line) {
            Some(e) => entries.push(e),
            None => diagnostics.push(
                Diagnostic::warning("malformed flowdb line skipped")
                    .in_file(file)
                    .at_line(n as u32 + 1),
            ),
        }
    }
    (entries, diagnostics)
}

fn parse_line(line: &str) -> Option<FlowDbEntry> {
    let mut fields = line.split('\t');
    let (name, target, zoom) = (fields.next()?, fields.next()?, fields.next()?);
    if fields.next().is_some() || name.is_empty() || name.contains(char::is_whitespace) {
        return None;
    }
    let (html_path, anchor) = target.split_once('#')?;
    let anchor_ok = !anchor.is_empty()
        && anchor
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_');
    if html_path.is_empty() || !anchor_ok {
        return None;
    }
    Some(FlowDbEntry {
        qualified_name: name.to_string(),
        html_path: html_path.to_string(),
        anchor: anchor.to_string(),
        max_zoom: zoom.parse().ok()?,
    })
}

/// Path of the database file for `source` inside `out_dir`.
pub fn db_path(source: &Path, out_dir: &Path) -> PathBuf {
    out_dir.join(format!("{}.{EXTENSION}", pipeline::stem(source)))
}

#[derive(Debug)]
pub struct BuildOutput {
    pub path: PathBuf,
    pub entries: Vec<FlowDbEntry>,
    pub diagnostics: Vec<Diagnostic>,
}

/// The `build-db` phase for one source file.
pub fn build_db(source_path: &Path, out_dir: &Path) -> Result<BuildOutput> {
    let text = fsio::read_to_string(source_path)?;
    let analysis = pipeline::analyze(source_path, &text);
    let entries = entries_for(&analysis);
    let path = db_path(source_path, out_dir);
    fsio::write_atomic(&path, &serialize(&entries))?;
    Ok(BuildOutput {
        path,
        entries,
        diagnostics: analysis.diagnostics,
    })
}

/// Outcome of resolving a highlighted call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Resolution {
    Link(Link),
    NoLink,
}

/// Merged registry, keyed by qualified name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FlowDb {
    entries: BTreeMap<String, FlowDbEntry>,
}

impl FlowDb {
    /// Merges entries; on duplicate names the lexicographically first
    /// `html_path` wins and a warning is produced.
    pub fn from_entries(
        entries: impl IntoIterator<Item = FlowDbEntry>,
    ) -> (FlowDb, Vec<Diagnostic>) {
        let mut db = FlowDb::default();
        let mut diagnostics = Vec::new();
        for entry in entries {
            match db.entries.get_mut(&entry.qualified_name) {
                None => {
                    db.entries.insert(entry.qualified_name.clone(), entry);
                }
                Some(existing) => {
                    let (keep, drop) = if entry.html_path < existing.html_path {
                        (entry.html_path.clone(), existing.html_path.clone())
                    } else {
                        (existing.html_path.clone(), entry.html_path.clone())
                    };
                    diagnostics.push(Diagnostic::warning(format!(
                        "duplicate definition of `{}` in {keep} and {drop}; linking to {keep}",
                        entry.qualified_name
                    )));
                    if entry.html_path < existing.html_path {
                        *existing = entry;
                    }
                }
            }
        }
        let mut seen: BTreeMap<(&str, &str), &str> = BTreeMap::new();
        for e in db.entries.values() {
            if let Some(other) = seen.insert((&e.html_path, &e.anchor), &e.qualified_name) {
                diagnostics.push(Diagnostic::warning(format!(
                    "`{other}` and `{}` share anchor `{}` in {}",
                    e.qualified_name, e.anchor, e.html_path
                )));
            }
        }
        (db, diagnostics)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, qualified_name: &str) -> Option<&FlowDbEntry> {
        self.entries.get(qualified_name)
    }

    pub fn entries(&self) -> impl Iterator<Item = &FlowDbEntry> {
        self.entries.values()
    }

    /// Exact match first (free calls only), then a unique `*::name` suffix
    /// match. Two or more suffix matches give no link and a warning.
    pub fn resolve(&self, call: &CallSite) -> (Resolution, Option<Diagnostic>) {
        let name = call.normalized_name.as_str();
        if !call.member {
            if let Some(e) = self.entries.get(name) {
                return (Resolution::Link(e.link()), None);
            }
        }
        let suffix = format!("::{name}");
        let matches: Vec<&FlowDbEntry> = self
            .entries
            .values()
            .filter(|e| e.qualified_name.ends_with(&suffix))
            .collect();
        match matches.as_slice() {
            [only] => (Resolution::Link(only.link()), None),
            [] => (Resolution::NoLink, None),
            many => {
                let names: Vec<&str> = many.iter().map(|e| e.qualified_name.as_str()).collect();
                let d = Diagnostic::warning(format!(
                    "ambiguous call `{}` matches {}; not linked",
                    call.callee_text,
                    names.join(", ")
                ))
                .at_line(call.line);
                (Resolution::NoLink, Some(d))
            }
        }
    }
}

/// Reads and merges every `*.flowdb` file directly inside `dir`, in file
/// name order.
pub fn load_merge(dir: &Path) -> Result<(FlowDb, Vec<Diagnostic>)> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == EXTENSION))
        .collect();
    files.sort();
    let mut all = Vec::new();
    let mut diagnostics = Vec::new();
    for file in &files {
        let text = fsio::read_to_string(file)?;
        let (entries, diags) = parse(&text, file);
        all.extend(entries);
        diagnostics.extend(diags);
    }
    let (db, merge_diags) = FlowDb::from_entries(all);
    diagnostics.extend(merge_diags);
    Ok((db, diagnostics))
}
