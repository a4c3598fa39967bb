//! Per-source analysis and the three phases: `build-db`, `makeflows` and
//! `makehtml`.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use crate::activity::{build_activity, ActivityTree};
use crate::annotations::{self, Annotation};
use crate::cxx::{self, FunctionDef, Stmt};
use crate::diag::Diagnostic;
use crate::error::Result;
use crate::flowdb::{mangle, FlowDb};
use crate::plantuml::{self, DiagramText};
use crate::{fsio, html, scanner};

/// File stem used for page, database and diagram names.
pub fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

#[derive(Debug, Clone)]
pub struct AnnotatedFunction {
    pub def: FunctionDef,
    pub body: Stmt,
    pub annotations: Vec<Annotation>,
}

#[derive(Debug, Clone)]
pub struct SourceAnalysis {
    pub path: PathBuf,
    pub functions: Vec<AnnotatedFunction>,
    pub diagnostics: Vec<Diagnostic>,
}

impl SourceAnalysis {
    pub fn stem(&self) -> String {
        stem(&self.path)
    }

    pub fn html_name(&self) -> String {
        format!("{}.html", self.stem())
    }
}

/// Scans and parses one source, keeping only functions with annotations.
pub fn analyze(path: &Path, text: &str) -> SourceAnalysis {
    let scan = scanner::scan(text);
    let mut diagnostics: Vec<Diagnostic> = scan
        .errors
        .iter()
        .map(|e| Diagnostic::error(e.to_string()).at_line(e.line()))
        .collect();
    let lexemes = cxx::lex(&scan.tokens);
    let defs = cxx::find_definitions(&scan.tokens, path);
    diagnostics.extend(defs.diagnostics);
    let mut functions: Vec<AnnotatedFunction> = Vec::new();
    let mut seen = BTreeSet::new();
    for def in defs.defs {
        let (annotations, diags) =
            annotations::collect(&scan.tokens, &lexemes, def.body_start, def.body_end);
        if annotations.is_empty() {
            continue;
        }
        diagnostics.extend(diags);
        if !seen.insert(def.qualified_name.clone()) {
            diagnostics.push(
                Diagnostic::warning(format!(
                    "`{}` is already documented in this file; later definition skipped",
                    def.qualified_name
                ))
                .at_line(def.start_line),
            );
            continue;
        }
        let parsed = cxx::parse_body_lexed(&def, &lexemes);
        diagnostics.extend(parsed.diagnostics);
        functions.push(AnnotatedFunction {
            def,
            body: parsed.root,
            annotations,
        });
    }
    for d in &mut diagnostics {
        d.file = Some(path.to_path_buf());
    }
    SourceAnalysis {
        path: path.to_path_buf(),
        functions,
        diagnostics,
    }
}

/// One function's activity and its diagram at every zoom level.
#[derive(Debug, Clone)]
pub struct FunctionDiagrams {
    pub qualified_name: String,
    pub signature: String,
    pub anchor: String,
    pub tree: ActivityTree,
    /// Index `k` holds zoom level `k`.
    pub diagrams: Vec<DiagramText>,
}

pub fn diagrams_for(
    analysis: &SourceAnalysis,
    db: &FlowDb,
) -> (Vec<FunctionDiagrams>, Vec<Diagnostic>) {
    let stem = analysis.stem();
    let mut out = Vec::new();
    let mut diagnostics = Vec::new();
    for f in &analysis.functions {
        let Ok(built) = build_activity(&f.def, &f.body, &f.annotations, db) else {
            continue;
        };
        diagnostics.extend(
            built
                .diagnostics
                .into_iter()
                .map(|d| d.in_file(&analysis.path)),
        );
        let tree = built.tree;
        let anchor = mangle(&f.def.qualified_name);
        let diagrams = (0..=tree.max_zoom)
            .map(|k| DiagramText {
                content: plantuml::emit(
                    &tree.project(k).expect("levels up to max_zoom are valid"),
                    plantuml::LINK_BASE,
                ),
                path: plantuml::diagram_path(&stem, &anchor, k),
            })
            .collect();
        out.push(FunctionDiagrams {
            qualified_name: f.def.qualified_name.clone(),
            signature: f.def.signature_text.clone(),
            anchor,
            tree,
            diagrams,
        });
    }
    (out, diagnostics)
}

#[derive(Debug, Default)]
pub struct PhaseOutput {
    pub written: Vec<PathBuf>,
    pub diagnostics: Vec<Diagnostic>,
}

/// The `makeflows` phase for one source: writes every diagram text.
pub fn makeflows(source: &Path, out_dir: &Path, db: &FlowDb) -> Result<PhaseOutput> {
    let text = fsio::read_to_string(source)?;
    let analysis = analyze(source, &text);
    let (functions, diags) = diagrams_for(&analysis, db);
    let mut out = PhaseOutput {
        diagnostics: analysis.diagnostics.clone(),
        ..PhaseOutput::default()
    };
    out.diagnostics.extend(diags);
    for f in &functions {
        for d in &f.diagrams {
            let path = out_dir.join(&d.path);
            fsio::write_atomic(&path, &d.content)?;
            out.written.push(path);
        }
    }
    Ok(out)
}

/// The `makehtml` phase for one source: writes `<stem>.html` when the source
/// has annotated functions.
pub fn makehtml(source: &Path, out_dir: &Path, db: &FlowDb) -> Result<PhaseOutput> {
    let text = fsio::read_to_string(source)?;
    let analysis = analyze(source, &text);
    let (functions, diags) = diagrams_for(&analysis, db);
    let mut out = PhaseOutput {
        diagnostics: analysis.diagnostics.clone(),
        ..PhaseOutput::default()
    };
    out.diagnostics.extend(diags);
    if functions.is_empty() {
        return Ok(out);
    }
    let file_name = source
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let page = html::emit_page(&file_name, &functions);
    let path = out_dir.join(analysis.html_name());
    fsio::write_atomic(&path, &page)?;
    out.written.push(path);
    Ok(out)
}

/// Writes `index.html` listing every page and function in `db`.
pub fn write_index(out_dir: &Path, db: &FlowDb) -> Result<PathBuf> {
    let path = out_dir.join(html::INDEX);
    fsio::write_atomic(&path, &html::emit_index(db))?;
    Ok(path)
}
