//! Command-line front end: `build-db`, `makeflows`, `makehtml` and `all`.

use std::collections::HashSet;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command as Process;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use walkdir::WalkDir;

use crate::diag::Diagnostic;
use crate::error::{Error, Result};
use crate::flowdb::{self, FlowDb};
use crate::pipeline::{self, PhaseOutput};

/// Extensions picked up when a directory is given as a source.
pub const SOURCE_EXTENSIONS: &[&str] = &["cpp", "cc", "cxx", "c++", "C", "c"];

#[derive(Debug, Parser)]
#[command(
    name = "flowdoc",
    version,
    about = "Zoomable activity diagrams from //$-annotated C++"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Output directory.
    #[arg(long, global = true, env = "FLOWDOC_OUT", default_value = "flowdoc")]
    pub out_dir: PathBuf,

    /// Command run on every diagram text, e.g. `java -jar plantuml.jar -tsvg {}`.
    /// `{}` is replaced by the text file path; without it the path is appended.
    #[arg(long, global = true, value_name = "TEMPLATE")]
    pub render_cmd: Option<String>,

    /// Treat warnings as errors for the exit status.
    #[arg(long, global = true)]
    pub werror: bool,

    /// Do not print warnings.
    #[arg(long, short, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write `<stem>.flowdb` for each source.
    BuildDb {
        #[arg(required = true)]
        sources: Vec<PathBuf>,
    },
    /// Write the PlantUML diagram texts of each source.
    Makeflows {
        #[arg(required = true)]
        sources: Vec<PathBuf>,
    },
    /// Write `<stem>.html` for each source and the index page.
    Makehtml { sources: Vec<PathBuf> },
    /// Run all three phases.
    All {
        #[arg(required = true)]
        sources: Vec<PathBuf>,
    },
}

/// Parses `args` (including the program name) and runs the command.
/// Diagnostics go to `stderr`. Returns the process exit status.
pub fn run<I, T>(args: I, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let diagnostics = match execute(&cli) {
        Ok(d) => d,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return if matches!(e, Error::Usage(_)) { 2 } else { 1 };
        }
    };
    let mut failed = false;
    for d in &diagnostics {
        failed |= d.is_error() || cli.werror;
        if d.is_error() || !cli.quiet {
            let _ = writeln!(stderr, "{d}");
        }
    }
    i32::from(failed)
}

/// Runs the command and returns its diagnostics, deduplicated and in a
/// deterministic order.
pub fn execute(cli: &Cli) -> Result<Vec<Diagnostic>> {
    let mut diags = Vec::new();
    let out = cli.out_dir.as_path();
    match &cli.command {
        Command::BuildDb { sources } => {
            let sources = expand_sources(sources, &mut diags)?;
            build_db(&sources, out, &mut diags);
        }
        Command::Makeflows { sources } => {
            let sources = expand_sources(sources, &mut diags)?;
            let db = load_db(out, &mut diags)?;
            let written = makeflows(&sources, out, &db, &mut diags);
            render(cli.render_cmd.as_deref(), &written, &mut diags);
        }
        Command::Makehtml { sources } => {
            let sources = expand_sources(sources, &mut diags)?;
            let db = load_db(out, &mut diags)?;
            makehtml(&sources, out, &db, &mut diags)?;
        }
        Command::All { sources } => {
            let sources = expand_sources(sources, &mut diags)?;
            build_db(&sources, out, &mut diags);
            let db = load_db(out, &mut diags)?;
            let written = makeflows(&sources, out, &db, &mut diags);
            makehtml(&sources, out, &db, &mut diags)?;
            render(cli.render_cmd.as_deref(), &written, &mut diags);
        }
    }
    let mut seen = HashSet::new();
    diags.retain(|d| seen.insert(d.clone()));
    Ok(diags)
}

fn is_source(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| SOURCE_EXTENSIONS.contains(&e))
}

/// Expands directories into their C++ sources (sorted) and rejects two
/// sources that would share an output stem.
fn expand_sources(sources: &[PathBuf], diags: &mut Vec<Diagnostic>) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for src in sources {
        if src.is_dir() {
            let mut found: Vec<PathBuf> = WalkDir::new(src)
                .into_iter()
                .filter_map(|e| e.ok())
                .filter(|e| e.file_type().is_file() && is_source(e.path()))
                .map(|e| e.into_path())
                .collect();
            found.sort();
            out.extend(found);
        } else {
            out.push(src.clone());
        }
    }
    let mut stems: Vec<(String, &PathBuf)> = Vec::new();
    let mut kept = Vec::new();
    for src in &out {
        let stem = pipeline::stem(src);
        if let Some((_, first)) = stems.iter().find(|(s, _)| *s == stem) {
            diags.push(Diagnostic::error(format!(
                "{} and {} share the output name `{stem}`; skipping the second",
                first.display(),
                src.display()
            )));
            continue;
        }
        stems.push((stem, src));
        kept.push(src.clone());
    }
    if kept.is_empty() && !sources.is_empty() {
        return Err(Error::Usage("no C++ sources found".into()));
    }
    Ok(kept)
}

fn report(diags: &mut Vec<Diagnostic>, result: Result<Vec<Diagnostic>>) {
    match result {
        Ok(d) => diags.extend(d),
        Err(e) => diags.push(Diagnostic::error(e.to_string())),
    }
}

fn build_db(sources: &[PathBuf], out: &Path, diags: &mut Vec<Diagnostic>) {
    let results: Vec<_> = sources
        .par_iter()
        .map(|s| flowdb::build_db(s, out).map(|o| o.diagnostics))
        .collect();
    for r in results {
        report(diags, r);
    }
}

fn load_db(out: &Path, diags: &mut Vec<Diagnostic>) -> Result<FlowDb> {
    let db = if out.is_dir() {
        let (db, d) = flowdb::load_merge(out)?;
        diags.extend(d);
        db
    } else {
        FlowDb::default()
    };
    if db.is_empty() {
        diags.push(Diagnostic::warning("no annotated functions"));
    }
    Ok(db)
}

fn phase(
    sources: &[PathBuf],
    diags: &mut Vec<Diagnostic>,
    f: impl Fn(&Path) -> Result<PhaseOutput> + Sync,
) -> Vec<PathBuf> {
    let results: Vec<_> = sources.par_iter().map(|s| f(s)).collect();
    let mut written = Vec::new();
    for r in results {
        report(
            diags,
            r.map(|o| {
                written.extend(o.written);
                o.diagnostics
            }),
        );
    }
    written
}

fn makeflows(
    sources: &[PathBuf],
    out: &Path,
    db: &FlowDb,
    diags: &mut Vec<Diagnostic>,
) -> Vec<PathBuf> {
    phase(sources, diags, |s| pipeline::makeflows(s, out, db))
}

fn makehtml(
    sources: &[PathBuf],
    out: &Path,
    db: &FlowDb,
    diags: &mut Vec<Diagnostic>,
) -> Result<()> {
    phase(sources, diags, |s| pipeline::makehtml(s, out, db));
    pipeline::write_index(out, db)?;
    Ok(())
}

fn shell_quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', r"'\''"))
}

/// Runs `template` once per diagram text through `sh -c`.
fn render(template: Option<&str>, texts: &[PathBuf], diags: &mut Vec<Diagnostic>) {
    let Some(template) = template else {
        return;
    };
    let failures: Vec<_> = texts
        .par_iter()
        .filter_map(|t| {
            let path = shell_quote(&t.to_string_lossy());
            let cmd = if template.contains("{}") {
                template.replace("{}", &path)
            } else {
                format!("{template} {path}")
            };
            match Process::new("sh").arg("-c").arg(&cmd).status() {
                Ok(s) if s.success() => None,
                Ok(s) => Some(Diagnostic::error(format!(
                    "render command failed ({s}): {cmd}"
                ))),
                Err(e) => Some(Diagnostic::error(format!("cannot run render command: {e}"))),
            }
        })
        .collect();
    diags.extend(failures);
}
