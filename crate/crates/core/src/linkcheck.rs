//! Checks that every intra-project hyperlink in an output tree lands on an
//! existing page and anchor.
//!
//! Pages are scanned for `<a href>` and `id=` attributes; diagram texts under
//! `aux_files/` are scanned for PlantUML `[[target label]]` links.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Component, Path, PathBuf};
use std::sync::OnceLock;

use regex::Regex;
use walkdir::WalkDir;

use crate::error::{Error, Result};
use crate::fsio;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkRef {
    /// File containing the link, relative to the output root.
    pub source: PathBuf,
    pub href: String,
    /// The `class` attribute of the anchor element, if any.
    pub class: Option<String>,
    pub resolved: bool,
}

#[derive(Debug, Clone, Default)]
pub struct Report {
    pub links: Vec<LinkRef>,
}

impl Report {
    pub fn unresolved(&self) -> Vec<&LinkRef> {
        self.links.iter().filter(|l| !l.resolved).collect()
    }

    /// Links from page call lists (`class="call"`).
    pub fn calls(&self) -> Vec<&LinkRef> {
        self.links
            .iter()
            .filter(|l| l.class.as_deref() == Some("call"))
            .collect()
    }

    pub fn is_closed(&self) -> bool {
        self.links.iter().all(|l| l.resolved)
    }
}

fn anchor_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r#"<a\s([^>]*)>"#).unwrap())
}

fn attr_re(name: &str) -> Regex {
    Regex::new(&format!(r#"\b{name}="([^"]*)""#)).unwrap()
}

fn diagram_link_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\[\[(\S+)").unwrap())
}

fn unescape_attr(s: &str) -> String {
    s.replace("&quot;", "\"")
        .replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&amp;", "&")
}

/// Lexically resolves `href` (without fragment) against the directory of
/// `source`. Returns `None` when it leaves the output root.
fn target_page(source: &Path, path: &str) -> Option<PathBuf> {
    let mut parts: Vec<String> = source
        .parent()
        .into_iter()
        .flat_map(|p| p.components())
        .filter_map(|c| match c {
            Component::Normal(s) => Some(s.to_string_lossy().into_owned()),
            _ => None,
        })
        .collect();
    for seg in path.split('/') {
        match seg {
            "" | "." => {}
            ".." => {
                parts.pop()?;
            }
            s => parts.push(s.to_string()),
        }
    }
    Some(parts.iter().collect())
}

fn is_external(href: &str) -> bool {
    href.contains("://") || href.starts_with("mailto:")
}

/// Scans every `.html` page and `aux_files/*.txt` diagram under `out_dir`.
pub fn check_dir(out_dir: &Path) -> Result<Report> {
    let id_re = attr_re("id");
    let href_re = attr_re("href");
    let class_re = attr_re("class");
    let mut ids: BTreeMap<PathBuf, BTreeSet<String>> = BTreeMap::new();
    let mut raw: Vec<(PathBuf, String, Option<String>)> = Vec::new();
    let mut files: Vec<PathBuf> = WalkDir::new(out_dir)
        .into_iter()
        .map(|e| e.map_err(|e| Error::io(out_dir, e.into())))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|e| e.file_type().is_file())
        .map(|e| e.into_path())
        .collect();
    files.sort();
    for file in files {
        let rel = file.strip_prefix(out_dir).unwrap_or(&file).to_path_buf();
        let ext = rel.extension().and_then(|e| e.to_str()).unwrap_or("");
        match ext {
            "html" => {
                let text = fsio::read_to_string(&file)?;
                let page_ids = ids.entry(rel.clone()).or_default();
                for c in id_re.captures_iter(&text) {
                    page_ids.insert(unescape_attr(&c[1]));
                }
                for a in anchor_re().captures_iter(&text) {
                    let attrs = &a[1];
                    if let Some(h) = href_re.captures(attrs) {
                        let class = class_re.captures(attrs).map(|c| unescape_attr(&c[1]));
                        raw.push((rel.clone(), unescape_attr(&h[1]), class));
                    }
                }
            }
            "txt" => {
                let text = fsio::read_to_string(&file)?;
                for c in diagram_link_re().captures_iter(&text) {
                    raw.push((rel.clone(), c[1].to_string(), None));
                }
            }
            _ => {}
        }
    }
    let links = raw
        .into_iter()
        .filter(|(_, href, _)| !is_external(href))
        .map(|(source, href, class)| {
            let (path, fragment) = match href.split_once('#') {
                Some((p, f)) => (p, Some(f)),
                None => (href.as_str(), None),
            };
            let page = if path.is_empty() {
                Some(source.clone())
            } else {
                target_page(&source, path)
            };
            let resolved = page.is_some_and(|page| match ids.get(&page) {
                None => false,
                Some(page_ids) => fragment.is_none_or(|f| page_ids.contains(f)),
            });
            LinkRef {
                source,
                href,
                class,
                resolved,
            }
        })
        .collect();
    Ok(Report { links })
}
