//! Static HTML pages: one per source file plus an index.
//!
//! Each annotated function gets a section whose heading carries the mangled
//! anchor. Zoom levels follow as sub-sections, each referencing the rendered
//! `aux_files/*.svg` and carrying the PlantUML source as a fallback.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::activity::{for_each_action, HighlightedCall};
use crate::flowdb::FlowDb;
use crate::pipeline::FunctionDiagrams;

pub const INDEX: &str = "index.html";

pub fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}

fn head(out: &mut String, title: &str) {
    out.push_str("<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n");
    let _ = writeln!(out, "<title>{}</title>", escape(title));
    out.push_str("</head>\n<body>\n");
}

/// Distinct highlighted calls of a function, in source order.
fn calls(f: &FunctionDiagrams) -> Vec<&HighlightedCall> {
    let mut seen = Vec::new();
    for_each_action(&f.tree.root, &mut |a| {
        for c in &a.highlighted_calls {
            if !seen.contains(&c) {
                seen.push(c);
            }
        }
    });
    seen
}

/// The page for one source file. `file_name` is shown as the title.
pub fn emit_page(file_name: &str, functions: &[FunctionDiagrams]) -> String {
    let mut out = String::new();
    head(&mut out, file_name);
    let _ = writeln!(out, "<p><a href=\"{INDEX}\">index</a></p>");
    let _ = writeln!(out, "<h1>{}</h1>", escape(file_name));
    for f in functions {
        out.push_str("<section class=\"function\">\n");
        let _ = writeln!(
            out,
            "<h2 id=\"{}\">{}</h2>",
            f.anchor,
            escape(&f.qualified_name)
        );
        let _ = writeln!(out, "<p><code>{}</code></p>", escape(&f.signature));
        for (zoom, d) in f.diagrams.iter().enumerate() {
            let svg = d.path.with_extension("svg");
            let svg = svg.to_string_lossy().replace('\\', "/");
            out.push_str("<section class=\"zoom\">\n");
            let _ = writeln!(out, "<h3>zoom level {zoom}</h3>");
            let _ = writeln!(
                out,
                "<object type=\"image/svg+xml\" data=\"{}\">diagram not rendered; see the source below</object>",
                escape(&svg)
            );
            out.push_str("<details>\n<summary>PlantUML source</summary>\n<pre>");
            out.push_str(&escape(&d.content));
            out.push_str("</pre>\n</details>\n</section>\n");
        }
        let calls = calls(f);
        if !calls.is_empty() {
            out.push_str("<p>Calls:</p>\n<ul>\n");
            for c in calls {
                let text = escape(&c.display_text);
                match &c.link {
                    Some(link) => {
                        let _ = writeln!(
                            out,
                            "<li><a class=\"call\" href=\"{}\"><code>{text}</code></a></li>",
                            escape(&link.href(""))
                        );
                    }
                    None => {
                        let _ = writeln!(out, "<li><code>{text}</code></li>");
                    }
                }
            }
            out.push_str("</ul>\n");
        }
        out.push_str("</section>\n");
    }
    out.push_str("</body>\n</html>\n");
    out
}

/// Lists every page and its functions.
pub fn emit_index(db: &FlowDb) -> String {
    let mut pages: BTreeMap<&str, Vec<_>> = BTreeMap::new();
    for e in db.entries() {
        pages.entry(e.html_path.as_str()).or_default().push(e);
    }
    let mut out = String::new();
    head(&mut out, "flowdoc");
    out.push_str("<h1>Activity diagrams</h1>\n<ul>\n");
    for (page, entries) in pages {
        let page = escape(page);
        let _ = writeln!(out, "<li><a href=\"{page}\">{page}</a>\n<ul>");
        for e in entries {
            let _ = writeln!(
                out,
                "<li><a href=\"{page}#{}\">{}</a></li>",
                e.anchor,
                escape(&e.qualified_name)
            );
        }
        out.push_str("</ul>\n</li>\n");
    }
    out.push_str("</ul>\n</body>\n</html>\n");
    out
}
