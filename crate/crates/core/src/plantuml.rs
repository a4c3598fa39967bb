//! PlantUML activity-diagram text for a projected [`ActivityTree`].
//!
//! Output uses the current activity syntax:
//!
//! | node        | text                                              |
//! |-------------|---------------------------------------------------|
//! | action      | `:text\n[[href callee()]];` (one physical line)   |
//! | branch      | `if (label) then (yes)` / `elseif` / `else (no)` / `endif` |
//! | pre-test    | `while (label)` ... `endwhile`                    |
//! | post-test   | `repeat` ... `repeat while (label)`               |
//! | fork        | `fork` / `fork again` / `end fork`                |
//! | stop        | optional `-> description;` then `stop`            |
//!
//! Nesting is indented by two spaces.

use std::path::PathBuf;

use crate::activity::{ANode, ActionNode, ActivityTree};
use crate::cxx::LoopStyle;

/// Directory, relative to the output root, holding diagram texts and images.
pub const AUX_DIR: &str = "aux_files";

/// Link prefix from `aux_files/*.svg` back to the pages.
pub const LINK_BASE: &str = "../";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiagramText {
    pub content: String,
    /// Relative to the output root, e.g. `aux_files/aux__VINCIA__shower__zoom0.txt`.
    pub path: PathBuf,
}

/// `aux_files/<stem>__<anchor>__zoom<k>.txt`
pub fn diagram_path(stem: &str, anchor: &str, zoom: u32) -> PathBuf {
    PathBuf::from(AUX_DIR).join(format!("{stem}__{anchor}__zoom{zoom}.txt"))
}

/// Escapes user text so PlantUML shows it literally: creole markers, tag-like
/// `<x`, tildes and backslashes.
pub fn escape_label(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    for (i, &c) in chars.iter().enumerate() {
        let next = chars.get(i + 1).copied();
        match c {
            '~' => out.push_str("<U+007E>"),
            '\\' => out.push_str("<U+005C>"),
            '<' if next.is_some_and(|n| {
                n.is_ascii_alphabetic() || matches!(n, '/' | '&' | '~' | '\\')
            }) =>
            {
                out.push_str("~<")
            }
            '>' if out.ends_with('>') => out.push_str("~>"),
            '*' | '/' | '"' | '_' | '-' | '[' | ']' | '<' | '>' if next == Some(c) => {
                out.push('~');
                out.push(c);
            }
            _ => out.push(c),
        }
    }
    out
}

/// Inverse of [`escape_label`].
pub fn unescape_label(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(c) = rest.chars().next() {
        if let Some(r) = rest.strip_prefix("<U+007E>") {
            out.push('~');
            rest = r;
        } else if let Some(r) = rest.strip_prefix("<U+005C>") {
            out.push('\\');
            rest = r;
        } else if c == '~' {
            rest = &rest[1..];
            if let Some(n) = rest.chars().next() {
                out.push(n);
                rest = &rest[n.len_utf8()..];
            }
        } else {
            out.push(c);
            rest = &rest[c.len_utf8()..];
        }
    }
    out
}

/// Renders a projected tree. `link_base` is prepended to every hyperlink.
pub fn emit(tree: &ActivityTree, link_base: &str) -> String {
    let mut out = String::from("@startuml\n");
    if !crate::activity::links(tree).is_empty() {
        out.push_str("skinparam svgLinkTarget _top\n");
    }
    out.push_str("start\n");
    let mut w = Writer { out, link_base };
    w.seq(&tree.root, 0);
    let mut out = w.out;
    if !matches!(tree.root.last(), Some(ANode::Stop(_))) {
        out.push_str("stop\n");
    }
    out.push_str("@enduml\n");
    out
}

struct Writer<'a> {
    out: String,
    link_base: &'a str,
}

impl Writer<'_> {
    fn line(&mut self, depth: usize, text: &str) {
        for _ in 0..depth {
            self.out.push_str("  ");
        }
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn seq(&mut self, nodes: &[ANode], depth: usize) {
        for node in nodes {
            self.node(node, depth);
        }
    }

    fn action_label(&self, a: &ActionNode) -> String {
        let mut parts = Vec::new();
        if !a.text.is_empty() || a.highlighted_calls.is_empty() {
            parts.push(escape_label(&a.text));
        }
        for call in &a.highlighted_calls {
            parts.push(match &call.link {
                Some(link) => format!(
                    "[[{} {}]]",
                    link.href(self.link_base),
                    escape_label(&call.display_text)
                ),
                None => escape_label(&call.display_text),
            });
        }
        parts.join("\\n")
    }

    fn node(&mut self, node: &ANode, depth: usize) {
        match node {
            ANode::Action(a) => {
                let label = self.action_label(a);
                self.line(depth, &format!(":{label};"));
            }
            ANode::Branch { arms, else_arm } => {
                for (n, arm) in arms.iter().enumerate() {
                    let kw = if n == 0 { "if" } else { "elseif" };
                    self.line(
                        depth,
                        &format!("{kw} ({}) then (yes)", escape_label(&arm.label)),
                    );
                    self.seq(&arm.body, depth + 1);
                }
                if let Some(arm) = else_arm {
                    self.line(depth, &format!("else ({})", escape_label(&arm.label)));
                    self.seq(&arm.body, depth + 1);
                }
                self.line(depth, "endif");
            }
            ANode::Loop { style, label, body } => {
                let label = escape_label(label);
                match style {
                    LoopStyle::While | LoopStyle::For => {
                        self.line(depth, &format!("while ({label})"));
                        self.seq(body, depth + 1);
                        self.line(depth, "endwhile");
                    }
                    LoopStyle::DoWhile => {
                        self.line(depth, "repeat");
                        self.seq(body, depth + 1);
                        self.line(depth, &format!("repeat while ({label})"));
                    }
                }
            }
            ANode::Fork(branches) => {
                for (n, branch) in branches.iter().enumerate() {
                    self.line(depth, if n == 0 { "fork" } else { "fork again" });
                    self.seq(branch, depth + 1);
                }
                self.line(depth, "end fork");
            }
            ANode::Stop(desc) => {
                if let Some(desc) = desc {
                    self.line(depth, &format!("-> {};", escape_label(desc)));
                }
                self.line(depth, "stop");
            }
        }
    }
}
