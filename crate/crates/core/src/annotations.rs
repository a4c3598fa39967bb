//! The `//$` annotation language.
//!
//! ```text
//! annotation  := "//$" ws* zoom? ws* "<parallel>"? ws* description
//! zoom        := digit+            (must be followed by whitespace, `<`, `[` or the end)
//! description := "[" text "]"      condition / return description
//!              | text              action description
//! ```
//!
//! A `//$` that follows code on the same line highlights the calls on that
//! line instead of describing an action.

use crate::cxx::{LexKind, Lexeme};
use crate::diag::Diagnostic;
use crate::scanner::{Token, TokenKind};

pub const MARKER: &str = "//$";
const PARALLEL_TAG: &str = "<parallel>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AnnotationKind {
    Action,
    ConditionDesc,
    ReturnDesc,
    CallHighlight,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Annotation {
    pub kind: AnnotationKind,
    pub zoom: u32,
    pub parallel: bool,
    pub text: String,
    pub line: u32,
    /// Byte offset of the comment.
    pub offset: usize,
    /// For condition and return descriptions, the offset of the keyword the
    /// description binds to.
    pub target: Option<usize>,
}

/// What the first code after a standalone comment starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NextStmt {
    /// `if`, `else`, `while`, `for` or `do`.
    ControlHeader,
    Return,
    Other,
}

impl NextStmt {
    pub fn of(lexeme: Option<&Lexeme<'_>>) -> NextStmt {
        match lexeme {
            Some(l) if l.kind == LexKind::Ident => match l.text {
                "if" | "else" | "while" | "for" | "do" => NextStmt::ControlHeader,
                "return" => NextStmt::Return,
                _ => NextStmt::Other,
            },
            _ => NextStmt::Other,
        }
    }
}

/// Parsed `⟨options⟩ description` part of an annotation.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Parts<'a> {
    zoom: u32,
    parallel: bool,
    text: &'a str,
}

fn parse_parts(body: &str) -> Parts<'_> {
    let mut rest = body.trim_start();
    let mut zoom = 0;
    let digits = rest.len() - rest.trim_start_matches(|c: char| c.is_ascii_digit()).len();
    if digits > 0 {
        let after = &rest[digits..];
        let delimited = after.is_empty()
            || after.starts_with(char::is_whitespace)
            || after.starts_with('<')
            || after.starts_with('[');
        if let (true, Ok(z)) = (delimited, rest[..digits].parse::<u32>()) {
            zoom = z;
            rest = after.trim_start();
        }
    }
    let mut parallel = false;
    if let Some(after) = rest.strip_prefix(PARALLEL_TAG) {
        parallel = true;
        rest = after.trim_start();
    }
    Parts {
        zoom,
        parallel,
        text: rest.trim_end(),
    }
}

fn bracketed(text: &str) -> Option<&str> {
    text.strip_prefix('[')
        .and_then(|t| t.strip_suffix(']'))
        .map(str::trim)
}

/// Classifies one line comment. Returns `None` for ordinary comments.
///
/// `next` is the kind of the first code after the comment and `standalone`
/// is false when code precedes the comment on its line. A bracketed
/// description with nothing to describe is kept as an action and reported.
pub fn classify(
    comment: &Token,
    next: NextStmt,
    standalone: bool,
    diagnostics: &mut Vec<Diagnostic>,
) -> Option<Annotation> {
    if comment.kind != TokenKind::LineComment {
        return None;
    }
    let body = comment.text.strip_prefix(MARKER)?;
    let parts = parse_parts(body);
    let mut ann = Annotation {
        kind: AnnotationKind::Action,
        zoom: parts.zoom,
        parallel: parts.parallel,
        text: parts.text.to_string(),
        line: comment.line,
        offset: comment.offset,
        target: None,
    };
    if !standalone {
        ann.kind = AnnotationKind::CallHighlight;
        ann.zoom = 0;
        ann.parallel = false;
        return Some(ann);
    }
    if let Some(inner) = bracketed(parts.text) {
        match next {
            NextStmt::ControlHeader => {
                ann.kind = AnnotationKind::ConditionDesc;
                ann.text = inner.to_string();
            }
            NextStmt::Return => {
                ann.kind = AnnotationKind::ReturnDesc;
                ann.text = inner.to_string();
            }
            NextStmt::Other => diagnostics.push(
                Diagnostic::warning(format!(
                    "bracketed annotation `{}` does not precede a control statement or return; kept as an action",
                    parts.text
                ))
                .at_line(comment.line),
            ),
        }
        if ann.kind != AnnotationKind::Action {
            ann.zoom = 0;
            ann.parallel = false;
        }
    }
    Some(ann)
}

/// Classifies every `//$` comment strictly inside the byte range
/// `(body_start, body_end)` of a function body.
pub fn collect(
    tokens: &[Token],
    lexemes: &[Lexeme<'_>],
    body_start: usize,
    body_end: usize,
) -> (Vec<Annotation>, Vec<Diagnostic>) {
    let mut annotations = Vec::new();
    let mut diagnostics = Vec::new();
    let first = tokens.partition_point(|t| t.offset <= body_start);
    for tok in tokens[first..].iter().take_while(|t| t.offset < body_end) {
        if tok.kind != TokenKind::LineComment || !tok.text.starts_with(MARKER) {
            continue;
        }
        let idx = lexemes.partition_point(|l| l.offset < tok.offset);
        let standalone = idx == 0 || lexemes[idx - 1].line != tok.line;
        let next = lexemes.get(idx).filter(|l| l.offset < body_end);
        let kind = NextStmt::of(next);
        if let Some(mut ann) = classify(tok, kind, standalone, &mut diagnostics) {
            if matches!(
                ann.kind,
                AnnotationKind::ConditionDesc | AnnotationKind::ReturnDesc
            ) {
                ann.target = next.map(|l| l.offset);
            }
            annotations.push(ann);
        }
    }
    (annotations, diagnostics)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cxx::{find_definitions, lex};
    use crate::scanner::scan;
    use std::path::Path;

    fn comment(text: &str) -> Token {
        Token {
            kind: TokenKind::LineComment,
            text: text.to_string(),
            line: 1,
            col: 1,
            offset: 0,
        }
    }

    fn one(text: &str, next: NextStmt, standalone: bool) -> Option<Annotation> {
        classify(&comment(text), next, standalone, &mut Vec::new())
    }

    #[test]
    fn actions() {
        let a = one("//$ ask user whether to proceed", NextStmt::Other, true).unwrap();
        assert_eq!(a.kind, AnnotationKind::Action);
        assert_eq!((a.zoom, a.parallel), (0, false));
        assert_eq!(a.text, "ask user whether to proceed");

        let a = one("//$1 1) prepare system of partons", NextStmt::Other, true).unwrap();
        assert_eq!(
            (a.zoom, a.text.as_str()),
            (1, "1) prepare system of partons")
        );

        let a = one("//$ <parallel> action 1", NextStmt::Other, true).unwrap();
        assert_eq!((a.zoom, a.parallel, a.text.as_str()), (0, true, "action 1"));

        let a = one("//$2<parallel>x", NextStmt::Other, true).unwrap();
        assert_eq!((a.zoom, a.parallel, a.text.as_str()), (2, true, "x"));
    }

    #[test]
    fn zoom_needs_a_delimiter() {
        let a = one("//$ 1) prepare", NextStmt::Other, true).unwrap();
        assert_eq!((a.zoom, a.text.as_str()), (0, "1) prepare"));
        let a = one("//$1st step", NextStmt::Other, true).unwrap();
        assert_eq!((a.zoom, a.text.as_str()), (0, "1st step"));
        let a = one("//$ 12 fine detail", NextStmt::Other, true).unwrap();
        assert_eq!((a.zoom, a.text.as_str()), (12, "fine detail"));
        let a = one("//$99999999999999 x", NextStmt::Other, true).unwrap();
        assert_eq!(a.zoom, 0);
    }

    #[test]
    fn every_single_digit_zoom() {
        for k in 0..=9u32 {
            let a = one(&format!("//${k} text"), NextStmt::Other, true).unwrap();
            assert_eq!(a.zoom, k);
            assert_eq!(a.text, "text");
        }
    }

    #[test]
    fn postfix_is_call_highlight() {
        let a = one("//$   ", NextStmt::Other, false).unwrap();
        assert_eq!(a.kind, AnnotationKind::CallHighlight);
        assert_eq!(a.text, "");
    }

    #[test]
    fn condition_and_return_descriptions() {
        let a = one(
            "//$ [subcondition for false]",
            NextStmt::ControlHeader,
            true,
        )
        .unwrap();
        assert_eq!(a.kind, AnnotationKind::ConditionDesc);
        assert_eq!(a.text, "subcondition for false");
        let a = one("//$ [return value] ", NextStmt::Return, true).unwrap();
        assert_eq!(a.kind, AnnotationKind::ReturnDesc);
        assert_eq!(a.text, "return value");
        // plain text before a header is still an action
        let a = one("//$ check input", NextStmt::ControlHeader, true).unwrap();
        assert_eq!(a.kind, AnnotationKind::Action);
    }

    #[test]
    fn orphan_brackets_are_demoted() {
        let mut diags = Vec::new();
        let a = classify(&comment("//$ [lonely]"), NextStmt::Other, true, &mut diags).unwrap();
        assert_eq!(a.kind, AnnotationKind::Action);
        assert_eq!(a.text, "[lonely]");
        assert_eq!(diags.len(), 1);
        assert!(diags[0].message.contains("[lonely]"));
    }

    #[test]
    fn ordinary_comments_are_ignored() {
        for text in [
            "// pointer to the object VINCIA",
            "/// doxygen $x$",
            "//! module doc",
            "// $ spaced",
            "///$ three slashes",
        ] {
            assert_eq!(one(text, NextStmt::Other, true), None, "{text}");
        }
        let mut block = comment("/*$ not a form */");
        block.kind = TokenKind::BlockComment;
        assert_eq!(
            classify(&block, NextStmt::Other, true, &mut Vec::new()),
            None
        );
    }

    #[test]
    fn collect_binds_positions() {
        let src = "void f(int a) {\n  //$ [positive]\n\n  if (a > 0) { g(); }  //$\n  //$ [zero]\n  return 0; // $ no\n  x(); //$ h\n}\n";
        let toks = scan(src).tokens;
        let lx = lex(&toks);
        let def = &find_definitions(&toks, Path::new("t.cpp")).defs[0];
        let (anns, diags) = collect(&toks, &lx, def.body_start, def.body_end);
        assert!(diags.is_empty());
        let kinds: Vec<_> = anns.iter().map(|a| a.kind).collect();
        assert_eq!(
            kinds,
            vec![
                AnnotationKind::ConditionDesc,
                AnnotationKind::CallHighlight,
                AnnotationKind::ReturnDesc,
                AnnotationKind::CallHighlight
            ]
        );
        assert_eq!(anns[0].target, src.find("if"));
        assert_eq!(anns[2].target, src.find("return"));
        assert_eq!(anns[3].text, "h");
    }

    #[test]
    fn intervening_code_breaks_condition_binding() {
        let src = "void f(int a) {\n  //$ [positive]\n  a++;\n  if (a > 0) { g(); }\n}\n";
        let toks = scan(src).tokens;
        let lx = lex(&toks);
        let def = &find_definitions(&toks, Path::new("t.cpp")).defs[0];
        let (anns, diags) = collect(&toks, &lx, def.body_start, def.body_end);
        assert_eq!(anns[0].kind, AnnotationKind::Action);
        assert_eq!(diags.len(), 1);
    }
}
