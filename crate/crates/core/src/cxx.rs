//! Restricted structural parser for C++.
//!
//! This is not a C++ front end. It recognizes function definitions with a
//! small declaration grammar and, inside a body, the handful of control
//! constructs that activity diagrams can show. Everything else is kept as
//! opaque `Plain` statements.

use std::path::{Path, PathBuf};

use crate::diag::Diagnostic;
use crate::scanner::{Token, TokenKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LexKind {
    Ident,
    Number,
    Punct,
    /// A string or character literal, kept whole.
    Literal,
}

/// A C++ lexeme taken from `Code` or literal tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lexeme<'a> {
    pub kind: LexKind,
    pub text: &'a str,
    pub offset: usize,
    pub line: u32,
}

impl Lexeme<'_> {
    pub fn is(&self, s: &str) -> bool {
        self.kind != LexKind::Literal && self.text == s
    }

    pub fn end(&self) -> usize {
        self.offset + self.text.len()
    }

    fn end_line(&self) -> u32 {
        self.line + self.text.matches('\n').count() as u32
    }

    fn is_ident(&self) -> bool {
        self.kind == LexKind::Ident
    }
}

/// Splits code tokens into identifiers, numbers and punctuation. Comments and
/// preprocessor lines produce nothing.
pub fn lex(tokens: &[Token]) -> Vec<Lexeme<'_>> {
    let mut out = Vec::new();
    for tok in tokens {
        match tok.kind {
            TokenKind::StringLit | TokenKind::CharLit => out.push(Lexeme {
                kind: LexKind::Literal,
                text: &tok.text,
                offset: tok.offset,
                line: tok.line,
            }),
            TokenKind::Code => lex_code(tok, &mut out),
            _ => {}
        }
    }
    out
}

fn is_ident_start(c: char) -> bool {
    c == '_' || c.is_alphabetic()
}

fn is_ident_continue(c: char) -> bool {
    c == '_' || c.is_alphanumeric()
}

fn lex_code<'a>(tok: &'a Token, out: &mut Vec<Lexeme<'a>>) {
    let text = tok.text.as_str();
    let mut line = tok.line;
    let mut chars = text.char_indices().peekable();
    while let Some((start, c)) = chars.next() {
        let kind;
        let mut end = start + c.len_utf8();
        if c == '\n' {
            line += 1;
            continue;
        } else if c.is_whitespace() {
            continue;
        } else if is_ident_start(c) {
            kind = LexKind::Ident;
            while let Some(&(i, n)) = chars.peek() {
                if !is_ident_continue(n) {
                    break;
                }
                end = i + n.len_utf8();
                chars.next();
            }
        } else if c.is_ascii_digit()
            || (c == '.' && text[end..].starts_with(|d: char| d.is_ascii_digit()))
        {
            kind = LexKind::Number;
            let mut prev = c;
            while let Some(&(i, n)) = chars.peek() {
                let exponent_sign = matches!(n, '+' | '-') && matches!(prev, 'e' | 'E' | 'p' | 'P');
                if !(is_ident_continue(n) || n == '.' || n == '\'' || exponent_sign) {
                    break;
                }
                prev = n;
                end = i + n.len_utf8();
                chars.next();
            }
        } else {
            kind = LexKind::Punct;
            if matches!(text.get(start..start + 2), Some("::" | "->" | "==" | "!=")) {
                chars.next();
                end = start + 2;
            }
        }
        out.push(Lexeme {
            kind,
            text: &text[start..end],
            offset: tok.offset + start,
            line,
        });
    }
}

/// Identifiers that can precede `(` without naming a function.
const NOT_CALLABLE: &[&str] = &[
    "if",
    "while",
    "for",
    "switch",
    "return",
    "sizeof",
    "alignof",
    "alignas",
    "decltype",
    "catch",
    "static_assert",
    "noexcept",
    "typeid",
    "throw",
    "new",
    "delete",
    "case",
    "do",
    "else",
    "int",
    "char",
    "bool",
    "float",
    "double",
    "long",
    "short",
    "unsigned",
    "signed",
    "void",
    "auto",
    "__attribute__",
    "__declspec",
    "defined",
    "co_return",
    "co_await",
    "co_yield",
    "requires",
    "operator",
];

fn is_callable_name(lx: &Lexeme<'_>) -> bool {
    lx.is_ident() && !NOT_CALLABLE.contains(&lx.text)
}

/// A call expression found on a source line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallSite {
    /// The callee as written, e.g. `vinciaOBJ->shower`.
    pub callee_text: String,
    /// Best-effort name used for lookup: the `::`-qualified name for free
    /// calls, the bare method name for member calls.
    pub normalized_name: String,
    /// Called through `.` or `->`.
    pub member: bool,
    pub line: u32,
    pub offset: usize,
}

/// Finds every `name(` / `a::b(` / `obj->m(` / `obj.m(` pattern.
pub fn find_calls(lexemes: &[Lexeme<'_>]) -> Vec<CallSite> {
    let mut calls = Vec::new();
    for i in 0..lexemes.len().saturating_sub(1) {
        let name = &lexemes[i];
        if !is_callable_name(name) || !lexemes[i + 1].is("(") {
            continue;
        }
        if i > 0 && lexemes[i - 1].is("operator") {
            continue;
        }
        // Walk back over `a::b::` and `obj->` / `obj.` prefixes.
        let mut start = i;
        let mut member = false;
        let mut qualified_from = i;
        while start >= 2 {
            let sep = &lexemes[start - 1];
            let prev = &lexemes[start - 2];
            if !prev.is_ident() {
                break;
            }
            if sep.is("::") {
                if !member {
                    qualified_from = start - 2;
                }
            } else if sep.is("->") || sep.is(".") {
                member = true;
            } else {
                break;
            }
            start -= 2;
        }
        if start >= 1 && lexemes[start - 1].is("::") && !member {
            // leading global qualifier, `::f(`
            start -= 1;
        }
        let callee_text: String = lexemes[start..=i].iter().map(|l| l.text).collect();
        let normalized_name: String = lexemes[qualified_from..=i].iter().map(|l| l.text).collect();
        calls.push(CallSite {
            callee_text,
            normalized_name,
            member,
            line: name.line,
            offset: name.offset,
        });
    }
    calls
}

/// A recognized function or method definition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionDef {
    pub qualified_name: String,
    pub signature_text: String,
    /// Byte offset of the opening `{` of the body.
    pub body_start: usize,
    /// Byte offset of the matching `}`.
    pub body_end: usize,
    pub start_line: u32,
    pub end_line: u32,
    pub file: PathBuf,
}

#[derive(Debug, Clone, Default)]
pub struct Definitions {
    pub defs: Vec<FunctionDef>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Index of the `close` matching the `open` at `i`, bounded by `limit`.
fn matching(lex: &[Lexeme<'_>], i: usize, open: &str, close: &str, limit: usize) -> Option<usize> {
    let mut depth = 0usize;
    for (j, lx) in lex.iter().enumerate().take(limit).skip(i) {
        if lx.is(open) {
            depth += 1;
        } else if lx.is(close) {
            depth -= 1;
            if depth == 0 {
                return Some(j);
            }
        }
    }
    None
}

/// Like [`matching`] for `<...>`; parentheses shield their contents.
fn matching_angle(lex: &[Lexeme<'_>], i: usize, limit: usize) -> Option<usize> {
    let mut angle = 0usize;
    let mut paren = 0usize;
    for (j, lx) in lex.iter().enumerate().take(limit).skip(i) {
        match lx.text {
            "(" if lx.kind == LexKind::Punct => paren += 1,
            ")" if lx.kind == LexKind::Punct => paren = paren.saturating_sub(1),
            "<" if paren == 0 && lx.kind == LexKind::Punct => angle += 1,
            ">" if paren == 0 && lx.kind == LexKind::Punct => {
                angle -= 1;
                if angle == 0 {
                    return Some(j);
                }
            }
            "{" | ";" if lx.kind == LexKind::Punct => return None,
            _ => {}
        }
    }
    None
}

/// Source text of `lex` joined with single spaces wherever the source had
/// whitespace or comments between lexemes.
pub fn joined_text(lex: &[Lexeme<'_>]) -> String {
    let mut out = String::new();
    for (k, lx) in lex.iter().enumerate() {
        if k > 0 && lex[k - 1].end() < lx.offset {
            out.push(' ');
        }
        out.push_str(lx.text);
    }
    out
}

/// Recognizes function definitions in one file's token stream.
pub fn find_definitions(tokens: &[Token], file: &Path) -> Definitions {
    let lexemes = lex(tokens);
    let mut finder = DefFinder {
        lex: &lexemes,
        file,
        out: Definitions::default(),
        quals: Vec::new(),
    };
    let mut i = 0;
    finder.scope(&mut i, false);
    finder.out
}

struct DefFinder<'l, 'a> {
    lex: &'l [Lexeme<'a>],
    file: &'l Path,
    out: Definitions,
    quals: Vec<String>,
}

enum Header {
    Function {
        name: String,
        sig_end: usize,
    },
    Class(Option<String>),
    /// `{` is an initializer or enum body; the declaration continues to `;`.
    Initializer,
    Opaque,
}

impl DefFinder<'_, '_> {
    fn unbalanced(&mut self, line: u32) {
        self.out
            .diagnostics
            .push(Diagnostic::error("unbalanced braces").at_line(line));
    }

    /// Walks declarations until the closing `}` of this scope (when `nested`)
    /// or end of input.
    fn scope(&mut self, i: &mut usize, nested: bool) {
        let lex = self.lex;
        while *i < lex.len() {
            let lx = lex[*i];
            if lx.is("}") {
                if nested {
                    *i += 1;
                    return;
                }
                self.unbalanced(lx.line);
                *i += 1;
            } else if lx.is(";") {
                *i += 1;
            } else if lx.is("namespace") {
                self.namespace(i);
            } else if lx.is("extern")
                && lex.get(*i + 1).is_some_and(|n| n.kind == LexKind::Literal)
                && lex.get(*i + 2).is_some_and(|n| n.is("{"))
            {
                *i += 3;
                self.scope(i, true);
            } else if matches!(lx.text, "public" | "private" | "protected")
                && lex.get(*i + 1).is_some_and(|n| n.is(":"))
            {
                *i += 2;
            } else {
                self.declaration(i);
            }
        }
        if nested {
            self.unbalanced(lex.last().map_or(1, |l| l.line));
        }
    }

    fn namespace(&mut self, i: &mut usize) {
        let lex = self.lex;
        let mut j = *i + 1;
        let mut names = Vec::new();
        while let Some(lx) = lex.get(j) {
            if lx.is_ident() && lx.text != "inline" {
                names.push(lx.text.to_string());
            } else if !(lx.is("::") || lx.is("inline")) {
                break;
            }
            j += 1;
        }
        match lex.get(j) {
            Some(lx) if lx.is("{") => {
                let depth = self.quals.len();
                self.quals.extend(names);
                *i = j + 1;
                self.scope(i, true);
                self.quals.truncate(depth);
            }
            _ => {
                // alias or malformed: skip to the end of the declaration
                while *i < lex.len() && !lex[*i].is(";") {
                    *i += 1;
                }
            }
        }
    }

    fn declaration(&mut self, i: &mut usize) {
        let lex = self.lex;
        let start = *i;
        let mut j = *i;
        let mut depth = 0usize;
        let mut init_list = false;
        while j < lex.len() {
            let lx = lex[j];
            match lx.text {
                "(" | "[" if lx.kind == LexKind::Punct => depth += 1,
                ")" | "]" if lx.kind == LexKind::Punct => depth = depth.saturating_sub(1),
                ";" if depth == 0 && lx.kind == LexKind::Punct => {
                    *i = j + 1;
                    return;
                }
                "}" if depth == 0 && lx.kind == LexKind::Punct => {
                    // Belongs to the enclosing scope.
                    *i = j;
                    return;
                }
                ":" if depth == 0
                    && j > start
                    && (lex[j - 1].is(")") || lex[j - 1].is("noexcept")) =>
                {
                    init_list = true;
                }
                "{" if depth == 0 && lx.kind == LexKind::Punct => {
                    // Brace-initialized member in a constructor initializer list.
                    if init_list && (lex[j - 1].is_ident() || lex[j - 1].is(">")) {
                        match matching(lex, j, "{", "}", lex.len()) {
                            Some(close) => {
                                j = close + 1;
                                continue;
                            }
                            None => {
                                self.unbalanced(lx.line);
                                *i = lex.len();
                                return;
                            }
                        }
                    }
                    match self.classify_header(start, j) {
                        Header::Class(name) => {
                            let depth = self.quals.len();
                            self.quals.extend(name);
                            *i = j + 1;
                            self.scope(i, true);
                            self.quals.truncate(depth);
                            return;
                        }
                        Header::Function { name, sig_end } => {
                            let Some(close) = matching(lex, j, "{", "}", lex.len()) else {
                                self.unbalanced(lx.line);
                                *i = lex.len();
                                return;
                            };
                            let mut qualified = self.quals.clone();
                            qualified.push(name);
                            self.out.defs.push(FunctionDef {
                                qualified_name: qualified.join("::"),
                                signature_text: joined_text(&lex[start..sig_end]),
                                body_start: lx.offset,
                                body_end: lex[close].offset,
                                start_line: lex[start].line,
                                end_line: lex[close].line,
                                file: self.file.to_path_buf(),
                            });
                            *i = close + 1;
                            return;
                        }
                        header => {
                            let Some(close) = matching(lex, j, "{", "}", lex.len()) else {
                                self.unbalanced(lx.line);
                                *i = lex.len();
                                return;
                            };
                            if matches!(header, Header::Opaque) {
                                *i = close + 1;
                                return;
                            }
                            j = close + 1;
                            continue;
                        }
                    }
                }
                _ => {}
            }
            j += 1;
        }
        *i = lex.len();
    }

    /// Decides what the `{` at `brace` opens, given the header `start..brace`.
    fn classify_header(&self, start: usize, brace: usize) -> Header {
        let lex = self.lex;
        let mut k = start;
        if lex[k].is("template") && lex.get(k + 1).is_some_and(|l| l.is("<")) {
            match matching_angle(lex, k + 1, brace) {
                Some(close) => k = close + 1,
                None => return Header::Opaque,
            }
        }
        let header = &lex[k..brace];
        let mut depth = 0usize;
        for (n, lx) in header.iter().enumerate() {
            match lx.text {
                "(" | "[" if lx.kind == LexKind::Punct => depth += 1,
                ")" | "]" if lx.kind == LexKind::Punct => depth = depth.saturating_sub(1),
                "operator" => break,
                "=" if depth == 0 && lx.kind == LexKind::Punct => return Header::Initializer,
                "enum" if depth == 0 => return Header::Initializer,
                "class" | "struct" | "union" if depth == 0 => {
                    if let Some(h) = class_head(&header[n + 1..]) {
                        return h;
                    }
                }
                _ => {}
            }
        }
        self.function_head(k, brace).unwrap_or(Header::Opaque)
    }

    fn function_head(&self, k: usize, brace: usize) -> Option<Header> {
        let lex = self.lex;
        let mut p = k;
        while p < brace {
            let lx = lex[p];
            if lx.is("operator") {
                // operator name runs up to the parameter list; `operator()` keeps
                // its own parentheses.
                let mut q = p + 1;
                if lex.get(q).is_some_and(|l| l.is("("))
                    && lex.get(q + 1).is_some_and(|l| l.is(")"))
                {
                    q += 2;
                }
                while q < brace && !lex[q].is("(") {
                    q += 1;
                }
                if q >= brace {
                    return None;
                }
                let name_start = qualifier_start(lex, p, k);
                let name: String = lex[name_start..q].iter().map(|l| l.text).collect();
                return self.finish_function(name, q, brace);
            }
            if lx.is("(") {
                let named = p > k && is_callable_name(&lex[p - 1]);
                if named {
                    let name_at = p - 1;
                    // destructors: `~A` or `A::~A`
                    let base = if name_at > k && lex[name_at - 1].is("~") {
                        name_at - 1
                    } else {
                        name_at
                    };
                    let name_start = qualifier_start(lex, base, k);
                    let name: String = lex[name_start..=name_at].iter().map(|l| l.text).collect();
                    return self.finish_function(name, p, brace);
                }
                p = matching(lex, p, "(", ")", brace)? + 1;
                continue;
            }
            p += 1;
        }
        None
    }

    fn finish_function(&self, name: String, paren: usize, brace: usize) -> Option<Header> {
        let lex = self.lex;
        let close = matching(lex, paren, "(", ")", brace)?;
        let trailer = &lex[close + 1..brace];
        if trailer.iter().any(|l| l.is("=")) && !trailer.iter().any(|l| l.is(":")) {
            return None;
        }
        let name = name.trim_start_matches("::").to_string();
        if name.is_empty() {
            return None;
        }
        // The signature stops before a constructor initializer list.
        let sig_end = trailer
            .iter()
            .position(|l| l.is(":"))
            .map_or(brace, |n| close + 1 + n);
        Some(Header::Function { name, sig_end })
    }
}

/// Start of the `A::B<T>::name` chain ending at `name_at`.
fn qualifier_start(lex: &[Lexeme<'_>], name_at: usize, floor: usize) -> usize {
    let mut s = name_at;
    loop {
        if s >= floor + 2 && lex[s - 1].is("::") {
            let mut prev = s - 2;
            if lex[prev].is(">") {
                // skip template arguments backwards
                let mut depth = 0usize;
                let mut q = prev;
                loop {
                    if lex[q].is(">") {
                        depth += 1;
                    } else if lex[q].is("<") {
                        depth -= 1;
                        if depth == 0 {
                            break;
                        }
                    }
                    if q == floor {
                        return s;
                    }
                    q -= 1;
                }
                if q == floor {
                    return s;
                }
                prev = q - 1;
            }
            if lex[prev].is_ident() {
                s = prev;
                continue;
            }
        }
        if s > floor && lex[s - 1].is("::") {
            return s - 1;
        }
        return s;
    }
}

/// After `class`/`struct`/`union`: a definition iff the name (or nothing) is
/// followed by `{`, a base clause, or `final`.
fn class_head(rest: &[Lexeme<'_>]) -> Option<Header> {
    let mut n = 0;
    // attributes and alignment specifiers
    while n < rest.len() {
        if rest[n].is("[") && rest.get(n + 1).is_some_and(|l| l.is("[")) {
            n = matching(rest, n, "[", "]", rest.len())? + 1;
        } else if rest[n].is("alignas") || rest[n].is("__attribute__") || rest[n].is("__declspec") {
            n = matching(rest, n + 1, "(", ")", rest.len())? + 1;
        } else {
            break;
        }
    }
    let Some(first) = rest.get(n) else {
        return Some(Header::Class(None));
    };
    if !first.is_ident() {
        return None;
    }
    let mut name = first.text.to_string();
    n += 1;
    while rest.get(n).is_some_and(|l| l.is("::")) && rest.get(n + 1).is_some_and(|l| l.is_ident()) {
        name = rest[n + 1].text.to_string();
        n += 2;
    }
    if rest.get(n).is_some_and(|l| l.is("<")) {
        n = matching_angle(rest, n, rest.len())? + 1;
    }
    match rest.get(n) {
        None => Some(Header::Class(Some(name))),
        Some(l) if l.is(":") || l.is("final") => Some(Header::Class(Some(name))),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub start_line: u32,
    pub end_line: u32,
    /// Byte range `[start, end)` in the source.
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn contains_offset(&self, offset: usize) -> bool {
        self.start <= offset && offset < self.end
    }

    pub fn contains_line(&self, line: u32) -> bool {
        self.start_line <= line && line <= self.end_line
    }

    fn of(lex: &[Lexeme<'_>]) -> Span {
        match (lex.first(), lex.last()) {
            (Some(first), Some(last)) => Span {
                start_line: first.line,
                end_line: last.end_line(),
                start: first.offset,
                end: last.end(),
            },
            _ => Span::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
    /// Calls appearing in this node's own code (headers for control nodes).
    pub calls: Vec<CallSite>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopStyle {
    While,
    DoWhile,
    For,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StmtKind {
    Plain,
    Block(Vec<Stmt>),
    /// `if` / `else if` ... / `else`, flattened.
    If(Vec<IfArm>),
    Loop {
        style: LoopStyle,
        /// Condition, or the whole `init; cond; incr` header for `for`.
        condition: String,
        body: Box<Stmt>,
    },
    Return,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IfArm {
    /// `None` for the final `else`.
    pub condition: Option<String>,
    /// Offset of the arm's leading keyword (`if` or `else`).
    pub header: usize,
    pub header_line: u32,
    pub body: Stmt,
}

impl Stmt {
    pub fn children(&self) -> Vec<&Stmt> {
        match &self.kind {
            StmtKind::Block(items) => items.iter().collect(),
            StmtKind::If(arms) => arms.iter().map(|a| &a.body).collect(),
            StmtKind::Loop { body, .. } => vec![body],
            StmtKind::Plain | StmtKind::Return => Vec::new(),
        }
    }

    /// Offsets of keywords a condition description can bind to.
    pub fn headers(&self) -> Vec<usize> {
        match &self.kind {
            StmtKind::If(arms) => arms.iter().map(|a| a.header).collect(),
            StmtKind::Loop { .. } => vec![self.span.start],
            _ => Vec::new(),
        }
    }

    /// Visits this node and all descendants in source order.
    pub fn walk<'s>(&'s self, f: &mut impl FnMut(&'s Stmt)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }
}

#[derive(Debug, Clone)]
pub struct ParsedBody {
    pub root: Stmt,
    pub diagnostics: Vec<Diagnostic>,
}

/// Builds the statement tree of `def`'s body.
pub fn parse_body(def: &FunctionDef, tokens: &[Token]) -> ParsedBody {
    let lexemes = lex(tokens);
    parse_body_lexed(def, &lexemes)
}

pub(crate) fn parse_body_lexed(def: &FunctionDef, lexemes: &[Lexeme<'_>]) -> ParsedBody {
    let open = lexemes.partition_point(|l| l.offset < def.body_start);
    let close = lexemes.partition_point(|l| l.offset < def.body_end);
    let mut parser = BodyParser {
        lex: lexemes,
        pos: open + 1,
        diagnostics: Vec::new(),
    };
    let items = parser.items(close);
    let root = Stmt {
        kind: StmtKind::Block(items),
        span: Span::of(&lexemes[open..=close.min(lexemes.len() - 1)]),
        calls: Vec::new(),
    };
    ParsedBody {
        root,
        diagnostics: parser.diagnostics,
    }
}

struct BodyParser<'l, 'a> {
    lex: &'l [Lexeme<'a>],
    pos: usize,
    diagnostics: Vec<Diagnostic>,
}

impl BodyParser<'_, '_> {
    fn peek_is(&self, s: &str, end: usize) -> bool {
        self.pos < end && self.lex[self.pos].is(s)
    }

    fn items(&mut self, end: usize) -> Vec<Stmt> {
        let mut out = Vec::new();
        while self.pos < end {
            if let Some(s) = self.statement(end) {
                out.push(s);
            }
        }
        out
    }

    fn statement(&mut self, end: usize) -> Option<Stmt> {
        let lx = self.lex[self.pos];
        match lx.text {
            _ if lx.kind == LexKind::Literal => Some(self.plain(end)),
            ";" => {
                self.pos += 1;
                None
            }
            "{" => Some(self.block(end)),
            "if" => Some(self.if_chain(end)),
            "while" => Some(self.pre_test_loop(end, LoopStyle::While)),
            "for" => Some(self.pre_test_loop(end, LoopStyle::For)),
            "do" => Some(self.do_while(end)),
            _ if lx.is_ident()
                && !matches!(lx.text, "default" | "case")
                && self.lex.get(self.pos + 1).is_some_and(|n| n.is(":"))
                && self.pos + 1 < end =>
            {
                // statement label
                self.pos += 2;
                None
            }
            "return" => {
                let mut s = self.plain(end);
                s.kind = StmtKind::Return;
                Some(s)
            }
            _ => Some(self.plain(end)),
        }
    }

    fn block(&mut self, end: usize) -> Stmt {
        let open = self.pos;
        let close = matching(self.lex, open, "{", "}", end).unwrap_or(end);
        self.pos = open + 1;
        let items = self.items(close);
        self.pos = (close + 1).min(end.max(close));
        let last = close.min(self.lex.len() - 1).max(open);
        Stmt {
            kind: StmtKind::Block(items),
            span: Span::of(&self.lex[open..=last]),
            calls: Vec::new(),
        }
    }

    /// A statement body that is always returned as a `Block`.
    fn body(&mut self, end: usize) -> Stmt {
        if self.pos >= end {
            return Stmt {
                kind: StmtKind::Block(Vec::new()),
                span: Span::of(
                    &self.lex[self.pos.min(self.lex.len()) - 1..self.pos.min(self.lex.len())],
                ),
                calls: Vec::new(),
            };
        }
        if self.lex[self.pos].is("{") {
            return self.block(end);
        }
        let at = self.pos;
        match self.statement(end) {
            Some(s) => Stmt {
                span: s.span,
                kind: StmtKind::Block(vec![s]),
                calls: Vec::new(),
            },
            None => Stmt {
                kind: StmtKind::Block(Vec::new()),
                span: Span::of(&self.lex[at..=at]),
                calls: Vec::new(),
            },
        }
    }

    fn malformed(&mut self, line: u32, what: &str) -> Diagnostic {
        let d = Diagnostic::warning(format!(
            "malformed `{what}` header; treated as a plain statement"
        ))
        .at_line(line);
        self.diagnostics.push(d.clone());
        d
    }

    /// Parenthesized header starting at `self.pos`; returns its inner lexemes.
    fn paren_header(&mut self, end: usize) -> Option<(usize, usize)> {
        if !self.peek_is("(", end) {
            return None;
        }
        let close = matching(self.lex, self.pos, "(", ")", end)?;
        let inner = (self.pos + 1, close);
        self.pos = close + 1;
        Some(inner)
    }

    fn if_chain(&mut self, end: usize) -> Stmt {
        let start = self.pos;
        let kw = self.lex[start];
        self.pos += 1;
        if self.peek_is("constexpr", end) {
            self.pos += 1;
        }
        let Some((c0, c1)) = self.paren_header(end) else {
            self.malformed(kw.line, "if");
            self.pos = start;
            return self.plain(end);
        };
        let calls = find_calls(&self.lex[c0..c1]);
        let condition = joined_text(&self.lex[c0..c1]);
        let body = self.body(end);
        let mut arms = vec![IfArm {
            condition: Some(condition),
            header: kw.offset,
            header_line: kw.line,
            body,
        }];
        let mut header_calls = calls;
        if self.peek_is("else", end) {
            let else_kw = self.lex[self.pos];
            self.pos += 1;
            if self.peek_is("if", end) {
                let nested = self.if_chain(end);
                match nested.kind {
                    StmtKind::If(mut rest) => {
                        rest[0].header = else_kw.offset;
                        rest[0].header_line = else_kw.line;
                        header_calls.extend(nested.calls);
                        arms.extend(rest);
                    }
                    _ => {
                        // malformed `else if`: keep its text as the else body
                        arms.push(IfArm {
                            condition: None,
                            header: else_kw.offset,
                            header_line: else_kw.line,
                            body: Stmt {
                                span: nested.span,
                                kind: StmtKind::Block(vec![nested]),
                                calls: Vec::new(),
                            },
                        });
                    }
                }
            } else {
                let body = self.body(end);
                arms.push(IfArm {
                    condition: None,
                    header: else_kw.offset,
                    header_line: else_kw.line,
                    body,
                });
            }
        }
        Stmt {
            kind: StmtKind::If(arms),
            span: Span::of(&self.lex[start..self.pos]),
            calls: header_calls,
        }
    }

    fn pre_test_loop(&mut self, end: usize, style: LoopStyle) -> Stmt {
        let start = self.pos;
        let kw = self.lex[start];
        self.pos += 1;
        let Some((c0, c1)) = self.paren_header(end) else {
            self.malformed(kw.line, kw.text);
            self.pos = start;
            return self.plain(end);
        };
        let calls = find_calls(&self.lex[c0..c1]);
        let condition = joined_text(&self.lex[c0..c1]);
        let body = self.body(end);
        Stmt {
            kind: StmtKind::Loop {
                style,
                condition,
                body: Box::new(body),
            },
            span: Span::of(&self.lex[start..self.pos]),
            calls,
        }
    }

    fn do_while(&mut self, end: usize) -> Stmt {
        let start = self.pos;
        let kw = self.lex[start];
        self.pos += 1;
        let body = self.body(end);
        let tail_ok = self.peek_is("while", end);
        let header = if tail_ok {
            self.pos += 1;
            self.paren_header(end)
        } else {
            None
        };
        let Some((c0, c1)) = header else {
            self.malformed(kw.line, "do");
            // Keep everything consumed so far as one opaque statement.
            let last = self.pos.saturating_sub(1).max(start);
            return Stmt {
                kind: StmtKind::Plain,
                span: Span::of(&self.lex[start..=last]),
                calls: find_calls(&self.lex[start..=last]),
            };
        };
        if self.peek_is(";", end) {
            self.pos += 1;
        }
        Stmt {
            kind: StmtKind::Loop {
                style: LoopStyle::DoWhile,
                condition: joined_text(&self.lex[c0..c1]),
                body: Box::new(body),
            },
            span: Span::of(&self.lex[start..self.pos]),
            calls: find_calls(&self.lex[c0..c1]),
        }
    }

    /// An opaque statement: up to `;` at nesting depth zero. A top-level brace
    /// group ends the statement unless the expression visibly continues.
    fn plain(&mut self, end: usize) -> Stmt {
        let start = self.pos;
        let mut depth = 0usize;
        while self.pos < end {
            let lx = self.lex[self.pos];
            if lx.kind != LexKind::Literal {
                match lx.text {
                    "(" | "[" => depth += 1,
                    ")" | "]" => depth = depth.saturating_sub(1),
                    ";" if depth == 0 => {
                        self.pos += 1;
                        break;
                    }
                    "{" => {
                        let close = matching(self.lex, self.pos, "{", "}", end).unwrap_or(end - 1);
                        self.pos = close + 1;
                        if depth == 0 {
                            let continues = self.pos < end
                                && matches!(
                                    self.lex[self.pos].text,
                                    ";" | "," | "." | "->" | "(" | "[" | ")" | "catch"
                                );
                            if !continues {
                                break;
                            }
                        }
                        continue;
                    }
                    _ => {}
                }
            }
            self.pos += 1;
        }
        let lex = &self.lex[start..self.pos];
        Stmt {
            kind: StmtKind::Plain,
            span: Span::of(lex),
            calls: find_calls(lex),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scanner::scan;

    pub(crate) const MAIN_CPP: &str = include_str!("../tests/fixtures/example/main.cpp");
    pub(crate) const AUX_H: &str = include_str!("../tests/fixtures/example/aux.h");
    pub(crate) const AUX_CPP: &str = include_str!("../tests/fixtures/example/src/aux.cpp");

    fn defs(src: &str) -> Definitions {
        find_definitions(&scan(src).tokens, Path::new("t.cpp"))
    }

    fn names(src: &str) -> Vec<String> {
        defs(src)
            .defs
            .into_iter()
            .map(|d| d.qualified_name)
            .collect()
    }

    fn body(src: &str) -> Stmt {
        let toks = scan(src).tokens;
        let d = find_definitions(&toks, Path::new("t.cpp"));
        parse_body(&d.defs[0], &toks).root
    }

    fn shape(s: &Stmt) -> String {
        match &s.kind {
            StmtKind::Plain => "P".into(),
            StmtKind::Return => "R".into(),
            StmtKind::Block(items) => {
                format!(
                    "[{}]",
                    items.iter().map(shape).collect::<Vec<_>>().join(" ")
                )
            }
            StmtKind::If(arms) => {
                let arms: Vec<_> = arms
                    .iter()
                    .map(|a| {
                        format!(
                            "{}:{}",
                            a.condition.as_deref().unwrap_or("else"),
                            shape(&a.body)
                        )
                    })
                    .collect();
                format!("If({})", arms.join(" | "))
            }
            StmtKind::Loop {
                style,
                condition,
                body,
            } => {
                format!("{style:?}({condition}){}", shape(body))
            }
        }
    }

    #[test]
    fn example_definitions() {
        let main = defs(MAIN_CPP);
        assert_eq!(main.defs.len(), 1);
        assert_eq!(main.defs[0].qualified_name, "main");
        assert_eq!(main.defs[0].signature_text, "int main()");
        assert!(names(AUX_H).is_empty());
        assert_eq!(names(AUX_CPP), vec!["VINCIA::shower"]);
    }

    #[test]
    fn non_ascii_punctuation() {
        let toks = scan("cout<<‘Hello’;").tokens;
        let texts: Vec<&str> = lex(&toks).iter().map(|l| l.text).collect();
        assert_eq!(texts, vec!["cout", "<", "<", "‘", "Hello", "’", ";"]);
    }

    #[test]
    fn body_braces_match() {
        let d = &defs(MAIN_CPP).defs[0];
        assert_eq!(&MAIN_CPP[d.body_start..d.body_start + 1], "{");
        assert_eq!(&MAIN_CPP[d.body_end..d.body_end + 1], "}");
        assert_eq!(d.end_line, 17);
    }

    #[test]
    fn main_body_shape() {
        let root = body(MAIN_CPP);
        assert_eq!(shape(&root), "[P P If(control_flag==1:[P P]) R]");
        let StmtKind::Block(items) = &root.kind else {
            panic!()
        };
        let StmtKind::If(arms) = &items[2].kind else {
            panic!()
        };
        let StmtKind::Block(inner) = &arms[0].body.kind else {
            panic!()
        };
        assert_eq!(inner[1].calls.len(), 1);
        assert_eq!(inner[1].calls[0].callee_text, "vinciaOBJ->shower");
        assert_eq!(inner[1].calls[0].normalized_name, "shower");
        assert!(inner[1].calls[0].member);
    }

    #[test]
    fn nested_if_else_chain_is_flattened() {
        let src = r#"
void activity_function(int a){
int c=2;
if(a>0) {
   cout<<"do 1"<< endl;
   if (a>c)
   {
     cout<<"do 4"<< endl;
    }
}
else if(a==-1) {
    cout<<"do 3"<< endl;
}
else {
cout<<"do nothing"<< endl;
}
return;
}"#;
        assert_eq!(
            shape(&body(src)),
            "[P If(a>0:[P If(a>c:[P])] | a==-1:[P] | else:[P]) R]"
        );
    }

    #[test]
    fn empty_body() {
        assert_eq!(shape(&body("void f(){}")), "[]");
    }

    #[test]
    fn loops() {
        let src = "int f(int n) { for (int i = 0; i < n; ++i) x(i); while (n--) { y(); } do { z(); } while (n > 0); return n; }";
        assert_eq!(
            shape(&body(src)),
            "[For(int i = 0; i < n; ++i)[P] While(n--)[P] DoWhile(n > 0)[P] R]"
        );
    }

    #[test]
    fn opaque_constructs_stay_plain() {
        let src = r#"void f() {
  switch (k) { case 1: if (a) b(); break; default: break; }
  auto g = [](int x) { if (x) return 1; return 0; };
  try { risky(); } catch (const std::exception& e) { log(e); }
  struct Local { void m() { if (q) {} } };
  goto done;
done:
  return;
}"#;
        assert_eq!(shape(&body(src)), "[P P P P P R]");
    }

    #[test]
    fn malformed_if_degrades() {
        let src = "void f() { if x > 0 { a(); } b(); }";
        let toks = scan(src).tokens;
        let d = find_definitions(&toks, Path::new("t.cpp"));
        let parsed = parse_body(&d.defs[0], &toks);
        assert_eq!(parsed.diagnostics.len(), 1);
        assert!(parsed.diagnostics[0].message.contains("malformed `if`"));
        assert_eq!(shape(&parsed.root), "[P P]");
    }

    #[test]
    fn qualified_names_from_context() {
        let src = r#"
namespace outer {
namespace {
int helper(int x) { return x; }
}
class Shape : public Base {
public:
    Shape() : w_(0), h_{1} { init(); }
    ~Shape() {}
    double area() const override { return w_ * h_; }
    bool operator==(const Shape& o) const { return true; }
    void declared_only();
private:
    struct Inner { void poke() noexcept {} };
};
template <typename T>
T twice(T v) { return v + v; }
void Shape::declared_only() {}
}
int table[] = {1, 2, 3};
enum class Color { Red, Green };
extern "C" { void c_api(void) {} }
Shape::~Shape() {}
"#;
        assert_eq!(
            names(src),
            vec![
                "outer::helper",
                "outer::Shape::Shape",
                "outer::Shape::~Shape",
                "outer::Shape::area",
                "outer::Shape::operator==",
                "outer::Shape::Inner::poke",
                "outer::twice",
                "outer::Shape::declared_only",
                "c_api",
                "Shape::~Shape",
            ]
        );
        let sigs: Vec<_> = defs(src)
            .defs
            .into_iter()
            .map(|d| d.signature_text)
            .collect();
        assert_eq!(sigs[1], "Shape()");
        assert_eq!(sigs[6], "template <typename T> T twice(T v)");
    }

    #[test]
    fn declarations_are_not_definitions() {
        let src = "void a(); int b(int) = delete; struct S; class C { void m(); }; int x = f(3);";
        assert!(names(src).is_empty());
    }

    #[test]
    fn elaborated_return_type() {
        assert_eq!(
            names("struct tm* make_tm(int x) { return 0; }"),
            vec!["make_tm"]
        );
    }

    #[test]
    fn unbalanced_braces_keep_earlier_definitions() {
        let d = defs("void ok() {}\nvoid broken() {\n if (x) {\n");
        assert_eq!(d.defs.len(), 1);
        assert_eq!(d.diagnostics.len(), 1);
        assert!(d.diagnostics[0].message.contains("unbalanced"));
        let d = defs("void ok() {}\n}\n");
        assert_eq!(d.defs.len(), 1);
        assert_eq!(d.diagnostics[0].line, Some(2));
    }

    #[test]
    fn braces_in_literals_and_comments_do_not_count() {
        let src =
            "void f() { const char* s = \"}\"; char c = '{'; /* } */ // }\n g(); }\nvoid h() {}";
        assert_eq!(names(src), vec!["f", "h"]);
    }

    #[test]
    fn call_detection() {
        let toks = scan(
            "x = a::b::f(1) + obj.m(2) + p->q->r(3) + g(h(4)) + ::top(5) + sizeof(x) + (int)(y);",
        )
        .tokens;
        let calls = find_calls(&lex(&toks));
        let got: Vec<_> = calls
            .iter()
            .map(|c| (c.callee_text.as_str(), c.normalized_name.as_str(), c.member))
            .collect();
        assert_eq!(
            got,
            vec![
                ("a::b::f", "a::b::f", false),
                ("obj.m", "m", true),
                ("p->q->r", "r", true),
                ("g", "g", false),
                ("h", "h", false),
                ("::top", "top", false),
            ]
        );
    }

    #[test]
    fn condition_text_collapses_whitespace() {
        let src = "void f() { if (  a &&\n      b /* why */ ) {} }";
        let root = body(src);
        let StmtKind::Block(items) = &root.kind else {
            panic!()
        };
        let StmtKind::If(arms) = &items[0].kind else {
            panic!()
        };
        assert_eq!(arms[0].condition.as_deref(), Some("a && b"));
    }
}
