//! Lossless, comment-aware tokenizer for C++ source text.
//!
//! The scanner only separates comments, literals and preprocessor lines from
//! ordinary code. It never interprets keywords or identifiers; that happens in
//! [`crate::cxx`] on the `Code` tokens.

use std::fmt;

/// Classification of a source fragment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Code,
    LineComment,
    BlockComment,
    StringLit,
    CharLit,
    Preprocessor,
}

/// A classified slice of the input. `offset` is the byte offset of `text`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub line: u32,
    pub col: u32,
    pub offset: usize,
}

impl Token {
    pub fn end(&self) -> usize {
        self.offset + self.text.len()
    }

    pub fn is_comment(&self) -> bool {
        matches!(self.kind, TokenKind::LineComment | TokenKind::BlockComment)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScanError {
    UnterminatedBlockComment { line: u32 },
    UnterminatedStringLiteral { line: u32 },
    UnterminatedCharLiteral { line: u32 },
}

impl ScanError {
    pub fn line(&self) -> u32 {
        match *self {
            ScanError::UnterminatedBlockComment { line }
            | ScanError::UnterminatedStringLiteral { line }
            | ScanError::UnterminatedCharLiteral { line } => line,
        }
    }
}

impl fmt::Display for ScanError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScanError::UnterminatedBlockComment { .. } => f.write_str("unterminated block comment"),
            ScanError::UnterminatedStringLiteral { .. } => {
                f.write_str("unterminated string literal")
            }
            ScanError::UnterminatedCharLiteral { .. } => {
                f.write_str("unterminated character literal")
            }
        }
    }
}

/// Tokens plus any recoverable scanning errors.
#[derive(Debug, Clone, Default)]
pub struct Scan {
    pub tokens: Vec<Token>,
    pub errors: Vec<ScanError>,
}

/// Splits `source` into classified tokens whose texts concatenate back to
/// `source` exactly.
pub fn scan(source: &str) -> Scan {
    Scanner::new(source).run()
}

struct Scanner<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    line: u32,
    col: u32,
    /// Start of the pending `Code` run, with its position.
    code_start: usize,
    code_line: u32,
    code_col: u32,
    /// True while only whitespace has been seen since the last newline.
    at_line_start: bool,
    out: Scan,
}

impl<'a> Scanner<'a> {
    fn new(src: &'a str) -> Self {
        Scanner {
            src,
            bytes: src.as_bytes(),
            pos: 0,
            line: 1,
            col: 1,
            code_start: 0,
            code_line: 1,
            code_col: 1,
            at_line_start: true,
            out: Scan::default(),
        }
    }

    fn peek(&self, ahead: usize) -> Option<u8> {
        self.bytes.get(self.pos + ahead).copied()
    }

    /// Advances over one UTF-8 character, keeping line/col current.
    fn bump(&mut self) {
        let Some(ch) = self.src[self.pos..].chars().next() else {
            return;
        };
        self.pos += ch.len_utf8();
        if ch == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
    }

    fn bump_n(&mut self, n: usize) {
        for _ in 0..n {
            self.bump();
        }
    }

    fn flush_code(&mut self) {
        if self.code_start < self.pos {
            self.out.tokens.push(Token {
                kind: TokenKind::Code,
                text: self.src[self.code_start..self.pos].to_string(),
                line: self.code_line,
                col: self.code_col,
                offset: self.code_start,
            });
        }
    }

    fn reset_code(&mut self) {
        self.code_start = self.pos;
        self.code_line = self.line;
        self.code_col = self.col;
    }

    fn emit(&mut self, kind: TokenKind, start: usize, line: u32, col: u32) {
        self.out.tokens.push(Token {
            kind,
            text: self.src[start..self.pos].to_string(),
            line,
            col,
            offset: start,
        });
        self.reset_code();
    }

    fn run(mut self) -> Scan {
        while let Some(b) = self.peek(0) {
            match b {
                b'#' if self.at_line_start => self.lex_with(Self::preprocessor),
                b'/' if self.peek(1) == Some(b'/') => self.lex_with(Self::line_comment),
                b'/' if self.peek(1) == Some(b'*') => self.lex_with(Self::block_comment),
                b'"' if self.raw_string_prefix() => self.lex_with(Self::raw_string),
                b'"' => self.lex_with(Self::string_lit),
                b'\'' if !self.is_digit_separator() => self.lex_with(Self::char_lit),
                b'\n' => {
                    self.at_line_start = true;
                    self.bump();
                }
                b' ' | b'\t' | b'\r' | b'\x0b' | b'\x0c' => self.bump(),
                _ => {
                    self.at_line_start = false;
                    self.bump();
                }
            }
        }
        self.flush_code();
        self.out
    }

    fn lex_with(&mut self, f: fn(&mut Self) -> TokenKind) {
        self.flush_code();
        let (start, line, col) = (self.pos, self.line, self.col);
        let kind = f(self);
        self.emit(kind, start, line, col);
        // Comments and literals never begin a preprocessor line.
        self.at_line_start = false;
    }

    fn preprocessor(&mut self) -> TokenKind {
        while let Some(b) = self.peek(0) {
            match b {
                b'\\' if self.peek(1) == Some(b'\n') => self.bump_n(2),
                b'\\' if self.peek(1) == Some(b'\r') && self.peek(2) == Some(b'\n') => {
                    self.bump_n(3)
                }
                b'\n' => break,
                b'\r' if self.peek(1) == Some(b'\n') => break,
                _ => self.bump(),
            }
        }
        TokenKind::Preprocessor
    }

    fn line_comment(&mut self) -> TokenKind {
        while let Some(b) = self.peek(0) {
            if b == b'\n' || (b == b'\r' && self.peek(1) == Some(b'\n')) {
                break;
            }
            self.bump();
        }
        TokenKind::LineComment
    }

    fn block_comment(&mut self) -> TokenKind {
        let line = self.line;
        self.bump_n(2);
        loop {
            match self.peek(0) {
                None => {
                    self.out
                        .errors
                        .push(ScanError::UnterminatedBlockComment { line });
                    break;
                }
                Some(b'*') if self.peek(1) == Some(b'/') => {
                    self.bump_n(2);
                    break;
                }
                Some(_) => self.bump(),
            }
        }
        TokenKind::BlockComment
    }

    /// Quoted literal ending at `quote`; unterminated literals stop at the end
    /// of the line, since a plain literal cannot span lines.
    fn quoted(&mut self, quote: u8) -> bool {
        self.bump();
        loop {
            match self.peek(0) {
                None | Some(b'\n') => return false,
                Some(b'\r') if self.peek(1) == Some(b'\n') => return false,
                Some(b'\\') => {
                    self.bump();
                    if self.peek(0) == Some(b'\r') && self.peek(1) == Some(b'\n') {
                        self.bump();
                    }
                    self.bump();
                }
                Some(b) if b == quote => {
                    self.bump();
                    return true;
                }
                Some(_) => self.bump(),
            }
        }
    }

    fn string_lit(&mut self) -> TokenKind {
        let line = self.line;
        if !self.quoted(b'"') {
            self.out
                .errors
                .push(ScanError::UnterminatedStringLiteral { line });
        }
        TokenKind::StringLit
    }

    fn char_lit(&mut self) -> TokenKind {
        let line = self.line;
        if !self.quoted(b'\'') {
            self.out
                .errors
                .push(ScanError::UnterminatedCharLiteral { line });
        }
        TokenKind::CharLit
    }

    /// The alphanumeric run immediately before `pos` inside the pending code.
    fn preceding_word(&self) -> &str {
        let code = &self.src[self.code_start..self.pos];
        let start = code
            .char_indices()
            .rev()
            .take_while(|(_, c)| c.is_alphanumeric() || *c == '_' || *c == '\'')
            .last()
            .map_or(code.len(), |(i, _)| i);
        &code[start..]
    }

    /// `1'000'000` style separators inside numeric literals.
    fn is_digit_separator(&self) -> bool {
        self.preceding_word()
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_digit())
    }

    /// True when the `"` at `pos` opens a raw string (`R"`, `u8R"`, `LR"`, ...).
    fn raw_string_prefix(&self) -> bool {
        matches!(self.preceding_word(), "R" | "u8R" | "uR" | "UR" | "LR")
            && self.raw_delimiter().is_some()
    }

    fn raw_delimiter(&self) -> Option<&'a str> {
        let rest = &self.src[self.pos + 1..];
        let open = rest.find('(')?;
        let delim = &rest[..open];
        let valid = delim.len() <= 16
            && delim
                .chars()
                .all(|c| !c.is_whitespace() && c != ')' && c != '\\' && c != '"');
        valid.then_some(delim)
    }

    fn raw_string(&mut self) -> TokenKind {
        let line = self.line;
        let delim = self.raw_delimiter().unwrap_or_default();
        let closing = format!("){delim}\"");
        let body_start = self.pos + 2 + delim.len();
        match self.src[body_start..].find(&closing) {
            Some(rel) => {
                let end = body_start + rel + closing.len();
                while self.pos < end {
                    self.bump();
                }
            }
            None => {
                self.out
                    .errors
                    .push(ScanError::UnterminatedStringLiteral { line });
                while self.pos < self.src.len() {
                    self.bump();
                }
            }
        }
        TokenKind::StringLit
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<(TokenKind, String)> {
        scan(src)
            .tokens
            .into_iter()
            .map(|t| (t.kind, t.text))
            .collect()
    }

    fn joined(src: &str) -> String {
        scan(src).tokens.iter().map(|t| t.text.as_str()).collect()
    }

    #[test]
    fn trailing_annotation_splits_in_two() {
        assert_eq!(
            kinds("int a; //$ do x"),
            vec![
                (TokenKind::Code, "int a; ".into()),
                (TokenKind::LineComment, "//$ do x".into())
            ]
        );
    }

    #[test]
    fn string_with_comment_text_is_one_literal() {
        let src = r#"std::cout << "the parton shower code would go here";"#;
        let toks = kinds(src);
        assert_eq!(
            toks.iter()
                .filter(|(k, _)| *k == TokenKind::StringLit)
                .count(),
            1
        );
        assert!(toks
            .iter()
            .all(|(k, _)| !matches!(k, TokenKind::LineComment | TokenKind::BlockComment)));
        let src = r#"char* s = "//$ not an annotation";"#;
        let toks = kinds(src);
        assert_eq!(
            toks.iter()
                .filter(|(k, _)| *k == TokenKind::LineComment)
                .count(),
            0
        );
        assert!(toks
            .iter()
            .any(|(k, t)| *k == TokenKind::StringLit && t.contains("//$")));
    }

    #[test]
    fn escaped_quote_does_not_terminate() {
        let toks = kinds(r#"s = "a\"b //$ c"; //$ real"#);
        assert_eq!(toks[1], (TokenKind::StringLit, r#""a\"b //$ c""#.into()));
        assert_eq!(toks[3], (TokenKind::LineComment, "//$ real".into()));
    }

    #[test]
    fn raw_strings() {
        let src = "auto s = R\"x(\")// }\n{)x\"; // c";
        let toks = kinds(src);
        assert_eq!(toks[1], (TokenKind::StringLit, "\"x(\")// }\n{)x\"".into()));
        assert_eq!(toks[0].1, "auto s = R");
        assert_eq!(
            toks.last().unwrap(),
            &(TokenKind::LineComment, "// c".into())
        );
        // `R` as an ordinary identifier before a normal string
        let toks = kinds("FOO_R \"a\"");
        assert_eq!(toks[1].0, TokenKind::StringLit);
    }

    #[test]
    fn preprocessor_with_continuation() {
        let src = "  #define X(a) \\\n   a // not a comment token\nint x;";
        let toks = kinds(src);
        assert_eq!(toks[0], (TokenKind::Code, "  ".into()));
        assert_eq!(toks[1].0, TokenKind::Preprocessor);
        assert!(toks[1].1.ends_with("not a comment token"));
        assert_eq!(toks[2], (TokenKind::Code, "\nint x;".into()));
    }

    #[test]
    fn hash_mid_line_is_code() {
        let toks = kinds("a # b");
        assert_eq!(toks, vec![(TokenKind::Code, "a # b".into())]);
    }

    #[test]
    fn digit_separators_are_not_char_literals() {
        let toks = kinds("int n = 1'000'000; char c = 'x'; auto w = u'y';");
        let chars: Vec<_> = toks
            .iter()
            .filter(|(k, _)| *k == TokenKind::CharLit)
            .map(|(_, t)| t.as_str())
            .collect();
        assert_eq!(chars, vec!["'x'", "'y'"]);
    }

    #[test]
    fn unterminated_block_comment_reports_and_swallows_rest() {
        let s = scan("int a;\n/* open\n{ //$ x\n");
        assert_eq!(
            s.errors,
            vec![ScanError::UnterminatedBlockComment { line: 2 }]
        );
        assert_eq!(s.tokens.last().unwrap().kind, TokenKind::BlockComment);
        assert_eq!(
            joined("int a;\n/* open\n{ //$ x\n"),
            "int a;\n/* open\n{ //$ x\n"
        );
    }

    #[test]
    fn unterminated_string_stops_at_line_end() {
        let s = scan("a = \"oops\n//$ next\n");
        assert_eq!(
            s.errors,
            vec![ScanError::UnterminatedStringLiteral { line: 1 }]
        );
        assert!(s
            .tokens
            .iter()
            .any(|t| t.kind == TokenKind::LineComment && t.text == "//$ next"));
    }

    #[test]
    fn crlf_positions() {
        let s = scan("a;\r\n// c\r\nb;");
        let c = s
            .tokens
            .iter()
            .find(|t| t.kind == TokenKind::LineComment)
            .unwrap();
        assert_eq!((c.line, c.col), (2, 1));
        assert_eq!(c.text, "// c");
        assert_eq!(joined("a;\r\n// c\r\nb;"), "a;\r\n// c\r\nb;");
    }

    #[test]
    fn columns_count_characters() {
        let s = scan("é = 1; // x");
        let c = s.tokens.last().unwrap();
        assert_eq!((c.line, c.col), (1, 8));
    }
}
