#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use sha2::{Digest, Sha256};
use walkdir::WalkDir;

pub fn tests_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests")
}

pub fn fixture(name: &str) -> PathBuf {
    tests_dir().join("fixtures").join(name)
}

pub fn golden(name: &str) -> PathBuf {
    tests_dir().join("golden").join(name)
}

/// Runs the CLI in-process; returns the exit status and captured stderr.
pub fn run(args: &[&str]) -> (i32, String) {
    let mut err = Vec::new();
    let mut argv = vec!["flowdoc"];
    argv.extend_from_slice(args);
    let code = flowdoc::cli::run(argv, &mut err);
    (code, String::from_utf8(err).unwrap())
}

pub fn run_all(out: &Path, sources: &[PathBuf]) -> (i32, String) {
    let mut args = vec![
        "all".to_string(),
        "--out-dir".into(),
        out.display().to_string(),
    ];
    args.extend(sources.iter().map(|s| s.display().to_string()));
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    run(&args)
}

/// Relative paths of all files under `dir`, sorted.
pub fn files(dir: &Path) -> Vec<PathBuf> {
    let mut out: Vec<PathBuf> = WalkDir::new(dir)
        .into_iter()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_type().is_file())
        .map(|e| e.path().strip_prefix(dir).unwrap().to_path_buf())
        .collect();
    out.sort();
    out
}

/// SHA-256 over every relative path and file content under `dir`.
pub fn tree_hash(dir: &Path) -> String {
    let mut h = Sha256::new();
    for rel in files(dir) {
        h.update(rel.to_string_lossy().as_bytes());
        h.update([0]);
        h.update(fs::read(dir.join(&rel)).unwrap());
        h.update([0]);
    }
    h.finalize().iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Copies every file of `from` into `to`, keeping relative paths.
pub fn copy_tree(from: &Path, to: &Path) {
    for rel in files(from) {
        let dst = to.join(&rel);
        fs::create_dir_all(dst.parent().unwrap()).unwrap();
        fs::copy(from.join(&rel), dst).unwrap();
    }
}

/// Random annotated C++ functions for property checks.
pub struct FunctionGen<'r, R: Rng> {
    rng: &'r mut R,
    next_id: usize,
    pub out: String,
}

impl<'r, R: Rng> FunctionGen<'r, R> {
    pub fn new(rng: &'r mut R) -> Self {
        FunctionGen {
            rng,
            next_id: 0,
            out: String::new(),
        }
    }

    fn id(&mut self) -> usize {
        self.next_id += 1;
        self.next_id
    }

    fn indent(&mut self, depth: usize) {
        for _ in 0..depth {
            self.out.push_str("  ");
        }
    }

    fn line(&mut self, depth: usize, text: &str) {
        self.indent(depth);
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn action(&mut self, depth: usize) {
        let zoom = *[0, 0, 1, 1, 2, 3].choose(self.rng).unwrap();
        let id = self.id();
        let parallel = if self.rng.gen_bool(0.15) {
            "<parallel> "
        } else {
            ""
        };
        // repeated texts exercise the multiset comparison
        let text = if self.rng.gen_bool(0.1) {
            "repeat me".to_string()
        } else {
            format!("step {id}")
        };
        self.line(depth, &format!("//${zoom} {parallel}{text}"));
    }

    fn plain(&mut self, depth: usize) {
        let id = self.id();
        match self.rng.gen_range(0..4) {
            0 => self.line(depth, &format!("x += {id};")),
            1 => self.line(depth, &format!("helper_{id}(x);  //$")),
            2 => self.line(depth, &format!("// note {id}")),
            _ => self.line(depth, &format!("obj.call_{id}();")),
        }
    }

    fn maybe_desc(&mut self, depth: usize) {
        if self.rng.gen_bool(0.3) {
            let id = self.id();
            self.line(depth, &format!("//$ [condition {id}]"));
        }
    }

    fn block(&mut self, depth: usize, budget: usize) {
        let n = self.rng.gen_range(1..=4);
        for _ in 0..n {
            self.stmt(depth, budget);
        }
    }

    fn stmt(&mut self, depth: usize, budget: usize) {
        let structured = budget > 0 && self.rng.gen_bool(0.3);
        if !structured {
            if self.rng.gen_bool(0.5) {
                self.action(depth);
            }
            self.plain(depth);
            if self.rng.gen_bool(0.05) {
                self.maybe_desc(depth);
                self.line(depth, "return x;");
            }
            return;
        }
        let id = self.id();
        match self.rng.gen_range(0..4) {
            0 => {
                self.maybe_desc(depth);
                self.line(depth, &format!("if (x > {id}) {{"));
                self.block(depth + 1, budget - 1);
                if self.rng.gen_bool(0.4) {
                    self.line(depth, "}");
                    self.maybe_desc(depth);
                    self.line(depth, &format!("else if (x < -{id}) {{"));
                    self.block(depth + 1, budget - 1);
                }
                if self.rng.gen_bool(0.5) {
                    self.line(depth, "}");
                    self.maybe_desc(depth);
                    self.line(depth, "else {");
                    self.block(depth + 1, budget - 1);
                }
                self.line(depth, "}");
            }
            1 => {
                self.maybe_desc(depth);
                self.line(depth, &format!("while (x < {id}) {{"));
                self.block(depth + 1, budget - 1);
                self.line(depth, "}");
            }
            2 => {
                self.maybe_desc(depth);
                self.line(depth, &format!("for (int i = 0; i < {id}; ++i) {{"));
                self.block(depth + 1, budget - 1);
                self.line(depth, "}");
            }
            _ => {
                self.maybe_desc(depth);
                self.line(depth, "do {");
                self.block(depth + 1, budget - 1);
                self.line(depth, &format!("}} while (x != {id});"));
            }
        }
    }

    /// A function `name` that carries at least one action annotation.
    pub fn function(mut self, name: &str) -> String {
        self.out = format!("int {name}(int x) {{\n");
        self.action(1);
        self.block(1, 3);
        self.line(1, "return x;");
        self.out.push_str("}\n");
        self.out
    }
}

/// What a piece of a generated scanner case is expected to scan as.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expect {
    Code,
    LineComment,
    Annotation,
    BlockComment,
    StringLit,
    RawString,
    CharLit,
    Preprocessor,
}

#[derive(Debug, Clone)]
pub struct Piece {
    pub expect: Expect,
    pub text: String,
    pub offset: usize,
}

const NOISE: &[&str] = &[
    "{",
    "}",
    "//$",
    "/*",
    "*/",
    "//",
    "$",
    " ",
    "x",
    "'",
    "#",
    ";",
    "(",
    ")",
    "[",
    "]",
    "<parallel>",
];

fn noise<R: Rng>(rng: &mut R, forbid: &[&str], allow_newline: bool) -> String {
    let mut s = String::new();
    for _ in 0..rng.gen_range(0..8) {
        let mut piece = *NOISE.choose(rng).unwrap();
        if allow_newline && rng.gen_bool(0.1) {
            piece = "\n";
        }
        s.push_str(piece);
    }
    // drop anything that would close the construct early
    for f in forbid {
        while s.contains(f) {
            s = s.replace(f, "");
        }
    }
    s
}

/// One random source text made of pieces with known token kinds.
pub fn scanner_case<R: Rng>(rng: &mut R) -> (String, Vec<Piece>) {
    let mut text = String::new();
    let mut pieces = Vec::new();
    let mut push = |text: &mut String, expect: Expect, s: String| {
        pieces.push(Piece {
            expect,
            text: s.clone(),
            offset: text.len(),
        });
        text.push_str(&s);
    };
    for _ in 0..rng.gen_range(1..20) {
        match rng.gen_range(0..9) {
            0 => {
                let code = [
                    "int x = 1; ",
                    "{ ",
                    "} ",
                    "f(a, b); ",
                    "a / b; ",
                    "x<y; ",
                    "n = 1'000; ",
                    "\n",
                ]
                .choose(rng)
                .unwrap();
                push(&mut text, Expect::Code, code.to_string());
            }
            1 => {
                let body = noise(rng, &["\n"], false);
                let lead = *["// ", "///", "//!", "// $"].choose(rng).unwrap();
                push(&mut text, Expect::LineComment, format!("{lead}{body}"));
                push(&mut text, Expect::Code, "\n".into());
            }
            2 => {
                let body = noise(rng, &["\n"], false);
                push(&mut text, Expect::Annotation, format!("//${body}"));
                push(&mut text, Expect::Code, "\n".into());
            }
            3 => {
                let body = noise(rng, &["*/"], true);
                // "/*" followed by a body starting with "/" must not form "*/"
                push(&mut text, Expect::BlockComment, format!("/* {body} */"));
            }
            4 => {
                let body = noise(rng, &["\"", "'"], false);
                let esc = if rng.gen_bool(0.3) { "\\\"" } else { "" };
                push(
                    &mut text,
                    Expect::StringLit,
                    format!("\"{esc}{body}{esc}\""),
                );
            }
            5 => {
                let body = noise(rng, &[")x\""], true);
                let fake_end = if rng.gen_bool(0.5) { ")\"" } else { "" };
                push(&mut text, Expect::Code, " R".into());
                push(
                    &mut text,
                    Expect::RawString,
                    format!("\"x({body}{fake_end})x\""),
                );
            }
            6 => {
                let c = *["'{'", "'}'", "'\"'", "'\\''", "'/'", "'$'"]
                    .choose(rng)
                    .unwrap();
                push(&mut text, Expect::CharLit, c.to_string());
            }
            7 => {
                push(&mut text, Expect::Code, "\n".into());
                push(&mut text, Expect::Preprocessor, "#include <vector>".into());
                push(&mut text, Expect::Code, "\n".into());
            }
            _ => push(&mut text, Expect::Code, " ".into()),
        }
    }
    (text, pieces)
}
