//! Activity-diagram IR for one function, and its projection to a zoom level.
//!
//! Fusion rules:
//!
//! * an action annotation opens an action that absorbs the statements after
//!   it, up to the next action or rendered control structure;
//! * a control structure is rendered only if it contains an annotation (or a
//!   condition description binds to one of its headers); otherwise its code
//!   is absorbed like any other statement;
//! * every `return` in a rendered region is a stop node;
//! * runs of two or more `<parallel>` actions at equal zoom become a fork.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::Range;

use thiserror::Error;

use crate::annotations::{Annotation, AnnotationKind};
use crate::cxx::{CallSite, FunctionDef, LoopStyle, Stmt, StmtKind};
use crate::diag::Diagnostic;
use crate::error::Error;
use crate::flowdb::{FlowDb, Link, Resolution};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HighlightedCall {
    pub display_text: String,
    pub link: Option<Link>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionNode {
    pub text: String,
    pub zoom: u32,
    pub parallel: bool,
    pub highlighted_calls: Vec<HighlightedCall>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arm {
    pub label: String,
    pub body: Vec<ANode>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ANode {
    Action(ActionNode),
    /// `if` arms in order; `else_arm` is labeled with its description or `no`.
    Branch {
        arms: Vec<Arm>,
        else_arm: Option<Arm>,
    },
    Loop {
        style: LoopStyle,
        label: String,
        body: Vec<ANode>,
    },
    Fork(Vec<Vec<ANode>>),
    Stop(Option<String>),
}

impl ANode {
    pub fn has_else(&self) -> bool {
        matches!(
            self,
            ANode::Branch {
                else_arm: Some(_),
                ..
            }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivityTree {
    pub function: String,
    pub signature: String,
    pub root: Vec<ANode>,
    pub max_zoom: u32,
}

/// Visits every action in source order.
pub fn for_each_action<'a>(nodes: &'a [ANode], f: &mut impl FnMut(&'a ActionNode)) {
    for node in nodes {
        match node {
            ANode::Action(a) => f(a),
            ANode::Branch { arms, else_arm } => {
                for arm in arms.iter().chain(else_arm) {
                    for_each_action(&arm.body, f);
                }
            }
            ANode::Loop { body, .. } => for_each_action(body, f),
            ANode::Fork(branches) => {
                for b in branches {
                    for_each_action(b, f);
                }
            }
            ANode::Stop(_) => {}
        }
    }
}

impl ActivityTree {
    pub fn actions(&self) -> Vec<&ActionNode> {
        let mut out = Vec::new();
        for_each_action(&self.root, &mut |a| out.push(a));
        out
    }

    /// Keeps the actions with zoom ≤ `level`. Structures whose actions all
    /// disappear are dropped; stop nodes always stay.
    pub fn project(&self, level: u32) -> Result<ActivityTree, Error> {
        if level > self.max_zoom {
            return Err(Error::LevelOutOfRange {
                level,
                max: self.max_zoom,
            });
        }
        Ok(ActivityTree {
            root: project_seq(&self.root, level),
            ..self.clone()
        })
    }
}

/// Lowest zoom needed for anything in `nodes` to be visible; `None` when
/// the subtree has no actions or stops at all.
fn min_zoom(nodes: &[ANode]) -> Option<u32> {
    nodes
        .iter()
        .filter_map(|n| match n {
            ANode::Action(a) => Some(a.zoom),
            ANode::Stop(_) => Some(0),
            ANode::Branch { arms, else_arm } => arms
                .iter()
                .chain(else_arm)
                .filter_map(|a| min_zoom(&a.body))
                .min(),
            ANode::Loop { body, .. } => min_zoom(body),
            ANode::Fork(branches) => branches.iter().filter_map(|b| min_zoom(b)).min(),
        })
        .min()
}

fn visible(nodes: &[ANode], level: u32) -> bool {
    min_zoom(nodes).is_none_or(|z| z <= level)
}

fn project_seq(nodes: &[ANode], level: u32) -> Vec<ANode> {
    let mut out = Vec::new();
    for node in nodes {
        match node {
            ANode::Action(a) if a.zoom <= level => out.push(node.clone()),
            ANode::Action(_) => {}
            ANode::Stop(_) => out.push(node.clone()),
            ANode::Branch { .. } | ANode::Loop { .. } | ANode::Fork(_)
                if !visible(std::slice::from_ref(node), level) => {}
            ANode::Branch { arms, else_arm } => {
                let keep = |arm: &Arm| Arm {
                    label: arm.label.clone(),
                    body: project_seq(&arm.body, level),
                };
                out.push(ANode::Branch {
                    arms: arms.iter().map(keep).collect(),
                    else_arm: else_arm.as_ref().map(keep),
                });
            }
            ANode::Loop { style, label, body } => out.push(ANode::Loop {
                style: *style,
                label: label.clone(),
                body: project_seq(body, level),
            }),
            ANode::Fork(branches) => out.push(ANode::Fork(
                branches.iter().map(|b| project_seq(b, level)).collect(),
            )),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ActivityError {
    #[error("function has no annotations")]
    NoAnnotations,
}

#[derive(Debug, Clone)]
pub struct Built {
    pub tree: ActivityTree,
    pub diagnostics: Vec<Diagnostic>,
}

/// Fuses a function's statement tree and annotations into its activity.
pub fn build_activity(
    def: &FunctionDef,
    body: &Stmt,
    annotations: &[Annotation],
    db: &FlowDb,
) -> Result<Built, ActivityError> {
    if annotations.is_empty() {
        return Err(ActivityError::NoAnnotations);
    }
    let mut calls_by_line: BTreeMap<u32, Vec<&CallSite>> = BTreeMap::new();
    body.walk(&mut |s| {
        for c in &s.calls {
            calls_by_line.entry(c.line).or_default().push(c);
        }
    });
    for calls in calls_by_line.values_mut() {
        calls.sort_by_key(|c| c.offset);
        calls.dedup_by_key(|c| c.offset);
    }
    let mut lower = Lowerer {
        annotations,
        used: vec![false; annotations.len()],
        calls_by_line,
        db,
        diagnostics: Vec::new(),
    };
    let mut seq = Seq::default();
    lower.block_into(body, body.span.start..body.span.end, &mut seq);
    let mut root = group_forks(seq.nodes);
    if !matches!(root.last(), Some(ANode::Stop(_))) {
        root.push(ANode::Stop(None));
    }
    for (ann, used) in annotations.iter().zip(&lower.used) {
        if *used {
            continue;
        }
        let message = match ann.kind {
            AnnotationKind::CallHighlight => {
                "call highlight `//$` is not on a statement line; dropped"
            }
            AnnotationKind::ConditionDesc => {
                "condition description has no matching header; dropped"
            }
            AnnotationKind::ReturnDesc => "return description has no matching return; dropped",
            AnnotationKind::Action => "action annotation outside any statement block; dropped",
        };
        lower
            .diagnostics
            .push(Diagnostic::warning(message).at_line(ann.line));
    }
    let mut max_zoom = 0;
    for_each_action(&root, &mut |a| max_zoom = max_zoom.max(a.zoom));
    Ok(Built {
        tree: ActivityTree {
            function: def.qualified_name.clone(),
            signature: def.signature_text.clone(),
            root,
            max_zoom,
        },
        diagnostics: lower.diagnostics,
    })
}

#[derive(Default)]
struct Seq {
    nodes: Vec<ANode>,
    /// Index in `nodes` of the action currently absorbing statements.
    current: Option<usize>,
}

struct Lowerer<'a> {
    annotations: &'a [Annotation],
    used: Vec<bool>,
    calls_by_line: BTreeMap<u32, Vec<&'a CallSite>>,
    db: &'a FlowDb,
    diagnostics: Vec<Diagnostic>,
}

enum Event<'s> {
    Action(usize),
    Stmt(&'s Stmt),
}

impl<'a> Lowerer<'a> {
    fn rendered(&self, s: &Stmt) -> bool {
        if !matches!(
            s.kind,
            StmtKind::If(_) | StmtKind::Loop { .. } | StmtKind::Block(_)
        ) {
            return false;
        }
        let headers = s.headers();
        self.annotations.iter().any(|a| {
            s.span.contains_offset(a.offset)
                || (a.kind == AnnotationKind::ConditionDesc
                    && a.target.is_some_and(|t| headers.contains(&t)))
        })
    }

    fn description(&mut self, kind: AnnotationKind, target: usize) -> Option<String> {
        let idx = self
            .annotations
            .iter()
            .position(|a| a.kind == kind && a.target == Some(target))?;
        self.used[idx] = true;
        Some(self.annotations[idx].text.clone())
    }

    /// Lowers a fresh sequence (arm or loop body).
    fn sequence(&mut self, block: &Stmt, region: Range<usize>) -> Vec<ANode> {
        let mut seq = Seq::default();
        self.block_into(block, region, &mut seq);
        group_forks(seq.nodes)
    }

    /// Lowers the items of `block` into `seq`. Action annotations inside
    /// `region` but outside every item are interleaved by position.
    fn block_into(&mut self, block: &Stmt, region: Range<usize>, seq: &mut Seq) {
        let items: Vec<&Stmt> = match &block.kind {
            StmtKind::Block(items) => items.iter().collect(),
            _ => vec![block],
        };
        let mut events: Vec<(usize, Event<'_>)> = items
            .iter()
            .map(|s| (s.span.start, Event::Stmt(s)))
            .collect();
        for (idx, a) in self.annotations.iter().enumerate() {
            let direct = a.kind == AnnotationKind::Action
                && region.contains(&a.offset)
                && !items.iter().any(|s| s.span.contains_offset(a.offset));
            if direct && !self.used[idx] {
                events.push((a.offset, Event::Action(idx)));
            }
        }
        events.sort_by_key(|(at, _)| *at);
        for (_, event) in events {
            match event {
                Event::Action(idx) => {
                    self.used[idx] = true;
                    let a = &self.annotations[idx];
                    seq.nodes.push(ANode::Action(ActionNode {
                        text: a.text.clone(),
                        zoom: a.zoom,
                        parallel: a.parallel,
                        highlighted_calls: Vec::new(),
                    }));
                    seq.current = Some(seq.nodes.len() - 1);
                }
                Event::Stmt(s) => self.statement(s, seq),
            }
        }
    }

    fn statement(&mut self, s: &Stmt, seq: &mut Seq) {
        if matches!(s.kind, StmtKind::Return) {
            self.absorb_lines(s.span.start_line..=s.span.end_line, seq);
            let desc = self.description(AnnotationKind::ReturnDesc, s.span.start);
            seq.nodes.push(ANode::Stop(desc));
            seq.current = None;
            return;
        }
        if !self.rendered(s) {
            self.absorb_lines(s.span.start_line..=s.span.end_line, seq);
            return;
        }
        match &s.kind {
            StmtKind::Block(_) => self.block_into(s, s.span.start..s.span.end, seq),
            StmtKind::If(arms) => {
                let mut rendered_arms = Vec::new();
                let mut else_arm = None;
                for (n, arm) in arms.iter().enumerate() {
                    self.absorb_lines(
                        arm.header_line..=arm.body.span.start_line.max(arm.header_line),
                        seq,
                    );
                    let region_end = arms.get(n + 1).map_or(s.span.end, |next| next.header);
                    let body = self.sequence(&arm.body, arm.body.span.start..region_end);
                    let desc = self.description(AnnotationKind::ConditionDesc, arm.header);
                    match &arm.condition {
                        Some(cond) => rendered_arms.push(Arm {
                            label: desc.unwrap_or_else(|| cond.clone()),
                            body,
                        }),
                        None => {
                            else_arm = Some(Arm {
                                label: desc.unwrap_or_else(|| "no".to_string()),
                                body,
                            })
                        }
                    }
                }
                seq.nodes.push(ANode::Branch {
                    arms: rendered_arms,
                    else_arm,
                });
                seq.current = None;
            }
            StmtKind::Loop {
                style,
                condition,
                body,
            } => {
                let header_end = match style {
                    LoopStyle::DoWhile => s.span.start_line,
                    _ => body.span.start_line.max(s.span.start_line),
                };
                self.absorb_lines(s.span.start_line..=header_end, seq);
                let lowered = self.sequence(body, body.span.start..s.span.end);
                if *style == LoopStyle::DoWhile {
                    self.absorb_lines(body.span.end_line..=s.span.end_line, seq);
                }
                let label = self
                    .description(AnnotationKind::ConditionDesc, s.span.start)
                    .unwrap_or_else(|| condition.clone());
                seq.nodes.push(ANode::Loop {
                    style: *style,
                    label,
                    body: lowered,
                });
                seq.current = None;
            }
            StmtKind::Plain | StmtKind::Return => {
                unreachable!("leaf statements are never rendered")
            }
        }
    }

    /// Attaches the calls of unused call highlights on `lines` to the
    /// current action, opening an untitled action if there is none.
    fn absorb_lines(&mut self, lines: std::ops::RangeInclusive<u32>, seq: &mut Seq) {
        for idx in 0..self.annotations.len() {
            let a = &self.annotations[idx];
            if self.used[idx] || a.kind != AnnotationKind::CallHighlight || !lines.contains(&a.line)
            {
                continue;
            }
            self.used[idx] = true;
            let line = a.line;
            let Some(calls) = self.calls_by_line.get(&line).cloned() else {
                self.diagnostics.push(
                    Diagnostic::warning(
                        "call highlight `//$` on a line with no detectable call; dropped",
                    )
                    .at_line(line),
                );
                continue;
            };
            let current = match seq.current {
                Some(i) => i,
                None => {
                    seq.nodes.push(ANode::Action(ActionNode {
                        text: String::new(),
                        zoom: 0,
                        parallel: false,
                        highlighted_calls: Vec::new(),
                    }));
                    seq.nodes.len() - 1
                }
            };
            seq.current = Some(current);
            let mut resolved = Vec::new();
            for call in calls {
                resolved.push(self.resolve(call));
            }
            if let ANode::Action(action) = &mut seq.nodes[current] {
                action.highlighted_calls.extend(resolved);
            }
        }
    }

    fn resolve(&mut self, call: &CallSite) -> HighlightedCall {
        let (resolution, diag) = self.db.resolve(call);
        match resolution {
            Resolution::Link(link) => HighlightedCall {
                display_text: format!("{}()", link.qualified_name),
                link: Some(link),
            },
            Resolution::NoLink => {
                self.diagnostics.push(diag.unwrap_or_else(|| {
                    Diagnostic::warning(format!(
                        "no diagram for highlighted call `{}`; not linked",
                        call.callee_text
                    ))
                    .at_line(call.line)
                }));
                HighlightedCall {
                    display_text: format!("{}()", call.callee_text),
                    link: None,
                }
            }
        }
    }
}

/// Replaces maximal runs (length ≥ 2) of parallel actions sharing a zoom
/// level with a fork of single-action branches.
fn group_forks(nodes: Vec<ANode>) -> Vec<ANode> {
    let mut out: Vec<ANode> = Vec::new();
    let mut run: Vec<ANode> = Vec::new();
    let flush = |run: &mut Vec<ANode>, out: &mut Vec<ANode>| {
        if run.len() >= 2 {
            out.push(ANode::Fork(run.drain(..).map(|n| vec![n]).collect()));
        } else {
            out.append(run);
        }
    };
    for node in nodes {
        let joins = match (&node, run.first()) {
            (ANode::Action(a), Some(ANode::Action(first))) => a.parallel && a.zoom == first.zoom,
            (ANode::Action(a), None) => a.parallel,
            _ => false,
        };
        if !joins {
            flush(&mut run, &mut out);
        }
        match &node {
            ANode::Action(a) if a.parallel => run.push(node),
            _ => out.push(node),
        }
    }
    flush(&mut run, &mut out);
    out
}

/// Distinct action texts, for checks that compare zoom levels.
pub fn action_texts(tree: &ActivityTree) -> Vec<String> {
    tree.actions().into_iter().map(|a| a.text.clone()).collect()
}

/// Every link target in the tree.
pub fn links(tree: &ActivityTree) -> BTreeSet<Link> {
    let mut out = BTreeSet::new();
    for_each_action(&tree.root, &mut |a| {
        out.extend(a.highlighted_calls.iter().filter_map(|c| c.link.clone()));
    });
    out
}
