//! Plain-text circulation format:
//!
//! ```text
//! c optional comment
//! p mcc <vertices> <edges>
//! a <tail> <head> <capacity> <cost>
//! ```
//!
//! Vertices are 1-indexed. Writing is canonical, so parse/write round-trips
//! bit-exactly for files produced by [`write_dimacs`].

use std::fmt::Write as _;

use thiserror::Error;

use crate::mcc::{Circulation, McEdge, MccInstance};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DimacsError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing `p mcc` header")]
    MissingHeader,
    #[error("header declares {declared} edges but {found} were read")]
    EdgeCount { declared: usize, found: usize },
    #[error(transparent)]
    Invalid(#[from] crate::error::Error),
}

fn syntax(line: usize, message: impl Into<String>) -> DimacsError {
    DimacsError::Syntax {
        line,
        message: message.into(),
    }
}

fn field<F: std::str::FromStr>(tok: Option<&str>, line: usize, name: &str) -> Result<F, DimacsError> {
    let tok = tok.ok_or_else(|| syntax(line, format!("missing {name}")))?;
    tok.parse().map_err(|_| syntax(line, format!("bad {name} `{tok}`")))
}

pub fn parse_dimacs(text: &str) -> Result<MccInstance, DimacsError> {
    let mut header: Option<(usize, usize)> = None;
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let mut toks = raw.split_whitespace();
        match toks.next() {
            None | Some("c") => continue,
            Some("p") => {
                if header.is_some() {
                    return Err(syntax(line, "duplicate header"));
                }
                if toks.next() != Some("mcc") {
                    return Err(syntax(line, "expected `p mcc`"));
                }
                header = Some((
                    field(toks.next(), line, "vertex count")?,
                    field(toks.next(), line, "edge count")?,
                ));
            }
            Some("a") => {
                let (vertices, _) = header.ok_or(DimacsError::MissingHeader)?;
                let tail: usize = field(toks.next(), line, "tail")?;
                let head: usize = field(toks.next(), line, "head")?;
                let capacity = field(toks.next(), line, "capacity")?;
                let cost = field(toks.next(), line, "cost")?;
                for v in [tail, head] {
                    if v == 0 || v > vertices {
                        return Err(syntax(line, format!("vertex {v} outside 1..={vertices}")));
                    }
                }
                edges.push(McEdge {
                    tail: tail - 1,
                    head: head - 1,
                    capacity,
                    cost,
                });
            }
            Some(other) => return Err(syntax(line, format!("unknown record `{other}`"))),
        }
        if toks.next().is_some() {
            return Err(syntax(line, "trailing tokens"));
        }
    }
    let (vertices, declared) = header.ok_or(DimacsError::MissingHeader)?;
    if declared != edges.len() {
        return Err(DimacsError::EdgeCount {
            declared,
            found: edges.len(),
        });
    }
    Ok(MccInstance::new(vertices, edges)?)
}

pub fn write_dimacs(mcc: &MccInstance) -> String {
    let mut out = format!("p mcc {} {}\n", mcc.vertex_count(), mcc.edge_count());
    for e in mcc.edges() {
        let _ = writeln!(out, "a {} {} {} {}", e.tail + 1, e.head + 1, e.capacity, e.cost);
    }
    out
}

/// `s <cost>` followed by one `f <tail> <head> <flow>` line per edge.
pub fn write_circulation(mcc: &MccInstance, f: &Circulation<i64>) -> String {
    let mut out = format!("s {}\n", f.cost(mcc));
    for (e, flow) in mcc.edges().iter().zip(&f.flow) {
        let _ = writeln!(out, "f {} {} {}", e.tail + 1, e.head + 1, flow);
    }
    out
}
