//! Operation sequences and their text format.
//!
//! ```text
//! # comment
//! n 8
//! I 0 1
//! Q 0 1
//! D 0 1
//! ```
//!
//! The header `n <count>` must precede the first operation. Inserts must
//! name absent edges and deletes present ones; the loader enforces both.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::edge_space::{EdgeCodec, EdgeName, VertexId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    Insert(VertexId, VertexId),
    Delete(VertexId, VertexId),
    Query(VertexId, VertexId),
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Op::Insert(u, v) => write!(f, "I {u} {v}"),
            Op::Delete(u, v) => write!(f, "D {u} {v}"),
            Op::Query(u, v) => write!(f, "Q {u} {v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WorkloadErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("missing `n <count>` header")]
    MissingHeader,
    #[error("invalid vertex count: {0}")]
    BadVertexCount(String),
    #[error("vertex {vertex} out of range for n = {n}")]
    VertexOutOfRange { vertex: u32, n: u32 },
    #[error("self-loop insert")]
    SelfLoop,
    #[error("duplicate insert")]
    DuplicateInsert,
    #[error("delete of absent edge")]
    DeleteAbsent,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} at line {line}")]
pub struct WorkloadError {
    pub line: usize,
    pub kind: WorkloadErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Workload {
    pub n: u32,
    pub ops: Vec<Op>,
}

impl Workload {
    pub fn new(n: u32, ops: Vec<Op>) -> Self {
        Self { n, ops }
    }

    pub fn count(&self, pred: impl Fn(&Op) -> bool) -> usize {
        self.ops.iter().filter(|op| pred(op)).count()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.ops.len() * 12 + 16);
        writeln!(out, "n {}", self.n).unwrap();
        for op in &self.ops {
            writeln!(out, "{op}").unwrap();
        }
        out
    }

    /// Parses and validates. Line numbers are 1-based.
    pub fn parse(text: &str) -> std::result::Result<Self, WorkloadError> {
        Self::parse_with_default_n(text, None)
    }

    /// Like [`Workload::parse`], but a file without a header takes
    /// `default_n` vertices. A header that disagrees with `default_n` is an
    /// error.
    pub fn parse_with_default_n(
        text: &str,
        default_n: Option<u32>,
    ) -> std::result::Result<Self, WorkloadError> {
        let mut n = None;
        let mut checker = None;
        let mut ops = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let err = |kind| WorkloadError { line, kind };
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let mut fields = content.split_whitespace();
            let tag = fields.next().unwrap_or_default();
            let mut number = |what: &str| -> std::result::Result<u32, WorkloadError> {
                let field = fields
                    .next()
                    .ok_or_else(|| err(WorkloadErrorKind::Syntax(format!("missing {what}"))))?;
                field
                    .parse::<u32>()
                    .map_err(|_| err(WorkloadErrorKind::Syntax(format!("bad {what} `{field}`"))))
            };
            let op = match tag {
                "n" => {
                    if n.is_some() {
                        return Err(err(WorkloadErrorKind::Syntax(
                            "header must come once, before any operation".into(),
                        )));
                    }
                    let count = number("vertex count")?;
                    if let Some(d) = default_n.filter(|&d| d != count) {
                        return Err(err(WorkloadErrorKind::BadVertexCount(format!(
                            "header says {count} but {d} was requested"
                        ))));
                    }
                    let c = Checker::new(count)
                        .map_err(|e| err(WorkloadErrorKind::BadVertexCount(e.to_string())))?;
                    n = Some(count);
                    checker = Some(c);
                    None
                }
                "I" => Some(Op::Insert(number("vertex")?, number("vertex")?)),
                "D" => Some(Op::Delete(number("vertex")?, number("vertex")?)),
                "Q" => Some(Op::Query(number("vertex")?, number("vertex")?)),
                other => {
                    return Err(err(WorkloadErrorKind::Syntax(format!(
                        "unknown operation `{other}`"
                    ))))
                }
            };
            if fields.next().is_some() {
                return Err(err(WorkloadErrorKind::Syntax("trailing fields".into())));
            }
            if let Some(op) = op {
                if checker.is_none() {
                    let d = default_n.ok_or(err(WorkloadErrorKind::MissingHeader))?;
                    checker = Some(
                        Checker::new(d)
                            .map_err(|e| err(WorkloadErrorKind::BadVertexCount(e.to_string())))?,
                    );
                    n = Some(d);
                }
                let c = checker.as_mut().expect("checker set above");
                c.step(op).map_err(err)?;
                ops.push(op);
            }
        }
        let n = n.or(default_n).ok_or(WorkloadError {
            line: text.lines().count().max(1),
            kind: WorkloadErrorKind::MissingHeader,
        })?;
        Ok(Self { n, ops })
    }

    /// Checks the insert/delete preconditions. Errors carry the line the
    /// op would occupy in [`Workload::to_text`] output.
    pub fn validate(&self) -> std::result::Result<(), WorkloadError> {
        let mut c = Checker::new(self.n).map_err(|e| WorkloadError {
            line: 1,
            kind: WorkloadErrorKind::BadVertexCount(e.to_string()),
        })?;
        for (i, &op) in self.ops.iter().enumerate() {
            c.step(op)
                .map_err(|kind| WorkloadError { line: i + 2, kind })?;
        }
        Ok(())
    }
}

/// Tracks the live edge set while replaying ops for validation.
struct Checker {
    codec: EdgeCodec,
    live: std::collections::HashSet<EdgeName>,
}

impl Checker {
    fn new(n: u32) -> Result<Self> {
        Ok(Self {
            codec: EdgeCodec::new(n)?,
            live: Default::default(),
        })
    }

    fn step(&mut self, op: Op) -> std::result::Result<(), WorkloadErrorKind> {
        let (Op::Insert(u, v) | Op::Delete(u, v) | Op::Query(u, v)) = op;
        let n = self.codec.n();
        for x in [u, v] {
            if x >= n {
                return Err(WorkloadErrorKind::VertexOutOfRange { vertex: x, n });
            }
        }
        match op {
            Op::Query(..) => Ok(()),
            Op::Insert(..) if u == v => Err(WorkloadErrorKind::SelfLoop),
            Op::Delete(..) if u == v => Err(WorkloadErrorKind::DeleteAbsent),
            Op::Insert(..) => {
                if self.live.insert(self.codec.encode_unchecked(u, v)) {
                    Ok(())
                } else {
                    Err(WorkloadErrorKind::DuplicateInsert)
                }
            }
            Op::Delete(..) => {
                if self.live.remove(&self.codec.encode_unchecked(u, v)) {
                    Ok(())
                } else {
                    Err(WorkloadErrorKind::DeleteAbsent)
                }
            }
        }
    }
}

/// Relative weights of inserts, deletes and queries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mix {
    pub insert: f64,
    pub delete: f64,
    pub query: f64,
}

impl Mix {
    pub fn new(insert: f64, delete: f64, query: f64) -> Result<Self> {
        let ok = |w: f64| w.is_finite() && w >= 0.0;
        if !(ok(insert) && ok(delete) && ok(query)) || insert + delete + query <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "mix weights must be non-negative with a positive sum, got {insert}:{delete}:{query}"
            )));
        }
        Ok(Self {
            insert,
            delete,
            query,
        })
    }
}

impl Default for Mix {
    fn default() -> Self {
        Self {
            insert: 0.45,
            delete: 0.45,
            query: 0.10,
        }
    }
}

impl FromStr for Mix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(':')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::InvalidConfig(format!("bad mix `{s}`, expected i:d:q")))?;
        match parts[..] {
            [i, d, q] => Mix::new(i, d, q),
            _ => Err(Error::InvalidConfig(format!(
                "bad mix `{s}`, expected i:d:q"
            ))),
        }
    }
}

impl fmt::Display for Mix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.insert, self.delete, self.query)
    }
}

/// Random valid workload. Infeasible draws (a delete on an empty graph, an
/// insert into a complete one) are redrawn, never emitted.
pub fn generate_workload(n: u32, length: usize, mix: Mix, seed: u64) -> Result<Workload> {
    let codec = EdgeCodec::new(n)?;
    let max_edges = n as u64 * (n as u64 - 1) / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut live: Vec<(VertexId, VertexId)> = Vec::new();
    let mut index: HashMap<EdgeName, usize> = HashMap::new();
    let mut ops = Vec::with_capacity(length);

    while ops.len() < length {
        let can_insert = (live.len() as u64) < max_edges;
        let can_delete = !live.is_empty();
        let wi = if can_insert { mix.insert } else { 0.0 };
        let wd = if can_delete { mix.delete } else { 0.0 };
        let total = wi + wd + mix.query;
        if total <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "mix {mix} admits no valid operation after {} ops on n = {n}",
                ops.len()
            )));
        }
        let x = rng.gen::<f64>() * total;
        let op = if x < wi {
            let (u, v) = loop {
                let (u, v) = (rng.gen_range(0..n), rng.gen_range(0..n));
                if u != v && !index.contains_key(&codec.encode_unchecked(u, v)) {
                    break (u, v);
                }
            };
            index.insert(codec.encode_unchecked(u, v), live.len());
            live.push((u, v));
            Op::Insert(u, v)
        } else if x < wi + wd {
            let i = rng.gen_range(0..live.len());
            let (u, v) = live.swap_remove(i);
            index.remove(&codec.encode_unchecked(u, v));
            if let Some(&(a, b)) = live.get(i) {
                index.insert(codec.encode_unchecked(a, b), i);
            }
            Op::Delete(u, v)
        } else {
            Op::Query(rng.gen_range(0..n), rng.gen_range(0..n))
        };
        ops.push(op);
    }
    Ok(Workload { n, ops })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_round_trip() {
        let text = "# hand-written\nn 4\nI 0 1\n\nQ 0 1 # trailing comment\nD 1 0\n";
        let w = Workload::parse(text).unwrap();
        assert_eq!(w.n, 4);
        assert_eq!(
            w.ops,
            vec![Op::Insert(0, 1), Op::Query(0, 1), Op::Delete(1, 0)]
        );
        assert_eq!(Workload::parse(&w.to_text()).unwrap(), w);
    }

    #[test]
    fn parse_errors_carry_lines() {
        let e = Workload::parse("n 4\nI 0 1\nI 0 1\n").unwrap_err();
        assert_eq!(e.to_string(), "duplicate insert at line 3");
        let e = Workload::parse("n 4\nD 0 1\n").unwrap_err();
        assert_eq!((e.line, e.kind), (2, WorkloadErrorKind::DeleteAbsent));
        let e = Workload::parse("I 0 1\n").unwrap_err();
        assert_eq!((e.line, e.kind), (1, WorkloadErrorKind::MissingHeader));
        let e = Workload::parse("n 4\nX 0 1\n").unwrap_err();
        assert_eq!(e.line, 2);
        let e = Workload::parse("n 4\nQ 0\n").unwrap_err();
        assert!(matches!(e.kind, WorkloadErrorKind::Syntax(_)));
        let e = Workload::parse("n 4\nQ 0 9\n").unwrap_err();
        assert_eq!(
            e.kind,
            WorkloadErrorKind::VertexOutOfRange { vertex: 9, n: 4 }
        );
        let e = Workload::parse("n 4\nI 2 2\n").unwrap_err();
        assert_eq!(e.kind, WorkloadErrorKind::SelfLoop);
        assert!(Workload::parse("").is_err());
        assert!(Workload::parse("n 0\n").is_err());
    }

    #[test]
    fn headerless_with_default_n() {
        let e = Workload::parse_with_default_n("I 0 1\nI 0 1\n", Some(2)).unwrap_err();
        assert_eq!(e.to_string(), "duplicate insert at line 2");
        let w = Workload::parse_with_default_n("I 0 1\nQ 0 1\n", Some(2)).unwrap();
        assert_eq!(w.n, 2);
        assert!(Workload::parse_with_default_n("n 4\nI 0 1\n", Some(4)).is_ok());
        assert!(Workload::parse_with_default_n("n 4\nI 0 1\n", Some(5)).is_err());
        assert!(Workload::parse_with_default_n("I 0 1\nn 4\n", Some(4)).is_err());
        assert_eq!(Workload::parse_with_default_n("", Some(3)).unwrap().n, 3);
    }

    #[test]
    fn validate_reports_text_lines() {
        let w = Workload::new(4, vec![Op::Insert(0, 1), Op::Insert(1, 0)]);
        assert_eq!(w.validate().unwrap_err().line, 3);
    }

    #[test]
    fn mix_parsing() {
        let m: Mix = "45:45:10".parse().unwrap();
        assert_eq!((m.insert, m.delete, m.query), (45.0, 45.0, 10.0));
        assert!("1:2".parse::<Mix>().is_err());
        assert!("0:0:0".parse::<Mix>().is_err());
        assert!("-1:1:1".parse::<Mix>().is_err());
    }

    #[test]
    fn inserts_only_are_distinct() {
        let w = generate_workload(20, 150, Mix::new(1.0, 0.0, 0.0).unwrap(), 3).unwrap();
        assert!(w.ops.iter().all(|op| matches!(op, Op::Insert(..))));
        w.validate().unwrap();
        // Complete graph on 20 vertices has 190 edges; asking for more fails.
        assert!(generate_workload(20, 191, Mix::new(1.0, 0.0, 0.0).unwrap(), 3).is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate_workload(64, 500, Mix::default(), 9).unwrap();
        let b = generate_workload(64, 500, Mix::default(), 9).unwrap();
        let c = generate_workload(64, 500, Mix::default(), 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn mixed_workload_passes_loader() {
        let w = generate_workload(128, 10_000, Mix::new(0.45, 0.45, 0.10).unwrap(), 1).unwrap();
        assert_eq!(w.ops.len(), 10_000);
        let loaded = Workload::parse(&w.to_text()).unwrap();
        assert_eq!(loaded, w);
        assert!(w.count(|op| matches!(op, Op::Delete(..))) > 3000);
    }

    #[test]
    fn delete_only_mix_on_empty_graph_fails() {
        assert!(generate_workload(8, 1, Mix::new(0.0, 1.0, 0.0).unwrap(), 1).is_err());
        let w = generate_workload(8, 0, Mix::new(0.0, 1.0, 0.0).unwrap(), 1).unwrap();
        assert!(w.ops.is_empty());
    }
}
