//! Text snapshot of a store, for diffing implementations.
//!
//! One line per node, sorted by node id:
//! `node_id k score_1 node_1 ... score_k node_k`, entries by descending score.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::graph::NodeId;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TpprSnapshot {
    vectors: BTreeMap<NodeId, Vec<(NodeId, f64)>>,
}

impl TpprSnapshot {
    pub fn insert(&mut self, owner: NodeId, ranked: Vec<(NodeId, f64)>) {
        self.vectors.insert(owner, ranked);
    }

    pub fn get(&self, owner: NodeId) -> Option<&[(NodeId, f64)]> {
        self.vectors.get(&owner).map(|v| v.as_slice())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&NodeId, &Vec<(NodeId, f64)>)> {
        self.vectors.iter()
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (owner, entries) in &self.vectors {
            write!(out, "{} {}", owner, entries.len()).unwrap();
            for (n, s) in entries {
                write!(out, " {s} {n}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut snap = TpprSnapshot::default();
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            let fields: Vec<&str> = line.split_ascii_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            let num = |f: &str| -> Result<u32> {
                f.parse()
                    .map_err(|_| Error::parse(lineno, format!("bad integer `{f}`")))
            };
            if fields.len() < 2 {
                return Err(Error::parse(lineno, "expected `node_id k ...`"));
            }
            let owner = NodeId(num(fields[0])?);
            let k = num(fields[1])? as usize;
            if fields.len() != 2 + 2 * k {
                return Err(Error::parse(
                    lineno,
                    format!("expected {k} score/node pairs"),
                ));
            }
            let mut entries = Vec::with_capacity(k);
            for pair in fields[2..].chunks(2) {
                let score: f64 = pair[0]
                    .parse()
                    .map_err(|_| Error::parse(lineno, format!("bad score `{}`", pair[0])))?;
                entries.push((NodeId(num(pair[1])?), score));
            }
            if snap.vectors.insert(owner, entries).is_some() {
                return Err(Error::parse(lineno, format!("duplicate node {owner}")));
            }
        }
        Ok(snap)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_layout() {
        let mut s = TpprSnapshot::default();
        s.insert(NodeId(3), vec![(NodeId(1), 0.5), (NodeId(3), 0.25)]);
        s.insert(NodeId(1), vec![]);
        assert_eq!(s.to_text(), "1 0\n3 2 0.5 1 0.25 3\n");
        assert_eq!(TpprSnapshot::parse(&s.to_text()).unwrap(), s);
    }

    #[test]
    fn rejects_short_line() {
        assert!(TpprSnapshot::parse("3 2 0.5 1\n").is_err());
    }
}
