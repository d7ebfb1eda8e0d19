//! Tab-separated edge lists: `source<TAB>target<TAB>weight`, no header.

use std::io::{BufRead, Write};

use super::{DirectedWeightedGraph, GraphBuilder, UserId};
use crate::error::{Error, Result};

pub fn write_edge_list<W: Write>(g: &DirectedWeightedGraph, mut out: W) -> Result<()> {
    for (s, t, w) in g.edges() {
        writeln!(out, "{}\t{}\t{}", g.id(s), g.id(t), w)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads an edge list. Weights must be positive integers; repeated pairs
/// accumulate and self-loops are dropped.
pub fn read_edge_list<R: BufRead>(input: R) -> Result<DirectedWeightedGraph> {
    let mut b = GraphBuilder::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| Error::Parse {
            line: lineno + 1,
            message,
        };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(bad(format!("expected 3 tab-separated fields, got {}", fields.len())));
        }
        let source = UserId::parse(fields[0]).ok_or_else(|| bad("empty source id".into()))?;
        let target = UserId::parse(fields[1]).ok_or_else(|| bad("empty target id".into()))?;
        let weight: u64 = fields[2]
            .trim()
            .parse()
            .map_err(|_| bad(format!("weight {:?} is not a positive integer", fields[2])))?;
        if weight == 0 {
            return Err(bad("weight must be at least 1".into()));
        }
        b.add_edge(&source, &target, weight);
    }
    Ok(b.build())
}
