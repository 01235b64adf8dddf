//! DIMACS maximum flow and minimum cost flow files.
//!
//! Minimum cost arc lines accept two optional trailing columns `gnum gden`
//! giving the multiplier `gnum/gden` of the arc.

use crate::CliError;
use ipm_core::flow::{FlowEdge, FlowNetwork};
use std::fmt::Write;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProblemKind {
    Max,
    Min,
}

/// A parsed DIMACS file. `target` is the sink demand of a minimum cost file
/// written with `n id flow` lines.
#[derive(Clone, Debug, PartialEq)]
pub struct DimacsProblem {
    pub kind: ProblemKind,
    pub network: FlowNetwork,
    pub target: Option<i64>,
}

pub fn parse_dimacs_flow(text: &str) -> Result<FlowNetwork, CliError> {
    parse_dimacs_problem(text).map(|p| p.network)
}

fn parse_err(line: usize, msg: impl Into<String>) -> CliError {
    CliError::Parse { line, msg: msg.into() }
}

fn int(tok: Option<&str>, line: usize, what: &str) -> Result<i64, CliError> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse().map_err(|_| parse_err(line, format!("{what} `{tok}` is not an integer")))
}

pub fn parse_dimacs_problem(text: &str) -> Result<DimacsProblem, CliError> {
    let mut header: Option<(ProblemKind, usize, usize, usize)> = None;
    let mut source = None;
    let mut sink = None;
    let mut target = None;
    let mut edges = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let mut tok = raw.split_whitespace();
        let Some(tag) = tok.next() else { continue };
        match tag {
            "c" => continue,
            "p" => {
                if header.is_some() {
                    return Err(parse_err(line, "second problem line"));
                }
                let kind = match tok.next() {
                    Some("max") => ProblemKind::Max,
                    Some("min") => ProblemKind::Min,
                    other => return Err(parse_err(line, format!("unknown problem type {other:?}"))),
                };
                let n = int(tok.next(), line, "node count")?;
                let m = int(tok.next(), line, "arc count")?;
                if n < 2 || m < 1 {
                    return Err(parse_err(line, format!("need at least 2 nodes and 1 arc, got {n} and {m}")));
                }
                header = Some((kind, n as usize, m as usize, line));
            }
            "n" => {
                let (_, n, _, _) = header.ok_or_else(|| parse_err(line, "node line before problem line"))?;
                let id = int(tok.next(), line, "node id")?;
                if id < 1 || id as usize > n {
                    return Err(parse_err(line, format!("node {id} outside 1..{n}")));
                }
                let v = id as usize - 1;
                match tok.next() {
                    Some("s") => source = Some(v),
                    Some("t") => sink = Some(v),
                    Some(s) => {
                        let supply: i64 = s.parse().map_err(|_| parse_err(line, format!("bad node designator `{s}`")))?;
                        if supply > 0 {
                            source = Some(v);
                        } else if supply < 0 {
                            sink = Some(v);
                            target = Some(-supply);
                        }
                    }
                    None => return Err(parse_err(line, "missing node designator")),
                }
            }
            "a" => {
                let (kind, n, _, _) = header.ok_or_else(|| parse_err(line, "arc line before problem line"))?;
                let u = int(tok.next(), line, "tail")?;
                let v = int(tok.next(), line, "head")?;
                for x in [u, v] {
                    if x < 1 || x as usize > n {
                        return Err(parse_err(line, format!("node {x} outside 1..{n}")));
                    }
                }
                let edge = match kind {
                    ProblemKind::Max => FlowEdge::new(u as usize - 1, v as usize - 1, int(tok.next(), line, "capacity")?, 0),
                    ProblemKind::Min => {
                        let low = int(tok.next(), line, "lower bound")?;
                        if low != 0 {
                            return Err(CliError::UnsupportedFeature(format!("line {line}: arc lower bound {low}")));
                        }
                        let cap = int(tok.next(), line, "capacity")?;
                        let cost = int(tok.next(), line, "cost")?;
                        let (num, den) = match tok.next() {
                            None => (1, 1),
                            Some(g) => (int(Some(g), line, "multiplier numerator")?, int(tok.next(), line, "multiplier denominator")?),
                        };
                        FlowEdge::lossy(u as usize - 1, v as usize - 1, cap, cost, num, den)
                    }
                };
                edges.push(edge);
            }
            other => return Err(parse_err(line, format!("unknown line type `{other}`"))),
        }
        if let Some(extra) = tok.next() {
            return Err(parse_err(line, format!("unexpected trailing field `{extra}`")));
        }
    }
    let (kind, n, m, pline) = header.ok_or_else(|| parse_err(0, "no problem line"))?;
    if edges.len() != m {
        return Err(parse_err(pline, format!("problem line declares {m} arcs, found {}", edges.len())));
    }
    let source = source.ok_or_else(|| parse_err(pline, "no source node"))?;
    let sink = sink.ok_or_else(|| parse_err(pline, "no sink node"))?;
    let network = FlowNetwork::new(n, edges, source, sink).map_err(|e| parse_err(pline, e.to_string()))?;
    Ok(DimacsProblem { kind, network, target })
}

pub fn emit_dimacs(problem: &DimacsProblem) -> String {
    let net = &problem.network;
    let kind = match problem.kind {
        ProblemKind::Max => "max",
        ProblemKind::Min => "min",
    };
    let mut out = String::new();
    writeln!(out, "p {kind} {} {}", net.n, net.m()).unwrap();
    match problem.target {
        Some(f) => {
            writeln!(out, "n {} {f}", net.source + 1).unwrap();
            writeln!(out, "n {} {}", net.sink + 1, -f).unwrap();
        }
        None => {
            writeln!(out, "n {} s", net.source + 1).unwrap();
            writeln!(out, "n {} t", net.sink + 1).unwrap();
        }
    }
    for e in &net.edges {
        match problem.kind {
            ProblemKind::Max => writeln!(out, "a {} {} {}", e.tail + 1, e.head + 1, e.cap).unwrap(),
            ProblemKind::Min if e.gamma_num == 1 && e.gamma_den == 1 => {
                writeln!(out, "a {} {} 0 {} {}", e.tail + 1, e.head + 1, e.cap, e.cost).unwrap()
            }
            ProblemKind::Min => writeln!(
                out,
                "a {} {} 0 {} {} {} {}",
                e.tail + 1,
                e.head + 1,
                e.cap,
                e.cost,
                e.gamma_num,
                e.gamma_den
            )
            .unwrap(),
        }
    }
    out
}
