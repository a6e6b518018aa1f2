//! Line-oriented text formats for datasets, joint tables and models.
//!
//! ```text
//! vars 2 3            joint 2 2 3          depnet 2
//! 0 2                 0.10000000000000001  node 0 inputs 1
//! 1 0                 ...                  row 0 0.25 0.75
//!                                          ...
//!                                          weights 0.5 0.5
//! ```
//!
//! Blank lines and lines starting with `#` are ignored when parsing.
//! Probabilities are written with 17 significant digits, which round-trips
//! every `f64`.

use std::fmt::Write as _;

use crate::bayesnet::BayesianNetwork;
use crate::cpt::{Cpt, SelectionWeights};
use crate::depnet::DependencyNetwork;
use crate::discrete::{Dataset, JointTable, Value, VarSpace};
use crate::error::{Error, Result};

/// `x` with `digits` significant digits, in the style of C's `%g`.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent in scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// 17 significant digits.
fn fmt_prob(x: f64) -> String {
    fmt_sig(x, 17)
}

/// Non-comment lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_num<T: std::str::FromStr>(line: usize, tok: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| parse_err(line, format!("cannot parse {tok:?}")))
}

fn expect_keyword<'a>(
    line: usize,
    toks: &mut impl Iterator<Item = &'a str>,
    word: &str,
) -> Result<()> {
    match toks.next() {
        Some(w) if w == word => Ok(()),
        Some(w) => Err(parse_err(line, format!("expected {word:?}, found {w:?}"))),
        None => Err(parse_err(line, format!("expected {word:?}"))),
    }
}

fn header_space<'a>(line: usize, toks: impl Iterator<Item = &'a str>) -> Result<VarSpace> {
    let cards = toks
        .map(|t| parse_num::<usize>(line, t))
        .collect::<Result<Vec<_>>>()?;
    VarSpace::new(cards).map_err(|e| parse_err(line, e.to_string()))
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(" ")
}

pub fn write_dataset(d: &Dataset) -> String {
    let mut out = format!("vars {}\n", join(d.space().cards()));
    for row in d.rows() {
        out.push_str(&join(row));
        out.push('\n');
    }
    out
}

pub fn parse_dataset(text: &str) -> Result<Dataset> {
    let mut lines = content_lines(text);
    let (ln, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing vars line"))?;
    let mut toks = header.split_whitespace();
    expect_keyword(ln, &mut toks, "vars")?;
    let space = header_space(ln, toks)?;
    let mut d = Dataset::new(space);
    let mut row: Vec<Value> = Vec::with_capacity(d.space().len());
    for (ln, l) in lines {
        row.clear();
        for t in l.split_whitespace() {
            row.push(parse_num(ln, t)?);
        }
        if row.len() != d.space().len() {
            return Err(parse_err(
                ln,
                format!("{} values, expected {}", row.len(), d.space().len()),
            ));
        }
        d.push(&row).map_err(|e| parse_err(ln, e.to_string()))?;
    }
    Ok(d)
}

pub fn write_joint(p: &JointTable) -> String {
    let mut out = format!("joint {} {}\n", p.space().len(), join(p.space().cards()));
    for &x in p.probs() {
        out.push_str(&fmt_prob(x));
        out.push('\n');
    }
    out
}

pub fn parse_joint(text: &str) -> Result<JointTable> {
    let mut lines = content_lines(text);
    let (ln, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing joint line"))?;
    let mut toks = header.split_whitespace();
    expect_keyword(ln, &mut toks, "joint")?;
    let n: usize = parse_num(ln, toks.next().ok_or_else(|| parse_err(ln, "missing n"))?)?;
    let space = header_space(ln, toks)?;
    if space.len() != n {
        return Err(parse_err(
            ln,
            format!("{} cardinalities for {n} variables", space.len()),
        ));
    }
    let probs = lines
        .map(|(ln, l)| parse_num::<f64>(ln, l))
        .collect::<Result<Vec<_>>>()?;
    JointTable::new(space, probs).map_err(|e| parse_err(ln, e.to_string()))
}

fn write_cpt_rows(out: &mut String, cpt: &Cpt) {
    for (y, row) in cpt.rows() {
        let vals: Vec<String> = match row {
            Some(r) => r.iter().map(|&x| fmt_prob(x)).collect(),
            None => vec!["nan".into(); cpt.child_card()],
        };
        let _ = writeln!(out, "row {y} {}", vals.join(" "));
    }
}

pub fn write_depnet(dn: &DependencyNetwork) -> String {
    let mut out = format!("depnet {}\n", dn.len());
    for cpt in dn.cpts() {
        let _ = writeln!(out, "node {} inputs {}", cpt.child(), join(cpt.inputs()));
        trim_trailing_space(&mut out);
        write_cpt_rows(&mut out, cpt);
    }
    let w: Vec<String> = dn
        .weights()
        .as_slice()
        .iter()
        .map(|&c| fmt_prob(c))
        .collect();
    let _ = writeln!(out, "weights {}", w.join(" "));
    out
}

pub fn write_bayesnet(bn: &BayesianNetwork) -> String {
    let mut out = format!("bayesnet {}\n", bn.len());
    for cpt in bn.cpts() {
        let _ = writeln!(out, "node {} parents {}", cpt.child(), join(cpt.inputs()));
        trim_trailing_space(&mut out);
        write_cpt_rows(&mut out, cpt);
    }
    out
}

/// `node 0 inputs ` with no ids is written as `node 0 inputs`.
fn trim_trailing_space(out: &mut String) {
    if out.ends_with(" \n") {
        out.truncate(out.len() - 2);
        out.push('\n');
    }
}

struct RawRow {
    width: usize,
    /// `None` for an all-`nan` (undefined) row.
    values: Option<Vec<f64>>,
}

struct RawNode {
    line: usize,
    inputs: Vec<usize>,
    rows: Vec<RawRow>,
}

/// Parses `<kind> <n>` followed by `node`/`row` blocks and, for dependency
/// networks, a final `weights` line.
fn parse_model(
    text: &str,
    kind: &str,
    input_word: &str,
) -> Result<(Vec<RawNode>, Option<Vec<f64>>)> {
    let mut lines = content_lines(text);
    let (ln, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, format!("missing {kind} line")))?;
    let mut toks = header.split_whitespace();
    expect_keyword(ln, &mut toks, kind)?;
    let n: usize = parse_num(ln, toks.next().ok_or_else(|| parse_err(ln, "missing n"))?)?;
    let mut nodes: Vec<RawNode> = Vec::with_capacity(n);
    let mut weights = None;
    for (ln, l) in lines {
        let mut toks = l.split_whitespace();
        match toks.next() {
            Some("node") => {
                let i: usize = parse_num(ln, toks.next().unwrap_or(""))?;
                if i != nodes.len() {
                    return Err(parse_err(ln, format!("node {i} out of order")));
                }
                expect_keyword(ln, &mut toks, input_word)?;
                let inputs = toks.map(|t| parse_num(ln, t)).collect::<Result<Vec<_>>>()?;
                nodes.push(RawNode {
                    line: ln,
                    inputs,
                    rows: Vec::new(),
                });
            }
            Some("row") => {
                let node = nodes
                    .last_mut()
                    .ok_or_else(|| parse_err(ln, "row before any node"))?;
                let y: usize = parse_num(ln, toks.next().unwrap_or(""))?;
                if y != node.rows.len() {
                    return Err(parse_err(ln, format!("row {y} out of order")));
                }
                let vals = toks
                    .map(|t| parse_num::<f64>(ln, t))
                    .collect::<Result<Vec<_>>>()?;
                if vals.is_empty() {
                    return Err(parse_err(ln, "row without values"));
                }
                let width = vals.len();
                let values = (!vals.iter().all(|v| v.is_nan())).then_some(vals);
                node.rows.push(RawRow { width, values });
            }
            Some("weights") if kind == "depnet" => {
                weights = Some(toks.map(|t| parse_num(ln, t)).collect::<Result<Vec<_>>>()?);
            }
            Some(other) => return Err(parse_err(ln, format!("unexpected {other:?}"))),
            None => {}
        }
    }
    if nodes.len() != n {
        return Err(parse_err(
            ln,
            format!("{} nodes, expected {n}", nodes.len()),
        ));
    }
    Ok((nodes, weights))
}

/// Child cardinality of a parsed node: the width of its rows.
fn node_card(node: &RawNode) -> Result<usize> {
    let first = node
        .rows
        .first()
        .ok_or_else(|| parse_err(node.line, "node without rows"))?;
    let w = first.width;
    if node.rows.iter().any(|r| r.width != w) {
        return Err(parse_err(node.line, "rows of different widths"));
    }
    Ok(w)
}

fn build_cpts(nodes: Vec<RawNode>) -> Result<(VarSpace, Vec<Cpt>)> {
    let cards = nodes.iter().map(node_card).collect::<Result<Vec<_>>>()?;
    let space = VarSpace::new(cards)?;
    let cpts = nodes
        .into_iter()
        .enumerate()
        .map(|(i, node)| {
            let line = node.line;
            let rows = node.rows.into_iter().map(|r| r.values).collect();
            Cpt::new(&space, i, node.inputs, rows).map_err(|e| parse_err(line, e.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((space, cpts))
}

pub fn parse_depnet(text: &str) -> Result<DependencyNetwork> {
    let (nodes, weights) = parse_model(text, "depnet", "inputs")?;
    let (space, cpts) = build_cpts(nodes)?;
    let weights = match weights {
        Some(w) => SelectionWeights::new(w)?,
        None => SelectionWeights::uniform(space.len()),
    };
    DependencyNetwork::new(space, cpts, weights)
}

pub fn parse_bayesnet(text: &str) -> Result<BayesianNetwork> {
    let (nodes, _) = parse_model(text, "bayesnet", "parents")?;
    let (space, cpts) = build_cpts(nodes)?;
    BayesianNetwork::new(space, cpts)
}
