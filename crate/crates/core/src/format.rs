//! Text formats for instances and equilibria.
//!
//! Instance:
//! ```text
//! [market]
//! name = three-slots
//! [goods]
//! t1, t2, t3
//! [agent 1]
//! budget = 30
//! delays = 1, 2, 3
//! cover: t1:1, t2:1, t3:1 >= 1
//! ```
//! A `cover:` line may also list one coefficient per good in order.
//!
//! Equilibrium: sections `[prices]` (`good = value`), `[lambda]`
//! (`agent = value`), `[allocation]` (`agent, good, value`, zeros omitted)
//! and `[segments]` (`lambda : agent, agent, ...`, lowest lambda first).
//!
//! Numbers are exact rationals `p` or `p/q`; decimal literals are rejected.

use std::collections::HashMap;
use std::fmt::Write as _;

use num::Zero;
use thiserror::Error;

use crate::market_model::{fmt_rational, parse_rational, Agent, Allocation, Cover, MarketInstance};
use crate::rational_lp::Rational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("invalid {field}: {msg}")]
    Semantic { field: String, msg: String },
}

fn syntax(line: usize, col: usize, msg: impl Into<String>) -> ParseError {
    ParseError::Syntax { line, col, msg: msg.into() }
}

fn semantic(field: &str, msg: impl Into<String>) -> ParseError {
    ParseError::Semantic { field: field.into(), msg: msg.into() }
}

/// A non-empty, comment-stripped line with its 1-based number and the
/// column offset of its first character.
struct Line<'a> {
    no: usize,
    text: &'a str,
    indent: usize,
}

fn lines(src: &str) -> Vec<Line<'_>> {
    src.lines()
        .enumerate()
        .filter_map(|(i, raw)| {
            let body = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            };
            let trimmed = body.trim_end();
            let text = trimmed.trim_start();
            if text.is_empty() {
                None
            } else {
                Some(Line { no: i + 1, text, indent: trimmed.len() - text.len() })
            }
        })
        .collect()
}

/// Parses a rational token located at `col` (1-based) of line `line`.
fn rational_at(tok: &str, line: usize, col: usize) -> Result<Rational, ParseError> {
    if let Some(p) = tok.find(['.', 'e', 'E']) {
        return Err(syntax(line, col + p, format!("decimal literal `{}` (write p/q)", tok.trim())));
    }
    parse_rational(tok).ok_or_else(|| syntax(line, col, format!("expected rational, found `{}`", tok.trim())))
}

/// Splits on commas, returning each piece with its 1-based column.
fn split_commas(s: &str, base_col: usize) -> Vec<(&str, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        if ch == ',' {
            out.push((&s[start..i], base_col + start));
            start = i + 1;
        }
    }
    out.push((&s[start..], base_col + start));
    out.into_iter()
        .map(|(t, c)| {
            let lead = t.len() - t.trim_start().len();
            (t.trim(), c + lead)
        })
        .filter(|(t, _)| !t.is_empty())
        .collect()
}

fn key_value<'a>(l: &Line<'a>) -> Result<(&'a str, &'a str, usize), ParseError> {
    let Some(eq) = l.text.find('=') else {
        return Err(syntax(l.no, l.indent + 1, "expected `key = value`"));
    };
    let key = l.text[..eq].trim();
    let val = &l.text[eq + 1..];
    let lead = val.len() - val.trim_start().len();
    Ok((key, val.trim(), l.indent + eq + 2 + lead))
}

enum Section {
    None,
    Market,
    Goods,
    Agent(usize),
}

pub fn parse_instance(src: &str) -> Result<MarketInstance, ParseError> {
    let mut name = None;
    let mut goods: Vec<String> = Vec::new();
    struct Draft {
        id: String,
        budget: Option<Rational>,
        delays: Option<Vec<Rational>>,
        covers: Vec<(usize, Vec<(Option<String>, Rational)>, Rational)>,
    }
    let mut drafts: Vec<Draft> = Vec::new();
    let mut section = Section::None;
    for l in lines(src) {
        if l.text.starts_with('[') {
            let Some(end) = l.text.find(']') else {
                return Err(syntax(l.no, l.indent + 1, "unterminated section header"));
            };
            if !l.text[end + 1..].trim().is_empty() {
                return Err(syntax(l.no, l.indent + end + 2, "text after section header"));
            }
            let head = l.text[1..end].trim();
            section = if head == "market" {
                Section::Market
            } else if head == "goods" {
                Section::Goods
            } else if let Some(id) = head.strip_prefix("agent") {
                let id = id.trim();
                if id.is_empty() {
                    return Err(syntax(l.no, l.indent + 1, "agent section needs an id"));
                }
                drafts.push(Draft { id: id.to_string(), budget: None, delays: None, covers: Vec::new() });
                Section::Agent(drafts.len() - 1)
            } else {
                return Err(syntax(l.no, l.indent + 2, format!("unknown section `{head}`")));
            };
            continue;
        }
        match section {
            Section::None => return Err(syntax(l.no, l.indent + 1, "content before first section")),
            Section::Market => {
                let (k, v, _) = key_value(&l)?;
                if k != "name" {
                    return Err(syntax(l.no, l.indent + 1, format!("unknown market key `{k}`")));
                }
                name = Some(v.trim_matches('"').to_string());
            }
            Section::Goods => {
                for (g, _) in split_commas(l.text, l.indent + 1) {
                    goods.push(g.to_string());
                }
            }
            Section::Agent(a) => {
                if let Some(rest) = l.text.strip_prefix("cover:") {
                    let base = l.indent + "cover:".len() + 1;
                    let Some(ge) = rest.find(">=") else {
                        return Err(syntax(l.no, base, "expected `>=` in cover line"));
                    };
                    let rhs = rational_at(&rest[ge + 2..], l.no, base + ge + 2)?;
                    let mut terms = Vec::new();
                    for (tok, col) in split_commas(&rest[..ge], base) {
                        match tok.split_once(':') {
                            Some((g, v)) => {
                                let vcol = col + g.len() + 1;
                                terms.push((Some(g.trim().to_string()), rational_at(v, l.no, vcol)?));
                            }
                            None => terms.push((None, rational_at(tok, l.no, col)?)),
                        }
                    }
                    drafts[a].covers.push((l.no, terms, rhs));
                    continue;
                }
                let (k, v, col) = key_value(&l)?;
                match k {
                    "budget" => drafts[a].budget = Some(rational_at(v, l.no, col)?),
                    "delays" => {
                        let mut ds = Vec::new();
                        for (tok, c) in split_commas(v, col) {
                            ds.push(rational_at(tok, l.no, c)?);
                        }
                        drafts[a].delays = Some(ds);
                    }
                    _ => return Err(syntax(l.no, l.indent + 1, format!("unknown agent key `{k}`"))),
                }
            }
        }
    }
    let name = name.ok_or_else(|| semantic("name", "missing [market] name"))?;
    if goods.is_empty() {
        return Err(semantic("goods", "no goods declared"));
    }
    let index: HashMap<&str, usize> = goods.iter().enumerate().map(|(j, g)| (g.as_str(), j)).collect();
    if index.len() != goods.len() {
        return Err(semantic("good id", "duplicate good id"));
    }
    if drafts.is_empty() {
        return Err(semantic("agent", "no agents declared"));
    }
    let m = goods.len();
    let mut agents = Vec::new();
    for d in drafts {
        if agents.iter().any(|a: &Agent| a.id == d.id) {
            return Err(semantic("agent id", format!("duplicate agent `{}`", d.id)));
        }
        let budget = d.budget.ok_or_else(|| semantic("budget", format!("agent {} has no budget", d.id)))?;
        if budget <= Rational::zero() {
            return Err(semantic("budget", format!("agent {} budget must be positive", d.id)));
        }
        let delays = d.delays.ok_or_else(|| semantic("delays", format!("agent {} has no delays", d.id)))?;
        if delays.len() != m {
            return Err(semantic("delays", format!("agent {} lists {} delays for {m} goods", d.id, delays.len())));
        }
        if delays.iter().any(|v| v < &Rational::zero()) {
            return Err(semantic("delays", format!("agent {} has a negative delay", d.id)));
        }
        let mut covers = Vec::new();
        for (line, terms, rhs) in d.covers {
            if rhs < Rational::zero() {
                return Err(semantic("cover", format!("line {line}: negative requirement")));
            }
            let mut coeffs = vec![Rational::zero(); m];
            let named = terms.iter().filter(|t| t.0.is_some()).count();
            if named == terms.len() {
                for (g, v) in terms {
                    let g = g.unwrap_or_default();
                    let Some(&j) = index.get(g.as_str()) else {
                        return Err(semantic("good id", format!("line {line}: unknown good `{g}`")));
                    };
                    coeffs[j] += v;
                }
            } else if named == 0 {
                if terms.len() != m {
                    return Err(semantic("cover", format!("line {line}: {} coefficients for {m} goods", terms.len())));
                }
                for (j, (_, v)) in terms.into_iter().enumerate() {
                    coeffs[j] = v;
                }
            } else {
                return Err(semantic("cover", format!("line {line}: mixes named and positional coefficients")));
            }
            covers.push(Cover { coeffs, rhs });
        }
        agents.push(Agent { id: d.id, budget, delays, covers });
    }
    Ok(MarketInstance { name, goods, agents })
}

pub fn write_instance(inst: &MarketInstance) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "[market]\nname = {}\n", inst.name);
    let _ = writeln!(s, "[goods]\n{}\n", inst.goods.join(", "));
    for a in &inst.agents {
        let _ = writeln!(s, "[agent {}]", a.id);
        let _ = writeln!(s, "budget = {}", fmt_rational(&a.budget));
        let ds: Vec<String> = a.delays.iter().map(fmt_rational).collect();
        let _ = writeln!(s, "delays = {}", ds.join(", "));
        for c in &a.covers {
            let terms: Vec<String> = c
                .coeffs
                .iter()
                .enumerate()
                .filter(|(_, v)| !v.is_zero())
                .map(|(j, v)| format!("{}:{}", inst.goods[j], fmt_rational(v)))
                .collect();
            let _ = writeln!(s, "cover: {} >= {}", terms.join(", "), fmt_rational(&c.rhs));
        }
        s.push('\n');
    }
    s
}

/// Solver output in file form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquilibriumRecord {
    pub prices: Vec<Rational>,
    pub lambda: Vec<Rational>,
    pub allocation: Allocation,
    /// Agent sets with their common lambda, in increasing lambda order.
    pub segments: Vec<(Vec<usize>, Rational)>,
}

pub fn write_equilibrium(inst: &MarketInstance, eq: &EquilibriumRecord) -> String {
    let mut s = String::from("[prices]\n");
    for (g, p) in inst.goods.iter().zip(&eq.prices) {
        let _ = writeln!(s, "{g} = {}", fmt_rational(p));
    }
    s.push_str("\n[lambda]\n");
    for (a, l) in inst.agents.iter().zip(&eq.lambda) {
        let _ = writeln!(s, "{} = {}", a.id, fmt_rational(l));
    }
    s.push_str("\n[allocation]\n");
    for (i, row) in eq.allocation.x.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if !v.is_zero() {
                let _ = writeln!(s, "{}, {}, {}", inst.agents[i].id, inst.goods[j], fmt_rational(v));
            }
        }
    }
    s.push_str("\n[segments]\n");
    for (members, l) in &eq.segments {
        let ids: Vec<&str> = members.iter().map(|&i| inst.agents[i].id.as_str()).collect();
        let _ = writeln!(s, "{} : {}", fmt_rational(l), ids.join(", "));
    }
    s
}

pub fn parse_equilibrium(inst: &MarketInstance, src: &str) -> Result<EquilibriumRecord, ParseError> {
    let n = inst.num_agents();
    let m = inst.num_goods();
    let gidx: HashMap<&str, usize> = inst.goods.iter().enumerate().map(|(j, g)| (g.as_str(), j)).collect();
    let aidx: HashMap<&str, usize> = inst.agents.iter().enumerate().map(|(i, a)| (a.id.as_str(), i)).collect();
    let mut prices: Vec<Option<Rational>> = vec![None; m];
    let mut lambda = vec![Rational::zero(); n];
    let mut alloc = Allocation::zeros(n, m);
    let mut segments = Vec::new();
    let mut section = "";
    for l in lines(src) {
        if l.text.starts_with('[') {
            let end = l.text.find(']').ok_or_else(|| syntax(l.no, l.indent + 1, "unterminated section header"))?;
            section = match l.text[1..end].trim() {
                "prices" => "prices",
                "lambda" => "lambda",
                "allocation" => "allocation",
                "segments" => "segments",
                other => return Err(syntax(l.no, l.indent + 2, format!("unknown section `{other}`"))),
            };
            continue;
        }
        match section {
            "prices" => {
                let (k, v, col) = key_value(&l)?;
                let j = *gidx.get(k).ok_or_else(|| semantic("good id", format!("unknown good `{k}`")))?;
                prices[j] = Some(rational_at(v, l.no, col)?);
            }
            "lambda" => {
                let (k, v, col) = key_value(&l)?;
                let i = *aidx.get(k).ok_or_else(|| semantic("agent id", format!("unknown agent `{k}`")))?;
                lambda[i] = rational_at(v, l.no, col)?;
            }
            "allocation" => {
                let parts = split_commas(l.text, l.indent + 1);
                if parts.len() != 3 {
                    return Err(syntax(l.no, l.indent + 1, "expected `agent, good, value`"));
                }
                let i = *aidx.get(parts[0].0).ok_or_else(|| semantic("agent id", format!("unknown agent `{}`", parts[0].0)))?;
                let j = *gidx.get(parts[1].0).ok_or_else(|| semantic("good id", format!("unknown good `{}`", parts[1].0)))?;
                alloc.x[i][j] = rational_at(parts[2].0, l.no, parts[2].1)?;
            }
            "segments" => {
                let Some(colon) = l.text.find(':') else {
                    return Err(syntax(l.no, l.indent + 1, "expected `lambda : agents`"));
                };
                let lam = rational_at(&l.text[..colon], l.no, l.indent + 1)?;
                let mut members = Vec::new();
                for (id, _) in split_commas(&l.text[colon + 1..], l.indent + colon + 2) {
                    members.push(*aidx.get(id).ok_or_else(|| semantic("agent id", format!("unknown agent `{id}`")))?);
                }
                segments.push((members, lam));
            }
            _ => return Err(syntax(l.no, l.indent + 1, "content before first section")),
        }
    }
    let prices = prices
        .into_iter()
        .enumerate()
        .map(|(j, p)| p.ok_or_else(|| semantic("prices", format!("no price for good `{}`", inst.goods[j]))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EquilibriumRecord { prices, lambda, allocation: alloc, segments })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_model::build_single_machine;
    use crate::rational_lp::{int, ratio};

    #[test]
    fn instance_round_trip() {
        let inst = build_single_machine(&[30, 17, 9, 4, 3, 1].map(int), &[1; 6]).unwrap();
        let text = write_instance(&inst);
        assert_eq!(parse_instance(&text).unwrap(), inst);
    }

    #[test]
    fn negative_budget_is_semantic() {
        let src = "[market]\nname = x\n[goods]\ng\n[agent a]\nbudget = -1\ndelays = 1\ncover: g:1 >= 1\n";
        assert!(matches!(parse_instance(src), Err(ParseError::Semantic { field, .. }) if field == "budget"));
    }

    #[test]
    fn unknown_good_is_semantic() {
        let src = "[market]\nname = x\n[goods]\ng\n[agent a]\nbudget = 1\ndelays = 1\ncover: h:1 >= 1\n";
        assert!(matches!(parse_instance(src), Err(ParseError::Semantic { field, .. }) if field == "good id"));
    }

    #[test]
    fn decimal_is_syntax_error_with_position() {
        let src = "[market]\nname = x\n[goods]\ng\n[agent a]\nbudget = 1.5\ndelays = 1\n";
        assert_eq!(
            parse_instance(src).unwrap_err(),
            ParseError::Syntax { line: 6, col: 11, msg: "decimal literal `1.5` (write p/q)".into() }
        );
    }

    #[test]
    fn positional_cover_and_comments() {
        let src = "# demo\n[market]\nname = \"x\"\n[goods]\ng, h  # two goods\n[agent a]\nbudget = \"3/2\"\ndelays = 1, 2\ncover: 1, 1 >= 1\n";
        let inst = parse_instance(src).unwrap();
        assert_eq!(inst.agents[0].budget, ratio(3, 2));
        assert_eq!(inst.agents[0].covers[0].coeffs, vec![int(1), int(1)]);
    }

    #[test]
    fn equilibrium_round_trip() {
        let inst = build_single_machine(&[5, 1].map(int), &[1, 1]).unwrap();
        let mut alloc = Allocation::zeros(2, 2);
        alloc.x[0][0] = int(1);
        alloc.x[1][1] = int(1);
        let rec = EquilibriumRecord {
            prices: vec![int(5), int(1)],
            lambda: vec![int(4), int(1)],
            allocation: alloc,
            segments: vec![(vec![1], int(1)), (vec![0], int(4))],
        };
        let text = write_equilibrium(&inst, &rec);
        assert_eq!(parse_equilibrium(&inst, &text).unwrap(), rec);
    }
}
