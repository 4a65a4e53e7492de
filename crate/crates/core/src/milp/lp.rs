//! LP text export in the CPLEX layout, and a parser for the subset we write.
//!
//! ```text
//! \ objective scaled by 3
//! Minimize
//!  obj: 5 b_A.B - 4 x_T1_A.B_0 + 4
//! Subject To
//!  cap_A.B_all_0: x_T1_A.B_0 - b_A.B <= 1
//! Binaries
//!  b_A.B x_T1_A.B_0
//! End
//! ```
//!
//! Coefficients are written as exact decimals. A row whose coefficients do
//! not terminate in base ten is multiplied through by the least common
//! multiple of its denominators; for the objective the factor is recorded in
//! the leading comment so that [`parse_lp`] can undo it.

use std::collections::HashSet;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::{ConstraintSystem, Sense};
use crate::rational::{self, Rational};

const LINE_WIDTH: usize = 100;

fn needs_scaling(coefs: &mut dyn Iterator<Item = &Rational>) -> Option<Rational> {
    let mut lcm = BigInt::one();
    let mut any = false;
    for c in coefs {
        if rational::to_exact_decimal(c).is_none() {
            any = true;
        }
        lcm = lcm.lcm(c.denom());
    }
    any.then(|| Rational::from_integer(lcm))
}

fn decimal(value: &Rational) -> String {
    rational::to_exact_decimal(value).expect("scaled to a terminating decimal")
}

/// Writes `name: a x + b y` wrapping long lines.
fn write_expr(out: &mut String, head: &str, terms: &[(String, Rational)], tail: &str) {
    let mut line = format!(" {head}:");
    let mut first = true;
    let mut push = |line: &mut String, piece: String| {
        if line.len() + piece.len() + 1 > LINE_WIDTH {
            out.push_str(line);
            out.push('\n');
            line.clear();
            line.push_str("   ");
        }
        line.push(' ');
        line.push_str(&piece);
    };
    for (name, c) in terms {
        let sign = if c.is_negative() { "-" } else if first { "" } else { "+" };
        let abs = c.abs();
        let piece = if abs.is_one() { format!("{sign} {name}") } else { format!("{sign} {} {name}", decimal(&abs)) };
        push(&mut line, piece.trim_start().to_string());
        first = false;
    }
    if !tail.is_empty() {
        push(&mut line, tail.to_string());
    }
    out.push_str(&line);
    out.push('\n');
}

/// Renders `system` as LP text.
pub fn export_lp(system: &ConstraintSystem) -> String {
    let name = |v: usize| system.variables[v].name.clone();
    let mut out = String::new();

    let obj_scale = needs_scaling(
        &mut system.objective.iter().map(|(_, c)| c).chain(std::iter::once(&system.objective_constant)),
    );
    let k = obj_scale.clone().unwrap_or_else(Rational::one);
    if let Some(scale) = &obj_scale {
        let _ = writeln!(out, "\\ objective scaled by {}", scale.numer());
    }
    out.push_str("Minimize\n");
    let obj: Vec<(String, Rational)> = system.objective.iter().map(|(v, c)| (name(*v), c * &k)).collect();
    let constant = &system.objective_constant * &k;
    let tail = if constant.is_zero() {
        if obj.is_empty() {
            "0".to_string()
        } else {
            String::new()
        }
    } else if constant.is_negative() || obj.is_empty() {
        if obj.is_empty() {
            decimal(&constant)
        } else {
            format!("- {}", decimal(&-constant))
        }
    } else {
        format!("+ {}", decimal(&constant))
    };
    write_expr(&mut out, "obj", &obj, &tail);

    out.push_str("Subject To\n");
    for row in &system.rows {
        let k = needs_scaling(&mut row.terms.iter().map(|(_, c)| c).chain(std::iter::once(&row.rhs)))
            .unwrap_or_else(Rational::one);
        let terms: Vec<(String, Rational)> = row.terms.iter().map(|(v, c)| (name(*v), c * &k)).collect();
        let tail = format!("{} {}", row.sense.symbol(), decimal(&(&row.rhs * &k)));
        if terms.is_empty() {
            // An empty left-hand side is written as `0 x` on the first variable
            // so the row survives a round trip; builder rows are never empty
            // except for requirements no variable can meet.
            let mut line = format!(" {}:", row.name);
            match system.variables.first() {
                Some(v) => {
                    let _ = write!(line, " 0 {} {tail}", v.name);
                }
                None => {
                    let _ = write!(line, " 0 {tail}");
                }
            }
            out.push_str(&line);
            out.push('\n');
        } else {
            write_expr(&mut out, &row.name, &terms, &tail);
        }
    }

    out.push_str("Binaries\n");
    let mut line = String::new();
    for v in &system.variables {
        if line.len() + v.name.len() + 1 > LINE_WIDTH {
            out.push_str(&line);
            out.push('\n');
            line.clear();
        }
        line.push(' ');
        line.push_str(&v.name);
    }
    if !line.is_empty() {
        out.push_str(&line);
        out.push('\n');
    }
    out.push_str("End\n");
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpRow {
    pub name: String,
    /// Terms by variable name; zero coefficients are dropped.
    pub terms: Vec<(String, Rational)>,
    pub sense: Sense,
    pub rhs: Rational,
}

/// A parsed LP file, with names in place of variable ids.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LpModel {
    pub objective: Vec<(String, Rational)>,
    pub objective_constant: Rational,
    pub rows: Vec<LpRow>,
    pub binaries: Vec<String>,
}

impl LpModel {
    /// The model a system should parse back to, including the effect of row
    /// scaling.
    pub fn of_system(system: &ConstraintSystem) -> LpModel {
        let name = |v: usize| system.variables[v].name.clone();
        LpModel {
            objective: system.objective.iter().map(|(v, c)| (name(*v), c.clone())).collect(),
            objective_constant: system.objective_constant.clone(),
            rows: system
                .rows
                .iter()
                .map(|r| {
                    let k = needs_scaling(&mut r.terms.iter().map(|(_, c)| c).chain(std::iter::once(&r.rhs)))
                        .unwrap_or_else(Rational::one);
                    LpRow {
                        name: r.name.clone(),
                        terms: r.terms.iter().map(|(v, c)| (name(*v), c * &k)).collect(),
                        sense: r.sense,
                        rhs: &r.rhs * &k,
                    }
                })
                .collect(),
            binaries: system.variables.iter().map(|v| v.name.clone()).collect(),
        }
    }

    /// Rows sorted by name, for comparisons that ignore row order.
    pub fn normalized(mut self) -> LpModel {
        self.rows.sort_by(|a, b| a.name.cmp(&b.name));
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct LpParseError {
    pub line: usize,
    pub message: String,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    Start,
    Objective,
    Constraints,
    Binaries,
    End,
}

/// Parses text produced by [`export_lp`].
pub fn parse_lp(text: &str) -> Result<LpModel, LpParseError> {
    let mut model = LpModel::default();
    let mut scale = Rational::one();
    let mut section = Section::Start;
    let mut pending: Vec<(usize, String)> = Vec::new();
    let mut objective_seen = false;

    let flush = |pending: &mut Vec<(usize, String)>,
                 section: Section,
                 model: &mut LpModel,
                 objective_seen: &mut bool|
     -> Result<(), LpParseError> {
        if pending.is_empty() {
            return Ok(());
        }
        let line = pending[0].0;
        let joined = pending.iter().map(|(_, s)| s.as_str()).collect::<Vec<_>>().join(" ");
        pending.clear();
        let (name, body) = joined
            .split_once(':')
            .ok_or_else(|| LpParseError { line, message: "expected `name:`".into() })?;
        let name = name.trim().to_string();
        match section {
            Section::Objective => {
                if *objective_seen {
                    return Err(LpParseError { line, message: "second objective".into() });
                }
                *objective_seen = true;
                let (terms, constant, rel) = parse_expr(body, line)?;
                if rel.is_some() {
                    return Err(LpParseError { line, message: "relation in objective".into() });
                }
                model.objective = terms;
                model.objective_constant = constant;
            }
            Section::Constraints => {
                let (terms, constant, rel) = parse_expr(body, line)?;
                let (sense, rhs) = rel.ok_or_else(|| LpParseError { line, message: "missing relation".into() })?;
                model.rows.push(LpRow { name, terms, sense, rhs: rhs - constant });
            }
            _ => unreachable!(),
        }
        Ok(())
    };

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = raw.trim();
        if let Some(comment) = trimmed.strip_prefix('\\') {
            if let Some(k) = comment.trim().strip_prefix("objective scaled by ") {
                scale = rational::parse(k.trim())
                    .map_err(|e| LpParseError { line: line_no, message: e.to_string() })?;
            }
            continue;
        }
        if trimmed.is_empty() {
            continue;
        }
        let keyword = trimmed.to_ascii_lowercase();
        let next = match keyword.as_str() {
            "minimize" | "minimise" | "min" => Some(Section::Objective),
            "subject to" | "st" | "s.t." => Some(Section::Constraints),
            "binaries" | "binary" | "bin" => Some(Section::Binaries),
            "end" => Some(Section::End),
            _ => None,
        };
        if let Some(next) = next {
            if matches!(section, Section::Objective | Section::Constraints) {
                flush(&mut pending, section, &mut model, &mut objective_seen)?;
            }
            section = next;
            continue;
        }
        match section {
            Section::Start | Section::End => {
                return Err(LpParseError { line: line_no, message: format!("unexpected `{trimmed}`") })
            }
            Section::Objective | Section::Constraints => {
                // A new statement starts at the first non-indented-continuation
                // line that carries a label.
                let continuation = raw.starts_with("   ") && !pending.is_empty();
                if !continuation {
                    flush(&mut pending, section, &mut model, &mut objective_seen)?;
                }
                pending.push((line_no, trimmed.to_string()));
            }
            Section::Binaries => model.binaries.extend(trimmed.split_whitespace().map(str::to_string)),
        }
    }
    if section != Section::End {
        return Err(LpParseError { line: text.lines().count(), message: "missing `End`".into() });
    }
    if !scale.is_one() {
        for (_, c) in &mut model.objective {
            *c /= &scale;
        }
        model.objective_constant /= &scale;
    }
    Ok(model)
}

type Parsed = (Vec<(String, Rational)>, Rational, Option<(Sense, Rational)>);

fn parse_expr(body: &str, line: usize) -> Result<Parsed, LpParseError> {
    let err = |message: String| LpParseError { line, message };
    let tokens: Vec<&str> = body.split_whitespace().collect();
    let mut terms: Vec<(String, Rational)> = Vec::new();
    let mut seen = HashSet::new();
    let mut constant = Rational::zero();
    let mut i = 0;
    let mut sign = Rational::one();
    let mut coef: Option<Rational> = None;
    while i < tokens.len() {
        let tok = tokens[i];
        match tok {
            "+" => sign = Rational::one(),
            "-" => sign = -Rational::one(),
            "<=" | "=<" | ">=" | "=>" | "=" => {
                if coef.is_some() {
                    constant += &sign * coef.take().unwrap();
                }
                let sense = match tok {
                    "<=" | "=<" => Sense::Le,
                    ">=" | "=>" => Sense::Ge,
                    _ => Sense::Eq,
                };
                let rest = &tokens[i + 1..];
                let rhs = match rest {
                    [v] => rational::parse(v).map_err(|e| err(e.to_string()))?,
                    ["-", v] => -rational::parse(v).map_err(|e| err(e.to_string()))?,
                    _ => return Err(err("malformed right-hand side".into())),
                };
                return Ok((terms, constant, Some((sense, rhs))));
            }
            _ => {
                if let Ok(value) = rational::parse(tok) {
                    if let Some(c) = coef.take() {
                        constant += &sign * c;
                        sign = Rational::one();
                    }
                    coef = Some(value);
                } else {
                    let c = &sign * coef.take().unwrap_or_else(Rational::one);
                    sign = Rational::one();
                    if !seen.insert(tok.to_string()) {
                        return Err(err(format!("variable `{tok}` repeated")));
                    }
                    if !c.is_zero() {
                        terms.push((tok.to_string(), c));
                    }
                }
            }
        }
        i += 1;
    }
    if let Some(c) = coef {
        constant += sign * c;
    }
    Ok((terms, constant, None))
}
