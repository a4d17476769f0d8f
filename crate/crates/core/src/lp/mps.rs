//! Fixed-layout MPS export and a whitespace-tolerant MPS reader.
//!
//! Fields are written at the classic MPS column positions. Names longer than
//! eight characters overflow their field, so the reader splits on whitespace
//! rather than on column positions (names never contain blanks).

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::lp::{LinearProgram, Relation, VarTag};

const OBJECTIVE_ROW: &str = "COST";

fn field_line(out: &mut String, kind: &str, name: &str, pairs: &[(&str, f64)]) {
    // Fields start at columns 2, 5, 15, 25, 40 and 50.
    let _ = write!(out, " {:<2} {:<8}", kind, name);
    for (idx, (row, value)) in pairs.iter().enumerate() {
        let gap = if idx == 0 { "  " } else { "   " };
        let _ = write!(out, "{}{:<8}  {:>12}", gap, row, value);
    }
    out.push('\n');
}

/// Writes `lp` as a minimization problem in fixed-format MPS.
pub fn write_mps(lp: &LinearProgram) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "NAME          {}", if lp.name.is_empty() { "LP" } else { &lp.name });
    out.push_str("ROWS\n");
    let _ = writeln!(out, " N  {}", OBJECTIVE_ROW);
    for c in &lp.constraints {
        let kind = match c.relation {
            Relation::Le => "L",
            Relation::Ge => "G",
            Relation::Eq => "E",
        };
        let _ = writeln!(out, " {}  {}", kind, c.name);
    }

    let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); lp.num_vars()];
    for (i, c) in lp.constraints.iter().enumerate() {
        for &(j, a) in &c.coeffs {
            by_col[j].push((i, a));
        }
    }
    out.push_str("COLUMNS\n");
    for (j, var) in lp.variables.iter().enumerate() {
        let mut entries: Vec<(&str, f64)> = Vec::new();
        if var.cost != 0.0 || by_col[j].is_empty() {
            entries.push((OBJECTIVE_ROW, var.cost));
        }
        entries.extend(by_col[j].iter().map(|&(i, a)| (lp.constraints[i].name.as_str(), a)));
        for chunk in entries.chunks(2) {
            field_line(&mut out, "", &var.name, chunk);
        }
    }

    out.push_str("RHS\n");
    for c in lp.constraints.iter().filter(|c| c.rhs != 0.0) {
        field_line(&mut out, "", "RHS", &[(c.name.as_str(), c.rhs)]);
    }

    out.push_str("BOUNDS\n");
    for var in &lp.variables {
        let (lo, hi) = (var.lower, var.upper);
        let name = var.name.as_str();
        if lo == hi {
            field_line(&mut out, "FX", "BND", &[(name, lo)]);
            continue;
        }
        match (lo.is_finite(), hi.is_finite()) {
            (false, false) => {
                let _ = writeln!(out, " FR BND       {}", name);
            }
            (false, true) => {
                let _ = writeln!(out, " MI BND       {}", name);
                field_line(&mut out, "UP", "BND", &[(name, hi)]);
            }
            (true, true) => {
                if lo != 0.0 {
                    field_line(&mut out, "LO", "BND", &[(name, lo)]);
                }
                field_line(&mut out, "UP", "BND", &[(name, hi)]);
            }
            (true, false) => {
                if lo != 0.0 {
                    field_line(&mut out, "LO", "BND", &[(name, lo)]);
                }
            }
        }
    }
    out.push_str("ENDATA\n");
    out
}

fn tag_from_name(name: &str) -> VarTag {
    let parts: Vec<&str> = name.split('_').collect();
    let num = |s: &str| s.parse::<usize>().ok();
    match parts.as_slice() {
        ["x", e] => num(e).map(|edge| VarTag::Edge { edge }),
        ["y", p] => num(p).map(|path| VarTag::Prefix { path }),
        ["f", i, p] => num(i).zip(num(p)).map(|(terminal, path)| VarTag::Flow { terminal, path }),
        ["xh", t] => num(t).map(|tree_edge| VarTag::TreeEdge { tree_edge }),
        ["fh", i, v] => num(i).zip(num(v)).map(|(terminal, node)| VarTag::TreeFlow { terminal, node }),
        _ => None,
    }
    .unwrap_or(VarTag::Other)
}

/// Reads an MPS file written by [`write_mps`] or by other tools that follow
/// the same section layout (RANGES is not supported).
pub fn parse_mps(text: &str) -> Result<LinearProgram> {
    #[derive(PartialEq)]
    enum Section {
        None,
        Rows,
        Columns,
        Rhs,
        Bounds,
        End,
    }
    let err = |line: usize, message: String| Error::Mps { line, message };
    let mut lp = LinearProgram::new("");
    let mut section = Section::None;
    let mut objective: Option<String> = None;
    let mut rows: HashMap<String, usize> = HashMap::new();
    let mut cols: HashMap<String, usize> = HashMap::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        if !raw.starts_with(' ') && !raw.starts_with('\t') {
            section = match tokens[0] {
                "NAME" => {
                    lp.name = tokens.get(1).copied().unwrap_or_default().to_string();
                    Section::None
                }
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => Section::End,
                other => return Err(err(line_no, format!("unsupported section `{}`", other))),
            };
            continue;
        }
        let number = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| err(line_no, format!("`{}` is not a number", s)))
        };
        match section {
            Section::Rows => {
                if tokens.len() != 2 {
                    return Err(err(line_no, "row lines are `<type> <name>`".into()));
                }
                let relation = match tokens[0] {
                    "N" => {
                        if objective.is_none() {
                            objective = Some(tokens[1].to_string());
                        }
                        continue;
                    }
                    "L" => Relation::Le,
                    "G" => Relation::Ge,
                    "E" => Relation::Eq,
                    other => return Err(err(line_no, format!("unknown row type `{}`", other))),
                };
                rows.insert(tokens[1].to_string(), lp.constraints.len());
                lp.add_constraint(tokens[1], Vec::new(), relation, 0.0);
            }
            Section::Columns => {
                if tokens.len() != 3 && tokens.len() != 5 {
                    return Err(err(line_no, "column lines hold one or two entries".into()));
                }
                let name = tokens[0];
                let j = match cols.get(name) {
                    Some(&j) => j,
                    None => {
                        let j = lp.add_var(name, 0.0, f64::INFINITY, 0.0, tag_from_name(name));
                        cols.insert(name.to_string(), j);
                        j
                    }
                };
                for pair in tokens[1..].chunks(2) {
                    let value = number(pair[1])?;
                    if Some(pair[0]) == objective.as_deref() {
                        lp.variables[j].cost = value;
                    } else if let Some(&i) = rows.get(pair[0]) {
                        if value != 0.0 {
                            lp.constraints[i].coeffs.push((j, value));
                        }
                    } else {
                        return Err(err(line_no, format!("unknown row `{}`", pair[0])));
                    }
                }
            }
            Section::Rhs => {
                if tokens.len() != 3 && tokens.len() != 5 {
                    return Err(err(line_no, "RHS lines hold one or two entries".into()));
                }
                for pair in tokens[1..].chunks(2) {
                    let value = number(pair[1])?;
                    if Some(pair[0]) == objective.as_deref() {
                        continue;
                    }
                    let &i = rows
                        .get(pair[0])
                        .ok_or_else(|| err(line_no, format!("unknown row `{}`", pair[0])))?;
                    lp.constraints[i].rhs = value;
                }
            }
            Section::Bounds => {
                if tokens.len() < 3 {
                    return Err(err(line_no, "bound lines are `<type> <set> <column> [value]`".into()));
                }
                let &j = cols
                    .get(tokens[2])
                    .ok_or_else(|| err(line_no, format!("unknown column `{}`", tokens[2])))?;
                let value = tokens.get(3).map(|s| number(s)).transpose()?;
                let need = |v: Option<f64>| v.ok_or_else(|| err(line_no, "bound value missing".into()));
                let var = &mut lp.variables[j];
                match tokens[0] {
                    "UP" => var.upper = need(value)?,
                    "LO" => var.lower = need(value)?,
                    "FX" => {
                        let v = need(value)?;
                        var.lower = v;
                        var.upper = v;
                    }
                    "FR" => {
                        var.lower = f64::NEG_INFINITY;
                        var.upper = f64::INFINITY;
                    }
                    "MI" => var.lower = f64::NEG_INFINITY,
                    "PL" => var.upper = f64::INFINITY,
                    other => return Err(err(line_no, format!("unsupported bound type `{}`", other))),
                }
            }
            Section::None | Section::End => {
                return Err(err(line_no, "data line outside a section".into()));
            }
        }
    }
    if section != Section::End {
        return Err(err(text.lines().count(), "missing ENDATA".into()));
    }
    for c in &mut lp.constraints {
        c.coeffs.sort_by_key(|&(j, _)| j);
    }
    Ok(lp)
}
