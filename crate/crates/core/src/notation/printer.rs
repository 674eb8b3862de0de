use std::fmt::Write;

use crate::model::{
    col_letters, BinOp, CellAddr, CellRange, CellRef, Constraint, Equation, Expr, Formula, IndexExpr, LhsIndex, Object, Subscript,
    TableDecl,
};

#[derive(Clone, Copy, PartialEq)]
enum Style {
    /// Model files: spaces around every binary operator.
    Model,
    /// Sheet formulas in A1.
    A1,
    /// Sheet formulas in R1C1, relative to a host cell.
    R1C1,
}

struct Printer<'a> {
    style: Style,
    host: Option<&'a CellAddr>,
    out: String,
}

/// Canonical listing: declarations sorted by name, then equations sorted as
/// strings, one per line.
pub fn show_object(o: &Object) -> String {
    if o.tables.is_empty() && o.equations.is_empty() {
        return "{# | #}".to_string();
    }
    let decls: Vec<String> = o.tables.values().map(show_decl).collect();
    let mut eqs: Vec<String> = o.equations.iter().map(show_equation).collect();
    eqs.sort();
    let mut out = String::from("{#\n");
    push_lines(&mut out, &decls);
    out.push_str("|\n");
    push_lines(&mut out, &eqs);
    out.push_str("#}\n");
    out
}

fn push_lines(out: &mut String, lines: &[String]) {
    for (i, line) in lines.iter().enumerate() {
        out.push_str("  ");
        out.push_str(line);
        if i + 1 < lines.len() {
            out.push(',');
        }
        out.push('\n');
    }
}

pub(crate) fn show_decl(d: &TableDecl) -> String {
    let dims: Vec<String> = d.dims.iter().map(|b| format!("{}:{}", b.lo, b.hi)).collect();
    format!("{}[{}]", d.name, dims.join(", "))
}

pub(crate) fn show_equation(eq: &Equation) -> String {
    let lhs: Vec<String> = eq
        .lhs
        .iter()
        .map(|ix| match ix {
            LhsIndex::Fixed(v) => v.to_string(),
            LhsIndex::Bound(q) => match q.constraint {
                Constraint::All => format!("all {}", q.var),
                Constraint::Gt(k) => format!("{} > {k}", q.var),
                Constraint::Lt(k) => format!("{} < {k}", q.var),
                Constraint::Eq(k) => format!("{} = {k}", q.var),
                Constraint::Ge(k) => format!("{} >= {k}", q.var),
                Constraint::Le(k) => format!("{} <= {k}", q.var),
            },
        })
        .collect();
    format!("{}[{}] = {}", eq.table, lhs.join(", "), show_formula(&eq.rhs))
}

/// A formula in model notation.
pub fn show_formula(f: &Formula) -> String {
    let mut p = Printer { style: Style::Model, host: None, out: String::new() };
    p.expr(f, 0);
    p.out
}

/// A sheet formula in A1 notation, without the leading `=`.
pub fn show_sheet_formula(f: &Formula) -> String {
    let mut p = Printer { style: Style::A1, host: None, out: String::new() };
    p.expr(f, 0);
    p.out
}

/// A sheet formula in R1C1 notation relative to `host`, without the `=`.
pub fn show_sheet_formula_r1c1(f: &Formula, host: &CellAddr) -> String {
    let mut p = Printer { style: Style::R1C1, host: Some(host), out: String::new() };
    p.expr(f, 0);
    p.out
}

impl Printer<'_> {
    /// Prints `e`, parenthesized when its precedence is below `min`.
    fn expr(&mut self, e: &Formula, min: u8) {
        match e {
            Expr::Number(n) => {
                if n.0.is_sign_negative() {
                    write!(self.out, "({})", n.0).unwrap();
                } else {
                    write!(self.out, "{}", n.0).unwrap();
                }
            }
            Expr::Text(s) => {
                self.out.push('"');
                self.out.push_str(&s.replace('"', "\"\""));
                self.out.push('"');
            }
            Expr::Index(i) => write!(self.out, "{i}").unwrap(),
            Expr::Element { table, indices } => {
                self.out.push_str(table);
                self.out.push('[');
                for (k, s) in indices.iter().enumerate() {
                    if k > 0 {
                        self.out.push_str(", ");
                    }
                    self.subscript(s);
                }
                self.out.push(']');
            }
            Expr::Cell(r) => self.cell(r, true),
            Expr::Range(r) => self.range(r),
            Expr::Binary { op, lhs, rhs } => {
                let prec = op.precedence();
                let paren = prec < min;
                if paren {
                    self.out.push('(');
                }
                self.expr(lhs, prec);
                let spaced = self.style == Style::Model || *op == BinOp::Concat;
                if spaced {
                    write!(self.out, " {} ", op.symbol()).unwrap();
                } else {
                    self.out.push_str(op.symbol());
                }
                self.expr(rhs, prec + 1);
                if paren {
                    self.out.push(')');
                }
            }
            Expr::Neg(inner) => {
                self.out.push('-');
                match **inner {
                    Expr::Binary { .. } | Expr::Neg(_) | Expr::Number(_) => {
                        self.out.push('(');
                        self.expr(inner, 0);
                        self.out.push(')');
                    }
                    _ => self.expr(inner, u8::MAX),
                }
            }
            Expr::Call { func, args } => {
                self.out.push_str(func.name());
                self.out.push('(');
                for (k, a) in args.iter().enumerate() {
                    if k > 0 {
                        self.out.push_str(", ");
                    }
                    self.expr(a, 0);
                }
                self.out.push(')');
            }
        }
    }

    fn subscript(&mut self, s: &Subscript<IndexExpr>) {
        match s {
            Subscript::At(i) => write!(self.out, "{i}").unwrap(),
            Subscript::Span(a, b) => write!(self.out, "{a}:{b}").unwrap(),
        }
    }

    fn cell(&mut self, r: &CellRef, with_sheet: bool) {
        if with_sheet {
            if let Some(sheet) = &r.sheet {
                crate::model::addr::write_sheet_prefix(&mut self.out, sheet).unwrap();
            }
        }
        match (self.style, self.host) {
            (Style::R1C1, Some(host)) => {
                let coord = |out: &mut String, tag: char, abs: bool, v: u32, base: u32| {
                    out.push(tag);
                    if abs {
                        write!(out, "{v}").unwrap();
                    } else if v != base {
                        write!(out, "[{}]", v as i64 - base as i64).unwrap();
                    }
                };
                coord(&mut self.out, 'R', r.row_abs, r.row, host.row);
                coord(&mut self.out, 'C', r.col_abs, r.col, host.col);
            }
            _ => {
                if r.col_abs {
                    self.out.push('$');
                }
                self.out.push_str(&col_letters(r.col));
                if r.row_abs {
                    self.out.push('$');
                }
                write!(self.out, "{}", r.row).unwrap();
            }
        }
    }

    fn range(&mut self, r: &CellRange) {
        self.cell(&r.start, true);
        self.out.push(':');
        self.cell(&r.end, false);
    }
}
