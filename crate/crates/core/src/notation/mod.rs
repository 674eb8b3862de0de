//! Model notation: objects, quantified equations, functions, union, mapping
//! clauses and layout formats; plus the sheet formula dialects (A1, R1C1).

pub mod ast;
mod lexer;
mod parser;
mod printer;

use std::fmt;

use crate::model::{CellAddr, Formula, Object};

pub use ast::*;
pub use printer::{show_formula, show_object, show_sheet_formula, show_sheet_formula_r1c1};

use lexer::Mode;
use parser::Parser;

/// 1-based line and column (in characters).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagnosticKind {
    Syntax,
    Semantic,
}

/// A positioned error from parsing or resolving source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub pos: Pos,
    pub kind: DiagnosticKind,
    pub message: String,
    /// Tokens that would have been accepted at `pos` (syntax errors only).
    pub expected: Vec<String>,
}

impl Diagnostic {
    pub fn new(pos: Pos, message: impl Into<String>) -> Self {
        Diagnostic { pos, kind: DiagnosticKind::Syntax, message: message.into(), expected: Vec::new() }
    }

    pub fn semantic(pos: Pos, message: impl Into<String>) -> Self {
        Diagnostic { pos, kind: DiagnosticKind::Semantic, message: message.into(), expected: Vec::new() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.pos, self.message)?;
        if !self.expected.is_empty() {
            write!(f, "; expected one of {}", self.expected.join(", "))?;
        }
        Ok(())
    }
}

impl std::error::Error for Diagnostic {}

/// Parses a single object literal `{# decls | equations #}` with constant
/// bounds and indices.
pub fn parse_object(src: &str) -> Result<Object, Diagnostic> {
    let mut p = Parser::new(src, Mode::Model, None)?;
    let lit = p.object_literal()?;
    p.finish()?;
    let o = crate::algebra::instantiate_literal(&lit, &Default::default())?;
    o.validate().map_err(|e| Diagnostic::semantic(Pos { line: 1, col: 1 }, e.to_string()))?;
    Ok(o)
}

/// Parses a whole model file and checks calls against definitions.
pub fn parse_program(src: &str) -> Result<Program, Diagnostic> {
    let mut p = Parser::new(src, Mode::Model, None)?;
    let prog = p.program()?;
    check_calls(&prog)?;
    Ok(prog)
}

fn check_calls(prog: &Program) -> Result<(), Diagnostic> {
    fn walk(prog: &Program, e: &ObjectExpr) -> Result<(), Diagnostic> {
        match e {
            ObjectExpr::Literal(_) => Ok(()),
            ObjectExpr::Call { name, args, pos } => match prog.function(name) {
                None => Err(Diagnostic::semantic(*pos, format!("unknown function `{name}`"))),
                Some(f) if f.params.len() != args.len() => {
                    Err(Diagnostic::semantic(*pos, format!("`{name}` takes {} argument(s) but is given {}", f.params.len(), args.len())))
                }
                Some(_) => Ok(()),
            },
            ObjectExpr::Union(a, b) => {
                walk(prog, a)?;
                walk(prog, b)
            }
            ObjectExpr::Mapping { object, .. } => walk(prog, object),
        }
    }
    for d in &prog.definitions {
        walk(prog, &d.body)?;
    }
    if let Some(top) = &prog.top {
        walk(prog, top)?;
    }
    Ok(())
}

/// Parses a sheet formula in A1 notation, without the leading `=`.
pub fn parse_formula_a1(src: &str) -> Result<Formula, Diagnostic> {
    sheet_formula(src, Mode::A1, None)
}

/// Parses a sheet formula in R1C1 notation, relative to `host`.
pub fn parse_formula_r1c1(src: &str, host: &CellAddr) -> Result<Formula, Diagnostic> {
    sheet_formula(src, Mode::R1C1, Some(host.clone()))
}

fn sheet_formula(src: &str, mode: Mode, host: Option<CellAddr>) -> Result<Formula, Diagnostic> {
    let mut p = Parser::new(src, mode, host)?;
    let f = p.formula()?;
    p.finish()?;
    Ok(f.map_indices(&mut |_| unreachable!("sheet formulas have no indices")))
}

/// Parses a stand-alone format `grid(...) @ addr` or `row(...) @ addr`.
pub fn parse_format(src: &str) -> Result<GridFormatT, Diagnostic> {
    let mut p = Parser::new(src, Mode::Model, None)?;
    let g = p.format()?;
    p.finish()?;
    Ok(g)
}

/// The accepted grammar, in EBNF.
pub const GRAMMAR: &str = r##"program     = { definition | format | objexpr } ;       (* at most one objexpr *)
definition  = "let" name "(" [ name { "," name } ] ")" "be" objexpr ;
objexpr     = mapped { ( "union" | "\/" | "∪" ) mapped } ;
mapped      = primary [ "mapping" clause { "," clause } ] ;
clause      = name "to" address [ "by" orient ] ;
primary     = object | name "(" [ intexpr { "," intexpr } ] ")" | "(" objexpr ")" ;
object      = "{#" [ decl { "," decl } ] "|" [ equation { "," equation } ] "#}" ;
decl        = name "[" [ bounds { "," bounds } ] "]" ;
bounds      = intexpr ":" intexpr ;
equation    = name "[" [ lhsindex { "," lhsindex } ] "]" "=" formula ;
lhsindex    = "all" name | name relop intexpr | intexpr ;
relop       = ">" | "<" | "=" | ">=" | "<=" ;
formula     = concat { cmpop concat } ;
cmpop       = "=" | "<>" | "<" | ">" | "<=" | ">=" ;
concat      = sum { "&" sum } ;
sum         = term { ( "+" | "-" ) term } ;
term        = unary { ( "*" | "/" ) unary } ;
unary       = "-" unary | atom ;
atom        = number | string | name | element | cellref | call | "(" formula ")" ;
element     = name "[" [ subscript { "," subscript } ] "]" ;
subscript   = intexpr [ ":" intexpr ] ;
call        = ( "SUM" | "COUNTIF" | "IF" | "MIN" | "MAX" ) "(" [ formula { "," formula } ] ")" ;
cellref     = sheet "!" a1 [ ":" a1 ] ;
sheet       = name | "'" chars "'" ;
a1          = [ "$" ] letters [ "$" ] digits ;
intexpr     = intterm { ( "+" | "-" ) intterm } ;
intterm     = intatom { "*" intatom } ;
intatom     = integer | name | "-" intatom | "(" intexpr ")" ;
format      = ( "grid" "(" "[" [ items { "," items } ] "]" ")" | "row" "(" items ")" ) "@" address ;
items       = "[" [ item { "," item } ] "]" ;
item        = "'" chars "'" | "skip" [ "(" intexpr "," intexpr ")" ] | name [ "by" orient ] ;
address     = ( sheet "!" a1 | "(" address ")" ) { ( "+" | "-" ) "vector" "(" intexpr "," intexpr ")" } ;
orient      = "yx" | "xy" | "y" | "x" ;
comment     = "--" { any character but newline } ;
"##;

#[cfg(test)]
pub(crate) mod tests;
