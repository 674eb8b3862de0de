use std::collections::BTreeSet;

use crate::model::{BinOp, CellAddr, CellRange, CellRef, Expr, Func, Orientation, Subscript};

use super::ast::*;
use super::lexer::{tokenize, Mode, RcCoord, Tok, Token};
use super::{Diagnostic, Pos};

pub(crate) struct Parser {
    toks: Vec<Token>,
    at: usize,
    mode: Mode,
    /// Host cell for resolving relative R1C1 coordinates.
    host: Option<CellAddr>,
    expected: BTreeSet<String>,
}

type PResult<T> = Result<T, Diagnostic>;

const KEYWORDS: &[&str] = &["all", "be", "by", "grid", "let", "mapping", "row", "skip", "to", "vector"];

impl Parser {
    pub(crate) fn new(src: &str, mode: Mode, host: Option<CellAddr>) -> PResult<Self> {
        Ok(Parser { toks: tokenize(src, mode)?, at: 0, mode, host, expected: BTreeSet::new() })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.at].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.at + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].pos
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].tok.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        self.expected.clear();
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            self.expected.insert(format!("`{}`", t.symbol()));
            false
        }
    }

    fn expect(&mut self, t: &Tok) -> PResult<()> {
        if self.eat(t) {
            Ok(())
        } else {
            Err(self.error())
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.is_keyword(kw) {
            self.bump();
            true
        } else {
            self.expected.insert(format!("`{kw}`"));
            false
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> PResult<()> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            Err(self.error())
        }
    }

    fn expecting(&mut self, what: &str) -> Diagnostic {
        self.expected.insert(what.to_string());
        self.error()
    }

    fn error(&self) -> Diagnostic {
        Diagnostic {
            pos: self.pos(),
            kind: super::DiagnosticKind::Syntax,
            message: format!("unexpected {}", self.peek().describe()),
            expected: self.expected.iter().cloned().collect(),
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => Err(self.expecting("identifier")),
        }
    }

    pub(crate) fn finish(&mut self) -> PResult<()> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            Err(self.expecting("end of input"))
        }
    }

    // ---- programs -------------------------------------------------------

    pub(crate) fn program(&mut self) -> PResult<Program> {
        let mut prog = Program::default();
        loop {
            if *self.peek() == Tok::Eof {
                return Ok(prog);
            }
            if self.is_keyword("let") {
                let def = self.definition()?;
                if prog.function(&def.name).is_some() {
                    return Err(Diagnostic::new(def.pos, format!("function `{}` is defined twice", def.name)));
                }
                prog.definitions.push(def);
            } else if self.at_format() {
                prog.layout.push(self.format()?);
            } else {
                let pos = self.pos();
                let e = self.object_expr()?;
                if prog.top.is_some() {
                    return Err(Diagnostic::new(pos, "a program has at most one top-level object expression"));
                }
                prog.top = Some(e);
            }
        }
    }

    fn definition(&mut self) -> PResult<FunctionDef> {
        let pos = self.pos();
        self.expect_keyword("let")?;
        let name = self.ident()?;
        self.expect(&Tok::LParen)?;
        let mut params = Vec::new();
        if !self.eat(&Tok::RParen) {
            loop {
                let ppos = self.pos();
                let p = self.ident()?;
                if params.contains(&p) {
                    return Err(Diagnostic::new(ppos, format!("parameter `{p}` repeated")));
                }
                params.push(p);
                if self.eat(&Tok::RParen) {
                    break;
                }
                self.expect(&Tok::Comma)?;
            }
        }
        self.expect_keyword("be")?;
        let body = self.object_expr()?;
        Ok(FunctionDef { name, params, body, pos })
    }

    pub(crate) fn object_expr(&mut self) -> PResult<ObjectExpr> {
        let mut lhs = self.mapped_object()?;
        while self.eat(&Tok::Union) {
            let rhs = self.mapped_object()?;
            lhs = ObjectExpr::Union(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn mapped_object(&mut self) -> PResult<ObjectExpr> {
        let object = self.primary_object()?;
        if !self.eat_keyword("mapping") {
            return Ok(object);
        }
        let mut clauses = vec![self.map_clause()?];
        while self.eat(&Tok::Comma) {
            clauses.push(self.map_clause()?);
        }
        Ok(ObjectExpr::Mapping { object: Box::new(object), clauses })
    }

    fn primary_object(&mut self) -> PResult<ObjectExpr> {
        match self.peek().clone() {
            Tok::OpenObj => Ok(ObjectExpr::Literal(self.object_literal()?)),
            Tok::LParen => {
                self.bump();
                let e = self.object_expr()?;
                self.expect(&Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(_) => {
                let pos = self.pos();
                let name = self.ident()?;
                self.expect(&Tok::LParen)?;
                let mut args = Vec::new();
                if !self.eat(&Tok::RParen) {
                    loop {
                        args.push(self.int_expr()?);
                        if self.eat(&Tok::RParen) {
                            break;
                        }
                        self.expect(&Tok::Comma)?;
                    }
                }
                Ok(ObjectExpr::Call { name, args, pos })
            }
            _ => {
                self.expected.insert("`{#`".into());
                self.expected.insert("`(`".into());
                Err(self.expecting("function call"))
            }
        }
    }

    fn map_clause(&mut self) -> PResult<MapClause> {
        let pos = self.pos();
        let table = self.ident()?;
        self.expect_keyword("to")?;
        let target = self.addr_expr()?;
        let orientation = if self.eat_keyword("by") { Some(self.orientation()?) } else { None };
        Ok(MapClause { table, target, orientation, pos })
    }

    fn orientation(&mut self) -> PResult<Orientation> {
        if let Tok::Ident(s) = self.peek() {
            if let Some(o) = Orientation::from_name(s) {
                self.bump();
                return Ok(o);
            }
        }
        Err(self.expecting("orientation (yx, xy, y or x)"))
    }

    pub(crate) fn addr_expr(&mut self) -> PResult<AddrExpr> {
        let mut base = if self.eat(&Tok::LParen) {
            let e = self.addr_expr()?;
            self.expect(&Tok::RParen)?;
            e
        } else {
            let r = self.sheet_ref()?;
            let Expr::Cell(r) = r else {
                return Err(Diagnostic::new(self.pos(), "expected a single cell address"));
            };
            AddrExpr::Const(CellAddr::new(r.sheet.expect("sheet-qualified"), r.col, r.row))
        };
        loop {
            let negate = if self.eat(&Tok::Plus) {
                false
            } else if self.eat(&Tok::Minus) {
                true
            } else {
                return Ok(base);
            };
            self.expect_keyword("vector")?;
            self.expect(&Tok::LParen)?;
            let mut dx = self.int_expr()?;
            self.expect(&Tok::Comma)?;
            let mut dy = self.int_expr()?;
            self.expect(&Tok::RParen)?;
            if negate {
                dx = IntExpr::Neg(Box::new(dx));
                dy = IntExpr::Neg(Box::new(dy));
            }
            base = AddrExpr::Shift { base: Box::new(base), dx, dy };
        }
    }

    // ---- objects --------------------------------------------------------

    pub(crate) fn object_literal(&mut self) -> PResult<ObjectLit> {
        self.expect(&Tok::OpenObj)?;
        let mut lit = ObjectLit::default();
        if !self.eat(&Tok::Bar) {
            loop {
                lit.tables.push(self.table_decl()?);
                if self.eat(&Tok::Bar) {
                    break;
                }
                self.expect(&Tok::Comma)?;
            }
        }
        if !self.eat(&Tok::CloseObj) {
            loop {
                lit.equations.push(self.equation()?);
                if self.eat(&Tok::CloseObj) {
                    break;
                }
                self.expect(&Tok::Comma)?;
            }
        }
        Ok(lit)
    }

    fn table_decl(&mut self) -> PResult<TableDeclT> {
        let pos = self.pos();
        let name = self.ident()?;
        self.expect(&Tok::LBracket)?;
        let mut dims = Vec::new();
        if !self.eat(&Tok::RBracket) {
            loop {
                let lo = self.int_expr()?;
                self.expect(&Tok::Colon)?;
                let hi = self.int_expr()?;
                dims.push((lo, hi));
                if self.eat(&Tok::RBracket) {
                    break;
                }
                self.expect(&Tok::Comma)?;
            }
        }
        Ok(TableDeclT { name, dims, pos })
    }

    fn equation(&mut self) -> PResult<EquationT> {
        let pos = self.pos();
        let table = self.ident()?;
        self.expect(&Tok::LBracket)?;
        let mut lhs = Vec::new();
        if !self.eat(&Tok::RBracket) {
            loop {
                lhs.push(self.lhs_index()?);
                if self.eat(&Tok::RBracket) {
                    break;
                }
                self.expect(&Tok::Comma)?;
            }
        }
        self.expect(&Tok::Eq)?;
        let rhs = self.formula()?;
        Ok(EquationT { table, lhs, rhs, pos })
    }

    fn lhs_index(&mut self) -> PResult<LhsIndexT> {
        if self.eat_keyword("all") {
            let var = self.ident()?;
            return Ok(LhsIndexT::Bound { var, op: ConstraintOp::All, value: None });
        }
        if let Tok::Ident(name) = self.peek().clone() {
            let op = match self.peek_at(1) {
                Tok::Gt => Some(ConstraintOp::Gt),
                Tok::Lt => Some(ConstraintOp::Lt),
                Tok::Eq => Some(ConstraintOp::Eq),
                Tok::Ge => Some(ConstraintOp::Ge),
                Tok::Le => Some(ConstraintOp::Le),
                _ => None,
            };
            if let Some(op) = op {
                let var = self.ident()?;
                debug_assert_eq!(var, name);
                self.bump();
                let value = self.int_expr()?;
                return Ok(LhsIndexT::Bound { var, op, value: Some(value) });
            }
        }
        Ok(LhsIndexT::Fixed(self.int_expr()?))
    }

    // ---- integer expressions ---------------------------------------------

    pub(crate) fn int_expr(&mut self) -> PResult<IntExpr> {
        let mut lhs = self.int_term()?;
        loop {
            if self.eat(&Tok::Plus) {
                lhs = IntExpr::Add(Box::new(lhs), Box::new(self.int_term()?));
            } else if self.eat(&Tok::Minus) {
                lhs = IntExpr::Sub(Box::new(lhs), Box::new(self.int_term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn int_term(&mut self) -> PResult<IntExpr> {
        let mut lhs = self.int_unary()?;
        while self.eat(&Tok::Star) {
            lhs = IntExpr::Mul(Box::new(lhs), Box::new(self.int_unary()?));
        }
        Ok(lhs)
    }

    fn int_unary(&mut self) -> PResult<IntExpr> {
        if self.eat(&Tok::Minus) {
            return match self.peek().clone() {
                Tok::Number(..) => Ok(IntExpr::Lit(-self.int_literal()?)),
                _ => Ok(IntExpr::Neg(Box::new(self.int_unary()?))),
            };
        }
        match self.peek().clone() {
            Tok::Number(..) => Ok(IntExpr::Lit(self.int_literal()?)),
            Tok::LParen => {
                self.bump();
                let e = self.int_expr()?;
                self.expect(&Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(_) => Ok(IntExpr::Name(self.ident()?)),
            _ => Err(self.expecting("integer expression")),
        }
    }

    fn int_literal(&mut self) -> PResult<i64> {
        let pos = self.pos();
        match self.bump() {
            Tok::Number(_, raw) => raw.parse().map_err(|_| Diagnostic::new(pos, format!("expected an integer, found {raw}"))),
            _ => unreachable!("caller checked for a number"),
        }
    }

    // ---- formulas -------------------------------------------------------

    pub(crate) fn formula(&mut self) -> PResult<TemplateFormula> {
        self.binary(1)
    }

    fn binop(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::Plus => BinOp::Add,
            Tok::Minus => BinOp::Sub,
            Tok::Star => BinOp::Mul,
            Tok::Slash => BinOp::Div,
            Tok::Amp => BinOp::Concat,
            Tok::Eq => BinOp::Eq,
            Tok::Ne => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Gt => BinOp::Gt,
            Tok::Le => BinOp::Le,
            Tok::Ge => BinOp::Ge,
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> PResult<TemplateFormula> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop().filter(|op| op.precedence() >= min_prec) {
            self.bump();
            let rhs = self.binary(op.precedence() + 1)?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        self.expected.insert("operator".into());
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<TemplateFormula> {
        if self.eat(&Tok::Minus) {
            if let Tok::Number(v, _) = *self.peek() {
                self.bump();
                return Ok(Expr::num(-v));
            }
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<TemplateFormula> {
        match self.peek().clone() {
            Tok::Number(v, _) => {
                self.bump();
                Ok(Expr::num(v))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Expr::Text(s))
            }
            Tok::LParen => {
                self.bump();
                let e = self.formula()?;
                self.expect(&Tok::RParen)?;
                Ok(e)
            }
            Tok::A1(_) | Tok::Rc { .. } if self.mode != Mode::Model => self.local_ref(None),
            Tok::SQuote(_) if *self.peek_at(1) == Tok::Bang => self.sheet_ref(),
            Tok::Ident(name) => match self.peek_at(1) {
                Tok::LParen => self.call(),
                Tok::Bang => self.sheet_ref(),
                Tok::LBracket if self.mode == Mode::Model => self.element(),
                _ if self.mode == Mode::Model && !KEYWORDS.contains(&name.as_str()) => {
                    self.bump();
                    Ok(Expr::Index(IntExpr::Name(name)))
                }
                _ => Err(self.expecting("formula")),
            },
            _ => {
                self.expected.insert("number".into());
                self.expected.insert("string".into());
                Err(self.expecting("reference"))
            }
        }
    }

    fn call(&mut self) -> PResult<TemplateFormula> {
        let pos = self.pos();
        let Tok::Ident(name) = self.bump() else { unreachable!() };
        let func = Func::from_name(&name)
            .ok_or_else(|| Diagnostic::new(pos, format!("unsupported function `{name}` (supported: SUM, COUNTIF, IF, MIN, MAX)")))?;
        self.expect(&Tok::LParen)?;
        let mut args = Vec::new();
        if !self.eat(&Tok::RParen) {
            loop {
                args.push(self.formula()?);
                if self.eat(&Tok::RParen) {
                    break;
                }
                self.expect(&Tok::Comma)?;
            }
        }
        let arity_ok = match func {
            Func::CountIf => args.len() == 2,
            Func::If => args.len() == 3,
            Func::Sum | Func::Min | Func::Max => !args.is_empty(),
        };
        if !arity_ok {
            return Err(Diagnostic::new(pos, format!("wrong number of arguments to {}", func.name())));
        }
        Ok(Expr::call(func, args))
    }

    fn element(&mut self) -> PResult<TemplateFormula> {
        let table = self.ident()?;
        self.expect(&Tok::LBracket)?;
        let mut indices = Vec::new();
        if !self.eat(&Tok::RBracket) {
            loop {
                let a = self.int_expr()?;
                indices.push(if self.eat(&Tok::Colon) { Subscript::Span(a, self.int_expr()?) } else { Subscript::At(a) });
                if self.eat(&Tok::RBracket) {
                    break;
                }
                self.expect(&Tok::Comma)?;
            }
        }
        Ok(Expr::Element { table, indices })
    }

    /// `Sheet!REF` or `'Sheet name'!REF`, optionally followed by `:REF`.
    fn sheet_ref(&mut self) -> PResult<TemplateFormula> {
        let sheet = match self.peek().clone() {
            Tok::Ident(s) | Tok::SQuote(s) => {
                self.bump();
                s
            }
            _ => return Err(self.expecting("sheet name")),
        };
        self.expect(&Tok::Bang)?;
        self.local_ref(Some(sheet))
    }

    fn local_ref(&mut self, sheet: Option<String>) -> PResult<TemplateFormula> {
        let start = self.cell_token(sheet)?;
        if *self.peek() == Tok::Colon && matches!(self.peek_at(1), Tok::A1(_) | Tok::Rc { .. }) {
            self.bump();
            let end = self.cell_token(None)?;
            return Ok(Expr::Range(CellRange { start, end }));
        }
        Ok(Expr::Cell(start))
    }

    fn cell_token(&mut self, sheet: Option<String>) -> PResult<CellRef> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::A1(r) => {
                self.bump();
                Ok(CellRef { sheet, ..r })
            }
            Tok::Rc { row, col } => {
                self.bump();
                let host = self.host.as_ref().ok_or_else(|| Diagnostic::new(pos, "R1C1 reference without a host cell"))?;
                let resolve = |c: RcCoord, base: u32| -> Option<(u32, bool)> {
                    match c {
                        RcCoord::Abs(n) => Some((n, true)),
                        RcCoord::Rel(d) => {
                            let v = base as i64 + d;
                            (v >= 1 && v <= u32::MAX as i64).then_some((v as u32, false))
                        }
                    }
                };
                let (r, row_abs) = resolve(row, host.row).ok_or_else(|| Diagnostic::new(pos, "relative row reference leaves the sheet"))?;
                let (c, col_abs) =
                    resolve(col, host.col).ok_or_else(|| Diagnostic::new(pos, "relative column reference leaves the sheet"))?;
                Ok(CellRef { sheet, col: c, row: r, col_abs, row_abs })
            }
            _ => Err(self.expecting("cell reference")),
        }
    }

    // ---- layout formats ---------------------------------------------------

    pub(crate) fn at_format(&self) -> bool {
        (self.is_keyword("grid") || self.is_keyword("row")) && *self.peek_at(1) == Tok::LParen
    }

    pub(crate) fn format(&mut self) -> PResult<GridFormatT> {
        let pos = self.pos();
        let rows = if self.eat_keyword("grid") {
            self.expect(&Tok::LParen)?;
            self.expect(&Tok::LBracket)?;
            let mut rows = Vec::new();
            if !self.eat(&Tok::RBracket) {
                loop {
                    rows.push(self.item_list()?);
                    if self.eat(&Tok::RBracket) {
                        break;
                    }
                    self.expect(&Tok::Comma)?;
                }
            }
            self.expect(&Tok::RParen)?;
            rows
        } else {
            self.expect_keyword("row")?;
            self.expect(&Tok::LParen)?;
            let items = self.item_list()?;
            self.expect(&Tok::RParen)?;
            vec![items]
        };
        self.expect(&Tok::At)?;
        let anchor = self.addr_expr()?;
        Ok(GridFormatT { rows, anchor, pos })
    }

    fn item_list(&mut self) -> PResult<Vec<ItemT>> {
        self.expect(&Tok::LBracket)?;
        let mut items = Vec::new();
        if self.eat(&Tok::RBracket) {
            return Ok(items);
        }
        loop {
            items.push(self.item()?);
            if self.eat(&Tok::RBracket) {
                return Ok(items);
            }
            self.expect(&Tok::Comma)?;
        }
    }

    fn item(&mut self) -> PResult<ItemT> {
        match self.peek().clone() {
            Tok::SQuote(s) | Tok::Str(s) => {
                self.bump();
                Ok(ItemT::Text(s))
            }
            Tok::Ident(k) if k == "skip" => {
                self.bump();
                if self.eat(&Tok::LParen) {
                    let w = self.int_expr()?;
                    self.expect(&Tok::Comma)?;
                    let h = self.int_expr()?;
                    self.expect(&Tok::RParen)?;
                    Ok(ItemT::Skip(w, h))
                } else {
                    Ok(ItemT::Skip(IntExpr::Lit(1), IntExpr::Lit(0)))
                }
            }
            Tok::Ident(_) => {
                let name = self.ident()?;
                let orientation = if self.eat_keyword("by") { Some(self.orientation()?) } else { None };
                Ok(ItemT::Table { name, orientation })
            }
            _ => Err(self.expecting("layout item")),
        }
    }
}
