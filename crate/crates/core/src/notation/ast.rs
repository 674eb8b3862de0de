//! Parsed-but-unresolved program forms. Bounds, indices, addresses and skip
//! sizes are integer expressions that may mention function parameters; they
//! become constants when a function is applied.

use std::fmt;

use crate::model::{CellAddr, Expr, Orientation};

use super::Pos;

/// Integer arithmetic over literals and names (parameters or index variables).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IntExpr {
    Lit(i64),
    Name(String),
    Add(Box<IntExpr>, Box<IntExpr>),
    Sub(Box<IntExpr>, Box<IntExpr>),
    Mul(Box<IntExpr>, Box<IntExpr>),
    Neg(Box<IntExpr>),
}

impl IntExpr {
    pub fn name(n: impl Into<String>) -> Self {
        IntExpr::Name(n.into())
    }
}

impl fmt::Display for IntExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IntExpr::Lit(v) => write!(f, "{v}"),
            IntExpr::Name(n) => f.write_str(n),
            IntExpr::Add(a, b) => write!(f, "({a}+{b})"),
            IntExpr::Sub(a, b) => write!(f, "({a}-{b})"),
            IntExpr::Mul(a, b) => write!(f, "({a}*{b})"),
            IntExpr::Neg(a) => write!(f, "-({a})"),
        }
    }
}

pub type TemplateFormula = Expr<IntExpr>;

#[derive(Debug, Clone, PartialEq)]
pub struct TableDeclT {
    pub name: String,
    pub dims: Vec<(IntExpr, IntExpr)>,
    pub pos: Pos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintOp {
    All,
    Gt,
    Lt,
    Eq,
    Ge,
    Le,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LhsIndexT {
    Fixed(IntExpr),
    Bound { var: String, op: ConstraintOp, value: Option<IntExpr> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquationT {
    pub table: String,
    pub lhs: Vec<LhsIndexT>,
    pub rhs: TemplateFormula,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ObjectLit {
    pub tables: Vec<TableDeclT>,
    pub equations: Vec<EquationT>,
}

/// A cell address, possibly displaced by `vector(dx, dy)` terms.
#[derive(Debug, Clone, PartialEq)]
pub enum AddrExpr {
    Const(CellAddr),
    Shift { base: Box<AddrExpr>, dx: IntExpr, dy: IntExpr },
}

/// `Table to Address by orientation` inside a `mapping` application.
#[derive(Debug, Clone, PartialEq)]
pub struct MapClause {
    pub table: String,
    pub target: AddrExpr,
    pub orientation: Option<Orientation>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ObjectExpr {
    Literal(ObjectLit),
    Call { name: String, args: Vec<IntExpr>, pos: Pos },
    Union(Box<ObjectExpr>, Box<ObjectExpr>),
    Mapping { object: Box<ObjectExpr>, clauses: Vec<MapClause> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionDef {
    pub name: String,
    pub params: Vec<String>,
    pub body: ObjectExpr,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ItemT {
    Table { name: String, orientation: Option<Orientation> },
    Text(String),
    Skip(IntExpr, IntExpr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridFormatT {
    pub rows: Vec<Vec<ItemT>>,
    pub anchor: AddrExpr,
    pub pos: Pos,
}

/// A whole model file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Program {
    pub definitions: Vec<FunctionDef>,
    pub top: Option<ObjectExpr>,
    pub layout: Vec<GridFormatT>,
}

impl Program {
    pub fn function(&self, name: &str) -> Option<&FunctionDef> {
        self.definitions.iter().find(|d| d.name == name)
    }
}
