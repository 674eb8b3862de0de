use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};

use super::addr::{CellRange, CellRef};

/// A float with bitwise equality and total ordering, so formulas can live in
/// sets. `-0.0` and `0.0` are distinct.
#[derive(Clone, Copy)]
pub struct Num(pub f64);

impl PartialEq for Num {
    fn eq(&self, other: &Self) -> bool {
        self.0.to_bits() == other.0.to_bits()
    }
}
impl Eq for Num {}
impl PartialOrd for Num {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Num {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}
impl Hash for Num {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.to_bits().hash(state)
    }
}
impl fmt::Debug for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(&self.0, f)
    }
}

/// A concrete index expression: a literal, or one variable plus a constant.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IndexExpr {
    Lit(i64),
    Var { name: String, offset: i64 },
}

impl IndexExpr {
    pub fn var(name: impl Into<String>, offset: i64) -> Self {
        IndexExpr::Var { name: name.into(), offset }
    }
}

impl fmt::Display for IndexExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexExpr::Lit(v) => write!(f, "{v}"),
            IndexExpr::Var { name, offset: 0 } => f.write_str(name),
            IndexExpr::Var { name, offset } if *offset > 0 => write!(f, "{name}+{offset}"),
            IndexExpr::Var { name, offset } => write!(f, "{name}-{}", offset.unsigned_abs()),
        }
    }
}

/// One subscript of an element reference: a single index or an inclusive span
/// (used by aggregates such as `SUM(t[y, 1:N])`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Subscript<I> {
    At(I),
    Span(I, I),
}

impl<I> Subscript<I> {
    pub fn map<J>(&self, f: &mut impl FnMut(&I) -> J) -> Subscript<J> {
        match self {
            Subscript::At(i) => Subscript::At(f(i)),
            Subscript::Span(a, b) => Subscript::Span(f(a), f(b)),
        }
    }

    pub fn try_map<J, E>(&self, f: &mut impl FnMut(&I) -> Result<J, E>) -> Result<Subscript<J>, E> {
        Ok(match self {
            Subscript::At(i) => Subscript::At(f(i)?),
            Subscript::Span(a, b) => Subscript::Span(f(a)?, f(b)?),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Concat,
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Concat => "&",
            BinOp::Eq => "=",
            BinOp::Ne => "<>",
            BinOp::Lt => "<",
            BinOp::Gt => ">",
            BinOp::Le => "<=",
            BinOp::Ge => ">=",
        }
    }

    /// Binding strength; higher binds tighter. All levels are left-associative.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Gt | BinOp::Le | BinOp::Ge => 1,
            BinOp::Concat => 2,
            BinOp::Add | BinOp::Sub => 3,
            BinOp::Mul | BinOp::Div => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Func {
    Sum,
    CountIf,
    If,
    Min,
    Max,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sum => "SUM",
            Func::CountIf => "COUNTIF",
            Func::If => "IF",
            Func::Min => "MIN",
            Func::Max => "MAX",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name.to_ascii_uppercase().as_str() {
            "SUM" => Func::Sum,
            "COUNTIF" => Func::CountIf,
            "IF" => Func::If,
            "MIN" => Func::Min,
            "MAX" => Func::Max,
            _ => return None,
        })
    }
}

/// Formula expression tree, generic over the index representation: concrete
/// objects use [`IndexExpr`], templates inside function bodies use integer
/// expressions over parameters.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expr<I = IndexExpr> {
    Number(Num),
    Text(String),
    /// The value of an index variable, e.g. `t[all i] = i`.
    Index(I),
    Element {
        table: String,
        indices: Vec<Subscript<I>>,
    },
    Cell(CellRef),
    Range(CellRange),
    Binary {
        op: BinOp,
        lhs: Box<Expr<I>>,
        rhs: Box<Expr<I>>,
    },
    Neg(Box<Expr<I>>),
    Call {
        func: Func,
        args: Vec<Expr<I>>,
    },
}

pub type Formula = Expr<IndexExpr>;

impl<I> Expr<I> {
    pub fn num(v: f64) -> Self {
        Expr::Number(Num(v))
    }

    pub fn text(s: impl Into<String>) -> Self {
        Expr::Text(s.into())
    }

    pub fn element(table: impl Into<String>, indices: Vec<Subscript<I>>) -> Self {
        Expr::Element { table: table.into(), indices }
    }

    pub fn binary(op: BinOp, lhs: Expr<I>, rhs: Expr<I>) -> Self {
        Expr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }
    }

    pub fn call(func: Func, args: Vec<Expr<I>>) -> Self {
        Expr::Call { func, args }
    }

    /// Pre-order traversal.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Expr<I>)) {
        f(self);
        match self {
            Expr::Binary { lhs, rhs, .. } => {
                lhs.visit(f);
                rhs.visit(f);
            }
            Expr::Neg(e) => e.visit(f),
            Expr::Call { args, .. } => args.iter().for_each(|a| a.visit(f)),
            _ => {}
        }
    }

    /// Rebuilds the tree with every index (in `Index` nodes and subscripts)
    /// passed through `f`.
    pub fn map_indices<J>(&self, f: &mut impl FnMut(&I) -> J) -> Expr<J> {
        self.try_map_indices::<J, std::convert::Infallible>(&mut |i| Ok(f(i))).unwrap_or_else(|e| match e {})
    }

    pub fn try_map_indices<J, E>(&self, f: &mut impl FnMut(&I) -> Result<J, E>) -> Result<Expr<J>, E> {
        Ok(match self {
            Expr::Number(n) => Expr::Number(*n),
            Expr::Text(s) => Expr::Text(s.clone()),
            Expr::Index(i) => Expr::Index(f(i)?),
            Expr::Element { table, indices } => {
                Expr::Element { table: table.clone(), indices: indices.iter().map(|s| s.try_map(f)).collect::<Result<_, _>>()? }
            }
            Expr::Cell(r) => Expr::Cell(r.clone()),
            Expr::Range(r) => Expr::Range(r.clone()),
            Expr::Binary { op, lhs, rhs } => {
                Expr::Binary { op: *op, lhs: Box::new(lhs.try_map_indices(f)?), rhs: Box::new(rhs.try_map_indices(f)?) }
            }
            Expr::Neg(e) => Expr::Neg(Box::new(e.try_map_indices(f)?)),
            Expr::Call { func, args } => {
                Expr::Call { func: *func, args: args.iter().map(|a| a.try_map_indices(f)).collect::<Result<_, _>>()? }
            }
        })
    }

    /// True when the tree holds element references (model space).
    pub fn has_elements(&self) -> bool {
        let mut found = false;
        self.visit(&mut |e| found |= matches!(e, Expr::Element { .. }));
        found
    }

    /// True when the tree holds cell or range references (sheet space).
    pub fn has_cells(&self) -> bool {
        let mut found = false;
        self.visit(&mut |e| found |= matches!(e, Expr::Cell(_) | Expr::Range(_)));
        found
    }

    /// Names of tables referenced by element references.
    pub fn tables(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let Expr::Element { table, .. } = e {
                out.insert(table.as_str());
            }
        });
        out
    }

    /// Whether the value is statically text (a literal or concatenation).
    pub fn is_text_valued(&self) -> bool {
        matches!(self, Expr::Text(_) | Expr::Binary { op: BinOp::Concat, .. })
    }
}

impl Expr<IndexExpr> {
    /// Index variables referenced anywhere in the formula.
    pub fn variables(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| match e {
            Expr::Index(IndexExpr::Var { name, .. }) => {
                out.insert(name.as_str());
            }
            Expr::Element { indices, .. } => {
                for s in indices {
                    match s {
                        Subscript::At(IndexExpr::Var { name, .. }) => {
                            out.insert(name.as_str());
                        }
                        Subscript::Span(a, b) => {
                            for i in [a, b] {
                                if let IndexExpr::Var { name, .. } = i {
                                    out.insert(name.as_str());
                                }
                            }
                        }
                        _ => {}
                    }
                }
            }
            _ => {}
        });
        out
    }
}
