//! Shared domain types: tables, formulas, equations, objects and workbooks.
//!
//! An [`Object`] is the layout-free form of a spreadsheet: a set of table
//! declarations plus a set of (possibly quantified) equations. A [`Workbook`]
//! is the concrete form: sheets of addressed cells.

pub mod addr;
mod formula;
mod workbook;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{Hash, Hasher};

use thiserror::Error;

/// Inclusive cell rectangle `(col0, row0, col1, row1)`.
pub type Rect = (u32, u32, u32, u32);

pub use addr::{col_letters, letters_col, AddrError, CellAddr, CellRange, CellRef, Vector};
pub use formula::{BinOp, Expr, Formula, Func, IndexExpr, Num, Subscript};
pub use workbook::{Cell, Sheet, Workbook, WorkbookError};

/// Inclusive range of one table dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bounds {
    pub lo: i64,
    pub hi: i64,
}

impl Bounds {
    /// `None` when `lo > hi`.
    pub fn new(lo: i64, hi: i64) -> Option<Self> {
        (lo <= hi).then_some(Bounds { lo, hi })
    }

    pub fn extent(&self) -> u64 {
        (self.hi - self.lo) as u64 + 1
    }

    pub fn contains(&self, v: i64) -> bool {
        self.lo <= v && v <= self.hi
    }

    /// Smallest range covering both.
    pub fn hull(&self, other: &Bounds) -> Bounds {
        Bounds { lo: self.lo.min(other.lo), hi: self.hi.max(other.hi) }
    }
}

impl fmt::Display for Bounds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.lo, self.hi)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TableDecl {
    pub name: String,
    pub dims: Vec<Bounds>,
}

impl TableDecl {
    pub fn new(name: impl Into<String>, dims: Vec<Bounds>) -> Self {
        TableDecl { name: name.into(), dims }
    }

    pub fn scalar(name: impl Into<String>) -> Self {
        TableDecl::new(name, Vec::new())
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    pub fn element_count(&self) -> u64 {
        self.dims.iter().map(Bounds::extent).product()
    }

    pub fn contains(&self, index: &[i64]) -> bool {
        index.len() == self.dims.len() && self.dims.iter().zip(index).all(|(b, &v)| b.contains(v))
    }

    /// All index tuples in lexicographic order.
    pub fn indices(&self) -> impl Iterator<Item = Vec<i64>> + '_ {
        cartesian(self.dims.iter().map(|b| (b.lo, b.hi)).collect())
    }
}

/// Lexicographic enumeration of a box of integer tuples. An empty list of
/// ranges yields the single empty tuple.
pub fn cartesian(ranges: Vec<(i64, i64)>) -> impl Iterator<Item = Vec<i64>> {
    let empty = ranges.iter().any(|&(lo, hi)| lo > hi);
    let mut next: Option<Vec<i64>> = (!empty).then(|| ranges.iter().map(|r| r.0).collect());
    std::iter::from_fn(move || {
        let cur = next.take()?;
        let mut succ = cur.clone();
        for k in (0..succ.len()).rev() {
            if succ[k] < ranges[k].1 {
                succ[k] += 1;
                next = Some(succ);
                break;
            }
            succ[k] = ranges[k].0;
        }
        Some(cur)
    })
}

/// How a table's dimensions run on a worksheet: `yx` sends the first
/// dimension down and the second across, `xy` transposes, `y`/`x` are the
/// one-dimensional forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Orientation {
    YX,
    XY,
    Y,
    X,
}

impl Orientation {
    pub fn name(self) -> &'static str {
        match self {
            Orientation::YX => "yx",
            Orientation::XY => "xy",
            Orientation::Y => "y",
            Orientation::X => "x",
        }
    }

    pub fn from_name(s: &str) -> Option<Orientation> {
        Some(match s {
            "yx" => Orientation::YX,
            "xy" => Orientation::XY,
            "y" => Orientation::Y,
            "x" => Orientation::X,
            _ => return None,
        })
    }

    /// Number of table dimensions the orientation lays out.
    pub fn rank(self) -> usize {
        match self {
            Orientation::YX | Orientation::XY => 2,
            Orientation::Y | Orientation::X => 1,
        }
    }

    /// Whether a table of `rank` dimensions may use this orientation;
    /// scalars accept any.
    pub fn fits(self, rank: usize) -> bool {
        rank == 0 || rank == self.rank()
    }

    /// Worksheet offset `(dx, dy)` of the element at zero-based `pos`.
    pub fn offset(self, pos: &[i64]) -> Vector {
        match (self, pos) {
            (_, []) => Vector::new(0, 0),
            (Orientation::YX, [i, j]) => Vector::new(*j, *i),
            (Orientation::XY, [i, j]) => Vector::new(*i, *j),
            (Orientation::Y, [i]) => Vector::new(0, *i),
            (Orientation::X, [i]) => Vector::new(*i, 0),
            _ => panic!("orientation {} used with rank {}", self.name(), pos.len()),
        }
    }

    /// Inverse of [`Orientation::offset`] for a table of `rank` dimensions.
    pub fn position(self, rank: usize, v: Vector) -> Vec<i64> {
        match (self, rank) {
            (_, 0) => Vec::new(),
            (Orientation::YX, 2) => vec![v.dy, v.dx],
            (Orientation::XY, 2) => vec![v.dx, v.dy],
            (Orientation::Y, 1) => vec![v.dy],
            (Orientation::X, 1) => vec![v.dx],
            _ => panic!("orientation {} used with rank {rank}", self.name()),
        }
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Restriction attached to a quantified index variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Constraint {
    All,
    Gt(i64),
    Lt(i64),
    Eq(i64),
    Ge(i64),
    Le(i64),
}

impl Constraint {
    /// `bounds` narrowed by the constraint; `None` when nothing is left.
    pub fn restrict(&self, bounds: Bounds) -> Option<Bounds> {
        let (lo, hi) = match *self {
            Constraint::All => (bounds.lo, bounds.hi),
            Constraint::Gt(k) => (bounds.lo.max(k.saturating_add(1)), bounds.hi),
            Constraint::Ge(k) => (bounds.lo.max(k), bounds.hi),
            Constraint::Lt(k) => (bounds.lo, bounds.hi.min(k.saturating_sub(1))),
            Constraint::Le(k) => (bounds.lo, bounds.hi.min(k)),
            Constraint::Eq(k) => (bounds.lo.max(k), bounds.hi.min(k)),
        };
        Bounds::new(lo, hi)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Quantifier {
    pub var: String,
    pub constraint: Constraint,
}

impl Quantifier {
    pub fn all(var: impl Into<String>) -> Self {
        Quantifier { var: var.into(), constraint: Constraint::All }
    }
}

/// One left-hand index position: a fixed value or a quantified variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LhsIndex {
    Fixed(i64),
    Bound(Quantifier),
}

impl LhsIndex {
    pub fn quantifier(&self) -> Option<&Quantifier> {
        match self {
            LhsIndex::Bound(q) => Some(q),
            LhsIndex::Fixed(_) => None,
        }
    }
}

/// `table[lhs...] = rhs`. Equality, ordering and hashing ignore the names
/// chosen for quantified variables, so α-renamed equations coincide.
#[derive(Debug, Clone)]
pub struct Equation {
    pub table: String,
    pub lhs: Vec<LhsIndex>,
    pub rhs: Formula,
}

impl Equation {
    pub fn new(table: impl Into<String>, lhs: Vec<LhsIndex>, rhs: Formula) -> Self {
        Equation { table: table.into(), lhs, rhs }
    }

    /// Quantifier variables in left-to-right order.
    pub fn variables(&self) -> impl Iterator<Item = (usize, &Quantifier)> {
        self.lhs.iter().enumerate().filter_map(|(i, ix)| ix.quantifier().map(|q| (i, q)))
    }

    /// The equation with variables renamed positionally (`#0`, `#1`, ...).
    pub fn canonical(&self) -> Equation {
        let renames: BTreeMap<&str, String> = self.variables().enumerate().map(|(n, (_, q))| (q.var.as_str(), format!("#{n}"))).collect();
        if renames.is_empty() {
            return self.clone();
        }
        let lhs = self
            .lhs
            .iter()
            .map(|ix| match ix {
                LhsIndex::Bound(q) => LhsIndex::Bound(Quantifier { var: renames[q.var.as_str()].clone(), constraint: q.constraint }),
                fixed => fixed.clone(),
            })
            .collect();
        let rhs = self.rhs.map_indices(&mut |ix| match ix {
            IndexExpr::Var { name, offset } => {
                IndexExpr::Var { name: renames.get(name.as_str()).cloned().unwrap_or_else(|| name.clone()), offset: *offset }
            }
            lit => lit.clone(),
        });
        Equation { table: self.table.clone(), lhs, rhs }
    }

    fn key(&self) -> (String, Vec<LhsIndex>, Formula) {
        let c = self.canonical();
        (c.table, c.lhs, c.rhs)
    }
}

impl PartialEq for Equation {
    fn eq(&self, other: &Self) -> bool {
        self.table == other.table && self.lhs.len() == other.lhs.len() && self.key() == other.key()
    }
}

impl Eq for Equation {}

impl PartialOrd for Equation {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Equation {
    fn cmp(&self, other: &Self) -> Ordering {
        self.table.cmp(&other.table).then_with(|| self.key().cmp(&other.key()))
    }
}

impl Hash for Equation {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key().hash(state)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("table `{0}` is not declared")]
    UnknownTable(String),
    #[error("table `{table}` has {expected} dimension(s) but is indexed with {found}")]
    Arity { table: String, expected: usize, found: usize },
    #[error("table `{0}` is declared twice with different dimension counts")]
    ConflictingDecl(String),
    #[error("variable `{var}` appears twice on the left of an equation for `{table}`")]
    DuplicateVariable { table: String, var: String },
    #[error("variable `{var}` in an equation for `{table}` is not bound on the left-hand side")]
    UnboundVariable { table: String, var: String },
    #[error("cell reference `{0}` inside an object must name its sheet")]
    UnqualifiedCell(String),
}

/// Table declarations plus equations; compared as sets.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Object {
    pub tables: BTreeMap<String, TableDecl>,
    pub equations: BTreeSet<Equation>,
}

impl Object {
    pub fn new() -> Self {
        Object::default()
    }

    /// Adds a declaration, hulling bounds with an existing one of equal rank.
    pub fn declare(&mut self, decl: TableDecl) -> Result<(), ModelError> {
        match self.tables.get_mut(&decl.name) {
            Some(existing) if existing.rank() != decl.rank() => Err(ModelError::ConflictingDecl(decl.name)),
            Some(existing) => {
                for (a, b) in existing.dims.iter_mut().zip(&decl.dims) {
                    *a = a.hull(b);
                }
                Ok(())
            }
            None => {
                self.tables.insert(decl.name.clone(), decl);
                Ok(())
            }
        }
    }

    pub fn add_equation(&mut self, eq: Equation) {
        self.equations.insert(eq);
    }

    pub fn table(&self, name: &str) -> Option<&TableDecl> {
        self.tables.get(name)
    }

    /// Checks every invariant that does not need expansion.
    pub fn validate(&self) -> Result<(), ModelError> {
        for eq in &self.equations {
            let decl = self.table(&eq.table).ok_or_else(|| ModelError::UnknownTable(eq.table.clone()))?;
            if decl.rank() != eq.lhs.len() {
                return Err(ModelError::Arity { table: eq.table.clone(), expected: decl.rank(), found: eq.lhs.len() });
            }
            let mut bound = BTreeSet::new();
            for (_, q) in eq.variables() {
                if !bound.insert(q.var.as_str()) {
                    return Err(ModelError::DuplicateVariable { table: eq.table.clone(), var: q.var.clone() });
                }
            }
            let mut err = None;
            eq.rhs.visit(&mut |e| {
                if err.is_some() {
                    return;
                }
                match e {
                    Expr::Element { table, indices } => match self.table(table) {
                        None => err = Some(ModelError::UnknownTable(table.clone())),
                        Some(d) if d.rank() != indices.len() => {
                            err = Some(ModelError::Arity { table: table.clone(), expected: d.rank(), found: indices.len() })
                        }
                        Some(_) => {}
                    },
                    Expr::Cell(r) if r.sheet.is_none() => err = Some(ModelError::UnqualifiedCell(r.to_string())),
                    Expr::Range(r) if r.start.sheet.is_none() => err = Some(ModelError::UnqualifiedCell(r.to_string())),
                    _ => {}
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
            for var in eq.rhs.variables() {
                if !bound.contains(var) {
                    return Err(ModelError::UnboundVariable { table: eq.table.clone(), var: var.to_string() });
                }
            }
        }
        Ok(())
    }
}
