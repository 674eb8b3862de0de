use std::collections::BTreeMap;

use thiserror::Error;

use super::addr::CellAddr;
use super::formula::{Expr, Formula};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Number(f64),
    Text(String),
    Formula(Formula),
}

impl Cell {
    pub fn is_formula(&self) -> bool {
        matches!(self, Cell::Formula(_))
    }

    /// Literal cells become constant formulas; formulas pass through.
    pub fn to_expr(&self) -> Formula {
        match self {
            Cell::Number(v) => Expr::num(*v),
            Cell::Text(s) => Expr::text(s.clone()),
            Cell::Formula(f) => f.clone(),
        }
    }

    /// Inverse of [`Cell::to_expr`]: bare literals become literal cells.
    pub fn from_expr(f: Formula) -> Cell {
        match f {
            Expr::Number(n) => Cell::Number(n.0),
            Expr::Text(s) => Cell::Text(s),
            other => Cell::Formula(other),
        }
    }
}

/// One worksheet. Cells are keyed by `(row, col)`, which is also the order
/// SpreadsheetML requires on disk.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Sheet {
    pub name: String,
    pub cells: BTreeMap<(u32, u32), Cell>,
}

impl Sheet {
    pub fn new(name: impl Into<String>) -> Self {
        Sheet { name: name.into(), cells: BTreeMap::new() }
    }

    pub fn get(&self, col: u32, row: u32) -> Option<&Cell> {
        self.cells.get(&(row, col))
    }

    /// Cells inside the inclusive rectangle, row by row.
    pub fn cells_in(&self, (c0, r0, c1, r1): super::Rect) -> impl Iterator<Item = ((u32, u32), &Cell)> + '_ {
        self.cells.range((r0, c0)..=(r1, c1)).filter(move |((_, c), _)| *c >= c0 && *c <= c1).map(|(k, v)| (*k, v))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WorkbookError {
    #[error("cell {0} is defined twice")]
    DuplicateCell(String),
    #[error("sheet `{0}` already exists and is not empty")]
    SheetCollision(String),
    #[error("cell {at} refers to missing sheet `{sheet}`")]
    MissingSheet { at: String, sheet: String },
}

/// Sheets in insertion order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Workbook {
    pub sheets: Vec<Sheet>,
}

impl Workbook {
    pub fn new() -> Self {
        Workbook::default()
    }

    pub fn sheet(&self, name: &str) -> Option<&Sheet> {
        self.sheets.iter().find(|s| s.name == name)
    }

    pub fn sheet_index(&self, name: &str) -> Option<usize> {
        self.sheets.iter().position(|s| s.name == name)
    }

    /// The named sheet, appended if absent.
    pub fn sheet_mut(&mut self, name: &str) -> &mut Sheet {
        let idx = match self.sheet_index(name) {
            Some(i) => i,
            None => {
                self.sheets.push(Sheet::new(name));
                self.sheets.len() - 1
            }
        };
        &mut self.sheets[idx]
    }

    pub fn get(&self, addr: &CellAddr) -> Option<&Cell> {
        self.sheet(&addr.sheet)?.get(addr.col, addr.row)
    }

    /// Stores a cell; an occupied address is an error.
    pub fn insert(&mut self, addr: &CellAddr, cell: Cell) -> Result<(), WorkbookError> {
        let sheet = self.sheet_mut(&addr.sheet);
        if sheet.cells.contains_key(&(addr.row, addr.col)) {
            return Err(WorkbookError::DuplicateCell(addr.to_string()));
        }
        sheet.cells.insert((addr.row, addr.col), cell);
        Ok(())
    }

    /// Stores a cell, replacing whatever was there.
    pub fn set(&mut self, addr: &CellAddr, cell: Cell) {
        self.sheet_mut(&addr.sheet).cells.insert((addr.row, addr.col), cell);
    }

    pub fn cell_count(&self) -> usize {
        self.sheets.iter().map(|s| s.cells.len()).sum()
    }

    /// All cells with their addresses, sheet by sheet in storage order.
    pub fn iter(&self) -> impl Iterator<Item = (CellAddr, &Cell)> + '_ {
        self.sheets.iter().flat_map(|s| s.cells.iter().map(move |(&(row, col), c)| (CellAddr::new(s.name.clone(), col, row), c)))
    }

    /// Adds every cell of `other`. Sheets of `other` that already exist here
    /// must not share any address.
    pub fn union(mut self, other: &Workbook) -> Result<Workbook, WorkbookError> {
        for sheet in &other.sheets {
            for (&(row, col), cell) in &sheet.cells {
                self.insert(&CellAddr::new(sheet.name.clone(), col, row), cell.clone())?;
            }
            self.sheet_mut(&sheet.name);
        }
        Ok(self)
    }

    /// Every sheet named by a reference must exist.
    pub fn validate(&self) -> Result<(), WorkbookError> {
        for (addr, cell) in self.iter() {
            if let Cell::Formula(f) = cell {
                let mut missing = None;
                f.visit(&mut |e| {
                    let sheet = match e {
                        Expr::Cell(r) => r.sheet.as_deref(),
                        Expr::Range(r) => r.sheet(),
                        _ => None,
                    };
                    if let Some(s) = sheet {
                        if self.sheet(s).is_none() && missing.is_none() {
                            missing = Some(s.to_string());
                        }
                    }
                });
                if let Some(sheet) = missing {
                    return Err(WorkbookError::MissingSheet { at: addr.to_string(), sheet });
                }
            }
        }
        Ok(())
    }
}
