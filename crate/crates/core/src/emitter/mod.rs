//! Workbook files: SpreadsheetML 2003 XML with cells sorted by row then
//! column, CSV input, and a tab-separated dump for diffing.

mod grid;
mod xml;

use std::fmt;

use crate::notation::Pos;

pub use grid::{dump_grid, format_number, read_csv, read_csv_grid, sheet_grid, write_csv_grid};
pub use xml::{emit_xml, read_xml};

/// A positioned failure while reading XML or CSV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReadError {
    pub pos: Pos,
    pub message: String,
}

impl ReadError {
    pub(crate) fn new(pos: Pos, message: impl Into<String>) -> Self {
        ReadError { pos, message: message.into() }
    }
}

impl fmt::Display for ReadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.pos, self.message)
    }
}

impl std::error::Error for ReadError {}

/// Line and column of a byte offset.
pub(crate) fn pos_at(src: &str, offset: usize) -> Pos {
    let offset = offset.min(src.len());
    let before = &src.as_bytes()[..offset];
    let line = before.iter().filter(|b| **b == b'\n').count() + 1;
    let start = before.iter().rposition(|b| *b == b'\n').map_or(0, |i| i + 1);
    let col = String::from_utf8_lossy(&before[start..]).chars().count() + 1;
    Pos { line, col }
}

#[cfg(test)]
mod tests;
