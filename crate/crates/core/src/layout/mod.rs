//! Grid formats: rows and columns of table placements, text and skips,
//! aligned by maximum column width and row height, plus the spreadsheet
//! depiction of a format.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::algebra::{eval_addr, eval_int, Env, MapEntry, MappingSpec};
use crate::model::{AddrError, CellAddr, Orientation, TableDecl, Vector};
use crate::notation::{Diagnostic, GridFormatT, ItemT};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Item {
    Table { name: String, orientation: Option<Orientation> },
    Text(String),
    Skip(u32, u32),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridFormat {
    pub rows: Vec<Vec<Item>>,
    pub anchor: CellAddr,
}

impl GridFormat {
    /// `row(items) @ anchor`.
    pub fn row(items: Vec<Item>, anchor: CellAddr) -> Self {
        GridFormat { rows: vec![items], anchor }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Placement {
    pub item: Item,
    pub origin: CellAddr,
    pub width: u64,
    pub height: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LayoutError {
    #[error("layout places table `{0}`, which the model does not declare")]
    UnknownTable(String),
    #[error("table `{0}` is placed more than once")]
    DuplicatePlacement(String),
    #[error("table `{0}` is declared but not placed by any layout")]
    Unplaced(String),
    #[error("table `{table}` has {rank} dimension(s); orientation {given} does not fit")]
    Orientation { table: String, rank: usize, given: String },
    #[error("{at}: {message}")]
    Cell { at: String, message: String },
    #[error(transparent)]
    Addr(#[from] AddrError),
}

/// Width and height of an item in cells.
pub fn measure(item: &Item, tables: &BTreeMap<String, TableDecl>) -> Result<(u64, u64), LayoutError> {
    match item {
        Item::Text(_) => Ok((1, 1)),
        Item::Skip(w, h) => Ok((*w as u64, *h as u64)),
        Item::Table { name, orientation } => {
            let decl = tables.get(name).ok_or_else(|| LayoutError::UnknownTable(name.clone()))?;
            let ext: Vec<u64> = decl.dims.iter().map(|b| b.extent()).collect();
            let bad = |given: &str| LayoutError::Orientation { table: name.clone(), rank: decl.rank(), given: given.to_string() };
            match (orientation, ext.as_slice()) {
                (_, []) => Ok((1, 1)),
                (Some(Orientation::YX), [a, b]) => Ok((*b, *a)),
                (Some(Orientation::XY), [a, b]) => Ok((*a, *b)),
                (Some(Orientation::Y), [n]) => Ok((1, *n)),
                (Some(Orientation::X), [n]) => Ok((*n, 1)),
                (Some(o), _) => Err(bad(o.name())),
                (None, _) => Err(bad("(none)")),
            }
        }
    }
}

/// Places every item: column widths and row heights are maxima over the
/// grid, and each item starts at the anchor plus the widths of earlier
/// columns and heights of earlier rows.
pub fn layout_grid(g: &GridFormat, tables: &BTreeMap<String, TableDecl>) -> Result<Vec<Placement>, LayoutError> {
    let sizes: Vec<Vec<(u64, u64)>> =
        g.rows.iter().map(|row| row.iter().map(|it| measure(it, tables)).collect()).collect::<Result<_, _>>()?;
    let ncols = sizes.iter().map(Vec::len).max().unwrap_or(0);
    let mut widths = vec![0u64; ncols];
    for row in &sizes {
        for (c, (w, _)) in row.iter().enumerate() {
            widths[c] = widths[c].max(*w);
        }
    }
    let mut out = Vec::new();
    let mut dy: u64 = 0;
    for (row, row_sizes) in g.rows.iter().zip(&sizes) {
        let height = row_sizes.iter().map(|s| s.1).max().unwrap_or(0);
        let mut dx: u64 = 0;
        for (c, (item, (w, h))) in row.iter().zip(row_sizes).enumerate() {
            let origin = g.anchor.shifted(Vector::new(dx as i64, dy as i64))?;
            if *w > 0 && *h > 0 {
                origin.shifted(Vector::new(*w as i64 - 1, *h as i64 - 1))?;
            }
            out.push(Placement { item: item.clone(), origin, width: *w, height: *h });
            dx += widths[c];
        }
        dy += height;
    }
    Ok(out)
}

/// Table placements become mapping entries; text items become literal cells.
pub fn placements_to_mapping(ps: &[Placement]) -> (MappingSpec, Vec<(CellAddr, String)>) {
    let mut spec = MappingSpec::default();
    let mut texts = Vec::new();
    for p in ps {
        match &p.item {
            Item::Table { name, orientation } => spec.entries.push(MapEntry {
                table: name.clone(),
                origin: p.origin.clone(),
                orientation: orientation.unwrap_or(Orientation::YX),
            }),
            Item::Text(s) => texts.push((p.origin.clone(), s.clone())),
            Item::Skip(..) => {}
        }
    }
    (spec, texts)
}

/// Resolves a parsed format under parameter bindings.
pub fn resolve_format(g: &GridFormatT, env: &Env) -> Result<GridFormat, Diagnostic> {
    let anchor = eval_addr(&g.anchor, env, g.pos)?;
    let mut rows = Vec::with_capacity(g.rows.len());
    for row in &g.rows {
        let mut items = Vec::with_capacity(row.len());
        for it in row {
            items.push(match it {
                ItemT::Table { name, orientation } => Item::Table { name: name.clone(), orientation: *orientation },
                ItemT::Text(s) => Item::Text(s.clone()),
                ItemT::Skip(w, h) => {
                    let size = |e| -> Result<u32, Diagnostic> {
                        let v = eval_int(e, env, g.pos)?;
                        u32::try_from(v)
                            .map_err(|_| Diagnostic::semantic(g.pos, format!("skip size {v} must be between 0 and {}", u32::MAX)))
                    };
                    Item::Skip(size(w)?, size(h)?)
                }
            });
        }
        rows.push(items);
    }
    Ok(GridFormat { rows, anchor })
}

/// Classifies one layout-sheet cell; a blank cell is a one-cell skip.
pub fn classify_cell(text: &str, tables: &BTreeMap<String, TableDecl>) -> Result<Item, String> {
    let raw = text.strip_prefix('\'').unwrap_or(text);
    if text.starts_with('\'') && !raw.is_empty() && raw.ends_with('\'') {
        return Ok(Item::Text(raw[..raw.len() - 1].to_string()));
    }
    let t = raw.trim();
    if t.is_empty() {
        return Ok(Item::Skip(1, 1));
    }
    if let Some(skip) = parse_skip(t) {
        return skip;
    }
    let words: Vec<&str> = t.split_whitespace().collect();
    if let [name, orient] = words.as_slice() {
        if let Some(o) = Orientation::from_name(orient) {
            if is_identifier(name) {
                let decl = tables.get(*name).ok_or_else(|| format!("layout places table `{name}`, which the model does not declare"))?;
                if !o.fits(decl.rank()) {
                    return Err(format!("table `{name}` has {} dimension(s); orientation {o} does not fit", decl.rank()));
                }
                return Ok(Item::Table { name: name.to_string(), orientation: Some(o) });
            }
        }
    }
    Ok(Item::Text(raw.to_string()))
}

fn is_identifier(s: &str) -> bool {
    let mut c = s.chars();
    matches!(c.next(), Some(ch) if ch.is_ascii_alphabetic() || ch == '_') && c.all(|ch| ch.is_ascii_alphanumeric() || ch == '_')
}

fn parse_skip(t: &str) -> Option<Result<Item, String>> {
    let rest = t.strip_prefix("skip")?;
    let rest = rest.trim();
    if rest.is_empty() {
        return Some(Ok(Item::Skip(1, 0)));
    }
    let inner = rest.strip_prefix('(')?;
    let Some((w, h)) = inner.strip_suffix(')').and_then(|i| i.split_once(',')) else {
        return Some(Err(format!("`{t}` should read skip(width,height)")));
    };
    let num = |s: &str| s.trim().parse::<u32>().map_err(|_| format!("bad skip size `{}`", s.trim()));
    Some(num(w).and_then(|w| Ok(Item::Skip(w, num(h)?))))
}

/// Reads a layout sheet (rows of cell texts) into a format anchored at `A1`
/// of `sheet`.
pub fn parse_layout_sheet(sheet: &str, cells: &[Vec<String>], tables: &BTreeMap<String, TableDecl>) -> Result<GridFormat, LayoutError> {
    let mut rows = Vec::with_capacity(cells.len());
    for (r, row) in cells.iter().enumerate() {
        let mut items = Vec::with_capacity(row.len());
        for (c, text) in row.iter().enumerate() {
            items.push(classify_cell(text, tables).map_err(|message| LayoutError::Cell {
                at: format!("{}.layout!{}{}", sheet, crate::model::col_letters(c as u32 + 1), r + 1),
                message,
            })?);
        }
        rows.push(items);
    }
    Ok(GridFormat { rows, anchor: CellAddr::new(sheet, 1, 1) })
}

/// Every placed table must be declared and placed once; with `complete`,
/// every declared table not in `mapped_elsewhere` must be placed.
pub fn cross_check(
    tables: &BTreeMap<String, TableDecl>,
    placed: &[Placement],
    mapped_elsewhere: &[String],
    complete: bool,
) -> Result<(), LayoutError> {
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    for p in placed {
        if let Item::Table { name, .. } = &p.item {
            if !tables.contains_key(name) {
                return Err(LayoutError::UnknownTable(name.clone()));
            }
            *seen.entry(name).or_default() += 1;
        }
    }
    for name in mapped_elsewhere {
        *seen.entry(name).or_default() += 1;
    }
    if let Some((name, _)) = seen.iter().find(|(_, n)| **n > 1) {
        return Err(LayoutError::DuplicatePlacement(name.to_string()));
    }
    if complete {
        if let Some(name) = tables.keys().find(|t| !seen.contains_key(t.as_str())) {
            return Err(LayoutError::Unplaced(name.clone()));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests;
