use std::collections::BTreeMap;

use crate::model::{
    Cell, CellAddr, CellRange, CellRef, Expr, Formula, IndexExpr, Object, Orientation, Subscript, TableDecl, Vector, Workbook,
};

use super::{expand, AlgebraError, ExpandedObject};

/// Where one table goes: the worksheet cell of its lowest element and how its
/// dimensions run.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MapEntry {
    pub table: String,
    pub origin: CellAddr,
    pub orientation: Orientation,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MappingSpec {
    pub entries: Vec<MapEntry>,
}

impl MappingSpec {
    pub fn entry(&self, table: &str) -> Option<&MapEntry> {
        self.entries.iter().find(|e| e.table == table)
    }

    /// Checks one entry per table, orientation arity and that no two table
    /// rectangles overlap.
    pub fn validate(&self, tables: &BTreeMap<String, TableDecl>) -> Result<(), AlgebraError> {
        let mut rects: Vec<(&str, &str, crate::model::Rect)> = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        for e in &self.entries {
            if !seen.insert(e.table.as_str()) {
                return Err(AlgebraError::DuplicateMapping(e.table.clone()));
            }
            let Some(decl) = tables.get(&e.table) else { continue };
            if !e.orientation.fits(decl.rank()) {
                return Err(AlgebraError::Orientation { table: e.table.clone(), orientation: e.orientation, rank: decl.rank() });
            }
            let far = extent_vector(decl, e.orientation);
            let end = e.origin.shifted(far)?;
            let rect = (e.origin.col, e.origin.row, end.col, end.row);
            for (other, sheet, r) in &rects {
                if *sheet == e.origin.sheet && rect.0 <= r.2 && r.0 <= rect.2 && rect.1 <= r.3 && r.1 <= rect.3 {
                    let at = CellAddr::new(sheet.to_string(), rect.0.max(r.0), rect.1.max(r.1));
                    return Err(AlgebraError::Overlap { first: other.to_string(), second: e.table.clone(), at: at.to_string() });
                }
            }
            rects.push((&e.table, &e.origin.sheet, rect));
        }
        Ok(())
    }
}

/// Offset from a table's origin to its far corner.
fn extent_vector(decl: &TableDecl, o: Orientation) -> Vector {
    let last: Vec<i64> = decl.dims.iter().map(|b| b.hi - b.lo).collect();
    o.offset(&last)
}

/// The worksheet cell of element `index` under `entry`.
pub fn element_addr(decl: &TableDecl, entry: &MapEntry, index: &[i64]) -> Result<CellAddr, AlgebraError> {
    let rel: Vec<i64> = decl.dims.iter().zip(index).map(|(b, v)| v - b.lo).collect();
    Ok(entry.origin.shifted(entry.orientation.offset(&rel))?)
}

/// Expands `o` and lays every defined element onto the worksheet cells named
/// by `m`, rewriting element references into relative cell references.
pub fn map_table(o: &Object, m: &MappingSpec) -> Result<Workbook, AlgebraError> {
    map_expanded(&expand(o)?, m)
}

pub fn map_expanded(e: &ExpandedObject, m: &MappingSpec) -> Result<Workbook, AlgebraError> {
    m.validate(&e.tables)?;
    let entry_of = |table: &str| -> Result<(&TableDecl, &MapEntry), AlgebraError> {
        let entry = m.entry(table).ok_or_else(|| AlgebraError::UnmappedTable(table.to_string()))?;
        Ok((&e.tables[table], entry))
    };
    let mut wb = Workbook::new();
    for entry in &m.entries {
        wb.sheet_mut(&entry.origin.sheet);
    }
    for (table, cells) in &e.cells {
        let (decl, entry) = entry_of(table)?;
        let sheet = wb.sheet_index(&entry.origin.sheet).expect("sheet created above");
        for (index, f) in cells {
            let host = element_addr(decl, entry, index)?;
            let rewritten = rewrite(f, &host, &entry_of)?;
            let slot = &mut wb.sheets[sheet].cells;
            if slot.insert((host.row, host.col), Cell::from_expr(rewritten)).is_some() {
                return Err(AlgebraError::Overlap { first: table.clone(), second: table.clone(), at: host.to_string() });
            }
        }
    }
    Ok(wb)
}

fn rewrite<'a>(
    f: &Formula,
    host: &CellAddr,
    entry_of: &impl Fn(&str) -> Result<(&'a TableDecl, &'a MapEntry), AlgebraError>,
) -> Result<Formula, AlgebraError> {
    Ok(match f {
        Expr::Element { table, indices } => {
            let (decl, entry) = entry_of(table)?;
            let lit = |i: &IndexExpr| match i {
                IndexExpr::Lit(v) => *v,
                IndexExpr::Var { .. } => unreachable!("expanded formulas have literal indices"),
            };
            let lo: Vec<i64> = indices
                .iter()
                .map(|s| match s {
                    Subscript::At(i) | Subscript::Span(i, _) => lit(i),
                })
                .collect();
            let start = element_addr(decl, entry, &lo)?;
            let sheet = (start.sheet != host.sheet).then(|| start.sheet.clone());
            let start_ref = CellRef::relative(sheet, start.col, start.row);
            if indices.iter().any(|s| matches!(s, Subscript::Span(..))) {
                let hi: Vec<i64> = indices
                    .iter()
                    .map(|s| match s {
                        Subscript::At(i) | Subscript::Span(_, i) => lit(i),
                    })
                    .collect();
                let end = element_addr(decl, entry, &hi)?;
                Expr::Range(CellRange { start: start_ref, end: CellRef::relative(None, end.col, end.row) })
            } else {
                Expr::Cell(start_ref)
            }
        }
        Expr::Binary { op, lhs, rhs } => Expr::binary(*op, rewrite(lhs, host, entry_of)?, rewrite(rhs, host, entry_of)?),
        Expr::Neg(x) => Expr::Neg(Box::new(rewrite(x, host, entry_of)?)),
        Expr::Call { func, args } => Expr::call(*func, args.iter().map(|a| rewrite(a, host, entry_of)).collect::<Result<_, _>>()?),
        other => other.clone(),
    })
}
