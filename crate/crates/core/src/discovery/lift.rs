use std::collections::{BTreeMap, HashMap};

use crate::algebra::{element_addr, AlgebraError, ExpandedObject, MappingSpec};
use crate::model::{Cell, CellAddr, CellRange, CellRef, Expr, Formula, IndexExpr, Subscript, TableDecl, Workbook};

/// Result of reading a workbook back into tables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Lifted {
    pub expanded: ExpandedObject,
    /// References that fall outside every mapped table; they are kept as
    /// sheet-qualified cell references.
    pub warnings: Vec<String>,
}

/// Inverse of mapping: every cell covered by an entry of `m` becomes the
/// defining formula of the table element placed there, with references into
/// mapped tables turned back into element references.
pub fn lift(w: &Workbook, tables: &BTreeMap<String, TableDecl>, m: &MappingSpec) -> Result<Lifted, AlgebraError> {
    m.validate(tables)?;
    let mut owner: HashMap<CellAddr, (&str, Vec<i64>)> = HashMap::new();
    for entry in &m.entries {
        let decl = tables.get(&entry.table).ok_or_else(|| AlgebraError::UnmappedTable(entry.table.clone()))?;
        for index in decl.indices() {
            owner.insert(element_addr(decl, entry, &index)?, (entry.table.as_str(), index));
        }
    }
    let mut out = Lifted { expanded: ExpandedObject::new(tables.clone()), warnings: Vec::new() };
    for entry in &m.entries {
        let decl = &tables[&entry.table];
        for index in decl.indices() {
            let host = element_addr(decl, entry, &index)?;
            let Some(cell) = w.get(&host) else { continue };
            let f = match cell {
                Cell::Formula(f) => unmap(f, &host, &owner, &mut out.warnings),
                other => other.to_expr(),
            };
            out.expanded.define(&entry.table, index, f)?;
        }
    }
    Ok(out)
}

fn unmap(f: &Formula, host: &CellAddr, owner: &HashMap<CellAddr, (&str, Vec<i64>)>, warnings: &mut Vec<String>) -> Formula {
    let lit = |v: &Vec<i64>| v.iter().map(|i| Subscript::At(IndexExpr::Lit(*i))).collect::<Vec<_>>();
    match f {
        Expr::Cell(r) => {
            let a = r.resolve(&host.sheet);
            match owner.get(&a) {
                Some((t, index)) => Expr::element(*t, lit(index)),
                None => {
                    warnings.push(format!("{host}: reference to {a} lies outside every table"));
                    Expr::Cell(CellRef { sheet: Some(a.sheet), ..r.clone() })
                }
            }
        }
        Expr::Range(r) => match unmap_range(r, host, owner) {
            Some(e) => e,
            None => {
                warnings.push(format!("{host}: range {r} is not a block of one table"));
                let mut q = r.clone();
                q.start.sheet = Some(r.sheet().unwrap_or(&host.sheet).to_string());
                Expr::Range(q)
            }
        },
        Expr::Binary { op, lhs, rhs } => Expr::binary(*op, unmap(lhs, host, owner, warnings), unmap(rhs, host, owner, warnings)),
        Expr::Neg(x) => Expr::Neg(Box::new(unmap(x, host, owner, warnings))),
        Expr::Call { func, args } => Expr::call(*func, args.iter().map(|a| unmap(a, host, owner, warnings)).collect()),
        other => other.clone(),
    }
}

/// A range whose every cell belongs to one table and which covers exactly
/// the box between its corner elements.
fn unmap_range(r: &CellRange, host: &CellAddr, owner: &HashMap<CellAddr, (&str, Vec<i64>)>) -> Option<Formula> {
    let sheet = r.sheet().unwrap_or(&host.sheet);
    let (c0, r0, c1, r1) = r.bounds();
    let (t0, i0) = owner.get(&CellAddr::new(sheet, c0, r0))?;
    let (t1, i1) = owner.get(&CellAddr::new(sheet, c1, r1))?;
    if t0 != t1 {
        return None;
    }
    let cells = (c1 - c0 + 1) as u64 * (r1 - r0 + 1) as u64;
    let box_size: u64 = i0.iter().zip(i1).map(|(a, b)| (a - b).unsigned_abs() + 1).product();
    if cells != box_size {
        return None;
    }
    for row in r0..=r1 {
        for col in c0..=c1 {
            match owner.get(&CellAddr::new(sheet, col, row)) {
                Some((t, _)) if t == t0 => {}
                _ => return None,
            }
        }
    }
    let subs = i0
        .iter()
        .zip(i1)
        .map(|(a, b)| {
            let (lo, hi) = (*a.min(b), *a.max(b));
            if lo == hi {
                Subscript::At(IndexExpr::Lit(lo))
            } else {
                Subscript::Span(IndexExpr::Lit(lo), IndexExpr::Lit(hi))
            }
        })
        .collect();
    Some(Expr::element(*t0, subs))
}
