//! Cross-tabulation of two columns of flat data: a column of combined keys
//! and a grid of COUNTIF formulas over it, added to the source workbook.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::algebra::{map_table, union, AlgebraError, MapEntry, MappingSpec};
use crate::emitter::format_number;
use crate::model::{
    col_letters, letters_col, Bounds, Cell, CellAddr, CellRange, CellRef, Equation, Expr, Func, LhsIndex, Object, Orientation, TableDecl,
    Vector, Workbook,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CrosstabError {
    #[error("spec line {line}: {message}")]
    Spec { line: usize, message: String },
    #[error("spec: missing key `{0}`")]
    MissingKey(&'static str),
    #[error("exactly two dimension columns are supported, {0} given")]
    Dimensions(usize),
    #[error("source sheet `{0}` does not exist")]
    NoSource(String),
    #[error("column {column} has no values in rows {lo}..{hi} of `{sheet}`")]
    EmptyColumn { sheet: String, column: String, lo: u32, hi: u32 },
    #[error("{0} holds a formula; only literal values can be tabulated")]
    NotLiteral(String),
    #[error("target sheet `{0}` already holds cells")]
    SheetInUse(String),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Addr(#[from] crate::model::AddrError),
}

/// What to tabulate and where the result goes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrosstabSpec {
    pub source_sheet: String,
    pub header_row: u32,
    pub data_rows: (u32, u32),
    /// Two 1-based column numbers: the first runs across, the second down.
    pub dims: Vec<u32>,
    pub combiner_sheet: String,
    /// Top-left cell of the result; the sheet is the result sheet.
    pub result_anchor: CellAddr,
}

/// Reads `key=value` lines: `source_sheet`, `header_row`, `rows` (`2:25`),
/// `dims` (`A,C`), `result_anchor` (`Crosstab!A1`) and optionally
/// `combiner_sheet` (default `Combine`). `#` and `--` start comments.
pub fn parse_spec(text: &str) -> Result<CrosstabSpec, CrosstabError> {
    let mut kv: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let body = line.split(['#']).next().unwrap_or("");
        let body = body.split("--").next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let bad = |message: String| CrosstabError::Spec { line: n + 1, message };
        let (k, v) = body.split_once('=').ok_or_else(|| bad(format!("expected key=value, found `{body}`")))?;
        let k = k.trim();
        if !["source_sheet", "header_row", "rows", "dims", "result_anchor", "combiner_sheet"].contains(&k) {
            return Err(bad(format!("unknown key `{k}`")));
        }
        if kv.insert(k, (n + 1, v.trim())).is_some() {
            return Err(bad(format!("key `{k}` given twice")));
        }
    }
    let get = |k: &'static str| kv.get(k).copied().ok_or(CrosstabError::MissingKey(k));
    let bad = |line: usize, message: String| CrosstabError::Spec { line, message };
    let int =
        |(line, v): (usize, &str)| v.parse::<u32>().ok().filter(|n| *n > 0).ok_or_else(|| bad(line, format!("`{v}` is not a row number")));

    let source_sheet = get("source_sheet")?.1.to_string();
    let header_row = int(get("header_row")?)?;
    let (line, rows) = get("rows")?;
    let (lo, hi) = rows.split_once(':').ok_or_else(|| bad(line, format!("rows `{rows}` must look like 2:25")))?;
    let (lo, hi) = (int((line, lo.trim()))?, int((line, hi.trim()))?);
    if lo > hi {
        return Err(bad(line, format!("rows {lo}:{hi} are empty")));
    }
    if (lo..=hi).contains(&header_row) {
        return Err(bad(line, format!("rows {lo}:{hi} include header row {header_row}")));
    }
    let (line, dims) = get("dims")?;
    let dims = dims
        .split(',')
        .map(|d| {
            let d = d.trim();
            d.parse::<u32>().ok().filter(|n| *n > 0).or_else(|| letters_col(d)).ok_or_else(|| bad(line, format!("`{d}` is not a column")))
        })
        .collect::<Result<Vec<u32>, _>>()?;
    if dims.len() != 2 {
        return Err(CrosstabError::Dimensions(dims.len()));
    }
    if dims[0] == dims[1] {
        return Err(bad(line, "the two dimension columns must differ".into()));
    }
    let (line, anchor) = get("result_anchor")?;
    let result_anchor: CellAddr = anchor.parse().map_err(|e| bad(line, format!("{e}")))?;
    let combiner_sheet = kv.get("combiner_sheet").map_or("Combine", |(_, v)| v).to_string();
    if combiner_sheet == result_anchor.sheet || combiner_sheet == source_sheet || result_anchor.sheet == source_sheet {
        return Err(bad(line, "source, combiner and result sheets must all differ".into()));
    }
    Ok(CrosstabSpec { source_sheet, header_row, data_rows: (lo, hi), dims, combiner_sheet, result_anchor })
}

fn literal_text(w: &Workbook, at: &CellAddr) -> Result<Option<String>, CrosstabError> {
    match w.get(at) {
        None => Ok(None),
        Some(Cell::Number(v)) => Ok(Some(format_number(*v))),
        Some(Cell::Text(t)) => Ok(Some(t.clone())),
        Some(Cell::Formula(_)) => Err(CrosstabError::NotLiteral(at.to_string())),
    }
}

/// Header texts of the two dimension columns, column letters when blank.
pub fn headers(w: &Workbook, spec: &CrosstabSpec) -> Vec<String> {
    spec.dims
        .iter()
        .map(|&c| {
            literal_text(w, &CellAddr::new(spec.source_sheet.clone(), c, spec.header_row)).ok().flatten().unwrap_or_else(|| col_letters(c))
        })
        .collect()
}

/// Distinct values of `column` over `rows`, sorted. Blank cells are left
/// out; numbers are written as the evaluator would concatenate them.
pub fn unique_sorted_values(w: &Workbook, sheet: &str, column: u32, rows: (u32, u32)) -> Result<Vec<String>, CrosstabError> {
    let mut out = BTreeSet::new();
    for row in rows.0..=rows.1 {
        if let Some(v) = literal_text(w, &CellAddr::new(sheet, column, row))? {
            out.insert(v);
        }
    }
    Ok(out.into_iter().collect())
}

const KEYS: &str = "Keys";
const COUNTS: &str = "Counts";
const ACROSS: &str = "Across";
const DOWN: &str = "Down";

fn fixed(ix: &[i64]) -> Vec<LhsIndex> {
    ix.iter().map(|v| LhsIndex::Fixed(*v)).collect()
}

fn dims_of(n: usize) -> Bounds {
    Bounds::new(1, n as i64).expect("non-empty")
}

/// One key per data row, `=Src!$A$r & "_" & Src!$C$r & "_"`, in a column
/// from row 1 of the combiner sheet.
pub fn build_combiner(spec: &CrosstabSpec) -> (Object, MappingSpec) {
    let (lo, hi) = spec.data_rows;
    let mut o = Object::new();
    o.declare(TableDecl::new(KEYS, vec![dims_of((hi - lo + 1) as usize)])).expect("fresh object");
    let cell = |col: u32, row: u32| Expr::Cell(CellRef::absolute(Some(spec.source_sheet.clone()), col, row));
    for (k, row) in (lo..=hi).enumerate() {
        let concat = |a, b| Expr::binary(crate::model::BinOp::Concat, a, b);
        let rhs = spec.dims.iter().fold(None, |acc: Option<Expr>, &col| {
            let head = match acc {
                None => cell(col, row),
                Some(a) => concat(a, cell(col, row)),
            };
            Some(concat(head, Expr::text("_")))
        });
        o.add_equation(Equation::new(KEYS, fixed(&[k as i64 + 1]), rhs.expect("two dimensions")));
    }
    let m = MappingSpec {
        entries: vec![MapEntry {
            table: KEYS.into(),
            origin: CellAddr::new(spec.combiner_sheet.clone(), 1, 1),
            orientation: Orientation::Y,
        }],
    };
    (o, m)
}

/// Counts table over `across` × `down` value lists: rows are `down`,
/// columns `across`; each cell counts the key `across_down_` in `keys`.
/// Header tables hold the values.
pub fn build_crosstab(across: &[String], down: &[String], keys: &CellRange) -> Object {
    let mut o = Object::new();
    o.declare(TableDecl::new(COUNTS, vec![dims_of(down.len()), dims_of(across.len())])).expect("fresh object");
    o.declare(TableDecl::new(ACROSS, vec![dims_of(across.len())])).expect("fresh object");
    o.declare(TableDecl::new(DOWN, vec![dims_of(down.len())])).expect("fresh object");
    for (i, d) in down.iter().enumerate() {
        o.add_equation(Equation::new(DOWN, fixed(&[i as i64 + 1]), Expr::text(d.clone())));
        for (j, a) in across.iter().enumerate() {
            let rhs = Expr::call(Func::CountIf, vec![Expr::Range(keys.clone()), Expr::text(format!("{a}_{d}_"))]);
            o.add_equation(Equation::new(COUNTS, fixed(&[i as i64 + 1, j as i64 + 1]), rhs));
        }
    }
    for (j, a) in across.iter().enumerate() {
        o.add_equation(Equation::new(ACROSS, fixed(&[j as i64 + 1]), Expr::text(a.clone())));
    }
    o
}

/// The source workbook plus a combiner sheet and a result sheet: values of
/// the first dimension across the top, of the second down the left, counts
/// between. Cells of `w` are left as they were.
pub fn insert_crosstab(w: &Workbook, spec: &CrosstabSpec) -> Result<Workbook, CrosstabError> {
    if spec.dims.len() != 2 {
        return Err(CrosstabError::Dimensions(spec.dims.len()));
    }
    if w.sheet(&spec.source_sheet).is_none() {
        return Err(CrosstabError::NoSource(spec.source_sheet.clone()));
    }
    for s in [&spec.combiner_sheet, &spec.result_anchor.sheet] {
        if w.sheet(s).is_some_and(|s| !s.cells.is_empty()) {
            return Err(CrosstabError::SheetInUse(s.clone()));
        }
    }
    let values = |col: u32| -> Result<Vec<String>, CrosstabError> {
        let v = unique_sorted_values(w, &spec.source_sheet, col, spec.data_rows)?;
        if v.is_empty() {
            return Err(CrosstabError::EmptyColumn {
                sheet: spec.source_sheet.clone(),
                column: col_letters(col),
                lo: spec.data_rows.0,
                hi: spec.data_rows.1,
            });
        }
        Ok(v)
    };
    let across = values(spec.dims[0])?;
    let down = values(spec.dims[1])?;
    let n = spec.data_rows.1 - spec.data_rows.0 + 1;
    let keys = CellRange { start: CellRef::absolute(Some(spec.combiner_sheet.clone()), 1, 1), end: CellRef::absolute(None, 1, n) };
    let (combiner, mut m) = build_combiner(spec);
    let table = build_crosstab(&across, &down, &keys);
    let object = union(&combiner, &table)?;
    let at = |dx, dy| spec.result_anchor.shifted(Vector::new(dx, dy));
    let entry = |t: &str, origin, orientation| MapEntry { table: t.into(), origin, orientation };
    m.entries.push(entry(ACROSS, at(1, 0)?, Orientation::X));
    m.entries.push(entry(DOWN, at(0, 1)?, Orientation::Y));
    m.entries.push(entry(COUNTS, at(1, 1)?, Orientation::YX));
    let placed = map_table(&object, &m)?;
    w.clone().union(&placed).map_err(|e| CrosstabError::SheetInUse(e.to_string()))
}
