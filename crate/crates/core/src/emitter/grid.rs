use super::{pos_at, ReadError};
use crate::model::{Cell, CellAddr, Sheet, Workbook};
use crate::notation::{parse_formula_a1, show_sheet_formula, Pos};

/// Shortest decimal text that reads back to the same number.
pub fn format_number(v: f64) -> String {
    format!("{v}")
}

fn cell_text(cell: &Cell) -> String {
    match cell {
        Cell::Number(v) => format_number(*v),
        Cell::Text(s) => s.clone(),
        Cell::Formula(f) => format!("={}", show_sheet_formula(f)),
    }
}

/// The used rectangle from `A1` as rows of cell texts; formulas as `=A1`.
pub fn sheet_grid(sheet: &Sheet) -> Vec<Vec<String>> {
    let Some(max_row) = sheet.cells.keys().map(|k| k.0).max() else { return Vec::new() };
    let max_col = sheet.cells.keys().map(|k| k.1).max().unwrap_or(0);
    let mut rows = vec![vec![String::new(); max_col as usize]; max_row as usize];
    for (&(r, c), cell) in &sheet.cells {
        rows[r as usize - 1][c as usize - 1] = cell_text(cell);
    }
    rows
}

/// Tab-separated dump of one sheet, row by row. Empty for a missing or
/// empty sheet.
pub fn dump_grid(w: &Workbook, sheet: &str) -> String {
    let Some(s) = w.sheet(sheet) else { return String::new() };
    sheet_grid(s).iter().map(|r| r.join("\t")).collect::<Vec<_>>().join("\n")
}

fn csv_pos(src: &str, p: Option<&csv::Position>) -> Pos {
    p.map_or(Pos { line: 1, col: 1 }, |p| pos_at(src, p.byte() as usize))
}

/// Records with their 0-based row numbers and 1-based lines. The csv
/// reader drops blank lines; they are counted back in so rows keep their
/// place.
fn records(text: &str) -> Result<Vec<(usize, usize, csv::StringRecord)>, ReadError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(text.as_bytes());
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut row = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| ReadError::new(csv_pos(text, e.position()), format!("CSV: {e}")))?;
        let mut at = rec.position().map_or(0, |p| p.byte() as usize);
        if at > 0 && bytes.get(at) == Some(&b'\n') && bytes[at - 1] == b'\r' {
            at += 1;
        }
        loop {
            match bytes.get(at..) {
                Some([b'\r', b'\n', ..]) => at += 2,
                Some([b'\n' | b'\r', ..]) => at += 1,
                _ => break,
            }
            row += 1;
        }
        out.push((row, pos_at(text, at).line, rec));
        row += 1;
    }
    Ok(out)
}

/// Rows of raw field texts.
pub fn read_csv_grid(text: &str) -> Result<Vec<Vec<String>>, ReadError> {
    let mut rows: Vec<Vec<String>> = Vec::new();
    for (row, _, rec) in records(text)? {
        rows.resize(row, Vec::new());
        rows.push(rec.iter().map(str::to_string).collect());
    }
    Ok(rows)
}

/// Reads a CSV into sheet `sheet`. A leading apostrophe marks text, a
/// leading `=` an A1 formula; other fields are numbers when they parse as
/// one and text otherwise. Blank fields stay empty.
pub fn read_csv(text: &str, sheet: &str) -> Result<Workbook, ReadError> {
    let mut wb = Workbook::new();
    wb.sheet_mut(sheet);
    for (r, line, rec) in records(text)? {
        for (c, field) in rec.iter().enumerate() {
            let addr = CellAddr::new(sheet, c as u32 + 1, r as u32 + 1);
            let cell = if let Some(t) = field.strip_prefix('\'') {
                Cell::Text(t.to_string())
            } else if let Some(f) = field.strip_prefix('=') {
                let parsed = parse_formula_a1(f)
                    .map_err(|d| ReadError::new(Pos { line, col: c + 1 }, format!("formula in {addr}: {}", d.message)))?;
                Cell::from_expr(parsed)
            } else if field.trim().is_empty() {
                continue;
            } else if let Some(v) = field.trim().parse::<f64>().ok().filter(|v| v.is_finite()) {
                Cell::Number(v)
            } else {
                Cell::Text(field.to_string())
            };
            wb.set(&addr, cell);
        }
    }
    Ok(wb)
}

/// Writes rows of cell texts as CSV.
pub fn write_csv_grid(rows: &[Vec<String>]) -> String {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
    for r in rows {
        w.write_record(r).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("CSV of UTF-8 fields")
}
