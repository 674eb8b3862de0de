use std::fmt::Write as _;

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use super::{format_number, pos_at, ReadError};
use crate::model::{Cell, CellAddr, Sheet, Workbook};
use crate::notation::{parse_formula_r1c1, show_sheet_formula_r1c1};

const HEADER: &str = r#"<?xml version="1.0"?>
<?mso-application progid="Excel.Sheet"?>
<Workbook xmlns="urn:schemas-microsoft-com:office:spreadsheet"
 xmlns:o="urn:schemas-microsoft-com:office:office"
 xmlns:x="urn:schemas-microsoft-com:office:excel"
 xmlns:ss="urn:schemas-microsoft-com:office:spreadsheet">
"#;

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            '\n' => out.push_str("&#10;"),
            '\r' => out.push_str("&#13;"),
            '\t' => out.push_str("&#9;"),
            c => out.push(c),
        }
    }
    out
}

/// Serializes `w`. Rows ascend and cells ascend within each row; every row
/// and cell carries its index. Formulas are written in relative R1C1.
pub fn emit_xml(w: &Workbook) -> Vec<u8> {
    let mut out = String::from(HEADER);
    for sheet in &w.sheets {
        write_sheet(&mut out, sheet);
    }
    out.push_str("</Workbook>\n");
    out.into_bytes()
}

fn write_sheet(out: &mut String, sheet: &Sheet) {
    writeln!(out, " <Worksheet ss:Name=\"{}\">", escape(&sheet.name)).unwrap();
    out.push_str("  <Table>\n");
    let mut current_row = None;
    for (&(row, col), cell) in &sheet.cells {
        if current_row != Some(row) {
            if current_row.is_some() {
                out.push_str("   </Row>\n");
            }
            writeln!(out, "   <Row ss:Index=\"{row}\">").unwrap();
            current_row = Some(row);
        }
        write!(out, "    <Cell ss:Index=\"{col}\"").unwrap();
        match cell {
            Cell::Number(v) => {
                writeln!(out, "><Data ss:Type=\"Number\">{}</Data></Cell>", format_number(*v)).unwrap();
            }
            Cell::Text(s) => {
                writeln!(out, "><Data ss:Type=\"String\">{}</Data></Cell>", escape(s)).unwrap();
            }
            Cell::Formula(f) => {
                let host = CellAddr::new(sheet.name.clone(), col, row);
                writeln!(out, " ss:Formula=\"={}\"/>", escape(&show_sheet_formula_r1c1(f, &host))).unwrap();
            }
        }
    }
    if current_row.is_some() {
        out.push_str("   </Row>\n");
    }
    out.push_str("  </Table>\n </Worksheet>\n");
}

#[derive(Default)]
struct PendingCell {
    col: u32,
    formula: Option<(String, usize)>,
    data_type: Option<String>,
    data: Option<String>,
}

struct State<'a> {
    src: &'a str,
    wb: Workbook,
    saw_workbook: bool,
    sheet: Option<usize>,
    row: u32,
    col: u32,
    cell: Option<PendingCell>,
    in_data: bool,
}

/// Reads the SpreadsheetML subset written by [`emit_xml`]. Styles and other
/// unknown elements are skipped. Nothing is returned unless the whole input
/// is well formed.
pub fn read_xml(bytes: &[u8]) -> Result<Workbook, ReadError> {
    let src = std::str::from_utf8(bytes).map_err(|e| {
        let good = &bytes[..e.valid_up_to()];
        ReadError::new(pos_at(std::str::from_utf8(good).unwrap_or(""), good.len()), "input is not valid UTF-8")
    })?;
    let mut reader = Reader::from_str(src);
    reader.config_mut().check_end_names = true;
    let mut st = State { src, wb: Workbook::new(), saw_workbook: false, sheet: None, row: 0, col: 0, cell: None, in_data: false };
    let mut depth: usize = 0;
    loop {
        let at = reader.buffer_position() as usize;
        let ev = reader
            .read_event()
            .map_err(|e| ReadError::new(pos_at(src, reader.error_position() as usize), format!("malformed XML: {e}")))?;
        match ev {
            Event::Start(e) => {
                depth += 1;
                st.open(&e, at)?;
            }
            Event::Empty(e) => {
                st.open(&e, at)?;
                st.close(e.local_name().as_ref(), at)?;
            }
            Event::End(e) => {
                depth = depth.saturating_sub(1);
                st.close(e.local_name().as_ref(), at)?;
            }
            Event::Text(t) if st.in_data => st.push_text(&t.xml10_content()),
            Event::CData(t) if st.in_data => st.push_text(&t),
            Event::GeneralRef(r) if st.in_data => {
                let ch = match r.resolve_char_ref() {
                    Ok(Some(c)) => c.to_string(),
                    Ok(None) => match &*r {
                        "lt" => "<".into(),
                        "gt" => ">".into(),
                        "amp" => "&".into(),
                        "apos" => "'".into(),
                        "quot" => "\"".into(),
                        other => return Err(ReadError::new(pos_at(src, at), format!("unknown entity `&{other};`"))),
                    },
                    Err(e) => return Err(ReadError::new(pos_at(src, at), format!("bad character reference: {e}"))),
                };
                st.push_text(&ch);
            }
            Event::Eof => break,
            _ => {}
        }
    }
    if depth != 0 {
        return Err(ReadError::new(pos_at(src, src.len()), "unexpected end of input inside an element"));
    }
    if !st.saw_workbook {
        return Err(ReadError::new(pos_at(src, src.len()), "no Workbook element"));
    }
    Ok(st.wb)
}

fn attr(e: &BytesStart, name: &str) -> Option<String> {
    e.attributes()
        .flatten()
        .find(|a| a.key.local_name().as_ref() == name)
        .and_then(|a| a.normalized_value(quick_xml::XmlVersion::Implicit1_0).ok().map(|v| v.into_owned()))
}

impl State<'_> {
    fn err(&self, at: usize, message: impl Into<String>) -> ReadError {
        ReadError::new(pos_at(self.src, at), message)
    }

    fn index(&self, e: &BytesStart, at: usize, next: u32) -> Result<u32, ReadError> {
        match attr(e, "Index") {
            None => Ok(next),
            Some(v) => v.trim().parse::<u32>().ok().filter(|n| *n >= 1).ok_or_else(|| self.err(at, format!("bad ss:Index `{v}`"))),
        }
    }

    fn open(&mut self, e: &BytesStart, at: usize) -> Result<(), ReadError> {
        match e.local_name().as_ref() {
            "Workbook" => self.saw_workbook = true,
            "Worksheet" => {
                let name = attr(e, "Name").ok_or_else(|| self.err(at, "Worksheet without ss:Name"))?;
                if self.wb.sheet(&name).is_some() {
                    return Err(self.err(at, format!("duplicate worksheet `{name}`")));
                }
                self.wb.sheet_mut(&name);
                self.sheet = Some(self.wb.sheets.len() - 1);
                self.row = 0;
            }
            "Row" if self.sheet.is_some() => {
                self.row = self.index(e, at, self.row + 1)?;
                self.col = 0;
            }
            "Cell" if self.sheet.is_some() => {
                let row = self.row.max(1);
                self.row = row;
                self.col = self.index(e, at, self.col + 1)?;
                let formula = attr(e, "Formula").map(|f| (f, at));
                self.cell = Some(PendingCell { col: self.col, formula, ..Default::default() });
            }
            "Data" if self.cell.is_some() => {
                let cell = self.cell.as_mut().unwrap();
                cell.data_type = attr(e, "Type");
                cell.data = Some(String::new());
                self.in_data = true;
            }
            _ => {}
        }
        Ok(())
    }

    fn push_text(&mut self, s: &str) {
        if let Some(PendingCell { data: Some(d), .. }) = &mut self.cell {
            d.push_str(s);
        }
    }

    fn close(&mut self, name: &str, at: usize) -> Result<(), ReadError> {
        match name {
            "Data" => self.in_data = false,
            "Cell" => {
                if let Some(cell) = self.cell.take() {
                    self.finish_cell(cell, at)?;
                }
            }
            "Worksheet" => self.sheet = None,
            _ => {}
        }
        Ok(())
    }

    fn finish_cell(&mut self, cell: PendingCell, at: usize) -> Result<(), ReadError> {
        let Some(si) = self.sheet else { return Ok(()) };
        let host = CellAddr::new(self.wb.sheets[si].name.clone(), cell.col, self.row);
        let value = if let Some((f, fat)) = cell.formula {
            let body = f.strip_prefix('=').unwrap_or(&f);
            let parsed = parse_formula_r1c1(body, &host).map_err(|d| self.err(fat, format!("formula in {host}: {}", d)))?;
            Cell::from_expr(parsed)
        } else {
            let Some(data) = cell.data else { return Ok(()) };
            match cell.data_type.as_deref() {
                Some("Number") => {
                    Cell::Number(data.trim().parse::<f64>().map_err(|_| self.err(at, format!("bad number `{data}` in {host}")))?)
                }
                Some("Boolean") => Cell::Number(if data.trim() == "1" { 1.0 } else { 0.0 }),
                _ => Cell::Text(data),
            }
        };
        let cells = &mut self.wb.sheets[si].cells;
        if cells.insert((self.row, cell.col), value).is_some() {
            return Err(self.err(at, format!("cell {host} appears twice")));
        }
        Ok(())
    }
}
