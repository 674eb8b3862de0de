use proptest::prelude::*;

use super::*;
use crate::model::{Cell, CellAddr, Workbook};
use crate::notation::parse_formula_a1;
use crate::notation::tests::arb_formula;

fn addr(s: &str) -> CellAddr {
    s.parse().unwrap()
}

/// Scans raw output for `ss:Index` attributes and checks rows and cells
/// strictly ascend within each worksheet.
fn audit_sorted(xml: &str) -> Result<usize, String> {
    let mut cells = 0;
    for sheet in xml.split("<Worksheet").skip(1) {
        let mut last = (0u64, 0u64);
        let mut row = 0u64;
        for piece in sheet.split('<').skip(1) {
            let index = |p: &str| -> u64 {
                let start = p.find("ss:Index=\"").expect("index attribute") + 10;
                p[start..].split('"').next().unwrap().parse().unwrap()
            };
            if piece.starts_with("Row ") {
                row = index(piece);
            } else if piece.starts_with("Cell ") {
                let here = (row, index(piece));
                if here <= last {
                    return Err(format!("{here:?} after {last:?}"));
                }
                last = here;
                cells += 1;
            }
        }
    }
    Ok(cells)
}

#[test]
fn cells_are_written_in_row_then_column_order() {
    let mut w = Workbook::new();
    w.set(&addr("S!B2"), Cell::Number(2.0));
    w.set(&addr("S!A1"), Cell::Number(1.0));
    w.set(&addr("S!A3"), Cell::Number(3.0));
    let xml = String::from_utf8(emit_xml(&w)).unwrap();
    let a1 = xml.find(">1<").unwrap();
    let b2 = xml.find(">2<").unwrap();
    let a3 = xml.find(">3<").unwrap();
    assert!(a1 < b2 && b2 < a3);
    assert_eq!(audit_sorted(&xml), Ok(3));
    assert_eq!(emit_xml(&w), emit_xml(&w.clone()));
}

#[test]
fn formulas_are_relative_r1c1_on_disk() {
    let mut w = Workbook::new();
    w.set(&addr("S!A1"), Cell::Number(1.0));
    w.set(&addr("S!B1"), Cell::Formula(parse_formula_a1("A1+1").unwrap()));
    w.set(&addr("S!C2"), Cell::Formula(parse_formula_a1("SUM($A$1:B1)&\"<&>\"").unwrap()));
    let xml = String::from_utf8(emit_xml(&w)).unwrap();
    assert!(xml.contains("ss:Formula=\"=RC[-1]+1\""), "{xml}");
    assert!(xml.contains("R1C1:R[-1]C[-1]"), "{xml}");
    assert!(xml.contains("&lt;&amp;&gt;"), "{xml}");
    assert_eq!(read_xml(xml.as_bytes()).unwrap(), w);
    assert_eq!(dump_grid(&w, "S"), "1\t=A1+1\t\n\t\t=SUM($A$1:B1) & \"<&>\"");
}

#[test]
fn reader_skips_styles_and_accepts_implicit_indices() {
    let src = r#"<?xml version="1.0"?>
<Workbook xmlns="urn:schemas-microsoft-com:office:spreadsheet" xmlns:ss="urn:schemas-microsoft-com:office:spreadsheet">
 <Styles><Style ss:ID="s1"><Font ss:Bold="1"/></Style></Styles>
 <Worksheet ss:Name="Data">
  <Table ss:ExpandedColumnCount="3">
   <Column ss:Width="80"/>
   <Row><Cell ss:StyleID="s1"><Data ss:Type="String">Name &amp; age</Data></Cell><Cell><Data ss:Type="Number">42</Data></Cell></Row>
   <Row ss:Index="4"><Cell ss:Index="3" ss:Formula="=R[-3]C[-1]*2"><Data ss:Type="Number">84</Data></Cell><Cell ss:StyleID="s1"/></Row>
  </Table>
  <WorksheetOptions xmlns="urn:schemas-microsoft-com:office:excel"><Selected/></WorksheetOptions>
 </Worksheet>
</Workbook>"#;
    let w = read_xml(src.as_bytes()).unwrap();
    assert_eq!(w.get(&addr("Data!A1")), Some(&Cell::Text("Name & age".into())));
    assert_eq!(w.get(&addr("Data!B1")), Some(&Cell::Number(42.0)));
    assert_eq!(w.get(&addr("Data!C4")), Some(&Cell::Formula(parse_formula_a1("B1*2").unwrap())));
    assert_eq!(w.cell_count(), 3);
}

#[test]
fn truncated_or_broken_input_is_a_positioned_error() {
    let mut w = Workbook::new();
    w.set(&addr("S!A1"), Cell::Text("x".into()));
    let xml = emit_xml(&w);
    let cut = &xml[..xml.len() - 30];
    let err = read_xml(cut).unwrap_err();
    assert!(err.pos.line > 1, "{err}");
    let err = read_xml(b"<Workbook><Worksheet ss:Name=\"S\"><Table><Row><Cell ss:Formula=\"=SUM(\"/></Row></Table></Worksheet></Workbook>")
        .unwrap_err();
    assert!(err.message.contains("formula in S!A1"), "{err}");
    assert!(read_xml(b"<Workbook><Foo></Bar></Workbook>").is_err());
    assert!(read_xml(b"").is_err());
}

#[test]
fn csv_reading_and_dumps() {
    let w = read_csv("1,=A1+1\n'Lettings yx,skip\n,,'007\n", "L").unwrap();
    assert_eq!(dump_grid(&w, "L"), "1\t=A1+1\t\nLettings yx\tskip\t\n\t\t007");
    assert_eq!(w.get(&addr("L!A2")), Some(&Cell::Text("Lettings yx".into())));
    assert_eq!(w.get(&addr("L!C3")), Some(&Cell::Text("007".into())));
    assert_eq!(w.get(&addr("L!A3")), None);
    let empty = read_csv("", "E").unwrap();
    assert_eq!(dump_grid(&empty, "E"), "");
    let err = read_csv("1\n=SUM(\n", "L").unwrap_err();
    assert_eq!(err.pos.line, 2);
    let grid = read_csv_grid("'Years',skip\n\"a,b\"\n").unwrap();
    assert_eq!(grid, vec![vec!["'Years'".to_string(), "skip".into()], vec!["a,b".into()]]);
    assert_eq!(read_csv_grid(&write_csv_grid(&grid)).unwrap(), grid);
}

#[test]
fn large_single_table_emits_in_sorted_order() {
    let mut w = Workbook::new();
    let sheet = w.sheet_mut("Big");
    for r in (1..=2000u32).rev() {
        for c in 1..=200u32 {
            sheet.cells.insert((r, c), Cell::Number((r * 1000 + c) as f64));
        }
    }
    let xml = String::from_utf8(emit_xml(&w)).unwrap();
    assert_eq!(audit_sorted(&xml), Ok(400_000));
}

fn arb_workbook() -> impl Strategy<Value = Workbook> {
    let cell = prop_oneof![
        (-1.0e6f64..1.0e6).prop_map(Cell::Number),
        any::<f64>().prop_filter("finite", |v| v.is_finite()).prop_map(Cell::Number),
        "[ -~\n\t<>&'\"é]{0,8}".prop_map(Cell::Text),
        arb_formula(vec![], vec![], false).prop_map(Cell::from_expr),
    ];
    let sheet = ("[A-Za-z][A-Za-z0-9 ]{0,6}", prop::collection::btree_map((1u32..60, 1u32..30), cell, 0..25));
    prop::collection::vec(sheet, 0..4).prop_map(|sheets| {
        let mut w = Workbook::new();
        for (name, cells) in sheets {
            if w.sheet(&name).is_some() {
                continue;
            }
            w.sheet_mut(&name).cells = cells;
        }
        w
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn read_after_emit_is_identity(w in arb_workbook()) {
        let bytes = emit_xml(&w);
        let xml = String::from_utf8(bytes.clone()).unwrap();
        prop_assert!(audit_sorted(&xml).is_ok());
        let back = read_xml(&bytes).map_err(|e| TestCaseError::fail(format!("{e}\n{xml}")))?;
        prop_assert_eq!(&back, &w);
        prop_assert_eq!(emit_xml(&back), bytes);
    }
}

#[test]
fn csv_blank_lines_keep_their_rows() {
    let g = read_csv_grid("\na,b\n\n\r\nc\n\"q\nr\"\n\nz").unwrap();
    let firsts: Vec<&str> = g.iter().map(|r| r.first().map_or("", String::as_str)).collect();
    assert_eq!(firsts, ["", "a", "", "", "c", "q\nr", "", "z"]);
    let w = read_csv("\r\n\r\n=1+\n", "S").unwrap_err();
    assert_eq!(w.pos.line, 3);
}
