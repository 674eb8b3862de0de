use std::collections::BTreeMap;

use proptest::prelude::*;

use super::*;
use crate::model::{Bounds, TableDecl};
use crate::notation::parse_format;

fn decls(list: &[(&str, &[(i64, i64)])]) -> BTreeMap<String, TableDecl> {
    list.iter()
        .map(|(n, dims)| {
            let d = dims.iter().map(|(lo, hi)| Bounds::new(*lo, *hi).unwrap()).collect();
            (n.to_string(), TableDecl::new(*n, d))
        })
        .collect()
}

fn stock_tables() -> BTreeMap<String, TableDecl> {
    decls(&[("Years", &[(2000, 2010)]), ("Lettings", &[(2000, 2010), (1, 20)]), ("Sales", &[(2000, 2010)])])
}

fn table(name: &str, o: Orientation) -> Item {
    Item::Table { name: name.into(), orientation: Some(o) }
}

fn addr(s: &str) -> CellAddr {
    s.parse().unwrap()
}

/// Column letter arithmetic done independently of the address code.
fn letters_plus(start: &str, n: u32) -> String {
    let mut v = start.bytes().fold(0u32, |acc, b| acc * 26 + (b - b'A' + 1) as u32) + n;
    let mut out = Vec::new();
    while v > 0 {
        v -= 1;
        out.push(b'A' + (v % 26) as u8);
        v /= 26;
    }
    out.reverse();
    String::from_utf8(out).unwrap()
}

#[test]
fn measure_items() {
    let t = stock_tables();
    assert_eq!(measure(&table("Lettings", Orientation::YX), &t).unwrap(), (20, 11));
    assert_eq!(measure(&table("Lettings", Orientation::XY), &t).unwrap(), (11, 20));
    assert_eq!(measure(&table("Years", Orientation::Y), &t).unwrap(), (1, 11));
    assert_eq!(measure(&table("Years", Orientation::X), &t).unwrap(), (11, 1));
    assert_eq!(measure(&Item::Text("STOCK MODEL".into()), &t).unwrap(), (1, 1));
    assert_eq!(measure(&Item::Skip(0, 3), &t).unwrap(), (0, 3));
    assert!(matches!(measure(&table("Years", Orientation::YX), &t), Err(LayoutError::Orientation { .. })));
    assert!(matches!(measure(&table("Nope", Orientation::Y), &t), Err(LayoutError::UnknownTable(_))));
    let scalar = decls(&[("c", &[])]);
    assert_eq!(measure(&table("c", Orientation::X), &scalar).unwrap(), (1, 1));
}

#[test]
fn row_format_places_after_widths() {
    let t = stock_tables();
    let g = resolve_format(&parse_format("row([Lettings by yx, skip, Sales by y]) @ Lets!D8").unwrap(), &Env::new()).unwrap();
    let ps = layout_grid(&g, &t).unwrap();
    assert_eq!(ps[0].origin, addr("Lets!D8"));
    let expected = format!("Lets!{}8", letters_plus("D", 20 + 1));
    assert_eq!(expected, "Lets!Y8");
    assert_eq!(ps[2].origin.to_string(), expected);
}

const STOCK_GRID: &str = "grid( [ [ 'STOCK MODEL' ]
        , [ skip(0,3) ]
        , [ 'Years'      , skip, 'Lettings'      , skip, 'Sales'      ]
        , [ Years by y , skip, Lettings by yx, skip, Sales by y ]
      ]
      ) @ Lets!A1";

#[test]
fn grid_example_places_captions_and_tables() {
    let t = stock_tables();
    let g = resolve_format(&parse_format(STOCK_GRID).unwrap(), &Env::new()).unwrap();
    let ps = layout_grid(&g, &t).unwrap();
    let (spec, texts) = placements_to_mapping(&ps);
    let at = |s: &str| addr(s);
    assert_eq!(
        texts,
        vec![
            (at("Lets!A1"), "STOCK MODEL".to_string()),
            (at("Lets!A5"), "Years".to_string()),
            (at("Lets!C5"), "Lettings".to_string()),
            (at("Lets!X5"), "Sales".to_string()),
        ]
    );
    let origins: Vec<(String, String)> = spec.entries.iter().map(|e| (e.table.clone(), e.origin.to_string())).collect();
    assert_eq!(
        origins,
        vec![
            ("Years".into(), "Lets!A6".into()),
            ("Lettings".into(), "Lets!C6".into()),
            ("Sales".into(), format!("Lets!{}6", letters_plus("C", 20 + 1))),
        ]
    );
    let one = GridFormat { rows: vec![vec![Item::Text("x".into())]], anchor: at("S!A1") };
    assert_eq!(layout_grid(&one, &t).unwrap().len(), 1);
    let empty = GridFormat { rows: vec![], anchor: at("S!A1") };
    assert!(layout_grid(&empty, &t).unwrap().is_empty());
    assert_eq!(placements_to_mapping(&[]).0, MappingSpec::default());
}

fn sheet(rows: &[&[&str]]) -> Vec<Vec<String>> {
    rows.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect()
}

#[test]
fn layout_sheet_matches_textual_grid() {
    let t = stock_tables();
    let cells = sheet(&[
        &["'STOCK MODEL'", "", "", "", ""],
        &["skip(0,3)", "", "", "", ""],
        &["'Years'", "skip", "'Lettings'", "skip", "'Sales'"],
        &["'Years y", "skip", "'Lettings yx", "skip", "'Sales y"],
    ]);
    let g = parse_layout_sheet("Lets", &cells, &t).unwrap();
    let from_sheet = placements_to_mapping(&layout_grid(&g, &t).unwrap());
    let textual = resolve_format(&parse_format(STOCK_GRID).unwrap(), &Env::new()).unwrap();
    let from_text = placements_to_mapping(&layout_grid(&textual, &t).unwrap());
    assert_eq!(from_sheet, from_text);
    cross_check(&t, &layout_grid(&g, &t).unwrap(), &[], true).unwrap();
}

#[test]
fn layout_sheet_cells_and_cross_checks() {
    let t = stock_tables();
    assert_eq!(classify_cell("Lettings yx", &t).unwrap(), table("Lettings", Orientation::YX));
    assert_eq!(classify_cell("'Lettings yx'", &t).unwrap(), Item::Text("Lettings yx".into()));
    assert_eq!(classify_cell("Total by type", &t).unwrap(), Item::Text("Total by type".into()));
    assert_eq!(classify_cell("skip", &t).unwrap(), Item::Skip(1, 0));
    assert_eq!(classify_cell("skip(2, 5)", &t).unwrap(), Item::Skip(2, 5));
    assert!(classify_cell("skip(0", &t).unwrap_err().contains("skip(width,height)"));
    assert_eq!(classify_cell("  ", &t).unwrap(), Item::Skip(1, 1));
    assert!(classify_cell("Lettings y", &t).is_err());
    let err = parse_layout_sheet("Lets", &sheet(&[&["", "Rents yx"]]), &t).unwrap_err();
    assert!(err.to_string().contains("Lets.layout!B1"), "{err}");
    assert!(err.to_string().contains("Rents"), "{err}");

    let blank = parse_layout_sheet("Lets", &sheet(&[&["", ""], &[""]]), &t).unwrap();
    let ps = layout_grid(&blank, &t).unwrap();
    let (spec, texts) = placements_to_mapping(&ps);
    assert!(spec.entries.is_empty() && texts.is_empty());
    assert_eq!(cross_check(&t, &ps, &[], true), Err(LayoutError::Unplaced("Lettings".into())));
    assert_eq!(cross_check(&t, &ps, &[], false), Ok(()));

    let twice = parse_layout_sheet("Lets", &sheet(&[&["Years y", "Years x"]]), &t).unwrap();
    let ps = layout_grid(&twice, &t).unwrap();
    assert_eq!(cross_check(&t, &ps, &[], false), Err(LayoutError::DuplicatePlacement("Years".into())));
}

#[test]
fn resolve_format_uses_parameters() {
    let g = parse_format("row([skip(N, 1), 'x']) @ Lets!A1 + vector(N, N)").unwrap();
    let env: Env = [("N".to_string(), 3)].into_iter().collect();
    let r = resolve_format(&g, &env).unwrap();
    assert_eq!(r.anchor, addr("Lets!D4"));
    assert_eq!(r.rows[0][0], Item::Skip(3, 1));
    let neg: Env = [("N".to_string(), -1)].into_iter().collect();
    assert!(resolve_format(&parse_format("row([skip(N, 1)]) @ Lets!A1").unwrap(), &neg).is_err());
}

fn arb_grid() -> impl Strategy<Value = (GridFormat, BTreeMap<String, TableDecl>)> {
    let item = prop_oneof![
        (0usize..4, 0usize..4).prop_map(|(t, o)| (Some(t), o as u32, 0)),
        Just((None, 0, 0)),
        (0u32..4, 0u32..4).prop_map(|(w, h)| (None, w, h + 1)),
    ];
    let dims = prop::collection::vec((1i64..6, 1i64..6), 4);
    (prop::collection::vec(prop::collection::vec(item, 0..5), 0..5), dims).prop_map(|(rows, dims)| {
        let tables: BTreeMap<String, TableDecl> = dims
            .iter()
            .enumerate()
            .map(|(i, (a, b))| {
                let name = format!("T{i}");
                let d = match i % 3 {
                    0 => vec![],
                    1 => vec![Bounds::new(1, *a).unwrap()],
                    _ => vec![Bounds::new(1, *a).unwrap(), Bounds::new(1, *b).unwrap()],
                };
                (name.clone(), TableDecl::new(name, d))
            })
            .collect();
        let rows = rows
            .into_iter()
            .map(|r| {
                r.into_iter()
                    .map(|(t, a, b)| match t {
                        Some(t) => {
                            let rank = tables[&format!("T{t}")].rank();
                            let o = match (rank, a % 2) {
                                (2, 0) => Orientation::YX,
                                (2, _) => Orientation::XY,
                                (_, 0) => Orientation::Y,
                                _ => Orientation::X,
                            };
                            Item::Table { name: format!("T{t}"), orientation: Some(o) }
                        }
                        None if b == 0 => Item::Text("t".into()),
                        None => Item::Skip(a, b - 1),
                    })
                    .collect()
            })
            .collect();
        (GridFormat { rows, anchor: CellAddr::new("S", 2, 3) }, tables)
    })
}

fn rect(p: &Placement) -> (u64, u64, u64, u64) {
    (p.origin.col as u64, p.origin.row as u64, p.width, p.height)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn placements_never_overlap((g, tables) in arb_grid()) {
        let ps = layout_grid(&g, &tables).unwrap();
        for (i, a) in ps.iter().enumerate() {
            for b in &ps[i + 1..] {
                let (ax, ay, aw, ah) = rect(a);
                let (bx, by, bw, bh) = rect(b);
                let disjoint = ax + aw <= bx || bx + bw <= ax || ay + ah <= by || by + bh <= ay;
                prop_assert!(disjoint, "{:?} overlaps {:?}", a, b);
            }
        }
    }

    #[test]
    fn resizing_keeps_relative_order((g, tables) in arb_grid(), grow in 1i64..5) {
        let before = layout_grid(&g, &tables).unwrap();
        let bigger: BTreeMap<String, TableDecl> = tables
            .iter()
            .map(|(n, d)| {
                let dims = d.dims.iter().map(|b| Bounds::new(b.lo, b.hi + grow).unwrap()).collect();
                (n.clone(), TableDecl::new(n.clone(), dims))
            })
            .collect();
        let after = layout_grid(&g, &bigger).unwrap();
        prop_assert_eq!(before.len(), after.len());
        for (i, a) in before.iter().enumerate() {
            for (j, b) in before.iter().enumerate() {
                let key = |p: &Placement| (p.origin.col, p.origin.row);
                let (x0, y0) = key(a);
                let (x1, y1) = key(b);
                let (x0n, y0n) = key(&after[i]);
                let (x1n, y1n) = key(&after[j]);
                if x0 < x1 { prop_assert!(x0n < x1n); }
                if y0 < y1 { prop_assert!(y0n < y1n); }
            }
        }
    }

    #[test]
    fn zero_skips_change_nothing((g, tables) in arb_grid(), extra_rows in 0usize..3, extra_cols in 0usize..3) {
        let before = layout_grid(&g, &tables).unwrap();
        let mut padded = g.clone();
        for r in &mut padded.rows {
            r.extend(std::iter::repeat_n(Item::Skip(0, 0), extra_cols));
        }
        padded.rows.extend(std::iter::repeat_n(vec![Item::Skip(0, 0)], extra_rows));
        let after = layout_grid(&padded, &tables).unwrap();
        let keep: Vec<_> = after.into_iter().filter(|p| p.item != Item::Skip(0, 0)).collect();
        let orig: Vec<_> = before.into_iter().filter(|p| p.item != Item::Skip(0, 0)).collect();
        prop_assert_eq!(keep, orig);
    }
}
