//! Fixtures and random generators shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use proptest::prelude::*;
use proptest::test_runner::TestRng;
use sheetmodel::algebra::{fold_constants, ExpandedObject};
use sheetmodel::emitter::read_csv_grid;
use sheetmodel::model::{BinOp, Bounds, Cell, Expr, Func, IndexExpr, Subscript, TableDecl, Workbook};
use sheetmodel::notation::{parse_formula_a1, parse_program, Program};
use sheetmodel::pipeline::LayoutSheet;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn read_fixture(rel: &str) -> String {
    std::fs::read_to_string(fixtures().join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub fn stock_program() -> Program {
    parse_program(&read_fixture("stock.shf")).expect("stock fixture parses")
}

pub const LAYOUTS: [&str; 4] = ["original", "flipped", "moved", "merged"];

/// Layout sheets of one fixture directory, in file-name order.
pub fn layout_dir(name: &str) -> Vec<LayoutSheet> {
    let dir = fixtures().join("layouts").join(name);
    let mut files: Vec<PathBuf> = std::fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    files
        .iter()
        .map(|p| {
            let file = p.file_name().unwrap().to_str().unwrap();
            let sheet = file.strip_suffix(".layout.csv").unwrap().to_string();
            (sheet, read_csv_grid(&std::fs::read_to_string(p).unwrap()).unwrap())
        })
        .collect()
}

pub fn pick(rng: &mut TestRng, n: u32) -> u32 {
    rng.next_u32() % n
}

/// Random expanded object whose elements mostly follow a few per-table
/// templates, with references clamped into bounds.
pub fn random_expanded(rng: &mut TestRng) -> ExpandedObject {
    let ntables = 1 + pick(rng, 3) as usize;
    let mut tables = BTreeMap::new();
    for t in 0..ntables {
        let rank = pick(rng, 3) as usize;
        let dims = (0..rank)
            .map(|_| {
                let lo = pick(rng, 5) as i64 - 2;
                Bounds::new(lo, lo + pick(rng, 6) as i64).unwrap()
            })
            .collect();
        let name = format!("T{t}");
        tables.insert(name.clone(), TableDecl::new(name, dims));
    }
    let decls: Vec<TableDecl> = tables.values().cloned().collect();
    let mut e = ExpandedObject::new(tables);
    for decl in &decls {
        let templates: Vec<(usize, i64, i64, u32)> = (0..2)
            .map(|_| (pick(rng, decls.len() as u32) as usize, pick(rng, 3) as i64 - 1, pick(rng, 3) as i64 - 1, pick(rng, 5)))
            .collect();
        let density = 2 + pick(rng, 8);
        for at in decl.indices() {
            if pick(rng, density) == 0 {
                continue;
            }
            let f = match pick(rng, 7) {
                0 => Expr::num(pick(rng, 4) as f64),
                1 => Expr::text(["x", "y"][pick(rng, 2) as usize]),
                k => {
                    let (target, d0, d1, op) = templates[(k % 2) as usize];
                    let td = &decls[target];
                    let shift = [d0, d1];
                    let indices: Vec<Subscript<IndexExpr>> = td
                        .dims
                        .iter()
                        .enumerate()
                        .map(|(d, b)| {
                            let own = at.get(d).copied().unwrap_or(b.lo);
                            let v = (own + shift[d % 2]).clamp(b.lo, b.hi);
                            if op == 3 && d == 0 {
                                Subscript::Span(IndexExpr::Lit(b.lo), IndexExpr::Lit(v))
                            } else {
                                Subscript::At(IndexExpr::Lit(v))
                            }
                        })
                        .collect();
                    let r = Expr::element(td.name.clone(), indices);
                    match op {
                        0 => Expr::binary(BinOp::Add, r, Expr::num(1.0)),
                        1 => Expr::binary(BinOp::Mul, r, Expr::binary(BinOp::Add, Expr::num(2.0), Expr::num(3.0))),
                        2 => Expr::binary(BinOp::Concat, r, Expr::text("_")),
                        3 => Expr::call(Func::Sum, vec![r]),
                        _ => Expr::call(Func::If, vec![Expr::binary(BinOp::Gt, r.clone(), Expr::num(0.0)), r, Expr::num(-1.0)]),
                    }
                }
            };
            e.define(&decl.name, at, fold_constants(f)).unwrap();
        }
    }
    e
}

const SHEET_NAMES: [&str; 5] = ["Sheet1", "My sheet", "Q'3 data", "x", "Résumé"];
const TEXTS: [&str; 8] = ["", "plain", "a & b", "<tag>", "\"quoted\"", "it's", "line\nbreak\ttab", "ünï ✓"];

fn random_number(rng: &mut TestRng) -> f64 {
    match pick(rng, 4) {
        0 => pick(rng, 1000) as f64,
        1 => (pick(rng, 2_000_000) as f64 - 1_000_000.0) / 64.0,
        2 => f64::from_bits(rng.next_u64()),
        _ => (pick(rng, 1000) as f64 + 0.1) * 10f64.powi(pick(rng, 40) as i32 - 20),
    }
}

fn random_ref(rng: &mut TestRng, sheets: &[String]) -> String {
    let col = sheetmodel::model::col_letters(1 + pick(rng, 30));
    let row = 1 + pick(rng, 40);
    let local = match pick(rng, 3) {
        0 => format!("{col}{row}"),
        1 => format!("${col}${row}"),
        _ => format!("{col}${row}"),
    };
    if !sheets.is_empty() && pick(rng, 3) == 0 {
        let s = &sheets[pick(rng, sheets.len() as u32) as usize];
        format!("'{}'!{local}", s.replace('\'', "''"))
    } else {
        local
    }
}

fn random_formula_text(rng: &mut TestRng, sheets: &[String], depth: u32) -> String {
    let leaf = depth == 0 || pick(rng, 3) == 0;
    if leaf {
        return match pick(rng, 3) {
            0 => format!("{}", pick(rng, 500) as f64 / 4.0),
            1 => format!("\"{}\"", TEXTS[pick(rng, TEXTS.len() as u32) as usize].replace('"', "\"\"")),
            _ => random_ref(rng, sheets),
        };
    }
    let sub = |rng: &mut TestRng| random_formula_text(rng, sheets, depth - 1);
    match pick(rng, 6) {
        0 => format!("SUM({}:{})", random_ref(rng, &[]), random_ref(rng, &[])),
        1 => format!("IF({}>{},{},{})", sub(rng), sub(rng), sub(rng), sub(rng)),
        2 => format!("-({})", sub(rng)),
        5 if pick(rng, 2) == 0 => format!("MIN({},{})", sub(rng), sub(rng)),
        3 => format!("COUNTIF({}:{},\"a_\")", random_ref(rng, &[]), random_ref(rng, &[])),
        _ => {
            let op = ["+", "-", "*", "/", "&", "=", "<>", "<", "<=", ">="][pick(rng, 10) as usize];
            format!("({}){op}({})", sub(rng), sub(rng))
        }
    }
}

/// Random workbook over awkward sheet names, texts and numbers, with
/// formulas written as A1 text and parsed.
pub fn random_workbook(rng: &mut TestRng) -> Workbook {
    let nsheets = pick(rng, 4) as usize;
    let sheets: Vec<String> = SHEET_NAMES.iter().take(nsheets).map(|s| s.to_string()).collect();
    let mut w = Workbook::new();
    for name in &sheets {
        w.sheet_mut(name);
    }
    for name in &sheets {
        for _ in 0..pick(rng, 30) {
            let (row, col) = (1 + pick(rng, 40), 1 + pick(rng, 30));
            let cell = match pick(rng, 4) {
                0 => Cell::Number(random_number(rng)),
                1 => Cell::Text(TEXTS[pick(rng, TEXTS.len() as u32) as usize].to_string()),
                _ => {
                    let src = random_formula_text(rng, &sheets, 3);
                    Cell::from_expr(parse_formula_a1(&src).unwrap_or_else(|e| panic!("{src}: {e}")))
                }
            };
            if let Cell::Number(v) = cell {
                if !v.is_finite() {
                    continue;
                }
            }
            w.sheet_mut(name).cells.insert((row, col), cell);
        }
    }
    w
}

/// A model of `n` chained tables of `years` rows by `types` columns, each
/// under a caption, laid out four to a sheet.
pub fn synthetic_model(n: usize, years: i64, types: i64) -> (Program, Vec<LayoutSheet>) {
    let mut decls = Vec::new();
    let mut eqs = Vec::new();
    for k in 0..n {
        decls.push(format!("  T{k}[1:{years}, 1:{types}]"));
        eqs.push(match k % 5 {
            0 => format!("  T{k}[all y, all t] = 100"),
            1 => format!("  T{k}[all y, all t] = 10 * t"),
            2 => format!("  T{k}[1, all t] = T{}[1, t], T{k}[y > 1, all t] = T{k}[y-1, t] * 1.01 + T{}[y, t]", k - 2, k - 1),
            3 => format!("  T{k}[all y, all t] = T{}[y, t] - T{}[y, t] / 2", k - 1, k - 3),
            _ => format!("  T{k}[all y, all t] = IF(T{}[y, t] > 150, T{}[y, t], 0)", k - 1, k - 2),
        });
    }
    let src = format!("let synth() be\n{{#\n{}\n|\n{}\n#}}\n", decls.join(",\n"), eqs.join(",\n"));
    let program = parse_program(&src).expect("synthetic model parses");
    let mut layouts = Vec::new();
    for (s, chunk) in (0..n).collect::<Vec<_>>().chunks(4).enumerate() {
        let mut grid = Vec::new();
        for k in chunk {
            grid.push(vec![format!("'Table {k} of the synthetic model'")]);
            grid.push(vec![format!("T{k} yx")]);
            grid.push(vec![String::new()]);
        }
        layouts.push((format!("Part{}", s + 1), grid));
    }
    (program, layouts)
}
