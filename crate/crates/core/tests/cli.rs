//! The command-line tool, run as a separate process.

mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sheetmodel::emitter::{emit_xml, read_csv, read_xml};
use sheetmodel::evaluator::evaluate;
use sheetmodel::model::{Cell, CellAddr, Expr};

use common::*;

fn tool(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sheetmodel")).args(args).output().expect("tool runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn model() -> String {
    s(&fixtures().join("stock.shf"))
}

fn s(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

fn layout_files(name: &str) -> Vec<String> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(fixtures().join("layouts").join(name)).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    files.iter().map(|p| s(p)).collect()
}

fn with_flag(flag: &str, files: &[String]) -> Vec<String> {
    files.iter().flat_map(|f| [flag.to_string(), f.clone()]).collect()
}

fn compile_to(out: &Path, layout: &str, sizes: &[&str]) -> Output {
    let mut args = vec!["compile".to_string(), model()];
    args.extend(with_flag("--layout", &layout_files(layout)));
    args.extend(["-o".into(), s(out), "--".into()]);
    args.extend(sizes.iter().map(|a| a.to_string()));
    tool(&args.iter().map(String::as_str).collect::<Vec<_>>())
}

fn verify(a: &str, b: &str) -> Output {
    let mut args = vec!["verify".to_string(), model()];
    args.extend(with_flag("--a", &layout_files(a)));
    args.extend(with_flag("--b", &layout_files(b)));
    args.extend(["--", "2000", "2010", "5"].map(String::from));
    tool(&args.iter().map(String::as_str).collect::<Vec<_>>())
}

#[test]
fn compile_writes_a_readable_workbook() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("stock.xml");
    let o = compile_to(&out, "original", &["2000", "2010", "5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("6 table(s), 199 cell(s) on 2 sheet(s)"), "{}", stdout(&o));
    let w = read_xml(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(w.get(&"Inputs!A1".parse().unwrap()), Some(&Cell::Text("STOCK MODEL".into())));
    let ev = evaluate(&w);
    assert_eq!(ev.len(), 199);
}

#[test]
fn compile_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.xml"), dir.path().join("b.xml"));
    assert!(compile_to(&a, "moved", &["2000", "2010", "5"]).status.success());
    assert!(compile_to(&b, "moved", &["2000", "2010", "5"]).status.success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn reversed_years_fail_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bad.xml");
    let o = compile_to(&out, "original", &["2010", "2000", "5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error: "), "{}", stderr(&o));
    assert!(stderr(&o).contains("stock.shf:"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn unplaced_table_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("partial.xml");
    let stock_only: Vec<String> = layout_files("original").into_iter().filter(|f| f.ends_with("Stock.layout.csv")).collect();
    let mut args = vec!["compile".to_string(), model()];
    args.extend(with_flag("--layout", &stock_only));
    args.extend(["-o", &s(&out), "--", "2000", "2010", "5"].map(String::from));
    let o = tool(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("is declared but not placed"), "{}", stderr(&o));
}

#[test]
fn wrong_arity_and_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = compile_to(&dir.path().join("x.xml"), "original", &["2000", "2010"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("argument"), "{}", stderr(&o));
    assert_eq!(tool(&["compile"]).status.code(), Some(2));
    assert_eq!(tool(&["frobnicate"]).status.code(), Some(2));
    let o = tool(&["grammar"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("grid"));
}

#[test]
fn verify_layout_pairs() {
    for other in ["flipped", "moved", "merged"] {
        let o = verify("original", other);
        assert_eq!(o.status.code(), Some(0), "{other}: {}{}", stdout(&o), stderr(&o));
        assert_eq!(stdout(&o), "IDENTICAL (192 elements)\n");
    }
}

#[test]
fn verify_lists_a_corrupted_workbook() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("stock.xml");
    assert!(compile_to(&out, "original", &["2000", "2010", "5"]).status.success());
    let mut w = read_xml(&std::fs::read(&out).unwrap()).unwrap();
    let target: CellAddr = "Inputs!C6".parse().unwrap();
    assert_eq!(w.get(&target), Some(&Cell::Number(10.0)), "Builds[2000, 1] sits at C6");
    w.set(&target, Cell::Number(999.0));
    let bad = dir.path().join("edited.xml");
    std::fs::write(&bad, emit_xml(&w)).unwrap();

    let mut args = vec!["verify".to_string(), model()];
    args.extend(with_flag("--a", &layout_files("original")));
    args.extend(["--workbook", &s(&bad), "--", "2000", "2010", "5"].map(String::from));
    let o = tool(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.starts_with("DIFFERENT ("), "{text}");
    assert!(text.contains("  Builds[2000, 1]: 10 vs 999"), "{text}");
    assert!(text.lines().count() > 2, "edit propagates: {text}");

    args.retain(|a| a != &s(&bad));
    let pos = args.iter().position(|a| a == "--workbook").unwrap();
    args.insert(pos + 1, s(&out));
    let o = tool(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(stdout(&o), "IDENTICAL (192 elements)\n");
}

#[test]
fn discover_then_recompile() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first.xml");
    assert!(compile_to(&first, "flipped", &["2000", "2010", "5"]).status.success());
    let disc = dir.path().join("disc");
    let o = tool(&["discover", &s(&first), "--out-dir", &s(&disc)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("for 199 cell(s)"), "{}", stdout(&o));
    for f in ["model.calc.shf", "model.annot.shf", "Inputs.layout.csv", "Stock.layout.csv"] {
        assert!(disc.join(f).exists(), "{f}");
    }
    let second = dir.path().join("second.xml");
    let o = tool(&[
        "compile",
        &s(&disc.join("model.calc.shf")),
        "--layout",
        &s(&disc.join("Inputs.layout.csv")),
        "--layout",
        &s(&disc.join("Stock.layout.csv")),
        "-o",
        &s(&second),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let a = read_xml(&std::fs::read(&first).unwrap()).unwrap();
    let b = read_xml(&std::fs::read(&second).unwrap()).unwrap();
    assert_eq!(evaluate(&a), evaluate(&b));
    assert_eq!(a, b);
}

#[test]
fn discover_without_formulas() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("plain.xml");
    let w = read_csv(&read_fixture("expenses.csv"), "Sheet1").unwrap();
    std::fs::write(&src, emit_xml(&w)).unwrap();
    let o = tool(&["discover", &s(&src), "--out-dir", &s(dir.path()), "--stem", "plain"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let calc = std::fs::read_to_string(dir.path().join("plain.calc.shf")).unwrap();
    let program = sheetmodel::notation::parse_program(&calc).unwrap();
    let inst = sheetmodel::algebra::instantiate(&program, Some("model"), &[]).unwrap();
    assert!(inst.object.equations.iter().all(|e| matches!(e.rhs, Expr::Number(_))), "{calc}");
    let layout = std::fs::read_to_string(dir.path().join("Sheet1.layout.csv")).unwrap();
    for who in ["'Who'", "'Beth'", "'Janet'", "'Joe'", "'Beer'"] {
        assert!(layout.contains(who), "{who}: {layout}");
    }
}

#[test]
fn unreadable_workbook_is_a_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.xml");
    std::fs::write(&bad, "<Workbook><Worksheet ss:Name=\"S\"><Table><Row>").unwrap();
    let o = tool(&["discover", &s(&bad), "--out-dir", &s(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bad.xml:"), "{}", stderr(&o));
    let o = tool(&["dump", &s(&dir.path().join("missing.xml"))]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn crosstab_command() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("expenses.xml");
    let w = read_csv(&read_fixture("expenses.csv"), "Sheet1").unwrap();
    std::fs::write(&src, emit_xml(&w)).unwrap();
    let spec = dir.path().join("who_what.spec");
    std::fs::write(&spec, "# who against what\nsource_sheet=Sheet1\nheader_row=1\nrows=2:25\ndims=A,C\nresult_anchor=Crosstab!A1\n")
        .unwrap();
    let out = dir.path().join("out.xml");
    let o = tool(&["crosstab", &s(&src), &s(&spec), "-o", &s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("Who across, What down at Crosstab!A1; counts total 24"), "{}", stdout(&o));
    let o = tool(&["dump", &s(&out), "--sheet", "Crosstab", "--values"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("\n\tBeth\tJanet\tJoe\n"), "{}", stdout(&o));
    let o = tool(&["crosstab", &s(&out), &s(&spec), "-o", &s(&dir.path().join("again.xml"))]);
    assert_eq!(o.status.code(), Some(1));
}
