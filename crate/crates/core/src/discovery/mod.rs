//! Structure discovery: finds runs of repeated formulas in a workbook,
//! names them from nearby captions, lifts them to tables, compresses the
//! result to quantified equations and writes a layout that places
//! everything back where it was.

mod compress;
mod lift;
mod runs;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::algebra::{AlgebraError, MapEntry, MappingSpec};
use crate::model::{CellAddr, Object, Orientation, TableDecl, Workbook};
use crate::notation::{show_object, Pos};

pub use compress::{compress, dim_var, split_annotations};
pub use lift::{lift, Lifted};
pub use runs::{
    captions, detect_runs, guess_names, normalize_formula, referenced_cells, run_captions, sanitize, NormalForm, Run, CONSTANT,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiscoveryError {
    #[error("overrides {pos}: {message}")]
    Override { pos: Pos, message: String },
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// A correction supplied by the user: treat `sheet!rect` as one table named
/// `name`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Override {
    pub sheet: String,
    pub rect: crate::model::Rect,
    pub name: String,
}

/// Reads lines `range Sheet!A1:B9 name=Ident`. Blank lines and `--`
/// comments are ignored.
pub fn parse_overrides(text: &str) -> Result<Vec<Override>, DiscoveryError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let bad = |col: usize, message: String| DiscoveryError::Override { pos: Pos { line: n + 1, col }, message };
        let body = line.split("--").next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some(rest) = body.strip_prefix("range").filter(|r| r.starts_with(char::is_whitespace)) else {
            return Err(bad(1, "expected `range Sheet!A1:B9 name=Ident`".into()));
        };
        let Some((range, name)) = rest.rsplit_once("name=") else {
            return Err(bad(body.len() + 1, "expected `name=Ident`".into()));
        };
        let (range, name) = (range.trim(), name.trim());
        if sanitize(name) != name || name.is_empty() {
            return Err(bad(line.find(name).unwrap_or(0) + 1, format!("`{name}` is not a usable table name")));
        }
        let col = line.find(range).unwrap_or(0) + 1;
        let (first, last) = range.rsplit_once(':').ok_or_else(|| bad(col, format!("`{range}` is not a range")))?;
        let a: CellAddr = first.parse().map_err(|e| bad(col, format!("{e}")))?;
        let mut second = String::new();
        crate::model::addr::write_sheet_prefix(&mut second, &a.sheet).expect("string write");
        second.push_str(last);
        let b: CellAddr = second.parse().map_err(|e| bad(col, format!("{e}")))?;
        let rect = (a.col.min(b.col), a.row.min(b.row), a.col.max(b.col), a.row.max(b.row));
        out.push(Override { sheet: a.sheet, rect, name: name.to_string() });
    }
    Ok(out)
}

/// A discovered table and where it sits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoundTable {
    pub name: String,
    pub sheet: String,
    pub rect: crate::model::Rect,
    /// True for tables made from captions.
    pub note: bool,
}

impl FoundTable {
    fn shape(&self) -> (u32, u32) {
        (self.rect.2 - self.rect.0 + 1, self.rect.3 - self.rect.1 + 1)
    }

    pub fn decl(&self) -> TableDecl {
        let b = |n: u32| crate::model::Bounds::new(1, n as i64).expect("non-empty");
        let dims = match self.shape() {
            (1, 1) => vec![],
            (w, 1) => vec![b(w)],
            (1, h) => vec![b(h)],
            (w, h) => vec![b(h), b(w)],
        };
        TableDecl::new(self.name.clone(), dims)
    }

    pub fn orientation(&self) -> Orientation {
        match self.shape() {
            (1, 1) => Orientation::YX,
            (_, 1) => Orientation::X,
            (1, _) => Orientation::Y,
            _ => Orientation::YX,
        }
    }

    pub fn entry(&self) -> MapEntry {
        MapEntry {
            table: self.name.clone(),
            origin: CellAddr::new(self.sheet.clone(), self.rect.0, self.rect.1),
            orientation: self.orientation(),
        }
    }
}

/// Everything structure discovery produces.
#[derive(Debug, Clone, PartialEq)]
pub struct Discovery {
    pub runs: Vec<Run>,
    pub tables: Vec<FoundTable>,
    /// Calculations: compiled together with the layouts, reproduces the
    /// workbook.
    pub calc: Object,
    /// Captions as constant text tables.
    pub annotations: Object,
    /// Placements that a layout sheet cannot express, kept as mapping
    /// clauses of the calculations.
    pub explicit: MappingSpec,
    /// One layout sheet per worksheet, as rows of cell texts.
    pub layouts: Vec<(String, Vec<Vec<String>>)>,
    pub warnings: Vec<String>,
}

impl Discovery {
    /// Calculations as a model file defining `model()`.
    pub fn calc_source(&self) -> String {
        let mut s = String::from("let model() be\n");
        s.push_str(&show_object(&self.calc));
        if !self.explicit.entries.is_empty() {
            s.push_str("mapping\n");
            let clauses: Vec<String> =
                self.explicit.entries.iter().map(|e| format!("  {} to {} by {}", e.table, e.origin, e.orientation)).collect();
            s.push_str(&clauses.join(",\n"));
            s.push('\n');
        }
        s
    }

    /// Annotations as a model file defining `annotations()`.
    pub fn annotations_source(&self) -> String {
        format!("let annotations() be\n{}", show_object(&self.annotations))
    }

    /// Equations in the calculations.
    pub fn equation_count(&self) -> usize {
        self.calc.equations.len()
    }
}

/// Runs structure discovery over `w`.
pub fn discover(w: &Workbook, overrides: &[Override]) -> Result<Discovery, DiscoveryError> {
    let caps = captions(w);
    let in_override = |sheet: &str, col: u32, row: u32| {
        overrides.iter().any(|o| o.sheet == sheet && col >= o.rect.0 && col <= o.rect.2 && row >= o.rect.1 && row <= o.rect.3)
    };
    let mut runs = Vec::new();
    for sheet in &w.sheets {
        let skip = |c: u32, r: u32| caps.contains(&CellAddr::new(sheet.name.clone(), c, r)) || in_override(&sheet.name, c, r);
        runs.extend(runs::runs_in(sheet, runs::classes(sheet, &skip)));
    }
    let sheet_order = |s: &str| w.sheet_index(s).unwrap_or(usize::MAX);
    runs.sort_by_key(|r| (sheet_order(&r.sheet), r.rect.1, r.rect.0));
    let run_caps = run_captions(w, &runs);

    // Runs that share a caption form one table when together they fill a
    // rectangle.
    let mut groups: BTreeMap<CellAddr, Vec<usize>> = BTreeMap::new();
    let mut blocks: Vec<(Vec<usize>, Option<CellAddr>)> = Vec::new();
    for (i, cap) in run_caps.iter().enumerate() {
        match cap {
            Some(a) => groups.entry(a.clone()).or_default().push(i),
            None => blocks.push((vec![i], None)),
        }
    }
    for (cap, members) in groups {
        let bbox = bounding(members.iter().map(|&i| runs[i].rect));
        let area = |r: crate::model::Rect| (r.2 - r.0 + 1) as u64 * (r.3 - r.1 + 1) as u64;
        let total: u64 = members.iter().map(|&i| area(runs[i].rect)).sum();
        if total == area(bbox) {
            blocks.push((members, Some(cap)));
        } else {
            blocks.extend(members.into_iter().map(|i| (vec![i], Some(cap.clone()))));
        }
    }
    let mut found: Vec<(String, crate::model::Rect, Option<CellAddr>, Option<String>)> = blocks
        .into_iter()
        .map(|(members, cap)| (runs[members[0]].sheet.clone(), bounding(members.iter().map(|&i| runs[i].rect)), cap, None))
        .collect();
    for o in overrides {
        found.push((o.sheet.clone(), o.rect, None, Some(o.name.clone())));
    }
    found.sort_by_key(|(s, r, _, _)| (sheet_order(s), r.1, r.0));

    let mut names = runs::Names::default();
    for o in overrides {
        names.reserve(&o.name);
    }
    let mut tables: Vec<FoundTable> = found
        .into_iter()
        .map(|(sheet, rect, cap, forced)| {
            let name = forced.unwrap_or_else(|| {
                let base = cap.and_then(|a| match w.get(&a) {
                    Some(crate::model::Cell::Text(t)) => Some(sanitize(t)),
                    _ => None,
                });
                names.fresh(&base.unwrap_or_default())
            });
            FoundTable { name, sheet, rect, note: false }
        })
        .collect();
    for cap in &caps {
        let Some(crate::model::Cell::Text(t)) = w.get(cap) else { continue };
        let stem: String = sanitize(t).chars().take(24).collect();
        let name = names.fresh(format!("Note_{stem}").trim_end_matches('_'));
        tables.push(FoundTable { name, sheet: cap.sheet.clone(), rect: (cap.col, cap.row, cap.col, cap.row), note: true });
    }

    let decls: BTreeMap<String, TableDecl> = tables.iter().map(|t| (t.name.clone(), t.decl())).collect();
    let mapping = MappingSpec { entries: tables.iter().map(FoundTable::entry).collect() };
    let Lifted { expanded, mut warnings } = lift(w, &decls, &mapping)?;
    let compressed = compress(&expanded);
    let (mut calc, mut annotations) = split_annotations(&compressed);

    // Computed text that nothing reads stays with the calculations so the
    // layout can place it.
    let notes: BTreeSet<&str> = tables.iter().filter(|t| t.note).map(|t| t.name.as_str()).collect();
    let computed: Vec<_> = annotations.equations.iter().filter(|e| !notes.contains(e.table.as_str())).cloned().collect();
    for eq in computed {
        warnings.push(format!("table `{}` computes unused text; kept with the calculations", eq.table));
        annotations.equations.remove(&eq);
        if calc.table(&eq.table).is_none() {
            calc.declare(decls[&eq.table].clone()).expect("fresh name");
        }
        calc.add_equation(eq);
    }
    annotations.tables.retain(|name, _| annotations.equations.iter().any(|e| &e.table == name));

    let (layouts, explicit) = write_layouts(w, &tables, &calc, &annotations, &expanded);
    Ok(Discovery { runs, tables, calc, annotations, explicit, layouts, warnings })
}

fn bounding(rects: impl Iterator<Item = crate::model::Rect>) -> crate::model::Rect {
    rects.fold((u32::MAX, u32::MAX, 0, 0), |a, r| (a.0.min(r.0), a.1.min(r.1), a.2.max(r.2), a.3.max(r.3)))
}

/// Builds one layout sheet per worksheet. A header row and column of skips
/// fix every column and row start, so blank cells never shift anything.
/// Tables that would straddle another item's start go to `explicit`.
fn write_layouts(
    w: &Workbook,
    tables: &[FoundTable],
    calc: &Object,
    notes: &Object,
    expanded: &crate::algebra::ExpandedObject,
) -> (Vec<crate::pipeline::LayoutSheet>, MappingSpec) {
    let mut explicit = MappingSpec::default();
    let mut out = Vec::new();
    for sheet in &w.sheets {
        let mut items: Vec<(&FoundTable, String)> = Vec::new();
        for t in tables.iter().filter(|t| t.sheet == sheet.name) {
            if calc.table(&t.name).is_some() {
                items.push((t, format!("{} {}", t.name, t.orientation())));
            } else if notes.table(&t.name).is_some() {
                let text = match expanded.get(&t.name, &[]) {
                    Some(crate::model::Expr::Text(s)) => s.clone(),
                    _ => continue,
                };
                items.push((t, format!("'{text}'")));
            }
        }
        loop {
            let xs: BTreeSet<u32> = std::iter::once(1).chain(items.iter().map(|(t, _)| t.rect.0)).collect();
            let ys: BTreeSet<u32> = std::iter::once(1).chain(items.iter().map(|(t, _)| t.rect.1)).collect();
            let straddles = |t: &FoundTable| {
                xs.range(t.rect.0 + 1..).next().is_some_and(|&n| t.rect.2 >= n)
                    || ys.range(t.rect.1 + 1..).next().is_some_and(|&n| t.rect.3 >= n)
            };
            match items.iter().position(|(t, _)| straddles(t)) {
                Some(i) => {
                    let (t, _) = items.remove(i);
                    explicit.entries.push(t.entry());
                }
                None => break,
            }
        }
        if items.is_empty() {
            continue;
        }
        let xs: Vec<u32> = std::iter::once(1).chain(items.iter().map(|(t, _)| t.rect.0)).collect::<BTreeSet<_>>().into_iter().collect();
        let ys: Vec<u32> = std::iter::once(1).chain(items.iter().map(|(t, _)| t.rect.1)).collect::<BTreeSet<_>>().into_iter().collect();
        let mut grid = vec![vec![String::new(); xs.len() + 1]; ys.len() + 1];
        for (j, x) in xs.iter().enumerate() {
            let width = xs.get(j + 1).map_or(0, |n| n - x);
            grid[0][j + 1] = format!("skip({width},0)");
        }
        for (i, y) in ys.iter().enumerate() {
            let height = ys.get(i + 1).map_or(0, |n| n - y);
            grid[i + 1][0] = format!("skip(0,{height})");
        }
        grid[0][0] = "skip(0,0)".into();
        for (t, text) in items {
            let i = ys.binary_search(&t.rect.1).expect("row start listed");
            let j = xs.binary_search(&t.rect.0).expect("column start listed");
            grid[i + 1][j + 1] = text;
        }
        out.push((sheet.name.clone(), grid));
    }
    (out, explicit)
}

/// Writes a layout sheet grid as CSV text.
pub fn layout_csv(grid: &[Vec<String>]) -> String {
    let mut s = crate::emitter::write_csv_grid(grid);
    if s.is_empty() {
        let _ = writeln!(s);
    }
    s
}
