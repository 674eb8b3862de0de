//! Compilation of a model with its layouts into a workbook, and the checks
//! that tie the steps together.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::algebra::{element_addr, instantiate, map_table, AlgebraError, Instance, MappingSpec};
use crate::discovery::Discovery;
use crate::emitter::ReadError;
use crate::evaluator::{evaluate, Value};
use crate::layout::{cross_check, layout_grid, parse_layout_sheet, placements_to_mapping, resolve_format, LayoutError, Placement};
use crate::model::{Cell, Workbook, WorkbookError};
use crate::notation::{parse_program, Diagnostic, Program};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{file}:{diag}")]
    Source { file: String, diag: Diagnostic },
    #[error("{0}")]
    Diagnostic(#[from] Diagnostic),
    #[error("{file}:{err}")]
    Read { file: String, err: ReadError },
    #[error("{0}")]
    Layout(#[from] LayoutError),
    #[error("{0}")]
    Algebra(#[from] AlgebraError),
    #[error("{0}")]
    Workbook(#[from] WorkbookError),
    #[error("{0}")]
    Discovery(#[from] crate::discovery::DiscoveryError),
    #[error("{0}")]
    Crosstab(#[from] crate::crosstab::CrosstabError),
    #[error("{0}")]
    Other(String),
}

/// A layout sheet: target worksheet name and its rows of cell texts.
pub type LayoutSheet = (String, Vec<Vec<String>>);

/// A compiled model.
#[derive(Debug, Clone, PartialEq)]
pub struct Compiled {
    pub workbook: Workbook,
    pub instance: Instance,
    pub placements: Vec<Placement>,
    /// Final placement of every table.
    pub mapping: MappingSpec,
}

/// Instantiates `program`, places its tables by the formats written in the
/// program, by `layouts` and by mapping clauses, and maps it onto a workbook.
/// Text items of the layouts become literal cells.
pub fn compile(program: &Program, entry: Option<&str>, args: &[i64], layouts: &[LayoutSheet]) -> Result<Compiled, Error> {
    let instance = instantiate(program, entry, args)?;
    let tables = &instance.object.tables;
    let mut placements = Vec::new();
    for g in &program.layout {
        placements.extend(layout_grid(&resolve_format(g, &instance.env)?, tables)?);
    }
    for (sheet, cells) in layouts {
        placements.extend(layout_grid(&parse_layout_sheet(sheet, cells, tables)?, tables)?);
    }
    let elsewhere: Vec<String> = instance.mapping.entries.iter().map(|e| e.table.clone()).collect();
    cross_check(tables, &placements, &elsewhere, true)?;
    let (mut spec, texts) = placements_to_mapping(&placements);
    spec.entries.extend(instance.mapping.entries.iter().cloned());

    let mut workbook = Workbook::new();
    let mut seen = BTreeSet::new();
    let sheets = layouts
        .iter()
        .map(|(s, _)| s.clone())
        .chain(placements.iter().map(|p| p.origin.sheet.clone()))
        .chain(spec.entries.iter().map(|e| e.origin.sheet.clone()));
    for s in sheets {
        if seen.insert(s.clone()) {
            workbook.sheet_mut(&s);
        }
    }
    workbook = workbook.union(&map_table(&instance.object, &spec)?)?;
    for (at, text) in texts {
        workbook.insert(&at, Cell::Text(text)).map_err(|_| {
            Error::Layout(LayoutError::Cell { at: at.to_string(), message: "text overlaps a placed table or another text".into() })
        })?;
    }
    workbook.validate()?;
    Ok(Compiled { workbook, instance, placements, mapping: spec })
}

/// Compiles the calculations and layouts produced by discovery, going
/// through their text form.
pub fn compile_discovered(d: &Discovery) -> Result<Workbook, Error> {
    let program = parse_program(&d.calc_source())?;
    let layouts: Vec<LayoutSheet> = d
        .layouts
        .iter()
        .map(|(sheet, grid)| {
            let text = crate::discovery::layout_csv(grid);
            crate::emitter::read_csv_grid(&text)
                .map(|g| (sheet.clone(), g))
                .map_err(|err| Error::Read { file: format!("{sheet}.layout.csv"), err })
        })
        .collect::<Result<_, _>>()?;
    Ok(compile(&program, Some("model"), &[], &layouts)?.workbook)
}

/// Evaluated value of every table element, read from `w` at the cells
/// `mapping` gives them.
pub fn element_values(instance: &Instance, mapping: &MappingSpec, w: &Workbook) -> Result<BTreeMap<(String, Vec<i64>), Value>, Error> {
    let ev = evaluate(w);
    let mut out = BTreeMap::new();
    for (name, decl) in &instance.object.tables {
        let entry = mapping.entry(name).ok_or_else(|| AlgebraError::UnmappedTable(name.clone()))?;
        for index in decl.indices() {
            let at = element_addr(decl, entry, &index)?;
            out.insert((name.clone(), index), ev.get(&at));
        }
    }
    Ok(out)
}

/// One element whose values differ.
#[derive(Debug, Clone, PartialEq)]
pub struct Mismatch {
    pub table: String,
    pub index: Vec<i64>,
    pub left: Value,
    pub right: Value,
}

impl std::fmt::Display for Mismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let ix: Vec<String> = self.index.iter().map(i64::to_string).collect();
        write!(f, "{}[{}]: {} vs {}", self.table, ix.join(", "), self.left, self.right)
    }
}

/// Element-by-element comparison of two value maps over the same tables.
pub fn compare(a: &BTreeMap<(String, Vec<i64>), Value>, b: &BTreeMap<(String, Vec<i64>), Value>) -> Vec<Mismatch> {
    a.iter()
        .filter_map(|((table, index), left)| {
            let right = b.get(&(table.clone(), index.clone())).cloned().unwrap_or(Value::Blank);
            (*left != right).then(|| Mismatch { table: table.clone(), index: index.clone(), left: left.clone(), right })
        })
        .collect()
}
