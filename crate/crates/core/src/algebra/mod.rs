//! The object calculus: union, function application, quantifier expansion and
//! the table-to-worksheet mapping.

mod expand;
mod instantiate;
mod mapping;

use thiserror::Error;

use crate::model::{AddrError, ModelError, Object, Orientation};

pub use expand::{expand, fold_constants, ExpandedObject};
pub use instantiate::{apply_function, eval_addr, eval_int, instantiate, instantiate_literal, Env, Instance};
pub use mapping::{element_addr, map_expanded, map_table, MapEntry, MappingSpec};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("table `{table}` has {left} dimension(s) on one side of a union and {right} on the other")]
    UnionIncompatible { table: String, left: usize, right: usize },
    #[error("element {table}{index:?} is defined more than once")]
    MultipleDefinition { table: String, index: Vec<i64> },
    #[error("element {table}{index:?} is outside the declared bounds (referenced while defining {from})")]
    OutOfBounds { table: String, index: Vec<i64>, from: String },
    #[error("table `{0}` is referenced but has no mapping entry")]
    UnmappedTable(String),
    #[error("table `{0}` has more than one mapping entry")]
    DuplicateMapping(String),
    #[error("orientation {orientation} does not fit {table} with {rank} dimension(s)")]
    Orientation { table: String, orientation: Orientation, rank: usize },
    #[error("tables `{first}` and `{second}` overlap at {at}")]
    Overlap { first: String, second: String, at: String },
    #[error(transparent)]
    Addr(#[from] AddrError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Union of tables (bounds hulled per dimension) and equations (deduplicated
/// up to renaming of quantified variables).
pub fn union(a: &Object, b: &Object) -> Result<Object, AlgebraError> {
    let mut out = a.clone();
    for decl in b.tables.values() {
        if let Some(existing) = out.table(&decl.name) {
            if existing.rank() != decl.rank() {
                return Err(AlgebraError::UnionIncompatible { table: decl.name.clone(), left: existing.rank(), right: decl.rank() });
            }
        }
        out.declare(decl.clone())?;
    }
    out.equations.extend(b.equations.iter().cloned());
    Ok(out)
}
