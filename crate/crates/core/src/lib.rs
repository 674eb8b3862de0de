//! Spreadsheet compiler and analysis toolkit over an equation-based model
//! notation.

pub mod algebra;
pub mod cli;
pub mod crosstab;
pub mod discovery;
pub mod emitter;
pub mod evaluator;
pub mod layout;
pub mod model;
pub mod notation;
pub mod pipeline;
