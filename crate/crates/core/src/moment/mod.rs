//! Symbolic moment-matrix templates.
//!
//! A template assigns to each cell of the tensor-product moment matrix either
//! zero, a Collins–Gisin coordinate or an open variable. Partial-transpose maps
//! and symmetry reductions act on templates without touching numbers.

mod dump;
mod symmetry;
mod template;
mod transpose;

pub use dump::{dump_template, TemplateDump};
pub use symmetry::{apply_symmetry, SymmetrySpec};
pub use template::{build_template, CellValue, MomentTemplate};
pub use transpose::{partial_transpose, PartialTransposeMap};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MomentError {
    #[error("basis does not match scenario: {0}")]
    BasisMismatch(String),
    #[error("degenerate bipartition {0:?}: need a nonempty proper subset of parties")]
    DegenerateBipartition(Vec<usize>),
    #[error("symmetry violation: {0}")]
    SymmetryViolation(String),
    #[error("incomplete assignment: {0}")]
    IncompleteAssignment(String),
}
