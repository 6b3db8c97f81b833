use thiserror::Error;

use crate::geometry::{CellCoord, Vec2};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid box: {0}")]
    InvalidBox(String),

    #[error("invalid cell: {0}")]
    InvalidCell(String),

    #[error("adjacency of cell {0:?} with itself is undefined")]
    SameCell(CellCoord),

    #[error("body {id} at {position:?} lies outside the root box")]
    OutsideRoot { id: usize, position: Vec2 },

    #[error("capacity must be at least 1")]
    InvalidCapacity,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("singular field: body {source_id} coincides with target{}", target_label(.target_id))]
    Singular {
        source_id: usize,
        target_id: Option<usize>,
    },

    #[error("bodies {a} and {b} coincide")]
    ZeroDistance { a: usize, b: usize },

    #[error("unknown body id {0}")]
    UnknownBody(usize),

    #[error("graph has zero total weight")]
    ZeroTotalWeight,

    #[error("partition does not cover node {0} exactly once")]
    BadPartition(usize),
}

fn target_label(target: &Option<usize>) -> String {
    match target {
        Some(id) => format!(" body {id}"),
        None => String::new(),
    }
}
