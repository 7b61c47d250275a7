use thiserror::Error;

use crate::measure::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    /// The second argument of `coag` does not index every block of the first.
    #[error("ground set mismatch: need a partition of {{0,...,{needed}}}, got {{0,...,{got}}}")]
    GroundMismatch { needed: usize, got: usize },

    #[error("invalid mass partition: {0}")]
    InvalidMass(String),

    #[error("invalid coagulation measure: {}", format_violations(.0))]
    InvalidMeasure(Vec<Violation>),

    /// Jump rate of the singleton partition is not defined.
    #[error("the singleton partition carries no jump rate")]
    NullEvent,

    #[error("no events at resolution {0}: total rate is zero")]
    NoEvents(usize),

    #[error("rejection sampling exceeded {0} trials")]
    RejectionCap(usize),

    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("fixation bound undefined: {0}")]
    BoundUndefined(String),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
