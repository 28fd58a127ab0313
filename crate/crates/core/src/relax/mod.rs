//! Moment (NPA) relaxations of noncommutative polynomial problems.

mod basis;
mod build;
mod instance;

pub use basis::{generate_basis, parse_level_spec, MonomialBasis};
pub use build::{
    build_relaxation, build_with_localizers, Localizer, NormBound, Objective, Relation,
    StatConstraint, StatKind,
};
pub use instance::{
    BlockEntry, BlockTemplate, ConstraintRole, LinearConstraint, SdpInstance, Sense,
};
