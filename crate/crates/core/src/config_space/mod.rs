//! Geometry and combinatorics of the truncated configuration space.

mod basis;
mod projective;
mod surface;

pub use basis::{admissible_mode_count, build_basis, BasisSpec, Mode, ModeOrdering, DOMAIN_VOLUME};
pub use projective::{
    restriction_map, verify_projective_chains, verify_projective_consistency, verify_projective_consistency_with,
    ConsistencyReport, RestrictionMap, SetCheck, DEFAULT_SET_SAMPLES, DEFAULT_SET_SEED,
};
pub use surface::{make_surface, EnergySurface};
