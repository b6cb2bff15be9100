//! Measures on energy surfaces: the physical (uniform) measure, candidate
//! comparison families, and symmetrization over coefficient permutations.

mod candidate;
mod density;

pub use candidate::{
    measure_of_set, physical_measure, sample_uniform, CandidateMeasure, MeasureSummary,
    DEFAULT_MASS_SAMPLES, PROBABILITY_TOLERANCE,
};
pub use density::{
    all_permutations, orbit_average, Density, Family, Invariance, Symmetrized, Tabulated, Tilt, Vmf,
    DEFAULT_PERMUTATION_SEED, EXACT_ORBIT_MAX_DIM, MAX_KAPPA, SAMPLED_PERMUTATIONS,
};
