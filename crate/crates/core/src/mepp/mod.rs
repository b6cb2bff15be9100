//! Verification harnesses for the measure-theoretic statements and the
//! maximum-entropy-production selector.

mod family;
mod props;
mod select;

pub use family::{random_candidates, CandidateFamily, FamilyDescription, FamilySpec};
pub use props::{
    verify_prop1, verify_prop3, verify_prop4, verify_prop4_with, verify_prop5, verify_vmf_gaps, vmf_gap_quadrature,
    EntropyCheck, GapCheck, MaxEntropyReport, PhysicalEntropyReport, ProjectiveSuiteReport, SeriesBoundReport,
    VmfGapCheck, VmfGapReport,
};
pub use select::{
    select, select_with, Dominance, FamilyResult, GapPoint, Margin, Outcome, SelectOptions, SelectionReport, SCOPE,
};
