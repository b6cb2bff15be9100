//! Pseudo-spectral incompressible Navier-Stokes on the periodic cube
//! `[0, 2π)³`: classical RK4 in time, Leray projection, two-thirds
//! dealiasing, constant viscosity.

mod fft;
mod solver;
mod state;

pub use solver::{
    dissipation, energy, integrate, step, trajectory, write_series_csv, Dealiasing, FlowParams, SeriesPoint,
    Solver, Trajectory, TrajectorySample, CFL_NUMBER,
};
pub use state::{retained_cutoff, SpectralState, Vec3c};
