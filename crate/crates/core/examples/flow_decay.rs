//! Pseudo-spectral Navier-Stokes on the periodic cube: exact single-mode
//! decay, an energy budget, and a trajectory mapped onto energy surfaces.
//!
//!     cargo run --release --example flow_decay

use mepp_lab::flow::{integrate, trajectory, FlowParams, SpectralState};

fn main() -> mepp_lab::Result<()> {
    let nu = 0.1;
    let single = SpectralState::single_mode(16, [1, 1, 0], 1.0)?;
    let params = FlowParams::new(nu, 0.01, 1.0)?;
    let (series, last) = integrate(&single, &params)?;
    // |k|² = 2, so E(t) = E(0) e^{-4νt}.
    let exact = single.energy() * (-4.0 * nu).exp();
    println!("single mode: E(1) = {:.12}, exact {:.12}", last.energy(), exact);

    let init = SpectralState::random_solenoidal(16, 0.5, 2.0, 42)?;
    let params = FlowParams::new(0.05, 0.01, 1.0)?;
    let (series_r, _) = integrate(&init, &params)?;
    let h = series_r[1].time - series_r[0].time;
    let eps: Vec<f64> = series_r.iter().map(|p| p.dissipation).collect();
    let lost = mepp_lab::quadrature::simpson(&eps, h).unwrap();
    let de = series_r.last().unwrap().energy - series_r[0].energy;
    println!("random field: ΔE = {de:.9}, ∫ε dt = {lost:.9}, residual {:.1e}", de + lost);

    let traj = trajectory(&init, &params, &[0.0, 0.5, 1.0], 3)?;
    for s in &traj.samples {
        println!("t = {:.2}: E = {:.6}, surface radius {:.6}", s.time, s.energy, s.surface.radius);
    }
    println!("{} steps recorded for the single mode", series.len() - 1);
    Ok(())
}
