//! Densities on an energy surface: the physical measure, vMF shapes,
//! symmetrization and indistinguishable normalization.
//!
//!     cargo run --example candidate_measures

use mepp_lab::config_space::make_surface;
use mepp_lab::measures::{measure_of_set, physical_measure, CandidateMeasure, Density};

fn main() -> mepp_lab::Result<()> {
    let s = make_surface(3, 0.5)?;

    let physical = physical_measure(s, false)?;
    let indist = physical_measure(s, true)?;
    println!("physical reference mass {:.6}, indistinguishable {:.6}", physical.reference_mass(), indist.reference_mass());

    let vmf = Density::von_mises_fisher(vec![1.0, 0.0, 0.0], 3.0)?;
    let sym = vmf.symmetrized(7);
    println!("vMF invariance: {:?}", vmf.invariance());
    println!("symmetrized invariance: {:?}", sym.invariance());

    let m = CandidateMeasure::probability(s, vmf, false)?;
    // Mass of the cap x_1 > 0, which a κ = 3 vMF along e_1 concentrates on.
    let cap = measure_of_set(&m, |x| x[0] > 0.0, 200_000, 1);
    println!("μ(x1 > 0) = {:.4} ± {:.1e}  (uniform: 0.5)", cap.value, cap.std_error);

    let finite = CandidateMeasure::finite(s, Density::uniform(3), 2.5, false)?;
    println!("finite measure mass {:.6}", finite.total_mass());
    println!("{}", serde_json::to_string_pretty(&m.summary())?);
    Ok(())
}
