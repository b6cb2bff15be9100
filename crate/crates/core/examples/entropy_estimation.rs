//! Baron-Jauch entropy of candidate measures with both Monte Carlo
//! estimators, against the maximum ln|V|.
//!
//!     cargo run --release --example entropy_estimation

use mepp_lab::config_space::make_surface;
use mepp_lab::entropy::{entropy_gap_with, entropy_with, finite_measure_entropy, uniform_entropy, Estimator};
use mepp_lab::measures::{CandidateMeasure, Density};

fn main() -> mepp_lab::Result<()> {
    let s = make_surface(5, 0.5)?;
    let max = uniform_entropy(&s, false)?;
    println!("n = 5: maximum entropy ln|V| = {:.6}", max.value);

    let shapes = [
        ("vmf κ=1", Density::von_mises_fisher(vec![1.0, 0.0, 0.0, 0.0, 0.0], 1.0)?),
        ("vmf κ=5", Density::von_mises_fisher(vec![1.0, 0.0, 0.0, 0.0, 0.0], 5.0)?),
        ("tilt a=0.9", Density::polynomial_tilt(5, 0, 0.9)?),
    ];
    for (name, d) in shapes {
        let m = CandidateMeasure::probability(s, d, false)?;
        let u = entropy_with(&m, Estimator::UniformSampling, 200_000, 1)?;
        let i = entropy_with(&m, Estimator::ImportanceSampling, 200_000, 1)?;
        let gap = entropy_gap_with(&m, Estimator::ImportanceSampling, 200_000, 1)?;
        println!(
            "{name:<11} uniform {:.5} ± {:.1e}  importance {:.5} ± {:.1e}  gap {:.5}",
            u.value, u.std_error, i.value, i.std_error, gap.value
        );
    }

    // Finite measures: the entropy does not see the total mass.
    let vmf = Density::von_mises_fisher(vec![1.0, 0.0, 0.0, 0.0, 0.0], 1.0)?;
    for c in [0.1, 1.0, 10.0] {
        let m = CandidateMeasure::finite(s, vmf.clone(), c, false)?;
        let f = finite_measure_entropy(&m, 200_000, 2)?;
        println!("{c:>4} × vmf κ=1: S = {:.5} ± {:.1e}", f.value, f.std_error);
    }
    Ok(())
}
