//! Rank candidate measure families along a decaying flow by pointwise
//! entropy dominance.
//!
//!     cargo run --release --example mepp_selection

use mepp_lab::flow::{trajectory, FlowParams, SpectralState};
use mepp_lab::mepp::{select, CandidateFamily, FamilySpec};

fn main() -> mepp_lab::Result<()> {
    let init = SpectralState::random_solenoidal(16, 0.5, 2.0, 9)?;
    let traj = trajectory(&init, &FlowParams::new(0.05, 0.01, 1.0)?, &[0.0, 0.25, 0.5, 0.75, 1.0], 3)?;

    let families = vec![
        CandidateFamily::physical("uniform"),
        CandidateFamily::from_spec("vmf-2", FamilySpec::VonMisesFisher { kappa: 2.0, direction: None }),
        CandidateFamily::from_spec("tilt", FamilySpec::PolynomialTilt { slope: 0.5, axis: 1 }),
        CandidateFamily::from_spec(
            "mixture",
            FamilySpec::Mixture {
                weight: 0.5,
                kappa: 4.0,
                second_kappa: None,
                direction: None,
                second_direction: None,
            },
        )
        .symmetrized(true),
    ];
    let report = select(&families, &traj, 50_000, 1)?;
    print!("{}", report.table());
    println!("exit code for this verdict: {}", report.outcome.exit_code());
    Ok(())
}
