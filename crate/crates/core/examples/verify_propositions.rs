//! The verification suites: restriction consistency, physical entropy,
//! entropy maximization and the exponential series bound.
//!
//!     cargo run --release --example verify_propositions

use mepp_lab::config_space::make_surface;
use mepp_lab::mepp::{random_candidates, verify_prop1, verify_prop3, verify_prop4, verify_prop5, CandidateFamily};

fn main() -> mepp_lab::Result<()> {
    let p1 = verify_prop1(6, 20_000, 1)?;
    println!("restriction chains to n = 6: {} chains, pass {}", p1.chains, p1.pass);

    let s = make_surface(3, 0.5)?;
    let p3 = verify_prop3(&s, 100_000, 2)?;
    for c in &p3.checks {
        println!(
            "physical entropy (indistinguishable = {}): {:.6} vs ln mass {:.6}",
            c.indistinguishable, c.estimate.value, c.expected
        );
    }

    let mut families = vec![CandidateFamily::physical("uniform")];
    families.extend(random_candidates(3, 5, 3)?);
    let p4 = verify_prop4(&families, &s, 50_000, 4)?;
    for g in &p4.checks {
        println!("{:<28} gap {:>9.5} ± {:.1e}", g.family, g.gap, g.gap_std_error);
    }
    println!("violations: {}", p4.violations);

    let p5 = verify_prop5(2.0, 20)?;
    println!(
        "Σ 2^k/k! to 20 = {} ≈ {:.15}, e^2 - S ∈ [{:.2e}, {:.2e}]",
        p5.final_partial_sum_exact,
        p5.partial_sums[20],
        p5.gap_lower,
        p5.gap_upper
    );
    Ok(())
}
