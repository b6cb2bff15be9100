//! Restricting a ball integral to the energy surface by a radial
//! derivative, cross-checked against direct surface integration.
//!
//!     cargo run --release --example surface_restriction

use mepp_lab::restriction::{surface_integral_oracle, surface_restrict, BallIntegrand};

fn main() -> mepp_lab::Result<()> {
    let energy: f64 = 0.5;
    let radius = (2.0 * energy).sqrt();
    for name in ["one", "norm-sq", "x1-sq", "exp-x1"] {
        let f = BallIntegrand::by_name(name, radius)?;
        for dim in [1, 3, 6] {
            let r = surface_restrict(&f, dim, energy, 400_000, 3)?;
            let o = surface_integral_oracle(&f, dim, energy, 400_000, 4)?;
            println!(
                "{name:<8} n = {dim}: d/dr ∫_B = {:.6} ± {:.1e} (fd {:.1e})   ∫_S = {:.6} ± {:.1e}",
                r.value, r.std_error, r.fd_error, o.value, o.std_error
            );
        }
    }

    // Any closure works; this one is odd, so its surface integral vanishes.
    let odd = BallIntegrand::new("x1*x2^2", |x: &[f64]| x[0] * x[1] * x[1]);
    let r = surface_restrict(&odd, 3, energy, 200_000, 5)?;
    println!("odd integrand: {:.2e} ± {:.1e}", r.value, r.std_error);
    Ok(())
}
