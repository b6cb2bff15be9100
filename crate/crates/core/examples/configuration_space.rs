//! Divergence-free Fourier basis, energy surfaces and the exact n!-factors
//! relating cylinder subspaces.
//!
//!     cargo run --example configuration_space

use mepp_lab::config_space::{admissible_mode_count, build_basis, make_surface, restriction_map};

fn main() -> mepp_lab::Result<()> {
    let basis = build_basis(16, 12)?;
    println!("grid 16: {} admissible modes, using {}", admissible_mode_count(16), basis.modes.len());
    println!("divergence free: {}, max Gram deviation {:.1e}", basis.is_divergence_free(), basis.max_gram_deviation());
    for m in basis.modes.iter().take(4) {
        println!("  k = {:?} cos = {} ê = {:?}", m.canonical_wavevector(), m.is_cosine(), m.polarization_vector());
    }

    for n in [1, 2, 3, 10] {
        let s = make_surface(n, 0.5)?;
        println!("n = {n:>2}: radius {:.4}, ln area {:.6}", s.radius, s.ln_area());
    }

    // g_{10,3} ∘ g_{3,2} = g_{10,2}
    let g = restriction_map(3, 2)?.compose(&restriction_map(10, 3)?)?;
    println!("composed factor {} = {}", g.factor, restriction_map(10, 2)?.factor);
    Ok(())
}
