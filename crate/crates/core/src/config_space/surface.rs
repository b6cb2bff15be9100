use serde::Serialize;

use crate::special::{ln_factorial, ln_sphere_area};
use crate::{Error, Result};

/// Fixed-energy sphere `{c ∈ R^n : Σ c_i²/2 = e}` in cylinder coordinates.
///
/// With an orthonormal basis the kinetic energy is half the squared
/// coefficient norm, so the radius is `sqrt(2e)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergySurface {
    pub dim: usize,
    pub energy: f64,
    pub radius: f64,
    /// Surface measure (counting measure of two points when `dim == 1`).
    /// Zero on the degenerate surface.
    pub area: f64,
}

pub fn make_surface(dim: usize, energy: f64) -> Result<EnergySurface> {
    if dim == 0 {
        return Err(Error::domain("surface dimension must be >= 1"));
    }
    if !(energy >= 0.0) || !energy.is_finite() {
        return Err(Error::domain(format!("energy must be finite and >= 0, got {energy}")));
    }
    let radius = (2.0 * energy).sqrt();
    let area = if radius > 0.0 {
        ln_sphere_area(dim, radius).exp()
    } else {
        0.0
    };
    Ok(EnergySurface {
        dim,
        energy,
        radius,
        area,
    })
}

impl EnergySurface {
    pub fn is_degenerate(&self) -> bool {
        self.radius == 0.0
    }

    pub fn ensure_nondegenerate(&self) -> Result<()> {
        if self.is_degenerate() {
            Err(Error::DegenerateSurface)
        } else {
            Ok(())
        }
    }

    pub fn ln_area(&self) -> f64 {
        if self.is_degenerate() {
            f64::NEG_INFINITY
        } else {
            ln_sphere_area(self.dim, self.radius)
        }
    }

    /// Log mass of the reference measure: the area, divided by `n!` for
    /// indistinguishable coefficients.
    pub fn ln_reference_mass(&self, indistinguishable: bool) -> f64 {
        let shift = if indistinguishable {
            ln_factorial(self.dim)
        } else {
            0.0
        };
        self.ln_area() - shift
    }

    pub fn reference_mass(&self, indistinguishable: bool) -> f64 {
        self.ln_reference_mass(indistinguishable).exp()
    }
}
