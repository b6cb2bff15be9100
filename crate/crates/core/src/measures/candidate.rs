use serde::Serialize;

use crate::config_space::EnergySurface;
use crate::sampling::{accumulate, fill_unit_sphere, sphere_points, Estimate};
use crate::special::ln_factorial;
use crate::{Error, Result};

use super::density::{Density, Invariance, DEFAULT_PERMUTATION_SEED};

/// Sample count used to estimate the mass of shapes without a closed-form
/// sphere average (tabulated data).
pub const DEFAULT_MASS_SAMPLES: usize = 200_000;
const DEFAULT_MASS_SEED: u64 = 0x4d41_5353;

/// Tolerance on `|mass - 1|` for a measure to count as a probability
/// measure when its mass is known exactly.
pub const PROBABILITY_TOLERANCE: f64 = 1e-9;

/// A measure on an energy surface given by a density with respect to the
/// surface reference measure `v_e` (area, or area/n! when indistinguishable).
///
/// The density is `weight · shape(x/|x|)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateMeasure {
    surface: EnergySurface,
    density: Density,
    weight: f64,
    total_mass: f64,
    mass_std_error: f64,
    indistinguishable: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MeasureSummary {
    pub family: super::Family,
    pub params: serde_json::Value,
    pub dim: usize,
    pub energy: f64,
    pub indistinguishable: bool,
    pub total_mass: f64,
    pub mass_std_error: f64,
    pub invariance: Invariance,
}

impl CandidateMeasure {
    /// Finite measure `weight · shape · v_e`. The mass comes from the
    /// shape's sphere average when available and from a fixed-seed Monte
    /// Carlo estimate otherwise.
    pub fn finite(
        surface: EnergySurface,
        density: Density,
        weight: f64,
        indistinguishable: bool,
    ) -> Result<Self> {
        surface.ensure_nondegenerate()?;
        if density.dim() != surface.dim {
            return Err(Error::domain(format!(
                "density dimension {} does not match surface dimension {}",
                density.dim(),
                surface.dim
            )));
        }
        if !(weight >= 0.0) || !weight.is_finite() {
            return Err(Error::domain(format!("measure weight must be finite and >= 0, got {weight}")));
        }
        let ref_mass = surface.reference_mass(indistinguishable);
        let (total_mass, mass_std_error) = match density.sphere_mean() {
            Some(mean) => (weight * ref_mass * mean, 0.0),
            None => {
                let est = shape_mean_mc(&density, DEFAULT_MASS_SAMPLES, DEFAULT_MASS_SEED);
                (weight * ref_mass * est.value, weight * ref_mass * est.std_error)
            }
        };
        Ok(CandidateMeasure {
            surface,
            density,
            weight,
            total_mass,
            mass_std_error,
            indistinguishable,
        })
    }

    /// Probability measure with the given shape.
    pub fn probability(surface: EnergySurface, density: Density, indistinguishable: bool) -> Result<Self> {
        CandidateMeasure::finite(surface, density, 1.0, indistinguishable)?.normalize()
    }

    pub fn surface(&self) -> &EnergySurface {
        &self.surface
    }

    pub fn density(&self) -> &Density {
        &self.density
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn mass_std_error(&self) -> f64 {
        self.mass_std_error
    }

    pub fn is_indistinguishable(&self) -> bool {
        self.indistinguishable
    }

    pub fn reference_mass(&self) -> f64 {
        self.surface.reference_mass(self.indistinguishable)
    }

    pub fn ln_reference_mass(&self) -> f64 {
        self.surface.ln_reference_mass(self.indistinguishable)
    }

    pub fn is_probability(&self) -> bool {
        let tol = PROBABILITY_TOLERANCE + 3.0 * self.mass_std_error;
        (self.total_mass - 1.0).abs() <= tol
    }

    /// Density with respect to `v_e` at the unit direction `u`.
    pub fn density_at_direction(&self, u: &[f64]) -> f64 {
        self.weight * self.density.eval(u)
    }

    pub fn ln_density_at_direction(&self, u: &[f64]) -> f64 {
        self.weight.ln() + self.density.ln_eval(u)
    }

    /// Density with respect to `v_e` at a point `x` of the surface.
    pub fn density_at(&self, x: &[f64]) -> f64 {
        let r = crate::sampling::norm(x);
        let u: Vec<f64> = x.iter().map(|v| v / r).collect();
        self.density_at_direction(&u)
    }

    /// `c · η`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor >= 0.0) || !factor.is_finite() {
            return Err(Error::domain(format!("scale factor must be finite and >= 0, got {factor}")));
        }
        Ok(CandidateMeasure {
            weight: self.weight * factor,
            total_mass: self.total_mass * factor,
            mass_std_error: self.mass_std_error * factor,
            ..self.clone()
        })
    }

    /// `μ(X) = η(X)/η(V)` using the recorded total mass.
    pub fn normalize(&self) -> Result<Self> {
        normalize_by(self, self.total_mass, self.mass_std_error)
    }

    /// Normalize by a fresh Monte Carlo estimate of the total mass.
    pub fn normalize_estimated(&self, count: usize, seed: u64) -> Result<(Self, Estimate)> {
        let mass = self.estimate_mass(count, seed);
        Ok((normalize_by(self, mass.value, mass.std_error)?, mass))
    }

    /// Monte Carlo estimate of `η(V) = ∫ ρ dv_e` over uniform points.
    pub fn estimate_mass(&self, count: usize, seed: u64) -> Estimate {
        let est = shape_mean_mc(&self.density, count, seed);
        let scale = self.weight * self.reference_mass();
        Estimate {
            value: est.value * scale,
            std_error: est.std_error * scale,
            samples: est.samples,
        }
    }

    /// Orbit average of the density over coefficient permutations.
    ///
    /// A distinguishable measure becomes indistinguishable: the averaged
    /// density is read against the reference `v_e/n!`, so the total mass
    /// is divided by `n!`. Applied to an indistinguishable measure only the
    /// shape is averaged.
    pub fn symmetrize(&self) -> Self {
        self.symmetrize_with_seed(DEFAULT_PERMUTATION_SEED)
    }

    /// As [`symmetrize`](Self::symmetrize), with the seed used to draw
    /// permutations when `n` is beyond exact orbit enumeration.
    pub fn symmetrize_with_seed(&self, seed: u64) -> Self {
        let density = self.density.symmetrized(seed);
        let shift = if self.indistinguishable {
            1.0
        } else {
            (-ln_factorial(self.surface.dim)).exp()
        };
        CandidateMeasure {
            density,
            total_mass: self.total_mass * shift,
            mass_std_error: self.mass_std_error * shift,
            indistinguishable: true,
            ..self.clone()
        }
    }

    pub fn summary(&self) -> MeasureSummary {
        MeasureSummary {
            family: self.density.family(),
            params: self.density.params(),
            dim: self.surface.dim,
            energy: self.surface.energy,
            indistinguishable: self.indistinguishable,
            total_mass: self.total_mass,
            mass_std_error: self.mass_std_error,
            invariance: self.density.invariance(),
        }
    }
}

fn normalize_by(measure: &CandidateMeasure, mass: f64, mass_se: f64) -> Result<CandidateMeasure> {
    if !(mass > 0.0) || !mass.is_finite() {
        return Err(Error::domain(format!("cannot normalize a measure of total mass {mass}")));
    }
    Ok(CandidateMeasure {
        weight: measure.weight / mass,
        total_mass: 1.0,
        mass_std_error: mass_se / mass,
        ..measure.clone()
    })
}

fn shape_mean_mc(density: &Density, count: usize, seed: u64) -> Estimate {
    let n = density.dim();
    accumulate(count, seed, || vec![0.0; n], |rng, u: &mut Vec<f64>| {
        fill_unit_sphere(rng, u);
        [density.eval(u)]
    })
    .estimate(0)
}

/// The physical measure: constant density `1/|V_n(e)|` against the
/// reference measure, a probability measure.
pub fn physical_measure(surface: EnergySurface, indistinguishable: bool) -> Result<CandidateMeasure> {
    CandidateMeasure::probability(surface, Density::uniform(surface.dim), indistinguishable)
}

/// Points uniform on the energy surface (isotropic Gaussian, normalized,
/// scaled by the radius).
pub fn sample_uniform(surface: &EnergySurface, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    surface.ensure_nondegenerate()?;
    if count == 0 {
        return Err(Error::domain("sample count must be >= 1"));
    }
    Ok(sphere_points(surface.dim, surface.radius, count, seed))
}

/// Monte Carlo estimate of `μ(A) = ∫_A ρ dv_e` for a point predicate on the
/// surface.
pub fn measure_of_set<P>(measure: &CandidateMeasure, indicator: P, count: usize, seed: u64) -> Estimate
where
    P: Fn(&[f64]) -> bool + Sync,
{
    let n = measure.surface.dim;
    let r = measure.surface.radius;
    let ref_mass = measure.reference_mass();
    let est = accumulate(
        count,
        seed,
        || (vec![0.0; n], vec![0.0; n]),
        |rng, (u, x): &mut (Vec<f64>, Vec<f64>)| {
            fill_unit_sphere(rng, u);
            x.iter_mut().zip(u.iter()).for_each(|(xi, ui)| *xi = r * ui);
            let v = if indicator(x) {
                measure.density_at_direction(u)
            } else {
                0.0
            };
            [v]
        },
    )
    .estimate(0);
    Estimate {
        value: est.value * ref_mass,
        std_error: est.std_error * ref_mass,
        samples: est.samples,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config_space::make_surface;
    use crate::measures::density::{all_permutations, Vmf};
    use std::f64::consts::PI;

    #[test]
    fn physical_measure_densities() {
        let s3 = make_surface(3, 0.5).unwrap();
        let m = physical_measure(s3, false).unwrap();
        assert!((m.density_at(&[0.0, 0.0, 1.0]) - 1.0 / (4.0 * PI)).abs() < 1e-15);
        assert!((m.density_at(&[0.0, 0.0, 1.0]) - 0.0795775).abs() < 1e-7);

        let s2 = make_surface(2, 0.5).unwrap();
        let m = physical_measure(s2, true).unwrap();
        assert!((m.density_at(&[1.0, 0.0]) - 1.0 / PI).abs() < 1e-15);

        let s1 = make_surface(1, 0.5).unwrap();
        let m = physical_measure(s1, false).unwrap();
        assert_eq!(m.density_at(&[1.0]), 0.5);
        assert_eq!(m.density_at(&[-1.0]), 0.5);
    }

    #[test]
    fn physical_measure_on_degenerate_surface() {
        let s = make_surface(3, 0.0).unwrap();
        assert!(matches!(physical_measure(s, false), Err(Error::DegenerateSurface)));
        assert!(matches!(sample_uniform(&s, 10, 0), Err(Error::DegenerateSurface)));
    }

    #[test]
    fn physical_density_is_constant() {
        let s = make_surface(4, 1.7).unwrap();
        let m = physical_measure(s, true).unwrap();
        let pts = sample_uniform(&s, 1000, 3).unwrap();
        let first = m.density_at(&pts[0]);
        assert!(pts.iter().all(|p| m.density_at(p) == first));
    }

    #[test]
    fn normalize_constant_rescale() {
        let s = make_surface(3, 0.5).unwrap();
        let m = physical_measure(s, false).unwrap().scaled(2.0).unwrap();
        assert!((m.total_mass() - 2.0).abs() < 1e-15);
        let n = m.normalize().unwrap();
        assert!((n.total_mass() - 1.0).abs() < 1e-15);
        assert!((n.density_at(&[1.0, 0.0, 0.0]) - 1.0 / (4.0 * PI)).abs() < 1e-15);
        // normalize is a fixed point on probability measures
        assert_eq!(n.normalize().unwrap(), n);
    }

    #[test]
    fn normalize_vmf_by_monte_carlo() {
        let s = make_surface(3, 0.5).unwrap();
        let kappa = 1.0;
        let d = Density::von_mises_fisher(vec![0.0, 0.0, 1.0], kappa).unwrap();
        let eta = CandidateMeasure::finite(s, d, 1.0, false).unwrap();
        let closed = 4.0 * PI * kappa.sinh() / kappa;
        assert!((eta.total_mass() - closed).abs() < 1e-12);
        let (mu, mass) = eta.normalize_estimated(200_000, 17).unwrap();
        assert!(mass.within(closed, 3.0), "{mass:?} vs {closed}");
        let check = mu.estimate_mass(200_000, 18);
        assert!(check.within(1.0, 3.0), "{check:?}");
    }

    #[test]
    fn zero_density_cannot_normalize() {
        let s = make_surface(3, 0.5).unwrap();
        let zero = CandidateMeasure::finite(s, Density::uniform(3), 0.0, false).unwrap();
        assert!(matches!(zero.normalize(), Err(Error::Domain(_))));
        let tab = Density::tabulated(vec![vec![1.0, 0.0, 0.0]], vec![0.0]).unwrap();
        let zero = CandidateMeasure::finite(s, tab, 1.0, false).unwrap();
        assert!(matches!(zero.normalize(), Err(Error::Domain(_))));
    }

    #[test]
    fn symmetrize_divides_mass_by_factorial() {
        let s = make_surface(3, 0.5).unwrap();
        let d = Density::von_mises_fisher(vec![1.0, 0.0, 0.0], 2.0).unwrap();
        let mu = CandidateMeasure::probability(s, d, false).unwrap();
        let sym = mu.symmetrize();
        assert!(sym.is_indistinguishable());
        assert!((sym.total_mass() - 1.0 / 6.0).abs() < 1e-15);
        // against the indistinguishable reference the averaged density
        // integrates to 1/n!
        let mass = sym.estimate_mass(100_000, 1);
        assert!(mass.within(1.0 / 6.0, 3.0));
    }

    #[test]
    fn symmetrize_fixed_point_and_idempotent() {
        let s = make_surface(4, 0.8).unwrap();
        let m = physical_measure(s, false).unwrap();
        let sym = m.symmetrize();
        let pts = sample_uniform(&s, 200, 2).unwrap();
        for p in &pts {
            assert!((sym.density_at(p) - m.density_at(p)).abs() <= 1e-12 * m.density_at(p));
        }

        let d = Density::vmf_mixture(
            0.4,
            Vmf::new(vec![1.0, 0.2, 0.0, 0.0], 3.0).unwrap(),
            Vmf::new(vec![0.0, 0.0, -1.0, 1.0], 1.5).unwrap(),
        )
        .unwrap();
        let mu = CandidateMeasure::probability(s, d, false).unwrap();
        let once = mu.symmetrize();
        let twice = once.symmetrize();
        for p in &pts {
            let a = once.density_at(p);
            assert!((twice.density_at(p) - a).abs() <= 1e-12 * a);
        }
    }

    #[test]
    fn symmetrized_density_is_permutation_invariant() {
        let s = make_surface(5, 1.0).unwrap();
        let d = Density::polynomial_tilt(5, 1, 1.6).unwrap();
        let sym = CandidateMeasure::probability(s, d, false).unwrap().symmetrize();
        let perms = all_permutations(5);
        let pts = sample_uniform(&s, 50, 4).unwrap();
        for (i, p) in pts.iter().enumerate() {
            let pi = &perms[(i * 37) % perms.len()];
            let q: Vec<f64> = pi.iter().map(|&j| p[j]).collect();
            let a = sym.density_at(p);
            assert!((sym.density_at(&q) - a).abs() <= 1e-9 * a.max(1e-300));
        }
    }

    #[test]
    fn sampled_orbit_beyond_six() {
        let s = make_surface(8, 1.0).unwrap();
        let d = Density::von_mises_fisher(vec![1.0; 8], 2.0).unwrap();
        let sym = CandidateMeasure::probability(s, d, false).unwrap().symmetrize_with_seed(9);
        match sym.density() {
            Density::Symmetrized(inner) => {
                assert!(!inner.is_exact());
                assert_eq!(inner.permutation_count(), 720);
                assert_eq!(inner.seed(), Some(9));
            }
            other => panic!("expected symmetrized density, got {other:?}"),
        }
    }

    #[test]
    fn hemisphere_measures() {
        let s = make_surface(3, 0.5).unwrap();
        let m = physical_measure(s, false).unwrap();
        let half = measure_of_set(&m, |x| x[2] >= 0.0, 100_000, 1);
        assert!(half.within(0.5, 3.0));
        let full = measure_of_set(&m, |_| true, 100_000, 2);
        assert!(full.within(1.0, 3.0));
    }
}
