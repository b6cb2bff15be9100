//! Baron-Jauch entropy `S(μ) = -∫ ρ ln ρ dv_e` of measures on energy
//! surfaces, in nats, with `0 ln 0 = 0`.
//!
//! Two Monte Carlo estimators are provided. Uniform sampling averages
//! `-|V| ρ ln ρ` over uniform points; importance sampling averages
//! `-ln ρ` over points drawn from the measure itself. The second has far
//! lower variance for concentrated densities. On one-dimensional surfaces
//! (two points) every estimator enumerates exactly.

use serde::{Deserialize, Serialize};

use crate::config_space::EnergySurface;
use crate::measures::CandidateMeasure;
use crate::sampling::{accumulate, fill_unit_sphere, Stats};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    UniformSampling,
    ImportanceSampling,
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: u64,
    pub estimator: Estimator,
}

impl EntropyEstimate {
    fn closed_form(value: f64) -> Self {
        EntropyEstimate {
            value,
            std_error: 0.0,
            samples: 0,
            estimator: Estimator::ClosedForm,
        }
    }

    /// `|value - target| <= k · SE` with a `1e-12` relative floor for
    /// zero-variance estimates.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.std_error + 1e-12 * target.abs().max(1.0)
    }
}

/// `ln |V_n(e)|`, with the `n!` division for indistinguishable coefficients.
pub fn uniform_entropy(surface: &EnergySurface, indistinguishable: bool) -> Result<EntropyEstimate> {
    surface.ensure_nondegenerate()?;
    Ok(EntropyEstimate::closed_form(surface.ln_reference_mass(indistinguishable)))
}

fn require_probability(measure: &CandidateMeasure) -> Result<()> {
    measure.surface().ensure_nondegenerate()?;
    if !measure.is_probability() {
        return Err(Error::Precondition(format!(
            "entropy needs a probability measure (total mass {}); normalize first",
            measure.total_mass()
        )));
    }
    Ok(())
}

fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// Entropy of a probability measure by uniform sampling.
pub fn entropy(measure: &CandidateMeasure, count: usize, seed: u64) -> Result<EntropyEstimate> {
    entropy_with(measure, Estimator::UniformSampling, count, seed)
}

pub fn entropy_with(
    measure: &CandidateMeasure,
    estimator: Estimator,
    count: usize,
    seed: u64,
) -> Result<EntropyEstimate> {
    require_probability(measure)?;
    if measure.surface().dim == 1 {
        let value = -[1.0, -1.0]
            .iter()
            .map(|&u| xlogx(measure.density_at_direction(&[u])))
            .sum::<f64>();
        return Ok(EntropyEstimate::closed_form(value));
    }
    if count == 0 {
        return Err(Error::domain("sample count must be >= 1"));
    }
    let n = measure.surface().dim;
    match estimator {
        Estimator::UniformSampling => {
            let ref_mass = measure.reference_mass();
            let stats = accumulate(count, seed, || vec![0.0; n], |rng, u: &mut Vec<f64>| {
                fill_unit_sphere(rng, u);
                [-ref_mass * xlogx(measure.density_at_direction(u))]
            });
            Ok(from_stats(&stats, estimator))
        }
        Estimator::ImportanceSampling => {
            let stats = accumulate(count, seed, || vec![0.0; n], |rng, u: &mut Vec<f64>| {
                measure.density().sample(rng, u);
                [-measure.ln_density_at_direction(u)]
            });
            Ok(from_stats(&stats, estimator))
        }
        Estimator::ClosedForm => match measure.density().family() {
            crate::measures::Family::Uniform => Ok(EntropyEstimate::closed_form(-measure.weight().ln())),
            other => Err(Error::Precondition(format!(
                "no closed-form entropy for the {other:?} family"
            ))),
        },
    }
}

fn from_stats(stats: &Stats<1>, estimator: Estimator) -> EntropyEstimate {
    let est = stats.estimate(0);
    EntropyEstimate {
        value: est.value,
        std_error: est.std_error,
        samples: est.samples,
        estimator,
    }
}

/// Entropy of a finite measure `η`:
/// `ln η(V) - (1/η(V)) ∫ (dη/dv) ln(dη/dv) dv`.
///
/// Both integrals are estimated from the same uniform points; the standard
/// error comes from the delta method on the ratio. The result does not
/// depend on the scale of `η`.
pub fn finite_measure_entropy(measure: &CandidateMeasure, count: usize, seed: u64) -> Result<EntropyEstimate> {
    measure.surface().ensure_nondegenerate()?;
    if !(measure.total_mass() > 0.0) {
        return Err(Error::domain(format!(
            "finite-measure entropy needs positive mass, got {}",
            measure.total_mass()
        )));
    }
    if measure.surface().dim == 1 {
        let rho = [1.0, -1.0].map(|u| measure.density_at_direction(&[u]));
        let mass: f64 = rho.iter().sum();
        let value = mass.ln() - rho.iter().map(|&r| xlogx(r)).sum::<f64>() / mass;
        return Ok(EntropyEstimate::closed_form(value));
    }
    if count == 0 {
        return Err(Error::domain("sample count must be >= 1"));
    }
    let n = measure.surface().dim;
    let ref_mass = measure.reference_mass();
    let stats = accumulate(count, seed, || vec![0.0; n], |rng, u: &mut Vec<f64>| {
        fill_unit_sphere(rng, u);
        let rho = measure.density_at_direction(u);
        [ref_mass * rho, ref_mass * xlogx(rho)]
    });
    let mass = stats.mean(0);
    if !(mass > 0.0) {
        return Err(Error::domain("estimated mass is zero; the density vanishes on every sample"));
    }
    let integral = stats.mean(1);
    let value = mass.ln() - integral / mass;
    let gradient = [1.0 / mass + integral / (mass * mass), -1.0 / mass];
    Ok(EntropyEstimate {
        value,
        std_error: stats.linear_std_error(gradient),
        samples: stats.count(),
        estimator: Estimator::UniformSampling,
    })
}

/// `ln|V| - S(μ)`, the divergence of `μ` from the physical measure on the
/// same surface. Nonnegative by Jensen's inequality.
pub fn entropy_gap(measure: &CandidateMeasure, count: usize, seed: u64) -> Result<EntropyEstimate> {
    entropy_gap_with(measure, Estimator::UniformSampling, count, seed)
}

pub fn entropy_gap_with(
    measure: &CandidateMeasure,
    estimator: Estimator,
    count: usize,
    seed: u64,
) -> Result<EntropyEstimate> {
    let s = entropy_with(measure, estimator, count, seed)?;
    let max = uniform_entropy(measure.surface(), measure.is_indistinguishable())?;
    Ok(EntropyEstimate {
        value: max.value - s.value,
        ..s
    })
}

/// Entropies along a time grid and their central-difference rates.
#[derive(Debug, Clone, Serialize)]
pub struct ProductionSeries {
    pub times: Vec<f64>,
    pub entropies: Vec<EntropyEstimate>,
    /// `(S(t_{i+1}) - S(t_{i-1})) / (t_{i+1} - t_{i-1})` at interior points.
    pub rates: Vec<f64>,
    pub rate_std_errors: Vec<f64>,
}

impl ProductionSeries {
    pub fn mean_entropy(&self) -> f64 {
        self.entropies.iter().map(|e| e.value).sum::<f64>() / self.entropies.len() as f64
    }

    pub fn mean_rate(&self) -> f64 {
        self.rates.iter().sum::<f64>() / self.rates.len() as f64
    }
}

/// Entropy production along `(time, measure)` pairs. Every time point uses
/// the same seed, so estimates at neighboring times share random numbers.
pub fn production_rate(series: &[(f64, CandidateMeasure)], count: usize, seed: u64) -> Result<ProductionSeries> {
    production_rate_with(series, Estimator::UniformSampling, count, seed)
}

pub fn production_rate_with(
    series: &[(f64, CandidateMeasure)],
    estimator: Estimator,
    count: usize,
    seed: u64,
) -> Result<ProductionSeries> {
    if series.len() < 3 {
        return Err(Error::domain(format!(
            "production rates need at least 3 time points, got {}",
            series.len()
        )));
    }
    if series.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::domain("time points must be strictly increasing"));
    }
    let times: Vec<f64> = series.iter().map(|(t, _)| *t).collect();
    let entropies = series
        .iter()
        .map(|(_, m)| entropy_with(m, estimator, count, seed))
        .collect::<Result<Vec<_>>>()?;
    let mut rates = Vec::with_capacity(series.len() - 2);
    let mut rate_std_errors = Vec::with_capacity(series.len() - 2);
    for i in 1..series.len() - 1 {
        let dt = times[i + 1] - times[i - 1];
        rates.push((entropies[i + 1].value - entropies[i - 1].value) / dt);
        rate_std_errors.push(entropies[i + 1].std_error.hypot(entropies[i - 1].std_error) / dt);
    }
    Ok(ProductionSeries {
        times,
        entropies,
        rates,
        rate_std_errors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config_space::make_surface;
    use crate::measures::{physical_measure, Density};
    use std::f64::consts::PI;

    #[test]
    fn uniform_entropy_closed_forms() {
        let s3 = make_surface(3, 0.5).unwrap();
        let e = uniform_entropy(&s3, false).unwrap();
        assert!((e.value - (4.0 * PI).ln()).abs() < 1e-14);
        assert!((e.value - 2.531024).abs() < 1e-6);
        assert_eq!(e.std_error, 0.0);
        assert_eq!(e.estimator, Estimator::ClosedForm);

        let s2 = make_surface(2, 0.5).unwrap();
        assert!((uniform_entropy(&s2, false).unwrap().value - 1.837877).abs() < 1e-6);
        assert!((uniform_entropy(&s2, true).unwrap().value - PI.ln()).abs() < 1e-14);
        assert!((uniform_entropy(&s2, true).unwrap().value - 1.144730).abs() < 1e-6);
    }

    #[test]
    fn indistinguishability_shift() {
        for n in 1..12 {
            let s = make_surface(n, 0.9).unwrap();
            let d = uniform_entropy(&s, false).unwrap().value;
            let i = uniform_entropy(&s, true).unwrap().value;
            assert!((d - i - crate::special::ln_factorial(n)).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_surface_sentinel() {
        let s = make_surface(3, 0.0).unwrap();
        assert!(matches!(uniform_entropy(&s, false), Err(Error::DegenerateSurface)));
    }

    #[test]
    fn physical_measure_matches_closed_form() {
        for &n in &[2usize, 3, 5] {
            let s = make_surface(n, 0.5).unwrap();
            for &ind in &[false, true] {
                let m = physical_measure(s, ind).unwrap();
                let target = uniform_entropy(&s, ind).unwrap().value;
                for est in [Estimator::UniformSampling, Estimator::ImportanceSampling] {
                    let e = entropy_with(&m, est, 10_000, 1).unwrap();
                    assert!(e.within(target, 3.0), "n={n} ind={ind} {est:?}: {e:?} vs {target}");
                }
            }
        }
    }

    #[test]
    fn two_point_surface() {
        let s = make_surface(1, 0.5).unwrap();
        // tilt slope -0.4 puts mass 0.3 on +r and 0.7 on -r
        let d = Density::polynomial_tilt(1, 0, -0.4).unwrap();
        let m = CandidateMeasure::probability(s, d, false).unwrap();
        let e = entropy(&m, 10, 0).unwrap();
        let expect = -(0.3f64 * 0.3f64.ln() + 0.7 * 0.7f64.ln());
        assert!((e.value - expect).abs() < 1e-14);
        assert!((e.value - 0.610864).abs() < 1e-6);
        let u = entropy(&physical_measure(s, false).unwrap(), 10, 0).unwrap();
        assert!((u.value - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn non_probability_rejected() {
        let s = make_surface(3, 0.5).unwrap();
        let m = physical_measure(s, false).unwrap().scaled(2.0).unwrap();
        assert!(matches!(entropy(&m, 100, 0), Err(Error::Precondition(_))));
        let zero = m.scaled(0.0).unwrap();
        assert!(matches!(finite_measure_entropy(&zero, 100, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn finite_measure_entropy_scale_free() {
        let s = make_surface(3, 0.5).unwrap();
        let base = physical_measure(s, false).unwrap();
        for &c in &[0.1, 1.0, 7.5] {
            let eta = base.scaled(c).unwrap();
            let e = finite_measure_entropy(&eta, 1000, 3).unwrap();
            assert!((e.value - (4.0 * PI).ln()).abs() < 1e-12, "c={c}: {e:?}");
        }
        let d = Density::von_mises_fisher(vec![0.0, 1.0, 0.0], 1.0).unwrap();
        let eta = CandidateMeasure::finite(s, d, 3.0, false).unwrap();
        let a = finite_measure_entropy(&eta, 200_000, 4).unwrap();
        let b = entropy(&eta.normalize().unwrap(), 200_000, 5).unwrap();
        assert!((a.value - b.value).abs() <= 3.0 * a.std_error.hypot(b.std_error));
    }

    #[test]
    fn vmf_tends_to_uniform() {
        let s = make_surface(3, 0.5).unwrap();
        let d = Density::von_mises_fisher(vec![1.0, 0.0, 0.0], 1e-6).unwrap();
        let m = CandidateMeasure::probability(s, d, false).unwrap();
        let e = entropy(&m, 100_000, 1).unwrap();
        let u = uniform_entropy(&s, false).unwrap().value;
        assert!((e.value - u).abs() <= 3.0 * e.std_error + 1e-10);
    }

    #[test]
    fn gap_identity() {
        let s = make_surface(3, 0.5).unwrap();
        let d = Density::von_mises_fisher(vec![1.0, 0.0, 0.0], 2.0).unwrap();
        let m = CandidateMeasure::probability(s, d, false).unwrap();
        let g = entropy_gap(&m, 50_000, 8).unwrap();
        let e = entropy(&m, 50_000, 8).unwrap();
        let u = uniform_entropy(&s, false).unwrap().value;
        assert!((g.value - (u - e.value)).abs() <= 1e-12);
        assert_eq!(g.std_error, e.std_error);
    }

    #[test]
    fn production_rates() {
        let s = make_surface(3, 0.5).unwrap();
        let m = physical_measure(s, false).unwrap();
        let series: Vec<_> = (0..5).map(|i| (i as f64 * 0.1, m.clone())).collect();
        let p = production_rate(&series, 1000, 1).unwrap();
        assert_eq!(p.rates.len(), 3);
        assert!(p.rates.iter().all(|r| r.abs() < 1e-12));

        // r(t) = e^{-t}: d/dt ln(4π r²) = -2
        let series: Vec<_> = (0..6)
            .map(|i| {
                let t = i as f64 * 0.2;
                let r = (-t).exp();
                let s = make_surface(3, r * r / 2.0).unwrap();
                (t, physical_measure(s, false).unwrap())
            })
            .collect();
        let p = production_rate(&series, 1000, 1).unwrap();
        for (r, se) in p.rates.iter().zip(&p.rate_std_errors) {
            assert!((r + 2.0).abs() <= 3.0 * se + 1e-9, "{r}");
        }

        assert!(production_rate(&series[..2], 10, 0).is_err());
        let mut bad = series.clone();
        bad.swap(1, 2);
        assert!(production_rate(&bad, 10, 0).is_err());
    }
}
