use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use super::family::{CandidateFamily, FamilySpec};
use crate::config_space::{verify_projective_chains, ConsistencyReport, EnergySurface};
use crate::entropy::{entropy_with, uniform_entropy, EntropyEstimate, Estimator};
use crate::measures::physical_measure;
use crate::quadrature;
use crate::sampling::derive_seed;
use crate::{Error, Result};

/// Comparisons against a closed form use `3 SE` plus this relative floor,
/// so zero-variance estimates survive rounding.
const ROUNDING_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct ProjectiveSuiteReport {
    pub n_max: usize,
    pub samples_per_set: usize,
    pub seed: u64,
    pub chains: usize,
    pub exact_failures: usize,
    pub set_check_failures: usize,
    pub reports: Vec<ConsistencyReport>,
    pub pass: bool,
}

/// Restriction-factor composition and set-measure consistency over every
/// chain `l <= m <= n <= n_max`.
pub fn verify_prop1(n_max: usize, count: usize, seed: u64) -> Result<ProjectiveSuiteReport> {
    let reports = verify_projective_chains(n_max, count, seed)?;
    let exact_failures = reports.iter().filter(|r| !r.exact_pass).count();
    let set_check_failures = reports
        .iter()
        .flat_map(|r| &r.set_checks)
        .filter(|c| !c.pass)
        .count();
    Ok(ProjectiveSuiteReport {
        n_max,
        samples_per_set: count,
        seed,
        chains: reports.len(),
        exact_failures,
        set_check_failures,
        pass: exact_failures == 0 && set_check_failures == 0,
        reports,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EntropyCheck {
    pub indistinguishable: bool,
    /// `ln` of the reference mass.
    pub expected: f64,
    pub estimate: EntropyEstimate,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PhysicalEntropyReport {
    pub dim: usize,
    pub energy: f64,
    pub checks: Vec<EntropyCheck>,
    pub pass: bool,
}

/// Monte Carlo entropy of the physical measure against `ln|V|` and
/// `ln(|V|/n!)`.
pub fn verify_prop3(surface: &EnergySurface, count: usize, seed: u64) -> Result<PhysicalEntropyReport> {
    surface.ensure_nondegenerate()?;
    let checks = [false, true]
        .into_iter()
        .map(|indist| {
            let m = physical_measure(*surface, indist)?;
            let estimate = entropy_with(&m, Estimator::UniformSampling, count, seed)?;
            let expected = surface.ln_reference_mass(indist);
            Ok(EntropyCheck {
                indistinguishable: indist,
                expected,
                pass: estimate.within(expected, 3.0),
                estimate,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PhysicalEntropyReport {
        dim: surface.dim,
        energy: surface.energy,
        pass: checks.iter().all(|c| c.pass),
        checks,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GapCheck {
    pub family: String,
    pub entropy: EntropyEstimate,
    /// `ln|V| - S`, sharing the entropy's standard error.
    pub gap: f64,
    pub gap_std_error: f64,
    /// `gap > 3 SE`.
    pub resolved: bool,
    /// `S > ln|V| + 3 SE`.
    pub violation: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MaxEntropyReport {
    pub dim: usize,
    pub energy: f64,
    pub indistinguishable: bool,
    pub max_entropy: f64,
    pub estimator: Estimator,
    pub checks: Vec<GapCheck>,
    pub violations: usize,
    pub pass: bool,
}

/// Each family's entropy on `surface` against the uniform maximum.
/// Family `i` is estimated with seed `derive_seed(seed, i)`.
pub fn verify_prop4(
    families: &[CandidateFamily],
    surface: &EnergySurface,
    count: usize,
    seed: u64,
) -> Result<MaxEntropyReport> {
    verify_prop4_with(families, surface, false, Estimator::ImportanceSampling, count, seed)
}

pub fn verify_prop4_with(
    families: &[CandidateFamily],
    surface: &EnergySurface,
    indistinguishable: bool,
    estimator: Estimator,
    count: usize,
    seed: u64,
) -> Result<MaxEntropyReport> {
    if families.is_empty() {
        return Err(Error::domain("need at least one candidate family"));
    }
    surface.ensure_nondegenerate()?;
    let max = uniform_entropy(surface, indistinguishable)?.value;
    let checks = families
        .par_iter()
        .enumerate()
        .map(|(i, f)| {
            let m = f.clone().indistinguishable(indistinguishable).build(surface)?;
            let entropy = entropy_with(&m, estimator, count, derive_seed(seed, i as u64))?;
            let gap = max - entropy.value;
            let threshold = 3.0 * entropy.std_error + ROUNDING_FLOOR * max.abs().max(1.0);
            Ok(GapCheck {
                family: f.name().to_string(),
                gap,
                gap_std_error: entropy.std_error,
                resolved: gap > threshold,
                violation: -gap > threshold,
                entropy,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let violations = checks.iter().filter(|c| c.violation).count();
    Ok(MaxEntropyReport {
        dim: surface.dim,
        energy: surface.energy,
        indistinguishable,
        max_entropy: max,
        estimator,
        checks,
        violations,
        pass: violations == 0,
    })
}

/// `KL(vMF(κ) ‖ uniform)` on `S^{n-1}` by 1-D quadrature over the polar
/// angle, independent of the Bessel-series normalizer:
/// `κ(E[cos θ] - 1) - ln(I_κ/I_0)` with
/// `I_κ = ∫_0^π e^{κ(cos θ - 1)} sin^{n-2} θ dθ`.
pub fn vmf_gap_quadrature(dim: usize, kappa: f64) -> f64 {
    assert!(dim >= 1 && kappa >= 0.0);
    if dim == 1 {
        // two points with probabilities ∝ e^{±κ}
        let p = 1.0 / (1.0 + (-2.0 * kappa).exp());
        let q = 1.0 - p;
        let h = -(p * p.ln() + if q > 0.0 { q * q.ln() } else { 0.0 });
        return 2f64.ln() - h;
    }
    let p = (dim - 2) as i32;
    let panels = 64;
    let pi = std::f64::consts::PI;
    let w = |t: f64| t.sin().powi(p);
    let i0 = quadrature::integrate(w, 0.0, pi, panels);
    let ik = quadrature::integrate(|t| (kappa * (t.cos() - 1.0)).exp() * w(t), 0.0, pi, panels);
    let ic = quadrature::integrate(|t| t.cos() * (kappa * (t.cos() - 1.0)).exp() * w(t), 0.0, pi, panels);
    kappa * (ic / ik - 1.0) - (ik / i0).ln()
}

#[derive(Debug, Clone, Serialize)]
pub struct VmfGapCheck {
    pub kappa: f64,
    pub gap: f64,
    pub gap_std_error: f64,
    pub oracle: f64,
    pub relative_error: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VmfGapReport {
    pub dim: usize,
    pub energy: f64,
    pub samples: usize,
    pub relative_tolerance: f64,
    pub checks: Vec<VmfGapCheck>,
    /// Gaps strictly increase with `κ`.
    pub monotone: bool,
    /// Every gap with `κ >= 1` exceeds `3 SE`.
    pub resolved: bool,
    pub pass: bool,
}

/// Monte Carlo vMF entropy gaps (importance sampling) against
/// [`vmf_gap_quadrature`]. `kappas` should be increasing.
pub fn verify_vmf_gaps(
    surface: &EnergySurface,
    kappas: &[f64],
    count: usize,
    seed: u64,
    relative_tolerance: f64,
) -> Result<VmfGapReport> {
    let families: Vec<CandidateFamily> = kappas
        .iter()
        .map(|&kappa| {
            CandidateFamily::from_spec(format!("vmf-{kappa}"), FamilySpec::VonMisesFisher { kappa, direction: None })
        })
        .collect();
    let report = verify_prop4(&families, surface, count, seed)?;
    let checks: Vec<VmfGapCheck> = report
        .checks
        .iter()
        .zip(kappas)
        .map(|(c, &kappa)| {
            let oracle = vmf_gap_quadrature(surface.dim, kappa);
            let relative_error = (c.gap - oracle).abs() / oracle.abs();
            VmfGapCheck {
                kappa,
                gap: c.gap,
                gap_std_error: c.gap_std_error,
                oracle,
                relative_error,
                pass: relative_error <= relative_tolerance,
            }
        })
        .collect();
    let monotone = checks.windows(2).all(|w| w[1].gap > w[0].gap);
    let resolved = report
        .checks
        .iter()
        .zip(kappas)
        .all(|(c, &k)| k < 1.0 || c.resolved);
    Ok(VmfGapReport {
        dim: surface.dim,
        energy: surface.energy,
        samples: count,
        relative_tolerance,
        pass: monotone && resolved && checks.iter().all(|c| c.pass),
        checks,
        monotone,
        resolved,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SeriesBoundReport {
    pub box_measure: f64,
    pub n_max: usize,
    /// `Σ_{k<=n} b^k/k!` for `n = 0..=n_max`, rounded from exact rationals.
    pub partial_sums: Vec<f64>,
    pub final_partial_sum_exact: String,
    pub exp_box: f64,
    /// Exact rational bounds on `e^b - S_{n_max}`.
    pub gap_lower: f64,
    pub gap_upper: f64,
    pub monotone: bool,
    /// Every partial sum is at most a rational lower bound of `e^b`, so
    /// `ln S_n <= b`.
    pub bounded: bool,
    pub pass: bool,
}

/// Partial sums of the exponential series in exact rational arithmetic.
/// `e^b` is bracketed by `S_M` and `S_M + t_{M+1}/(1 - b/(M+2))` for a
/// large `M`, both exact.
pub fn verify_prop5(box_measure: f64, n_max: usize) -> Result<SeriesBoundReport> {
    if !(box_measure >= 0.0) || !box_measure.is_finite() {
        return Err(Error::domain(format!("box measure must be finite and >= 0, got {box_measure}")));
    }
    if n_max < 1 {
        return Err(Error::domain("n_max must be >= 1"));
    }
    let b = BigRational::from_float(box_measure).expect("finite");
    let big_m = n_max.max((2.0 * box_measure).ceil() as usize) + 40;
    let mut term = BigRational::one();
    let mut sum = BigRational::zero();
    let mut sums = Vec::with_capacity(big_m + 1);
    for k in 0..=big_m {
        if k > 0 {
            term = term * &b / BigRational::from_integer(BigInt::from(k));
        }
        sum += &term;
        sums.push(sum.clone());
    }
    let next_term = &term * &b / BigRational::from_integer(BigInt::from(big_m + 1));
    let ratio = &b / BigRational::from_integer(BigInt::from(big_m + 2));
    let exp_lower = sums[big_m].clone();
    let exp_upper = &exp_lower + next_term / (BigRational::one() - ratio);

    let partial = &sums[..=n_max];
    let monotone = partial.windows(2).all(|w| w[1] >= w[0]);
    let bounded = partial.iter().all(|s| s <= &exp_lower);
    let last = &partial[n_max];
    let to_f = |r: &BigRational| r.to_f64().unwrap_or(f64::NAN);
    Ok(SeriesBoundReport {
        box_measure,
        n_max,
        partial_sums: partial.iter().map(to_f).collect(),
        final_partial_sum_exact: last.to_string(),
        exp_box: box_measure.exp(),
        gap_lower: to_f(&(&exp_lower - last)),
        gap_upper: to_f(&(&exp_upper - last)),
        monotone,
        bounded,
        pass: monotone && bounded,
    })
}
