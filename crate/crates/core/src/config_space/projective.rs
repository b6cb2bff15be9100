//! Restriction maps `g_{mn}: V_n → V_m` between indistinguishable cylinder
//! subspaces and their consistency checks.
//!
//! A set `A_n` restricts to `(m!/n!) A_m`, where `A_m` has the same
//! distinguishable measure as `A_n`. The factors compose exactly:
//! `(l!/m!)(m!/n!) = l!/n!`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::Serialize;

use crate::sampling::{accumulate, derive_seed, Estimate};
use crate::special::ln_factorial;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RestrictionMap {
    pub from_dim: usize,
    pub to_dim: usize,
    /// `to_dim! / from_dim!`, exact.
    pub factor: BigRational,
}

fn falling_product(lo_exclusive: usize, hi: usize) -> BigInt {
    (lo_exclusive + 1..=hi).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

pub fn restriction_map(from_dim: usize, to_dim: usize) -> Result<RestrictionMap> {
    if to_dim == 0 {
        return Err(Error::domain("restriction target dimension must be >= 1"));
    }
    if to_dim > from_dim {
        return Err(Error::domain(format!(
            "cannot restrict from dimension {from_dim} up to {to_dim}"
        )));
    }
    let factor = BigRational::new(BigInt::one(), falling_product(to_dim, from_dim));
    Ok(RestrictionMap {
        from_dim,
        to_dim,
        factor,
    })
}

impl RestrictionMap {
    /// `self ∘ inner`, i.e. `g_{lm} ∘ g_{mn}` for `self = g_{lm}`, `inner = g_{mn}`.
    pub fn compose(&self, inner: &RestrictionMap) -> Result<RestrictionMap> {
        if inner.to_dim != self.from_dim {
            return Err(Error::domain(format!(
                "cannot compose g({}<-{}) after g({}<-{})",
                self.to_dim, self.from_dim, inner.to_dim, inner.from_dim
            )));
        }
        Ok(RestrictionMap {
            from_dim: inner.from_dim,
            to_dim: self.to_dim,
            factor: &self.factor * &inner.factor,
        })
    }

    pub fn factor_f64(&self) -> f64 {
        self.factor.to_f64().unwrap_or_else(|| self.ln_factor().exp())
    }

    /// `ln(m!/n!)` in floating point; useful once the exact factor is too
    /// small to represent.
    pub fn ln_factor(&self) -> f64 {
        ln_factorial(self.to_dim) - ln_factorial(self.from_dim)
    }
}

/// Measure consistency on one test set, `μ_a(g_{ab}(A_b))` against `μ_b(A_b)`.
#[derive(Debug, Clone, Serialize)]
pub struct SetCheck {
    pub set: &'static str,
    pub from_dim: usize,
    pub to_dim: usize,
    /// `μ_to(g(A_from))`, computed through the restriction factor.
    pub restricted: Estimate,
    /// `μ_from(A_from)` directly.
    pub direct: Estimate,
    pub combined_std_error: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConsistencyReport {
    pub l: usize,
    pub m: usize,
    pub n: usize,
    pub factor_lm: String,
    pub factor_mn: String,
    pub factor_ln: String,
    pub composed: String,
    pub exact_pass: bool,
    pub set_checks: Vec<SetCheck>,
    pub pass: bool,
}

pub const DEFAULT_SET_SAMPLES: usize = 40_000;
pub const DEFAULT_SET_SEED: u64 = 0x5eed;

pub fn verify_projective_consistency(l: usize, m: usize, n: usize) -> ConsistencyReport {
    verify_projective_consistency_with(l, m, n, DEFAULT_SET_SAMPLES, DEFAULT_SET_SEED)
}

/// Test sets are cylinders over a base set in `R^l`, extended by the unit
/// cube in the extra coordinates, so all three have equal distinguishable
/// (Lebesgue) measure.
#[derive(Clone, Copy)]
enum TestSet {
    Ball,
    HalfBall,
    Corner,
}

const TEST_SETS: [TestSet; 3] = [TestSet::Ball, TestSet::HalfBall, TestSet::Corner];

impl TestSet {
    fn name(self) -> &'static str {
        match self {
            TestSet::Ball => "unit-ball",
            TestSet::HalfBall => "half-ball",
            TestSet::Corner => "corner-box",
        }
    }

    fn contains(self, base_dim: usize, x: &[f64]) -> bool {
        let (base, extra) = x.split_at(base_dim);
        if !extra.iter().all(|&v| (0.0..=1.0).contains(&v)) {
            return false;
        }
        match self {
            TestSet::Ball => base.iter().map(|v| v * v).sum::<f64>() <= 1.0,
            TestSet::HalfBall => base[0] >= 0.0 && base.iter().map(|v| v * v).sum::<f64>() <= 1.0,
            TestSet::Corner => base.iter().all(|&v| (0.0..=0.5).contains(&v)),
        }
    }
}

/// Extra (cylinder) coordinates are drawn from this interval, which
/// contains the unit interval with a 2/3 hit rate.
const EXTRA_PROPOSAL: (f64, f64) = (-0.25, 1.25);

impl TestSet {
    /// Proposal interval for base coordinate `i`. It is kept a little wider
    /// than the corner box so that no estimate is exact: correlated errors
    /// across nested dimensions then make the combined-SE test conservative.
    fn base_proposal(self, i: usize) -> (f64, f64) {
        match (self, i) {
            (TestSet::Corner, _) => (0.0, 0.75),
            (TestSet::HalfBall, 0) => (0.0, 1.0),
            _ => (-1.0, 1.0),
        }
    }

    fn proposal(self, base_dim: usize, i: usize) -> (f64, f64) {
        if i < base_dim {
            self.base_proposal(i)
        } else {
            EXTRA_PROPOSAL
        }
    }
}

/// Monte Carlo estimate of the indistinguishable Lebesgue measure
/// `μ_k(A_k) = Leb(A_k)/k!` by hit-or-miss in a proposal box: the base
/// set's bounding box times [`EXTRA_PROPOSAL`] per extra coordinate, so no
/// estimate rests on a handful of hits.
///
/// Every sample draws `draw_dim` coordinates and tests the first `dim`, so
/// estimates for different `dim` with one seed use common random numbers.
/// Their errors are then positively correlated and a comparison against
/// the independent-error combined SE is conservative.
fn indistinguishable_measure(
    set: TestSet,
    base_dim: usize,
    dim: usize,
    draw_dim: usize,
    count: usize,
    seed: u64,
) -> Estimate {
    use rand::Rng;
    let stats = accumulate(count, seed, || vec![0.0; draw_dim], |rng, x: &mut Vec<f64>| {
        for (i, v) in x.iter_mut().enumerate() {
            let (a, b) = set.proposal(base_dim, i);
            *v = rng.random_range(a..b);
        }
        [if set.contains(base_dim, &x[..dim]) { 1.0 } else { 0.0 }]
    });
    let ln_box: f64 = (0..dim)
        .map(|i| {
            let (a, b) = set.proposal(base_dim, i);
            (b - a).ln()
        })
        .sum();
    let scale = (ln_box - ln_factorial(dim)).exp();
    let est = stats.estimate(0);
    Estimate {
        value: est.value * scale,
        std_error: est.std_error * scale,
        samples: est.samples,
    }
}

/// `μ_k(A_k)` for `k = l..=draw_dim` and each test set over base `R^l`.
struct SetMeasures {
    l: usize,
    per_set: Vec<Vec<Estimate>>,
}

impl SetMeasures {
    fn new(l: usize, draw_dim: usize, count: usize, seed: u64) -> Self {
        let per_set = TEST_SETS
            .iter()
            .enumerate()
            .map(|(si, &set)| {
                let set_seed = derive_seed(seed, (l * 8 + si) as u64);
                (l..=draw_dim)
                    .map(|dim| indistinguishable_measure(set, l, dim, draw_dim, count, set_seed))
                    .collect()
            })
            .collect();
        SetMeasures { l, per_set }
    }

    fn get(&self, set: usize, dim: usize) -> Estimate {
        self.per_set[set][dim - self.l]
    }
}

fn chain_report(l: usize, m: usize, n: usize, measures: &SetMeasures) -> ConsistencyReport {
    let g_lm = restriction_map(m, l).expect("l <= m");
    let g_mn = restriction_map(n, m).expect("m <= n");
    let g_ln = restriction_map(n, l).expect("l <= n");
    let composed = g_lm.compose(&g_mn).expect("dimensions chain");
    let exact_pass = composed.factor == g_ln.factor;

    let mut set_checks = Vec::new();
    for (si, set) in TEST_SETS.iter().enumerate() {
        for &(to_dim, from_dim) in &[(l, m), (m, n), (l, n)] {
            let mu_to = measures.get(si, to_dim);
            let mu_from = measures.get(si, from_dim);
            let map = restriction_map(from_dim, to_dim).expect("ordered");
            // μ_to(g(A_from)) = (to!/from!) μ_to(A_to)
            let f = map.factor_f64();
            let restricted = Estimate {
                value: f * mu_to.value,
                std_error: f * mu_to.std_error,
                samples: mu_to.samples,
            };
            let combined = restricted.std_error.hypot(mu_from.std_error);
            let pass = (restricted.value - mu_from.value).abs() <= 3.0 * combined + 1e-15 * mu_from.value.abs();
            set_checks.push(SetCheck {
                set: set.name(),
                from_dim,
                to_dim,
                restricted,
                direct: mu_from,
                combined_std_error: combined,
                pass,
            });
        }
    }
    let pass = exact_pass && set_checks.iter().all(|c| c.pass);
    ConsistencyReport {
        l,
        m,
        n,
        factor_lm: g_lm.factor.to_string(),
        factor_mn: g_mn.factor.to_string(),
        factor_ln: g_ln.factor.to_string(),
        composed: composed.factor.to_string(),
        exact_pass,
        set_checks,
        pass,
    }
}

pub fn verify_projective_consistency_with(
    l: usize,
    m: usize,
    n: usize,
    count: usize,
    seed: u64,
) -> ConsistencyReport {
    assert!(1 <= l && l <= m && m <= n, "need 1 <= l <= m <= n");
    chain_report(l, m, n, &SetMeasures::new(l, n, count, seed))
}

/// Every chain `1 <= l <= m <= n <= n_max`, in lexicographic order.
pub fn verify_projective_chains(n_max: usize, count: usize, seed: u64) -> Result<Vec<ConsistencyReport>> {
    if n_max == 0 {
        return Err(Error::domain("n_max must be >= 1"));
    }
    let mut reports = Vec::new();
    for l in 1..=n_max {
        let measures = SetMeasures::new(l, n_max, count, seed);
        for m in l..=n_max {
            for n in m..=n_max {
                reports.push(chain_report(l, m, n, &measures));
            }
        }
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ratio(a: i64, b: i64) -> BigRational {
        BigRational::new(BigInt::from(a), BigInt::from(b))
    }

    #[test]
    fn three_to_two() {
        let g = restriction_map(3, 2).unwrap();
        assert_eq!(g.factor, ratio(1, 3));
    }

    #[test]
    fn identity_map() {
        for n in 1..12 {
            assert_eq!(restriction_map(n, n).unwrap().factor, ratio(1, 1));
        }
    }

    #[test]
    fn composition_chain() {
        let g21 = restriction_map(2, 1).unwrap();
        let g32 = restriction_map(3, 2).unwrap();
        let c = g21.compose(&g32).unwrap();
        assert_eq!(c.factor, ratio(1, 6));
        assert_eq!((c.from_dim, c.to_dim), (3, 1));
        assert!(g32.compose(&g32).is_err());
    }

    #[test]
    fn upward_restriction_rejected() {
        assert!(matches!(restriction_map(2, 3), Err(Error::Domain(_))));
    }

    #[test]
    fn composition_law_exhaustive() {
        for n in 1..=10 {
            for m in 1..=n {
                for l in 1..=m {
                    let c = restriction_map(m, l)
                        .unwrap()
                        .compose(&restriction_map(n, m).unwrap())
                        .unwrap();
                    assert_eq!(c.factor, restriction_map(n, l).unwrap().factor);
                }
            }
        }
    }

    #[test]
    fn large_dimensions_stay_exact() {
        let g = restriction_map(40, 3).unwrap();
        let back = restriction_map(40, 25)
            .unwrap()
            .compose(&restriction_map(25, 3).unwrap())
            .err();
        assert!(back.is_some());
        let c = restriction_map(25, 3)
            .unwrap()
            .compose(&restriction_map(40, 25).unwrap())
            .unwrap();
        assert_eq!(c.factor, g.factor);
        assert!((g.ln_factor() - (6f64.ln() - crate::special::ln_factorial(40))).abs() < 1e-9);
    }

    #[test]
    fn consistency_reports() {
        let r = verify_projective_consistency(1, 2, 3);
        assert!(r.pass, "{r:#?}");
        assert_eq!(r.factor_ln, "1/6");
        let r = verify_projective_consistency(4, 4, 4);
        assert!(r.pass);
        assert_eq!(r.composed, "1");
        let r = verify_projective_consistency(2, 3, 5);
        assert!(r.pass);
        assert_eq!(r.composed, "1/60");
    }

    #[test]
    fn all_chains_to_six() {
        let reports = verify_projective_chains(6, 20_000, 3).unwrap();
        assert_eq!(reports.len(), 56);
        assert!(reports.iter().all(|r| r.exact_pass));
        let failed: Vec<_> = reports.iter().filter(|r| !r.pass).map(|r| (r.l, r.m, r.n)).collect();
        assert!(failed.is_empty(), "{failed:?}");
    }
}
