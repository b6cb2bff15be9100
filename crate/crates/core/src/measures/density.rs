//! Density shapes on the unit sphere of a cylinder subspace.
//!
//! A shape is a nonnegative function of the direction `u = x/|x|`; the
//! candidate measure scales it into a density with respect to the surface
//! reference measure. Every family knows how to sample directions from
//! its own normalized shape, which the importance-sampling entropy
//! estimator relies on.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Beta, Distribution, StandardNormal};
use serde::Serialize;
use serde_json::json;

use crate::quadrature;
use crate::sampling::{dot, fill_unit_sphere, norm, stream_rng, Rng};
use crate::special::{ln_gamma_half, vmf_ln_sphere_mean};
use crate::{Error, Result};

/// Largest concentration accepted; `exp(κ)` must stay finite.
pub const MAX_KAPPA: f64 = 500.0;

/// Orbit sums are exact up to this dimension (720 terms at n = 6).
pub const EXACT_ORBIT_MAX_DIM: usize = 6;

/// Number of sampled permutations beyond [`EXACT_ORBIT_MAX_DIM`].
pub const SAMPLED_PERMUTATIONS: usize = 720;

pub const DEFAULT_PERMUTATION_SEED: u64 = 0x5e11_0f5e;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Uniform,
    VonMisesFisher,
    Mixture,
    PolynomialTilt,
    Tabulated,
    Symmetrized,
}

/// Declared invariance of a shape. Recorded, not enforced.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "group")]
pub enum Invariance {
    /// Invariant under the full orthogonal group of coefficient space.
    Orthogonal,
    /// Invariant under rotations fixing `axis`.
    Axial { axis: Vec<f64> },
    /// Invariant under coefficient permutations.
    Permutation { exact: bool },
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vmf {
    mean_direction: Vec<f64>,
    kappa: f64,
    ln_sphere_mean: f64,
}

impl Vmf {
    pub fn new(direction: Vec<f64>, kappa: f64) -> Result<Self> {
        if direction.is_empty() {
            return Err(Error::domain("vMF direction must be nonempty"));
        }
        if !(0.0..=MAX_KAPPA).contains(&kappa) {
            return Err(Error::domain(format!(
                "vMF concentration must lie in [0, {MAX_KAPPA}], got {kappa}"
            )));
        }
        let len = norm(&direction);
        if !(len > 0.0) || !len.is_finite() {
            return Err(Error::domain("vMF direction must be a nonzero finite vector"));
        }
        let mean_direction: Vec<f64> = direction.iter().map(|v| v / len).collect();
        let ln_sphere_mean = vmf_ln_sphere_mean(mean_direction.len(), kappa);
        Ok(Vmf {
            mean_direction,
            kappa,
            ln_sphere_mean,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean_direction.len()
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn mean_direction(&self) -> &[f64] {
        &self.mean_direction
    }

    /// `ln E_uniform[exp(κ μ·u)]`.
    pub fn ln_sphere_mean(&self) -> f64 {
        self.ln_sphere_mean
    }

    fn ln_eval(&self, u: &[f64]) -> f64 {
        self.kappa * dot(&self.mean_direction, u)
    }

    /// Shape divided by its sphere average.
    fn normalized(&self, u: &[f64]) -> f64 {
        (self.ln_eval(u) - self.ln_sphere_mean).exp()
    }

    /// Direction with density proportional to `exp(κ μ·u)` (Wood's
    /// tangent-normal rejection sampler for `n >= 2`).
    pub fn sample(&self, rng: &mut Rng, out: &mut [f64]) {
        let n = self.dim();
        let mu = &self.mean_direction;
        if n == 1 {
            let p_plus = 1.0 / (1.0 + (-2.0 * self.kappa * mu[0]).exp());
            out[0] = if rng.random::<f64>() < p_plus { 1.0 } else { -1.0 };
            return;
        }
        if self.kappa == 0.0 {
            fill_unit_sphere(rng, out);
            return;
        }
        let nm1 = (n - 1) as f64;
        let kappa = self.kappa;
        let b = nm1 / (2.0 * kappa + (4.0 * kappa * kappa + nm1 * nm1).sqrt());
        let x0 = (1.0 - b) / (1.0 + b);
        let c = kappa * x0 + nm1 * (1.0 - x0 * x0).ln();
        let beta = Beta::new(nm1 / 2.0, nm1 / 2.0).expect("positive shape parameters");
        let w = loop {
            let z: f64 = beta.sample(rng);
            let w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
            let u: f64 = rng.random();
            if kappa * w + nm1 * (1.0 - x0 * w).ln() - c >= u.ln() {
                break w;
            }
        };
        // unit tangent direction orthogonal to μ
        loop {
            for v in out.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            let proj = dot(out, mu);
            out.iter_mut().zip(mu).for_each(|(v, m)| *v -= proj * m);
            let len = norm(out);
            if len > 1e-12 {
                let s = (1.0 - w * w).max(0.0).sqrt() / len;
                out.iter_mut().zip(mu).for_each(|(v, m)| *v = w * m + s * *v);
                return;
            }
        }
    }
}

/// `max(0, 1 + slope · u[axis])`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tilt {
    dim: usize,
    axis: usize,
    slope: f64,
    sphere_mean: f64,
}

impl Tilt {
    pub fn new(dim: usize, axis: usize, slope: f64) -> Result<Self> {
        if dim == 0 || axis >= dim {
            return Err(Error::domain(format!("tilt axis {axis} out of range for dimension {dim}")));
        }
        if !slope.is_finite() {
            return Err(Error::domain("tilt slope must be finite"));
        }
        Ok(Tilt {
            dim,
            axis,
            slope,
            sphere_mean: tilt_sphere_mean(dim, slope),
        })
    }

    fn eval(&self, u: &[f64]) -> f64 {
        (1.0 + self.slope * u[self.axis]).max(0.0)
    }
}

/// `E[max(0, 1 + a t)]` for `t` the first coordinate of a uniform point on
/// `S^{n-1}`. Equal to 1 when `|a| <= 1`; otherwise a latitude integral.
fn tilt_sphere_mean(dim: usize, slope: f64) -> f64 {
    let a = slope;
    if dim == 1 {
        return 0.5 * ((1.0 + a).max(0.0) + (1.0 - a).max(0.0));
    }
    if a.abs() <= 1.0 {
        return 1.0;
    }
    // ∫_0^π g(cos θ) sin^{n-2} θ dθ / ∫_0^π sin^{n-2} θ dθ; the positive part
    // of 1 + a cos θ ends at θc = arccos(-1/a) (by symmetry take a > 0).
    let a = a.abs();
    let theta_c = (-1.0 / a).acos();
    let p = (dim - 2) as i32;
    let num = quadrature::integrate(|t| (1.0 + a * t.cos()) * t.sin().powi(p), 0.0, theta_c, 16);
    let ln_den = 0.5 * std::f64::consts::PI.ln() + ln_gamma_half(dim - 1) - ln_gamma_half(dim);
    num / ln_den.exp()
}

/// Piecewise-constant density on directions, taking the value of the
/// nearest tabulated direction.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    dim: usize,
    directions: Vec<Vec<f64>>,
    values: Vec<f64>,
    max_value: f64,
}

impl Tabulated {
    pub fn new(points: Vec<Vec<f64>>, values: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != values.len() {
            return Err(Error::domain("tabulated density needs matching nonempty points and values"));
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(Error::domain("tabulated points must have at least one coordinate"));
        }
        let mut directions = Vec::with_capacity(points.len());
        for p in points {
            if p.len() != dim {
                return Err(Error::domain("tabulated points have inconsistent dimensions"));
            }
            let len = norm(&p);
            if !(len > 0.0) || !len.is_finite() {
                return Err(Error::domain("tabulated point at the origin"));
            }
            directions.push(p.iter().map(|v| v / len).collect());
        }
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::domain("tabulated density values must be finite and >= 0"));
        }
        let max_value = values.iter().cloned().fold(0.0, f64::max);
        Ok(Tabulated {
            dim,
            directions,
            values,
            max_value,
        })
    }

    /// Load rows of `coordinates..., density` from a headerless CSV file.
    /// A leading non-numeric row is treated as a header and skipped.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)?;
        let mut points = Vec::new();
        let mut values = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record?;
            let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
            let row = match parsed {
                Ok(row) => row,
                Err(_) if i == 0 => continue,
                Err(e) => {
                    return Err(Error::Data {
                        path: path.to_path_buf(),
                        message: format!("row {}: {e}", i + 1),
                    })
                }
            };
            if row.len() < 2 {
                return Err(Error::Data {
                    path: path.to_path_buf(),
                    message: format!("row {} needs coordinates and a density value", i + 1),
                });
            }
            let (coords, value) = row.split_at(row.len() - 1);
            points.push(coords.to_vec());
            values.push(value[0]);
        }
        Tabulated::new(points, values).map_err(|e| Error::Data {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    fn eval(&self, u: &[f64]) -> f64 {
        let mut best = f64::NEG_INFINITY;
        let mut value = 0.0;
        for (d, v) in self.directions.iter().zip(&self.values) {
            let c = dot(d, u);
            if c > best {
                best = c;
                value = *v;
            }
        }
        value
    }
}

/// Orbit average `(1/|G|) Σ_{π∈G} ρ(πx)` with `(πx)_i = x_{π(i)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Symmetrized {
    inner: Box<Density>,
    permutations: Vec<Vec<usize>>,
    exact: bool,
    seed: Option<u64>,
}

impl Symmetrized {
    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn permutation_count(&self) -> usize {
        self.permutations.len()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn inner(&self) -> &Density {
        &self.inner
    }
}

/// All permutations of `0..n` in lexicographic order.
pub fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    let mut current: Vec<usize> = (0..n).collect();
    let mut out = vec![current.clone()];
    loop {
        let Some(i) = (1..n).rev().find(|&i| current[i - 1] < current[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| current[j] > current[i - 1]).unwrap();
        current.swap(i - 1, j);
        current[i..].reverse();
        out.push(current.clone());
    }
}

/// `(1/|G|) Σ_{π∈G} f(πu)` with `(πu)_i = u_{π(i)}`.
pub fn orbit_average<F: Fn(&[f64]) -> f64>(permutations: &[Vec<usize>], f: F, u: &[f64]) -> f64 {
    let mut y = vec![0.0; u.len()];
    let mut total = 0.0;
    for p in permutations {
        for (yi, &pi) in y.iter_mut().zip(p) {
            *yi = u[pi];
        }
        total += f(&y);
    }
    total / permutations.len() as f64
}

fn sampled_permutations(n: usize, count: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = stream_rng(seed, 0);
    (0..count)
        .map(|_| {
            let mut p: Vec<usize> = (0..n).collect();
            p.shuffle(&mut rng);
            p
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Density {
    Uniform { dim: usize },
    VonMisesFisher(Vmf),
    /// `w · f_a/E[f_a] + (1-w) · f_b/E[f_b]` for two vMF shapes.
    Mixture { weight: f64, first: Vmf, second: Vmf },
    PolynomialTilt(Tilt),
    Tabulated(Tabulated),
    Symmetrized(Symmetrized),
}

impl Density {
    pub fn uniform(dim: usize) -> Self {
        Density::Uniform { dim }
    }

    pub fn von_mises_fisher(direction: Vec<f64>, kappa: f64) -> Result<Self> {
        Ok(Density::VonMisesFisher(Vmf::new(direction, kappa)?))
    }

    pub fn vmf_mixture(weight: f64, first: Vmf, second: Vmf) -> Result<Self> {
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::domain(format!("mixture weight must lie in [0, 1], got {weight}")));
        }
        if first.dim() != second.dim() {
            return Err(Error::domain("mixture components have different dimensions"));
        }
        Ok(Density::Mixture {
            weight,
            first,
            second,
        })
    }

    pub fn polynomial_tilt(dim: usize, axis: usize, slope: f64) -> Result<Self> {
        Ok(Density::PolynomialTilt(Tilt::new(dim, axis, slope)?))
    }

    pub fn tabulated(points: Vec<Vec<f64>>, values: Vec<f64>) -> Result<Self> {
        Ok(Density::Tabulated(Tabulated::new(points, values)?))
    }

    /// Orbit average over coefficient permutations: exact for `n <= 6`,
    /// otherwise over [`SAMPLED_PERMUTATIONS`] permutations drawn from
    /// `seed`. Already-symmetrized shapes are returned unchanged.
    pub fn symmetrized(&self, seed: u64) -> Density {
        if let Density::Symmetrized(_) | Density::Uniform { .. } = self {
            return self.clone();
        }
        let n = self.dim();
        let (permutations, exact, seed) = if n <= EXACT_ORBIT_MAX_DIM {
            (all_permutations(n), true, None)
        } else {
            (sampled_permutations(n, SAMPLED_PERMUTATIONS, seed), false, Some(seed))
        };
        Density::Symmetrized(Symmetrized {
            inner: Box::new(self.clone()),
            permutations,
            exact,
            seed,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Density::Uniform { dim } => *dim,
            Density::VonMisesFisher(v) => v.dim(),
            Density::Mixture { first, .. } => first.dim(),
            Density::PolynomialTilt(t) => t.dim,
            Density::Tabulated(t) => t.dim,
            Density::Symmetrized(s) => s.inner.dim(),
        }
    }

    pub fn family(&self) -> Family {
        match self {
            Density::Uniform { .. } => Family::Uniform,
            Density::VonMisesFisher(_) => Family::VonMisesFisher,
            Density::Mixture { .. } => Family::Mixture,
            Density::PolynomialTilt(_) => Family::PolynomialTilt,
            Density::Tabulated(_) => Family::Tabulated,
            Density::Symmetrized(_) => Family::Symmetrized,
        }
    }

    pub fn params(&self) -> serde_json::Value {
        match self {
            Density::Uniform { dim } => json!({ "dim": dim }),
            Density::VonMisesFisher(v) => json!({
                "mean_direction": v.mean_direction,
                "kappa": v.kappa,
            }),
            Density::Mixture {
                weight,
                first,
                second,
            } => json!({
                "weight": weight,
                "first": { "mean_direction": first.mean_direction, "kappa": first.kappa },
                "second": { "mean_direction": second.mean_direction, "kappa": second.kappa },
            }),
            Density::PolynomialTilt(t) => json!({ "axis": t.axis, "slope": t.slope }),
            Density::Tabulated(t) => json!({ "rows": t.values.len(), "dim": t.dim }),
            Density::Symmetrized(s) => json!({
                "inner": { "family": s.inner.family(), "params": s.inner.params() },
                "permutations": s.permutations.len(),
                "exact": s.exact,
                "seed": s.seed,
            }),
        }
    }

    pub fn invariance(&self) -> Invariance {
        match self {
            Density::Uniform { .. } => Invariance::Orthogonal,
            Density::VonMisesFisher(v) if v.kappa == 0.0 => Invariance::Orthogonal,
            Density::VonMisesFisher(v) => Invariance::Axial {
                axis: v.mean_direction.clone(),
            },
            Density::PolynomialTilt(t) if t.slope == 0.0 => Invariance::Orthogonal,
            Density::PolynomialTilt(t) => {
                let mut axis = vec![0.0; t.dim];
                axis[t.axis] = 1.0;
                Invariance::Axial { axis }
            }
            Density::Mixture { .. } | Density::Tabulated(_) => Invariance::None,
            Density::Symmetrized(s) => Invariance::Permutation { exact: s.exact },
        }
    }

    /// Shape value at the unit direction `u`.
    pub fn eval(&self, u: &[f64]) -> f64 {
        match self {
            Density::Uniform { .. } => 1.0,
            Density::VonMisesFisher(v) => v.ln_eval(u).exp(),
            Density::Mixture {
                weight,
                first,
                second,
            } => weight * first.normalized(u) + (1.0 - weight) * second.normalized(u),
            Density::PolynomialTilt(t) => t.eval(u),
            Density::Tabulated(t) => t.eval(u),
            Density::Symmetrized(s) => orbit_average(&s.permutations, |y| s.inner.eval(y), u),
        }
    }

    pub fn ln_eval(&self, u: &[f64]) -> f64 {
        match self {
            Density::Uniform { .. } => 0.0,
            Density::VonMisesFisher(v) => v.ln_eval(u),
            _ => self.eval(u).ln(),
        }
    }

    /// Average of the shape under the uniform distribution on the sphere,
    /// when known in closed form or by deterministic quadrature.
    pub fn sphere_mean(&self) -> Option<f64> {
        match self {
            Density::Uniform { .. } => Some(1.0),
            Density::VonMisesFisher(v) => Some(v.ln_sphere_mean.exp()),
            Density::Mixture { .. } => Some(1.0),
            Density::PolynomialTilt(t) => Some(t.sphere_mean),
            Density::Tabulated(_) => None,
            // the uniform distribution is permutation invariant
            Density::Symmetrized(s) => s.inner.sphere_mean(),
        }
    }

    /// Upper bound of the shape, used for rejection sampling.
    fn upper_bound(&self) -> f64 {
        match self {
            Density::Uniform { .. } => 1.0,
            Density::VonMisesFisher(v) => v.kappa.exp(),
            Density::Mixture {
                weight,
                first,
                second,
            } => {
                weight * (first.kappa - first.ln_sphere_mean).exp()
                    + (1.0 - weight) * (second.kappa - second.ln_sphere_mean).exp()
            }
            Density::PolynomialTilt(t) => 1.0 + t.slope.abs(),
            Density::Tabulated(t) => t.max_value,
            Density::Symmetrized(s) => s.inner.upper_bound(),
        }
    }

    /// Draw a unit direction with density proportional to the shape.
    pub fn sample(&self, rng: &mut Rng, out: &mut [f64]) {
        match self {
            Density::Uniform { .. } => fill_unit_sphere(rng, out),
            Density::VonMisesFisher(v) => v.sample(rng, out),
            Density::Mixture {
                weight,
                first,
                second,
            } => {
                if rng.random::<f64>() < *weight {
                    first.sample(rng, out)
                } else {
                    second.sample(rng, out)
                }
            }
            Density::PolynomialTilt(_) | Density::Tabulated(_) => {
                let bound = self.upper_bound();
                assert!(bound > 0.0, "cannot sample an identically zero shape");
                loop {
                    fill_unit_sphere(rng, out);
                    if rng.random::<f64>() * bound < self.eval(out) {
                        return;
                    }
                }
            }
            Density::Symmetrized(s) => {
                // x ~ inner, then y with y[π(i)] = x[i] has density inner(πy)
                let mut x = vec![0.0; out.len()];
                s.inner.sample(rng, &mut x);
                let p = &s.permutations[rng.random_range(0..s.permutations.len())];
                for (i, &pi) in p.iter().enumerate() {
                    out[pi] = x[i];
                }
            }
        }
    }

    pub fn load_tabulated(path: &Path) -> Result<Self> {
        Ok(Density::Tabulated(Tabulated::from_csv(path)?))
    }
}
