//! Restriction of ball integrals to an energy surface.
//!
//! For the Lebesgue measure the surface integral of `f` over the sphere of
//! radius `r` equals `d/dr ∫_{B_r} f`. [`surface_restrict`] evaluates the
//! right side with a central difference plus one Richardson level, all
//! radii sharing one cloud of unit-ball samples that is rescaled radially.
//! [`surface_integral_oracle`] evaluates the left side directly by uniform
//! sphere sampling.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::config_space::make_surface;
use crate::sampling::{accumulate, derive_seed, fill_unit_ball, fill_unit_sphere, Estimate};
use crate::special::ball_volume;
use crate::{Error, Result};

pub const DEFAULT_STEP_FRACTION: f64 = 1e-3;

type Functional = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A continuous functional on coefficient vectors.
#[derive(Clone)]
pub struct BallIntegrand {
    name: String,
    f: Functional,
}

impl fmt::Debug for BallIntegrand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BallIntegrand").field("name", &self.name).finish()
    }
}

impl BallIntegrand {
    pub fn new<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        BallIntegrand {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn one() -> Self {
        Self::new("one", |_| 1.0)
    }

    pub fn norm_sq() -> Self {
        Self::new("norm-sq", |x| x.iter().map(|v| v * v).sum())
    }

    pub fn coordinate_sq(axis: usize) -> Self {
        Self::new(format!("x{}-sq", axis + 1), move |x| x[axis] * x[axis])
    }

    /// Odd in `x_axis`.
    pub fn coordinate(axis: usize) -> Self {
        Self::new(format!("x{}", axis + 1), move |x| x[axis])
    }

    /// `exp(x_axis / scale)`.
    pub fn exp_coordinate(axis: usize, scale: f64) -> Self {
        Self::new(format!("exp-x{}", axis + 1), move |x| (x[axis] / scale).exp())
    }

    /// Named functionals: `one`, `norm-sq`, `x1-sq`, `x1`, `exp-x1`
    /// (`exp(x1/r)` with `r` the surface radius).
    pub fn by_name(name: &str, radius: f64) -> Result<Self> {
        match name {
            "one" => Ok(Self::one()),
            "norm-sq" => Ok(Self::norm_sq()),
            "x1-sq" => Ok(Self::coordinate_sq(0)),
            "x1" => Ok(Self::coordinate(0)),
            "exp-x1" => Ok(Self::exp_coordinate(0, radius)),
            other => Err(Error::domain(format!(
                "unknown test functional `{other}` (expected one, norm-sq, x1-sq, x1, exp-x1)"
            ))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

fn radius_for(energy: f64) -> Result<f64> {
    let surface = make_surface(1, energy)?;
    surface.ensure_nondegenerate()?;
    Ok(surface.radius)
}

/// `∫_{B_r} f dx` by uniform ball sampling times the ball volume.
pub fn ball_integral(f: &BallIntegrand, dim: usize, radius: f64, count: usize, seed: u64) -> Result<Estimate> {
    if dim == 0 {
        return Err(Error::domain("dimension must be >= 1"));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::domain(format!("ball radius must be positive, got {radius}")));
    }
    let vol = ball_volume(dim, radius);
    let stats = accumulate(count, seed, || vec![0.0; dim], |rng, x: &mut Vec<f64>| {
        fill_unit_ball(rng, x);
        x.iter_mut().for_each(|v| *v *= radius);
        [vol * f.eval(x)]
    });
    Ok(stats.estimate(0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RestrictionEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: u64,
    pub step: f64,
    /// Size of the Richardson correction, used as the quoted truncation
    /// error; includes a `1e-12` relative rounding floor.
    pub fd_error: f64,
}

/// `(d/dr ∫_{B_r} f)` at `r = sqrt(2e)` with step `h = 1e-3 r`.
pub fn surface_restrict(
    f: &BallIntegrand,
    dim: usize,
    energy: f64,
    count: usize,
    seed: u64,
) -> Result<RestrictionEstimate> {
    surface_restrict_with(f, dim, energy, count, seed, DEFAULT_STEP_FRACTION)
}

pub fn surface_restrict_with(
    f: &BallIntegrand,
    dim: usize,
    energy: f64,
    count: usize,
    seed: u64,
    step_fraction: f64,
) -> Result<RestrictionEstimate> {
    if dim == 0 {
        return Err(Error::domain("dimension must be >= 1"));
    }
    if !(step_fraction > 0.0 && step_fraction < 0.5) {
        return Err(Error::domain(format!("step fraction must lie in (0, 0.5), got {step_fraction}")));
    }
    let r = radius_for(energy)?;
    let h = step_fraction * r;
    let radii = [r + h, r - h, r + h / 2.0, r - h / 2.0];
    let vols = radii.map(|rho| ball_volume(dim, rho));
    let stats = accumulate(
        count,
        seed,
        || (vec![0.0; dim], vec![0.0; dim]),
        |rng, (y, x): &mut (Vec<f64>, Vec<f64>)| {
            fill_unit_ball(rng, y);
            let mut vals = [0.0; 4];
            for (k, rho) in radii.iter().enumerate() {
                x.iter_mut().zip(y.iter()).for_each(|(xi, yi)| *xi = rho * yi);
                vals[k] = vols[k] * f.eval(x);
            }
            let coarse = (vals[0] - vals[1]) / (2.0 * h);
            let fine = (vals[2] - vals[3]) / h;
            [(4.0 * fine - coarse) / 3.0, fine]
        },
    );
    let value = stats.mean(0);
    let fd_error = (value - stats.mean(1)).abs() + 1e-12 * value.abs();
    Ok(RestrictionEstimate {
        value,
        std_error: stats.std_error(0),
        samples: stats.count(),
        step: h,
        fd_error,
    })
}

/// `∫_{S_r} f dv_e` by uniform sphere sampling times the area.
pub fn surface_integral_oracle(
    f: &BallIntegrand,
    dim: usize,
    energy: f64,
    count: usize,
    seed: u64,
) -> Result<Estimate> {
    let surface = make_surface(dim, energy)?;
    surface.ensure_nondegenerate()?;
    let (r, area) = (surface.radius, surface.area);
    let stats = accumulate(count, seed, || vec![0.0; dim], |rng, x: &mut Vec<f64>| {
        fill_unit_sphere(rng, x);
        x.iter_mut().for_each(|v| *v *= r);
        [area * f.eval(x)]
    });
    Ok(stats.estimate(0))
}

#[derive(Debug, Clone, Serialize)]
pub struct RestrictionCheck {
    pub functional: String,
    pub dim: usize,
    pub restricted: RestrictionEstimate,
    pub oracle: Estimate,
    pub difference: f64,
    pub combined_std_error: f64,
    /// `max(3 · combined SE, relative_tolerance · |oracle|)`.
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RestrictionSuiteReport {
    pub energy: f64,
    pub samples: usize,
    pub seed: u64,
    pub relative_tolerance: f64,
    pub step_fraction: f64,
    pub checks: Vec<RestrictionCheck>,
    pub pass: bool,
}

/// [`surface_restrict`] against [`surface_integral_oracle`] for each named
/// functional and dimension. Pair `i` (functional-major order) uses seeds
/// `derive_seed(seed, 2i)` and `derive_seed(seed, 2i + 1)`.
pub fn verify_restriction(
    functionals: &[String],
    dims: &[usize],
    energy: f64,
    count: usize,
    seed: u64,
    relative_tolerance: f64,
    step_fraction: f64,
) -> Result<RestrictionSuiteReport> {
    let radius = radius_for(energy)?;
    let mut checks = Vec::with_capacity(functionals.len() * dims.len());
    for name in functionals {
        let f = BallIntegrand::by_name(name, radius)?;
        for &dim in dims {
            let i = checks.len() as u64;
            let restricted = surface_restrict_with(&f, dim, energy, count, derive_seed(seed, 2 * i), step_fraction)?;
            let oracle = surface_integral_oracle(&f, dim, energy, count, derive_seed(seed, 2 * i + 1))?;
            let combined = restricted.std_error.hypot(oracle.std_error);
            let difference = restricted.value - oracle.value;
            let tolerance = (3.0 * combined).max(relative_tolerance * oracle.value.abs());
            checks.push(RestrictionCheck {
                functional: name.clone(),
                dim,
                pass: difference.abs() <= tolerance,
                restricted,
                oracle,
                difference,
                combined_std_error: combined,
                tolerance,
            });
        }
    }
    Ok(RestrictionSuiteReport {
        energy,
        samples: count,
        seed,
        relative_tolerance,
        step_fraction,
        pass: checks.iter().all(|c| c.pass),
        checks,
    })
}
