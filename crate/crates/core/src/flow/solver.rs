use std::path::Path;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::fft::Fft3;
use super::state::{max_speed, project, SpectralState, Vec3c};
use crate::config_space::{make_surface, EnergySurface};
use crate::{Error, Result};

pub const CFL_NUMBER: f64 = 0.5;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dealiasing {
    #[default]
    TwoThirds,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowParams {
    /// Constant kinematic viscosity.
    pub viscosity: f64,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default)]
    pub dealiasing: Dealiasing,
}

impl FlowParams {
    pub fn new(viscosity: f64, dt: f64, t_end: f64) -> Result<Self> {
        let p = FlowParams {
            viscosity,
            dt,
            t_end,
            dealiasing: Dealiasing::TwoThirds,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.viscosity >= 0.0) || !self.viscosity.is_finite() {
            return Err(Error::domain(format!("viscosity must be finite and >= 0, got {}", self.viscosity)));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::domain(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(Error::domain(format!("t_end must be positive, got {}", self.t_end)));
        }
        Ok(())
    }
}

const PAIRS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

fn pair_slot(a: usize, b: usize) -> usize {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    PAIRS.iter().position(|&p| p == (a, b)).unwrap()
}

/// Reusable FFT plans and buffers for one grid size.
pub struct Solver {
    grid_size: usize,
    viscosity: f64,
    fft: Fft3,
    retained: Vec<([i32; 3], usize)>,
    velocity: Vec<[f64; 3]>,
    products: Vec<Vec<Complex64>>,
    buf: Vec<Complex64>,
}

impl Solver {
    pub fn new(grid_size: usize, viscosity: f64) -> Result<Self> {
        let probe = SpectralState::zeros(grid_size)?;
        let len = grid_size.pow(3);
        Ok(Solver {
            grid_size,
            viscosity,
            fft: Fft3::new(grid_size),
            retained: probe.retained_indices().collect(),
            velocity: vec![[0.0; 3]; len],
            products: vec![vec![Complex64::default(); len]; 6],
            buf: vec![Complex64::default(); len],
        })
    }

    /// `-P[(u·∇)u]^ - ν|k|²û`, returning the max grid speed of the input
    /// as a by-product.
    fn rhs(&mut self, hat: &[Vec3c], out: &mut [Vec3c]) -> f64 {
        let len = hat.len();
        for c in 0..3 {
            for (b, v) in self.buf.iter_mut().zip(hat) {
                *b = v[c];
            }
            self.fft.inverse(&mut self.buf);
            for (u, b) in self.velocity.iter_mut().zip(&self.buf) {
                u[c] = b.re;
            }
        }
        let speed = max_speed(&self.velocity);
        for (slot, &(a, b)) in PAIRS.iter().enumerate() {
            let prod = &mut self.products[slot];
            for (p, u) in prod.iter_mut().zip(&self.velocity) {
                *p = Complex64::new(u[a] * u[b], 0.0);
            }
            self.fft.forward(prod);
        }
        let scale = 1.0 / len as f64;
        out.iter_mut().for_each(|v| *v = [Complex64::default(); 3]);
        let i_unit = Complex64::new(0.0, 1.0);
        for &(k, idx) in &self.retained {
            // (u·∇)u = ∂_j(u_i u_j) for solenoidal u
            let mut nl = [Complex64::default(); 3];
            for (i, n_i) in nl.iter_mut().enumerate() {
                let mut s = Complex64::default();
                for (j, &kj) in k.iter().enumerate() {
                    s += self.products[pair_slot(i, j)][idx] * kj as f64;
                }
                *n_i = i_unit * s * scale;
            }
            project(k, &mut nl);
            let k2 = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
            for c in 0..3 {
                out[idx][c] = -nl[c] - hat[idx][c] * (self.viscosity * k2);
            }
        }
        speed
    }

    /// One classical RK4 step of size `dt`. Rejected when
    /// `dt > 0.5 · (2π/n) / max|u|`.
    pub fn step(&mut self, state: &SpectralState, dt: f64) -> Result<SpectralState> {
        if state.grid_size != self.grid_size {
            return Err(Error::domain(format!(
                "state grid {} does not match solver grid {}",
                state.grid_size, self.grid_size
            )));
        }
        let len = state.hat.len();
        let zero = [Complex64::default(); 3];
        let mut k1 = vec![zero; len];
        let speed = self.rhs(&state.hat, &mut k1);
        if speed > 0.0 {
            let admissible = CFL_NUMBER * (2.0 * std::f64::consts::PI / self.grid_size as f64) / speed;
            if dt > admissible {
                return Err(Error::StepRejected { dt, admissible });
            }
        }
        let stage = |base: &[Vec3c], k: &[Vec3c], h: f64| -> Vec<Vec3c> {
            base.iter()
                .zip(k)
                .map(|(b, d)| [b[0] + d[0] * h, b[1] + d[1] * h, b[2] + d[2] * h])
                .collect()
        };
        let mut k2 = vec![zero; len];
        self.rhs(&stage(&state.hat, &k1, dt / 2.0), &mut k2);
        let mut k3 = vec![zero; len];
        self.rhs(&stage(&state.hat, &k2, dt / 2.0), &mut k3);
        let mut k4 = vec![zero; len];
        self.rhs(&stage(&state.hat, &k3, dt), &mut k4);
        let w = dt / 6.0;
        let hat = (0..len)
            .map(|i| {
                let mut v = state.hat[i];
                for c in 0..3 {
                    v[c] += (k1[i][c] + (k2[i][c] + k3[i][c]) * 2.0 + k4[i][c]) * w;
                }
                v
            })
            .collect();
        Ok(SpectralState {
            grid_size: self.grid_size,
            time: state.time + dt,
            hat,
        })
    }

    /// Advance to `target` in equal steps no longer than `dt`.
    pub fn advance(&mut self, state: &SpectralState, dt: f64, target: f64) -> Result<SpectralState> {
        let span = target - state.time;
        if span < 0.0 {
            return Err(Error::domain(format!("cannot integrate backwards to t = {target}")));
        }
        let steps = (span / dt * (1.0 - 1e-12)).ceil() as usize;
        let mut s = state.clone();
        if steps == 0 {
            return Ok(s);
        }
        let h = span / steps as f64;
        for i in 1..=steps {
            s = self.step(&s, h)?;
            // avoid drift in the accumulated clock
            s.time = state.time + h * i as f64;
        }
        s.time = target;
        Ok(s)
    }
}

pub fn energy(state: &SpectralState) -> f64 {
    state.energy()
}

pub fn dissipation(state: &SpectralState, viscosity: f64) -> f64 {
    state.dissipation(viscosity)
}

pub fn step(state: &SpectralState, params: &FlowParams) -> Result<SpectralState> {
    params.validate()?;
    Solver::new(state.grid_size, params.viscosity)?.step(state, params.dt)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesPoint {
    pub time: f64,
    pub energy: f64,
    pub dissipation: f64,
}

/// Integrate from the state's time to `t_end` in equal steps no longer
/// than `dt`, recording energy and dissipation after every step.
pub fn integrate(initial: &SpectralState, params: &FlowParams) -> Result<(Vec<SeriesPoint>, SpectralState)> {
    params.validate()?;
    let mut solver = Solver::new(initial.grid_size, params.viscosity)?;
    let span = params.t_end - initial.time;
    if span < 0.0 {
        return Err(Error::domain("initial time is past t_end"));
    }
    let steps = (span / params.dt * (1.0 - 1e-12)).ceil() as usize;
    let h = if steps > 0 { span / steps as f64 } else { 0.0 };
    let point = |s: &SpectralState| SeriesPoint {
        time: s.time,
        energy: s.energy(),
        dissipation: s.dissipation(params.viscosity),
    };
    let mut s = initial.clone();
    let mut series = vec![point(&s)];
    for i in 1..=steps {
        s = solver.step(&s, h)?;
        s.time = initial.time + h * i as f64;
        series.push(point(&s));
    }
    Ok((series, s))
}

pub fn write_series_csv(path: &Path, series: &[SeriesPoint]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for p in series {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySample {
    pub time: f64,
    pub energy: f64,
    pub dissipation: f64,
    /// Energy surface of the cylinder space at this time.
    pub surface: EnergySurface,
    pub state: SpectralState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub params: FlowParams,
    pub cylinder_dim: usize,
    pub samples: Vec<TrajectorySample>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.time).collect()
    }

    pub fn energies(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.energy).collect()
    }

    pub fn surfaces(&self) -> Vec<EnergySurface> {
        self.samples.iter().map(|s| s.surface).collect()
    }

    pub fn series(&self) -> Vec<SeriesPoint> {
        self.samples
            .iter()
            .map(|s| SeriesPoint {
                time: s.time,
                energy: s.energy,
                dissipation: s.dissipation,
            })
            .collect()
    }
}

/// States at `sample_times` (nondecreasing, within `[t0, t_end]`), each with
/// the energy surface of dimension `cylinder_dim` at that state's energy.
pub fn trajectory(
    initial: &SpectralState,
    params: &FlowParams,
    sample_times: &[f64],
    cylinder_dim: usize,
) -> Result<Trajectory> {
    params.validate()?;
    if cylinder_dim == 0 {
        return Err(Error::domain("cylinder dimension must be >= 1"));
    }
    let t0 = initial.time;
    let eps = 1e-12 * params.t_end.abs().max(1.0);
    for (i, &t) in sample_times.iter().enumerate() {
        if !(t >= t0 - eps && t <= params.t_end + eps) {
            return Err(Error::domain(format!(
                "sample time {t} outside [{t0}, {}]",
                params.t_end
            )));
        }
        if i > 0 && t < sample_times[i - 1] {
            return Err(Error::domain("sample times must be nondecreasing"));
        }
    }
    let mut samples = Vec::with_capacity(sample_times.len());
    if sample_times.is_empty() {
        return Ok(Trajectory {
            params: *params,
            cylinder_dim,
            samples,
        });
    }
    let mut solver = Solver::new(initial.grid_size, params.viscosity)?;
    let mut s = initial.clone();
    for &t in sample_times {
        s = solver.advance(&s, params.dt, t.max(s.time))?;
        let energy = s.energy();
        samples.push(TrajectorySample {
            time: s.time,
            energy,
            dissipation: s.dissipation(params.viscosity),
            surface: make_surface(cylinder_dim, energy)?,
            state: s.clone(),
        });
    }
    Ok(Trajectory {
        params: *params,
        cylinder_dim,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::simpson;

    #[test]
    fn single_mode_decays_exactly() {
        let nu = 0.05;
        let s0 = SpectralState::single_mode(16, [1, 2, 0], 1.0).unwrap();
        let e0 = s0.energy();
        let params = FlowParams::new(nu, 0.01, 1.0).unwrap();
        let (series, _) = integrate(&s0, &params).unwrap();
        assert_eq!(series.len(), 101);
        for p in &series {
            let exact = e0 * (-2.0 * nu * 5.0 * p.time).exp();
            assert!((p.energy - exact).abs() <= 1e-8 * exact, "{p:?}");
        }
    }

    #[test]
    fn zero_state_is_fixed() {
        let z = SpectralState::zeros(8).unwrap();
        let next = step(&z, &FlowParams::new(0.1, 0.1, 1.0).unwrap()).unwrap();
        assert!(next.hat.iter().flatten().all(|c| c.norm() == 0.0));
        assert!((next.time - 0.1).abs() < 1e-15);
    }

    #[test]
    fn invariants_survive_nonlinear_steps() {
        let mut s = SpectralState::random_solenoidal(12, 1.0, 1.5, 3).unwrap();
        let mut solver = Solver::new(12, 0.02).unwrap();
        for _ in 0..20 {
            s = solver.step(&s, 0.01).unwrap();
        }
        assert!(s.max_divergence() < 1e-12);
        assert!(s.max_reality_defect() < 1e-12);
    }

    #[test]
    fn cfl_rejection_reports_admissible_step() {
        let s = SpectralState::single_mode(16, [1, 0, 0], 10.0).unwrap();
        let err = step(&s, &FlowParams::new(0.0, 0.1, 1.0).unwrap()).unwrap_err();
        match err {
            Error::StepRejected { dt, admissible } => {
                assert_eq!(dt, 0.1);
                let expect = 0.5 * (2.0 * std::f64::consts::PI / 16.0) / 10.0;
                assert!((admissible - expect).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn inviscid_taylor_green_conserves_energy() {
        let s0 = SpectralState::taylor_green(16, 1.0).unwrap();
        let params = FlowParams::new(0.0, 0.01, 2.0).unwrap();
        let (series, _) = integrate(&s0, &params).unwrap();
        assert_eq!(series.len(), 201);
        let e0 = series[0].energy;
        for p in &series {
            assert!((p.energy - e0).abs() <= 1e-10 * e0, "{p:?}");
        }
    }

    #[test]
    fn energy_budget_closes() {
        let s0 = SpectralState::random_solenoidal(16, 1.0, 2.0, 9).unwrap();
        let params = FlowParams::new(0.05, 0.01, 1.0).unwrap();
        let (series, _) = integrate(&s0, &params).unwrap();
        let eps: Vec<f64> = series.iter().map(|p| p.dissipation).collect();
        let lost = simpson(&eps, 0.01).unwrap();
        let de = series.last().unwrap().energy - series[0].energy;
        assert!((de + lost).abs() <= 1e-6 * series[0].energy, "{de} {lost}");
    }

    #[test]
    fn trajectory_sampling() {
        let s0 = SpectralState::random_solenoidal(8, 1.0, 1.0, 1).unwrap();
        let params = FlowParams::new(0.1, 0.02, 1.0).unwrap();
        let traj = trajectory(&s0, &params, &[0.0, 0.25, 0.5, 1.0], 3).unwrap();
        assert_eq!(traj.times(), vec![0.0, 0.25, 0.5, 1.0]);
        let e = traj.energies();
        assert!(e.windows(2).all(|w| w[1] < w[0]));
        assert_eq!(traj.samples[0].surface.dim, 3);
        assert!((traj.samples[2].surface.radius - (2.0 * e[2]).sqrt()).abs() < 1e-15);

        let empty = trajectory(&s0, &params, &[], 3).unwrap();
        assert!(empty.is_empty());
        assert!(trajectory(&s0, &params, &[0.5, 0.2], 3).is_err());
        assert!(trajectory(&s0, &params, &[1.5], 3).is_err());

        let inviscid = FlowParams::new(0.0, 0.01, 0.5).unwrap();
        let traj = trajectory(&s0, &inviscid, &[0.0, 0.25, 0.5], 3).unwrap();
        let e = traj.energies();
        assert!(e.iter().all(|v| (v - e[0]).abs() <= 1e-10 * e[0]));
    }

    #[test]
    fn params_validation() {
        assert!(FlowParams::new(-0.1, 0.1, 1.0).is_err());
        assert!(FlowParams::new(0.1, 0.0, 1.0).is_err());
        assert!(FlowParams::new(0.1, 0.1, f64::NAN).is_err());
        let p: FlowParams = toml::from_str("viscosity = 0.1\ndt = 0.01\nt_end = 1.0\n").unwrap();
        assert_eq!(p.dealiasing, Dealiasing::TwoThirds);
        assert!(toml::from_str::<FlowParams>("viscosity = 0.1\ndt = 0.01\nt_end = 1.0\nnu2 = 3\n").is_err());
    }
}
