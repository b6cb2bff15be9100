use std::path::Path;

use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::fft::Fft3;
use crate::config_space::{BasisSpec, Mode, DOMAIN_VOLUME};
use crate::sampling::stream_rng;
use crate::{Error, Result};

pub type Vec3c = [Complex64; 3];

const ZERO: Vec3c = [Complex64 { re: 0.0, im: 0.0 }; 3];

/// Velocity field on the periodic cube `[0, 2π)³`, held as Fourier
/// coefficients `û(k)` of `u(x) = Σ_k û(k) e^{ik·x}` on an `n³` index grid.
///
/// Only wavevectors with `|k_i| <= (n-1)/3` are retained (two-thirds
/// dealiasing). The orthonormal amplitude of a mode is `a(k) = sqrt(|V|) û(k)`,
/// so the kinetic energy is `½ Σ |a|²`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralState {
    pub(crate) grid_size: usize,
    pub(crate) time: f64,
    pub(crate) hat: Vec<Vec3c>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CoefficientRow {
    kx: i32,
    ky: i32,
    kz: i32,
    ux_re: f64,
    ux_im: f64,
    uy_re: f64,
    uy_im: f64,
    uz_re: f64,
    uz_im: f64,
}

/// Largest retained `|k_i|` under the two-thirds rule.
pub fn retained_cutoff(grid_size: usize) -> i32 {
    ((grid_size.max(1) - 1) / 3) as i32
}

pub(crate) fn wavenumber(index: usize, n: usize) -> i32 {
    if index <= n / 2 {
        index as i32
    } else {
        index as i32 - n as i32
    }
}

fn grid_index(k: [i32; 3], n: usize) -> usize {
    let w = |c: i32| c.rem_euclid(n as i32) as usize;
    (w(k[0]) * n + w(k[1])) * n + w(k[2])
}

fn dot_k(k: [i32; 3], v: &Vec3c) -> Complex64 {
    v[0] * k[0] as f64 + v[1] * k[1] as f64 + v[2] * k[2] as f64
}

/// Leray projection `v - k (k·v)/|k|²`.
pub(crate) fn project(k: [i32; 3], v: &mut Vec3c) {
    let k2 = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
    if k2 == 0.0 {
        *v = ZERO;
        return;
    }
    let kv = dot_k(k, v) / k2;
    for c in 0..3 {
        v[c] -= kv * k[c] as f64;
    }
}

fn vnorm(v: &Vec3c) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

impl SpectralState {
    pub fn zeros(grid_size: usize) -> Result<Self> {
        if grid_size < 4 {
            return Err(Error::domain(format!(
                "flow grid must be >= 4 per axis to retain any mode, got {grid_size}"
            )));
        }
        Ok(SpectralState {
            grid_size,
            time: 0.0,
            hat: vec![ZERO; grid_size.pow(3)],
        })
    }

    /// Sample `f` on the grid, transform, truncate and project.
    pub fn from_physical<F>(grid_size: usize, f: F) -> Result<Self>
    where
        F: Fn([f64; 3]) -> [f64; 3],
    {
        let mut state = Self::zeros(grid_size)?;
        let n = grid_size;
        let h = 2.0 * std::f64::consts::PI / n as f64;
        let mut fields = vec![vec![Complex64::default(); n * n * n]; 3];
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    let u = f([i as f64 * h, j as f64 * h, l as f64 * h]);
                    let idx = (i * n + j) * n + l;
                    for c in 0..3 {
                        fields[c][idx] = Complex64::new(u[c], 0.0);
                    }
                }
            }
        }
        let mut fft = Fft3::new(n);
        let scale = 1.0 / (n * n * n) as f64;
        for field in fields.iter_mut() {
            fft.forward(field);
        }
        let retained: Vec<_> = state.retained_indices().collect();
        for (k, idx) in retained {
            let mut v = [fields[0][idx] * scale, fields[1][idx] * scale, fields[2][idx] * scale];
            project(k, &mut v);
            state.hat[idx] = v;
        }
        Ok(state)
    }

    /// `u = A sin(k·x) ê` with `ê ⊥ k` the first polarization of the mode.
    /// The nonlinear term vanishes identically, so it decays as
    /// `A e^{-ν|k|²t}`.
    pub fn single_mode(grid_size: usize, wavevector: [i32; 3], amplitude: f64) -> Result<Self> {
        let mut state = Self::zeros(grid_size)?;
        let cut = retained_cutoff(grid_size);
        if wavevector == [0, 0, 0] || wavevector.iter().any(|c| c.abs() > cut) {
            return Err(Error::domain(format!(
                "wavevector {wavevector:?} is not retained on grid {grid_size} (|k_i| <= {cut})"
            )));
        }
        let e = Mode {
            wavevector,
            polarization: 0,
        }
        .polarization_vector();
        // sin θ = (e^{iθ} - e^{-iθ}) / 2i
        let c = Complex64::new(0.0, -amplitude / 2.0);
        state.hat[grid_index(wavevector, grid_size)] = e.map(|x| c * x);
        state.hat[grid_index(wavevector.map(|v| -v), grid_size)] = e.map(|x| c.conj() * x);
        Ok(state)
    }

    /// `A (sin x cos y cos z, -cos x sin y cos z, 0)`.
    pub fn taylor_green(grid_size: usize, amplitude: f64) -> Result<Self> {
        Self::from_physical(grid_size, |x| {
            let (sx, cx) = x[0].sin_cos();
            let (sy, cy) = x[1].sin_cos();
            let cz = x[2].cos();
            [amplitude * sx * cy * cz, -amplitude * cx * sy * cz, 0.0]
        })
    }

    /// Gaussian solenoidal field with spectrum `∝ exp(-|k|²/(2 k_p²))`,
    /// rescaled to the requested energy.
    pub fn random_solenoidal(grid_size: usize, energy: f64, peak_wavenumber: f64, seed: u64) -> Result<Self> {
        if !(energy >= 0.0) || !energy.is_finite() {
            return Err(Error::domain(format!("energy must be finite and >= 0, got {energy}")));
        }
        if !(peak_wavenumber > 0.0) {
            return Err(Error::domain("peak wavenumber must be positive"));
        }
        let mut state = Self::zeros(grid_size)?;
        let mut rng = stream_rng(seed, 0);
        let mut ks: Vec<[i32; 3]> = state
            .retained_indices()
            .map(|(k, _)| k)
            .filter(|&k| Mode { wavevector: k, polarization: 0 }.is_cosine())
            .collect();
        ks.sort_unstable();
        for k in ks {
            let k2 = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
            let envelope = (-k2 / (4.0 * peak_wavenumber * peak_wavenumber)).exp();
            let mut v = [ZERO[0]; 3];
            for c in v.iter_mut() {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                *c = Complex64::new(re, im) * envelope;
            }
            project(k, &mut v);
            state.hat[grid_index(k, grid_size)] = v;
            state.hat[grid_index(k.map(|c| -c), grid_size)] = v.map(|c| c.conj());
        }
        let e0 = state.energy();
        let factor = if e0 > 0.0 { (energy / e0).sqrt() } else { 0.0 };
        state.hat.iter_mut().flatten().for_each(|c| *c *= factor);
        Ok(state)
    }

    /// Real basis coefficients `c` → state. Modes outside the retained set
    /// are rejected.
    pub fn from_basis_coefficients(grid_size: usize, basis: &BasisSpec, coefficients: &[f64]) -> Result<Self> {
        if coefficients.len() != basis.dim {
            return Err(Error::domain(format!(
                "expected {} coefficients, got {}",
                basis.dim,
                coefficients.len()
            )));
        }
        let mut state = Self::zeros(grid_size)?;
        let cut = retained_cutoff(grid_size);
        let norm = (2.0 * DOMAIN_VOLUME).sqrt();
        for (mode, &c) in basis.modes.iter().zip(coefficients) {
            if c == 0.0 {
                continue;
            }
            if mode.wavevector.iter().any(|v| v.abs() > cut) {
                return Err(Error::domain(format!(
                    "mode {:?} is not retained on flow grid {grid_size}",
                    mode.wavevector
                )));
            }
            let k = mode.canonical_wavevector();
            let e = mode.polarization_vector();
            // cos θ = (e^{iθ}+e^{-iθ})/2, and sin(-k·x) = -(e^{ik·x}-e^{-ik·x})/2i
            let z = if mode.is_cosine() {
                Complex64::new(c / norm, 0.0)
            } else {
                Complex64::new(0.0, c / norm)
            };
            let (p, m) = (grid_index(k, grid_size), grid_index(k.map(|v| -v), grid_size));
            for i in 0..3 {
                state.hat[p][i] += z * e[i];
                state.hat[m][i] += z.conj() * e[i];
            }
        }
        Ok(state)
    }

    /// Orthogonal projection onto the first `basis.dim` basis fields.
    pub fn to_basis_coefficients(&self, basis: &BasisSpec) -> Vec<f64> {
        let cut = retained_cutoff(self.grid_size);
        let norm = (2.0 * DOMAIN_VOLUME).sqrt();
        basis
            .modes
            .iter()
            .map(|mode| {
                if mode.wavevector.iter().any(|v| v.abs() > cut) {
                    return 0.0;
                }
                let k = mode.canonical_wavevector();
                let e = mode.polarization_vector();
                let v = &self.hat[grid_index(k, self.grid_size)];
                let proj = v[0] * e[0] + v[1] * e[1] + v[2] * e[2];
                norm * if mode.is_cosine() { proj.re } else { proj.im }
            })
            .collect()
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub(crate) fn retained_indices(&self) -> impl Iterator<Item = ([i32; 3], usize)> + '_ {
        let n = self.grid_size;
        let cut = retained_cutoff(n);
        (0..n * n * n).filter_map(move |idx| {
            let k = [
                wavenumber(idx / (n * n), n),
                wavenumber((idx / n) % n, n),
                wavenumber(idx % n, n),
            ];
            let keep = k != [0, 0, 0] && k.iter().all(|c| c.abs() <= cut);
            keep.then_some((k, idx))
        })
    }

    /// Orthonormal amplitude `a(k)`, or `None` when `k` is not retained.
    pub fn amplitude(&self, k: [i32; 3]) -> Option<Vec3c> {
        let cut = retained_cutoff(self.grid_size);
        if k == [0, 0, 0] || k.iter().any(|c| c.abs() > cut) {
            return None;
        }
        let s = DOMAIN_VOLUME.sqrt();
        Some(self.hat[grid_index(k, self.grid_size)].map(|c| c * s))
    }

    /// Retained `(k, a(k))` pairs in index order.
    pub fn amplitudes(&self) -> Vec<([i32; 3], Vec3c)> {
        let s = DOMAIN_VOLUME.sqrt();
        self.retained_indices()
            .map(|(k, idx)| (k, self.hat[idx].map(|c| c * s)))
            .collect()
    }

    /// `½ Σ |a(k)|²`.
    pub fn energy(&self) -> f64 {
        let s: f64 = self.hat.iter().map(|v| v.iter().map(|c| c.norm_sqr()).sum::<f64>()).sum();
        0.5 * DOMAIN_VOLUME * s
    }

    /// `ν Σ |k|² |a(k)|²`, the rate of kinetic energy loss.
    pub fn dissipation(&self, viscosity: f64) -> f64 {
        if viscosity == 0.0 {
            return 0.0;
        }
        let s: f64 = self
            .retained_indices()
            .map(|(k, idx)| {
                let k2 = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
                k2 * self.hat[idx].iter().map(|c| c.norm_sqr()).sum::<f64>()
            })
            .sum();
        viscosity * DOMAIN_VOLUME * s
    }

    /// Largest `|k·û| / |û|` over nonzero retained modes.
    pub fn max_divergence(&self) -> f64 {
        self.retained_indices()
            .filter_map(|(k, idx)| {
                let v = &self.hat[idx];
                let m = vnorm(v);
                (m > 0.0).then(|| dot_k(k, v).norm() / (m * (k.iter().map(|c| c * c).sum::<i32>() as f64).sqrt()))
            })
            .fold(0.0, f64::max)
    }

    /// Largest `|û(-k) - conj û(k)|` relative to the largest `|û|`.
    pub fn max_reality_defect(&self) -> f64 {
        let scale = self.hat.iter().map(vnorm).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        self.retained_indices()
            .map(|(k, idx)| {
                let mirror = &self.hat[grid_index(k.map(|c| -c), self.grid_size)];
                let v = &self.hat[idx];
                (0..3).map(|c| (mirror[c] - v[c].conj()).norm_sqr()).sum::<f64>().sqrt()
            })
            .fold(0.0, f64::max)
            / scale
    }

    /// Physical velocity on the grid, `idx = (i·n + j)·n + l`.
    pub fn velocity_field(&self) -> Vec<[f64; 3]> {
        let mut fft = Fft3::new(self.grid_size);
        self.velocity_field_with(&mut fft)
    }

    pub(crate) fn velocity_field_with(&self, fft: &mut Fft3) -> Vec<[f64; 3]> {
        let len = self.hat.len();
        let mut out = vec![[0.0; 3]; len];
        let mut buf = vec![Complex64::default(); len];
        for c in 0..3 {
            for (b, v) in buf.iter_mut().zip(&self.hat) {
                *b = v[c];
            }
            fft.inverse(&mut buf);
            for (o, b) in out.iter_mut().zip(&buf) {
                o[c] = b.re;
            }
        }
        out
    }

    /// Grid quadrature of `½|u|²`, an independent check on [`Self::energy`].
    pub fn physical_energy(&self) -> f64 {
        let cell = DOMAIN_VOLUME / self.hat.len() as f64;
        0.5 * cell * self.velocity_field().iter().map(|u| u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sum::<f64>()
    }

    pub fn max_speed(&self) -> f64 {
        let mut fft = Fft3::new(self.grid_size);
        max_speed(&self.velocity_field_with(&mut fft))
    }

    /// Write nonzero retained amplitudes `a(k)` as CSV.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for (k, a) in self.amplitudes() {
            if a.iter().all(|c| c.norm_sqr() == 0.0) {
                continue;
            }
            w.serialize(CoefficientRow {
                kx: k[0],
                ky: k[1],
                kz: k[2],
                ux_re: a[0].re,
                ux_im: a[0].im,
                uy_re: a[1].re,
                uy_im: a[1].im,
                uz_re: a[2].re,
                uz_im: a[2].im,
            })?;
        }
        w.flush()?;
        Ok(())
    }

    /// Read amplitudes written by [`Self::write_csv`]. A wavevector listed
    /// without its mirror gets the conjugate; listed pairs must already be
    /// conjugate, and every amplitude must be divergence-free.
    pub fn read_csv(path: &Path, grid_size: usize) -> Result<Self> {
        let data_err = |message: String| Error::Data {
            path: path.to_path_buf(),
            message,
        };
        let mut state = Self::zeros(grid_size)?;
        let cut = retained_cutoff(grid_size);
        let inv = DOMAIN_VOLUME.sqrt().recip();
        let mut seen = vec![false; state.hat.len()];
        let mut reader = csv::Reader::from_path(path)?;
        for (line, row) in reader.deserialize::<CoefficientRow>().enumerate() {
            let row = row?;
            let k = [row.kx, row.ky, row.kz];
            if k == [0, 0, 0] || k.iter().any(|c| c.abs() > cut) {
                return Err(data_err(format!(
                    "row {}: wavevector {k:?} is not retained on grid {grid_size}",
                    line + 1
                )));
            }
            let v = [
                Complex64::new(row.ux_re, row.ux_im) * inv,
                Complex64::new(row.uy_re, row.uy_im) * inv,
                Complex64::new(row.uz_re, row.uz_im) * inv,
            ];
            let m = vnorm(&v);
            let k_len = (k.iter().map(|c| c * c).sum::<i32>() as f64).sqrt();
            if dot_k(k, &v).norm() > 1e-12 * m * k_len {
                return Err(data_err(format!("row {}: amplitude at {k:?} is not divergence-free", line + 1)));
            }
            let idx = grid_index(k, grid_size);
            if seen[idx] {
                return Err(data_err(format!("row {}: duplicate wavevector {k:?}", line + 1)));
            }
            let mirror = grid_index(k.map(|c| -c), grid_size);
            if seen[mirror] {
                let w = &state.hat[mirror];
                let defect = (0..3).map(|c| (w[c] - v[c].conj()).norm()).fold(0.0, f64::max);
                if defect > 1e-12 * m.max(vnorm(w)) {
                    return Err(data_err(format!(
                        "row {}: amplitude at {k:?} is not the conjugate of its mirror",
                        line + 1
                    )));
                }
            } else {
                state.hat[mirror] = v.map(|c| c.conj());
            }
            state.hat[idx] = v;
            seen[idx] = true;
        }
        Ok(state)
    }
}

pub(crate) fn max_speed(field: &[[f64; 3]]) -> f64 {
    field
        .iter()
        .map(|u| (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt())
        .fold(0.0, f64::max)
}
