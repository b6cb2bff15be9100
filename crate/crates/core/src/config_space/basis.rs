use std::f64::consts::PI;

use serde::Serialize;

use crate::{Error, Result};

/// Volume of the periodic cube `[0, 2π)^3`.
pub const DOMAIN_VOLUME: f64 = 8.0 * PI * PI * PI;

/// One real divergence-free Fourier mode.
///
/// Wavevectors come in `±k` pairs. The member whose first nonzero component
/// is positive carries `cos(k·x)`, its negative carries `sin(k·x)`; both
/// share the two polarization directions of the positive member.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Mode {
    pub wavevector: [i32; 3],
    pub polarization: u8,
}

impl Mode {
    pub fn is_cosine(&self) -> bool {
        is_positive(self.wavevector)
    }

    /// Representative wavevector of the `±k` pair (first nonzero component > 0).
    pub fn canonical_wavevector(&self) -> [i32; 3] {
        canonical(self.wavevector)
    }

    pub fn norm_sq(&self) -> i64 {
        self.wavevector.iter().map(|&c| (c as i64) * (c as i64)).sum()
    }

    /// Unnormalized polarization direction in integers, exactly orthogonal to
    /// the wavevector.
    pub fn polarization_direction(&self) -> [i64; 3] {
        let k = canonical(self.wavevector).map(i64::from);
        // axis least aligned with k; ties go to the lowest index
        let axis = (0..3).min_by_key(|&i| (k[i].abs(), i)).unwrap();
        let mut e = [0i64; 3];
        e[axis] = 1;
        let first = cross(k, e);
        match self.polarization {
            0 => first,
            _ => cross(k, first),
        }
    }

    pub fn polarization_vector(&self) -> [f64; 3] {
        let d = self.polarization_direction();
        let len = (d.iter().map(|&c| (c * c) as f64).sum::<f64>()).sqrt();
        d.map(|c| c as f64 / len)
    }

    /// Value of the L2-normalized vector field at `x`.
    pub fn eval(&self, x: [f64; 3]) -> [f64; 3] {
        let k = self.wavevector;
        let phase = k[0] as f64 * x[0] + k[1] as f64 * x[1] + k[2] as f64 * x[2];
        let trig = if self.is_cosine() { phase.cos() } else { phase.sin() };
        let amp = (2.0 / DOMAIN_VOLUME).sqrt() * trig;
        self.polarization_vector().map(|e| amp * e)
    }
}

fn cross(a: [i64; 3], b: [i64; 3]) -> [i64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn is_positive(k: [i32; 3]) -> bool {
    k.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0)
}

fn canonical(k: [i32; 3]) -> [i32; 3] {
    if is_positive(k) {
        k
    } else {
        k.map(|c| -c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeOrdering {
    /// `|k|²` ascending, then `k` lexicographically, polarization last.
    NormThenLexicographic,
}

/// Ordered orthonormal divergence-free basis; its first `dim` elements span
/// the cylinder subspace `H_n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasisSpec {
    pub grid_size: usize,
    pub dim: usize,
    pub modes: Vec<Mode>,
    pub ordering: ModeOrdering,
}

/// Largest wavevector component resolvable without aliasing in inner
/// products on a grid of `grid_size` points per axis.
fn max_component(grid_size: usize) -> i32 {
    ((grid_size - 1) / 2) as i32
}

pub fn admissible_mode_count(grid_size: usize) -> usize {
    let side = 2 * max_component(grid_size) as usize + 1;
    2 * (side * side * side - 1)
}

fn all_modes(grid_size: usize) -> Vec<Mode> {
    let m = max_component(grid_size);
    let mut modes = Vec::with_capacity(admissible_mode_count(grid_size));
    for kx in -m..=m {
        for ky in -m..=m {
            for kz in -m..=m {
                if kx == 0 && ky == 0 && kz == 0 {
                    continue;
                }
                for polarization in 0..2 {
                    modes.push(Mode {
                        wavevector: [kx, ky, kz],
                        polarization,
                    });
                }
            }
        }
    }
    modes.sort_by_key(|m| (m.norm_sq(), m.wavevector, m.polarization));
    modes
}

pub fn build_basis(grid_size: usize, dim: usize) -> Result<BasisSpec> {
    if grid_size < 3 {
        return Err(Error::domain(format!("grid_size must be >= 3, got {grid_size}")));
    }
    if dim == 0 {
        return Err(Error::domain("basis dimension must be >= 1"));
    }
    let available = admissible_mode_count(grid_size);
    if dim > available {
        return Err(Error::Capacity {
            requested: dim,
            available,
        });
    }
    let mut modes = all_modes(grid_size);
    modes.truncate(dim);
    Ok(BasisSpec {
        grid_size,
        dim,
        modes,
        ordering: ModeOrdering::NormThenLexicographic,
    })
}

impl BasisSpec {
    /// Integer check `k · e_p(k) = 0` for every mode.
    pub fn is_divergence_free(&self) -> bool {
        self.modes.iter().all(|m| {
            let k = m.wavevector.map(i64::from);
            let e = m.polarization_direction();
            k[0] * e[0] + k[1] * e[1] + k[2] * e[2] == 0
        })
    }

    /// L2 Gram matrix by grid quadrature, exact for trigonometric
    /// polynomials whose products do not alias on `grid_size` points.
    pub fn gram_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.grid_size;
        let h = 2.0 * PI / n as f64;
        let weight = DOMAIN_VOLUME / (n * n * n) as f64;
        let mut values = vec![Vec::with_capacity(n * n * n); self.dim];
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    let x = [i as f64 * h, j as f64 * h, l as f64 * h];
                    for (vals, mode) in values.iter_mut().zip(&self.modes) {
                        vals.push(mode.eval(x));
                    }
                }
            }
        }
        let mut gram = vec![vec![0.0; self.dim]; self.dim];
        for a in 0..self.dim {
            for b in a..self.dim {
                let s: f64 = values[a]
                    .iter()
                    .zip(&values[b])
                    .map(|(u, v)| u[0] * v[0] + u[1] * v[1] + u[2] * v[2])
                    .sum();
                gram[a][b] = s * weight;
                gram[b][a] = s * weight;
            }
        }
        gram
    }

    pub fn max_gram_deviation(&self) -> f64 {
        let gram = self.gram_matrix();
        let mut worst: f64 = 0.0;
        for (i, row) in gram.iter().enumerate() {
            for (j, g) in row.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - target).abs());
            }
        }
        worst
    }

    /// Largest `|k_i|` over the retained modes.
    pub fn max_wavenumber(&self) -> i32 {
        self.modes
            .iter()
            .flat_map(|m| m.wavevector)
            .map(i32::abs)
            .max()
            .unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_basis() {
        let b = build_basis(3, 1).unwrap();
        assert_eq!(b.modes.len(), 1);
        let m = b.modes[0];
        assert_eq!(m.norm_sq(), 1);
        assert_eq!(m.wavevector, [-1, 0, 0]);
        assert!(b.is_divergence_free());
    }

    #[test]
    fn six_modes_orthonormal() {
        let b = build_basis(4, 6).unwrap();
        assert_eq!(b.modes.len(), 6);
        assert!(b.modes.iter().all(|m| m.norm_sq() == 1));
        assert!(b.max_gram_deviation() <= 1e-12);
    }

    #[test]
    fn capacity_error() {
        match build_basis(3, 1_000_000) {
            Err(Error::Capacity {
                requested,
                available,
            }) => {
                assert_eq!(requested, 1_000_000);
                assert_eq!(available, 52);
            }
            other => panic!("expected capacity error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_small_grid() {
        assert!(build_basis(2, 1).is_err());
        assert!(build_basis(3, 0).is_err());
    }

    #[test]
    fn ordering_is_total_and_reproducible() {
        let a = build_basis(5, 200).unwrap();
        let b = build_basis(5, 200).unwrap();
        assert_eq!(a, b);
        for w in a.modes.windows(2) {
            let ka = (w[0].norm_sq(), w[0].wavevector, w[0].polarization);
            let kb = (w[1].norm_sq(), w[1].wavevector, w[1].polarization);
            assert!(ka < kb);
        }
    }

    #[test]
    fn orthonormal_up_to_64() {
        let b = build_basis(5, 64).unwrap();
        assert!(b.is_divergence_free());
        assert!(b.max_gram_deviation() <= 1e-12);
        assert!(b.grid_size as i32 > 2 * b.max_wavenumber());
    }

    #[test]
    fn sine_and_cosine_partners_share_polarization() {
        let cos = Mode {
            wavevector: [1, 2, 0],
            polarization: 1,
        };
        let sin = Mode {
            wavevector: [-1, -2, 0],
            polarization: 1,
        };
        assert!(cos.is_cosine() && !sin.is_cosine());
        assert_eq!(cos.polarization_direction(), sin.polarization_direction());
    }
}
