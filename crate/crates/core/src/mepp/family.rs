use std::path::PathBuf;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::config_space::EnergySurface;
use crate::measures::{CandidateMeasure, Density, Invariance, Vmf, DEFAULT_PERMUTATION_SEED};
use crate::sampling::{fill_unit_sphere, stream_rng};
use crate::{Error, Result};

/// Shape of a candidate family, independent of the surface it is placed
/// on. Directions default to `e_1` (and `-e_1` for the second mixture
/// component) so a spec works at any cylinder dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FamilySpec {
    Uniform {},
    VonMisesFisher {
        kappa: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        direction: Option<Vec<f64>>,
    },
    Mixture {
        weight: f64,
        kappa: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        second_kappa: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        direction: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        second_direction: Option<Vec<f64>>,
    },
    PolynomialTilt {
        slope: f64,
        #[serde(default)]
        axis: usize,
    },
    Tabulated {
        path: PathBuf,
    },
}

fn axis_vector(dim: usize, sign: f64) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    v[0] = sign;
    v
}

fn direction_for(dir: &Option<Vec<f64>>, dim: usize, sign: f64) -> Result<Vec<f64>> {
    match dir {
        Some(d) if d.len() != dim => Err(Error::domain(format!(
            "direction has {} components but the surface has dimension {dim}",
            d.len()
        ))),
        Some(d) => Ok(d.clone()),
        None => Ok(axis_vector(dim, sign)),
    }
}

impl FamilySpec {
    pub fn density(&self, dim: usize) -> Result<Density> {
        match self {
            FamilySpec::Uniform {} => Ok(Density::uniform(dim)),
            FamilySpec::VonMisesFisher { kappa, direction } => {
                Density::von_mises_fisher(direction_for(direction, dim, 1.0)?, *kappa)
            }
            FamilySpec::Mixture {
                weight,
                kappa,
                second_kappa,
                direction,
                second_direction,
            } => {
                let first = Vmf::new(direction_for(direction, dim, 1.0)?, *kappa)?;
                let second = Vmf::new(direction_for(second_direction, dim, -1.0)?, second_kappa.unwrap_or(*kappa))?;
                Density::vmf_mixture(*weight, first, second)
            }
            FamilySpec::PolynomialTilt { slope, axis } => Density::polynomial_tilt(dim, *axis, *slope),
            FamilySpec::Tabulated { path } => {
                let d = Density::load_tabulated(path)?;
                if d.dim() != dim {
                    return Err(Error::domain(format!(
                        "table {} has dimension {} but the surface has dimension {dim}",
                        path.display(),
                        d.dim()
                    )));
                }
                Ok(d)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Source {
    Spec(FamilySpec),
    /// A fixed shape; only usable on surfaces of its dimension.
    Fixed(Density),
}

/// A rule producing one probability measure per energy surface.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateFamily {
    name: String,
    source: Source,
    symmetrize: bool,
    indistinguishable: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FamilyDescription {
    pub name: String,
    pub physical: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spec: Option<FamilySpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shape: Option<serde_json::Value>,
    pub symmetrized: bool,
    pub indistinguishable: bool,
}

impl CandidateFamily {
    pub fn physical(name: impl Into<String>) -> Self {
        Self::from_spec(name, FamilySpec::Uniform {})
    }

    pub fn from_spec(name: impl Into<String>, spec: FamilySpec) -> Self {
        CandidateFamily {
            name: name.into(),
            source: Source::Spec(spec),
            symmetrize: false,
            indistinguishable: false,
        }
    }

    pub fn from_density(name: impl Into<String>, density: Density) -> Self {
        CandidateFamily {
            name: name.into(),
            source: Source::Fixed(density),
            symmetrize: false,
            indistinguishable: false,
        }
    }

    /// Average the shape over coefficient permutations before use.
    pub fn symmetrized(mut self, on: bool) -> Self {
        self.symmetrize = on;
        self
    }

    /// Measure densities against `v_e/n!` instead of `v_e`.
    pub fn indistinguishable(mut self, on: bool) -> Self {
        self.indistinguishable = on;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// The physical family is the one with constant density; symmetrizing
    /// a constant changes nothing.
    pub fn is_physical(&self) -> bool {
        match &self.source {
            Source::Spec(FamilySpec::Uniform {}) => true,
            Source::Fixed(d) => matches!(d, Density::Uniform { .. }),
            _ => false,
        }
    }

    pub fn density(&self, dim: usize) -> Result<Density> {
        let d = match &self.source {
            Source::Spec(spec) => spec.density(dim)?,
            Source::Fixed(d) if d.dim() != dim => {
                return Err(Error::domain(format!(
                    "family `{}` is fixed to dimension {} (surface has {dim})",
                    self.name,
                    d.dim()
                )))
            }
            Source::Fixed(d) => d.clone(),
        };
        Ok(if self.symmetrize {
            d.symmetrized(DEFAULT_PERMUTATION_SEED)
        } else {
            d
        })
    }

    /// Probability measure of this family on `surface`.
    pub fn build(&self, surface: &EnergySurface) -> Result<CandidateMeasure> {
        CandidateMeasure::probability(*surface, self.density(surface.dim)?, self.indistinguishable)
    }

    pub fn invariance(&self, dim: usize) -> Result<Invariance> {
        Ok(self.density(dim)?.invariance())
    }

    pub fn describe(&self) -> FamilyDescription {
        let (spec, shape) = match &self.source {
            Source::Spec(s) => (Some(s.clone()), None),
            Source::Fixed(d) => (
                None,
                Some(serde_json::json!({ "family": d.family(), "params": d.params() })),
            ),
        };
        FamilyDescription {
            name: self.name.clone(),
            physical: self.is_physical(),
            spec,
            shape,
            symmetrized: self.symmetrize,
            indistinguishable: self.indistinguishable,
        }
    }
}

/// `count` random non-physical candidates on dimension `dim`, cycling
/// through vMF, mixture, tilt, tabulated and symmetrized shapes.
pub fn random_candidates(dim: usize, count: usize, seed: u64) -> Result<Vec<CandidateFamily>> {
    if dim == 0 {
        return Err(Error::domain("dimension must be >= 1"));
    }
    let mut rng = stream_rng(seed, 0);
    let unit = |rng: &mut crate::sampling::Rng| {
        let mut u = vec![0.0; dim];
        fill_unit_sphere(rng, &mut u);
        u
    };
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let density = match i % 5 {
            0 => Density::von_mises_fisher(unit(&mut rng), rng.random_range(0.1..8.0))?,
            1 => Density::vmf_mixture(
                rng.random_range(0.1..0.9),
                Vmf::new(unit(&mut rng), rng.random_range(0.1..6.0))?,
                Vmf::new(unit(&mut rng), rng.random_range(0.1..6.0))?,
            )?,
            2 => Density::polynomial_tilt(dim, rng.random_range(0..dim), rng.random_range(-3.0..3.0))?,
            3 => {
                let rows = 64;
                let points: Vec<Vec<f64>> = (0..rows).map(|_| unit(&mut rng)).collect();
                let values = (0..rows)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        z.exp()
                    })
                    .collect();
                Density::tabulated(points, values)?
            }
            _ => Density::von_mises_fisher(unit(&mut rng), rng.random_range(0.5..4.0))?
                .symmetrized(DEFAULT_PERMUTATION_SEED),
        };
        let name = format!("{}-{i}", serde_json::to_value(density.family())?.as_str().unwrap_or("candidate"));
        out.push(CandidateFamily::from_density(name, density));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config_space::make_surface;

    #[test]
    fn specs_parse_from_toml() {
        #[derive(Deserialize)]
        struct Wrap {
            shape: FamilySpec,
        }
        let w: Wrap = toml::from_str("shape = { family = \"von-mises-fisher\", kappa = 2.0 }").unwrap();
        assert_eq!(
            w.shape,
            FamilySpec::VonMisesFisher {
                kappa: 2.0,
                direction: None
            }
        );
        let w: Wrap = toml::from_str("shape = { family = \"uniform\" }").unwrap();
        assert_eq!(w.shape, FamilySpec::Uniform {});
        assert!(toml::from_str::<Wrap>("shape = { family = \"von-mises-fisher\", kappa = 1.0, kapa = 2.0 }").is_err());
        assert!(toml::from_str::<Wrap>("shape = { family = \"uniform\", kappa = 1.0 }").is_err());
        assert!(toml::from_str::<Wrap>("shape = { family = \"cauchy\" }").is_err());
    }

    #[test]
    fn builds_probability_measures() {
        let s = make_surface(3, 0.5).unwrap();
        let specs = [
            FamilySpec::Uniform {},
            FamilySpec::VonMisesFisher {
                kappa: 2.0,
                direction: None,
            },
            FamilySpec::Mixture {
                weight: 0.3,
                kappa: 4.0,
                second_kappa: None,
                direction: None,
                second_direction: None,
            },
            FamilySpec::PolynomialTilt { slope: 2.0, axis: 1 },
        ];
        for spec in specs {
            for sym in [false, true] {
                let f = CandidateFamily::from_spec("f", spec.clone()).symmetrized(sym);
                let m = f.build(&s).unwrap();
                assert!(m.is_probability(), "{spec:?}");
            }
        }
        assert!(CandidateFamily::physical("u").is_physical());
        assert!(CandidateFamily::physical("u").symmetrized(true).is_physical());
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let s = make_surface(3, 0.5).unwrap();
        let f = CandidateFamily::from_spec(
            "v",
            FamilySpec::VonMisesFisher {
                kappa: 1.0,
                direction: Some(vec![1.0, 0.0]),
            },
        );
        assert!(f.build(&s).is_err());
        let fixed = CandidateFamily::from_density("d", Density::uniform(2));
        assert!(fixed.build(&s).is_err());
    }

    #[test]
    fn random_candidates_cover_families() {
        let c = random_candidates(3, 10, 1).unwrap();
        assert_eq!(c.len(), 10);
        let s = make_surface(3, 0.5).unwrap();
        for f in &c {
            assert!(!f.is_physical());
            assert!(f.build(&s).unwrap().is_probability());
        }
        assert_eq!(random_candidates(3, 10, 1).unwrap(), c);
    }
}
