use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::entropy::Estimator;
use crate::flow::{Dealiasing, FlowParams};
use crate::mepp::FamilySpec;
use crate::restriction::DEFAULT_STEP_FRACTION;
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Everything a run needs. Each subcommand reads its own block; blocks
/// left out take their defaults. Paths are relative to the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub seed: u64,
    #[serde(default)]
    pub props: PropsConfig,
    #[serde(default)]
    pub entropy: EntropyConfig,
    #[serde(default)]
    pub restrict: RestrictConfig,
    #[serde(default)]
    pub flow: FlowConfig,
    #[serde(default)]
    pub select: SelectConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropsConfig {
    pub prop1: Prop1Config,
    pub prop3: Prop3Config,
    pub prop4: Prop4Config,
    pub prop5: Prop5Config,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Prop1Config {
    pub n_max: usize,
    /// Samples per test set.
    pub samples: usize,
}

impl Default for Prop1Config {
    fn default() -> Self {
        Prop1Config {
            n_max: 10,
            samples: 40_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Prop3Config {
    pub dims: Vec<usize>,
    pub energy: f64,
    pub samples: usize,
}

impl Default for Prop3Config {
    fn default() -> Self {
        Prop3Config {
            dims: vec![1, 2, 3, 5, 10],
            energy: 0.5,
            samples: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Prop4Config {
    pub dims: Vec<usize>,
    pub energy: f64,
    pub samples: usize,
    /// Total random candidates, split as evenly as possible across `dims`.
    pub random_candidates: usize,
    /// vMF concentrations checked against the quadrature oracle.
    pub vmf_kappas: Vec<f64>,
    pub vmf_samples: usize,
    pub vmf_relative_tolerance: f64,
}

impl Default for Prop4Config {
    fn default() -> Self {
        Prop4Config {
            dims: vec![2, 3, 5],
            energy: 0.5,
            samples: 100_000,
            random_candidates: 50,
            vmf_kappas: vec![0.5, 1.0, 2.0, 5.0],
            vmf_samples: 10_000_000,
            vmf_relative_tolerance: 1e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Prop5Config {
    pub boxes: Vec<f64>,
    pub n_max: usize,
    /// Upper bound allowed on `e^b - S_{n_max}`.
    pub max_final_gap: f64,
}

impl Default for Prop5Config {
    fn default() -> Self {
        Prop5Config {
            boxes: vec![0.0, 1.0, 2.0],
            n_max: 20,
            max_final_gap: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EntropyConfig {
    pub dim: usize,
    pub energy: f64,
    pub samples: usize,
    pub estimator: Estimator,
    pub indistinguishable: bool,
    pub shape: FamilySpec,
    pub symmetrize: bool,
}

impl Default for EntropyConfig {
    fn default() -> Self {
        EntropyConfig {
            dim: 3,
            energy: 0.5,
            samples: 100_000,
            estimator: Estimator::ImportanceSampling,
            indistinguishable: false,
            shape: FamilySpec::VonMisesFisher {
                kappa: 1.0,
                direction: None,
            },
            symmetrize: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RestrictConfig {
    pub dims: Vec<usize>,
    pub energy: f64,
    /// Names accepted by `BallIntegrand::by_name`.
    pub functionals: Vec<String>,
    pub samples: usize,
    pub relative_tolerance: f64,
    pub step_fraction: f64,
}

impl Default for RestrictConfig {
    fn default() -> Self {
        RestrictConfig {
            dims: vec![1, 2, 3, 5, 6],
            energy: 0.5,
            functionals: ["one", "norm-sq", "x1-sq", "exp-x1"].map(String::from).to_vec(),
            samples: 1_000_000,
            relative_tolerance: 1e-3,
            step_fraction: DEFAULT_STEP_FRACTION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialCondition {
    SingleMode {
        wavevector: [i32; 3],
        amplitude: f64,
    },
    TaylorGreen {
        amplitude: f64,
    },
    /// `seed` defaults to one derived from the run seed.
    RandomSolenoidal {
        energy: f64,
        peak_wavenumber: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    /// Amplitude CSV as written by `SpectralState::write_csv`.
    Coefficients {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowConfig {
    pub grid_size: usize,
    pub viscosity: f64,
    pub dt: f64,
    pub t_end: f64,
    pub dealiasing: Dealiasing,
    pub initial: InitialCondition,
    pub sample_times: Vec<f64>,
    /// Dimension of the cylinder space whose energy surfaces the
    /// trajectory is mapped onto.
    pub cylinder_dim: usize,
    /// Write an amplitude CSV for every sample time.
    pub write_states: bool,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            grid_size: 16,
            viscosity: 0.05,
            dt: 0.01,
            t_end: 1.0,
            dealiasing: Dealiasing::TwoThirds,
            initial: InitialCondition::RandomSolenoidal {
                energy: 0.5,
                peak_wavenumber: 2.0,
                seed: None,
            },
            sample_times: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            cylinder_dim: 3,
            write_states: true,
        }
    }
}

impl FlowConfig {
    pub fn params(&self) -> FlowParams {
        FlowParams {
            viscosity: self.viscosity,
            dt: self.dt,
            t_end: self.t_end,
            dealiasing: self.dealiasing,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    pub name: String,
    pub shape: FamilySpec,
    #[serde(default)]
    pub symmetrize: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectConfig {
    pub samples: usize,
    pub estimator: Estimator,
    pub indistinguishable: bool,
    pub families: Vec<FamilyConfig>,
}

impl Default for SelectConfig {
    fn default() -> Self {
        SelectConfig {
            samples: 100_000,
            estimator: Estimator::ImportanceSampling,
            indistinguishable: false,
            families: vec![
                FamilyConfig {
                    name: "uniform".into(),
                    shape: FamilySpec::Uniform {},
                    symmetrize: false,
                },
                FamilyConfig {
                    name: "vmf-2".into(),
                    shape: FamilySpec::VonMisesFisher {
                        kappa: 2.0,
                        direction: None,
                    },
                    symmetrize: false,
                },
            ],
        }
    }
}

/// The first backquoted name in a serde message, e.g. `seed` in
/// "missing field `seed`".
fn field_in_message(msg: &str) -> Option<&str> {
    let start = msg.find('`')? + 1;
    let len = msg[start..].find('`')?;
    Some(&msg[start..start + len])
}

fn check(ok: bool, field: &str, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(field, msg()))
    }
}

fn positive(x: f64, field: &str) -> Result<()> {
    check(x.is_finite() && x > 0.0, field, || format!("must be finite and > 0, got {x}"))
}

fn dims(v: &[usize], field: &str) -> Result<()> {
    check(!v.is_empty() && v.iter().all(|&d| d >= 1), field, || {
        "must be a non-empty list of dimensions >= 1".into()
    })
}

fn samples(n: usize, field: &str) -> Result<()> {
    check(n >= 1, field, || "must be >= 1".into())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            let field = field_in_message(&msg).unwrap_or("<root>").to_string();
            Error::Config { field, message: msg }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Every default, with the given seed.
    pub fn with_seed(seed: u64) -> Self {
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            seed,
            props: PropsConfig::default(),
            entropy: EntropyConfig::default(),
            restrict: RestrictConfig::default(),
            flow: FlowConfig::default(),
            select: SelectConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        check(self.schema_version == SCHEMA_VERSION, "schema_version", || {
            format!("unsupported schema version {} (expected {SCHEMA_VERSION})", self.schema_version)
        })?;

        let p = &self.props;
        check(p.prop1.n_max >= 1, "props.prop1.n_max", || "must be >= 1".into())?;
        samples(p.prop1.samples, "props.prop1.samples")?;
        dims(&p.prop3.dims, "props.prop3.dims")?;
        positive(p.prop3.energy, "props.prop3.energy")?;
        samples(p.prop3.samples, "props.prop3.samples")?;
        dims(&p.prop4.dims, "props.prop4.dims")?;
        positive(p.prop4.energy, "props.prop4.energy")?;
        samples(p.prop4.samples, "props.prop4.samples")?;
        samples(p.prop4.vmf_samples, "props.prop4.vmf_samples")?;
        check(p.prop4.vmf_kappas.iter().all(|k| k.is_finite() && *k > 0.0), "props.prop4.vmf_kappas", || {
            "concentrations must be finite and > 0".into()
        })?;
        check(p.prop4.vmf_kappas.windows(2).all(|w| w[1] > w[0]), "props.prop4.vmf_kappas", || {
            "concentrations must be strictly increasing".into()
        })?;
        positive(p.prop4.vmf_relative_tolerance, "props.prop4.vmf_relative_tolerance")?;
        check(
            !p.prop5.boxes.is_empty() && p.prop5.boxes.iter().all(|b| b.is_finite() && *b >= 0.0),
            "props.prop5.boxes",
            || "must be a non-empty list of finite values >= 0".into(),
        )?;
        check(p.prop5.n_max >= 1, "props.prop5.n_max", || "must be >= 1".into())?;
        positive(p.prop5.max_final_gap, "props.prop5.max_final_gap")?;

        let e = &self.entropy;
        check(e.dim >= 1, "entropy.dim", || "must be >= 1".into())?;
        positive(e.energy, "entropy.energy")?;
        samples(e.samples, "entropy.samples")?;

        let r = &self.restrict;
        dims(&r.dims, "restrict.dims")?;
        positive(r.energy, "restrict.energy")?;
        samples(r.samples, "restrict.samples")?;
        check(!r.functionals.is_empty(), "restrict.functionals", || "must not be empty".into())?;
        positive(r.relative_tolerance, "restrict.relative_tolerance")?;
        check(
            r.step_fraction.is_finite() && r.step_fraction > 0.0 && r.step_fraction < 0.5,
            "restrict.step_fraction",
            || format!("must lie in (0, 0.5), got {}", r.step_fraction),
        )?;

        let f = &self.flow;
        check(f.grid_size >= 4, "flow.grid_size", || format!("must be >= 4, got {}", f.grid_size))?;
        check(f.viscosity.is_finite() && f.viscosity >= 0.0, "flow.viscosity", || {
            format!("must be a finite constant >= 0, got {}", f.viscosity)
        })?;
        positive(f.dt, "flow.dt")?;
        positive(f.t_end, "flow.t_end")?;
        check(
            f.sample_times.iter().all(|t| t.is_finite() && *t >= 0.0 && *t <= f.t_end),
            "flow.sample_times",
            || "must lie in [0, t_end]".into(),
        )?;
        check(f.sample_times.windows(2).all(|w| w[1] >= w[0]), "flow.sample_times", || {
            "must be nondecreasing".into()
        })?;
        check(f.cylinder_dim >= 1, "flow.cylinder_dim", || "must be >= 1".into())?;
        match &f.initial {
            InitialCondition::SingleMode { amplitude, .. } | InitialCondition::TaylorGreen { amplitude } => {
                check(amplitude.is_finite(), "flow.initial.amplitude", || "must be finite".into())?
            }
            InitialCondition::RandomSolenoidal {
                energy, peak_wavenumber, ..
            } => {
                positive(*energy, "flow.initial.energy")?;
                positive(*peak_wavenumber, "flow.initial.peak_wavenumber")?;
            }
            InitialCondition::Coefficients { .. } => {}
        }

        let s = &self.select;
        samples(s.samples, "select.samples")?;
        check(s.families.len() >= 2, "select.families", || {
            "needs the physical family and at least one competitor".into()
        })?;
        check(
            s.families.iter().any(|fam| fam.shape == FamilySpec::Uniform {}),
            "select.families",
            || "no physical (uniform) family present".into(),
        )?;
        for (i, fam) in s.families.iter().enumerate() {
            check(!fam.name.is_empty(), &format!("select.families[{i}].name"), || "must not be empty".into())?;
            check(
                s.families[..i].iter().all(|o| o.name != fam.name),
                &format!("select.families[{i}].name"),
                || format!("duplicate family name `{}`", fam.name),
            )?;
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form of the resolved config.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// A validated config plus the directory its relative paths refer to.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub base_dir: PathBuf,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            field: "--config".into(),
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        Ok(LoadedConfig {
            config: ExperimentConfig::from_toml(&text)?,
            base_dir: path.parent().map(Path::to_path_buf).unwrap_or_default(),
        })
    }

    pub fn from_config(config: ExperimentConfig, base_dir: impl Into<PathBuf>) -> Result<Self> {
        config.validate()?;
        Ok(LoadedConfig {
            config,
            base_dir: base_dir.into(),
        })
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = ExperimentConfig::from_toml("schema_version = 1\nseed = 7\n").unwrap();
        assert_eq!(c, ExperimentConfig::with_seed(7));
    }

    #[test]
    fn missing_seed_names_field() {
        match ExperimentConfig::from_toml("schema_version = 1\n") {
            Err(Error::Config { field, .. }) => assert_eq!(field, "seed"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        for text in [
            "schema_version = 1\nseed = 1\nsead = 2\n",
            "schema_version = 1\nseed = 1\n[flow]\nviscosty = 0.1\n",
            "schema_version = 1\nseed = 1\n[flow.initial]\npreset = \"taylor-green\"\namplitude = 1.0\nphase = 0.0\n",
        ] {
            assert!(matches!(ExperimentConfig::from_toml(text), Err(Error::Config { .. })), "{text}");
        }
    }

    #[test]
    fn variable_viscosity_rejected() {
        let err = ExperimentConfig::from_toml("schema_version = 1\nseed = 1\n[flow]\nviscosity = [0.1, 0.2]\n");
        assert!(matches!(err, Err(Error::Config { .. })));
        let err = ExperimentConfig::from_toml("schema_version = 1\nseed = 1\n[flow]\nviscosity = -1.0\n");
        match err {
            Err(Error::Config { field, .. }) => assert_eq!(field, "flow.viscosity"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn select_families_validated() {
        let only_uniform = r#"
schema_version = 1
seed = 1
[[select.families]]
name = "uniform"
shape = { family = "uniform" }
"#;
        match ExperimentConfig::from_toml(only_uniform) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "select.families"),
            other => panic!("{other:?}"),
        }
        let no_physical = r#"
schema_version = 1
seed = 1
[[select.families]]
name = "a"
shape = { family = "von-mises-fisher", kappa = 1.0 }
[[select.families]]
name = "b"
shape = { family = "polynomial-tilt", slope = 1.0 }
"#;
        assert!(ExperimentConfig::from_toml(no_physical).is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::with_seed(1);
        assert_eq!(a.hash(), ExperimentConfig::with_seed(1).hash());
        assert_ne!(a.hash(), ExperimentConfig::with_seed(2).hash());
        assert_eq!(a.hash().len(), 64);
    }
}
