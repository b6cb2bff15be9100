use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{ExperimentConfig, FlowConfig, InitialCondition, LoadedConfig};
use crate::config_space::{make_surface, EnergySurface};
use crate::entropy::{entropy_with, uniform_entropy, EntropyEstimate, Estimator};
use crate::flow::{integrate, trajectory, write_series_csv, SeriesPoint, SpectralState, Trajectory};
use crate::measures::MeasureSummary;
use crate::mepp::{
    random_candidates, select_with, verify_prop1, verify_prop3, verify_prop4, verify_prop5, verify_vmf_gaps,
    CandidateFamily, FamilyDescription, FamilySpec, MaxEntropyReport, Outcome, PhysicalEntropyReport,
    ProjectiveSuiteReport, SelectOptions, SelectionReport, SeriesBoundReport, VmfGapReport,
};
use crate::quadrature::simpson;
use crate::restriction::{verify_restriction, RestrictionSuiteReport};
use crate::sampling::derive_seed;
use crate::Result;

// Seed labels; `flow` and `select` share the initial condition.
const FLOW_SEED: u64 = 0xf10;
const SELECT_SEED: u64 = 0x5e1;
const PROP_SEED: u64 = 0x9000;

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    /// The listed suites among 1, 3, 4, 5.
    VerifyProps { props: Vec<u8> },
    Entropy,
    Restrict,
    Flow,
    Select,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::VerifyProps { .. } => "verify-props",
            Command::Entropy => "entropy",
            Command::Restrict => "restrict",
            Command::Flow => "flow",
            Command::Select => "select",
        }
    }
}

/// Where a run wrote its artifacts and what it concluded.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub outcome: Outcome,
    pub dir: PathBuf,
    pub report: PathBuf,
    pub artifacts: Vec<PathBuf>,
    /// Human-readable digest for the terminal.
    pub summary: String,
}

#[derive(Serialize)]
struct Envelope<'a, T> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config_hash: String,
    seed: u64,
    outcome: Outcome,
    config: &'a ExperimentConfig,
    result: T,
}

fn outcome_of(pass: bool) -> Outcome {
    if pass {
        Outcome::Pass
    } else {
        Outcome::Fail
    }
}

struct Artifacts {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Artifacts {
    fn new(out_dir: &Path, command: &Command) -> Result<Self> {
        let dir = out_dir.join(command.name());
        fs::create_dir_all(&dir)?;
        Ok(Artifacts { dir, written: Vec::new() })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.written.push(p.clone());
        p
    }

    fn csv<R: Serialize>(&mut self, name: &str, rows: impl IntoIterator<Item = R>) -> Result<()> {
        let mut w = csv::Writer::from_path(self.path(name))?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    fn text(&mut self, name: &str, body: &str) -> Result<()> {
        fs::write(self.path(name), body)?;
        Ok(())
    }
}

/// Run `command` and write `report.json` plus CSV series under
/// `out_dir/<command>/`. The report is a pure function of the config.
pub fn execute(command: &Command, loaded: &LoadedConfig, out_dir: &Path) -> Result<RunOutput> {
    let mut art = Artifacts::new(out_dir, command)?;
    let (outcome, result, summary) = match command {
        Command::VerifyProps { props } => verify_props(props, loaded, &mut art)?,
        Command::Entropy => run_entropy(loaded)?,
        Command::Restrict => run_restrict(loaded, &mut art)?,
        Command::Flow => run_flow(loaded, &mut art)?,
        Command::Select => run_select(loaded, &mut art)?,
    };
    let cfg = &loaded.config;
    let envelope = Envelope {
        tool: "mepp-lab",
        version: env!("CARGO_PKG_VERSION"),
        command: command.name(),
        config_hash: cfg.hash(),
        seed: cfg.seed,
        outcome,
        config: cfg,
        result,
    };
    let mut json = serde_json::to_string_pretty(&envelope)?;
    json.push('\n');
    let report = art.path("report.json");
    fs::write(&report, json)?;
    Ok(RunOutput {
        outcome,
        dir: art.dir,
        report,
        artifacts: art.written,
        summary,
    })
}

type Ran = (Outcome, serde_json::Value, String);

fn resolve_spec(spec: &FamilySpec, loaded: &LoadedConfig) -> FamilySpec {
    match spec {
        FamilySpec::Tabulated { path } => FamilySpec::Tabulated {
            path: loaded.resolve(path),
        },
        other => other.clone(),
    }
}

#[derive(Serialize, Default)]
struct PropsResult {
    #[serde(skip_serializing_if = "Option::is_none")]
    prop1: Option<ProjectiveSuiteReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    prop3: Option<Vec<PhysicalEntropyReport>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    prop4: Option<Vec<Prop4Result>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    prop5: Option<Vec<Prop5Result>>,
}

#[derive(Serialize)]
struct Prop4Result {
    dominance: MaxEntropyReport,
    candidates: Vec<FamilyDescription>,
    #[serde(skip_serializing_if = "Option::is_none")]
    vmf: Option<VmfGapReport>,
    pass: bool,
}

#[derive(Serialize)]
struct Prop5Result {
    series: SeriesBoundReport,
    max_final_gap: f64,
    pass: bool,
}

fn verify_props(props: &[u8], loaded: &LoadedConfig, art: &mut Artifacts) -> Result<Ran> {
    let cfg = &loaded.config;
    let p = &cfg.props;
    let seed = |label: u64| derive_seed(cfg.seed, PROP_SEED + label);
    let mut out = PropsResult::default();
    let mut lines = Vec::new();
    let mut pass = true;

    if props.contains(&1) {
        let r = verify_prop1(p.prop1.n_max, p.prop1.samples, seed(1))?;
        art.csv(
            "prop1_sets.csv",
            r.reports.iter().flat_map(|c| {
                c.set_checks.iter().map(move |s| {
                    (c.l, c.m, c.n, s.set, s.from_dim, s.to_dim, s.restricted.value, s.direct.value, s.combined_std_error, s.pass)
                })
            }),
        )?;
        lines.push(format!(
            "prop 1: {} chains, {} exact failures, {} set-check failures",
            r.chains, r.exact_failures, r.set_check_failures
        ));
        pass &= r.pass;
        out.prop1 = Some(r);
    }

    if props.contains(&3) {
        let mut reports = Vec::new();
        for (i, &dim) in p.prop3.dims.iter().enumerate() {
            let s = make_surface(dim, p.prop3.energy)?;
            reports.push(verify_prop3(&s, p.prop3.samples, seed(300 + i as u64))?);
        }
        art.csv(
            "prop3.csv",
            reports.iter().flat_map(|r| {
                r.checks.iter().map(move |c| {
                    (r.dim, c.indistinguishable, c.expected, c.estimate.value, c.estimate.std_error, c.pass)
                })
            }),
        )?;
        let ok = reports.iter().all(|r| r.pass);
        lines.push(format!("prop 3: dims {:?}: {}", p.prop3.dims, if ok { "pass" } else { "fail" }));
        pass &= ok;
        out.prop3 = Some(reports);
    }

    if props.contains(&4) {
        let c = &p.prop4;
        let mut results = Vec::new();
        let k = c.dims.len();
        for (i, &dim) in c.dims.iter().enumerate() {
            let s = make_surface(dim, c.energy)?;
            let share = c.random_candidates / k + usize::from(i < c.random_candidates % k);
            let mut families = vec![CandidateFamily::physical("uniform")];
            families.extend(random_candidates(dim, share, seed(400 + i as u64))?);
            let dominance = verify_prop4(&families, &s, c.samples, seed(410 + i as u64))?;
            let vmf = if c.vmf_kappas.is_empty() || dim < 2 {
                None
            } else {
                Some(verify_vmf_gaps(&s, &c.vmf_kappas, c.vmf_samples, seed(420 + i as u64), c.vmf_relative_tolerance)?)
            };
            let ok = dominance.pass && vmf.as_ref().is_none_or(|v| v.pass);
            results.push(Prop4Result {
                candidates: families.iter().map(CandidateFamily::describe).collect(),
                dominance,
                vmf,
                pass: ok,
            });
        }
        art.csv(
            "prop4.csv",
            results.iter().flat_map(|r| {
                let d = &r.dominance;
                d.checks.iter().map(move |g| {
                    (d.dim, g.family.as_str(), g.entropy.value, g.entropy.std_error, g.gap, g.gap_std_error, g.violation)
                })
            }),
        )?;
        art.csv(
            "prop4_vmf.csv",
            results.iter().filter_map(|r| r.vmf.as_ref()).flat_map(|v| {
                v.checks
                    .iter()
                    .map(move |g| (v.dim, g.kappa, g.gap, g.gap_std_error, g.oracle, g.relative_error, g.pass))
            }),
        )?;
        let violations: usize = results.iter().map(|r| r.dominance.violations).sum();
        let ok = results.iter().all(|r| r.pass);
        lines.push(format!(
            "prop 4: {} candidates, {violations} violations, vMF oracle {}",
            c.random_candidates,
            if results.iter().all(|r| r.vmf.as_ref().is_none_or(|v| v.pass)) {
                "agrees"
            } else {
                "disagrees"
            }
        ));
        pass &= ok;
        out.prop4 = Some(results);
    }

    if props.contains(&5) {
        let c = &p.prop5;
        let mut results = Vec::new();
        for &b in &c.boxes {
            let series = verify_prop5(b, c.n_max)?;
            let ok = series.pass && series.gap_upper <= c.max_final_gap;
            lines.push(format!(
                "prop 5: box {b}: S_{} = {} vs e^{b} = {}, gap <= {:.3e}",
                c.n_max,
                series.partial_sums.last().copied().unwrap_or(0.0),
                series.exp_box,
                series.gap_upper
            ));
            results.push(Prop5Result {
                series,
                max_final_gap: c.max_final_gap,
                pass: ok,
            });
        }
        art.csv(
            "prop5.csv",
            results.iter().flat_map(|r| {
                r.series
                    .partial_sums
                    .iter()
                    .enumerate()
                    .map(move |(n, s)| (r.series.box_measure, n, *s, r.series.exp_box))
            }),
        )?;
        pass &= results.iter().all(|r| r.pass);
        out.prop5 = Some(results);
    }

    Ok((outcome_of(pass), serde_json::to_value(out)?, lines.join("\n")))
}

#[derive(Serialize)]
struct EntropyResult {
    family: FamilyDescription,
    measure: MeasureSummary,
    entropy: EntropyEstimate,
    max_entropy: EntropyEstimate,
    /// `max_entropy - entropy`, with the entropy's SE.
    gap: f64,
    gap_std_error: f64,
    /// The entropy does not exceed the maximum by more than `3 SE`.
    bound_respected: bool,
}

fn run_entropy(loaded: &LoadedConfig) -> Result<Ran> {
    let cfg = &loaded.config;
    let e = &cfg.entropy;
    let s = make_surface(e.dim, e.energy)?;
    let family = CandidateFamily::from_spec("measure", resolve_spec(&e.shape, loaded))
        .symmetrized(e.symmetrize)
        .indistinguishable(e.indistinguishable);
    let measure = family.build(&s)?;
    let entropy = entropy_with(&measure, e.estimator, e.samples, cfg.seed)?;
    let max_entropy = uniform_entropy(&s, e.indistinguishable)?;
    let gap = max_entropy.value - entropy.value;
    let bound_respected = gap >= -3.0 * entropy.std_error - 1e-12 * max_entropy.value.abs().max(1.0);
    let summary = format!(
        "entropy {:.6} ± {:.2e} ({}), maximum {:.6}, gap {:.6}",
        entropy.value,
        entropy.std_error,
        serde_json::to_value(entropy.estimator)?.as_str().unwrap_or(""),
        max_entropy.value,
        gap
    );
    let result = EntropyResult {
        family: family.describe(),
        measure: measure.summary(),
        entropy,
        max_entropy,
        gap,
        gap_std_error: entropy.std_error,
        bound_respected,
    };
    Ok((outcome_of(bound_respected), serde_json::to_value(result)?, summary))
}

fn run_restrict(loaded: &LoadedConfig, art: &mut Artifacts) -> Result<Ran> {
    let cfg = &loaded.config;
    let r = &cfg.restrict;
    let report: RestrictionSuiteReport = verify_restriction(
        &r.functionals,
        &r.dims,
        r.energy,
        r.samples,
        cfg.seed,
        r.relative_tolerance,
        r.step_fraction,
    )?;
    art.csv(
        "restrict.csv",
        report.checks.iter().map(|c| {
            (
                c.functional.as_str(),
                c.dim,
                c.restricted.value,
                c.restricted.std_error,
                c.restricted.fd_error,
                c.oracle.value,
                c.oracle.std_error,
                c.difference,
                c.tolerance,
                c.pass,
            )
        }),
    )?;
    let failed = report.checks.iter().filter(|c| !c.pass).count();
    let summary = format!("{} comparisons, {failed} outside tolerance", report.checks.len());
    Ok((outcome_of(report.pass), serde_json::to_value(&report)?, summary))
}

fn initial_state(flow: &FlowConfig, loaded: &LoadedConfig) -> Result<SpectralState> {
    let n = flow.grid_size;
    match &flow.initial {
        InitialCondition::SingleMode { wavevector, amplitude } => SpectralState::single_mode(n, *wavevector, *amplitude),
        InitialCondition::TaylorGreen { amplitude } => SpectralState::taylor_green(n, *amplitude),
        InitialCondition::RandomSolenoidal {
            energy,
            peak_wavenumber,
            seed,
        } => SpectralState::random_solenoidal(
            n,
            *energy,
            *peak_wavenumber,
            seed.unwrap_or_else(|| derive_seed(loaded.config.seed, FLOW_SEED)),
        ),
        InitialCondition::Coefficients { path } => SpectralState::read_csv(&loaded.resolve(path), n),
    }
}

/// The trajectory described by the `[flow]` block.
pub fn configured_trajectory(loaded: &LoadedConfig) -> Result<Trajectory> {
    let flow = &loaded.config.flow;
    let initial = initial_state(flow, loaded)?;
    trajectory(&initial, &flow.params(), &flow.sample_times, flow.cylinder_dim)
}

#[derive(Serialize)]
struct SampleRow {
    time: f64,
    energy: f64,
    dissipation: f64,
    radius: f64,
}

fn sample_rows(t: &Trajectory) -> Vec<SampleRow> {
    t.samples
        .iter()
        .map(|s| SampleRow {
            time: s.time,
            energy: s.energy,
            dissipation: s.dissipation,
            radius: s.surface.radius,
        })
        .collect()
}

#[derive(Serialize)]
struct FlowResult {
    grid_size: usize,
    steps: usize,
    step: f64,
    initial_energy: f64,
    final_energy: f64,
    /// `E(T) - E(0) + ∫ε dt`; Simpson when the step count is even,
    /// trapezoid otherwise.
    budget_residual: f64,
    budget_quadrature: &'static str,
    max_divergence: f64,
    max_reality_defect: f64,
    energy_nonincreasing: bool,
    samples: Vec<SampleRow>,
    surfaces: Vec<EnergySurface>,
}

fn budget(series: &[SeriesPoint]) -> (f64, &'static str) {
    if series.len() < 2 {
        return (0.0, "none");
    }
    let e0 = series[0].energy;
    let e1 = series[series.len() - 1].energy;
    let h = (series[series.len() - 1].time - series[0].time) / (series.len() - 1) as f64;
    let eps: Vec<f64> = series.iter().map(|p| p.dissipation).collect();
    match simpson(&eps, h) {
        Some(integral) => (e1 - e0 + integral, "simpson"),
        None => {
            let integral = h * (eps.iter().sum::<f64>() - 0.5 * (eps[0] + eps[eps.len() - 1]));
            (e1 - e0 + integral, "trapezoid")
        }
    }
}

fn run_flow(loaded: &LoadedConfig, art: &mut Artifacts) -> Result<Ran> {
    let flow = &loaded.config.flow;
    let params = flow.params();
    let initial = initial_state(flow, loaded)?;
    let (series, last) = integrate(&initial, &params)?;
    write_series_csv(&art.path("series.csv"), &series)?;
    let traj = trajectory(&initial, &params, &flow.sample_times, flow.cylinder_dim)?;
    let rows = sample_rows(&traj);
    art.csv("samples.csv", &rows)?;
    if flow.write_states {
        for (i, s) in traj.samples.iter().enumerate() {
            s.state.write_csv(&art.path(&format!("state_{i:03}.csv")))?;
        }
    }
    let (budget_residual, budget_quadrature) = budget(&series);
    let energy_nonincreasing = series
        .windows(2)
        .all(|w| w[1].energy <= w[0].energy * (1.0 + 1e-12) + 1e-300);
    let max_divergence = last.max_divergence();
    let max_reality_defect = last.max_reality_defect();
    let scale = initial.energy().sqrt().max(1.0);
    let pass = max_divergence <= 1e-10 * scale && max_reality_defect <= 1e-10 * scale && energy_nonincreasing;
    let result = FlowResult {
        grid_size: flow.grid_size,
        steps: series.len() - 1,
        step: if series.len() > 1 { series[1].time - series[0].time } else { 0.0 },
        initial_energy: initial.energy(),
        final_energy: last.energy(),
        budget_residual,
        budget_quadrature,
        max_divergence,
        max_reality_defect,
        energy_nonincreasing,
        samples: rows,
        surfaces: traj.surfaces(),
    };
    let summary = format!(
        "{} steps to t = {}: E {:.6e} -> {:.6e}, budget residual {:.2e}",
        result.steps, flow.t_end, result.initial_energy, result.final_energy, budget_residual
    );
    Ok((outcome_of(pass), serde_json::to_value(result)?, summary))
}

#[derive(Serialize)]
struct SelectResult {
    trajectory: Vec<SampleRow>,
    selection: SelectionReport,
}

fn run_select(loaded: &LoadedConfig, art: &mut Artifacts) -> Result<Ran> {
    let cfg = &loaded.config;
    let sel = &cfg.select;
    let traj = configured_trajectory(loaded)?;
    let families: Vec<CandidateFamily> = sel
        .families
        .iter()
        .map(|f| CandidateFamily::from_spec(f.name.clone(), resolve_spec(&f.shape, loaded)).symmetrized(f.symmetrize))
        .collect();
    let options = SelectOptions {
        estimator: sel.estimator,
        indistinguishable: sel.indistinguishable,
    };
    let report = select_with(&families, &traj, options, sel.samples, derive_seed(cfg.seed, SELECT_SEED))?;
    let rows = sample_rows(&traj);
    art.csv("trajectory.csv", &rows)?;
    art.csv(
        "entropy_series.csv",
        report.families.iter().flat_map(|f| {
            f.series
                .times
                .iter()
                .zip(&f.series.entropies)
                .map(move |(t, s)| (f.family.name.as_str(), *t, s.value, s.std_error, estimator_tag(s.estimator)))
        }),
    )?;
    art.csv(
        "margins.csv",
        report
            .margins
            .iter()
            .flat_map(|m| m.gaps.iter().map(move |g| (m.family.as_str(), g.time, g.value, g.std_error))),
    )?;
    let table = report.table();
    art.text("table.txt", &table)?;
    let outcome = report.outcome;
    let result = SelectResult {
        trajectory: rows,
        selection: report,
    };
    Ok((outcome, serde_json::to_value(result)?, table))
}

fn estimator_tag(e: Estimator) -> &'static str {
    match e {
        Estimator::UniformSampling => "uniform-sampling",
        Estimator::ImportanceSampling => "importance-sampling",
        Estimator::ClosedForm => "closed-form",
    }
}
