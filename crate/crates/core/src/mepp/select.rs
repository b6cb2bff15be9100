use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use super::family::{CandidateFamily, FamilyDescription};
use crate::entropy::{production_rate_with, Estimator, ProductionSeries};
use crate::flow::Trajectory;
use crate::measures::Invariance;
use crate::sampling::derive_seed;
use crate::{Error, Result};

pub const SCOPE: &str = "candidate measure families over one common flow trajectory; \
                         not alternative weak solutions of the flow equations";

/// Entropy differences are resolved when they exceed `3 SE` plus this
/// relative floor.
const ROUNDING_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    /// A physical family dominates every competitor.
    Pass,
    /// A physical family is dominated by a competitor.
    Fail,
    /// No family dominates all others within the standard errors.
    Inconclusive,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::Fail => 1,
            Outcome::Inconclusive => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Pass => "pass",
            Outcome::Fail => "fail",
            Outcome::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelectOptions {
    pub estimator: Estimator,
    pub indistinguishable: bool,
}

impl Default for SelectOptions {
    fn default() -> Self {
        SelectOptions {
            estimator: Estimator::ImportanceSampling,
            indistinguishable: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FamilyResult {
    pub family: FamilyDescription,
    pub seed: u64,
    pub invariance: Invariance,
    pub series: ProductionSeries,
    pub mean_entropy: f64,
    pub mean_rate: f64,
}

/// `a` against `b` across the sample times.
#[derive(Debug, Clone, Serialize)]
pub struct Dominance {
    pub a: String,
    pub b: String,
    /// `S_a >= S_b - 3 SE` at every time.
    pub never_below: bool,
    /// Times with `S_a > S_b + 3 SE`.
    pub strictly_above_at: Vec<f64>,
    pub dominates: bool,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GapPoint {
    pub time: f64,
    pub value: f64,
    pub std_error: f64,
}

/// `S_physical - S_family` per time.
#[derive(Debug, Clone, Serialize)]
pub struct Margin {
    pub family: String,
    pub gaps: Vec<GapPoint>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelectionReport {
    pub scope: &'static str,
    pub options: SelectOptions,
    pub samples_per_time: usize,
    pub seed: u64,
    pub cylinder_dim: usize,
    pub times: Vec<f64>,
    pub energies: Vec<f64>,
    pub families: Vec<FamilyResult>,
    pub dominance: Vec<Dominance>,
    pub winner: Option<String>,
    pub physical_dominated_by: Vec<String>,
    pub margins: Vec<Margin>,
    /// Wherever one family's entropy is above another's at every time, its
    /// time-averaged entropy is larger too.
    pub rate_view_consistent: bool,
    pub outcome: Outcome,
}

pub fn select(
    families: &[CandidateFamily],
    trajectory: &Trajectory,
    count: usize,
    seed: u64,
) -> Result<SelectionReport> {
    select_with(families, trajectory, SelectOptions::default(), count, seed)
}

/// Rank families by pointwise entropy dominance along the trajectory.
///
/// `A` dominates `B` when `S_A >= S_B` within `3 SE` at every time and
/// `S_A > S_B` beyond `3 SE` at some time. The winner dominates every other
/// family. Family `i` uses seed `derive_seed(seed, i)` at every time.
pub fn select_with(
    families: &[CandidateFamily],
    trajectory: &Trajectory,
    options: SelectOptions,
    count: usize,
    seed: u64,
) -> Result<SelectionReport> {
    if families.len() < 2 {
        return Err(Error::config(
            "families",
            format!("selection needs at least 2 families, got {}", families.len()),
        ));
    }
    if !families.iter().any(CandidateFamily::is_physical) {
        return Err(Error::config("families", "no physical (uniform) family present"));
    }
    if trajectory.len() < 3 {
        return Err(Error::Precondition(format!(
            "selection needs a trajectory with at least 3 sample times, got {}",
            trajectory.len()
        )));
    }
    let mut names: Vec<&str> = families.iter().map(CandidateFamily::name).collect();
    names.sort_unstable();
    if names.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::config("families", "family names must be unique"));
    }

    let dim = trajectory.cylinder_dim;
    let results = families
        .par_iter()
        .enumerate()
        .map(|(i, f)| {
            let f = f.clone().indistinguishable(options.indistinguishable);
            let measures = trajectory
                .samples
                .iter()
                .map(|s| Ok((s.time, f.build(&s.surface)?)))
                .collect::<Result<Vec<_>>>()?;
            let family_seed = derive_seed(seed, i as u64);
            let series = production_rate_with(&measures, options.estimator, count, family_seed)?;
            Ok(FamilyResult {
                family: f.describe(),
                seed: family_seed,
                invariance: f.invariance(dim)?,
                mean_entropy: series.mean_entropy(),
                mean_rate: series.mean_rate(),
                series,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let times = trajectory.times();
    let mut dominance = Vec::new();
    for a in &results {
        for b in &results {
            if std::ptr::eq(a, b) {
                continue;
            }
            dominance.push(compare(a, b, &times));
        }
    }
    let dominates = |a: &str, b: &str| {
        dominance
            .iter()
            .find(|d| d.a == a && d.b == b)
            .is_some_and(|d| d.dominates)
    };
    let winner = results
        .iter()
        .map(|r| r.family.name.as_str())
        .find(|&w| results.iter().all(|r| r.family.name == w || dominates(w, &r.family.name)))
        .map(str::to_string);

    let physical: Vec<&FamilyResult> = results.iter().filter(|r| r.family.physical).collect();
    let mut physical_dominated_by: Vec<String> = results
        .iter()
        .filter(|r| physical.iter().any(|p| dominates(&r.family.name, &p.family.name)))
        .map(|r| r.family.name.clone())
        .collect();
    physical_dominated_by.dedup();

    let reference = physical[0];
    let margins = results
        .iter()
        .filter(|r| !std::ptr::eq(*r, reference))
        .map(|r| Margin {
            family: r.family.name.clone(),
            gaps: reference
                .series
                .entropies
                .iter()
                .zip(&r.series.entropies)
                .zip(&times)
                .map(|((p, o), &time)| GapPoint {
                    time,
                    value: p.value - o.value,
                    std_error: p.std_error.hypot(o.std_error),
                })
                .collect(),
        })
        .collect();

    let rate_view_consistent = results.iter().all(|a| {
        results.iter().all(|b| {
            let above_everywhere = a
                .series
                .entropies
                .iter()
                .zip(&b.series.entropies)
                .all(|(x, y)| x.value > y.value);
            !above_everywhere || a.mean_entropy > b.mean_entropy
        })
    });

    let outcome = match &winner {
        _ if !physical_dominated_by.is_empty() => Outcome::Fail,
        Some(w) if results.iter().any(|r| &r.family.name == w && r.family.physical) => Outcome::Pass,
        Some(_) => Outcome::Fail,
        None => Outcome::Inconclusive,
    };

    Ok(SelectionReport {
        scope: SCOPE,
        options,
        samples_per_time: count,
        seed,
        cylinder_dim: dim,
        energies: trajectory.energies(),
        times,
        families: results,
        dominance,
        winner,
        physical_dominated_by,
        margins,
        rate_view_consistent,
        outcome,
    })
}

fn compare(a: &FamilyResult, b: &FamilyResult, times: &[f64]) -> Dominance {
    let mut never_below = true;
    let mut strictly_above_at = Vec::new();
    for ((x, y), &t) in a.series.entropies.iter().zip(&b.series.entropies).zip(times) {
        let diff = x.value - y.value;
        let scale = x.value.abs().max(y.value.abs()).max(1.0);
        let threshold = 3.0 * x.std_error.hypot(y.std_error) + ROUNDING_FLOOR * scale;
        if diff < -threshold {
            never_below = false;
        }
        if diff > threshold {
            strictly_above_at.push(t);
        }
    }
    Dominance {
        a: a.family.name.clone(),
        b: b.family.name.clone(),
        never_below,
        dominates: never_below && !strictly_above_at.is_empty(),
        strictly_above_at,
    }
}

impl SelectionReport {
    /// Plain-text summary: verdict, per-family averages, per-time margins.
    pub fn table(&self) -> String {
        let mut s = String::new();
        let winner = self.winner.as_deref().unwrap_or("none");
        let _ = writeln!(s, "outcome: {} (winner: {winner})", self.outcome.as_str());
        let _ = writeln!(s, "scope: {}", self.scope);
        let _ = writeln!(
            s,
            "cylinder dim {}, {} samples per time, seed {}",
            self.cylinder_dim, self.samples_per_time, self.seed
        );
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "{:<24} {:>8} {:>14} {:>14}  dominated by",
            "family", "physical", "mean entropy", "mean rate"
        );
        for r in &self.families {
            let by: Vec<&str> = self
                .dominance
                .iter()
                .filter(|d| d.b == r.family.name && d.dominates)
                .map(|d| d.a.as_str())
                .collect();
            let _ = writeln!(
                s,
                "{:<24} {:>8} {:>14.6} {:>14.6}  {}",
                r.family.name,
                if r.family.physical { "yes" } else { "no" },
                r.mean_entropy,
                r.mean_rate,
                if by.is_empty() { "-".to_string() } else { by.join(", ") }
            );
        }
        if !self.margins.is_empty() {
            let _ = writeln!(s);
            let _ = write!(s, "{:>10}", "time");
            for m in &self.margins {
                let _ = write!(s, " {:>28}", format!("gap vs {}", m.family));
            }
            let _ = writeln!(s);
            for (i, t) in self.times.iter().enumerate() {
                let _ = write!(s, "{t:>10.4}");
                for m in &self.margins {
                    let g = m.gaps[i];
                    let _ = write!(s, " {:>28}", format!("{:.6} ± {:.2e}", g.value, g.std_error));
                }
                let _ = writeln!(s);
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{trajectory, FlowParams, SpectralState};
    use crate::mepp::FamilySpec;

    fn decay(seed: u64) -> Trajectory {
        let s0 = SpectralState::random_solenoidal(8, 1.0, 1.0, seed).unwrap();
        let params = FlowParams::new(0.1, 0.02, 1.0).unwrap();
        trajectory(&s0, &params, &[0.0, 0.25, 0.5, 0.75, 1.0], 3).unwrap()
    }

    fn vmf(name: &str, kappa: f64) -> CandidateFamily {
        CandidateFamily::from_spec(name, FamilySpec::VonMisesFisher { kappa, direction: None })
    }

    #[test]
    fn uniform_beats_vmf() {
        let fams = [CandidateFamily::physical("uniform"), vmf("vmf-2", 2.0)];
        let r = select(&fams, &decay(1), 20_000, 5).unwrap();
        assert_eq!(r.outcome, Outcome::Pass);
        assert_eq!(r.winner.as_deref(), Some("uniform"));
        assert!(r.rate_view_consistent);
        assert!(r.margins[0].gaps.iter().all(|g| g.value > 3.0 * g.std_error));
        assert!(r.table().contains("outcome: pass (winner: uniform)"));
    }

    #[test]
    fn duplicate_uniform_is_inconclusive() {
        let fams = [CandidateFamily::physical("uniform"), CandidateFamily::physical("uniform-duplicate")];
        let r = select(&fams, &decay(2), 1000, 5).unwrap();
        assert_eq!(r.outcome, Outcome::Inconclusive);
        assert!(r.winner.is_none());
        assert_eq!(r.outcome.exit_code(), 3);
    }

    #[test]
    fn config_errors() {
        let t = decay(3);
        assert!(matches!(
            select(&[CandidateFamily::physical("uniform")], &t, 100, 1),
            Err(Error::Config { .. })
        ));
        assert!(matches!(
            select(&[vmf("a", 1.0), vmf("b", 2.0)], &t, 100, 1),
            Err(Error::Config { .. })
        ));
        assert!(matches!(
            select(&[CandidateFamily::physical("u"), vmf("u", 2.0)], &t, 100, 1),
            Err(Error::Config { .. })
        ));
    }

    #[test]
    fn short_trajectory_rejected() {
        let s0 = SpectralState::random_solenoidal(8, 1.0, 1.0, 1).unwrap();
        let params = FlowParams::new(0.1, 0.02, 1.0).unwrap();
        let t = trajectory(&s0, &params, &[0.0, 1.0], 3).unwrap();
        let fams = [CandidateFamily::physical("uniform"), vmf("v", 2.0)];
        assert!(matches!(select(&fams, &t, 100, 1), Err(Error::Precondition(_))));
    }

    #[test]
    fn report_is_deterministic() {
        let fams = [
            CandidateFamily::physical("uniform"),
            vmf("vmf-1", 1.0),
            CandidateFamily::from_spec("tilt", FamilySpec::PolynomialTilt { slope: 2.0, axis: 0 }).symmetrized(true),
        ];
        let t = decay(4);
        let a = serde_json::to_string(&select(&fams, &t, 5000, 9).unwrap()).unwrap();
        let b = serde_json::to_string(&select(&fams, &t, 5000, 9).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}
