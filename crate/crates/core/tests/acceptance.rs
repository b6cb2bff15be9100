//! End-to-end acceptance criteria. Runs as a plain binary (no libtest
//! harness) so every criterion prints its verdict and timing:
//!
//!     cargo test --test acceptance

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use mepp_lab::cli::{execute, Command, ExperimentConfig, LoadedConfig};
use mepp_lab::config_space::{make_surface, verify_projective_chains, DEFAULT_SET_SAMPLES, DEFAULT_SET_SEED};
use mepp_lab::flow::{integrate, trajectory, FlowParams, Solver, SpectralState};
use mepp_lab::mepp::{
    random_candidates, select, verify_prop3, verify_prop4, verify_prop5, verify_vmf_gaps, vmf_gap_quadrature,
    CandidateFamily, Outcome,
};
use mepp_lab::quadrature::simpson;
use mepp_lab::restriction::{verify_restriction, DEFAULT_STEP_FRACTION};
use mepp_lab::sampling::derive_seed;

const SEED: u64 = 0x00ac_ce97;
const ENERGY: f64 = 0.5;

type Check = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Check);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

// ---------------------------------------------------------------------------
// Oracles written independently of the library's special functions.

/// `ln Γ(n/2)` by the half-integer recursion from `Γ(1/2) = √π`, `Γ(1) = 1`.
fn ln_gamma_half_oracle(n: usize) -> f64 {
    let (mut x, mut acc) = if n.is_multiple_of(2) { (1.0, 0.0) } else { (0.5, 0.5 * PI.ln()) };
    while x < n as f64 / 2.0 - 1e-9 {
        acc += x.ln();
        x += 1.0;
    }
    acc
}

/// `ln` of the area of the radius-`r` sphere in `R^n`.
fn ln_area_oracle(n: usize, r: f64) -> f64 {
    2f64.ln() + 0.5 * n as f64 * PI.ln() + (n as f64 - 1.0) * r.ln() - ln_gamma_half_oracle(n)
}

fn ln_factorial_oracle(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Modified Bessel `I_ν(x)` by its power series.
fn bessel_i(nu: f64, x: f64) -> f64 {
    let mut term = (x / 2.0).powf(nu) / gamma_small(nu + 1.0);
    let mut sum = term;
    for k in 1..200 {
        term *= (x / 2.0).powi(2) / (k as f64 * (k as f64 + nu));
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
    }
    sum
}

/// `Γ(x)` for `x` an integer or half-integer.
fn gamma_small(x: f64) -> f64 {
    ln_gamma_half_oracle((2.0 * x).round() as usize).exp()
}

/// vMF entropy gap `E[ln f]` relative to the uniform measure, where `f` is
/// the density against normalized surface measure: closed forms through
/// `A_p(κ) = I_{p/2}(κ)/I_{p/2-1}(κ)`.
fn vmf_gap_oracle(n: usize, kappa: f64) -> f64 {
    let p = n as f64;
    let nu = p / 2.0 - 1.0;
    // E_unif[e^{κ x}] = Γ(p/2) (2/κ)^ν I_ν(κ), and f = e^{κ x} / E_unif[e^{κ x}].
    let ln_c = -ln_gamma_half_oracle(n) + nu * (kappa / 2.0).ln() - bessel_i(nu, kappa).ln();
    ln_c + kappa * bessel_i(p / 2.0, kappa) / bessel_i(nu, kappa)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

// ---------------------------------------------------------------------------

fn physical_entropy() -> Check {
    let mut worst: f64 = 0.0;
    for (i, &n) in [1usize, 2, 3, 5, 10].iter().enumerate() {
        let s = make_surface(n, ENERGY).map_err(e)?;
        let r = verify_prop3(&s, 1_000_000, derive_seed(SEED, 100 + i as u64)).map_err(e)?;
        ensure(r.pass, || format!("n = {n}: library suite failed"))?;
        let ln_area = ln_area_oracle(n, (2.0 * ENERGY).sqrt());
        for c in &r.checks {
            let target = if c.indistinguishable {
                ln_area - ln_factorial_oracle(n)
            } else {
                ln_area
            };
            ensure((c.expected - target).abs() <= 1e-12 * target.abs().max(1.0), || {
                format!("n = {n}: reference ln-mass {} vs oracle {target}", c.expected)
            })?;
            let z = (c.estimate.value - target).abs();
            ensure(z <= 3.0 * c.estimate.std_error + 1e-12 * target.abs().max(1.0), || {
                format!("n = {n}: entropy {} ± {} vs {target}", c.estimate.value, c.estimate.std_error)
            })?;
            if c.estimate.std_error > 0.0 {
                worst = worst.max(z / c.estimate.std_error);
            }
        }
    }
    if worst == 0.0 {
        // A constant density makes every sampled summand identical.
        Ok("n ∈ {1,2,3,5,10}, 1e6 samples: estimates equal ln-area to rounding (zero-variance summands)".into())
    } else {
        Ok(format!("n ∈ {{1,2,3,5,10}}, 1e6 samples, worst |z| = {worst:.2}"))
    }
}

fn entropy_maximization() -> Check {
    let dims = [2usize, 3, 5];
    let shares = [17usize, 17, 16];
    let mut violations = 0;
    let mut candidates = 0;
    let mut worst_rel: f64 = 0.0;
    for (i, (&n, &share)) in dims.iter().zip(&shares).enumerate() {
        let s = make_surface(n, ENERGY).map_err(e)?;
        let mut families = vec![CandidateFamily::physical("uniform")];
        families.extend(random_candidates(n, share, derive_seed(SEED, 200 + i as u64)).map_err(e)?);
        candidates += share;
        let r = verify_prop4(&families, &s, 100_000, derive_seed(SEED, 210 + i as u64)).map_err(e)?;
        violations += r.violations;

        let kappas = [0.5, 1.0, 2.0, 5.0];
        for &k in &kappas {
            let q = vmf_gap_quadrature(n, k);
            let o = vmf_gap_oracle(n, k);
            ensure(rel(q, o) <= 1e-9, || format!("n = {n}, κ = {k}: quadrature {q} vs Bessel series {o}"))?;
        }
        let v = verify_vmf_gaps(&s, &kappas, 10_000_000, derive_seed(SEED, 220 + i as u64), 1e-2).map_err(e)?;
        for c in &v.checks {
            let o = vmf_gap_oracle(n, c.kappa);
            worst_rel = worst_rel.max(rel(c.gap, o));
            ensure(rel(c.gap, o) <= 1e-2, || {
                format!("n = {n}, κ = {}: MC gap {} ± {} vs oracle {o}", c.kappa, c.gap, c.gap_std_error)
            })?;
        }
        ensure(v.monotone, || format!("n = {n}: vMF gaps not increasing in κ"))?;
    }
    ensure(violations == 0, || format!("{violations} dominance violations"))?;
    Ok(format!(
        "{candidates} random candidates on n ∈ {{2,3,5}}: 0 violations; vMF gaps within {worst_rel:.2e} relative"
    ))
}

fn restriction() -> Check {
    let names: Vec<String> = ["one", "norm-sq", "x1-sq", "exp-x1"].map(String::from).to_vec();
    let dims = [1usize, 2, 3, 5, 6];
    let r = verify_restriction(&names, &dims, ENERGY, 1_000_000, derive_seed(SEED, 300), 1e-3, DEFAULT_STEP_FRACTION)
        .map_err(e)?;
    let radius = (2.0 * ENERGY).sqrt();
    for c in &r.checks {
        ensure(c.pass, || {
            format!(
                "{} on n = {}: restricted {} ± {} vs oracle {} ± {}",
                c.functional, c.dim, c.restricted.value, c.restricted.std_error, c.oracle.value, c.oracle.std_error
            )
        })?;
        // Closed forms on the sphere of radius r.
        let area = ln_area_oracle(c.dim, radius).exp();
        let exact = match c.functional.as_str() {
            "one" => Some(area),
            "norm-sq" => Some(radius * radius * area),
            "x1-sq" => Some(radius * radius / c.dim as f64 * area),
            _ => None,
        };
        if let Some(x) = exact {
            let tol = (3.0 * c.restricted.std_error).max(1e-3 * x);
            ensure((c.restricted.value - x).abs() <= tol, || {
                format!("{} on n = {}: restricted {} vs closed form {x}", c.functional, c.dim, c.restricted.value)
            })?;
        }
    }
    Ok(format!("{} functional × dimension pairs agree", r.checks.len()))
}

fn projective_consistency() -> Check {
    let reports = verify_projective_chains(10, DEFAULT_SET_SAMPLES, DEFAULT_SET_SEED).map_err(e)?;
    ensure(reports.len() == 220, || format!("{} chains, expected 220", reports.len()))?;
    let fact = |k: usize| (1..=k as u128).product::<u128>();
    let mut set_checks = 0;
    for r in &reports {
        // g_{ab} carries a!/b! for a <= b; in lowest terms that is 1/(b!/a!).
        let expect = |a: usize, b: usize| {
            let q = fact(b) / fact(a);
            if q == 1 {
                "1".to_string()
            } else {
                format!("1/{q}")
            }
        };
        ensure(r.exact_pass, || format!("({}, {}, {}): composition mismatch", r.l, r.m, r.n))?;
        ensure(
            r.factor_lm == expect(r.l, r.m) && r.factor_mn == expect(r.m, r.n) && r.factor_ln == expect(r.l, r.n),
            || format!("({}, {}, {}): factors {} {} {}", r.l, r.m, r.n, r.factor_lm, r.factor_mn, r.factor_ln),
        )?;
        for c in &r.set_checks {
            set_checks += 1;
            ensure(c.pass, || {
                format!(
                    "({}, {}, {}) {} {}→{}: {} vs {} (SE {})",
                    r.l, r.m, r.n, c.set, c.from_dim, c.to_dim, c.restricted.value, c.direct.value, c.combined_std_error
                )
            })?;
        }
    }
    Ok(format!("220 chains exact; {set_checks} set checks within 3 SE"))
}

fn series_bound() -> Check {
    let mut gaps = Vec::new();
    for b in [0.0f64, 1.0, 2.0] {
        let r = verify_prop5(b, 20).map_err(e)?;
        ensure(r.pass && r.monotone && r.bounded, || format!("box {b}: monotone/bounded failed"))?;
        ensure(r.gap_upper <= 1e-7, || format!("box {b}: final gap bound {}", r.gap_upper))?;
        // Independent f64 partial sums.
        let mut term = 1.0;
        let mut sum = 0.0;
        for (k, s) in r.partial_sums.iter().enumerate() {
            if k > 0 {
                term *= b / k as f64;
            }
            sum += term;
            ensure((s - sum).abs() <= 1e-14 * sum, || format!("box {b}: S_{k} = {s}, expected {sum}"))?;
        }
        ensure((b.exp() - sum).abs() <= 1e-7, || format!("box {b}: e^b - S_20 = {}", b.exp() - sum))?;
        gaps.push(r.gap_upper);
    }
    Ok(format!("boxes {{0,1,2}}, n_max 20, final gaps ≤ {:.1e}", gaps.iter().cloned().fold(0.0, f64::max)))
}

fn state_distance(a: &SpectralState, b: &SpectralState) -> f64 {
    a.amplitudes()
        .iter()
        .zip(b.amplitudes())
        .map(|((_, x), (_, y))| (0..3).map(|i| (x[i] - y[i]).norm_sqr()).sum::<f64>())
        .sum::<f64>()
        .sqrt()
}

fn flow_solver() -> Check {
    let n = 16;
    // Viscous decay of an exact single-mode solution.
    let k = [1, 2, 0];
    let nu = 0.1;
    let dt = 0.01;
    let s0 = SpectralState::single_mode(n, k, 0.7).map_err(e)?;
    let a0 = s0.amplitude(k).unwrap();
    let mut solver = Solver::new(n, nu).map_err(e)?;
    let mut s = s0.clone();
    let mut worst: f64 = 0.0;
    for step in 1..=100 {
        s = solver.step(&s, dt).map_err(e)?;
        let decay = (-nu * 5.0 * dt * step as f64).exp();
        let a = s.amplitude(k).unwrap();
        for i in 0..3 {
            if a0[i].norm() > 0.0 {
                worst = worst.max((a[i] - a0[i] * decay).norm() / (a0[i] * decay).norm());
            }
        }
    }
    ensure(worst <= 1e-8, || format!("single-mode decay relative error {worst:e}"))?;

    // Inviscid energy conservation.
    let tg = SpectralState::taylor_green(n, 1.0).map_err(e)?;
    let mut inviscid = Solver::new(n, 0.0).map_err(e)?;
    let mut s = tg.clone();
    for _ in 0..200 {
        s = inviscid.step(&s, 0.01).map_err(e)?;
    }
    let drift = (s.energy() - tg.energy()).abs() / tg.energy();
    ensure(drift <= 1e-10, || format!("inviscid drift {drift:e}"))?;

    // Energy budget along a random viscous run.
    let init = SpectralState::random_solenoidal(n, 0.5, 2.0, derive_seed(SEED, 600)).map_err(e)?;
    let params = FlowParams::new(0.05, 0.01, 1.0).map_err(e)?;
    let (series, _) = integrate(&init, &params).map_err(e)?;
    let eps: Vec<f64> = series.iter().map(|p| p.dissipation).collect();
    let h = series[1].time - series[0].time;
    let integral = simpson(&eps, h).ok_or("even step count expected")?;
    let residual = (series.last().unwrap().energy - series[0].energy + integral).abs();
    ensure(residual <= 1e-6 * series[0].energy, || format!("energy budget residual {residual:e}"))?;

    // RK4 order by step halving: linear decay against the exact solution,
    // nonlinear Taylor-Green against a fine reference.
    let mut lin = Solver::new(n, 1.0).map_err(e)?;
    let m = SpectralState::single_mode(n, [1, 0, 0], 1.0).map_err(e)?;
    let exact = m.amplitude([1, 0, 0]).unwrap().map(|c| c * (-1.0f64).exp());
    let err = |dt: f64, lin: &mut Solver| -> Result<f64, String> {
        let a = lin.advance(&m, dt, 1.0).map_err(e)?.amplitude([1, 0, 0]).unwrap();
        Ok((0..3).map(|i| (a[i] - exact[i]).norm_sqr()).sum::<f64>().sqrt())
    };
    let linear_order = (err(0.1, &mut lin)? / err(0.05, &mut lin)?).log2();
    let mut nl = Solver::new(n, 0.01).map_err(e)?;
    let reference = nl.advance(&tg, 0.003125, 0.5).map_err(e)?;
    let coarse = state_distance(&nl.advance(&tg, 0.05, 0.5).map_err(e)?, &reference);
    let fine = state_distance(&nl.advance(&tg, 0.025, 0.5).map_err(e)?, &reference);
    let nonlinear_order = (coarse / fine).log2();
    ensure(linear_order >= 3.7 && nonlinear_order >= 3.7, || {
        format!("RK4 order {linear_order:.3} (linear), {nonlinear_order:.3} (nonlinear)")
    })?;
    Ok(format!(
        "decay err {worst:.1e}, inviscid drift {drift:.1e}, budget {:.1e}·E0, order {linear_order:.2}/{nonlinear_order:.2}",
        residual / series[0].energy
    ))
}

fn shipped_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/default.toml")
}

fn selector() -> Check {
    let times = [0.0, 0.25, 0.5, 0.75, 1.0];
    let mut pass = 0;
    let mut inconclusive = 0;
    for i in 0..20u64 {
        let seed = derive_seed(SEED, 700 + i);
        let dim = [2usize, 3, 5][i as usize % 3];
        let nu = 0.02 + 0.08 * (i as f64 / 19.0);
        let init = SpectralState::random_solenoidal(16, 0.2 + 0.05 * i as f64, 1.5 + 0.1 * i as f64, seed).map_err(e)?;
        let params = FlowParams::new(nu, 0.02, 1.0).map_err(e)?;
        let traj = trajectory(&init, &params, &times, dim).map_err(e)?;
        ensure(traj.energies().windows(2).all(|w| w[1] < w[0]), || format!("trajectory {i}: energy not decaying"))?;
        let mut families = vec![CandidateFamily::physical("uniform")];
        families.extend(random_candidates(dim, 3, derive_seed(seed, 1)).map_err(e)?);
        let r = select(&families, &traj, 100_000, derive_seed(seed, 2)).map_err(e)?;
        ensure(r.physical_dominated_by.is_empty(), || {
            format!("trajectory {i}: uniform dominated by {:?}", r.physical_dominated_by)
        })?;
        ensure(r.outcome != Outcome::Fail, || format!("trajectory {i}: verdict fail"))?;
        match r.outcome {
            Outcome::Pass => pass += 1,
            _ => inconclusive += 1,
        }
    }
    let dir = tempfile::tempdir().map_err(e)?;
    let loaded = LoadedConfig::load(&shipped_config()).map_err(e)?;
    let out = execute(&Command::Select, &loaded, dir.path()).map_err(e)?;
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out.report).map_err(e)?).map_err(e)?;
    let winner = report["result"]["selection"]["winner"].as_str().unwrap_or("none").to_string();
    ensure(out.outcome == Outcome::Pass && winner == "uniform", || {
        format!("shipped config: {:?}, winner {winner}", out.outcome)
    })?;
    Ok(format!(
        "20 trajectories: uniform never dominated ({pass} pass, {inconclusive} inconclusive); shipped config pass, winner uniform"
    ))
}

fn determinism() -> Check {
    let mut cfg = ExperimentConfig::with_seed(99);
    cfg.props.prop3.samples = 20_000;
    cfg.props.prop4.samples = 5_000;
    cfg.props.prop4.random_candidates = 6;
    cfg.props.prop4.vmf_samples = 20_000;
    cfg.props.prop1.n_max = 6;
    cfg.restrict.samples = 20_000;
    cfg.entropy.samples = 20_000;
    cfg.select.samples = 20_000;
    cfg.flow.t_end = 0.5;
    cfg.flow.sample_times = vec![0.0, 0.25, 0.5];
    let loaded = LoadedConfig::from_config(cfg, ".").map_err(e)?;
    let commands = [
        Command::VerifyProps { props: vec![1, 3, 4, 5] },
        Command::Entropy,
        Command::Restrict,
        Command::Flow,
        Command::Select,
    ];
    let run = |threads: usize| -> Result<(tempfile::TempDir, Vec<Vec<u8>>), String> {
        let dir = tempfile::tempdir().map_err(e)?;
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(e)?;
        let mut reports = Vec::new();
        for c in &commands {
            let out = pool.install(|| execute(c, &loaded, dir.path())).map_err(e)?;
            reports.push(std::fs::read(&out.report).map_err(e)?);
        }
        Ok((dir, reports))
    };
    let (_a, first) = run(2)?;
    let (_b, second) = run(2)?;
    let (_c, other_threads) = run(1)?;
    for (i, c) in commands.iter().enumerate() {
        ensure(first[i] == second[i], || format!("{}: repeated runs differ", c.name()))?;
        ensure(first[i] == other_threads[i], || format!("{}: 1 vs 2 threads differ", c.name()))?;
    }
    Ok("all five subcommands byte-identical across repeats and thread counts".into())
}

fn main() {
    // libtest flags (e.g. --nocapture, filters) are accepted and ignored.
    let criteria: [Criterion; 8] = [
        ("1 physical entropy", Duration::from_secs(30), physical_entropy),
        ("2 entropy maximization", Duration::from_secs(120), entropy_maximization),
        ("3 surface restriction", Duration::from_secs(120), restriction),
        ("4 projective consistency", Duration::from_secs(30), projective_consistency),
        ("5 series bound", Duration::from_secs(1), series_bound),
        ("6 flow solver", Duration::from_secs(60), flow_solver),
        ("7 selector", Duration::from_secs(300), selector),
        ("8 determinism", Duration::from_secs(300), determinism),
    ];
    let mut failed = 0;
    for (name, budget, f) in criteria {
        let start = Instant::now();
        let result = f();
        let took = start.elapsed();
        let (tag, detail) = match (&result, took <= budget) {
            (Ok(d), true) => ("PASS", d.clone()),
            (Ok(d), false) => ("FAIL", format!("{d}; over budget of {budget:?}")),
            (Err(m), _) => ("FAIL", m.clone()),
        };
        if tag == "FAIL" {
            failed += 1;
        }
        println!("[{tag}] criterion {name}: {detail} ({:.2} s)", took.as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all 8 acceptance criteria passed");
}
