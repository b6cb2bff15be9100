//! Drive the experiment runner from code: build a config, run a
//! subcommand, read back the report. Equivalent to
//! `mepp-lab restrict --config <file> --out <dir>`.
//!
//!     cargo run --release --example experiment_runner

use mepp_lab::cli::{execute, Command, ExperimentConfig, LoadedConfig};

fn main() -> mepp_lab::Result<()> {
    let mut cfg = ExperimentConfig::with_seed(17);
    cfg.restrict.dims = vec![2, 4];
    cfg.restrict.samples = 100_000;
    println!("{}", toml::to_string(&cfg.restrict).expect("serializable"));

    let loaded = LoadedConfig::from_config(cfg, ".")?;
    let out_dir = std::env::temp_dir().join("mepp-lab-example");
    let out = execute(&Command::Restrict, &loaded, &out_dir)?;
    println!("{}", out.summary);
    println!("outcome {:?}; artifacts:", out.outcome);
    for a in &out.artifacts {
        println!("  {}", a.display());
    }
    Ok(())
}
