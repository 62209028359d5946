//! Runs an ensemble over several penalty levels and writes the report files.
//!
//! ```text
//! cargo run --release --example penalty_sweep -- [config.toml] [out-dir]
//! ```
//!
//! Defaults to `configs/smoke.toml`; `configs/sweep.toml` is the full K = 16
//! study and takes several minutes per core.

use std::time::Instant;

use reflectx::{emit_report, parse_config, run_experiment, ExperimentOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let mut args = std::env::args().skip(1);
    let config = args
        .next()
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/configs/smoke.toml").into());
    let spec = parse_config(&std::fs::read_to_string(&config)?)?.with_env_overrides()?;
    let out = args.next().map(Into::into).unwrap_or_else(|| spec.outputs.clone());

    let start = Instant::now();
    let report = run_experiment(&spec, &ExperimentOptions::from_spec(&spec))?;
    let emitted = emit_report(&spec, &report, &out, start.elapsed())?;

    println!(
        "{:>8} {:>6} {:>14} {:>12} {:>12} {:>12}",
        "n", "paths", "E sup pen^4", "E Var(L)^2", "E int|u|_V^2", "leak"
    );
    for l in &report.levels {
        println!(
            "{:>8} {:>6} {:>14.3e} {:>12.5} {:>12.5} {:>12.3e}",
            l.n_penalty, l.n_paths, l.sup_penetration4.mean, l.var_l_sq.mean, l.v_norm_budget.mean, l.support_leak.mean
        );
    }
    for c in &report.cauchy {
        println!("gap({}, {}) = {:.4e} ± {:.1e}", c.n, c.m, c.gap.mean, c.gap.stderr);
    }
    println!("{} files in {}, content hash {}", emitted.files.len(), out.display(), emitted.content_hash);
    Ok(())
}
