//! Simulates one penalized path and prints its energy trace and reflection
//! statistics.
//!
//! ```text
//! cargo run --release --example single_path -- [config.toml] [n] [seed]
//! ```

use std::time::Instant;

use reflectx::diagnostics::{DiagnosticsOptions, PathStatistics};
use reflectx::{parse_config, simulate_path};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let config = args
        .next()
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/configs/sweep.toml").into());
    let spec = parse_config(&std::fs::read_to_string(&config)?)?;
    let mut cfg = spec.base.clone();
    if let Some(n) = args.next() {
        cfg.n_penalty = n.parse()?;
    }
    if let Some(seed) = args.next() {
        cfg.seed = seed.parse()?;
    }

    let start = Instant::now();
    let path = simulate_path(&cfg)?;
    let elapsed = start.elapsed();
    println!(
        "n = {}, dt = {}, {} steps in {:.2?} ({:.1} us/step)",
        cfg.n_penalty,
        cfg.dt,
        path.steps(),
        elapsed,
        elapsed.as_secs_f64() * 1e6 / path.steps() as f64
    );

    println!("{:>8} {:>10} {:>12} {:>12}", "t", "|u|_H", "||u||_V", "Var(L)");
    let every = (path.records.len() / 10).max(1);
    for r in path.records.iter().step_by(every) {
        println!("{:>8.3} {:>10.6} {:>12.6} {:>12.6}", r.t, r.h_norm, r.v_norm, r.var_l);
    }

    let stats = PathStatistics::from_path(&path, &DiagnosticsOptions::default())?;
    println!("sup |u|^2         {:.6}", stats.sup_h2);
    println!("sup (|u|-1)+^4    {:.3e}", stats.sup_penetration4);
    println!("Var(L)            {:.6}", stats.var_l);
    println!("int ||u||^2 dt    {:.6}", stats.v_norm_integral);
    println!("support leak      {:.3e}", stats.support_leak);
    println!("vi_min            {:.3e} ({} violations)", stats.vi.vi_min, stats.vi.violations);
    Ok(())
}
