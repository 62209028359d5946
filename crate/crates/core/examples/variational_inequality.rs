//! Checks where and how the reflection acts on one path: the variational
//! inequality against random ball-valued test paths, and the share of
//! `|dL|` spent away from the boundary.
//!
//! ```text
//! cargo run --release --example variational_inequality -- [n] [seed]
//! ```

use reflectx::diagnostics::VI_TOLERANCE;
use reflectx::{boundary_support_integral, parse_config, simulate_path, variational_inequality_check};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let spec = parse_config(include_str!("../configs/sweep.toml"))?;
    let mut cfg = spec.base.clone();
    cfg.n_penalty = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1000.0);
    cfg.seed = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);
    let path = simulate_path(&cfg)?;
    println!("n = {}, Var(L) = {:.6}", cfg.n_penalty, path.var_l());

    let vi = variational_inequality_check(&path, 100, 7);
    println!(
        "variational inequality over {} test paths: min {:.3e} (threshold {:.3e}), {} violations",
        vi.trials, vi.vi_min, vi.threshold, vi.violations
    );
    println!("  phi = 0:      {:.6}", vi.zero_test);
    println!("  phi = pi(u):  {:.3e}", vi.projected_test);
    println!("  tolerance used: {VI_TOLERANCE:e} x Var(L)");

    for eps in [0.01, 0.05, 0.1, 0.2] {
        let leak = boundary_support_integral(&path, eps)?;
        println!("share of |dL| with |u| <= 1 - {eps}: {leak:.3e}");
    }
    Ok(())
}
