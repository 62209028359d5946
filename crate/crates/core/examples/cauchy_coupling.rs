//! Drives three penalty levels with one Brownian path and measures how fast
//! the penalized solutions approach each other.
//!
//! ```text
//! cargo run --release --example cauchy_coupling -- [seed]
//! ```
//!
//! Each level uses `dt = dt0 · n0 / n`; coarser levels sum the increments of
//! the finest one, so all three see the same noise.

use reflectx::{cauchy_gap, parse_config, simulate_path, uniqueness_gap, DtPolicy};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(3);
    let mut spec = parse_config(include_str!("../configs/sweep.toml"))?;
    spec.dt_policy = DtPolicy::Scaled;
    spec.base.horizon = 0.5;

    let mut paths = Vec::new();
    for plan in spec.level_plans()? {
        let path = simulate_path(&spec.level_config(&plan, seed))?;
        println!(
            "n = {:>7}: dt = {:.1e}, {} steps, Var(L) = {:.6}, noise {}",
            plan.n_penalty,
            plan.dt,
            path.steps(),
            path.var_l(),
            &path.noise_digest[..16]
        );
        paths.push(path);
    }
    for pair in paths.windows(2) {
        println!(
            "gap(n = {}, m = {}) = {:.4e}",
            pair[0].n_penalty,
            pair[1].n_penalty,
            cauchy_gap(&pair[0], &pair[1], spec.base.lambda_weight)?
        );
    }
    let again = simulate_path(&spec.level_config(&spec.level_plans()?[0], seed))?;
    println!("rerun of the first level: uniqueness gap {:.1e}", uniqueness_gap(&paths[0], &again)?);
    Ok(())
}
