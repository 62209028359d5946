//! Self-checks behind `reflectx check`.
//!
//! Each check draws its own random inputs from a fixed seed and reports the
//! worst observed error against its threshold.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::field::{inner_h, norm_h, norm_v, BallGeometry, SpectralField};
use crate::harness::config::{DtPolicy, ExperimentSpec};
use crate::harness::experiment::{run_experiment, ExperimentOptions};
use crate::harness::report::render_outputs;
use crate::integrator::{simulate_path, PenaltyRunConfig};
use crate::operators::{CoefficientSet, Convection};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &'static str, worst: f64, threshold: f64, what: &str) -> Self {
        Self {
            name,
            passed: worst <= threshold,
            detail: format!("{what}: worst {worst:.3e}, threshold {threshold:.1e}"),
        }
    }
}

/// Random field whose H norm is spread over `[0, 2]`, so that both the
/// interior and the exterior of the ball are exercised.
fn spread_field(cutoff: usize, rng: &mut ChaCha8Rng) -> SpectralField {
    let mut u = SpectralField::random(cutoff, 2.0, rng);
    let r = norm_h(&u);
    if r > 0.0 {
        u.scale_in_place(rng.random_range(0.0..2.0) / r);
    }
    u
}

/// Projection properties over random pairs: range in the ball, idempotence,
/// non-expansiveness, the obtuse-angle inequality and monotonicity of
/// `u − π(u)`. Returns the worst violation.
pub fn projection_suite(pairs: usize, cutoff: usize, seed: u64) -> f64 {
    let ball = BallGeometry::UNIT;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..pairs {
        let u = spread_field(cutoff, &mut rng);
        let v = spread_field(cutoff, &mut rng);
        let pu = ball.project(&u);
        let pv = ball.project(&v);
        let pvv = ball.project(&pv);
        let eu = &u - &pu;
        let ev = &v - &pv;
        let h = |a: &SpectralField, b: &SpectralField| inner_h(a, b).expect("same cutoff");
        worst = worst
            .max(norm_h(&pu) - 1.0)
            .max(norm_h(&(&pvv - &pv)))
            .max(norm_h(&(&pu - &pv)) - norm_h(&(&u - &v)))
            .max(h(&eu, &(&pv - &pu)))
            .max(-h(&(&eu - &ev), &(&u - &v)));
    }
    worst
}

/// Worst `|b(u,v,w) + b(u,w,v)|` relative to `‖u‖ ‖v‖ ‖w‖` (unit viscosity
/// and damping) over random triples.
pub fn trilinear_skew_suite(triples: usize, cutoff: usize, seed: u64) -> f64 {
    let mut conv = Convection::new(cutoff);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..triples {
        let u = SpectralField::random(cutoff, 1.0, &mut rng);
        let v = SpectralField::random(cutoff, 1.0, &mut rng);
        let w = SpectralField::random(cutoff, 1.0, &mut rng);
        let scale = norm_v(&u, 1.0, 1.0).unwrap() * norm_v(&v, 1.0, 1.0).unwrap() * norm_v(&w, 1.0, 1.0).unwrap();
        let a = conv.trilinear(&u, &v, &w).unwrap();
        let b = conv.trilinear(&u, &w, &v).unwrap();
        worst = worst.max((a + b).abs() / scale);
    }
    worst
}

/// Root of `r + a (r − 1) = s` on `[1, s]` by bisection.
fn bisect_resolvent(s: f64, a: f64) -> f64 {
    let (mut lo, mut hi) = (1.0f64, s.max(1.0));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if mid + a * (mid - 1.0) < s {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Worst gap between the closed-form resolvent radius and a bisection root
/// over a grid of `(|w|, a)` in `[0, 10] × [0, 1e6]`.
pub fn resolvent_suite(grid: usize) -> f64 {
    let ball = BallGeometry::UNIT;
    let mut worst: f64 = 0.0;
    for i in 0..=grid {
        let s = 10.0 * i as f64 / grid as f64;
        for j in 0..=grid {
            let a = if j == 0 { 0.0 } else { 10f64.powf(-3.0 + 9.0 * j as f64 / grid as f64) };
            let expected = if s <= 1.0 { s } else { bisect_resolvent(s, a) };
            worst = worst.max((ball.resolvent_norm(s, a) - expected).abs());
        }
    }
    worst
}

/// Largest one-step energy increase of an unforced, noiseless run, in units
/// of `dt²`.
pub fn energy_decay_excess(cutoff: usize, dt: f64, steps: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u0 = SpectralField::random(cutoff, 2.0, &mut rng);
    u0.scale_in_place(0.9 / norm_h(&u0));
    let coeffs = CoefficientSet::unforced(cutoff, 0.05, 0.5);
    let cfg = PenaltyRunConfig::new(coeffs, u0, 100.0, dt, dt * steps as f64);
    let path = simulate_path(&cfg).expect("unforced run stays bounded");
    path.records
        .windows(2)
        .map(|w| (w[1].h_norm.powi(2) - w[0].h_norm.powi(2)) / (dt * dt))
        .fold(f64::NEG_INFINITY, f64::max)
}

fn determinism_spec() -> ExperimentSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cutoff = 4;
    let mut coeffs = CoefficientSet::unforced(cutoff, 0.05, 0.5);
    coeffs.f_const = SpectralField::random(cutoff, 2.0, &mut rng).scaled(2.0);
    coeffs.sigma_const = vec![SpectralField::random(cutoff, 2.0, &mut rng)];
    let mut u0 = SpectralField::random(cutoff, 2.0, &mut rng);
    u0.scale_in_place(0.8 / norm_h(&u0));
    let mut base = PenaltyRunConfig::new(coeffs, u0, 10.0, 0.01, 0.2);
    base.seed = 11;
    ExperimentSpec {
        base,
        penalty_levels: vec![10.0, 100.0],
        ensemble_size: 3,
        dt_policy: DtPolicy::Fixed,
        outputs: "unused".into(),
        emit_fields: false,
        workers: 1,
    }
}

/// Runs a small experiment twice and reports whether the rendered outputs
/// hash identically.
pub fn determinism_check() -> Result<(bool, String), crate::harness::experiment::HarnessError> {
    let spec = determinism_spec();
    let opts = ExperimentOptions::from_spec(&spec);
    let first = render_outputs(&spec, &run_experiment(&spec, &opts)?)?;
    let second = render_outputs(&spec, &run_experiment(&spec, &opts)?)?;
    Ok((first == second, first.1))
}

/// Runs every check. `quick` shrinks sample counts for interactive use.
pub fn run_all(quick: bool) -> Vec<CheckOutcome> {
    let scale = if quick { 10 } else { 1 };
    let mut out = vec![
        CheckOutcome::new(
            "projection",
            projection_suite(10_000 / scale, 16, 1),
            1e-12,
            "ball projection identities",
        ),
        CheckOutcome::new(
            "trilinear",
            trilinear_skew_suite(1_000 / scale, 16, 2),
            1e-10,
            "b(u,v,w) + b(u,w,v) relative",
        ),
        CheckOutcome::new("resolvent", resolvent_suite(200 / scale), 1e-12, "radius vs bisection"),
        CheckOutcome::new(
            "energy",
            energy_decay_excess(8, 1e-3, 500 / scale, 3),
            10.0,
            "energy increase / dt^2",
        ),
    ];
    out.push(match determinism_check() {
        Ok((same, hash)) => CheckOutcome {
            name: "determinism",
            passed: same,
            detail: format!("repeat run content hash {hash}"),
        },
        Err(e) => CheckOutcome {
            name: "determinism",
            passed: false,
            detail: e.to_string(),
        },
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisection_matches_known_root() {
        assert!((bisect_resolvent(2.0, 1.0) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn quick_checks_pass() {
        for c in run_all(true) {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
