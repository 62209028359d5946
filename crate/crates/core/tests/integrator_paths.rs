//! Path-level behaviour of the penalized stepper: scalar oracles, time-step
//! refinement, common random numbers and the reflection bookkeeping.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use reflectx::diagnostics::{stieltjes_integral, total_variation, total_variation_fine, uniqueness_gap};
use reflectx::integrator::brownian_increments;
use reflectx::operators::CoefficientSet;
use reflectx::{cauchy_gap, norm_h, simulate_path, PenaltyRunConfig, ReflectionPath, SpectralField, Wavevector};

const K: Wavevector = Wavevector { kx: 1, ky: 0 };

fn mode(cutoff: usize, x: [f64; 2]) -> SpectralField {
    SpectralField::from_solenoidal_modes(cutoff, &[(K, Complex64::new(x[0], x[1]) / 2f64.sqrt())]).unwrap()
}

fn amplitude(u: &SpectralField) -> [f64; 2] {
    let c = u.coeff(K)[1] * 2f64.sqrt();
    [c.re, c.im]
}

/// Single forced mode pushing outward; no noise.
fn deterministic_config(n: f64, dt: f64) -> PenaltyRunConfig {
    let mut c = CoefficientSet::unforced(2, 0.2, 0.5);
    c.f_const = mode(2, [3.0, 1.0]);
    c.f_lin = 0.1;
    PenaltyRunConfig::new(c, mode(2, [0.2, -0.4]), n, dt, 1.0)
}

#[test]
fn deterministic_single_mode_matches_scalar_recursion() {
    let dt = 1e-3;
    let n = 300.0;
    let cfg = deterministic_config(n, dt);
    let path = simulate_path(&cfg).unwrap();

    let decay = (-(0.2 + 0.5) * dt).exp();
    let a = n * dt;
    let mut x = [0.2, -0.4];
    for (j, rec) in path.records.iter().enumerate().skip(1) {
        let w = [
            decay * (x[0] + dt * (3.0 - 0.1 * x[0])),
            decay * (x[1] + dt * (1.0 - 0.1 * x[1])),
        ];
        let r = (w[0] * w[0] + w[1] * w[1]).sqrt();
        let s = if r <= 1.0 { r } else { (r + a) / (1.0 + a) };
        x = [w[0] * s / r, w[1] * s / r];
        assert!((rec.h_norm - s).abs() < 1e-13, "step {j}: {} vs {s}", rec.h_norm);
    }
    let last = amplitude(&path.final_snapshot().u);
    assert!((last[0] - x[0]).abs() < 1e-13 && (last[1] - x[1]).abs() < 1e-13);
    // The forcing holds the state against the boundary.
    assert!(path.var_l() > 0.0 && path.penetration_max > 0.0);
}

#[test]
fn refinement_converges_at_first_order() {
    // Fixed n; halving dt should roughly halve the error against a fine run.
    let reference = simulate_path(&deterministic_config(50.0, 1e-5)).unwrap();
    let target = amplitude(&reference.final_snapshot().u);
    let mut errors = Vec::new();
    for dt in [4e-3, 2e-3, 1e-3, 5e-4] {
        let path = simulate_path(&deterministic_config(50.0, dt)).unwrap();
        let x = amplitude(&path.final_snapshot().u);
        errors.push(((x[0] - target[0]).powi(2) + (x[1] - target[1]).powi(2)).sqrt());
    }
    for w in errors.windows(2) {
        let ratio = w[0] / w[1];
        assert!((1.6..2.5).contains(&ratio), "errors {errors:?}");
    }
}

#[test]
fn penetration_shrinks_like_one_over_n() {
    let dt = 1e-4;
    let pens: Vec<f64> = [1e2, 1e3, 1e4]
        .iter()
        .map(|&n| simulate_path(&deterministic_config(n, dt)).unwrap().penetration_max)
        .collect();
    for w in pens.windows(2) {
        let ratio = w[0] / w[1];
        assert!(ratio > 5.0, "{pens:?}");
    }
}

fn noisy_config(cutoff: usize, n: f64, dt: f64, substeps: usize, seed: u64) -> PenaltyRunConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut c = CoefficientSet::unforced(cutoff, 0.1, 0.5);
    c.f_const = SpectralField::random(cutoff, 2.0, &mut rng).scaled(6.0);
    c.sigma_const = vec![
        SpectralField::random(cutoff, 2.0, &mut rng).scaled(0.5),
        SpectralField::random(cutoff, 2.0, &mut rng).scaled(0.5),
    ];
    c.sigma_lin = 0.1;
    let mut u0 = SpectralField::random(cutoff, 2.0, &mut rng);
    u0.scale_in_place(0.95 / norm_h(&u0));
    let mut cfg = PenaltyRunConfig::new(c, u0, n, dt, 0.2);
    cfg.seed = seed;
    cfg.brownian_substeps = substeps;
    cfg
}

#[test]
fn coupled_levels_share_one_brownian_stream() {
    let coarse = simulate_path(&noisy_config(4, 100.0, 2e-3, 10, 9)).unwrap();
    let fine = simulate_path(&noisy_config(4, 1000.0, 2e-4, 1, 9)).unwrap();
    assert_eq!(coarse.noise_digest, fine.noise_digest);
    let other = simulate_path(&noisy_config(4, 1000.0, 2e-4, 1, 10)).unwrap();
    assert_ne!(coarse.noise_digest, other.noise_digest);
    assert!(cauchy_gap(&coarse, &other, 8.0).is_err());
}

#[test]
fn increments_have_the_right_variance() {
    let dt = 0.01;
    let inc = brownian_increments(3, 20_000, dt, 2);
    let flat: Vec<f64> = inc.iter().flatten().copied().collect();
    let mean = flat.iter().sum::<f64>() / flat.len() as f64;
    let var = flat.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / flat.len() as f64;
    assert!(mean.abs() < 4.0 * (dt / flat.len() as f64).sqrt());
    assert!((var / dt - 1.0).abs() < 0.03, "{}", var / dt);
}

#[test]
fn snapshot_stride_does_not_change_the_path() {
    let mut a = noisy_config(4, 500.0, 1e-3, 1, 2);
    a.snapshot_stride = 1;
    let mut b = a.clone();
    b.snapshot_stride = 7;
    let pa = simulate_path(&a).unwrap();
    let pb = simulate_path(&b).unwrap();
    assert_eq!(pa.records, pb.records);
    for s in &pb.snapshots {
        assert_eq!(&pa.snapshots[s.step].u, &s.u);
        assert_eq!(&pa.snapshots[s.step].l, &s.l);
    }
    assert_eq!(pb.snapshots.last().unwrap().step, pb.steps());
}

#[test]
fn variation_of_l_matches_partition_sums() {
    let path = simulate_path(&noisy_config(4, 300.0, 1e-3, 1, 4)).unwrap();
    assert!(path.var_l() > 0.0, "the run should hit the boundary");
    let ls: Vec<SpectralField> = path.snapshots.iter().map(|s| s.l.clone()).collect();
    let fine = total_variation_fine(&ls).unwrap();
    assert!((fine - path.var_l()).abs() <= 1e-12 * path.var_l());
    // Coarser partitions can only lose variation.
    let mut coarse: Vec<usize> = (0..ls.len()).step_by(10).chain(std::iter::once(ls.len() - 1)).collect();
    coarse.dedup();
    assert!(total_variation(&ls, &coarse).unwrap() <= fine + 1e-12);
    // The final state is |L(T)| ≤ Var(L).
    assert!(norm_h(&path.final_snapshot().l) <= path.var_l() + 1e-12);
}

#[test]
fn stieltjes_sum_matches_recorded_pairings() {
    let path = simulate_path(&noisy_config(3, 300.0, 1e-3, 1, 6)).unwrap();
    let us: Vec<SpectralField> = path.snapshots.iter().map(|s| s.u.clone()).collect();
    let ls: Vec<SpectralField> = path.snapshots.iter().map(|s| s.l.clone()).collect();
    assert!(path.var_l() > 0.0);
    let direct = stieltjes_integral(&us, &ls).unwrap();
    let recorded: f64 = path.records.iter().map(|r| r.u_dot_dl).sum();
    assert!((direct - recorded).abs() <= 1e-12 * path.var_l().max(1.0));
    // ΔL points inward, so (u, dL) ≤ 0.
    assert!(direct < 0.0);
}

#[test]
fn identical_paths_have_zero_gaps() {
    let cfg = noisy_config(3, 300.0, 1e-3, 1, 8);
    let a = simulate_path(&cfg).unwrap();
    let b = simulate_path(&cfg).unwrap();
    assert_eq!(uniqueness_gap(&a, &b).unwrap(), 0.0);
    assert_eq!(cauchy_gap(&a, &b, 8.0).unwrap(), 0.0);
    assert!(cauchy_gap(&a, &b, 4.0).is_err());
}

#[test]
fn larger_lambda_never_increases_the_gap() {
    let a = simulate_path(&noisy_config(3, 100.0, 1e-3, 1, 8)).unwrap();
    let b = simulate_path(&noisy_config(3, 1000.0, 1e-3, 1, 8)).unwrap();
    let g8 = cauchy_gap(&a, &b, 8.0).unwrap();
    let g16 = cauchy_gap(&a, &b, 16.0).unwrap();
    assert!(g8 > 0.0 && g16 <= g8);
}

#[test]
fn synthetic_paths_round_trip_through_from_states() {
    let e = mode(2, [1.0, 0.0]);
    let times = [0.0, 0.1, 0.2];
    let states = [e.scaled(0.5), e.scaled(1.0), e.scaled(1.0)];
    let ls = [SpectralField::zeros(2), e.scaled(-0.25), e.scaled(-0.5)];
    let path = ReflectionPath::from_states(&times, &states, &ls, 1.0, 0.5).unwrap();
    assert!((path.var_l() - 0.5).abs() < 1e-15);
    assert!((path.records[2].u_dot_dl + 0.25).abs() < 1e-15);
}
