//! Norms against physical-space quadrature, and properties of the ball
//! geometry on random fields.

use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use reflectx::field::{norm_v_sq, BallGeometry};
use reflectx::{ball_project, inner_h, lambda_of, norm_h, penalty_resolvent, phi_of, SpectralField, Wavevector};

/// Velocity and its gradient at `(x, y)` by direct summation of the series.
fn eval(u: &SpectralField, x: f64, y: f64) -> ([f64; 2], [[f64; 2]; 2]) {
    let mut val = [0.0; 2];
    let mut grad = [[0.0; 2]; 2];
    for (k, c) in u.modes() {
        let e = Complex64::from_polar(1.0, k.kx as f64 * x + k.ky as f64 * y);
        for i in 0..2 {
            let term = c[i] * e;
            val[i] += term.re;
            let d = Complex64::i() * term;
            grad[i][0] += (d * k.kx as f64).re;
            grad[i][1] += (d * k.ky as f64).re;
        }
    }
    (val, grad)
}

/// Mean of `|u|²` and of `|∇u|²` over the torus on an `m × m` grid, exact for
/// trigonometric polynomials of degree below `m / 2`.
fn quadrature(u: &SpectralField, m: usize) -> (f64, f64) {
    let (mut l2, mut h1) = (0.0, 0.0);
    for i in 0..m {
        for j in 0..m {
            let (v, g) = eval(u, 2.0 * PI * i as f64 / m as f64, 2.0 * PI * j as f64 / m as f64);
            l2 += v[0] * v[0] + v[1] * v[1];
            h1 += g.iter().flatten().map(|d| d * d).sum::<f64>();
        }
    }
    let cells = (m * m) as f64;
    (l2 / cells, h1 / cells)
}

#[test]
fn h_and_v_norms_match_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for cutoff in [1, 3, 5] {
        for _ in 0..5 {
            let u = SpectralField::random(cutoff, 1.0, &mut rng);
            let (l2, h1) = quadrature(&u, 2 * cutoff + 3);
            let h = norm_h(&u).powi(2);
            assert!((h - l2).abs() <= 1e-10 * l2, "{h} vs {l2}");
            let (nu, gamma) = (0.3, 0.7);
            let v = norm_v_sq(&u, nu, gamma).unwrap();
            let expect = nu * h1 + gamma * l2;
            assert!((v - expect).abs() <= 1e-10 * expect, "{v} vs {expect}");
        }
    }
}

#[test]
fn random_fields_are_divergence_free_in_physical_space() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let u = SpectralField::random(3, 0.5, &mut rng);
    for (x, y) in [(0.1, 0.2), (1.3, 4.0), (5.9, 2.2)] {
        let (_, g) = eval(&u, x, y);
        assert!((g[0][0] + g[1][1]).abs() < 1e-12);
    }
}

#[test]
fn zero_mode_has_no_gradient_contribution() {
    let mut u = SpectralField::zeros(2);
    u.set_mode(Wavevector::ZERO, [Complex64::new(0.6, 0.0), Complex64::new(-0.8, 0.0)])
        .unwrap();
    assert!((norm_h(&u) - 1.0).abs() < 1e-15);
    assert!((norm_v_sq(&u, 5.0, 0.25).unwrap() - 0.25).abs() < 1e-15);
}

fn field_strategy() -> impl Strategy<Value = SpectralField> {
    (any::<u64>(), 1usize..5, 0.0f64..3.0).prop_map(|(seed, cutoff, r)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut u = SpectralField::random(cutoff, 1.0, &mut rng);
        let n = norm_h(&u);
        if n > 0.0 {
            u.scale_in_place(r / n);
        }
        u
    })
}

fn pair_strategy() -> impl Strategy<Value = (SpectralField, SpectralField)> {
    (any::<u64>(), 1usize..5, 0.0f64..3.0, 0.0f64..3.0).prop_map(|(seed, cutoff, r, s)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = SpectralField::random(cutoff, 1.0, &mut rng);
        let mut b = SpectralField::random(cutoff, 1.0, &mut rng);
        a.scale_in_place(r / norm_h(&a).max(1e-300));
        b.scale_in_place(s / norm_h(&b).max(1e-300));
        (a, b)
    })
}

proptest! {
    #[test]
    fn projection_lands_in_ball_and_is_idempotent(u in field_strategy()) {
        let p = ball_project(&u);
        prop_assert!(norm_h(&p) <= 1.0 + 1e-15);
        let pp = ball_project(&p);
        prop_assert!(norm_h(&(&pp - &p)) <= 1e-15);
    }

    #[test]
    fn projection_is_nonexpansive((x, y) in pair_strategy()) {
        let d = norm_h(&(&ball_project(&x) - &ball_project(&y)));
        prop_assert!(d <= norm_h(&(&x - &y)) * (1.0 + 1e-12) + 1e-15);
    }

    #[test]
    fn excess_is_monotone((x, y) in pair_strategy()) {
        let ex = &x - &ball_project(&x);
        let ey = &y - &ball_project(&y);
        prop_assert!(inner_h(&(&ex - &ey), &(&x - &y)).unwrap() >= -1e-12);
    }

    #[test]
    fn lambda_reproduces_the_excess(u in field_strategy()) {
        let r = norm_h(&u);
        let l = lambda_of(r).unwrap();
        prop_assert!((0.0..1.0).contains(&l));
        let diff = &(&u - &ball_project(&u)) - &u.scaled(l);
        prop_assert!(norm_h(&diff) <= 1e-14 * r.max(1.0));
    }

    #[test]
    fn phi_gradient_is_the_excess((u, h) in pair_strategy()) {
        // φ is C¹ with ∇φ(u) = u − π(u): check a central difference.
        let eps = 1e-6;
        let hn = norm_h(&h);
        prop_assume!(hn > 0.0);
        let dir = h.scaled(1.0 / hn);
        let up = &u + &dir.scaled(eps);
        let um = &u - &dir.scaled(eps);
        let fd = (phi_of(&up) - phi_of(&um)) / (2.0 * eps);
        let exact = inner_h(&(&u - &ball_project(&u)), &dir).unwrap();
        prop_assert!((fd - exact).abs() <= 1e-6, "{} vs {}", fd, exact);
    }

    #[test]
    fn resolvent_solves_the_penalty_equation(u in field_strategy(), log_a in -4.0f64..6.0) {
        let a = 10f64.powf(log_a);
        let (v, dl) = penalty_resolvent(&u, a).unwrap();
        // v + a (v − π(v)) = w; evaluating the residual amplifies the
        // rounding in v − π(v) by a.
        let lhs = &v + &(&v - &ball_project(&v)).scaled(a);
        prop_assert!(norm_h(&(&lhs - &u)) <= 1e-14 * (1.0 + a) * norm_h(&u).max(1.0));
        prop_assert!(norm_h(&(&(&v - &dl) - &u)) <= 1e-14 * norm_h(&u).max(1.0));
        prop_assert!(norm_h(&v) <= norm_h(&u) + 1e-15);
        prop_assert!(inner_h(&dl, &v).unwrap() <= 1e-15);
    }

    #[test]
    fn larger_balls_contain_smaller_projections(u in field_strategy(), radius in 0.1f64..3.0) {
        let ball = BallGeometry::new(radius).unwrap();
        let p = ball.project(&u);
        prop_assert!(norm_h(&p) <= radius * (1.0 + 1e-15));
        prop_assert!((ball.penetration(&u) - (norm_h(&u) - radius).max(0.0)).abs() <= 1e-15 * radius.max(1.0));
    }
}
