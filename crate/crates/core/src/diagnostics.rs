//! Path functionals of the penalized solutions: total variation and
//! Stieltjes integrals against `L`, the variational inequality, the
//! boundary-support integral, ensemble moments and coupled-path gaps.
//!
//! Conventions. `L` is piecewise constant on the time grid with a jump
//! `ΔL_j = L(t_j) − L(t_{j−1})` at `t_j`. For a continuous integrand the
//! Riemann–Stieltjes sum over any partition refining the grid converges to
//! `Σ_j (g(t_j), ΔL_j)`, which is what [`stieltjes_integral`] computes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{inner_h, norm_h, norm_v_sq, FieldError, SpectralField};
use crate::integrator::{ReflectionPath, Snapshot};

/// Relative tolerance of the discrete variational inequality.
pub const VI_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

type Result<T> = std::result::Result<T, DiagnosticsError>;

fn arg<T>(msg: impl Into<String>) -> Result<T> {
    Err(DiagnosticsError::Argument(msg.into()))
}

/// `Σ_i |v(t_{p_i}) − v(t_{p_{i−1}})|_H` over the partition `p`.
pub fn total_variation(values: &[SpectralField], partition: &[usize]) -> Result<f64> {
    if partition.is_empty() {
        return arg("partition is empty");
    }
    if values.is_empty() {
        return arg("no values");
    }
    if partition[0] != 0 || *partition.last().unwrap() != values.len() - 1 {
        return arg("partition must contain the first and last index");
    }
    if partition.windows(2).any(|w| w[0] >= w[1]) {
        return arg("partition indices must be strictly increasing");
    }
    let mut total = 0.0;
    for w in partition.windows(2) {
        total += norm_h(&(&values[w[1]] - &values[w[0]]));
    }
    Ok(total)
}

/// Total variation over the finest partition `0, 1, …, len − 1`.
pub fn total_variation_fine(values: &[SpectralField]) -> Result<f64> {
    let partition: Vec<usize> = (0..values.len()).collect();
    total_variation(values, &partition)
}

/// `∫ (g(t), L(dt)) = Σ_{j ≥ 1} (g(t_j), L(t_j) − L(t_{j−1}))_H`.
pub fn stieltjes_integral(integrand: &[SpectralField], l: &[SpectralField]) -> Result<f64> {
    if integrand.len() != l.len() {
        return arg(format!(
            "grid mismatch: {} integrand values vs {} reflection values",
            integrand.len(),
            l.len()
        ));
    }
    let mut total = 0.0;
    for j in 1..l.len() {
        let dl = &l[j] - &l[j - 1];
        total += inner_h(&integrand[j], &dl)?;
    }
    Ok(total)
}

/// Outcome of the discrete variational inequality check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViCheck {
    /// Minimum of `∫ (φ − u, dL)` over the random test paths.
    pub vi_min: f64,
    /// Number of test paths with `∫ (φ − u, dL) < −tol · Var(L)`.
    pub violations: usize,
    pub trials: usize,
    /// `tol · Var(L)`, the admissible negative slack.
    pub threshold: f64,
    /// Value for `φ ≡ 0`.
    pub zero_test: f64,
    /// Value for `φ = π(u)`.
    pub projected_test: f64,
}

/// Random continuous curve in the closed unit ball, spanned by the probe
/// basis: a low-order trigonometric polynomial in time projected onto the
/// ball and scaled by a random radius in `(0, 1]`.
#[derive(Debug, Clone)]
pub struct BallTestPath {
    horizon: f64,
    radius: f64,
    /// `[dim][2 * HARMONICS + 1]` coefficients.
    coeffs: Vec<[f64; 2 * BallTestPath::HARMONICS + 1]>,
}

impl BallTestPath {
    const HARMONICS: usize = 3;

    pub fn random<R: Rng + ?Sized>(dim: usize, horizon: f64, rng: &mut R) -> Self {
        let coeffs = (0..dim)
            .map(|_| {
                let mut c = [0.0; 2 * Self::HARMONICS + 1];
                for (m, x) in c.iter_mut().enumerate() {
                    let order = m.div_ceil(2) as f64;
                    let z: f64 = rng.sample(StandardNormal);
                    *x = z / (1.0 + order);
                }
                c
            })
            .collect();
        let radius = 1.0 - rng.random::<f64>();
        Self { horizon, radius, coeffs }
    }

    pub fn eval(&self, t: f64, out: &mut [f64]) {
        let theta = 2.0 * std::f64::consts::PI * t / self.horizon.max(f64::MIN_POSITIVE);
        for (o, c) in out.iter_mut().zip(&self.coeffs) {
            let mut v = c[0];
            for m in 1..=Self::HARMONICS {
                let a = m as f64 * theta;
                v += c[2 * m - 1] * a.cos() + c[2 * m] * a.sin();
            }
            *o = v;
        }
        let norm = out.iter().map(|x| x * x).sum::<f64>().sqrt();
        let s = self.radius / norm.max(1.0);
        out.iter_mut().for_each(|x| *x *= s);
    }
}

/// Evaluates `∫ (φ(t) − u(t), L(dt))` over `trials` random ball-valued test
/// paths `φ`, plus the fixed choices `φ ≡ 0` and `φ = π(u)`.
pub fn variational_inequality_check(path: &ReflectionPath, trials: usize, seed: u64) -> ViCheck {
    let threshold = VI_TOLERANCE * path.var_l();
    let horizon = path.records.last().map_or(1.0, |r| r.t);
    let dim = path.probe.len();
    let active: Vec<usize> = (1..path.records.len()).filter(|&j| path.records[j].dl_norm > 0.0).collect();

    // φ ≡ 0 and φ = π(u): (π(u) − u, ΔL) = −λ(|u|) (u, ΔL).
    let mut zero_test = 0.0;
    let mut projected_test = 0.0;
    for &j in &active {
        let r = &path.records[j];
        zero_test -= r.u_dot_dl;
        let lambda = if r.h_norm > 1.0 { 1.0 - 1.0 / r.h_norm } else { 0.0 };
        projected_test -= lambda * r.u_dot_dl;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vi_min = zero_test.min(projected_test);
    let mut violations = 0;
    let mut phi = vec![0.0; dim];
    for _ in 0..trials {
        let test = BallTestPath::random(dim, horizon, &mut rng);
        let mut total = 0.0;
        for &j in &active {
            let r = &path.records[j];
            test.eval(r.t, &mut phi);
            let dl = path.probe_dl_at(j);
            let phi_dl: f64 = phi.iter().zip(dl).map(|(a, b)| a * b).sum();
            total += phi_dl - r.u_dot_dl;
        }
        if total < -threshold {
            violations += 1;
        }
        vi_min = vi_min.min(total);
    }
    if active.is_empty() {
        vi_min = 0.0;
    }
    ViCheck {
        vi_min,
        violations,
        trials,
        threshold,
        zero_test,
        projected_test,
    }
}

/// Share of `Var(L)` produced on steps that started at depth at least `ε`
/// inside the ball: `Σ_j |ΔL_j| 1{|u(t_{j−1})| ≤ 1 − ε} / Var(L)`.
pub fn boundary_support_integral(path: &ReflectionPath, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return arg(format!("ε must lie in (0, 1), got {eps}"));
    }
    let var = path.var_l();
    if var <= 0.0 {
        return Ok(0.0);
    }
    let leak: f64 = path
        .records
        .windows(2)
        .filter(|w| w[0].h_norm <= 1.0 - eps)
        .map(|w| w[1].dl_norm)
        .sum();
    Ok((leak / var).clamp(0.0, 1.0))
}

/// Scalar functionals of one path, the inputs of the ensemble estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathStatistics {
    pub sup_h2: f64,
    pub sup_h4: f64,
    /// `n ∫ |u|² (u, u − π(u)) dt`.
    pub penalty_dissipation: f64,
    pub var_l: f64,
    pub v_norm_integral: f64,
    pub sup_penetration4: f64,
    pub support_leak: f64,
    pub vi: ViCheck,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsOptions {
    pub support_eps: f64,
    pub vi_trials: usize,
    pub vi_seed: u64,
}

impl Default for DiagnosticsOptions {
    fn default() -> Self {
        Self {
            support_eps: 0.05,
            vi_trials: 100,
            vi_seed: 0x5eed,
        }
    }
}

impl PathStatistics {
    pub fn from_path(path: &ReflectionPath, opts: &DiagnosticsOptions) -> Result<Self> {
        let recs = &path.records;
        let sup_h = recs.iter().map(|r| r.h_norm).fold(0.0, f64::max);
        let sup_pen = recs.iter().map(|r| r.penetration()).fold(0.0, f64::max);
        let penalty_dissipation = path.n_penalty
            * recs
                .windows(2)
                .map(|w| {
                    let h = w[0].h_norm;
                    h * h * h * (h - 1.0).max(0.0) * (w[1].t - w[0].t)
                })
                .sum::<f64>();
        Ok(Self {
            sup_h2: sup_h.powi(2),
            sup_h4: sup_h.powi(4),
            penalty_dissipation,
            var_l: path.var_l(),
            v_norm_integral: path.v_norm_integral(),
            sup_penetration4: sup_pen.powi(4),
            support_leak: boundary_support_integral(path, opts.support_eps)?,
            vi: variational_inequality_check(path, opts.vi_trials, opts.vi_seed ^ path.seed),
        })
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    /// Standard error of the mean; zero for a single sample.
    pub stderr: f64,
    pub n_samples: usize,
}

impl Estimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                stderr: f64::NAN,
                n_samples: 0,
            };
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            stderr,
            n_samples: n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauchyEntry {
    pub n: f64,
    pub m: f64,
    pub gap: Estimate,
}

/// Ensemble estimates for one penalty level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub n_penalty: f64,
    pub dt: f64,
    pub n_paths: usize,
    /// `E sup_t |u|⁴`.
    pub e_sup_u4: Estimate,
    /// `E sup_t |u|²`.
    pub e_sup_u2: Estimate,
    /// `n E ∫ |u|² (u, u − π(u)) dt`.
    pub penalty_dissipation: Estimate,
    /// `E Var(L)`.
    pub var_l: Estimate,
    /// `E Var(L)²`.
    pub var_l_sq: Estimate,
    /// `E ∫ ‖u‖² dt`.
    pub v_norm_budget: Estimate,
    /// `E sup_t (|u| − 1)₊⁴`.
    pub sup_penetration4: Estimate,
    pub support_eps: f64,
    pub support_leak: Estimate,
    pub vi_min: f64,
    pub vi_tolerance: f64,
    pub vi_violations: usize,
    pub vi_trials: usize,
    pub cauchy_gaps: Vec<CauchyEntry>,
    /// `E [sup_t |u|² + ∫ ‖u‖² dt]`.
    pub m2_norm: Estimate,
}

impl DiagnosticsReport {
    pub fn from_statistics(n_penalty: f64, dt: f64, stats: &[PathStatistics], opts: &DiagnosticsOptions) -> Result<Self> {
        if stats.is_empty() {
            return arg("empty ensemble");
        }
        let est = |f: &dyn Fn(&PathStatistics) -> f64| Estimate::from_samples(&stats.iter().map(f).collect::<Vec<_>>());
        Ok(Self {
            n_penalty,
            dt,
            n_paths: stats.len(),
            e_sup_u4: est(&|s| s.sup_h4),
            e_sup_u2: est(&|s| s.sup_h2),
            penalty_dissipation: est(&|s| s.penalty_dissipation),
            var_l: est(&|s| s.var_l),
            var_l_sq: est(&|s| s.var_l * s.var_l),
            v_norm_budget: est(&|s| s.v_norm_integral),
            sup_penetration4: est(&|s| s.sup_penetration4),
            support_eps: opts.support_eps,
            support_leak: est(&|s| s.support_leak),
            vi_min: stats.iter().map(|s| s.vi.vi_min).fold(f64::INFINITY, f64::min),
            vi_tolerance: VI_TOLERANCE,
            vi_violations: stats.iter().map(|s| s.vi.violations).sum(),
            vi_trials: stats.iter().map(|s| s.vi.trials).sum(),
            cauchy_gaps: Vec::new(),
            m2_norm: est(&|s| s.sup_h2 + s.v_norm_integral),
        })
    }

    /// `(name, estimate)` rows in a fixed order.
    pub fn estimators(&self) -> Vec<(&'static str, Estimate)> {
        vec![
            ("e_sup_u4", self.e_sup_u4),
            ("e_sup_u2", self.e_sup_u2),
            ("penalty_dissipation", self.penalty_dissipation),
            ("var_l", self.var_l),
            ("var_l_sq", self.var_l_sq),
            ("v_norm_budget", self.v_norm_budget),
            ("sup_penetration4", self.sup_penetration4),
            ("support_leak", self.support_leak),
            ("m2_norm", self.m2_norm),
        ]
    }
}

/// Ensemble estimates over complete paths of one penalty level.
pub fn moment_estimates(ensemble: &[ReflectionPath], opts: &DiagnosticsOptions) -> Result<DiagnosticsReport> {
    let first = ensemble.first().ok_or_else(|| DiagnosticsError::Argument("empty ensemble".into()))?;
    if ensemble.iter().any(|p| p.n_penalty.to_bits() != first.n_penalty.to_bits() || p.dt != first.dt) {
        return arg("ensemble paths must share penalty level and time step");
    }
    let stats = ensemble
        .iter()
        .map(|p| PathStatistics::from_path(p, opts))
        .collect::<Result<Vec<_>>>()?;
    DiagnosticsReport::from_statistics(first.n_penalty, first.dt, &stats, opts)
}

fn match_snapshots<'a>(a: &'a ReflectionPath, b: &'a ReflectionPath) -> Result<Vec<(&'a Snapshot, &'a Snapshot)>> {
    let horizon = a.records.last().map_or(1.0, |r| r.t).max(1.0);
    let tol = 1e-9 * horizon;
    let mut pairs = Vec::with_capacity(a.snapshots.len());
    let mut it = b.snapshots.iter().peekable();
    for s in &a.snapshots {
        while it.peek().is_some_and(|o| o.t < s.t - tol) {
            it.next();
        }
        match it.peek() {
            Some(o) if (o.t - s.t).abs() <= tol => pairs.push((s, *o)),
            _ => return arg(format!("grid mismatch: no snapshot at t = {} in the second path", s.t)),
        }
    }
    Ok(pairs)
}

fn check_coupled(a: &ReflectionPath, b: &ReflectionPath) -> Result<()> {
    if a.seed != b.seed {
        return arg(format!("paths use different seeds ({} vs {})", a.seed, b.seed));
    }
    if !a.noise_digest.is_empty() && !b.noise_digest.is_empty() && a.noise_digest != b.noise_digest {
        return arg("paths were driven by different Brownian streams");
    }
    Ok(())
}

/// `exp(-λ ∫_0^t ‖u_n‖²)` at each snapshot of `path`.
pub fn weight_series(path: &ReflectionPath, lambda: f64) -> Vec<f64> {
    path.snapshots
        .iter()
        .map(|s| (-lambda * path.records[s.step].v_norm_integral).exp())
        .collect()
}

/// Weighted gap `sup_t f_n |u_n − u_m|² + Σ f_n(t_j) ‖u_n − u_m‖²(t_j) Δt_j`
/// on the snapshot grid of `path_n`, with `f_n = exp(-λ ∫ ‖u_n‖²)`.
pub fn cauchy_gap(path_n: &ReflectionPath, path_m: &ReflectionPath, lambda: f64) -> Result<f64> {
    if !(lambda > 4.0) {
        return arg(format!("λ must exceed 4, got {lambda}"));
    }
    check_coupled(path_n, path_m)?;
    let pairs = match_snapshots(path_n, path_m)?;
    let weights = weight_series(path_n, lambda);
    let mut sup: f64 = 0.0;
    let mut integral = 0.0;
    for (i, (sn, sm)) in pairs.iter().enumerate() {
        let diff = &sn.u - &sm.u;
        let w = weights[i];
        sup = sup.max(w * norm_h(&diff).powi(2));
        if let Some((next, _)) = pairs.get(i + 1) {
            integral += w * norm_v_sq(&diff, path_n.nu, path_n.gamma)? * (next.t - sn.t);
        }
    }
    Ok(sup + integral)
}

/// `sup_t h(t) |u_a − u_b|²` with `h = exp(-4 ∫ ‖u_a‖²)`.
pub fn uniqueness_gap(path_a: &ReflectionPath, path_b: &ReflectionPath) -> Result<f64> {
    check_coupled(path_a, path_b)?;
    if path_a.n_penalty.to_bits() != path_b.n_penalty.to_bits() {
        return arg("paths use different penalty levels");
    }
    if path_a.snapshots.len() != path_b.snapshots.len() {
        return arg("paths have different snapshot grids");
    }
    let pairs = match_snapshots(path_a, path_b)?;
    let h = weight_series(path_a, 4.0);
    Ok(pairs
        .iter()
        .zip(h)
        .map(|((a, b), w)| w * norm_h(&(&a.u - &b.u)).powi(2))
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Wavevector;
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    fn unit(cutoff: usize) -> SpectralField {
        SpectralField::from_solenoidal_modes(cutoff, &[(Wavevector::new(1, 0), Complex64::new(0.5f64.sqrt(), 0.0))])
            .unwrap()
    }

    #[test]
    fn total_variation_examples() {
        let e = unit(2);
        let z = SpectralField::zeros(2);
        assert_eq!(total_variation_fine(&[e.clone(), e.clone(), e.clone()]).unwrap(), 0.0);
        let tv = total_variation(&[z.clone(), e.clone(), z.clone()], &[0, 1, 2]).unwrap();
        assert_relative_eq!(tv, 2.0, epsilon = 1e-15);
        assert_eq!(total_variation(&[z.clone(), e.clone(), z.clone()], &[0, 2]).unwrap(), 0.0);
        assert!(total_variation(&[z.clone()], &[]).is_err());
        assert!(total_variation(&[z.clone(), z.clone()], &[0, 0, 1]).is_err());
    }

    #[test]
    fn stieltjes_examples() {
        let e = unit(2);
        let z = SpectralField::zeros(2);
        let l = vec![z.clone(), z.clone(), e.scaled(-1.0)];
        let g = vec![z.clone(), z.clone(), e.scaled(2.0)];
        assert_relative_eq!(stieltjes_integral(&g, &l).unwrap(), -2.0, epsilon = 1e-15);
        let zeros = vec![z.clone(); 3];
        assert_eq!(stieltjes_integral(&zeros, &l).unwrap(), 0.0);
        let c = e.scaled(0.3);
        let consts = vec![c.clone(); 3];
        let expect = inner_h(&c, &(&l[2] - &l[0])).unwrap();
        assert_relative_eq!(stieltjes_integral(&consts, &l).unwrap(), expect, epsilon = 1e-15);
        assert!(stieltjes_integral(&zeros[..2], &l).is_err());
    }

    #[test]
    fn support_integral_synthetic() {
        let e = unit(2);
        let times = [0.0, 0.1, 0.2, 0.3, 0.4];
        // |u| = 0.5 before the first jump, 1 before the second.
        let states = vec![e.scaled(0.5), e.scaled(1.0), e.scaled(1.0), e.scaled(1.0), e.scaled(1.0)];
        let l = vec![
            SpectralField::zeros(2),
            e.scaled(-1.0),
            e.scaled(-1.0),
            e.scaled(-2.0),
            e.scaled(-2.0),
        ];
        let path = ReflectionPath::from_states(&times, &states, &l, 1.0, 1.0).unwrap();
        assert_relative_eq!(boundary_support_integral(&path, 0.1).unwrap(), 0.5, epsilon = 1e-15);
        let flat = ReflectionPath::from_states(&times, &states, &vec![SpectralField::zeros(2); 5], 1.0, 1.0).unwrap();
        assert_eq!(boundary_support_integral(&flat, 0.1).unwrap(), 0.0);
        assert!(boundary_support_integral(&flat, 0.0).is_err());
    }

    #[test]
    fn vi_check_without_reflection_is_zero() {
        let e = unit(2);
        let times = [0.0, 0.5, 1.0];
        let states = vec![e.scaled(0.2); 3];
        let path = ReflectionPath::from_states(&times, &states, &vec![SpectralField::zeros(2); 3], 1.0, 1.0).unwrap();
        let vi = variational_inequality_check(&path, 20, 1);
        assert_eq!(vi.vi_min, 0.0);
        assert_eq!(vi.violations, 0);
    }

    #[test]
    fn vi_zero_test_matches_radial_identity() {
        let e = unit(2);
        let times = [0.0, 0.5, 1.0];
        let states = vec![e.scaled(0.9), e.scaled(1.2), e.scaled(1.1)];
        let l = vec![SpectralField::zeros(2), e.scaled(-0.3), e.scaled(-0.5)];
        let path = ReflectionPath::from_states(&times, &states, &l, 1.0, 1.0).unwrap();
        let vi = variational_inequality_check(&path, 50, 2);
        assert_relative_eq!(vi.zero_test, 0.3 * 1.2 + 0.2 * 1.1, epsilon = 1e-14);
        assert!(vi.projected_test >= 0.0);
        assert_eq!(vi.violations, 0);
        assert!(vi.vi_min >= 0.0);
    }

    #[test]
    fn ball_test_paths_stay_in_ball() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut out = vec![0.0; 10];
        for _ in 0..50 {
            let p = BallTestPath::random(10, 2.0, &mut rng);
            for i in 0..=40 {
                p.eval(i as f64 * 0.05, &mut out);
                assert!(out.iter().map(|x| x * x).sum::<f64>() <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn estimate_statistics() {
        let e = Estimate::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert_relative_eq!(e.mean, 2.5);
        assert_relative_eq!(e.stderr, (5.0f64 / 3.0 / 4.0).sqrt(), epsilon = 1e-15);
        assert_eq!(Estimate::from_samples(&[7.0]).stderr, 0.0);
    }

    #[test]
    fn empty_ensemble_is_rejected() {
        assert!(moment_estimates(&[], &DiagnosticsOptions::default()).is_err());
    }
}
