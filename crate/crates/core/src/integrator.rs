//! Time stepping of the penalized equation
//!
//! ```text
//! du + Au dt = [f(u) + B(u, u) − n (u − π(u))] dt + σ(u) dW
//! ```
//!
//! by Lie splitting. One step of size `dt` is
//!
//! 1. `w = e^{-dt A} [u + dt (B(u,u) + f(u)) + σ(u) ΔW]`, coefficient-wise;
//! 2. `(u', ΔL) = resolvent(w, n dt)`, the implicit penalty step.
//!
//! The reflection process is accumulated as `L(t_j) = Σ_{i ≤ j} ΔL_i`, a
//! piecewise-constant path whose jump at `t_j` points radially inward along
//! `u(t_j)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::field::{inner_h, norm_h, norm_v, BallGeometry, Coeff, FieldError, SpectralField, Wavevector};
use crate::operators::{CoefficientSet, Convection, Forcing};

/// Coefficient magnitude beyond which a path is declared blown up.
pub const BLOW_UP_THRESHOLD: f64 = 1e12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimulationError {
    #[error("invalid run configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("integration failed at step {step} (t = {t}): {reason}")]
    BlowUp { step: usize, t: f64, reason: String },
}

/// Discretization and experiment controls for one penalized path.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyRunConfig {
    /// Penalty level `n`.
    pub n_penalty: f64,
    pub dt: f64,
    pub horizon: f64,
    pub cutoff: usize,
    pub seed: u64,
    pub snapshot_stride: usize,
    /// `λ` in the weight `exp(-λ ∫‖u‖²)`; must exceed 4.
    pub lambda_weight: f64,
    pub coefficients: CoefficientSet,
    pub u0: SpectralField,
    /// Number of fine Brownian increments summed into one step. Runs that
    /// share a seed and the fine increment `dt / brownian_substeps` see the
    /// same Brownian path whatever their step size.
    pub brownian_substeps: usize,
}

impl PenaltyRunConfig {
    pub fn new(coefficients: CoefficientSet, u0: SpectralField, n_penalty: f64, dt: f64, horizon: f64) -> Self {
        Self {
            n_penalty,
            dt,
            horizon,
            cutoff: u0.cutoff(),
            seed: 0,
            snapshot_stride: 1,
            lambda_weight: 8.0,
            coefficients,
            u0,
            brownian_substeps: 1,
        }
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.dt - 1e-9).ceil().max(1.0) as usize
    }

    pub fn validate(&self) -> Result<(), SimulationError> {
        let err = |m: String| Err(SimulationError::Config(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return err(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.horizon >= self.dt) {
            return err(format!("horizon {} must be at least dt {}", self.horizon, self.dt));
        }
        let steps = self.horizon / self.dt;
        if (steps - steps.round()).abs() > 1e-6 * steps.max(1.0) {
            return err(format!("horizon {} is not a whole number of steps of {}", self.horizon, self.dt));
        }
        if !(self.n_penalty > 0.0 && self.n_penalty.is_finite()) {
            return err(format!("penalty level must be positive, got {}", self.n_penalty));
        }
        if !(self.lambda_weight > 4.0) {
            return err(format!("lambda_weight must exceed 4, got {}", self.lambda_weight));
        }
        if self.snapshot_stride == 0 {
            return err("snapshot_stride must be at least 1".into());
        }
        if self.brownian_substeps == 0 {
            return err("brownian_substeps must be at least 1".into());
        }
        if self.cutoff == 0 {
            return err("cutoff must be at least 1".into());
        }
        if self.u0.cutoff() != self.cutoff || self.coefficients.cutoff() != self.cutoff {
            return err(format!("all fields must use cutoff {}", self.cutoff));
        }
        self.coefficients.validate()?;
        self.u0.validate()?;
        let r0 = norm_h(&self.u0);
        if r0 > 1.0 + 1e-12 {
            return err(format!(
                "initial datum must lie in the closed unit ball, |u0|_H = {r0}"
            ));
        }
        Ok(())
    }
}

/// Seeded source of Brownian increments.
///
/// Draws `noise_dim` standard normals per fine substep; a step increment
/// is the sum of `substeps` fine increments of variance `dt / substeps`.
#[derive(Debug, Clone)]
pub struct BrownianSource {
    rng: ChaCha8Rng,
    noise_dim: usize,
    substeps: usize,
    fine_sd: f64,
    hasher: Sha256,
}

impl BrownianSource {
    pub fn new(seed: u64, dt: f64, noise_dim: usize, substeps: usize) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            noise_dim,
            substeps,
            fine_sd: (dt / substeps as f64).sqrt(),
            hasher: Sha256::new(),
        }
    }

    /// Writes the next step increment into `out` (length `noise_dim`).
    pub fn next_increment(&mut self, out: &mut [f64]) {
        out.fill(0.0);
        for _ in 0..self.substeps {
            for o in out.iter_mut() {
                let z: f64 = self.rng.sample(StandardNormal);
                self.hasher.update(z.to_le_bytes());
                *o += z;
            }
        }
        for o in out.iter_mut() {
            *o *= self.fine_sd;
        }
    }

    pub fn noise_dim(&self) -> usize {
        self.noise_dim
    }

    /// Hex SHA-256 of the standard normals consumed so far.
    pub fn digest(&self) -> String {
        hex_digest(self.hasher.clone().finalize().as_slice())
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// `steps` increments of `N(0, dt)` per component, reproducible from `seed`.
pub fn brownian_increments(seed: u64, steps: usize, dt: f64, noise_dim: usize) -> Vec<Vec<f64>> {
    let mut src = BrownianSource::new(seed, dt, noise_dim, 1);
    (0..steps)
        .map(|_| {
            let mut v = vec![0.0; noise_dim];
            src.next_increment(&mut v);
            v
        })
        .collect()
}

/// Fixed orthonormal family of real low-mode fields (`|kx|, |ky| ≤ 1`) used
/// to record the reflection increments in a form that test paths can be
/// integrated against after the fact.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeBasis {
    cutoff: usize,
    /// Sparse basis fields: `(storage index, coefficient)` entries.
    elements: Vec<Vec<(usize, Coeff)>>,
}

impl ProbeBasis {
    pub fn low_modes(cutoff: usize) -> Self {
        use num_complex::Complex64 as C;
        let probe = SpectralField::zeros(cutoff);
        let mut elements = Vec::new();
        let zero = C::new(0.0, 0.0);
        let one = C::new(1.0, 0.0);
        let origin = probe.index_of(Wavevector::ZERO);
        elements.push(vec![(origin, [one, zero])]);
        elements.push(vec![(origin, [zero, one])]);
        if cutoff >= 1 {
            let h = std::f64::consts::FRAC_1_SQRT_2;
            for k in [Wavevector::new(1, 0), Wavevector::new(0, 1), Wavevector::new(1, 1), Wavevector::new(1, -1)] {
                let e = k.solenoidal_direction().expect("non-zero mode");
                let (i, j) = (probe.index_of(k), probe.index_of(-k));
                // √2 e cos(k·x) and √2 e sin(k·x).
                let cos_c = [C::new(e[0] * h, 0.0), C::new(e[1] * h, 0.0)];
                elements.push(vec![(i, cos_c), (j, cos_c)]);
                let sin_c = [C::new(0.0, -e[0] * h), C::new(0.0, -e[1] * h)];
                let sin_m = [sin_c[0].conj(), sin_c[1].conj()];
                elements.push(vec![(i, sin_c), (j, sin_m)]);
            }
        }
        Self { cutoff, elements }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Coordinates `(e_i, u)_H`.
    pub fn coordinates(&self, u: &SpectralField, out: &mut Vec<f64>) {
        let c = u.coeffs();
        out.extend(self.elements.iter().map(|entries| {
            entries
                .iter()
                .map(|(idx, b)| {
                    let x = c[*idx];
                    b[0].re * x[0].re + b[0].im * x[0].im + b[1].re * x[1].re + b[1].im * x[1].im
                })
                .sum::<f64>()
        }));
    }

    /// `Σ_i a_i e_i` as a field.
    pub fn field(&self, coords: &[f64]) -> SpectralField {
        let mut out = SpectralField::zeros(self.cutoff);
        for (entries, &a) in self.elements.iter().zip(coords) {
            for (idx, b) in entries {
                let c = &mut out.coeffs_mut()[*idx];
                c[0] += b[0] * a;
                c[1] += b[1] * a;
            }
        }
        out
    }
}

/// Per-grid-point scalar record of a path. Entry `j` describes the state
/// `u(t_j)` and the jump `ΔL_j = L(t_j) − L(t_{j−1})` that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepRecord {
    pub t: f64,
    /// `|u(t_j)|_H`.
    pub h_norm: f64,
    /// `‖u(t_j)‖`.
    pub v_norm: f64,
    /// `|w_j|_H`, the norm before the penalty step.
    pub pre_norm: f64,
    /// `|ΔL_j|_H`.
    pub dl_norm: f64,
    /// `(u(t_j), ΔL_j)_H`.
    pub u_dot_dl: f64,
    /// `Σ_{i ≤ j} |ΔL_i|_H`.
    pub var_l: f64,
    /// `∫_0^{t_j} ‖u‖² ds`, left-endpoint rule.
    pub v_norm_integral: f64,
}

impl StepRecord {
    pub fn penetration(&self) -> f64 {
        (self.h_norm - 1.0).max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub u: SpectralField,
    pub l: SpectralField,
}

/// One simulated trajectory of the penalized equation.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionPath {
    pub n_penalty: f64,
    pub dt: f64,
    pub seed: u64,
    pub nu: f64,
    pub gamma: f64,
    /// `steps + 1` records, the first at `t = 0`.
    pub records: Vec<StepRecord>,
    /// States every `snapshot_stride` steps, always including both ends.
    pub snapshots: Vec<Snapshot>,
    pub probe: ProbeBasis,
    /// Probe coordinates of each `ΔL_j`, `probe.len()` values per record.
    pub probe_dl: Vec<f64>,
    pub penetration_max: f64,
    /// Hash of the fine Brownian stream consumed by the path.
    pub noise_digest: String,
}

impl ReflectionPath {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.t)
    }

    pub fn energy_series(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.h_norm)
    }

    pub fn steps(&self) -> usize {
        self.records.len() - 1
    }

    pub fn var_l(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.var_l)
    }

    pub fn v_norm_integral(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.v_norm_integral)
    }

    pub fn final_snapshot(&self) -> &Snapshot {
        self.snapshots.last().expect("paths always hold the initial snapshot")
    }

    pub fn probe_dl_at(&self, j: usize) -> &[f64] {
        let p = self.probe.len();
        &self.probe_dl[j * p..(j + 1) * p]
    }

    /// Builds a path from full state sequences `u(t_j)`, `L(t_j)`; every
    /// entry becomes a snapshot. Intended for synthetic checks.
    pub fn from_states(
        times: &[f64],
        states: &[SpectralField],
        reflection: &[SpectralField],
        nu: f64,
        gamma: f64,
    ) -> Result<Self, SimulationError> {
        if times.is_empty() || times.len() != states.len() || times.len() != reflection.len() {
            return Err(SimulationError::Config("time, state and reflection sequences must align".into()));
        }
        let cutoff = states[0].cutoff();
        let probe = ProbeBasis::low_modes(cutoff);
        let mut records = Vec::with_capacity(times.len());
        let mut probe_dl = Vec::new();
        let mut var_l = 0.0;
        let mut vint = 0.0;
        let mut pen_max: f64 = 0.0;
        for j in 0..times.len() {
            let u = &states[j];
            let dl = if j == 0 {
                reflection[0].clone()
            } else {
                &reflection[j] - &reflection[j - 1]
            };
            if j > 0 {
                let vn = norm_v(&states[j - 1], nu, gamma)?;
                vint += vn * vn * (times[j] - times[j - 1]);
            }
            let dl_norm = if j == 0 { 0.0 } else { norm_h(&dl) };
            var_l += dl_norm;
            let h = norm_h(u);
            pen_max = pen_max.max(h - 1.0);
            records.push(StepRecord {
                t: times[j],
                h_norm: h,
                v_norm: norm_v(u, nu, gamma)?,
                pre_norm: norm_h(&(u - &dl)),
                dl_norm,
                u_dot_dl: if j == 0 { 0.0 } else { inner_h(u, &dl)? },
                var_l,
                v_norm_integral: vint,
            });
            if j == 0 {
                probe_dl.extend(std::iter::repeat_n(0.0, probe.len()));
            } else {
                probe.coordinates(&dl, &mut probe_dl);
            }
        }
        let snapshots = (0..times.len())
            .map(|j| Snapshot {
                step: j,
                t: times[j],
                u: states[j].clone(),
                l: reflection[j].clone(),
            })
            .collect();
        let dt = if times.len() > 1 { times[1] - times[0] } else { 0.0 };
        Ok(Self {
            n_penalty: f64::NAN,
            dt,
            seed: 0,
            nu,
            gamma,
            records,
            snapshots,
            probe,
            probe_dl,
            penetration_max: pen_max.max(0.0),
            noise_digest: String::new(),
        })
    }
}

/// Result of one split step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub u: SpectralField,
    pub dl: SpectralField,
    pub pre_norm: f64,
}

/// Stateful stepper holding the work buffers for one path.
pub struct PenalizedIntegrator<'a> {
    forcing: &'a dyn Forcing,
    nu: f64,
    gamma: f64,
    convection: Option<Convection>,
    n_penalty: f64,
    dt: f64,
    decay: Vec<f64>,
    ball: BallGeometry,
    work: SpectralField,
    nonlinear: SpectralField,
}

impl<'a> PenalizedIntegrator<'a> {
    pub fn new(cfg: &'a PenaltyRunConfig) -> Self {
        let c = &cfg.coefficients;
        Self::with_forcing(c, c.nu, c.gamma, c.convection, cfg.cutoff, cfg.n_penalty, cfg.dt)
    }

    /// Integrator with a user-supplied drift and diffusion.
    pub fn with_forcing(
        forcing: &'a dyn Forcing,
        nu: f64,
        gamma: f64,
        convection: bool,
        cutoff: usize,
        n_penalty: f64,
        dt: f64,
    ) -> Self {
        let template = SpectralField::zeros(cutoff);
        let decay = (0..template.coeffs().len())
            .map(|i| {
                let k = template.wavevector_at(i);
                (-dt * (nu * k.norm_sq() + gamma)).exp()
            })
            .collect();
        Self {
            forcing,
            nu,
            gamma,
            convection: convection.then(|| Convection::new(cutoff)),
            n_penalty,
            dt,
            decay,
            ball: BallGeometry::UNIT,
            work: template.clone(),
            nonlinear: template,
        }
    }

    /// Advances `u` by one step with Brownian increment `dw`.
    pub fn step(&mut self, u: &SpectralField, dw: &[f64]) -> Result<StepOutcome, SimulationError> {
        let dt = self.dt;
        self.work.clone_from(u);
        if let Some(conv) = self.convection.as_mut() {
            conv.apply_self_into(u, &mut self.nonlinear)?;
            self.work.axpy(dt, &self.nonlinear)?;
        }
        self.forcing.add_drift(u, dt, &mut self.work);
        self.forcing.add_diffusion(u, dw, &mut self.work);
        for (c, m) in self.work.coeffs_mut().iter_mut().zip(&self.decay) {
            c[0] *= *m;
            c[1] *= *m;
        }
        let pre_norm = norm_h(&self.work);
        let (v, dl) = self.ball.resolvent(&self.work, self.n_penalty * dt)?;
        Ok(StepOutcome { u: v, dl, pre_norm })
    }

    pub fn v_norm(&self, u: &SpectralField) -> Result<f64, FieldError> {
        norm_v(u, self.nu, self.gamma)
    }
}

fn guard(u: &SpectralField, step: usize, t: f64) -> Result<(), SimulationError> {
    if !u.is_finite() {
        return Err(SimulationError::BlowUp {
            step,
            t,
            reason: "non-finite coefficient".into(),
        });
    }
    let m = u.max_abs();
    if m > BLOW_UP_THRESHOLD {
        return Err(SimulationError::BlowUp {
            step,
            t,
            reason: format!("coefficient magnitude {m:e} exceeds {BLOW_UP_THRESHOLD:e}"),
        });
    }
    Ok(())
}

/// Simulates one penalized path with the built-in affine coefficients.
pub fn simulate_path(cfg: &PenaltyRunConfig) -> Result<ReflectionPath, SimulationError> {
    simulate_path_with(cfg, &cfg.coefficients)
}

/// Simulates one path, taking drift and diffusion from `forcing` and the
/// remaining parameters from `cfg`.
pub fn simulate_path_with(cfg: &PenaltyRunConfig, forcing: &dyn Forcing) -> Result<ReflectionPath, SimulationError> {
    cfg.validate()?;
    let c = &cfg.coefficients;
    let mut integrator = PenalizedIntegrator::with_forcing(
        forcing,
        c.nu,
        c.gamma,
        c.convection,
        cfg.cutoff,
        cfg.n_penalty,
        cfg.dt,
    );
    let mut noise = BrownianSource::new(cfg.seed, cfg.dt, forcing.noise_dim(), cfg.brownian_substeps);
    let steps = cfg.steps();
    let probe = ProbeBasis::low_modes(cfg.cutoff);

    let mut u = cfg.u0.clone();
    let mut l = SpectralField::zeros(cfg.cutoff);
    let mut records = Vec::with_capacity(steps + 1);
    let mut probe_dl = Vec::with_capacity((steps + 1) * probe.len());
    let mut snapshots = vec![Snapshot {
        step: 0,
        t: 0.0,
        u: u.clone(),
        l: l.clone(),
    }];
    let h0 = norm_h(&u);
    let mut v_prev = integrator.v_norm(&u)?;
    records.push(StepRecord {
        t: 0.0,
        h_norm: h0,
        v_norm: v_prev,
        pre_norm: h0,
        ..StepRecord::default()
    });
    probe_dl.extend(std::iter::repeat_n(0.0, probe.len()));
    let mut var_l = 0.0;
    let mut vint = 0.0;
    let mut pen_max = (h0 - 1.0).max(0.0);
    let mut dw = vec![0.0; forcing.noise_dim()];

    for j in 1..=steps {
        let t = j as f64 * cfg.dt;
        noise.next_increment(&mut dw);
        vint += v_prev * v_prev * cfg.dt;
        let out = integrator.step(&u, &dw)?;
        guard(&out.u, j, t)?;
        u = out.u;
        l += &out.dl;
        let dl_norm = norm_h(&out.dl);
        var_l += dl_norm;
        let h = norm_h(&u);
        pen_max = pen_max.max(h - 1.0);
        v_prev = integrator.v_norm(&u)?;
        records.push(StepRecord {
            t,
            h_norm: h,
            v_norm: v_prev,
            pre_norm: out.pre_norm,
            dl_norm,
            u_dot_dl: if dl_norm > 0.0 { inner_h(&u, &out.dl)? } else { 0.0 },
            var_l,
            v_norm_integral: vint,
        });
        probe.coordinates(&out.dl, &mut probe_dl);
        if j % cfg.snapshot_stride == 0 || j == steps {
            snapshots.push(Snapshot {
                step: j,
                t,
                u: u.clone(),
                l: l.clone(),
            });
        }
    }

    Ok(ReflectionPath {
        n_penalty: cfg.n_penalty,
        dt: cfg.dt,
        seed: cfg.seed,
        nu: c.nu,
        gamma: c.gamma,
        records,
        snapshots,
        probe,
        probe_dl,
        penetration_max: pen_max,
        noise_digest: noise.digest(),
    })
}
