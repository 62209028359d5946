//! Operators of the damped 2D Navier–Stokes system on the torus.
//!
//! * `A = -ν Δ + γ`, diagonal with symbol `ν|k|² + γ`;
//! * `B(u, v) = P[(u·∇)v]`, the Leray-projected convection term, evaluated
//!   pseudo-spectrally on an `N × N` grid with `N ≥ 3K + 1` so the product of
//!   two degree-`K` trigonometric polynomials never aliases back onto the
//!   retained modes (the 2/3 rule). The discrete `B` is therefore the exact
//!   Galerkin truncation, and `b(u, v, v) = 0` holds to roundoff;
//! * affine drift `f(u) = f_const − f_lin u` and noise `σ_i(u) = σ_const,i + σ_lin u`.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::field::{inner_h, stokes_symbol, FieldError, SpectralField, Wavevector};

/// Parameters and coefficient fields of one problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSet {
    pub nu: f64,
    pub gamma: f64,
    pub f_const: SpectralField,
    pub f_lin: f64,
    /// One amplitude field per independent scalar Brownian motion.
    pub sigma_const: Vec<SpectralField>,
    pub sigma_lin: f64,
    /// Disables `B` (linear Stokes dynamics); used for reduced models.
    pub convection: bool,
}

impl CoefficientSet {
    /// Coefficients with zero forcing and a single silent noise channel.
    pub fn unforced(cutoff: usize, nu: f64, gamma: f64) -> Self {
        Self {
            nu,
            gamma,
            f_const: SpectralField::zeros(cutoff),
            f_lin: 0.0,
            sigma_const: vec![SpectralField::zeros(cutoff)],
            sigma_lin: 0.0,
            convection: true,
        }
    }

    pub fn cutoff(&self) -> usize {
        self.f_const.cutoff()
    }

    pub fn noise_dim(&self) -> usize {
        self.sigma_const.len()
    }

    pub fn validate(&self) -> Result<(), FieldError> {
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(FieldError::Parameter(format!("nu must be positive, got {}", self.nu)));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(FieldError::Parameter(format!("gamma must be positive, got {}", self.gamma)));
        }
        if !self.f_lin.is_finite() || !self.sigma_lin.is_finite() {
            return Err(FieldError::Parameter("linear gains must be finite".into()));
        }
        if self.sigma_const.is_empty() {
            return Err(FieldError::Parameter("noise_dim must be at least 1".into()));
        }
        self.f_const.validate()?;
        for s in &self.sigma_const {
            self.f_const.check_same_cutoff(s)?;
            s.validate()?;
        }
        Ok(())
    }

    pub fn symbol(&self, k: Wavevector) -> f64 {
        stokes_symbol(k, self.nu, self.gamma)
    }
}

/// Drift and diffusion coefficients of the stochastic equation.
///
/// [`CoefficientSet`] provides the built-in affine family; other
/// implementations must be Lipschitz from `H` into `H` and keep fields
/// real and divergence-free.
pub trait Forcing: Send + Sync {
    fn noise_dim(&self) -> usize;

    /// `out += scale · f(u)`.
    fn add_drift(&self, u: &SpectralField, scale: f64, out: &mut SpectralField);

    /// `out += Σ_i σ_i(u) dW_i`.
    fn add_diffusion(&self, u: &SpectralField, dw: &[f64], out: &mut SpectralField);
}

impl Forcing for CoefficientSet {
    fn noise_dim(&self) -> usize {
        self.sigma_const.len()
    }

    fn add_drift(&self, u: &SpectralField, scale: f64, out: &mut SpectralField) {
        out.axpy(scale, &self.f_const).expect("drift cutoff");
        if self.f_lin != 0.0 {
            out.axpy(-scale * self.f_lin, u).expect("drift cutoff");
        }
    }

    fn add_diffusion(&self, u: &SpectralField, dw: &[f64], out: &mut SpectralField) {
        for (s, &w) in self.sigma_const.iter().zip(dw) {
            if w != 0.0 {
                out.axpy(w, s).expect("noise cutoff");
            }
        }
        if self.sigma_lin != 0.0 {
            let total: f64 = dw.iter().sum();
            out.axpy(self.sigma_lin * total, u).expect("noise cutoff");
        }
    }
}

/// `Au`, coefficient-wise multiplication by `ν|k|² + γ`.
pub fn apply_a(u: &SpectralField, c: &CoefficientSet) -> SpectralField {
    let mut out = u.clone();
    out.apply_multiplier(|k| c.symbol(k));
    out
}

/// `e^{-tA} u`.
pub fn stokes_semigroup(u: &SpectralField, c: &CoefficientSet, t: f64) -> SpectralField {
    let mut out = u.clone();
    out.apply_multiplier(|k| (-t * c.symbol(k)).exp());
    out
}

/// `f(u) = f_const − f_lin u`.
pub fn drift_f(u: &SpectralField, c: &CoefficientSet) -> SpectralField {
    let mut out = SpectralField::zeros(u.cutoff());
    c.add_drift(u, 1.0, &mut out);
    out
}

/// `σ_i(u) = σ_const,i + σ_lin u`, one field per noise channel.
pub fn noise_sigma(u: &SpectralField, c: &CoefficientSet) -> Vec<SpectralField> {
    c.sigma_const
        .iter()
        .map(|s| {
            let mut out = s.clone();
            if c.sigma_lin != 0.0 {
                out.axpy(c.sigma_lin, u).expect("noise cutoff");
            }
            out
        })
        .collect()
}

/// Leray projection onto divergence-free modes; the zero mode is made real.
pub fn leray_project(u: &mut SpectralField) {
    let side = u.side();
    let cut = u.cutoff() as i32;
    for (i, c) in u.coeffs_mut().iter_mut().enumerate() {
        let kx = (i / side) as i32 - cut;
        let ky = (i % side) as i32 - cut;
        if kx == 0 && ky == 0 {
            c[0] = Complex64::new(c[0].re, 0.0);
            c[1] = Complex64::new(c[1].re, 0.0);
            continue;
        }
        let (fx, fy) = (kx as f64, ky as f64);
        let dot = c[0] * fx + c[1] * fy;
        let s = dot / (fx * fx + fy * fy);
        c[0] -= s * fx;
        c[1] -= s * fy;
    }
}

/// Smallest grid size `≥ 3K + 1` whose prime factors are 2 and 3.
pub fn dealiased_grid_size(cutoff: usize) -> usize {
    let mut n = 3 * cutoff + 1;
    loop {
        let mut m = n;
        for p in [2, 3] {
            while m % p == 0 {
                m /= p;
            }
        }
        if m == 1 {
            return n;
        }
        n += 1;
    }
}

/// Pseudo-spectral evaluator of `B`, owning its FFT plans and work buffers.
///
/// Not shareable between threads while in use; give every worker its own.
pub struct Convection {
    cutoff: usize,
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    grid_a: Vec<Complex64>,
    grid_b: Vec<Complex64>,
    grid_c: Vec<Complex64>,
    products: [Vec<Complex64>; 2],
}

impl std::fmt::Debug for Convection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Convection")
            .field("cutoff", &self.cutoff)
            .field("grid", &self.n)
            .finish()
    }
}

impl Convection {
    pub fn new(cutoff: usize) -> Self {
        let n = dealiased_grid_size(cutoff);
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let scratch_len = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
        let zero = Complex64::new(0.0, 0.0);
        Self {
            cutoff,
            n,
            fwd,
            inv,
            scratch: vec![zero; scratch_len],
            grid_a: vec![zero; n * n],
            grid_b: vec![zero; n * n],
            grid_c: vec![zero; n * n],
            products: [vec![zero; n * n], vec![zero; n * n]],
        }
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn grid_size(&self) -> usize {
        self.n
    }

    /// Loads `c_x + i c_y` into `out` (layout `[kx][ky]`) and transforms to
    /// physical space; on return `out[j*n + i] = u_x + i u_y` at `(x_i, y_j)`.
    fn to_physical(&mut self, u: &SpectralField, which: u8) {
        let n = self.n;
        let cut = self.cutoff as i32;
        let side = u.side();
        let zero = Complex64::new(0.0, 0.0);
        let (spec, phys) = match which {
            0 => (&mut self.grid_c, &mut self.grid_a),
            _ => (&mut self.grid_c, &mut self.grid_b),
        };
        spec.fill(zero);
        for kx in -cut..=cut {
            let row = kx.rem_euclid(n as i32) as usize * n;
            let base = (kx + cut) as usize * side;
            for ky in -cut..=cut {
                let c = u.coeffs()[base + (ky + cut) as usize];
                spec[row + ky.rem_euclid(n as i32) as usize] = c[0] + Complex64::i() * c[1];
            }
        }
        // Along ky, only rows with |kx| ≤ K are non-zero.
        let k = self.cutoff;
        self.inv.process_with_scratch(&mut spec[..(k + 1) * n], &mut self.scratch);
        self.inv.process_with_scratch(&mut spec[(n - k) * n..], &mut self.scratch);
        transpose(spec, phys, n);
        self.inv.process_with_scratch(phys, &mut self.scratch);
    }

    /// Forward transform of the packed pair `products[slot] = p + i q`
    /// (layout `[y][x]`); leaves the spectrum in `[kx][ky]` layout.
    fn products_to_spectral(&mut self, slot: usize) {
        let n = self.n;
        let k = self.cutoff;
        let buf = &mut self.products[slot];
        self.fwd.process_with_scratch(buf, &mut self.scratch);
        transpose(buf, &mut self.grid_c, n);
        self.fwd.process_with_scratch(&mut self.grid_c[..(k + 1) * n], &mut self.scratch);
        self.fwd.process_with_scratch(&mut self.grid_c[(n - k) * n..], &mut self.scratch);
        std::mem::swap(&mut self.grid_c, &mut self.products[slot]);
    }

    /// Assembles `P[∂_j (u_j v_i)]` from the transformed products.
    ///
    /// Each product buffer holds the transform `Z` of `p + i q` with `p`, `q`
    /// real; `P(k) = (Z(k) + conj Z(−k)) / 2` and `Q(k) = (Z(k) − conj Z(−k)) / 2i`.
    /// `slots` name where `u_x v_x, u_y v_x, u_x v_y, u_y v_y` live as
    /// `(buffer, 0 = P / 1 = Q)`.
    fn assemble(&self, slots: [(usize, u8); 4], out: &mut SpectralField) {
        let n = self.n;
        let cut = self.cutoff as i32;
        let half = 0.5 / (n * n) as f64;
        let side = out.side();
        let coeffs = out.coeffs_mut();
        let wrap = |k: i32| if k < 0 { (k + n as i32) as usize } else { k as usize };
        for kx in -cut..=cut {
            let (row, row_m) = (wrap(kx) * n, wrap(-kx) * n);
            for ky in -cut..=cut {
                let (ik, im) = (row + wrap(ky), row_m + wrap(-ky));
                let mut parts = [[Complex64::new(0.0, 0.0); 2]; 2];
                for (b, buf) in self.products.iter().enumerate() {
                    let zk = buf[ik];
                    let zm = buf[im].conj();
                    let s = zk + zm;
                    let d = zk - zm;
                    parts[b] = [s * half, Complex64::new(d.im * half, -d.re * half)];
                }
                let get = |(buf, part): (usize, u8)| parts[buf][part as usize];
                let (fx, fy) = (kx as f64, ky as f64);
                let gx = get(slots[0]) * fx + get(slots[1]) * fy;
                let gy = get(slots[2]) * fx + get(slots[3]) * fy;
                let idx = (kx + cut) as usize * side + (ky + cut) as usize;
                coeffs[idx] = [Complex64::new(-gx.im, gx.re), Complex64::new(-gy.im, gy.re)];
            }
        }
        leray_project(out);
    }

    /// `B(u, v) = P[(u·∇)v]` truncated to the cutoff.
    pub fn apply(&mut self, u: &SpectralField, v: &SpectralField) -> Result<SpectralField, FieldError> {
        self.check(u)?;
        self.check(v)?;
        self.to_physical(u, 0);
        self.to_physical(v, 1);
        // (u·∇)v = ∇·(u ⊗ v) because ∇·u = 0.
        let [p0, p1] = &mut self.products;
        for ((a, b), (s0, s1)) in self
            .grid_a
            .iter()
            .zip(&self.grid_b)
            .zip(p0.iter_mut().zip(p1.iter_mut()))
        {
            let (ux, uy, vx, vy) = (a.re, a.im, b.re, b.im);
            *s0 = Complex64::new(ux * vx, uy * vx);
            *s1 = Complex64::new(ux * vy, uy * vy);
        }
        self.products_to_spectral(0);
        self.products_to_spectral(1);
        let mut out = SpectralField::zeros(self.cutoff);
        self.assemble([(0, 0), (0, 1), (1, 0), (1, 1)], &mut out);
        Ok(out)
    }

    /// `B(u, u)`, using the symmetry of `u ⊗ u` to save one transform.
    pub fn apply_self(&mut self, u: &SpectralField) -> Result<SpectralField, FieldError> {
        let mut out = SpectralField::zeros(self.cutoff);
        self.apply_self_into(u, &mut out)?;
        Ok(out)
    }

    pub fn apply_self_into(&mut self, u: &SpectralField, out: &mut SpectralField) -> Result<(), FieldError> {
        self.check(u)?;
        out.check_same_cutoff(u)?;
        self.to_physical(u, 0);
        let [p0, p1] = &mut self.products;
        for (a, (s0, s1)) in self.grid_a.iter().zip(p0.iter_mut().zip(p1.iter_mut())) {
            let (ux, uy) = (a.re, a.im);
            *s0 = Complex64::new(ux * ux, ux * uy);
            *s1 = Complex64::new(uy * uy, 0.0);
        }
        self.products_to_spectral(0);
        self.products_to_spectral(1);
        self.assemble([(0, 0), (0, 1), (0, 1), (1, 0)], out);
        Ok(())
    }

    /// `b(u, v, w) = (B(u, v), w)_H`.
    pub fn trilinear(&mut self, u: &SpectralField, v: &SpectralField, w: &SpectralField) -> Result<f64, FieldError> {
        let b = self.apply(u, v)?;
        inner_h(&b, w)
    }

    fn check(&self, u: &SpectralField) -> Result<(), FieldError> {
        if u.cutoff() == self.cutoff {
            Ok(())
        } else {
            Err(FieldError::Dimension {
                left: self.cutoff,
                right: u.cutoff(),
            })
        }
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], n: usize) {
    const BLOCK: usize = 8;
    for ib in (0..n).step_by(BLOCK) {
        for jb in (0..n).step_by(BLOCK) {
            for i in ib..(ib + BLOCK).min(n) {
                for j in jb..(jb + BLOCK).min(n) {
                    dst[j * n + i] = src[i * n + j];
                }
            }
        }
    }
}

/// One-shot `B(u, v)`; allocates FFT plans on every call.
pub fn nonlinear_b(u: &SpectralField, v: &SpectralField) -> Result<SpectralField, FieldError> {
    u.check_same_cutoff(v)?;
    Convection::new(u.cutoff()).apply(u, v)
}

/// One-shot `b(u, v, w)`.
pub fn trilinear_b(u: &SpectralField, v: &SpectralField, w: &SpectralField) -> Result<f64, FieldError> {
    u.check_same_cutoff(v)?;
    u.check_same_cutoff(w)?;
    Convection::new(u.cutoff()).trilinear(u, v, w)
}

/// Dimensionless ratio `|b(u,v,w)| / (‖u‖^½ |u|^½ ‖w‖^½ |w|^½ ‖v‖)` with
/// `‖·‖` the `V` norm for `(ν, γ)`.
pub fn trilinear_bound_ratio(
    conv: &mut Convection,
    u: &SpectralField,
    v: &SpectralField,
    w: &SpectralField,
    nu: f64,
    gamma: f64,
) -> Result<f64, FieldError> {
    use crate::field::{norm_h, norm_v};
    let b = conv.trilinear(u, v, w)?.abs();
    let denom = (norm_v(u, nu, gamma)? * norm_h(u) * norm_v(w, nu, gamma)? * norm_h(w)).sqrt()
        * norm_v(v, nu, gamma)?;
    Ok(if denom > 0.0 { b / denom } else { 0.0 })
}

/// Serializable mirror of the scalar coefficients, used by reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarCoefficients {
    pub nu: f64,
    pub gamma: f64,
    pub f_lin: f64,
    pub sigma_lin: f64,
    pub noise_dim: usize,
}

impl From<&CoefficientSet> for ScalarCoefficients {
    fn from(c: &CoefficientSet) -> Self {
        Self {
            nu: c.nu,
            gamma: c.gamma,
            f_lin: c.f_lin,
            sigma_lin: c.sigma_lin,
            noise_dim: c.noise_dim(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::norm_h;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn grid_sizes_are_dealiased_and_smooth() {
        assert_eq!(dealiased_grid_size(2), 8);
        assert_eq!(dealiased_grid_size(16), 54);
        for k in 1..40 {
            assert!(dealiased_grid_size(k) > 3 * k);
        }
    }

    #[test]
    fn stokes_operator_single_mode() {
        let e = SpectralField::from_solenoidal_modes(3, &[(Wavevector::new(1, 0), Complex64::new(0.3, 0.1))]).unwrap();
        let mut c = CoefficientSet::unforced(3, 1.0, 0.5);
        c.gamma = 0.5;
        let ae = apply_a(&e, &c);
        assert_eq!(ae, e.scaled(1.5));
        assert_eq!(apply_a(&SpectralField::zeros(3), &c), SpectralField::zeros(3));
    }

    #[test]
    fn stokes_operator_is_self_adjoint_and_coercive() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c = CoefficientSet::unforced(6, 0.3, 0.5);
        for _ in 0..10 {
            let u = SpectralField::random(6, 1.0, &mut rng);
            let v = SpectralField::random(6, 1.0, &mut rng);
            let lhs = inner_h(&apply_a(&u, &c), &v).unwrap();
            let rhs = inner_h(&u, &apply_a(&v, &c)).unwrap();
            assert_relative_eq!(lhs, rhs, max_relative = 1e-13);
            let au = inner_h(&apply_a(&u, &c), &u).unwrap();
            assert!(au >= c.gamma * norm_h(&u).powi(2));
            assert_relative_eq!(au, crate::field::norm_v_sq(&u, c.nu, c.gamma).unwrap(), max_relative = 1e-14);
        }
    }

    #[test]
    fn convection_of_zero_or_constant_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let u = SpectralField::random(4, 1.0, &mut rng);
        let zero = SpectralField::zeros(4);
        let mut conv = Convection::new(4);
        assert!(norm_h(&conv.apply(&u, &zero).unwrap()) < 1e-15);
        assert!(norm_h(&conv.apply(&zero, &u).unwrap()) < 1e-15);
        let mut constant = SpectralField::zeros(4);
        constant
            .set_mode(Wavevector::ZERO, [Complex64::new(0.7, 0.0), Complex64::new(-0.2, 0.0)])
            .unwrap();
        assert!(norm_h(&conv.apply(&u, &constant).unwrap()) < 1e-14);
    }

    #[test]
    fn apply_self_agrees_with_general_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut conv = Convection::new(7);
        let u = SpectralField::random(7, 1.0, &mut rng);
        let a = conv.apply(&u, &u).unwrap();
        let b = conv.apply_self(&u).unwrap();
        assert!(norm_h(&(&a - &b)) < 1e-13 * norm_h(&a));
        b.validate().unwrap();
    }

    #[test]
    fn convection_output_is_real_and_solenoidal() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut conv = Convection::new(5);
        let u = SpectralField::random(5, 1.0, &mut rng);
        let v = SpectralField::random(5, 0.5, &mut rng);
        let b = conv.apply(&u, &v).unwrap();
        b.validate().unwrap();
        assert!(inner_h(&b, &v).unwrap().abs() < 1e-12 * norm_h(&b) * norm_h(&v));
    }

    #[test]
    fn drift_and_noise_are_affine() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut c = CoefficientSet::unforced(4, 1.0, 1.0);
        c.f_const = SpectralField::random(4, 1.0, &mut rng);
        c.sigma_const = vec![SpectralField::random(4, 1.0, &mut rng)];
        let u = SpectralField::random(4, 1.0, &mut rng);
        assert_eq!(drift_f(&u, &c), c.f_const);
        assert_eq!(noise_sigma(&u, &c)[0], c.sigma_const[0]);
        c.f_lin = 0.7;
        c.sigma_lin = 0.3;
        let v = SpectralField::random(4, 1.0, &mut rng);
        let d = norm_h(&(&u - &v));
        assert_relative_eq!(norm_h(&(&drift_f(&u, &c) - &drift_f(&v, &c))), 0.7 * d, max_relative = 1e-12);
        assert_relative_eq!(
            norm_h(&(&noise_sigma(&u, &c)[0] - &noise_sigma(&v, &c)[0])),
            0.3 * d,
            max_relative = 1e-12
        );
        assert_eq!(drift_f(&SpectralField::zeros(4), &c), c.f_const);
    }

    #[test]
    fn coefficient_validation() {
        let mut c = CoefficientSet::unforced(3, 1.0, 0.5);
        assert!(c.validate().is_ok());
        c.gamma = 0.0;
        assert!(c.validate().is_err());
        c.gamma = 0.5;
        c.sigma_const.clear();
        assert!(c.validate().is_err());
    }
}
