//! Divergence-free velocity fields on the periodic torus `[0, 2π)²`.
//!
//! A field is stored as its truncated Fourier series
//!
//! ```text
//! u(x) = Σ_{|kx|,|ky| ≤ K} c(k) e^{i k·x},   c(k) ∈ ℂ²
//! ```
//!
//! with `c(-k) = conj(c(k))` (real field) and `k · c(k) = 0` (solenoidal).
//! The `H` inner product is normalised so that it equals the mean of `u·v`
//! over the torus, i.e. `∫ u·v dx / (2π)²`. With that normalisation Parseval
//! reads `(u, v)_H = Σ_k Re⟨c_u(k), c_v(k)⟩` and the constant is exactly one.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Fourier coefficient of a 2D velocity field: `(c_x, c_y)`.
pub type Coeff = [Complex64; 2];

const ZERO_COEFF: Coeff = [Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)];

/// Relative tolerance used when validating Hermitian symmetry and
/// incompressibility of a field.
pub const FIELD_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("dimension mismatch: cutoff {left} vs {right}")]
    Dimension { left: usize, right: usize },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("argument outside the domain: {0}")]
    Domain(String),
    #[error("wavevector ({kx}, {ky}) outside cutoff {cutoff}")]
    OutOfRange { kx: i32, ky: i32, cutoff: usize },
    #[error("field is not divergence-free at ({kx}, {ky}): |k·c| = {residual:e}")]
    NotSolenoidal { kx: i32, ky: i32, residual: f64 },
    #[error("field is not real-valued: Hermitian symmetry broken at ({kx}, {ky})")]
    NotHermitian { kx: i32, ky: i32 },
}

/// Integer Fourier mode index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Wavevector {
    pub kx: i32,
    pub ky: i32,
}

impl Wavevector {
    pub const ZERO: Wavevector = Wavevector { kx: 0, ky: 0 };

    pub const fn new(kx: i32, ky: i32) -> Self {
        Self { kx, ky }
    }

    pub fn norm_sq(self) -> f64 {
        let (x, y) = (self.kx as f64, self.ky as f64);
        x * x + y * y
    }

    pub fn is_zero(self) -> bool {
        self.kx == 0 && self.ky == 0
    }

    pub fn fits(self, cutoff: usize) -> bool {
        self.kx.unsigned_abs() as usize <= cutoff && self.ky.unsigned_abs() as usize <= cutoff
    }

    /// True for exactly one member of each `{k, -k}` pair with `k ≠ 0`.
    pub fn is_canonical(self) -> bool {
        self.kx > 0 || (self.kx == 0 && self.ky > 0)
    }

    /// Unit vector `(-ky, kx)/|k|` spanning the solenoidal subspace at `k`.
    ///
    /// Returns `None` for the zero mode, where every direction is solenoidal.
    pub fn solenoidal_direction(self) -> Option<[f64; 2]> {
        if self.is_zero() {
            return None;
        }
        let norm = self.norm_sq().sqrt();
        Some([-(self.ky as f64) / norm, self.kx as f64 / norm])
    }
}

impl Neg for Wavevector {
    type Output = Wavevector;
    fn neg(self) -> Wavevector {
        Wavevector::new(-self.kx, -self.ky)
    }
}

/// Real, divergence-free vector field on the torus, truncated at `|kx|, |ky| ≤ cutoff`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    cutoff: usize,
    coeffs: Vec<Coeff>,
}

impl SpectralField {
    pub fn zeros(cutoff: usize) -> Self {
        let side = 2 * cutoff + 1;
        Self {
            cutoff,
            coeffs: vec![ZERO_COEFF; side * side],
        }
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Number of modes per axis, `2K + 1`.
    pub fn side(&self) -> usize {
        2 * self.cutoff + 1
    }

    /// Storage is kx-major: all `ky` for one `kx` are contiguous.
    #[inline]
    pub fn index_of(&self, k: Wavevector) -> usize {
        let c = self.cutoff as i32;
        ((k.kx + c) as usize) * self.side() + (k.ky + c) as usize
    }

    #[inline]
    pub fn wavevector_at(&self, index: usize) -> Wavevector {
        let side = self.side();
        let c = self.cutoff as i32;
        Wavevector::new((index / side) as i32 - c, (index % side) as i32 - c)
    }

    pub fn get(&self, k: Wavevector) -> Option<Coeff> {
        k.fits(self.cutoff).then(|| self.coeffs[self.index_of(k)])
    }

    /// Coefficient at `k`; zero outside the cutoff.
    pub fn coeff(&self, k: Wavevector) -> Coeff {
        self.get(k).unwrap_or(ZERO_COEFF)
    }

    pub fn coeffs(&self) -> &[Coeff] {
        &self.coeffs
    }

    /// Raw mutable access. Callers are responsible for keeping the field
    /// real and solenoidal; [`SpectralField::validate`] checks both.
    pub fn coeffs_mut(&mut self) -> &mut [Coeff] {
        &mut self.coeffs
    }

    pub fn modes(&self) -> impl Iterator<Item = (Wavevector, &Coeff)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(i, c)| (self.wavevector_at(i), c))
    }

    /// Sets `c(k)` and its conjugate partner `c(-k)`. At `k = 0` the
    /// imaginary part is dropped.
    pub fn set_mode(&mut self, k: Wavevector, c: Coeff) -> Result<(), FieldError> {
        if !k.fits(self.cutoff) {
            return Err(FieldError::OutOfRange {
                kx: k.kx,
                ky: k.ky,
                cutoff: self.cutoff,
            });
        }
        if k.is_zero() {
            let i = self.index_of(k);
            self.coeffs[i] = [Complex64::new(c[0].re, 0.0), Complex64::new(c[1].re, 0.0)];
            return Ok(());
        }
        let i = self.index_of(k);
        let j = self.index_of(-k);
        self.coeffs[i] = c;
        self.coeffs[j] = [c[0].conj(), c[1].conj()];
        Ok(())
    }

    /// Sets the mode `k ≠ 0` to `amplitude · e(k)` with `e(k)` the solenoidal
    /// unit direction; the partner `-k` is filled in by symmetry.
    pub fn set_solenoidal_mode(&mut self, k: Wavevector, amplitude: Complex64) -> Result<(), FieldError> {
        let dir = k
            .solenoidal_direction()
            .ok_or_else(|| FieldError::Domain("the zero mode has no solenoidal direction".into()))?;
        self.set_mode(k, [amplitude * dir[0], amplitude * dir[1]])
    }

    /// Builds a field from `(k, amplitude)` pairs along the solenoidal directions.
    pub fn from_solenoidal_modes(
        cutoff: usize,
        modes: &[(Wavevector, Complex64)],
    ) -> Result<Self, FieldError> {
        let mut field = Self::zeros(cutoff);
        for &(k, a) in modes {
            field.set_solenoidal_mode(k, a)?;
        }
        Ok(field)
    }

    /// Checks Hermitian symmetry, a real zero mode and incompressibility.
    pub fn validate(&self) -> Result<(), FieldError> {
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        for (k, c) in self.modes() {
            let partner = self.coeffs[self.index_of(-k)];
            let asym = (partner[0] - c[0].conj()).norm() + (partner[1] - c[1].conj()).norm();
            if asym > FIELD_TOLERANCE * scale {
                return Err(FieldError::NotHermitian { kx: k.kx, ky: k.ky });
            }
            if k.is_zero() {
                continue;
            }
            let residual = (c[0] * k.kx as f64 + c[1] * k.ky as f64).norm();
            let mag = (c[0].norm_sqr() + c[1].norm_sqr()).sqrt();
            if residual > FIELD_TOLERANCE * mag {
                return Err(FieldError::NotSolenoidal {
                    kx: k.kx,
                    ky: k.ky,
                    residual,
                });
            }
        }
        Ok(())
    }

    /// Largest component magnitude over all modes.
    pub fn max_abs(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|c| c[0].norm_sqr().max(c[1].norm_sqr()))
            .fold(0.0, f64::max)
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs
            .iter()
            .all(|c| c[0].re.is_finite() && c[0].im.is_finite() && c[1].re.is_finite() && c[1].im.is_finite())
    }

    pub fn check_same_cutoff(&self, other: &SpectralField) -> Result<(), FieldError> {
        if self.cutoff == other.cutoff {
            Ok(())
        } else {
            Err(FieldError::Dimension {
                left: self.cutoff,
                right: other.cutoff,
            })
        }
    }

    /// `self += a · other`.
    pub fn axpy(&mut self, a: f64, other: &SpectralField) -> Result<(), FieldError> {
        self.check_same_cutoff(other)?;
        for (x, y) in self.coeffs.iter_mut().zip(&other.coeffs) {
            x[0] += y[0] * a;
            x[1] += y[1] * a;
        }
        Ok(())
    }

    pub fn scale_in_place(&mut self, a: f64) {
        for c in &mut self.coeffs {
            c[0] *= a;
            c[1] *= a;
        }
    }

    pub fn scaled(&self, a: f64) -> SpectralField {
        let mut out = self.clone();
        out.scale_in_place(a);
        out
    }

    /// Multiplies each mode by a real factor depending only on `k`.
    pub fn apply_multiplier(&mut self, mut factor: impl FnMut(Wavevector) -> f64) {
        let side = self.side();
        let c = self.cutoff as i32;
        for (i, coeff) in self.coeffs.iter_mut().enumerate() {
            let k = Wavevector::new((i / side) as i32 - c, (i % side) as i32 - c);
            let m = factor(k);
            coeff[0] *= m;
            coeff[1] *= m;
        }
    }

    /// Copy of the field re-embedded at another cutoff (modes beyond the
    /// smaller cutoff are dropped).
    pub fn with_cutoff(&self, cutoff: usize) -> SpectralField {
        let mut out = SpectralField::zeros(cutoff);
        for (k, c) in self.modes() {
            if k.fits(cutoff) {
                let i = out.index_of(k);
                out.coeffs[i] = *c;
            }
        }
        out
    }

    /// Random solenoidal field with Gaussian amplitudes whose variance decays
    /// like `(1 + |k|²)^(-decay)`; the zero mode is left empty.
    pub fn random<R: Rng + ?Sized>(cutoff: usize, decay: f64, rng: &mut R) -> SpectralField {
        let mut field = SpectralField::zeros(cutoff);
        let c = cutoff as i32;
        for kx in 0..=c {
            for ky in -c..=c {
                let k = Wavevector::new(kx, ky);
                if !k.is_canonical() {
                    continue;
                }
                let sd = (1.0 + k.norm_sq()).powf(-decay / 2.0);
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                field
                    .set_solenoidal_mode(k, Complex64::new(re * sd, im * sd))
                    .expect("mode inside cutoff");
            }
        }
        field
    }
}

impl AddAssign<&SpectralField> for SpectralField {
    fn add_assign(&mut self, rhs: &SpectralField) {
        self.axpy(1.0, rhs).expect("cutoff mismatch in field addition");
    }
}

impl SubAssign<&SpectralField> for SpectralField {
    fn sub_assign(&mut self, rhs: &SpectralField) {
        self.axpy(-1.0, rhs).expect("cutoff mismatch in field subtraction");
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, a: f64) -> SpectralField {
        self.scaled(a)
    }
}

impl Neg for &SpectralField {
    type Output = SpectralField;
    fn neg(self) -> SpectralField {
        self.scaled(-1.0)
    }
}

/// `(a, b)_H`.
pub fn inner_h(a: &SpectralField, b: &SpectralField) -> Result<f64, FieldError> {
    a.check_same_cutoff(b)?;
    Ok(a
        .coeffs
        .iter()
        .zip(&b.coeffs)
        .map(|(x, y)| x[0].re * y[0].re + x[0].im * y[0].im + x[1].re * y[1].re + x[1].im * y[1].im)
        .sum())
}

pub fn norm_h(u: &SpectralField) -> f64 {
    u.coeffs
        .iter()
        .map(|c| c[0].norm_sqr() + c[1].norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Fourier multiplier `ν|k|² + γ` of the damped Stokes operator.
#[inline]
pub fn stokes_symbol(k: Wavevector, nu: f64, gamma: f64) -> f64 {
    nu * k.norm_sq() + gamma
}

fn check_viscosity(nu: f64, gamma: f64) -> Result<(), FieldError> {
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(FieldError::Parameter(format!("viscosity must be positive, got {nu}")));
    }
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(FieldError::Parameter(format!("damping must be non-negative, got {gamma}")));
    }
    Ok(())
}

/// Squared `V` norm `Σ_k (ν|k|² + γ)|c(k)|² = (Au, u)_H`.
pub fn norm_v_sq(u: &SpectralField, nu: f64, gamma: f64) -> Result<f64, FieldError> {
    check_viscosity(nu, gamma)?;
    Ok(u.modes()
        .map(|(k, c)| stokes_symbol(k, nu, gamma) * (c[0].norm_sqr() + c[1].norm_sqr()))
        .sum())
}

pub fn norm_v(u: &SpectralField, nu: f64, gamma: f64) -> Result<f64, FieldError> {
    norm_v_sq(u, nu, gamma).map(f64::sqrt)
}

/// Closed ball of the given radius in `H`, centred at the origin.
///
/// All quantities are computed from `|u|_H` through their radial closed
/// forms; nothing here subtracts two nearly equal fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallGeometry {
    radius: f64,
}

impl Default for BallGeometry {
    fn default() -> Self {
        Self::UNIT
    }
}

impl BallGeometry {
    pub const UNIT: BallGeometry = BallGeometry { radius: 1.0 };

    pub fn new(radius: f64) -> Result<Self, FieldError> {
        if radius > 0.0 && radius.is_finite() {
            Ok(Self { radius })
        } else {
            Err(FieldError::Parameter(format!("ball radius must be positive, got {radius}")))
        }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// `λ(r)`: `0` inside the ball, `1 − R/r` outside, so that
    /// `y − π(y) = λ(|y|) y`.
    pub fn lambda(&self, r: f64) -> Result<f64, FieldError> {
        if !(r >= 0.0) {
            return Err(FieldError::Domain(format!("λ is defined on [0, ∞), got {r}")));
        }
        Ok(if r <= self.radius { 0.0 } else { 1.0 - self.radius / r })
    }

    /// Nearest point of the closed ball.
    pub fn project(&self, u: &SpectralField) -> SpectralField {
        let r = norm_h(u);
        if r <= self.radius {
            u.clone()
        } else {
            u.scaled(self.radius / r)
        }
    }

    /// Scalar projection of a norm: `min(r, R)`.
    pub fn project_norm(&self, r: f64) -> f64 {
        r.min(self.radius)
    }

    /// Distance to the ball, `(r − R)₊`, from the norm `r`.
    pub fn penetration_of_norm(&self, r: f64) -> f64 {
        (r - self.radius).max(0.0)
    }

    pub fn penetration(&self, u: &SpectralField) -> f64 {
        self.penetration_of_norm(norm_h(u))
    }

    /// `φ = ½ d(u, D̄)²`.
    pub fn phi(&self, u: &SpectralField) -> f64 {
        let d = self.penetration(u);
        0.5 * d * d
    }

    /// `g = d(u, D̄)²`.
    pub fn g(&self, u: &SpectralField) -> f64 {
        let d = self.penetration(u);
        d * d
    }

    /// `G = d(u, D̄)⁴`.
    pub fn big_g(&self, u: &SpectralField) -> f64 {
        let g = self.g(u);
        g * g
    }

    /// `u − π(u) = λ(|u|) u`.
    pub fn excess(&self, u: &SpectralField) -> SpectralField {
        let r = norm_h(u);
        let lambda = if r <= self.radius { 0.0 } else { 1.0 - self.radius / r };
        u.scaled(lambda)
    }

    /// `(u, u − π(u)) = |u| (|u| − R)₊`.
    pub fn monotone_pairing_of_norm(&self, r: f64) -> f64 {
        r * self.penetration_of_norm(r)
    }

    /// Solves `v + a (v − π(v)) = w` for `v`; returns `(v, v − w)`.
    ///
    /// The solution is radial: `|v| = |w|` inside the ball and
    /// `|v| = (|w| + aR)/(1 + a)` outside.
    pub fn resolvent(&self, w: &SpectralField, a: f64) -> Result<(SpectralField, SpectralField), FieldError> {
        if !(a >= 0.0) {
            return Err(FieldError::Domain(format!("resolvent step must be non-negative, got {a}")));
        }
        let r = norm_h(w);
        let target = self.resolvent_norm(r, a);
        if target == r {
            return Ok((w.clone(), SpectralField::zeros(w.cutoff())));
        }
        let v = w.scaled(target / r);
        let dl = w.scaled(target / r - 1.0);
        Ok((v, dl))
    }

    /// Radial part of the resolvent: the root `s` of `s + a (s − R)₊ = r`.
    pub fn resolvent_norm(&self, r: f64, a: f64) -> f64 {
        if r <= self.radius {
            r
        } else {
            (r + a * self.radius) / (1.0 + a)
        }
    }
}

/// `λ(r)` for the unit ball.
pub fn lambda_of(r: f64) -> Result<f64, FieldError> {
    BallGeometry::UNIT.lambda(r)
}

/// Projection onto the closed unit ball.
pub fn ball_project(u: &SpectralField) -> SpectralField {
    BallGeometry::UNIT.project(u)
}

/// `d(u, D̄) = (|u|_H − 1)₊`.
pub fn penetration(u: &SpectralField) -> f64 {
    BallGeometry::UNIT.penetration(u)
}

/// `½ d(u, D̄)²`.
pub fn phi_of(u: &SpectralField) -> f64 {
    BallGeometry::UNIT.phi(u)
}

/// Implicit penalty step for the unit ball, see [`BallGeometry::resolvent`].
pub fn penalty_resolvent(w: &SpectralField, a: f64) -> Result<(SpectralField, SpectralField), FieldError> {
    BallGeometry::UNIT.resolvent(w, a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_mode() -> SpectralField {
        // |c(k)|² + |c(-k)|² = 1 with c along e(k).
        SpectralField::from_solenoidal_modes(4, &[(Wavevector::new(1, 0), Complex64::new(0.5f64.sqrt(), 0.0))])
            .unwrap()
    }

    #[test]
    fn zero_field_has_zero_inner_product() {
        let z = SpectralField::zeros(3);
        assert_eq!(inner_h(&z, &z).unwrap(), 0.0);
        assert_eq!(norm_h(&z), 0.0);
    }

    #[test]
    fn unit_mode_is_normalised() {
        let e = unit_mode();
        assert_relative_eq!(inner_h(&e, &e).unwrap(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(norm_h(&e.scaled(2.0)), 2.0, epsilon = 1e-15);
    }

    #[test]
    fn disjoint_supports_are_orthogonal() {
        let a = SpectralField::from_solenoidal_modes(4, &[(Wavevector::new(1, 2), Complex64::new(0.3, -1.1))]).unwrap();
        let b = SpectralField::from_solenoidal_modes(4, &[(Wavevector::new(2, -3), Complex64::new(2.0, 0.7))]).unwrap();
        assert_eq!(inner_h(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn cutoff_mismatch_is_a_dimension_error() {
        let a = SpectralField::zeros(2);
        let b = SpectralField::zeros(3);
        assert!(matches!(inner_h(&a, &b), Err(FieldError::Dimension { left: 2, right: 3 })));
    }

    #[test]
    fn v_norm_of_unit_mode() {
        let e = unit_mode();
        assert_relative_eq!(norm_v(&e, 1.0, 0.0).unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(norm_v(&SpectralField::zeros(4), 1.0, 0.0).unwrap(), 0.0);
        assert!(matches!(norm_v(&e, -1.0, 0.0), Err(FieldError::Parameter(_))));
    }

    #[test]
    fn v_norm_dominates_damped_h_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let u = SpectralField::random(6, 1.0, &mut rng);
            let gamma = 0.7;
            assert!(norm_v_sq(&u, 0.01, gamma).unwrap() >= gamma * norm_h(&u).powi(2));
        }
    }

    #[test]
    fn projection_cases() {
        let e = unit_mode();
        let inside = e.scaled(0.5);
        assert_eq!(ball_project(&inside), inside);
        let outside = e.scaled(2.0);
        let p = ball_project(&outside);
        assert_relative_eq!(norm_h(&p), 1.0, epsilon = 1e-15);
        assert_relative_eq!(inner_h(&p, &e).unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(ball_project(&SpectralField::zeros(4)), SpectralField::zeros(4));
    }

    #[test]
    fn lambda_values() {
        assert_eq!(lambda_of(0.7).unwrap(), 0.0);
        assert_eq!(lambda_of(2.0).unwrap(), 0.5);
        assert_eq!(lambda_of(1.0).unwrap(), 0.0);
        assert!(matches!(lambda_of(-0.1), Err(FieldError::Domain(_))));
    }

    #[test]
    fn penetration_and_phi() {
        let e = unit_mode();
        assert_relative_eq!(penetration(&e.scaled(3.0)), 2.0, epsilon = 1e-14);
        assert_eq!(penetration(&e.scaled(0.4)), 0.0);
        assert_eq!(penetration(&e), 0.0);
        assert_relative_eq!(phi_of(&e.scaled(3.0)), 2.0, epsilon = 1e-14);
        assert_eq!(phi_of(&e.scaled(0.2)), 0.0);
    }

    #[test]
    fn phi_radial_derivative_matches_excess() {
        // Central difference of φ(s e) at s = 2 against |e·2 − π(e·2)| = 1.
        let e = unit_mode();
        let h = 1e-5;
        let d = (phi_of(&e.scaled(2.0 + h)) - phi_of(&e.scaled(2.0 - h))) / (2.0 * h);
        let excess = norm_h(&(&e.scaled(2.0) - &ball_project(&e.scaled(2.0))));
        assert!((d - excess).abs() < 1e-6, "{d} vs {excess}");
    }

    #[test]
    fn resolvent_examples() {
        let e = unit_mode();
        let (v, dl) = penalty_resolvent(&e.scaled(0.8), 10.0).unwrap();
        assert_eq!(v, e.scaled(0.8));
        assert_eq!(norm_h(&dl), 0.0);

        let (v, dl) = penalty_resolvent(&e.scaled(2.0), 1.0).unwrap();
        assert_relative_eq!(norm_h(&v), 1.5, epsilon = 1e-14);
        assert_relative_eq!(norm_h(&dl), 0.5, epsilon = 1e-14);

        let (v, _) = penalty_resolvent(&e.scaled(2.0), 1e6).unwrap();
        assert!((norm_h(&v) - 1.0).abs() < 1e-5);
    }

    #[test]
    fn random_fields_validate() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u = SpectralField::random(8, 2.0, &mut rng);
        u.validate().unwrap();
        u.scaled(3.0).validate().unwrap();
        ball_project(&u.scaled(10.0)).validate().unwrap();
    }

    #[test]
    fn validate_rejects_compressive_mode() {
        let mut u = SpectralField::zeros(2);
        u.set_mode(Wavevector::new(1, 0), [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)])
            .unwrap();
        assert!(matches!(u.validate(), Err(FieldError::NotSolenoidal { .. })));
    }

    #[test]
    fn validate_rejects_broken_symmetry() {
        let mut u = SpectralField::from_solenoidal_modes(2, &[(Wavevector::new(1, 1), Complex64::new(1.0, 0.5))]).unwrap();
        let i = u.index_of(Wavevector::new(-1, -1));
        u.coeffs_mut()[i][0] *= 2.0;
        assert!(matches!(u.validate(), Err(FieldError::NotHermitian { .. })));
    }
}
