//! Plugs a user-defined drift and noise into the stepper.
//!
//! The drift here is a saturating push along one mode, `f(u) = F / (1 + |u|²)`,
//! and the noise acts on a single mode with an amplitude that depends on
//! `|u|`. Both are Lipschitz from `H` to `H`.
//!
//! ```text
//! cargo run --release --example custom_forcing
//! ```

use num_complex::Complex64;
use reflectx::integrator::simulate_path_with;
use reflectx::operators::CoefficientSet;
use reflectx::{norm_h, Forcing, PenaltyRunConfig, SpectralField, Wavevector};

struct Saturating {
    push: SpectralField,
    kick: SpectralField,
}

impl Forcing for Saturating {
    fn noise_dim(&self) -> usize {
        1
    }

    fn add_drift(&self, u: &SpectralField, scale: f64, out: &mut SpectralField) {
        let r = norm_h(u);
        out.axpy(scale / (1.0 + r * r), &self.push).expect("same cutoff");
    }

    fn add_diffusion(&self, u: &SpectralField, dw: &[f64], out: &mut SpectralField) {
        let amp = 0.5 * (1.0 + norm_h(u)).recip();
        out.axpy(amp * dw[0], &self.kick).expect("same cutoff");
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cutoff = 8;
    let mode = |kx, ky, re, im| SpectralField::from_solenoidal_modes(cutoff, &[(Wavevector::new(kx, ky), Complex64::new(re, im))]);
    let forcing = Saturating {
        push: mode(1, 1, 4.0, 0.0)?,
        kick: mode(2, 0, 1.0, 0.0)?,
    };
    // The coefficient set still supplies ν, γ and the convection switch.
    let mut coeffs = CoefficientSet::unforced(cutoff, 0.1, 0.5);
    coeffs.sigma_const = vec![SpectralField::zeros(cutoff)];
    let mut cfg = PenaltyRunConfig::new(coeffs, mode(1, 0, 0.5, 0.0)?, 1000.0, 1e-3, 2.0);
    cfg.seed = 12;

    let path = simulate_path_with(&cfg, &forcing)?;
    for r in path.records.iter().step_by(250) {
        println!("t = {:.2}: |u|_H = {:.6}, Var(L) = {:.6}", r.t, r.h_norm, r.var_l);
    }
    Ok(())
}
