//! Projection onto the unit ball, the penalty potential and the closed-form
//! resolvent used by the stepper.
//!
//! ```text
//! cargo run --example ball_geometry
//! ```

use num_complex::Complex64;
use reflectx::{ball_project, lambda_of, norm_h, penalty_resolvent, penetration, phi_of, SpectralField, Wavevector};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let u = SpectralField::from_solenoidal_modes(
        8,
        &[
            (Wavevector::new(1, 0), Complex64::new(0.9, 0.2)),
            (Wavevector::new(2, 1), Complex64::new(-0.3, 0.6)),
        ],
    )?;
    let r = norm_h(&u);
    println!("|u|_H = {r:.6}");
    println!("lambda(|u|) = {:.6}", lambda_of(r)?);
    println!("|pi(u)|_H = {:.6}", norm_h(&ball_project(&u)));
    println!("(|u| - 1)+ = {:.6}, phi(u) = {:.6}", penetration(&u), phi_of(&u));

    println!("\nresolvent v + a (v - pi(v)) = u:");
    println!("{:>10} {:>12} {:>12}", "a", "|v|_H", "|dL|_H");
    for a in [0.0, 0.1, 1.0, 10.0, 1e3, 1e6] {
        let (v, dl) = penalty_resolvent(&u, a)?;
        println!("{a:>10.1e} {:>12.8} {:>12.8}", norm_h(&v), norm_h(&dl));
    }
    Ok(())
}
