//! Evaluates the dealiased convection term and checks the skew symmetry
//! `b(u, v, w) = -b(u, w, v)` that makes it conserve energy.
//!
//! ```text
//! cargo run --release --example convection_identities -- [cutoff]
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use reflectx::operators::dealiased_grid_size;
use reflectx::{inner_h, norm_h, Convection, SpectralField};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cutoff: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(16);
    let mut conv = Convection::new(cutoff);
    println!("cutoff K = {cutoff}, physical grid {0} x {0}", dealiased_grid_size(cutoff));

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let u = SpectralField::random(cutoff, 1.0, &mut rng);
        let v = SpectralField::random(cutoff, 1.0, &mut rng);
        let w = SpectralField::random(cutoff, 1.0, &mut rng);
        let buv = conv.apply(&u, &v)?;
        let buw = conv.apply(&u, &w)?;
        let a = inner_h(&buv, &w)?;
        let b = inner_h(&buw, &v)?;
        let scale = norm_h(&buv) * norm_h(&w) + norm_h(&buw) * norm_h(&v);
        worst = worst.max((a + b).abs() / scale);
    }
    println!("max |b(u,v,w) + b(u,w,v)| / scale over 20 triples: {worst:.2e}");

    let u = SpectralField::random(cutoff, 1.0, &mut rng);
    let b = conv.apply_self(&u)?;
    println!("|B(u,u)|_H = {:.6}, (B(u,u), u)_H = {:.2e}", norm_h(&b), inner_h(&b, &u)?);
    Ok(())
}
