//! Writes a field and a path to the versioned CSV formats and reads the
//! field back.
//!
//! ```text
//! cargo run --example field_io -- [out-dir]
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use reflectx::formats::{read_field_csv, write_field_csv, write_path_csv};
use reflectx::{parse_config, simulate_path, SpectralField};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "reflectx-out/io".into()).into();
    std::fs::create_dir_all(&dir)?;

    let u = SpectralField::random(4, 1.5, &mut ChaCha8Rng::seed_from_u64(2));
    let field_path = dir.join("field.csv");
    write_field_csv(&u, BufWriter::new(File::create(&field_path)?))?;
    let back = read_field_csv(BufReader::new(File::open(&field_path)?))?;
    println!("{}: {} modes, round trip exact: {}", field_path.display(), u.coeffs().len(), back == u);

    let spec = parse_config(include_str!("../configs/smoke.toml"))?;
    let path = simulate_path(&spec.base)?;
    let path_file = dir.join("path.csv");
    write_path_csv(&path, BufWriter::new(File::create(&path_file)?))?;
    println!("{}: {} rows", path_file.display(), path.records.len());
    Ok(())
}
