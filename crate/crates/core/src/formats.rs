//! Versioned text formats for fields and path dumps.
//!
//! Every file starts with a line `reflectx-format v1 <kind> [key=value ...]`.
//! Floats are written in Rust's shortest round-trip form, so reading a file
//! back reproduces the values bit for bit.

use std::io::{BufRead, Write};

use num_complex::Complex64;
use thiserror::Error;

use crate::field::{FieldError, SpectralField, Wavevector};
use crate::integrator::ReflectionPath;

pub const FORMAT_TAG: &str = "reflectx-format v1";
pub const FIELD_COLUMNS: &str = "kx,ky,re_x,im_x,re_y,im_y";
pub const PATH_COLUMNS: &str = "t,h_norm,v_norm,penetration,dl_norm,var_l,v_norm_integral";

#[derive(Debug, Error)]
pub enum FormatError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("bad header: expected `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Writes every mode of `field` as one CSV row.
pub fn write_field_csv<W: Write>(field: &SpectralField, mut out: W) -> Result<(), FormatError> {
    writeln!(out, "{FORMAT_TAG} field cutoff={}", field.cutoff())?;
    writeln!(out, "{FIELD_COLUMNS}")?;
    for (k, c) in field.modes() {
        writeln!(
            out,
            "{},{},{:?},{:?},{:?},{:?}",
            k.kx, k.ky, c[0].re, c[0].im, c[1].re, c[1].im
        )?;
    }
    Ok(())
}

pub fn read_field_csv<R: BufRead>(input: R) -> Result<SpectralField, FormatError> {
    let mut lines = input.lines().enumerate();
    let header = match lines.next() {
        Some((_, l)) => l?,
        None => {
            return Err(FormatError::Header {
                expected: format!("{FORMAT_TAG} field cutoff=<K>"),
                found: String::new(),
            })
        }
    };
    let cutoff = header
        .strip_prefix(FORMAT_TAG)
        .and_then(|rest| rest.trim().strip_prefix("field cutoff="))
        .and_then(|k| k.trim().parse::<usize>().ok())
        .ok_or_else(|| FormatError::Header {
            expected: format!("{FORMAT_TAG} field cutoff=<K>"),
            found: header.clone(),
        })?;
    match lines.next() {
        Some((_, l)) if l.as_ref().map(|s| s.trim() == FIELD_COLUMNS).unwrap_or(false) => {}
        Some((_, l)) => {
            return Err(FormatError::Header {
                expected: FIELD_COLUMNS.into(),
                found: l?,
            })
        }
        None => {
            return Err(FormatError::Header {
                expected: FIELD_COLUMNS.into(),
                found: String::new(),
            })
        }
    }
    let mut field = SpectralField::zeros(cutoff);
    for (i, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| FormatError::Parse { line: i + 1, message };
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 6 {
            return Err(parse_err(format!("expected 6 columns, found {}", cols.len())));
        }
        let kx: i32 = cols[0].parse().map_err(|e| parse_err(format!("kx: {e}")))?;
        let ky: i32 = cols[1].parse().map_err(|e| parse_err(format!("ky: {e}")))?;
        let mut v = [0.0; 4];
        for (slot, s) in v.iter_mut().zip(&cols[2..]) {
            *slot = s.parse().map_err(|e| parse_err(format!("`{s}`: {e}")))?;
        }
        let k = Wavevector::new(kx, ky);
        if !k.fits(cutoff) {
            return Err(parse_err(format!("mode ({kx}, {ky}) outside cutoff {cutoff}")));
        }
        let idx = field.index_of(k);
        field.coeffs_mut()[idx] = [Complex64::new(v[0], v[1]), Complex64::new(v[2], v[3])];
    }
    field.validate()?;
    Ok(field)
}

/// Per-step scalar dump of a path.
pub fn write_path_csv<W: Write>(path: &ReflectionPath, mut out: W) -> Result<(), FormatError> {
    writeln!(
        out,
        "{FORMAT_TAG} path n={:?} dt={:?} seed={}",
        path.n_penalty, path.dt, path.seed
    )?;
    writeln!(out, "{PATH_COLUMNS}")?;
    for r in &path.records {
        writeln!(
            out,
            "{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
            r.t,
            r.h_norm,
            r.v_norm,
            r.penetration(),
            r.dl_norm,
            r.var_l,
            r.v_norm_integral
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    proptest! {
        #[test]
        fn field_csv_round_trips(seed in any::<u64>(), cutoff in 1usize..6, decay in 0.0f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = SpectralField::random(cutoff, decay, &mut rng);
            let mut buf = Vec::new();
            write_field_csv(&u, &mut buf).unwrap();
            let back = read_field_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(back, u);
        }
    }

    #[test]
    fn rejects_unversioned_files() {
        let text = "kx,ky,re_x,im_x,re_y,im_y\n0,0,0,0,0,0\n";
        assert!(matches!(read_field_csv(text.as_bytes()), Err(FormatError::Header { .. })));
    }

    #[test]
    fn reports_bad_rows_with_line_numbers() {
        let text = format!("{FORMAT_TAG} field cutoff=1\n{FIELD_COLUMNS}\n0,0,1,0,0\n");
        match read_field_csv(text.as_bytes()) {
            Err(FormatError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }
}
