//! Text formats: the matrix file, fixed-precision numbers and atomic writes.
//!
//! Matrix file: a header line `modes=<m>` followed by `m` rows of `m`
//! whitespace-separated entries `<re><+|-><|im|>j`. Components use Rust's
//! shortest round-trip float formatting, so parsing a written file gives back
//! the identical bits (signed zeros included).

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::unitary::UnitaryMatrix;

/// Formats `x` with 12 significant digits in the style of C's `%.12g`.
pub fn format_sig12(x: f64) -> String {
    format_significant(x, 12)
}

pub fn format_significant(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        format!(
            "{}e{}{:02}",
            trim_zeros(mantissa),
            if exp < 0 { '-' } else { '+' },
            exp.abs()
        )
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn format_complex(z: Complex64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{}{}{}j", z.re, sign, z.im.abs())
}

fn parse_complex(token: &str, line: usize) -> Result<Complex64> {
    let err = |message: String| Error::Parse { line, message };
    let body = token
        .strip_suffix('j')
        .ok_or_else(|| err(format!("entry {token:?} does not end in 'j'")))?;
    // split at the last sign that is neither leading nor part of an exponent
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'))
        .ok_or_else(|| err(format!("entry {token:?} has no imaginary part")))?;
    let re: f64 = body[..split]
        .parse()
        .map_err(|_| err(format!("bad real part in {token:?}")))?;
    let im: f64 = body[split..]
        .parse()
        .map_err(|_| err(format!("bad imaginary part in {token:?}")))?;
    Ok(Complex64::new(re, im))
}

pub fn write_matrix_string(m: &Array2<Complex64>) -> String {
    let mut out = format!("modes={}\n", m.nrows());
    for row in m.rows() {
        let entries: Vec<String> = row.iter().map(|&z| format_complex(z)).collect();
        out.push_str(&entries.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_matrix_str(text: &str) -> Result<Array2<Complex64>> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (hline, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "empty matrix file".into(),
    })?;
    let modes: usize = header
        .trim()
        .strip_prefix("modes=")
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| Error::Parse {
            line: hline + 1,
            message: format!("expected 'modes=<m>', got {header:?}"),
        })?;
    let mut m = Array2::zeros((modes, modes));
    let mut rows = 0;
    for (idx, line) in lines {
        if rows == modes {
            return Err(Error::Parse {
                line: idx + 1,
                message: format!("more than {modes} rows"),
            });
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != modes {
            return Err(Error::Parse {
                line: idx + 1,
                message: format!("expected {modes} entries, got {}", tokens.len()),
            });
        }
        for (col, t) in tokens.iter().enumerate() {
            m[(rows, col)] = parse_complex(t, idx + 1)?;
        }
        rows += 1;
    }
    if rows != modes {
        return Err(Error::Parse {
            line: text.lines().count(),
            message: format!("expected {modes} rows, got {rows}"),
        });
    }
    Ok(m)
}

pub fn write_unitary(path: &Path, u: &UnitaryMatrix) -> std::io::Result<()> {
    write_atomic(path, write_matrix_string(u.entries()).as_bytes())
}

pub fn read_unitary(path: &Path) -> Result<UnitaryMatrix> {
    let text = fs::read_to_string(path).map_err(|e| Error::Parse {
        line: 0,
        message: format!("{}: {e}", path.display()),
    })?;
    UnitaryMatrix::new(parse_matrix_str(&text)?)
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::fourier_matrix;
    use proptest::prelude::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(format_sig12(2.0 / 9.0), "0.222222222222");
        assert_eq!(format_sig12(0.5), "0.5");
        assert_eq!(format_sig12(1.0), "1");
        assert_eq!(format_sig12(0.0), "0");
        assert_eq!(format_sig12(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_sig12(1.5e-20), "1.5e-20");
        assert_eq!(format_sig12(123456789012345.0), "1.23456789012e+14");
        assert_eq!(format_sig12(-0.09375), "-0.09375");
        assert_eq!(format_sig12(3.0000000000001e-6), "3e-06");
    }

    #[test]
    fn matrix_text_layout() {
        let text = write_matrix_string(fourier_matrix(2).unwrap().entries());
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("modes=2"));
        assert_eq!(
            lines.next(),
            Some("0.7071067811865475+0j 0.7071067811865475+0j")
        );
        assert!(lines
            .next()
            .unwrap()
            .starts_with("0.7071067811865475+0j -0.7071067811865475"));
    }

    #[test]
    fn malformed_matrix_files() {
        assert!(parse_matrix_str("").is_err());
        assert!(parse_matrix_str("dim=1\n1+0j\n").is_err());
        assert!(parse_matrix_str("modes=2\n1+0j 0+0j\n").is_err());
        assert!(parse_matrix_str("modes=1\n1+0\n").is_err());
        assert!(parse_matrix_str("modes=1\n1+0j 2+0j\n").is_err());
        assert_eq!(
            parse_matrix_str("modes=1\n-1e-3-2.5E+2j\n").unwrap()[(0, 0)],
            Complex64::new(-1e-3, -250.0)
        );
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.txt");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    proptest! {
        #[test]
        fn matrix_round_trip_is_bit_exact(
            entries in proptest::collection::vec((any::<f64>(), any::<f64>()), 1..=16usize)
                .prop_filter("finite", |v| v.iter().all(|(a, b)| a.is_finite() && b.is_finite()))
        ) {
            let k = (entries.len() as f64).sqrt() as usize;
            let m = Array2::from_shape_fn((k, k), |(i, j)| {
                let (re, im) = entries[i * k + j];
                Complex64::new(re, im)
            });
            let back = parse_matrix_str(&write_matrix_string(&m)).unwrap();
            for (a, b) in m.iter().zip(back.iter()) {
                prop_assert_eq!(a.re.to_bits(), b.re.to_bits());
                prop_assert_eq!(a.im.to_bits(), b.im.to_bits());
            }
        }
    }
}
