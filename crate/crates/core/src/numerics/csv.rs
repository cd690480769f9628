//! Text formats for complex scalars, vectors and matrices.
//!
//! Scalars use the `a+bi` grammar (`1.5-0.25i`, `2`, `-3i`, `i`, `1e-3+2e-4i`).
//! Vectors are comma-separated scalars; matrices are one vector per line.

use std::path::Path;

use super::matrix::{ComplexMatrix, C64};
use crate::error::{Error, Result};

const GRAMMAR: &str = "expected a complex literal of the form `a+bi`, `a`, or `bi` (e.g. `1.5-0.25i`)";

fn parse_real(s: &str, whole: &str) -> Result<f64> {
    let v: f64 = s
        .parse()
        .map_err(|_| Error::Parse(format!("malformed complex literal `{whole}`: {GRAMMAR}")))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!("non-finite complex literal `{whole}`")));
    }
    Ok(v)
}

fn parse_imag_coefficient(s: &str, whole: &str) -> Result<f64> {
    match s {
        "" | "+" => Ok(1.0),
        "-" => Ok(-1.0),
        _ => parse_real(s, whole),
    }
}

/// Parses one complex literal; surrounding whitespace is ignored.
pub fn parse_complex(text: &str) -> Result<C64> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err(Error::Parse(format!("empty complex literal: {GRAMMAR}")));
    }
    let Some(body) = s.strip_suffix(['i', 'j']) else {
        return Ok(C64::new(parse_real(&s, text)?, 0.0));
    };
    // Split at the last sign that is not a leading sign or an exponent sign.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    match split {
        Some(k) => {
            let re = parse_real(&body[..k], text)?;
            let im = parse_imag_coefficient(&body[k..], text)?;
            Ok(C64::new(re, im))
        }
        None => Ok(C64::new(0.0, parse_imag_coefficient(body, text)?)),
    }
}

/// Formats a scalar in the `a+bi` grammar using shortest round-trip digits.
pub fn format_complex(z: C64) -> String {
    // Normalize negative zero so output is stable.
    let re = if z.re == 0.0 { 0.0 } else { z.re };
    let im = if z.im == 0.0 { 0.0 } else { z.im };
    if im.is_sign_negative() {
        format!("{re}-{}i", -im)
    } else {
        format!("{re}+{im}i")
    }
}

/// Comma-separated list of complex literals.
pub fn parse_vector(text: &str) -> Result<Vec<C64>> {
    text.split(',').map(parse_complex).collect()
}

pub fn format_vector(v: &[C64]) -> String {
    v.iter().map(|&z| format_complex(z)).collect::<Vec<_>>().join(",")
}

/// Reads a matrix from CSV text, one row per non-empty line.
pub fn parse_matrix(text: &str) -> Result<ComplexMatrix> {
    let rows: Vec<Vec<C64>> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(parse_vector)
        .collect::<Result<_>>()?;
    if rows.is_empty() {
        return Err(Error::Parse("empty matrix file".into()));
    }
    ComplexMatrix::from_rows(&rows)
}

pub fn format_matrix(m: &ComplexMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        out.push_str(&format_vector(&m.row(i)));
        out.push('\n');
    }
    out
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<ComplexMatrix> {
    let text =
        std::fs::read_to_string(path.as_ref()).map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    parse_matrix(&text)
}

pub fn write_matrix(path: impl AsRef<Path>, m: &ComplexMatrix) -> Result<()> {
    std::fs::write(path, format_matrix(m))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn literal_forms() {
        assert_eq!(parse_complex("1.5-0.25i").unwrap(), C64::new(1.5, -0.25));
        assert_eq!(parse_complex(" 2 ").unwrap(), C64::new(2.0, 0.0));
        assert_eq!(parse_complex("-3i").unwrap(), C64::new(0.0, -3.0));
        assert_eq!(parse_complex("i").unwrap(), C64::new(0.0, 1.0));
        assert_eq!(parse_complex("-i").unwrap(), C64::new(0.0, -1.0));
        assert_eq!(parse_complex("1-i").unwrap(), C64::new(1.0, -1.0));
        assert_eq!(parse_complex("1e-3+2E-4i").unwrap(), C64::new(1e-3, 2e-4));
        assert_eq!(parse_complex("-1e+2-1e-2i").unwrap(), C64::new(-100.0, -0.01));
        assert_eq!(parse_complex("0.5 + 0.5 i").unwrap(), C64::new(0.5, 0.5));
    }

    #[test]
    fn malformed_literals_are_rejected() {
        for bad in ["", "abc", "1+2", "1++2i", "nan", "1.2.3i"] {
            assert!(parse_complex(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn matrix_text_round_trip() {
        let text = "1+0i, 0.5-2i\n-0i,3.25+1e-20i\n\n";
        let m = parse_matrix(text).unwrap();
        assert_eq!(m.shape(), (2, 2));
        assert_eq!(parse_matrix(&format_matrix(&m)).unwrap(), m);
    }

    proptest! {
        #[test]
        fn scalar_format_round_trips_bit_exactly(re in -1e12f64..1e12, im in -1e12f64..1e12) {
            let z = C64::new(re, im);
            let back = parse_complex(&format_complex(z)).unwrap();
            prop_assert_eq!(back.re.to_bits(), if re == 0.0 { 0.0f64.to_bits() } else { re.to_bits() });
            prop_assert_eq!(back.im.to_bits(), if im == 0.0 { 0.0f64.to_bits() } else { im.to_bits() });
        }
    }
}
