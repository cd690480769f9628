//! Point, direction and curve literals, interpreted against a kernel's domain.
//!
//! Vector domains take comma-separated complex numbers (`0.5`, `1+2i,-i`).
//! Matrix domains take `seed:<u64>` for a reproducible random element or
//! `@<file.csv>` for an explicit matrix.

use kernel_connect::connections::Curve;
use kernel_connect::grassmann::{off_diagonal_part, HermitianProjector};
use kernel_connect::kernels::{BasePoint, Domain, TangentVector};
use kernel_connect::numerics::csv::{parse_vector, read_matrix};
use kernel_connect::numerics::ComplexMatrix;
use kernel_connect::random::{random_anti_hermitian, random_unitary, seeded_rng};
use kernel_connect::{Error, Result};

enum MatrixLiteral {
    Seed(u64),
    File(ComplexMatrix),
}

fn matrix_literal(text: &str) -> Result<MatrixLiteral> {
    if let Some(seed) = text.strip_prefix("seed:") {
        let seed = seed
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad seed in `{text}`")))?;
        Ok(MatrixLiteral::Seed(seed))
    } else if let Some(path) = text.strip_prefix('@') {
        Ok(MatrixLiteral::File(read_matrix(path)?))
    } else {
        Err(Error::Parse(format!(
            "expected `seed:<n>` or `@<file.csv>`, got `{text}`"
        )))
    }
}

fn vector_len(domain: &Domain) -> Option<usize> {
    match domain {
        Domain::Disk | Domain::HalfPlane => Some(1),
        Domain::Complex { dim } => Some(*dim),
        _ => None,
    }
}

fn checked_vector(text: &str, len: usize) -> Result<Vec<kernel_connect::numerics::C64>> {
    let v = parse_vector(text)?;
    if v.len() != len {
        return Err(Error::DimensionMismatch(format!(
            "expected {len} coordinates, got {}",
            v.len()
        )));
    }
    Ok(v)
}

pub fn parse_point(domain: &Domain, text: &str) -> Result<BasePoint> {
    let point = if let Some(len) = vector_len(domain) {
        BasePoint::Vector(checked_vector(text, len)?)
    } else {
        match (domain, matrix_literal(text)?) {
            (Domain::Unitary { n }, MatrixLiteral::Seed(seed)) => BasePoint::Unitary(random_unitary(*n, seed)),
            (Domain::Unitary { .. }, MatrixLiteral::File(m)) => BasePoint::Unitary(m),
            (Domain::Grassmann { n, rank }, MatrixLiteral::Seed(seed)) => {
                BasePoint::Grass(HermitianProjector::coordinate(*n, *rank)?.conjugated(&random_unitary(*n, seed))?)
            }
            (Domain::Grassmann { .. }, MatrixLiteral::File(m)) => BasePoint::Grass(HermitianProjector::new(m)?),
            _ => return Err(Error::Precondition(format!("cannot parse points for {domain:?}"))),
        }
    };
    domain.check(&point)?;
    Ok(point)
}

pub fn parse_direction(domain: &Domain, at: &BasePoint, text: &str) -> Result<TangentVector> {
    if let Some(len) = vector_len(domain) {
        return Ok(TangentVector::Vector(checked_vector(text, len)?));
    }
    let raw = |n: usize| -> Result<ComplexMatrix> {
        match matrix_literal(text)? {
            MatrixLiteral::Seed(seed) => Ok(random_anti_hermitian(&mut seeded_rng(seed), n)),
            MatrixLiteral::File(m) => Ok(m),
        }
    };
    let x = match (domain, at) {
        (Domain::Unitary { n }, _) => TangentVector::AntiHermitian(raw(*n)?),
        // Only the part off the block diagonal of p moves the subspace.
        (Domain::Grassmann { n, .. }, BasePoint::Grass(p)) => TangentVector::Grass(off_diagonal_part(p, &raw(*n)?)?),
        _ => return Err(Error::Precondition(format!("cannot parse directions for {domain:?}"))),
    };
    let skew = x.anti_hermitian_residual();
    if skew >= 1e-10 {
        return Err(Error::Precondition(format!(
            "direction is not anti-Hermitian (residual {skew:e})"
        )));
    }
    Ok(x)
}

/// `line:<start>:<direction>`, the curve `t ↦ start + t·direction` on `[0, 1]`.
pub fn parse_curve(domain: &Domain, text: &str) -> Result<Curve> {
    let len =
        vector_len(domain).ok_or_else(|| Error::Precondition("curves are supported on vector domains only".into()))?;
    let body = text
        .strip_prefix("line:")
        .ok_or_else(|| Error::Parse(format!("expected `line:<start>:<direction>`, got `{text}`")))?;
    let (start, dir) = body
        .split_once(':')
        .ok_or_else(|| Error::Parse(format!("expected `line:<start>:<direction>`, got `{text}`")))?;
    let (start, dir) = (checked_vector(start, len)?, checked_vector(dir, len)?);
    for t in [0.0, 1.0] {
        let p: Vec<_> = start.iter().zip(&dir).map(|(a, b)| a + b * t).collect();
        domain.check(&BasePoint::Vector(p))?;
    }
    Curve::line(start, dir)
}

#[cfg(test)]
mod tests {
    use super::*;
    use kernel_connect::numerics::c64;

    #[test]
    fn vector_points() {
        let p = parse_point(&Domain::Disk, "0.5").unwrap();
        assert_eq!(p, BasePoint::scalar(c64(0.5, 0.0)));
        assert!(parse_point(&Domain::Disk, "1.5").is_err());
        assert!(parse_point(&Domain::Complex { dim: 2 }, "1").is_err());
        assert!(parse_point(&Domain::HalfPlane, "-0.5-i").is_err());
    }

    #[test]
    fn seeded_matrix_points() {
        let d = Domain::Grassmann { n: 4, rank: 2 };
        let p = parse_point(&d, "seed:3").unwrap();
        assert_eq!(p, parse_point(&d, "seed:3").unwrap());
        let x = parse_direction(&d, &p, "seed:4").unwrap();
        assert!(x.anti_hermitian_residual() < 1e-12);
        assert!(parse_point(&d, "0.5").is_err());
    }

    #[test]
    fn curves() {
        assert!(parse_curve(&Domain::Disk, "line:0:0.9").is_ok());
        assert!(parse_curve(&Domain::Disk, "line:0:1.2").is_err());
        assert!(parse_curve(&Domain::Disk, "circle:0").is_err());
    }
}
