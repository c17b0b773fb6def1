//! Distribution parsing and number formatting for file interchange.
//!
//! Distributions parse from JSON arrays of reals and from CSV rows (one
//! row of masses). Numbers are emitted with 17 significant digits so files
//! round-trip through text exactly.

use std::path::Path;

use thiserror::Error;

use crate::dist::{Dist, DistError};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{path}: {source}")]
    BadDist { path: String, source: DistError },
}

/// 17 significant digits: enough to reconstruct any binary64 exactly.
pub fn format_f64(x: f64) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{x:.16e}")
}

/// Parse a distribution from a JSON array (`[0.5, 0.5]`) or a CSV row
/// (`0.5, 0.5`), depending on the first non-space byte.
pub fn parse_dist(text: &str, origin: &str) -> Result<Dist, IoError> {
    let trimmed = text.trim();
    let masses: Vec<f64> = if trimmed.starts_with('[') {
        serde_json::from_str(trimmed).map_err(|e| IoError::Parse {
            path: origin.into(),
            message: e.to_string(),
        })?
    } else {
        let row = trimmed.lines().next().unwrap_or_default();
        row.split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| IoError::Parse {
                path: origin.into(),
                message: e.to_string(),
            })?
    };
    Dist::normalized(masses).map_err(|source| IoError::BadDist {
        path: origin.into(),
        source,
    })
}

pub fn read_dist(path: &Path) -> Result<Dist, IoError> {
    let text = std::fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.display().to_string(),
        source,
    })?;
    parse_dist(&text, &path.display().to_string())
}

/// Emit a distribution as a JSON array with exact round-tripping.
pub fn dist_to_json(d: &Dist) -> String {
    serde_json::to_string(d.probs()).expect("serializable")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_json_and_csv() {
        let a = parse_dist("[0.25, 0.75]", "t").unwrap();
        let b = parse_dist("0.25, 0.75\n", "t").unwrap();
        assert_eq!(a, b);
        assert!(parse_dist("[0.5, 0.4]", "t").is_err());
        assert!(parse_dist("0.5; 0.5", "t").is_err());
    }

    #[test]
    fn formatted_floats_roundtrip() {
        for x in [0.1, 1.0 / 3.0, 2e-17, 123456.789, 5e-324] {
            let s = format_f64(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(format_f64(f64::INFINITY), "inf");
    }

    #[test]
    fn dist_json_roundtrips() {
        let d = Dist::new(vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0 - 1e-16 + 1e-16]).unwrap_or_else(
            |_| Dist::normalized(vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]).unwrap(),
        );
        let s = dist_to_json(&d);
        let back = parse_dist(&s, "t").unwrap();
        assert_eq!(back.probs(), d.probs());
    }
}
