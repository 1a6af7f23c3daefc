//! Probability-vector file ingestion: CSV rows of `k` numerals, streamed one
//! row at a time so datasets larger than memory still work.

use std::fmt;
use std::io::BufRead;

use modegap::{parse_rational, ProbVector, Rational};

#[derive(Debug)]
pub enum ProbParseError {
    Io(std::io::Error),
    BadNumeral {
        row: usize,
        field: usize,
        message: String,
    },
    WrongWidth {
        row: usize,
        expected: usize,
        found: usize,
    },
    Negative {
        row: usize,
    },
    NotNormalized {
        row: usize,
        sum: String,
    },
}

impl fmt::Display for ProbParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProbParseError::Io(e) => write!(f, "i/o error while reading vectors: {e}"),
            ProbParseError::BadNumeral { row, field, message } => {
                write!(f, "row {row}, field {field}: {message}")
            }
            ProbParseError::WrongWidth { row, expected, found } => {
                write!(f, "row {row}: found {found} fields, expected {expected}")
            }
            ProbParseError::Negative { row } => {
                write!(f, "row {row}: negative probability")
            }
            ProbParseError::NotNormalized { row, sum } => {
                write!(f, "row {row}: components sum to {sum}, not 1")
            }
        }
    }
}

/// Streaming reader over probability rows. When `renormalize` is set, rows
/// whose exact sum differs from 1 by at most 1e-6 are divided through by
/// their sum; anything further off is an error either way.
pub struct ProbReader<R> {
    lines: std::io::Lines<R>,
    k: usize,
    renormalize: bool,
    row: usize,
}

impl<R: BufRead> ProbReader<R> {
    pub fn new(reader: R, k: usize, renormalize: bool) -> Self {
        ProbReader {
            lines: reader.lines(),
            k,
            renormalize,
            row: 0,
        }
    }
}

impl<R: BufRead> Iterator for ProbReader<R> {
    type Item = Result<ProbVector, ProbParseError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => return Some(Err(ProbParseError::Io(e))),
            };
            if line.trim().is_empty() {
                continue;
            }
            self.row += 1;
            return Some(parse_row(&line, self.row, self.k, self.renormalize));
        }
    }
}

fn parse_row(
    line: &str,
    row: usize,
    k: usize,
    renormalize: bool,
) -> Result<ProbVector, ProbParseError> {
    let mut values = Vec::with_capacity(k);
    for (idx, field) in line.split(',').enumerate() {
        let value = parse_rational(field).map_err(|e| ProbParseError::BadNumeral {
            row,
            field: idx + 1,
            message: e.to_string(),
        })?;
        values.push(value);
    }
    if values.len() != k {
        return Err(ProbParseError::WrongWidth {
            row,
            expected: k,
            found: values.len(),
        });
    }
    if values.iter().any(|v| *v < Rational::from_integer(0.into())) {
        return Err(ProbParseError::Negative { row });
    }
    let one = Rational::from_integer(1.into());
    let sum: Rational = values.iter().sum();
    if sum != one {
        let gap = if sum > one { &sum - &one } else { &one - &sum };
        let tolerance = Rational::new(1.into(), 1_000_000.into());
        if !(renormalize && gap <= tolerance) {
            return Err(ProbParseError::NotNormalized {
                row,
                sum: modegap::format_rational(&sum),
            });
        }
        for v in &mut values {
            *v /= &sum;
        }
    }
    ProbVector::new(values).map_err(|e| ProbParseError::BadNumeral {
        row,
        field: 0,
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn read_all(text: &str, k: usize, renorm: bool) -> Result<Vec<ProbVector>, ProbParseError> {
        ProbReader::new(Cursor::new(text.to_owned()), k, renorm).collect()
    }

    fn rat(s: &str) -> Rational {
        parse_rational(s).unwrap()
    }

    #[test]
    fn reads_decimal_rows_exactly() {
        let rows = read_all("0.25,0.75\n", 2, false).unwrap();
        assert_eq!(rows[0].probs(), &[rat("1/4"), rat("3/4")]);
    }

    #[test]
    fn renormalizes_within_tolerance_only() {
        // Sums to exactly 1 already.
        let rows = read_all("0.3333,0.3333,0.3334\n", 3, true).unwrap();
        assert_eq!(
            rows[0].probs(),
            &[rat("3333/10000"), rat("3333/10000"), rat("3334/10000")]
        );

        // Off by exactly 1e-6: renormalized to thirds.
        let rows = read_all("0.333333,0.333333,0.333333\n", 3, true).unwrap();
        assert_eq!(rows[0].probs(), &[rat("1/3"), rat("1/3"), rat("1/3")]);

        // Same row without the flag fails.
        let err = read_all("0.333333,0.333333,0.333333\n", 3, false).unwrap_err();
        assert!(matches!(err, ProbParseError::NotNormalized { row: 1, .. }));

        // Far from 1 fails even with the flag.
        let err = read_all("0.5,0.6\n", 2, true).unwrap_err();
        assert!(matches!(err, ProbParseError::NotNormalized { row: 1, .. }));
    }

    #[test]
    fn reports_row_level_problems() {
        assert!(matches!(
            read_all("1/2,1/2\n0.5,x\n", 2, false).unwrap_err(),
            ProbParseError::BadNumeral { row: 2, field: 2, .. }
        ));
        assert!(matches!(
            read_all("1/2,1/2,0\n", 2, false).unwrap_err(),
            ProbParseError::WrongWidth { row: 1, expected: 2, found: 3 }
        ));
        assert!(matches!(
            read_all("3/2,-1/2\n", 2, false).unwrap_err(),
            ProbParseError::Negative { row: 1 }
        ));
    }

    #[test]
    fn skips_blank_lines() {
        let rows = read_all("\n1/2,1/2\n\n0,1\n", 2, false).unwrap();
        assert_eq!(rows.len(), 2);
    }
}
