//! Loss matrices over `k` classes, the reasonableness check, and reduction to
//! canonical form (zero diagonal, nonnegative off-diagonals averaging to one).
//!
//! Entry `(i, j)` is the cost of deciding class `i` when class `j` realizes.
//! Labels are 1-based in the public API and in all serialized output; the
//! backing grid is 0-based.

use num_traits::Zero;
use serde_json::Value;
use thiserror::Error;

use crate::rational::{format_rational, parse_rational, ParseRationalError, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CostMatrixError {
    #[error("cost matrix must be at least 2x2")]
    TooSmall,
    #[error("row {row} has {found} entries, expected {expected}")]
    Ragged {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("matrix is not reasonable: {reason}")]
    NotReasonable { reason: String },
    #[error("bad label indices: {reason}")]
    BadIndices { reason: String },
}

/// Parse failure for the matrix file formats, with input position.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatrixParseError {
    #[error("line {line}, field {field}: {source}")]
    BadNumeral {
        line: usize,
        field: usize,
        source: ParseRationalError,
    },
    #[error("line {line}: found {found} fields, expected {expected}")]
    FieldCount {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("matrix is not square: {rows} rows of {cols} columns")]
    NotSquare { rows: usize, cols: usize },
    #[error("invalid matrix JSON: {0}")]
    Json(String),
    #[error(transparent)]
    Shape(#[from] CostMatrixError),
}

/// A `k x k` grid of exact rational losses; `entry(i, j)` is the loss of
/// deciding `i` when `j` realizes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostMatrix {
    entries: Vec<Vec<Rational>>,
}

impl CostMatrix {
    /// Build from a row-major grid. Requires a square grid with `k >= 2`.
    pub fn new(entries: Vec<Vec<Rational>>) -> Result<Self, CostMatrixError> {
        let k = entries.len();
        if k < 2 {
            return Err(CostMatrixError::TooSmall);
        }
        for (i, row) in entries.iter().enumerate() {
            if row.len() != k {
                return Err(CostMatrixError::Ragged {
                    row: i + 1,
                    found: row.len(),
                    expected: k,
                });
            }
        }
        Ok(CostMatrix { entries })
    }

    /// The zero-one (misclassification) loss on `k` classes.
    pub fn zero_one(k: usize) -> Self {
        assert!(k >= 2, "zero-one loss needs k >= 2");
        let entries = (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| {
                        if i == j {
                            Rational::zero()
                        } else {
                            Rational::from_integer(1.into())
                        }
                    })
                    .collect()
            })
            .collect();
        CostMatrix { entries }
    }

    /// The symmetric ternary family `[[0,a,b],[a,0,3-a-b],[b,3-a-b,0]]`.
    pub fn symmetric_ternary(a: Rational, b: Rational) -> Self {
        let c = Rational::from_integer(3.into()) - &a - &b;
        let zero = Rational::zero;
        CostMatrix {
            entries: vec![
                vec![zero(), a.clone(), b.clone()],
                vec![a, zero(), c.clone()],
                vec![b, c, zero()],
            ],
        }
    }

    pub fn k(&self) -> usize {
        self.entries.len()
    }

    /// Loss of deciding `decision` when `truth` realizes; labels are 1-based.
    pub fn entry(&self, decision: usize, truth: usize) -> &Rational {
        let k = self.k();
        assert!(
            (1..=k).contains(&decision) && (1..=k).contains(&truth),
            "labels must lie in 1..={k}"
        );
        &self.entries[decision - 1][truth - 1]
    }

    /// Raw row-major grid; row `i` holds the losses of decision `i + 1`.
    pub fn entries(&self) -> &[Vec<Rational>] {
        &self.entries
    }

    /// Check the reasonableness condition: within each row the diagonal is
    /// minimal, with at least one strictly larger off-diagonal entry somewhere.
    pub fn validate_reasonable(&self) -> ReasonablenessReport {
        let k = self.k();
        let mut violations = Vec::new();
        let mut has_strict = false;
        for i in 0..k {
            for j in 0..k {
                if i == j {
                    continue;
                }
                if self.entries[i][j] < self.entries[i][i] {
                    violations.push((i + 1, j + 1));
                } else if self.entries[i][j] > self.entries[i][i] {
                    has_strict = true;
                }
            }
        }
        ReasonablenessReport {
            is_reasonable: violations.is_empty() && has_strict,
            violations,
            has_strict,
        }
    }

    /// Reduce to canonical form: subtract `L(j,j)` from column `j`, then scale
    /// so the off-diagonal entries sum to `k(k-1)`. Columnwise shifts and
    /// positive scaling preserve the Bayes argmin set at every probability
    /// vector, so the canonical matrix induces the same decisions.
    pub fn canonicalize(&self) -> Result<CanonicalCostMatrix, CostMatrixError> {
        let report = self.validate_reasonable();
        if !report.is_reasonable {
            let reason = if report.has_strict {
                format!(
                    "{} off-diagonal entries lie below their row diagonal, e.g. at {:?}",
                    report.violations.len(),
                    report.violations[0]
                )
            } else {
                "no off-diagonal entry exceeds its row diagonal".to_owned()
            };
            return Err(CostMatrixError::NotReasonable { reason });
        }

        let k = self.k();
        let mut shifted = self.entries.clone();
        for j in 0..k {
            let diag = self.entries[j][j].clone();
            for row in shifted.iter_mut() {
                row[j] -= &diag;
            }
        }
        let mut sum = Rational::zero();
        for (i, row) in shifted.iter().enumerate() {
            for (j, entry) in row.iter().enumerate() {
                if i == j {
                    continue;
                }
                if *entry < Rational::zero() {
                    return Err(CostMatrixError::NotReasonable {
                        reason: format!(
                            "entry ({}, {}) falls below the column diagonal; \
                             the canonical form would be negative",
                            i + 1,
                            j + 1
                        ),
                    });
                }
                sum += entry;
            }
        }
        if sum.is_zero() {
            return Err(CostMatrixError::NotReasonable {
                reason: "all shifted off-diagonal entries are zero".to_owned(),
            });
        }
        let scale = Rational::from_integer((k * (k - 1)).into()) / sum;
        for row in &mut shifted {
            for e in row {
                *e *= &scale;
            }
        }
        Ok(CanonicalCostMatrix {
            inner: CostMatrix { entries: shifted },
        })
    }

    /// Restriction to the given 1-based labels, rows and columns alike, in the
    /// given order. The result is generally not canonical.
    pub fn principal_submatrix(&self, labels: &[usize]) -> Result<CostMatrix, CostMatrixError> {
        let k = self.k();
        if labels.len() < 2 {
            return Err(CostMatrixError::BadIndices {
                reason: format!("need at least 2 labels, got {}", labels.len()),
            });
        }
        let mut seen = vec![false; k];
        for &l in labels {
            if l == 0 || l > k {
                return Err(CostMatrixError::BadIndices {
                    reason: format!("label {l} out of range 1..={k}"),
                });
            }
            if seen[l - 1] {
                return Err(CostMatrixError::BadIndices {
                    reason: format!("duplicate label {l}"),
                });
            }
            seen[l - 1] = true;
        }
        let entries = labels
            .iter()
            .map(|&r| labels.iter().map(|&c| self.entries[r - 1][c - 1].clone()).collect())
            .collect();
        Ok(CostMatrix { entries })
    }

    // ----- file formats (shared with the CLI) -----

    /// Parse the CSV form: `k` lines of `k` comma-separated numerals.
    pub fn from_csv_str(text: &str) -> Result<Self, MatrixParseError> {
        let mut rows: Vec<Vec<Rational>> = Vec::new();
        let mut width = None;
        for (line_idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut row = Vec::new();
            for (field_idx, field) in line.split(',').enumerate() {
                let value = parse_rational(field).map_err(|source| MatrixParseError::BadNumeral {
                    line: line_idx + 1,
                    field: field_idx + 1,
                    source,
                })?;
                row.push(value);
            }
            let expected = *width.get_or_insert(row.len());
            if row.len() != expected {
                return Err(MatrixParseError::FieldCount {
                    line: line_idx + 1,
                    expected,
                    found: row.len(),
                });
            }
            rows.push(row);
        }
        let cols = width.unwrap_or(0);
        if rows.len() != cols || rows.len() < 2 {
            return Err(MatrixParseError::NotSquare {
                rows: rows.len(),
                cols,
            });
        }
        Ok(CostMatrix::new(rows)?)
    }

    /// Parse the JSON form: `{"k": <int>, "entries": [[...], ...]}` with
    /// numerals as strings or numbers. Number tokens are read exactly.
    pub fn from_json_str(text: &str) -> Result<Self, MatrixParseError> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| MatrixParseError::Json(e.to_string()))?;
        let obj = value
            .as_object()
            .ok_or_else(|| MatrixParseError::Json("expected a JSON object".to_owned()))?;
        let k = obj
            .get("k")
            .and_then(Value::as_u64)
            .ok_or_else(|| MatrixParseError::Json("missing integer field \"k\"".to_owned()))?
            as usize;
        let entries = obj
            .get("entries")
            .and_then(Value::as_array)
            .ok_or_else(|| MatrixParseError::Json("missing array field \"entries\"".to_owned()))?;
        if entries.len() != k {
            return Err(MatrixParseError::NotSquare {
                rows: entries.len(),
                cols: k,
            });
        }
        let mut rows = Vec::with_capacity(k);
        for (i, row_val) in entries.iter().enumerate() {
            let row_arr = row_val.as_array().ok_or_else(|| {
                MatrixParseError::Json(format!("entries[{i}] is not an array"))
            })?;
            if row_arr.len() != k {
                return Err(MatrixParseError::FieldCount {
                    line: i + 1,
                    expected: k,
                    found: row_arr.len(),
                });
            }
            let mut row = Vec::with_capacity(k);
            for (j, cell) in row_arr.iter().enumerate() {
                let text = match cell {
                    Value::String(s) => s.clone(),
                    Value::Number(n) => n.to_string(),
                    other => {
                        return Err(MatrixParseError::Json(format!(
                            "entries[{i}][{j}] is {other}, expected a numeral"
                        )))
                    }
                };
                let value =
                    parse_rational(&text).map_err(|source| MatrixParseError::BadNumeral {
                        line: i + 1,
                        field: j + 1,
                        source,
                    })?;
                row.push(value);
            }
            rows.push(row);
        }
        Ok(CostMatrix::new(rows)?)
    }

    /// JSON form with entries as exact `a/b` strings.
    pub fn to_json(&self) -> Value {
        let entries: Vec<Value> = self
            .entries
            .iter()
            .map(|row| Value::Array(row.iter().map(|e| Value::String(format_rational(e))).collect()))
            .collect();
        serde_json::json!({ "k": self.k(), "entries": entries })
    }
}

/// A cost matrix in canonical form: zero diagonal, nonnegative off-diagonals
/// summing to `k(k-1)` exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalCostMatrix {
    inner: CostMatrix,
}

impl CanonicalCostMatrix {
    pub fn inner(&self) -> &CostMatrix {
        &self.inner
    }

    pub fn k(&self) -> usize {
        self.inner.k()
    }

    pub fn entry(&self, decision: usize, truth: usize) -> &Rational {
        self.inner.entry(decision, truth)
    }

    /// True iff every off-diagonal entry equals exactly 1.
    pub fn is_zero_one(&self) -> bool {
        let one = Rational::from_integer(1.into());
        let k = self.k();
        (0..k).all(|i| (0..k).all(|j| i == j || self.inner.entries[i][j] == one))
    }

    /// True iff `entry(i, j) == entry(j, i)` for all pairs.
    pub fn is_symmetric(&self) -> bool {
        let k = self.k();
        (0..k).all(|i| (i + 1..k).all(|j| self.inner.entries[i][j] == self.inner.entries[j][i]))
    }

    pub fn to_json(&self) -> Value {
        self.inner.to_json()
    }
}

/// Outcome of the reasonableness check. `violations` holds 1-based `(i, j)`
/// pairs where the entry falls below its row diagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReasonablenessReport {
    pub is_reasonable: bool,
    pub violations: Vec<(usize, usize)>,
    pub has_strict: bool,
}
