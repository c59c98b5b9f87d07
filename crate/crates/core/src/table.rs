//! Triangular coefficient tables and their CSV / JSON encodings.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{format_rational, to_f64, Rational};

/// Which summation matrix a table holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TableKind {
    Bn {
        alpha: f64,
    },
    BetaBinomial {
        beta: f64,
    },
    Cesaro,
    /// Rows supplied by the caller (loaded from a file, or synthetic).
    Custom {
        label: String,
    },
}

impl TableKind {
    pub fn label(&self) -> String {
        match self {
            TableKind::Bn { alpha } => format!("bn(alpha={alpha})"),
            TableKind::BetaBinomial { beta } => format!("betabin(beta={beta})"),
            TableKind::Cesaro => "cesaro".to_string(),
            TableKind::Custom { label } => label.clone(),
        }
    }
}

/// Lower-triangular matrix of row weights; row `n` holds entries `k = 0..=n`.
///
/// Entries outside the triangle read as zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTable {
    #[serde(flatten)]
    pub kind: TableKind,
    pub n_max: usize,
    pub rows: Vec<Vec<f64>>,
}

impl CoefficientTable {
    /// Builds a table, checking the triangular shape.
    pub fn new(kind: TableKind, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InsufficientData("table has no rows".into()));
        }
        for (n, row) in rows.iter().enumerate() {
            if row.len() != n + 1 {
                return Err(Error::Parse(format!(
                    "row {n} has {} entries, expected {}",
                    row.len(),
                    n + 1
                )));
            }
        }
        Ok(Self {
            kind,
            n_max: rows.len() - 1,
            rows,
        })
    }

    pub fn row(&self, n: usize) -> Option<&[f64]> {
        self.rows.get(n).map(Vec::as_slice)
    }

    /// Total accessor: zero outside `0 <= k <= n <= n_max`.
    pub fn get(&self, n: usize, k: usize) -> f64 {
        self.rows
            .get(n)
            .and_then(|r| r.get(k))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn row_sum(&self, n: usize) -> Option<f64> {
        self.row(n).map(|r| r.iter().sum())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,k,value\n");
        for (n, row) in self.rows.iter().enumerate() {
            for (k, v) in row.iter().enumerate() {
                let _ = writeln!(out, "{n},{k},{}", format_f64(*v));
            }
        }
        out
    }

    /// Parses the `n,k,value` CSV layout; the kind is supplied by the caller.
    pub fn from_csv(text: &str, kind: TableKind) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next() {
            Some(h) if h.trim() == "n,k,value" => {}
            other => {
                return Err(Error::Parse(format!(
                    "expected header `n,k,value`, found {other:?}"
                )))
            }
        }
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let bad = || Error::Parse(format!("malformed line {}: {line:?}", lineno + 2));
            let mut fields = line.split(',');
            let n: usize = fields
                .next()
                .and_then(|f| f.trim().parse().ok())
                .ok_or_else(bad)?;
            let k: usize = fields
                .next()
                .and_then(|f| f.trim().parse().ok())
                .ok_or_else(bad)?;
            let v: f64 = fields
                .next()
                .and_then(|f| f.trim().parse().ok())
                .ok_or_else(bad)?;
            if fields.next().is_some() {
                return Err(bad());
            }
            if n == rows.len() && k == 0 {
                rows.push(Vec::with_capacity(n + 1));
            }
            let expected_n = rows.len().wrapping_sub(1);
            match rows.last_mut() {
                Some(row) if n == expected_n && k == row.len() && k <= n => row.push(v),
                _ => {
                    return Err(Error::Parse(format!(
                        "entry ({n},{k}) out of order on line {}",
                        lineno + 2
                    )))
                }
            }
        }
        Self::new(kind, rows)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let t: CoefficientTable = serde_json::from_str(text)?;
        Self::new(t.kind, t.rows)
    }
}

/// Exactly generated table (rational α).
#[derive(Debug, Clone, PartialEq)]
pub struct ExactTable {
    pub alpha: Rational,
    pub rows: Vec<Vec<Rational>>,
}

impl ExactTable {
    pub fn n_max(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn to_f64(&self) -> CoefficientTable {
        CoefficientTable {
            kind: TableKind::Bn {
                alpha: to_f64(&self.alpha),
            },
            n_max: self.n_max(),
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(to_f64).collect())
                .collect(),
        }
    }

    /// CSV with exact `p/q` values in the `value` column.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,k,value\n");
        for (n, row) in self.rows.iter().enumerate() {
            for (k, v) in row.iter().enumerate() {
                let _ = writeln!(out, "{n},{k},{}", format_rational(v));
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(format_rational).collect())
            .collect();
        let doc = serde_json::json!({
            "kind": "bn",
            "alpha": format_rational(&self.alpha),
            "exact": true,
            "n_max": self.n_max(),
            "rows": rows,
        });
        Ok(serde_json::to_string_pretty(&doc)?)
    }
}

/// Shortest decimal that round-trips to the same `f64` (at most 17
/// significant digits). Very small or very large magnitudes use exponent form.
pub fn format_f64(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-5..1e16).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}
