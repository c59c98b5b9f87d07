//! BN rows against beta-binomial rows at the same `n`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::beta_binomial::{
    adjacent_abs_diff_sum, beta_binomial_row, beta_binomial_row_exact, Beta,
};
use crate::bn_coeffs::{bn_rows, bn_rows_exact, Alpha};
use crate::error::{Error, Result};
use crate::exact::{from_int, Rational};
use crate::table::format_f64;

/// Label attached to probes of open conjectures.
pub const CONJECTURE_LABEL: &str = "conjecture-evidence";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowComparison {
    pub n: usize,
    /// `c_{n,k} − b_{n,k}`
    pub delta: Vec<f64>,
    pub max_abs: f64,
    /// First index attaining `max_abs`.
    pub argmax: usize,
    /// `Σ_k |δ_{n,k}|`
    pub tv: f64,
}

pub fn compare_rows(bn_row: &[f64], beta_row: &[f64], n: usize) -> Result<RowComparison> {
    for len in [bn_row.len(), beta_row.len()] {
        if len != n + 1 {
            return Err(Error::DimensionMismatch {
                expected: n + 1,
                got: len,
            });
        }
    }
    let delta: Vec<f64> = bn_row.iter().zip(beta_row).map(|(c, b)| c - b).collect();
    let (argmax, max_abs) =
        delta
            .iter()
            .map(|d| d.abs())
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (k, v)| {
                if v > best.1 {
                    (k, v)
                } else {
                    best
                }
            });
    Ok(RowComparison {
        n,
        tv: delta.iter().map(|d| d.abs()).sum(),
        delta,
        max_abs,
        argmax,
    })
}

/// Closed form of `δ_{n,k}` for the pairing `α = 4`, `β = 2`.
pub fn delta_closed_alpha4_beta2(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let (nf, kf) = (n as f64, k as f64);
    if k == 0 {
        return 6.0 * nf / ((nf + 2.0) * (nf + 3.0) * (nf + 4.0));
    }
    2.0 * (9.0 * kf * kf - (10.0 * nf + 1.0) * kf + 2.0 * nf * nf - 2.0 * nf - 4.0)
        / ((nf + 1.0) * (nf + 2.0) * (nf + 3.0) * (nf + 4.0))
}

/// Largest deviation of a comparison from the `α = 4, β = 2` closed form.
pub fn closed_form_error(cmp: &RowComparison) -> f64 {
    cmp.delta
        .iter()
        .enumerate()
        .map(|(k, d)| (d - delta_closed_alpha4_beta2(cmp.n, k)).abs())
        .fold(0.0, f64::max)
}

/// Exact `δ_{n,·}` for rational `α`, `β`.
pub fn delta_exact(alpha: &Rational, beta: &Rational, n: usize) -> Result<Vec<Rational>> {
    let c = bn_rows_exact(alpha)?
        .nth(n)
        .expect("row iterator is infinite");
    let b = beta_binomial_row_exact(beta, n)?;
    Ok(c.into_iter().zip(b).map(|(c, b)| c - b).collect())
}

/// Convenience for the matched pairing at `α = 4`.
pub fn delta_exact_alpha4_beta2(n: usize) -> Vec<Rational> {
    delta_exact(&from_int(4), &from_int(2), n).expect("4 and 2 are in the domain")
}

/// `12n(n+1)/((n+2)(n+3)(n+4)) + 3/(n+1)`: the bound on the BN Lorentz sum at
/// `α = 4` obtained through the triangle inequality against `β = 2` rows.
pub fn lorentz_bound_via_beta2(n: usize) -> f64 {
    let nf = n as f64;
    12.0 * nf * (nf + 1.0) / ((nf + 2.0) * (nf + 3.0) * (nf + 4.0)) + 3.0 / (nf + 1.0)
}

/// Closed form of `Σ_k |c_{n,k} − c_{n,k+1}|` at `α = 4`, valid for `n >= 6`.
pub fn lorentz_closed_alpha4(n: usize) -> f64 {
    let nf = n as f64;
    let num = 3.0 * nf * nf + 6.0 * nf + if n.is_multiple_of(2) { 8.0 } else { 7.0 };
    num / ((nf + 2.0) * (nf + 3.0) * (nf + 4.0))
}

/// Both sides of `L_c ≤ 2 Σ|δ| + L_b` for one `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriangleRoute {
    pub n: usize,
    pub lorentz_bn: f64,
    pub rhs: f64,
}

pub fn triangle_route(bn_row: &[f64], beta_row: &[f64], n: usize) -> Result<TriangleRoute> {
    let cmp = compare_rows(bn_row, beta_row, n)?;
    Ok(TriangleRoute {
        n,
        lorentz_bn: adjacent_abs_diff_sum(bn_row),
        rhs: 2.0 * cmp.tv + adjacent_abs_diff_sum(beta_row),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TvPoint {
    pub n: usize,
    /// `Σ_k |c_{n,k} − b_{n,k}|`
    pub tv: f64,
    /// `n · max_k |c_{n,k} − b_{n,k}|`
    pub scaled_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TvCurve {
    pub label: String,
    pub alpha: f64,
    pub beta: f64,
    /// `false` when `β ≠ α/2`.
    pub matched: bool,
    pub points: Vec<TvPoint>,
}

impl TvCurve {
    /// CSV `n,value` of the distance curve, `n >= 1`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,value\n");
        for p in self.points.iter().filter(|p| p.n >= 1) {
            let _ = writeln!(out, "{},{}", p.n, format_f64(p.tv));
        }
        out
    }

    pub fn series(&self) -> Vec<(usize, f64)> {
        self.points.iter().map(|p| (p.n, p.tv)).collect()
    }
}

pub fn tv_distance_curve(alpha: Alpha, beta: Beta, n_max: usize) -> Result<TvCurve> {
    if n_max < 10 {
        return Err(Error::InsufficientData(format!(
            "distance curve needs n_max >= 10 (got {n_max})"
        )));
    }
    let points = bn_rows(alpha)
        .take(n_max + 1)
        .enumerate()
        .map(|(n, c)| {
            let cmp = compare_rows(&c, &beta_binomial_row(beta, n).values, n)?;
            Ok(TvPoint {
                n,
                tv: cmp.tv,
                scaled_max: n as f64 * cmp.max_abs,
            })
        })
        .collect::<Result<_>>()?;
    Ok(TvCurve {
        label: CONJECTURE_LABEL.to_string(),
        alpha: alpha.value(),
        beta: beta.value(),
        matched: (beta.value() - alpha.value() / 2.0).abs() < 1e-12,
        points,
    })
}

/// CSV grid `n,k,n2_times_delta` for `1 <= n <= n_max`.
pub fn heatmap_csv(alpha: Alpha, beta: Beta, n_max: usize) -> String {
    let mut out = String::from("n,k,n2_times_delta\n");
    for (n, c) in bn_rows(alpha).take(n_max + 1).enumerate().skip(1) {
        let b = beta_binomial_row(beta, n).values;
        let scale = (n * n) as f64;
        for (k, (ck, bk)) in c.iter().zip(&b).enumerate() {
            let _ = writeln!(out, "{n},{k},{}", format_f64(scale * (ck - bk)));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PanelEntry {
    pub n: usize,
    pub k: usize,
    pub bn: f64,
    pub beta_binomial: f64,
}

/// Paired rows for the selected `n`.
pub fn panel(alpha: Alpha, beta: Beta, ns: &[usize]) -> Vec<PanelEntry> {
    let n_max = ns.iter().copied().max().unwrap_or(0);
    let mut out = Vec::new();
    for (n, c) in bn_rows(alpha).take(n_max + 1).enumerate() {
        if !ns.contains(&n) {
            continue;
        }
        let b = beta_binomial_row(beta, n).values;
        out.extend(
            c.iter()
                .zip(&b)
                .enumerate()
                .map(|(k, (&bn, &bb))| PanelEntry {
                    n,
                    k,
                    bn,
                    beta_binomial: bb,
                }),
        );
    }
    out
}

pub fn panel_csv(entries: &[PanelEntry]) -> String {
    let mut out = String::from("n,k,bn,beta_binomial\n");
    for e in entries {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            e.n,
            e.k,
            format_f64(e.bn),
            format_f64(e.beta_binomial)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beta_binomial::beta_binomial_closed_beta2;
    use crate::bn_coeffs::bn_row_closed_alpha4;
    use crate::exact::parse_rational;

    fn rows(n: usize) -> (Vec<f64>, Vec<f64>) {
        let b = (0..=n)
            .map(|k| beta_binomial_closed_beta2(n, k).unwrap())
            .collect();
        (bn_row_closed_alpha4(n), b)
    }

    #[test]
    fn small_rows() {
        let (c, b) = rows(1);
        let cmp = compare_rows(&c, &b, 1).unwrap();
        assert!((cmp.delta[0] - 0.1).abs() < 1e-15);
        assert!((cmp.delta[1] + 0.1).abs() < 1e-15);
        assert!((cmp.tv - 0.2).abs() < 1e-15);

        let (c, b) = rows(4);
        let cmp = compare_rows(&c, &b, 4).unwrap();
        assert!((cmp.delta[0] - 1.0 / 14.0).abs() < 1e-15);
        assert_eq!(cmp.argmax, 0);

        let (c, b) = rows(6);
        let cmp = compare_rows(&c, &b, 6).unwrap();
        assert!((cmp.delta[3] + 23.0 / 1260.0).abs() < 1e-15);
        assert!(closed_form_error(&cmp) < 1e-15);
    }

    #[test]
    fn exact_first_row() {
        let d = delta_exact_alpha4_beta2(1);
        assert_eq!(
            d,
            vec![
                parse_rational("1/10").unwrap(),
                parse_rational("-1/10").unwrap()
            ]
        );
        assert_eq!(delta_exact_alpha4_beta2(0), vec![from_int(0)]);
    }

    #[test]
    fn length_mismatch() {
        assert!(compare_rows(&[1.0], &[0.5, 0.5], 1).is_err());
    }

    #[test]
    fn triangle_route_bound() {
        for n in 1..60 {
            let (c, b) = rows(n);
            let t = triangle_route(&c, &b, n).unwrap();
            assert!(t.lorentz_bn <= t.rhs + 1e-14);
            assert!(t.rhs <= lorentz_bound_via_beta2(n) + 1e-10, "n={n}");
        }
    }

    #[test]
    fn curve_and_exports() {
        let a = Alpha::new(4.0).unwrap();
        let b = Beta::new(2.0).unwrap();
        assert!(tv_distance_curve(a, b, 9).is_err());
        let curve = tv_distance_curve(a, b, 20).unwrap();
        assert_eq!(curve.label, CONJECTURE_LABEL);
        assert!(curve.matched);
        assert_eq!(curve.points[0].tv, 0.0);
        assert!((curve.points[1].tv - 0.2).abs() < 1e-15);
        let csv = curve.to_csv();
        let first: f64 = csv.lines().nth(1).unwrap()[2..].parse().unwrap();
        assert!(csv.starts_with("n,value\n1,") && (first - 0.2).abs() < 1e-15);

        let csv = heatmap_csv(a, b, 3);
        assert_eq!(csv.lines().count(), 1 + 2 + 3 + 4);
        let v: f64 = csv.lines().nth(1).unwrap()[4..].parse().unwrap();
        assert!(csv.contains("\n1,0,") && (v - 0.1).abs() < 1e-15);

        let p = panel(a, b, &[0]);
        assert_eq!(
            p,
            vec![PanelEntry {
                n: 0,
                k: 0,
                bn: 1.0,
                beta_binomial: 1.0
            }]
        );
        assert!(panel_csv(&p).ends_with("0,0,1,1\n"));
    }
}
