//! Symmetric beta-binomial weights `b_{n,k}` for shape β > 1.
//!
//! Every entry comes from finite products of ratio factors; no gamma or beta
//! function is evaluated when generating rows. The normalising constant
//! `B(β,β)` is needed only for the row bound and is computed separately.

use serde::{Deserialize, Serialize};

use crate::bn_coeffs::Scalar;
use crate::error::{Error, Result};
use crate::exact::{self, Rational};
use crate::table::{CoefficientTable, TableKind};

/// Shape parameter, strictly greater than 1.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Beta(f64);

impl Beta {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 1.0 {
            Ok(Self(value))
        } else {
            Err(Error::InvalidBeta(value.to_string()))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Ratio factors relating beta-function values at shifted arguments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaRatios {
    /// `B(x+1,y) / B(x,y) = x/(x+y)`
    pub bxp1: f64,
    /// `B(x,y+1) / B(x,y) = y/(x+y)`
    pub byp1: f64,
    /// `B(x+1,z−1) / B(x,z) = x/(z−1)`
    pub shift: f64,
}

pub fn beta_ratio_identities(x: f64, y: f64, z: f64) -> Result<BetaRatios> {
    if !(x > 0.0 && y > 0.0 && z > 1.0) {
        return Err(Error::Domain(format!(
            "beta ratios need x > 0, y > 0, z > 1 (got {x}, {y}, {z})"
        )));
    }
    Ok(BetaRatios {
        bxp1: x / (x + y),
        byp1: y / (x + y),
        shift: x / (z - 1.0),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaBinomialRow {
    pub n: usize,
    pub values: Vec<f64>,
}

fn row_generic<T: Scalar>(beta: &T, n: usize) -> Vec<T> {
    let lit = |v: usize| T::from_usize(v).expect("representable");
    let two = lit(2);
    // b_{n,0} = Π_{m<n} (m+β)/(m+2β)
    let mut b0 = T::one();
    for m in 0..n {
        b0 = b0 * (lit(m) + beta.clone()) / (lit(m) + two.clone() * beta.clone());
    }
    let mut row = Vec::with_capacity(n + 1);
    row.push(b0);
    for k in 0..n {
        // b_{n,k+1}/b_{n,k} = ((n−k)/(k+1)) · ((k+β)/(n−k−1+β))
        let next = row[k].clone() * lit(n - k) * (lit(k) + beta.clone())
            / (lit(k + 1) * (lit(n - k - 1) + beta.clone()));
        row.push(next);
    }
    row
}

pub fn beta_binomial_row(beta: Beta, n: usize) -> BetaBinomialRow {
    BetaBinomialRow {
        n,
        values: row_generic(&beta.value(), n),
    }
}

/// Exact row for rational β > 1.
pub fn beta_binomial_row_exact(beta: &Rational, n: usize) -> Result<Vec<Rational>> {
    if *beta <= exact::from_int(1) {
        return Err(Error::InvalidBeta(exact::format_rational(beta)));
    }
    Ok(row_generic(beta, n))
}

pub fn beta_binomial_table(beta: Beta, n_max: usize) -> CoefficientTable {
    CoefficientTable {
        kind: TableKind::BetaBinomial { beta: beta.value() },
        n_max,
        rows: (0..=n_max)
            .map(|n| beta_binomial_row(beta, n).values)
            .collect(),
    }
}

/// `b_{n,k} = 6(k+1)(n−k+1) / ((n+1)(n+2)(n+3))` for β = 2.
pub fn beta_binomial_closed_beta2(n: usize, k: usize) -> Result<f64> {
    if k > n {
        return Err(Error::OutsideTriangle { n, k });
    }
    let (nf, kf) = (n as f64, k as f64);
    Ok(6.0 * (kf + 1.0) * (nf - kf + 1.0) / ((nf + 1.0) * (nf + 2.0) * (nf + 3.0)))
}

/// How the constant `B(β,β)` was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantSource {
    /// Integer or half-integer β.
    ClosedForm,
    /// Any other β: adaptive Simpson to relative [`QUADRATURE_REL_TOL`].
    Quadrature,
}

pub const QUADRATURE_REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaConstant {
    pub value: f64,
    pub source: ConstantSource,
}

/// `B(β,β)`.
///
/// Integer and half-integer β climb from `B(1,1) = 1` or `B(½,½) = π` with
/// `B(x+1,x+1) = B(x,x) · x² / (2x(2x+1))`; other β fall back to quadrature
/// of `∫ t^{β−1}(1−t)^{β−1} dt`.
pub fn symmetric_beta_constant(beta: Beta) -> BetaConstant {
    let b = beta.value();
    let twice = 2.0 * b;
    if twice.fract() == 0.0 && twice < 1e6 {
        let (mut x, mut value) = if b.fract() == 0.0 {
            (1.0, 1.0)
        } else {
            (0.5, std::f64::consts::PI)
        };
        while x < b {
            value *= x * x / (2.0 * x * (2.0 * x + 1.0));
            x += 1.0;
        }
        BetaConstant {
            value,
            source: ConstantSource::ClosedForm,
        }
    } else {
        let half = adaptive_simpson(
            |t| (t * (1.0 - t)).powf(b - 1.0),
            0.0,
            0.5,
            QUADRATURE_REL_TOL,
        );
        BetaConstant {
            value: 2.0 * half,
            source: ConstantSource::Quadrature,
        }
    }
}

/// Adaptive Simpson integration of `f` over `[a, b]` to relative `rel_tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    struct Panel {
        a: f64,
        fa: f64,
        m: f64,
        fm: f64,
        b: f64,
        fb: f64,
        area: f64,
    }

    fn panel<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> Panel {
        let m = 0.5 * (a + b);
        let fm = f(m);
        Panel {
            a,
            fa,
            m,
            fm,
            b,
            fb,
            area: (b - a) / 6.0 * (fa + 4.0 * fm + fb),
        }
    }

    fn refine<F: Fn(f64) -> f64>(f: &F, p: Panel, tol: f64, depth: u32) -> f64 {
        let left = panel(f, p.a, p.fa, p.m, p.fm);
        let right = panel(f, p.m, p.fm, p.b, p.fb);
        let delta = left.area + right.area - p.area;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left.area + right.area + delta / 15.0;
        }
        refine(f, left, tol / 2.0, depth - 1) + refine(f, right, tol / 2.0, depth - 1)
    }

    let whole = panel(&f, a, f(a), b, f(b));
    let scale = whole.area.abs().max(f64::MIN_POSITIVE);
    refine(&f, whole, rel_tol * scale, 50)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RowBound {
    /// `4^{1−β} / (B(β,β)(n+1))`
    pub value: f64,
    /// `4^{1−β} / B(β,β)`
    pub constant: f64,
    pub source: ConstantSource,
}

pub fn beta_binomial_row_bound(beta: Beta, n: usize) -> RowBound {
    let bc = symmetric_beta_constant(beta);
    let constant = 4f64.powf(1.0 - beta.value()) / bc.value;
    RowBound {
        value: constant / (n as f64 + 1.0),
        constant,
        source: bc.source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzSum {
    /// `Σ_k |b_{n,k} − b_{n,k+1}|` by direct summation.
    pub direct: f64,
    /// `2 b_{n,⌊n/2⌋} − b_{n,0}`.
    pub closed: f64,
    /// `4^{1−β}/B(β,β) · 2/(n+1)`.
    pub bound: f64,
    pub bound_source: ConstantSource,
}

/// `Σ_{k≥0} |w_k − w_{k+1}|`, with `w` extended by zeros past its end.
pub fn adjacent_abs_diff_sum(row: &[f64]) -> f64 {
    row.iter()
        .zip(row.iter().skip(1).chain(std::iter::once(&0.0)))
        .map(|(a, b)| (a - b).abs())
        .sum()
}

pub fn beta_binomial_lorentz_sum(beta: Beta, n: usize) -> Result<LorentzSum> {
    if n == 0 {
        return Err(Error::Domain("Lorentz sum needs n >= 1".into()));
    }
    let row = beta_binomial_row(beta, n).values;
    let bound = beta_binomial_row_bound(beta, n);
    Ok(LorentzSum {
        direct: adjacent_abs_diff_sum(&row),
        closed: 2.0 * row[n / 2] - row[0],
        bound: 2.0 * bound.value,
        bound_source: bound.source,
    })
}

/// Coefficient rows of `q_0..=q_{n_max}` from
/// `(n+2β) q_{n+1} = (n+β)(1+t) q_n − n t q_{n−1}`.
pub fn q_polynomial_recursion(beta: Beta, n_max: usize) -> Vec<Vec<f64>> {
    let b = beta.value();
    let at = |r: &[f64], k: isize| {
        if k < 0 {
            0.0
        } else {
            r.get(k as usize).copied().unwrap_or(0.0)
        }
    };
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n_max + 1);
    rows.push(vec![1.0]);
    if n_max >= 1 {
        rows.push(vec![0.5, 0.5]);
    }
    for n in 1..n_max {
        let nf = n as f64;
        let (qn, qm) = (&rows[n], &rows[n - 1]);
        let next: Vec<f64> = (0..=(n + 1) as isize)
            .map(|k| ((nf + b) * (at(qn, k) + at(qn, k - 1)) - nf * at(qm, k - 1)) / (nf + 2.0 * b))
            .collect();
        rows.push(next);
    }
    rows
}

/// Horner evaluation of `Σ coeffs[k] t^k`, highest degree first.
pub fn poly_eval(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(v: f64) -> Beta {
        Beta::new(v).unwrap()
    }

    fn close(x: f64, y: f64, tol: f64) {
        assert!((x - y).abs() <= tol, "{x} vs {y}");
    }

    #[test]
    fn beta_domain() {
        assert!(Beta::new(1.0).is_err());
        assert!(Beta::new(0.5).is_err());
        assert!(Beta::new(1.0001).is_ok());
        assert!(beta_ratio_identities(0.0, 1.0, 2.0).is_err());
        assert!(beta_ratio_identities(1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn ratio_identity_examples() {
        let r = beta_ratio_identities(2.0, 2.0, 2.0).unwrap();
        assert_eq!((r.bxp1, r.byp1, r.shift), (0.5, 0.5, 2.0));
        // B(2,1) = 1/2 and B(1,1) = 1 from the defining integral
        assert_eq!(beta_ratio_identities(1.0, 1.0, 2.0).unwrap().bxp1, 0.5);
        assert_eq!(beta_ratio_identities(2.0, 1.0, 3.0).unwrap().shift, 1.0);
    }

    #[test]
    fn ratio_identities_agree_with_quadrature() {
        let beta_fn = |x: f64, y: f64| {
            adaptive_simpson(
                |t| t.powf(x - 1.0) * (1.0 - t).powf(y - 1.0),
                0.0,
                1.0,
                1e-12,
            )
        };
        let (x, y, z) = (2.5, 3.25, 2.75);
        let r = beta_ratio_identities(x, y, z).unwrap();
        close(beta_fn(x + 1.0, y) / beta_fn(x, y), r.bxp1, 1e-9);
        close(beta_fn(x, y + 1.0) / beta_fn(x, y), r.byp1, 1e-9);
        close(beta_fn(x + 1.0, z - 1.0) / beta_fn(x, z), r.shift, 1e-9);
    }

    #[test]
    fn small_rows() {
        let r = beta_binomial_row(b(2.0), 2).values;
        for (x, y) in r.iter().zip([0.3, 0.4, 0.3]) {
            close(*x, y, 1e-16);
        }
        assert_eq!(beta_binomial_row(b(2.0), 1).values, vec![0.5, 0.5]);
        assert_eq!(beta_binomial_row(b(3.7), 0).values, vec![1.0]);
    }

    #[test]
    fn closed_beta2_examples() {
        close(beta_binomial_closed_beta2(5, 2).unwrap(), 3.0 / 14.0, 1e-16);
        close(beta_binomial_closed_beta2(1, 0).unwrap(), 0.5, 1e-16);
        close(beta_binomial_closed_beta2(4, 4).unwrap(), 1.0 / 7.0, 1e-16);
        assert_eq!(
            beta_binomial_closed_beta2(4, 4).unwrap(),
            beta_binomial_closed_beta2(4, 0).unwrap()
        );
        assert!(beta_binomial_closed_beta2(3, 4).is_err());
    }

    #[test]
    fn exact_row_beta2() {
        let r = beta_binomial_row_exact(&exact::from_int(2), 9).unwrap();
        assert_eq!(exact::format_rational(&r[4]), "3/22");
        assert!(beta_binomial_row_exact(&exact::from_int(1), 3).is_err());
    }

    #[test]
    fn beta_constants() {
        let c = symmetric_beta_constant(b(2.0));
        assert_eq!(c.source, ConstantSource::ClosedForm);
        close(c.value, 1.0 / 6.0, 1e-16);
        close(
            symmetric_beta_constant(b(1.5)).value,
            std::f64::consts::PI / 8.0,
            1e-16,
        );
        // B(5,5) = 4!4!/9!
        close(
            symmetric_beta_constant(b(5.0)).value,
            576.0 / 362880.0,
            1e-18,
        );
        let q = symmetric_beta_constant(b(2.5 + 1e-9));
        assert_eq!(q.source, ConstantSource::Quadrature);
        // continuity against B(5/2,5/2) = 3π/128
        close(q.value, 3.0 * std::f64::consts::PI / 128.0, 1e-9);
    }

    #[test]
    fn quadrature_matches_closed_forms() {
        for beta in [1.5, 2.0, 3.0, 4.5] {
            let closed = symmetric_beta_constant(b(beta)).value;
            let quad =
                2.0 * adaptive_simpson(|t| (t * (1.0 - t)).powf(beta - 1.0), 0.0, 0.5, 1e-12);
            assert!(((quad - closed) / closed).abs() < 1e-10, "beta={beta}");
        }
    }

    #[test]
    fn row_bound_examples() {
        let rb = beta_binomial_row_bound(b(2.0), 9);
        close(rb.value, 3.0 / 20.0, 1e-15);
        let max = beta_binomial_row(b(2.0), 9)
            .values
            .into_iter()
            .fold(0.0, f64::max);
        close(max, 3.0 / 22.0, 1e-15);
        close(beta_binomial_row_bound(b(2.0), 0).value, 1.5, 1e-15);
        close(
            beta_binomial_row_bound(b(1.5), 0).value,
            4.0 / std::f64::consts::PI,
            1e-15,
        );
    }

    #[test]
    fn lorentz_examples() {
        let l = beta_binomial_lorentz_sum(b(2.0), 2).unwrap();
        close(l.direct, 0.5, 1e-15);
        close(l.closed, 0.5, 1e-15);
        let l = beta_binomial_lorentz_sum(b(2.0), 1).unwrap();
        close(l.closed, 0.5, 1e-15);
        let l = beta_binomial_lorentz_sum(b(2.0), 100).unwrap();
        assert!(l.direct < 3.0 / 101.0);
        close(l.bound, 3.0 / 101.0, 1e-15);
        assert!(beta_binomial_lorentz_sum(b(2.0), 0).is_err());
    }

    #[test]
    fn q_recursion_examples() {
        let q = q_polynomial_recursion(b(2.0), 2);
        assert_eq!(q[1], vec![0.5, 0.5]);
        for (x, y) in q[2].iter().zip([0.3, 0.4, 0.3]) {
            close(*x, y, 1e-16);
        }
        for row in q_polynomial_recursion(b(3.3), 40) {
            close(poly_eval(&row, 1.0), 1.0, 1e-13);
        }
    }

    #[test]
    fn horner() {
        assert_eq!(poly_eval(&[1.0, 2.0, 3.0], 2.0), 17.0);
        assert_eq!(poly_eval(&[], 2.0), 0.0);
    }
}
