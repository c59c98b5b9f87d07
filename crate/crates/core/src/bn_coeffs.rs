//! Coefficients `c_{n,k}` of the accelerated iteration written as a weighted
//! mean `x_{n+1} = Σ_k c_{n,k} T^k x_0`.
//!
//! The three-term recursion is written once, generically over the scalar
//! type, and instantiated both for `f64` and for exact rationals.

use num_traits::{FromPrimitive, Num};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{self, Rational};
use crate::table::{CoefficientTable, ExactTable, TableKind};

/// Momentum parameter, strictly greater than 2.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Alpha(f64);

impl Alpha {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 2.0 {
            Ok(Self(value))
        } else {
            Err(Error::InvalidAlpha(value.to_string()))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

fn check_exact_alpha(alpha: &Rational) -> Result<()> {
    if *alpha > exact::from_int(2) {
        Ok(())
    } else {
        Err(Error::InvalidAlpha(exact::format_rational(alpha)))
    }
}

/// Scalar types the recursion can run in.
pub trait Scalar: Clone + Num + FromPrimitive {}
impl<T: Clone + Num + FromPrimitive> Scalar for T {}

fn lit<T: Scalar>(v: usize) -> T {
    T::from_usize(v).expect("index representable in scalar type")
}

fn at<T: Scalar>(row: &[T], k: isize) -> T {
    if k < 0 {
        T::zero()
    } else {
        row.get(k as usize).cloned().unwrap_or_else(T::zero)
    }
}

fn first_row<T: Scalar>(alpha: &T) -> Vec<T> {
    let two: T = lit(2);
    let one: T = T::one();
    let denom = two.clone() * (one + alpha.clone());
    vec![(two + alpha.clone()) / denom.clone(), alpha.clone() / denom]
}

/// Row `n >= 2` from rows `n-1` and `n-2`.
fn next_row<T: Scalar>(alpha: &T, n: usize, prev: &[T], prev2: &[T]) -> Vec<T> {
    let nn: T = lit(n);
    let two: T = lit(2);
    let a = (two.clone() * nn.clone() + alpha.clone()) / (two * (nn.clone() + alpha.clone()));
    let b = nn.clone() / (nn + alpha.clone());
    (0..=n as isize)
        .map(|k| a.clone() * (at(prev, k) + at(prev, k - 1)) - b.clone() * at(prev2, k - 1))
        .collect()
}

/// Streaming generator of rows `0, 1, 2, …`; holds only the two latest rows.
#[derive(Debug, Clone)]
pub struct BnRows<T> {
    alpha: T,
    n: usize,
    prev: Vec<T>,
    prev2: Vec<T>,
}

impl<T: Scalar> BnRows<T> {
    fn with_alpha(alpha: T) -> Self {
        Self {
            alpha,
            n: 0,
            prev: Vec::new(),
            prev2: Vec::new(),
        }
    }
}

impl<T: Scalar> Iterator for BnRows<T> {
    type Item = Vec<T>;

    fn next(&mut self) -> Option<Vec<T>> {
        let row = match self.n {
            0 => vec![T::one()],
            1 => first_row(&self.alpha),
            n => next_row(&self.alpha, n, &self.prev, &self.prev2),
        };
        self.prev2 = std::mem::replace(&mut self.prev, row.clone());
        self.n += 1;
        Some(row)
    }
}

pub fn bn_rows(alpha: Alpha) -> BnRows<f64> {
    BnRows::with_alpha(alpha.value())
}

pub fn bn_rows_exact(alpha: &Rational) -> Result<BnRows<Rational>> {
    check_exact_alpha(alpha)?;
    Ok(BnRows::with_alpha(alpha.clone()))
}

/// Full table of rows `0..=n_max` by the three-term recursion.
pub fn bn_row_recursive(alpha: Alpha, n_max: usize) -> CoefficientTable {
    CoefficientTable {
        kind: TableKind::Bn {
            alpha: alpha.value(),
        },
        n_max,
        rows: bn_rows(alpha).take(n_max + 1).collect(),
    }
}

/// Same recursion in exact rational arithmetic.
pub fn bn_row_recursive_exact(alpha: &Rational, n_max: usize) -> Result<ExactTable> {
    Ok(ExactTable {
        alpha: alpha.clone(),
        rows: bn_rows_exact(alpha)?.take(n_max + 1).collect(),
    })
}

/// Single row `n`, streamed in O(n) memory.
pub fn bn_row(alpha: Alpha, n: usize) -> Vec<f64> {
    bn_rows(alpha).nth(n).expect("row iterator is infinite")
}

fn closed_alpha4<T: Scalar>(n: usize) -> Vec<T> {
    let d = lit::<T>((n + 2) * (n + 3) * (n + 4));
    let mut row = Vec::with_capacity(n + 1);
    row.push(lit::<T>(12) / lit::<T>((n + 3) * (n + 4)));
    for k in 1..=n {
        // -3k² + (3n-1)k + 5n + 8 is positive on 1 <= k <= n
        let q = 3 * n * k + 5 * n + 8 - 3 * k * k - k;
        row.push(lit::<T>(2 * q) / d.clone());
    }
    row
}

/// Closed form of row `n` when α = 4.
pub fn bn_row_closed_alpha4(n: usize) -> Vec<f64> {
    closed_alpha4(n)
}

pub fn bn_row_closed_alpha4_exact(n: usize) -> Vec<Rational> {
    closed_alpha4(n)
}

/// `c_{n,0} = Π_{m=1}^{n} (2m+α) / (2(m+α))`, multiplied left to right.
pub fn bn_constant_coeff(alpha: Alpha, n: usize) -> f64 {
    let a = alpha.value();
    (1..=n)
        .map(|m| {
            let m = m as f64;
            (2.0 * m + a) / (2.0 * (m + a))
        })
        .product()
}

/// Cross-check of [`bn_constant_coeff`]:
/// `(α+2)/(2(α+1)) · Π_{m=2}^{n}(m+α/2) / Π_{m=2}^{n}(m+α)`, evaluated as a
/// ratio of two running products. Both products are rescaled by the same
/// power of two whenever the denominator grows large, so nothing overflows.
pub fn bn_constant_coeff_product_ratio(alpha: Alpha, n: usize) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let a = alpha.value();
    let mut num = 1.0_f64;
    let mut den = 1.0_f64;
    const RESCALE: f64 = 1.0 / (1u128 << 100) as f64;
    for m in 2..=n {
        let m = m as f64;
        num *= m + a / 2.0;
        den *= m + a;
        if den > 1e150 {
            num *= RESCALE;
            den *= RESCALE;
        }
    }
    (a + 2.0) / (2.0 * (a + 1.0)) * (num / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarRatios {
    /// `c_{n,n} / c_{n,0} = α/(2+α)`
    pub c_nn_over_c_n0: f64,
    /// `c_{n,1} / c_{n,0} = α(αn+2) / ((α+2)(α+2n))`
    pub c_n1_over_c_n0: f64,
}

pub fn bn_scalar_identities(alpha: Alpha, n: usize) -> Result<ScalarRatios> {
    if n == 0 {
        return Err(Error::Domain("scalar identities need n >= 1".into()));
    }
    let a = alpha.value();
    let n = n as f64;
    Ok(ScalarRatios {
        c_nn_over_c_n0: a / (2.0 + a),
        c_n1_over_c_n0: a * (a * n + 2.0) / ((a + 2.0) * (a + 2.0 * n)),
    })
}

/// Forward difference `d_{n,k} = c_{n,k+1} − c_{n,k}` for α = 4, from its
/// piecewise closed form. Total in `k`.
pub fn bn_forward_difference_alpha4(n: usize, k: isize) -> f64 {
    if n == 0 {
        return match k {
            -1 => 1.0,
            0 => -1.0,
            _ => 0.0,
        };
    }
    let nf = n as f64;
    let d3 = (nf + 2.0) * (nf + 3.0) * (nf + 4.0);
    let d2 = (nf + 3.0) * (nf + 4.0);
    match k {
        -1 => 12.0 / d2,
        0 => 4.0 * (nf - 4.0) / d3,
        k if k >= 1 && (k as usize) < n => 2.0 * (3.0 * nf - 6.0 * k as f64 - 4.0) / d3,
        k if k == n as isize => -8.0 / d2,
        _ => 0.0,
    }
}

/// All nonzero forward differences of row `n` (α = 4), indexed `k = −1..=n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForwardDifferences {
    pub n: usize,
    /// `values[i]` holds `d_{n, i-1}`.
    pub values: Vec<f64>,
}

impl ForwardDifferences {
    pub fn get(&self, k: isize) -> f64 {
        if k < -1 {
            return 0.0;
        }
        self.values.get((k + 1) as usize).copied().unwrap_or(0.0)
    }
}

pub fn bn_forward_differences_alpha4(n: usize) -> ForwardDifferences {
    ForwardDifferences {
        n,
        values: (-1..=n as isize)
            .map(|k| bn_forward_difference_alpha4(n, k))
            .collect(),
    }
}

/// Sign of `c_{n,1} − c_{n,0}`, read off `n(α²−2α−4) − α²`.
pub fn bn_sign_dichotomy(alpha: Alpha, n: usize) -> Result<i8> {
    if n == 0 {
        return Err(Error::Domain("sign dichotomy needs n >= 1".into()));
    }
    let a = alpha.value();
    let s = n as f64 * (a * a - 2.0 * a - 4.0) - a * a;
    Ok(sign_of(s, 0.0))
}

/// The index `N = α²/(α²−2α−4)` where `c_{n,1} − c_{n,0}` changes sign, when
/// `α > 1+√5`.
pub fn critical_index(alpha: Alpha) -> Option<f64> {
    let a = alpha.value();
    let q = a * a - 2.0 * a - 4.0;
    (q > 0.0).then(|| a * a / q)
}

/// Sign of `c_{n,1} − c_{n,0}` as read from a generated row, with ties
/// declared when the difference is within `rel_tol · c_{n,0}`.
pub fn row_sign_c1_minus_c0(row: &[f64], rel_tol: f64) -> Option<i8> {
    let (c0, c1) = (*row.first()?, *row.get(1)?);
    Some(sign_of(c1 - c0, rel_tol * c0.abs()))
}

fn sign_of(v: f64, tol: f64) -> i8 {
    if v > tol {
        1
    } else if v < -tol {
        -1
    } else {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::parse_rational;

    fn a(v: f64) -> Alpha {
        Alpha::new(v).unwrap()
    }

    fn close(x: f64, y: f64, tol: f64) {
        assert!((x - y).abs() <= tol, "{x} vs {y}");
    }

    #[test]
    fn alpha_domain() {
        assert!(Alpha::new(2.0).is_err());
        assert!(Alpha::new(1.0).is_err());
        assert!(Alpha::new(f64::NAN).is_err());
        assert!(Alpha::new(2.000001).is_ok());
        assert!(bn_row_recursive_exact(&parse_rational("2").unwrap(), 3).is_err());
    }

    #[test]
    fn small_rows_alpha4() {
        let t = bn_row_recursive(a(4.0), 2);
        assert_eq!(t.rows[0], vec![1.0]);
        close(t.rows[1][0], 3.0 / 5.0, 1e-15);
        close(t.rows[1][1], 2.0 / 5.0, 1e-15);
        let expected = [2.0 / 5.0, 1.0 / 3.0, 4.0 / 15.0];
        for (x, y) in t.rows[2].iter().zip(expected) {
            close(*x, y, 1e-15);
        }
    }

    #[test]
    fn row_two_alpha6() {
        // c_{2,0} = (α+4)/(4(α+1)), c_{2,1} = α/(2(α+2)), c_{2,2} = α(α+4)/(4(α+2)(α+1))
        let r = bn_row(a(6.0), 2);
        close(r[0], 10.0 / 28.0, 1e-15);
        close(r[1], 6.0 / 16.0, 1e-15);
        close(r[2], 60.0 / 224.0, 1e-15);
    }

    #[test]
    fn exact_rows_alpha4_match_small_polynomials() {
        let t = bn_row_recursive_exact(&parse_rational("4").unwrap(), 6).unwrap();
        let fmt: Vec<Vec<String>> = t
            .rows
            .iter()
            .map(|r| r.iter().map(exact::format_rational).collect())
            .collect();
        assert_eq!(fmt[3], ["2/7", "4/15", "9/35", "4/21"]);
        assert_eq!(fmt[4], ["3/14", "3/14", "19/84", "17/84", "1/7"]);
        assert_eq!(fmt[5], ["1/6", "11/63", "7/36", "4/21", "41/252", "1/9"]);
        assert_eq!(
            fmt[6],
            ["2/15", "13/90", "1/6", "31/180", "29/180", "2/15", "4/45"]
        );
    }

    #[test]
    fn closed_form_row_six() {
        let r = bn_row_closed_alpha4(6);
        let expected = [96.0, 104.0, 120.0, 124.0, 116.0, 96.0, 64.0];
        for (x, y) in r.iter().zip(expected) {
            close(*x, y / 720.0, 1e-16);
        }
        assert_eq!(bn_row_closed_alpha4(0), vec![1.0]);
        let r4 = bn_row_closed_alpha4_exact(4);
        assert_eq!(r4[0], r4[1]);
        assert_eq!(exact::format_rational(&r4[0]), "3/14");
    }

    #[test]
    fn constant_coefficient_closed_forms() {
        close(
            bn_constant_coeff(a(6.0), 3),
            120.0 / (7.0 * 8.0 * 9.0),
            1e-16,
        );
        close(bn_constant_coeff(a(4.0), 10), 12.0 / (13.0 * 14.0), 1e-16);
        close(bn_constant_coeff(a(3.0), 1), 5.0 / 8.0, 1e-16);
        // (2n+3)!/(4^n (n+1)! (n+3)!) at n = 1
        close(120.0 / (4.0 * 2.0 * 24.0), 5.0 / 8.0, 0.0);
        assert_eq!(bn_constant_coeff(a(3.0), 0), 1.0);
    }

    #[test]
    fn product_ratio_cross_check_survives_large_n() {
        for &al in &[2.5, 3.0, 4.0, 8.0] {
            for n in [1, 2, 10, 500, 5000] {
                let p = bn_constant_coeff(a(al), n);
                let q = bn_constant_coeff_product_ratio(a(al), n);
                assert!(((p - q) / p).abs() < 1e-12, "alpha={al} n={n}: {p} {q}");
            }
        }
    }

    #[test]
    fn scalar_identity_examples() {
        let r = bn_scalar_identities(a(4.0), 4).unwrap();
        close(r.c_nn_over_c_n0, 2.0 / 3.0, 1e-16);
        close(r.c_n1_over_c_n0, 1.0, 1e-16);
        let r = bn_scalar_identities(a(3.0), 1).unwrap();
        close(r.c_n1_over_c_n0, 3.0 / 5.0, 1e-16);
        assert!(bn_scalar_identities(a(3.0), 0).is_err());
    }

    #[test]
    fn forward_difference_examples() {
        close(bn_forward_difference_alpha4(6, 0), 1.0 / 90.0, 1e-16);
        close(bn_forward_difference_alpha4(4, 0), 0.0, 0.0);
        close(bn_forward_difference_alpha4(5, 5), -1.0 / 9.0, 1e-16);
        let d = bn_forward_differences_alpha4(5);
        assert_eq!(d.values.len(), 7);
        assert_eq!(d.get(-2), 0.0);
        assert_eq!(d.get(6), 0.0);
        let d0 = bn_forward_differences_alpha4(0);
        assert_eq!((d0.get(-1), d0.get(0)), (1.0, -1.0));
    }

    #[test]
    fn dichotomy_examples() {
        assert_eq!(bn_sign_dichotomy(a(4.0), 4).unwrap(), 0);
        assert_eq!(bn_sign_dichotomy(a(4.0), 5).unwrap(), 1);
        assert_eq!(bn_sign_dichotomy(a(4.0), 3).unwrap(), -1);
        for n in 1..50 {
            assert_eq!(bn_sign_dichotomy(a(3.0), n).unwrap(), -1);
        }
        assert_eq!(critical_index(a(4.0)), Some(4.0));
        assert_eq!(critical_index(a(3.0)), None);
        assert!(bn_sign_dichotomy(a(4.0), 0).is_err());
    }
}
