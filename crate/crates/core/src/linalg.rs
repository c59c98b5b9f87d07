//! Small dense vector helpers shared by the operator and iteration code.

/// Length above which inner products switch to compensated summation.
pub const COMPENSATED_THRESHOLD: usize = 1000;

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    if a.len() > COMPENSATED_THRESHOLD {
        compensated_sum(a.iter().zip(b).map(|(x, y)| x * y))
    } else {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

/// Squared Euclidean distance ‖a − b‖².
pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let terms = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y));
    if a.len() > COMPENSATED_THRESHOLD {
        compensated_sum(terms)
    } else {
        terms.sum()
    }
}

/// y ← y + s·x
pub fn axpy(s: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}

pub fn unit(d: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; d];
    e[i] = 1.0;
    e
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_cancelled_terms() {
        let vals = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(compensated_sum(vals), 2.0);
    }

    #[test]
    fn long_dot_matches_exact_integer_sum() {
        let a: Vec<f64> = (0..5000).map(|i| i as f64).collect();
        let expected: f64 = (0..5000u64).map(|i| i * i).sum::<u64>() as f64;
        assert_eq!(dot(&a, &a), expected);
    }
}
