use std::f64::consts::PI;

use bn_ergodic::analysis::compare::{
    compare_rows, lorentz_bound_via_beta2, lorentz_closed_alpha4, triangle_route,
};
use bn_ergodic::analysis::conditions::{
    check_conditions, geometric_samples, positive_increment_sum,
};
use bn_ergodic::analysis::fit::{fit_constant, fit_rate};
use bn_ergodic::analysis::{Condition, Status};
use bn_ergodic::beta_binomial::{adjacent_abs_diff_sum, beta_binomial_row, Beta};
use bn_ergodic::bn_coeffs::{
    bn_forward_differences_alpha4, bn_row_closed_alpha4, bn_row_recursive, bn_rows,
    bn_scalar_identities, Alpha,
};
use bn_ergodic::ergodic::{
    bn_iterate, cesaro_table, ergodic_sum, Checkpoints, Diagnostic, IterateOptions,
};
use bn_ergodic::linalg::{dist_sq, dot, norm, unit};
use bn_ergodic::operators::{fixed_point_projector, DenseMatrix, OperatorModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn alpha(v: f64) -> Alpha {
    Alpha::new(v).unwrap()
}

#[test]
fn scalar_identities_hold_on_recursive_rows() {
    for a in [2.5, 3.0, 4.0, 1.0 + 5f64.sqrt(), 6.0, 8.0] {
        for (n, row) in bn_rows(alpha(a)).take(201).enumerate().skip(1) {
            let r = bn_scalar_identities(alpha(a), n).unwrap();
            let nn = row[n] / row[0];
            let n1 = row[1] / row[0];
            assert!(
                (nn / r.c_nn_over_c_n0 - 1.0).abs() <= 1e-12,
                "alpha={a} n={n}"
            );
            assert!(
                (n1 / r.c_n1_over_c_n0 - 1.0).abs() <= 1e-12,
                "alpha={a} n={n}"
            );
        }
    }
}

#[test]
fn forward_differences_match_row_differencing() {
    for (n, row) in bn_rows(alpha(4.0)).take(301).enumerate().skip(1) {
        let d = bn_forward_differences_alpha4(n);
        let at = |k: isize| {
            if k < 0 {
                0.0
            } else {
                row.get(k as usize).copied().unwrap_or(0.0)
            }
        };
        for k in -1..=n as isize {
            assert!(
                (d.get(k) - (at(k + 1) - at(k))).abs() <= 1e-13,
                "n={n} k={k}"
            );
        }
        assert!(d.values.iter().sum::<f64>().abs() <= 1e-13);
    }
}

#[test]
fn columns_eventually_decay() {
    for a in [3.0, 4.0, 6.0] {
        let t = bn_row_recursive(alpha(a), 2000);
        for k in [0usize, 1, 5, 10] {
            let col: Vec<f64> = (k..=2000).map(|n| t.get(n, k)).collect();
            let n0 = (k..=50)
                .find(|&n0| col[n0 - k..].windows(2).all(|w| w[1] < w[0]))
                .unwrap_or_else(|| panic!("alpha={a} k={k}: no decreasing tail from n <= 50"));
            assert!(t.get(2000, k) < t.get(n0, k) / 10.0, "alpha={a} k={k}");
        }
    }
}

#[test]
fn alpha4_rows_are_unimodal() {
    for (n, row) in bn_rows(alpha(4.0)).take(501).enumerate() {
        let m = n / 2;
        if n >= 5 {
            assert!(row[..=m].windows(2).all(|w| w[1] > w[0]), "n={n}");
            assert!(row[m..].windows(2).all(|w| w[1] < w[0]), "n={n}");
        } else if n <= 3 {
            assert!(row.windows(2).all(|w| w[1] < w[0]), "n={n}");
        } else {
            assert!((row[0] - row[1]).abs() < 1e-15 && row[1] < row[2]);
        }
    }
}

#[test]
fn operators_are_nonexpansive_on_random_unit_vectors() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let d = 9;
    let ops = vec![
        OperatorModel::right_shift(d).unwrap(),
        OperatorModel::rotation(2.0, d).unwrap(),
        OperatorModel::random_orthogonal(d, 3).unwrap(),
        OperatorModel::composite(vec![
            (0.3, OperatorModel::random_orthogonal(d, 4).unwrap()),
            (0.7, OperatorModel::right_shift(d).unwrap()),
        ])
        .unwrap(),
    ];
    for op in &ops {
        for _ in 0..100 {
            let mut x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let nx = norm(&x);
            x.iter_mut().for_each(|v| *v /= nx);
            assert!(norm(&op.apply(&x).unwrap()) <= 1.0 + 1e-10);
        }
    }
}

#[test]
fn projector_is_correct_for_mixed_operators() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let rot = OperatorModel::rotation(PI / 5.0, 6).unwrap();
    let avg = OperatorModel::composite(vec![
        (0.5, rot.clone()),
        (0.5, OperatorModel::identity(6).unwrap()),
    ])
    .unwrap();
    let dense = OperatorModel::dense(rot.to_dense()).unwrap();
    for op in [rot, avg, dense] {
        let p = fixed_point_projector(&op);
        assert_eq!(p.rank(), 4);
        for (i, v) in p.basis.iter().enumerate() {
            assert!(dist_sq(&op.apply(v).unwrap(), v).sqrt() <= 1e-10);
            for (j, w) in p.basis.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot(v, w) - want).abs() <= 1e-12);
            }
        }
        for _ in 0..20 {
            let x: Vec<f64> = (0..6).map(|_| rng.random_range(-3.0..3.0)).collect();
            let px = p.project(&x).unwrap();
            let tpx = op.apply(&px).unwrap();
            assert!(dist_sq(&tpx, &px).sqrt() <= 1e-9 * norm(&x));
            let r: Vec<f64> = x.iter().zip(&px).map(|(a, b)| a - b).collect();
            for v in &p.basis {
                assert!(dot(&r, v).abs() <= 1e-9);
            }
            let ppx = p.project(&px).unwrap();
            assert!(dist_sq(&ppx, &px).sqrt() <= 1e-12 * (1.0 + norm(&x)));
        }
    }
}

#[test]
fn shift_powers_are_exact() {
    let d = 40;
    let s = OperatorModel::right_shift(d).unwrap();
    let mut x = unit(d, 0);
    for k in 1..d {
        x = s.apply(&x).unwrap();
        assert_eq!(x, unit(d, k));
    }
}

#[test]
fn fejer_bound_on_identity_blocks() {
    let q = OperatorModel::random_orthogonal(4, 9).unwrap();
    let mut rows = vec![vec![0.0; 6]; 6];
    let qd = q.to_dense();
    for i in 0..4 {
        for j in 0..4 {
            rows[i][j] = qd.get(i, j);
        }
    }
    rows[4][4] = 1.0;
    rows[5][5] = 1.0;
    let op = OperatorModel::dense(DenseMatrix::from_rows(&rows).unwrap()).unwrap();
    for op in [op, OperatorModel::rotation(PI / 3.0, 4).unwrap()] {
        let x0: Vec<f64> = (0..op.dim()).map(|i| 1.0 + i as f64).collect();
        let opts = IterateOptions {
            projector: Some(fixed_point_projector(&op)),
            ..Default::default()
        };
        for a in [2.5, 4.0, 8.0] {
            let tr = bn_iterate(&op, &x0, alpha(a), 3000, &opts).unwrap();
            let f = tr.fejer.unwrap();
            assert!(f.holds(1e-9), "{f:?}");
        }
    }
}

#[test]
fn shift_residual_decay() {
    let n_max = 4000;
    let s = OperatorModel::right_shift(n_max + 2).unwrap();
    let opts = IterateOptions::default();
    let tr = bn_iterate(&s, &unit(n_max + 2, 0), alpha(4.0), n_max, &opts).unwrap();
    // ||x_n - T x_n|| = o(1/n): n ||x_n - T x_n|| falls and n² ||x_n - T x_n||² stays bounded
    let scaled: Vec<(f64, f64)> = tr
        .points
        .iter()
        .filter(|p| p.n >= 20)
        .map(|p| {
            let n = p.n as f64;
            (n * p.res_sq.sqrt(), n * n * p.res_sq)
        })
        .collect();
    assert!(scaled.windows(2).all(|w| w[1].0 < w[0].0));
    assert!(scaled.iter().all(|s| s.1 <= 1.0));
    assert!(scaled.last().unwrap().0 < 0.06);
    // n^{3/2} ||x_n - T x_n|| settles near sqrt(12)
    let tail: Vec<f64> = tr
        .points
        .iter()
        .filter(|p| p.n >= 1000)
        .map(|p| (p.n as f64).powf(1.5) * p.res_sq.sqrt())
        .collect();
    let spread = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - tail.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(spread < 0.02, "spread {spread}");
    assert!((tail.last().unwrap() - 12f64.sqrt()).abs() < 0.01);
}

/// The iterates of the shift are the rows themselves: `x_{n+1} = (c_{n,0}, …, c_{n,n}, 0, …)`.
/// Sums over closed-form rows give an oracle that never runs the iteration.
fn closed_form_diagnostics(n: usize) -> (f64, f64, f64) {
    let row = bn_row_closed_alpha4(n - 1);
    let next = bn_row_closed_alpha4(n);
    let norm_sq: f64 = row.iter().map(|c| c * c).sum();
    let vel_sq: f64 = (0..=n)
        .map(|k| (row.get(k).copied().unwrap_or(0.0) - next[k]).powi(2))
        .sum();
    let res_sq: f64 = (0..=n)
        .map(|k| {
            let here = row.get(k).copied().unwrap_or(0.0);
            let prev = if k == 0 { 0.0 } else { row[k - 1] };
            (here - prev).powi(2)
        })
        .sum();
    (norm_sq, vel_sq, res_sq)
}

#[test]
fn shift_rate_constants_match_closed_form_oracle() {
    let (n_max, d) = (5000, 5002);
    let s = OperatorModel::right_shift(d).unwrap();
    let opts = IterateOptions {
        checkpoints: Checkpoints::Geometric {
            extras: (1..=50).map(|i| i * 100).collect(),
        },
        ..Default::default()
    };
    let tr = bn_iterate(&s, &unit(d, 0), alpha(4.0), n_max, &opts).unwrap();
    for n in [1, 6, 100, 1200, 5000] {
        let p = tr.point(n).unwrap();
        let (a, b, c) = closed_form_diagnostics(n);
        assert!((p.norm_sq / a - 1.0).abs() < 1e-10, "n={n}");
        assert!((p.vel_sq / b - 1.0).abs() < 1e-8, "n={n}");
        assert!((p.res_sq / c - 1.0).abs() < 1e-8, "n={n}");
    }
    // limits: n||x||² → 6/5, n³||x_n − x_{n+1}||² → 24/5, n³||x_n − Tx_n||² → 12
    let w = (1000, 5000);
    let norm_c = fit_constant(&tr.series(Diagnostic::NormSq), w, -1.0).unwrap();
    let vel_c = fit_constant(&tr.series(Diagnostic::VelSq), w, -3.0).unwrap();
    let res_c = fit_constant(&tr.series(Diagnostic::ResSq), w, -3.0).unwrap();
    assert!((norm_c / 1.2 - 1.0).abs() < 0.01, "{norm_c}");
    assert!((vel_c / 4.8 - 1.0).abs() < 0.01, "{vel_c}");
    assert!((res_c / 12.0 - 1.0).abs() < 0.01, "{res_c}");
    let f = fit_rate(&tr, Diagnostic::NormSq, Some(w)).unwrap();
    assert!((f.exponent + 1.0).abs() < 0.05);
    for diag in [Diagnostic::VelSq, Diagnostic::ResSq] {
        assert!((fit_rate(&tr, diag, Some(w)).unwrap().exponent + 3.0).abs() < 0.1);
    }
}

#[test]
fn rotation_block_converges_to_projection() {
    let op = OperatorModel::rotation(PI / 3.0, 4).unwrap();
    let opts = IterateOptions {
        projector: Some(fixed_point_projector(&op)),
        ..Default::default()
    };
    let tr = bn_iterate(&op, &[1.0; 4], alpha(4.0), 5000, &opts).unwrap();
    assert!(tr.point(5000).unwrap().dist_sq.unwrap().sqrt() < 1e-2);
}

#[test]
fn ergodic_sums_track_the_iteration_for_every_table_row() {
    let op = OperatorModel::random_orthogonal(5, 21).unwrap();
    let x0 = [1.0, 0.0, -1.0, 2.0, 0.5];
    let t = bn_row_recursive(alpha(3.0), 60);
    let opts = IterateOptions {
        store_vectors: true,
        ..Default::default()
    };
    let tr = bn_iterate(&op, &x0, alpha(3.0), 60, &opts).unwrap();
    let xs = tr.vectors.unwrap();
    for n in 0..=60 {
        let e = ergodic_sum(&op, &x0, &t, n).unwrap();
        assert!(dist_sq(&e, &xs[n + 1]).sqrt() < 1e-12, "n={n}");
    }
}

#[test]
fn lorentz_closed_form_and_bb_dominance() {
    let b2 = Beta::new(2.0).unwrap();
    for (n, row) in bn_rows(alpha(4.0)).take(2001).enumerate().skip(1) {
        let l = adjacent_abs_diff_sum(&row);
        if n >= 6 {
            assert!((l - lorentz_closed_alpha4(n)).abs() <= 1e-12, "n={n}");
        }
        assert!(positive_increment_sum(&row) <= l + 1e-15);
        let b = beta_binomial_row(b2, n).values;
        let t = triangle_route(&row, &b, n).unwrap();
        assert!(t.lorentz_bn <= t.rhs + 1e-12);
        assert!(t.rhs <= lorentz_bound_via_beta2(n) + 1e-10, "n={n}");
        assert_eq!(compare_rows(&row, &b, n).unwrap().argmax, 0, "n={n}");
    }
}

#[test]
fn condition_reports_for_standard_tables() {
    let t = bn_row_recursive(alpha(4.0), 2000);
    let ks = [0, 1, 2, 5, 10, 20, 50, 100];
    let r = check_conditions(&t, &geometric_samples(2000), &ks);
    for c in Condition::ALL {
        assert_eq!(r.get(c).status, Status::VerifiedAtScale, "{:?}", r.get(c));
    }
    for s in &r.get(Condition::Lorentz).samples {
        if s.index >= 6 && s.index % 2 == 0 {
            assert!((s.value - lorentz_closed_alpha4(s.index)).abs() <= 1e-12);
        }
    }
    let r = check_conditions(&cesaro_table(2000), &geometric_samples(2000), &ks);
    for c in Condition::ALL {
        assert_eq!(r.get(c).status, Status::VerifiedAtScale, "{:?}", r.get(c));
    }
    let json = serde_json::to_string(&r).unwrap();
    assert!(json.contains("\"verified-at-scale\""));
}
