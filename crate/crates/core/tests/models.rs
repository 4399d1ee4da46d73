use cwb::models::LogisticObjective;
use cwb::{
    fit_weighted_linear, fit_weighted_logistic, LinearModel, LinearOptions, LogisticOptions,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_problem(seed: u64, n: usize, p: usize) -> (DMatrix<f64>, Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = DMatrix::from_fn(n, p, |_, j| rng.random_range(-2.0..2.0) * (j + 1) as f64 + j as f64);
    let beta: Vec<f64> = (0..p).map(|_| rng.random_range(-1.5..1.5)).collect();
    let y = (0..n)
        .map(|i| 0.7 + (0..p).map(|j| beta[j] * x[(i, j)]).sum::<f64>() + rng.random_range(-0.5..0.5))
        .collect();
    let w = (0..n).map(|_| rng.random_range(0.1..3.0)).collect();
    (x, y, w)
}

fn random_binary(seed: u64, n: usize, p: usize) -> (DMatrix<f64>, Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = DMatrix::from_fn(n, p, |_, _| rng.random_range(-2.0..2.0));
    let y = (0..n)
        .map(|i| {
            let z: f64 = 0.3 + 0.8 * x[(i, 0)] - 0.5 * x[(i, p - 1)];
            let prob = 1.0 / (1.0 + (-z).exp());
            if rng.random::<f64>() < prob {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let w = (0..n).map(|_| rng.random_range(0.2..2.0)).collect();
    (x, y, w)
}

/// Gauss-Jordan inverse with partial pivoting.
fn invert(mut a: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let k = a.len();
    let mut inv: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))
            .unwrap();
        a.swap(col, piv);
        inv.swap(col, piv);
        let d = a[col][col];
        for j in 0..k {
            a[col][j] /= d;
            inv[col][j] /= d;
        }
        for r in 0..k {
            if r != col {
                let f = a[r][col];
                for j in 0..k {
                    a[r][j] -= f * a[col][j];
                    inv[r][j] -= f * inv[col][j];
                }
            }
        }
    }
    inv
}

/// `(A' W A)^-1 A' W y` on raw features with an intercept column; returns
/// `[intercept, slopes..]`.
fn wls_by_inversion(x: &DMatrix<f64>, y: &[f64], w: &[f64]) -> Vec<f64> {
    let (n, p) = x.shape();
    let row = |i: usize| -> Vec<f64> { std::iter::once(1.0).chain((0..p).map(|j| x[(i, j)])).collect() };
    let k = p + 1;
    let mut ata = vec![vec![0.0; k]; k];
    let mut aty = vec![0.0; k];
    for i in 0..n {
        let r = row(i);
        for a in 0..k {
            aty[a] += w[i] * r[a] * y[i];
            for b in 0..k {
                ata[a][b] += w[i] * r[a] * r[b];
            }
        }
    }
    let inv = invert(ata);
    (0..k).map(|a| (0..k).map(|b| inv[a][b] * aty[b]).sum()).collect()
}

fn params(m: &LinearModel) -> Vec<f64> {
    std::iter::once(m.intercept).chain(m.coefficients.iter().copied()).collect()
}

fn weighted_sse(x: &DMatrix<f64>, y: &[f64], w: &[f64], params: &[f64]) -> f64 {
    (0..y.len())
        .map(|i| {
            let pred = params[0] + (0..x.ncols()).map(|j| params[j + 1] * x[(i, j)]).sum::<f64>();
            w[i] * (y[i] - pred).powi(2)
        })
        .sum()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn linear_matches_explicit_inversion() {
    for seed in 0..5 {
        let (x, y, w) = random_problem(seed, 20, 3);
        let m = fit_weighted_linear(&x, &y, &w, &LinearOptions::default()).unwrap();
        let oracle = wls_by_inversion(&x, &y, &w);
        let d = max_abs_diff(&params(&m), &oracle);
        assert!(d < 1e-8, "seed {seed}: {d}");
    }
}

#[test]
fn linear_zero_weight_deletion() {
    let (x, y, mut w) = random_problem(7, 25, 3);
    w[4] = 0.0;
    w[17] = 0.0;
    let full = fit_weighted_linear(&x, &y, &w, &LinearOptions::default()).unwrap();
    let keep: Vec<usize> = (0..25).filter(|&i| w[i] > 0.0).collect();
    let xs = x.select_rows(&keep);
    let ys: Vec<f64> = keep.iter().map(|&i| y[i]).collect();
    let ws: Vec<f64> = keep.iter().map(|&i| w[i]).collect();
    let reduced = fit_weighted_linear(&xs, &ys, &ws, &LinearOptions::default()).unwrap();
    assert!(max_abs_diff(&params(&full), &params(&reduced)) < 1e-9);
}

#[test]
fn linear_weight_scale_invariance() {
    let (x, y, w) = random_problem(9, 30, 4);
    for ridge in [0.0, 0.5] {
        let opts = LinearOptions { ridge, ..Default::default() };
        let base = fit_weighted_linear(&x, &y, &w, &opts).unwrap();
        for c in [1e-3, 0.5, 7.0, 1e4] {
            let scaled: Vec<f64> = w.iter().map(|v| v * c).collect();
            let m = fit_weighted_linear(&x, &y, &scaled, &opts).unwrap();
            assert!(max_abs_diff(&params(&base), &params(&m)) < 1e-9, "ridge {ridge}, c {c}");
        }
    }
}

#[test]
fn linear_is_a_weighted_sse_minimum() {
    for seed in 0..3 {
        let (x, y, w) = random_problem(100 + seed, 40, 3);
        let m = fit_weighted_linear(&x, &y, &w, &LinearOptions::default()).unwrap();
        let best = params(&m);
        let sse = weighted_sse(&x, &y, &w, &best);
        for j in 0..best.len() {
            for delta in [1e-4, -1e-4] {
                let mut p = best.clone();
                p[j] += delta;
                assert!(weighted_sse(&x, &y, &w, &p) >= sse, "seed {seed}, coef {j}");
            }
        }
    }
}

#[test]
fn linear_fit_dominates_dropped_features() {
    let weighted_r2 = |x: &DMatrix<f64>, y: &[f64], w: &[f64], p: &[f64]| {
        let wsum: f64 = w.iter().sum();
        let mean = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / wsum;
        let sst: f64 = y.iter().zip(w).map(|(a, b)| b * (a - mean).powi(2)).sum();
        1.0 - weighted_sse(x, y, w, p) / sst
    };
    for seed in 0..3 {
        let (x, y, w) = random_problem(200 + seed, 30, 3);
        let full = fit_weighted_linear(&x, &y, &w, &LinearOptions::default()).unwrap();
        let r2_full = weighted_r2(&x, &y, &w, &params(&full));
        for drop in 0..3 {
            let keep: Vec<usize> = (0..3).filter(|&j| j != drop).collect();
            let xr = x.select_columns(&keep);
            let m = fit_weighted_linear(&xr, &y, &w, &LinearOptions::default()).unwrap();
            assert!(r2_full >= weighted_r2(&xr, &y, &w, &params(&m)) - 1e-12);
        }
    }
}

#[test]
fn logistic_gradient_matches_central_differences() {
    let (x, y, w) = random_binary(5, 30, 2);
    let obj = LogisticObjective::new(&x, &y, &w, 1e-2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let step = 1e-5;
    for _ in 0..5 {
        let beta = DVector::from_fn(obj.dim(), |_, _| rng.random_range(-1.5..1.5));
        let g = obj.gradient(&beta);
        let mut fd = DVector::zeros(obj.dim());
        for j in 0..obj.dim() {
            let mut hi = beta.clone();
            let mut lo = beta.clone();
            hi[j] += step;
            lo[j] -= step;
            fd[j] = (obj.value(&hi) - obj.value(&lo)) / (2.0 * step);
        }
        let rel = (&g - &fd).amax() / g.amax();
        assert!(rel <= 1e-6, "{rel}");
    }
}

#[test]
fn logistic_converges_within_tolerance() {
    let (x, y, w) = random_binary(6, 80, 3);
    let m = fit_weighted_logistic(&x, &y, &w, &LogisticOptions::default()).unwrap();
    assert!(!m.hit_max_iterations);
    assert!(m.gradient_norm <= 1e-8);
    assert!(m.iterations < 50);
}

#[test]
fn logistic_duplicate_row_equals_double_weight() {
    let (x, y, _) = random_binary(8, 30, 2);
    let opts = LogisticOptions { l2: 0.0, ..Default::default() };
    let r = 11;
    let mut rows: Vec<usize> = (0..30).collect();
    rows.push(r);
    let xd = x.select_rows(&rows);
    let yd: Vec<f64> = rows.iter().map(|&i| y[i]).collect();
    let dup = fit_weighted_logistic(&xd, &yd, &[1.0; 31], &opts).unwrap();
    let mut w2 = vec![1.0; 30];
    w2[r] = 2.0;
    let twice = fit_weighted_logistic(&x, &y, &w2, &opts).unwrap();
    assert!(max_abs_diff(&dup.coefficients, &twice.coefficients) < 1e-6);
    assert!((dup.intercept - twice.intercept).abs() < 1e-6);
}

#[test]
fn logistic_zero_weight_deletion() {
    let (x, y, mut w) = random_binary(10, 40, 3);
    w[3] = 0.0;
    w[30] = 0.0;
    let opts = LogisticOptions::default();
    let full = fit_weighted_logistic(&x, &y, &w, &opts).unwrap();
    let keep: Vec<usize> = (0..40).filter(|&i| w[i] > 0.0).collect();
    let xs = x.select_rows(&keep);
    let ys: Vec<f64> = keep.iter().map(|&i| y[i]).collect();
    let ws: Vec<f64> = keep.iter().map(|&i| w[i]).collect();
    let reduced = fit_weighted_logistic(&xs, &ys, &ws, &opts).unwrap();
    assert!(max_abs_diff(&full.coefficients, &reduced.coefficients) < 1e-6);
    assert!((full.intercept - reduced.intercept).abs() < 1e-6);
}
