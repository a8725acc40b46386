use nalgebra::{DMatrix, DVector};
use wl1_core::lp::DenseMatrix;

pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for j in start..n {
            cur.push(j);
            go(j + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Minimum of `sum w |x|` over all exact solutions of `A x = y` supported on
/// at most `m` linearly independent columns, with its minimiser.
pub fn support_enumeration(a: &DenseMatrix, y: &[f64], w: &[f64]) -> (f64, Vec<f64>) {
    let (m, n) = (a.rows(), a.cols());
    if y.iter().all(|&v| v == 0.0) {
        return (0.0, vec![0.0; n]);
    }
    let full = DMatrix::from_row_slice(m, n, a.data());
    let yv = DVector::from_column_slice(y);
    let mut best = (f64::INFINITY, vec![0.0; n]);
    for k in 1..=m.min(n) {
        for s in subsets(n, k) {
            let sub = full.select_columns(&s);
            let svd = sub.clone().svd(true, true);
            if svd.singular_values.min() < 1e-10 * svd.singular_values.max() {
                continue;
            }
            let xs = svd.solve(&yv, 1e-14).unwrap();
            if (&sub * &xs - &yv).amax() > 1e-9 * (1.0 + yv.amax()) {
                continue;
            }
            let obj: f64 = s.iter().zip(xs.iter()).map(|(&j, v)| w[j] * v.abs()).sum();
            if obj < best.0 {
                let mut x = vec![0.0; n];
                for (&j, v) in s.iter().zip(xs.iter()) {
                    x[j] = *v;
                }
                best = (obj, x);
            }
        }
    }
    best
}
