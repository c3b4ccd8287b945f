//! Small dense helpers the active-set method needs beyond nalgebra's API.

use nalgebra::{DMatrix, DVector};

/// Full Householder QR of an `n × m` matrix (`m ≤ n`): returns `Q` (`n × n`)
/// and the upper-triangular `m × m` block of `R`.
pub fn full_qr(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let (n, m) = a.shape();
    let mut r = a.clone();
    let mut q = DMatrix::<f64>::identity(n, n);
    let mut v = DVector::<f64>::zeros(n);
    for k in 0..m.min(n) {
        let norm = (k..n).map(|i| r[(i, k)] * r[(i, k)]).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if r[(k, k)] > 0.0 { -norm } else { norm };
        for i in 0..n {
            v[i] = if i < k { 0.0 } else { r[(i, k)] };
        }
        v[k] -= alpha;
        let vv = (k..n).map(|i| v[i] * v[i]).sum::<f64>();
        if vv == 0.0 {
            continue;
        }
        // r <- (I - 2vvᵀ/vᵀv) r
        for j in k..m {
            let s = (k..n).map(|i| v[i] * r[(i, j)]).sum::<f64>() * 2.0 / vv;
            for i in k..n {
                r[(i, j)] -= s * v[i];
            }
        }
        // q <- q (I - 2vvᵀ/vᵀv)
        for i in 0..n {
            let s = (k..n).map(|l| q[(i, l)] * v[l]).sum::<f64>() * 2.0 / vv;
            for l in k..n {
                q[(i, l)] -= s * v[l];
            }
        }
    }
    let rm = DMatrix::from_fn(m, m, |i, j| if i <= j { r[(i, j)] } else { 0.0 });
    (q, rm)
}

/// Solves `R x = b` for upper-triangular `R`.
pub fn back_substitute(r: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let m = r.nrows();
    let mut x = DVector::zeros(m);
    for i in (0..m).rev() {
        let s = b[i] - ((i + 1)..m).map(|j| r[(i, j)] * x[j]).sum::<f64>();
        x[i] = s / r[(i, i)];
    }
    x
}
