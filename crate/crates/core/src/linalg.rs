//! Small dense solvers used by the baselines: Cholesky for normal equations
//! and a cyclic Jacobi eigensolver for minimum-norm least squares.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::Scalar;

/// Solve `a x = b` for symmetric positive definite `a`. Returns `None` when a
/// pivot falls below `n·ε·max_diag·1e3`, i.e. `a` is singular to working
/// precision.
pub fn cholesky_solve<F: Scalar>(a: ArrayView2<F>, b: ArrayView1<F>) -> Option<Array1<F>> {
    let n = a.nrows();
    assert_eq!(a.ncols(), n);
    assert_eq!(b.len(), n);
    let max_diag = (0..n).map(|i| a[[i, i]].abs()).fold(F::zero(), F::max);
    let tol = F::epsilon() * F::of(n as f64 * 1e3) * max_diag.max(F::min_positive_value());
    let mut l = Array2::<F>::zeros((n, n));
    for j in 0..n {
        let mut d = a[[j, j]];
        for k in 0..j {
            d -= l[[j, k]] * l[[j, k]];
        }
        if d.is_nan() || d <= tol {
            return None;
        }
        let d = d.sqrt();
        l[[j, j]] = d;
        for i in j + 1..n {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / d;
        }
    }
    let mut z = Array1::<F>::zeros(n);
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[[i, k]] * z[k];
        }
        z[i] = s / l[[i, i]];
    }
    let mut x = Array1::<F>::zeros(n);
    for i in (0..n).rev() {
        let mut s = z[i];
        for k in i + 1..n {
            s -= l[[k, i]] * x[k];
        }
        x[i] = s / l[[i, i]];
    }
    Some(x)
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns `(eigenvalues, eigenvectors)` with eigenvectors as columns.
pub fn symmetric_eigen<F: Scalar>(a: ArrayView2<F>) -> (Array1<F>, Array2<F>) {
    let n = a.nrows();
    assert_eq!(a.ncols(), n);
    let mut a = a.to_owned();
    let mut v = Array2::<F>::eye(n);
    let two = F::of(2.0);
    for _sweep in 0..100 {
        let off: F = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[[i, j]] * a[[i, j]])
            .sum();
        let scale: F = a.iter().map(|&x| x * x).sum();
        if off <= F::epsilon() * F::epsilon() * scale || off == F::zero() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[[p, q]];
                if apq == F::zero() {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (two * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + F::one()).sqrt());
                let c = F::one() / (t * t + F::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[[p, k]];
                    let aqk = a[[q, k]];
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    (a.diag().to_owned(), v)
}

/// Minimum-norm least-squares solution of `x w ≈ y` via the pseudo-inverse of
/// `xᵀx`. Eigenvalues below `1e-10·λ_max` are treated as zero.
pub fn min_norm_lstsq<F: Scalar>(x: ArrayView2<F>, y: ArrayView1<F>) -> Array1<F> {
    let gram = x.t().dot(&x);
    let rhs = x.t().dot(&y);
    let (vals, vecs) = symmetric_eigen(gram.view());
    let lmax = vals.iter().fold(F::zero(), |m, &v| m.max(v.abs()));
    let cutoff = lmax * F::of(1e-10);
    let proj = vecs.t().dot(&rhs);
    let scaled = Array1::from_iter(
        vals.iter()
            .zip(proj.iter())
            .map(|(&l, &p)| if l > cutoff { p / l } else { F::zero() }),
    );
    vecs.dot(&scaled)
}
