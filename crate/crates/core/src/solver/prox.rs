use ndarray::{Array2, ArrayView2, Axis};

use crate::Scalar;

/// Entrywise soft-threshold `sign(v)·max(|v| − threshold, 0)`. With
/// `skip_intercept_row` the last row passes through unchanged.
pub fn prox_l1<F: Scalar>(v: ArrayView2<F>, threshold: F, skip_intercept_row: bool) -> Array2<F> {
    let mut out = v.to_owned();
    let rows = super::penalized_rows(v.nrows(), !skip_intercept_row);
    for mut row in out.axis_iter_mut(Axis(0)).take(rows) {
        row.mapv_inplace(|x| x.signum() * (x.abs() - threshold).max(F::zero()));
    }
    out
}

/// Row-wise group shrinkage: each row scaled by `max(0, 1 − threshold/‖row‖₂)`.
pub fn prox_l21<F: Scalar>(v: ArrayView2<F>, threshold: F, skip_intercept_row: bool) -> Array2<F> {
    let mut out = v.to_owned();
    let rows = super::penalized_rows(v.nrows(), !skip_intercept_row);
    for mut row in out.axis_iter_mut(Axis(0)).take(rows) {
        let norm = row.dot(&row).sqrt();
        let scale = if norm > threshold {
            F::one() - threshold / norm
        } else {
            F::zero()
        };
        row.mapv_inplace(|x| x * scale);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn l1_closed_form() {
        let v = array![[2.0, -0.5], [0.0, -3.0]];
        let z = prox_l1(v.view(), 1.0, false);
        assert_eq!(z, array![[1.0, 0.0], [0.0, -2.0]]);
        let z = prox_l1(v.view(), 1.0, true);
        assert_eq!(z, array![[1.0, 0.0], [0.0, -3.0]]);
        let zero = Array2::<f64>::zeros((3, 2));
        assert_eq!(prox_l1(zero.view(), 0.7, false), zero);
    }

    #[test]
    fn l21_closed_form() {
        let v: Array2<f64> = array![[3.0, 4.0]];
        assert_eq!(prox_l21(v.view(), 5.0, false), array![[0.0, 0.0]]);
        let z = prox_l21(v.view(), 2.5, false);
        assert!((z[[0, 0]] - 1.5).abs() < 1e-15 && (z[[0, 1]] - 2.0).abs() < 1e-15);
        let zero = Array2::<f64>::zeros((2, 4));
        assert_eq!(prox_l21(zero.view(), 1.0, false), zero);
        assert_eq!(prox_l21(v.view(), 10.0, true), v);
    }

    #[test]
    fn works_in_single_precision() {
        let v = array![[3.0_f32, 4.0]];
        let z = prox_l21(v.view(), 2.5, false);
        assert!((z[[0, 1]] - 2.0).abs() < 1e-6);
    }
}
