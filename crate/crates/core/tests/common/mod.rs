#![allow(dead_code)]

use hpmtl::solver::{TaskBlock, TaskData};
use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random tasks with `d - 1` standard-uniform features plus an intercept
/// column. Prices are drawn independently so the graph weights vary.
pub fn random_data(rng: &mut ChaCha8Rng, p: usize, d: usize, m: std::ops::RangeInclusive<usize>) -> TaskData<f64> {
    let blocks = (0..p)
        .map(|t| {
            let rows = rng.random_range(m.clone());
            let mut x = Array2::<f64>::ones((rows, d));
            for i in 0..rows {
                for j in 0..d - 1 {
                    x[[i, j]] = rng.random_range(-1.0..1.0);
                }
            }
            let y: Array1<f64> = (0..rows).map(|_| rng.random_range(-2.0..2.0)).collect();
            let prices = (0..rows).map(|_| rng.random_range(2e5..2e6)).collect();
            TaskBlock::new(format!("t{t}"), x, y).with_prices(prices)
        })
        .collect();
    TaskData::from_blocks(blocks).unwrap()
}

pub fn to_na(x: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| x[[i, j]])
}

/// Least squares by the normal equations `(XᵀX) w = Xᵀy`, solved with
/// nalgebra's LU.
pub fn normal_equations(x: &Array2<f64>, y: &Array1<f64>) -> Vec<f64> {
    let xm = to_na(x);
    let yv = DVector::from_iterator(y.len(), y.iter().copied());
    let gram = xm.transpose() * &xm;
    let rhs = xm.transpose() * yv;
    gram.lu().solve(&rhs).expect("well-conditioned fixture").iter().copied().collect()
}
