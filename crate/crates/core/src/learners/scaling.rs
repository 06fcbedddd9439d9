//! Column-wise scalers. Both store two scalars per feature.

use super::LearnedState;
use crate::matrix::Matrix;

fn column_means(x: &Matrix) -> Vec<f64> {
    let n = x.n_rows() as f64;
    let mut means = vec![0.0; x.n_cols()];
    for row in x.rows_iter() {
        for (m, v) in means.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut means {
        *m /= n;
    }
    means
}

pub(super) fn fit_standard(x: &Matrix) -> LearnedState {
    let n = x.n_rows() as f64;
    let means = column_means(x);
    let mut scales = vec![0.0; x.n_cols()];
    for row in x.rows_iter() {
        for (s, (v, m)) in scales.iter_mut().zip(row.iter().zip(&means)) {
            *s += (v - m) * (v - m);
        }
    }
    for s in &mut scales {
        // Population standard deviation; constant columns pass through
        // unscaled rather than dividing by zero.
        *s = (*s / n).sqrt();
        if *s == 0.0 {
            *s = 1.0;
        }
    }
    LearnedState::Standardize { means, scales }
}

pub(super) fn apply_standard(means: &[f64], scales: &[f64], x: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(x.n_rows(), x.n_cols());
    for i in 0..x.n_rows() {
        let row = x.row(i);
        for j in 0..row.len() {
            out.set(i, j, (row[j] - means[j]) / scales[j]);
        }
    }
    out
}

pub(super) fn fit_minmax(x: &Matrix) -> LearnedState {
    let mut mins = x.row(0).to_vec();
    let mut maxs = x.row(0).to_vec();
    for row in x.rows_iter() {
        for j in 0..row.len() {
            mins[j] = mins[j].min(row[j]);
            maxs[j] = maxs[j].max(row[j]);
        }
    }
    let spans = mins
        .iter()
        .zip(&maxs)
        .map(|(lo, hi)| {
            let span = hi - lo;
            if span == 0.0 {
                1.0
            } else {
                span
            }
        })
        .collect();
    LearnedState::MinMax { mins, spans }
}

pub(super) fn apply_minmax(mins: &[f64], spans: &[f64], x: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(x.n_rows(), x.n_cols());
    for i in 0..x.n_rows() {
        let row = x.row(i);
        for j in 0..row.len() {
            out.set(i, j, (row[j] - mins[j]) / spans[j]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::test_support::default_spec;
    use super::super::{fit, Method, Output};
    use crate::matrix::Matrix;

    #[test]
    fn standard_scaler_two_point_example() {
        let x = Matrix::from_rows(&[vec![1.0], vec![3.0]]);
        let model = fit(&default_spec(Method::StandardScaler), &x, &[0, 0]).unwrap();
        match model.state() {
            super::LearnedState::Standardize { means, scales } => {
                assert_eq!(means, &[2.0]);
                assert_eq!(scales, &[1.0]); // population std of {1,3}
            }
            other => panic!("unexpected state {other:?}"),
        }
        assert_eq!(model.param_count(), 2);
        let probe = Matrix::from_rows(&[vec![2.0]]);
        match model.apply(&probe).unwrap() {
            Output::Features(out) => assert_eq!(out.get(0, 0), 0.0),
            _ => unreachable!(),
        }
    }

    #[test]
    fn constant_column_keeps_scale_one() {
        let x = Matrix::from_rows(&[vec![5.0, 1.0], vec![5.0, 3.0]]);
        let model = fit(&default_spec(Method::StandardScaler), &x, &[0, 0]).unwrap();
        match model.apply(&x).unwrap() {
            Output::Features(out) => {
                assert_eq!(out.get(0, 0), 0.0);
                assert_eq!(out.get(1, 0), 0.0);
                assert!(out.is_finite());
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn minmax_maps_training_range_to_unit() {
        let x = Matrix::from_rows(&[vec![2.0], vec![4.0], vec![6.0]]);
        let model = fit(&default_spec(Method::MinMaxScaler), &x, &[0, 0, 0]).unwrap();
        assert_eq!(model.param_count(), 2);
        match model.apply(&x).unwrap() {
            Output::Features(out) => {
                assert_eq!(out.get(0, 0), 0.0);
                assert_eq!(out.get(1, 0), 0.5);
                assert_eq!(out.get(2, 0), 1.0);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn minmax_constant_column_is_safe() {
        let x = Matrix::from_rows(&[vec![3.0], vec![3.0]]);
        let model = fit(&default_spec(Method::MinMaxScaler), &x, &[0, 0]).unwrap();
        match model.apply(&x).unwrap() {
            Output::Features(out) => assert!(out.is_finite()),
            _ => unreachable!(),
        }
    }
}
