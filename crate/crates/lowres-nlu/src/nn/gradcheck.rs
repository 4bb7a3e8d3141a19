//! Finite-difference utilities shared by the gradient tests.

use ndarray::Array2;

/// Central-difference gradient of a scalar function of one matrix.
pub fn central_difference_grad(
    f: &dyn Fn(&Array2<f64>) -> f64,
    x: &Array2<f64>,
    h: f64,
) -> Array2<f64> {
    let mut grad = Array2::zeros(x.dim());
    for i in 0..x.nrows() {
        for j in 0..x.ncols() {
            let mut plus = x.clone();
            plus[(i, j)] += h;
            let mut minus = x.clone();
            minus[(i, j)] -= h;
            grad[(i, j)] = (f(&plus) - f(&minus)) / (2.0 * h);
        }
    }
    grad
}

/// Max elementwise relative error between two gradients, with an absolute
/// floor so near-zero entries are compared absolutely.
pub fn relative_error(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    assert_eq!(a.dim(), b.dim());
    let mut worst = 0.0f64;
    for (x, y) in a.iter().zip(b.iter()) {
        let denom = (x.abs() + y.abs()).max(1e-6);
        worst = worst.max((x - y).abs() / denom);
    }
    worst
}
