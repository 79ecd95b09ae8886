use super::Matrix;

/// Central finite-difference gradient of a scalar function of a matrix.
pub fn central_difference(x: &Matrix, h: f64, mut f: impl FnMut(&Matrix) -> f64) -> Matrix {
    let mut grad = Matrix::zeros(x.nrows(), x.ncols());
    let mut probe = x.clone();
    for i in 0..x.nrows() {
        for j in 0..x.ncols() {
            let orig = probe[(i, j)];
            probe[(i, j)] = orig + h;
            let up = f(&probe);
            probe[(i, j)] = orig - h;
            let down = f(&probe);
            probe[(i, j)] = orig;
            grad[(i, j)] = (up - down) / (2.0 * h);
        }
    }
    grad
}

/// `max |a − b| / max(‖a‖_∞, ‖b‖_∞, floor)`: a norm-relative error that is
/// not dominated by entries that are zero up to rounding.
pub fn max_relative_error(analytic: &Matrix, numeric: &Matrix, floor: f64) -> f64 {
    let scale = analytic.amax().max(numeric.amax()).max(floor);
    (analytic - numeric).amax() / scale
}
