use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Matrix;

/// Glorot-uniform matrix: entries in ±sqrt(6/(rows+cols)).
pub fn glorot_init(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    glorot_from_rng(rows, cols, &mut rng)
}

pub(crate) fn glorot_from_rng(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    // Row-major fill so the draw order does not depend on storage layout.
    let values: Vec<f64> = (0..rows * cols).map(|_| rng.random_range(-bound..bound)).collect();
    Matrix::from_row_slice(rows, cols, &values)
}
