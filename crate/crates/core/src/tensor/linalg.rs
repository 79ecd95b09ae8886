use std::io::{Read, Write};

use super::Matrix;
use crate::error::{Error, Result};

/// Pivot magnitude below which a matrix is treated as singular.
pub const SINGULAR_PIVOT: f64 = 1e-12;

/// Gauss-Jordan inverse with partial pivoting.
pub fn invert(a: &Matrix) -> Result<Matrix> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::shape("inverse", format!("{}x{} is not square", n, a.ncols())));
    }
    let mut work = a.clone();
    let mut inv = Matrix::identity(n, n);
    for col in 0..n {
        let (pivot_row, pivot) = (col..n)
            .map(|r| (r, work[(r, col)]))
            .max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()))
            .expect("non-empty pivot range");
        if pivot.abs() < SINGULAR_PIVOT {
            return Err(Error::Singular { pivot: pivot.abs(), threshold: SINGULAR_PIVOT });
        }
        if pivot_row != col {
            work.swap_rows(pivot_row, col);
            inv.swap_rows(pivot_row, col);
        }
        let scale = 1.0 / work[(col, col)];
        for j in 0..n {
            work[(col, j)] *= scale;
            inv[(col, j)] *= scale;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = work[(r, col)];
            if factor == 0.0 {
                continue;
            }
            for j in 0..n {
                work[(r, j)] -= factor * work[(col, j)];
                inv[(r, j)] -= factor * inv[(col, j)];
            }
        }
    }
    Ok(inv)
}

/// Writes `rows`, `cols` as little-endian u64 followed by the row-major
/// entries as little-endian f64.
pub fn write_matrix(w: &mut impl Write, m: &Matrix) -> std::io::Result<()> {
    w.write_all(&(m.nrows() as u64).to_le_bytes())?;
    w.write_all(&(m.ncols() as u64).to_le_bytes())?;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            w.write_all(&m[(i, j)].to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_matrix(r: &mut impl Read) -> std::io::Result<Matrix> {
    let mut word = [0u8; 8];
    r.read_exact(&mut word)?;
    let rows = u64::from_le_bytes(word) as usize;
    r.read_exact(&mut word)?;
    let cols = u64::from_le_bytes(word) as usize;
    let mut values = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        r.read_exact(&mut word)?;
        values.push(f64::from_le_bytes(word));
    }
    Ok(Matrix::from_row_slice(rows, cols, &values))
}
