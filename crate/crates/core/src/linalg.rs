//! Dense matrix helpers.
//!
//! [`matmul`] switches to a sparse inner loop when either operand is mostly
//! zeros. Bag-of-words features and one-hot identity features are typically
//! >95% zeros, which turns the `n × n × d` products of the proximity terms
//! > into `n × nnz` work.

use ndarray::{Array2, ArrayView2, Axis};

use crate::Matrix;

const SPARSE_DENSITY: f64 = 0.1;
// Below this many multiply-adds the dense kernel is always fast enough.
const SPARSE_MIN_WORK: usize = 1 << 16;

fn density(m: &ArrayView2<f64>) -> f64 {
    let len = m.len();
    if len == 0 {
        return 0.0;
    }
    let nnz = m.iter().filter(|v| **v != 0.0).count();
    nnz as f64 / len as f64
}

/// `a · b`, dispatching to a sparse loop for sparse operands.
pub fn matmul(a: &ArrayView2<f64>, b: &ArrayView2<f64>) -> Matrix {
    assert_eq!(a.ncols(), b.nrows(), "matmul inner dimensions");
    let work = a.nrows() * a.ncols() * b.ncols();
    if work < SPARSE_MIN_WORK {
        return a.dot(b);
    }
    if density(b) < SPARSE_DENSITY {
        return matmul_sparse_right(a, b);
    }
    if density(a) < SPARSE_DENSITY {
        return matmul_sparse_left(a, b);
    }
    a.dot(b)
}

fn matmul_sparse_left(a: &ArrayView2<f64>, b: &ArrayView2<f64>) -> Matrix {
    let mut out = Array2::zeros((a.nrows(), b.ncols()));
    for (i, row) in a.axis_iter(Axis(0)).enumerate() {
        let mut out_row = out.row_mut(i);
        for (k, &v) in row.iter().enumerate() {
            if v != 0.0 {
                out_row.scaled_add(v, &b.row(k));
            }
        }
    }
    out
}

fn matmul_sparse_right(a: &ArrayView2<f64>, b: &ArrayView2<f64>) -> Matrix {
    // CSR view of b.
    let rows: Vec<Vec<(usize, f64)>> = b
        .axis_iter(Axis(0))
        .map(|row| {
            row.iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(j, v)| (j, *v))
                .collect()
        })
        .collect();
    let mut out = Array2::zeros((a.nrows(), b.ncols()));
    for i in 0..a.nrows() {
        for (k, bk) in rows.iter().enumerate() {
            if bk.is_empty() {
                continue;
            }
            let aik = a[[i, k]];
            if aik == 0.0 {
                continue;
            }
            for &(j, v) in bk {
                out[[i, j]] += aik * v;
            }
        }
    }
    out
}

/// Frobenius inner product `Σ_ij a_ij b_ij`.
pub fn frobenius_dot(a: &ArrayView2<f64>, b: &ArrayView2<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Row-wise cosine similarity matrix. Rows with zero norm score 0 against
/// every row, themselves included.
pub fn cosine_similarity(x: &ArrayView2<f64>) -> Matrix {
    cross_cosine(x, x)
}

/// Cosine similarity of every row of `a` with every row of `b`; zero rows
/// score 0.
pub fn cross_cosine(a: &ArrayView2<f64>, b: &ArrayView2<f64>) -> Matrix {
    let (ua, na) = unit_rows(a);
    let (ub, nb) = unit_rows(b);
    let mut sim = matmul(&ua.view(), &ub.t());
    for ((i, j), v) in sim.indexed_iter_mut() {
        if na[i] == 0.0 || nb[j] == 0.0 {
            *v = 0.0;
        }
    }
    sim
}

fn unit_rows(x: &ArrayView2<f64>) -> (Matrix, Vec<f64>) {
    let norms: Vec<f64> = x
        .axis_iter(Axis(0))
        .map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let mut unit = x.to_owned();
    for (mut row, &nrm) in unit.axis_iter_mut(Axis(0)).zip(&norms) {
        if nrm > 0.0 {
            row.mapv_inplace(|v| v / nrm);
        }
    }
    (unit, norms)
}
