//! Dense linear algebra kernels shared by the featurizers, the reducer, and
//! the optimizers.
//!
//! All matrices in this pipeline are small (feature dimensions of a few
//! hundred at most), so the implementations favor provably convergent
//! classical methods: Householder tridiagonalization followed by implicit QL
//! for symmetric eigenproblems, Cholesky for SPD solves, partially pivoted LU
//! for general square systems.

use ndarray::{Array1, Array2};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {0}")]
    ShapeMismatch(String),

    #[error("QL iteration failed to converge for eigenvalue {index} after {iters} iterations")]
    NoConvergence { index: usize, iters: usize },

    #[error("matrix is numerically singular ({context})")]
    Singular { context: String },

    #[error("matrix is not positive definite (pivot {pivot:.3e} at row {row})")]
    NotPositiveDefinite { pivot: f64, row: usize },
}

/// Eigendecomposition of a real symmetric matrix.
///
/// `values` are sorted in descending algebraic order and `vectors` holds the
/// corresponding unit eigenvectors as columns (`vectors.column(j)` pairs with
/// `values[j]`).
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Array1<f64>,
    pub vectors: Array2<f64>,
}

/// Symmetric eigendecomposition via Householder tridiagonalization (tred2)
/// and the implicitly shifted QL iteration (tql2).
///
/// The input must be square and is assumed symmetric; only its lower triangle
/// meaningfully participates once symmetrized. Matrices up to a few hundred
/// rows decompose in well under a millisecond, and the QL sweep is globally
/// convergent on tridiagonal matrices.
pub fn sym_eigen(a: &Array2<f64>) -> Result<SymEigen, LinalgError> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(LinalgError::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    if n == 0 {
        return Ok(SymEigen {
            values: Array1::zeros(0),
            vectors: Array2::zeros((0, 0)),
        });
    }

    // Work on an explicitly symmetrized copy so tiny asymmetries from
    // accumulated rounding cannot leak into the reduction.
    let mut v = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            v[[i, j]] = 0.5 * (a[[i, j]] + a[[j, i]]);
        }
    }
    let mut d = Array1::<f64>::zeros(n);
    let mut e = Array1::<f64>::zeros(n);

    tred2(&mut v, &mut d, &mut e);
    tql2(&mut v, &mut d, &mut e)?;

    // Sort descending, carrying eigenvector columns along.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].partial_cmp(&d[i]).expect("eigenvalues are finite"));
    let values = Array1::from_iter(order.iter().map(|&i| d[i]));
    let mut vectors = Array2::<f64>::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        for r in 0..n {
            vectors[[r, dst]] = v[[r, src]];
        }
    }
    Ok(SymEigen { values, vectors })
}

/// Householder reduction to symmetric tridiagonal form with accumulation of
/// the orthogonal transformations. Classic EISPACK tred2 (Bowdler, Martin,
/// Reinsch, Wilkinson), 0-indexed.
fn tred2(v: &mut Array2<f64>, d: &mut Array1<f64>, e: &mut Array1<f64>) {
    let n = v.nrows();
    for j in 0..n {
        d[j] = v[[n - 1, j]];
    }

    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[[i - 1, j]];
                v[[i, j]] = 0.0;
                v[[j, i]] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for j in 0..i {
                e[j] = 0.0;
            }

            for j in 0..i {
                f = d[j];
                v[[j, i]] = f;
                g = e[j] + v[[j, j]] * f;
                for k in (j + 1)..i {
                    g += v[[k, j]] * d[k];
                    e[k] += v[[k, j]] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[[k, j]] -= f * e[k] + g * d[k];
                }
                d[j] = v[[i - 1, j]];
                v[[i, j]] = 0.0;
            }
        }
        d[i] = h;
    }

    for i in 0..(n - 1) {
        v[[n - 1, i]] = v[[i, i]];
        v[[i, i]] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[[k, i + 1]] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[[k, i + 1]] * v[[k, j]];
                }
                for k in 0..=i {
                    v[[k, j]] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[[k, i + 1]] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[[n - 1, j]];
        v[[n - 1, j]] = 0.0;
    }
    v[[n - 1, n - 1]] = 1.0;
    e[0] = 0.0;
}

/// Implicitly shifted QL iteration on a symmetric tridiagonal matrix,
/// accumulating eigenvectors. Classic EISPACK tql2, 0-indexed.
fn tql2(v: &mut Array2<f64>, d: &mut Array1<f64>, e: &mut Array1<f64>) -> Result<(), LinalgError> {
    let n = v.nrows();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let eps = f64::EPSILON;
    let mut f = 0.0f64;
    let mut tst1 = 0.0f64;
    const MAX_ITER: usize = 64;

    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m >= n {
            m = n - 1;
        }

        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_ITER {
                    return Err(LinalgError::NoConvergence {
                        index: l,
                        iters: MAX_ITER,
                    });
                }

                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let h = g - d[l];
                for i in (l + 2)..n {
                    d[i] -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0f64;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0f64;
                let mut s2 = 0.0f64;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    let h = c * p;
                    let r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);

                    for k in 0..n {
                        let h = v[[k, i + 1]];
                        v[[k, i + 1]] = s * v[[k, i]] + c * h;
                        v[[k, i]] = c * v[[k, i]] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;

                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Cholesky factor `L` (lower triangular, `A = L Lᵀ`) of an SPD matrix.
pub fn cholesky(a: &Array2<f64>) -> Result<Array2<f64>, LinalgError> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(LinalgError::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    let mut l = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let mut diag = a[[j, j]];
        for k in 0..j {
            diag -= l[[j, k]] * l[[j, k]];
        }
        if diag <= 0.0 || !diag.is_finite() {
            return Err(LinalgError::NotPositiveDefinite {
                pivot: diag,
                row: j,
            });
        }
        let ljj = diag.sqrt();
        l[[j, j]] = ljj;
        for i in (j + 1)..n {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / ljj;
        }
    }
    Ok(l)
}

/// Solve `A x = b` given the Cholesky factor `L` of `A`.
pub fn cholesky_solve(l: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    let n = l.nrows();
    debug_assert_eq!(b.len(), n);
    // Forward: L y = b
    let mut y = Array1::<f64>::zeros(n);
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[[i, k]] * y[k];
        }
        y[i] = s / l[[i, i]];
    }
    // Backward: Lᵀ x = y
    let mut x = Array1::<f64>::zeros(n);
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[[k, i]] * x[k];
        }
        x[i] = s / l[[i, i]];
    }
    x
}

/// Solve `A X = B` column-by-column given the Cholesky factor of `A`.
pub fn cholesky_solve_matrix(l: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let mut x = Array2::<f64>::zeros(b.dim());
    for (j, col) in b.columns().into_iter().enumerate() {
        let sol = cholesky_solve(l, &col.to_owned());
        x.column_mut(j).assign(&sol);
    }
    x
}

/// LU decomposition with partial pivoting of a square matrix.
#[derive(Debug, Clone)]
pub struct LuFactors {
    lu: Array2<f64>,
    piv: Vec<usize>,
    /// +1.0 or -1.0 depending on the parity of row swaps.
    swap_sign: f64,
}

impl LuFactors {
    pub fn new(a: &Array2<f64>) -> Result<Self, LinalgError> {
        let n = a.nrows();
        if n != a.ncols() {
            return Err(LinalgError::NotSquare {
                rows: a.nrows(),
                cols: a.ncols(),
            });
        }
        let mut lu = a.clone();
        let mut piv: Vec<usize> = (0..n).collect();
        let mut swap_sign = 1.0;

        for k in 0..n {
            let mut p = k;
            let mut max = lu[[k, k]].abs();
            for i in (k + 1)..n {
                let v = lu[[i, k]].abs();
                if v > max {
                    max = v;
                    p = i;
                }
            }
            if max == 0.0 || !max.is_finite() {
                return Err(LinalgError::Singular {
                    context: format!("zero pivot in column {k}"),
                });
            }
            if p != k {
                for j in 0..n {
                    lu.swap([k, j], [p, j]);
                }
                piv.swap(k, p);
                swap_sign = -swap_sign;
            }
            let pivot = lu[[k, k]];
            for i in (k + 1)..n {
                let factor = lu[[i, k]] / pivot;
                lu[[i, k]] = factor;
                for j in (k + 1)..n {
                    lu[[i, j]] -= factor * lu[[k, j]];
                }
            }
        }
        Ok(Self {
            lu,
            piv,
            swap_sign,
        })
    }

    /// `(sign, log|det|)` of the factored matrix.
    pub fn sign_log_det(&self) -> (f64, f64) {
        let mut sign = self.swap_sign;
        let mut log_abs = 0.0;
        for i in 0..self.lu.nrows() {
            let u = self.lu[[i, i]];
            if u < 0.0 {
                sign = -sign;
            }
            log_abs += u.abs().ln();
        }
        (sign, log_abs)
    }

    pub fn det(&self) -> f64 {
        let (sign, log_abs) = self.sign_log_det();
        sign * log_abs.exp()
    }

    pub fn solve(&self, b: &Array1<f64>) -> Array1<f64> {
        let n = self.lu.nrows();
        debug_assert_eq!(b.len(), n);
        let mut x = Array1::<f64>::zeros(n);
        for i in 0..n {
            x[i] = b[self.piv[i]];
        }
        for i in 0..n {
            for k in 0..i {
                let l = self.lu[[i, k]];
                x[i] -= l * x[k];
            }
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                let u = self.lu[[i, k]];
                x[i] -= u * x[k];
            }
            x[i] /= self.lu[[i, i]];
        }
        x
    }

    pub fn inverse(&self) -> Array2<f64> {
        let n = self.lu.nrows();
        let mut inv = Array2::<f64>::zeros((n, n));
        let mut e = Array1::<f64>::zeros(n);
        for j in 0..n {
            e.fill(0.0);
            e[j] = 1.0;
            inv.column_mut(j).assign(&self.solve(&e));
        }
        inv
    }
}

/// Relative determinant magnitude of a square matrix: `|det A|` divided by
/// the Hadamard bound (product of row norms). Lies in `[0, 1]`; values near
/// zero mean numerically singular. Returns 0 when a row vanishes or the LU
/// factorization hits an exactly zero pivot.
pub fn relative_det(a: &Array2<f64>) -> f64 {
    let n = a.nrows();
    let mut log_hadamard = 0.0;
    for i in 0..n {
        let norm: f64 = a.row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        log_hadamard += norm.ln();
    }
    match LuFactors::new(a) {
        Ok(lu) => {
            let (_, log_abs) = lu.sign_log_det();
            (log_abs - log_hadamard).exp()
        }
        Err(_) => 0.0,
    }
}

/// Moore–Penrose pseudo-inverse of a matrix with full row rank:
/// `F⁺ = Fᵀ (F Fᵀ)⁻¹`, shape d×P for a P×d input.
pub fn pseudo_inverse_rows(f: &Array2<f64>) -> Result<Array2<f64>, LinalgError> {
    let gram = f.dot(&f.t());
    let l = cholesky(&gram).map_err(|_| LinalgError::Singular {
        context: "row-rank-deficient matrix in pseudo-inverse".to_string(),
    })?;
    let gram_inv = cholesky_solve_matrix(&l, &Array2::eye(gram.nrows()));
    Ok(f.t().dot(&gram_inv))
}

/// 2-norm condition number via the eigenvalues of `AᵀA`.
/// Returns `f64::INFINITY` for (numerically) rank-deficient matrices.
pub fn condition_number(a: &Array2<f64>) -> Result<f64, LinalgError> {
    let gram = a.t().dot(a);
    let eig = sym_eigen(&gram)?;
    let smax = eig.values[0].max(0.0).sqrt();
    let smin = eig.values[eig.values.len() - 1].max(0.0).sqrt();
    if smin == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(smax / smin)
}
