//! Independent oracles for the integration tests. Nothing here shares code
//! with the library paths it checks: the eigensolver oracle is cyclic
//! Jacobi (the library uses tridiagonalization + implicit QL), the linear
//! solve oracle is Gauss-Jordan elimination (the library uses Cholesky),
//! and the curve-fit oracle solves the raw 2×2 normal equations (the
//! library uses the centered slope formula).

#![allow(dead_code)]

use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Eigenvalues of a symmetric matrix by the cyclic Jacobi method, sorted
/// descending. Convergence on symmetric matrices is quadratic and
/// unconditional.
pub fn jacobi_eigenvalues(a: &Array2<f64>) -> Vec<f64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let mut m = a.clone();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[[i, j] ] * m[[i, j]];
            }
        }
        if off.sqrt() < 1e-14 * (1.0 + frobenius(&m)) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if m[[p, q]].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[[q, q]] - m[[p, p]]) / (2.0 * m[[p, q]]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[[k, p]];
                    let mkq = m[[k, q]];
                    m[[k, p]] = c * mkp - s * mkq;
                    m[[k, q]] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[[p, k]];
                    let mqk = m[[q, k]];
                    m[[p, k]] = c * mpk - s * mqk;
                    m[[q, k]] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut values: Vec<f64> = (0..n).map(|i| m[[i, i]]).collect();
    values.sort_by(|a, b| b.partial_cmp(a).unwrap());
    values
}

pub fn frobenius(m: &Array2<f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Dense inverse by Gauss-Jordan elimination with partial pivoting.
pub fn gauss_jordan_inverse(a: &Array2<f64>) -> Array2<f64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let mut aug = Array2::<f64>::zeros((n, 2 * n));
    for i in 0..n {
        for j in 0..n {
            aug[[i, j]] = a[[i, j]];
        }
        aug[[i, n + i]] = 1.0;
    }
    for col in 0..n {
        let mut pivot = col;
        for r in (col + 1)..n {
            if aug[[r, col]].abs() > aug[[pivot, col]].abs() {
                pivot = r;
            }
        }
        assert!(aug[[pivot, col]].abs() > 0.0, "singular matrix in oracle");
        if pivot != col {
            for j in 0..2 * n {
                aug.swap([col, j], [pivot, j]);
            }
        }
        let diag = aug[[col, col]];
        for j in 0..2 * n {
            aug[[col, j]] /= diag;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = aug[[r, col]];
            if factor != 0.0 {
                for j in 0..2 * n {
                    aug[[r, j]] -= factor * aug[[col, j]];
                }
            }
        }
    }
    let mut inv = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            inv[[i, j]] = aug[[i, n + j]];
        }
    }
    inv
}

/// Gaussian kernel by a direct per-entry double loop.
pub fn naive_gaussian_kernel(xa: &Array2<f64>, xb: &Array2<f64>, sigma: f64) -> Array2<f64> {
    let mut out = Array2::<f64>::zeros((xa.ncols(), xb.ncols()));
    for i in 0..xa.ncols() {
        for j in 0..xb.ncols() {
            let mut d2 = 0.0;
            for r in 0..xa.nrows() {
                let diff = xa[[r, i]] - xb[[r, j]];
                d2 += diff * diff;
            }
            out[[i, j]] = (-d2 / (2.0 * sigma * sigma)).exp();
        }
    }
    out
}

/// CDF of the univariate Laplace distribution with location 0 and scale b.
pub fn laplace_cdf(x: f64, b: f64) -> f64 {
    if x < 0.0 {
        0.5 * (x / b).exp()
    } else {
        1.0 - 0.5 * (-x / b).exp()
    }
}

/// Two-sided Kolmogorov-Smirnov statistic of a sample against a CDF.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = sample.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        let hi = (i as f64 + 1.0) / n - f;
        let lo = f - i as f64 / n;
        d = d.max(hi.abs()).max(lo.abs());
    }
    d
}

/// Critical KS distance at significance level `alpha` (asymptotic formula).
pub fn ks_critical(n: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

/// Power-law fit through the raw (uncentered) 2x2 normal equations:
/// minimizes sum (log C + alpha log n - log mae)^2. Returns (C, alpha).
pub fn normal_equations_power_fit(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(size, mae) in points {
        let x = size.ln();
        let y = mae.ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let det = n * sxx - sx * sx;
    let log_c = (sy * sxx - sx * sxy) / det;
    let alpha = (n * sxy - sx * sy) / det;
    (log_c.exp(), alpha)
}

/// Pearson correlation of two equal-length slices.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    cov / (va.sqrt() * vb.sqrt())
}

pub fn seeded_matrix(rows: usize, cols: usize, lo: f64, hi: f64, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((rows, cols), |_| rng.gen_range(lo..hi))
}

pub fn seeded_vector(len: usize, lo: f64, hi: f64, seed: u64) -> Array1<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array1::from_shape_fn(len, |_| rng.gen_range(lo..hi))
}
