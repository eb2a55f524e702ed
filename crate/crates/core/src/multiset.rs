//! Per-dataset centering and PCA reduction, tensor stacking, SCV
//! concatenation, the plain-concatenation baseline, and mixing-matrix
//! back-reconstruction.

use crate::dataio::{self, DataError, FeatureTable};
use crate::linalg::{self, LinalgError};
use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MultisetError {
    #[error("need at least 2 samples to fit a reducer, got {0}")]
    TooFewSamples(usize),

    #[error("reduction order P={p} is invalid for feature dimension {d}")]
    BadOrder { p: usize, d: usize },

    #[error(
        "P={p} exceeds the numerical rank: eigenvalue {value:.3e} below 1e-12 x lambda_max = {threshold:.3e}"
    )]
    RankDeficient { p: usize, value: f64, threshold: f64 },

    #[error("dimension mismatch: reducer expects {expected} features, input has {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrices disagree in shape: {0}")]
    ShapeMismatch(String),

    #[error("demixing matrix is numerically singular (relative determinant {rel_det:.3e})")]
    SingularDemixing { rel_det: f64 },

    #[error("no datasets given")]
    EmptyInput,

    #[error(transparent)]
    Linalg(#[from] LinalgError),

    #[error(transparent)]
    Data(#[from] DataError),
}

/// Per-dataset centering + PCA reduction fitted on training data.
///
/// `eigenvectors` rows are the unit leading eigenvectors of the training
/// covariance (descending eigenvalue order, sign fixed so the
/// largest-magnitude entry of each row is positive). The applied reduction
/// matrix `F` equals the eigenvector rows, each scaled by `1/sqrt(lambda)`
/// when `whiten` is set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Reducer {
    pub mean: Array1<f64>,
    pub eigenvectors: Array2<f64>,
    pub eigenvalues: Array1<f64>,
    pub whiten: bool,
    f: Array2<f64>,
}

impl Reducer {
    /// The P×d reduction matrix actually applied to data.
    pub fn matrix(&self) -> &Array2<f64> {
        &self.f
    }

    pub fn d(&self) -> usize {
        self.mean.len()
    }

    pub fn p(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// Fit a reducer on a raw d×N data matrix (columns = samples).
pub fn fit_reducer_matrix(
    x: &Array2<f64>,
    p: usize,
    whiten: bool,
) -> Result<Reducer, MultisetError> {
    let d = x.nrows();
    let n = x.ncols();
    if n < 2 {
        return Err(MultisetError::TooFewSamples(n));
    }
    if p == 0 || p > d {
        return Err(MultisetError::BadOrder { p, d });
    }

    let mean = x.mean_axis(Axis(1)).expect("n >= 2");
    let centered = x - &mean.view().insert_axis(Axis(1));
    let cov = centered.dot(&centered.t()) / (n as f64 - 1.0);
    let eig = linalg::sym_eigen(&cov)?;

    let lambda_max = eig.values[0].max(0.0);
    let threshold = 1e-12 * lambda_max;
    let lambda_p = eig.values[p - 1];
    if lambda_max <= 0.0 || lambda_p <= threshold {
        return Err(MultisetError::RankDeficient {
            p,
            value: lambda_p,
            threshold,
        });
    }

    let mut eigenvectors = Array2::<f64>::zeros((p, d));
    for row in 0..p {
        let col = eig.vectors.column(row);
        // Sign convention: largest-magnitude entry positive.
        let mut max_idx = 0;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > col[max_idx].abs() {
                max_idx = i;
            }
        }
        let flip = if col[max_idx] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..d {
            eigenvectors[[row, i]] = flip * col[i];
        }
    }
    let eigenvalues = Array1::from_iter(eig.values.iter().take(p).copied());

    let mut f = eigenvectors.clone();
    if whiten {
        for row in 0..p {
            let scale = 1.0 / eigenvalues[row].sqrt();
            for i in 0..d {
                f[[row, i]] *= scale;
            }
        }
    }

    Ok(Reducer {
        mean,
        eigenvectors,
        eigenvalues,
        whiten,
        f,
    })
}

/// Fit a reducer on the training columns of a feature table.
pub fn fit_reducer(
    table: &FeatureTable,
    p: usize,
    whiten: bool,
) -> Result<Reducer, MultisetError> {
    fit_reducer_matrix(&table.data, p, whiten)
}

/// Project a raw d×N matrix: `F (X - train_mean)`. The training mean is
/// subtracted, never the mean of `x` itself.
pub fn apply_reducer_matrix(r: &Reducer, x: &Array2<f64>) -> Result<Array2<f64>, MultisetError> {
    if x.nrows() != r.d() {
        return Err(MultisetError::DimensionMismatch {
            expected: r.d(),
            found: x.nrows(),
        });
    }
    let centered = x - &r.mean.view().insert_axis(Axis(1));
    Ok(r.f.dot(&centered))
}

pub fn apply_reducer(r: &Reducer, table: &FeatureTable) -> Result<Array2<f64>, MultisetError> {
    apply_reducer_matrix(r, &table.data)
}

/// K reduced datasets stacked as a P×N×K tensor (stored slice-major).
#[derive(Debug, Clone)]
pub struct MultisetTensor {
    slices: Vec<Array2<f64>>,
    dataset_names: Vec<String>,
}

impl MultisetTensor {
    pub fn new(
        slices: Vec<Array2<f64>>,
        dataset_names: Vec<String>,
    ) -> Result<Self, MultisetError> {
        if slices.is_empty() {
            return Err(MultisetError::EmptyInput);
        }
        if slices.len() != dataset_names.len() {
            return Err(MultisetError::ShapeMismatch(format!(
                "{} slices vs {} names",
                slices.len(),
                dataset_names.len()
            )));
        }
        let dim = slices[0].dim();
        for (k, s) in slices.iter().enumerate() {
            if s.dim() != dim {
                return Err(MultisetError::ShapeMismatch(format!(
                    "slice {k} is {:?}, expected {:?}",
                    s.dim(),
                    dim
                )));
            }
            if s.iter().any(|v| !v.is_finite()) {
                return Err(MultisetError::ShapeMismatch(format!(
                    "slice {k} contains non-finite entries"
                )));
            }
        }
        Ok(MultisetTensor {
            slices,
            dataset_names,
        })
    }

    pub fn k(&self) -> usize {
        self.slices.len()
    }

    pub fn p(&self) -> usize {
        self.slices[0].nrows()
    }

    pub fn n(&self) -> usize {
        self.slices[0].ncols()
    }

    pub fn slice(&self, k: usize) -> &Array2<f64> {
        &self.slices[k]
    }

    pub fn slices(&self) -> &[Array2<f64>] {
        &self.slices
    }

    pub fn dataset_names(&self) -> &[String] {
        &self.dataset_names
    }

    /// Single-slice view used by the per-dataset ICA mode.
    pub fn single(&self, k: usize) -> MultisetTensor {
        MultisetTensor {
            slices: vec![self.slices[k].clone()],
            dataset_names: vec![self.dataset_names[k].clone()],
        }
    }
}

/// Stack K P×N source matrices in SCV-major row order: rows `p*K .. p*K+K`
/// hold source p from datasets 1..K.
pub fn scv_concat_matrices(slices: &[Array2<f64>]) -> Result<Array2<f64>, MultisetError> {
    if slices.is_empty() {
        return Err(MultisetError::EmptyInput);
    }
    let (p, n) = slices[0].dim();
    for (idx, s) in slices.iter().enumerate() {
        if s.dim() != (p, n) {
            return Err(MultisetError::ShapeMismatch(format!(
                "slice {idx} is {:?}, expected {:?}",
                s.dim(),
                (p, n)
            )));
        }
    }
    let k = slices.len();
    let mut out = Array2::<f64>::zeros((p * k, n));
    for (ki, s) in slices.iter().enumerate() {
        for pi in 0..p {
            out.row_mut(pi * k + ki).assign(&s.row(pi));
        }
    }
    Ok(out)
}

/// Inverse of [`scv_concat_matrices`]: split a (P·K)×N matrix back into K
/// P×N slices.
pub fn scv_split_matrix(data: &Array2<f64>, k: usize) -> Result<Vec<Array2<f64>>, MultisetError> {
    if k == 0 || data.nrows() % k != 0 {
        return Err(MultisetError::ShapeMismatch(format!(
            "{} rows do not split into {k} slices",
            data.nrows()
        )));
    }
    let p = data.nrows() / k;
    let n = data.ncols();
    let mut out = vec![Array2::<f64>::zeros((p, n)); k];
    for pi in 0..p {
        for ki in 0..k {
            out[ki].row_mut(pi).assign(&data.row(pi * k + ki));
        }
    }
    Ok(out)
}

/// SCV-major concatenation as a feature table, with labels
/// `s<p>_<dataset>`.
pub fn scv_concat(
    slices: &[Array2<f64>],
    dataset_names: &[String],
    molecule_ids: &[String],
    name: &str,
) -> Result<FeatureTable, MultisetError> {
    let data = scv_concat_matrices(slices)?;
    let p = slices[0].nrows();
    let mut labels = Vec::with_capacity(data.nrows());
    for pi in 0..p {
        for ds in dataset_names {
            labels.push(format!("s{}_{ds}", pi + 1));
        }
    }
    Ok(FeatureTable::new(
        name,
        labels,
        data,
        molecule_ids.to_vec(),
    )?)
}

/// Plain vertical concatenation of aligned tables; feature labels are
/// prefixed by the source table name. Mismatched id sets are an error.
pub fn regular_concat(tables: &[FeatureTable]) -> Result<FeatureTable, MultisetError> {
    if tables.is_empty() {
        return Err(MultisetError::EmptyInput);
    }
    let aligned = dataio::align_to_first(tables)?;
    let n = aligned[0].n();
    let total_d: usize = aligned.iter().map(|t| t.d()).sum();
    let mut data = Array2::<f64>::zeros((total_d, n));
    let mut labels = Vec::with_capacity(total_d);
    let mut row = 0;
    for t in &aligned {
        for (i, label) in t.features.iter().enumerate() {
            data.row_mut(row).assign(&t.data.row(i));
            labels.push(format!("{}:{label}", t.name));
            row += 1;
        }
    }
    let name = aligned
        .iter()
        .map(|t| t.name.as_str())
        .collect::<Vec<_>>()
        .join("+");
    Ok(FeatureTable::new(
        name,
        labels,
        data,
        aligned[0].molecule_ids.clone(),
    )?)
}

/// Mixing-matrix back-reconstruction `Â = F⁺ W⁻¹` in the original feature
/// space; column p holds the per-feature weights of estimated source p.
pub fn back_reconstruct(r: &Reducer, w: &Array2<f64>) -> Result<Array2<f64>, MultisetError> {
    if w.nrows() != r.p() || w.ncols() != r.p() {
        return Err(MultisetError::ShapeMismatch(format!(
            "demixing matrix is {:?}, reducer order is {}",
            w.dim(),
            r.p()
        )));
    }
    let rel_det = linalg::relative_det(w);
    if rel_det <= 1e-12 {
        return Err(MultisetError::SingularDemixing { rel_det });
    }
    let w_inv = linalg::LuFactors::new(w)?.inverse();
    let f_pinv = linalg::pseudo_inverse_rows(r.matrix())?;
    Ok(f_pinv.dot(&w_inv))
}
