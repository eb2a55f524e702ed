//! Stage-2 fusion: fit the configured feature-fusion scheme on training
//! tables, then transform any aligned tables with the fitted artifacts.
//!
//! Four schemes are supported: a single named table (no fusion), plain
//! vertical concatenation, per-dataset ICA, and joint IVA. The ICA and IVA
//! paths share the same reduction machinery: per-dataset centering + PCA to
//! order P (whitened by default), demixing, then SCV-major stacking.

use crate::dataio::{DataError, FeatureTable};
use crate::iva::{self, DemixingSet, IvaError, IvaOptions};
use crate::multiset::{self, MultisetError, MultisetTensor, Reducer};
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FusionError {
    #[error("no feature tables given")]
    EmptyInput,

    #[error("unknown table '{name}'; available: {available:?}")]
    UnknownTable { name: String, available: Vec<String> },

    #[error("tables are not aligned: {0}")]
    Misaligned(String),

    #[error(transparent)]
    Multiset(#[from] MultisetError),

    #[error(transparent)]
    Iva(#[from] IvaError),

    #[error(transparent)]
    Data(#[from] DataError),
}

/// How feature tables are combined before regression.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FusionMode {
    /// Use one named table unchanged.
    Single(String),
    /// Plain vertical concatenation of all tables.
    Regular,
    /// Per-dataset PCA + ICA (IVA with K = 1 on each dataset).
    Ica,
    /// Per-dataset PCA + joint IVA-L.
    Iva,
}

impl FusionMode {
    /// Parse `regular`, `ica`, `iva`, or `single:<name>`.
    pub fn parse(s: &str) -> Option<FusionMode> {
        match s {
            "regular" => Some(FusionMode::Regular),
            "ica" => Some(FusionMode::Ica),
            "iva" => Some(FusionMode::Iva),
            _ => s
                .strip_prefix("single:")
                .map(|name| FusionMode::Single(name.to_string())),
        }
    }
}

impl std::fmt::Display for FusionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FusionMode::Single(name) => write!(f, "single:{name}"),
            FusionMode::Regular => write!(f, "regular"),
            FusionMode::Ica => write!(f, "ica"),
            FusionMode::Iva => write!(f, "iva"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FusionSpec {
    pub mode: FusionMode,
    /// PCA order per dataset (ICA and IVA modes).
    pub p: usize,
    pub whiten: bool,
    pub iva: IvaOptions,
}

impl FusionSpec {
    pub fn single(name: impl Into<String>) -> FusionSpec {
        FusionSpec {
            mode: FusionMode::Single(name.into()),
            p: 0,
            whiten: true,
            iva: IvaOptions::default(),
        }
    }

    pub fn regular() -> FusionSpec {
        FusionSpec {
            mode: FusionMode::Regular,
            p: 0,
            whiten: true,
            iva: IvaOptions::default(),
        }
    }

    pub fn iva(p: usize, iva: IvaOptions) -> FusionSpec {
        FusionSpec {
            mode: FusionMode::Iva,
            p,
            whiten: true,
            iva,
        }
    }

    pub fn ica(p: usize, iva: IvaOptions) -> FusionSpec {
        FusionSpec {
            mode: FusionMode::Ica,
            p,
            whiten: true,
            iva,
        }
    }

    /// Human-readable feature-set label for reports.
    pub fn describe(&self, tables: &[FeatureTable]) -> String {
        let names: Vec<&str> = tables.iter().map(|t| t.name.as_str()).collect();
        match &self.mode {
            FusionMode::Single(name) => format!("single:{name}"),
            FusionMode::Regular => format!("regular({})", names.join("+")),
            FusionMode::Ica => format!("ica({},P={})", names.join("+"), self.p),
            FusionMode::Iva => format!("iva({},P={})", names.join("+"), self.p),
        }
    }
}

/// Artifacts of a fitted fusion: reducers and demixing matrices for the
/// ICA/IVA modes, nothing but bookkeeping for the others.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FusionFit {
    pub mode: FusionMode,
    pub dataset_names: Vec<String>,
    pub reducers: Vec<Reducer>,
    pub demixing: Option<DemixingSet>,
}

fn check_alignment(tables: &[FeatureTable]) -> Result<(), FusionError> {
    let first = &tables[0];
    for t in &tables[1..] {
        if t.molecule_ids != first.molecule_ids {
            return Err(FusionError::Misaligned(format!(
                "'{}' and '{}' disagree on molecule order",
                first.name, t.name
            )));
        }
    }
    Ok(())
}

fn find_table<'a>(
    tables: &'a [FeatureTable],
    name: &str,
) -> Result<&'a FeatureTable, FusionError> {
    tables.iter().find(|t| t.name == name).ok_or_else(|| {
        FusionError::UnknownTable {
            name: name.to_string(),
            available: tables.iter().map(|t| t.name.clone()).collect(),
        }
    })
}

/// Fit the fusion scheme on training tables (already aligned and restricted
/// to training molecules).
pub fn fit_fusion(tables: &[FeatureTable], spec: &FusionSpec) -> Result<FusionFit, FusionError> {
    if tables.is_empty() {
        return Err(FusionError::EmptyInput);
    }
    check_alignment(tables)?;
    let dataset_names: Vec<String> = tables.iter().map(|t| t.name.clone()).collect();

    match &spec.mode {
        FusionMode::Single(name) => {
            find_table(tables, name)?;
            Ok(FusionFit {
                mode: spec.mode.clone(),
                dataset_names,
                reducers: Vec::new(),
                demixing: None,
            })
        }
        FusionMode::Regular => Ok(FusionFit {
            mode: spec.mode.clone(),
            dataset_names,
            reducers: Vec::new(),
            demixing: None,
        }),
        FusionMode::Ica | FusionMode::Iva => {
            let reducers: Vec<Reducer> = tables
                .iter()
                .map(|t| multiset::fit_reducer(t, spec.p, spec.whiten))
                .collect::<Result<_, _>>()?;
            let slices: Vec<Array2<f64>> = reducers
                .iter()
                .zip(tables)
                .map(|(r, t)| multiset::apply_reducer(r, t))
                .collect::<Result<_, _>>()?;
            let tensor = MultisetTensor::new(slices, dataset_names.clone())?;
            let demixing = if spec.mode == FusionMode::Iva {
                iva::iva_l(&tensor, &spec.iva)?
            } else {
                iva::ica_mode(&tensor, &spec.iva)?
            };
            Ok(FusionFit {
                mode: spec.mode.clone(),
                dataset_names,
                reducers,
                demixing: Some(demixing),
            })
        }
    }
}

impl FusionFit {
    /// Transform aligned tables into the fused feature matrix (rows =
    /// fused features, columns = molecules).
    pub fn transform(&self, tables: &[FeatureTable]) -> Result<Array2<f64>, FusionError> {
        if tables.is_empty() {
            return Err(FusionError::EmptyInput);
        }
        check_alignment(tables)?;
        match &self.mode {
            FusionMode::Single(name) => Ok(find_table(tables, name)?.data.clone()),
            FusionMode::Regular => Ok(multiset::regular_concat(tables)?.data),
            FusionMode::Ica | FusionMode::Iva => {
                let demixing = self.demixing.as_ref().expect("fitted ICA/IVA");
                let mut sources = Vec::with_capacity(tables.len());
                for ((reducer, w), table) in
                    self.reducers.iter().zip(&demixing.w).zip(tables)
                {
                    let reduced = multiset::apply_reducer(reducer, table)?;
                    sources.push(w.dot(&reduced));
                }
                Ok(multiset::scv_concat_matrices(&sources)?)
            }
        }
    }

    /// Dimension of the fused feature vectors.
    pub fn feature_dimension(&self, tables: &[FeatureTable]) -> Result<usize, FusionError> {
        match &self.mode {
            FusionMode::Single(name) => Ok(find_table(tables, name)?.d()),
            FusionMode::Regular => Ok(tables.iter().map(|t| t.d()).sum()),
            FusionMode::Ica | FusionMode::Iva => {
                Ok(self.reducers.iter().map(|r| r.p()).sum())
            }
        }
    }
}
