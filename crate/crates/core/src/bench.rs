//! Synthetic ground-truth experiments, the falsifiable end of the
//! separation machinery: sample correlated source component vectors, mix
//! them, separate with IVA or per-dataset ICA, and score the recovery.
//!
//! Sources follow a multivariate Laplacian built as a normal scale mixture:
//! `s = sqrt(w) L z` with `z` standard normal, `w` exponential(1), and `L`
//! the Cholesky factor of the equicorrelation matrix
//! `(1 - rho) I + rho 11ᵀ`. At `rho = 0` the components are drawn as
//! independent univariate Laplacians (one mixing variable per dataset);
//! sharing the radial variable would leave higher-order dependence across
//! datasets even at zero correlation, and `rho = 0` is specifically the
//! independence limit of the benchmark.

use crate::iva::{self, DemixingSet, IvaError, IvaOptions};
use crate::linalg::{self, LinalgError};
use crate::multiset::{self, MultisetError, MultisetTensor};
use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("SCV correlation must lie in [0, 1), got {0}")]
    BadCorrelation(f64),

    #[error("condition bound must exceed 1, got {0}")]
    BadConditionBound(f64),

    #[error("could not draw a {p}x{p} mixing matrix with condition <= {bound} in {attempts} attempts")]
    CondBoundInfeasible {
        p: usize,
        bound: f64,
        attempts: usize,
    },

    #[error("empty problem: K={k}, P={p}, N={n}")]
    EmptyProblem { k: usize, p: usize, n: usize },

    #[error(transparent)]
    Linalg(#[from] LinalgError),

    #[error(transparent)]
    Multiset(#[from] MultisetError),

    #[error(transparent)]
    Iva(#[from] IvaError),
}

/// A noiseless synthetic joint-BSS instance: `X[k] = A[k] S[k]` exactly.
#[derive(Debug, Clone)]
pub struct SyntheticProblem {
    pub k: usize,
    pub p: usize,
    pub n: usize,
    pub scv_correlation: f64,
    pub mixing: Vec<Array2<f64>>,
    pub sources: Vec<Array2<f64>>,
    pub observations: Vec<Array2<f64>>,
    pub seed: u64,
}

/// Derive a per-trial seed from a base seed and a trial counter
/// (SplitMix64 finalizer over the pair).
pub fn trial_seed(base: u64, trial: u64) -> u64 {
    let mut z = base ^ trial.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn equicorrelation_cholesky(k: usize, rho: f64) -> Result<Array2<f64>, BenchError> {
    let mut sigma = Array2::<f64>::from_elem((k, k), rho);
    for i in 0..k {
        sigma[[i, i]] = 1.0;
    }
    Ok(linalg::cholesky(&sigma)?)
}

/// Draw P source component vectors of N samples across K datasets.
/// Returned as K slices of shape P×N. Fixed seeds give bit-identical
/// output.
pub fn sample_scv_sources(
    k: usize,
    p: usize,
    n: usize,
    rho: f64,
    seed: u64,
) -> Result<Vec<Array2<f64>>, BenchError> {
    if !(0.0..1.0).contains(&rho) {
        return Err(BenchError::BadCorrelation(rho));
    }
    if k == 0 || p == 0 || n == 0 {
        return Err(BenchError::EmptyProblem { k, p, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);

    let mut slices = vec![Array2::<f64>::zeros((p, n)); k];
    if rho == 0.0 {
        // Independence limit: one radial variable per component.
        for pi in 0..p {
            for ni in 0..n {
                for slice in slices.iter_mut() {
                    let w: f64 = Exp1.sample(&mut rng);
                    let z: f64 = StandardNormal.sample(&mut rng);
                    slice[[pi, ni]] = w.sqrt() * z;
                }
            }
        }
        return Ok(slices);
    }

    let chol = equicorrelation_cholesky(k, rho)?;
    let mut z = Array1::<f64>::zeros(k);
    for pi in 0..p {
        for ni in 0..n {
            let w: f64 = Exp1.sample(&mut rng);
            let scale = w.sqrt();
            for zi in z.iter_mut() {
                *zi = StandardNormal.sample(&mut rng);
            }
            let correlated = chol.dot(&z);
            for (ki, slice) in slices.iter_mut().enumerate() {
                slice[[pi, ni]] = scale * correlated[ki];
            }
        }
    }
    Ok(slices)
}

/// Generate a full synthetic problem: sources, condition-bounded mixing
/// matrices with i.i.d. normal entries, and exact observations.
pub fn make_problem(
    k: usize,
    p: usize,
    n: usize,
    rho: f64,
    cond_bound: f64,
    seed: u64,
) -> Result<SyntheticProblem, BenchError> {
    if cond_bound <= 1.0 {
        return Err(BenchError::BadConditionBound(cond_bound));
    }
    let sources = sample_scv_sources(k, p, n, rho, seed)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2);
    const MAX_ATTEMPTS: usize = 100;
    let mut mixing = Vec::with_capacity(k);
    for _ in 0..k {
        let mut accepted = None;
        for _ in 0..MAX_ATTEMPTS {
            let a = Array2::from_shape_fn((p, p), |_| {
                let v: f64 = StandardNormal.sample(&mut rng);
                v
            });
            if linalg::condition_number(&a)? <= cond_bound {
                accepted = Some(a);
                break;
            }
        }
        mixing.push(accepted.ok_or(BenchError::CondBoundInfeasible {
            p,
            bound: cond_bound,
            attempts: MAX_ATTEMPTS,
        })?);
    }

    let observations: Vec<Array2<f64>> = mixing
        .iter()
        .zip(&sources)
        .map(|(a, s)| a.dot(s))
        .collect();

    Ok(SyntheticProblem {
        k,
        p,
        n,
        scv_correlation: rho,
        mixing,
        sources,
        observations,
        seed,
    })
}

/// Which separation algorithm a recovery run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeparationMode {
    Iva,
    Ica,
}

impl std::fmt::Display for SeparationMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SeparationMode::Iva => write!(f, "iva"),
            SeparationMode::Ica => write!(f, "ica"),
        }
    }
}

/// Outcome of one separation run on a synthetic problem.
#[derive(Debug, Clone)]
pub struct RecoveryResult {
    pub jisi: f64,
    pub demixing: DemixingSet,
    /// Per-dataset Amari index of each slice in isolation.
    pub per_dataset_amari: Vec<f64>,
    /// Whitened effective mixing matrices `F[k] A[k]`.
    pub effective_mixing: Vec<Array2<f64>>,
}

/// Whiten each observation slice, run the chosen separation mode, and score
/// the result against the whitened effective mixing matrices.
pub fn recovery_experiment(
    problem: &SyntheticProblem,
    opts: &IvaOptions,
    mode: SeparationMode,
) -> Result<RecoveryResult, BenchError> {
    let mut whitened = Vec::with_capacity(problem.k);
    let mut effective = Vec::with_capacity(problem.k);
    for (x, a) in problem.observations.iter().zip(&problem.mixing) {
        let reducer = multiset::fit_reducer_matrix(x, problem.p, true)?;
        whitened.push(multiset::apply_reducer_matrix(&reducer, x)?);
        effective.push(reducer.matrix().dot(a));
    }
    let names = (0..problem.k).map(|k| format!("slice{k}")).collect();
    let tensor = MultisetTensor::new(whitened, names)?;

    let demixing = match mode {
        SeparationMode::Iva => iva::iva_l(&tensor, opts)?,
        SeparationMode::Ica => iva::ica_mode(&tensor, opts)?,
    };

    let jisi = iva::joint_isi(&demixing.w, &effective);
    let per_dataset_amari = demixing
        .w
        .iter()
        .zip(&effective)
        .map(|(w, a)| iva::joint_isi(std::slice::from_ref(w), std::slice::from_ref(a)))
        .collect();

    Ok(RecoveryResult {
        jisi,
        demixing,
        per_dataset_amari,
        effective_mixing: effective,
    })
}
