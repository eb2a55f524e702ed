//! The three molecular featurizations: sum over bonds (SOB), weight-matrix
//! eigenspectra (WE), and Coulomb-matrix eigenspectra (CME).
//!
//! WE and CME spectra are the eigenvalues of the `dmax`-padded symmetric
//! matrix, sorted in descending algebraic order, so molecules smaller than
//! `dmax` contribute zeros interleaved at the right rank. Hydrogens are
//! vertices in both the bond-count and weight-matrix pictures.

use crate::dataio::{DataError, FeatureTable, GeometrySet, Molecule};
use crate::linalg::{self, LinalgError};
use crate::smiles::MoleculeGraph;
use ndarray::Array2;
use std::collections::BTreeSet;
use thiserror::Error;

/// Bohr radii per Ångström; Coulomb matrices use atomic units.
pub const BOHR_PER_ANGSTROM: f64 = 1.8897259886;

#[derive(Debug, Error)]
pub enum FeaturizeError {
    #[error("no molecules given")]
    EmptyInput,

    #[error("molecule '{molecule}': bond type '{key}' is not in the vocabulary")]
    OutOfVocabulary { molecule: String, key: String },

    #[error("molecule '{molecule}': {atoms} atoms exceed dmax = {dmax}")]
    TooManyAtoms {
        molecule: String,
        atoms: usize,
        dmax: usize,
    },

    #[error("molecule '{molecule}': atoms {i} and {j} coincide (zero distance)")]
    CoincidentAtoms {
        molecule: String,
        i: usize,
        j: usize,
    },

    #[error("eigensolver failed: {0}")]
    Eigen(#[from] LinalgError),

    #[error(transparent)]
    Data(#[from] DataError),
}

/// Ordered set of bond-type keys like `C-H`, `C:C`, `C#N`: the two element
/// symbols sorted alphabetically around the bond-order symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BondVocabulary {
    keys: Vec<String>,
}

impl BondVocabulary {
    pub fn from_keys(keys: impl IntoIterator<Item = String>) -> Self {
        let set: BTreeSet<String> = keys.into_iter().collect();
        BondVocabulary {
            keys: set.into_iter().collect(),
        }
    }

    pub fn keys(&self) -> &[String] {
        &self.keys
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn index_of(&self, key: &str) -> Option<usize> {
        self.keys.binary_search_by(|k| k.as_str().cmp(key)).ok()
    }
}

/// Canonical key for one bond: element symbols sorted alphabetically around
/// the order symbol.
pub fn bond_key(graph: &MoleculeGraph, bond: &crate::smiles::Bond) -> String {
    let a = &graph.atoms[bond.i].symbol;
    let b = &graph.atoms[bond.j].symbol;
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    format!("{lo}{}{hi}", bond.order.key_symbol())
}

/// Enumerate every bond type present in the corpus, hydrogens included.
pub fn build_bond_vocabulary(graphs: &[MoleculeGraph]) -> Result<BondVocabulary, FeaturizeError> {
    if graphs.is_empty() {
        return Err(FeaturizeError::EmptyInput);
    }
    let mut keys = BTreeSet::new();
    for g in graphs {
        for b in &g.bonds {
            keys.insert(bond_key(g, b));
        }
    }
    Ok(BondVocabulary {
        keys: keys.into_iter().collect(),
    })
}

/// Per-molecule bond counts over a fixed vocabulary, as a feature table with
/// one row per bond type.
pub fn sum_over_bonds(
    graphs: &[MoleculeGraph],
    vocab: &BondVocabulary,
    name: &str,
) -> Result<FeatureTable, FeaturizeError> {
    if graphs.is_empty() {
        return Err(FeaturizeError::EmptyInput);
    }
    let mut data = Array2::<f64>::zeros((vocab.len(), graphs.len()));
    for (col, g) in graphs.iter().enumerate() {
        for b in &g.bonds {
            let key = bond_key(g, b);
            let row = vocab
                .index_of(&key)
                .ok_or_else(|| FeaturizeError::OutOfVocabulary {
                    molecule: g.molecule_id.clone(),
                    key,
                })?;
            data[[row, col]] += 1.0;
        }
    }
    let ids = graphs.iter().map(|g| g.molecule_id.clone()).collect();
    Ok(FeatureTable::new(name, vocab.keys.clone(), data, ids)?)
}

fn padded_descending_spectrum(
    matrix: &Array2<f64>,
    dmax: usize,
) -> Result<Vec<f64>, LinalgError> {
    let eig = linalg::sym_eigen(matrix)?;
    let mut values: Vec<f64> = eig.values.to_vec();
    values.resize(dmax, 0.0);
    values.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
    Ok(values)
}

/// Symmetric atom×atom bond-order matrix of a molecule graph.
pub fn weight_matrix(g: &MoleculeGraph) -> Array2<f64> {
    let n = g.atoms.len();
    let mut m = Array2::<f64>::zeros((n, n));
    for b in &g.bonds {
        m[[b.i, b.j]] = b.order.value();
        m[[b.j, b.i]] = b.order.value();
    }
    m
}

/// Eigenvalues of the bond-order matrix, descending, zero-padded to `dmax`.
pub fn weight_eigenspectrum(
    g: &MoleculeGraph,
    dmax: usize,
) -> Result<Vec<f64>, FeaturizeError> {
    if g.atoms.len() > dmax {
        return Err(FeaturizeError::TooManyAtoms {
            molecule: g.molecule_id.clone(),
            atoms: g.atoms.len(),
            dmax,
        });
    }
    Ok(padded_descending_spectrum(&weight_matrix(g), dmax)?)
}

/// Coulomb matrix in atomic units: `C_ii = 0.5 Z_i^2.4`,
/// `C_ij = Z_i Z_j / |R_i - R_j|` with distances in Bohr.
pub fn coulomb_matrix(mol: &Molecule) -> Result<Array2<f64>, FeaturizeError> {
    let n = mol.atoms.len();
    let mut m = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        let zi = mol.atoms[i].atomic_number as f64;
        m[[i, i]] = 0.5 * zi.powf(2.4);
        for j in (i + 1)..n {
            let zj = mol.atoms[j].atomic_number as f64;
            let pi = mol.atoms[i].position;
            let pj = mol.atoms[j].position;
            let dist_angstrom = ((pi[0] - pj[0]).powi(2)
                + (pi[1] - pj[1]).powi(2)
                + (pi[2] - pj[2]).powi(2))
            .sqrt();
            if dist_angstrom == 0.0 {
                return Err(FeaturizeError::CoincidentAtoms {
                    molecule: mol.id.clone(),
                    i,
                    j,
                });
            }
            let v = zi * zj / (dist_angstrom * BOHR_PER_ANGSTROM);
            m[[i, j]] = v;
            m[[j, i]] = v;
        }
    }
    Ok(m)
}

/// Eigenvalues of the Coulomb matrix, descending, zero-padded to `dmax`.
pub fn coulomb_eigenspectrum(
    mol: &Molecule,
    dmax: usize,
) -> Result<Vec<f64>, FeaturizeError> {
    if mol.atoms.len() > dmax {
        return Err(FeaturizeError::TooManyAtoms {
            molecule: mol.id.clone(),
            atoms: mol.atoms.len(),
            dmax,
        });
    }
    Ok(padded_descending_spectrum(&coulomb_matrix(mol)?, dmax)?)
}

fn spectrum_table(
    name: &str,
    prefix: &str,
    dmax: usize,
    ids: Vec<String>,
    spectra: Vec<Vec<f64>>,
) -> Result<FeatureTable, FeaturizeError> {
    let mut data = Array2::<f64>::zeros((dmax, spectra.len()));
    for (col, spec) in spectra.iter().enumerate() {
        for (row, &v) in spec.iter().enumerate() {
            data[[row, col]] = v;
        }
    }
    let labels = (1..=dmax).map(|i| format!("{prefix}{i:02}")).collect();
    Ok(FeatureTable::new(name, labels, data, ids)?)
}

/// Weight-matrix eigenspectrum table over a molecule-graph corpus.
pub fn we_table(
    graphs: &[MoleculeGraph],
    dmax: usize,
    name: &str,
) -> Result<FeatureTable, FeaturizeError> {
    if graphs.is_empty() {
        return Err(FeaturizeError::EmptyInput);
    }
    let spectra = graphs
        .iter()
        .map(|g| weight_eigenspectrum(g, dmax))
        .collect::<Result<Vec<_>, _>>()?;
    let ids = graphs.iter().map(|g| g.molecule_id.clone()).collect();
    spectrum_table(name, "we", dmax, ids, spectra)
}

/// Coulomb-matrix eigenspectrum table over a geometry set.
pub fn cme_table(
    set: &GeometrySet,
    dmax: usize,
    name: &str,
) -> Result<FeatureTable, FeaturizeError> {
    if set.molecules.is_empty() {
        return Err(FeaturizeError::EmptyInput);
    }
    let spectra = set
        .molecules
        .iter()
        .map(|m| coulomb_eigenspectrum(m, dmax))
        .collect::<Result<Vec<_>, _>>()?;
    let ids = set.molecules.iter().map(|m| m.id.clone()).collect();
    spectrum_table(name, "cme", dmax, ids, spectra)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::AtomSite;
    use crate::smiles::parse_smiles;

    #[test]
    fn methane_vocabulary_and_counts() {
        let methane = parse_smiles("C", "methane").unwrap();
        let vocab = build_bond_vocabulary(std::slice::from_ref(&methane)).unwrap();
        assert_eq!(vocab.keys(), ["C-H"]);
        let table = sum_over_bonds(&[methane], &vocab, "sob").unwrap();
        assert_eq!(table.data[[0, 0]], 4.0);
    }

    #[test]
    fn vocabulary_union_is_sorted() {
        let methane = parse_smiles("C", "methane").unwrap();
        let hcn = parse_smiles("C#N", "hcn").unwrap();
        let vocab = build_bond_vocabulary(&[methane, hcn]).unwrap();
        assert_eq!(vocab.keys(), ["C#N", "C-H"]);
    }

    #[test]
    fn ethanol_bond_counts() {
        let ethanol = parse_smiles("CCO", "ethanol").unwrap();
        let vocab = build_bond_vocabulary(std::slice::from_ref(&ethanol)).unwrap();
        let table = sum_over_bonds(std::slice::from_ref(&ethanol), &vocab, "sob").unwrap();
        let expect = [("C-C", 1.0), ("C-H", 5.0), ("C-O", 1.0), ("H-O", 1.0)];
        for (key, count) in expect {
            let row = vocab.index_of(key).unwrap_or_else(|| panic!("missing {key}"));
            assert_eq!(table.data[[row, 0]], count, "count for {key}");
        }
    }

    #[test]
    fn out_of_vocabulary_names_molecule() {
        let methane = parse_smiles("C", "methane").unwrap();
        let hcn = parse_smiles("C#N", "hcn").unwrap();
        let vocab = build_bond_vocabulary(std::slice::from_ref(&methane)).unwrap();
        match sum_over_bonds(&[hcn], &vocab, "sob") {
            Err(FeaturizeError::OutOfVocabulary { molecule, key }) => {
                assert_eq!(molecule, "hcn");
                assert_eq!(key, "C#N");
            }
            other => panic!("expected OutOfVocabulary, got {other:?}"),
        }
    }

    #[test]
    fn methane_weight_spectrum_is_star_graph() {
        let methane = parse_smiles("C", "methane").unwrap();
        let spec = weight_eigenspectrum(&methane, 5).unwrap();
        let expect = [2.0, 0.0, 0.0, 0.0, -2.0];
        for (got, want) in spec.iter().zip(expect) {
            assert!((got - want).abs() < 1e-12, "{spec:?}");
        }
    }

    #[test]
    fn lone_atom_spectrum_is_zero() {
        let atom = parse_smiles("[C]", "carbon").unwrap();
        assert_eq!(atom.atoms.len(), 1);
        let spec = weight_eigenspectrum(&atom, 3).unwrap();
        assert_eq!(spec, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn oversized_molecule_rejected() {
        let ethane = parse_smiles("CC", "ethane").unwrap();
        assert!(matches!(
            weight_eigenspectrum(&ethane, 4),
            Err(FeaturizeError::TooManyAtoms { atoms: 8, dmax: 4, .. })
        ));
    }

    fn single_atom(symbol: &str, z: u32) -> Molecule {
        Molecule {
            id: format!("single-{symbol}"),
            atoms: vec![AtomSite {
                symbol: symbol.into(),
                atomic_number: z,
                position: [0.0, 0.0, 0.0],
            }],
        }
    }

    #[test]
    fn coulomb_single_hydrogen() {
        let spec = coulomb_eigenspectrum(&single_atom("H", 1), 1).unwrap();
        assert!((spec[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn coulomb_single_carbon() {
        // 0.5 * 6^2.4, evaluated independently.
        let expect = 0.5 * 6.0f64.powf(2.4);
        assert!((expect - 36.85815).abs() < 1e-2);
        let spec = coulomb_eigenspectrum(&single_atom("C", 6), 1).unwrap();
        assert!((spec[0] - expect).abs() < 1e-12);
    }

    #[test]
    fn coulomb_h2_closed_form() {
        // Two hydrogens 1.4 Bohr apart: eigenvalues 0.5 ± 1/1.4.
        let sep_angstrom = 1.4 / BOHR_PER_ANGSTROM;
        let mol = Molecule {
            id: "h2".into(),
            atoms: vec![
                AtomSite { symbol: "H".into(), atomic_number: 1, position: [0.0, 0.0, 0.0] },
                AtomSite { symbol: "H".into(), atomic_number: 1, position: [sep_angstrom, 0.0, 0.0] },
            ],
        };
        let spec = coulomb_eigenspectrum(&mol, 2).unwrap();
        assert!((spec[0] - (0.5 + 1.0 / 1.4)).abs() < 1e-12);
        assert!((spec[1] - (0.5 - 1.0 / 1.4)).abs() < 1e-12);
    }

    #[test]
    fn coincident_atoms_detected() {
        let mol = Molecule {
            id: "bad".into(),
            atoms: vec![
                AtomSite { symbol: "H".into(), atomic_number: 1, position: [1.0, 2.0, 3.0] },
                AtomSite { symbol: "H".into(), atomic_number: 1, position: [1.0, 2.0, 3.0] },
            ],
        };
        assert!(matches!(
            coulomb_eigenspectrum(&mol, 2),
            Err(FeaturizeError::CoincidentAtoms { .. })
        ));
    }

    #[test]
    fn we_spectrum_sums_to_zero() {
        for s in ["CCO", "c1ccccc1", "C#N", "CC(=O)O"] {
            let g = parse_smiles(s, s).unwrap();
            let spec = weight_eigenspectrum(&g, 30).unwrap();
            let total: f64 = spec.iter().sum();
            assert!(total.abs() < 1e-10, "{s}: trace {total}");
        }
    }

    #[test]
    fn cme_trace_identity() {
        let mol = Molecule {
            id: "hf".into(),
            atoms: vec![
                AtomSite { symbol: "H".into(), atomic_number: 1, position: [0.0, 0.0, 0.0] },
                AtomSite { symbol: "F".into(), atomic_number: 9, position: [0.92, 0.0, 0.0] },
            ],
        };
        let spec = coulomb_eigenspectrum(&mol, 4).unwrap();
        let trace: f64 = spec.iter().sum();
        let expect = 0.5 * (1.0f64.powf(2.4) + 9.0f64.powf(2.4));
        assert!((trace - expect).abs() / expect < 1e-8);
    }
}
