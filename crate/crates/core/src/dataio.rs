//! On-disk artifacts: feature tables, XYZ geometry sets, and label vectors.
//!
//! The tabular interchange format is plain CSV (comma-separated, UTF-8,
//! header row, `.` decimal). Values are written with 17 significant digits so
//! that every f64 survives a write/load round trip bit-exactly. Loading is
//! strictly order-preserving.

use ndarray::{Array1, Array2};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{path}: empty table (header only or no header)")]
    EmptyTable { path: PathBuf },

    #[error("{path}:{line}: ragged row: expected {expected} cells, found {found}")]
    RaggedRow {
        path: PathBuf,
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("{path}:{line}: column {column}: cannot parse '{value}' as a finite number")]
    NonNumeric {
        path: PathBuf,
        line: usize,
        column: usize,
        value: String,
    },

    #[error("{path}:{line}: duplicate molecule id '{id}'")]
    DuplicateMoleculeId {
        path: PathBuf,
        line: usize,
        id: String,
    },

    #[error("table '{table}': duplicate feature label '{label}'")]
    DuplicateFeatureLabel { table: String, label: String },

    #[error("table '{table}': {rows}x{cols} data does not match {features} features x {molecules} molecules")]
    ShapeMismatch {
        table: String,
        rows: usize,
        cols: usize,
        features: usize,
        molecules: usize,
    },

    #[error("table '{table}': non-finite entry at feature {row}, molecule {col}")]
    NonFinite {
        table: String,
        row: usize,
        col: usize,
    },

    #[error("{path}:{line}: XYZ block declares {expected} atoms but provides {found}")]
    XyzCountMismatch {
        path: PathBuf,
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("{path}:{line}: unknown element symbol '{symbol}'")]
    UnknownElement {
        path: PathBuf,
        line: usize,
        symbol: String,
    },

    #[error("{path}:{line}: malformed XYZ atom line '{content}'")]
    MalformedXyzLine {
        path: PathBuf,
        line: usize,
        content: String,
    },

    #[error("molecule '{id}': atoms {a} and {b} share the same position")]
    CoincidentAtoms { id: String, a: usize, b: usize },

    #[error("{path}: unknown property '{property}'; available: {available:?}")]
    UnknownProperty {
        path: PathBuf,
        property: String,
        available: Vec<String>,
    },

    #[error("{path}:{line}: missing value for property '{property}'")]
    MissingValue {
        path: PathBuf,
        line: usize,
        property: String,
    },

    #[error("molecule ids of '{other}' do not match '{first}' (sets differ; refusing to join)")]
    IdSetMismatch { first: String, other: String },

    #[error("label vector '{property}' does not cover molecule id '{id}'")]
    LabelIdMismatch { property: String, id: String },
}

/// A named d×N matrix of per-molecule feature vectors: row = feature,
/// column = molecule.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub name: String,
    pub features: Vec<String>,
    pub data: Array2<f64>,
    pub molecule_ids: Vec<String>,
}

impl FeatureTable {
    pub fn new(
        name: impl Into<String>,
        features: Vec<String>,
        data: Array2<f64>,
        molecule_ids: Vec<String>,
    ) -> Result<Self, DataError> {
        let name = name.into();
        if data.nrows() != features.len() || data.ncols() != molecule_ids.len() {
            return Err(DataError::ShapeMismatch {
                table: name,
                rows: data.nrows(),
                cols: data.ncols(),
                features: features.len(),
                molecules: molecule_ids.len(),
            });
        }
        let mut seen = std::collections::HashSet::new();
        for label in &features {
            if !seen.insert(label.as_str()) {
                return Err(DataError::DuplicateFeatureLabel {
                    table: name,
                    label: label.clone(),
                });
            }
        }
        for ((r, c), v) in data.indexed_iter() {
            if !v.is_finite() {
                return Err(DataError::NonFinite {
                    table: name,
                    row: r,
                    col: c,
                });
            }
        }
        Ok(Self {
            name,
            features,
            data,
            molecule_ids,
        })
    }

    /// Feature dimension d.
    pub fn d(&self) -> usize {
        self.data.nrows()
    }

    /// Molecule count N.
    pub fn n(&self) -> usize {
        self.data.ncols()
    }

    /// New table restricted to the given molecule columns, in the given
    /// order. Indices must be in range; duplicates are allowed (used by
    /// resampling code paths).
    pub fn select_columns(&self, idx: &[usize]) -> FeatureTable {
        let mut data = Array2::<f64>::zeros((self.d(), idx.len()));
        let mut ids = Vec::with_capacity(idx.len());
        for (dst, &src) in idx.iter().enumerate() {
            data.column_mut(dst).assign(&self.data.column(src));
            ids.push(self.molecule_ids[src].clone());
        }
        FeatureTable {
            name: self.name.clone(),
            features: self.features.clone(),
            data,
            molecule_ids: ids,
        }
    }

    /// Column permutation that reorders this table into `ids` order.
    /// Errors when the id sets differ.
    pub fn column_order_for(&self, ids: &[String], first: &str) -> Result<Vec<usize>, DataError> {
        if ids.len() != self.molecule_ids.len() {
            return Err(DataError::IdSetMismatch {
                first: first.to_string(),
                other: self.name.clone(),
            });
        }
        let lookup: std::collections::HashMap<&str, usize> = self
            .molecule_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        ids.iter()
            .map(|id| {
                lookup
                    .get(id.as_str())
                    .copied()
                    .ok_or_else(|| DataError::IdSetMismatch {
                        first: first.to_string(),
                        other: self.name.clone(),
                    })
            })
            .collect()
    }
}

/// One atom site of a loaded geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomSite {
    pub symbol: String,
    pub atomic_number: u32,
    /// Ångström.
    pub position: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Molecule {
    pub id: String,
    pub atoms: Vec<AtomSite>,
}

/// An ordered collection of molecular geometries.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometrySet {
    pub molecules: Vec<Molecule>,
}

impl GeometrySet {
    pub fn new(molecules: Vec<Molecule>) -> Result<Self, DataError> {
        for mol in &molecules {
            for a in 0..mol.atoms.len() {
                for b in (a + 1)..mol.atoms.len() {
                    if mol.atoms[a].position == mol.atoms[b].position {
                        return Err(DataError::CoincidentAtoms {
                            id: mol.id.clone(),
                            a,
                            b,
                        });
                    }
                }
            }
        }
        Ok(Self { molecules })
    }

    pub fn max_atom_count(&self) -> usize {
        self.molecules.iter().map(|m| m.atoms.len()).max().unwrap_or(0)
    }
}

/// Property values aligned with a molecule id list.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelVector {
    pub property_name: String,
    pub units: String,
    pub values: Array1<f64>,
    pub molecule_ids: Vec<String>,
}

impl LabelVector {
    /// Values for an id subset, in `ids` order. Every requested id must
    /// exist; labels not requested are dropped (deliberate subsampling,
    /// not a join).
    pub fn select_to(&self, ids: &[String]) -> Result<LabelVector, DataError> {
        let lookup: std::collections::HashMap<&str, usize> = self
            .molecule_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        let mut values = Array1::<f64>::zeros(ids.len());
        for (dst, id) in ids.iter().enumerate() {
            let src = lookup
                .get(id.as_str())
                .copied()
                .ok_or_else(|| DataError::LabelIdMismatch {
                    property: self.property_name.clone(),
                    id: id.clone(),
                })?;
            values[dst] = self.values[src];
        }
        Ok(LabelVector {
            property_name: self.property_name.clone(),
            units: self.units.clone(),
            values,
            molecule_ids: ids.to_vec(),
        })
    }

    /// Reorder the values into `ids` order. Errors when id sets differ.
    pub fn align_to(&self, ids: &[String]) -> Result<LabelVector, DataError> {
        let lookup: std::collections::HashMap<&str, usize> = self
            .molecule_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        if ids.len() != self.molecule_ids.len() {
            return Err(DataError::LabelIdMismatch {
                property: self.property_name.clone(),
                id: format!("(count {} vs {})", ids.len(), self.molecule_ids.len()),
            });
        }
        let mut values = Array1::<f64>::zeros(ids.len());
        for (dst, id) in ids.iter().enumerate() {
            let src = lookup
                .get(id.as_str())
                .copied()
                .ok_or_else(|| DataError::LabelIdMismatch {
                    property: self.property_name.clone(),
                    id: id.clone(),
                })?;
            values[dst] = self.values[src];
        }
        Ok(LabelVector {
            property_name: self.property_name.clone(),
            units: self.units.clone(),
            values,
            molecule_ids: ids.to_vec(),
        })
    }
}

/// Elements the XYZ loader understands, with their atomic numbers.
const ELEMENTS: &[(&str, u32)] = &[
    ("H", 1),
    ("B", 5),
    ("C", 6),
    ("N", 7),
    ("O", 8),
    ("F", 9),
    ("P", 15),
    ("S", 16),
    ("Cl", 17),
    ("Br", 35),
    ("I", 53),
];

pub fn atomic_number(symbol: &str) -> Option<u32> {
    ELEMENTS
        .iter()
        .find(|(s, _)| *s == symbol)
        .map(|&(_, z)| z)
}

fn read_to_string(path: &Path) -> Result<String, DataError> {
    std::fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn split_csv_line(line: &str) -> Vec<&str> {
    line.trim_end_matches('\r').split(',').map(str::trim).collect()
}

fn parse_cell(
    path: &Path,
    line_no: usize,
    column: usize,
    cell: &str,
) -> Result<f64, DataError> {
    let v: f64 = cell.parse().map_err(|_| DataError::NonNumeric {
        path: path.to_path_buf(),
        line: line_no,
        column,
        value: cell.to_string(),
    })?;
    if !v.is_finite() {
        return Err(DataError::NonNumeric {
            path: path.to_path_buf(),
            line: line_no,
            column,
            value: cell.to_string(),
        });
    }
    Ok(v)
}

/// Load a feature table from CSV. Layout: header row `id,<label>,...`, then
/// one row per molecule. The on-disk N×d orientation is transposed into the
/// in-memory d×N layout; molecule order is file order.
pub fn load_feature_table(path: &Path, name: &str) -> Result<FeatureTable, DataError> {
    let text = read_to_string(path)?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());

    let (_, header) = lines.next().ok_or_else(|| DataError::EmptyTable {
        path: path.to_path_buf(),
    })?;
    let header_cells = split_csv_line(header);
    if header_cells.len() < 2 {
        return Err(DataError::EmptyTable {
            path: path.to_path_buf(),
        });
    }
    let features: Vec<String> = header_cells[1..].iter().map(|s| s.to_string()).collect();
    let d = features.len();

    let mut ids: Vec<String> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut values: Vec<f64> = Vec::new(); // row-major over molecules
    for (idx, line) in lines {
        let line_no = idx + 1;
        let cells = split_csv_line(line);
        if cells.len() != d + 1 {
            return Err(DataError::RaggedRow {
                path: path.to_path_buf(),
                line: line_no,
                expected: d + 1,
                found: cells.len(),
            });
        }
        let id = cells[0].to_string();
        if !seen.insert(id.clone()) {
            return Err(DataError::DuplicateMoleculeId {
                path: path.to_path_buf(),
                line: line_no,
                id,
            });
        }
        ids.push(id);
        for (j, cell) in cells[1..].iter().enumerate() {
            values.push(parse_cell(path, line_no, j + 2, cell)?);
        }
    }
    if ids.is_empty() {
        return Err(DataError::EmptyTable {
            path: path.to_path_buf(),
        });
    }

    let n = ids.len();
    let mut data = Array2::<f64>::zeros((d, n));
    for (mol, chunk) in values.chunks_exact(d).enumerate() {
        for (feat, &v) in chunk.iter().enumerate() {
            data[[feat, mol]] = v;
        }
    }
    FeatureTable::new(name, features, data, ids)
}

/// Format a float with 17 significant digits; parses back to the same bits.
pub fn format_full(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write a feature table as CSV (see [`load_feature_table`] for the layout).
pub fn write_feature_table(path: &Path, table: &FeatureTable) -> Result<(), DataError> {
    let mut out = String::new();
    out.push_str("id");
    for f in &table.features {
        out.push(',');
        out.push_str(f);
    }
    out.push('\n');
    for (mol, id) in table.molecule_ids.iter().enumerate() {
        out.push_str(id);
        for feat in 0..table.d() {
            let _ = write!(out, ",{}", format_full(table.data[[feat, mol]]));
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Load concatenated standard XYZ blocks: atom count, comment line (used as
/// the molecule id), then `Symbol x y z` per atom (coordinates in Ångström).
pub fn load_xyz_set(path: &Path) -> Result<GeometrySet, DataError> {
    let text = read_to_string(path)?;
    let lines: Vec<&str> = text.lines().collect();
    let mut molecules = Vec::new();
    let mut i = 0usize;
    while i < lines.len() {
        if lines[i].trim().is_empty() {
            i += 1;
            continue;
        }
        let line_no = i + 1;
        let count: usize = lines[i].trim().parse().map_err(|_| DataError::MalformedXyzLine {
            path: path.to_path_buf(),
            line: line_no,
            content: lines[i].to_string(),
        })?;
        if i + 1 >= lines.len() {
            return Err(DataError::XyzCountMismatch {
                path: path.to_path_buf(),
                line: line_no,
                expected: count,
                found: 0,
            });
        }
        let id = lines[i + 1].trim().to_string();
        let mut atoms = Vec::with_capacity(count);
        for a in 0..count {
            let li = i + 2 + a;
            if li >= lines.len() || lines[li].trim().is_empty() || looks_like_count(lines[li]) {
                return Err(DataError::XyzCountMismatch {
                    path: path.to_path_buf(),
                    line: line_no,
                    expected: count,
                    found: a,
                });
            }
            let parts: Vec<&str> = lines[li].split_whitespace().collect();
            if parts.len() != 4 {
                return Err(DataError::MalformedXyzLine {
                    path: path.to_path_buf(),
                    line: li + 1,
                    content: lines[li].to_string(),
                });
            }
            let symbol = parts[0].to_string();
            let z = atomic_number(&symbol).ok_or_else(|| DataError::UnknownElement {
                path: path.to_path_buf(),
                line: li + 1,
                symbol: symbol.clone(),
            })?;
            let mut pos = [0.0f64; 3];
            for (k, token) in parts[1..4].iter().enumerate() {
                pos[k] = token.parse().map_err(|_| DataError::NonNumeric {
                    path: path.to_path_buf(),
                    line: li + 1,
                    column: k + 2,
                    value: token.to_string(),
                })?;
            }
            atoms.push(AtomSite {
                symbol,
                atomic_number: z,
                position: pos,
            });
        }
        molecules.push(Molecule { id, atoms });
        i += 2 + count;
    }
    GeometrySet::new(molecules)
}

fn looks_like_count(line: &str) -> bool {
    let t = line.trim();
    !t.is_empty() && t.split_whitespace().count() == 1 && t.parse::<usize>().is_ok()
}

/// Write a geometry set as concatenated XYZ blocks.
pub fn write_xyz_set(path: &Path, set: &GeometrySet) -> Result<(), DataError> {
    let mut out = String::new();
    for mol in &set.molecules {
        let _ = writeln!(out, "{}", mol.atoms.len());
        let _ = writeln!(out, "{}", mol.id);
        for atom in &mol.atoms {
            let _ = writeln!(
                out,
                "{} {} {} {}",
                atom.symbol,
                format_full(atom.position[0]),
                format_full(atom.position[1]),
                format_full(atom.position[2])
            );
        }
    }
    std::fs::write(path, out).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Load one property column from a label CSV. Layout: header `id,<prop>,...`
/// where a property header may carry units as `name [units]`.
pub fn load_labels(path: &Path, property: &str) -> Result<LabelVector, DataError> {
    let text = read_to_string(path)?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| DataError::EmptyTable {
        path: path.to_path_buf(),
    })?;
    let header_cells = split_csv_line(header);

    let mut col = None;
    let mut units = String::new();
    let mut available = Vec::new();
    for (j, cell) in header_cells.iter().enumerate().skip(1) {
        let (name, u) = split_units(cell);
        available.push(name.to_string());
        if name == property {
            col = Some(j);
            units = u.to_string();
        }
    }
    let col = col.ok_or_else(|| DataError::UnknownProperty {
        path: path.to_path_buf(),
        property: property.to_string(),
        available,
    })?;

    let mut ids = Vec::new();
    let mut values = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let cells = split_csv_line(line);
        if cells.len() <= col || cells[col].is_empty() {
            return Err(DataError::MissingValue {
                path: path.to_path_buf(),
                line: line_no,
                property: property.to_string(),
            });
        }
        ids.push(cells[0].to_string());
        values.push(parse_cell(path, line_no, col + 1, cells[col])?);
    }
    if ids.is_empty() {
        return Err(DataError::EmptyTable {
            path: path.to_path_buf(),
        });
    }
    Ok(LabelVector {
        property_name: property.to_string(),
        units,
        values: Array1::from_vec(values),
        molecule_ids: ids,
    })
}

/// `"E_PBE0 [kcal/mol]"` → `("E_PBE0", "kcal/mol")`; no brackets → empty units.
fn split_units(cell: &str) -> (&str, &str) {
    if let (Some(open), true) = (cell.find('['), cell.ends_with(']')) {
        let name = cell[..open].trim();
        let units = cell[open + 1..cell.len() - 1].trim();
        (name, units)
    } else {
        (cell, "")
    }
}

/// Reorder every table to the molecule order of the first. Mismatched id
/// sets are an error, never a silent join.
pub fn align_to_first(tables: &[FeatureTable]) -> Result<Vec<FeatureTable>, DataError> {
    let Some(first) = tables.first() else {
        return Ok(Vec::new());
    };
    let ids = &first.molecule_ids;
    let mut out = Vec::with_capacity(tables.len());
    out.push(first.clone());
    for table in &tables[1..] {
        let order = table.column_order_for(ids, &first.name)?;
        let identity = order.iter().enumerate().all(|(i, &j)| i == j);
        if identity {
            out.push(table.clone());
        } else {
            let mut reordered = table.select_columns(&order);
            reordered.name = table.name.clone();
            out.push(reordered);
        }
    }
    Ok(out)
}
