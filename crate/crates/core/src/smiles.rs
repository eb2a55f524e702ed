//! SMILES parsing for a practical organic subset, producing molecule graphs
//! with implicit hydrogens materialized as real atoms.
//!
//! Supported grammar: organic-subset atoms `B C N O P S F Cl Br I`, aromatic
//! `b c n o s p`, bracket atoms `[isotope? symbol chirality? Hcount?
//! charge?]`, bond symbols `- = # :` (plus `/` and `\` accepted as single
//! bonds), branches, ring closures `1`-`9` and `%nn`, and `.` for
//! disconnected fragments. Stereo markers are parsed and discarded.
//!
//! Implicit hydrogen rules:
//! - organic-subset atoms fill to the smallest table valence that covers the
//!   bond-order sum, with aromatic sums rounded up to the next integer first;
//! - bracket atoms with an explicit H count get exactly that many hydrogens
//!   and bypass the valence table;
//! - bracket atoms without an H count get zero hydrogens; their bond-order
//!   sum is still checked against the table maximum, shifted by the formal
//!   charge for N and O.
//!
//! Atom numbering is SMILES token order with hydrogens appended after the
//! token atoms in attachment order, so parsing is fully deterministic.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SmilesError {
    #[error("molecule '{id}': empty SMILES string")]
    Empty { id: String },

    #[error("offset {offset}: unexpected character '{found}'")]
    UnexpectedChar { offset: usize, found: char },

    #[error("offset {offset}: unknown element symbol '{symbol}'")]
    UnknownSymbol { offset: usize, symbol: String },

    #[error("offset {offset}: ring closure {digit} is never closed")]
    UnmatchedRingClosure { offset: usize, digit: u16 },

    #[error("offset {offset}: ring closure {digit} bonds an atom to itself")]
    SelfRingClosure { offset: usize, digit: u16 },

    #[error("offset {offset}: ring closure bond order conflicts with the opening side")]
    ConflictingRingBond { offset: usize },

    #[error("offset {offset}: duplicate bond between atoms {i} and {j}")]
    DuplicateBond { offset: usize, i: usize, j: usize },

    #[error("offset {offset}: unmatched parenthesis")]
    UnmatchedParen { offset: usize },

    #[error("offset {offset}: unterminated bracket atom")]
    UnmatchedBracket { offset: usize },

    #[error("offset {offset}: bond symbol with no following atom")]
    DanglingBond { offset: usize },

    #[error("offset {offset}: aromatic bond between non-aromatic atoms")]
    AromaticBondBetweenAliphatic { offset: usize },

    #[error(
        "offset {offset}: valence overflow on {symbol}: bond-order sum {sum} exceeds maximum {max}"
    )]
    ValenceOverflow {
        offset: usize,
        symbol: String,
        sum: f64,
        max: u32,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{path}:{line}: {source}")]
    InFile {
        path: PathBuf,
        line: usize,
        source: Box<SmilesError>,
    },
}

/// Bond order of a molecular-graph edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BondOrder {
    Single,
    Aromatic,
    Double,
    Triple,
}

impl BondOrder {
    /// Numeric order: 1, 1.5, 2, 3.
    pub fn value(self) -> f64 {
        match self {
            BondOrder::Single => 1.0,
            BondOrder::Aromatic => 1.5,
            BondOrder::Double => 2.0,
            BondOrder::Triple => 3.0,
        }
    }

    /// Symbol used in bond-type keys: `-`, `:`, `=`, `#`.
    pub fn key_symbol(self) -> char {
        match self {
            BondOrder::Single => '-',
            BondOrder::Aromatic => ':',
            BondOrder::Double => '=',
            BondOrder::Triple => '#',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphAtom {
    pub symbol: String,
    pub aromatic: bool,
    pub charge: i32,
    /// `Some(n)` when the SMILES bracket fixed the hydrogen count; `None`
    /// when hydrogens were filled (or not applicable) by valence rules.
    pub explicit_h: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bond {
    pub i: usize,
    pub j: usize,
    pub order: BondOrder,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MoleculeGraph {
    pub molecule_id: String,
    pub atoms: Vec<GraphAtom>,
    pub bonds: Vec<Bond>,
}

impl MoleculeGraph {
    /// Sum of bond orders incident to atom `a`.
    pub fn bond_order_sum(&self, a: usize) -> f64 {
        self.bonds
            .iter()
            .filter(|b| b.i == a || b.j == a)
            .map(|b| b.order.value())
            .sum()
    }

    pub fn heavy_atom_count(&self) -> usize {
        self.atoms.iter().filter(|a| a.symbol != "H").count()
    }
}

/// Count of non-hydrogen atoms.
pub fn heavy_atom_count(g: &MoleculeGraph) -> usize {
    g.heavy_atom_count()
}

const MAX_RING_CLOSURES: u16 = 100;

fn valence_table(symbol: &str) -> Option<&'static [u32]> {
    Some(match symbol {
        "H" => &[1],
        "B" => &[3],
        "C" => &[4],
        "N" => &[3],
        "O" => &[2],
        "P" => &[3, 5],
        "S" => &[2, 4, 6],
        "F" | "Cl" | "Br" | "I" => &[1],
        _ => return None,
    })
}

/// Charge shifts the allowed valence by its value for N and O only.
fn charge_shift(symbol: &str, charge: i32) -> i32 {
    match symbol {
        "N" | "O" => charge,
        _ => 0,
    }
}

struct RingOpen {
    atom: usize,
    order: Option<BondOrder>,
    offset: usize,
}

struct Parser<'a> {
    chars: Vec<char>,
    pos: usize,
    id: &'a str,
    atoms: Vec<GraphAtom>,
    atom_offsets: Vec<usize>,
    bonds: Vec<Bond>,
    bond_keys: HashSet<(usize, usize)>,
    prev: Option<usize>,
    branch_stack: Vec<(usize, usize)>,
    pending_bond: Option<(BondOrder, usize)>,
    rings: BTreeMap<u16, RingOpen>,
}

impl<'a> Parser<'a> {
    fn new(s: &str, id: &'a str) -> Self {
        Parser {
            chars: s.chars().collect(),
            pos: 0,
            id,
            atoms: Vec::new(),
            atom_offsets: Vec::new(),
            bonds: Vec::new(),
            bond_keys: HashSet::new(),
            prev: None,
            branch_stack: Vec::new(),
            pending_bond: None,
            rings: BTreeMap::new(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek();
        if c.is_some() {
            self.pos += 1;
        }
        c
    }

    fn add_bond(
        &mut self,
        i: usize,
        j: usize,
        order: BondOrder,
        offset: usize,
    ) -> Result<(), SmilesError> {
        let key = (i.min(j), i.max(j));
        if !self.bond_keys.insert(key) {
            return Err(SmilesError::DuplicateBond { offset, i, j });
        }
        if order == BondOrder::Aromatic && !(self.atoms[i].aromatic && self.atoms[j].aromatic) {
            return Err(SmilesError::AromaticBondBetweenAliphatic { offset });
        }
        self.bonds.push(Bond { i, j, order });
        Ok(())
    }

    fn default_order(&self, i: usize, j: usize) -> BondOrder {
        if self.atoms[i].aromatic && self.atoms[j].aromatic {
            BondOrder::Aromatic
        } else {
            BondOrder::Single
        }
    }

    fn push_atom(
        &mut self,
        atom: GraphAtom,
        offset: usize,
    ) -> Result<(), SmilesError> {
        let idx = self.atoms.len();
        self.atoms.push(atom);
        self.atom_offsets.push(offset);
        if let Some(prev) = self.prev {
            let order = match self.pending_bond.take() {
                Some((o, _)) => o,
                None => self.default_order(prev, idx),
            };
            self.add_bond(prev, idx, order, offset)?;
        } else if let Some((_, boff)) = self.pending_bond.take() {
            return Err(SmilesError::DanglingBond { offset: boff });
        }
        self.prev = Some(idx);
        Ok(())
    }

    fn ring_closure(&mut self, digit: u16, offset: usize) -> Result<(), SmilesError> {
        let Some(cur) = self.prev else {
            return Err(SmilesError::UnexpectedChar {
                offset,
                found: self.chars[offset],
            });
        };
        let closing_order = self.pending_bond.take().map(|(o, _)| o);
        if let Some(open) = self.rings.remove(&digit) {
            if open.atom == cur {
                return Err(SmilesError::SelfRingClosure { offset, digit });
            }
            let order = match (open.order, closing_order) {
                (Some(a), Some(b)) if a != b => {
                    return Err(SmilesError::ConflictingRingBond { offset });
                }
                (Some(a), _) => a,
                (None, Some(b)) => b,
                (None, None) => self.default_order(open.atom, cur),
            };
            self.add_bond(open.atom, cur, order, offset)
        } else {
            self.rings.insert(
                digit,
                RingOpen {
                    atom: cur,
                    order: closing_order,
                    offset,
                },
            );
            Ok(())
        }
    }

    fn parse_organic_atom(&mut self, offset: usize) -> Result<(), SmilesError> {
        let c = self.bump().expect("caller checked");
        // Two-character symbols take priority.
        let (symbol, aromatic) = match (c, self.peek()) {
            ('C', Some('l')) => {
                self.bump();
                ("Cl".to_string(), false)
            }
            ('B', Some('r')) => {
                self.bump();
                ("Br".to_string(), false)
            }
            ('B' | 'C' | 'N' | 'O' | 'P' | 'S' | 'F' | 'I', _) => (c.to_string(), false),
            ('b' | 'c' | 'n' | 'o' | 's' | 'p', _) => (c.to_ascii_uppercase().to_string(), true),
            _ => {
                return Err(SmilesError::UnknownSymbol {
                    offset,
                    symbol: c.to_string(),
                })
            }
        };
        self.push_atom(
            GraphAtom {
                symbol,
                aromatic,
                charge: 0,
                explicit_h: None,
            },
            offset,
        )
    }

    fn parse_bracket_atom(&mut self, offset: usize) -> Result<(), SmilesError> {
        // Leading isotope digits are accepted and ignored.
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.bump();
        }

        let sym_offset = self.pos;
        let first = self.bump().ok_or(SmilesError::UnmatchedBracket { offset })?;
        let (symbol, aromatic) = match first {
            'b' | 'c' | 'n' | 'o' | 's' | 'p' => (first.to_ascii_uppercase().to_string(), true),
            c if c.is_ascii_uppercase() => {
                let mut sym = c.to_string();
                if let Some(low) = self.peek() {
                    if low.is_ascii_lowercase() {
                        let two: String = format!("{c}{low}");
                        if valence_table(&two).is_some() {
                            self.bump();
                            sym = two;
                        }
                    }
                }
                (sym, false)
            }
            c => {
                return Err(SmilesError::UnknownSymbol {
                    offset: sym_offset,
                    symbol: c.to_string(),
                })
            }
        };
        if valence_table(&symbol).is_none() {
            return Err(SmilesError::UnknownSymbol {
                offset: sym_offset,
                symbol,
            });
        }

        // Chirality markers are parsed and discarded.
        while self.peek() == Some('@') {
            self.bump();
        }

        let mut explicit_h = 0u32;
        let mut saw_h = false;
        if self.peek() == Some('H') {
            self.bump();
            saw_h = true;
            explicit_h = 1;
            let mut digits = String::new();
            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                digits.push(self.bump().unwrap());
            }
            if !digits.is_empty() {
                explicit_h = digits.parse().unwrap_or(0);
            }
        }

        let mut charge = 0i32;
        if let Some(sign @ ('+' | '-')) = self.peek() {
            let unit = if sign == '+' { 1 } else { -1 };
            self.bump();
            charge = unit;
            let mut digits = String::new();
            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                digits.push(self.bump().unwrap());
            }
            if !digits.is_empty() {
                charge = unit * digits.parse::<i32>().unwrap_or(1);
            } else {
                while self.peek() == Some(sign) {
                    self.bump();
                    charge += unit;
                }
            }
        }

        match self.bump() {
            Some(']') => {}
            Some(c) => {
                return Err(SmilesError::UnexpectedChar {
                    offset: self.pos - 1,
                    found: c,
                })
            }
            None => return Err(SmilesError::UnmatchedBracket { offset }),
        }

        self.push_atom(
            GraphAtom {
                symbol,
                aromatic,
                charge,
                explicit_h: if saw_h { Some(explicit_h) } else { Some(0) },
            },
            offset,
        )
    }

    fn run(mut self) -> Result<MoleculeGraph, SmilesError> {
        while let Some(c) = self.peek() {
            let offset = self.pos;
            match c {
                'A'..='Z' | 'b' | 'c' | 'n' | 'o' | 's' | 'p' => {
                    self.parse_organic_atom(offset)?;
                }
                '[' => {
                    self.bump();
                    self.parse_bracket_atom(offset)?;
                }
                '-' | '=' | '#' | ':' | '/' | '\\' => {
                    self.bump();
                    if self.prev.is_none() || self.pending_bond.is_some() {
                        return Err(SmilesError::UnexpectedChar { offset, found: c });
                    }
                    let order = match c {
                        '=' => BondOrder::Double,
                        '#' => BondOrder::Triple,
                        ':' => BondOrder::Aromatic,
                        _ => BondOrder::Single,
                    };
                    self.pending_bond = Some((order, offset));
                }
                '(' => {
                    self.bump();
                    let Some(prev) = self.prev else {
                        return Err(SmilesError::UnexpectedChar { offset, found: c });
                    };
                    if self.pending_bond.is_some() {
                        return Err(SmilesError::UnexpectedChar { offset, found: c });
                    }
                    self.branch_stack.push((prev, offset));
                }
                ')' => {
                    self.bump();
                    if let Some((_, boff)) = self.pending_bond.take() {
                        return Err(SmilesError::DanglingBond { offset: boff });
                    }
                    let Some((restore, _)) = self.branch_stack.pop() else {
                        return Err(SmilesError::UnmatchedParen { offset });
                    };
                    self.prev = Some(restore);
                }
                '0'..='9' => {
                    self.bump();
                    let digit = c.to_digit(10).unwrap() as u16;
                    self.ring_closure(digit, offset)?;
                }
                '%' => {
                    self.bump();
                    let mut digits = String::new();
                    for _ in 0..2 {
                        match self.peek() {
                            Some(d) if d.is_ascii_digit() => {
                                digits.push(self.bump().unwrap());
                            }
                            _ => {
                                return Err(SmilesError::UnexpectedChar { offset, found: '%' })
                            }
                        }
                    }
                    let digit: u16 = digits.parse().unwrap();
                    debug_assert!(digit < MAX_RING_CLOSURES);
                    self.ring_closure(digit, offset)?;
                }
                '.' => {
                    self.bump();
                    if let Some((_, boff)) = self.pending_bond.take() {
                        return Err(SmilesError::DanglingBond { offset: boff });
                    }
                    self.prev = None;
                }
                other => {
                    return Err(SmilesError::UnexpectedChar {
                        offset,
                        found: other,
                    });
                }
            }
        }

        if let Some((_, boff)) = self.pending_bond {
            return Err(SmilesError::DanglingBond { offset: boff });
        }
        if let Some((_, poff)) = self.branch_stack.first() {
            return Err(SmilesError::UnmatchedParen { offset: *poff });
        }
        if let Some((digit, open)) = self
            .rings
            .iter()
            .min_by_key(|(_, open)| open.offset)
            .map(|(d, o)| (*d, o))
        {
            return Err(SmilesError::UnmatchedRingClosure {
                offset: open.offset,
                digit,
            });
        }

        let mut graph = MoleculeGraph {
            molecule_id: self.id.to_string(),
            atoms: self.atoms,
            bonds: self.bonds,
        };
        materialize_hydrogens(&mut graph, &self.atom_offsets)?;
        Ok(graph)
    }
}

/// Fill implicit hydrogens as real atoms, appended after the token atoms in
/// attachment order.
fn materialize_hydrogens(
    graph: &mut MoleculeGraph,
    offsets: &[usize],
) -> Result<(), SmilesError> {
    let token_count = graph.atoms.len();
    let mut h_counts = Vec::with_capacity(token_count);

    for a in 0..token_count {
        let atom = &graph.atoms[a];
        let sum = graph.bond_order_sum(a);
        // Aromatic 1.5-order contributions are rounded up before filling.
        let sum_int = sum.ceil() as u32;
        let table = valence_table(&atom.symbol).expect("validated during parse");
        let max = (*table.last().unwrap() as i32 + charge_shift(&atom.symbol, atom.charge))
            .max(0) as u32;

        let h = match atom.explicit_h {
            Some(h) => {
                // An explicit H count overrides the table, but a bare bracket
                // atom still has its bond-order sum checked.
                if h == 0 && sum_int > max {
                    return Err(SmilesError::ValenceOverflow {
                        offset: offsets[a],
                        symbol: atom.symbol.clone(),
                        sum,
                        max,
                    });
                }
                h
            }
            None => {
                let assigned = table
                    .iter()
                    .map(|&v| (v as i32 + charge_shift(&atom.symbol, atom.charge)).max(0) as u32)
                    .find(|&v| v >= sum_int);
                match assigned {
                    Some(v) => v - sum_int,
                    None => {
                        return Err(SmilesError::ValenceOverflow {
                            offset: offsets[a],
                            symbol: atom.symbol.clone(),
                            sum,
                            max,
                        });
                    }
                }
            }
        };
        h_counts.push(h);
    }

    for (a, &h) in h_counts.iter().enumerate() {
        for _ in 0..h {
            let idx = graph.atoms.len();
            graph.atoms.push(GraphAtom {
                symbol: "H".to_string(),
                aromatic: false,
                charge: 0,
                explicit_h: None,
            });
            graph.bonds.push(Bond {
                i: a,
                j: idx,
                order: BondOrder::Single,
            });
        }
    }
    Ok(())
}

/// Parse a single SMILES string into a molecule graph.
pub fn parse_smiles(s: &str, id: &str) -> Result<MoleculeGraph, SmilesError> {
    if s.trim().is_empty() {
        return Err(SmilesError::Empty { id: id.to_string() });
    }
    Parser::new(s.trim(), id).run()
}

/// Load a one-molecule-per-line SMILES file. Each line is `SMILES` or
/// `SMILES<TAB>id`; molecules without an id get `mol<line>`.
pub fn load_smiles_file(path: &Path) -> Result<Vec<MoleculeGraph>, SmilesError> {
    let text = std::fs::read_to_string(path).map_err(|source| SmilesError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut graphs = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let line_no = idx + 1;
        let (smiles, id) = match line.split_once('\t') {
            Some((s, id)) => (s.trim(), id.trim().to_string()),
            None => (line, format!("mol{line_no}")),
        };
        let graph = parse_smiles(smiles, &id).map_err(|e| SmilesError::InFile {
            path: path.to_path_buf(),
            line: line_no,
            source: Box::new(e),
        })?;
        graphs.push(graph);
    }
    Ok(graphs)
}
