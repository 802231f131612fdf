use super::{MomentError, SymmetrySpec};
use crate::algebra::{reduce_letters, Letter, MonomialBasis, OperatorWord};
use crate::scenario::{Behavior, Scenario};
use faer::{c64, Mat};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::HashMap;

/// Content of one moment-matrix cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellValue {
    Zero,
    /// Collins–Gisin coordinate (class representative after symmetry merging).
    Fixed(usize),
    /// Open variable; `conj` marks the adjoint of the registry representative.
    Open {
        var: usize,
        conj: bool,
    },
}

/// Interned party-free words; id 0 is the identity.
#[derive(Debug, Clone, Default)]
pub(crate) struct WordTable {
    pub words: Vec<Vec<Letter>>,
    index: HashMap<Vec<Letter>, u32>,
    pub adjoint: Vec<u32>,
}

impl WordTable {
    fn new() -> Self {
        let mut t = WordTable::default();
        t.intern(Vec::new());
        t
    }

    fn intern(&mut self, w: Vec<Letter>) -> u32 {
        if let Some(&id) = self.index.get(&w) {
            return id;
        }
        let id = self.words.len() as u32;
        let mut rev = w.clone();
        rev.reverse();
        self.index.insert(w.clone(), id);
        self.words.push(w);
        self.adjoint.push(u32::MAX);
        let adj = if rev == self.words[id as usize] {
            id
        } else {
            self.intern(rev)
        };
        self.adjoint[id as usize] = adj;
        self.adjoint[adj as usize] = id;
        id
    }

    fn cmp_word(&self, a: u32, b: u32) -> Ordering {
        let (x, y) = (&self.words[a as usize], &self.words[b as usize]);
        (x.len(), x).cmp(&(y.len(), y))
    }

    pub fn cmp_tuple(&self, a: &[u32], b: &[u32]) -> Ordering {
        for (&p, &q) in a.iter().zip(b) {
            match self.cmp_word(p, q) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        Ordering::Equal
    }

    pub fn adjoint_tuple(&self, t: &[u32]) -> Vec<u32> {
        t.iter().map(|&w| self.adjoint[w as usize]).collect()
    }

    /// Returns the canonical representative of `{t, t†}` and whether `t` is its adjoint.
    pub fn canonical(&self, t: Vec<u32>) -> (Vec<u32>, bool) {
        let adj = self.adjoint_tuple(&t);
        if self.cmp_tuple(&adj, &t) == Ordering::Less {
            (adj, true)
        } else {
            (t, false)
        }
    }
}

/// Symbolic moment matrix over a monomial basis.
///
/// Cells are stored row-major; a row (or column) index is the mixed-radix
/// combination of per-party basis indices, party 0 most significant.
#[derive(Debug, Clone)]
pub struct MomentTemplate {
    pub(crate) basis: MonomialBasis,
    pub(crate) dims: Vec<usize>,
    pub(crate) side: usize,
    pub(crate) cells: Vec<CellValue>,
    pub(crate) words: WordTable,
    pub(crate) var_keys: Vec<Vec<u32>>,
    pub(crate) var_self_adjoint: Vec<bool>,
    pub(crate) registry: HashMap<Vec<u32>, usize>,
    pub(crate) coord_class: Vec<usize>,
    pub(crate) real: bool,
    pub(crate) symmetry: SymmetrySpec,
}

pub fn build_template(
    scenario: &Scenario,
    basis: &MonomialBasis,
) -> Result<MomentTemplate, MomentError> {
    if &basis.scenario != scenario {
        return Err(MomentError::BasisMismatch(
            "basis was generated for another scenario".into(),
        ));
    }
    let n = scenario.parties();
    let dims = basis.sizes();
    let side: usize = dims.iter().product();
    let mut words = WordTable::new();

    // per-party key tables: keys[s][r * dims[s] + c]
    let mut keys: Vec<Vec<Option<u32>>> = Vec::with_capacity(n);
    let mut locals: Vec<Vec<Option<usize>>> = Vec::with_capacity(n);
    for s in 0..n {
        let list = &basis.words[s];
        let mut table = Vec::with_capacity(list.len() * list.len());
        let mut local = Vec::with_capacity(list.len() * list.len());
        for r in list {
            for c in list {
                let key = reduce_letters(c.letters().iter().rev().chain(r.letters()).copied());
                match key {
                    None => {
                        table.push(None);
                        local.push(None);
                    }
                    Some(k) => {
                        let l = match k.len() {
                            0 => Some(0),
                            1 => scenario.local_index(s, k[0].0, k[0].1),
                            _ => None,
                        };
                        table.push(Some(words.intern(k)));
                        local.push(l);
                    }
                }
            }
        }
        keys.push(table);
        locals.push(local);
    }

    let mut cells = Vec::with_capacity(side * side);
    let mut registry: HashMap<Vec<u32>, usize> = HashMap::new();
    let mut var_keys = Vec::new();
    let mut var_self_adjoint = Vec::new();
    let mut ri = vec![0usize; n];
    let mut ci = vec![0usize; n];
    let mut tuple = vec![0u32; n];
    let mut loc = vec![0usize; n];
    for r in 0..side {
        decode_into(r, &dims, &mut ri);
        for c in 0..side {
            decode_into(c, &dims, &mut ci);
            let mut zero = false;
            let mut fixed = true;
            for s in 0..n {
                let k = ri[s] * dims[s] + ci[s];
                match keys[s][k] {
                    None => {
                        zero = true;
                        break;
                    }
                    Some(id) => {
                        tuple[s] = id;
                        match locals[s][k] {
                            Some(l) => loc[s] = l,
                            None => fixed = false,
                        }
                    }
                }
            }
            let cell = if zero {
                CellValue::Zero
            } else if fixed {
                CellValue::Fixed(scenario.cg_index(&loc))
            } else {
                let (rep, conj) = words.canonical(tuple.clone());
                let var = match registry.get(&rep) {
                    Some(&v) => v,
                    None => {
                        let v = var_keys.len();
                        let sa = words.adjoint_tuple(&rep) == rep;
                        registry.insert(rep.clone(), v);
                        var_keys.push(rep);
                        var_self_adjoint.push(sa);
                        v
                    }
                };
                CellValue::Open {
                    var,
                    conj: conj && !var_self_adjoint[var],
                }
            };
            cells.push(cell);
        }
    }
    Ok(MomentTemplate {
        basis: basis.clone(),
        dims,
        side,
        cells,
        words,
        var_keys,
        var_self_adjoint,
        registry,
        coord_class: (0..scenario.cg_len()).collect(),
        real: false,
        symmetry: SymmetrySpec::default(),
    })
}

pub(crate) fn decode_into(mut index: usize, dims: &[usize], out: &mut [usize]) {
    for s in (0..dims.len()).rev() {
        out[s] = index % dims[s];
        index /= dims[s];
    }
}

pub(crate) fn encode(idx: &[usize], dims: &[usize]) -> usize {
    idx.iter().zip(dims).fold(0, |acc, (&i, &d)| acc * d + i)
}

impl MomentTemplate {
    pub fn scenario(&self) -> &Scenario {
        &self.basis.scenario
    }

    pub fn basis(&self) -> &MonomialBasis {
        &self.basis
    }

    pub fn side(&self) -> usize {
        self.side
    }

    /// Per-party basis sizes.
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn cells(&self) -> &[CellValue] {
        &self.cells
    }

    pub fn cell(&self, row: usize, col: usize) -> CellValue {
        self.cells[row * self.side + col]
    }

    /// Index of the identity/identity cell.
    pub fn trace_cell(&self) -> usize {
        0
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn symmetry(&self) -> &SymmetrySpec {
        &self.symmetry
    }

    pub fn num_variables(&self) -> usize {
        self.var_keys.len()
    }

    /// Real parameters carried by the open variables.
    pub fn real_unknowns(&self) -> usize {
        if self.real {
            self.var_keys.len()
        } else {
            self.var_self_adjoint
                .iter()
                .map(|&sa| if sa { 1 } else { 2 })
                .sum()
        }
    }

    pub fn is_self_adjoint(&self, var: usize) -> bool {
        self.var_self_adjoint[var]
    }

    /// Representative operator tuple of an open variable.
    pub fn variable_words(&self, var: usize) -> Vec<OperatorWord> {
        self.var_keys[var]
            .iter()
            .enumerate()
            .map(|(s, &w)| OperatorWord::from_letters(s, &self.words.words[w as usize]))
            .collect()
    }

    /// Representative coordinate of the class containing `coordinate`.
    pub fn coordinate_class(&self, coordinate: usize) -> usize {
        self.coord_class[coordinate]
    }

    /// Distinct coordinate representatives, ascending.
    pub fn coordinate_representatives(&self) -> Vec<usize> {
        (0..self.coord_class.len())
            .filter(|&k| self.coord_class[k] == k)
            .collect()
    }

    /// Row or column index split into per-party basis indices.
    pub fn decode(&self, index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        decode_into(index, &self.dims, &mut out);
        out
    }

    pub fn encode(&self, idx: &[usize]) -> usize {
        encode(idx, &self.dims)
    }

    /// Numeric matrix for a behavior and an assignment of the open variables.
    ///
    /// In real mode only the real parts of `u` are used.
    pub fn instantiate(&self, behavior: &Behavior, u: &[c64]) -> Result<Mat<c64>, MomentError> {
        self.instantiate_cells(&self.cells, behavior, u)
    }

    pub(crate) fn instantiate_cells(
        &self,
        cells: &[CellValue],
        behavior: &Behavior,
        u: &[c64],
    ) -> Result<Mat<c64>, MomentError> {
        if &behavior.scenario != self.scenario() {
            return Err(MomentError::BasisMismatch(
                "behavior from another scenario".into(),
            ));
        }
        if u.len() < self.num_variables() {
            return Err(MomentError::IncompleteAssignment(format!(
                "{} values for {} variables",
                u.len(),
                self.num_variables()
            )));
        }
        let n = self.side;
        Ok(Mat::from_fn(n, n, |r, c| match cells[r * n + c] {
            CellValue::Zero => c64::new(0.0, 0.0),
            CellValue::Fixed(k) => c64::new(behavior.coordinates[self.coord_class[k]], 0.0),
            CellValue::Open { var, conj } => {
                let v = u[var];
                let v = if self.real { c64::new(v.re, 0.0) } else { v };
                if conj {
                    v.conj()
                } else {
                    v
                }
            }
        }))
    }
}
