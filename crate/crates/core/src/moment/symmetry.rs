use super::transpose::check_subset;
use super::{CellValue, MomentError, MomentTemplate};
use crate::scenario::{is_permutation, BellFunctional};
use serde::{Deserialize, Serialize};

/// Optional reductions of a template.
///
/// `ppt_invariant` lists bipartitions whose partial transpose is identified
/// with the template itself; `swap` lists party permutations (`perm[s]` is the
/// image of party `s`). Both require `real`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymmetrySpec {
    pub real: bool,
    pub ppt_invariant: Vec<Vec<usize>>,
    pub swap: Vec<Vec<usize>>,
}

impl SymmetrySpec {
    pub fn real() -> Self {
        SymmetrySpec {
            real: true,
            ..Default::default()
        }
    }

    pub fn is_trivial(&self) -> bool {
        !self.real && self.ppt_invariant.is_empty() && self.swap.is_empty()
    }

    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if self.real {
            parts.push("real".to_string());
        }
        for m in &self.ppt_invariant {
            parts.push(format!("ppt{m:?}"));
        }
        for p in &self.swap {
            parts.push(format!("swap{p:?}"));
        }
        if parts.is_empty() {
            "none".into()
        } else {
            parts.join("+").replace(' ', "")
        }
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.0[hi] = lo;
        }
    }
}

/// Quotients the variable registry (and, for swaps, the Collins–Gisin
/// coordinates) by the requested symmetries.
///
/// A swap is checked against `functional`, which is then mandatory.
pub fn apply_symmetry(
    template: &MomentTemplate,
    spec: &SymmetrySpec,
    functional: Option<&BellFunctional>,
) -> Result<MomentTemplate, MomentError> {
    let n = template.dims.len();
    let real = spec.real || template.real;
    if !real && (!spec.ppt_invariant.is_empty() || !spec.swap.is_empty()) {
        return Err(MomentError::SymmetryViolation(
            "ppt-invariance and party swaps need the real reduction".into(),
        ));
    }
    let mut ppt = Vec::new();
    for m in &spec.ppt_invariant {
        ppt.push(check_subset(m, n)?);
    }
    let scenario = template.scenario();
    for perm in &spec.swap {
        if !is_permutation(perm, n) {
            return Err(MomentError::SymmetryViolation(format!(
                "{perm:?} is not a party permutation"
            )));
        }
        if !scenario.is_invariant_under(perm) {
            return Err(MomentError::SymmetryViolation(format!(
                "scenario is not invariant under {perm:?}"
            )));
        }
        let words = &template.basis.words;
        for s in 0..n {
            let a: Vec<_> = words[s].iter().map(|w| w.letters().to_vec()).collect();
            let b: Vec<_> = words[perm[s]]
                .iter()
                .map(|w| w.letters().to_vec())
                .collect();
            if a != b {
                return Err(MomentError::SymmetryViolation(format!(
                    "basis is not invariant under {perm:?}"
                )));
            }
        }
        match functional {
            None => {
                return Err(MomentError::SymmetryViolation(
                    "a party swap needs the functional to check".into(),
                ))
            }
            Some(f) if !f.is_invariant_under(perm) => {
                return Err(MomentError::SymmetryViolation(format!(
                    "functional '{}' is not invariant under {perm:?}",
                    f.name
                )))
            }
            _ => {}
        }
    }

    let nv = template.num_variables();
    let mut uf = UnionFind((0..nv).collect());
    let lookup = |t: Vec<u32>| -> Result<usize, MomentError> {
        let (rep, _) = template.words.canonical(t);
        template.registry.get(&rep).copied().ok_or_else(|| {
            MomentError::SymmetryViolation("basis is not closed under the symmetry".into())
        })
    };
    for v in 0..nv {
        let key = &template.var_keys[v];
        for m in &ppt {
            let mut t = key.clone();
            for &s in m {
                t[s] = template.words.adjoint[t[s] as usize];
            }
            uf.union(v, lookup(t)?);
        }
        for perm in &spec.swap {
            let mut t = key.clone();
            for s in 0..n {
                t[perm[s]] = key[s];
            }
            uf.union(v, lookup(t)?);
        }
    }

    let ncoord = template.coord_class.len();
    let mut cf = UnionFind(template.coord_class.clone());
    for perm in &spec.swap {
        for k in 0..ncoord {
            let loc = scenario.cg_decode(k);
            let mut img = vec![0; n];
            for s in 0..n {
                img[perm[s]] = loc[s];
            }
            cf.union(k, scenario.cg_index(&img));
        }
    }
    let coord_class: Vec<usize> = (0..ncoord).map(|k| cf.find(k)).collect();

    // renumber classes by their smallest member so first-appearance order is kept
    let mut new_id = vec![usize::MAX; nv];
    let mut var_keys = Vec::new();
    let mut var_self_adjoint: Vec<bool> = Vec::new();
    for v in 0..nv {
        let r = uf.find(v);
        if new_id[r] == usize::MAX {
            new_id[r] = var_keys.len();
            var_keys.push(template.var_keys[r].clone());
            var_self_adjoint.push(false);
        }
        new_id[v] = new_id[r];
        var_self_adjoint[new_id[v]] |= template.var_self_adjoint[v];
    }
    let cells = template
        .cells
        .iter()
        .map(|c| match *c {
            CellValue::Open { var, conj } => CellValue::Open {
                var: new_id[var],
                conj: conj && !real,
            },
            CellValue::Fixed(k) => CellValue::Fixed(coord_class[k]),
            CellValue::Zero => CellValue::Zero,
        })
        .collect();
    let registry = template
        .registry
        .iter()
        .map(|(k, &v)| (k.clone(), new_id[v]))
        .collect();

    let mut symmetry = template.symmetry.clone();
    symmetry.real |= spec.real;
    for m in ppt {
        if !symmetry.ppt_invariant.contains(&m) {
            symmetry.ppt_invariant.push(m);
        }
    }
    for p in &spec.swap {
        if !symmetry.swap.contains(p) {
            symmetry.swap.push(p.clone());
        }
    }
    Ok(MomentTemplate {
        basis: template.basis.clone(),
        dims: template.dims.clone(),
        side: template.side,
        cells,
        words: template.words.clone(),
        var_keys,
        var_self_adjoint,
        registry,
        coord_class,
        real,
        symmetry,
    })
}

impl MomentTemplate {
    /// True when the template is declared invariant under the partial
    /// transpose over `m` (or its complement).
    pub fn is_ppt_invariant(&self, m: &[usize]) -> bool {
        let n = self.dims.len();
        let Ok(m) = check_subset(m, n) else {
            return false;
        };
        let comp: Vec<usize> = (0..n).filter(|s| !m.contains(s)).collect();
        self.real
            && self
                .symmetry
                .ppt_invariant
                .iter()
                .any(|p| *p == m || *p == comp)
    }
}
