use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Sparse symmetric matrix stored as a full triplet list (both triangles).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SymSparse {
    pub entries: Vec<(usize, usize, f64)>,
}

impl SymSparse {
    /// Builds from upper-or-lower entries, mirroring off-diagonal ones and
    /// merging duplicates.
    pub fn from_triangle(entries: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut acc: HashMap<(usize, usize), f64> = HashMap::new();
        for (i, j, v) in entries {
            let (p, q) = if i <= j { (i, j) } else { (j, i) };
            *acc.entry((p, q)).or_insert(0.0) += v;
        }
        let mut out = Vec::with_capacity(2 * acc.len());
        for ((p, q), v) in acc {
            if v != 0.0 {
                out.push((p, q, v));
                if p != q {
                    out.push((q, p, v));
                }
            }
        }
        out.sort_by_key(|a| (a.0, a.1));
        SymSparse { entries: out }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Upper-triangle entries `(i <= j)`, sorted.
    pub fn upper(&self) -> Vec<(usize, usize, f64)> {
        let mut u: Vec<_> = self
            .entries
            .iter()
            .copied()
            .filter(|e| e.0 <= e.1)
            .collect();
        u.sort_by_key(|a| (a.0, a.1));
        u
    }

    /// Checks indices against `size` and exact symmetry of the triplet list.
    pub fn check(&self, size: usize) -> Result<(), String> {
        let mut acc: HashMap<(usize, usize), f64> = HashMap::new();
        for &(i, j, v) in &self.entries {
            if i >= size || j >= size {
                return Err(format!("entry ({i},{j}) outside a {size}x{size} block"));
            }
            if !v.is_finite() {
                return Err(format!("non-finite entry at ({i},{j})"));
            }
            *acc.entry((i, j)).or_insert(0.0) += v;
        }
        for (&(i, j), &v) in &acc {
            let w = acc.get(&(j, i)).copied().unwrap_or(0.0);
            if (v - w).abs() > 1e-12 * (1.0 + v.abs()) {
                return Err(format!(
                    "asymmetric entries ({i},{j})={v} and ({j},{i})={w}"
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdBlock {
    pub label: String,
    pub size: usize,
    pub constant: SymSparse,
    /// Coefficient matrix per variable, sorted by variable.
    pub coefficients: Vec<(usize, SymSparse)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearRow {
    pub label: String,
    pub terms: Vec<(usize, f64)>,
    pub rhs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Maximize,
    Minimize,
}

/// Solver-agnostic SDP: optimise `objective . x + constant` subject to
/// `constant_b + sum_j x_j F_bj >= 0` for every block and the equality rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpProblem {
    pub variables: Vec<String>,
    pub blocks: Vec<PsdBlock>,
    pub equalities: Vec<LinearRow>,
    pub objective: Vec<(usize, f64)>,
    pub objective_constant: f64,
    pub sense: Sense,
    pub provenance: String,
    pub notes: Vec<String>,
}

impl SdpProblem {
    pub fn new(sense: Sense, provenance: impl Into<String>) -> Self {
        SdpProblem {
            variables: Vec::new(),
            blocks: Vec::new(),
            equalities: Vec::new(),
            objective: Vec::new(),
            objective_constant: 0.0,
            sense,
            provenance: provenance.into(),
            notes: Vec::new(),
        }
    }

    pub fn add_variable(&mut self, name: impl Into<String>) -> usize {
        self.variables.push(name.into());
        self.variables.len() - 1
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn add_equality(&mut self, label: impl Into<String>, terms: Vec<(usize, f64)>, rhs: f64) {
        self.equalities.push(LinearRow {
            label: label.into(),
            terms,
            rhs,
        });
    }

    /// Objective coefficients as a dense vector.
    pub fn objective_dense(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.num_variables()];
        for &(j, v) in &self.objective {
            c[j] += v;
        }
        c
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().map(|&(j, v)| v * x[j]).sum::<f64>() + self.objective_constant
    }

    /// Structural checks: indices, symmetry and variable usage.
    pub fn validate(&self) -> Result<(), String> {
        let m = self.num_variables();
        let mut used = vec![false; m];
        for b in &self.blocks {
            b.constant
                .check(b.size)
                .map_err(|e| format!("block '{}': {e}", b.label))?;
            for (j, f) in &b.coefficients {
                if *j >= m {
                    return Err(format!("block '{}' references variable {j}", b.label));
                }
                f.check(b.size)
                    .map_err(|e| format!("block '{}', variable {j}: {e}", b.label))?;
                used[*j] |= !f.is_empty();
            }
        }
        for r in &self.equalities {
            for &(j, v) in &r.terms {
                if j >= m {
                    return Err(format!("row '{}' references variable {j}", r.label));
                }
                if !v.is_finite() {
                    return Err(format!("row '{}' has a non-finite coefficient", r.label));
                }
                used[j] = true;
            }
            if !r.rhs.is_finite() {
                return Err(format!(
                    "row '{}' has a non-finite right-hand side",
                    r.label
                ));
            }
        }
        for &(j, _) in &self.objective {
            if j >= m {
                return Err(format!("objective references variable {j}"));
            }
        }
        if let Some(j) = used.iter().position(|u| !u) {
            return Err(format!(
                "variable {j} ('{}') appears in no block or row",
                self.variables[j]
            ));
        }
        Ok(())
    }
}

/// Accumulates entries of one block before canonicalisation.
#[derive(Debug, Clone, Default)]
pub(crate) struct BlockBuilder {
    pub label: String,
    pub size: usize,
    constant: Vec<(u32, u32, f64)>,
    terms: Vec<(u32, u32, u32, f64)>,
}

impl BlockBuilder {
    pub fn new(label: impl Into<String>, size: usize) -> Self {
        BlockBuilder {
            label: label.into(),
            size,
            ..Default::default()
        }
    }

    pub fn constant(&mut self, i: usize, j: usize, v: f64) {
        self.constant.push((i as u32, j as u32, v));
    }

    pub fn term(&mut self, var: usize, i: usize, j: usize, v: f64) {
        self.terms.push((var as u32, i as u32, j as u32, v));
    }

    pub fn finish(mut self) -> PsdBlock {
        let constant = canonical(
            std::mem::take(&mut self.constant)
                .into_iter()
                .map(|(i, j, v)| (0, i, j, v))
                .collect(),
        )
        .into_iter()
        .map(|(_, s)| s)
        .next()
        .unwrap_or_default();
        let coefficients = canonical(std::mem::take(&mut self.terms));
        PsdBlock {
            label: self.label,
            size: self.size,
            constant,
            coefficients,
        }
    }
}

/// Sorts, merges duplicates and drops zeros; grouped by the first index.
fn canonical(mut t: Vec<(u32, u32, u32, f64)>) -> Vec<(usize, SymSparse)> {
    t.sort_by_key(|a| (a.0, a.1, a.2));
    let mut out: Vec<(usize, SymSparse)> = Vec::new();
    let mut k = 0;
    while k < t.len() {
        let (var, i, j) = (t[k].0, t[k].1, t[k].2);
        let mut v = 0.0;
        while k < t.len() && (t[k].0, t[k].1, t[k].2) == (var, i, j) {
            v += t[k].3;
            k += 1;
        }
        if v == 0.0 {
            continue;
        }
        match out.last_mut() {
            Some((last, s)) if *last == var as usize => s.entries.push((i as usize, j as usize, v)),
            _ => out.push((
                var as usize,
                SymSparse {
                    entries: vec![(i as usize, j as usize, v)],
                },
            )),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn asymmetric_block_rejected() {
        let mut p = SdpProblem::new(Sense::Minimize, "test");
        let t = p.add_variable("t");
        p.blocks.push(PsdBlock {
            label: "b".into(),
            size: 2,
            constant: SymSparse {
                entries: vec![(0, 1, 1.0)],
            },
            coefficients: vec![(t, SymSparse::from_triangle([(0, 0, 1.0), (1, 1, 1.0)]))],
        });
        assert!(p.validate().unwrap_err().contains("asymmetric"));
        p.blocks[0].constant = SymSparse::from_triangle([(0, 1, 1.0)]);
        p.validate().unwrap();
    }

    #[test]
    fn builder_merges_entries() {
        let mut b = BlockBuilder::new("b", 2);
        b.term(0, 0, 1, 1.0);
        b.term(0, 0, 1, 2.0);
        b.term(1, 1, 1, 1.0);
        b.term(1, 1, 1, -1.0);
        b.constant(0, 0, 1.0);
        let blk = b.finish();
        assert_eq!(
            blk.coefficients,
            vec![(
                0,
                SymSparse {
                    entries: vec![(0, 1, 3.0)]
                }
            )]
        );
        assert_eq!(blk.constant.entries, vec![(0, 0, 1.0)]);
    }
}
