use super::template::{decode_into, encode};
use super::{CellValue, MomentError, MomentTemplate};
use serde::{Deserialize, Serialize};

/// Cell permutation swapping row and column sub-indices of the parties in `parties`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartialTransposeMap {
    pub parties: Vec<usize>,
    side: usize,
    perm: Vec<u32>,
}

/// Normalises a bipartition: sorted, deduplicated, nonempty and proper.
pub(crate) fn check_subset(m: &[usize], n: usize) -> Result<Vec<usize>, MomentError> {
    let mut v = m.to_vec();
    v.sort_unstable();
    v.dedup();
    if v.is_empty() || v.len() >= n || v.iter().any(|&s| s >= n) {
        return Err(MomentError::DegenerateBipartition(m.to_vec()));
    }
    Ok(v)
}

pub fn partial_transpose(
    template: &MomentTemplate,
    m: &[usize],
) -> Result<PartialTransposeMap, MomentError> {
    let dims = template.dims();
    let parties = check_subset(m, dims.len())?;
    let side = template.side();
    let mut flip = vec![false; dims.len()];
    for &s in &parties {
        flip[s] = true;
    }
    let mut perm = Vec::with_capacity(side * side);
    let mut ri = vec![0; dims.len()];
    let mut ci = vec![0; dims.len()];
    for r in 0..side {
        for c in 0..side {
            decode_into(r, dims, &mut ri);
            decode_into(c, dims, &mut ci);
            for s in 0..dims.len() {
                if flip[s] {
                    std::mem::swap(&mut ri[s], &mut ci[s]);
                }
            }
            perm.push((encode(&ri, dims) * side + encode(&ci, dims)) as u32);
        }
    }
    Ok(PartialTransposeMap {
        parties,
        side,
        perm,
    })
}

impl PartialTransposeMap {
    pub fn side(&self) -> usize {
        self.side
    }

    /// Source cell feeding cell `index` of the transposed matrix.
    pub fn image(&self, index: usize) -> usize {
        self.perm[index] as usize
    }

    pub fn permutation(&self) -> Vec<usize> {
        self.perm.iter().map(|&p| p as usize).collect()
    }

    pub fn compose(&self, other: &PartialTransposeMap) -> Vec<usize> {
        self.perm
            .iter()
            .map(|&p| other.perm[p as usize] as usize)
            .collect()
    }

    /// Cells of the partially transposed template.
    pub fn apply(&self, template: &MomentTemplate) -> Vec<CellValue> {
        self.perm
            .iter()
            .map(|&p| template.cells()[p as usize])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{generate_basis, LevelSpec};
    use crate::moment::build_template;
    use crate::scenario::Scenario;

    #[test]
    fn bipartite_index_swap() {
        let sc = Scenario::uniform(2, 2, 2).unwrap();
        let basis = generate_basis(&sc, &LevelSpec::full(1)).unwrap();
        let t = build_template(&sc, &basis).unwrap();
        let pt = partial_transpose(&t, &[0]).unwrap();
        let n = t.side();
        // ((i,j),(k,l)) -> ((k,j),(i,l))
        let (i, j, k, l) = (1, 2, 0, 1);
        let src = t.encode(&[i, j]) * n + t.encode(&[k, l]);
        let dst = t.encode(&[k, j]) * n + t.encode(&[i, l]);
        assert_eq!(pt.image(src), dst);
        assert_eq!(pt.compose(&pt), (0..n * n).collect::<Vec<_>>());
    }

    #[test]
    fn degenerate_subsets_rejected() {
        let sc = Scenario::new(vec![vec![3, 2]]).unwrap();
        let basis = generate_basis(&sc, &LevelSpec::full(1)).unwrap();
        let t = build_template(&sc, &basis).unwrap();
        assert!(matches!(
            partial_transpose(&t, &[0]),
            Err(MomentError::DegenerateBipartition(_))
        ));
        let sc = Scenario::uniform(2, 2, 2).unwrap();
        let basis = generate_basis(&sc, &LevelSpec::full(1)).unwrap();
        let t = build_template(&sc, &basis).unwrap();
        assert!(partial_transpose(&t, &[]).is_err());
        assert!(partial_transpose(&t, &[0, 1]).is_err());
        assert!(partial_transpose(&t, &[2]).is_err());
    }
}
