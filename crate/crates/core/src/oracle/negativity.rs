use super::linalg::{herm_eigvals, hermiticity_error, outer, partial_transpose, trace};
use super::OracleError;
use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegativityReport {
    pub bipartition: Vec<usize>,
    pub value: f64,
    pub eigenvalues: Vec<f64>,
}

/// Proper bipartitions up to complement; each is represented by its smaller
/// side (the side holding party 0 on ties).
pub fn bipartitions(parties: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if parties < 2 {
        return out;
    }
    for mask in 1usize..(1 << parties) - 1 {
        let k = mask.count_ones() as usize;
        if 2 * k < parties || (2 * k == parties && mask & 1 == 1) {
            out.push(
                (0..parties)
                    .filter(|&s| mask >> s & 1 == 1)
                    .collect::<Vec<_>>(),
            );
        }
    }
    out.sort_by(|a, b| (a.len(), a).cmp(&(b.len(), b)));
    out
}

pub fn negativity_of(
    state: &Mat<c64>,
    dims: &[usize],
    bipartition: &[usize],
) -> Result<NegativityReport, OracleError> {
    let dim: usize = dims.iter().product();
    if state.nrows() != dim || state.ncols() != dim {
        return Err(OracleError::InvalidState(format!(
            "state is not {dim}x{dim}"
        )));
    }
    if hermiticity_error(state) > 1e-12 || (trace(state).re - 1.0).abs() > 1e-12 {
        return Err(OracleError::InvalidState(
            "state must be Hermitian with unit trace".into(),
        ));
    }
    if herm_eigvals(state)[0] < -1e-12 {
        return Err(OracleError::InvalidState(
            "state is not positive semidefinite".into(),
        ));
    }
    let mut flip = vec![false; dims.len()];
    for &s in bipartition {
        if s >= dims.len() {
            return Err(OracleError::InvalidState(format!("party {s} out of range")));
        }
        flip[s] = true;
    }
    let eigenvalues = herm_eigvals(&partial_transpose(state, dims, &flip));
    let value = eigenvalues.iter().filter(|&&l| l < 0.0).map(|l| -l).sum();
    let mut bp = bipartition.to_vec();
    bp.sort_unstable();
    Ok(NegativityReport {
        bipartition: bp,
        value,
        eigenvalues,
    })
}

/// Minimum bipartite negativity of a pure state over all bipartitions.
pub fn genuine_negativity_pure(psi: &[c64], dims: &[usize]) -> Result<f64, OracleError> {
    let norm: f64 = psi.iter().map(|x| x.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(OracleError::InvalidState(format!(
            "vector has squared norm {norm}"
        )));
    }
    let rho = outer(psi);
    let mut best = f64::INFINITY;
    for m in bipartitions(dims.len()) {
        best = best.min(negativity_of(&rho, dims, &m)?.value);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ket(entries: &[(usize, f64)], dim: usize) -> Vec<c64> {
        let mut v = vec![c64::new(0.0, 0.0); dim];
        for &(i, a) in entries {
            v[i] = c64::new(a, 0.0);
        }
        let n = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        v.iter().map(|x| x / n).collect()
    }

    #[test]
    fn bell_and_qutrit_negativities() {
        let bell = outer(&ket(&[(0, 1.0), (3, 1.0)], 4));
        assert!((negativity_of(&bell, &[2, 2], &[0]).unwrap().value - 0.5).abs() < 1e-12);
        let psi = outer(&ket(&[(0, 1.0), (4, 1.0), (8, 1.0)], 9));
        let r = negativity_of(&psi, &[3, 3], &[0]).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        assert_eq!(r.eigenvalues.iter().filter(|&&l| l < -1e-9).count(), 3);
        let prod = outer(&ket(&[(1, 1.0)], 4));
        assert!(negativity_of(&prod, &[2, 2], &[0]).unwrap().value.abs() < 1e-12);
    }

    #[test]
    fn genuine_negativity_of_ghz_and_w() {
        let ghz = ket(&[(0, 1.0), (7, 1.0)], 8);
        assert!((genuine_negativity_pure(&ghz, &[2, 2, 2]).unwrap() - 0.5).abs() < 1e-12);
        let w = ket(&[(1, 1.0), (2, 1.0), (4, 1.0)], 8);
        assert!(
            (genuine_negativity_pure(&w, &[2, 2, 2]).unwrap() - 2f64.sqrt() / 3.0).abs() < 1e-12
        );
        let zero = ket(&[(0, 1.0)], 8);
        assert!(genuine_negativity_pure(&zero, &[2, 2, 2]).unwrap().abs() < 1e-12);
        assert!(genuine_negativity_pure(&[c64::new(2.0, 0.0); 8], &[2, 2, 2]).is_err());
    }

    #[test]
    fn tripartite_bipartitions() {
        assert_eq!(bipartitions(3), vec![vec![0], vec![1], vec![2]]);
        assert_eq!(bipartitions(4).len(), 7);
        assert_eq!(bipartitions(2), vec![vec![0]]);
    }
}
