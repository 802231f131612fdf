//! Explicit quantum models used as ground truth for the relaxations.

pub mod linalg;
mod model;
mod negativity;
mod seesaw;

pub use model::{random_measurement, QuantumModel};
pub use negativity::{bipartitions, genuine_negativity_pure, negativity_of, NegativityReport};
pub use seesaw::{seesaw, SeesawConfig, SeesawResult};

use crate::algebra::{MonomialBasis, OperatorWord};
use crate::moment::{build_template, CellValue, MomentTemplate};
use crate::scenario::{Behavior, Scenario};
use faer::{c64, Mat};
use linalg::{identity, kron_all, trace_product};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("scenario mismatch: {0}")]
    Mismatch(String),
}

/// Local operator for a Collins–Gisin local index (identity at 0).
fn local_op(model: &QuantumModel, scenario: &Scenario, party: usize, index: usize) -> Mat<c64> {
    match scenario.local_decode(party, index) {
        None => identity(model.dims[party]),
        Some((x, a)) => model.measurements[party][x][a].clone(),
    }
}

/// Operator of a word: product of its projectors in letter order.
fn word_op(model: &QuantumModel, w: &OperatorWord) -> Mat<c64> {
    let d = model.dims[w.party];
    if w.is_zero() {
        return linalg::zeros(d, d);
    }
    let mut op = identity(d);
    for &(x, a) in w.letters() {
        op = &op * &model.measurements[w.party][x][a];
    }
    op
}

pub fn behavior_of(model: &QuantumModel) -> Result<Behavior, OracleError> {
    model.validate()?;
    let sc = model.scenario()?;
    let n = sc.parties();
    let locals: Vec<Vec<Mat<c64>>> = (0..n)
        .map(|s| {
            (0..sc.local_size(s))
                .map(|l| local_op(model, &sc, s, l))
                .collect()
        })
        .collect();
    let coords = (0..sc.cg_len())
        .map(|i| {
            let loc = sc.cg_decode(i);
            let ops: Vec<&Mat<c64>> = (0..n).map(|s| &locals[s][loc[s]]).collect();
            trace_product(&model.state, &kron_all(&ops)).re
        })
        .collect();
    Behavior::new(sc, coords).map_err(|e| OracleError::Mismatch(e.to_string()))
}

/// Moment matrix computed directly from the model, with the largest
/// deviation from the template's Fixed and Zero cells.
#[derive(Debug, Clone)]
pub struct MomentCheck {
    pub matrix: Mat<c64>,
    pub fixed_deviation: f64,
}

pub fn moment_matrix_of(
    model: &QuantumModel,
    basis: &MonomialBasis,
) -> Result<MomentCheck, OracleError> {
    model.validate()?;
    let sc = model.scenario()?;
    if sc != basis.scenario {
        return Err(OracleError::Mismatch(
            "basis belongs to another scenario".into(),
        ));
    }
    let n = sc.parties();
    let dim = model.total_dim();
    let ops: Vec<Vec<Mat<c64>>> = (0..n)
        .map(|s| basis.words[s].iter().map(|w| word_op(model, w)).collect())
        .collect();

    // rho = U diag(l) U^dagger, X_r = K_r U sqrt(l); chi_rc = tr(X_c^dagger X_r)
    let (vals, u) = linalg::herm_eig(&model.state);
    let half = Mat::from_fn(dim, dim, |i, j| u[(i, j)] * vals[j].max(0.0).sqrt());
    let dims = basis.sizes();
    let side = basis.side();
    let mut w = Mat::<c64>::zeros(dim * dim, side);
    let mut idx = vec![0usize; n];
    for r in 0..side {
        let mut rem = r;
        for s in (0..n).rev() {
            idx[s] = rem % dims[s];
            rem /= dims[s];
        }
        let k: Vec<&Mat<c64>> = (0..n).map(|s| &ops[s][idx[s]]).collect();
        let x = &kron_all(&k) * &half;
        for j in 0..dim {
            for i in 0..dim {
                w[(j * dim + i, r)] = x[(i, j)];
            }
        }
    }
    let mut matrix = w.adjoint() * &w;
    // Gram form gives chi^T ordering: chi_rc = sum conj(X_c) X_r = (W^dagger W)_{c r}
    matrix = matrix.transpose().to_owned();
    linalg::hermitize(&mut matrix);

    let template = build_template(&sc, basis).map_err(|e| OracleError::Mismatch(e.to_string()))?;
    let behavior = behavior_of(model)?;
    let mut dev: f64 = 0.0;
    for r in 0..side {
        for c in 0..side {
            let expect = match template.cell(r, c) {
                CellValue::Zero => 0.0,
                CellValue::Fixed(k) => behavior.coordinates[k],
                CellValue::Open { .. } => continue,
            };
            dev = dev.max((matrix[(r, c)] - c64::new(expect, 0.0)).norm());
        }
    }
    Ok(MomentCheck {
        matrix,
        fixed_deviation: dev,
    })
}

/// Values of the template's open variables on the model.
pub fn u_of(model: &QuantumModel, template: &MomentTemplate) -> Result<Vec<c64>, OracleError> {
    model.validate()?;
    let sc = model.scenario()?;
    if &sc != template.scenario() {
        return Err(OracleError::Mismatch(
            "template belongs to another scenario".into(),
        ));
    }
    Ok((0..template.num_variables())
        .map(|v| {
            let ops: Vec<Mat<c64>> = template
                .variable_words(v)
                .iter()
                .map(|w| word_op(model, w))
                .collect();
            let refs: Vec<&Mat<c64>> = ops.iter().collect();
            trace_product(&model.state, &kron_all(&refs))
        })
        .collect())
}
