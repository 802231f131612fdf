use super::ipm::dot;
use super::presolve::min_objective;
use super::{Solution, Status};
use crate::programs::{PsdBlock, SdpProblem, Sense};
use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViolationKind {
    NotOptimal,
    PrimalBlock,
    Equality,
    DualBlock,
    DualEquation,
    Gap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub label: String,
    pub value: f64,
}

/// `F_b(x) = constant + sum_j x_j F_bj` as a dense matrix.
pub(crate) fn block_value(b: &PsdBlock, x: &[f64]) -> Mat<f64> {
    let mut m = Mat::<f64>::zeros(b.size, b.size);
    for &(i, j, v) in &b.constant.entries {
        m[(i, j)] += v;
    }
    for (var, f) in &b.coefficients {
        let xv = x[*var];
        for &(i, j, v) in &f.entries {
            m[(i, j)] += xv * v;
        }
    }
    m
}

fn min_eig(m: &Mat<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let s = Mat::from_fn(m.nrows(), m.ncols(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
    s.self_adjoint_eigenvalues(Side::Lower)
        .map(|v| v[0])
        .unwrap_or(f64::NAN)
}

/// `(<F_bj, Y_b>)_j` summed over blocks.
pub(crate) fn adjoint_full(p: &SdpProblem, y: &[Mat<f64>]) -> Vec<f64> {
    let mut out = vec![0.0; p.num_variables()];
    for (b, yb) in p.blocks.iter().zip(y) {
        for (var, f) in &b.coefficients {
            out[*var] += f
                .entries
                .iter()
                .map(|&(i, j, v)| v * yb[(i, j)])
                .sum::<f64>();
        }
    }
    out
}

pub(crate) struct Certificate {
    pub primal: f64,
    pub dual: f64,
    /// `f.w - sum <G, Y>` of the min-form dual, without the objective constant.
    pub dual_min_form: f64,
    eq_residual: Vec<f64>,
    block_min: Vec<f64>,
    dual_min: Vec<f64>,
    dual_eq: f64,
}

pub(crate) fn certificate(p: &SdpProblem, x: &[f64], y: &[Mat<f64>], w: &[f64]) -> Certificate {
    let eq_residual: Vec<f64> = p
        .equalities
        .iter()
        .map(|r| (r.terms.iter().map(|&(j, a)| a * x[j]).sum::<f64>() - r.rhs).abs())
        .collect();
    let block_min: Vec<f64> = p
        .blocks
        .iter()
        .map(|b| min_eig(&block_value(b, x)))
        .collect();
    let dual_min: Vec<f64> = y.iter().map(min_eig).collect();
    let (c, _) = min_objective(p);
    let mut r = c;
    for (row, wr) in p.equalities.iter().zip(w) {
        for &(j, a) in &row.terms {
            r[j] -= a * wr;
        }
    }
    for (j, v) in adjoint_full(p, y).into_iter().enumerate() {
        r[j] -= v;
    }
    let dual_eq = r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut dual_min_form: f64 = p
        .equalities
        .iter()
        .zip(w)
        .map(|(row, wr)| row.rhs * wr)
        .sum();
    for (b, yb) in p.blocks.iter().zip(y) {
        let g = block_value(b, &vec![0.0; p.num_variables()]);
        dual_min_form -= dot(&g, yb);
    }
    let primal = eq_residual
        .iter()
        .copied()
        .chain(block_min.iter().map(|&l| (-l).max(0.0)))
        .fold(0.0f64, f64::max);
    let dual = dual_min
        .iter()
        .map(|&l| (-l).max(0.0))
        .fold(dual_eq, f64::max);
    Certificate {
        primal,
        dual,
        dual_min_form,
        eq_residual,
        block_min,
        dual_min,
        dual_eq,
    }
}

/// Recomputes feasibility and the duality gap of a claimed optimum from the
/// problem data alone; an empty list means the certificate holds at `tol`.
pub fn verify(problem: &SdpProblem, solution: &Solution, tol: f64) -> Vec<Violation> {
    let mut out = Vec::new();
    if solution.status != Status::Optimal {
        out.push(Violation {
            kind: ViolationKind::NotOptimal,
            label: solution.status.to_string(),
            value: f64::NAN,
        });
        return out;
    }
    let push = |out: &mut Vec<Violation>, kind, label: &str, value: f64| {
        if !(value <= tol) {
            out.push(Violation {
                kind,
                label: label.to_string(),
                value,
            });
        }
    };
    let x = &solution.x;
    if x.len() != problem.num_variables()
        || solution.dual_blocks.len() != problem.blocks.len()
        || solution.equality_duals.len() != problem.equalities.len()
    {
        out.push(Violation {
            kind: ViolationKind::NotOptimal,
            label: "shape mismatch".into(),
            value: f64::NAN,
        });
        return out;
    }
    let cert = certificate(problem, x, &solution.dual_blocks, &solution.equality_duals);
    for (b, &l) in problem.blocks.iter().zip(&cert.block_min) {
        push(&mut out, ViolationKind::PrimalBlock, &b.label, -l);
    }
    for (r, &e) in problem.equalities.iter().zip(&cert.eq_residual) {
        push(&mut out, ViolationKind::Equality, &r.label, e);
    }
    for (b, &l) in problem.blocks.iter().zip(&cert.dual_min) {
        push(&mut out, ViolationKind::DualBlock, &b.label, -l);
    }
    push(
        &mut out,
        ViolationKind::DualEquation,
        "c = E^T w + F^T Y",
        cert.dual_eq,
    );
    let (_, c0) = min_objective(problem);
    let sign = if problem.sense == Sense::Maximize {
        -1.0
    } else {
        1.0
    };
    let p = problem.objective_value(x);
    let d = sign * (cert.dual_min_form + c0);
    push(
        &mut out,
        ViolationKind::Gap,
        "relative duality gap",
        (p - d).abs() / (1.0 + p.abs() + d.abs()),
    );
    out
}
