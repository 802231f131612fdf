//! Conic backend for [`SdpProblem`]: presolve, interior-point and ADMM
//! solvers, certificate verification and SDPA export.

mod alm;
mod ipm;
mod presolve;
mod sdpa;
mod verify;

pub use sdpa::export_sdpa;
pub use verify::{verify, Violation, ViolationKind};

use crate::programs::{SdpProblem, Sense};
use faer::Mat;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("malformed problem: {0}")]
    Malformed(String),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    NumericalLimit,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Optimal => "optimal",
            Status::PrimalInfeasible => "infeasible",
            Status::DualInfeasible => "unbounded",
            Status::NumericalLimit => "numerical_limit",
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Backend {
    /// Interior point up to `ipm_limit` reduced variables, augmented
    /// Lagrangian beyond.
    Auto,
    Ipm,
    Alm,
}

impl std::str::FromStr for Backend {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "auto" => Ok(Backend::Auto),
            "ipm" => Ok(Backend::Ipm),
            "alm" => Ok(Backend::Alm),
            other => Err(format!("unknown backend '{other}' (auto, ipm, alm)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub feas_tol: f64,
    pub gap_tol: f64,
    pub max_iterations: usize,
    pub verbosity: u8,
    pub backend: Backend,
    /// Largest reduced variable count sent to the interior-point method
    /// under [`Backend::Auto`].
    pub ipm_limit: usize,
    /// Iteration cap per conjugate-gradient solve in the augmented Lagrangian.
    pub cg_iterations: usize,
    /// Residual and gap target for the augmented Lagrangian.
    pub alm_tol: f64,
    /// Wall-clock budget in seconds; exceeding it ends with
    /// [`Status::NumericalLimit`].
    pub time_limit: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            feas_tol: 1e-9,
            gap_tol: 1e-8,
            max_iterations: 120,
            verbosity: 0,
            backend: Backend::Auto,
            ipm_limit: 6000,
            cg_iterations: 500,
            alm_tol: 1e-7,
            time_limit: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let ok = |t: f64| t.is_finite() && t > 0.0;
        if !ok(self.feas_tol) || !ok(self.gap_tol) || !ok(self.alm_tol) {
            return Err(SolverError::InvalidConfig(
                "tolerances must be positive and finite".into(),
            ));
        }
        if matches!(self.time_limit, Some(t) if !(t > 0.0)) {
            return Err(SolverError::InvalidConfig(
                "time limit must be positive".into(),
            ));
        }
        if self.max_iterations == 0 {
            return Err(SolverError::InvalidConfig(
                "iteration cap must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub status: Status,
    pub x: Vec<f64>,
    /// Dual matrix per PSD block.
    pub dual_blocks: Vec<Mat<f64>>,
    /// Multiplier per equality row.
    pub equality_duals: Vec<f64>,
    /// Objective at `x`, in the problem's own sense.
    pub primal_objective: f64,
    /// Dual bound, in the problem's own sense.
    pub dual_objective: f64,
    /// `|p - d| / (1 + |p| + |d|)`.
    pub gap: f64,
    /// Worst of the equality residual and the most negative block eigenvalue.
    pub primal_residual: f64,
    /// Worst of the dual-equation residual and the most negative dual eigenvalue.
    pub dual_residual: f64,
    pub iterations: usize,
    pub backend: Backend,
    pub message: String,
}

impl Solution {
    /// Objective value when optimal.
    pub fn value(&self) -> Option<f64> {
        (self.status == Status::Optimal).then_some(self.primal_objective)
    }
}

pub fn solve(problem: &SdpProblem, config: &SolverConfig) -> Result<Solution, SolverError> {
    config.validate()?;
    problem.validate().map_err(SolverError::Malformed)?;
    let sign = if problem.sense == Sense::Maximize {
        -1.0
    } else {
        1.0
    };
    let zero_duals = || {
        problem
            .blocks
            .iter()
            .map(|b| Mat::zeros(b.size, b.size))
            .collect::<Vec<_>>()
    };
    let pre = match presolve::presolve(problem, config.feas_tol) {
        Ok(p) => p,
        Err(out) => {
            let (status, message) = match out {
                presolve::PresolveOutcome::PrimalInfeasible(m) => (Status::PrimalInfeasible, m),
                presolve::PresolveOutcome::DualInfeasible(m) => (Status::DualInfeasible, m),
            };
            let nan = f64::NAN;
            return Ok(Solution {
                status,
                x: vec![0.0; problem.num_variables()],
                dual_blocks: zero_duals(),
                equality_duals: vec![0.0; problem.equalities.len()],
                primal_objective: nan,
                dual_objective: nan,
                gap: nan,
                primal_residual: nan,
                dual_residual: nan,
                iterations: 0,
                backend: config.backend,
                message,
            });
        }
    };
    let backend = match config.backend {
        Backend::Auto if pre.cone.m() > config.ipm_limit => Backend::Alm,
        Backend::Auto => Backend::Ipm,
        b => b,
    };
    if config.verbosity >= 1 {
        let sizes: Vec<usize> = pre.cone.blocks.iter().map(|b| b.n).collect();
        eprintln!(
            "presolve: {} -> {} variables, blocks {sizes:?}, backend {backend:?}",
            problem.num_variables(),
            pre.cone.m()
        );
    }
    let raw = if pre.cone.m() == 0 {
        trivial(&pre.cone, config)
    } else if backend == Backend::Alm {
        alm::solve_alm(&pre.cone, config)
    } else {
        ipm::solve_ipm(&pre.cone, config)
    };
    let x = pre.recover_primal(&raw.x);
    let (c, c0) = presolve::min_objective(problem);
    let hty = verify::adjoint_full(problem, &raw.y);
    let residual: Vec<f64> = c.iter().zip(&hty).map(|(a, b)| a - b).collect();
    let w = pre.recover_equality_duals(residual);
    let cert = verify::certificate(problem, &x, &raw.y, &w);
    let dual_min = cert.dual_min_form + c0;
    let p = problem.objective_value(&x);
    let d = sign * dual_min;
    let gap = (p - d).abs() / (1.0 + p.abs() + d.abs());
    let mut status = raw.status;
    let mut message = String::new();
    let (gap_tol, feas_tol) = match backend {
        Backend::Alm => (config.alm_tol, config.alm_tol),
        _ => (config.gap_tol, config.feas_tol),
    };
    if status == Status::Optimal && (gap > gap_tol || cert.primal > 10.0 * feas_tol) {
        message = format!(
            "certificate outside tolerance after recovery (gap {gap:.2e}, primal {:.2e})",
            cert.primal
        );
        status = Status::NumericalLimit;
    }
    Ok(Solution {
        status,
        x,
        dual_blocks: raw.y,
        equality_duals: w,
        primal_objective: p,
        dual_objective: d,
        gap,
        primal_residual: cert.primal,
        dual_residual: cert.dual,
        iterations: raw.iterations,
        backend,
        message,
    })
}

/// Every variable was fixed by presolve: only constant blocks remain.
fn trivial(cone: &presolve::Cone, config: &SolverConfig) -> ipm::RawSolution {
    let mut status = Status::Optimal;
    let mut y = Vec::new();
    for b in &cone.blocks {
        let min = if b.n == 0 {
            0.0
        } else {
            b.g.self_adjoint_eigenvalues(faer::Side::Lower)
                .map(|v| v[0])
                .unwrap_or(f64::NAN)
        };
        if !(min >= -config.feas_tol) {
            status = Status::PrimalInfeasible;
        }
        y.push(Mat::zeros(b.n, b.n));
    }
    ipm::RawSolution {
        status,
        x: Vec::new(),
        y,
        iterations: 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::programs::{PsdBlock, SymSparse};

    pub(crate) fn boundary_problem() -> SdpProblem {
        let mut p = SdpProblem::new(Sense::Minimize, "2x2 boundary");
        let t = p.add_variable("t");
        p.blocks.push(PsdBlock {
            label: "X".into(),
            size: 2,
            constant: SymSparse::from_triangle([(0, 1, 1.0)]),
            coefficients: vec![(t, SymSparse::from_triangle([(0, 0, 1.0), (1, 1, 1.0)]))],
        });
        p.objective = vec![(t, 1.0)];
        p
    }

    #[test]
    fn boundary_problem_is_one() {
        let s = solve(&boundary_problem(), &SolverConfig::default()).unwrap();
        assert_eq!(s.status, Status::Optimal, "{s:?}");
        assert!(
            (s.primal_objective - 1.0).abs() < 1e-8,
            "{}",
            s.primal_objective
        );
        assert!(s.gap < 1e-8);
    }

    #[test]
    fn contradictory_equality_is_infeasible() {
        let mut p = boundary_problem();
        p.add_equality("zero", vec![(0, 1.0), (0, -1.0)], 1.0);
        let s = solve(&p, &SolverConfig::default()).unwrap();
        assert_eq!(s.status, Status::PrimalInfeasible);
    }

    #[test]
    fn unbounded_direction_detected() {
        let mut p = boundary_problem();
        p.sense = Sense::Maximize;
        let s = solve(&p, &SolverConfig::default()).unwrap();
        assert_eq!(s.status, Status::DualInfeasible, "{s:?}");
    }

    #[test]
    fn conic_infeasibility_detected() {
        // [[t, 1], [1, -t - 1]] >= 0 has no solution
        let mut p = SdpProblem::new(Sense::Minimize, "infeasible");
        let t = p.add_variable("t");
        p.blocks.push(PsdBlock {
            label: "X".into(),
            size: 2,
            constant: SymSparse::from_triangle([(0, 1, 1.0), (1, 1, -1.0)]),
            coefficients: vec![(t, SymSparse::from_triangle([(0, 0, 1.0), (1, 1, -1.0)]))],
        });
        p.objective = vec![(t, 1.0)];
        let s = solve(&p, &SolverConfig::default()).unwrap();
        assert_eq!(s.status, Status::PrimalInfeasible, "{s:?}");
    }

    #[test]
    fn asymmetric_problem_rejected() {
        let mut p = boundary_problem();
        p.blocks[0].constant = SymSparse {
            entries: vec![(0, 1, 1.0)],
        };
        assert!(matches!(
            solve(&p, &SolverConfig::default()),
            Err(SolverError::Malformed(_))
        ));
    }
}
