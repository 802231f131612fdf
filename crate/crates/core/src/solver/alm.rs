//! Augmented Lagrangian method for `min c.x  s.t.  S(x) = G + H x >= 0`,
//! with a semismooth Newton-CG inner solver.
//!
//! For a multiplier `Y >= 0` and penalty `s`, the inner problem minimises
//! `c.x + (|P(Y - s S(x))|^2 - |Y|^2) / 2s`, where `P` projects onto the PSD
//! cone. Its gradient is `c - H^T P(Y - s S(x))`, so every iterate
//! `Y+ = P(Y - s S(x))` is a PSD dual matrix whose residual is the gradient.

use super::ipm::{dot, RawSolution};
use super::presolve::Cone;
use super::{SolverConfig, Status};
use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMat};
use faer::{Mat, Side};
use std::collections::HashMap;
use std::time::Instant;

/// Eigendecomposition of `W = Y - s S(x)` for one block.
struct Spectral {
    q: Mat<f64>,
    lambda: Vec<f64>,
}

impl Spectral {
    fn new(w: &Mat<f64>) -> Option<Self> {
        let n = w.nrows();
        if n == 0 {
            return Some(Spectral {
                q: Mat::zeros(0, 0),
                lambda: Vec::new(),
            });
        }
        let e = w.self_adjoint_eigen(Side::Lower).ok()?;
        let lambda: Vec<f64> = (0..n).map(|i| e.S().column_vector()[i]).collect();
        Some(Spectral {
            q: e.U().to_owned(),
            lambda,
        })
    }

    fn positive_part(&self) -> Mat<f64> {
        let n = self.lambda.len();
        let keep: Vec<usize> = (0..n).filter(|&k| self.lambda[k] > 0.0).collect();
        let v = Mat::from_fn(n, keep.len(), |i, c| {
            self.q[(i, keep[c])] * self.lambda[keep[c]].sqrt()
        });
        &v * v.transpose()
    }

    /// Approximate diagonal of the Jacobian in the basis of matrix units:
    /// `(Q o Q) Omega (Q o Q)^T`.
    fn jacobian_diagonal(&self) -> Mat<f64> {
        let n = self.lambda.len();
        let l = &self.lambda;
        let pos: Vec<usize> = (0..n).filter(|&k| l[k] > 0.0).collect();
        let neg: Vec<usize> = (0..n).filter(|&k| l[k] <= 0.0).collect();
        let rp = Mat::from_fn(n, pos.len(), |i, c| self.q[(i, pos[c])].powi(2));
        let rn = Mat::from_fn(n, neg.len(), |i, c| self.q[(i, neg[c])].powi(2));
        let nu = Mat::from_fn(pos.len(), neg.len(), |a, b| {
            l[pos[a]] / (l[pos[a]] - l[neg[b]])
        });
        let s: Vec<f64> = (0..n)
            .map(|i| (0..pos.len()).map(|c| rp[(i, c)]).sum())
            .collect();
        let mixed = &(&rp * &nu) * rn.transpose();
        Mat::from_fn(n, n, |i, j| s[i] * s[j] + mixed[(i, j)] + mixed[(j, i)])
    }

    /// Generalised Jacobian of the projection at `W`, applied to symmetric `D`.
    fn jacobian(&self, d: &Mat<f64>) -> Mat<f64> {
        let n = self.lambda.len();
        let pos: Vec<usize> = (0..n).filter(|&k| self.lambda[k] > 0.0).collect();
        let neg: Vec<usize> = (0..n).filter(|&k| self.lambda[k] <= 0.0).collect();
        if pos.is_empty() {
            return Mat::zeros(n, n);
        }
        if neg.is_empty() {
            return d.clone();
        }
        let l = &self.lambda;
        if pos.len() <= neg.len() {
            self.low_rank(d, &pos, &neg, |i, j| l[i] / (l[i] - l[j]))
        } else {
            let rest = self.low_rank(d, &neg, &pos, |i, j| -l[i] / (l[j] - l[i]));
            d - &rest
        }
    }

    /// `Q (Omega o Q^T D Q) Q^T` for `Omega` equal to one on `k x k`, `w` on
    /// `k x b` (and its transpose), zero on `b x b`.
    fn low_rank(
        &self,
        d: &Mat<f64>,
        k: &[usize],
        b: &[usize],
        w: impl Fn(usize, usize) -> f64,
    ) -> Mat<f64> {
        let n = self.lambda.len();
        let qk = Mat::from_fn(n, k.len(), |i, c| self.q[(i, k[c])]);
        let qb = Mat::from_fn(n, b.len(), |i, c| self.q[(i, b[c])]);
        let u = qk.transpose() * d;
        let tkk = &u * &qk;
        let mut tkb = &u * &qb;
        for c in 0..b.len() {
            for r in 0..k.len() {
                tkb[(r, c)] *= w(k[r], b[c]);
            }
        }
        let inner = &(&tkk * qk.transpose()) * 0.5 + &tkb * qb.transpose();
        let a = &qk * &inner;
        &a + a.transpose()
    }
}

/// `sum_cells a_cell h_i h_j` with a fixed sparsity pattern, refactored with
/// new cell weights at every Newton step.
struct WeightedGram {
    m: usize,
    symbolic: SymbolicSparseColMat<usize>,
    llt: SymbolicLlt<usize>,
    diag: Vec<usize>,
    /// (block, row, col, slot, coefficient)
    contrib: Vec<(u32, u32, u32, usize, f64)>,
}

impl WeightedGram {
    fn new(cone: &Cone) -> Option<Self> {
        let m = cone.m();
        let mut cells: HashMap<(u32, u32, u32), Vec<(usize, f64)>> = HashMap::new();
        for (b, blk) in cone.blocks.iter().enumerate() {
            for (j, ent) in &blk.vars {
                for &(p, q, h) in ent {
                    cells.entry((b as u32, p, q)).or_default().push((*j, h));
                }
            }
        }
        let mut keys: Vec<(usize, usize)> = (0..m).map(|i| (i, i)).collect();
        for list in cells.values() {
            for &(i, _) in list {
                for &(j, _) in list {
                    if i > j {
                        keys.push((j, i));
                    }
                }
            }
        }
        keys.sort_unstable();
        keys.dedup();
        let slot: HashMap<(usize, usize), usize> =
            keys.iter().enumerate().map(|(k, &c)| (c, k)).collect();
        let mut col_ptr = vec![0usize; m + 1];
        for &(c, _) in &keys {
            col_ptr[c + 1] += 1;
        }
        for c in 0..m {
            col_ptr[c + 1] += col_ptr[c];
        }
        let row_idx: Vec<usize> = keys.iter().map(|&(_, r)| r).collect();
        let diag = (0..m).map(|i| slot[&(i, i)]).collect();
        let mut contrib = Vec::new();
        let mut sorted: Vec<_> = cells.into_iter().collect();
        sorted.sort_unstable_by_key(|(k, _)| *k);
        for ((b, p, q), list) in sorted {
            let w = if p == q { 1.0 } else { 2.0 };
            for &(i, hi) in &list {
                for &(j, hj) in &list {
                    if i >= j {
                        contrib.push((b, p, q, slot[&(j, i)], w * hi * hj));
                    }
                }
            }
        }
        let symbolic = SymbolicSparseColMat::new_checked(m, m, col_ptr, None, row_idx);
        let llt = SymbolicLlt::try_new(symbolic.as_ref(), Side::Lower).ok()?;
        Some(WeightedGram {
            m,
            symbolic,
            llt,
            diag,
            contrib,
        })
    }

    /// Factor of `sum a_b[p, q] h_i h_j + shift I`; `None` weights mean one.
    fn factor(&self, a: Option<&[Mat<f64>]>, shift: f64) -> Option<Llt<usize, f64>> {
        let mut val = vec![0.0; self.symbolic.row_idx().len()];
        for &(b, p, q, k, coef) in &self.contrib {
            let w = a
                .map(|a| a[b as usize][(p as usize, q as usize)])
                .unwrap_or(1.0);
            val[k] += w * coef;
        }
        let scale = self
            .diag
            .iter()
            .map(|&k| val[k])
            .fold(0.0f64, f64::max)
            .max(1.0);
        for &k in &self.diag {
            val[k] += shift + 1e-12 * scale;
        }
        let mat = SparseColMatRef::new(self.symbolic.as_ref(), &val);
        Llt::try_new_with_symbolic(self.llt.clone(), mat, Side::Lower).ok()
    }

    fn solve(&self, f: &Llt<usize, f64>, r: &[f64]) -> Vec<f64> {
        let z = f.solve(Mat::from_fn(self.m, 1, |i, _| r[i]));
        (0..self.m).map(|i| z[(i, 0)]).collect()
    }
}

struct State {
    spec: Vec<Spectral>,
    p: Vec<Mat<f64>>,
    phi: f64,
    grad: Vec<f64>,
}

fn fro2(a: &Mat<f64>) -> f64 {
    dot(a, a)
}

fn evaluate(cone: &Cone, x: &[f64], y: &[Mat<f64>], sigma: f64) -> Option<State> {
    let mut spec = Vec::with_capacity(y.len());
    let mut p = Vec::with_capacity(y.len());
    let mut phi: f64 = cone.c.iter().zip(x).map(|(a, b)| a * b).sum();
    for (b, blk) in cone.blocks.iter().enumerate() {
        let w = &y[b] - &(&blk.eval(x, true) * sigma);
        let sp = Spectral::new(&w)?;
        let pb = sp.positive_part();
        phi += (fro2(&pb) - fro2(&y[b])) / (2.0 * sigma);
        spec.push(sp);
        p.push(pb);
    }
    let hp = cone.adjoint(&p);
    let grad = cone.c.iter().zip(&hp).map(|(c, h)| c - h).collect();
    Some(State { spec, p, phi, grad })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

pub(super) fn solve_alm(cone: &Cone, cfg: &SolverConfig) -> RawSolution {
    let m = cone.m();
    let nb = cone.blocks.len();
    let zeros = || {
        cone.blocks
            .iter()
            .map(|b| Mat::<f64>::zeros(b.n, b.n))
            .collect::<Vec<_>>()
    };
    let fail = |x: Vec<f64>, y: Vec<Mat<f64>>, it| RawSolution {
        status: Status::NumericalLimit,
        x,
        y,
        iterations: it,
    };
    let Some(gram) = WeightedGram::new(cone) else {
        return fail(vec![0.0; m], zeros(), 0);
    };
    let gnorm = cone.blocks.iter().map(|b| fro2(&b.g)).sum::<f64>().sqrt();
    let cnorm = norm(&cone.c);
    let tol = cfg.alm_tol;

    let mut x = vec![0.0; m];
    let mut y = zeros();
    let mut sigma = 1.0;
    let mut status = Status::NumericalLimit;
    let mut newton_steps = 0usize;
    let mut cg_total = 0usize;
    let mut pinf_prev = f64::INFINITY;
    let mut outer = 0;
    let start = cfg.time_limit.map(|_| Instant::now());
    let out_of_time =
        || matches!((start, cfg.time_limit), (Some(t0), Some(l)) if t0.elapsed().as_secs_f64() > l);
    while outer < cfg.max_iterations && !out_of_time() {
        outer += 1;
        let Some(mut st) = evaluate(cone, &x, &y, sigma) else {
            return fail(x, y, outer);
        };
        // inner semismooth Newton
        let inner_tol = |pinf: f64| (0.1 * pinf).max(0.2 * tol) * (1.0 + cnorm);
        for _ in 0..50 {
            let gn = norm(&st.grad);
            if gn <= inner_tol(pinf_prev.min(1.0)) || out_of_time() {
                break;
            }
            newton_steps += 1;
            let tau = sigma * gn.min(1e-3) * 1e-2;
            let apply = |d: &[f64]| -> Vec<f64> {
                let mut out: Vec<f64> = d.iter().map(|v| tau * v).collect();
                let mut acc = vec![0.0; m];
                for (b, blk) in cone.blocks.iter().enumerate() {
                    let hd = blk.eval(d, false);
                    let jd = st.spec[b].jacobian(&hd);
                    blk.adjoint_into(&jd, &mut acc);
                }
                for (o, a) in out.iter_mut().zip(&acc) {
                    *o += sigma * a;
                }
                out
            };
            let weights: Vec<Mat<f64>> = st
                .spec
                .iter()
                .map(|sp| &sp.jacobian_diagonal() * sigma)
                .collect();
            let Some(pf) = gram.factor(Some(&weights), tau) else {
                break;
            };
            let precond = |r: &[f64]| gram.solve(&pf, r);
            // preconditioned CG on (s H^T J H + tau) d = -grad
            let rhs: Vec<f64> = st.grad.iter().map(|g| -g).collect();
            let cg_tol = (0.1f64).min(gn.sqrt()) * gn;
            let mut d = vec![0.0; m];
            let mut r = rhs.clone();
            let mut z = precond(&r);
            let mut pdir = z.clone();
            let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
            for _ in 0..cfg.cg_iterations {
                cg_total += 1;
                let ap = apply(&pdir);
                let pap: f64 = pdir.iter().zip(&ap).map(|(a, b)| a * b).sum();
                if !(pap > 0.0) {
                    break;
                }
                let alpha = rz / pap;
                for i in 0..m {
                    d[i] += alpha * pdir[i];
                    r[i] -= alpha * ap[i];
                }
                if norm(&r) <= cg_tol {
                    break;
                }
                z = precond(&r);
                let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
                let beta = rz_new / rz;
                rz = rz_new;
                for i in 0..m {
                    pdir[i] = z[i] + beta * pdir[i];
                }
            }
            // Armijo backtracking on the inner objective
            let slope: f64 = st.grad.iter().zip(&d).map(|(g, v)| g * v).sum();
            if !(slope < 0.0) {
                break;
            }
            let mut step = 1.0;
            let mut accepted = None;
            for _ in 0..30 {
                let xt: Vec<f64> = x.iter().zip(&d).map(|(a, v)| a + step * v).collect();
                if let Some(tr) = evaluate(cone, &xt, &y, sigma) {
                    if tr.phi <= st.phi + 1e-4 * step * slope {
                        accepted = Some((xt, tr));
                        break;
                    }
                }
                step *= 0.5;
            }
            let Some((xt, tr)) = accepted else { break };
            x = xt;
            st = tr;
        }

        // multiplier update and residuals
        let dinf = norm(&st.grad) / (1.0 + cnorm);
        let mut pinf2 = 0.0;
        for blk in &cone.blocks {
            let s = blk.eval(&x, true);
            if s.nrows() == 0 {
                continue;
            }
            let ev = s
                .self_adjoint_eigenvalues(Side::Lower)
                .map(|v| v.iter().map(|l| l.min(0.0).powi(2)).sum::<f64>());
            pinf2 += ev.unwrap_or(f64::INFINITY);
        }
        let pinf = pinf2.sqrt() / (1.0 + gnorm);
        y = st.p;
        let pobj: f64 = cone.c.iter().zip(&x).map(|(a, b)| a * b).sum();
        let dobj: f64 = -(0..nb).map(|b| dot(&cone.blocks[b].g, &y[b])).sum::<f64>();
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        if cfg.verbosity >= 2 {
            eprintln!(
                "alm {outer:3}  p {:+.10e}  d {:+.10e}  gap {gap:.2e}  pinf {pinf:.2e}  dinf {dinf:.2e}  sigma {sigma:.1e}  newton {newton_steps}  cg {cg_total}",
                pobj + cone.c0,
                dobj + cone.c0
            );
        }
        if pinf <= tol && dinf <= tol && gap <= tol {
            status = Status::Optimal;
            break;
        }
        let ynorm = y.iter().map(fro2).sum::<f64>().sqrt();
        if dobj > 0.0 && ynorm > 1e8 * (1.0 + cnorm) && dobj > 1e8 * (1.0 + pobj.abs()) {
            // the dual objective grows without bound along a PSD ray
            status = Status::PrimalInfeasible;
            break;
        }
        if pinf > 0.25 * pinf_prev || pinf > 10.0 * dinf {
            sigma = (sigma * 3.0).min(1e8);
        } else if dinf > 10.0 * pinf {
            sigma = (sigma / 3.0).max(1e-4);
        }
        pinf_prev = pinf;
    }
    if cfg.verbosity >= 1 {
        eprintln!("alm stopped after {outer} outer iterations, {newton_steps} Newton steps, {cg_total} CG steps: {status}");
    }
    RawSolution {
        status,
        x,
        y,
        iterations: outer,
    }
}
