//! Equality elimination: every linear row is used to express one variable in
//! terms of the others, leaving a problem with PSD blocks only.

use crate::programs::SdpProblem;
use faer::Mat;

const DROP: f64 = 1e-13;

/// Packed upper-triangle position: block, row, column.
type Key = u64;

fn key(b: usize, i: usize, j: usize) -> Key {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    ((b as u64) << 42) | ((i as u64) << 21) | j as u64
}

fn unkey(k: Key) -> (usize, usize, usize) {
    (
        (k >> 42) as usize,
        ((k >> 21) & 0x1f_ffff) as usize,
        (k & 0x1f_ffff) as usize,
    )
}

/// `a += s * b` for sorted sparse vectors, dropping cancellations.
fn axpy<K: Ord + Copy>(a: &mut Vec<(K, f64)>, s: f64, b: &[(K, f64)]) {
    if b.is_empty() || s == 0.0 {
        return;
    }
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let take = if i == a.len() {
            std::cmp::Ordering::Greater
        } else if j == b.len() {
            std::cmp::Ordering::Less
        } else {
            a[i].0.cmp(&b[j].0)
        };
        match take {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push((b[j].0, s * b[j].1));
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                let v = a[i].1 + s * b[j].1;
                let scale = a[i].1.abs().max((s * b[j].1).abs());
                if v.abs() > DROP * scale {
                    out.push((a[i].0, v));
                }
                i += 1;
                j += 1;
            }
        }
    }
    *a = out;
}

/// One PSD block of the reduced problem: `G + sum_j x_j H_j`.
#[derive(Debug, Clone)]
pub(crate) struct ConeBlock {
    pub n: usize,
    pub g: Mat<f64>,
    /// Reduced variables touching the block with their upper-triangle entries.
    pub vars: Vec<(usize, Vec<(u32, u32, f64)>)>,
}

impl ConeBlock {
    /// `G + sum x_j H_j` (or without `G`).
    pub fn eval(&self, x: &[f64], with_constant: bool) -> Mat<f64> {
        let mut s = if with_constant {
            self.g.clone()
        } else {
            Mat::zeros(self.n, self.n)
        };
        for (j, ent) in &self.vars {
            let xj = x[*j];
            if xj == 0.0 {
                continue;
            }
            for &(p, q, h) in ent {
                let (p, q) = (p as usize, q as usize);
                s[(p, q)] += xj * h;
                if p != q {
                    s[(q, p)] += xj * h;
                }
            }
        }
        s
    }

    /// Accumulates `<H_j, A>` into `out` for a symmetric (or symmetrised) `A`.
    pub fn adjoint_into(&self, a: &Mat<f64>, out: &mut [f64]) {
        for (j, ent) in &self.vars {
            out[*j] += inner(ent, a);
        }
    }
}

/// `<H, A>` for upper entries of a symmetric `H` and any square `A`.
pub(crate) fn inner(ent: &[(u32, u32, f64)], a: &Mat<f64>) -> f64 {
    let mut acc = 0.0;
    for &(p, q, h) in ent {
        let (p, q) = (p as usize, q as usize);
        acc += if p == q {
            h * a[(p, p)]
        } else {
            h * (a[(p, q)] + a[(q, p)])
        };
    }
    acc
}

/// Reduced problem `min c.x + c0  s.t.  G_b + sum x_j H_bj >= 0`.
#[derive(Debug, Clone)]
pub(crate) struct Cone {
    pub blocks: Vec<ConeBlock>,
    pub c: Vec<f64>,
    pub c0: f64,
}

impl Cone {
    pub fn m(&self) -> usize {
        self.c.len()
    }

    pub fn adjoint(&self, y: &[Mat<f64>]) -> Vec<f64> {
        let mut out = vec![0.0; self.m()];
        for (b, yb) in self.blocks.iter().zip(y) {
            b.adjoint_into(yb, &mut out);
        }
        out
    }
}

struct Pivot {
    var: usize,
    row: Vec<(usize, f64)>,
    rhs: f64,
    /// Original row index.
    index: usize,
}

/// Result of presolving, with the data needed to map solutions back.
pub(crate) struct Presolved {
    pub cone: Cone,
    /// Reduced variable -> original variable.
    pub kept: Vec<usize>,
    pivots: Vec<Pivot>,
    /// `mu[r]`: multiples of earlier pivot rows subtracted from row `r`.
    mu: Vec<Vec<(usize, f64)>>,
    nvars: usize,
    nrows: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum PresolveOutcome {
    PrimalInfeasible(String),
    DualInfeasible(String),
}

/// `min`-form objective of the problem.
pub(crate) fn min_objective(p: &SdpProblem) -> (Vec<f64>, f64) {
    let sign = match p.sense {
        crate::programs::Sense::Minimize => 1.0,
        crate::programs::Sense::Maximize => -1.0,
    };
    let c = p.objective_dense().into_iter().map(|v| sign * v).collect();
    (c, sign * p.objective_constant)
}

pub(crate) fn presolve(p: &SdpProblem, feas_tol: f64) -> Result<Presolved, PresolveOutcome> {
    let m = p.num_variables();
    let mut pattern: Vec<Vec<(Key, f64)>> = vec![Vec::new(); m];
    let mut gconst: Vec<(Key, f64)> = Vec::new();
    for (b, blk) in p.blocks.iter().enumerate() {
        for &(i, j, v) in blk.constant.entries.iter().filter(|e| e.0 <= e.1) {
            gconst.push((key(b, i, j), v));
        }
        for (var, f) in &blk.coefficients {
            for &(i, j, v) in f.entries.iter().filter(|e| e.0 <= e.1) {
                pattern[*var].push((key(b, i, j), v));
            }
        }
    }
    for pat in pattern.iter_mut().chain(std::iter::once(&mut gconst)) {
        pat.sort_by_key(|e| e.0);
        let merged = merge_sorted(std::mem::take(pat));
        *pat = merged;
    }
    let (mut c, mut c0) = min_objective(p);

    let nrows = p.equalities.len();
    let mut rows: Vec<Vec<(usize, f64)>> = p
        .equalities
        .iter()
        .map(|r| {
            let mut t = r.terms.clone();
            t.sort_by_key(|e| e.0);
            merge_sorted(t)
        })
        .collect();
    let mut rhs: Vec<f64> = p.equalities.iter().map(|r| r.rhs).collect();
    let mut col_rows: Vec<Vec<usize>> = vec![Vec::new(); m];
    for (r, row) in rows.iter().enumerate() {
        for &(j, _) in row {
            col_rows[j].push(r);
        }
    }
    let mut eliminated = vec![false; m];
    let mut pivots = Vec::new();
    let mut mu: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nrows];

    for t in 0..nrows {
        let mut row = std::mem::take(&mut rows[t]);
        let scale = row.iter().fold(0.0f64, |a, e| a.max(e.1.abs()));
        row.retain(|e| e.1.abs() > 1e-12 * scale.max(1.0) && e.1 != 0.0);
        if row.is_empty() {
            if rhs[t].abs() > feas_tol {
                let label = &p.equalities[t].label;
                return Err(PresolveOutcome::PrimalInfeasible(format!(
                    "row '{label}' reduces to 0 = {}",
                    rhs[t]
                )));
            }
            continue;
        }
        let amax = row.iter().fold(0.0f64, |a, e| a.max(e.1.abs()));
        let &(pv, ap) = row
            .iter()
            .filter(|e| e.1.abs() >= 0.5 * amax)
            .min_by_key(|e| (pattern[e.0].len(), e.0))
            .expect("nonempty row");
        let f = rhs[t];
        let ppat = std::mem::take(&mut pattern[pv]);
        for &(j, a) in &row {
            if j != pv {
                axpy(&mut pattern[j], -a / ap, &ppat);
                c[j] -= a / ap * c[pv];
            }
        }
        axpy(&mut gconst, f / ap, &ppat);
        c0 += c[pv] * f / ap;
        c[pv] = 0.0;
        eliminated[pv] = true;
        let later: Vec<usize> = std::mem::take(&mut col_rows[pv]);
        for r in later {
            if r <= t {
                continue;
            }
            let Ok(pos) = rows[r].binary_search_by_key(&pv, |e| e.0) else {
                continue;
            };
            let b = rows[r][pos].1;
            let factor = b / ap;
            let before: Vec<usize> = rows[r].iter().map(|e| e.0).collect();
            axpy(&mut rows[r], -factor, &row);
            rows[r].retain(|e| e.0 != pv);
            rhs[r] -= factor * f;
            mu[r].push((pivots.len(), factor));
            for &(j, _) in &row {
                if j != pv && before.binary_search(&j).is_err() {
                    col_rows[j].push(r);
                }
            }
        }
        pivots.push(Pivot {
            var: pv,
            row,
            rhs: f,
            index: t,
        });
    }

    let mut kept = Vec::new();
    let mut new_index = vec![usize::MAX; m];
    for j in 0..m {
        if eliminated[j] {
            continue;
        }
        if pattern[j].is_empty() {
            if c[j].abs() > 1e-12 {
                return Err(PresolveOutcome::DualInfeasible(format!(
                    "variable '{}' is unconstrained with a nonzero objective",
                    p.variables[j]
                )));
            }
            continue;
        }
        new_index[j] = kept.len();
        kept.push(j);
    }

    let mut blocks: Vec<ConeBlock> = p
        .blocks
        .iter()
        .map(|b| ConeBlock {
            n: b.size,
            g: Mat::zeros(b.size, b.size),
            vars: Vec::new(),
        })
        .collect();
    for &(k, v) in &gconst {
        let (b, i, j) = unkey(k);
        blocks[b].g[(i, j)] += v;
        if i != j {
            blocks[b].g[(j, i)] += v;
        }
    }
    for (r, &j) in kept.iter().enumerate() {
        let mut k = 0;
        let pat = &pattern[j];
        while k < pat.len() {
            let b = unkey(pat[k].0).0;
            let mut ent = Vec::new();
            while k < pat.len() && unkey(pat[k].0).0 == b {
                let (_, i, jj) = unkey(pat[k].0);
                ent.push((i as u32, jj as u32, pat[k].1));
                k += 1;
            }
            blocks[b].vars.push((r, ent));
        }
    }
    let c = kept.iter().map(|&j| c[j]).collect();
    Ok(Presolved {
        cone: Cone { blocks, c, c0 },
        kept,
        pivots,
        mu,
        nvars: m,
        nrows,
    })
}

fn merge_sorted<K: Ord + Copy>(t: Vec<(K, f64)>) -> Vec<(K, f64)> {
    let mut out: Vec<(K, f64)> = Vec::with_capacity(t.len());
    for (k, v) in t {
        match out.last_mut() {
            Some(last) if last.0 == k => last.1 += v,
            _ => out.push((k, v)),
        }
    }
    out.retain(|e| e.1 != 0.0);
    out
}

impl Presolved {
    /// Original primal vector from a reduced one.
    pub fn recover_primal(&self, xr: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.nvars];
        for (r, &j) in self.kept.iter().enumerate() {
            x[j] = xr[r];
        }
        for pv in self.pivots.iter().rev() {
            let mut acc = pv.rhs;
            let mut ap = 0.0;
            for &(j, a) in &pv.row {
                if j == pv.var {
                    ap = a;
                } else {
                    acc -= a * x[j];
                }
            }
            x[pv.var] = acc / ap;
        }
        x
    }

    /// Equality multipliers `w` with `c = E^T w + H^T Y` holding on the
    /// pivot variables; `residual` is `c - H^T Y` over original variables.
    pub fn recover_equality_duals(&self, mut residual: Vec<f64>) -> Vec<f64> {
        let mut z = vec![0.0; self.pivots.len()];
        for (t, pv) in self.pivots.iter().enumerate() {
            let ap = pv
                .row
                .iter()
                .find(|e| e.0 == pv.var)
                .map(|e| e.1)
                .unwrap_or(1.0);
            z[t] = residual[pv.var] / ap;
            for &(j, a) in &pv.row {
                residual[j] -= a * z[t];
            }
        }
        // modified rows are L^{-1} A with L unit lower triangular; w = L^{-T} z
        let mut row_of_pivot = vec![usize::MAX; self.nrows];
        for (t, pv) in self.pivots.iter().enumerate() {
            row_of_pivot[pv.index] = t;
        }
        let mut w = vec![0.0; self.nrows];
        for r in (0..self.nrows).rev() {
            let t = row_of_pivot[r];
            if t != usize::MAX {
                w[r] += z[t];
            }
            let wr = w[r];
            for &(earlier, factor) in &self.mu[r] {
                let idx = self.pivots[earlier].index;
                w[idx] -= factor * wr;
            }
        }
        w
    }
}
