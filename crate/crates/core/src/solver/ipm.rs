//! Primal-dual interior-point method (HKM direction, Mehrotra
//! predictor-corrector) for `min c.x  s.t.  S = G + sum x_j H_j >= 0`.

use super::presolve::{inner, Cone};
use super::{SolverConfig, Status};
use faer::linalg::solvers::Solve;
use faer::sparse::Triplet;
use faer::{Mat, Side};
use std::collections::HashMap;
use std::time::Instant;

pub(crate) struct RawSolution {
    pub status: Status,
    pub x: Vec<f64>,
    pub y: Vec<Mat<f64>>,
    pub iterations: usize,
}

pub(crate) fn dot(a: &Mat<f64>, b: &Mat<f64>) -> f64 {
    let mut acc = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            acc += a[(i, j)] * b[(i, j)];
        }
    }
    acc
}

fn fro(a: &Mat<f64>) -> f64 {
    dot(a, a).sqrt()
}

fn sym(a: &Mat<f64>) -> Mat<f64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| 0.5 * (a[(i, j)] + a[(j, i)]))
}

fn chol(a: &Mat<f64>) -> Option<Mat<f64>> {
    a.llt(Side::Lower).ok().map(|l| l.L().to_owned())
}

/// Largest `t` with `X + t dX >= 0`, given the Cholesky factor of `X`.
fn max_step(l: &Mat<f64>, dx: &Mat<f64>) -> f64 {
    let n = l.nrows();
    if n == 0 {
        return f64::INFINITY;
    }
    let mut a = dx.clone();
    faer::linalg::triangular_solve::solve_lower_triangular_in_place(
        l.as_ref(),
        a.as_mut(),
        faer::Par::Seq,
    );
    let mut b = a.transpose().to_owned();
    faer::linalg::triangular_solve::solve_lower_triangular_in_place(
        l.as_ref(),
        b.as_mut(),
        faer::Par::Seq,
    );
    let b = sym(&b);
    let min = match b.self_adjoint_eigenvalues(Side::Lower) {
        Ok(v) => v[0],
        Err(_) => return 0.0,
    };
    if min >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / min
    }
}

/// Schur complement `M_ij = <H_i, S^{-1} H_j Y>`.
fn schur(cone: &Cone, sinv: &[Mat<f64>], y: &[Mat<f64>]) -> Mat<f64> {
    let m = cone.m();
    let mut big = Mat::<f64>::zeros(m, m);
    for (b, blk) in cone.blocks.iter().enumerate() {
        let n = blk.n;
        let (si, yb) = (&sinv[b], &y[b]);
        for (lj, (gj, ent)) in blk.vars.iter().enumerate() {
            let full = 2 * ent.len();
            let t = if full > n {
                let h = Mat::from_fn(n, n, |_, _| 0.0);
                let mut h = h;
                for &(p, q, v) in ent {
                    h[(p as usize, q as usize)] += v;
                    if p != q {
                        h[(q as usize, p as usize)] += v;
                    }
                }
                si * (&h * yb)
            } else {
                let cols: Vec<(usize, usize, f64)> = ent
                    .iter()
                    .flat_map(|&(p, q, v)| {
                        let (p, q) = (p as usize, q as usize);
                        let first = std::iter::once((p, q, v));
                        let second = (p != q).then_some((q, p, v));
                        first.chain(second)
                    })
                    .collect();
                let k = cols.len();
                let u = Mat::from_fn(n, k, |i, c| si[(i, cols[c].0)]);
                let w = Mat::from_fn(k, n, |c, j| cols[c].2 * yb[(cols[c].1, j)]);
                &u * &w
            };
            for (gi, ei) in &blk.vars[lj..] {
                let v = inner(ei, &t);
                big[(*gi, *gj)] += v;
            }
        }
    }
    for j in 0..m {
        for i in j + 1..m {
            let v = big[(i, j)] + big[(j, i)];
            big[(i, j)] = v;
            big[(j, i)] = v;
        }
    }
    big
}

/// Same matrix as [`schur`] assembled as a Gram matrix of
/// `L_S^{-1} H_j L_Y`, which stays numerically PSD when `S` is nearly singular.
fn schur_gram(cone: &Cone, linv: &[Mat<f64>], ly: &[Mat<f64>]) -> Mat<f64> {
    let m = cone.m();
    let mut big = Mat::<f64>::zeros(m, m);
    for (b, blk) in cone.blocks.iter().enumerate() {
        let n = blk.n;
        let k = blk.vars.len();
        let mut a = Mat::<f64>::zeros(n * n, k);
        for (c, (_, ent)) in blk.vars.iter().enumerate() {
            let cols: Vec<(usize, usize, f64)> = ent
                .iter()
                .flat_map(|&(p, q, v)| {
                    let (p, q) = (p as usize, q as usize);
                    std::iter::once((p, q, v)).chain((p != q).then_some((q, p, v)))
                })
                .collect();
            let u = Mat::from_fn(n, cols.len(), |i, t| linv[b][(i, cols[t].0)]);
            let w = Mat::from_fn(cols.len(), n, |t, j| cols[t].2 * ly[b][(cols[t].1, j)]);
            let bj = &u * &w;
            for jj in 0..n {
                for ii in 0..n {
                    a[(jj * n + ii, c)] = bj[(ii, jj)];
                }
            }
        }
        let g = a.transpose() * &a;
        for (c1, (g1, _)) in blk.vars.iter().enumerate() {
            for (c2, (g2, _)) in blk.vars.iter().enumerate() {
                big[(*g1, *g2)] += g[(c1, c2)];
            }
        }
    }
    big
}

/// Cholesky factor of the Jacobi-equilibrated Schur complement.
struct Factor {
    llt: faer::linalg::solvers::Llt<f64>,
    m: Mat<f64>,
    d: Vec<f64>,
    reg: f64,
}

fn factor(m: Mat<f64>) -> Option<Factor> {
    let n = m.nrows();
    let d: Vec<f64> = (0..n)
        .map(|i| {
            if m[(i, i)] > 0.0 {
                m[(i, i)].sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let mut scaled = Mat::from_fn(n, n, |i, j| m[(i, j)] / (d[i] * d[j]));
    let mut reg = 0.0;
    for _ in 0..6 {
        if let Ok(llt) = scaled.llt(Side::Lower) {
            return Some(Factor { llt, m, d, reg });
        }
        let next = if reg == 0.0 { 1e-14 } else { reg * 100.0 };
        for i in 0..n {
            scaled[(i, i)] += next - reg;
        }
        reg = next;
    }
    None
}

impl Factor {
    /// Solve with a few steps of iterative refinement against the
    /// unregularised matrix.
    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = rhs.len();
        let b = Mat::from_fn(n, 1, |i, _| rhs[i]);
        let inner = |r: &Mat<f64>| {
            let t = Mat::from_fn(n, 1, |i, _| r[(i, 0)] / self.d[i]);
            let u = self.llt.solve(&t);
            Mat::from_fn(n, 1, |i, _| u[(i, 0)] / self.d[i])
        };
        let mut x = inner(&b);
        for _ in 0..3 {
            let r = &b - &self.m * &x;
            x += inner(&r);
        }
        (0..n).map(|i| x[(i, 0)]).collect()
    }
}

pub(crate) fn solve_ipm(cone: &Cone, cfg: &SolverConfig) -> RawSolution {
    let m = cone.m();
    let nb = cone.blocks.len();
    let total: usize = cone.blocks.iter().map(|b| b.n).sum::<usize>().max(1);
    let gnorm = cone
        .blocks
        .iter()
        .map(|b| dot(&b.g, &b.g))
        .sum::<f64>()
        .sqrt();
    let cnorm = cone.c.iter().map(|v| v * v).sum::<f64>().sqrt();

    let mut hnorm = vec![0.0f64; nb];
    for (b, blk) in cone.blocks.iter().enumerate() {
        for (_, ent) in &blk.vars {
            let f: f64 = ent
                .iter()
                .map(|&(p, q, v)| if p == q { v * v } else { 2.0 * v * v })
                .sum();
            hnorm[b] = hnorm[b].max(f.sqrt());
        }
    }
    let mut x = vec![0.0; m];
    let mut s: Vec<Mat<f64>> = Vec::with_capacity(nb);
    let mut y: Vec<Mat<f64>> = Vec::with_capacity(nb);
    for (b, blk) in cone.blocks.iter().enumerate() {
        let n = blk.n as f64;
        let eta = 10f64.max(n.sqrt()).max(hnorm[b]).max(fro(&blk.g));
        let xi = cone.blocks[b]
            .vars
            .iter()
            .map(|(j, _)| (1.0 + cone.c[*j].abs()) / (1.0 + hnorm[b]))
            .fold(10f64.max(n.sqrt()), |a, v| a.max(n * v));
        s.push(Mat::from_fn(
            blk.n,
            blk.n,
            |i, j| if i == j { eta } else { 0.0 },
        ));
        y.push(Mat::from_fn(
            blk.n,
            blk.n,
            |i, j| if i == j { xi } else { 0.0 },
        ));
    }

    let mut stalls = 0;
    let mut polisher: Option<Polisher> = None;
    let mut gram = false;
    let mut status = Status::NumericalLimit;
    let mut iterations = 0;
    let start = cfg.time_limit.map(|_| Instant::now());
    for it in 0..cfg.max_iterations {
        iterations = it;
        if let (Some(t0), Some(limit)) = (start, cfg.time_limit) {
            if t0.elapsed().as_secs_f64() > limit {
                break;
            }
        }
        let hx: Vec<Mat<f64>> = cone.blocks.iter().map(|b| b.eval(&x, false)).collect();
        let rp: Vec<Mat<f64>> = (0..nb)
            .map(|b| &(&s[b] - &cone.blocks[b].g) - &hx[b])
            .collect();
        let hty = cone.adjoint(&y);
        let rd: Vec<f64> = (0..m).map(|j| cone.c[j] - hty[j]).collect();
        let cx: f64 = cone.c.iter().zip(&x).map(|(a, b)| a * b).sum();
        let gy: f64 = (0..nb).map(|b| dot(&cone.blocks[b].g, &y[b])).sum();
        let (pobj, dobj) = (cx + cone.c0, -gy + cone.c0);
        let pinf = rp.iter().map(|r| dot(r, r)).sum::<f64>().sqrt() / (1.0 + gnorm);
        let dinf = rd.iter().map(|v| v * v).sum::<f64>().sqrt() / (1.0 + cnorm);
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        let sy: f64 = (0..nb).map(|b| dot(&s[b], &y[b])).sum();
        let compl = sy / (1.0 + pobj.abs() + dobj.abs());
        if cfg.verbosity >= 2 {
            eprintln!(
                "ipm {it:3}  p {pobj:+.10e}  d {dobj:+.10e}  gap {gap:.2e}  pinf {pinf:.2e}  dinf {dinf:.2e}"
            );
        }
        if pinf <= cfg.feas_tol
            && dinf <= cfg.feas_tol
            && gap <= cfg.gap_tol
            && compl <= cfg.gap_tol
        {
            status = Status::Optimal;
            break;
        }
        if pinf <= cfg.feas_tol && gap <= cfg.gap_tol && compl <= cfg.gap_tol && dinf <= 1e-4 {
            if polisher.is_none() {
                polisher = Some(Polisher::new(cone));
            }
            if let Some(yp) = polisher
                .as_ref()
                .and_then(|p| p.polish(cone, &y, cfg.feas_tol))
            {
                let gy: f64 = (0..nb).map(|b| dot(&cone.blocks[b].g, &yp[b])).sum();
                let dobj = -gy + cone.c0;
                let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
                if gap <= cfg.gap_tol {
                    if cfg.verbosity >= 2 {
                        eprintln!("ipm {it:3}  dual polished, d {dobj:+.10e}  gap {gap:.2e}");
                    }
                    y = yp;
                    status = Status::Optimal;
                    break;
                }
            }
        }
        let htyn = hty.iter().map(|v| v * v).sum::<f64>().sqrt();
        if -gy > 0.0 && htyn / -gy < 1e-8 {
            status = Status::PrimalInfeasible;
            break;
        }
        if -cx > 0.0 {
            let resid: f64 = (0..nb).map(|b| fro(&(&cone.blocks[b].g + &rp[b]))).sum();
            if resid / -cx < 1e-8 {
                status = Status::DualInfeasible;
                break;
            }
        }

        let (Some(ls), Some(ly)) = (
            s.iter().map(chol).collect::<Option<Vec<_>>>(),
            y.iter().map(chol).collect::<Option<Vec<_>>>(),
        ) else {
            if cfg.verbosity >= 2 {
                eprintln!("ipm {it:3}  iterate lost positive definiteness");
            }
            break;
        };
        let linv: Vec<Mat<f64>> = ls
            .iter()
            .map(|l| {
                let mut li = Mat::<f64>::identity(l.nrows(), l.nrows());
                faer::linalg::triangular_solve::solve_lower_triangular_in_place(
                    l.as_ref(),
                    li.as_mut(),
                    faer::Par::Seq,
                );
                li
            })
            .collect();
        let sinv: Vec<Mat<f64>> = linv.iter().map(|li| sym(&(li.transpose() * li))).collect();
        let fac = {
            let mut fac = if gram {
                None
            } else {
                factor(schur(cone, &sinv, &y)).filter(|f| f.reg == 0.0)
            };
            if fac.is_none() {
                if !gram && cfg.verbosity >= 2 {
                    eprintln!("ipm {it:3}  switching to the Gram form of the Schur complement");
                }
                gram = true;
                fac = factor(schur_gram(cone, &linv, &ly));
            }
            let Some(fac) = fac else {
                if cfg.verbosity >= 2 {
                    eprintln!("ipm {it:3}  schur complement could not be factored");
                }
                break;
            };
            if cfg.verbosity >= 2 && fac.reg > 0.0 {
                eprintln!(
                    "ipm {it:3}  schur complement regularised by {:.1e}",
                    fac.reg
                );
            }
            fac
        };
        let mu = sy / total as f64;

        let dir = |corr: Option<(&[Mat<f64>], &[Mat<f64>])>, sigma: f64| {
            let rhs_mats: Vec<Mat<f64>> = (0..nb)
                .map(|b| {
                    let mut k = &(&sinv[b] * &rp[b]) * &y[b];
                    if sigma != 0.0 {
                        k += &sinv[b] * (sigma * mu);
                    }
                    if let Some((ds, dy)) = corr {
                        k -= &(&sinv[b] * &ds[b]) * &dy[b];
                    }
                    k
                })
                .collect();
            let mut rhs = cone.adjoint(&rhs_mats);
            for (r, c) in rhs.iter_mut().zip(&cone.c) {
                *r -= c;
            }
            let mut dx = fac.solve(&rhs);
            let build = |dx: &[f64]| {
                let hdx: Vec<Mat<f64>> = cone.blocks.iter().map(|b| b.eval(dx, false)).collect();
                let ds: Vec<Mat<f64>> = (0..nb).map(|b| &hdx[b] - &rp[b]).collect();
                let dy: Vec<Mat<f64>> = (0..nb)
                    .map(|b| {
                        let mut d = &(&sinv[b] * &ds[b]) * &y[b];
                        d = -d;
                        d -= &y[b];
                        if sigma != 0.0 {
                            d += &sinv[b] * (sigma * mu);
                        }
                        if let Some((das, day)) = corr {
                            d -= &(&sinv[b] * &das[b]) * &day[b];
                        }
                        sym(&d)
                    })
                    .collect();
                (ds, dy)
            };
            let (mut ds, mut dy) = build(&dx);
            // refine until the linearised dual equation H^T (Y + dY) = c holds
            for _ in 0..2 {
                let ydy: Vec<Mat<f64>> = (0..nb).map(|b| &y[b] + &dy[b]).collect();
                let r: Vec<f64> = cone
                    .adjoint(&ydy)
                    .iter()
                    .zip(&cone.c)
                    .map(|(a, c)| a - c)
                    .collect();
                let delta = fac.solve(&r);
                for (a, d) in dx.iter_mut().zip(&delta) {
                    *a += d;
                }
                (ds, dy) = build(&dx);
            }
            (dx, ds, dy)
        };
        let steps = |ds: &[Mat<f64>], dy: &[Mat<f64>]| {
            let ap = (0..nb)
                .map(|b| max_step(&ls[b], &ds[b]))
                .fold(f64::INFINITY, f64::min);
            let ad = (0..nb)
                .map(|b| max_step(&ly[b], &dy[b]))
                .fold(f64::INFINITY, f64::min);
            (ap, ad)
        };

        let (_, dsa, dya) = dir(None, 0.0);
        let (apa, ada) = steps(&dsa, &dya);
        let (apa, ada) = (apa.min(1.0), ada.min(1.0));
        let sy_aff: f64 = (0..nb)
            .map(|b| dot(&(&s[b] + &(&dsa[b] * apa)), &(&y[b] + &(&dya[b] * ada))))
            .sum();
        let sigma = (sy_aff / sy).clamp(0.0, 1.0).powi(3);
        let (dx, ds, dy) = dir(Some((&dsa, &dya)), sigma);
        let (ap, ad) = steps(&ds, &dy);
        let tau = 0.95;
        let ap = (tau * ap).min(1.0);
        let ad = (tau * ad).min(1.0);
        if ap < 1e-10 && ad < 1e-10 {
            stalls += 1;
            if stalls >= 3 {
                break;
            }
        } else {
            stalls = 0;
        }
        for (xj, d) in x.iter_mut().zip(&dx) {
            *xj += ap * d;
        }
        for b in 0..nb {
            s[b] += &ds[b] * ap;
            y[b] += &dy[b] * ad;
        }
        iterations = it + 1;
    }
    RawSolution {
        status,
        x,
        y,
        iterations,
    }
}

/// Lower triangle of `H^T H` with a tiny diagonal shift.
fn gram(cone: &Cone) -> Vec<Triplet<usize, usize, f64>> {
    let m = cone.m();
    let mut acc: HashMap<(usize, usize), f64> = HashMap::new();
    for blk in &cone.blocks {
        let mut at: HashMap<(u32, u32), Vec<(usize, f64)>> = HashMap::new();
        for (j, ent) in &blk.vars {
            for &(p, q, h) in ent {
                at.entry((p, q)).or_default().push((*j, h));
            }
        }
        for ((p, q), list) in at {
            let w = if p == q { 1.0 } else { 2.0 };
            for &(i, hi) in &list {
                for &(j, hj) in &list {
                    if i >= j {
                        *acc.entry((i, j)).or_insert(0.0) += w * hi * hj;
                    }
                }
            }
        }
    }
    let scale = (0..m)
        .map(|i| acc.get(&(i, i)).copied().unwrap_or(0.0))
        .fold(0.0f64, f64::max);
    for i in 0..m {
        *acc.entry((i, i)).or_insert(0.0) += 1e-12 * scale.max(1.0);
    }
    let mut t: Vec<_> = acc
        .into_iter()
        .map(|((i, j), v)| Triplet::new(i, j, v))
        .collect();
    t.sort_by_key(|t| (t.col, t.row));
    t
}

/// Least-squares projection of `Y` onto `H^T Y = c`, for end games where the
/// dual residual stalls above tolerance while the gap has closed.
struct Polisher {
    chol: Option<faer::sparse::linalg::solvers::Llt<usize, f64>>,
}

impl Polisher {
    fn new(cone: &Cone) -> Self {
        let m = cone.m();
        let chol =
            faer::sparse::SparseColMat::<usize, f64>::try_new_from_triplets(m, m, &gram(cone))
                .ok()
                .and_then(|k| k.sp_cholesky(Side::Lower).ok());
        Polisher { chol }
    }

    fn polish(&self, cone: &Cone, y: &[Mat<f64>], feas_tol: f64) -> Option<Vec<Mat<f64>>> {
        let chol = self.chol.as_ref()?;
        let m = cone.m();
        let cnorm = cone.c.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut yp: Vec<Mat<f64>> = y.to_vec();
        let mut dinf = f64::INFINITY;
        for _ in 0..3 {
            let hty = cone.adjoint(&yp);
            let r = Mat::from_fn(m, 1, |j, _| cone.c[j] - hty[j]);
            dinf = (0..m).map(|j| r[(j, 0)] * r[(j, 0)]).sum::<f64>().sqrt() / (1.0 + cnorm);
            if dinf <= 0.1 * feas_tol {
                break;
            }
            let z = chol.solve(&r);
            let z: Vec<f64> = (0..m).map(|j| z[(j, 0)]).collect();
            for (b, blk) in cone.blocks.iter().enumerate() {
                yp[b] += blk.eval(&z, false);
            }
        }
        if dinf > feas_tol {
            return None;
        }
        for (b, yb) in yp.iter().enumerate() {
            if yb.nrows() == 0 {
                continue;
            }
            let min = yb.self_adjoint_eigenvalues(Side::Lower).ok()?[0];
            if min < -feas_tol * (1.0 + fro(&y[b])) {
                return None;
            }
        }
        Some(yp)
    }
}
