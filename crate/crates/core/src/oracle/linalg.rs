//! Small dense complex helpers for explicit models.

use faer::{c64, Mat, Side};
use rand::Rng;
use rand_distr::StandardNormal;

pub fn zeros(r: usize, c: usize) -> Mat<c64> {
    Mat::from_fn(r, c, |_, _| c64::new(0.0, 0.0))
}

pub fn identity(n: usize) -> Mat<c64> {
    Mat::from_fn(n, n, |i, j| c64::new(if i == j { 1.0 } else { 0.0 }, 0.0))
}

pub fn kron(a: &Mat<c64>, b: &Mat<c64>) -> Mat<c64> {
    let (m2, n2) = (b.nrows(), b.ncols());
    Mat::from_fn(a.nrows() * m2, a.ncols() * n2, |i, j| {
        a[(i / m2, j / n2)] * b[(i % m2, j % n2)]
    })
}

pub fn kron_all(ops: &[&Mat<c64>]) -> Mat<c64> {
    let mut out = identity(1);
    for op in ops {
        out = kron(&out, op);
    }
    out
}

pub fn trace(a: &Mat<c64>) -> c64 {
    (0..a.nrows()).map(|i| a[(i, i)]).sum()
}

/// `tr(a b)` without forming the product.
pub fn trace_product(a: &Mat<c64>, b: &Mat<c64>) -> c64 {
    let mut acc = c64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn adjoint(a: &Mat<c64>) -> Mat<c64> {
    Mat::from_fn(a.ncols(), a.nrows(), |i, j| a[(j, i)].conj())
}

pub fn max_abs_diff(a: &Mat<c64>, b: &Mat<c64>) -> f64 {
    let mut m: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    m
}

pub fn hermiticity_error(a: &Mat<c64>) -> f64 {
    max_abs_diff(a, &adjoint(a))
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.
pub fn herm_eig(a: &Mat<c64>) -> (Vec<f64>, Mat<c64>) {
    let e = a
        .self_adjoint_eigen(Side::Lower)
        .expect("Hermitian eigendecomposition");
    let s = e.S().column_vector();
    ((0..a.nrows()).map(|i| s[i].re).collect(), e.U().to_owned())
}

pub fn herm_eigvals(a: &Mat<c64>) -> Vec<f64> {
    a.self_adjoint_eigenvalues(Side::Lower)
        .expect("Hermitian eigenvalues")
}

/// Partial transpose over the parties flagged in `flip`.
pub fn partial_transpose(rho: &Mat<c64>, dims: &[usize], flip: &[bool]) -> Mat<c64> {
    let n = rho.nrows();
    let split = |mut i: usize| {
        let mut d = vec![0; dims.len()];
        for s in (0..dims.len()).rev() {
            d[s] = i % dims[s];
            i /= dims[s];
        }
        d
    };
    let join = |d: &[usize]| d.iter().zip(dims).fold(0, |acc, (&x, &n)| acc * n + x);
    Mat::from_fn(n, n, |i, j| {
        let (mut a, mut b) = (split(i), split(j));
        for s in 0..dims.len() {
            if flip[s] {
                std::mem::swap(&mut a[s], &mut b[s]);
            }
        }
        rho[(join(&a), join(&b))]
    })
}

/// Reduced operator on party `keep` of a (not necessarily Hermitian) operator.
pub fn partial_trace_keep(a: &Mat<c64>, dims: &[usize], keep: usize) -> Mat<c64> {
    let d = dims[keep];
    let inner: usize = dims[keep + 1..].iter().product();
    let outer: usize = dims[..keep].iter().product();
    Mat::from_fn(d, d, |i, j| {
        let mut acc = c64::new(0.0, 0.0);
        for o in 0..outer {
            for r in 0..inner {
                let row = (o * d + i) * inner + r;
                let col = (o * d + j) * inner + r;
                acc += a[(row, col)];
            }
        }
        acc
    })
}

fn gaussian(rng: &mut impl Rng) -> c64 {
    c64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-like unitary by Gram–Schmidt on a complex Gaussian matrix.
pub fn random_unitary(d: usize, rng: &mut impl Rng) -> Mat<c64> {
    let mut cols: Vec<Vec<c64>> = Vec::with_capacity(d);
    while cols.len() < d {
        let mut v: Vec<c64> = (0..d).map(|_| gaussian(rng)).collect();
        for u in &cols {
            let p: c64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (x, y) in v.iter_mut().zip(u) {
                *x -= p * y;
            }
        }
        let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-8 {
            cols.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    Mat::from_fn(d, d, |i, j| cols[j][i])
}

pub fn random_vector(d: usize, rng: &mut impl Rng) -> Vec<c64> {
    let v: Vec<c64> = (0..d).map(|_| gaussian(rng)).collect();
    let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / norm).collect()
}

/// Random density matrix `G G† / tr` with `G` of the given rank.
pub fn random_density(d: usize, rank: usize, rng: &mut impl Rng) -> Mat<c64> {
    let g = Mat::from_fn(d, rank.max(1), |_, _| gaussian(rng));
    let mut rho = &g * &adjoint(&g);
    let t = trace(&rho).re;
    for j in 0..d {
        for i in 0..d {
            rho[(i, j)] /= t;
        }
    }
    hermitize(&mut rho);
    rho
}

pub fn hermitize(a: &mut Mat<c64>) {
    let n = a.nrows();
    for j in 0..n {
        for i in 0..=j {
            let v = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            a[(i, j)] = v;
            a[(j, i)] = v.conj();
        }
    }
}

pub fn outer(psi: &[c64]) -> Mat<c64> {
    Mat::from_fn(psi.len(), psi.len(), |i, j| psi[i] * psi[j].conj())
}

/// Projector onto the span of the given columns of `u`.
pub fn projector(u: &Mat<c64>, cols: &[usize]) -> Mat<c64> {
    let n = u.nrows();
    let mut p = zeros(n, n);
    for &k in cols {
        for j in 0..n {
            let c = u[(j, k)].conj();
            for i in 0..n {
                p[(i, j)] += u[(i, k)] * c;
            }
        }
    }
    p
}
