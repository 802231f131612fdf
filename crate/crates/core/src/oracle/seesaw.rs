//! Alternating optimisation over pure states and projective measurements.

use super::linalg::{self, herm_eig, identity, kron_all, outer, partial_trace_keep};
use super::{OracleError, QuantumModel};
use crate::scenario::BellFunctional;
use faer::{c64, Mat};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct SeesawConfig {
    pub restarts: usize,
    pub iterations: usize,
    pub seed: u64,
    /// Stop a restart when a full sweep gains less than this (relative).
    pub tol: f64,
}

impl Default for SeesawConfig {
    fn default() -> Self {
        SeesawConfig {
            restarts: 20,
            iterations: 2000,
            seed: 0,
            tol: 1e-14,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SeesawResult {
    pub value: f64,
    pub model: QuantumModel,
    /// Value after every half-step of the best restart.
    pub history: Vec<f64>,
    pub restart_values: Vec<f64>,
}

/// One projective measurement as an orthonormal basis with an outcome label
/// per basis vector.
#[derive(Clone)]
struct Basis {
    u: Mat<c64>,
    label: Vec<usize>,
}

impl Basis {
    fn projectors(&self, outcomes: usize) -> Vec<Mat<c64>> {
        (0..outcomes)
            .map(|a| {
                let cols: Vec<usize> = (0..self.label.len())
                    .filter(|&k| self.label[k] == a)
                    .collect();
                linalg::projector(&self.u, &cols)
            })
            .collect()
    }
}

struct Problem<'a> {
    f: &'a BellFunctional,
    dims: &'a [usize],
}

impl Problem<'_> {
    fn local_ops(&self, projs: &[Vec<Vec<Mat<c64>>>], party: usize) -> Vec<Mat<c64>> {
        let sc = &self.f.scenario;
        (0..sc.local_size(party))
            .map(|l| match sc.local_decode(party, l) {
                None => identity(self.dims[party]),
                Some((x, a)) => projs[party][x][a].clone(),
            })
            .collect()
    }

    /// `sum_i c_i (x) ops`, with party `skip` (if any) restricted to local index
    /// `only` and replaced by the identity.
    fn operator(&self, projs: &[Vec<Vec<Mat<c64>>>], skip: Option<(usize, usize)>) -> Mat<c64> {
        let sc = &self.f.scenario;
        let n = sc.parties();
        let locals: Vec<Vec<Mat<c64>>> = (0..n).map(|s| self.local_ops(projs, s)).collect();
        let id: Vec<Mat<c64>> = self.dims.iter().map(|&d| identity(d)).collect();
        let dim: usize = self.dims.iter().product();
        let mut out = linalg::zeros(dim, dim);
        for (i, &c) in self.f.cg_coefficients().iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let loc = sc.cg_decode(i);
            if let Some((s, l)) = skip {
                if loc[s] != l {
                    continue;
                }
            }
            let ops: Vec<&Mat<c64>> = (0..n)
                .map(|t| match skip {
                    Some((s, _)) if s == t => &id[t],
                    _ => &locals[t][loc[t]],
                })
                .collect();
            let k = kron_all(&ops);
            for q in 0..dim {
                for p in 0..dim {
                    out[(p, q)] += k[(p, q)] * c;
                }
            }
        }
        out
    }
}

fn top_eigvec(b: &Mat<c64>) -> (f64, Vec<c64>) {
    let (vals, u) = herm_eig(b);
    let k = vals.len() - 1;
    (vals[k], (0..u.nrows()).map(|i| u[(i, k)]).collect())
}

fn expectation(b: &Mat<c64>, psi: &[c64]) -> f64 {
    let mut acc = c64::new(0.0, 0.0);
    for j in 0..psi.len() {
        for i in 0..psi.len() {
            acc += psi[i].conj() * b[(i, j)] * psi[j];
        }
    }
    acc.re
}

fn quad(m: &Mat<c64>, u: &Mat<c64>, i: usize, j: usize) -> c64 {
    let mut acc = c64::new(0.0, 0.0);
    for q in 0..m.ncols() {
        let mut t = c64::new(0.0, 0.0);
        for p in 0..m.nrows() {
            t += u[(p, i)].conj() * m[(p, q)];
        }
        acc += t * u[(q, j)];
    }
    acc
}

/// Maximises `sum_a tr(M_a W_a)` over projective measurements, starting from
/// `basis`; monotone.
fn improve_measurement(basis: &mut Basis, w: &[Mat<c64>]) {
    let d = basis.u.nrows();
    let outcomes = w.len();
    if outcomes == 2 {
        let diff = &w[0] - &w[1];
        let (vals, u) = herm_eig(&diff);
        basis.u = u;
        basis.label = vals.iter().map(|&l| if l > 0.0 { 0 } else { 1 }).collect();
        return;
    }
    for _sweep in 0..100 {
        let mut changed = false;
        for k in 0..d {
            let scores: Vec<f64> = (0..outcomes)
                .map(|a| quad(&w[a], &basis.u, k, k).re)
                .collect();
            let cur = scores[basis.label[k]];
            let (best, &bv) =
                scores
                    .iter()
                    .enumerate()
                    .fold((0, &f64::NEG_INFINITY), |acc, (a, v)| {
                        if *v > *acc.1 {
                            (a, v)
                        } else {
                            acc
                        }
                    });
            if bv > cur + 1e-15 {
                basis.label[k] = best;
                changed = true;
            }
        }
        for i in 0..d {
            for j in i + 1..d {
                let (a, b) = (basis.label[i], basis.label[j]);
                if a == b {
                    continue;
                }
                let h = &w[a] - &w[b];
                let h11 = quad(&h, &basis.u, i, i).re;
                let h22 = quad(&h, &basis.u, j, j).re;
                let h12 = quad(&h, &basis.u, i, j);
                let half = 0.5 * (h11 - h22);
                let lam = 0.5 * (h11 + h22) + (half * half + h12.norm_sqr()).sqrt();
                if lam - h11 <= 1e-15 * (1.0 + lam.abs()) {
                    continue;
                }
                let (mut c1, mut c2) = (h12, c64::new(lam - h11, 0.0));
                let n = (c1.norm_sqr() + c2.norm_sqr()).sqrt();
                c1 /= n;
                c2 /= n;
                for p in 0..d {
                    let (ui, uj) = (basis.u[(p, i)], basis.u[(p, j)]);
                    basis.u[(p, i)] = c1 * ui + c2 * uj;
                    basis.u[(p, j)] = -c2.conj() * ui + c1.conj() * uj;
                }
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
}

/// Best value over seeded restarts with the given local dimensions.
pub fn seesaw(
    f: &BellFunctional,
    dims: &[usize],
    config: &SeesawConfig,
) -> Result<SeesawResult, OracleError> {
    let sc = &f.scenario;
    let n = sc.parties();
    if dims.len() != n || dims.iter().any(|&d| d < 2) {
        return Err(OracleError::InvalidModel(format!(
            "need a local dimension >= 2 for each of {n} parties"
        )));
    }
    let prob = Problem { f, dims };
    let mut best: Option<SeesawResult> = None;
    let mut restart_values = Vec::with_capacity(config.restarts.max(1));
    for r in 0..config.restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(r as u64));
        let mut bases: Vec<Vec<Basis>> = (0..n)
            .map(|s| {
                (0..sc.settings(s))
                    .map(|x| {
                        let d = sc.outcomes(s, x);
                        Basis {
                            u: linalg::random_unitary(dims[s], &mut rng),
                            label: (0..dims[s]).map(|k| k % d).collect(),
                        }
                    })
                    .collect()
            })
            .collect();
        let projs_of = |bases: &Vec<Vec<Basis>>| -> Vec<Vec<Vec<Mat<c64>>>> {
            (0..n)
                .map(|s| {
                    (0..sc.settings(s))
                        .map(|x| bases[s][x].projectors(sc.outcomes(s, x)))
                        .collect()
                })
                .collect()
        };
        let mut projs = projs_of(&bases);
        let (mut value, mut psi) = top_eigvec(&prob.operator(&projs, None));
        let mut history = vec![value];
        for _ in 0..config.iterations {
            let start = value;
            for s in 0..n {
                let rho = outer(&psi);
                let omegas: Vec<Mat<c64>> = (0..sc.local_size(s))
                    .map(|l| {
                        if l == 0 {
                            linalg::zeros(dims[s], dims[s])
                        } else {
                            let fl = prob.operator(&projs, Some((s, l)));
                            partial_trace_keep(&(&fl * &rho), dims, s)
                        }
                    })
                    .collect();
                for x in 0..sc.settings(s) {
                    let d = sc.outcomes(s, x);
                    let w: Vec<Mat<c64>> = (0..d)
                        .map(|a| match sc.local_index(s, x, a) {
                            Some(l) => {
                                let mut m = omegas[l].clone();
                                linalg::hermitize(&mut m);
                                m
                            }
                            None => linalg::zeros(dims[s], dims[s]),
                        })
                        .collect();
                    improve_measurement(&mut bases[s][x], &w);
                }
                projs = projs_of(&bases);
                history.push(expectation(&prob.operator(&projs, None), &psi));
            }
            let (v, p) = top_eigvec(&prob.operator(&projs, None));
            value = v;
            psi = p;
            history.push(value);
            if value - start <= config.tol * (1.0 + value.abs()) {
                break;
            }
        }
        restart_values.push(value);
        if best.as_ref().is_none_or(|b| value > b.value) {
            let mut model = QuantumModel::pure(dims.to_vec(), &psi, projs)?;
            model.seed = Some(config.seed.wrapping_add(r as u64));
            best = Some(SeesawResult {
                value,
                model,
                history,
                restart_values: Vec::new(),
            });
        }
    }
    let mut out = best.expect("at least one restart");
    out.restart_values = restart_values;
    Ok(out)
}
