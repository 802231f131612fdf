use super::linalg::{self, herm_eigvals, hermiticity_error, identity, max_abs_diff, trace};
use super::OracleError;
use crate::scenario::Scenario;
use faer::{c64, Mat};
use rand::Rng;
use serde::{Deserialize, Serialize};

const TOL: f64 = 1e-12;

/// Explicit finite-dimensional model: a global state and projective
/// measurements `measurements[party][setting][outcome]`.
#[derive(Debug, Clone)]
pub struct QuantumModel {
    pub dims: Vec<usize>,
    pub state: Mat<c64>,
    pub measurements: Vec<Vec<Vec<Mat<c64>>>>,
    pub seed: Option<u64>,
}

type JsonMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    dims: Vec<usize>,
    state: JsonMatrix,
    measurements: Vec<Vec<Vec<JsonMatrix>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

fn to_json(m: &Mat<c64>) -> JsonMatrix {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect()
}

fn from_json(rows: &JsonMatrix) -> Result<Mat<c64>, OracleError> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(OracleError::InvalidModel("matrices must be square".into()));
    }
    Ok(Mat::from_fn(n, n, |i, j| {
        c64::new(rows[i][j][0], rows[i][j][1])
    }))
}

impl QuantumModel {
    pub fn new(
        dims: Vec<usize>,
        state: Mat<c64>,
        measurements: Vec<Vec<Vec<Mat<c64>>>>,
    ) -> Result<Self, OracleError> {
        let m = QuantumModel {
            dims,
            state,
            measurements,
            seed: None,
        };
        m.validate()?;
        Ok(m)
    }

    /// Model with the pure state `psi` (normalised by the caller).
    pub fn pure(
        dims: Vec<usize>,
        psi: &[c64],
        measurements: Vec<Vec<Vec<Mat<c64>>>>,
    ) -> Result<Self, OracleError> {
        Self::new(dims, linalg::outer(psi), measurements)
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn scenario(&self) -> Result<Scenario, OracleError> {
        let outcomes = self
            .measurements
            .iter()
            .map(|p| p.iter().map(Vec::len).collect())
            .collect();
        Scenario::new(outcomes).map_err(|e| OracleError::InvalidModel(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), OracleError> {
        let bad = |s: String| Err(OracleError::InvalidModel(s));
        if self.dims.is_empty() || self.dims.contains(&0) {
            return bad("local dimensions must be positive".into());
        }
        let dim = self.total_dim();
        if self.state.nrows() != dim || self.state.ncols() != dim {
            return bad(format!(
                "state is {}x{}, dims give {dim}",
                self.state.nrows(),
                self.state.ncols()
            ));
        }
        if hermiticity_error(&self.state) > TOL {
            return bad("state is not Hermitian".into());
        }
        let tr = trace(&self.state);
        if (tr.re - 1.0).abs() > TOL || tr.im.abs() > TOL {
            return bad(format!("state trace is {tr}"));
        }
        if herm_eigvals(&self.state)[0] < -TOL {
            return bad("state is not positive semidefinite".into());
        }
        if self.measurements.len() != self.dims.len() {
            return bad("one measurement list per party required".into());
        }
        for (s, settings) in self.measurements.iter().enumerate() {
            let d = self.dims[s];
            if settings.is_empty() {
                return bad(format!("party {s} has no settings"));
            }
            for (x, povm) in settings.iter().enumerate() {
                if povm.len() < 2 {
                    return bad(format!("party {s} setting {x} needs at least two outcomes"));
                }
                let mut sum = linalg::zeros(d, d);
                for (a, p) in povm.iter().enumerate() {
                    if p.nrows() != d || p.ncols() != d {
                        return bad(format!("projector ({s},{x},{a}) has the wrong size"));
                    }
                    if hermiticity_error(p) > TOL {
                        return bad(format!("projector ({s},{x},{a}) is not Hermitian"));
                    }
                    sum += p;
                    for (b, q) in povm.iter().enumerate() {
                        let pq = p * q;
                        let target = if a == b {
                            p.clone()
                        } else {
                            linalg::zeros(d, d)
                        };
                        if max_abs_diff(&pq, &target) > TOL {
                            return bad(format!("party {s} setting {x}: outcomes {a},{b} are not orthogonal projectors"));
                        }
                    }
                }
                if max_abs_diff(&sum, &identity(d)) > TOL {
                    return bad(format!(
                        "party {s} setting {x}: projectors do not sum to the identity"
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let f = ModelFile {
            dims: self.dims.clone(),
            state: to_json(&self.state),
            measurements: self
                .measurements
                .iter()
                .map(|p| p.iter().map(|x| x.iter().map(to_json).collect()).collect())
                .collect(),
            seed: self.seed,
        };
        serde_json::to_string_pretty(&f).expect("model serialises")
    }

    pub fn from_json(text: &str) -> Result<Self, OracleError> {
        let f: ModelFile =
            serde_json::from_str(text).map_err(|e| OracleError::InvalidModel(e.to_string()))?;
        let mut measurements = Vec::with_capacity(f.measurements.len());
        for p in &f.measurements {
            let mut settings = Vec::with_capacity(p.len());
            for x in p {
                settings.push(x.iter().map(from_json).collect::<Result<Vec<_>, _>>()?);
            }
            measurements.push(settings);
        }
        let mut m = QuantumModel::new(f.dims, from_json(&f.state)?, measurements)?;
        m.seed = f.seed;
        Ok(m)
    }

    /// Random mixed state and random projective measurements for `scenario`.
    pub fn random(scenario: &Scenario, dims: &[usize], rng: &mut impl Rng) -> Self {
        let dim: usize = dims.iter().product();
        let rank = rng.random_range(1..=dim);
        let state = linalg::random_density(dim, rank, rng);
        let measurements = (0..scenario.parties())
            .map(|s| {
                (0..scenario.settings(s))
                    .map(|x| random_measurement(dims[s], scenario.outcomes(s, x), rng))
                    .collect()
            })
            .collect();
        QuantumModel {
            dims: dims.to_vec(),
            state,
            measurements,
            seed: None,
        }
    }
}

/// Random projective measurement: basis vectors of a random unitary assigned
/// to random outcomes (some outcomes may be empty).
pub fn random_measurement(d: usize, outcomes: usize, rng: &mut impl Rng) -> Vec<Mat<c64>> {
    let u = linalg::random_unitary(d, rng);
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); outcomes];
    for k in 0..d {
        groups[rng.random_range(0..outcomes)].push(k);
    }
    groups.iter().map(|g| linalg::projector(&u, g)).collect()
}
