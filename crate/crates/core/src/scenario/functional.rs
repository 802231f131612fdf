use super::behavior::expand_full;
use super::{Behavior, Scenario, ScenarioError};
use serde::{Deserialize, Serialize};

/// One coefficient of `P(outcomes | settings)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullTerm {
    pub outcomes: Vec<usize>,
    pub settings: Vec<usize>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Form {
    Full { terms: Vec<FullTerm>, offset: f64 },
    CollinsGisin,
}

/// Linear functional `I . P` on behaviors of a scenario.
///
/// The Collins–Gisin coefficients are always available; a functional built
/// from full-probability coefficients also keeps them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BellFunctional {
    pub name: String,
    pub scenario: Scenario,
    pub form: Form,
    cg: Vec<f64>,
    pub classical_bound: Option<f64>,
    pub quantum_bound: Option<f64>,
}

impl BellFunctional {
    pub fn from_full(
        name: impl Into<String>,
        scenario: Scenario,
        terms: Vec<FullTerm>,
        offset: f64,
    ) -> Result<Self, ScenarioError> {
        let mut cg = vec![0.0; scenario.cg_len()];
        cg[0] += offset;
        for t in &terms {
            if !t.value.is_finite() {
                return Err(ScenarioError::MalformedFunctional(
                    "non-finite coefficient".into(),
                ));
            }
            for (i, w) in expand_full(&scenario, &t.outcomes, &t.settings)? {
                cg[i] += w * t.value;
            }
        }
        Ok(BellFunctional {
            name: name.into(),
            scenario,
            form: Form::Full { terms, offset },
            cg,
            classical_bound: None,
            quantum_bound: None,
        })
    }

    /// `coefficients[0]` is the offset.
    pub fn from_collins_gisin(
        name: impl Into<String>,
        scenario: Scenario,
        coefficients: Vec<f64>,
    ) -> Result<Self, ScenarioError> {
        if coefficients.len() != scenario.cg_len() {
            return Err(ScenarioError::MalformedFunctional(format!(
                "{} Collins–Gisin coefficients, scenario needs {}",
                coefficients.len(),
                scenario.cg_len()
            )));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(ScenarioError::MalformedFunctional(
                "non-finite coefficient".into(),
            ));
        }
        Ok(BellFunctional {
            name: name.into(),
            scenario,
            form: Form::CollinsGisin,
            cg: coefficients,
            classical_bound: None,
            quantum_bound: None,
        })
    }

    pub fn with_bounds(mut self, classical: Option<f64>, quantum: Option<f64>) -> Self {
        self.classical_bound = classical;
        self.quantum_bound = quantum;
        self
    }

    /// Same functional with only the Collins–Gisin form retained.
    pub fn to_collins_gisin(&self) -> BellFunctional {
        BellFunctional {
            form: Form::CollinsGisin,
            ..self.clone()
        }
    }

    pub fn cg_coefficients(&self) -> &[f64] {
        &self.cg
    }

    pub fn offset(&self) -> f64 {
        self.cg[0]
    }

    /// Evaluates in the stored form: full probabilities when present.
    pub fn evaluate(&self, behavior: &Behavior) -> Result<f64, ScenarioError> {
        self.check_scenario(&behavior.scenario)?;
        match &self.form {
            Form::Full { terms, offset } => {
                let mut acc = *offset * behavior.coordinates[0];
                for t in terms {
                    acc += t.value * behavior.probability(&t.outcomes, &t.settings)?;
                }
                Ok(acc)
            }
            Form::CollinsGisin => Ok(self.evaluate_cg(behavior)),
        }
    }

    /// Dot product with the Collins–Gisin coordinates.
    pub fn evaluate_cg(&self, behavior: &Behavior) -> f64 {
        self.cg
            .iter()
            .zip(&behavior.coordinates)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn check_scenario(&self, other: &Scenario) -> Result<(), ScenarioError> {
        if &self.scenario != other {
            return Err(ScenarioError::Mismatch(format!(
                "functional '{}' lives in {:?}, got {:?}",
                self.name,
                self.scenario.outcome_table(),
                other.outcome_table()
            )));
        }
        Ok(())
    }

    /// Upper bound on `|I . P|` over normalised behaviors.
    pub fn coefficient_norm(&self) -> f64 {
        self.cg.iter().map(|c| c.abs()).sum()
    }

    /// True when relabelling parties by `perm` leaves every coefficient unchanged.
    pub fn is_invariant_under(&self, perm: &[usize]) -> bool {
        if !super::is_permutation(perm, self.scenario.parties())
            || !self.scenario.is_invariant_under(perm)
        {
            return false;
        }
        let scale = 1.0 + self.coefficient_norm();
        (0..self.cg.len()).all(|i| {
            let loc = self.scenario.cg_decode(i);
            let mut image = vec![0; loc.len()];
            for (s, &l) in loc.iter().enumerate() {
                image[perm[s]] = l;
            }
            let j = self.scenario.cg_index(&image);
            (self.cg[i] - self.cg[j]).abs() <= 1e-12 * scale
        })
    }
}
