//! JSON inequality files.
//!
//! ```json
//! {
//!   "name": "CHSH",
//!   "scenario": { "outcomes": [[2, 2], [2, 2]] },
//!   "form": "full",
//!   "terms": [ { "index": [0, 0, 0, 0], "value": 1.0 } ],
//!   "offset": 0.0
//! }
//! ```
//!
//! `index` is `[a_1, .., a_n, x_1, .., x_n]`. In the `collins_gisin` form a
//! party that is marginalised out carries `null` in both its slots, and every
//! other outcome must be a retained one.

use super::{BellFunctional, FullTerm, Scenario, ScenarioError};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FileForm {
    Full,
    #[serde(rename = "cg", alias = "collins_gisin")]
    CollinsGisin,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileTerm {
    pub index: Vec<Option<usize>>,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InequalityFile {
    pub name: String,
    pub scenario: Scenario,
    pub form: FileForm,
    #[serde(alias = "coefficients")]
    pub terms: Vec<FileTerm>,
    #[serde(default)]
    pub offset: f64,
    #[serde(default)]
    pub classical_bound: Option<f64>,
    #[serde(default)]
    pub quantum_bound: Option<f64>,
}

pub fn parse_inequality(text: &str) -> Result<BellFunctional, ScenarioError> {
    let file: InequalityFile = serde_json::from_str(text)
        .map_err(|e| ScenarioError::MalformedFunctional(e.to_string()))?;
    file.into_functional()
}

pub fn read_inequality(path: &Path) -> Result<BellFunctional, ScenarioError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ScenarioError::Io(format!("{}: {e}", path.display())))?;
    parse_inequality(&text)
}

impl InequalityFile {
    pub fn into_functional(self) -> Result<BellFunctional, ScenarioError> {
        let sc = self.scenario;
        let n = sc.parties();
        for t in &self.terms {
            if t.index.len() != 2 * n {
                return Err(ScenarioError::MalformedFunctional(format!(
                    "term index of length {} for {n} parties",
                    t.index.len()
                )));
            }
        }
        let f = match self.form {
            FileForm::Full => {
                let mut terms = Vec::with_capacity(self.terms.len());
                for t in &self.terms {
                    let idx: Option<Vec<usize>> = t.index.iter().copied().collect();
                    let idx = idx.ok_or_else(|| {
                        ScenarioError::MalformedFunctional("null index in a full-form term".into())
                    })?;
                    terms.push(FullTerm {
                        outcomes: idx[..n].to_vec(),
                        settings: idx[n..].to_vec(),
                        value: t.value,
                    });
                }
                BellFunctional::from_full(self.name, sc, terms, self.offset)?
            }
            FileForm::CollinsGisin => {
                let mut cg = vec![0.0; sc.cg_len()];
                cg[0] += self.offset;
                for t in &self.terms {
                    let mut locals = vec![0; n];
                    for s in 0..n {
                        locals[s] = match (t.index[s], t.index[n + s]) {
                            (None, None) => 0,
                            (Some(a), Some(x)) => sc.local_index(s, x, a).ok_or_else(|| {
                                ScenarioError::MalformedFunctional(format!(
                                    "party {s}: ({a}|{x}) is not a retained outcome"
                                ))
                            })?,
                            _ => {
                                return Err(ScenarioError::MalformedFunctional(format!(
                                    "party {s}: outcome and setting must both be null or both set"
                                )))
                            }
                        };
                    }
                    cg[sc.cg_index(&locals)] += t.value;
                }
                BellFunctional::from_collins_gisin(self.name, sc, cg)?
            }
        };
        Ok(f.with_bounds(self.classical_bound, self.quantum_bound))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cg_file_with_marginal() {
        let text = r#"{"name":"t","scenario":{"outcomes":[[2],[2]]},"form":"collins_gisin",
            "terms":[{"index":[0,null,0,null],"value":-1},{"index":[0,0,0,0],"value":1}],"offset":0.5}"#;
        let f = parse_inequality(text).unwrap();
        assert_eq!(f.cg_coefficients(), &[0.5, 0.0, -1.0, 1.0]);
    }

    #[test]
    fn out_of_range_is_malformed() {
        let text = r#"{"name":"t","scenario":{"outcomes":[[2],[2]]},"form":"full",
            "terms":[{"index":[0,2,0,0],"value":1}]}"#;
        assert!(matches!(
            parse_inequality(text),
            Err(ScenarioError::MalformedFunctional(_))
        ));
        let text = r#"{"name":"t","scenario":{"outcomes":[[2],[2]]},"form":"collins_gisin",
            "terms":[{"index":[1,0,0,0],"value":1}]}"#;
        assert!(parse_inequality(text).is_err());
    }

    #[test]
    fn short_form_name_and_redundant_counts() {
        let text = r#"{"name":"t","scenario":{"parties":2,"settings":[1,1],"outcomes":[[2],[2]]},"form":"cg",
            "coefficients":[{"index":[0,0,0,0],"value":1}]}"#;
        assert_eq!(
            parse_inequality(text).unwrap().cg_coefficients(),
            &[0.0, 0.0, 0.0, 1.0]
        );
        let text =
            r#"{"name":"t","scenario":{"parties":3,"outcomes":[[2],[2]]},"form":"cg","terms":[]}"#;
        assert!(parse_inequality(text).is_err());
        let text = r#"{"name":"t","scenario":{"settings":[2,1],"outcomes":[[2],[2]]},"form":"cg","terms":[]}"#;
        assert!(parse_inequality(text).is_err());
    }
}
