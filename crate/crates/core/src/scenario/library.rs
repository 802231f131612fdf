use super::{read_inequality, BellFunctional, FullTerm, Scenario, ScenarioError};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Provenance {
    BuiltIn,
    File(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityRecord {
    pub functional: BellFunctional,
    pub provenance: Provenance,
}

const NAMES: [&str; 4] = ["CHSH", "I3322", "I2233", "SVETLICHNY_I32"];

pub fn builtin_names() -> &'static [&'static str] {
    &NAMES
}

/// Looks up a built-in inequality by (case-insensitive) name.
pub fn builtin(name: &str) -> Result<InequalityRecord, ScenarioError> {
    let functional = match name.to_ascii_uppercase().as_str() {
        "CHSH" => chsh(),
        "I3322" => i3322(),
        "I2233" | "CGLMP3" => i2233(),
        "SVETLICHNY_I32" | "I32" | "SVETLICHNY" => svetlichny(),
        _ => {
            return Err(ScenarioError::UnknownInequality {
                name: name.to_string(),
                known: NAMES.join(", "),
            })
        }
    };
    Ok(InequalityRecord {
        functional,
        provenance: Provenance::BuiltIn,
    })
}

/// A built-in name, or else a path to an inequality file.
pub fn load(name_or_path: &str) -> Result<InequalityRecord, ScenarioError> {
    match builtin(name_or_path) {
        Ok(r) => Ok(r),
        Err(e) => {
            let p = Path::new(name_or_path);
            if p.is_file() {
                let functional = read_inequality(p)?;
                Ok(InequalityRecord {
                    functional,
                    provenance: Provenance::File(name_or_path.to_string()),
                })
            } else {
                Err(e)
            }
        }
    }
}

fn sign(k: usize) -> f64 {
    if k.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

fn chsh() -> BellFunctional {
    let sc = Scenario::uniform(2, 2, 2).unwrap();
    let mut terms = Vec::new();
    for x in 0..2 {
        for y in 0..2 {
            let s = if x == 1 && y == 1 { -1.0 } else { 1.0 };
            for a in 0..2 {
                for b in 0..2 {
                    terms.push(FullTerm {
                        outcomes: vec![a, b],
                        settings: vec![x, y],
                        value: s * sign(a + b),
                    });
                }
            }
        }
    }
    BellFunctional::from_full("CHSH", sc, terms, 0.0)
        .unwrap()
        .with_bounds(Some(2.0), Some(2.0 * std::f64::consts::SQRT_2))
}

fn i3322() -> BellFunctional {
    let sc = Scenario::uniform(2, 3, 2).unwrap();
    let mut cg = vec![0.0; sc.cg_len()];
    let a_marg = [-1.0, 0.0, 0.0];
    let b_marg = [-2.0, -1.0, 0.0];
    let joint = [[1.0, 1.0, 1.0], [1.0, 1.0, -1.0], [1.0, -1.0, 0.0]];
    for x in 0..3 {
        cg[sc.cg_index(&[1 + x, 0])] = a_marg[x];
        cg[sc.cg_index(&[0, 1 + x])] = b_marg[x];
        for y in 0..3 {
            cg[sc.cg_index(&[1 + x, 1 + y])] = joint[x][y];
        }
    }
    BellFunctional::from_collins_gisin("I3322", sc, cg)
        .unwrap()
        .with_bounds(Some(0.0), Some(0.25088))
}

fn i2233() -> BellFunctional {
    let sc = Scenario::uniform(2, 2, 3).unwrap();
    // (x, y, k, sign): sign * P(a = b + k mod 3 | x, y)
    let groups: [(usize, usize, usize, f64); 8] = [
        (0, 0, 0, 1.0),
        (1, 0, 2, 1.0),
        (1, 1, 0, 1.0),
        (0, 1, 0, 1.0),
        (0, 0, 2, -1.0),
        (1, 0, 0, -1.0),
        (1, 1, 2, -1.0),
        (0, 1, 1, -1.0),
    ];
    let mut terms = Vec::new();
    for (x, y, k, s) in groups {
        for b in 0..3 {
            let a = (b + k) % 3;
            terms.push(FullTerm {
                outcomes: vec![a, b],
                settings: vec![x, y],
                value: s / 3.0,
            });
        }
    }
    BellFunctional::from_full("I2233", sc, terms, -2.0 / 3.0)
        .unwrap()
        .with_bounds(Some(0.0), Some(((11.0f64 / 3.0).sqrt() - 1.0) / 3.0))
}

fn svetlichny() -> BellFunctional {
    let sc = Scenario::uniform(3, 2, 2).unwrap();
    let mut terms = Vec::new();
    for x in 0..2 {
        for y in 0..2 {
            for z in 0..2 {
                let s = if x + y + z == 0 || x + y + z == 3 {
                    -1.0
                } else {
                    1.0
                };
                for a in 0..2 {
                    for b in 0..2 {
                        for c in 0..2 {
                            terms.push(FullTerm {
                                outcomes: vec![a, b, c],
                                settings: vec![x, y, z],
                                value: s * sign(a + b + c),
                            });
                        }
                    }
                }
            }
        }
    }
    BellFunctional::from_full("SVETLICHNY_I32", sc, terms, 0.0)
        .unwrap()
        .with_bounds(Some(4.0), Some(4.0 * std::f64::consts::SQRT_2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_resolve() {
        for n in builtin_names() {
            let r = builtin(n).unwrap();
            assert_eq!(r.functional.name, *n);
        }
        let e = builtin("FOO").unwrap_err();
        assert!(e.to_string().contains("CHSH"));
    }

    #[test]
    fn chsh_collins_gisin_form() {
        let f = builtin("CHSH").unwrap().functional;
        // offset 0, marginals -2 or +2 shifted into joint terms
        let cg = f.cg_coefficients();
        let sc = &f.scenario;
        assert_eq!(cg[0], 2.0);
        assert_eq!(cg[sc.cg_index(&[1, 0])], -4.0);
        assert_eq!(cg[sc.cg_index(&[0, 1])], -4.0);
        assert_eq!(cg[sc.cg_index(&[1, 1])], 4.0);
        assert_eq!(cg[sc.cg_index(&[2, 2])], -4.0);
    }

    #[test]
    fn svetlichny_is_symmetric() {
        let f = builtin("SVETLICHNY_I32").unwrap().functional;
        assert!(f.is_invariant_under(&[1, 0, 2]));
        assert!(f.is_invariant_under(&[1, 2, 0]));
        let c = builtin("CHSH").unwrap().functional;
        assert!(c.is_invariant_under(&[1, 0]));
        let i = builtin("I3322").unwrap().functional;
        assert!(!i.is_invariant_under(&[1, 0]));
    }
}
