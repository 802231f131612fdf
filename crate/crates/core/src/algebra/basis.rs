use super::{AlgebraError, OperatorWord};
use crate::scenario::Scenario;
use serde::{Deserialize, Serialize};

/// Hierarchy level: all canonical words up to `level` letters per party,
/// plus optional extra words appended per party.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelSpec {
    pub level: usize,
    pub extra: Vec<Vec<OperatorWord>>,
}

impl LevelSpec {
    pub fn full(level: usize) -> Self {
        LevelSpec {
            level,
            extra: Vec::new(),
        }
    }

    pub fn with_extra(level: usize, extra: Vec<Vec<OperatorWord>>) -> Self {
        LevelSpec { level, extra }
    }

    pub fn label(&self) -> String {
        let k: usize = self.extra.iter().map(Vec::len).sum();
        if k == 0 {
            self.level.to_string()
        } else {
            format!("{}+{k}", self.level)
        }
    }
}

/// Per-party word lists. The identity is always first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonomialBasis {
    pub scenario: Scenario,
    pub level: LevelSpec,
    pub words: Vec<Vec<OperatorWord>>,
}

impl MonomialBasis {
    pub fn sizes(&self) -> Vec<usize> {
        self.words.iter().map(Vec::len).collect()
    }

    /// Side of the tensor-product moment matrix.
    pub fn side(&self) -> usize {
        self.words.iter().map(Vec::len).product()
    }
}

fn check_word(scenario: &Scenario, w: &OperatorWord) -> Result<(), AlgebraError> {
    if w.party >= scenario.parties() {
        return Err(AlgebraError::InvalidWord(format!(
            "party {} out of range",
            w.party
        )));
    }
    if w.is_zero() {
        return Err(AlgebraError::InvalidWord(
            "the zero word cannot be a basis element".into(),
        ));
    }
    for &(x, a) in w.letters() {
        if scenario.local_index(w.party, x, a).is_none() {
            return Err(AlgebraError::InvalidWord(format!(
                "party {}: x{x}a{a} is not a retained projector",
                w.party
            )));
        }
    }
    Ok(())
}

pub fn generate_basis(
    scenario: &Scenario,
    level: &LevelSpec,
) -> Result<MonomialBasis, AlgebraError> {
    if level.level == 0 {
        return Err(AlgebraError::InvalidLevel(
            "level must be at least 1".into(),
        ));
    }
    if !level.extra.is_empty() && level.extra.len() != scenario.parties() {
        return Err(AlgebraError::InvalidLevel(format!(
            "extra words given for {} parties, scenario has {}",
            level.extra.len(),
            scenario.parties()
        )));
    }
    let mut words = Vec::with_capacity(scenario.parties());
    for s in 0..scenario.parties() {
        let letters: Vec<(usize, usize)> = (0..scenario.settings(s))
            .flat_map(|x| (0..scenario.outcomes(s, x) - 1).map(move |a| (x, a)))
            .collect();
        let mut list = vec![OperatorWord::identity(s)];
        let mut frontier = vec![Vec::<(usize, usize)>::new()];
        for _ in 0..level.level {
            let mut next = Vec::new();
            for w in &frontier {
                for &l in &letters {
                    if w.last().is_some_and(|p| p.0 == l.0) {
                        continue;
                    }
                    let mut v = w.clone();
                    v.push(l);
                    next.push(v);
                }
            }
            list.extend(next.iter().map(|v| OperatorWord::from_letters(s, v)));
            frontier = next;
        }
        if let Some(extra) = level.extra.get(s) {
            for w in extra {
                if w.party != s {
                    return Err(AlgebraError::InvalidWord(format!(
                        "word of party {} listed under party {s}",
                        w.party
                    )));
                }
                check_word(scenario, w)?;
                if !list.contains(w) {
                    list.push(w.clone());
                }
            }
        }
        words.push(list);
    }
    Ok(MonomialBasis {
        scenario: scenario.clone(),
        level: level.clone(),
        words,
    })
}

#[derive(Deserialize)]
struct ExtraFile {
    words: Vec<Vec<String>>,
}

/// Parses `{"words": [["x0a0 x1a0", ...], ...]}`, one list per party.
pub fn parse_extra_words(text: &str) -> Result<Vec<Vec<OperatorWord>>, AlgebraError> {
    let f: ExtraFile =
        serde_json::from_str(text).map_err(|e| AlgebraError::InvalidWord(e.to_string()))?;
    f.words
        .iter()
        .enumerate()
        .map(|(s, list)| list.iter().map(|w| OperatorWord::parse(s, w)).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn word_counts() {
        let chsh = Scenario::uniform(2, 2, 2).unwrap();
        let b = generate_basis(&chsh, &LevelSpec::full(1)).unwrap();
        assert_eq!(b.sizes(), vec![3, 3]);
        let i3322 = Scenario::uniform(2, 3, 2).unwrap();
        assert_eq!(
            generate_basis(&i3322, &LevelSpec::full(2)).unwrap().sizes(),
            vec![10, 10]
        );
        let tri = Scenario::uniform(3, 2, 2).unwrap();
        let b = generate_basis(&tri, &LevelSpec::full(3)).unwrap();
        assert_eq!(b.sizes(), vec![7, 7, 7]);
        assert_eq!(b.side(), 343);
        assert_eq!(
            generate_basis(&i3322, &LevelSpec::full(3)).unwrap().sizes()[0],
            22
        );
    }

    #[test]
    fn ordered_by_length_then_letters() {
        let sc = Scenario::uniform(1, 2, 3).unwrap();
        let b = generate_basis(&sc, &LevelSpec::full(2)).unwrap();
        for w in b.words[0].windows(2) {
            assert!(w[0] < w[1]);
        }
    }

    #[test]
    fn extra_words() {
        let sc = Scenario::uniform(2, 2, 2).unwrap();
        let extra = parse_extra_words(r#"{"words": [["x0a0 x1a0", "x0a0"], []]}"#).unwrap();
        let b = generate_basis(&sc, &LevelSpec::with_extra(1, extra)).unwrap();
        assert_eq!(b.sizes(), vec![4, 3]);
        assert_eq!(b.level.label(), "1+2");
        let bad = vec![vec![OperatorWord::from_letters(0, &[(0, 1)])], vec![]];
        assert!(generate_basis(&sc, &LevelSpec::with_extra(1, bad)).is_err());
        assert!(generate_basis(&sc, &LevelSpec::full(0)).is_err());
    }
}
