//! Bell scenarios, behaviors in Collins–Gisin coordinates and Bell functionals.

mod behavior;
mod file;
mod functional;
mod library;

pub use behavior::Behavior;
pub use file::{parse_inequality, read_inequality, InequalityFile};
pub use functional::{BellFunctional, Form, FullTerm};
pub use library::{builtin, builtin_names, load, InequalityRecord, Provenance};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("malformed scenario: {0}")]
    MalformedScenario(String),
    #[error("malformed functional: {0}")]
    MalformedFunctional(String),
    #[error("scenario mismatch: {0}")]
    Mismatch(String),
    #[error("unknown inequality '{name}'; built-ins are: {known}")]
    UnknownInequality { name: String, known: String },
    #[error("cannot read inequality file: {0}")]
    Io(String),
}

/// Parties, settings per party and outcomes per setting.
///
/// Local Collins–Gisin index of a party: 0 is the identity, then one entry per
/// (setting, retained outcome), ordered by setting then outcome. The last
/// outcome of every setting is dropped.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "ScenarioRepr", into = "ScenarioRepr")]
pub struct Scenario {
    outcomes: Vec<Vec<usize>>,
    offsets: Vec<Vec<usize>>,
    local_sizes: Vec<usize>,
}

/// `parties` and `settings` are redundant with `outcomes`; when present they
/// must agree with it.
#[derive(Serialize, Deserialize)]
struct ScenarioRepr {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    parties: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    settings: Option<Vec<usize>>,
    outcomes: Vec<Vec<usize>>,
}

impl TryFrom<ScenarioRepr> for Scenario {
    type Error = ScenarioError;
    fn try_from(r: ScenarioRepr) -> Result<Self, ScenarioError> {
        if r.parties.is_some_and(|n| n != r.outcomes.len()) {
            return Err(ScenarioError::MalformedScenario(format!(
                "parties = {} but outcomes lists {}",
                r.parties.unwrap_or_default(),
                r.outcomes.len()
            )));
        }
        if let Some(settings) = &r.settings {
            let actual: Vec<usize> = r.outcomes.iter().map(Vec::len).collect();
            if *settings != actual {
                return Err(ScenarioError::MalformedScenario(format!(
                    "settings = {settings:?} but outcomes gives {actual:?}"
                )));
            }
        }
        Scenario::new(r.outcomes)
    }
}

impl From<Scenario> for ScenarioRepr {
    fn from(s: Scenario) -> Self {
        ScenarioRepr {
            parties: Some(s.outcomes.len()),
            settings: Some(s.outcomes.iter().map(Vec::len).collect()),
            outcomes: s.outcomes,
        }
    }
}

impl Scenario {
    /// `outcomes[party][setting]` is the number of outcomes of that setting.
    pub fn new(outcomes: Vec<Vec<usize>>) -> Result<Self, ScenarioError> {
        if outcomes.is_empty() {
            return Err(ScenarioError::MalformedScenario("no parties".into()));
        }
        for (s, settings) in outcomes.iter().enumerate() {
            if settings.is_empty() {
                return Err(ScenarioError::MalformedScenario(format!(
                    "party {s} has no settings"
                )));
            }
            if let Some(x) = settings.iter().position(|&d| d < 2) {
                return Err(ScenarioError::MalformedScenario(format!(
                    "party {s} setting {x} has fewer than two outcomes"
                )));
            }
        }
        let mut offsets = Vec::with_capacity(outcomes.len());
        let mut local_sizes = Vec::with_capacity(outcomes.len());
        for settings in &outcomes {
            let mut off = Vec::with_capacity(settings.len());
            let mut next = 1;
            for &d in settings {
                off.push(next);
                next += d - 1;
            }
            offsets.push(off);
            local_sizes.push(next);
        }
        Ok(Scenario {
            outcomes,
            offsets,
            local_sizes,
        })
    }

    /// Every party has `settings` settings with `outcomes` outcomes each.
    pub fn uniform(
        parties: usize,
        settings: usize,
        outcomes: usize,
    ) -> Result<Self, ScenarioError> {
        Scenario::new(vec![vec![outcomes; settings]; parties])
    }

    pub fn parties(&self) -> usize {
        self.outcomes.len()
    }

    pub fn settings(&self, party: usize) -> usize {
        self.outcomes[party].len()
    }

    pub fn outcomes(&self, party: usize, setting: usize) -> usize {
        self.outcomes[party][setting]
    }

    pub fn outcome_table(&self) -> &[Vec<usize>] {
        &self.outcomes
    }

    /// Number of local Collins–Gisin coordinates of a party, identity included.
    pub fn local_size(&self, party: usize) -> usize {
        self.local_sizes[party]
    }

    /// Local index of a retained outcome; `None` for the dropped last outcome
    /// or anything out of range.
    pub fn local_index(&self, party: usize, setting: usize, outcome: usize) -> Option<usize> {
        let d = *self.outcomes.get(party)?.get(setting)?;
        (outcome + 1 < d).then(|| self.offsets[party][setting] + outcome)
    }

    /// Inverse of [`Scenario::local_index`]; `None` for the identity.
    pub fn local_decode(&self, party: usize, index: usize) -> Option<(usize, usize)> {
        if index == 0 || index >= self.local_sizes[party] {
            return None;
        }
        let off = &self.offsets[party];
        let x = off.partition_point(|&o| o <= index) - 1;
        Some((x, index - off[x]))
    }

    /// Length of the Collins–Gisin vector, constant coordinate included.
    pub fn cg_len(&self) -> usize {
        self.local_sizes.iter().product()
    }

    /// Mixed-radix index with party 0 most significant.
    pub fn cg_index(&self, locals: &[usize]) -> usize {
        debug_assert_eq!(locals.len(), self.parties());
        locals
            .iter()
            .zip(&self.local_sizes)
            .fold(0, |acc, (&l, &n)| acc * n + l)
    }

    pub fn cg_decode(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.parties()];
        for s in (0..self.parties()).rev() {
            out[s] = index % self.local_sizes[s];
            index /= self.local_sizes[s];
        }
        out
    }

    /// Same shape after relabelling parties by `perm` (party `s` becomes `perm[s]`).
    pub fn is_invariant_under(&self, perm: &[usize]) -> bool {
        perm.len() == self.parties()
            && (0..self.parties()).all(|s| self.outcomes[s] == self.outcomes[perm[s]])
    }
}

/// Checks that `perm` is a permutation of `0..n`.
pub(crate) fn is_permutation(perm: &[usize], n: usize) -> bool {
    if perm.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return false;
        }
        seen[p] = true;
    }
    true
}
