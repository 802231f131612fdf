//! Words in the local projector algebras and the monomial bases built from them.
//!
//! Letters of one party satisfy `P^2 = P` and `P_a P_b = 0` for two outcomes of
//! the same setting, so a canonical word never repeats a setting in adjacent
//! positions.

mod basis;

pub use basis::{generate_basis, parse_extra_words, LevelSpec, MonomialBasis};

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("letters of different parties in one word ({0} and {1})")]
    MixedParties(usize, usize),
    #[error("invalid level: {0}")]
    InvalidLevel(String),
    #[error("invalid word: {0}")]
    InvalidWord(String),
}

/// Projector `M_{outcome|setting}` of a party.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Generator {
    pub party: usize,
    pub setting: usize,
    pub outcome: usize,
}

/// Party-free letter `(setting, outcome)`.
pub type Letter = (usize, usize);

/// A reduced word of one party, or the zero operator.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OperatorWord {
    pub party: usize,
    letters: Vec<Letter>,
    zero: bool,
}

impl OperatorWord {
    pub fn identity(party: usize) -> Self {
        OperatorWord {
            party,
            letters: Vec::new(),
            zero: false,
        }
    }

    pub fn zero(party: usize) -> Self {
        OperatorWord {
            party,
            letters: Vec::new(),
            zero: true,
        }
    }

    /// Reduces a product of generators of `party`.
    pub fn reduce(party: usize, letters: &[Generator]) -> Result<Self, AlgebraError> {
        if let Some(g) = letters.iter().find(|g| g.party != party) {
            return Err(AlgebraError::MixedParties(party, g.party));
        }
        let l: Vec<Letter> = letters.iter().map(|g| (g.setting, g.outcome)).collect();
        Ok(Self::from_letters(party, &l))
    }

    /// Reduces a product of party-free letters.
    pub fn from_letters(party: usize, letters: &[Letter]) -> Self {
        match reduce_letters(letters.iter().copied()) {
            Some(letters) => OperatorWord {
                party,
                letters,
                zero: false,
            },
            None => OperatorWord::zero(party),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    pub fn is_identity(&self) -> bool {
        !self.zero && self.letters.is_empty()
    }

    /// Number of letters; zero for both the identity and the zero word.
    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn generators(&self) -> Vec<Generator> {
        self.letters
            .iter()
            .map(|&(setting, outcome)| Generator {
                party: self.party,
                setting,
                outcome,
            })
            .collect()
    }

    pub fn adjoint(&self) -> Self {
        let mut w = self.clone();
        w.letters.reverse();
        w
    }

    pub fn is_self_adjoint(&self) -> bool {
        self.zero || self.letters.iter().eq(self.letters.iter().rev())
    }

    /// Reduced `self * other`.
    pub fn mul(&self, other: &OperatorWord) -> Result<Self, AlgebraError> {
        if self.party != other.party {
            return Err(AlgebraError::MixedParties(self.party, other.party));
        }
        if self.zero || other.zero {
            return Ok(OperatorWord::zero(self.party));
        }
        Ok(
            match reduce_letters(self.letters.iter().chain(&other.letters).copied()) {
                Some(letters) => OperatorWord {
                    party: self.party,
                    letters,
                    zero: false,
                },
                None => OperatorWord::zero(self.party),
            },
        )
    }

    /// Parses the [`fmt::Display`] form: `1`, `0` or letters like `x0a1 x2a0`.
    pub fn parse(party: usize, text: &str) -> Result<Self, AlgebraError> {
        let t = text.trim();
        match t {
            "1" | "" => return Ok(OperatorWord::identity(party)),
            "0" => return Ok(OperatorWord::zero(party)),
            _ => {}
        }
        let mut letters = Vec::new();
        for tok in t.split_whitespace() {
            let bad = || AlgebraError::InvalidWord(format!("cannot parse letter '{tok}'"));
            let rest = tok.strip_prefix('x').ok_or_else(bad)?;
            let (x, a) = rest.split_once('a').ok_or_else(bad)?;
            letters.push((x.parse().map_err(|_| bad())?, a.parse().map_err(|_| bad())?));
        }
        Ok(OperatorWord::from_letters(party, &letters))
    }
}

/// Stack reduction; `None` when the product vanishes.
pub(crate) fn reduce_letters(letters: impl IntoIterator<Item = Letter>) -> Option<Vec<Letter>> {
    let mut out: Vec<Letter> = Vec::new();
    for l in letters {
        match out.last() {
            Some(&top) if top.0 == l.0 => {
                if top.1 != l.1 {
                    return None;
                }
            }
            _ => out.push(l),
        }
    }
    Some(out)
}

impl Ord for OperatorWord {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.party, self.zero, self.letters.len(), &self.letters).cmp(&(
            other.party,
            other.zero,
            other.letters.len(),
            &other.letters,
        ))
    }
}

impl PartialOrd for OperatorWord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for OperatorWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.zero {
            return write!(f, "0");
        }
        if self.letters.is_empty() {
            return write!(f, "1");
        }
        for (i, (x, a)) in self.letters.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "x{x}a{a}")?;
        }
        Ok(())
    }
}

/// `reduce(adjoint(col) ++ row)`, the key of moment-matrix cell `(row, col)`.
pub fn product_key(row: &OperatorWord, col: &OperatorWord) -> Result<OperatorWord, AlgebraError> {
    col.adjoint().mul(row)
}
