use super::{Scenario, ScenarioError};
use serde::{Deserialize, Serialize};

/// Point of the Collins–Gisin space: `coordinates[0]` is the normalisation
/// (1 for a behavior), the rest are marginal and joint probabilities of
/// retained outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Behavior {
    pub scenario: Scenario,
    pub coordinates: Vec<f64>,
}

/// Signed Collins–Gisin expansion of a full probability `P(a|x)`.
///
/// A dropped outcome is rewritten as `1 - sum of retained outcomes`.
pub(crate) fn expand_full(
    scenario: &Scenario,
    outcomes: &[usize],
    settings: &[usize],
) -> Result<Vec<(usize, f64)>, ScenarioError> {
    let n = scenario.parties();
    if outcomes.len() != n || settings.len() != n {
        return Err(ScenarioError::MalformedFunctional(format!(
            "term index has {} outcomes and {} settings for {n} parties",
            outcomes.len(),
            settings.len()
        )));
    }
    let mut per_party: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
    for s in 0..n {
        let x = settings[s];
        let a = outcomes[s];
        if x >= scenario.settings(s) || a >= scenario.outcomes(s, x) {
            return Err(ScenarioError::MalformedFunctional(format!(
                "party {s}: outcome {a} of setting {x} is out of range"
            )));
        }
        let d = scenario.outcomes(s, x);
        if a + 1 < d {
            per_party.push(vec![(scenario.local_index(s, x, a).unwrap(), 1.0)]);
        } else {
            let mut v = vec![(0, 1.0)];
            v.extend((0..d - 1).map(|b| (scenario.local_index(s, x, b).unwrap(), -1.0)));
            per_party.push(v);
        }
    }
    let mut out = vec![(0usize, 1.0f64)];
    for s in 0..n {
        let size = scenario.local_size(s);
        let mut next = Vec::with_capacity(out.len() * per_party[s].len());
        for &(idx, sign) in &out {
            for &(l, t) in &per_party[s] {
                next.push((idx * size + l, sign * t));
            }
        }
        out = next;
    }
    Ok(out)
}

impl Behavior {
    pub fn new(scenario: Scenario, coordinates: Vec<f64>) -> Result<Self, ScenarioError> {
        if coordinates.len() != scenario.cg_len() {
            return Err(ScenarioError::Mismatch(format!(
                "{} coordinates for a scenario with {}",
                coordinates.len(),
                scenario.cg_len()
            )));
        }
        Ok(Behavior {
            scenario,
            coordinates,
        })
    }

    /// Full probability `P(a1..an | x1..xn)`.
    pub fn probability(
        &self,
        outcomes: &[usize],
        settings: &[usize],
    ) -> Result<f64, ScenarioError> {
        Ok(expand_full(&self.scenario, outcomes, settings)?
            .into_iter()
            .map(|(i, w)| w * self.coordinates[i])
            .sum())
    }

    /// Every full probability as `(outcomes, settings, p)`, settings-major.
    pub fn full_table(&self) -> Vec<(Vec<usize>, Vec<usize>, f64)> {
        let sc = &self.scenario;
        let n = sc.parties();
        let mut rows = Vec::new();
        for_each_index(&(0..n).map(|s| sc.settings(s)).collect::<Vec<_>>(), |x| {
            let dims: Vec<usize> = (0..n).map(|s| sc.outcomes(s, x[s])).collect();
            for_each_index(&dims, |a| {
                let p = self.probability(a, x).expect("indices in range");
                rows.push((a.to_vec(), x.to_vec(), p));
            });
        });
        rows
    }

    /// CSV with one column per party outcome, one per setting, then `p`.
    pub fn to_csv(&self) -> String {
        let n = self.scenario.parties();
        let mut out = String::new();
        let mut head: Vec<String> = (0..n).map(|s| format!("a{s}")).collect();
        head.extend((0..n).map(|s| format!("x{s}")));
        head.push("p".into());
        out.push_str(&head.join(","));
        out.push('\n');
        for (a, x, p) in self.full_table() {
            let mut cells: Vec<String> = a.iter().chain(&x).map(|v| v.to_string()).collect();
            cells.push(format!("{p:.15e}"));
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Calls `f` on every index vector of the given shape, last entry fastest.
pub(crate) fn for_each_index(dims: &[usize], mut f: impl FnMut(&[usize])) {
    if dims.contains(&0) {
        return;
    }
    let mut idx = vec![0; dims.len()];
    loop {
        f(&idx);
        let mut k = dims.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < dims[k] {
                break;
            }
            idx[k] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_behavior_table() {
        let sc = Scenario::uniform(2, 2, 3).unwrap();
        let mut cg = vec![0.0; sc.cg_len()];
        for i in 0..sc.cg_len() {
            let loc = sc.cg_decode(i);
            let k = loc.iter().filter(|&&l| l != 0).count();
            cg[i] = (1.0f64 / 3.0).powi(k as i32);
        }
        let b = Behavior::new(sc, cg).unwrap();
        let table = b.full_table();
        assert_eq!(table.len(), 4 * 9);
        for (_, _, p) in table {
            assert!((p - 1.0 / 9.0).abs() < 1e-14);
        }
    }

    #[test]
    fn expansion_of_dropped_outcome() {
        let sc = Scenario::uniform(1, 1, 3).unwrap();
        let e = expand_full(&sc, &[2], &[0]).unwrap();
        assert_eq!(e, vec![(0, 1.0), (1, -1.0), (2, -1.0)]);
        assert!(expand_full(&sc, &[3], &[0]).is_err());
    }
}
