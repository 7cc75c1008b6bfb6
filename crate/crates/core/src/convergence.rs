//! Fixed points of promise operators on finite state spaces.
//!
//! An operator realizing promise `π` is a total map `Q → Q` given as a
//! lookup table. It is convergent when iterating it from any state reaches
//! a state it leaves unchanged.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_STATE_CAP: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConvergenceError {
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("operator `{op}` has no image for state `{state}`")]
    NonTotal { op: String, state: String },
    #[error("duplicate state `{0}`")]
    DuplicateState(String),
    #[error("{count} states exceed the cap of {cap}")]
    TooManyStates { count: usize, cap: usize },
    #[error("state space is empty")]
    EmptySpace,
    #[error("max_iter {max_iter} is below the state count {states}")]
    InsufficientIterations { max_iter: usize, states: usize },
    #[error("operators act on different state spaces")]
    SpaceMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct StateSpace {
    labels: Vec<String>,
}

impl TryFrom<Vec<String>> for StateSpace {
    type Error = ConvergenceError;
    fn try_from(labels: Vec<String>) -> Result<Self, ConvergenceError> {
        StateSpace::new(labels)
    }
}

impl From<StateSpace> for Vec<String> {
    fn from(s: StateSpace) -> Self {
        s.labels
    }
}

impl StateSpace {
    pub fn new(labels: Vec<String>) -> Result<Self, ConvergenceError> {
        Self::with_cap(labels, DEFAULT_STATE_CAP)
    }

    pub fn with_cap(labels: Vec<String>, cap: usize) -> Result<Self, ConvergenceError> {
        if labels.is_empty() {
            return Err(ConvergenceError::EmptySpace);
        }
        if labels.len() > cap {
            return Err(ConvergenceError::TooManyStates {
                count: labels.len(),
                cap,
            });
        }
        let mut seen = BTreeSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(ConvergenceError::DuplicateState(l.clone()));
            }
        }
        Ok(StateSpace { labels })
    }

    /// States `q0 … q(n-1)`.
    pub fn numbered(n: usize) -> Result<Self, ConvergenceError> {
        Self::new((0..n).map(|i| format!("q{i}")).collect())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Result<usize, ConvergenceError> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| ConvergenceError::UnknownState(label.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Operator {
    name: String,
    space: StateSpace,
    table: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvergenceVerdict {
    pub convergent: bool,
    /// Steps from each state to its fixed point; `None` where none is
    /// reached within the iteration budget.
    pub orbit_lengths: Vec<Option<usize>>,
}

impl Operator {
    /// Builds an operator from its state-transition map, which must be
    /// total over `space`.
    pub fn from_map(
        name: impl Into<String>,
        space: StateSpace,
        map: &BTreeMap<String, String>,
    ) -> Result<Self, ConvergenceError> {
        let name = name.into();
        for from in map.keys() {
            space.index_of(from)?;
        }
        let table = space
            .labels()
            .iter()
            .map(|q| match map.get(q) {
                Some(to) => space.index_of(to),
                None => Err(ConvergenceError::NonTotal {
                    op: name.clone(),
                    state: q.clone(),
                }),
            })
            .collect::<Result<_, _>>()?;
        Ok(Operator { name, space, table })
    }

    /// Builds from image indices; `table[i]` is the image of state `i`.
    pub fn from_table(name: impl Into<String>, space: StateSpace, table: Vec<usize>) -> Result<Self, ConvergenceError> {
        let name = name.into();
        if table.len() != space.len() {
            let state = space.labels().get(table.len()).cloned().unwrap_or_default();
            return Err(ConvergenceError::NonTotal { op: name, state });
        }
        if let Some(&bad) = table.iter().find(|&&t| t >= space.len()) {
            return Err(ConvergenceError::UnknownState(format!("#{bad}")));
        }
        Ok(Operator { name, space, table })
    }

    pub fn identity(space: StateSpace) -> Self {
        let table = (0..space.len()).collect();
        Operator {
            name: "identity".into(),
            space,
            table,
        }
    }

    pub fn constant(name: impl Into<String>, space: StateSpace, target: &str) -> Result<Self, ConvergenceError> {
        let t = space.index_of(target)?;
        let table = vec![t; space.len()];
        Ok(Operator {
            name: name.into(),
            space,
            table,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn table(&self) -> &[usize] {
        &self.table
    }

    pub fn to_map(&self) -> BTreeMap<String, String> {
        let l = self.space.labels();
        self.table
            .iter()
            .enumerate()
            .map(|(i, &t)| (l[i].clone(), l[t].clone()))
            .collect()
    }

    pub fn apply(&self, q: &str) -> Result<&str, ConvergenceError> {
        let i = self.space.index_of(q)?;
        Ok(&self.space.labels()[self.table[i]])
    }

    pub fn is_idempotent(&self) -> bool {
        self.table.iter().all(|&t| self.table[t] == t)
    }

    pub fn fixed_points(&self) -> BTreeSet<String> {
        self.table
            .iter()
            .enumerate()
            .filter(|&(i, &t)| i == t)
            .map(|(i, _)| self.space.labels()[i].clone())
            .collect()
    }

    /// Whether every orbit reaches a fixed point within `max_iter`
    /// applications. A finite orbit that reaches one does so within `|Q|-1`
    /// steps, so `max_iter ≥ |Q|` is required for the verdict to be exact.
    pub fn is_convergent(&self, max_iter: usize) -> Result<ConvergenceVerdict, ConvergenceError> {
        let n = self.table.len();
        if max_iter < n {
            return Err(ConvergenceError::InsufficientIterations { max_iter, states: n });
        }
        // Steps to a fixed point, memoized along each walk.
        let mut depth: Vec<Option<Option<usize>>> = vec![None; n];
        for start in 0..n {
            let mut path = Vec::new();
            let mut q = start;
            let tail = loop {
                if let Some(d) = depth[q] {
                    break d;
                }
                if self.table[q] == q {
                    depth[q] = Some(Some(0));
                    break Some(0);
                }
                if path.contains(&q) {
                    break None;
                }
                path.push(q);
                q = self.table[q];
            };
            for (k, &p) in path.iter().rev().enumerate() {
                depth[p] = Some(tail.map(|t| t + k + 1));
            }
        }
        let orbit_lengths: Vec<Option<usize>> = depth
            .into_iter()
            .map(|d| d.flatten().filter(|&l| l <= max_iter))
            .collect();
        Ok(ConvergenceVerdict {
            convergent: orbit_lengths.iter().all(Option::is_some),
            orbit_lengths,
        })
    }

    /// `other ∘ self`: apply `self`, then `other`.
    pub fn then(&self, other: &Operator) -> Result<Operator, ConvergenceError> {
        if self.space != other.space {
            return Err(ConvergenceError::SpaceMismatch);
        }
        Ok(Operator {
            name: format!("{}∘{}", other.name, self.name),
            space: self.space.clone(),
            table: self.table.iter().map(|&t| other.table[t]).collect(),
        })
    }

    pub fn commutes_with(&self, other: &Operator) -> bool {
        self.space == other.space && self.table.iter().zip(&other.table).all(|(&a, &b)| other.table[a] == self.table[b])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(labels: &[&str]) -> StateSpace {
        StateSpace::new(labels.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    fn two_cycle() -> Operator {
        Operator::from_table("swap", space(&["a", "b"]), vec![1, 0]).unwrap()
    }

    #[test]
    fn apply_examples() {
        let id = Operator::identity(space(&["a", "b", "c"]));
        assert_eq!(id.apply("b").unwrap(), "b");
        let c = Operator::constant("pi", space(&["a", "b", "q_pi"]), "q_pi").unwrap();
        assert_eq!(c.apply("a").unwrap(), "q_pi");
        assert_eq!(two_cycle().apply("a").unwrap(), "b");
        assert_eq!(two_cycle().apply("z"), Err(ConvergenceError::UnknownState("z".into())));
    }

    #[test]
    fn idempotence_examples() {
        assert!(Operator::identity(space(&["a", "b"])).is_idempotent());
        assert!(Operator::constant("pi", space(&["a", "b"]), "b").unwrap().is_idempotent());
        assert!(!two_cycle().is_idempotent());
    }

    #[test]
    fn convergence_examples() {
        let c = Operator::constant("pi", space(&["a", "b", "c"]), "c").unwrap();
        let v = c.is_convergent(3).unwrap();
        assert!(v.convergent);
        assert_eq!(v.orbit_lengths, [Some(1), Some(1), Some(0)]);
        let v = two_cycle().is_convergent(2).unwrap();
        assert!(!v.convergent);
        assert_eq!(v.orbit_lengths, [None, None]);
        assert!(two_cycle().is_convergent(1).is_err());
    }

    #[test]
    fn chains_and_tails() {
        // 0 → 1 → 2 → 2, 3 → 4 → 3
        let op = Operator::from_table("t", StateSpace::numbered(5).unwrap(), vec![1, 2, 2, 4, 3]).unwrap();
        let v = op.is_convergent(5).unwrap();
        assert_eq!(v.orbit_lengths, [Some(2), Some(1), Some(0), None, None]);
        assert_eq!(op.fixed_points(), BTreeSet::from(["q2".to_string()]));
    }

    #[test]
    fn fixed_point_examples() {
        let s = space(&["a", "b"]);
        assert_eq!(Operator::identity(s.clone()).fixed_points().len(), 2);
        assert_eq!(
            Operator::constant("pi", s, "b").unwrap().fixed_points(),
            BTreeSet::from(["b".to_string()])
        );
        assert!(two_cycle().fixed_points().is_empty());
    }

    #[test]
    fn map_construction() {
        let s = space(&["a", "b"]);
        let partial = BTreeMap::from([("a".to_string(), "b".to_string())]);
        assert!(matches!(
            Operator::from_map("p", s.clone(), &partial),
            Err(ConvergenceError::NonTotal { .. })
        ));
        let stray = BTreeMap::from([
            ("a".to_string(), "b".to_string()),
            ("b".to_string(), "b".to_string()),
            ("z".to_string(), "a".to_string()),
        ]);
        assert!(Operator::from_map("p", s.clone(), &stray).is_err());
        let ok = BTreeMap::from([
            ("a".to_string(), "b".to_string()),
            ("b".to_string(), "b".to_string()),
        ]);
        let op = Operator::from_map("p", s, &ok).unwrap();
        assert_eq!(op.to_map(), ok);
    }

    #[test]
    fn space_validation() {
        assert_eq!(StateSpace::new(vec![]), Err(ConvergenceError::EmptySpace));
        assert!(StateSpace::new(vec!["a".into(), "a".into()]).is_err());
        assert!(StateSpace::with_cap(vec!["a".into(), "b".into()], 1).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn table() -> impl Strategy<Value = Vec<usize>> {
            (1usize..12).prop_flat_map(|n| proptest::collection::vec(0..n, n))
        }

        proptest! {
            #[test]
            fn idempotent_converges_in_one_step(t in table()) {
                let op = Operator::from_table("t", StateSpace::numbered(t.len()).unwrap(), t).unwrap();
                if op.is_idempotent() {
                    let v = op.is_convergent(op.space().len()).unwrap();
                    prop_assert!(v.convergent);
                    prop_assert!(v.orbit_lengths.iter().all(|l| l.unwrap() <= 1));
                    let image: BTreeSet<String> = op.table().iter().map(|&i| op.space().labels()[i].clone()).collect();
                    prop_assert_eq!(op.fixed_points(), image);
                }
            }

            #[test]
            fn commuting_idempotents_compose(n in 1usize..8, picks in proptest::collection::vec((any::<u8>(), any::<u8>(), any::<u8>(), any::<u8>()), 8)) {
                // Idempotents as retractions onto a nonempty image.
                let retract = |mask: u8, target: &dyn Fn(usize) -> u8| -> Vec<usize> {
                    let image: Vec<usize> = (0..n).filter(|&i| i == 0 || mask >> i & 1 == 1).collect();
                    (0..n)
                        .map(|i| if image.contains(&i) { i } else { image[target(i) as usize % image.len()] })
                        .collect()
                };
                let a = retract(picks[0].0, &|i| picks[i].1);
                let b = retract(picks[0].2, &|i| picks[i].3);
                let s = StateSpace::numbered(n).unwrap();
                let x = Operator::from_table("x", s.clone(), a).unwrap();
                let y = Operator::from_table("y", s, b).unwrap();
                prop_assert!(x.is_idempotent() && y.is_idempotent());
                // Non-commuting pairs fall outside the hypothesis and are skipped.
                if x.commutes_with(&y) {
                    prop_assert!(x.then(&y).unwrap().is_convergent(n).unwrap().convergent);
                }
            }
        }
    }
}
