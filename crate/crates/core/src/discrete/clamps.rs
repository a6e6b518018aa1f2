use super::space::{Value, VarSpace};
use crate::error::{Error, Result};

/// Evidence `V = v`: a partial assignment, sorted by variable id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Clamps(Vec<(usize, Value)>);

impl Clamps {
    pub fn none() -> Self {
        Self(Vec::new())
    }

    pub fn new(space: &VarSpace, mut pairs: Vec<(usize, Value)>) -> Result<Self> {
        pairs.sort_unstable_by_key(|&(v, _)| v);
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidConfig(format!(
                    "variable {} clamped twice",
                    w[0].0
                )));
            }
        }
        for &(var, value) in &pairs {
            space.check_var(var)?;
            if value as usize >= space.card(var) {
                return Err(Error::ValueOutOfRange {
                    var,
                    value: value as usize,
                    card: space.card(var),
                });
            }
        }
        Ok(Self(pairs))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, Value)> + '_ {
        self.0.iter().copied()
    }

    pub fn vars(&self) -> Vec<usize> {
        self.0.iter().map(|&(v, _)| v).collect()
    }

    pub fn value_of(&self, var: usize) -> Option<Value> {
        self.0
            .binary_search_by_key(&var, |&(v, _)| v)
            .ok()
            .map(|k| self.0[k].1)
    }

    /// `mask[i]` is true when variable `i` is free (not clamped).
    pub fn free_mask(&self, n: usize) -> Vec<bool> {
        let mut mask = vec![true; n];
        for &(v, _) in &self.0 {
            mask[v] = false;
        }
        mask
    }

    pub fn apply(&self, state: &mut [Value]) {
        for &(v, x) in &self.0 {
            state[v] = x;
        }
    }

    pub fn matches(&self, state: &[Value]) -> bool {
        self.0.iter().all(|&(v, x)| state[v] == x)
    }
}
