use crate::error::{Error, Result};

/// A single variable value. Cardinalities are capped at `u16::MAX`.
pub type Value = u16;

/// Largest joint space a dense [`JointTable`](super::JointTable) may cover.
pub const MAX_DENSE_STATES: u64 = 1 << 26;

/// Ordered list of discrete variables `X_0 .. X_{n-1}` and their cardinalities.
///
/// States are indexed in mixed radix with variable 0 as the most significant
/// digit.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VarSpace {
    cards: Vec<usize>,
    strides: Vec<u64>,
    total: u64,
}

impl VarSpace {
    pub fn new(cards: Vec<usize>) -> Result<Self> {
        if cards.is_empty() {
            return Err(Error::InvalidSpace("no variables".into()));
        }
        let mut strides = vec![0u64; cards.len()];
        let mut total: u64 = 1;
        for (i, &card) in cards.iter().enumerate().rev() {
            if card < 2 {
                return Err(Error::InvalidSpace(format!(
                    "variable {i} has cardinality {card}, need at least 2"
                )));
            }
            if card > Value::MAX as usize {
                return Err(Error::InvalidSpace(format!(
                    "variable {i} has cardinality {card}, above {}",
                    Value::MAX
                )));
            }
            strides[i] = total;
            total = total
                .checked_mul(card as u64)
                .ok_or_else(|| Error::InvalidSpace("state count overflows u64".into()))?;
        }
        Ok(Self {
            cards,
            strides,
            total,
        })
    }

    /// `n` binary variables.
    pub fn binary(n: usize) -> Result<Self> {
        Self::new(vec![2; n])
    }

    pub fn len(&self) -> usize {
        self.cards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cards.is_empty()
    }

    pub fn card(&self, var: usize) -> usize {
        self.cards[var]
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn stride(&self, var: usize) -> u64 {
        self.strides[var]
    }

    pub fn total_states(&self) -> u64 {
        self.total
    }

    /// Number of states as a `usize`, provided a dense table over the space is allowed.
    pub fn dense_len(&self) -> Result<usize> {
        self.dense_len_within(MAX_DENSE_STATES)
    }

    pub(crate) fn dense_len_within(&self, limit: u64) -> Result<usize> {
        if self.total > limit {
            return Err(Error::TooLarge {
                states: self.total,
                limit,
            });
        }
        Ok(self.total as usize)
    }

    pub fn check_var(&self, var: usize) -> Result<()> {
        if var >= self.len() {
            Err(Error::UnknownVariable(var))
        } else {
            Ok(())
        }
    }

    /// Checks that `values` is a complete, in-range assignment.
    pub fn check_values(&self, values: &[Value]) -> Result<()> {
        if values.len() != self.len() {
            return Err(Error::InvalidSpace(format!(
                "assignment has {} values, space has {} variables",
                values.len(),
                self.len()
            )));
        }
        for (var, (&v, &card)) in values.iter().zip(&self.cards).enumerate() {
            if v as usize >= card {
                return Err(Error::ValueOutOfRange {
                    var,
                    value: v as usize,
                    card,
                });
            }
        }
        Ok(())
    }

    /// Mixed-radix index of a full assignment. Values are assumed in range.
    pub fn index_of(&self, values: &[Value]) -> u64 {
        values
            .iter()
            .zip(&self.strides)
            .map(|(&v, &s)| v as u64 * s)
            .sum()
    }

    pub fn decode(&self, index: u64) -> Vec<Value> {
        let mut out = vec![0; self.len()];
        self.decode_into(index, &mut out);
        out
    }

    pub fn decode_into(&self, index: u64, out: &mut [Value]) {
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = ((index / self.strides[i]) % self.cards[i] as u64) as Value;
        }
    }

    /// Value of `var` inside state `index`.
    pub fn digit(&self, index: u64, var: usize) -> usize {
        ((index / self.strides[var]) % self.cards[var] as u64) as usize
    }

    /// Space of the listed variables, in the listed order.
    pub fn subspace(&self, vars: &[usize]) -> Result<VarSpace> {
        for &v in vars {
            self.check_var(v)?;
        }
        VarSpace::new(vars.iter().map(|&v| self.cards[v]).collect())
    }

    /// Number of joint configurations of `vars` (1 for the empty set).
    pub fn configs(&self, vars: &[usize]) -> u64 {
        vars.iter().map(|&v| self.cards[v] as u64).product()
    }

    /// Mixed-radix index of the sub-assignment of `vars` read from a full assignment.
    pub fn sub_index(&self, vars: &[usize], values: &[Value]) -> usize {
        vars.iter()
            .fold(0usize, |acc, &v| acc * self.cards[v] + values[v] as usize)
    }

    /// Calls `f(state, projected)` for every state of the space, where
    /// `projected` is the mixed-radix index of the state's restriction to
    /// `vars` (in the listed order). Runs in amortised O(1) per state.
    pub(crate) fn for_each_projected(&self, vars: &[usize], mut f: impl FnMut(usize, usize)) {
        let n = self.len();
        let mut sub_stride = vec![0usize; n];
        let mut acc = 1usize;
        for &v in vars.iter().rev() {
            sub_stride[v] = acc;
            acc *= self.cards[v];
        }
        let total = self.total as usize;
        let mut digits = vec![0usize; n];
        let mut proj = 0usize;
        for state in 0..total {
            f(state, proj);
            for i in (0..n).rev() {
                digits[i] += 1;
                if digits[i] < self.cards[i] {
                    proj += sub_stride[i];
                    break;
                }
                digits[i] = 0;
                proj -= (self.cards[i] - 1) * sub_stride[i];
            }
        }
    }
}

/// A complete assignment of values to every variable of a [`VarSpace`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment(Vec<Value>);

impl Assignment {
    pub fn new(space: &VarSpace, values: Vec<Value>) -> Result<Self> {
        space.check_values(&values)?;
        Ok(Self(values))
    }

    pub fn values(&self) -> &[Value] {
        &self.0
    }

    pub fn into_values(self) -> Vec<Value> {
        self.0
    }
}

impl std::ops::Deref for Assignment {
    type Target = [Value];

    fn deref(&self) -> &[Value] {
        &self.0
    }
}

/// Checks a variable subset: ids known and no duplicates.
pub(crate) fn check_subset(space: &VarSpace, vars: &[usize]) -> Result<()> {
    let mut seen = vec![false; space.len()];
    for &v in vars {
        space.check_var(v)?;
        if seen[v] {
            return Err(Error::InvalidSpace(format!("variable {v} listed twice")));
        }
        seen[v] = true;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variable_zero_is_most_significant() {
        let s = VarSpace::new(vec![2, 3]).unwrap();
        assert_eq!(s.total_states(), 6);
        assert_eq!(s.index_of(&[1, 0]), 3);
        assert_eq!(s.index_of(&[0, 2]), 2);
        assert_eq!(s.decode(5), vec![1, 2]);
    }

    #[test]
    fn rejects_degenerate_cardinality() {
        assert!(VarSpace::new(vec![2, 1]).is_err());
        assert!(VarSpace::new(vec![]).is_err());
    }

    #[test]
    fn rejects_overflowing_space() {
        assert!(VarSpace::new(vec![2; 64]).is_err());
        assert!(VarSpace::new(vec![2; 63]).is_ok());
    }

    #[test]
    fn dense_guard() {
        let s = VarSpace::binary(27).unwrap();
        assert!(matches!(s.dense_len(), Err(Error::TooLarge { .. })));
        assert_eq!(VarSpace::binary(26).unwrap().dense_len().unwrap(), 1 << 26);
    }

    #[test]
    fn projection_matches_decode() {
        let s = VarSpace::new(vec![2, 3, 2, 4]).unwrap();
        let vars = [3, 0, 2];
        let mut seen = 0;
        s.for_each_projected(&vars, |state, proj| {
            let vals = s.decode(state as u64);
            assert_eq!(proj, s.sub_index(&vars, &vals));
            seen += 1;
        });
        assert_eq!(seen, 48);
    }

    #[test]
    fn assignment_checks_range() {
        let s = VarSpace::new(vec![2, 3]).unwrap();
        assert!(Assignment::new(&s, vec![1, 2]).is_ok());
        assert!(matches!(
            Assignment::new(&s, vec![2, 0]),
            Err(Error::ValueOutOfRange { var: 0, .. })
        ));
        assert!(Assignment::new(&s, vec![0]).is_err());
    }
}
