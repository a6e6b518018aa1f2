//! Conditional probability tables and node-selection weights.

use crate::discrete::{JointTable, Value, VarSpace};
use crate::error::{Error, Result};

const ROW_TOLERANCE: f64 = 1e-9;

/// Conditional probability table `θ_i(X_i | Y_i)` for one node.
///
/// Rows are indexed by the mixed-radix index of the input assignment, with
/// the first listed input as the most significant digit. A row may be
/// undefined when it was estimated from data that never showed its input
/// assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    child: usize,
    child_card: usize,
    inputs: Vec<usize>,
    input_cards: Vec<usize>,
    probs: Vec<f64>,
    defined: Vec<bool>,
}

impl Cpt {
    /// Builds a table from explicit rows; `None` marks an undefined row.
    pub fn new(
        space: &VarSpace,
        child: usize,
        inputs: Vec<usize>,
        rows: Vec<Option<Vec<f64>>>,
    ) -> Result<Self> {
        space.check_var(child)?;
        let mut seen = vec![false; space.len()];
        for &v in &inputs {
            space.check_var(v)?;
            if v == child {
                return Err(invalid(child, "child listed among its own inputs"));
            }
            if seen[v] {
                return Err(invalid(child, format!("input {v} listed twice")));
            }
            seen[v] = true;
        }
        let child_card = space.card(child);
        let input_cards: Vec<usize> = inputs.iter().map(|&v| space.card(v)).collect();
        let n_rows = input_cards
            .iter()
            .try_fold(1usize, |acc, &c| acc.checked_mul(c))
            .ok_or_else(|| invalid(child, "input configuration count overflows"))?;
        if rows.len() != n_rows {
            return Err(invalid(
                child,
                format!("{} rows given, inputs need {n_rows}", rows.len()),
            ));
        }
        let mut probs = Vec::with_capacity(n_rows * child_card);
        let mut defined = Vec::with_capacity(n_rows);
        for (y, row) in rows.into_iter().enumerate() {
            match row {
                Some(r) => {
                    if r.len() != child_card {
                        return Err(invalid(
                            child,
                            format!("row {y} has {} entries, expected {child_card}", r.len()),
                        ));
                    }
                    if r.iter().any(|&p| p < 0.0 || !p.is_finite()) {
                        return Err(invalid(child, format!("row {y} has a negative entry")));
                    }
                    let sum: f64 = r.iter().sum();
                    if (sum - 1.0).abs() > ROW_TOLERANCE {
                        return Err(invalid(child, format!("row {y} sums to {sum}")));
                    }
                    probs.extend(r.iter().map(|p| p / sum));
                    defined.push(true);
                }
                None => {
                    probs.extend(std::iter::repeat_n(f64::NAN, child_card));
                    defined.push(false);
                }
            }
        }
        Ok(Self {
            child,
            child_card,
            inputs,
            input_cards,
            probs,
            defined,
        })
    }

    /// Table without inputs holding a single row.
    pub fn unconditional(space: &VarSpace, child: usize, row: Vec<f64>) -> Result<Self> {
        Self::new(space, child, Vec::new(), vec![Some(row)])
    }

    /// `p(X_child | X_inputs)` read off a joint table; rows with zero
    /// conditioning mass are undefined.
    pub fn from_joint(p: &JointTable, child: usize, inputs: Vec<usize>) -> Result<Self> {
        let cond = p.conditional(&[child], &inputs)?;
        Self::new(p.space(), child, inputs, cond.rows)
    }

    /// The full conditional `p(X_child | X_{-child})`, inputs in id order.
    pub fn full_conditional(p: &JointTable, child: usize) -> Result<Self> {
        p.space().check_var(child)?;
        let inputs = (0..p.space().len()).filter(|&v| v != child).collect();
        Self::from_joint(p, child, inputs)
    }

    pub fn child(&self) -> usize {
        self.child
    }

    pub fn child_card(&self) -> usize {
        self.child_card
    }

    pub fn inputs(&self) -> &[usize] {
        &self.inputs
    }

    pub fn input_cards(&self) -> &[usize] {
        &self.input_cards
    }

    pub fn n_rows(&self) -> usize {
        self.defined.len()
    }

    pub fn is_defined(&self, row: usize) -> bool {
        self.defined[row]
    }

    /// Row index of the input assignment found in a full state.
    #[inline]
    pub fn row_index(&self, state: &[Value]) -> usize {
        self.inputs
            .iter()
            .zip(&self.input_cards)
            .fold(0usize, |acc, (&v, &c)| acc * c + state[v] as usize)
    }

    pub fn row(&self, row: usize) -> Result<&[f64]> {
        if !self.defined[row] {
            return Err(Error::UndefinedRow {
                node: self.child,
                row,
            });
        }
        Ok(self.row_unchecked(row))
    }

    /// Row slice without the defined check (undefined rows hold NaN).
    #[inline]
    pub fn row_unchecked(&self, row: usize) -> &[f64] {
        &self.probs[row * self.child_card..(row + 1) * self.child_card]
    }

    /// Row for the inputs found in a full state.
    pub fn row_for(&self, state: &[Value]) -> Result<&[f64]> {
        self.row(self.row_index(state))
    }

    /// `θ(x_child | y)` read from a full state; NaN on undefined rows.
    #[inline]
    pub fn prob_at(&self, state: &[Value]) -> f64 {
        self.probs[self.row_index(state) * self.child_card + state[self.child] as usize]
    }

    /// Every defined entry is strictly positive and every row is defined.
    pub fn is_positive(&self) -> bool {
        self.defined.iter().all(|&d| d) && self.probs.iter().all(|&p| p > 0.0)
    }

    pub(crate) fn check_space(&self, space: &VarSpace) -> Result<()> {
        let ok = self.child < space.len()
            && space.card(self.child) == self.child_card
            && self
                .inputs
                .iter()
                .zip(&self.input_cards)
                .all(|(&v, &c)| v < space.len() && space.card(v) == c);
        if ok {
            Ok(())
        } else {
            Err(Error::SpaceMismatch)
        }
    }

    /// Iterates rows as `(row index, Option<row>)`.
    pub fn rows(&self) -> impl Iterator<Item = (usize, Option<&[f64]>)> + '_ {
        (0..self.n_rows()).map(move |y| (y, self.defined[y].then(|| self.row_unchecked(y))))
    }
}

fn invalid(node: usize, reason: impl Into<String>) -> Error {
    Error::InvalidCpt {
        node,
        reason: reason.into(),
    }
}

/// Node-selection probabilities `c_i` for random-order sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionWeights(Vec<f64>);

impl SelectionWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidConfig("no selection weights".into()));
        }
        if weights.iter().any(|&c| c < 0.0 || !c.is_finite()) {
            return Err(Error::InvalidConfig(
                "selection weights must be non-negative".into(),
            ));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "selection weights sum to {sum}, expected 1"
            )));
        }
        Ok(Self(weights))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    /// Weights restricted to the nodes with `fireable[i]`, rescaled to sum
    /// to one.
    pub fn restricted(&self, fireable: &[bool]) -> Result<Vec<f64>> {
        let total: f64 = self
            .0
            .iter()
            .zip(fireable)
            .filter(|(_, &f)| f)
            .map(|(c, _)| c)
            .sum();
        if !fireable.iter().any(|&f| f) {
            return Err(Error::AllClamped);
        }
        if total.is_nan() || total <= 0.0 {
            return Err(Error::InvalidConfig(
                "every unclamped node has zero selection weight".into(),
            ));
        }
        Ok(self
            .0
            .iter()
            .zip(fireable)
            .map(|(&c, &f)| if f { c / total } else { 0.0 })
            .collect())
    }
}
