use super::space::{Value, VarSpace};
use crate::error::{Error, Result};

/// Rows of complete assignments over a [`VarSpace`], stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    space: VarSpace,
    values: Vec<Value>,
}

impl Dataset {
    pub fn new(space: VarSpace) -> Self {
        Self {
            space,
            values: Vec::new(),
        }
    }

    pub fn with_capacity(space: VarSpace, rows: usize) -> Self {
        let width = space.len();
        Self {
            space,
            values: Vec::with_capacity(rows * width),
        }
    }

    pub fn from_rows<R: AsRef<[Value]>>(space: VarSpace, rows: &[R]) -> Result<Self> {
        let mut d = Self::with_capacity(space, rows.len());
        for r in rows {
            d.push(r.as_ref())?;
        }
        Ok(d)
    }

    pub fn push(&mut self, row: &[Value]) -> Result<()> {
        self.space.check_values(row)?;
        self.values.extend_from_slice(row);
        Ok(())
    }

    /// Appends without validation; callers guarantee the row is in range.
    pub(crate) fn push_unchecked(&mut self, row: &[Value]) {
        debug_assert!(self.space.check_values(row).is_ok());
        self.values.extend_from_slice(row);
    }

    pub fn space(&self) -> &VarSpace {
        &self.space
    }

    /// Number of rows (N).
    pub fn len(&self) -> usize {
        self.values.len() / self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn row(&self, t: usize) -> &[Value] {
        let w = self.space.len();
        &self.values[t * w..(t + 1) * w]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[Value]> + '_ {
        self.values.chunks_exact(self.space.len())
    }

    /// The first `n` rows, for nested training sets.
    pub fn prefix(&self, n: usize) -> Result<Dataset> {
        if n > self.len() {
            return Err(Error::InvalidConfig(format!(
                "prefix of {n} rows requested from {} rows",
                self.len()
            )));
        }
        Ok(Dataset {
            space: self.space.clone(),
            values: self.values[..n * self.space.len()].to_vec(),
        })
    }

    /// Count of each joint state, keyed by mixed-radix index, sorted by index.
    pub fn state_counts(&self) -> Vec<(u64, u64)> {
        let mut idx: Vec<u64> = self.rows().map(|r| self.space.index_of(r)).collect();
        idx.sort_unstable();
        let mut out: Vec<(u64, u64)> = Vec::new();
        for i in idx {
            match out.last_mut() {
                Some((k, c)) if *k == i => *c += 1,
                _ => out.push((i, 1)),
            }
        }
        out
    }
}
