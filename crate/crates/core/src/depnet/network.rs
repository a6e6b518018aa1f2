use crate::cpt::{Cpt, SelectionWeights};
use crate::discrete::{Clamps, JointTable, Value, VarSpace};
use crate::error::{Error, Result};

/// A dependency network: one CPT per variable plus node-selection weights.
/// The input graph may be cyclic.
#[derive(Debug, Clone, PartialEq)]
pub struct DependencyNetwork {
    space: VarSpace,
    cpts: Vec<Cpt>,
    weights: SelectionWeights,
}

impl DependencyNetwork {
    pub fn new(space: VarSpace, cpts: Vec<Cpt>, weights: SelectionWeights) -> Result<Self> {
        if cpts.len() != space.len() {
            return Err(Error::InvalidConfig(format!(
                "{} tables for {} variables",
                cpts.len(),
                space.len()
            )));
        }
        if weights.len() != space.len() {
            return Err(Error::InvalidConfig(format!(
                "{} weights for {} variables",
                weights.len(),
                space.len()
            )));
        }
        for (i, cpt) in cpts.iter().enumerate() {
            if cpt.child() != i {
                return Err(Error::InvalidCpt {
                    node: i,
                    reason: format!("table describes variable {}", cpt.child()),
                });
            }
            cpt.check_space(&space)?;
        }
        Ok(Self {
            space,
            cpts,
            weights,
        })
    }

    pub fn with_uniform_weights(space: VarSpace, cpts: Vec<Cpt>) -> Result<Self> {
        let w = SelectionWeights::uniform(space.len());
        Self::new(space, cpts, w)
    }

    /// Network whose CPTs are the full conditionals of `p` (actual Gibbs).
    pub fn from_full_conditionals(p: &JointTable) -> Result<Self> {
        let cpts = (0..p.space().len())
            .map(|i| Cpt::full_conditional(p, i))
            .collect::<Result<Vec<_>>>()?;
        Self::with_uniform_weights(p.space().clone(), cpts)
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    pub fn space(&self) -> &VarSpace {
        &self.space
    }

    pub fn cpt(&self, i: usize) -> &Cpt {
        &self.cpts[i]
    }

    pub fn cpts(&self) -> &[Cpt] {
        &self.cpts
    }

    pub fn inputs(&self, i: usize) -> &[usize] {
        self.cpts[i].inputs()
    }

    pub fn weights(&self) -> &SelectionWeights {
        &self.weights
    }

    pub fn is_positive(&self) -> bool {
        self.cpts.iter().all(Cpt::is_positive)
    }

    /// The free network over the unclamped variables with the evidence
    /// substituted into every CPT, `θ_i(X_i | Z_i v)`.
    ///
    /// Returns the reduced network and, for each of its variables, the id
    /// of the original variable it stands for. Selection weights are the
    /// original weights renormalized over the unclamped nodes.
    pub fn condition(&self, clamps: &Clamps) -> Result<(DependencyNetwork, Vec<usize>)> {
        let free = clamps.free_mask(self.len());
        let kept: Vec<usize> = (0..self.len()).filter(|&i| free[i]).collect();
        if kept.is_empty() {
            return Err(Error::AllClamped);
        }
        let mut new_id = vec![usize::MAX; self.len()];
        for (k, &i) in kept.iter().enumerate() {
            new_id[i] = k;
        }
        let reduced = self.space.subspace(&kept)?;
        let weights = self.weights.restricted(&free)?;
        let weights = SelectionWeights::new(kept.iter().map(|&i| weights[i]).collect())?;

        let mut full = vec![0 as Value; self.len()];
        clamps.apply(&mut full);
        let mut cpts = Vec::with_capacity(kept.len());
        for &i in &kept {
            let cpt = &self.cpts[i];
            let free_inputs: Vec<usize> =
                cpt.inputs().iter().copied().filter(|&v| free[v]).collect();
            let sub = self.space.subspace(&free_inputs)?;
            let n_rows = sub.total_states() as usize;
            let mut rows = Vec::with_capacity(n_rows);
            let mut z = vec![0 as Value; free_inputs.len()];
            for r in 0..n_rows {
                sub.decode_into(r as u64, &mut z);
                for (&v, &x) in free_inputs.iter().zip(&z) {
                    full[v] = x;
                }
                let y = cpt.row_index(&full);
                rows.push(cpt.is_defined(y).then(|| cpt.row_unchecked(y).to_vec()));
            }
            let mapped = free_inputs.iter().map(|&v| new_id[v]).collect();
            cpts.push(Cpt::new(&reduced, new_id[i], mapped, rows)?);
        }
        Ok((DependencyNetwork::new(reduced, cpts, weights)?, kept))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> DependencyNetwork {
        let s = VarSpace::binary(3).unwrap();
        let c0 = Cpt::new(
            &s,
            0,
            vec![1],
            vec![Some(vec![0.9, 0.1]), Some(vec![0.2, 0.8])],
        )
        .unwrap();
        let c1 = Cpt::new(
            &s,
            1,
            vec![0, 2],
            vec![
                Some(vec![0.7, 0.3]),
                Some(vec![0.6, 0.4]),
                Some(vec![0.3, 0.7]),
                Some(vec![0.1, 0.9]),
            ],
        )
        .unwrap();
        let c2 = Cpt::unconditional(&s, 2, vec![0.5, 0.5]).unwrap();
        DependencyNetwork::with_uniform_weights(s, vec![c0, c1, c2]).unwrap()
    }

    #[test]
    fn rejects_misplaced_tables() {
        let s = VarSpace::binary(2).unwrap();
        let c = Cpt::unconditional(&s, 1, vec![0.5, 0.5]).unwrap();
        assert!(DependencyNetwork::with_uniform_weights(s.clone(), vec![c.clone(), c]).is_err());
        let c0 = Cpt::unconditional(&s, 0, vec![0.5, 0.5]).unwrap();
        assert!(DependencyNetwork::with_uniform_weights(s, vec![c0]).is_err());
    }

    #[test]
    fn condition_substitutes_evidence() {
        let dn = chain();
        let clamps = Clamps::new(dn.space(), vec![(2, 1)]).unwrap();
        let (red, kept) = dn.condition(&clamps).unwrap();
        assert_eq!(kept, vec![0, 1]);
        assert_eq!(red.inputs(1), &[0]);
        // θ_1(. | x0=0, x2=1) and θ_1(. | x0=1, x2=1)
        assert_eq!(red.cpt(1).row(0).unwrap(), &[0.6, 0.4]);
        assert_eq!(red.cpt(1).row(1).unwrap(), &[0.1, 0.9]);
        assert_eq!(red.weights().as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn condition_everything_fails() {
        let dn = chain();
        let clamps = Clamps::new(dn.space(), vec![(0, 0), (1, 0), (2, 0)]).unwrap();
        assert_eq!(dn.condition(&clamps).unwrap_err(), Error::AllClamped);
    }
}
