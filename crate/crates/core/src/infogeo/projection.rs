use crate::cpt::{Cpt, SelectionWeights};
use crate::depnet::DependencyNetwork;
use crate::discrete::{JointTable, VarSpace};
use crate::error::{Error, Result};

use super::markov::stationary_exact;

/// For every state, the flat index into `cpt`'s table of `θ(x_child | y)`.
pub(crate) fn cpt_cell_per_state(space: &VarSpace, cpt: &Cpt) -> Vec<usize> {
    let card = cpt.child_card();
    let mut cells = vec![0usize; space.total_states() as usize];
    let child = cpt.child();
    space.for_each_projected(cpt.inputs(), |state, row| {
        cells[state] = row * card + space.digit(state as u64, child);
    });
    cells
}

fn cell_prob(cpt: &Cpt, cell: usize) -> f64 {
    let card = cpt.child_card();
    cpt.row_unchecked(cell / card)[cell % card]
}

/// m-projection of `p` onto the full-conditional manifold `E(θ_i)`:
/// `p(x_{-i}) θ_i(x_i | y_i)`.
pub fn m_project(p: &JointTable, theta: &Cpt) -> Result<JointTable> {
    let space = p.space();
    theta.check_space(space)?;
    let rest = p.complement_marginal(theta.child());
    let cells = cpt_cell_per_state(space, theta);
    let card = theta.child_card();
    let mut out = Vec::with_capacity(rest.len());
    for (&m, &cell) in rest.iter().zip(&cells) {
        if m > 0.0 {
            let row = cell / card;
            if !theta.is_defined(row) {
                return Err(Error::UndefinedRow {
                    node: theta.child(),
                    row,
                });
            }
            out.push(m * cell_prob(theta, cell));
        } else {
            out.push(0.0);
        }
    }
    JointTable::from_weights(space.clone(), out)
}

/// `KL(p || E(θ_i)) = <ln p(X_i|X_{-i}) / θ_i(X_i|Y_i)>_p`, the divergence
/// from `p` to its m-projection. `+inf` when θ is zero where `p` is not.
pub fn kl_to_manifold(p: &JointTable, theta: &Cpt) -> Result<f64> {
    let space = p.space();
    theta.check_space(space)?;
    let cond = p.full_conditional(theta.child());
    let cells = cpt_cell_per_state(space, theta);
    let card = theta.child_card();
    let mut kl = 0.0;
    for ((&px, &fc), &cell) in p.probs().iter().zip(&cond).zip(&cells) {
        if px > 0.0 {
            let row = cell / card;
            if !theta.is_defined(row) {
                return Err(Error::UndefinedRow {
                    node: theta.child(),
                    row,
                });
            }
            let t = cell_prob(theta, cell);
            if t <= 0.0 {
                return Ok(f64::INFINITY);
            }
            kl += px * (fc / t).ln();
        }
    }
    Ok(kl)
}

/// Full-conditional divergence `FC(p || q) = Σ_i c_i <ln p(X_i|X_{-i}) / q(X_i|X_{-i})>_p`.
pub fn fc_divergence(p: &JointTable, q: &JointTable, c: &SelectionWeights) -> Result<f64> {
    if p.space() != q.space() {
        return Err(Error::SpaceMismatch);
    }
    if c.len() != p.space().len() {
        return Err(Error::InvalidConfig(format!(
            "{} weights for {} variables",
            c.len(),
            p.space().len()
        )));
    }
    if p.probs()
        .iter()
        .zip(q.probs())
        .any(|(&a, &b)| a > 0.0 && b <= 0.0)
    {
        return Ok(f64::INFINITY);
    }
    let mut total = 0.0;
    for i in 0..p.space().len() {
        let ci = c.get(i);
        if ci == 0.0 {
            continue;
        }
        let pc = p.full_conditional(i);
        let qc = q.full_conditional(i);
        let term: f64 = p
            .probs()
            .iter()
            .zip(pc.iter().zip(&qc))
            .filter(|(&px, _)| px > 0.0)
            .map(|(&px, (&a, &b))| px * (a / b).ln())
            .sum();
        total += ci * term;
    }
    Ok(total)
}

/// `max |p(x_i | x_{-i}) - θ_i(x_i | y_i)|` over states with `p(x_{-i}) > 0`;
/// zero exactly when `p` lies on `E(θ_i)`.
pub fn conditional_residual(p: &JointTable, theta: &Cpt) -> Result<f64> {
    let space = p.space();
    theta.check_space(space)?;
    let cond = p.full_conditional(theta.child());
    let cells = cpt_cell_per_state(space, theta);
    let card = theta.child_card();
    let mut worst: f64 = 0.0;
    for (&fc, &cell) in cond.iter().zip(&cells) {
        if fc.is_nan() {
            continue;
        }
        if !theta.is_defined(cell / card) {
            return Err(Error::UndefinedRow {
                node: theta.child(),
                row: cell / card,
            });
        }
        worst = worst.max((fc - cell_prob(theta, cell)).abs());
    }
    Ok(worst)
}

fn check_lambda(lambda: f64) -> Result<()> {
    if (0.0..=1.0).contains(&lambda) {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "lambda {lambda} outside [0, 1]"
        )))
    }
}

/// Point on the e-geodesic: `ln p = (1-λ) ln p0 + λ ln p1 - ln Z`.
pub fn e_geodesic_point(p0: &JointTable, p1: &JointTable, lambda: f64) -> Result<JointTable> {
    if p0.space() != p1.space() {
        return Err(Error::SpaceMismatch);
    }
    check_lambda(lambda)?;
    if !p0.is_positive() || !p1.is_positive() {
        return Err(Error::NonPositive);
    }
    let w = p0
        .probs()
        .iter()
        .zip(p1.probs())
        .map(|(&a, &b)| ((1.0 - lambda) * a.ln() + lambda * b.ln()).exp())
        .collect();
    JointTable::from_weights(p0.space().clone(), w)
}

/// Point on the m-geodesic: `(1-λ) p0 + λ p1`.
pub fn m_geodesic_point(p0: &JointTable, p1: &JointTable, lambda: f64) -> Result<JointTable> {
    if p0.space() != p1.space() {
        return Err(Error::SpaceMismatch);
    }
    check_lambda(lambda)?;
    let w = p0
        .probs()
        .iter()
        .zip(p1.probs())
        .map(|(&a, &b)| (1.0 - lambda) * a + lambda * b)
        .collect();
    JointTable::from_weights(p0.space().clone(), w)
}

/// `Σ_i c_i KL(p || E(θ_i)) - FC(p || π)` where π is the exact stationary
/// distribution of random-order sampling. Never negative up to roundoff.
pub fn theorem3_slack(p: &JointTable, dn: &DependencyNetwork) -> Result<f64> {
    if p.space() != dn.space() {
        return Err(Error::SpaceMismatch);
    }
    let pi = stationary_exact(dn, &Default::default())?;
    let bound = manifold_bound(p, dn)?;
    Ok(bound - fc_divergence(p, &pi, dn.weights())?)
}

/// `Σ_i c_i KL(p || E(θ_i))`.
pub fn manifold_bound(p: &JointTable, dn: &DependencyNetwork) -> Result<f64> {
    let mut bound = 0.0;
    for (i, cpt) in dn.cpts().iter().enumerate() {
        let ci = dn.weights().get(i);
        if ci > 0.0 {
            bound += ci * kl_to_manifold(p, cpt)?;
        }
    }
    Ok(bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete::kl_divergence;

    fn skewed() -> JointTable {
        JointTable::new(VarSpace::binary(2).unwrap(), vec![0.4, 0.1, 0.2, 0.3]).unwrap()
    }

    #[test]
    fn projection_of_uniform() {
        let space = VarSpace::binary(2).unwrap();
        let u = JointTable::uniform(space.clone()).unwrap();
        let theta = Cpt::new(
            &space,
            0,
            vec![1],
            vec![Some(vec![0.2, 0.8]), Some(vec![0.2, 0.8])],
        )
        .unwrap();
        let q = m_project(&u, &theta).unwrap();
        for (a, b) in q.probs().iter().zip([0.1, 0.1, 0.4, 0.4]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn compatible_projection_is_fixed() {
        let p = skewed();
        for i in 0..2 {
            let theta = Cpt::full_conditional(&p, i).unwrap();
            let q = m_project(&p, &theta).unwrap();
            for (a, b) in q.probs().iter().zip(p.probs()) {
                assert!((a - b).abs() < 1e-15);
            }
            assert!(kl_to_manifold(&p, &theta).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn eq15_on_fixed_table() {
        let p = skewed();
        let theta = Cpt::from_joint(&p, 0, vec![]).unwrap();
        let kl = kl_to_manifold(&p, &theta).unwrap();
        let expect = p.entropy(&[0]).unwrap() - p.conditional_entropy(&[0], &[1]).unwrap();
        assert!((kl - expect).abs() < 1e-12);
        let q = m_project(&p, &theta).unwrap();
        assert!((kl_divergence(&p, &q).unwrap() - kl).abs() < 1e-12);
    }

    #[test]
    fn zero_in_theta_gives_infinity() {
        let p = skewed();
        let space = p.space().clone();
        let theta = Cpt::unconditional(&space, 1, vec![1.0, 0.0]).unwrap();
        assert_eq!(kl_to_manifold(&p, &theta).unwrap(), f64::INFINITY);
    }

    #[test]
    fn fc_of_fixed_table() {
        let p = skewed();
        let u = JointTable::uniform(p.space().clone()).unwrap();
        let c = SelectionWeights::uniform(2);
        assert_eq!(fc_divergence(&p, &p, &c).unwrap(), 0.0);
        // direct 8-term summation: node terms 0.0863046 and 0.1064401
        let fc = fc_divergence(&p, &u, &c).unwrap();
        assert!((fc - 0.0963724).abs() < 1e-6, "{fc}");
    }

    #[test]
    fn fc_support_violation() {
        let p = skewed();
        let q = JointTable::new(p.space().clone(), vec![0.5, 0.5, 0.0, 0.0]).unwrap();
        let c = SelectionWeights::uniform(2);
        assert_eq!(fc_divergence(&p, &q, &c).unwrap(), f64::INFINITY);
    }

    #[test]
    fn geodesic_endpoints() {
        let s = VarSpace::binary(1).unwrap();
        let p0 = JointTable::new(s.clone(), vec![0.75, 0.25]).unwrap();
        let p1 = JointTable::new(s.clone(), vec![0.25, 0.75]).unwrap();
        let mid = e_geodesic_point(&p0, &p1, 0.5).unwrap();
        assert!((mid.probs()[0] - 0.5).abs() < 1e-15);
        let start = e_geodesic_point(&p0, &p1, 0.0).unwrap();
        assert!((start.probs()[0] - 0.75).abs() < 1e-15);
        let end = e_geodesic_point(&p0, &p1, 1.0).unwrap();
        assert!((end.probs()[1] - 0.75).abs() < 1e-15);
        let same = e_geodesic_point(&p0, &p0, 0.3).unwrap();
        assert!((same.probs()[0] - 0.75).abs() < 1e-15);

        let a = JointTable::new(s.clone(), vec![1.0, 0.0]).unwrap();
        let b = JointTable::new(s, vec![0.0, 1.0]).unwrap();
        assert_eq!(
            m_geodesic_point(&a, &b, 0.25).unwrap().probs(),
            &[0.75, 0.25]
        );
        assert_eq!(m_geodesic_point(&a, &b, 0.0).unwrap(), a);
        assert_eq!(m_geodesic_point(&a, &b, 1.0).unwrap(), b);
        assert_eq!(e_geodesic_point(&a, &b, 0.5), Err(Error::NonPositive));
        assert!(m_geodesic_point(&a, &b, 1.5).is_err());
    }
}
