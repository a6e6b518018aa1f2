use depnet_core::bayesnet::{learn_bn, topological_order};
use depnet_core::cpt::{Cpt, SelectionWeights};
use depnet_core::depnet::{learn, learn_structure_node, LearnOptions, PenaltySpec};
use depnet_core::discrete::{empirical_distribution, kl_divergence};
use depnet_core::infogeo::{fc_divergence, kl_to_manifold, m_project, theorem3_slack};
use depnet_core::synth::{random_dn, random_joint, sample_joint};
use depnet_core::{Dataset, DependencyNetwork, JointTable, VarSpace};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn space_strategy(max_vars: usize) -> impl Strategy<Value = VarSpace> {
    prop::collection::vec(2usize..=3, 1..=max_vars).prop_map(|c| VarSpace::new(c).unwrap())
}

fn joint_strategy(max_vars: usize) -> impl Strategy<Value = JointTable> {
    (space_strategy(max_vars), any::<u64>(), any::<bool>()).prop_map(|(s, seed, sparse)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w: Vec<f64> = random_joint(&s, &mut rng).unwrap().into_probs();
        if sparse {
            // knock out about a third of the states, keeping at least one
            for x in w.iter_mut().skip(1) {
                if rng.random_bool(0.35) {
                    *x = 0.0;
                }
            }
        }
        JointTable::from_weights(s, w).unwrap()
    })
}

/// Splits `0..n` into a random target set and a disjoint given set.
fn split(n: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Vec::new();
    let mut g = Vec::new();
    for v in 0..n {
        match rng.random_range(0..3) {
            0 => t.push(v),
            1 => g.push(v),
            _ => {}
        }
    }
    if t.is_empty() {
        t.push(0);
        g.retain(|&v| v != 0);
    }
    (t, g)
}

fn small_dataset(seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=4);
    let cards: Vec<usize> = (0..n).map(|_| rng.random_range(2..=3)).collect();
    let space = VarSpace::new(cards).unwrap();
    let truth = random_joint(&space, &mut rng).unwrap();
    sample_joint(&truth, rng.random_range(1..400), seed).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn chain_rule(p in joint_strategy(4), seed in any::<u64>()) {
        let (t, g) = split(p.space().len(), seed);
        let joint: Vec<usize> = t.iter().chain(&g).copied().collect();
        let h_joint = p.entropy(&joint).unwrap();
        let h_given = if g.is_empty() { 0.0 } else { p.entropy(&g).unwrap() };
        let h_cond = p.conditional_entropy(&t, &g).unwrap();
        prop_assert!((h_joint - (h_given + h_cond)).abs() < 1e-10);
        prop_assert!(h_cond >= -1e-12);
    }

    #[test]
    fn divergences_are_non_negative(p in joint_strategy(3), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = random_joint(p.space(), &mut rng).unwrap();
        prop_assert!(kl_divergence(&p, &q).unwrap() >= -1e-12);
        prop_assert!(kl_divergence(&p, &p).unwrap().abs() < 1e-12);
        for v in 0..p.space().len() {
            prop_assert!(p.entropy(&[v]).unwrap() >= -1e-12);
        }
        let c = SelectionWeights::uniform(p.space().len());
        prop_assert!(fc_divergence(&p, &q, &c).unwrap() >= -1e-12);
    }

    #[test]
    fn tables_stay_normalized(p in joint_strategy(4), seed in any::<u64>()) {
        let (t, g) = split(p.space().len(), seed);
        let m: f64 = p.marginal(&t).unwrap().probs().iter().sum();
        prop_assert!((m - 1.0).abs() < 1e-12);
        let cond = p.conditional(&t, &g).unwrap();
        for y in 0..p.space().configs(&g) as usize {
            if let Some(row) = cond.row(y) {
                prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let child = rng.random_range(0..p.space().len());
        let inputs: Vec<usize> = (0..p.space().len()).filter(|&v| v != child && rng.random_bool(0.5)).collect();
        let theta = depnet_core::synth::random_cpt(p.space(), child, inputs, 0.05, 1.0, &mut rng).unwrap();
        let q = m_project(&p, &theta).unwrap();
        prop_assert!((q.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!((kl_divergence(&p, &q).unwrap() - kl_to_manifold(&p, &theta).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn counting_round_trips(seed in any::<u64>()) {
        let d = small_dataset(seed);
        let emp = empirical_distribution(&d).unwrap();
        let n = d.len() as f64;
        let mut counts = vec![0u64; emp.probs().len()];
        for (idx, c) in d.state_counts() {
            counts[idx as usize] = c;
        }
        for (p, &c) in emp.probs().iter().zip(&counts) {
            prop_assert_eq!((p * n).round() as u64, c);
        }
    }

    #[test]
    fn greedy_search_strictly_decreases(seed in any::<u64>(), pen in prop::sample::select(vec![PenaltySpec::Aic, PenaltySpec::Mdl, PenaltySpec::None])) {
        let d = small_dataset(seed);
        for i in 0..d.space().len() {
            let s = learn_structure_node(&d, i, pen, false).unwrap();
            prop_assert!(s.trajectory.windows(2).all(|w| w[1] < w[0]));
            prop_assert_eq!(*s.trajectory.last().unwrap(), s.score);
            prop_assert!(!s.inputs.contains(&i));
        }
    }

    #[test]
    fn positivity_floor(seed in any::<u64>()) {
        let d = small_dataset(seed);
        let dn = learn(&d, &LearnOptions::default()).unwrap().network;
        for cpt in dn.cpts() {
            let y_configs = d.space().configs(cpt.inputs()) as f64;
            let floor = 1.0 / (d.len() as f64 + cpt.child_card() as f64 * y_configs);
            for (_, row) in cpt.rows() {
                let row = row.unwrap();
                prop_assert!(row.iter().all(|&x| x >= floor));
            }
        }
    }

    #[test]
    fn learning_is_deterministic(seed in any::<u64>()) {
        let d = small_dataset(seed);
        prop_assert_eq!(learn(&d, &LearnOptions::default()).unwrap(), learn(&d, &LearnOptions::default()).unwrap());
        prop_assert_eq!(learn_bn(&d, PenaltySpec::Mdl, true).unwrap(), learn_bn(&d, PenaltySpec::Mdl, true).unwrap());
    }

    #[test]
    fn hill_climbing_keeps_dags(seed in any::<u64>()) {
        let d = small_dataset(seed);
        let res = learn_bn(&d, PenaltySpec::Aic, true).unwrap();
        prop_assert!(topological_order(res.network.parent_sets()).is_ok());
        prop_assert!(res.trajectory.windows(2).all(|w| w[1] < w[0]));
        prop_assert_eq!(res.trajectory.len(), res.moves.len() + 1);
    }

    #[test]
    fn learned_cpt_is_closest_on_its_inputs(seed in any::<u64>()) {
        let d = small_dataset(seed);
        let emp = empirical_distribution(&d).unwrap();
        let opts = LearnOptions { positivity: false, ..Default::default() };
        let dn = learn(&d, &opts).unwrap().network;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        for cpt in dn.cpts() {
            let best = kl_to_manifold(&emp, cpt).unwrap();
            // perturbed tables with the same node and inputs
            for _ in 0..100 {
                let rows = cpt
                    .rows()
                    .map(|(_, r)| {
                        let base = r.map(<[f64]>::to_vec).unwrap_or_else(|| vec![1.0 / cpt.child_card() as f64; cpt.child_card()]);
                        let w: Vec<f64> = base.iter().map(|x| x + rng.random_range(0.0..0.2)).collect();
                        let s: f64 = w.iter().sum();
                        Some(w.into_iter().map(|x| x / s).collect())
                    })
                    .collect();
                let other = Cpt::new(d.space(), cpt.child(), cpt.inputs().to_vec(), rows).unwrap();
                prop_assert!(best <= kl_to_manifold(&emp, &other).unwrap() + 1e-12);
            }
        }
    }

    #[test]
    fn fc_equals_sum_of_manifold_distances(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let space = VarSpace::binary(rng.random_range(1..=4)).unwrap();
        let p = random_joint(&space, &mut rng).unwrap();
        let q = random_joint(&space, &mut rng).unwrap();
        let raw: Vec<f64> = (0..space.len()).map(|_| rng.random_range(0.1..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let c = SelectionWeights::new(raw.iter().map(|x| x / total).collect()).unwrap_or_else(|_| SelectionWeights::uniform(space.len()));
        let fc = fc_divergence(&p, &q, &c).unwrap();
        let mut sum = 0.0;
        for i in 0..space.len() {
            sum += c.get(i) * kl_to_manifold(&p, &Cpt::full_conditional(&q, i).unwrap()).unwrap();
        }
        prop_assert!((fc - sum).abs() < 1e-10);
    }

    #[test]
    fn divergence_bound_holds(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let space = VarSpace::binary(rng.random_range(1..=4)).unwrap();
        let p = random_joint(&space, &mut rng).unwrap();
        let dn = random_dn(&space, 0.02, 0.98, &mut rng).unwrap();
        prop_assert!(theorem3_slack(&p, &dn).unwrap() >= -1e-9);
        let compatible = DependencyNetwork::from_full_conditionals(&p).unwrap();
        prop_assert!(theorem3_slack(&p, &compatible).unwrap().abs() < 1e-10);
    }
}
