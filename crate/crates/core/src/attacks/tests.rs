use super::*;
use crate::gnn::tests::random_graph;
use crate::graphdata::{split, synth_dataset, ClassSpec};
use crate::numkit::Matrix;
use proptest::prelude::*;
use rand::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha20Rng;

fn tiny_dataset(seed: u64) -> Dataset {
    synth_dataset(
        &[
            ClassSpec { nodes: 8, edge_prob: 0.25, count: 10 },
            ClassSpec { nodes: 8, edge_prob: 0.65, count: 10 },
        ],
        3,
        seed,
    )
    .unwrap()
}

fn tiny_surrogate_configs(d: &Dataset) -> (ModelConfig, TrainConfig) {
    let config = ModelConfig::new(Arch::Gcn, d.feature_dim(), d.num_classes()).with_widths(&[6, 4]);
    let tcfg = TrainConfig { epochs: 4, seed: 3, ..TrainConfig::default() };
    (config, tcfg)
}

#[test]
fn attack_gradient_is_symmetric_with_zero_diagonal() {
    let cfg = ModelConfig::new(Arch::Gcn, 2, 2).with_widths(&[4, 3]);
    let state = ModelState::init(&cfg, 2).unwrap();
    let g = random_graph(6, 0.5, 2, 1, 4);
    let grad = attack_gradient(&state, &g, 0).unwrap();
    for u in 0..6 {
        assert_eq!(grad.get(u, u), 0.0);
        for v in 0..6 {
            assert_eq!(grad.get(u, v), grad.get(v, u));
        }
    }
}

#[test]
fn attack_gradient_on_single_node_is_zero() {
    let cfg = ModelConfig::new(Arch::Gcn, 2, 2).with_widths(&[4]);
    let state = ModelState::init(&cfg, 2).unwrap();
    let g = random_graph(1, 0.0, 2, 1, 4);
    let grad = attack_gradient(&state, &g, 0).unwrap();
    assert_eq!(grad.shape(), (1, 1));
    assert_eq!(grad.get(0, 0), 0.0);
}

#[test]
fn attack_gradient_rejects_non_gcn_surrogate() {
    let cfg = ModelConfig::new(Arch::Gin, 2, 2).with_widths(&[4]);
    let state = ModelState::init(&cfg, 2).unwrap();
    let g = random_graph(5, 0.5, 2, 1, 4);
    assert!(matches!(
        attack_gradient(&state, &g, 0),
        Err(AttackError::SurrogateNotGcn(Arch::Gin))
    ));
}

#[test]
fn attack_gradient_matches_finite_differences() {
    let cfg = ModelConfig::new(Arch::Gcn, 3, 2).with_widths(&[5, 4]);
    let state = ModelState::init(&cfg, 19).unwrap();
    let g = random_graph(7, 0.4, 3, 1, 23).with_label(0);
    let grad = attack_gradient(&state, &g, 0).unwrap();
    let h = 1e-5;
    for u in 0..7 {
        for v in (u + 1)..7 {
            let orig = g.adjacency().get(u, v);
            let mut perturbed = g.adjacency().clone();
            let loss_at = |value: f64, adj: &mut Matrix| {
                adj.set(u, v, value);
                adj.set(v, u, value);
                let trace = crate::gnn::forward_parts(&state, adj, g.features()).unwrap();
                crate::numkit::softmax_cross_entropy(trace.logits(), 0).unwrap().0
            };
            let fd = (loss_at(orig + h, &mut perturbed) - loss_at(orig - h, &mut perturbed)) / (2.0 * h);
            let got = grad.get(u, v);
            let denom = got.abs().max(fd.abs());
            assert!(
                (got - fd).abs() <= 1e-4 * denom || (got - fd).abs() <= 1e-9,
                "pair ({u},{v}): {got} vs {fd}"
            );
        }
    }
}

#[test]
fn score_matrix_formula_cases() {
    let grad = Matrix::from_rows(&[vec![0.0, 0.5], vec![0.5, 0.0]]).unwrap();
    let present = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
    let absent = Matrix::zeros(2, 2);

    let s = score_matrix(&grad, &present).unwrap();
    assert_eq!(s.get(0, 1), 0.5);
    let s = score_matrix(&grad, &absent).unwrap();
    assert_eq!(s.get(0, 1), -0.5);

    let grad = Matrix::from_rows(&[vec![0.0, -0.4], vec![-0.4, 0.0]]).unwrap();
    let s = score_matrix(&grad, &absent).unwrap();
    assert_eq!(s.get(0, 1), 0.4);
    assert_eq!(s.get(0, 0), DIAGONAL_SENTINEL);
    assert_eq!(s.get(1, 1), DIAGONAL_SENTINEL);
}

#[test]
fn score_matrix_rejects_shape_mismatch() {
    let grad = Matrix::zeros(2, 2);
    let a = Matrix::zeros(3, 3);
    assert!(score_matrix(&grad, &a).is_err());
}

fn brute_force_top(scores: &Matrix, budget: usize) -> Vec<(usize, usize)> {
    let n = scores.rows();
    let mut remaining: Vec<(usize, usize)> = (0..n)
        .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
        .collect();
    let mut out = Vec::with_capacity(budget);
    for _ in 0..budget {
        let mut best = 0usize;
        for i in 1..remaining.len() {
            let (u, v) = remaining[i];
            let (bu, bv) = remaining[best];
            let s = scores.get(u, v);
            let bs = scores.get(bu, bv);
            if s > bs || (s == bs && (u, v) < (bu, bv)) {
                best = i;
            }
        }
        out.push(remaining.remove(best));
    }
    out
}

#[test]
fn select_perturbations_examples() {
    let mut s = Matrix::zeros(3, 3);
    s.set(0, 1, 0.9);
    s.set(0, 2, -0.1);
    s.set(1, 2, 0.4);
    assert_eq!(select_perturbations(&s, 0).unwrap(), vec![]);
    assert_eq!(select_perturbations(&s, 2).unwrap(), vec![(0, 1), (1, 2)]);
    assert!(matches!(
        select_perturbations(&s, 4),
        Err(AttackError::BudgetTooLarge { budget: 4, pairs: 3 })
    ));
}

#[test]
fn select_perturbations_breaks_ties_lexicographically() {
    let s = Matrix::zeros(4, 4);
    assert_eq!(
        select_perturbations(&s, 3).unwrap(),
        vec![(0, 1), (0, 2), (0, 3)]
    );
}

#[test]
fn trap_poison_zero_budget_only_relabels() {
    let d = tiny_dataset(2);
    let plan = split(&d, 0, 5).unwrap();
    let (config, tcfg) = tiny_surrogate_configs(&d);
    let outcome = trap_poison(&d, &plan, 0, 0, &config, &tcfg).unwrap();
    for (graph, &id) in outcome
        .train_graphs
        .iter()
        .zip(plan.poison_train_ids.iter())
        .chain(outcome.test_graphs.iter().zip(plan.poison_test_ids.iter()))
    {
        assert_eq!(graph.adjacency(), d.graph(id).adjacency());
        assert_eq!(graph.label(), 0);
        assert_ne!(d.graph(id).label(), 0);
    }
}

#[test]
fn trap_poison_flips_exactly_budget_pairs() {
    let d = tiny_dataset(7);
    let plan = split(&d, 0, 6).unwrap();
    let (config, tcfg) = tiny_surrogate_configs(&d);
    let budget = 3;
    let outcome = trap_poison(&d, &plan, 0, budget, &config, &tcfg).unwrap();
    let ids = plan
        .poison_train_ids
        .iter()
        .chain(plan.poison_test_ids.iter());
    for (graph, &id) in outcome.train_graphs.iter().chain(outcome.test_graphs.iter()).zip(ids) {
        let diff = baselines::adjacency_diff(d.graph(id), graph);
        assert_eq!(diff.len(), budget);
        // Poisoned graphs still satisfy every graph invariant.
        assert!(Graph::new(id, graph.adjacency().clone(), graph.features().clone(), graph.label()).is_ok());
    }
    for entry in &outcome.plan.entries {
        assert_eq!(entry.flips.len(), budget);
        let distinct: std::collections::BTreeSet<_> = entry.flips.iter().collect();
        assert_eq!(distinct.len(), budget);
    }
}

/// Regression fixture: flip lists recorded from the first oracle run of
/// this exact configuration, frozen bit-for-bit.
#[test]
fn trap_poison_matches_frozen_fixture() {
    let d = tiny_dataset(7);
    let plan = split(&d, 0, 6).unwrap();
    let config = ModelConfig::new(Arch::Gcn, 3, 2).with_widths(&[6, 4]);
    let tcfg = TrainConfig { epochs: 4, seed: 3, ..TrainConfig::default() };
    let outcome = trap_poison(&d, &plan, 0, 3, &config, &tcfg).unwrap();
    let expected: Vec<(usize, Vec<(usize, usize)>)> = vec![
        (18, vec![(1, 5), (0, 3), (2, 6)]),
        (12, vec![(3, 4), (0, 3), (2, 6)]),
    ];
    let got: Vec<(usize, Vec<(usize, usize)>)> = outcome
        .plan
        .entries
        .iter()
        .map(|e| (e.graph_id, e.flips.clone()))
        .collect();
    assert_eq!(got, expected);
}

#[test]
fn trap_poison_rejects_mismatched_split() {
    let d = tiny_dataset(2);
    let plan = split(&d, 0, 5).unwrap();
    let (config, tcfg) = tiny_surrogate_configs(&d);
    assert!(matches!(
        trap_poison(&d, &plan, 1, 2, &config, &tcfg),
        Err(AttackError::TargetClassMismatch { .. })
    ));
}

#[test]
fn er_trigger_density_extremes() {
    let full = er_subgraph_trigger(5, 1.0, 9).unwrap();
    assert_eq!(full.edges.len(), 10);
    let empty = er_subgraph_trigger(5, 0.0, 9).unwrap();
    assert!(empty.edges.is_empty());
    assert!(matches!(er_subgraph_trigger(1, 0.5, 0), Err(AttackError::TriggerTooSmall(1))));
    assert!(matches!(er_subgraph_trigger(5, 1.5, 0), Err(AttackError::BadDensity(_))));
}

#[test]
fn er_trigger_mean_edge_count_matches_expectation() {
    let total: usize = (0..1000)
        .map(|seed| er_subgraph_trigger(5, 0.8, seed).unwrap().edges.len())
        .sum();
    let mean = total as f64 / 1000.0;
    assert!((mean - 8.0).abs() < 0.2, "mean edge count {mean}");
}

#[test]
fn implant_complete_trigger_into_complete_graph_is_identity() {
    let n = 6;
    let mut adjacency = Matrix::zeros(n, n);
    for u in 0..n {
        for v in 0..n {
            if u != v {
                adjacency.set(u, v, 1.0);
            }
        }
    }
    let g = Graph::new(0, adjacency, Matrix::from_vec(n, 1, vec![1.0; n]).unwrap(), 0).unwrap();
    let trigger = er_subgraph_trigger(4, 1.0, 3).unwrap();
    let implanted = implant_subgraph(&g, &trigger, 11).unwrap();
    assert_eq!(implanted.adjacency(), g.adjacency());
}

#[test]
fn implant_empty_trigger_clears_host_edges() {
    let n = 6;
    let mut adjacency = Matrix::zeros(n, n);
    for u in 0..n {
        for v in 0..n {
            if u != v {
                adjacency.set(u, v, 1.0);
            }
        }
    }
    let g = Graph::new(0, adjacency, Matrix::from_vec(n, 1, vec![1.0; n]).unwrap(), 0).unwrap();
    let trigger = er_subgraph_trigger(4, 0.0, 3).unwrap();
    let implanted = implant_subgraph(&g, &trigger, 11).unwrap();
    // C(6,2) minus the C(4,2) edges internal to the host set.
    assert_eq!(implanted.num_edges(), 15 - 6);
    assert!(Graph::new(0, implanted.adjacency().clone(), implanted.features().clone(), 0).is_ok());
}

#[test]
fn implant_rejects_undersized_graph() {
    let g = random_graph(3, 0.5, 1, 0, 1);
    let trigger = er_subgraph_trigger(5, 0.8, 0).unwrap();
    assert!(matches!(
        implant_subgraph(&g, &trigger, 0),
        Err(AttackError::TriggerTooLarge { trigger: 5, nodes: 3 })
    ));
}

#[test]
fn random_flips_are_exact_and_deterministic() {
    let d = tiny_dataset(4);
    let plan = split(&d, 0, 2).unwrap();
    let a = random_flip_poison(&d, &plan, 0, 4, 99).unwrap();
    let b = random_flip_poison(&d, &plan, 0, 4, 99).unwrap();
    assert_eq!(a.plan, b.plan);
    for (graph, other) in a.train_graphs.iter().zip(b.train_graphs.iter()) {
        assert_eq!(graph, other);
    }
    let ids = plan.poison_train_ids.iter().chain(plan.poison_test_ids.iter());
    for (graph, &id) in a.train_graphs.iter().chain(a.test_graphs.iter()).zip(ids) {
        assert_eq!(baselines::adjacency_diff(d.graph(id), graph).len(), 4);
        assert_eq!(graph.label(), 0);
    }
}

#[test]
fn pair_indexing_is_a_bijection() {
    let n = 7;
    let mut seen = std::collections::BTreeSet::new();
    for k in 0..(n * (n - 1) / 2) {
        let (u, v) = baselines::pair_from_index(k, n);
        assert!(u < v && v < n);
        assert!(seen.insert((u, v)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn selection_equals_brute_force(seed in 0u64..10_000, n in 2usize..=8, budget in 0usize..=5) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut grad = Matrix::zeros(n, n);
        let mut adjacency = Matrix::zeros(n, n);
        for u in 0..n {
            for v in (u + 1)..n {
                let g = rng.gen_range(-1.0..1.0);
                grad.set(u, v, g);
                grad.set(v, u, g);
                if rng.gen::<f64>() < 0.5 {
                    adjacency.set(u, v, 1.0);
                    adjacency.set(v, u, 1.0);
                }
            }
        }
        let scores = score_matrix(&grad, &adjacency).unwrap();
        let budget = budget.min(n * (n - 1) / 2);
        prop_assert_eq!(
            select_perturbations(&scores, budget).unwrap(),
            brute_force_top(&scores, budget)
        );
    }

    #[test]
    fn score_sign_law(seed in 0u64..2_000) {
        let n = 6;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut grad = Matrix::zeros(n, n);
        let mut adjacency = Matrix::zeros(n, n);
        for u in 0..n {
            for v in (u + 1)..n {
                let g = rng.gen_range(-1.0..1.0);
                grad.set(u, v, g);
                grad.set(v, u, g);
                if rng.gen::<f64>() < 0.5 {
                    adjacency.set(u, v, 1.0);
                    adjacency.set(v, u, 1.0);
                }
            }
        }
        let s = score_matrix(&grad, &adjacency).unwrap();
        for u in 0..n {
            prop_assert_eq!(s.get(u, u), DIAGONAL_SENTINEL);
            for v in 0..n {
                if u == v {
                    continue;
                }
                if adjacency.get(u, v) == 1.0 {
                    prop_assert_eq!(s.get(u, v), grad.get(u, v));
                } else {
                    prop_assert_eq!(s.get(u, v), -grad.get(u, v));
                }
            }
        }
    }
}
