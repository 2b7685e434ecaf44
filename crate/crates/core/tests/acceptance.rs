//! Acceptance suite: one test per criterion, each printing a PASS line
//! with the measured quantities (run with `--nocapture` to see them).
//!
//! Trend criteria run on the canonical synthetic dataset with the
//! default parameter set (budget 5, canonical 5% poisoning flow, 50
//! epochs, widths 16-8) over seeds 1..=5.

use graphtrap_core::attacks::{self, AttackKind};
use graphtrap_core::defense::DefenseConfig;
use graphtrap_core::gnn::{self, Arch, ModelConfig, ModelState, TrainConfig};
use graphtrap_core::graphdata::{
    canonical_dataset, load_tudataset, save_tudataset, Dataset, Graph,
};
use graphtrap_core::harness::Lab;
use graphtrap_core::numkit::{self, Matrix};
use rand::prelude::*;
use rand_chacha::ChaCha20Rng;
use std::time::Instant;

const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

fn lab() -> Lab {
    Lab {
        dataset_name: "synthetic-er".to_string(),
        jobs: 4,
        ..Lab::default()
    }
}

fn random_graph(n: usize, edge_prob: f64, dim: usize, label: usize, seed: u64) -> Graph {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut adjacency = Matrix::zeros(n, n);
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.gen::<f64>() < edge_prob {
                adjacency.set(u, v, 1.0);
                adjacency.set(v, u, 1.0);
            }
        }
    }
    let mut features = Matrix::zeros(n, dim);
    for i in 0..n {
        for j in 0..dim {
            features.set(i, j, rng.gen_range(-1.5..1.5));
        }
    }
    Graph::new(0, adjacency, features, label).unwrap()
}

fn loss_at(state: &ModelState, adjacency: &Matrix, features: &Matrix, label: usize) -> f64 {
    let trace = gnn::forward_parts(state, adjacency, features).unwrap();
    numkit::softmax_cross_entropy(trace.logits(), label).unwrap().0
}

/// Relative error against the finite-difference reference, with an
/// absolute floor for entries where both sides vanish.
fn rel_err(analytic: f64, fd: f64) -> f64 {
    let diff = (analytic - fd).abs();
    if diff <= 1e-9 {
        return 0.0;
    }
    diff / analytic.abs().max(fd.abs()).max(1e-12)
}

/// Tracks the finite-difference comparison across one criterion run.
/// Central differences only estimate a derivative where the loss is
/// smooth in the probe interval; probe points that straddle a ReLU or
/// pooling-argmax kink are detected by disagreement between the step
/// and half-step estimates, skipped and counted.
struct FdCheck {
    step: f64,
    checked: usize,
    skipped: usize,
    worst: f64,
}

impl FdCheck {
    fn new(step: f64) -> FdCheck {
        FdCheck { step, checked: 0, skipped: 0, worst: 0.0 }
    }

    fn check(&mut self, loss: impl Fn(f64) -> f64, origin: f64, analytic: f64, what: &str) {
        let h = self.step;
        let fd = (loss(origin + h) - loss(origin - h)) / (2.0 * h);
        let fd_half = (loss(origin + h / 2.0) - loss(origin - h / 2.0)) / h;
        if rel_err(fd, fd_half) > 1e-6 {
            self.skipped += 1;
            return;
        }
        self.checked += 1;
        let err = rel_err(analytic, fd);
        self.worst = self.worst.max(err);
        assert!(err <= 1e-4, "{what}: analytic {analytic} vs fd {fd}");
    }
}

/// The finite-difference oracle needs sample points where the loss is
/// differentiable. Two structural violations occur in random GCN
/// instances and sit exactly at the evaluation point, so step-halving
/// cannot see them:
///   - exact pooling ties (twin nodes with identical closed
///     neighborhoods produce bitwise-equal embedding rows), and
///   - exactly-zero pre-activations (a node whose closed neighborhood
///     is fully clamped by the previous ReLU).
/// Instances showing either are resampled.
fn is_smooth_instance(state: &ModelState, g: &Graph) -> bool {
    let norm = gnn::normalize_adjacency(g.adjacency());
    let mut z = g.features().clone();
    for layer in &state.layers {
        let gnn::LayerParams::Dense { weight } = layer else {
            unreachable!("oracle instances are GCN")
        };
        let pre = numkit::matmul(&norm, &numkit::matmul(&z, weight).unwrap()).unwrap();
        if pre.values().iter().any(|&v| v == 0.0) {
            return false;
        }
        z = numkit::relu(&pre);
    }
    let (pooled, _) = numkit::row_max_pool(&z).unwrap();
    for j in 0..z.cols() {
        let top = pooled.get(0, j);
        if top > 0.0 && (0..z.rows()).filter(|&r| z.get(r, j) == top).count() > 1 {
            return false;
        }
    }
    true
}

#[test]
fn criterion_1_gradient_fidelity() {
    let start = Instant::now();
    let mut fd = FdCheck::new(1e-5);
    let mut pairs = 0;
    for round in 0..20u64 {
        let n = 4 + (round % 7) as usize; // graph sizes 4..=10
        let classes = 2 + (round % 2) as usize;
        let cfg = ModelConfig::new(Arch::Gcn, 3, classes).with_widths(&[5, 4]);
        let label = (round % classes as u64) as usize;
        let (mut state, g) = (0..)
            .map(|attempt| {
                let state = ModelState::init(&cfg, 1000 + round + 7000 * attempt).unwrap();
                let g = random_graph(n, 0.4, 3, label, 2000 + round + 9000 * attempt);
                (state, g)
            })
            .find(|(state, g)| is_smooth_instance(state, g))
            .unwrap();
        pairs += 1;

        let trace = gnn::forward(&state, &g).unwrap();
        let grads = gnn::backward(&state, &trace, label, true).unwrap();
        let analytic: Vec<Matrix> = grads.param_tensors().into_iter().cloned().collect();
        let adjacency_grad = grads.adjacency.unwrap();

        for (k, expected) in analytic.iter().enumerate() {
            for i in 0..expected.rows() {
                for j in 0..expected.cols() {
                    let orig = state.param_tensors()[k].get(i, j);
                    let loss = |value: f64| {
                        let mut probe = state.clone();
                        probe.param_tensors_mut()[k].set(i, j, value);
                        loss_at(&probe, g.adjacency(), g.features(), label)
                    };
                    fd.check(
                        loss,
                        orig,
                        expected.get(i, j),
                        &format!("round {round} weight tensor {k} ({i},{j})"),
                    );
                }
            }
        }
        for u in 0..n {
            for v in (u + 1)..n {
                let orig = g.adjacency().get(u, v);
                let loss = |value: f64| {
                    let mut probe = g.adjacency().clone();
                    probe.set(u, v, value);
                    probe.set(v, u, value);
                    loss_at(&state, &probe, g.features(), label)
                };
                fd.check(
                    loss,
                    orig,
                    adjacency_grad.get(u, v),
                    &format!("round {round} adjacency pair ({u},{v})"),
                );
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 10.0, "gradient fidelity took {elapsed:.1}s, budget 10s");
    assert!(
        (fd.skipped as f64) < 0.01 * (fd.checked as f64),
        "too many non-smooth probe points: {} of {}",
        fd.skipped,
        fd.checked
    );
    println!(
        "PASS criterion 1: gradient fidelity on {pairs} (graph, GCN) pairs, {} entries, worst relative error {:.2e}, {} non-smooth probes skipped, {elapsed:.2}s",
        fd.checked, fd.worst, fd.skipped
    );
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

fn random_score_instance(seed: u64, n: usize) -> (Matrix, Matrix) {
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
    (grad, adjacency)
}

#[test]
fn criterion_2_greedy_selection_oracle() {
    let start = Instant::now();
    let mut checked = 0;
    for seed in 0..200u64 {
        let n = 2 + (seed % 7) as usize; // 2..=8
        let (grad, adjacency) = random_score_instance(seed, n);
        let scores = attacks::score_matrix(&grad, &adjacency).unwrap();
        let max_budget = 5.min(n * (n - 1) / 2);
        for budget in 0..=max_budget {
            assert_eq!(
                attacks::select_perturbations(&scores, budget).unwrap(),
                brute_force_top(&scores, budget),
                "instance {seed} (n={n}, M={budget})"
            );
            checked += 1;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 5.0, "greedy oracle took {elapsed:.1}s, budget 5s");
    println!(
        "PASS criterion 2: greedy selection equals exhaustive top-M on 200 instances ({checked} budgets), {elapsed:.2}s"
    );
}

#[test]
fn criterion_3_score_formula_law() {
    for seed in 0..100u64 {
        let n = 3 + (seed % 6) as usize;
        let (grad, adjacency) = random_score_instance(10_000 + seed, n);
        let scores = attacks::score_matrix(&grad, &adjacency).unwrap();
        for u in 0..n {
            assert_eq!(scores.get(u, u), f64::NEG_INFINITY);
            for v in 0..n {
                if u == v {
                    continue;
                }
                let expected = if adjacency.get(u, v) == 1.0 {
                    grad.get(u, v)
                } else {
                    -grad.get(u, v)
                };
                assert_eq!(scores.get(u, v), expected, "instance {seed} entry ({u},{v})");
            }
        }
    }
    println!("PASS criterion 3: score formula law exact on 100 random instances");
}

#[test]
fn criterion_4_effectiveness_trend() {
    let start = Instant::now();
    let d = canonical_dataset();
    let lab = lab();
    let trap = lab.run_effectiveness(&d, AttackKind::Trap, &SEEDS).unwrap();
    let random = lab.run_effectiveness(&d, AttackKind::Random, &SEEDS).unwrap();
    let t = trap.mean_for("gcn", None).unwrap();
    let r = random.mean_for("gcn", None).unwrap();

    assert!(t.mean_clean_acc >= 0.80, "clean GCN accuracy {:.4} < 0.80", t.mean_clean_acc);
    assert!(t.mean_asr >= 0.60, "TRAP ASR {:.4} < 0.60", t.mean_asr);
    assert!(
        t.mean_asr - r.mean_asr >= 0.15,
        "TRAP ASR {:.4} does not exceed random-flip ASR {:.4} by 0.15",
        t.mean_asr,
        r.mean_asr
    );
    assert!(t.mean_cad.abs() <= 0.05, "|CAD| {:.4} > 0.05", t.mean_cad.abs());
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 300.0, "effectiveness run took {elapsed:.1}s, budget 300s");
    println!(
        "PASS criterion 4: clean {:.4}, TRAP ASR {:.4}, random ASR {:.4}, CAD {:+.4}, {elapsed:.1}s",
        t.mean_clean_acc, t.mean_asr, r.mean_asr, t.mean_cad
    );
}

#[test]
fn criterion_5_transferability_trend() {
    let start = Instant::now();
    let d = canonical_dataset();
    let lab = lab();
    let victims = [Arch::Gin, Arch::Gsage];
    let trap = lab.run_transfer(&d, AttackKind::Trap, &victims, true, &SEEDS).unwrap();
    let random = lab.run_transfer(&d, AttackKind::Random, &victims, true, &SEEDS).unwrap();
    let mut summary = Vec::new();
    for victim in ["gin", "gsage"] {
        let t = trap.mean_for(victim, None).unwrap().mean_asr;
        let r = random.mean_for(victim, None).unwrap().mean_asr;
        assert!(
            t >= r,
            "{victim}: TRAP ASR {t:.4} below random-flip ASR {r:.4}"
        );
        summary.push(format!("{victim} {t:.4}>={r:.4}"));
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 600.0, "transfer run took {elapsed:.1}s, budget 600s");
    println!(
        "PASS criterion 5: transfer ASR beats baseline on each victim ({}), {elapsed:.1}s",
        summary.join(", ")
    );
}

#[test]
fn criterion_6_sweep_trends() {
    let start = Instant::now();
    let d = canonical_dataset();
    let lab = lab();
    let rates = lab.run_rate_sweep(&d, &[0.01, 0.03, 0.05, 0.07], &SEEDS).unwrap();
    let low_rate = rates.mean_for("gcn", Some("0.01")).unwrap().mean_asr;
    let high_rate = rates.mean_for("gcn", Some("0.07")).unwrap().mean_asr;
    assert!(
        high_rate >= low_rate,
        "ASR at 7% poisoning ({high_rate:.4}) below ASR at 1% ({low_rate:.4})"
    );

    let budgets = lab.run_budget_sweep(&d, &[1, 3, 5, 7], &SEEDS).unwrap();
    let low_budget = budgets.mean_for("gcn", Some("1")).unwrap().mean_asr;
    let high_budget = budgets.mean_for("gcn", Some("5")).unwrap().mean_asr;
    assert!(
        high_budget >= low_budget,
        "ASR at budget 5 ({high_budget:.4}) below ASR at budget 1 ({low_budget:.4})"
    );
    let elapsed = start.elapsed().as_secs_f64();
    println!(
        "PASS criterion 6: rate ASR {low_rate:.4}->{high_rate:.4}, budget ASR {low_budget:.4}->{high_budget:.4}, {elapsed:.1}s"
    );
}

#[test]
fn criterion_7_defense_trend() {
    let start = Instant::now();
    let d = canonical_dataset();
    let lab = Lab {
        victims: vec![Arch::Gcn, Arch::Gin, Arch::Gsage],
        ..lab()
    };
    let dcfg = DefenseConfig { subsample_ratio: 0.10, num_views: 10, seed: 0 };
    let report = lab.run_defense(&d, AttackKind::Trap, &dcfg, &SEEDS).unwrap();

    // Table-7 analogue victim: the surrogate-matching GCN.
    let undefended = report.mean_for("gcn", Some("undefended")).unwrap();
    let defended = report.mean_for("gcn", Some("defended")).unwrap();
    assert!(
        defended.mean_clean_acc < undefended.mean_clean_acc,
        "subsampled training did not reduce clean accuracy ({:.4} vs {:.4})",
        defended.mean_clean_acc,
        undefended.mean_clean_acc
    );

    let mut ratios = Vec::new();
    let mut any_survives = false;
    for victim in ["gcn", "gin", "gsage"] {
        let u = report.mean_for(victim, Some("undefended")).unwrap().mean_asr;
        let v = report.mean_for(victim, Some("defended")).unwrap().mean_asr;
        let ratio = v / u.max(1e-9);
        any_survives |= ratio >= 0.5;
        ratios.push(format!("{victim} {ratio:.2}"));
    }
    assert!(any_survives, "defended ASR fell below half on every victim ({ratios:?})");
    let elapsed = start.elapsed().as_secs_f64();
    println!(
        "PASS criterion 7: defense clean {:.4}->{:.4}, ASR ratios [{}], {elapsed:.1}s",
        undefended.mean_clean_acc,
        defended.mean_clean_acc,
        ratios.join(", ")
    );
}

#[test]
fn criterion_8_determinism() {
    let start = Instant::now();
    let d = canonical_dataset();
    let lab = lab();
    let seeds = [1u64, 2];

    // Timing fields are measured wall clock and inherently vary; the
    // canonical form zeroes exactly those fields and nothing else.
    let a = lab.run_effectiveness(&d, AttackKind::Trap, &seeds).unwrap();
    let b = lab.run_effectiveness(&d, AttackKind::Trap, &seeds).unwrap();
    let json_a = serde_json::to_string_pretty(&a.canonical().to_json()).unwrap();
    let json_b = serde_json::to_string_pretty(&b.canonical().to_json()).unwrap();
    assert_eq!(json_a, json_b, "effectiveness reports differ between identical runs");
    assert_eq!(a.canonical().to_csv(), b.canonical().to_csv());

    let s1 = lab.run_budget_sweep(&d, &[1, 5], &seeds).unwrap();
    let s2 = lab.run_budget_sweep(&d, &[1, 5], &seeds).unwrap();
    assert_eq!(
        serde_json::to_string(&s1.canonical().to_json()).unwrap(),
        serde_json::to_string(&s2.canonical().to_json()).unwrap()
    );
    assert_eq!(s1.canonical().sweep_csv(), s2.canonical().sweep_csv());

    let dcfg = DefenseConfig::default();
    let d1 = lab.run_defense(&d, AttackKind::Trap, &dcfg, &[3]).unwrap();
    let d2 = lab.run_defense(&d, AttackKind::Trap, &dcfg, &[3]).unwrap();
    assert_eq!(d1.canonical(), d2.canonical());

    let elapsed = start.elapsed().as_secs_f64();
    println!(
        "PASS criterion 8: repeated runs byte-identical on JSON and CSV (timing fields zeroed), {elapsed:.1}s"
    );
}

#[test]
fn criterion_9_format_round_trip() {
    // Canonical synthetic dataset.
    let d = canonical_dataset();
    let tmp = tempfile::tempdir().unwrap();
    save_tudataset(&d, tmp.path(), "SYN").unwrap();
    let back = load_tudataset(tmp.path(), "SYN").unwrap();
    assert_eq!(back, d, "synthetic dataset did not survive the round trip");

    // Tiny hand-written fixture: two 2-node graphs, raw labels {1, -1}.
    let fixture = tempfile::tempdir().unwrap();
    std::fs::write(fixture.path().join("DS_A.txt"), "1, 2\n2, 1\n3, 4\n4, 3\n").unwrap();
    std::fs::write(fixture.path().join("DS_graph_indicator.txt"), "1\n1\n2\n2\n").unwrap();
    std::fs::write(fixture.path().join("DS_graph_labels.txt"), "1\n-1\n").unwrap();
    let tiny = load_tudataset(fixture.path(), "DS").unwrap();
    assert_eq!(tiny.len(), 2);
    assert_eq!(tiny.num_classes(), 2);
    assert_eq!(tiny.graph(0).label(), 1);
    assert_eq!(tiny.graph(1).label(), 0);
    for g in tiny.graphs() {
        assert_eq!(g.num_nodes(), 2);
        assert_eq!(g.num_edges(), 1);
    }
    let reexport = tempfile::tempdir().unwrap();
    save_tudataset(&tiny, reexport.path(), "DS").unwrap();
    let tiny_back = load_tudataset(reexport.path(), "DS").unwrap();
    assert_eq!(tiny_back, tiny, "fixture dataset did not survive the round trip");

    // The adjacency file itself re-exports the same edge set verbatim.
    let a_text = std::fs::read_to_string(reexport.path().join("DS_A.txt")).unwrap();
    assert_eq!(a_text, "1, 2\n2, 1\n3, 4\n4, 3\n");
    println!("PASS criterion 9: TUDataset export/import is bit-exact on synthetic and fixture data");
}

/// Not a numbered criterion: end-to-end sanity that a dataset exercised
/// through the poisoning pipeline keeps its invariants.
#[test]
fn poisoned_graphs_keep_invariants() {
    let d = canonical_dataset();
    let lab = lab();
    let report = lab.run_effectiveness(&d, AttackKind::Trap, &[1]).unwrap();
    assert_eq!(report.cells.len(), 1);
    let cell = &report.cells[0];
    assert!((0.0..=1.0).contains(&cell.asr));
    assert!((0.0..=1.0).contains(&cell.clean_acc));
    assert!((cell.cad - (cell.clean_acc - cell.backdoor_acc)).abs() < 1e-15);
}

/// Guard on the canonical fixture itself so accidental changes to the
/// generator surface immediately.
#[test]
fn canonical_dataset_shape_is_frozen() {
    let d: Dataset = canonical_dataset();
    assert_eq!(d.len(), 120);
    assert_eq!(d.num_classes(), 2);
    assert_eq!(d.class_counts(), vec![60, 60]);
    assert_eq!(d.feature_dim(), 4);
    assert!(d.graphs().iter().all(|g| g.num_nodes() == 12));
    assert_eq!(graphtrap_core::graphdata::target_class(&d), 0);
    let tcfg = TrainConfig::default();
    assert_eq!(tcfg.epochs, 50);
    assert_eq!(tcfg.learning_rate, 0.02);
    assert_eq!(tcfg.batch_size, 100);
    assert_eq!(tcfg.weight_decay, 5e-4);
}
