// Mechanism diagnostics for the trigger pipeline.

use graphtrap_core::attacks::{self, AttackKind, AttackParams};
use graphtrap_core::gnn::{self, Arch, ModelConfig, TrainConfig};
use graphtrap_core::graphdata::{split, synth_dataset, target_class, ClassSpec};
use graphtrap_core::seedmix::derive_seed;

fn run(name: &str, classes: &[ClassSpec], data_seed: u64, budget: usize) {
    let d = synth_dataset(classes, 4, data_seed).unwrap();
    let y_t = target_class(&d);
    let mut surrogate_self_asr = 0.0;
    let mut victim_asr = 0.0;
    let mut victim_fit = 0.0;
    let mut clean_acc = 0.0;
    let seeds = [1u64, 2, 3, 4, 5];
    for &seed in &seeds {
        let plan = split(&d, y_t, derive_seed(seed, 1, 0)).unwrap();
        let cfg = ModelConfig::new(Arch::Gcn, 4, d.num_classes());
        let tcfg = TrainConfig::default().with_seed(derive_seed(seed, 2, 0));
        let params = AttackParams { budget, ..AttackParams::default() };
        let outcome = attacks::poison(
            AttackKind::Trap, &d, &plan, y_t, &params, &cfg, &tcfg, derive_seed(seed, 3, 0),
        )
        .unwrap();
        let surrogate = outcome.surrogate.as_ref().unwrap();

        // Does the trigger fool the surrogate itself?
        let mut hits = 0;
        for g in outcome.train_graphs.iter().chain(outcome.test_graphs.iter()) {
            if gnn::predict(surrogate, g).unwrap() == y_t {
                hits += 1;
            }
        }
        surrogate_self_asr +=
            hits as f64 / (outcome.train_graphs.len() + outcome.test_graphs.len()) as f64;

        // Victim trained from scratch on the poisoned mix.
        let mut train_set = d.subset(&plan.train_ids);
        train_set.extend(outcome.train_graphs.iter().cloned());
        let vtcfg = TrainConfig::default().with_seed(derive_seed(seed, 4, 0));
        let victim = gnn::train(&train_set, &cfg, &vtcfg).unwrap();

        let mut fit = 0;
        for g in &outcome.train_graphs {
            if gnn::predict(&victim, g).unwrap() == y_t {
                fit += 1;
            }
        }
        victim_fit += fit as f64 / outcome.train_graphs.len() as f64;

        let mut hits = 0;
        for g in &outcome.test_graphs {
            if gnn::predict(&victim, g).unwrap() == y_t {
                hits += 1;
            }
        }
        victim_asr += hits as f64 / outcome.test_graphs.len() as f64;
        clean_acc += gnn::accuracy(&victim, &d.subset(&plan.test_ids)).unwrap();

        if seed == 1 {
            let adds: usize = outcome
                .plan
                .entries
                .iter()
                .map(|e| {
                    e.flips
                        .iter()
                        .filter(|&&(u, v)| d.graph(e.graph_id).adjacency().get(u, v) == 0.0)
                        .count()
                })
                .sum();
            let total: usize = outcome.plan.entries.iter().map(|e| e.flips.len()).count() * budget;
            println!("  [{name}] additions {adds}/{total} of flips");
        }
    }
    let n = seeds.len() as f64;
    println!(
        "[{name}] y_t={y_t} budget={budget}: surrogate_self_asr {:.3} victim_fit {:.3} victim_asr {:.3} clean_acc {:.3}",
        surrogate_self_asr / n,
        victim_fit / n,
        victim_asr / n,
        clean_acc / n
    );
}

fn main() {
    let sparse_first = [
        ClassSpec { nodes: 12, edge_prob: 0.2, count: 60 },
        ClassSpec { nodes: 12, edge_prob: 0.6, count: 60 },
    ];
    let dense_first = [
        ClassSpec { nodes: 12, edge_prob: 0.6, count: 60 },
        ClassSpec { nodes: 12, edge_prob: 0.2, count: 60 },
    ];
    for budget in [5] {
        run("sparse-target", &sparse_first, 2024, budget);
        run("dense-target", &dense_first, 2024, budget);
        run("sparse-target-s7", &sparse_first, 7, budget);
        run("dense-target-s7", &dense_first, 7, budget);
    }
}
