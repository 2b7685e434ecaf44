// Defense-variant comparison: fresh-per-epoch views vs one fixed view
// per run, at drop ratios 0.1 and 0.9.

use graphtrap_core::attacks::{self, AttackKind, AttackParams};
use graphtrap_core::defense::{accuracy_voted, subsample_view, DefenseConfig};
use graphtrap_core::gnn::{self, Arch, ModelConfig, TrainConfig};
use graphtrap_core::graphdata::{split, synth_dataset, target_class, ClassSpec, Graph};
use graphtrap_core::harness::asr_voted;
use graphtrap_core::seedmix::derive_seed;

fn main() {
    for data_seed in [42u64, 2024] {
        let d = synth_dataset(
            &[
                ClassSpec { nodes: 12, edge_prob: 0.6, count: 60 },
                ClassSpec { nodes: 12, edge_prob: 0.2, count: 60 },
            ],
            4,
            data_seed,
        )
        .unwrap();
        let y_t = target_class(&d);
        for (label, ratio, fresh) in [
            ("fresh drop=0.1", 0.10, true),
            ("fixed drop=0.1", 0.10, false),
            ("fresh drop=0.9", 0.90, true),
            ("fixed drop=0.9", 0.90, false),
        ] {
            let mut d_clean = 0.0;
            let mut u_clean = 0.0;
            let mut d_asr = 0.0;
            let mut u_asr = 0.0;
            let seeds = [1u64, 2, 3, 4, 5];
            for &seed in &seeds {
                let plan = split(&d, y_t, derive_seed(seed, 1, 0)).unwrap();
                let cfg = ModelConfig::new(Arch::Gcn, 4, 2);
                let stcfg = TrainConfig::default().with_seed(derive_seed(seed, 2, 0));
                let outcome = attacks::poison(
                    AttackKind::Trap, &d, &plan, y_t, &AttackParams::default(), &cfg, &stcfg,
                    derive_seed(seed, 3, 0),
                )
                .unwrap();
                let mut poisoned_train = d.subset(&plan.train_ids);
                poisoned_train.extend(outcome.train_graphs.iter().cloned());
                let clean_train = d.subset(&plan.train_ids);
                let test = d.subset(&plan.test_ids);
                let tcfg = TrainConfig::default().with_seed(derive_seed(seed, 4, 0));
                let dcfg = DefenseConfig {
                    subsample_ratio: ratio,
                    num_views: 10,
                    seed: derive_seed(seed, 5, 0),
                };

                let view = |epoch: usize, idx: usize, g: &Graph| {
                    let epoch_key = if fresh { epoch as u64 } else { u64::MAX };
                    subsample_view(g, ratio, derive_seed(derive_seed(dcfg.seed, epoch_key, 0), 0, idx as u64))
                };
                let clean_def = gnn::train_with_views(&clean_train, &cfg, &tcfg, Some(&view)).unwrap();
                let bd_def = gnn::train_with_views(&poisoned_train, &cfg, &tcfg, Some(&view)).unwrap();
                let clean_plain = gnn::train(&clean_train, &cfg, &tcfg).unwrap();
                let bd_plain = gnn::train(&poisoned_train, &cfg, &tcfg).unwrap();

                d_clean += accuracy_voted(&clean_def, &test, &dcfg).unwrap();
                u_clean += gnn::accuracy(&clean_plain, &test).unwrap();
                d_asr += asr_voted(&bd_def, &outcome.test_graphs, y_t, &dcfg).unwrap();
                u_asr += graphtrap_core::harness::asr(&bd_plain, &outcome.test_graphs, y_t).unwrap();
            }
            let n = seeds.len() as f64;
            println!(
                "data {data_seed} [{label}] clean {:.3} -> {:.3} (delta {:+.3}) | asr {:.3} -> {:.3} (ratio {:.2})",
                u_clean / n,
                d_clean / n,
                (d_clean - u_clean) / n,
                u_asr / n,
                d_asr / n,
                (d_asr / n) / (u_asr / n).max(1e-9),
            );
        }
    }
}
