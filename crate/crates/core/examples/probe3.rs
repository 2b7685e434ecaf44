// Trend robustness across dataset seeds for the dense-target layout.

use graphtrap_core::attacks::AttackKind;
use graphtrap_core::defense::DefenseConfig;
use graphtrap_core::gnn::Arch;
use graphtrap_core::graphdata::{synth_dataset, ClassSpec};
use graphtrap_core::harness::Lab;

fn main() {
    let seeds: Vec<u64> = (1..=5).collect();
    let alt_seeds: Vec<u64> = (6..=10).collect();
    for data_seed in [7u64, 11, 42, 97, 2024] {
        let d = synth_dataset(
            &[
                ClassSpec { nodes: 12, edge_prob: 0.6, count: 60 },
                ClassSpec { nodes: 12, edge_prob: 0.2, count: 60 },
            ],
            4,
            data_seed,
        )
        .unwrap();
        let lab = Lab { dataset_name: "syn".into(), jobs: 10, ..Lab::default() };

        let trap = lab.run_effectiveness(&d, AttackKind::Trap, &seeds).unwrap();
        let rand = lab.run_effectiveness(&d, AttackKind::Random, &seeds).unwrap();
        let trap2 = lab.run_effectiveness(&d, AttackKind::Trap, &alt_seeds).unwrap();
        let ta = trap.mean_for("gcn", None).unwrap();
        let ra = rand.mean_for("gcn", None).unwrap();
        let ta2 = trap2.mean_for("gcn", None).unwrap();
        println!(
            "data_seed {data_seed}: clean {:.3} | trap asr {:.3} (alt {:.3}) rand asr {:.3} gap {:.3} | trap cad {:+.3}",
            ta.mean_clean_acc,
            ta.mean_asr,
            ta2.mean_asr,
            ra.mean_asr,
            ta.mean_asr - ra.mean_asr,
            ta.mean_cad,
        );

        let victims = [Arch::Gin, Arch::Gsage];
        let ttx = lab.run_transfer(&d, AttackKind::Trap, &victims, true, &seeds).unwrap();
        let rtx = lab.run_transfer(&d, AttackKind::Random, &victims, true, &seeds).unwrap();
        println!(
            "  transfer: gin {:.3} vs {:.3} | gsage {:.3} vs {:.3}",
            ttx.mean_for("gin", None).unwrap().mean_asr,
            rtx.mean_for("gin", None).unwrap().mean_asr,
            ttx.mean_for("gsage", None).unwrap().mean_asr,
            rtx.mean_for("gsage", None).unwrap().mean_asr,
        );

        let rates = lab.run_rate_sweep(&d, &[0.01, 0.07], &seeds).unwrap();
        let budgets = lab.run_budget_sweep(&d, &[1, 5], &seeds).unwrap();
        println!(
            "  rate 1% {:.3} -> 7% {:.3} | budget 1 {:.3} -> 5 {:.3}",
            rates.mean_for("gcn", Some("0.01")).unwrap().mean_asr,
            rates.mean_for("gcn", Some("0.07")).unwrap().mean_asr,
            budgets.mean_for("gcn", Some("1")).unwrap().mean_asr,
            budgets.mean_for("gcn", Some("5")).unwrap().mean_asr,
        );

        let defense = lab.run_defense(&d, AttackKind::Trap, &DefenseConfig::default(), &seeds).unwrap();
        let plain = defense.mean_for("gcn", Some("undefended")).unwrap();
        let defended = defense.mean_for("gcn", Some("defended")).unwrap();
        println!(
            "  defense: clean {:.3} -> {:.3} | asr {:.3} -> {:.3} (ratio {:.2})",
            plain.mean_clean_acc,
            defended.mean_clean_acc,
            plain.mean_asr,
            defended.mean_asr,
            defended.mean_asr / plain.mean_asr.max(1e-9),
        );
    }
}
